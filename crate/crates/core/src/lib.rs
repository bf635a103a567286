//! Ensemble-averaged time evolution for systems whose generator switches
//! randomly among a finite set of states.
//!
//! A system precessing at a state-dependent scalar frequency, a classical
//! vector rotating about a state-dependent axis, or a density matrix evolving
//! under a state-dependent Hamiltonian all share the same structure: the
//! observable is a path average of exponentials of a piecewise-constant
//! generator, weighted by the probability of each realization. When the
//! switching is a Markov chain with transition matrix `P`, that path integral
//! collapses to a cheap transfer-matrix recursion on the Green's function of
//! the problem, stepped once per time slice. This crate implements:
//!
//! - the iterative transfer-matrix solvers (rectangle and trapezoid variants)
//!   in [`dyson::evolve_markov`];
//! - a general dense block-triangular solver for arbitrary causal free
//!   propagators in [`dyson::solve_dense`];
//! - a trajectory-sampling Monte Carlo reference in [`montecarlo`];
//! - the coupled spin-pair model (correlation and Von Neumann entropy
//!   observables) in [`quantum`];
//! - accuracy/runtime benchmarking against pooled Monte Carlo references in
//!   [`bench`].
//!
//! All numerics are generic over the real scalar type via the [`Real`] trait;
//! `f64` aliases for the main types are exported at the crate root.

pub mod bench;
pub mod dyson;
pub mod error;
pub mod generators;
pub mod markov;
pub mod montecarlo;
pub mod output;
pub mod quantum;
pub mod scalar;

pub use error::{Error, Result};
pub use generators::{GeneratorKind, GeneratorSet, Scheme, StepPropagatorSet};
pub use markov::{FreePropagator, TransitionMatrix};
pub use scalar::Real;

pub use dyson::{
    contract_observable, evolve_markov, evolve_markov_blocks, solve_dense, FreeBlockSeries,
    GreenBlockSeries, InitialCondition, SignalSeries,
};
pub use montecarlo::{
    ensemble_average, propagate_trajectory, sample_initial, sample_trajectory, EnsembleStats,
    Trajectory,
};
pub use quantum::{
    build_spin_pair, correlation, hilbert_oracle_evolve, unvec_density, vec_density,
    von_neumann_entropy, DensityMatrix, SpinOperators, SpinPairSystem,
};

/// `f64` instantiations of the main types.
pub type TransitionMatrix64 = TransitionMatrix<f64>;
pub type GeneratorSet64 = GeneratorSet<f64>;
pub type StepPropagatorSet64 = StepPropagatorSet<f64>;
pub type InitialCondition64 = InitialCondition<f64>;
pub type SignalSeries64 = SignalSeries<f64>;
pub type GreenBlockSeries64 = GreenBlockSeries<f64>;
pub type EnsembleStats64 = EnsembleStats<f64>;
pub type SpinPairSystem64 = SpinPairSystem<f64>;

/// `f32` instantiations, for memory-bound experiments.
pub type TransitionMatrix32 = TransitionMatrix<f32>;
pub type GeneratorSet32 = GeneratorSet<f32>;
pub type StepPropagatorSet32 = StepPropagatorSet<f32>;
pub type InitialCondition32 = InitialCondition<f32>;
pub type SignalSeries32 = SignalSeries<f32>;
