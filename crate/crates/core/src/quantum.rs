//! The exchange-coupled spin pair with randomly switching local fields, its
//! observables, and a direct Hilbert-space evolution oracle.
//!
//! Two spin-1/2 particles couple through an isotropic exchange term while
//! each sees its own field of random sign along `z`. Built from the Pauli
//! operators `sigma = 2 I`, the four Hamiltonians are
//!
//! ```text
//! H_{s1 s2} = - sigma_1 . sigma_2 + s1 sigma_1z + s2 sigma_2z,   s = +/-1
//! ```
//!
//! differing only in the signs of the Zeeman terms. With this scaling the
//! field strength equals half the singlet-triplet splitting, and the
//! static-field correlation of the x-polarized pair oscillates between 1 and
//! 1/2. The pair starts in the pure product state polarized along `x`.
//!
//! Observables are the normalized spin-spin correlation `4 <I_1 . I_2>`
//! (equal to 1 for the initial state, 0 for the maximally mixed state) and
//! the Von Neumann entropy. The Markov switching of the field signs acts as
//! an implicit environment: no collapse operators appear, yet the ensemble
//! decoheres.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;

use crate::dyson::InitialCondition;
use crate::error::{Error, Result};
use crate::generators::GeneratorSet;
use crate::montecarlo::Trajectory;
use crate::scalar::{cnorm, cplx, real, Real};

/// Spin-1/2 operators (`hbar = 1`), eigenvalues +/- 1/2.
#[derive(Debug, Clone)]
pub struct SpinOperators<T: Real> {
    pub ix: DMatrix<Complex<T>>,
    pub iy: DMatrix<Complex<T>>,
    pub iz: DMatrix<Complex<T>>,
}

impl<T: Real> SpinOperators<T> {
    pub fn new() -> Self {
        let h = real::<T>(0.5);
        let zero = Complex::new(T::zero(), T::zero());
        let ix = DMatrix::from_row_slice(
            2,
            2,
            &[zero, Complex::new(h, T::zero()), Complex::new(h, T::zero()), zero],
        );
        let iy = DMatrix::from_row_slice(
            2,
            2,
            &[zero, Complex::new(T::zero(), -h), Complex::new(T::zero(), h), zero],
        );
        let iz = DMatrix::from_row_slice(
            2,
            2,
            &[Complex::new(h, T::zero()), zero, zero, Complex::new(-h, T::zero())],
        );
        Self { ix, iy, iz }
    }
}

impl<T: Real> Default for SpinOperators<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// A validated density matrix: Hermitian, unit trace, nonnegative spectrum
/// (up to precision-scaled guards).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T: Real> {
    entries: DMatrix<Complex<T>>,
}

impl<T: Real> DensityMatrix<T> {
    pub fn new(entries: DMatrix<Complex<T>>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::NotSquare {
                rows: entries.nrows(),
                cols: entries.ncols(),
            });
        }
        let herm = hermiticity_deviation(&entries);
        if herm > T::hermiticity_tol() {
            return Err(Error::NotHermitian {
                max_dev: herm.to_f64().unwrap_or(f64::NAN),
            });
        }
        let tr = trace_deviation(&entries);
        if tr > T::hermiticity_tol() {
            return Err(Error::InvalidParameter(format!(
                "density matrix trace deviates from 1 by {}",
                tr.to_f64().unwrap_or(f64::NAN)
            )));
        }
        let guard = eigenvalue_guard::<T>();
        let eigs = SymmetricEigen::new(hermitize(&entries)).eigenvalues;
        if let Some(bad) = eigs.iter().find(|&&l| l < -guard) {
            return Err(Error::NonPhysicalState {
                eigenvalue: bad.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { entries })
    }

    /// Rank-1 projector `|psi><psi|` from a normalized state vector.
    pub fn from_pure(psi: &DVector<Complex<T>>) -> Self {
        let d = psi.len();
        let entries = DMatrix::from_fn(d, d, |r, c| psi[r] * psi[c].conj());
        Self { entries }
    }

    /// Wrap a matrix without validation; for evolution outputs whose
    /// physicality is established by construction or checked downstream.
    pub fn from_matrix_unchecked(entries: DMatrix<Complex<T>>) -> Self {
        Self { entries }
    }

    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }
}

fn eigenvalue_guard<T: Real>() -> T {
    real::<T>(1e-9).max(T::default_epsilon() * real::<T>(100.0))
}

fn physicality_guard<T: Real>() -> T {
    real::<T>(1e-6).max(T::default_epsilon() * real::<T>(1000.0))
}

/// Max modulus of `M - M^dagger` over entries.
pub fn hermiticity_deviation<T: Real>(m: &DMatrix<Complex<T>>) -> T {
    let mut worst = T::zero();
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let dev = cnorm(m[(r, c)] - m[(c, r)].conj());
            if dev > worst {
                worst = dev;
            }
        }
    }
    worst
}

/// `|Tr(M) - 1|`.
pub fn trace_deviation<T: Real>(m: &DMatrix<Complex<T>>) -> T {
    let mut tr = Complex::new(T::zero(), T::zero());
    for k in 0..m.nrows() {
        tr += m[(k, k)];
    }
    cnorm(tr - Complex::new(T::one(), T::zero()))
}

fn hermitize<T: Real>(m: &DMatrix<Complex<T>>) -> DMatrix<Complex<T>> {
    let half = cplx::<T>(0.5, 0.0);
    (m + m.adjoint()) * half
}

/// The spin-pair model: four Hamiltonians, their Liouville-space generator
/// set, and the x-polarized initial state.
#[derive(Debug, Clone)]
pub struct SpinPairSystem<T: Real> {
    hamiltonians: Vec<DMatrix<Complex<T>>>,
    generators: GeneratorSet<T>,
    rho0: DensityMatrix<T>,
}

impl<T: Real> SpinPairSystem<T> {
    pub fn hamiltonians(&self) -> &[DMatrix<Complex<T>>] {
        &self.hamiltonians
    }

    pub fn hamiltonian(&self, state: usize) -> &DMatrix<Complex<T>> {
        &self.hamiltonians[state]
    }

    /// The four 16x16 Liouville-space generators, ordered like the
    /// Hamiltonians: `(+,+), (+,-), (-,+), (-,-)`.
    pub fn generator_set(&self) -> &GeneratorSet<T> {
        &self.generators
    }

    pub fn rho0(&self) -> &DensityMatrix<T> {
        &self.rho0
    }

    pub fn n_states(&self) -> usize {
        self.hamiltonians.len()
    }

    /// Uniform initial distribution over the four field configurations with
    /// the flattened initial density matrix as payload.
    pub fn initial_condition(&self) -> InitialCondition<T> {
        InitialCondition::uniform(self.n_states(), vec_density(self.rho0.matrix()))
            .expect("uniform weights are valid")
    }
}

/// Build the spin-pair system: Hamiltonians `-s1.s2 +/- s1z +/- s2z` over
/// Pauli operators, initial state `|psi0> = (|uu> + |ud> + |du> + |dd>)/2`.
pub fn build_spin_pair<T: Real>() -> SpinPairSystem<T> {
    let ops = SpinOperators::<T>::new();
    let two = cplx::<T>(2.0, 0.0);
    let sx = &ops.ix * two;
    let sy = &ops.iy * two;
    let sz = &ops.iz * two;
    let eye = DMatrix::<Complex<T>>::identity(2, 2);

    let exchange = sx.kronecker(&sx) + sy.kronecker(&sy) + sz.kronecker(&sz);
    let zeeman1 = sz.kronecker(&eye);
    let zeeman2 = eye.kronecker(&sz);

    let signs = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)];
    let hamiltonians: Vec<_> = signs
        .iter()
        .map(|&(s1, s2)| {
            -&exchange + &zeeman1 * cplx::<T>(s1, 0.0) + &zeeman2 * cplx::<T>(s2, 0.0)
        })
        .collect();

    let generators = GeneratorSet::liouvillian(&hamiltonians)
        .expect("spin-pair Hamiltonians are Hermitian by construction");

    let amp = cplx::<T>(0.5, 0.0);
    let psi0 = DVector::from_element(4, amp);
    let rho0 = DensityMatrix::from_pure(&psi0);

    SpinPairSystem {
        hamiltonians,
        generators,
        rho0,
    }
}

/// The pair correlation operator `I_1 . I_2` on the 4-dimensional product
/// space.
fn correlation_operator<T: Real>() -> DMatrix<Complex<T>> {
    let ops = SpinOperators::<T>::new();
    ops.ix.kronecker(&ops.ix) + ops.iy.kronecker(&ops.iy) + ops.iz.kronecker(&ops.iz)
}

/// Normalized spin-spin correlation `4 Tr(rho I_1 . I_2)`.
///
/// The factor 4 sets the aligned x-polarized product state to 1 (the raw
/// trace is 1/4 there); the maximally mixed state gives 0.
pub fn correlation<T: Real>(rho: &DensityMatrix<T>) -> T {
    correlation_of(rho.matrix())
}

/// [`correlation`] on a raw matrix, for evolved series that have not been
/// re-validated.
pub fn correlation_of<T: Real>(rho: &DMatrix<Complex<T>>) -> T {
    let op = correlation_operator::<T>();
    let prod = rho * op;
    let mut tr = Complex::new(T::zero(), T::zero());
    for k in 0..prod.nrows() {
        tr += prod[(k, k)];
    }
    real::<T>(4.0) * tr.re
}

/// Von Neumann entropy `S = -sum l ln l` (nats) over the spectrum of the
/// Hermitized matrix, eigenvalues clamped to `[0, 1]` with `0 ln 0 = 0`.
///
/// Fails with [`Error::NonPhysicalState`] if an eigenvalue sits below the
/// physicality guard before clamping.
pub fn von_neumann_entropy<T: Real>(rho: &DensityMatrix<T>) -> Result<T> {
    von_neumann_entropy_of(rho.matrix())
}

/// [`von_neumann_entropy`] on a raw matrix.
pub fn von_neumann_entropy_of<T: Real>(rho: &DMatrix<Complex<T>>) -> Result<T> {
    let eigs = SymmetricEigen::new(hermitize(rho)).eigenvalues;
    let guard = physicality_guard::<T>();
    let mut s = T::zero();
    for &l in eigs.iter() {
        if l < -guard {
            return Err(Error::NonPhysicalState {
                eigenvalue: l.to_f64().unwrap_or(f64::NAN),
            });
        }
        let l = l.max(T::zero()).min(T::one());
        if l > T::zero() {
            s -= l * l.ln();
        }
    }
    Ok(s)
}

/// Row-major flattening of a density matrix into a Liouville-space vector.
pub fn vec_density<T: Real>(rho: &DMatrix<Complex<T>>) -> DVector<Complex<T>> {
    let d = rho.nrows();
    DVector::from_fn(d * d, |k, _| rho[(k / d, k % d)])
}

/// Inverse of [`vec_density`]; fails if the length is not a perfect square.
pub fn unvec_density<T: Real>(v: &DVector<Complex<T>>) -> Result<DMatrix<Complex<T>>> {
    let len = v.len();
    let d = (len as f64).sqrt().round() as usize;
    if d * d != len {
        return Err(Error::LengthMismatch {
            expected: d * d,
            got: len,
        });
    }
    Ok(DMatrix::from_fn(d, d, |r, c| v[r * d + c]))
}

/// Exact unitary propagator `e^{-i H delta}` via Hermitian
/// eigendecomposition.
fn unitary_step<T: Real>(h: &DMatrix<Complex<T>>, delta: T) -> DMatrix<Complex<T>> {
    let se = SymmetricEigen::new(hermitize(h));
    let d = h.nrows();
    let phases = DMatrix::from_fn(d, d, |r, c| {
        if r == c {
            let angle = -se.eigenvalues[r] * delta;
            Complex::new(angle.cos(), angle.sin())
        } else {
            Complex::new(T::zero(), T::zero())
        }
    });
    &se.eigenvectors * phases * se.eigenvectors.adjoint()
}

/// Direct Hilbert-space evolution along a trajectory:
/// `rho_{k+1} = U rho_k U^dagger` with `U = e^{-i H(s_k) delta}`, exact per
/// segment. This is the oracle route kept independent of the Liouville-space
/// solvers.
pub fn hilbert_oracle_evolve<T: Real>(
    traj: &Trajectory,
    system: &SpinPairSystem<T>,
    delta: T,
) -> Result<Vec<DensityMatrix<T>>> {
    if let Some(&bad) = traj.states().iter().find(|&&s| s >= system.n_states()) {
        return Err(Error::DimensionMismatch(format!(
            "trajectory state {bad} out of range for {} Hamiltonians",
            system.n_states()
        )));
    }
    let unitaries: Vec<_> = system
        .hamiltonians
        .iter()
        .map(|h| unitary_step(h, delta))
        .collect();
    let mut out = Vec::with_capacity(traj.states().len());
    let mut rho = system.rho0.matrix().clone();
    out.push(DensityMatrix::from_matrix_unchecked(rho.clone()));
    for k in 0..traj.n_steps() {
        let u = &unitaries[traj.states()[k]];
        rho = u * rho * u.adjoint();
        out.push(DensityMatrix::from_matrix_unchecked(rho.clone()));
    }
    Ok(out)
}

/// The recurrence time of the correlation observable in the static (no
/// jump) ensemble, computed from the eigenvalue gaps of the Hamiltonians
/// weighted by their coupling to the initial state and the observable.
///
/// Gaps whose coherence weight vanishes do not oscillate the observable and
/// are ignored; the returned time is the smallest common period of the
/// remaining gaps (searched over integer multiples of the fastest one).
pub fn recurrence_time<T: Real>(system: &SpinPairSystem<T>) -> T {
    let op = correlation_operator::<T>();
    let weight_tol = real::<T>(1e-8);
    let mut gaps: Vec<T> = Vec::new();
    for h in &system.hamiltonians {
        let se = SymmetricEigen::new(hermitize(h));
        let v = &se.eigenvectors;
        let rho_eig = v.adjoint() * system.rho0.matrix() * v;
        let op_eig = v.adjoint() * &op * v;
        let d = h.nrows();
        for a in 0..d {
            for b in 0..d {
                let gap = (se.eigenvalues[a] - se.eigenvalues[b]).abs();
                if gap <= weight_tol {
                    continue;
                }
                let w = cnorm(rho_eig[(a, b)]) * cnorm(op_eig[(b, a)]);
                if w > weight_tol {
                    gaps.push(gap);
                }
            }
        }
    }
    let g_max = gaps
        .iter()
        .cloned()
        .fold(T::zero(), |m, g| if g > m { g } else { m });
    if g_max <= T::zero() {
        return T::zero();
    }
    let two_pi = real::<T>(2.0) * T::pi();
    for k in 1..=256u32 {
        let period = two_pi * T::from_u32(k).unwrap() / g_max;
        let all_fit = gaps.iter().all(|&g| {
            let cycles = g * period / two_pi;
            (cycles - cycles.round()).abs() < real::<T>(1e-6)
        });
        if all_fit {
            return period;
        }
    }
    two_pi / g_max
}
