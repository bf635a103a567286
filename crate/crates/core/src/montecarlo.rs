//! Monte Carlo reference: the path average evaluated by sampling Markov
//! trajectories and propagating the payload along each one.
//!
//! This is the independent validation route for the transfer-matrix solvers.
//! Each trajectory draws its transitions from its own counter-based RNG
//! stream keyed by `(base_seed, trajectory index)`, so results are
//! bit-reproducible regardless of execution order, including under the
//! chunked parallel reduction used here.

use nalgebra::DVector;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dyson::{observable_components, InitialCondition, SignalSeries};
use crate::error::{Error, Result};
use crate::generators::StepPropagatorSet;
use crate::markov::TransitionMatrix;
use crate::scalar::Real;

/// Trajectories per deterministic reduction chunk. Fixed so that the
/// accumulation tree does not depend on thread count.
const CHUNK: usize = 64;

/// A sampled state sequence `s_0, ..., s_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    states: Vec<usize>,
    seed_id: u64,
}

impl Trajectory {
    pub fn new(states: Vec<usize>, seed_id: u64) -> Self {
        Self { states, seed_id }
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn seed_id(&self) -> u64 {
        self.seed_id
    }

    pub fn n_steps(&self) -> usize {
        self.states.len().saturating_sub(1)
    }
}

/// The RNG stream for one trajectory: ChaCha8 keyed by the base seed, with
/// the stream (nonce) set to the trajectory index.
pub fn trajectory_rng(base_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(index);
    rng
}

/// Inverse-CDF draw from a discrete distribution: picks the first index `j`
/// with `sum_{m<j} w_m <= r < sum_{m<=j} w_m`, the final bin closed at 1.
pub fn sample_initial<T: Real, R: Rng>(weights: &[T], rng: &mut R) -> usize {
    let r: f64 = rng.random();
    let mut cum = 0.0_f64;
    for (j, w) in weights.iter().enumerate() {
        cum += w.to_f64().unwrap_or(0.0);
        if r < cum {
            return j;
        }
    }
    weights.len() - 1
}

/// Sample a trajectory of `n_steps` transitions starting from `s0`.
///
/// Each step draws `r in [0, 1)` and selects the transition by the
/// cumulative-sum rule, scanning the row left to right with the final bin
/// closed at 1 (stochastic rows guarantee a bin).
pub fn sample_trajectory<T: Real, R: Rng>(
    p: &TransitionMatrix<T>,
    n_steps: usize,
    s0: usize,
    rng: &mut R,
) -> Trajectory {
    let n = p.n_states();
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut s = s0;
    states.push(s);
    for _ in 0..n_steps {
        let r: f64 = rng.random();
        let mut cum = 0.0_f64;
        let mut next = n - 1;
        for j in 0..n {
            cum += p.get(s, j).to_f64().unwrap_or(0.0);
            if r < cum {
                next = j;
                break;
            }
        }
        s = next;
        states.push(s);
    }
    Trajectory::new(states, 0)
}

/// Propagate the payload along a trajectory: `x_{k+1} = F(s_k) x_k`, where
/// `F` is the one-step factor of the chosen scheme (`e^{delta A}` under
/// `exact`; the Dyson resolvent factors under `rectangle`/`trapezoid`, so
/// that the ensemble mean converges to the matching solver output).
///
/// Returns the full sequence `x_0, ..., x_n`.
pub fn propagate_trajectory<T: Real>(
    traj: &Trajectory,
    props: &StepPropagatorSet<T>,
    payload: &DVector<Complex<T>>,
) -> Result<Vec<DVector<Complex<T>>>> {
    if payload.len() != props.dim() {
        return Err(Error::DimensionMismatch(format!(
            "payload dimension {} does not match factor dimension {}",
            payload.len(),
            props.dim()
        )));
    }
    if let Some(&bad) = traj.states().iter().find(|&&s| s >= props.n_states()) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            len: props.n_states(),
        });
    }
    let factors: Vec<_> = (0..props.n_states())
        .map(|s| props.one_step_factor(s))
        .collect();
    let one = Complex::new(T::one(), T::zero());
    let zero = Complex::new(T::zero(), T::zero());
    let mut xs = Vec::with_capacity(traj.states().len());
    let mut x = payload.clone();
    let mut buf = DVector::<Complex<T>>::zeros(payload.len());
    xs.push(x.clone());
    for k in 0..traj.n_steps() {
        buf.gemv(one, &factors[traj.states()[k]], &x, zero);
        std::mem::swap(&mut x, &mut buf);
        xs.push(x.clone());
    }
    Ok(xs)
}

/// Mean and per-time standard deviation of trajectory observables.
///
/// `sigma` is the population standard deviation of the per-trajectory
/// observable components (not a standard error), per time point and
/// component. For scalar problems the observable is the real part of the
/// accumulated phase.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats<T: Real> {
    mean: SignalSeries<T>,
    sigma: Vec<Vec<T>>,
    n_traj: usize,
}

impl<T: Real> EnsembleStats<T> {
    pub fn mean(&self) -> &SignalSeries<T> {
        &self.mean
    }

    /// `sigma[j][c]`: standard deviation at time index `j`, component `c`.
    pub fn sigma(&self) -> &[Vec<T>] {
        &self.sigma
    }

    pub fn n_traj(&self) -> usize {
        self.n_traj
    }

    pub fn from_parts(mean: SignalSeries<T>, sigma: Vec<Vec<T>>, n_traj: usize) -> Self {
        Self {
            mean,
            sigma,
            n_traj,
        }
    }
}

/// Kahan-compensated accumulator.
#[derive(Clone, Copy)]
struct Kahan<T> {
    sum: T,
    carry: T,
}

impl<T: Real> Kahan<T> {
    fn zero() -> Self {
        Self {
            sum: T::zero(),
            carry: T::zero(),
        }
    }

    #[inline]
    fn add(&mut self, value: T) {
        let y = value - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

struct ChunkAccum<T: Real> {
    // Complex sums of the raw values, plus component sums of squares.
    sum_re: Vec<Vec<Kahan<T>>>,
    sum_im: Vec<Vec<Kahan<T>>>,
    comp_sum: Vec<Vec<Kahan<T>>>,
    comp_sumsq: Vec<Vec<Kahan<T>>>,
}

impl<T: Real> ChunkAccum<T> {
    fn new(n_times: usize, dim: usize, n_comps: usize) -> Self {
        Self {
            sum_re: vec![vec![Kahan::zero(); dim]; n_times],
            sum_im: vec![vec![Kahan::zero(); dim]; n_times],
            comp_sum: vec![vec![Kahan::zero(); n_comps]; n_times],
            comp_sumsq: vec![vec![Kahan::zero(); n_comps]; n_times],
        }
    }

    fn merge(&mut self, other: &ChunkAccum<T>) {
        let fold = |into: &mut Vec<Vec<Kahan<T>>>, from: &Vec<Vec<Kahan<T>>>| {
            for (a, b) in into.iter_mut().zip(from) {
                for (x, y) in a.iter_mut().zip(b) {
                    x.add(y.sum);
                    x.add(y.carry);
                }
            }
        };
        fold(&mut self.sum_re, &other.sum_re);
        fold(&mut self.sum_im, &other.sum_im);
        fold(&mut self.comp_sum, &other.comp_sum);
        fold(&mut self.comp_sumsq, &other.comp_sumsq);
    }
}

/// Sample `n_traj` trajectories and reduce them to ensemble statistics.
///
/// Trajectory `i` draws its initial state and all transitions from the
/// stream `(base_seed, i)`; identical inputs give bit-identical output, and
/// the fixed chunk layout makes the result independent of how chunks are
/// scheduled across threads.
pub fn ensemble_average<T: Real>(
    p: &TransitionMatrix<T>,
    props: &StepPropagatorSet<T>,
    init: &InitialCondition<T>,
    n_steps: usize,
    n_traj: usize,
    base_seed: u64,
) -> Result<EnsembleStats<T>> {
    if n_traj < 2 {
        return Err(Error::InvalidParameter(
            "ensemble statistics need n_traj >= 2".into(),
        ));
    }
    if n_steps == 0 {
        return Err(Error::InvalidParameter("n_steps must be >= 1".into()));
    }
    if props.n_states() != p.n_states() || init.n_states() != p.n_states() {
        return Err(Error::DimensionMismatch(
            "transition matrix, propagators and initial condition disagree on N".into(),
        ));
    }
    if init.dim() != props.dim() {
        return Err(Error::DimensionMismatch(
            "payload dimension does not match generator dimension".into(),
        ));
    }

    let kind = props.kind();
    let dim = props.dim();
    let n_times = n_steps + 1;
    let n_comps = crate::dyson::n_observable_components(kind, dim);
    let factors: Vec<_> = (0..props.n_states())
        .map(|s| props.one_step_factor(s))
        .collect();
    let one = Complex::new(T::one(), T::zero());
    let zero = Complex::new(T::zero(), T::zero());

    let n_chunks = n_traj.div_ceil(CHUNK);
    let chunk_results: Vec<ChunkAccum<T>> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut acc = ChunkAccum::new(n_times, dim, n_comps);
            let lo = chunk * CHUNK;
            let hi = ((chunk + 1) * CHUNK).min(n_traj);
            let mut x = DVector::<Complex<T>>::zeros(dim);
            let mut buf = DVector::<Complex<T>>::zeros(dim);
            for i in lo..hi {
                let mut rng = trajectory_rng(base_seed, i as u64);
                let mut s = sample_initial(init.weights(), &mut rng);
                x.copy_from(init.payload());
                record(&mut acc, 0, kind, &x);
                for k in 0..n_steps {
                    buf.gemv(one, &factors[s], &x, zero);
                    std::mem::swap(&mut x, &mut buf);
                    record(&mut acc, k + 1, kind, &x);
                    // Draw the next state after propagating through the
                    // current one: the factor at step k belongs to s_k.
                    let r: f64 = rng.random();
                    let mut cum = 0.0_f64;
                    let mut next = p.n_states() - 1;
                    for j in 0..p.n_states() {
                        cum += p.get(s, j).to_f64().unwrap_or(0.0);
                        if r < cum {
                            next = j;
                            break;
                        }
                    }
                    s = next;
                }
            }
            acc
        })
        .collect();

    let mut total = ChunkAccum::new(n_times, dim, n_comps);
    for acc in &chunk_results {
        total.merge(acc);
    }

    let inv_n = T::one() / T::from_usize(n_traj).unwrap();
    let mut mean_values = Vec::with_capacity(n_times);
    let mut sigma = Vec::with_capacity(n_times);
    for j in 0..n_times {
        let v = DVector::from_fn(dim, |k, _| {
            Complex::new(
                total.sum_re[j][k].sum * inv_n,
                total.sum_im[j][k].sum * inv_n,
            )
        });
        mean_values.push(v);
        let mut sig_row = Vec::with_capacity(n_comps);
        for c in 0..n_comps {
            let m = total.comp_sum[j][c].sum * inv_n;
            let var = total.comp_sumsq[j][c].sum * inv_n - m * m;
            sig_row.push(if var > T::zero() { var.sqrt() } else { T::zero() });
        }
        sigma.push(sig_row);
    }

    let mean = SignalSeries::new(kind, props.delta(), mean_values);
    Ok(EnsembleStats::from_parts(mean, sigma, n_traj))
}

#[inline]
fn record<T: Real>(
    acc: &mut ChunkAccum<T>,
    j: usize,
    kind: crate::generators::GeneratorKind,
    x: &DVector<Complex<T>>,
) {
    for (k, z) in x.iter().enumerate() {
        acc.sum_re[j][k].add(z.re);
        acc.sum_im[j][k].add(z.im);
    }
    for (c, comp) in observable_components(kind, x).into_iter().enumerate() {
        acc.comp_sum[j][c].add(comp);
        acc.comp_sumsq[j][c].add(comp * comp);
    }
}

/// Fraction of trajectories sitting in `state` at each time index.
///
/// Shares the trajectory streams with [`ensemble_average`], so the same
/// `(base_seed, i)` inputs reproduce the same paths.
pub fn occupation_fraction<T: Real>(
    p: &TransitionMatrix<T>,
    init: &InitialCondition<T>,
    n_steps: usize,
    n_traj: usize,
    base_seed: u64,
    state: usize,
) -> Result<Vec<f64>> {
    if state >= p.n_states() {
        return Err(Error::IndexOutOfRange {
            index: state,
            len: p.n_states(),
        });
    }
    let mut counts = vec![0u64; n_steps + 1];
    for i in 0..n_traj {
        let mut rng = trajectory_rng(base_seed, i as u64);
        let s0 = sample_initial(init.weights(), &mut rng);
        let traj = sample_trajectory(p, n_steps, s0, &mut rng);
        for (j, &s) in traj.states().iter().enumerate() {
            if s == state {
                counts[j] += 1;
            }
        }
    }
    Ok(counts
        .into_iter()
        .map(|c| c as f64 / n_traj as f64)
        .collect())
}
