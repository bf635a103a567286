//! Accuracy and runtime benchmarking: pooled Monte Carlo references, the
//! mean-relative-error metric, and convergence sweeps over the step size.

use std::time::Instant;


use crate::dyson::{evolve_markov, InitialCondition, SignalSeries};
use crate::error::{Error, Result};
use crate::generators::{GeneratorSet, Scheme};
use crate::markov::TransitionMatrix;
use crate::montecarlo::{ensemble_average, EnsembleStats};
use crate::scalar::Real;

/// A fully specified solvable problem: chain, generators, initial condition
/// and discretization.
#[derive(Debug, Clone)]
pub struct Problem<T: Real> {
    pub transition: TransitionMatrix<T>,
    pub generators: GeneratorSet<T>,
    pub init: InitialCondition<T>,
    pub delta: T,
    pub n_steps: usize,
}

impl<T: Real> Problem<T> {
    pub fn new(
        transition: TransitionMatrix<T>,
        generators: GeneratorSet<T>,
        init: InitialCondition<T>,
        delta: T,
        n_steps: usize,
    ) -> Result<Self> {
        if generators.n_states() != transition.n_states() {
            return Err(Error::DimensionMismatch(format!(
                "chain has {} states, generator set has {}",
                transition.n_states(),
                generators.n_states()
            )));
        }
        if init.n_states() != transition.n_states() || init.dim() != generators.dim() {
            return Err(Error::DimensionMismatch(
                "initial condition does not match chain/generators".into(),
            ));
        }
        if delta <= T::zero() || n_steps == 0 {
            return Err(Error::InvalidParameter(
                "need delta > 0 and n_steps >= 1".into(),
            ));
        }
        Ok(Self {
            transition,
            generators,
            init,
            delta,
            n_steps,
        })
    }

    /// Run the iterative transfer-matrix solver under the given scheme.
    pub fn solve(&self, scheme: Scheme) -> Result<SignalSeries<T>> {
        let props = self.generators.step_propagators(self.delta, scheme)?;
        evolve_markov(&self.transition, &props, &self.init, self.n_steps)
    }

    /// Run the Monte Carlo sampler under the given scheme.
    pub fn sample(
        &self,
        scheme: Scheme,
        n_traj: usize,
        base_seed: u64,
    ) -> Result<EnsembleStats<T>> {
        let props = self.generators.step_propagators(self.delta, scheme)?;
        ensemble_average(
            &self.transition,
            &props,
            &self.init,
            self.n_steps,
            n_traj,
            base_seed,
        )
    }

    /// FNV-1a content hash of the problem parameters.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv::new();
        h.write_usize(self.transition.n_states());
        for r in 0..self.transition.n_states() {
            for c in 0..self.transition.n_states() {
                h.write_f64(self.transition.get(r, c).to_f64().unwrap_or(f64::NAN));
            }
        }
        h.write_usize(self.generators.dim());
        for g in self.generators.generators() {
            for z in g.iter() {
                h.write_f64(z.re.to_f64().unwrap_or(f64::NAN));
                h.write_f64(z.im.to_f64().unwrap_or(f64::NAN));
            }
        }
        for &w in self.init.weights() {
            h.write_f64(w.to_f64().unwrap_or(f64::NAN));
        }
        for z in self.init.payload().iter() {
            h.write_f64(z.re.to_f64().unwrap_or(f64::NAN));
            h.write_f64(z.im.to_f64().unwrap_or(f64::NAN));
        }
        h.write_f64(self.delta.to_f64().unwrap_or(f64::NAN));
        h.write_usize(self.n_steps);
        h.finish()
    }
}

struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf29ce484222325)
    }

    fn write_bytes(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x100000001b3);
        }
    }

    fn write_f64(&mut self, v: f64) {
        self.write_bytes(&v.to_bits().to_le_bytes());
    }

    fn write_usize(&mut self, v: usize) {
        self.write_bytes(&(v as u64).to_le_bytes());
    }

    fn finish(&self) -> u64 {
        self.0
    }
}

/// A pooled Monte Carlo reference solution with its provenance.
#[derive(Debug, Clone)]
pub struct ReferenceSolution<T: Real> {
    stats: EnsembleStats<T>,
    fingerprint: u64,
    base_seed: u64,
    batches: usize,
    traj_per_batch: usize,
}

impl<T: Real> ReferenceSolution<T> {
    pub fn stats(&self) -> &EnsembleStats<T> {
        &self.stats
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn base_seed(&self) -> u64 {
        self.base_seed
    }

    pub fn n_traj(&self) -> usize {
        self.batches * self.traj_per_batch
    }

    /// Wrap externally computed statistics (e.g. parsed from files).
    pub fn from_stats(stats: EnsembleStats<T>) -> Self {
        let n = stats.n_traj();
        Self {
            stats,
            fingerprint: 0,
            base_seed: 0,
            batches: 1,
            traj_per_batch: n,
        }
    }
}

/// Build the reference: `batches x traj_per_batch` exact-scheme trajectories
/// pooled into one mean and one population standard deviation per time point
/// and component. Deterministic under `base_seed`.
pub fn reference_mc<T: Real>(
    problem: &Problem<T>,
    batches: usize,
    traj_per_batch: usize,
    base_seed: u64,
) -> Result<ReferenceSolution<T>> {
    let n_traj = batches * traj_per_batch;
    if n_traj < 2 {
        return Err(Error::InvalidParameter(
            "reference needs at least 2 trajectories for a standard deviation".into(),
        ));
    }
    let stats = problem.sample(Scheme::Exact, n_traj, base_seed)?;
    Ok(ReferenceSolution {
        stats,
        fingerprint: problem.fingerprint(),
        base_seed,
        batches,
        traj_per_batch,
    })
}

/// Mean relative error of a solver output against a Monte Carlo reference:
///
/// ```text
/// MRE = (1/N) sum_i |S(t_i) - S_mc(t_i)| / sigma_mc(t_i)
/// ```
///
/// summed over every time point of the test series (which must lie on the
/// reference grid) and averaged per component for vector-valued signals.
/// `t = 0` is skipped when the reference deviation vanishes there; a zero
/// deviation at any interior point is an error.
pub fn mean_relative_error<T: Real>(
    test: &SignalSeries<T>,
    reference: &ReferenceSolution<T>,
) -> Result<T> {
    let ref_mean = reference.stats().mean();
    if test.kind() != ref_mean.kind() {
        return Err(Error::DimensionMismatch(
            "test and reference observables differ in kind".into(),
        ));
    }
    let test_grid: Vec<(T, Vec<T>)> = (0..test.len())
        .map(|j| (test.time(j), test.observable_components(j)))
        .collect();
    let ref_sigma = reference.stats().sigma();
    let ref_comps: Vec<Vec<T>> = (0..ref_mean.len())
        .map(|j| ref_mean.observable_components(j))
        .collect();
    mre_from_grids(&test_grid, ref_mean.delta(), &ref_comps, ref_sigma)
}

/// Grid-level MRE shared by the typed entry point and the file comparator.
pub fn mre_from_grids<T: Real>(
    test: &[(T, Vec<T>)],
    ref_delta: T,
    ref_means: &[Vec<T>],
    ref_sigmas: &[Vec<T>],
) -> Result<T> {
    if ref_means.len() != ref_sigmas.len() || ref_means.is_empty() {
        return Err(Error::GridMismatch(
            "reference mean and sigma grids differ in length".into(),
        ));
    }
    let n_comps = ref_means[0].len();
    let mut total = T::zero();
    let mut count = 0usize;
    for (j, (t, comps)) in test.iter().enumerate() {
        if comps.len() != n_comps {
            return Err(Error::DimensionMismatch(format!(
                "test has {} components, reference has {}",
                comps.len(),
                n_comps
            )));
        }
        let ratio = *t / ref_delta;
        let idx_t = ratio.round();
        if (ratio - idx_t).abs() > T::from_f64(1e-6).unwrap() * T::one().max(ratio.abs()) {
            return Err(Error::GridMismatch(format!(
                "test time {} does not lie on the reference grid (step {})",
                t.to_f64().unwrap_or(f64::NAN),
                ref_delta.to_f64().unwrap_or(f64::NAN)
            )));
        }
        let idx = idx_t.to_usize().ok_or_else(|| {
            Error::GridMismatch("negative test time".into())
        })?;
        if idx >= ref_means.len() {
            return Err(Error::GridMismatch(format!(
                "test time {} beyond the reference horizon",
                t.to_f64().unwrap_or(f64::NAN)
            )));
        }
        for c in 0..n_comps {
            let sigma = ref_sigmas[idx][c];
            if sigma <= T::zero() {
                if j == 0 && idx == 0 {
                    continue;
                }
                return Err(Error::ZeroSigma {
                    time_index: idx,
                    component: c,
                });
            }
            total += (comps[c] - ref_means[idx][c]).abs() / sigma;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::GridMismatch(
            "no comparable time points with nonzero sigma".into(),
        ));
    }
    Ok(total / T::from_usize(count).unwrap())
}

/// One convergence-sweep sample.
#[derive(Debug, Clone)]
pub struct BenchmarkPoint<T: Real> {
    pub delta: T,
    pub n_steps: usize,
    pub runtime_s: f64,
    pub mre: T,
}

/// Number of timed repetitions per sweep point; the median is reported.
const TIMING_REPS: usize = 5;

/// Median wall-clock seconds of `reps` invocations.
pub fn median_runtime<F: FnMut()>(mut f: F, reps: usize) -> f64 {
    let mut times: Vec<f64> = (0..reps)
        .map(|_| {
            let t0 = Instant::now();
            f();
            t0.elapsed().as_secs_f64()
        })
        .collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times[times.len() / 2]
}

/// Run the iterative solver across a descending list of step sizes, matching
/// the reference interval, and record runtime and MRE per point.
///
/// `factory(delta, n_steps)` must produce the same physical problem
/// rediscretized at the requested step.
pub fn convergence_sweep<T: Real>(
    factory: &dyn Fn(T, usize) -> Result<Problem<T>>,
    deltas: &[T],
    total_time: T,
    scheme: Scheme,
    reference: &ReferenceSolution<T>,
) -> Result<Vec<BenchmarkPoint<T>>> {
    if deltas.is_empty() {
        return Err(Error::InvalidParameter("empty delta list".into()));
    }
    for pair in deltas.windows(2) {
        if pair[1] >= pair[0] {
            return Err(Error::InvalidParameter(
                "delta list must be strictly descending".into(),
            ));
        }
    }
    let mut points = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let steps_exact = total_time / delta;
        let n_steps = steps_exact.round().to_usize().ok_or_else(|| {
            Error::InvalidParameter("non-positive step count".into())
        })?;
        if n_steps == 0 || (T::from_usize(n_steps).unwrap() * delta - total_time).abs() > delta {
            return Err(Error::InvalidParameter(format!(
                "delta {} does not divide the interval within one step",
                delta.to_f64().unwrap_or(f64::NAN)
            )));
        }
        let problem = factory(delta, n_steps)?;
        let mut result: Option<SignalSeries<T>> = None;
        let runtime_s = median_runtime(
            || {
                result = Some(problem.solve(scheme).expect("solver failure inside sweep"));
            },
            TIMING_REPS,
        );
        let series = result.expect("at least one timed repetition ran");
        let mre = mean_relative_error(&series, reference)?;
        points.push(BenchmarkPoint {
            delta,
            n_steps,
            runtime_s,
            mre,
        });
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyson::SignalSeries;
    use crate::generators::GeneratorKind;
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;
    use num_complex::Complex64;

    fn scalar_problem(nu: f64, delta: f64, n_steps: usize) -> Problem<f64> {
        let p = if nu == 0.0 {
            TransitionMatrix::identity(3)
        } else {
            TransitionMatrix::uncorrelated_jump(3, nu, delta).unwrap()
        };
        Problem::new(
            p,
            GeneratorSet::scalar(&[-0.5, 1.0, 2.0]).unwrap(),
            InitialCondition::uniform_scalar(3),
            delta,
            n_steps,
        )
        .unwrap()
    }

    fn synthetic_reference(
        values: &[f64],
        sigmas: &[f64],
        delta: f64,
    ) -> ReferenceSolution<f64> {
        let mean = SignalSeries::new(
            GeneratorKind::Scalar,
            delta,
            values
                .iter()
                .map(|&v| DVector::from_element(1, Complex64::new(v, 0.0)))
                .collect(),
        );
        let sigma = sigmas.iter().map(|&s| vec![s]).collect();
        ReferenceSolution::from_stats(EnsembleStats::from_parts(mean, sigma, 2))
    }

    fn synthetic_series(values: &[f64], delta: f64) -> SignalSeries<f64> {
        SignalSeries::new(
            GeneratorKind::Scalar,
            delta,
            values
                .iter()
                .map(|&v| DVector::from_element(1, Complex64::new(v, 0.0)))
                .collect(),
        )
    }

    #[test]
    fn mre_of_identical_signals_is_zero() {
        let vals = [1.0, 0.9, 0.7, 0.4];
        let reference = synthetic_reference(&vals, &[0.0, 0.2, 0.3, 0.4], 0.1);
        let test = synthetic_series(&vals, 0.1);
        assert_abs_diff_eq!(
            mean_relative_error(&test, &reference).unwrap(),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn mre_of_one_sigma_offset_is_one() {
        let vals = [1.0, 0.9, 0.7, 0.4];
        let sigmas = [0.0, 0.2, 0.3, 0.4];
        let reference = synthetic_reference(&vals, &sigmas, 0.1);
        let shifted: Vec<f64> = vals.iter().zip(&sigmas).map(|(v, s)| v + s).collect();
        let test = synthetic_series(&shifted, 0.1);
        assert_abs_diff_eq!(
            mean_relative_error(&test, &reference).unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn mre_is_offset_invariant_and_sigma_inverse() {
        let vals = [1.0, 0.8, 0.5, 0.1];
        let test_vals = [1.0, 0.85, 0.45, 0.2];
        let sigmas = [0.0, 0.2, 0.3, 0.4];
        let base = mean_relative_error(
            &synthetic_series(&test_vals, 0.1),
            &synthetic_reference(&vals, &sigmas, 0.1),
        )
        .unwrap();

        let off = 3.7;
        let vals_off: Vec<f64> = vals.iter().map(|v| v + off).collect();
        let test_off: Vec<f64> = test_vals.iter().map(|v| v + off).collect();
        let shifted = mean_relative_error(
            &synthetic_series(&test_off, 0.1),
            &synthetic_reference(&vals_off, &sigmas, 0.1),
        )
        .unwrap();
        assert_abs_diff_eq!(base, shifted, epsilon = 1e-12);

        let sigmas_scaled: Vec<f64> = sigmas.iter().map(|s| s * 2.0).collect();
        let scaled = mean_relative_error(
            &synthetic_series(&test_vals, 0.1),
            &synthetic_reference(&vals, &sigmas_scaled, 0.1),
        )
        .unwrap();
        assert_abs_diff_eq!(base, 2.0 * scaled, epsilon = 1e-12);
    }

    #[test]
    fn zero_sigma_at_interior_point_is_an_error() {
        let vals = [1.0, 0.9, 0.7];
        let reference = synthetic_reference(&vals, &[0.0, 0.0, 0.3], 0.1);
        let test = synthetic_series(&vals, 0.1);
        assert!(matches!(
            mean_relative_error(&test, &reference).unwrap_err(),
            Error::ZeroSigma {
                time_index: 1,
                component: 0
            }
        ));
    }

    #[test]
    fn incommensurate_grid_rejected() {
        let reference = synthetic_reference(&[1.0, 0.9, 0.8], &[0.0, 0.1, 0.1], 0.1);
        let test = synthetic_series(&[1.0, 0.95], 0.07);
        assert!(matches!(
            mean_relative_error(&test, &reference).unwrap_err(),
            Error::GridMismatch(_)
        ));
    }

    #[test]
    fn coarse_test_grid_on_fine_reference() {
        // Test at delta = 0.2 against a reference at delta = 0.1: indices
        // 0, 2, 4 of the reference are used.
        let reference =
            synthetic_reference(&[1.0, 0.9, 0.8, 0.7, 0.6], &[0.0, 0.1, 0.2, 0.3, 0.4], 0.1);
        let test = synthetic_series(&[1.0, 0.8, 0.6], 0.2);
        assert_abs_diff_eq!(
            mean_relative_error(&test, &reference).unwrap(),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn reference_is_deterministic_and_matches_static_limit() {
        let delta = 0.01;
        let n_steps = 300;
        let problem = scalar_problem(0.0, delta, n_steps);
        let a = reference_mc(&problem, 5, 200, 7).unwrap();
        let b = reference_mc(&problem, 5, 200, 7).unwrap();
        assert_eq!(a.stats(), b.stats());
        assert_eq!(a.n_traj(), 1000);

        // nu = 0 slow limit: the mean must track the cosine sum within
        // 3 sigma / sqrt(n_traj) pointwise (generous: the test uses few
        // trajectories).
        let freqs = [-0.5, 1.0, 2.0];
        let n = a.n_traj() as f64;
        for j in (1..=n_steps).step_by(37) {
            let t = a.stats().mean().time(j);
            let expect: f64 = freqs.iter().map(|w| (w * t).cos()).sum::<f64>() / 3.0;
            let got = a.stats().mean().value(j)[0].re;
            let sigma = a.stats().sigma()[j][0];
            assert!(
                (got - expect).abs() <= 3.5 * sigma / n.sqrt() + 1e-9,
                "j={j}: {got} vs {expect} (sigma {sigma})"
            );
        }
    }

    #[test]
    fn single_trajectory_reference_rejected() {
        let problem = scalar_problem(1.0, 0.01, 10);
        assert!(matches!(
            reference_mc(&problem, 1, 1, 0).unwrap_err(),
            Error::InvalidParameter(_)
        ));
    }

    #[test]
    fn sweep_requires_descending_deltas() {
        let problem = scalar_problem(1.0, 0.01, 100);
        let reference = reference_mc(&problem, 2, 50, 3).unwrap();
        let factory = |delta: f64, n: usize| Ok(scalar_problem(1.0, delta, n));
        let err = convergence_sweep(&factory, &[0.01, 0.02], 1.0, Scheme::Trapezoid, &reference)
            .unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn sweep_produces_points_with_positive_runtime() {
        let delta_ref = 0.005;
        let n_ref = 200;
        let problem = scalar_problem(1.0, delta_ref, n_ref);
        let reference = reference_mc(&problem, 2, 150, 11).unwrap();
        let factory = |delta: f64, n: usize| Ok(scalar_problem(1.0, delta, n));
        let points = convergence_sweep(
            &factory,
            &[0.1, 0.05, 0.01],
            1.0,
            Scheme::Trapezoid,
            &reference,
        )
        .unwrap();
        assert_eq!(points.len(), 3);
        for pt in &points {
            assert!(pt.runtime_s > 0.0);
            assert!(pt.mre >= 0.0);
            assert_eq!(
                (1.0 / pt.delta).round() as usize,
                pt.n_steps,
                "steps match the interval"
            );
        }
    }

    #[test]
    fn fingerprint_distinguishes_problems() {
        let a = scalar_problem(1.0, 0.01, 100);
        let b = scalar_problem(2.0, 0.01, 100);
        let c = scalar_problem(1.0, 0.01, 100);
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint(), c.fingerprint());
    }
}
