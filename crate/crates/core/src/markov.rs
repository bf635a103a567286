//! Row-stochastic transition matrices and the free propagators they generate.
//!
//! The convention throughout is rows = origin: entry `(a, b)` is the
//! probability of the transition `a -> b`. Matrix powers therefore propagate
//! occupation distributions forward in time when applied on the right of a row
//! vector, and the free Green's function of the jump dynamics over `m` steps
//! is simply `P^m`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::{real, Real};

/// A validated row-stochastic `N x N` transition matrix.
///
/// Entries are preserved bit-exactly from construction; no renormalization is
/// ever applied, including to powers, so numerical drift remains observable.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix<T: Real> {
    entries: DMatrix<T>,
}

impl<T: Real> TransitionMatrix<T> {
    /// Validate a square matrix as a stochastic transition matrix.
    ///
    /// Fails with [`Error::NegativeEntry`] if any entry is below the rounding
    /// slack, [`Error::RowSumViolation`] if a row sum deviates from 1 beyond
    /// tolerance, and [`Error::NotSquare`] for non-square input.
    pub fn new(entries: DMatrix<T>) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::NotSquare {
                rows: entries.nrows(),
                cols: entries.ncols(),
            });
        }
        let slack = -T::negativity_slack();
        for row in 0..entries.nrows() {
            let mut sum = T::zero();
            for col in 0..entries.ncols() {
                let v = entries[(row, col)];
                if v < slack {
                    return Err(Error::NegativeEntry {
                        row,
                        col,
                        value: v.to_f64().unwrap_or(f64::NAN),
                    });
                }
                sum += v;
            }
            if (sum - T::one()).abs() > T::stochastic_tol() {
                return Err(Error::RowSumViolation {
                    row,
                    sum: sum.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(Self { entries })
    }

    /// Build from nested row slices, as parsed from configuration files.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
            return Err(Error::NotSquare { rows: n, cols });
        }
        let m = DMatrix::from_fn(n, n, |r, c| rows[r][c]);
        Self::new(m)
    }

    /// The identity chain: no transitions ever occur.
    pub fn identity(n_states: usize) -> Self {
        Self {
            entries: DMatrix::identity(n_states, n_states),
        }
    }

    /// Every step fully re-randomizes the state (all entries `1/N`).
    pub fn uniform(n_states: usize) -> Self {
        let p = T::one() / real::<T>(n_states as f64);
        Self {
            entries: DMatrix::from_element(n_states, n_states, p),
        }
    }

    /// Transition matrix for uncorrelated jumps among `n_states` sites at
    /// frequency `nu`, discretized with step `delta`:
    ///
    /// ```text
    /// P = e^{-nu delta} I + (1/N)(1 - e^{-nu delta}) J
    /// ```
    ///
    /// where `J` is the all-ones matrix. This is exactly `exp(Q delta)` for
    /// the rate matrix `Q = nu (J/N - I)`, so powers satisfy the semigroup
    /// identity `P(delta)^m = P(m delta)`.
    pub fn uncorrelated_jump(n_states: usize, nu: T, delta: T) -> Result<Self> {
        if n_states == 0 {
            return Err(Error::InvalidParameter("n_states must be >= 1".into()));
        }
        if nu < T::zero() {
            return Err(Error::InvalidParameter(format!(
                "jump frequency must be nonnegative, got {}",
                nu.to_f64().unwrap_or(f64::NAN)
            )));
        }
        if delta <= T::zero() {
            return Err(Error::InvalidParameter(format!(
                "time step must be positive, got {}",
                delta.to_f64().unwrap_or(f64::NAN)
            )));
        }
        let stay = (-nu * delta).exp();
        let hop = (T::one() - stay) / real::<T>(n_states as f64);
        let entries = DMatrix::from_fn(n_states, n_states, |r, c| {
            if r == c {
                stay + hop
            } else {
                hop
            }
        });
        Ok(Self { entries })
    }

    /// Replace row `k` with the unit row `e_k`, making `k` an absorbing
    /// state. All other rows are untouched.
    pub fn with_absorbing_state(&self, k: usize) -> Result<Self> {
        let n = self.n_states();
        if k >= n {
            return Err(Error::IndexOutOfRange { index: k, len: n });
        }
        let mut entries = self.entries.clone();
        for col in 0..n {
            entries[(k, col)] = if col == k { T::one() } else { T::zero() };
        }
        Ok(Self { entries })
    }

    pub fn n_states(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<T> {
        &self.entries
    }

    /// Probability of the transition `a -> b`.
    pub fn get(&self, a: usize, b: usize) -> T {
        self.entries[(a, b)]
    }

    /// The free propagator over `lag` steps: `P^lag` for `lag >= 0` (by
    /// repeated squaring, raw products without renormalization), the zero
    /// matrix for negative lag (causality).
    pub fn free_propagator(&self, lag: i64) -> DMatrix<T> {
        let n = self.n_states();
        if lag < 0 {
            return DMatrix::zeros(n, n);
        }
        let mut result = DMatrix::identity(n, n);
        let mut base = self.entries.clone();
        let mut e = lag as u64;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// Emit the matrix as CSV in row-major order, full round-trip precision.
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        for row in 0..self.n_states() {
            let line: Vec<String> = (0..self.n_states())
                .map(|col| format!("{:.16e}", self.entries[(row, col)].to_f64().unwrap()))
                .collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// A materialized free Green's-function block `G0_{i,j} = P^{j-i}`.
///
/// The lag is `j - i` in time steps; negative lag yields the zero matrix, the
/// discrete form of the causality step function.
#[derive(Debug, Clone)]
pub struct FreePropagator<T: Real> {
    matrix: DMatrix<T>,
    lag: i64,
}

impl<T: Real> FreePropagator<T> {
    pub fn new(source: &TransitionMatrix<T>, lag: i64) -> Self {
        Self {
            matrix: source.free_propagator(lag),
            lag,
        }
    }

    pub fn lag(&self) -> i64 {
        self.lag
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn jump3(nu: f64, delta: f64) -> TransitionMatrix<f64> {
        TransitionMatrix::uncorrelated_jump(3, nu, delta).unwrap()
    }

    #[test]
    fn identity_is_stochastic() {
        let p = TransitionMatrix::<f64>::new(DMatrix::identity(3, 3)).unwrap();
        assert_eq!(p.n_states(), 3);
    }

    #[test]
    fn valid_two_state_matrix() {
        let p = TransitionMatrix::from_rows(&[vec![0.9, 0.1], vec![0.3, 0.7]]).unwrap();
        assert_eq!(p.get(0, 1), 0.1);
    }

    #[test]
    fn row_sum_violation_detected() {
        let err = TransitionMatrix::from_rows(&[vec![0.9, 0.2], vec![0.3, 0.7]]).unwrap_err();
        assert!(matches!(err, Error::RowSumViolation { row: 0, .. }));
    }

    #[test]
    fn negative_entry_detected() {
        let err = TransitionMatrix::from_rows(&[vec![1.1, -0.1], vec![0.3, 0.7]]).unwrap_err();
        assert!(matches!(err, Error::NegativeEntry { row: 0, col: 1, .. }));
    }

    #[test]
    fn non_square_detected() {
        let m = DMatrix::from_row_slice(2, 3, &[0.5, 0.5, 0.0, 0.2, 0.3, 0.5]);
        assert!(matches!(
            TransitionMatrix::new(m).unwrap_err(),
            Error::NotSquare { rows: 2, cols: 3 }
        ));
    }

    #[test]
    fn jump_matrix_zero_frequency_is_identity() {
        let p = jump3(0.0, 0.001);
        for r in 0..3 {
            for c in 0..3 {
                let expect = if r == c { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(p.get(r, c), expect, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn jump_matrix_fast_limit_is_uniform() {
        // nu*delta = 1e4 puts e^{-nu delta} far below machine precision.
        let p = jump3(1e7, 0.001);
        for r in 0..3 {
            for c in 0..3 {
                assert_abs_diff_eq!(p.get(r, c), 1.0 / 3.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn jump_matrix_closed_form() {
        let (nu, delta) = (1.0, 0.001);
        let p = jump3(nu, delta);
        let stay = (-nu * delta as f64).exp();
        let hop = (1.0 - stay) / 3.0;
        for r in 0..3 {
            for c in 0..3 {
                let expect = if r == c { stay + hop } else { hop };
                assert_abs_diff_eq!(p.get(r, c), expect, epsilon = 1e-16);
            }
        }
    }

    #[test]
    fn jump_matrix_matches_rate_matrix_exponential() {
        // P must equal exp(delta * nu (J/N - I)) exactly, not just to O(delta^2).
        let (nu, delta, n) = (2.5, 0.05, 4usize);
        let p = TransitionMatrix::uncorrelated_jump(n, nu, delta).unwrap();
        let q = DMatrix::from_fn(n, n, |r, c| {
            let j = 1.0 / n as f64;
            nu * (j - if r == c { 1.0 } else { 0.0 })
        });
        let expm = (q * delta).exp();
        for r in 0..n {
            for c in 0..n {
                assert_abs_diff_eq!(p.get(r, c), expm[(r, c)], epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn absorbing_state_on_identity_is_identity() {
        let p = TransitionMatrix::<f64>::identity(3).with_absorbing_state(0).unwrap();
        assert_eq!(p.entries(), TransitionMatrix::<f64>::identity(3).entries());
    }

    #[test]
    fn absorbing_state_replaces_only_one_row() {
        let base = TransitionMatrix::uncorrelated_jump(4, 2.0, 0.01).unwrap();
        let p = base.with_absorbing_state(3).unwrap();
        for r in 0..3 {
            for c in 0..4 {
                assert_eq!(p.get(r, c), base.get(r, c));
            }
        }
        for c in 0..4 {
            assert_eq!(p.get(3, c), if c == 3 { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn absorbing_state_index_bound() {
        let p = TransitionMatrix::<f64>::identity(4);
        assert!(matches!(
            p.with_absorbing_state(4).unwrap_err(),
            Error::IndexOutOfRange { index: 4, len: 4 }
        ));
    }

    #[test]
    fn free_propagator_lag_zero_is_identity() {
        let p = jump3(1.0, 0.1);
        assert_eq!(p.free_propagator(0), DMatrix::identity(3, 3));
    }

    #[test]
    fn free_propagator_negative_lag_is_zero() {
        let p = jump3(1.0, 0.1);
        assert_eq!(p.free_propagator(-1), DMatrix::zeros(3, 3));
        assert_eq!(FreePropagator::new(&p, -5).matrix(), &DMatrix::zeros(3, 3));
    }

    #[test]
    fn jump_family_powers_reproduce_longer_lags() {
        // P(delta)^m must equal the closed form evaluated at lag m*delta.
        let (nu, delta, n) = (3.0, 0.02, 5usize);
        let p = TransitionMatrix::uncorrelated_jump(n, nu, delta).unwrap();
        for m in 0..=20i64 {
            let pm = p.free_propagator(m);
            let direct =
                TransitionMatrix::uncorrelated_jump(n, nu, delta * m as f64).map(|q| q.entries().clone());
            let direct = match (m, direct) {
                (0, _) => DMatrix::identity(n, n),
                (_, Ok(d)) => d,
                _ => unreachable!(),
            };
            for r in 0..n {
                for c in 0..n {
                    assert_abs_diff_eq!(pm[(r, c)], direct[(r, c)], epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn absorbing_trap_holds_under_powers() {
        let p = TransitionMatrix::uncorrelated_jump(4, 5.0, 0.01)
            .unwrap()
            .with_absorbing_state(2)
            .unwrap();
        for m in 0..=100 {
            let pm = p.free_propagator(m);
            assert_abs_diff_eq!(pm[(2, 2)], 1.0, epsilon = 1e-12);
        }
    }

    prop_compose! {
        fn arb_stochastic(max_n: usize)(n in 2..=max_n)(
            rows in proptest::collection::vec(
                proptest::collection::vec(0.01f64..1.0, n), n),
        ) -> Vec<Vec<f64>> {
            rows.into_iter()
                .map(|r| {
                    let s: f64 = r.iter().sum();
                    r.into_iter().map(|x| x / s).collect()
                })
                .collect()
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn stochasticity_closure_under_powers(rows in arb_stochastic(5)) {
            let p = TransitionMatrix::from_rows(&rows).unwrap();
            let n = p.n_states();
            for m in [0i64, 1, 2, 7, 31, 100] {
                let pm = p.free_propagator(m);
                for r in 0..n {
                    let sum: f64 = (0..n).map(|c| pm[(r, c)]).sum();
                    prop_assert!((sum - 1.0).abs() < 1e-10, "row {} sum {} at power {}", r, sum, m);
                    for c in 0..n {
                        prop_assert!(pm[(r, c)] >= -1e-12);
                    }
                }
            }
        }

        #[test]
        fn jump_semigroup(n in 2usize..=6, nu in 0.0f64..20.0, delta in 1e-4f64..0.05) {
            let p = TransitionMatrix::uncorrelated_jump(n, nu, delta).unwrap();
            for m in [1i64, 3, 10, 50] {
                let pm = p.free_propagator(m);
                let direct = TransitionMatrix::uncorrelated_jump(n, nu, delta * m as f64).unwrap();
                for r in 0..n {
                    for c in 0..n {
                        prop_assert!((pm[(r, c)] - direct.get(r, c)).abs() < 1e-10);
                    }
                }
            }
        }
    }
}
