//! Per-state evolution generators and their single-step propagation factors.
//!
//! Each Markov state `i` carries a complex `d x d` generator `A_i` (units of
//! inverse time) driving the deterministic evolution while the system sits in
//! that state:
//!
//! - scalar precession: `d = 1`, `A = i w` for a real frequency `w`;
//! - vector rotation: `d = 3`, `A` is the cross-product matrix of the
//!   rotation vector `w` (direction = axis, magnitude = angular speed);
//! - Liouvillian: `d = dh^2`, `A` generates density-matrix evolution in the
//!   flattened (Fock-Liouville) representation;
//! - custom: any complex square matrix.
//!
//! One step of length `delta` is approximated by resolvent factors. The
//! rectangle form `(I - delta A)^{-1}` carries an `O(delta^2)` local error;
//! the trapezoid (Cayley) form `(I - delta A / 2)^{-1} (I + delta A / 2)` is
//! one order better and exactly norm-preserving for anti-Hermitian `A`. The
//! `exact` scheme uses the matrix exponential `e^{delta A}` itself and serves
//! as the physical reference for Monte Carlo runs.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{cnorm, imag_unit, Real};

/// Problem class of a generator set; decides how signals are contracted and
/// emitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    Scalar,
    Rotation,
    Liouvillian,
    Custom,
}

/// The set of per-state generators `A_i`, one per Markov state.
#[derive(Debug, Clone)]
pub struct GeneratorSet<T: Real> {
    kind: GeneratorKind,
    dim: usize,
    generators: Vec<DMatrix<Complex<T>>>,
}

impl<T: Real> GeneratorSet<T> {
    /// Scalar precession generators `A_i = i w_i` from real frequencies.
    pub fn scalar(frequencies: &[T]) -> Result<Self> {
        if frequencies.is_empty() {
            return Err(Error::EmptyList);
        }
        let generators = frequencies
            .iter()
            .map(|&w| DMatrix::from_element(1, 1, Complex::new(T::zero(), w)))
            .collect();
        Ok(Self {
            kind: GeneratorKind::Scalar,
            dim: 1,
            generators,
        })
    }

    /// Rotation generators from rotation vectors. Each vector fuses axis and
    /// angular speed: `A_i v = w_i x v`, and `e^{t A_i}` is the rotation
    /// about `w_i` by the angle `|w_i| t`.
    pub fn rotation(axes: &[[T; 3]]) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::EmptyList);
        }
        for (index, axis) in axes.iter().enumerate() {
            if axis.iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFiniteAxis { index });
            }
        }
        let generators = axes.iter().map(|w| cross_matrix(w)).collect();
        Ok(Self {
            kind: GeneratorKind::Rotation,
            dim: 3,
            generators,
        })
    }

    /// Liouvillian generators from a list of Hamiltonians, one per state.
    pub fn liouvillian(hamiltonians: &[DMatrix<Complex<T>>]) -> Result<Self> {
        if hamiltonians.is_empty() {
            return Err(Error::EmptyList);
        }
        let dh = hamiltonians[0].nrows();
        let generators = hamiltonians
            .iter()
            .map(|h| {
                if h.nrows() != dh || h.ncols() != dh {
                    return Err(Error::DimensionMismatch(format!(
                        "all Hamiltonians must be {dh}x{dh}"
                    )));
                }
                liouvillian_generator(h)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            kind: GeneratorKind::Liouvillian,
            dim: dh * dh,
            generators,
        })
    }

    /// Arbitrary complex generators.
    pub fn custom(matrices: Vec<DMatrix<Complex<T>>>) -> Result<Self> {
        if matrices.is_empty() {
            return Err(Error::EmptyList);
        }
        let dim = matrices[0].nrows();
        for m in &matrices {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "all generators must be {dim}x{dim}"
                )));
            }
        }
        Ok(Self {
            kind: GeneratorKind::Custom,
            dim,
            generators: matrices,
        })
    }

    pub fn kind(&self) -> GeneratorKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_states(&self) -> usize {
        self.generators.len()
    }

    pub fn generator(&self, state: usize) -> &DMatrix<Complex<T>> {
        &self.generators[state]
    }

    pub fn generators(&self) -> &[DMatrix<Complex<T>>] {
        &self.generators
    }

    /// Build the single-step propagation factors for step `delta` under the
    /// given scheme. Factors are computed once per run; generators are
    /// time-independent within a run.
    pub fn step_propagators(&self, delta: T, scheme: Scheme) -> Result<StepPropagatorSet<T>> {
        StepPropagatorSet::build(self, delta, scheme)
    }
}

/// The Liouville-space generator of `d rho / dt = -i [H, rho]` for a single
/// Hamiltonian, acting on the row-major flattening of `rho`:
///
/// ```text
/// L = -i (H (x) I  -  I (x) H^T)
/// ```
///
/// With row-major stacking, `vec(A rho B) = (A (x) B^T) vec(rho)`, which
/// fixes the sign above: evolving `vec(rho)` by `e^{t L}` reproduces
/// `e^{-iHt} rho e^{+iHt}`.
pub fn liouvillian_generator<T: Real>(h: &DMatrix<Complex<T>>) -> Result<DMatrix<Complex<T>>> {
    if h.nrows() != h.ncols() {
        return Err(Error::NotSquare {
            rows: h.nrows(),
            cols: h.ncols(),
        });
    }
    let mut max_dev = T::zero();
    for r in 0..h.nrows() {
        for c in 0..h.ncols() {
            let dev = cnorm(h[(r, c)] - h[(c, r)].conj());
            if dev > max_dev {
                max_dev = dev;
            }
        }
    }
    if max_dev > T::hermiticity_tol() {
        return Err(Error::NotHermitian {
            max_dev: max_dev.to_f64().unwrap_or(f64::NAN),
        });
    }
    let d = h.nrows();
    let eye = DMatrix::<Complex<T>>::identity(d, d);
    let ht = h.transpose();
    let comm = h.kronecker(&eye) - eye.kronecker(&ht);
    Ok(comm * (-imag_unit::<T>()))
}

/// Cross-product matrix of a 3-vector: `cross_matrix(w) * v = w x v`.
pub fn cross_matrix<T: Real>(w: &[T; 3]) -> DMatrix<Complex<T>> {
    let z = T::zero();
    let re = [
        [z, -w[2], w[1]],
        [w[2], z, -w[0]],
        [-w[1], w[0], z],
    ];
    DMatrix::from_fn(3, 3, |r, c| Complex::new(re[r][c], z))
}

/// Integration scheme for one Markov step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// `(I - delta A)^{-1}`, first-order resolvent.
    Rectangle,
    /// `(I - delta A / 2)^{-1} (I + delta A / 2)`, Cayley form.
    Trapezoid,
    /// `e^{delta A}`, exact per-segment propagation.
    Exact,
}

impl Scheme {
    pub fn label(&self) -> &'static str {
        match self {
            Scheme::Rectangle => "rect",
            Scheme::Trapezoid => "trapz",
            Scheme::Exact => "exact",
        }
    }
}

/// Precomputed per-state single-step factors.
///
/// A step in state `i` applies `left[i] * x` (rectangle, exact) or
/// `left[i] * right[i] * x` with the right factor belonging to the state the
/// step composes against in the transfer-matrix recursion (trapezoid).
#[derive(Debug, Clone)]
pub struct StepPropagatorSet<T: Real> {
    scheme: Scheme,
    kind: GeneratorKind,
    delta: T,
    dim: usize,
    left: Vec<DMatrix<Complex<T>>>,
    right: Vec<DMatrix<Complex<T>>>,
}

impl<T: Real> StepPropagatorSet<T> {
    pub fn build(gens: &GeneratorSet<T>, delta: T, scheme: Scheme) -> Result<Self> {
        if delta <= T::zero() {
            return Err(Error::InvalidParameter(format!(
                "time step must be positive, got {}",
                delta.to_f64().unwrap_or(f64::NAN)
            )));
        }
        let d = gens.dim();
        let eye = DMatrix::<Complex<T>>::identity(d, d);
        let mut left = Vec::with_capacity(gens.n_states());
        let mut right = Vec::with_capacity(gens.n_states());
        for (state, a) in gens.generators().iter().enumerate() {
            match scheme {
                Scheme::Exact => {
                    let scaled = a * Complex::new(delta, T::zero());
                    left.push(scaled.exp());
                    right.push(eye.clone());
                }
                Scheme::Rectangle | Scheme::Trapezoid => {
                    let half = Complex::new(T::from_f64(0.5).unwrap(), T::zero());
                    let c = match scheme {
                        Scheme::Rectangle => Complex::new(delta, T::zero()),
                        _ => Complex::new(delta, T::zero()) * half,
                    };
                    let m = &eye - a * c;
                    let inv = invert_checked(&m, state)?;
                    left.push(inv);
                    right.push(match scheme {
                        Scheme::Rectangle => eye.clone(),
                        _ => &eye + a * c,
                    });
                }
            }
        }
        Ok(Self {
            scheme,
            kind: gens.kind(),
            delta,
            dim: d,
            left,
            right,
        })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn kind(&self) -> GeneratorKind {
        self.kind
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_states(&self) -> usize {
        self.left.len()
    }

    pub fn left(&self, state: usize) -> &DMatrix<Complex<T>> {
        &self.left[state]
    }

    pub fn right(&self, state: usize) -> &DMatrix<Complex<T>> {
        &self.right[state]
    }

    /// The full one-step factor `F_i = left_i * right_i` applied when a
    /// trajectory spends one step in state `i`.
    pub fn one_step_factor(&self, state: usize) -> DMatrix<Complex<T>> {
        match self.scheme {
            Scheme::Trapezoid => &self.left[state] * &self.right[state],
            _ => self.left[state].clone(),
        }
    }
}

/// Invert a resolvent factor, rejecting near-singular systems by condition
/// number.
fn invert_checked<T: Real>(m: &DMatrix<Complex<T>>, state: usize) -> Result<DMatrix<Complex<T>>> {
    let norm_m = mat_norm1(m);
    let inv = m.clone().lu().try_inverse().ok_or(Error::SingularResolvent {
        state,
        condition: f64::INFINITY,
    })?;
    let cond = norm_m * mat_norm1(&inv);
    if !cond.is_finite() || cond > T::condition_limit() {
        return Err(Error::SingularResolvent {
            state,
            condition: cond.to_f64().unwrap_or(f64::INFINITY),
        });
    }
    Ok(inv)
}

/// Induced 1-norm (maximum absolute column sum).
pub(crate) fn mat_norm1<T: Real>(m: &DMatrix<Complex<T>>) -> T {
    let mut best = T::zero();
    for c in 0..m.ncols() {
        let mut s = T::zero();
        for r in 0..m.nrows() {
            s += cnorm(m[(r, c)]);
        }
        if s > best {
            best = s;
        }
    }
    best
}
