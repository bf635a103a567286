//! The core solvers: the iterative Markov transfer-matrix recursion and the
//! dense block-triangular Green's-function solver, plus observable
//! contraction.
//!
//! For Markov switching the full Green's function factorizes into a one-step
//! block operator applied repeatedly. Writing `R_a` for the left resolvent
//! factor of state `a` and `Q_b` for the right factor of state `b` (identity
//! under the rectangle scheme), the grid of `d x d` blocks indexed by
//! (initial state `a`, final state `c`) evolves as
//!
//! ```text
//! G_j[a][c] = sum_b  R_a  P(a,b)  Q_b  G_{j-1}[b][c],      G_0 = identity
//! ```
//!
//! and the observable at `t_j = j delta` is the contraction
//! `sum_{a,c} p0(a) G_j[a][c] payload`. The factor order left-resolvent,
//! transition, right-factor is normative: for matrix-valued generators the
//! two factors belong to different states and do not commute. For `d = 1` the
//! map reduces exactly to the scalar recursion it generalizes.
//!
//! The dense solver handles arbitrary causal free propagators `G0_{i,j}`
//! (not necessarily Markov powers) by back-substitution on the first block
//! row of the block upper-triangular Dyson system,
//!
//! ```text
//! G_{0,j} = (I - delta A)^{-1} [ G0_{0,j} + delta sum_{k=1}^{j-1} G0_{k,j} A G_{0,k} ]
//! ```
//!
//! which coincides with the recursion above (rectangle scheme) whenever
//! `G0_{i,j} = P^{j-i}`. Causality keeps the lower block triangle zero, so no
//! `(n N d)^2` inverse is ever materialized.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::generators::{GeneratorKind, GeneratorSet, Scheme, StepPropagatorSet};
use crate::markov::TransitionMatrix;
use crate::scalar::Real;

/// Initial state distribution and the evolved payload vector.
///
/// The payload is the quantity the per-state factors act on: the unit scalar
/// for precession problems, the initial vector `v0` for rotations, the
/// flattened density matrix for Liouvillian evolution.
#[derive(Debug, Clone)]
pub struct InitialCondition<T: Real> {
    weights: Vec<T>,
    payload: DVector<Complex<T>>,
}

impl<T: Real> InitialCondition<T> {
    pub fn new(weights: Vec<T>, payload: DVector<Complex<T>>) -> Result<Self> {
        if weights.is_empty() || payload.is_empty() {
            return Err(Error::InvalidParameter(
                "initial condition must have at least one state and one payload component".into(),
            ));
        }
        let mut sum = T::zero();
        for &w in &weights {
            if w < -T::weight_tol() {
                return Err(Error::InvalidParameter(format!(
                    "negative initial weight {}",
                    w.to_f64().unwrap_or(f64::NAN)
                )));
            }
            sum += w;
        }
        if (sum - T::one()).abs() > T::weight_tol() {
            return Err(Error::InvalidParameter(format!(
                "initial weights sum to {}, not 1",
                sum.to_f64().unwrap_or(f64::NAN)
            )));
        }
        Ok(Self { weights, payload })
    }

    /// Uniform distribution over `n_states`.
    pub fn uniform(n_states: usize, payload: DVector<Complex<T>>) -> Result<Self> {
        let w = T::one() / T::from_usize(n_states).unwrap();
        Self::new(vec![w; n_states], payload)
    }

    /// Uniform distribution with the unit scalar payload.
    pub fn uniform_scalar(n_states: usize) -> Self {
        let payload = DVector::from_element(1, Complex::new(T::one(), T::zero()));
        Self::uniform(n_states, payload).expect("uniform weights are valid")
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn payload(&self) -> &DVector<Complex<T>> {
        &self.payload
    }

    pub fn n_states(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.payload.len()
    }
}

/// A time series of contracted observables on the grid `t_j = j delta`.
///
/// Values are stored as full complex `d`-vectors. For scalar problems the
/// physical signal is the real part, exposed by
/// [`SignalSeries::scalar_signal`]; the complex value is retained so modulus
/// diagnostics stay available.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSeries<T: Real> {
    kind: GeneratorKind,
    delta: T,
    values: Vec<DVector<Complex<T>>>,
}

impl<T: Real> SignalSeries<T> {
    pub fn new(kind: GeneratorKind, delta: T, values: Vec<DVector<Complex<T>>>) -> Self {
        Self {
            kind,
            delta,
            values,
        }
    }

    pub fn kind(&self) -> GeneratorKind {
        self.kind
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    /// Number of stored time points (`n_steps + 1`).
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, j: usize) -> T {
        T::from_usize(j).unwrap() * self.delta
    }

    pub fn value(&self, j: usize) -> &DVector<Complex<T>> {
        &self.values[j]
    }

    pub fn values(&self) -> &[DVector<Complex<T>>] {
        &self.values
    }

    /// The real scalar signal `Re S(t_j)`; meaningful for scalar-kind series.
    pub fn scalar_signal(&self) -> Vec<T> {
        self.values.iter().map(|v| v[0].re).collect()
    }

    /// Real observable components at time index `j`: the real part for
    /// scalar problems, the three Cartesian components for rotations, the
    /// interleaved re/im matrix elements for Liouvillian and custom payloads.
    pub fn observable_components(&self, j: usize) -> Vec<T> {
        observable_components(self.kind, &self.values[j])
    }

    pub fn n_observable_components(&self) -> usize {
        n_observable_components(self.kind, self.values.first().map_or(0, |v| v.len()))
    }

    pub fn observable_labels(&self) -> Vec<String> {
        observable_labels(self.kind, self.values.first().map_or(0, |v| v.len()))
    }
}

pub(crate) fn observable_components<T: Real>(
    kind: GeneratorKind,
    value: &DVector<Complex<T>>,
) -> Vec<T> {
    match kind {
        GeneratorKind::Scalar => vec![value[0].re],
        GeneratorKind::Rotation => value.iter().map(|z| z.re).collect(),
        GeneratorKind::Liouvillian | GeneratorKind::Custom => {
            value.iter().flat_map(|z| [z.re, z.im]).collect()
        }
    }
}

pub(crate) fn n_observable_components(kind: GeneratorKind, dim: usize) -> usize {
    match kind {
        GeneratorKind::Scalar => 1,
        GeneratorKind::Rotation => dim,
        GeneratorKind::Liouvillian | GeneratorKind::Custom => 2 * dim,
    }
}

pub(crate) fn observable_labels(kind: GeneratorKind, dim: usize) -> Vec<String> {
    match kind {
        GeneratorKind::Scalar => vec!["re".into()],
        GeneratorKind::Rotation => {
            let names = ["x", "y", "z"];
            (0..dim)
                .map(|k| {
                    names
                        .get(k)
                        .map(|s| s.to_string())
                        .unwrap_or_else(|| format!("v{k}"))
                })
                .collect()
        }
        GeneratorKind::Liouvillian => {
            let dh = (dim as f64).sqrt().round() as usize;
            (0..dim)
                .flat_map(|k| {
                    let (r, c) = (k / dh, k % dh);
                    [format!("rho_{r}_{c}_re"), format!("rho_{r}_{c}_im")]
                })
                .collect()
        }
        GeneratorKind::Custom => (0..dim)
            .flat_map(|k| [format!("v{k}_re"), format!("v{k}_im")])
            .collect(),
    }
}

/// An `N x N` grid of `d x d` complex blocks, stored row-major by
/// (initial state, final state).
#[derive(Debug, Clone, PartialEq)]
pub struct BlockGrid<T: Real> {
    n_states: usize,
    dim: usize,
    blocks: Vec<DMatrix<Complex<T>>>,
}

impl<T: Real> BlockGrid<T> {
    /// The identity grid: identity blocks on the diagonal, zero elsewhere.
    pub fn identity(n_states: usize, dim: usize) -> Self {
        let blocks = (0..n_states * n_states)
            .map(|k| {
                if k / n_states == k % n_states {
                    DMatrix::identity(dim, dim)
                } else {
                    DMatrix::zeros(dim, dim)
                }
            })
            .collect();
        Self {
            n_states,
            dim,
            blocks,
        }
    }

    pub fn zeros(n_states: usize, dim: usize) -> Self {
        Self {
            n_states,
            dim,
            blocks: vec![DMatrix::zeros(dim, dim); n_states * n_states],
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn block(&self, a: usize, c: usize) -> &DMatrix<Complex<T>> {
        &self.blocks[a * self.n_states + c]
    }

    pub fn block_mut(&mut self, a: usize, c: usize) -> &mut DMatrix<Complex<T>> {
        &mut self.blocks[a * self.n_states + c]
    }

    /// Contract against an initial condition: `sum_{a,c} p0(a) block(a,c) v`.
    fn contract(&self, init: &InitialCondition<T>) -> DVector<Complex<T>> {
        let mut scratch = ContractScratch::new(self.dim);
        self.contract_with(init, &mut scratch)
    }

    /// [`BlockGrid::contract`] with caller-owned scratch, so per-step
    /// emission inside the solvers does not allocate beyond the output.
    fn contract_with(
        &self,
        init: &InitialCondition<T>,
        scratch: &mut ContractScratch<T>,
    ) -> DVector<Complex<T>> {
        let mut out = DVector::<Complex<T>>::zeros(self.dim);
        let one = Complex::new(T::one(), T::zero());
        let zero = Complex::new(T::zero(), T::zero());
        for a in 0..self.n_states {
            scratch.row_sum.fill(zero);
            for c in 0..self.n_states {
                add_assign_mat(&mut scratch.row_sum, self.block(a, c), one);
            }
            scratch.tmp.gemv(one, &scratch.row_sum, init.payload(), zero);
            let w = Complex::new(init.weights()[a], T::zero());
            for (o, t) in out.iter_mut().zip(scratch.tmp.iter()) {
                *o += *t * w;
            }
        }
        out
    }
}

struct ContractScratch<T: Real> {
    row_sum: DMatrix<Complex<T>>,
    tmp: DVector<Complex<T>>,
}

impl<T: Real> ContractScratch<T> {
    fn new(dim: usize) -> Self {
        Self {
            row_sum: DMatrix::zeros(dim, dim),
            tmp: DVector::zeros(dim),
        }
    }
}

/// `y += alpha * x`, elementwise over equally shaped matrices.
#[inline]
fn add_assign_mat<T: Real>(
    y: &mut DMatrix<Complex<T>>,
    x: &DMatrix<Complex<T>>,
    alpha: Complex<T>,
) {
    for (yv, xv) in y.as_mut_slice().iter_mut().zip(x.as_slice()) {
        *yv += *xv * alpha;
    }
}

/// The full Green's-function block sequence `G_{0,j}` for `j = 0..=n`.
///
/// Materializing this costs `O(n N^2 d^2)` memory; the iterative solver keeps
/// only two grids alive, so request the full series only when the blocks
/// themselves are needed.
#[derive(Debug, Clone)]
pub struct GreenBlockSeries<T: Real> {
    delta: T,
    grids: Vec<BlockGrid<T>>,
}

impl<T: Real> GreenBlockSeries<T> {
    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn n_steps(&self) -> usize {
        self.grids.len().saturating_sub(1)
    }

    pub fn grid(&self, j: usize) -> &BlockGrid<T> {
        &self.grids[j]
    }

    pub fn grids(&self) -> &[BlockGrid<T>] {
        &self.grids
    }
}

struct StepBuffers<T: Real> {
    cur: BlockGrid<T>,
    next: BlockGrid<T>,
    qbuf: BlockGrid<T>,
}

/// One application of the transfer map, `cur -> next`.
fn step_grid<T: Real>(
    p: &TransitionMatrix<T>,
    props: &StepPropagatorSet<T>,
    buf: &mut StepBuffers<T>,
) {
    let n = buf.cur.n_states();
    let one = Complex::new(T::one(), T::zero());
    let zero = Complex::new(T::zero(), T::zero());
    let trapezoid = props.scheme() == Scheme::Trapezoid;
    if trapezoid {
        for b in 0..n {
            for c in 0..n {
                let src = buf.cur.block(b, c);
                buf.qbuf
                    .block_mut(b, c)
                    .gemm(one, props.right(b), src, zero);
            }
        }
    }
    let src = if trapezoid { &buf.qbuf } else { &buf.cur };
    for a in 0..n {
        for c in 0..n {
            let mix = buf.next.block_mut(a, c);
            mix.fill(zero);
            for b in 0..n {
                let pab = p.get(a, b);
                if !pab.is_zero() {
                    add_assign_mat(mix, src.block(b, c), Complex::new(pab, T::zero()));
                }
            }
        }
    }
    // next currently holds the mixed grid; finish with the left resolvent,
    // reusing qbuf blocks as scratch.
    for a in 0..n {
        for c in 0..n {
            let scratch = buf.qbuf.block_mut(a, c);
            scratch.copy_from(buf.next.block(a, c));
            buf.next
                .block_mut(a, c)
                .gemm(one, props.left(a), &*scratch, zero);
        }
    }
    std::mem::swap(&mut buf.cur, &mut buf.next);
}

fn check_markov_dims<T: Real>(
    p: &TransitionMatrix<T>,
    props: &StepPropagatorSet<T>,
    init: &InitialCondition<T>,
    n_steps: usize,
) -> Result<()> {
    if n_steps == 0 {
        return Err(Error::InvalidParameter("n_steps must be >= 1".into()));
    }
    if props.n_states() != p.n_states() {
        return Err(Error::DimensionMismatch(format!(
            "transition matrix has {} states but propagators have {}",
            p.n_states(),
            props.n_states()
        )));
    }
    if init.n_states() != p.n_states() {
        return Err(Error::DimensionMismatch(format!(
            "initial weights cover {} states but the chain has {}",
            init.n_states(),
            p.n_states()
        )));
    }
    if init.dim() != props.dim() {
        return Err(Error::DimensionMismatch(format!(
            "payload dimension {} does not match generator dimension {}",
            init.dim(),
            props.dim()
        )));
    }
    Ok(())
}

/// Evolve the Markov transfer-matrix recursion for `n_steps` steps, emitting
/// the contracted observable at every time point.
///
/// Only the current and previous block grids are kept alive; memory is
/// `O(N^2 d^2)` independent of `n_steps`.
pub fn evolve_markov<T: Real>(
    p: &TransitionMatrix<T>,
    props: &StepPropagatorSet<T>,
    init: &InitialCondition<T>,
    n_steps: usize,
) -> Result<SignalSeries<T>> {
    check_markov_dims(p, props, init, n_steps)?;
    let (n, d) = (p.n_states(), props.dim());
    let mut buf = StepBuffers {
        cur: BlockGrid::identity(n, d),
        next: BlockGrid::zeros(n, d),
        qbuf: BlockGrid::zeros(n, d),
    };
    let mut values = Vec::with_capacity(n_steps + 1);
    values.push(buf.cur.contract(init));
    for _ in 0..n_steps {
        step_grid(p, props, &mut buf);
        values.push(buf.cur.contract(init));
    }
    Ok(SignalSeries::new(props.kind(), props.delta(), values))
}

/// Like [`evolve_markov`], but materializes the full block sequence.
pub fn evolve_markov_blocks<T: Real>(
    p: &TransitionMatrix<T>,
    props: &StepPropagatorSet<T>,
    init: &InitialCondition<T>,
    n_steps: usize,
) -> Result<GreenBlockSeries<T>> {
    check_markov_dims(p, props, init, n_steps)?;
    let (n, d) = (p.n_states(), props.dim());
    let mut buf = StepBuffers {
        cur: BlockGrid::identity(n, d),
        next: BlockGrid::zeros(n, d),
        qbuf: BlockGrid::zeros(n, d),
    };
    let mut grids = Vec::with_capacity(n_steps + 1);
    grids.push(buf.cur.clone());
    for _ in 0..n_steps {
        step_grid(p, props, &mut buf);
        grids.push(buf.cur.clone());
    }
    Ok(GreenBlockSeries {
        delta: props.delta(),
        grids,
    })
}

/// Contract a materialized block series into a signal series.
pub fn contract_observable<T: Real>(
    series: &GreenBlockSeries<T>,
    init: &InitialCondition<T>,
    kind: GeneratorKind,
) -> Result<SignalSeries<T>> {
    let first = series
        .grids
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty block series".into()))?;
    if init.n_states() != first.n_states() || init.dim() != first.dim() {
        return Err(Error::DimensionMismatch(format!(
            "initial condition ({} states, dim {}) does not match blocks ({} states, dim {})",
            init.n_states(),
            init.dim(),
            first.n_states(),
            first.dim()
        )));
    }
    let values = series.grids.iter().map(|g| g.contract(init)).collect();
    Ok(SignalSeries::new(kind, series.delta, values))
}

/// Causal free-propagator blocks `G0_{i,j}` for `0 <= i <= j <= n`.
///
/// Each block is a real `N x N` kernel giving the bare occupation transfer
/// from state at time `i delta` (row) to state at time `j delta` (column).
/// Diagonal blocks are the identity; blocks below the diagonal are zero by
/// causality and may not be supplied nonzero.
#[derive(Debug, Clone)]
pub struct FreeBlockSeries<T: Real> {
    n_steps: usize,
    n_states: usize,
    blocks: Vec<DMatrix<T>>,
}

impl<T: Real> FreeBlockSeries<T> {
    /// Row-major position over the upper triangle including the diagonal.
    fn tri_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= j && j <= self.n_steps);
        let n = self.n_steps + 1;
        i * n + j - i * (i + 1) / 2
    }

    /// Markov free blocks: `G0_{i,j} = P^{j-i}`.
    pub fn from_markov(p: &TransitionMatrix<T>, n_steps: usize) -> Self {
        let n_states = p.n_states();
        let mut powers = Vec::with_capacity(n_steps + 1);
        powers.push(DMatrix::identity(n_states, n_states));
        for l in 1..=n_steps {
            let next = &powers[l - 1] * p.entries();
            powers.push(next);
        }
        let mut blocks = Vec::new();
        for i in 0..=n_steps {
            for j in i..=n_steps {
                blocks.push(powers[j - i].clone());
            }
        }
        Self {
            n_steps,
            n_states,
            blocks,
        }
    }

    /// Build from a closure over causal index pairs `(i, j)`, `i <= j`.
    /// Diagonal blocks must come back as the identity.
    pub fn from_fn(
        n_steps: usize,
        n_states: usize,
        f: impl Fn(usize, usize) -> DMatrix<T>,
    ) -> Result<Self> {
        let mut blocks = Vec::new();
        for i in 0..=n_steps {
            for j in i..=n_steps {
                let b = f(i, j);
                if b.nrows() != n_states || b.ncols() != n_states {
                    return Err(Error::DimensionMismatch(format!(
                        "free block ({i}, {j}) must be {n_states}x{n_states}"
                    )));
                }
                if i == j && !is_identity(&b) {
                    return Err(Error::NonIdentityDiagonal { i });
                }
                blocks.push(b);
            }
        }
        Ok(Self {
            n_steps,
            n_states,
            blocks,
        })
    }

    /// Build from explicit `(i, j, block)` entries. Unsupplied off-diagonal
    /// blocks default to zero; unsupplied diagonal blocks default to the
    /// identity. A nonzero block with `i > j` is rejected as acausal.
    pub fn from_entries(
        n_steps: usize,
        n_states: usize,
        entries: impl IntoIterator<Item = (usize, usize, DMatrix<T>)>,
    ) -> Result<Self> {
        let mut blocks = Vec::new();
        for i in 0..=n_steps {
            for j in i..=n_steps {
                blocks.push(if i == j {
                    DMatrix::identity(n_states, n_states)
                } else {
                    DMatrix::zeros(n_states, n_states)
                });
            }
        }
        let mut series = Self {
            n_steps,
            n_states,
            blocks,
        };
        for (i, j, b) in entries {
            if b.nrows() != n_states || b.ncols() != n_states {
                return Err(Error::DimensionMismatch(format!(
                    "free block ({i}, {j}) must be {n_states}x{n_states}"
                )));
            }
            if i > j {
                if b.iter().any(|v| !v.is_zero()) {
                    return Err(Error::AcausalInput { i, j });
                }
                continue;
            }
            if j > n_steps {
                return Err(Error::IndexOutOfRange {
                    index: j,
                    len: n_steps + 1,
                });
            }
            if i == j && !is_identity(&b) {
                return Err(Error::NonIdentityDiagonal { i });
            }
            let idx = series.tri_index(i, j);
            series.blocks[idx] = b;
        }
        Ok(series)
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    /// Block for `i <= j`.
    pub fn block(&self, i: usize, j: usize) -> &DMatrix<T> {
        &self.blocks[self.tri_index(i, j)]
    }
}

fn is_identity<T: Real>(m: &DMatrix<T>) -> bool {
    (0..m.nrows()).all(|r| {
        (0..m.ncols()).all(|c| {
            let v = m[(r, c)];
            if r == c {
                (v - T::one()).abs() <= T::stochastic_tol()
            } else {
                v.abs() <= T::stochastic_tol()
            }
        })
    })
}

/// Solve the block upper-triangular Dyson system for the first block row and
/// contract it to a signal, by causal back-substitution.
///
/// Cost is `O(n^2)` block operations instead of the `O((n N d)^3)` of a
/// generic inverse; `n` is the number of steps. With Markov blocks the result
/// coincides with [`evolve_markov`] under the rectangle scheme.
pub fn solve_dense<T: Real>(
    free: &FreeBlockSeries<T>,
    gens: &GeneratorSet<T>,
    delta: T,
    init: &InitialCondition<T>,
) -> Result<SignalSeries<T>> {
    let n_states = free.n_states();
    let d = gens.dim();
    if gens.n_states() != n_states {
        return Err(Error::DimensionMismatch(format!(
            "free blocks cover {} states but generator set has {}",
            n_states,
            gens.n_states()
        )));
    }
    if init.n_states() != n_states || init.dim() != d {
        return Err(Error::DimensionMismatch(
            "initial condition does not match free blocks / generators".into(),
        ));
    }
    if delta <= T::zero() {
        return Err(Error::InvalidParameter(
            "time step must be positive".into(),
        ));
    }
    // Per-state resolvents (I - delta A)^{-1}, shared by every time index.
    let props = gens
        .step_propagators(delta, Scheme::Rectangle)
        .map_err(|e| match e {
            Error::SingularResolvent { .. } => Error::SingularSystem,
            other => other,
        })?;
    let n = free.n_steps();
    let one = Complex::new(T::one(), T::zero());
    let zero = Complex::new(T::zero(), T::zero());
    let deltac = Complex::new(delta, T::zero());

    // weighted[k][b][c] = A_b * G_{0,k}[b][c], reused by every later j.
    let apply_generators = |grid: &BlockGrid<T>| -> BlockGrid<T> {
        let mut w = BlockGrid::zeros(n_states, d);
        for b in 0..n_states {
            for c in 0..n_states {
                w.block_mut(b, c)
                    .gemm(one, gens.generator(b), grid.block(b, c), zero);
            }
        }
        w
    };
    let first = BlockGrid::identity(n_states, d);
    let mut weighted: Vec<BlockGrid<T>> = Vec::with_capacity(n + 1);
    weighted.push(apply_generators(&first));

    let mut values = Vec::with_capacity(n + 1);
    values.push(first.contract(init));

    for j in 1..=n {
        let mut rhs = BlockGrid::zeros(n_states, d);
        // Free term: the bare kernel G0_{0,j} lifted to the identity in the
        // payload space.
        let g0 = free.block(0, j);
        for a in 0..n_states {
            for c in 0..n_states {
                let scale = g0[(a, c)];
                if !scale.is_zero() {
                    let blk = rhs.block_mut(a, c);
                    for k in 0..d {
                        blk[(k, k)] += Complex::new(scale, T::zero());
                    }
                }
            }
        }
        // Interaction terms over interior times.
        for k in 1..j {
            let gk = free.block(k, j);
            for a in 0..n_states {
                for b in 0..n_states {
                    let scale = gk[(a, b)];
                    if scale.is_zero() {
                        continue;
                    }
                    let alpha = Complex::new(scale, T::zero()) * deltac;
                    for c in 0..n_states {
                        add_assign_mat(rhs.block_mut(a, c), weighted[k].block(b, c), alpha);
                    }
                }
            }
        }
        // Left resolvent closes the diagonal term.
        let mut g = BlockGrid::zeros(n_states, d);
        for a in 0..n_states {
            for c in 0..n_states {
                g.block_mut(a, c)
                    .gemm(one, props.left(a), rhs.block(a, c), zero);
            }
        }
        values.push(g.contract(init));
        weighted.push(apply_generators(&g));
    }

    Ok(SignalSeries::new(gens.kind(), delta, values))
}
