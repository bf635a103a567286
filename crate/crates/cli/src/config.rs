//! Configuration parsing and validation.
//!
//! A run is described by a single JSON document with a `kind` discriminator.
//! Complex numbers appear as `[re, im]` pairs. All cross-field dimension
//! checks happen here so the solvers only ever see consistent inputs.

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use spectraldiff::bench::Problem;
use spectraldiff::dyson::InitialCondition;
use spectraldiff::quantum::{build_spin_pair, vec_density};
use spectraldiff::{GeneratorSet, Scheme, TransitionMatrix};

use crate::error::CliError;

/// Raw JSON schema of a run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub kind: String,
    #[serde(default, skip_serializing_if = "GeneratorSpec::is_empty")]
    pub generator: GeneratorSpec,
    pub markov: MarkovSpec,
    pub delta: f64,
    pub n_steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialSpec>,
    pub solver: String,
    #[serde(default)]
    pub mc: McSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequencies: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axes: Option<Vec<[f64; 3]>>,
    /// Hamiltonians as nested rows of `[re, im]` pairs (Liouvillian route).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonians: Option<Vec<Vec<Vec<[f64; 2]>>>>,
    /// Raw complex generator matrices as nested rows of `[re, im]` pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrices: Option<Vec<Vec<Vec<[f64; 2]>>>>,
}

impl GeneratorSpec {
    pub fn is_empty(&self) -> bool {
        self.frequencies.is_none()
            && self.axes.is_none()
            && self.hamiltonians.is_none()
            && self.matrices.is_none()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MarkovSpec {
    /// Uncorrelated jumps at frequency `nu` among all states.
    Uncorrelated {
        nu: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        absorbing: Option<usize>,
    },
    /// An explicit row-stochastic matrix.
    Matrix {
        entries: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        absorbing: Option<usize>,
    },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    /// Rotation: `[x, y, z]`. Custom: a length-`d` list of `[re, im]` pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vector: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complex_vector: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSpec {
    #[serde(default = "default_n_traj")]
    pub n_traj: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_scheme")]
    pub scheme: String,
}

fn default_n_traj() -> usize {
    100
}

fn default_scheme() -> String {
    "exact".into()
}

impl Default for McSpec {
    fn default() -> Self {
        Self {
            n_traj: default_n_traj(),
            seed: 0,
            scheme: default_scheme(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
}

/// Which problem family a run belongs to; decides payload defaults and
/// which output files are emitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Scalar,
    Rotation,
    SpinPair,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    DysonRect,
    DysonTrapz,
    Dense,
    Mc,
}

impl SolverChoice {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "dyson_rect" => Ok(Self::DysonRect),
            "dyson_trapz" => Ok(Self::DysonTrapz),
            "dense" => Ok(Self::Dense),
            "mc" => Ok(Self::Mc),
            other => Err(CliError::validation(
                "solver",
                format!("unknown solver `{other}` (expected dyson_rect, dyson_trapz, dense or mc)"),
            )),
        }
    }
}

pub fn parse_scheme(s: &str) -> Result<Scheme, CliError> {
    match s {
        "rect" => Ok(Scheme::Rectangle),
        "trapz" => Ok(Scheme::Trapezoid),
        "exact" => Ok(Scheme::Exact),
        other => Err(CliError::validation(
            "mc.scheme",
            format!("unknown scheme `{other}` (expected rect, trapz or exact)"),
        )),
    }
}

/// A fully validated run: the core problem plus orchestration choices.
pub struct RunConfig {
    pub problem: Problem<f64>,
    pub kind: ProblemKind,
    pub solver: SolverChoice,
    pub mc_n_traj: usize,
    pub mc_seed: u64,
    pub mc_scheme: Scheme,
    pub out_dir: Option<PathBuf>,
}

fn complex_matrix(
    rows: &[Vec<[f64; 2]>],
    field: &str,
) -> Result<DMatrix<Complex64>, CliError> {
    let d = rows.len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(CliError::validation(field, "matrix must be square"));
    }
    Ok(DMatrix::from_fn(d, d, |r, c| {
        Complex64::new(rows[r][c][0], rows[r][c][1])
    }))
}

fn build_generators(cfg: &ConfigFile) -> Result<(ProblemKind, GeneratorSet<f64>), CliError> {
    let g = &cfg.generator;
    let too_many = |field: &str| {
        CliError::validation(
            field,
            format!("not allowed for kind `{}`", cfg.kind),
        )
    };
    match cfg.kind.as_str() {
        "scalar" => {
            let freqs = g
                .frequencies
                .as_ref()
                .ok_or_else(|| CliError::validation("generator.frequencies", "required for kind `scalar`"))?;
            if g.axes.is_some() || g.matrices.is_some() || g.hamiltonians.is_some() {
                return Err(too_many("generator"));
            }
            let gens = GeneratorSet::scalar(freqs)
                .map_err(|e| CliError::validation("generator.frequencies", e.to_string()))?;
            Ok((ProblemKind::Scalar, gens))
        }
        "rotation" => {
            let axes = g
                .axes
                .as_ref()
                .ok_or_else(|| CliError::validation("generator.axes", "required for kind `rotation`"))?;
            if g.frequencies.is_some() || g.matrices.is_some() || g.hamiltonians.is_some() {
                return Err(too_many("generator"));
            }
            let gens = GeneratorSet::rotation(axes)
                .map_err(|e| CliError::validation("generator.axes", e.to_string()))?;
            Ok((ProblemKind::Rotation, gens))
        }
        "spin_pair" => {
            if !g.is_empty() {
                return Err(CliError::validation(
                    "generator",
                    "kind `spin_pair` has a built-in generator set",
                ));
            }
            let sys = build_spin_pair::<f64>();
            Ok((ProblemKind::SpinPair, sys.generator_set().clone()))
        }
        "custom" => {
            let source = match (&g.matrices, &g.hamiltonians) {
                (Some(m), None) => {
                    let mats = m
                        .iter()
                        .map(|rows| complex_matrix(rows, "generator.matrices"))
                        .collect::<Result<Vec<_>, _>>()?;
                    GeneratorSet::custom(mats)
                }
                (None, Some(hs)) => {
                    let mats = hs
                        .iter()
                        .map(|rows| complex_matrix(rows, "generator.hamiltonians"))
                        .collect::<Result<Vec<_>, _>>()?;
                    GeneratorSet::liouvillian(&mats)
                }
                _ => {
                    return Err(CliError::validation(
                        "generator",
                        "kind `custom` needs exactly one of `matrices` or `hamiltonians`",
                    ))
                }
            }
            .map_err(|e| CliError::validation("generator", e.to_string()))?;
            Ok((ProblemKind::Custom, source))
        }
        other => Err(CliError::validation(
            "kind",
            format!("unknown kind `{other}` (expected scalar, rotation, spin_pair or custom)"),
        )),
    }
}

fn build_transition(
    spec: &MarkovSpec,
    n_states: usize,
    delta: f64,
) -> Result<TransitionMatrix<f64>, CliError> {
    let p = match spec {
        MarkovSpec::Uncorrelated { nu, absorbing } => {
            let p = TransitionMatrix::uncorrelated_jump(n_states, *nu, delta)
                .map_err(|e| CliError::validation("markov.nu", e.to_string()))?;
            match absorbing {
                Some(k) => p
                    .with_absorbing_state(*k)
                    .map_err(|e| CliError::validation("markov.absorbing", e.to_string()))?,
                None => p,
            }
        }
        MarkovSpec::Matrix { entries, absorbing } => {
            let p = TransitionMatrix::from_rows(entries)
                .map_err(|e| CliError::validation("markov.entries", e.to_string()))?;
            if p.n_states() != n_states {
                return Err(CliError::validation(
                    "markov.entries",
                    format!(
                        "matrix covers {} states but the generator set has {n_states} \
                         (check generator.frequencies/axes/matrices)",
                        p.n_states()
                    ),
                ));
            }
            match absorbing {
                Some(k) => p
                    .with_absorbing_state(*k)
                    .map_err(|e| CliError::validation("markov.absorbing", e.to_string()))?,
                None => p,
            }
        }
    };
    Ok(p)
}

fn build_initial(
    cfg: &ConfigFile,
    kind: ProblemKind,
    n_states: usize,
    dim: usize,
) -> Result<InitialCondition<f64>, CliError> {
    let spec = cfg.initial.clone().unwrap_or_default();
    let payload: DVector<Complex64> = match kind {
        ProblemKind::Scalar => {
            if spec.vector.is_some() || spec.complex_vector.is_some() {
                return Err(CliError::validation(
                    "initial",
                    "scalar runs always start from unit phase; payload is not configurable",
                ));
            }
            DVector::from_element(1, Complex64::new(1.0, 0.0))
        }
        ProblemKind::Rotation => {
            if spec.complex_vector.is_some() {
                return Err(CliError::validation(
                    "initial.complex_vector",
                    "rotation payloads are real; use `vector`",
                ));
            }
            let v = spec.vector.clone().unwrap_or_else(|| vec![1.0, 0.0, 0.0]);
            if v.len() != 3 {
                return Err(CliError::validation(
                    "initial.vector",
                    format!("expected 3 components, got {}", v.len()),
                ));
            }
            DVector::from_iterator(3, v.iter().map(|&x| Complex64::new(x, 0.0)))
        }
        ProblemKind::SpinPair => {
            if spec.vector.is_some() || spec.complex_vector.is_some() {
                return Err(CliError::validation(
                    "initial",
                    "kind `spin_pair` starts from the built-in x-polarized pure state",
                ));
            }
            vec_density(build_spin_pair::<f64>().rho0().matrix())
        }
        ProblemKind::Custom => {
            let v = spec.complex_vector.clone().ok_or_else(|| {
                CliError::validation("initial.complex_vector", "required for kind `custom`")
            })?;
            if v.len() != dim {
                return Err(CliError::validation(
                    "initial.complex_vector",
                    format!("expected {dim} components, got {}", v.len()),
                ));
            }
            DVector::from_iterator(dim, v.iter().map(|p| Complex64::new(p[0], p[1])))
        }
    };
    let init = match spec.weights {
        Some(w) => {
            if w.len() != n_states {
                return Err(CliError::validation(
                    "initial.weights",
                    format!("expected {n_states} weights, got {}", w.len()),
                ));
            }
            InitialCondition::new(w, payload)
                .map_err(|e| CliError::validation("initial.weights", e.to_string()))?
        }
        None => InitialCondition::uniform(n_states, payload)
            .map_err(|e| CliError::validation("initial", e.to_string()))?,
    };
    Ok(init)
}

/// Validate a parsed document into a runnable configuration.
pub fn validate(cfg: &ConfigFile) -> Result<RunConfig, CliError> {
    if !(cfg.delta > 0.0) {
        return Err(CliError::validation(
            "delta",
            format!("time step must be positive, got {}", cfg.delta),
        ));
    }
    if cfg.n_steps == 0 {
        return Err(CliError::validation("n_steps", "must be at least 1"));
    }
    let (kind, gens) = build_generators(cfg)?;
    let n_states = gens.n_states();
    let dim = gens.dim();
    let p = build_transition(&cfg.markov, n_states, cfg.delta)?;
    let init = build_initial(cfg, kind, n_states, dim)?;
    let problem = Problem::new(p, gens, init, cfg.delta, cfg.n_steps)
        .map_err(|e| CliError::validation("(problem)", e.to_string()))?;
    let solver = SolverChoice::parse(&cfg.solver)?;
    if cfg.mc.n_traj == 0 {
        return Err(CliError::validation("mc.n_traj", "must be at least 1"));
    }
    let mc_scheme = parse_scheme(&cfg.mc.scheme)?;
    Ok(RunConfig {
        problem,
        kind,
        solver,
        mc_n_traj: cfg.mc.n_traj,
        mc_seed: cfg.mc.seed,
        mc_scheme,
        out_dir: cfg.output.as_ref().map(|o| o.dir.clone()),
    })
}

/// Parse a JSON document and validate it.
pub fn parse_config(text: &str) -> Result<(ConfigFile, RunConfig), CliError> {
    let cfg: ConfigFile = serde_json::from_str(text).map_err(CliError::Parse)?;
    let run = validate(&cfg)?;
    Ok((cfg, run))
}

/// Benchmark protocol document: one physical problem rediscretized across a
/// descending list of steps and compared against a pooled Monte Carlo
/// reference, for each jump frequency in `nus`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfigFile {
    pub kind: String,
    #[serde(default, skip_serializing_if = "GeneratorSpec::is_empty")]
    pub generator: GeneratorSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialSpec>,
    pub total_time: f64,
    pub nus: Vec<f64>,
    pub deltas: Vec<f64>,
    pub reference: ReferenceSpec,
    #[serde(default = "default_bench_scheme")]
    pub scheme: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

fn default_bench_scheme() -> String {
    "trapz".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSpec {
    pub batches: usize,
    pub traj_per_batch: usize,
    #[serde(default)]
    pub seed: u64,
}

/// A validated benchmark plan: a problem factory per (nu, delta).
pub struct BenchPlan {
    pub nus: Vec<f64>,
    pub deltas: Vec<f64>,
    pub total_time: f64,
    pub batches: usize,
    pub traj_per_batch: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub out_dir: Option<PathBuf>,
    run_template: ConfigFile,
}

impl BenchPlan {
    /// The problem at jump frequency `nu`, rediscretized at `delta`.
    pub fn problem(&self, nu: f64, delta: f64, n_steps: usize) -> Result<Problem<f64>, CliError> {
        let mut cfg = self.run_template.clone();
        cfg.markov = MarkovSpec::Uncorrelated {
            nu,
            absorbing: None,
        };
        cfg.delta = delta;
        cfg.n_steps = n_steps;
        Ok(validate(&cfg)?.problem)
    }
}

pub fn parse_bench_config(text: &str) -> Result<(BenchConfigFile, BenchPlan), CliError> {
    let cfg: BenchConfigFile = serde_json::from_str(text).map_err(CliError::Parse)?;
    if cfg.deltas.is_empty() {
        return Err(CliError::validation("deltas", "must not be empty"));
    }
    for pair in cfg.deltas.windows(2) {
        if pair[1] >= pair[0] {
            return Err(CliError::validation(
                "deltas",
                "must be strictly descending",
            ));
        }
    }
    if cfg.nus.is_empty() {
        return Err(CliError::validation("nus", "must not be empty"));
    }
    if !(cfg.total_time > 0.0) {
        return Err(CliError::validation("total_time", "must be positive"));
    }
    if cfg.reference.batches * cfg.reference.traj_per_batch < 2 {
        return Err(CliError::validation(
            "reference",
            "needs at least 2 trajectories in total",
        ));
    }
    let scheme = match cfg.scheme.as_str() {
        "rect" => Scheme::Rectangle,
        "trapz" => Scheme::Trapezoid,
        other => {
            return Err(CliError::validation(
                "scheme",
                format!("unknown sweep scheme `{other}` (expected rect or trapz)"),
            ))
        }
    };
    // Validate the template once at the finest step.
    let delta_fine = *cfg.deltas.last().unwrap();
    let n_fine = (cfg.total_time / delta_fine).round() as usize;
    let run_template = ConfigFile {
        kind: cfg.kind.clone(),
        generator: cfg.generator.clone(),
        markov: MarkovSpec::Uncorrelated {
            nu: cfg.nus[0],
            absorbing: None,
        },
        delta: delta_fine,
        n_steps: n_fine.max(1),
        initial: cfg.initial.clone(),
        solver: "dyson_trapz".into(),
        mc: McSpec::default(),
        output: None,
    };
    validate(&run_template)?;
    let plan = BenchPlan {
        nus: cfg.nus.clone(),
        deltas: cfg.deltas.clone(),
        total_time: cfg.total_time,
        batches: cfg.reference.batches,
        traj_per_batch: cfg.reference.traj_per_batch,
        seed: cfg.reference.seed,
        scheme,
        out_dir: cfg.output.as_ref().map(|o| o.dir.clone()),
        run_template,
    };
    Ok((cfg, plan))
}
