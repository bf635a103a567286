//! Subcommand implementations.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use spectraldiff::bench::{convergence_sweep, mre_from_grids, reference_mc, BenchmarkPoint};
use spectraldiff::dyson::{solve_dense, FreeBlockSeries, SignalSeries};
use spectraldiff::output::{
    grid_step, parse_signal_csv, parse_stats_csv, write_bench_csv, write_quantum_observables_csv,
    write_signal_csv, write_stats_csv,
};
use spectraldiff::Scheme;

use crate::config::{
    parse_bench_config, parse_config, ConfigFile, ProblemKind, RunConfig, SolverChoice,
};
use crate::error::CliError;
use crate::manifest::{fingerprint, timestamp, RunManifest};

/// Write-then-rename so partially written files never appear under the
/// final name.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn resolve_out_dir(cli_out: Option<PathBuf>, config_out: Option<PathBuf>) -> PathBuf {
    cli_out
        .or(config_out)
        .or_else(|| std::env::var_os("SPECTRALDIFF_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

pub struct RunOverrides {
    pub solver: Option<String>,
    pub n_traj: Option<usize>,
    pub seed: Option<u64>,
    pub delta: Option<f64>,
    pub steps: Option<usize>,
    pub scheme: Option<String>,
    pub out: Option<PathBuf>,
}

fn apply_overrides(cfg: &mut ConfigFile, ov: &RunOverrides) {
    if let Some(s) = &ov.solver {
        cfg.solver = s.clone();
    }
    if let Some(n) = ov.n_traj {
        cfg.mc.n_traj = n;
    }
    if let Some(s) = ov.seed {
        cfg.mc.seed = s;
    }
    if let Some(d) = ov.delta {
        cfg.delta = d;
    }
    if let Some(n) = ov.steps {
        cfg.n_steps = n;
    }
    if let Some(s) = &ov.scheme {
        cfg.mc.scheme = s.clone();
    }
}

fn load_config(path: &Path, overrides: &RunOverrides) -> Result<(ConfigFile, RunConfig), CliError> {
    let text = fs::read_to_string(path)?;
    let mut cfg: ConfigFile = serde_json::from_str(&text).map_err(CliError::Parse)?;
    apply_overrides(&mut cfg, overrides);
    let run = crate::config::validate(&cfg)?;
    Ok((cfg, run))
}

/// `validate`: parse only, report the shape of the run.
pub fn validate_cmd(path: &Path, quiet: bool) -> Result<(), CliError> {
    let text = fs::read_to_string(path)?;
    let (_, run) = parse_config(&text)?;
    if !quiet {
        println!(
            "ok: {} states, payload dimension {}, {} steps of {}",
            run.problem.transition.n_states(),
            run.problem.generators.dim(),
            run.problem.n_steps,
            run.problem.delta,
        );
    }
    Ok(())
}

/// `run`: execute the configured solver and write CSV outputs plus a
/// manifest.
pub fn run_cmd(path: &Path, overrides: RunOverrides, quiet: bool) -> Result<(), CliError> {
    let started = timestamp();
    let (cfg, run) = load_config(path, &overrides)?;
    let out_dir = resolve_out_dir(overrides.out, run.out_dir.clone());
    fs::create_dir_all(&out_dir)?;

    let mut outputs: Vec<String> = Vec::new();

    // Transition-matrix diagnostic, row-major CSV.
    {
        let mut buf = Vec::new();
        run.problem
            .transition
            .write_csv(&mut buf)
            .map_err(CliError::Io)?;
        let p = out_dir.join("transition_matrix.csv");
        write_atomic(&p, &buf)?;
        outputs.push("transition_matrix.csv".into());
    }

    let signal: SignalSeries<f64> = match run.solver {
        SolverChoice::DysonRect | SolverChoice::DysonTrapz => {
            let scheme = if run.solver == SolverChoice::DysonRect {
                Scheme::Rectangle
            } else {
                Scheme::Trapezoid
            };
            let series = run.problem.solve(scheme)?;
            let mut buf = Vec::new();
            write_signal_csv(&series, &mut buf).map_err(CliError::Io)?;
            write_atomic(&out_dir.join("signal.csv"), &buf)?;
            outputs.push("signal.csv".into());
            series
        }
        SolverChoice::Dense => {
            let free = FreeBlockSeries::from_markov(&run.problem.transition, run.problem.n_steps);
            let series = solve_dense(
                &free,
                &run.problem.generators,
                run.problem.delta,
                &run.problem.init,
            )?;
            let mut buf = Vec::new();
            write_signal_csv(&series, &mut buf).map_err(CliError::Io)?;
            write_atomic(&out_dir.join("signal.csv"), &buf)?;
            outputs.push("signal.csv".into());
            series
        }
        SolverChoice::Mc => {
            let stats = run
                .problem
                .sample(run.mc_scheme, run.mc_n_traj, run.mc_seed)?;
            let mut buf = Vec::new();
            write_stats_csv(&stats, &mut buf).map_err(CliError::Io)?;
            write_atomic(&out_dir.join("stats.csv"), &buf)?;
            outputs.push("stats.csv".into());
            stats.mean().clone()
        }
    };

    // The spin-pair run additionally emits the derived quantum observables.
    if run.kind == ProblemKind::SpinPair {
        let mut buf = Vec::new();
        write_quantum_observables_csv(&signal, &mut buf)?;
        write_atomic(&out_dir.join("observables.csv"), &buf)?;
        outputs.push("observables.csv".into());
    }

    let manifest = RunManifest {
        config_fingerprint: fingerprint(&cfg),
        artifact_version: env!("CARGO_PKG_VERSION").into(),
        seed: run.mc_seed,
        started,
        finished: timestamp(),
        outputs: outputs.clone(),
    };
    let manifest_json =
        serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    write_atomic(&out_dir.join("manifest.json"), &manifest_json)?;

    if !quiet {
        println!(
            "wrote {} file(s) to {}",
            outputs.len() + 1,
            out_dir.display()
        );
        for f in &outputs {
            println!("  {f}");
        }
        println!("  manifest.json");
    }
    Ok(())
}

/// `compare`: mean relative error of a solver CSV against a Monte Carlo
/// statistics CSV.
pub fn compare_cmd(
    test_path: &Path,
    ref_path: &Path,
    out: Option<PathBuf>,
    quiet: bool,
) -> Result<(), CliError> {
    let test_file = fs::File::open(test_path)?;
    let test = parse_signal_csv(&mut BufReader::new(test_file))?;
    let ref_file = fs::File::open(ref_path)?;
    let stats = parse_stats_csv(&mut BufReader::new(ref_file))?;

    if test.labels != stats.labels {
        return Err(CliError::Numeric(spectraldiff::Error::GridMismatch(
            format!(
                "component layouts differ: {:?} vs {:?}",
                test.labels, stats.labels
            ),
        )));
    }
    let ref_delta = grid_step(&stats.times)?;
    let grid: Vec<(f64, Vec<f64>)> = test
        .times
        .iter()
        .cloned()
        .zip(test.components.iter().cloned())
        .collect();
    let mre = mre_from_grids(&grid, ref_delta, &stats.means, &stats.sigmas)?;

    if !quiet {
        println!("MRE = {mre:.6}");
    }
    if let Some(out_path) = out {
        let report = serde_json::json!({
            "test": test_path.display().to_string(),
            "reference": ref_path.display().to_string(),
            "mre": mre,
        });
        write_atomic(&out_path, &serde_json::to_vec_pretty(&report).unwrap())?;
    }
    Ok(())
}

/// `bench`: pooled Monte Carlo reference plus a convergence sweep per jump
/// frequency; emits one CSV table per frequency and a JSON summary.
pub fn bench_cmd(
    path: &Path,
    out: Option<PathBuf>,
    seed_override: Option<u64>,
    quiet: bool,
) -> Result<(), CliError> {
    let text = fs::read_to_string(path)?;
    let (mut cfg, mut plan) = parse_bench_config(&text)?;
    if let Some(seed) = seed_override {
        cfg.reference.seed = seed;
        plan.seed = seed;
    }
    let out_dir = resolve_out_dir(out, plan.out_dir.clone());
    fs::create_dir_all(&out_dir)?;

    let delta_ref = *plan.deltas.last().unwrap();
    let mut outputs = Vec::new();
    let mut summary_rows = Vec::new();

    for (nu_index, &nu) in plan.nus.iter().enumerate() {
        let n_ref = (plan.total_time / delta_ref).round() as usize;
        let ref_problem = plan.problem(nu, delta_ref, n_ref)?;
        // One independent stream block per frequency.
        let seed = plan.seed.wrapping_add(nu_index as u64);
        let reference = reference_mc(&ref_problem, plan.batches, plan.traj_per_batch, seed)?;

        let factory = |delta: f64, n_steps: usize| {
            plan.problem(nu, delta, n_steps)
                .map_err(|e| spectraldiff::Error::InvalidParameter(e.to_string()))
        };
        let points: Vec<BenchmarkPoint<f64>> = convergence_sweep(
            &factory,
            &plan.deltas,
            plan.total_time,
            plan.scheme,
            &reference,
        )?;

        let name = format!("bench_nu{nu}.csv");
        let mut buf = Vec::new();
        write_bench_csv(&points, &mut buf).map_err(CliError::Io)?;
        write_atomic(&out_dir.join(&name), &buf)?;
        outputs.push(name.clone());

        if !quiet {
            println!("nu = {nu}:");
            for p in &points {
                println!(
                    "  delta {:>9.4}  steps {:>8}  runtime {:>10.4} ms  MRE {:.4}",
                    p.delta,
                    p.n_steps,
                    p.runtime_s * 1e3,
                    p.mre
                );
            }
        }
        summary_rows.push(serde_json::json!({
            "nu": nu,
            "table": name,
            "reference_fingerprint": format!("{:016x}", reference.fingerprint()),
            "mre": points.iter().map(|p| p.mre).collect::<Vec<_>>(),
            "runtime_s": points.iter().map(|p| p.runtime_s).collect::<Vec<_>>(),
        }));
    }

    let summary = serde_json::json!({
        "config_fingerprint": fingerprint(&cfg),
        "seed": plan.seed,
        "deltas": plan.deltas,
        "total_time": plan.total_time,
        "scheme": match plan.scheme { Scheme::Rectangle => "rect", Scheme::Trapezoid => "trapz", Scheme::Exact => "exact" },
        "reference": { "batches": plan.batches, "traj_per_batch": plan.traj_per_batch },
        "results": summary_rows,
    });
    write_atomic(
        &out_dir.join("bench_summary.json"),
        &serde_json::to_vec_pretty(&summary).unwrap(),
    )?;
    outputs.push("bench_summary.json".into());

    if !quiet {
        println!("wrote {} file(s) to {}", outputs.len(), out_dir.display());
    }
    Ok(())
}
