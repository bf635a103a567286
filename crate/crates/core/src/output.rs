//! CSV emission and ingestion for signals, ensemble statistics, quantum
//! observables and benchmark tables.
//!
//! Numbers are written with 17 significant digits (`{:.16e}`), enough for an
//! exact `f64` round trip, so rerunning a seeded configuration reproduces the
//! output byte for byte.

use std::io::{self, BufRead, Write};


use crate::bench::BenchmarkPoint;
use crate::dyson::SignalSeries;
use crate::error::{Error, Result};
use crate::generators::GeneratorKind;
use crate::montecarlo::EnsembleStats;
use crate::quantum::{
    correlation_of, hermiticity_deviation, trace_deviation, unvec_density, von_neumann_entropy_of,
};
use crate::scalar::Real;

fn fmt<T: Real>(v: T) -> String {
    format!("{:.16e}", v.to_f64().unwrap_or(f64::NAN))
}

/// Column labels for the full stored value of a signal (the scalar case
/// carries both quadratures; the others match the observable layout).
fn signal_labels<T: Real>(series: &SignalSeries<T>) -> Vec<String> {
    match series.kind() {
        GeneratorKind::Scalar => vec!["re".into(), "im".into()],
        _ => series.observable_labels(),
    }
}

fn signal_row<T: Real>(series: &SignalSeries<T>, j: usize) -> Vec<T> {
    match series.kind() {
        GeneratorKind::Scalar => {
            let v = series.value(j)[0];
            vec![v.re, v.im]
        }
        _ => series.observable_components(j),
    }
}

/// Write a signal series as CSV: time column, then the value columns.
pub fn write_signal_csv<T: Real, W: Write>(series: &SignalSeries<T>, w: &mut W) -> io::Result<()> {
    writeln!(w, "t,{}", signal_labels(series).join(","))?;
    for j in 0..series.len() {
        let row: Vec<String> = signal_row(series, j).into_iter().map(fmt).collect();
        writeln!(w, "{},{}", fmt(series.time(j)), row.join(","))?;
    }
    Ok(())
}

/// Write ensemble statistics as CSV: time, mean components, sigma components.
pub fn write_stats_csv<T: Real, W: Write>(stats: &EnsembleStats<T>, w: &mut W) -> io::Result<()> {
    let labels = stats.mean().observable_labels();
    let header: Vec<String> = labels
        .iter()
        .map(|l| format!("mean_{l}"))
        .chain(labels.iter().map(|l| format!("sigma_{l}")))
        .collect();
    writeln!(w, "t,{}", header.join(","))?;
    for j in 0..stats.mean().len() {
        let mut row: Vec<String> = stats
            .mean()
            .observable_components(j)
            .into_iter()
            .map(fmt)
            .collect();
        row.extend(stats.sigma()[j].iter().map(|&s| fmt(s)));
        writeln!(w, "{},{}", fmt(stats.mean().time(j)), row.join(","))?;
    }
    Ok(())
}

/// Write the derived quantum observables of a Liouvillian-kind series:
/// time, correlation, entropy, trace deviation, Hermiticity deviation.
pub fn write_quantum_observables_csv<T: Real, W: Write>(
    series: &SignalSeries<T>,
    w: &mut W,
) -> Result<()> {
    if series.kind() != GeneratorKind::Liouvillian {
        return Err(Error::DimensionMismatch(
            "quantum observables need a Liouvillian-kind series".into(),
        ));
    }
    writeln!(w, "t,correlation,entropy,trace_dev,herm_dev").map_err(io_to_error)?;
    for j in 0..series.len() {
        let rho = unvec_density(series.value(j))?;
        let corr = correlation_of(&rho);
        let entropy = von_neumann_entropy_of(&rho)?;
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt(series.time(j)),
            fmt(corr),
            fmt(entropy),
            fmt(trace_deviation(&rho)),
            fmt(hermiticity_deviation(&rho)),
        )
        .map_err(io_to_error)?;
    }
    Ok(())
}

/// Write a benchmark table: delta, n_steps, runtime_s, mre.
pub fn write_bench_csv<T: Real, W: Write>(points: &[BenchmarkPoint<T>], w: &mut W) -> io::Result<()> {
    writeln!(w, "delta,n_steps,runtime_s,mre")?;
    for p in points {
        writeln!(
            w,
            "{},{},{:.6e},{}",
            fmt(p.delta),
            p.n_steps,
            p.runtime_s,
            fmt(p.mre)
        )?;
    }
    Ok(())
}

fn io_to_error(e: io::Error) -> Error {
    Error::InvalidParameter(format!("write failed: {e}"))
}

/// A parsed signal CSV reduced to observable components: for scalar files
/// only the real quadrature is kept, matching the statistics layout.
pub struct ParsedSignal {
    pub times: Vec<f64>,
    pub components: Vec<Vec<f64>>,
    pub labels: Vec<String>,
}

/// A parsed statistics CSV.
pub struct ParsedStats {
    pub times: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub sigmas: Vec<Vec<f64>>,
    pub labels: Vec<String>,
}

fn parse_rows<R: BufRead>(r: &mut R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidParameter("csv: empty file".into()))?
        .map_err(|e| Error::InvalidParameter(format!("csv: {e}")))?;
    let cols: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    if cols.first().map(String::as_str) != Some("t") {
        return Err(Error::InvalidParameter(
            "csv: first column must be `t`".into(),
        ));
    }
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::InvalidParameter(format!("csv: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidParameter(format!("csv row {}: {e}", k + 2)))
            })
            .collect::<Result<_>>()?;
        if vals.len() != cols.len() {
            return Err(Error::InvalidParameter(format!(
                "csv row {}: {} fields, header has {}",
                k + 2,
                vals.len(),
                cols.len()
            )));
        }
        rows.push(vals);
    }
    Ok((cols, rows))
}

/// Parse a signal CSV written by [`write_signal_csv`].
pub fn parse_signal_csv<R: BufRead>(r: &mut R) -> Result<ParsedSignal> {
    let (cols, rows) = parse_rows(r)?;
    let value_labels = &cols[1..];
    // Scalar signals store both quadratures but the observable is Re.
    let scalar = value_labels == ["re", "im"];
    let keep: Vec<usize> = if scalar {
        vec![1]
    } else {
        (1..cols.len()).collect()
    };
    let labels = keep.iter().map(|&k| cols[k].clone()).collect();
    let times = rows.iter().map(|r| r[0]).collect();
    let components = rows
        .iter()
        .map(|r| keep.iter().map(|&k| r[k]).collect())
        .collect();
    Ok(ParsedSignal {
        times,
        components,
        labels,
    })
}

/// Parse a statistics CSV written by [`write_stats_csv`].
pub fn parse_stats_csv<R: BufRead>(r: &mut R) -> Result<ParsedStats> {
    let (cols, rows) = parse_rows(r)?;
    let n_value_cols = cols.len() - 1;
    if n_value_cols == 0 || n_value_cols % 2 != 0 {
        return Err(Error::InvalidParameter(
            "csv: statistics file needs matching mean/sigma columns".into(),
        ));
    }
    let half = n_value_cols / 2;
    for k in 0..half {
        let mean_label = &cols[1 + k];
        let sigma_label = &cols[1 + half + k];
        let (Some(m), Some(s)) = (
            mean_label.strip_prefix("mean_"),
            sigma_label.strip_prefix("sigma_"),
        ) else {
            return Err(Error::InvalidParameter(format!(
                "csv: expected mean_/sigma_ pair, got {mean_label}/{sigma_label}"
            )));
        };
        if m != s {
            return Err(Error::InvalidParameter(format!(
                "csv: mismatched component labels {m} vs {s}"
            )));
        }
    }
    let labels = (0..half)
        .map(|k| cols[1 + k].trim_start_matches("mean_").to_string())
        .collect();
    let times = rows.iter().map(|r| r[0]).collect();
    let means = rows.iter().map(|r| r[1..1 + half].to_vec()).collect();
    let sigmas = rows.iter().map(|r| r[1 + half..].to_vec()).collect();
    Ok(ParsedStats {
        times,
        means,
        sigmas,
        labels,
    })
}

/// Uniform grid step of a parsed time column.
pub fn grid_step(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::GridMismatch(
            "need at least two time points".into(),
        ));
    }
    let dt = times[1] - times[0];
    if dt <= 0.0 {
        return Err(Error::GridMismatch("non-increasing time column".into()));
    }
    for w in times.windows(2) {
        let step = w[1] - w[0];
        if (step - dt).abs() > 1e-9 * dt.max(1.0) {
            return Err(Error::GridMismatch("non-uniform time column".into()));
        }
    }
    Ok(dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyson::{evolve_markov, InitialCondition};
    use crate::generators::{GeneratorSet, Scheme};
    use crate::markov::TransitionMatrix;
    use approx::assert_abs_diff_eq;
    use std::io::BufReader;

    fn sample_series() -> SignalSeries<f64> {
        let p = TransitionMatrix::uncorrelated_jump(3, 1.0, 0.01).unwrap();
        let gens = GeneratorSet::scalar(&[-0.5, 1.0, 2.0]).unwrap();
        let props = gens.step_propagators(0.01, Scheme::Trapezoid).unwrap();
        let init = InitialCondition::uniform_scalar(3);
        evolve_markov(&p, &props, &init, 20).unwrap()
    }

    #[test]
    fn signal_csv_round_trip_is_exact() {
        let series = sample_series();
        let mut buf = Vec::new();
        write_signal_csv(&series, &mut buf).unwrap();
        let parsed = parse_signal_csv(&mut BufReader::new(buf.as_slice())).unwrap();
        assert_eq!(parsed.times.len(), series.len());
        assert_eq!(parsed.labels, vec!["re".to_string()]);
        for j in 0..series.len() {
            assert_eq!(parsed.times[j], series.time(j));
            assert_eq!(parsed.components[j][0], series.value(j)[0].re);
        }
    }

    #[test]
    fn stats_csv_round_trip_is_exact() {
        let p = TransitionMatrix::uncorrelated_jump(3, 1.0, 0.01).unwrap();
        let gens = GeneratorSet::scalar(&[-0.5, 1.0, 2.0]).unwrap();
        let props = gens.step_propagators(0.01, Scheme::Exact).unwrap();
        let init = InitialCondition::uniform_scalar(3);
        let stats =
            crate::montecarlo::ensemble_average(&p, &props, &init, 15, 40, 5).unwrap();
        let mut buf = Vec::new();
        write_stats_csv(&stats, &mut buf).unwrap();
        let parsed = parse_stats_csv(&mut BufReader::new(buf.as_slice())).unwrap();
        assert_eq!(parsed.means.len(), 16);
        for j in 0..16 {
            assert_eq!(parsed.means[j][0], stats.mean().value(j)[0].re);
            assert_eq!(parsed.sigmas[j][0], stats.sigma()[j][0]);
        }
        assert_abs_diff_eq!(grid_step(&parsed.times).unwrap(), 0.01, epsilon = 1e-15);
    }

    #[test]
    fn quantum_observables_header_and_bounds() {
        let sys = crate::quantum::build_spin_pair::<f64>();
        let p = TransitionMatrix::uncorrelated_jump(4, 1.0, 0.01).unwrap();
        let props = sys
            .generator_set()
            .step_propagators(0.01, Scheme::Trapezoid)
            .unwrap();
        let init = sys.initial_condition();
        let series = evolve_markov(&p, &props, &init, 10).unwrap();
        let mut buf = Vec::new();
        write_quantum_observables_csv(&series, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,correlation,entropy,trace_dev,herm_dev"
        );
        for line in lines {
            let f: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
            assert!(f[1] <= 1.0 + 1e-9 && f[1] >= -1.0 - 1e-9);
            assert!(f[2] >= -1e-9 && f[2] <= 4.0_f64.ln() + 1e-9);
            assert!(f[3] < 1e-9 && f[4] < 1e-9);
        }
    }

    #[test]
    fn malformed_csv_is_rejected() {
        let text = "time,re,im\n0,1,0\n";
        assert!(parse_signal_csv(&mut BufReader::new(text.as_bytes())).is_err());
        let text = "t,re,im\n0,1\n";
        assert!(parse_signal_csv(&mut BufReader::new(text.as_bytes())).is_err());
    }

    #[test]
    fn nonuniform_grid_rejected() {
        assert!(grid_step(&[0.0, 0.1, 0.3]).is_err());
        assert!(grid_step(&[0.0, 0.1, 0.2]).is_ok());
    }
}
