//! CSV results, per-iteration traces and the aggregate table.

use std::fmt::Write as _;
use std::io::Write;

use ripm_core::SolveReport;

use crate::error::Result;
use crate::runner::{Summary, TrialResult};

pub const RESULTS_HEADER: [&str; 10] = [
    "problem",
    "dims",
    "noise",
    "seed",
    "trial",
    "status",
    "iters",
    "time_s",
    "kkt_residual",
    "error",
];

/// Shortest decimal that parses back to the same `f64`; empty for `NaN`.
pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else if v != 0.0 && (v.abs() < 1e-4 || v.abs() >= 1e16) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

pub fn write_results<W: Write>(out: W, results: &[TrialResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULTS_HEADER)?;
    for r in results {
        w.write_record([
            r.spec.problem.as_str().to_owned(),
            r.spec.dims_label(),
            fmt_float(r.spec.noise),
            r.spec.seed.to_string(),
            r.trial_index.to_string(),
            r.status.as_str().to_owned(),
            r.outer_iters.to_string(),
            fmt_float(r.wall_time_seconds),
            fmt_float(r.final_kkt_residual),
            r.final_error.map(fmt_float).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// One row per visited iterate; step columns are empty on the last row.
pub fn write_trace<W: Write>(out: W, report: &SolveReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "k",
        "f_norm",
        "kkt_residual",
        "time_s",
        "alpha",
        "sigma",
        "mu",
        "backtracks",
        "cr_iters",
        "cr_residual",
    ])?;
    for rec in &report.history {
        let mut row = vec![
            rec.k.to_string(),
            fmt_float(rec.f_norm),
            fmt_float(rec.kkt_residual),
            fmt_float(rec.time),
        ];
        match rec.step {
            Some(s) => row.extend([
                fmt_float(s.alpha),
                fmt_float(s.sigma),
                fmt_float(s.mu),
                s.backtracks.to_string(),
                s.cr_iterations.to_string(),
                fmt_float(s.cr_residual),
            ]),
            None => row.extend(std::iter::repeat_n(String::new(), 6)),
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

fn opt(v: f64, prec: usize) -> String {
    if v.is_nan() {
        "-".into()
    } else {
        format!("{v:.prec$}")
    }
}

/// Fixed-width table with one line per spec.
pub fn summary_table(summaries: &[Summary]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<9} {:<9} {:>6} {:>8} {:>10} {:>9} {:>8} {:>11} {:>10}  violations",
        "problem", "dims", "noise", "success", "time_s", "iters", "median", "total_s", "error"
    );
    for m in summaries {
        let violations = if m.violations.is_empty() {
            "-".to_owned()
        } else {
            m.violations.iter().map(|(k, n)| format!("{k}:{n}")).collect::<Vec<_>>().join(",")
        };
        let _ = writeln!(
            s,
            "{:<9} {:<9} {:>6} {:>8} {:>10} {:>9} {:>8} {:>11.3} {:>10}  {}",
            m.spec.problem.as_str(),
            m.spec.dims_label(),
            m.spec.noise,
            format!("{}/{}", m.successes, m.trials),
            opt(m.mean_time, 3),
            opt(m.mean_iters, 1),
            opt(m.median_iters, 1),
            m.total_time,
            m.mean_error.map_or("-".into(), |e| format!("{e:.2e}")),
            violations,
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_in_short_form() {
        for v in [0.0, 1.0, 0.001, 1e-8, 3.0517578125e-5, 123456.75, 0.1 + 0.2, 2.5e17, -4e-9] {
            let s = fmt_float(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
        assert_eq!(fmt_float(1e-8), "1e-8");
        assert_eq!(fmt_float(0.01), "0.01");
        assert_eq!(fmt_float(f64::NAN), "");
    }
}
