use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::{classify, serialize_extended, two_spin_c_ref, Regime, C_REF_TOL};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseRow {
    pub c: f64,
    pub regime: Regime,
    #[serde(serialize_with = "serialize_extended")]
    pub beta: f64,
    #[serde(rename = "B")]
    pub field: f64,
    pub thetas: Vec<f64>,
    pub magnetizations: Vec<f64>,
    pub consensus_check: f64,
    pub n_limits: usize,
}

/// Classification along a grid of `c` values, in grid order. Points at
/// `c_ref` are skipped.
pub fn phase_diagram(kappa: usize, p: f64, c_grid: &[f64]) -> Result<Vec<PhaseRow>> {
    let c_ref = two_spin_c_ref(kappa, p);
    let rows: Vec<Option<PhaseRow>> = c_grid
        .par_iter()
        .map(|&c| {
            if (c - c_ref).abs() <= C_REF_TOL {
                return Ok(None);
            }
            let r = classify(kappa, p, c)?;
            Ok(Some(PhaseRow {
                c,
                regime: r.regime,
                beta: r.beta,
                field: r.field,
                thetas: r.thetas,
                magnetizations: r.magnetizations,
                consensus_check: r.consensus_check,
                n_limits: r.n_limits,
            }))
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// Seventeen significant digits; `inf` / `-inf` for infinities.
pub fn fmt_real(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|&x| fmt_real(x)).collect::<Vec<_>>().join(";")
}

/// CSV with columns `c, regime, beta, B, thetas, magnetizations,
/// consensus_check, n_limits`; list columns are semicolon-joined.
pub fn write_phase_csv<W: Write>(rows: &[PhaseRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Parse(format!("csv output: {e}"));
    w.write_record([
        "c",
        "regime",
        "beta",
        "B",
        "thetas",
        "magnetizations",
        "consensus_check",
        "n_limits",
    ])
    .map_err(io)?;
    for r in rows {
        w.write_record([
            fmt_real(r.c),
            r.regime.to_string(),
            fmt_real(r.beta),
            fmt_real(r.field),
            join(&r.thetas),
            join(&r.magnetizations),
            fmt_real(r.consensus_check),
            r.n_limits.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Parse(format!("csv output: {e}")))?;
    Ok(())
}
