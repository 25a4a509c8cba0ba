//! Regime classification and limiting measures for two-spin consensus
//! conditioning, the general candidate limit set, and phase diagrams.

mod limit_set;
mod phase;

pub use limit_set::{general_limit_set, GeneralLimitSet, LimitDescriptor, LimitMeasure};
pub use phase::{fmt_real, phase_diagram, write_phase_csv, PhaseRow};

use serde::{Serialize, Serializer};

use crate::cavity_bp::{
    beta_crit, field_from_p, ising_cavity_map, ising_fixed_points, IsingParams,
};
use crate::error::{Error, Result};
use crate::spin_measures::{consensus_of_edge, EdgeMeasure, EdgePotential};
use crate::tis_gibbs::{
    ising_consensus, root_magnetization, FreezingKind, FreezingMeasure, TisGibbs,
};

/// Distance to `c_ref` below which conditioning is rejected as degenerate.
pub const C_REF_TOL: f64 = 1e-12;
/// Largest `|β|` searched by the bisection.
pub const BETA_MAX: f64 = 40.0;
/// Samples used to check monotonicity of a bracket.
pub const MONOTONE_SAMPLES: usize = 64;

const MONOTONE_SLACK: f64 = 1e-12;

/// Serializes `±∞` as `"inf"` / `"-inf"`.
pub fn serialize_extended<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_infinite() {
        s.serialize_str(if *x > 0.0 { "inf" } else { "-inf" })
    } else {
        s.serialize_f64(*x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    AntiferroUnique,
    FerroPlus,
    FerroMinus,
    FerroUniqueSymmetric,
    FerroPair,
    FreezingPlus,
    FreezingMinus,
    FreezingPair,
    FreezingAlternating,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::AntiferroUnique => "antiferro_unique",
            Regime::FerroPlus => "ferro_plus",
            Regime::FerroMinus => "ferro_minus",
            Regime::FerroUniqueSymmetric => "ferro_unique_symmetric",
            Regime::FerroPair => "ferro_pair",
            Regime::FreezingPlus => "freezing_plus",
            Regime::FreezingMinus => "freezing_minus",
            Regime::FreezingPair => "freezing_pair",
            Regime::FreezingAlternating => "freezing_alternating",
        }
    }

    /// Case label of the two-spin classification: `1`, `2a`, `2b`, `3a`, `3b`.
    pub fn case(&self) -> &'static str {
        match self {
            Regime::AntiferroUnique | Regime::FreezingAlternating => "1",
            Regime::FerroPlus | Regime::FreezingPlus => "2a",
            Regime::FerroMinus | Regime::FreezingMinus => "2b",
            Regime::FerroUniqueSymmetric => "3a",
            Regime::FerroPair | Regime::FreezingPair => "3b",
        }
    }

    pub fn n_limits(&self) -> usize {
        match self {
            Regime::FerroPair | Regime::FreezingPair => 2,
            _ => 1,
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A limiting measure of the two-spin problem.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum IsingLimit {
    Gibbs {
        theta: f64,
        #[serde(flatten)]
        measure: TisGibbs,
    },
    Freezing(FreezingMeasure),
}

impl IsingLimit {
    pub fn edge_marginal(&self) -> EdgeMeasure {
        match self {
            IsingLimit::Gibbs { measure, .. } => measure.edge_marginal.clone(),
            IsingLimit::Freezing(f) => f.edge_marginal(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionalLimitReport {
    pub kappa: usize,
    pub p: f64,
    pub c: f64,
    pub c_ref: f64,
    pub regime: Regime,
    pub case: &'static str,
    #[serde(serialize_with = "serialize_extended")]
    pub beta: f64,
    /// Ising field `B = ½ log(p/(1−p))`.
    #[serde(rename = "B")]
    pub field: f64,
    pub mark_log_odds: f64,
    #[serde(serialize_with = "serialize_thetas")]
    pub thetas: Vec<f64>,
    pub measures: Vec<IsingLimit>,
    pub predicted_edge_marginals: Vec<EdgeMeasure>,
    pub magnetizations: Vec<f64>,
    /// Largest `|consensus − c|` over the listed measures.
    pub consensus_check: f64,
    pub n_limits: usize,
    pub notes: Vec<String>,
}

fn serialize_thetas<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        if x.is_infinite() {
            seq.serialize_element(if *x > 0.0 { "inf" } else { "-inf" })?;
        } else {
            seq.serialize_element(x)?;
        }
    }
    seq.end()
}

/// `c_ref = κ (2p − 1)²`.
pub fn two_spin_c_ref(kappa: usize, p: f64) -> f64 {
    kappa as f64 * (2.0 * p - 1.0).powi(2)
}

fn check_inputs(kappa: usize, p: f64, c: f64) -> Result<()> {
    if kappa < 2 {
        return Err(Error::Precondition(format!("kappa = {kappa} < 2")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Precondition(format!("p = {p} outside (0, 1)")));
    }
    let k = kappa as f64;
    if !(c >= -k && c <= k) {
        return Err(Error::Infeasible { c, lo: -k, hi: k });
    }
    let c_ref = two_spin_c_ref(kappa, p);
    if (c - c_ref).abs() <= C_REF_TOL {
        return Err(Error::Degenerate(format!(
            "c = {c} equals c_ref = {c_ref}; the unconditioned measure is already typical"
        )));
    }
    Ok(())
}

/// Regime of `(κ, p, c)`.
pub fn regime(kappa: usize, p: f64, c: f64) -> Result<Regime> {
    check_inputs(kappa, p, c)?;
    let k = kappa as f64;
    let r = if c == -k {
        Regime::FreezingAlternating
    } else if c == k {
        match p.partial_cmp(&0.5) {
            Some(std::cmp::Ordering::Greater) => Regime::FreezingPlus,
            Some(std::cmp::Ordering::Less) => Regime::FreezingMinus,
            _ => Regime::FreezingPair,
        }
    } else if c < two_spin_c_ref(kappa, p) {
        Regime::AntiferroUnique
    } else if p > 0.5 {
        Regime::FerroPlus
    } else if p < 0.5 {
        Regime::FerroMinus
    } else if c <= k / (k - 1.0) {
        Regime::FerroUniqueSymmetric
    } else {
        Regime::FerroPair
    };
    Ok(r)
}

fn bisect_increasing(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Largest fixed point of `Γ` for `β > 0`, `B ≥ 0`. `Γ(θ) − θ` is concave on
/// `θ > 0`, so `(Γ(θ) − θ)/θ` is decreasing there.
pub(crate) fn theta_plus(kappa: usize, beta: f64, field: f64) -> f64 {
    let p = IsingParams::new(kappa, beta, field);
    let f = |t: f64| ising_cavity_map(t, &p).expect("finite parameters") - t;
    let bound = field + (kappa as f64 - 1.0) * beta + 1.0;
    if field > 0.0 {
        bisect_increasing(|t| -f(t), 0.0, bound)
    } else if (kappa as f64 - 1.0) * beta.tanh() <= 1.0 {
        0.0
    } else {
        bisect_increasing(|t| -f(t) / t, f64::MIN_POSITIVE, bound)
    }
}

/// Unique fixed point of `Γ` for `β ≤ 0`.
pub(crate) fn theta_sharp(kappa: usize, beta: f64, field: f64) -> f64 {
    let p = IsingParams::new(kappa, beta, field);
    let bound = field.abs() + (kappa as f64 - 1.0) * beta.abs() + 1.0;
    bisect_increasing(
        |t| t - ising_cavity_map(t, &p).expect("finite parameters"),
        -bound,
        bound,
    )
}

/// Cavity field of the branch selected by the regime.
fn branch_theta(regime: Regime, kappa: usize, beta: f64, field: f64) -> f64 {
    match regime {
        Regime::AntiferroUnique => theta_sharp(kappa, beta, field),
        Regime::FerroMinus => -theta_plus(kappa, beta, -field),
        _ => theta_plus(kappa, beta, field),
    }
}

fn bracket(regime: Regime, kappa: usize) -> (f64, f64) {
    match regime {
        Regime::AntiferroUnique => (-BETA_MAX, 0.0),
        Regime::FerroPair => (beta_crit(kappa, 0.0), BETA_MAX),
        _ => (0.0, BETA_MAX),
    }
}

/// `β(c, p)`: the inverse temperature whose branch measure has consensus `c`.
pub fn solve_beta(kappa: usize, p: f64, c: f64) -> Result<f64> {
    let r = regime(kappa, p, c)?;
    let k = kappa as f64;
    match r {
        Regime::FreezingAlternating => return Ok(f64::NEG_INFINITY),
        Regime::FreezingPlus | Regime::FreezingMinus | Regime::FreezingPair => {
            return Ok(f64::INFINITY)
        }
        _ => {}
    }
    if p == 0.5 && r != Regime::FerroPair {
        return Ok((c / k).atanh());
    }
    let field = field_from_p(p);
    let g = |beta: f64| ising_consensus(branch_theta(r, kappa, beta, field), beta, kappa) - c;
    let (lo, hi) = bracket(r, kappa);
    let samples: Vec<(f64, f64)> = (0..=MONOTONE_SAMPLES)
        .map(|i| {
            let b = lo + (hi - lo) * i as f64 / MONOTONE_SAMPLES as f64;
            (b, g(b) + c)
        })
        .collect();
    if samples.windows(2).any(|w| w[1].1 < w[0].1 - MONOTONE_SLACK) {
        return Err(Error::NotMonotone { lo, hi, samples });
    }
    Ok(bisect_increasing(g, lo, hi))
}

/// Parameter of the minority ferromagnetic branch with consensus `c`, if any.
fn minority_branch_beta(kappa: usize, field: f64, c: f64) -> Option<f64> {
    if field == 0.0 {
        return None;
    }
    let b0 = beta_crit(kappa, field);
    if !b0.is_finite() || b0 >= BETA_MAX {
        return None;
    }
    let minority = |beta: f64| -> Option<f64> {
        let fp = ising_fixed_points(&IsingParams::new(kappa, beta, field)).ok()?;
        if fp.points.len() < 2 {
            return None;
        }
        let t = if field > 0.0 { fp.smallest() } else { fp.largest() };
        Some(ising_consensus(t, beta, kappa) - c)
    };
    let grid: Vec<f64> = (0..=MONOTONE_SAMPLES)
        .map(|i| {
            let u = i as f64 / MONOTONE_SAMPLES as f64;
            b0 * (1.0 + 1e-9) + (BETA_MAX - b0) * u * u
        })
        .collect();
    let vals: Vec<Option<f64>> = grid.iter().map(|&b| minority(b)).collect();
    for i in 0..grid.len() - 1 {
        if let (Some(a), Some(b)) = (vals[i], vals[i + 1]) {
            if a < 0.0 && b >= 0.0 {
                let (mut lo, mut hi) = (grid[i], grid[i + 1]);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    match minority(mid) {
                        Some(v) if v < 0.0 => lo = mid,
                        _ => hi = mid,
                    }
                }
                return Some(0.5 * (lo + hi));
            }
        }
    }
    None
}

fn gibbs_limit(kappa: usize, beta: f64, field: f64, theta: f64) -> Result<IsingLimit> {
    Ok(IsingLimit::Gibbs {
        theta,
        measure: TisGibbs::ising(kappa, beta, field, theta)?,
    })
}

/// Limiting measure(s) of the marks of a uniform `κ`-regular graph with
/// `Ber(p)` marks conditioned on average edge consensus `c`.
pub fn classify(kappa: usize, p: f64, c: f64) -> Result<ConditionalLimitReport> {
    let r = regime(kappa, p, c)?;
    let beta = solve_beta(kappa, p, c)?;
    let field = field_from_p(p);
    let mut notes = Vec::new();
    let freezing = |kind| FreezingMeasure::new(kind, kappa);
    let (thetas, measures): (Vec<f64>, Vec<IsingLimit>) = match r {
        Regime::FreezingAlternating => (
            vec![],
            vec![IsingLimit::Freezing(freezing(FreezingKind::Alternating)?)],
        ),
        Regime::FreezingPlus => (
            vec![f64::INFINITY],
            vec![IsingLimit::Freezing(freezing(FreezingKind::Plus)?)],
        ),
        Regime::FreezingMinus => (
            vec![f64::NEG_INFINITY],
            vec![IsingLimit::Freezing(freezing(FreezingKind::Minus)?)],
        ),
        Regime::FreezingPair => (
            vec![f64::INFINITY, f64::NEG_INFINITY],
            vec![
                IsingLimit::Freezing(freezing(FreezingKind::Plus)?),
                IsingLimit::Freezing(freezing(FreezingKind::Minus)?),
            ],
        ),
        Regime::FerroPair => {
            let t = theta_plus(kappa, beta, 0.0);
            (
                vec![t, -t],
                vec![gibbs_limit(kappa, beta, 0.0, t)?, gibbs_limit(kappa, beta, 0.0, -t)?],
            )
        }
        _ => {
            let t = if p == 0.5 {
                0.0
            } else {
                branch_theta(r, kappa, beta, field)
            };
            (vec![t], vec![gibbs_limit(kappa, beta, field, t)?])
        }
    };
    if r == Regime::AntiferroUnique {
        if let Some(b) = minority_branch_beta(kappa, field, c) {
            notes.push(format!(
                "the minority ferromagnetic branch at beta = {b:.12} also has consensus c; \
                 the conditional limit is the antiferromagnetic branch instead"
            ));
        }
    }
    if r == Regime::FerroPair {
        notes.push("two limits; the conditioning does not select between them".into());
    }

    let h = EdgePotential::consensus();
    let predicted: Vec<EdgeMeasure> = measures.iter().map(IsingLimit::edge_marginal).collect();
    let mut consensus_check: f64 = 0.0;
    for pi in &predicted {
        consensus_check = consensus_check.max((consensus_of_edge(pi, &h, kappa)? - c).abs());
    }
    let magnetizations = measures
        .iter()
        .map(|m| match m {
            IsingLimit::Gibbs { theta, .. } => root_magnetization(*theta, beta),
            IsingLimit::Freezing(f) => f.magnetization(),
        })
        .collect();
    Ok(ConditionalLimitReport {
        kappa,
        p,
        c,
        c_ref: two_spin_c_ref(kappa, p),
        regime: r,
        case: r.case(),
        beta,
        field,
        mark_log_odds: (p / (1.0 - p)).ln(),
        thetas,
        measures,
        predicted_edge_marginals: predicted,
        magnetizations,
        consensus_check,
        n_limits: r.n_limits(),
        notes,
    })
}

#[cfg(test)]
mod tests;
