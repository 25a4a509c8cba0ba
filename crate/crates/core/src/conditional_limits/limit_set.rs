use serde::Serialize;

use super::C_REF_TOL;
use crate::cavity_bp::Specification;
use crate::edge_optimizer::{c_ref, check_problem, r_edge, Minimizer, MinimizerReport};
use crate::error::{Error, Result};
use crate::spin_measures::{EdgeMeasure, EdgePotential, Pmf, SpinSpace};
use crate::tis_gibbs::{star_measure, StarMeasure, TisGibbs};

/// Identification of `UGW₁(μ^(π))` for one minimizer `π`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LimitMeasure {
    /// TIS Gibbs measure on the full mark space.
    Gibbs { measure: TisGibbs },
    /// TIS Gibbs measure on the reduced mark space `X↓`.
    RestrictedGibbs { measure: TisGibbs },
    /// Constant marking by a single label.
    Frozen { label: String },
    /// Unimodular extension of the star law, without a positive specification.
    Unimodular { star: StarMeasure },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitDescriptor {
    /// Labels of the reduced mark space `X↓`.
    pub support: Vec<String>,
    pub degenerate: bool,
    #[serde(rename = "matrix")]
    pub edge_marginal: EdgeMeasure,
    pub measure: LimitMeasure,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeneralLimitSet {
    pub limits: Vec<LimitDescriptor>,
    /// `|X| = 2` and `ν` uniform: every limit has full support.
    pub nondegeneracy_guaranteed: bool,
    /// `c` is attained by `κh` on some single cell.
    pub c_in_range_of_kappa_h: bool,
    pub report: MinimizerReport,
}

fn restricted_gibbs(m: &Minimizer, nu: &Pmf, h: &EdgePotential, kappa: usize) -> Result<TisGibbs> {
    let (beta, ell) = match (m.beta, &m.boundary_law) {
        (Some(b), Some(l)) => (b, l),
        _ => return Err(Error::Domain("minimizer has no Gibbs form".into())),
    };
    let s = m.support_indices();
    let space = SpinSpace::new(s.iter().map(|&x| nu.space().label(x).to_string()))?;
    let nus = nu.restrict(&s)?;
    let spec = Specification::from_log(
        space.clone(),
        h.restrict(&s).iter().map(|v| beta * v).collect(),
        nus.iter().map(|v| v.ln()).collect(),
    )?;
    let ell = Pmf::from_unnormalized(space, s.iter().map(|&x| ell.weights()[x]).collect())?;
    TisGibbs::new(kappa, spec, ell)
}

fn describe(m: &Minimizer, nu: &Pmf, h: &EdgePotential, kappa: usize) -> Result<LimitDescriptor> {
    let s = m.support_indices();
    let full = s.len() == nu.len();
    let measure = if s.len() == 1 {
        LimitMeasure::Frozen {
            label: nu.space().label(s[0]).to_string(),
        }
    } else if m.is_interior() {
        let spec = Specification::tilted(h, m.beta.unwrap_or(0.0), nu)?;
        match m.boundary_law.clone().map(|l| TisGibbs::new(kappa, spec, l)) {
            Some(Ok(g)) => LimitMeasure::Gibbs { measure: g },
            _ => LimitMeasure::Unimodular {
                star: star_measure(&m.pi, kappa)?,
            },
        }
    } else {
        match restricted_gibbs(m, nu, h, kappa) {
            Ok(g) => LimitMeasure::RestrictedGibbs { measure: g },
            Err(_) => LimitMeasure::Unimodular {
                star: star_measure(&m.pi, kappa)?,
            },
        }
    };
    Ok(LimitDescriptor {
        support: m.support.clone(),
        degenerate: !full,
        edge_marginal: m.pi.clone(),
        measure,
    })
}

/// Candidate conditional limits `{UGW₁(μ^(π)) : π ∈ M_edge(c)}` for a general
/// mark space.
pub fn general_limit_set(
    nu: &Pmf,
    h: &EdgePotential,
    c: f64,
    kappa: usize,
) -> Result<GeneralLimitSet> {
    check_problem(nu, h, c, kappa)?;
    let cr = c_ref(nu, h, kappa);
    if (c - cr).abs() <= C_REF_TOL {
        return Err(Error::Degenerate(format!(
            "c = {c} equals c_ref = {cr}; the unconditioned measure is already typical"
        )));
    }
    let report = r_edge(nu, h, c, kappa)?;
    let limits = report
        .minimizers
        .iter()
        .map(|m| describe(m, nu, h, kappa))
        .collect::<Result<Vec<_>>>()?;
    let q = nu.len();
    let uniform = nu.weights().iter().all(|w| (w - 1.0 / q as f64).abs() < 1e-12);
    let k = kappa as f64;
    let c_in_range = h
        .values()
        .iter()
        .any(|v| (k * v - c).abs() <= 1e-12 * (1.0 + c.abs()));
    Ok(GeneralLimitSet {
        limits,
        nondegeneracy_guaranteed: q == 2 && uniform,
        c_in_range_of_kappa_h: c_in_range,
        report,
    })
}
