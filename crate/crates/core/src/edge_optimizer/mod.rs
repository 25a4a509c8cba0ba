//! Minimization of the edge rate `J^ν_κ` over the consensus constraint set
//! `B_h(c) = {π : κ⟨h, π⟩ = c}`.

mod boundary;
mod general;
mod oracle;
mod two_spin;

pub use boundary::{boundary_local_test, LocalTest};
pub use general::{solve_general, BetaGrid};
pub use oracle::{grid_oracle, OracleResult};
pub use two_spin::{critical_slope, solve_two_spin};

use serde::Serialize;

use crate::cavity_bp::BpSystem;
use crate::error::{Error, Result};
use crate::spin_measures::{consensus_of_edge, edge_rate_j, EdgeMeasure, EdgePotential, Pmf};

/// Values closer than this are a tie between distinct minimizers.
pub const TIE_TOL: f64 = 1e-9;
/// Minimizers closer than this in total variation are the same point.
pub const SAME_POINT_TV: f64 = 1e-6;
/// Allowed consensus violation of a reported minimizer.
pub const CONSENSUS_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MinimizerKind {
    Interior,
    Boundary,
}

/// A candidate or global minimizer of the edge problem.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Minimizer {
    #[serde(rename = "matrix")]
    pub pi: EdgeMeasure,
    pub value: f64,
    /// Labels of the vertex support of `π_o`.
    pub support: Vec<String>,
    pub kind: MinimizerKind,
    /// Tilt `β` with `π(x,z) ∝ ℓ(x) e^{βh(x,z)} ℓ(z)` on the support.
    pub beta: Option<f64>,
    pub boundary_law: Option<Pmf>,
    /// Largest of the BP residual of `ℓ` and the Gibbs-form fit residual.
    pub stationarity_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub local_test: Option<LocalTest>,
}

impl Minimizer {
    pub fn support_indices(&self) -> Vec<usize> {
        self.pi.support()
    }

    pub fn is_interior(&self) -> bool {
        self.kind == MinimizerKind::Interior
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MinimizerReport {
    pub value: f64,
    pub minimizers: Vec<Minimizer>,
    pub oracle_value: Option<f64>,
    pub candidates_examined: usize,
    /// Distinct candidates in increasing order of value.
    pub candidates: Vec<Minimizer>,
    /// Set when branch enumeration is not exhaustive (`|X| ≥ 3`).
    pub heuristic_branches: bool,
}

pub(crate) fn check_problem(nu: &Pmf, h: &EdgePotential, c: f64, kappa: usize) -> Result<()> {
    if kappa < 2 {
        return Err(Error::Precondition(format!("kappa = {kappa} < 2")));
    }
    if nu.space() != h.space() {
        return Err(Error::Precondition("mark law and potential on different spaces".into()));
    }
    if !nu.is_interior() {
        return Err(Error::Precondition("mark law must have full support".into()));
    }
    if !c.is_finite() {
        return Err(Error::Precondition(format!("constraint value {c} is not finite")));
    }
    let k = kappa as f64;
    let (lo, hi) = (k * h.min(), k * h.max());
    let slack = 1e-12 * (1.0 + c.abs());
    if c < lo - slack || c > hi + slack {
        return Err(Error::Infeasible { c, lo, hi });
    }
    Ok(())
}

/// Gibbs-form certificate of `π` on its support: `(β, ℓ, residual)`.
///
/// `ℓ ∝ π_o^{(κ−1)/κ} ν^{1/κ}` and `β` is the least-squares slope of
/// `log π(x,z) − log ℓ(x) − log ℓ(z)` against `h(x,z)`.
pub(crate) fn stationarity(
    pi: &EdgeMeasure,
    nu: &Pmf,
    h: &EdgePotential,
    kappa: usize,
) -> Option<(f64, Pmf, f64)> {
    let support = pi.support();
    let n = support.len();
    if n < 2 || support.iter().any(|&x| support.iter().any(|&z| pi.get(x, z) <= 0.0)) {
        return None;
    }
    let k = kappa as f64;
    let po = pi.marginal();
    let nus = nu.restrict(&support).ok()?;
    let log_ell: Vec<f64> = support
        .iter()
        .zip(&nus)
        .map(|(&x, v)| ((k - 1.0) * po.weights()[x].ln() + v.ln()) / k)
        .collect();
    let m = log_ell.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = log_ell.iter().map(|v| (v - m).exp()).sum();
    let log_ell: Vec<f64> = log_ell.iter().map(|v| v - m - z.ln()).collect();

    let hs = h.restrict(&support);
    let ys: Vec<f64> = (0..n * n)
        .map(|i| pi.get(support[i / n], support[i % n]).ln() - log_ell[i / n] - log_ell[i % n])
        .collect();
    let nn = (n * n) as f64;
    let hbar = hs.iter().sum::<f64>() / nn;
    let ybar = ys.iter().sum::<f64>() / nn;
    let sxx: f64 = hs.iter().map(|v| (v - hbar).powi(2)).sum();
    let sxy: f64 = hs.iter().zip(&ys).map(|(a, b)| (a - hbar) * (b - ybar)).sum();
    let beta = if sxx > 1e-300 { sxy / sxx } else { 0.0 };
    let icpt = ybar - beta * hbar;
    let fit = hs
        .iter()
        .zip(&ys)
        .map(|(a, b)| (b - beta * a - icpt).abs())
        .fold(0.0, f64::max);

    let sys = BpSystem::new(
        n,
        kappa,
        hs.iter().map(|v| beta * v).collect(),
        nus.iter().map(|v| v.ln()).collect(),
    );
    let ell_s: Vec<f64> = log_ell.iter().map(|v| v.exp()).collect();
    let bp = sys.residual(&ell_s);
    let mut full = vec![0.0; pi.q()];
    for (&x, w) in support.iter().zip(&ell_s) {
        full[x] = *w;
    }
    let ell = Pmf::from_unnormalized(pi.space().clone(), full).ok()?;
    Some((beta, ell, bp.max(fit)))
}

pub(crate) fn make_minimizer(
    pi: EdgeMeasure,
    nu: &Pmf,
    h: &EdgePotential,
    kappa: usize,
) -> Result<Minimizer> {
    let value = edge_rate_j(&pi, nu, kappa)?;
    let kind = if pi.is_interior() {
        MinimizerKind::Interior
    } else {
        MinimizerKind::Boundary
    };
    let support = pi
        .support()
        .iter()
        .map(|&x| pi.space().label(x).to_string())
        .collect();
    let (beta, boundary_law, stationarity_residual) = match stationarity(&pi, nu, h, kappa) {
        Some((b, l, r)) => (Some(b), Some(l), Some(r)),
        None if pi.support().len() == 1 => (None, None, Some(0.0)),
        None => (None, None, None),
    };
    Ok(Minimizer {
        pi,
        value,
        support,
        kind,
        beta,
        boundary_law,
        stationarity_residual,
        local_test: None,
    })
}

/// Deduplicates candidates, sorts them by value and extracts the global
/// minimizers (ties within [`TIE_TOL`]).
pub(crate) fn assemble(
    mut cands: Vec<Minimizer>,
    nu: &Pmf,
    h: &EdgePotential,
    c: f64,
    kappa: usize,
    examined: usize,
    heuristic: bool,
) -> Result<MinimizerReport> {
    cands.retain(|m| {
        consensus_of_edge(&m.pi, h, kappa).is_ok_and(|v| (v - c).abs() <= CONSENSUS_TOL * (1.0 + c.abs()))
            && m.value.is_finite()
    });
    cands.sort_by(|a, b| {
        a.value
            .total_cmp(&b.value)
            .then_with(|| cmp_lex(a.pi.weights(), b.pi.weights()))
    });
    let mut distinct: Vec<Minimizer> = Vec::new();
    for m in cands {
        if distinct.iter().all(|d| d.pi.tv(&m.pi) > SAME_POINT_TV) {
            distinct.push(m);
        }
    }
    for m in distinct.iter_mut() {
        if m.kind == MinimizerKind::Boundary {
            m.local_test = boundary_local_test(&m.pi, nu, h, c, kappa).ok();
        }
    }
    let best = distinct
        .first()
        .ok_or_else(|| Error::Branch("no feasible candidate found".into()))?
        .value;
    let mut minimizers: Vec<Minimizer> = distinct
        .iter()
        .filter(|m| m.value <= best + TIE_TOL)
        .filter(|m| m.local_test != Some(LocalTest::NotLocalMin))
        .cloned()
        .collect();
    if minimizers.is_empty() {
        minimizers.push(distinct[0].clone());
    }
    minimizers.sort_by(|a, b| cmp_lex(a.pi.weights(), b.pi.weights()));
    Ok(MinimizerReport {
        value: best,
        minimizers,
        oracle_value: None,
        candidates_examined: examined,
        candidates: distinct,
        heuristic_branches: heuristic,
    })
}

pub(crate) fn cmp_lex(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// `R_edge(c)` with the two-spin solver when `|X| = 2`, else the general one.
pub fn r_edge(nu: &Pmf, h: &EdgePotential, c: f64, kappa: usize) -> Result<MinimizerReport> {
    if h.q() == 2 {
        solve_two_spin(nu, h, c, kappa)
    } else {
        solve_general(nu, h, c, kappa, &BetaGrid::default())
    }
}

/// Whether the relaxed problem `min_{c′ ≥ c} R_edge(c′)` (or `c′ ≤ c` below
/// the typical value) is attained at `c′ = c` on the given grid.
pub fn relaxed_equals_tight(
    nu: &Pmf,
    h: &EdgePotential,
    c: f64,
    kappa: usize,
    grid: &[f64],
) -> Result<bool> {
    let tight = r_edge(nu, h, c, kappa)?.value;
    let cref = c_ref(nu, h, kappa);
    let mut best = tight;
    for &cp in grid {
        let relevant = if c >= cref { cp >= c } else { cp <= c };
        if relevant {
            best = best.min(r_edge(nu, h, cp, kappa)?.value);
        }
    }
    Ok(tight <= best + 1e-8)
}

/// Typical consensus `κ⟨h, ν⊗ν⟩`.
pub fn c_ref(nu: &Pmf, h: &EdgePotential, kappa: usize) -> f64 {
    let w = nu.weights();
    let q = w.len();
    let mut s = 0.0;
    for x in 0..q {
        for z in 0..q {
            s += w[x] * w[z] * h.get(x, z);
        }
    }
    kappa as f64 * s
}
