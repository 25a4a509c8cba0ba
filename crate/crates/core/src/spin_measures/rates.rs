use super::entropy::kl_slices;
use super::{max_asymmetry, EdgeMeasure, EdgePotential, Pmf, SYM_TOL};
use crate::error::{Error, Result};
use crate::tis_gibbs::StarMeasure;

fn check_kappa(kappa: usize) -> Result<()> {
    if kappa < 2 {
        return Err(Error::Precondition(format!("kappa = {kappa} < 2")));
    }
    Ok(())
}

fn check_same_space(q1: usize, q2: usize) -> Result<()> {
    if q1 != q2 {
        return Err(Error::Dimension {
            expected: q1,
            got: q2,
        });
    }
    Ok(())
}

/// `J^ν_κ(π) = H(π_o‖ν) + (κ/2) H(π‖π_o⊗π_o)`.
pub fn edge_rate_j(pi: &EdgeMeasure, nu: &Pmf, kappa: usize) -> Result<f64> {
    check_kappa(kappa)?;
    check_same_space(nu.len(), pi.q())?;
    if !nu.is_interior() {
        return Err(Error::Precondition("mark law must have full support".into()));
    }
    let q = pi.q();
    let po = pi.marginal();
    let first = kl_slices(po.weights(), nu.weights());
    let mut second = 0.0;
    for x in 0..q {
        for z in 0..q {
            let p = pi.get(x, z);
            if p > 0.0 {
                second += p * (p / (po.weights()[x] * po.weights()[z])).ln();
            }
        }
    }
    Ok(first + 0.5 * kappa as f64 * second)
}

/// `I^κ₁(μ) = H(μ‖η₁) − (κ/2) H(π_μ‖ν⊗ν)`, `+∞` for asymmetric `π_μ`.
pub fn neighborhood_rate_i1(mu: &StarMeasure, nu: &Pmf, kappa: usize) -> Result<f64> {
    check_kappa(kappa)?;
    if mu.kappa() != kappa {
        return Err(Error::Precondition(format!(
            "star measure has {} leaves, expected {kappa}",
            mu.kappa()
        )));
    }
    check_same_space(nu.len(), mu.q())?;
    if !nu.is_interior() {
        return Err(Error::Precondition("mark law must have full support".into()));
    }
    let q = mu.q();
    let pm = mu.edge_matrix();
    if max_asymmetry(q, &pm) > SYM_TOL {
        return Ok(f64::INFINITY);
    }
    let eta = StarMeasure::iid(nu, kappa);
    let first = kl_slices(mu.weights(), eta.weights());
    let mut nn = vec![0.0; q * q];
    for x in 0..q {
        for z in 0..q {
            nn[x * q + z] = nu.weights()[x] * nu.weights()[z];
        }
    }
    Ok(first - 0.5 * kappa as f64 * kl_slices(&pm, &nn))
}

/// `κ Σ π(x,z) h(x,z)`.
pub fn consensus_of_edge(pi: &EdgeMeasure, h: &EdgePotential, kappa: usize) -> Result<f64> {
    check_same_space(h.q(), pi.q())?;
    let s: f64 = pi.weights().iter().zip(h.values()).map(|(p, v)| p * v).sum();
    Ok(kappa as f64 * s)
}

/// Whether `B_h(c)` meets the measures with vertex support exactly `subset`.
///
/// Open interval `(κ min h, κ max h)` over `subset²`; when `h` is constant on
/// `subset²` the single value `c = κh` is accepted.
pub fn feasible(subset: &[usize], h: &EdgePotential, c: f64, kappa: usize) -> bool {
    if subset.is_empty() {
        return false;
    }
    let (lo, hi) = h.range_on(subset);
    let k = kappa as f64;
    if lo == hi {
        (c - k * lo).abs() <= 1e-12 * (1.0 + c.abs())
    } else {
        k * lo < c && c < k * hi
    }
}

/// One-sided derivative `d/dε J(π + εδ)` at `ε = 0+`.
///
/// `delta` is a row-major `q x q` direction with zero total mass. Entries with
/// `δ = 0` are skipped, so directions tangent to a boundary face are finite.
pub fn directional_derivative(pi: &EdgeMeasure, delta: &[f64], nu: &Pmf, kappa: usize) -> f64 {
    let q = pi.q();
    let k = kappa as f64;
    let po = pi.marginal();
    let mut out = 0.0;
    for x in 0..q {
        let dox: f64 = delta[x * q..(x + 1) * q].iter().sum();
        if dox != 0.0 {
            out += dox * ((1.0 - k) * (po.weights()[x].ln() + 1.0) - nu.weights()[x].ln());
        }
        for z in 0..q {
            let d = delta[x * q + z];
            if d != 0.0 {
                out += 0.5 * k * d * (pi.get(x, z).ln() + 1.0);
            }
        }
    }
    out
}

/// Second derivative bilinear form of `J` at `π` restricted to directions
/// supported where `π > 0`.
pub fn edge_hessian_form(pi: &EdgeMeasure, d1: &[f64], d2: &[f64], kappa: usize) -> f64 {
    let q = pi.q();
    let k = kappa as f64;
    let po = pi.marginal();
    let mut out = 0.0;
    for x in 0..q {
        let a: f64 = d1[x * q..(x + 1) * q].iter().sum();
        let b: f64 = d2[x * q..(x + 1) * q].iter().sum();
        if po.weights()[x] > 0.0 {
            out += (1.0 - k) * a * b / po.weights()[x];
        }
        for z in 0..q {
            let p = pi.get(x, z);
            if p > 0.0 {
                out += 0.5 * k * d1[x * q + z] * d2[x * q + z] / p;
            }
        }
    }
    out
}
