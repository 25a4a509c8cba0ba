use nalgebra::DMatrix;
use serde::Serialize;

use super::{check_problem, CONSENSUS_TOL};
use crate::error::{Error, Result};
use crate::spin_measures::{consensus_of_edge, edge_hessian_form, EdgeMeasure, EdgePotential, Pmf};

/// Entries at or below this are treated as exact zeros.
const ZERO: f64 = 1e-14;
const D_TOL: f64 = 1e-12;
const G_TOL: f64 = 1e-9;
const EIG_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalTest {
    LocalMin,
    NotLocalMin,
    InconclusiveOrderS,
}

/// Unordered cells `{x, z}` as unit-mass symmetric matrices, with `κh`.
fn cells(h: &EdgePotential, kappa: usize) -> Vec<(Vec<f64>, f64)> {
    let q = h.q();
    let mut out = Vec::new();
    for x in 0..q {
        for z in x..q {
            let mut v = vec![0.0; q * q];
            if x == z {
                v[x * q + x] = 1.0;
            } else {
                v[x * q + z] = 0.5;
                v[z * q + x] = 0.5;
            }
            out.push((v, kappa as f64 * h.get(x, z)));
        }
    }
    out
}

/// Vertices of `{ξ symmetric pmf : κ⟨h, ξ⟩ = c}`.
fn vertices(h: &EdgePotential, c: f64, kappa: usize) -> Vec<Vec<f64>> {
    let cs = cells(h, kappa);
    let tol = 1e-12 * (1.0 + c.abs());
    let mut out: Vec<Vec<f64>> = cs
        .iter()
        .filter(|(_, v)| (v - c).abs() <= tol)
        .map(|(e, _)| e.clone())
        .collect();
    for (a, va) in &cs {
        for (b, vb) in &cs {
            if *va < c - tol && *vb > c + tol {
                let lam = (vb - c) / (vb - va);
                out.push(a.iter().zip(b).map(|(x, y)| lam * x + (1.0 - lam) * y).collect());
            }
        }
    }
    out
}

fn marginal(q: usize, w: &[f64]) -> Vec<f64> {
    (0..q).map(|x| w[x * q..(x + 1) * q].iter().sum()).collect()
}

/// Coefficient of `|ε log ε|` in `J(π + ε(ξ − π)) − J(π)`.
fn d_coef(pi: &[f64], po: &[f64], xi: &[f64], k: f64) -> f64 {
    let q = po.len();
    let xo = marginal(q, xi);
    let a: f64 = (0..q).filter(|&x| po[x] <= ZERO).map(|x| xo[x]).sum();
    let b: f64 = (0..q * q).filter(|&i| pi[i] <= ZERO).map(|i| xi[i]).sum();
    (k - 1.0) * a - 0.5 * k * b
}

fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Coefficient of `ε` in the same expansion.
fn g_coef(pi: &[f64], po: &[f64], xi: &[f64], nu: &[f64], k: f64) -> f64 {
    let q = po.len();
    let xo = marginal(q, xi);
    let part = |p: &[f64], x: &[f64]| -> f64 {
        p.iter()
            .zip(x)
            .map(|(&p, &x)| if p > ZERO { (x - p) * (p.ln() + 1.0) } else { xlogx(x) })
            .sum()
    };
    let lin: f64 = (0..q).map(|x| (xo[x] - po[x]) * nu[x].ln()).sum();
    (1.0 - k) * part(po, &xo) + 0.5 * k * part(pi, xi) - lin
}

/// Local-minimality test for a boundary point `π*` of `B_h(c)`.
///
/// The `|ε log ε|`-order derivative is linear in the direction, so its sign
/// is read off at the vertices of the constraint polytope; where it vanishes
/// the `ε`-order term and then the reduced Hessian on the face decide.
pub fn boundary_local_test(
    pi: &EdgeMeasure,
    nu: &Pmf,
    h: &EdgePotential,
    c: f64,
    kappa: usize,
) -> Result<LocalTest> {
    check_problem(nu, h, c, kappa)?;
    if pi.space() != h.space() {
        return Err(Error::Precondition("measure and potential on different spaces".into()));
    }
    if pi.weights().iter().all(|w| *w > ZERO) {
        return Err(Error::Precondition("point is interior to the simplex".into()));
    }
    let cons = consensus_of_edge(pi, h, kappa)?;
    if (cons - c).abs() > CONSENSUS_TOL * (1.0 + c.abs()) {
        return Err(Error::Precondition(format!("consensus {cons} differs from c = {c}")));
    }
    let q = pi.q();
    let k = kappa as f64;
    let w = pi.weights();
    let po = marginal(q, w);
    let tv = |xi: &[f64]| 0.5 * xi.iter().zip(w).map(|(a, b)| (a - b).abs()).sum::<f64>();
    let verts: Vec<Vec<f64>> = vertices(h, c, kappa)
        .into_iter()
        .filter(|v| tv(v) > 1e-12)
        .collect();
    if verts.is_empty() {
        return Ok(LocalTest::LocalMin);
    }
    let ds: Vec<f64> = verts.iter().map(|v| d_coef(w, &po, v, k)).collect();
    if ds.iter().any(|d| *d < -D_TOL) {
        return Ok(LocalTest::NotLocalMin);
    }
    let zero: Vec<&Vec<f64>> = verts
        .iter()
        .zip(&ds)
        .filter(|(_, d)| d.abs() <= D_TOL)
        .map(|(v, _)| v)
        .collect();
    if zero.is_empty() {
        return Ok(LocalTest::LocalMin);
    }
    let mut dirs: Vec<Vec<f64>> = zero.iter().map(|v| v.to_vec()).collect();
    for i in 0..zero.len() {
        for j in i + 1..zero.len() {
            for lam in [0.25, 0.5, 0.75] {
                dirs.push(zero[i].iter().zip(zero[j]).map(|(a, b)| lam * a + (1.0 - lam) * b).collect());
            }
        }
    }
    let gs: Vec<f64> = dirs.iter().map(|v| g_coef(w, &po, v, nu.weights(), k)).collect();
    if gs.iter().any(|g| *g < -G_TOL) {
        return Ok(LocalTest::NotLocalMin);
    }
    let flat: Vec<&Vec<f64>> = dirs.iter().zip(&gs).filter(|(_, g)| g.abs() <= G_TOL).map(|(v, _)| v).collect();
    if flat.is_empty() {
        return Ok(LocalTest::LocalMin);
    }
    if flat.iter().any(|v| v.iter().zip(w).any(|(x, p)| *x > 0.0 && *p <= ZERO)) {
        return Ok(LocalTest::InconclusiveOrderS);
    }
    reduced_hessian(pi, h, kappa)
}

/// Sign of the Hessian of `J` on `{δ : supp δ ⊆ supp π, Σδ = 0, ⟨h, δ⟩ = 0}`.
fn reduced_hessian(pi: &EdgeMeasure, h: &EdgePotential, kappa: usize) -> Result<LocalTest> {
    let q = pi.q();
    let basis: Vec<Vec<f64>> = cells(h, kappa)
        .into_iter()
        .map(|(e, _)| e)
        .filter(|e| e.iter().zip(pi.weights()).all(|(x, p)| *x == 0.0 || *p > ZERO))
        .collect();
    let n = basis.len();
    let hv: Vec<f64> = basis
        .iter()
        .map(|e| e.iter().zip(h.values()).map(|(a, b)| a * b).sum())
        .collect();
    let a = DMatrix::from_fn(2, n, |r, j| if r == 0 { 1.0 } else { hv[j] });
    let gram = a.transpose() * &a;
    let eig = gram.symmetric_eigen();
    let scale = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let null: Vec<Vec<f64>> = (0..n)
        .filter(|&i| eig.eigenvalues[i].abs() <= 1e-12 * scale)
        .map(|i| {
            let col = eig.eigenvectors.column(i);
            let mut d = vec![0.0; q * q];
            for (j, e) in basis.iter().enumerate() {
                for (di, ei) in d.iter_mut().zip(e) {
                    *di += col[j] * ei;
                }
            }
            d
        })
        .collect();
    let m = null.len();
    if m == 0 {
        return Ok(LocalTest::LocalMin);
    }
    let hess = DMatrix::from_fn(m, m, |i, j| edge_hessian_form(pi, &null[i], &null[j], kappa));
    let ev = hess.symmetric_eigen().eigenvalues;
    let lo = ev.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ev.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    Ok(if lo > EIG_TOL * hi {
        LocalTest::LocalMin
    } else if lo < -EIG_TOL * hi {
        LocalTest::NotLocalMin
    } else {
        LocalTest::InconclusiveOrderS
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin_measures::SpinSpace;

    fn slope_potential(w: f64) -> EdgePotential {
        EdgePotential::two_spin(2.0 * w / (1.0 - w), -1.0, 0.0)
    }

    #[test]
    fn two_spin_threshold() {
        let nu = Pmf::uniform(SpinSpace::two_spin());
        let pi = EdgeMeasure::point_mass(SpinSpace::two_spin(), 1);
        for (w, expect) in [
            (0.1, LocalTest::LocalMin),
            (0.7, LocalTest::NotLocalMin),
            (0.6, LocalTest::NotLocalMin),
        ] {
            let h = slope_potential(w);
            assert_eq!(crate::spin_measures::slope_w(&h).map(|s| (s - w).abs() < 1e-12), Some(true));
            assert_eq!(boundary_local_test(&pi, &nu, &h, 0.0, 5).unwrap(), expect, "w = {w}");
        }
    }

    #[test]
    fn d_matches_closed_form() {
        let (k, w) = (5.0, 0.3);
        let pi = [0.0, 0.0, 0.0, 1.0];
        let s = 1.0 / (1.0 + w);
        let t = w / (1.0 + w);
        let xi = [s - t, t, t, 0.0];
        let d = d_coef(&pi, &marginal(2, &pi), &xi, k);
        assert!((d - (k - 2.0 - k * w) / (2.0 * (1.0 + w))).abs() < 1e-14);
    }

    #[test]
    fn critical_slope_next_order() {
        let k = 5.0f64;
        let w = (k - 2.0) / k;
        let pi = [0.0, 0.0, 0.0, 1.0];
        let s = 1.0 / (1.0 + w);
        let t = w / (1.0 + w);
        let xi = [s - t, t, t, 0.0];
        let g = g_coef(&pi, &marginal(2, &pi), &xi, &[0.5, 0.5], k);
        let closed = s * ((2.0 / k).ln() + (k - 2.0) * ((k - 2.0) / k).ln());
        assert!((g - closed).abs() < 1e-12, "{g} vs {closed}");
        assert!(g < 0.0);
    }

    #[test]
    fn three_state_example_is_local_min() {
        let space = SpinSpace::numbered(3).unwrap();
        let mut hv = vec![0.5; 9];
        for x in 0..3 {
            hv[x * 3 + 2] = -1.0;
            hv[2 * 3 + x] = -1.0;
        }
        hv[8] = 1.0;
        let h = EdgePotential::new(space.clone(), hv).unwrap();
        let pi = EdgeMeasure::new(space.clone(), vec![0.25, 0.25, 0.0, 0.25, 0.25, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let nu = Pmf::uniform(space);
        assert_eq!(boundary_local_test(&pi, &nu, &h, 1.5, 3).unwrap(), LocalTest::LocalMin);
    }

    #[test]
    fn interior_rejected() {
        let nu = Pmf::uniform(SpinSpace::two_spin());
        let pi = EdgeMeasure::uniform(SpinSpace::two_spin());
        let r = boundary_local_test(&pi, &nu, &EdgePotential::consensus(), 0.0, 3);
        assert!(matches!(r, Err(Error::Precondition(_))));
    }
}
