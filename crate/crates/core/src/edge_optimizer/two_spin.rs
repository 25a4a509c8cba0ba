use super::{assemble, check_problem, make_minimizer, MinimizerReport};
use crate::error::{Error, Result};
use crate::spin_measures::{
    directional_derivative, two_spin_j, two_spin_j_and_grad, two_spin_pi, EdgeMeasure,
    EdgePotential, Pmf, TwoSpinCoords,
};

const SCAN_POINTS: usize = 4096;

type Point = (f64, f64);

/// `B_h(c) ∩ Δ` in `(s, t)` coordinates: a segment, a point, or (constant
/// `h`) the whole triangle, signalled by `None`.
fn segment(h: &EdgePotential, c: f64, kappa: usize) -> Option<Vec<Point>> {
    let k = kappa as f64;
    let verts = [
        ((0.0, 0.0), k * h.get(1, 1)),
        ((1.0, 0.0), k * h.get(0, 0)),
        ((0.5, 0.5), k * h.get(0, 1)),
    ];
    let tol = 1e-12 * (1.0 + c.abs());
    let on: Vec<bool> = verts.iter().map(|(_, v)| (v - c).abs() <= tol).collect();
    if on.iter().all(|b| *b) {
        return None;
    }
    let mut pts: Vec<Point> = Vec::new();
    for (i, (p, _)) in verts.iter().enumerate() {
        if on[i] {
            pts.push(*p);
        }
    }
    for i in 0..3 {
        for j in i + 1..3 {
            let (vi, vj) = (verts[i].1, verts[j].1);
            if !on[i] && !on[j] && (vi - c) * (vj - c) < 0.0 {
                let lam = (c - vi) / (vj - vi);
                let (a, b) = (verts[i].0, verts[j].0);
                pts.push((a.0 + lam * (b.0 - a.0), a.1 + lam * (b.1 - a.1)));
            }
        }
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-15 && (a.1 - b.1).abs() < 1e-15);
    Some(pts)
}

fn at(p0: Point, p1: Point, u: f64) -> Point {
    (p0.0 + u * (p1.0 - p0.0), p0.1 + u * (p1.1 - p0.1))
}

fn coords(p: Point) -> TwoSpinCoords {
    TwoSpinCoords {
        s: p.0,
        t: p.1.max(0.0),
    }
}

/// `d/du J(P(u))` along the segment.
fn slope(nu: &Pmf, kappa: usize, p0: Point, p1: Point, u: f64) -> f64 {
    let (s, t) = at(p0, p1, u);
    let (ds, dt) = (p1.0 - p0.0, p1.1 - p0.1);
    if let Ok((_, gs, gt)) = two_spin_j_and_grad(s, t, nu, kappa) {
        return gs * ds + gt * dt;
    }
    match two_spin_pi(coords((s, t))) {
        Ok(pi) => {
            let delta = [ds - dt, dt, dt, -ds - dt];
            directional_derivative(&pi, &delta, nu, kappa)
        }
        Err(_) => f64::NAN,
    }
}

/// Interior local minima of `J` along `[p0, p1]`, by sign-change scan and
/// bisection of the directional derivative.
fn local_minima(nu: &Pmf, kappa: usize, p0: Point, p1: Point) -> Vec<Point> {
    let mut us: Vec<f64> = (1..SCAN_POINTS).map(|i| i as f64 / SCAN_POINTS as f64).collect();
    for e in 4..=15 {
        let d = 10f64.powi(-e);
        us.push(d);
        us.push(1.0 - d);
    }
    us.sort_by(f64::total_cmp);
    us.dedup();
    let f = |u: f64| slope(nu, kappa, p0, p1, u);
    let vals: Vec<f64> = us.iter().map(|&u| f(u)).collect();
    let mut out = Vec::new();
    for i in 0..us.len() - 1 {
        if vals[i] < 0.0 && vals[i + 1] >= 0.0 {
            let (mut lo, mut hi) = (us[i], us[i + 1]);
            for _ in 0..200 {
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
            out.push(at(p0, p1, 0.5 * (lo + hi)));
        }
    }
    out
}

fn product(nu: &Pmf) -> Result<EdgeMeasure> {
    EdgeMeasure::product(nu, nu)
}

/// Exact two-spin solver on the constraint segment.
pub fn solve_two_spin(nu: &Pmf, h: &EdgePotential, c: f64, kappa: usize) -> Result<MinimizerReport> {
    check_problem(nu, h, c, kappa)?;
    if !nu.space().is_two_spin() {
        return Err(Error::Precondition("two-spin mark law required".into()));
    }
    let pts = match segment(h, c, kappa) {
        None => {
            let m = make_minimizer(product(nu)?, nu, h, kappa)?;
            return assemble(vec![m], nu, h, c, kappa, 1, false);
        }
        Some(p) => p,
    };
    let mut cands: Vec<Point> = pts.clone();
    if pts.len() == 2 {
        cands.extend(local_minima(nu, kappa, pts[0], pts[1]));
    }
    let examined = cands.len();
    let ms = cands
        .into_iter()
        .map(|p| make_minimizer(two_spin_pi(coords(p))?, nu, h, kappa))
        .collect::<Result<Vec<_>>>()?;
    assemble(ms, nu, h, c, kappa, examined, false)
}

/// Margin of the cheapest competitor of `δ_{(−1,−1)}` on the segment of
/// slope `w` through it.
fn boundary_margin(nu: &Pmf, kappa: usize, w: f64) -> Result<f64> {
    let p1 = (1.0 / (1.0 + w), w / (1.0 + w));
    let j0 = two_spin_j(0.0, 0.0, nu, kappa)?;
    let mut best = two_spin_j(p1.0, p1.1, nu, kappa)?;
    for p in local_minima(nu, kappa, (0.0, 0.0), p1) {
        best = best.min(two_spin_j(p.0, p.1, nu, kappa)?);
    }
    Ok(best - j0)
}

/// Slope `w*` at which an interior local minimum on the segment of slope `w`
/// through `δ_{(−1,−1)}` ties with it; below `w*` the boundary point is the
/// unique global minimizer on the segment.
pub fn critical_slope(nu: &Pmf, kappa: usize) -> Result<f64> {
    if !nu.space().is_two_spin() || !nu.is_interior() || kappa < 3 {
        return Err(Error::Precondition(
            "critical slope needs an interior two-spin mark law and kappa >= 3".into(),
        ));
    }
    let mut lo = 1e-9;
    let mut hi = (kappa as f64 - 2.0) / kappa as f64 - 1e-9;
    let (glo, ghi) = (boundary_margin(nu, kappa, lo)?, boundary_margin(nu, kappa, hi)?);
    if !(glo > 0.0 && ghi < 0.0) {
        return Err(Error::Branch(format!(
            "no boundary-minimizer window: margins {glo:e} at w = {lo}, {ghi:e} at w = {hi}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if boundary_margin(nu, kappa, mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edge_optimizer::MinimizerKind;
    use crate::spin_measures::SpinSpace;

    fn unif() -> Pmf {
        Pmf::uniform(SpinSpace::two_spin())
    }

    #[test]
    fn closed_form_interior_minimizer() {
        let r = solve_two_spin(&unif(), &EdgePotential::consensus(), 1.0, 3).unwrap();
        assert_eq!(r.minimizers.len(), 1);
        let m = &r.minimizers[0];
        assert_eq!(m.kind, MinimizerKind::Interior);
        assert!((m.pi.get(0, 0) - 1.0 / 3.0).abs() < 1e-10);
        assert!((m.pi.get(0, 1) - 1.0 / 6.0).abs() < 1e-10);
        assert!((m.beta.unwrap() - (1.0f64 / 3.0).atanh()).abs() < 1e-10);
        assert!(m.stationarity_residual.unwrap() < 1e-9);
    }

    #[test]
    fn boundary_global_minimizer() {
        let nu = Pmf::bernoulli(1.0 / 3.0).unwrap();
        let h = EdgePotential::two_spin(7.0, -5.0, 4.0);
        let r = solve_two_spin(&nu, &h, 20.0, 5).unwrap();
        assert_eq!(r.minimizers.len(), 1);
        let m = &r.minimizers[0];
        assert_eq!(m.kind, MinimizerKind::Boundary);
        assert_eq!(m.pi.weights(), &[0.0, 0.0, 0.0, 1.0]);
        assert_eq!(m.support, vec!["-1".to_string()]);
    }

    #[test]
    fn alternating_endpoint() {
        let r = solve_two_spin(&unif(), &EdgePotential::consensus(), -4.0, 4).unwrap();
        assert_eq!(r.minimizers.len(), 1);
        assert_eq!(r.minimizers[0].pi.weights(), &[0.0, 0.5, 0.5, 0.0]);
    }

    #[test]
    fn symmetric_pair_above_transition() {
        let r = solve_two_spin(&unif(), &EdgePotential::consensus(), 1.6, 3).unwrap();
        assert_eq!(r.minimizers.len(), 2);
        let s: Vec<f64> = r.minimizers.iter().map(|m| m.pi.marginal().weights()[0]).collect();
        assert!((s[0] + s[1] - 1.0).abs() < 1e-8);
        assert!((r.minimizers[0].value - r.minimizers[1].value).abs() < 1e-9);
        assert!(r.minimizers.iter().all(|m| m.is_interior()));
    }

    #[test]
    fn typical_value_gives_product() {
        let nu = Pmf::bernoulli(0.3).unwrap();
        let c = 3.0 * 0.4f64.powi(2);
        let r = solve_two_spin(&nu, &EdgePotential::consensus(), c, 3).unwrap();
        assert!(r.value.abs() < 1e-12);
        let prod = EdgeMeasure::product(&nu, &nu).unwrap();
        assert!(r.minimizers[0].pi.tv(&prod) < 1e-8);
    }

    #[test]
    fn infeasible_rejected() {
        let r = solve_two_spin(&unif(), &EdgePotential::consensus(), 3.5, 3);
        assert!(matches!(r, Err(Error::Infeasible { .. })));
    }

    #[test]
    fn critical_slope_value() {
        let nu = Pmf::bernoulli(1.0 / 3.0).unwrap();
        let w = critical_slope(&nu, 5).unwrap();
        assert!((w - 0.2009100493).abs() < 1e-8, "{w}");
    }
}
