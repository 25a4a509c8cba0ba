use serde::{Deserialize, Serialize};

use super::{xlogx, EdgeMeasure, EdgePotential, Pmf, SpinSpace};
use crate::error::{Error, Result};

const DELTA_TOL: f64 = 1e-14;

/// Coordinates `(s, t)` of a symmetric two-spin edge measure:
/// `π(1,1) = s − t`, `π(1,−1) = t`, `π(−1,−1) = 1 − s − t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoSpinCoords {
    pub s: f64,
    pub t: f64,
}

impl TwoSpinCoords {
    pub fn new(s: f64, t: f64) -> Result<Self> {
        if !(s.is_finite() && t.is_finite())
            || t < -DELTA_TOL
            || s - t < -DELTA_TOL
            || s + t > 1.0 + DELTA_TOL
        {
            return Err(Error::Domain(format!("(s, t) = ({s}, {t}) lies outside the simplex")));
        }
        Ok(Self { s, t })
    }

    pub fn is_interior(&self) -> bool {
        self.t > 0.0 && self.s - self.t > 0.0 && 1.0 - self.s - self.t > 0.0
    }

    fn cells(&self) -> [f64; 3] {
        [
            (self.s - self.t).max(0.0),
            self.t.max(0.0),
            (1.0 - self.s - self.t).max(0.0),
        ]
    }
}

pub fn two_spin_pi(c: TwoSpinCoords) -> Result<EdgeMeasure> {
    let c = TwoSpinCoords::new(c.s, c.t)?;
    let [a, b, d] = c.cells();
    EdgeMeasure::from_unnormalized(SpinSpace::two_spin(), vec![a, b, b, d])
}

/// Inverse of [`two_spin_pi`].
pub fn two_spin_coords(pi: &EdgeMeasure) -> Result<TwoSpinCoords> {
    if !pi.space().is_two_spin() {
        return Err(Error::Precondition("two-spin space required".into()));
    }
    Ok(TwoSpinCoords {
        s: pi.get(0, 0) + pi.get(0, 1),
        t: pi.get(0, 1),
    })
}

fn check_two_spin(nu: &Pmf, kappa: usize) -> Result<()> {
    if !nu.space().is_two_spin() {
        return Err(Error::Precondition("two-spin mark law required".into()));
    }
    if !nu.is_interior() {
        return Err(Error::Precondition("mark law must have full support".into()));
    }
    if kappa < 2 {
        return Err(Error::Precondition(format!("kappa = {kappa} < 2")));
    }
    Ok(())
}

/// `J^(2)_κ(s, t)`, the uniform-mark rate.
fn j2(s: f64, k: f64, cells: [f64; 3]) -> f64 {
    2f64.ln() - (k - 1.0) * (xlogx(s) + xlogx(1.0 - s))
        + 0.5 * k * (xlogx(cells[0]) + 2.0 * xlogx(cells[1]) + xlogx(cells[2]))
}

/// `J^ν_κ(π[s, t])`, defined on the closed simplex.
pub fn two_spin_j(s: f64, t: f64, nu: &Pmf, kappa: usize) -> Result<f64> {
    check_two_spin(nu, kappa)?;
    let c = TwoSpinCoords::new(s, t)?;
    let (n1, nm) = (nu.weights()[0], nu.weights()[1]);
    Ok(s * (nm / n1).ln() - (2.0 * nm).ln() + j2(s, kappa as f64, c.cells()))
}

/// Value and gradient `(J, ∂s J, ∂t J)` at an interior point of the simplex.
pub fn two_spin_j_and_grad(s: f64, t: f64, nu: &Pmf, kappa: usize) -> Result<(f64, f64, f64)> {
    let value = two_spin_j(s, t, nu, kappa)?;
    let c = TwoSpinCoords { s, t };
    if !c.is_interior() {
        return Err(Error::Domain(format!("gradient undefined at boundary point ({s}, {t})")));
    }
    let k = kappa as f64;
    let (n1, nm) = (nu.weights()[0], nu.weights()[1]);
    let [a, b, d] = c.cells();
    let ds = (1.0 - k) * (s / (1.0 - s)).ln() + 0.5 * k * (a / d).ln() + (nm / n1).ln();
    let dt = -0.5 * k * (a * d / (b * b)).ln();
    Ok((value, ds, dt))
}

/// `t(c) = (1 − c/κ)/4`, the height of the consensus constraint segment.
pub fn t_of_c(c: f64, kappa: usize) -> Result<f64> {
    let k = kappa as f64;
    if !(-k..=k).contains(&c) {
        return Err(Error::Domain(format!("c = {c} outside [-{k}, {k}]")));
    }
    Ok(0.25 * (1.0 - c / k))
}

/// Slope of the two-spin constraint segment; `None` when undefined.
pub fn slope_w(h: &EdgePotential) -> Option<f64> {
    if h.q() != 2 {
        return None;
    }
    let (h11, h1m, hmm) = (h.get(0, 0), h.get(0, 1), h.get(1, 1));
    let den = h11 + hmm - 2.0 * h1m;
    if den == 0.0 {
        None
    } else {
        Some((h11 - hmm) / den)
    }
}

/// `W_c(s)`, whose sign equals that of `∂²_s J^(2)(s, t(c))`.
pub fn w_c(s: f64, c: f64, kappa: usize) -> f64 {
    let k = kappa as f64;
    0.5 * (3.0 * k - c - 4.0) * (s - 0.5).powi(2) + (k + c) * (k + c - k * c) / (8.0 * k * k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin_measures::{consensus_of_edge, edge_rate_j};

    #[test]
    fn pi_examples() {
        let u = two_spin_pi(TwoSpinCoords::new(0.5, 0.25).unwrap()).unwrap();
        assert!(u.weights().iter().all(|w| *w == 0.25));
        let d = two_spin_pi(TwoSpinCoords::new(0.0, 0.0).unwrap()).unwrap();
        assert_eq!(d.weights(), &[0.0, 0.0, 0.0, 1.0]);
        let p = two_spin_pi(TwoSpinCoords::new(0.8, 0.16).unwrap()).unwrap();
        assert!((p.get(0, 0) - 16.0 / 25.0).abs() < 1e-15);
        assert!((p.get(0, 1) - 4.0 / 25.0).abs() < 1e-15);
        assert!((p.get(1, 1) - 1.0 / 25.0).abs() < 1e-15);
        assert!(TwoSpinCoords::new(0.2, 0.3).is_err());
        assert!(TwoSpinCoords::new(0.8, 0.3).is_err());
    }

    #[test]
    fn closed_form_matches_definition() {
        let nu = Pmf::bernoulli(0.3).unwrap();
        for &(s, t) in &[(0.4, 0.1), (0.9, 0.05), (0.5, 0.5), (0.0, 0.0), (1.0, 0.0), (0.3, 0.3)] {
            let pi = two_spin_pi(TwoSpinCoords::new(s, t).unwrap()).unwrap();
            let a = two_spin_j(s, t, &nu, 4).unwrap();
            let b = edge_rate_j(&pi, &nu, 4).unwrap();
            assert!((a - b).abs() < 1e-13, "({s},{t}): {a} vs {b}");
        }
    }

    #[test]
    fn ds_vanishes_at_half_for_uniform() {
        let nu = Pmf::bernoulli(0.5).unwrap();
        for c in [-2.0, 0.0, 1.0, 2.5] {
            let t = t_of_c(c, 3).unwrap();
            let (_, ds, _) = two_spin_j_and_grad(0.5, t, &nu, 3).unwrap();
            assert!(ds.abs() < 1e-14);
        }
    }

    #[test]
    fn derivative_along_product_curve() {
        // d/ds J^(2)(s, s(1−s)) = log(s/(1−s))
        let nu = Pmf::bernoulli(0.5).unwrap();
        for s in [0.2, 0.5, 0.7] {
            let (_, ds, dt) = two_spin_j_and_grad(s, s * (1.0 - s), &nu, 4).unwrap();
            let total = ds + dt * (1.0 - 2.0 * s);
            assert!((total - (s / (1.0 - s)).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_rejected_on_boundary() {
        let nu = Pmf::bernoulli(0.5).unwrap();
        assert!(matches!(two_spin_j_and_grad(0.5, 0.0, &nu, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn t_of_c_examples() {
        assert_eq!(t_of_c(0.0, 3).unwrap(), 0.25);
        assert_eq!(t_of_c(3.0, 3).unwrap(), 0.0);
        assert_eq!(t_of_c(-3.0, 3).unwrap(), 0.5);
        assert!(t_of_c(3.5, 3).is_err());
    }

    #[test]
    fn constraint_segment_has_constant_consensus() {
        let m = EdgePotential::consensus();
        let c = 1.3;
        let t = t_of_c(c, 4).unwrap();
        for i in 0..=20 {
            let s = t + (1.0 - 2.0 * t) * i as f64 / 20.0;
            let pi = two_spin_pi(TwoSpinCoords::new(s, t).unwrap()).unwrap();
            assert!((consensus_of_edge(&pi, &m, 4).unwrap() - c).abs() < 1e-13);
        }
    }

    #[test]
    fn slope_examples() {
        assert!((slope_w(&EdgePotential::two_spin(7.0, -5.0, 4.0)).unwrap() - 1.0 / 7.0).abs() < 1e-15);
        assert_eq!(slope_w(&EdgePotential::consensus()), Some(0.0));
        assert_eq!(slope_w(&EdgePotential::two_spin(2.0, 2.0, 2.0)), None);
    }
}
