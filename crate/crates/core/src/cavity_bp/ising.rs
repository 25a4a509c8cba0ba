use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin_measures::{Pmf, SpinSpace};

const SCAN_POINTS: usize = 4096;

/// `log cosh x`, overflow-free.
pub(crate) fn logcosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// `atanh(tanh a · tanh b) = ½ [log cosh(a+b) − log cosh(a−b)]`.
pub(crate) fn atanh_tanh_product(a: f64, b: f64) -> f64 {
    0.5 * (logcosh(a + b) - logcosh(a - b))
}

/// Field associated with the mark law `Ber(p)`: `B = ½ log(p/(1−p))`.
pub fn field_from_p(p: f64) -> f64 {
    0.5 * (p / (1.0 - p)).ln()
}

/// Inverse of [`field_from_p`]: `p = 1/(1 + e^{−2B})`.
pub fn p_from_field(field: f64) -> f64 {
    1.0 / (1.0 + (-2.0 * field).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsingParams {
    pub kappa: usize,
    pub beta: f64,
    #[serde(rename = "B")]
    pub field: f64,
}

impl IsingParams {
    pub fn new(kappa: usize, beta: f64, field: f64) -> Self {
        Self { kappa, beta, field }
    }

    fn check(&self) -> Result<()> {
        if self.kappa < 2 {
            return Err(Error::Precondition(format!("kappa = {} < 2", self.kappa)));
        }
        if !self.beta.is_finite() || !self.field.is_finite() {
            return Err(Error::Precondition(
                "cavity map requires finite beta and field".into(),
            ));
        }
        Ok(())
    }
}

/// `Γ(θ) = B + (κ−1) atanh(tanh β · tanh θ)`.
pub fn ising_cavity_map(theta: f64, p: &IsingParams) -> Result<f64> {
    p.check()?;
    Ok(gamma(theta, p))
}

fn gamma(theta: f64, p: &IsingParams) -> f64 {
    p.field + (p.kappa as f64 - 1.0) * atanh_tanh_product(p.beta, theta)
}

/// `Γ′(θ) = ((κ−1)/2) [tanh(β+θ) + tanh(β−θ)]`.
pub fn cavity_map_derivative(theta: f64, p: &IsingParams) -> f64 {
    0.5 * (p.kappa as f64 - 1.0) * ((p.beta + theta).tanh() + (p.beta - theta).tanh())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedPointKind {
    ThetaMinus,
    ThetaSharp,
    ThetaPlus,
    ThetaStar,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub theta: f64,
    pub kind: FixedPointKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointSet {
    pub params: IsingParams,
    pub points: Vec<FixedPoint>,
}

impl FixedPointSet {
    pub fn thetas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.theta).collect()
    }

    pub fn get(&self, kind: FixedPointKind) -> Option<f64> {
        self.points.iter().find(|p| p.kind == kind).map(|p| p.theta)
    }

    pub fn smallest(&self) -> f64 {
        self.points[0].theta
    }

    pub fn largest(&self) -> f64 {
        self.points[self.points.len() - 1].theta
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// All fixed points of `Γ`, sorted ascending and classified.
pub fn ising_fixed_points(p: &IsingParams) -> Result<FixedPointSet> {
    p.check()?;
    let k1 = p.kappa as f64 - 1.0;
    let bound = p.field.abs() + k1 * p.beta.abs() + 1.0;
    let f = |t: f64| gamma(t, p) - t;
    let grid: Vec<f64> = (0..=SCAN_POINTS)
        .map(|i| -bound + 2.0 * bound * i as f64 / SCAN_POINTS as f64)
        .collect();
    let vals: Vec<f64> = grid.iter().map(|&t| f(t)).collect();
    let mut thetas = Vec::new();
    for i in 0..SCAN_POINTS {
        if vals[i] == 0.0 {
            thetas.push(grid[i]);
        } else if vals[i] * vals[i + 1] < 0.0 {
            thetas.push(bisect(f, grid[i], grid[i + 1]));
        }
    }
    let kinds: Vec<FixedPointKind> = match (p.beta.partial_cmp(&0.0), thetas.len()) {
        (Some(std::cmp::Ordering::Less), _) => vec![FixedPointKind::ThetaSharp; thetas.len()],
        (_, 3) => vec![
            FixedPointKind::ThetaMinus,
            FixedPointKind::ThetaSharp,
            FixedPointKind::ThetaPlus,
        ],
        (_, 2) => vec![FixedPointKind::ThetaMinus, FixedPointKind::ThetaPlus],
        (_, n) => vec![FixedPointKind::ThetaStar; n],
    };
    let points = thetas
        .into_iter()
        .zip(kinds)
        .map(|(theta, kind)| FixedPoint { theta, kind })
        .collect();
    Ok(FixedPointSet { params: *p, points })
}

/// Uniqueness threshold `β*(κ, B)`.
///
/// For `B ≠ 0` the tangency point on the minority side has the closed form
/// `tanh²θ = ((κ−1)t − 1)/((κ−1)t − t²)`, `t = tanh β`; the margin
/// `m(β) = Γ(θ_t) − θ_t` decreases in `β` and vanishes at `β*`.
pub fn beta_crit(kappa: usize, field: f64) -> f64 {
    if kappa <= 2 {
        return f64::INFINITY;
    }
    let k1 = kappa as f64 - 1.0;
    let b0 = (1.0 / k1).atanh();
    let b = field.abs();
    if b == 0.0 {
        return b0;
    }
    let margin = |beta: f64| {
        let t = beta.tanh();
        let s2 = ((k1 * t - 1.0) / (k1 * t - t * t)).clamp(0.0, 1.0);
        let theta = -(s2.sqrt()).atanh();
        if !theta.is_finite() {
            return f64::NEG_INFINITY;
        }
        b + k1 * atanh_tanh_product(beta, theta) - theta
    };
    let mut hi = 2.0 * b0 + 1.0;
    while margin(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return f64::INFINITY;
        }
    }
    let mut lo = b0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if margin(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `ℓ(1) = e^θ/(e^θ + e^{−θ})`.
pub fn theta_to_boundary_law(theta: f64) -> Pmf {
    let up = 1.0 / (1.0 + (-2.0 * theta).exp());
    let down = 1.0 / (1.0 + (2.0 * theta).exp());
    Pmf::from_unnormalized(SpinSpace::two_spin(), vec![up, down])
        .expect("logistic weights are positive")
}

/// `θ = ½ log(ℓ(1)/ℓ(−1))`.
pub fn boundary_law_to_theta(ell: &Pmf) -> Result<f64> {
    if !ell.space().is_two_spin() {
        return Err(Error::Precondition("two-spin boundary law required".into()));
    }
    let (a, b) = (ell.weights()[0], ell.weights()[1]);
    if a <= 0.0 || b <= 0.0 {
        return Err(Error::Domain("boundary law on the simplex boundary".into()));
    }
    Ok(0.5 * (a.ln() - b.ln()))
}
