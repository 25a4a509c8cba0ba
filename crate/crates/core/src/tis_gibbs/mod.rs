//! Tree-indexed Gibbs measures on the κ-regular tree from homogeneous
//! boundary laws, their star and tree marginals, and freezing limits.

mod freezing;
mod star;
mod tree;

pub use freezing::{FreezingKind, FreezingMeasure};
pub use star::{star_measure, StarMeasure};
pub use tree::{
    depth_r_marginal, unimodular_extension, TreeMarginal, TreeShape, UnimodularSampler,
    MAX_TREE_STATES,
};

use serde::Serialize;

use crate::cavity_bp::{logcosh, theta_to_boundary_law, Specification};
use crate::error::{Error, Result};
use crate::spin_measures::{EdgeMeasure, Pmf};

/// BP residual accepted for a boundary law.
pub const BOUNDARY_LAW_TOL: f64 = 1e-10;

/// TIS Gibbs measure given by a specification and a homogeneous boundary law.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TisGibbs {
    pub kappa: usize,
    pub spec: Specification,
    pub ell: Pmf,
    pub edge_marginal: EdgeMeasure,
}

impl TisGibbs {
    pub fn new(kappa: usize, spec: Specification, ell: Pmf) -> Result<Self> {
        let r = crate::cavity_bp::bp_residual(&ell, &spec, kappa)?;
        if r.is_nan() || r > BOUNDARY_LAW_TOL {
            return Err(Error::Precondition(format!(
                "boundary law is not a BP fixed point (residual {r:e})"
            )));
        }
        let edge_marginal = edge_marginal(&ell, &spec)?;
        Ok(Self {
            kappa,
            spec,
            ell,
            edge_marginal,
        })
    }

    /// Ising measure with cavity field `θ`.
    pub fn ising(kappa: usize, beta: f64, field: f64, theta: f64) -> Result<Self> {
        Self::new(
            kappa,
            Specification::ising(beta, field)?,
            theta_to_boundary_law(theta),
        )
    }
}

/// `π(x,z) ∝ ℓ(x) ψ(x,z) ℓ(z)`.
pub fn edge_marginal(ell: &Pmf, spec: &Specification) -> Result<EdgeMeasure> {
    if ell.space() != spec.space() {
        return Err(Error::Precondition("boundary law and specification on different spaces".into()));
    }
    if !ell.is_interior() {
        return Err(Error::Precondition("boundary law must be interior".into()));
    }
    let q = spec.q();
    let lp = spec.log_psi();
    let ll: Vec<f64> = ell.weights().iter().map(|v| v.ln()).collect();
    let logw: Vec<f64> = (0..q * q).map(|i| ll[i / q] + lp[i] + ll[i % q]).collect();
    let m = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    EdgeMeasure::from_unnormalized(spec.space().clone(), logw.iter().map(|v| (v - m).exp()).collect())
}

/// `E[σ_o] = sinh 2θ / (e^{−2β} + cosh 2θ)`.
pub fn root_magnetization(theta: f64, beta: f64) -> f64 {
    let t = 2.0 * theta;
    t.tanh() / (1.0 + (-2.0 * beta - logcosh(t)).exp())
}

/// `E[S_m] = κ tanh(β + ½ log cosh 2θ)`.
pub fn ising_consensus(theta: f64, beta: f64, kappa: usize) -> f64 {
    kappa as f64 * (beta + 0.5 * logcosh(2.0 * theta)).tanh()
}
