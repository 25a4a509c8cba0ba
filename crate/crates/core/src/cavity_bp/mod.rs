//! Belief-propagation recursion for general specifications and the scalar
//! Ising cavity map.

mod ising;
mod solver;

pub use ising::{
    beta_crit, boundary_law_to_theta, cavity_map_derivative, field_from_p, ising_cavity_map,
    ising_fixed_points, p_from_field, theta_to_boundary_law, FixedPoint, FixedPointKind,
    FixedPointSet, IsingParams,
};
pub(crate) use ising::logcosh;
pub(crate) use solver::BpSystem;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin_measures::{max_asymmetry, EdgePotential, Pmf, SpinSpace, SYM_TOL};

/// Positive specification `(ψ, ψ̄)`, stored as logarithms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Specification {
    space: SpinSpace,
    log_psi: Vec<f64>,
    log_psibar: Vec<f64>,
}

impl Specification {
    pub fn new(space: SpinSpace, psi: &[f64], psibar: &[f64]) -> Result<Self> {
        if psi.iter().chain(psibar).any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Precondition("specification entries must be positive".into()));
        }
        Self::from_log(
            space,
            psi.iter().map(|v| v.ln()).collect(),
            psibar.iter().map(|v| v.ln()).collect(),
        )
    }

    pub fn from_log(space: SpinSpace, log_psi: Vec<f64>, log_psibar: Vec<f64>) -> Result<Self> {
        let q = space.len();
        if log_psi.len() != q * q {
            return Err(Error::Dimension {
                expected: q * q,
                got: log_psi.len(),
            });
        }
        if log_psibar.len() != q {
            return Err(Error::Dimension {
                expected: q,
                got: log_psibar.len(),
            });
        }
        if log_psi.iter().chain(&log_psibar).any(|v| !v.is_finite()) {
            return Err(Error::Precondition("specification entries must be positive".into()));
        }
        if max_asymmetry(q, &log_psi) > SYM_TOL {
            return Err(Error::Precondition("edge factor must be symmetric".into()));
        }
        Ok(Self {
            space,
            log_psi,
            log_psibar,
        })
    }

    /// `ψ = exp(βh)`, `ψ̄ = ν`.
    pub fn tilted(h: &EdgePotential, beta: f64, nu: &Pmf) -> Result<Self> {
        if h.space() != nu.space() {
            return Err(Error::Precondition("potential and mark law on different spaces".into()));
        }
        if !nu.is_interior() {
            return Err(Error::Precondition("mark law must have full support".into()));
        }
        Self::from_log(
            h.space().clone(),
            h.values().iter().map(|v| beta * v).collect(),
            nu.weights().iter().map(|v| v.ln()).collect(),
        )
    }

    /// Two-spin Ising specification `ψ(x,z) = e^{βxz}`, `ψ̄(x) ∝ e^{Bx}`.
    pub fn ising(beta: f64, field: f64) -> Result<Self> {
        Self::from_log(
            SpinSpace::two_spin(),
            vec![beta, -beta, -beta, beta],
            vec![field, -field],
        )
    }

    pub fn space(&self) -> &SpinSpace {
        &self.space
    }

    pub fn q(&self) -> usize {
        self.space.len()
    }

    pub fn psi(&self, x: usize, z: usize) -> f64 {
        self.log_psi[x * self.q() + z].exp()
    }

    pub fn psibar(&self, x: usize) -> f64 {
        self.log_psibar[x].exp()
    }

    pub fn log_psi(&self) -> &[f64] {
        &self.log_psi
    }

    pub fn log_psibar(&self) -> &[f64] {
        &self.log_psibar
    }

    pub(crate) fn system(&self, kappa: usize) -> BpSystem {
        BpSystem::new(self.q(), kappa, self.log_psi.clone(), self.log_psibar.clone())
    }
}

/// `BPℓ(x) ∝ ψ̄(x) (Σ_z ψ(x,z) ℓ(z))^{κ−1}`.
pub fn bp_step(ell: &Pmf, spec: &Specification, kappa: usize) -> Result<Pmf> {
    check(ell, spec, kappa)?;
    let sys = spec.system(kappa);
    let image = sys.step(ell.weights());
    Pmf::from_unnormalized(spec.space().clone(), image)
}

/// `‖BPℓ − ℓ‖∞`.
pub fn bp_residual(ell: &Pmf, spec: &Specification, kappa: usize) -> Result<f64> {
    check(ell, spec, kappa)?;
    Ok(spec.system(kappa).residual(ell.weights()))
}

/// All BP fixed points found from `n_starts` starts, deduplicated at total
/// variation `1e-8` and sorted lexicographically.
pub fn bp_fixed_points(
    spec: &Specification,
    kappa: usize,
    n_starts: usize,
    tol: f64,
) -> Result<Vec<Pmf>> {
    if kappa < 2 {
        return Err(Error::Precondition(format!("kappa = {kappa} < 2")));
    }
    let found = spec.system(kappa).fixed_points(n_starts, tol)?;
    found
        .into_iter()
        .map(|w| Pmf::from_unnormalized(spec.space().clone(), w))
        .collect()
}

fn check(ell: &Pmf, spec: &Specification, kappa: usize) -> Result<()> {
    if ell.space() != spec.space() {
        return Err(Error::Precondition("boundary law and specification on different spaces".into()));
    }
    if kappa < 2 {
        return Err(Error::Precondition(format!("kappa = {kappa} < 2")));
    }
    Ok(())
}
