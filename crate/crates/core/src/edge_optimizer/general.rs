use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{assemble, check_problem, make_minimizer, MinimizerReport};
use crate::cavity_bp::BpSystem;
use crate::error::{Error, Result};
use crate::spin_measures::{EdgeMeasure, EdgePotential, Pmf};

const FP_TOL: f64 = 1e-12;
const BETA_TOL: f64 = 1e-11;
/// Full subset enumeration up to this many spins.
const MAX_FULL_SUBSETS: usize = 6;

/// Seed grid for the Lagrange multiplier `β`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Default for BetaGrid {
    fn default() -> Self {
        Self {
            lo: -12.0,
            hi: 12.0,
            points: 241,
        }
    }
}

impl BetaGrid {
    pub fn values(&self) -> Vec<f64> {
        let n = self.points.max(2);
        (0..n)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / (n - 1) as f64)
            .collect()
    }
}

/// Restricted problem on `S²`.
struct Restricted {
    n: usize,
    kappa: usize,
    h: Vec<f64>,
    log_nu: Vec<f64>,
    c: f64,
}

/// Entries below this are numerically on the simplex boundary.
const SNAP: f64 = 1e-14;

fn edge_from(ell: &[f64], log_psi: &[f64]) -> Vec<f64> {
    let n = ell.len();
    let mut w: Vec<f64> = (0..n * n)
        .map(|i| ell[i / n] * log_psi[i].exp() * ell[i % n])
        .collect();
    for _ in 0..2 {
        let z: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| {
            *v /= z;
            if *v < SNAP {
                *v = 0.0;
            }
        });
    }
    w
}

fn tv(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

impl Restricted {
    fn log_psi(&self, beta: f64) -> Vec<f64> {
        self.h.iter().map(|v| beta * v).collect()
    }

    fn system(&self, log_psi: Vec<f64>) -> BpSystem {
        BpSystem::new(self.n, self.kappa, log_psi, self.log_nu.clone())
    }

    fn gap(&self, ell: &[f64], beta: f64) -> f64 {
        let w = edge_from(ell, &self.log_psi(beta));
        self.kappa as f64 * w.iter().zip(&self.h).map(|(a, b)| a * b).sum::<f64>() - self.c
    }

    fn n_starts(&self) -> usize {
        16.max(4 * self.n)
    }

    /// Fixed points at `β` with their consensus gaps.
    fn at(&self, beta: f64) -> Vec<(Vec<f64>, f64)> {
        self.system(self.log_psi(beta))
            .fixed_points(self.n_starts(), FP_TOL)
            .unwrap_or_default()
            .into_iter()
            .map(|l| {
                let g = self.gap(&l, beta);
                (l, g)
            })
            .collect()
    }

    /// Follows one branch across a sign change of the gap.
    fn bisect(&self, mut lo: f64, mut hi: f64, mut l_lo: Vec<f64>, mut l_hi: Vec<f64>) -> Option<(f64, Vec<f64>)> {
        let g_lo = self.gap(&l_lo, lo);
        while hi - lo > BETA_TOL {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let sys = self.system(self.log_psi(mid));
            let l_mid = sys
                .continue_from(&l_hi, FP_TOL)
                .or_else(|| sys.continue_from(&l_lo, FP_TOL))?;
            let g = self.gap(&l_mid, mid);
            if g == 0.0 {
                return Some((mid, l_mid));
            }
            if (g < 0.0) == (g_lo < 0.0) {
                lo = mid;
                l_lo = l_mid;
            } else {
                hi = mid;
                l_hi = l_mid;
            }
        }
        let beta = 0.5 * (lo + hi);
        let ell = self.system(self.log_psi(beta)).continue_from(&l_hi, FP_TOL)?;
        Some((beta, ell))
    }

    /// Edge measures on `S²` that are BP-stationary with consensus `c`.
    fn interior(&self, grid: &BetaGrid) -> (Vec<Vec<f64>>, usize) {
        let betas = grid.values();
        let sets: Vec<Vec<(Vec<f64>, f64)>> = betas.par_iter().map(|&b| self.at(b)).collect();
        let mut jobs = Vec::new();
        let mut out = Vec::new();
        for (i, set) in sets.iter().enumerate() {
            for (l, g) in set {
                if *g == 0.0 {
                    out.push(edge_from(l, &self.log_psi(betas[i])));
                }
            }
            if i + 1 == sets.len() {
                break;
            }
            for (l_hi, g_hi) in &sets[i + 1] {
                let near = set
                    .iter()
                    .min_by(|a, b| tv(&a.0, l_hi).total_cmp(&tv(&b.0, l_hi)));
                if let Some((l_lo, g_lo)) = near {
                    if g_lo * g_hi < 0.0 {
                        jobs.push((betas[i], betas[i + 1], l_lo.clone(), l_hi.clone()));
                    }
                }
            }
        }
        let examined = jobs.len() + out.len();
        let found: Vec<Vec<f64>> = jobs
            .into_par_iter()
            .filter_map(|(lo, hi, a, b)| self.bisect(lo, hi, a, b))
            .map(|(beta, l)| edge_from(&l, &self.log_psi(beta)))
            .collect();
        out.extend(found);
        (out, examined)
    }

    /// Stationary points supported on the cells where `κh = c`.
    fn masked(&self) -> Vec<Vec<f64>> {
        let k = self.kappa as f64;
        let tol = 1e-12 * (1.0 + self.c.abs());
        let log_psi: Vec<f64> = self
            .h
            .iter()
            .map(|v| if (k * v - self.c).abs() <= tol { 0.0 } else { f64::NEG_INFINITY })
            .collect();
        self.system(log_psi.clone())
            .fixed_points(self.n_starts(), FP_TOL)
            .unwrap_or_default()
            .into_iter()
            .map(|l| edge_from(&l, &log_psi))
            .filter(|w| w.iter().all(|v| v.is_finite()))
            .collect()
    }
}

fn subsets(q: usize) -> Vec<Vec<usize>> {
    let all = |mask: usize| (0..q).filter(|i| mask >> i & 1 == 1).collect::<Vec<_>>();
    if q <= MAX_FULL_SUBSETS {
        (1..1usize << q).map(all).collect()
    } else {
        let mut out: Vec<Vec<usize>> = (0..q).map(|x| vec![x]).collect();
        for x in 0..q {
            for z in x + 1..q {
                out.push(vec![x, z]);
            }
        }
        out.push((0..q).collect());
        out
    }
}

/// General finite-`X` solver.
///
/// Every vertex support `S ⊆ X` with a feasible restricted problem is
/// searched: constant `h` on `S²` gives `ν_S⊗ν_S`; interior `c` gives the
/// BP-stationary measures `∝ ℓ(x)e^{βh}ℓ(z)` found by tracking fixed-point
/// branches over the `β` grid and bisecting the consensus gap; extreme `c`
/// gives masked BP on the cells attaining it. The global minimum of `J^ν_κ`
/// over all candidates is returned.
pub fn solve_general(
    nu: &Pmf,
    h: &EdgePotential,
    c: f64,
    kappa: usize,
    grid: &BetaGrid,
) -> Result<MinimizerReport> {
    check_problem(nu, h, c, kappa)?;
    let q = h.q();
    let k = kappa as f64;
    let tol = 1e-12 * (1.0 + c.abs());
    let space = h.space().clone();
    let mut cands: Vec<EdgeMeasure> = Vec::new();
    let mut examined = 0;
    for s in subsets(q) {
        let (lo, hi) = h.range_on(&s);
        let nus = nu.restrict(&s)?;
        let r = Restricted {
            n: s.len(),
            kappa,
            h: h.restrict(&s),
            log_nu: nus.iter().map(|v| v.ln()).collect(),
            c,
        };
        let found: Vec<Vec<f64>> = if lo == hi {
            if (c - k * lo).abs() > tol {
                continue;
            }
            examined += 1;
            let n = s.len();
            vec![(0..n * n).map(|i| nus[i / n] * nus[i % n]).collect()]
        } else if k * lo + tol < c && c < k * hi - tol {
            let (f, e) = r.interior(grid);
            examined += e;
            f
        } else if (c - k * lo).abs() <= tol || (c - k * hi).abs() <= tol {
            let f = r.masked();
            examined += f.len();
            f
        } else {
            continue;
        };
        for w in found {
            cands.push(EdgeMeasure::lift(&space, &s, &w)?);
        }
    }
    if cands.is_empty() {
        return Err(Error::Branch("no stationary candidate found on any support".into()));
    }
    let ms = cands
        .into_iter()
        .map(|pi| make_minimizer(pi, nu, h, kappa))
        .collect::<Result<Vec<_>>>()?;
    assemble(ms, nu, h, c, kappa, examined, q >= 3)
}
