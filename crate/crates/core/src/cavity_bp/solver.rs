use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const DEDUP_TV: f64 = 1e-8;
const SCAN_POINTS: usize = 4096;
const START_SEED: u64 = 0x5eed_b0b0_cafe_f00d;

fn lse(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = v.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn softmax(u: &[f64]) -> Vec<f64> {
    let z = lse(u.iter().copied());
    u.iter().map(|x| (x - z).exp()).collect()
}

fn log_vec(p: &[f64]) -> Vec<f64> {
    p.iter().map(|x| x.ln()).collect()
}

fn tv(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// BP map in log coordinates. `log_psi` may contain `-inf` (masked cells).
#[derive(Clone, Debug)]
pub(crate) struct BpSystem {
    q: usize,
    k: f64,
    log_psi: Vec<f64>,
    log_psibar: Vec<f64>,
}

impl BpSystem {
    pub(crate) fn new(q: usize, kappa: usize, log_psi: Vec<f64>, log_psibar: Vec<f64>) -> Self {
        Self {
            q,
            k: kappa as f64,
            log_psi,
            log_psibar,
        }
    }

    fn row(&self, x: usize, u: &[f64]) -> f64 {
        let q = self.q;
        lse((0..q).map(move |z| self.log_psi[x * q + z] + u[z]))
    }

    /// Unnormalized log image `log ψ̄(x) + (κ−1) log Σ_z ψ(x,z) e^{u(z)}`.
    fn log_image(&self, u: &[f64]) -> Vec<f64> {
        (0..self.q)
            .map(|x| self.log_psibar[x] + (self.k - 1.0) * self.row(x, u))
            .collect()
    }

    pub(crate) fn step(&self, ell: &[f64]) -> Vec<f64> {
        softmax(&self.log_image(&log_vec(ell)))
    }

    pub(crate) fn residual(&self, ell: &[f64]) -> f64 {
        self.step(ell)
            .iter()
            .zip(ell)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Damped iteration: `α = 0.5`, switching to `α = 1` once the update is
    /// below `1e-4`; `α` is halved whenever the update stops shrinking.
    fn damped(&self, start: &[f64], max_iter: usize) -> Vec<f64> {
        let mut ell = start.to_vec();
        let mut alpha = 0.5;
        let mut prev = f64::INFINITY;
        let mut stalled = 0;
        for _ in 0..max_iter {
            let img = self.step(&ell);
            let diff = img.iter().zip(&ell).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if diff < 1e-15 {
                break;
            }
            let a = if diff < 1e-4 && alpha >= 0.5 { 1.0 } else { alpha };
            for (l, i) in ell.iter_mut().zip(&img) {
                *l = (1.0 - a) * *l + a * i;
            }
            if diff >= prev {
                stalled += 1;
                if stalled >= 8 {
                    alpha = (alpha * 0.5).max(1.0 / 256.0);
                    stalled = 0;
                }
            } else {
                stalled = 0;
            }
            prev = diff;
        }
        ell
    }

    /// Reduced map `v ↦ w(v) − v` with `u = (v, 0)`, together with its Jacobian.
    fn reduced(&self, v: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
        let q = self.q;
        let d = q - 1;
        let mut u = v.to_vec();
        u.push(0.0);
        let g = self.log_image(&u);
        let kern: Vec<Vec<f64>> = (0..q)
            .map(|x| softmax(&(0..q).map(|z| self.log_psi[x * q + z] + u[z]).collect::<Vec<_>>()))
            .collect();
        let f = (0..d).map(|x| g[x] - g[d] - v[x]).collect();
        let jac = DMatrix::from_fn(d, d, |x, z| {
            (self.k - 1.0) * (kern[x][z] - kern[d][z]) - if x == z { 1.0 } else { 0.0 }
        });
        (f, jac)
    }

    fn newton(&self, v0: &[f64]) -> Option<Vec<f64>> {
        let norm = |f: &[f64]| f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let mut v = v0.to_vec();
        let (mut f, mut jac) = self.reduced(&v);
        if f.iter().any(|x| !x.is_finite()) {
            return None;
        }
        for _ in 0..200 {
            let fnorm = norm(&f);
            if fnorm < 1e-14 {
                break;
            }
            let step = jac.clone().lu().solve(&DVector::from_column_slice(&f))?;
            let mut lambda = 1.0;
            loop {
                let trial: Vec<f64> = v.iter().zip(step.iter()).map(|(a, s)| a - lambda * s).collect();
                let (ft, jt) = self.reduced(&trial);
                if ft.iter().all(|x| x.is_finite()) && norm(&ft) < fnorm {
                    v = trial;
                    f = ft;
                    jac = jt;
                    break;
                }
                lambda *= 0.5;
                if lambda < 1e-10 {
                    return None;
                }
            }
            if v.iter().any(|x| x.abs() > 1e3) {
                return None;
            }
        }
        let mut u = v;
        u.push(0.0);
        Some(softmax(&u))
    }

    fn to_reduced(ell: &[f64]) -> Option<Vec<f64>> {
        let d = ell.len() - 1;
        if ell.iter().any(|x| *x <= 0.0) {
            return None;
        }
        let last = ell[d].ln();
        Some(ell[..d].iter().map(|x| x.ln() - last).collect())
    }

    fn polish(&self, ell: &[f64]) -> Option<Vec<f64>> {
        let v = Self::to_reduced(ell)?;
        self.newton(&v)
    }

    /// Roots of the scalar log-ratio map for `q = 2`, by sign-change scan.
    fn scalar_roots(&self) -> Vec<Vec<f64>> {
        let lp = &self.log_psi;
        let spread = (0..2).map(|z| (lp[z] - lp[2 + z]).abs()).fold(0.0, f64::max);
        let bound = (self.log_psibar[0] - self.log_psibar[1]).abs() + (self.k - 1.0) * spread + 1.0;
        if !bound.is_finite() {
            return Vec::new();
        }
        let f = |v: f64| self.reduced(&[v]).0[0];
        let grid: Vec<f64> = (0..=SCAN_POINTS)
            .map(|i| -bound + 2.0 * bound * i as f64 / SCAN_POINTS as f64)
            .collect();
        let vals: Vec<f64> = grid.iter().map(|&v| f(v)).collect();
        let mut roots = Vec::new();
        for i in 0..SCAN_POINTS {
            let (a, b) = (vals[i], vals[i + 1]);
            if a == 0.0 {
                roots.push(grid[i]);
            } else if a * b < 0.0 {
                let (mut lo, mut hi, mut flo) = (grid[i], grid[i + 1], a);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    let fm = f(mid);
                    if fm == 0.0 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if (fm < 0.0) == (flo < 0.0) {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
        }
        roots
            .into_iter()
            .map(|v| self.newton(&[v]).unwrap_or_else(|| softmax(&[v, 0.0])))
            .collect()
    }

    fn starts(&self, n_starts: usize) -> Vec<Vec<f64>> {
        let q = self.q;
        let uniform = vec![1.0 / q as f64; q];
        let mut out = vec![uniform.clone()];
        for bias in [0.9, 0.999] {
            for x in 0..q {
                out.push(
                    (0..q)
                        .map(|z| (1.0 - bias) * uniform[z] + if z == x { bias } else { 0.0 })
                        .collect(),
                );
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
        while out.len() < n_starts.max(2 * q + 1) {
            let e: Vec<f64> = (0..q).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
            let s: f64 = e.iter().sum();
            out.push(e.into_iter().map(|x| (x / s).max(1e-12)).collect());
        }
        out
    }

    /// Fixed points from damped iteration and Newton polishing, plus the
    /// exhaustive scalar scan for two spins.
    pub(crate) fn fixed_points(&self, n_starts: usize, tol: f64) -> Result<Vec<Vec<f64>>> {
        let starts = self.starts(n_starts);
        let mut candidates: Vec<Vec<f64>> = Vec::new();
        let mut residuals = Vec::with_capacity(2 * starts.len());
        for s in &starts {
            let it = self.damped(s, 2000);
            residuals.push(self.residual(&it));
            candidates.push(self.polish(&it).unwrap_or(it));
            if let Some(n) = self.polish(s) {
                candidates.push(n);
            }
        }
        if self.q == 2 {
            candidates.extend(self.scalar_roots());
        }
        let mut found: Vec<Vec<f64>> = Vec::new();
        for c in candidates {
            if !c.iter().all(|x| x.is_finite() && *x > 0.0) || self.residual(&c) > tol {
                continue;
            }
            if found.iter().all(|f| tv(f, &c) > DEDUP_TV) {
                found.push(c);
            }
        }
        if found.is_empty() {
            return Err(Error::NonConvergence {
                starts: starts.len(),
                residuals,
            });
        }
        found.sort_by(|a, b| {
            a.iter()
                .zip(b)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        Ok(found)
    }

    /// Newton continuation from a nearby boundary law.
    pub(crate) fn continue_from(&self, ell: &[f64], tol: f64) -> Option<Vec<f64>> {
        let out = self.polish(ell)?;
        (self.residual(&out) <= tol).then_some(out)
    }
}
