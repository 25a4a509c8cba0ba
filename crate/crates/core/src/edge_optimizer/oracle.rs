use rayon::prelude::*;
use serde::Serialize;

use super::{check_problem, TIE_TOL};
use crate::error::{Error, Result};
use crate::spin_measures::{EdgeMeasure, EdgePotential, Pmf};

/// Largest lattice the oracle will enumerate.
pub const MAX_ORACLE_CELLS: f64 = 2e8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleResult {
    pub value: f64,
    /// Grid points within `1e-9` of the minimum.
    pub argmins: Vec<EdgeMeasure>,
    pub resolution: f64,
    pub cells: usize,
}

struct Problem {
    q: usize,
    k: f64,
    log_nu: Vec<f64>,
    /// Unordered cells `(x, z)`, `x ≤ z`.
    cells: Vec<(usize, usize)>,
    solved: Vec<usize>,
    free: Vec<usize>,
    hv: Vec<f64>,
    target: f64,
}

fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

impl Problem {
    fn matrix(&self, m: &[f64]) -> Vec<f64> {
        let q = self.q;
        let mut w = vec![0.0; q * q];
        for (&(x, z), &v) in self.cells.iter().zip(m) {
            if x == z {
                w[x * q + x] = v;
            } else {
                w[x * q + z] = 0.5 * v;
                w[z * q + x] = 0.5 * v;
            }
        }
        w
    }

    fn j(&self, m: &[f64]) -> f64 {
        let q = self.q;
        let w = self.matrix(m);
        let mut out = 0.0;
        for x in 0..q {
            let po: f64 = w[x * q..(x + 1) * q].iter().sum();
            out += (1.0 - self.k) * xlogx(po) - po * self.log_nu[x];
        }
        out + 0.5 * self.k * w.iter().map(|&v| xlogx(v)).sum::<f64>()
    }

    /// Completes the free masses with the solved cells; `None` if infeasible.
    fn complete(&self, m: &mut [f64]) -> Option<()> {
        let rest: f64 = 1.0 - self.free.iter().map(|&i| m[i]).sum::<f64>();
        let hrest: f64 = self.target - self.free.iter().map(|&i| m[i] * self.hv[i]).sum::<f64>();
        match self.solved.as_slice() {
            [a] => m[*a] = rest,
            [a, b] => {
                let (ha, hb) = (self.hv[*a], self.hv[*b]);
                m[*a] = (hrest - hb * rest) / (ha - hb);
                m[*b] = rest - m[*a];
            }
            _ => unreachable!(),
        }
        for &i in &self.solved {
            if m[i] < -1e-12 {
                return None;
            }
            m[i] = m[i].max(0.0);
        }
        Some(())
    }
}

fn walk(p: &Problem, depth: usize, left: usize, res: f64, m: &mut Vec<f64>, out: &mut Acc) {
    if depth == p.free.len() {
        let mut full = m.clone();
        if p.complete(&mut full).is_some() {
            out.push(p.j(&full), full);
        }
        return;
    }
    for k in 0..=left {
        m[p.free[depth]] = k as f64 * res;
        walk(p, depth + 1, left - k, res, m, out);
    }
}

#[derive(Default)]
struct Acc {
    best: f64,
    points: Vec<(f64, Vec<f64>)>,
    cells: usize,
}

impl Acc {
    fn new() -> Self {
        Self {
            best: f64::INFINITY,
            ..Default::default()
        }
    }

    fn push(&mut self, v: f64, m: Vec<f64>) {
        self.cells += 1;
        if v < self.best - TIE_TOL {
            self.best = v;
            self.points.retain(|(w, _)| *w <= v + TIE_TOL);
        }
        if v <= self.best + TIE_TOL {
            self.best = self.best.min(v);
            self.points.push((v, m));
        }
    }

    fn merge(mut self, other: Acc) -> Acc {
        self.cells += other.cells;
        for (v, m) in other.points {
            self.cells -= 1;
            self.push(v, m);
        }
        self
    }
}

/// Brute-force minimum of `J^ν_κ` over a lattice of cell masses in
/// `B_h(c)`, for `|X| ≤ 3`. Two cells with distinct `h` are solved from the
/// mass and consensus constraints; the rest range over multiples of
/// `resolution`.
pub fn grid_oracle(
    nu: &Pmf,
    h: &EdgePotential,
    c: f64,
    kappa: usize,
    resolution: f64,
) -> Result<OracleResult> {
    check_problem(nu, h, c, kappa)?;
    let q = h.q();
    if q > 3 {
        return Err(Error::TooLarge {
            states: q as f64,
            limit: 3.0,
        });
    }
    if !(resolution > 0.0 && resolution <= 0.5) {
        return Err(Error::Precondition(format!("resolution {resolution} outside (0, 0.5]")));
    }
    let cells: Vec<(usize, usize)> = (0..q).flat_map(|x| (x..q).map(move |z| (x, z))).collect();
    let hv: Vec<f64> = cells.iter().map(|&(x, z)| h.get(x, z)).collect();
    let n = cells.len();
    let mut pair = None;
    let mut spread = 0.0;
    for a in 0..n {
        for b in a + 1..n {
            let d = (hv[a] - hv[b]).abs();
            if d > spread {
                spread = d;
                pair = Some((a, b));
            }
        }
    }
    let solved = match pair {
        Some((a, b)) => vec![a, b],
        None => vec![n - 1],
    };
    let free: Vec<usize> = (0..n).filter(|i| !solved.contains(i)).collect();
    let steps = (1.0 / resolution + 1e-9).floor() as usize;
    let f = free.len() as i32;
    let estimate = (steps as f64 + 1.0).powi(f) / (1..=f).map(f64::from).product::<f64>();
    if estimate > MAX_ORACLE_CELLS {
        return Err(Error::TooLarge {
            states: estimate,
            limit: MAX_ORACLE_CELLS,
        });
    }
    let p = Problem {
        q,
        k: kappa as f64,
        log_nu: nu.weights().iter().map(|v| v.ln()).collect(),
        cells,
        solved,
        free,
        hv,
        target: c / kappa as f64,
    };
    let acc = if p.free.is_empty() {
        let mut acc = Acc::new();
        walk(&p, 0, steps, resolution, &mut vec![0.0; n], &mut acc);
        acc
    } else {
        (0..=steps)
            .into_par_iter()
            .map(|k0| {
                let mut acc = Acc::new();
                let mut m = vec![0.0; n];
                m[p.free[0]] = k0 as f64 * resolution;
                walk(&p, 1, steps - k0, resolution, &mut m, &mut acc);
                acc
            })
            .reduce(Acc::new, Acc::merge)
    };
    if acc.points.is_empty() {
        return Err(Error::Degenerate("no lattice point satisfies the constraint".into()));
    }
    let mut argmins: Vec<EdgeMeasure> = Vec::new();
    let mut pts = acc.points;
    pts.sort_by(|a, b| super::cmp_lex(&a.1, &b.1));
    for (v, m) in pts {
        if v <= acc.best + TIE_TOL {
            let e = EdgeMeasure::from_unnormalized(h.space().clone(), p.matrix(&m))?;
            if argmins.iter().all(|a| a.tv(&e) > 1e-12) {
                argmins.push(e);
            }
        }
    }
    Ok(OracleResult {
        value: acc.best,
        argmins,
        resolution,
        cells: acc.cells,
    })
}
