use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CompensatedSum, RegularGraph};
use crate::error::{Error, Result};
use crate::spin_measures::{EdgeMeasure, EdgePotential, Pmf};

/// Largest number of mark vectors enumerated exactly.
pub const MAX_ENUMERATION: f64 = 16_777_216.0;

const EVENT_TOL: f64 = 1e-12;
const TARGET_CHUNKS: usize = 256;

/// Side of the consensus event `{consensus ≥ c}` or `{consensus ≤ c}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Ge,
    Le,
}

impl Direction {
    /// `≥` above the typical value, `≤` below it.
    pub fn toward(c: f64, c_ref: f64) -> Self {
        if c >= c_ref {
            Direction::Ge
        } else {
            Direction::Le
        }
    }

    /// Sharpened threshold `c ± δ`.
    pub fn threshold(self, c: f64, delta: f64) -> f64 {
        match self {
            Direction::Ge => c + delta,
            Direction::Le => c - delta,
        }
    }

    pub fn holds(self, value: f64, threshold: f64) -> bool {
        let slack = EVENT_TOL * (1.0 + threshold.abs());
        match self {
            Direction::Ge => value >= threshold - slack,
            Direction::Le => value <= threshold + slack,
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ge" | ">=" => Ok(Direction::Ge),
            "le" | "<=" => Ok(Direction::Le),
            _ => Err(Error::Parse(format!("direction must be ge or le, got {s:?}"))),
        }
    }
}

/// Exact conditional statistics of i.i.d. marks on a fixed graph.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactConditional {
    pub probability: f64,
    /// Total mass of all mark vectors; 1 up to rounding.
    pub total_mass: f64,
    /// `E[edge empirical measure | event]`; `None` when the event is null.
    pub conditional_edge_marginal: Option<EdgeMeasure>,
    pub min_consensus: f64,
    pub max_consensus: f64,
}

struct Walker<'a> {
    g: &'a RegularGraph,
    q: usize,
    marks: Vec<usize>,
    counts: Vec<usize>,
    pairs: Vec<i64>,
}

impl Walker<'_> {
    fn set(&mut self, v: usize, new: usize) {
        let q = self.q;
        let old = self.marks[v];
        for &u in self.g.neighbors(v) {
            let y = self.marks[u];
            self.pairs[old * q + y] -= 1;
            self.pairs[y * q + old] -= 1;
            self.pairs[new * q + y] += 1;
            self.pairs[y * q + new] += 1;
        }
        self.counts[old] -= 1;
        self.counts[new] += 1;
        self.marks[v] = new;
    }
}

#[derive(Clone)]
struct Acc {
    prob: CompensatedSum,
    total: CompensatedSum,
    edge: Vec<CompensatedSum>,
    lo: f64,
    hi: f64,
}

impl Acc {
    fn new(q: usize) -> Self {
        Self {
            prob: CompensatedSum::default(),
            total: CompensatedSum::default(),
            edge: vec![CompensatedSum::default(); q * q],
            lo: f64::INFINITY,
            hi: f64::NEG_INFINITY,
        }
    }
}

/// Exact `P(event | g)` and the conditional expected edge empirical measure,
/// by enumerating all mark vectors (binary Gray code for two labels,
/// odometer order otherwise).
pub fn exact_conditional(
    g: &RegularGraph,
    nu: &Pmf,
    h: &EdgePotential,
    c: f64,
    direction: Direction,
    delta: f64,
) -> Result<ExactConditional> {
    if h.space() != nu.space() {
        return Err(Error::Precondition("potential and mark law on different spaces".into()));
    }
    if delta.is_nan() || delta < 0.0 {
        return Err(Error::Precondition(format!("delta = {delta} must be non-negative")));
    }
    let q = nu.len();
    let n = g.n;
    let states = (q as f64).powi(n as i32);
    if states > MAX_ENUMERATION {
        return Err(Error::TooLarge {
            states,
            limit: MAX_ENUMERATION,
        });
    }
    let threshold = direction.threshold(c, delta);
    let pw: Vec<Vec<f64>> = nu
        .weights()
        .iter()
        .map(|&p| (0..=n).map(|k| p.powi(k as i32)).collect())
        .collect();
    let hv = h.values();

    let mut top = 0;
    while top < n && q.pow(top as u32) < TARGET_CHUNKS {
        top += 1;
    }
    let low = n - top;
    let chunks = q.pow(top as u32);

    let parts: Vec<Acc> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut w = Walker {
                g,
                q,
                marks: vec![0; n],
                counts: vec![0; q],
                pairs: vec![0; q * q],
            };
            w.counts[0] = n;
            w.pairs[0] = (n * g.kappa) as i64;
            let mut rest = chunk;
            for v in (low..n).rev() {
                let x = rest % q;
                rest /= q;
                if x != 0 {
                    w.set(v, x);
                }
            }
            let mut acc = Acc::new(q);
            let mut visit = |w: &Walker| {
                let weight: f64 = (0..q).map(|x| pw[x][w.counts[x]]).product();
                let cons = w
                    .pairs
                    .iter()
                    .zip(hv)
                    .map(|(&k, &hh)| k as f64 * hh)
                    .sum::<f64>()
                    / n as f64;
                acc.total.add(weight);
                acc.lo = acc.lo.min(cons);
                acc.hi = acc.hi.max(cons);
                if direction.holds(cons, threshold) {
                    acc.prob.add(weight);
                    for (e, &k) in acc.edge.iter_mut().zip(&w.pairs) {
                        if k != 0 {
                            e.add(weight * k as f64);
                        }
                    }
                }
            };
            visit(&w);
            if q == 2 {
                for k in 1u64..(1u64 << low) {
                    let v = k.trailing_zeros() as usize;
                    let new = 1 - w.marks[v];
                    w.set(v, new);
                    visit(&w);
                }
            } else {
                'outer: loop {
                    let mut d = 0;
                    while d < low && w.marks[d] == q - 1 {
                        d += 1;
                    }
                    if d == low {
                        break 'outer;
                    }
                    for v in 0..d {
                        w.set(v, 0);
                    }
                    let next = w.marks[d] + 1;
                    w.set(d, next);
                    visit(&w);
                }
            }
            acc
        })
        .collect();

    let mut prob = CompensatedSum::default();
    let mut total = CompensatedSum::default();
    let mut edge = vec![CompensatedSum::default(); q * q];
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for a in &parts {
        prob.add(a.prob.value());
        total.add(a.total.value());
        for (e, x) in edge.iter_mut().zip(&a.edge) {
            e.add(x.value());
        }
        lo = lo.min(a.lo);
        hi = hi.max(a.hi);
    }
    let p = prob.value();
    let conditional_edge_marginal = if p > 0.0 {
        let scale = p * (n * g.kappa) as f64;
        Some(EdgeMeasure::from_unnormalized(
            nu.space().clone(),
            edge.iter().map(|e| e.value() / scale).collect(),
        )?)
    } else {
        None
    };
    Ok(ExactConditional {
        probability: p,
        total_mass: total.value(),
        conditional_edge_marginal,
        min_consensus: lo,
        max_consensus: hi,
    })
}
