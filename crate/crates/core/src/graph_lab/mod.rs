//! Finite-graph verification: configuration-model regular graphs, i.i.d.
//! marks, empirical neighborhood statistics, exact conditioning by mark
//! enumeration, rate estimates and Glauber sampling.

mod enumerate;
mod glauber;
mod ldp;

pub use enumerate::{exact_conditional, Direction, ExactConditional, MAX_ENUMERATION};
pub use glauber::{glauber_posterior, heat_bath_prob, GlauberConfig, GlauberReport};
pub use ldp::{ldp_rate_curve, LdpConfig, LdpCurve, LdpPoint};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spin_measures::{EdgeMeasure, EdgePotential, Pmf, SpinSpace};
use crate::tis_gibbs::StarMeasure;

/// Attempts allowed before the configuration model gives up.
pub const REJECTION_BUDGET: usize = 1_000_000;

/// SplitMix64 finalizer, used to derive independent task streams.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// ChaCha8 stream for task `index`: seeded with `seed ^ splitmix64(index)`.
pub fn task_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ splitmix64(index))
}

/// Simple `κ`-regular graph on `0..n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RegularGraph {
    pub n: usize,
    pub kappa: usize,
    /// Undirected edges `(u, v)` with `u < v`, sorted.
    pub edges: Vec<(usize, usize)>,
    #[serde(skip)]
    neighbors: Vec<Vec<usize>>,
}

impl RegularGraph {
    /// Validates simplicity and regularity.
    pub fn from_edges(n: usize, kappa: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut neighbors = vec![Vec::with_capacity(kappa); n];
        let mut list = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::Precondition(format!("edge ({a}, {b}) outside 0..{n}")));
            }
            if a == b {
                return Err(Error::Precondition(format!("self-loop at {a}")));
            }
            if neighbors[a].contains(&b) {
                return Err(Error::Precondition(format!("repeated edge ({a}, {b})")));
            }
            neighbors[a].push(b);
            neighbors[b].push(a);
            list.push((a.min(b), a.max(b)));
        }
        if let Some(v) = neighbors.iter().position(|nb| nb.len() != kappa) {
            return Err(Error::Precondition(format!(
                "vertex {v} has degree {}, expected {kappa}",
                neighbors[v].len()
            )));
        }
        list.sort_unstable();
        for nb in &mut neighbors {
            nb.sort_unstable();
        }
        Ok(Self {
            n,
            kappa,
            edges: list,
            neighbors,
        })
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    /// Edge-list text: header `n kappa`, then one `u v` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("{} {}\n", self.n, self.kappa);
        for (u, v) in &self.edges {
            s.push_str(&format!("{u} {v}\n"));
        }
        s
    }

    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let pair = |line: &str| -> Result<(usize, usize)> {
            let mut it = line.split_whitespace().map(|t| {
                t.parse::<usize>()
                    .map_err(|e| Error::Parse(format!("{line:?}: {e}")))
            });
            match (it.next(), it.next(), it.next()) {
                (Some(a), Some(b), None) => Ok((a?, b?)),
                _ => Err(Error::Parse(format!("expected two integers, got {line:?}"))),
            }
        };
        let (n, kappa) = pair(lines.next().ok_or_else(|| Error::Parse("empty edge list".into()))?)?;
        let edges = lines.map(pair).collect::<Result<Vec<_>>>()?;
        Self::from_edges(n, kappa, &edges)
    }
}

/// Configuration model conditioned on simplicity by whole-graph rejection.
pub fn gen_regular_graph(n: usize, kappa: usize, seed: u64) -> Result<RegularGraph> {
    gen_with_rng(n, kappa, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub(crate) fn gen_with_rng(n: usize, kappa: usize, rng: &mut impl Rng) -> Result<RegularGraph> {
    if (n * kappa) % 2 == 1 {
        return Err(Error::Parity { n, kappa });
    }
    if n <= kappa {
        return Err(Error::Precondition(format!("need n > kappa, got n = {n}, kappa = {kappa}")));
    }
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, kappa)).collect();
    let mut adj = vec![Vec::with_capacity(kappa); n];
    'attempt: for _ in 0..REJECTION_BUDGET {
        stubs.shuffle(rng);
        adj.iter_mut().for_each(Vec::clear);
        for pair in stubs.chunks_exact(2) {
            let (a, b) = (pair[0], pair[1]);
            if a == b || adj[a].contains(&b) {
                continue 'attempt;
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        let edges: Vec<(usize, usize)> = stubs.chunks_exact(2).map(|p| (p[0], p[1])).collect();
        return RegularGraph::from_edges(n, kappa, &edges);
    }
    Err(Error::Budget(REJECTION_BUDGET))
}

/// A graph with one mark index per vertex.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarkedGraph {
    pub graph: RegularGraph,
    pub space: SpinSpace,
    pub marks: Vec<usize>,
}

impl MarkedGraph {
    pub fn new(graph: RegularGraph, space: SpinSpace, marks: Vec<usize>) -> Result<Self> {
        if marks.len() != graph.n {
            return Err(Error::Dimension {
                expected: graph.n,
                got: marks.len(),
            });
        }
        if let Some(m) = marks.iter().find(|&&m| m >= space.len()) {
            return Err(Error::Precondition(format!("mark index {m} outside the mark space")));
        }
        Ok(Self { graph, space, marks })
    }

    /// I.i.d. `ν` marks.
    pub fn iid(graph: RegularGraph, nu: &Pmf, rng: &mut impl Rng) -> Self {
        let w = nu.weights();
        let marks = (0..graph.n)
            .map(|_| {
                let mut u = rng.random::<f64>();
                for (i, p) in w.iter().enumerate() {
                    if u < *p {
                        return i;
                    }
                    u -= p;
                }
                w.len() - 1
            })
            .collect();
        Self {
            graph,
            space: nu.space().clone(),
            marks,
        }
    }
}

/// Empirical neighborhood law `L_n`, its edge marginal and the consensus.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NeighborhoodEmpirical {
    pub star: StarMeasure,
    pub edge: EdgeMeasure,
    pub consensus: f64,
}

/// `L_n = (1/n) Σ_v δ_{star at v}` and `(1/n) Σ_u Σ_{v∼u} h(X_u, X_v)`.
pub fn neighborhood_empirical(g: &MarkedGraph, h: &EdgePotential) -> Result<NeighborhoodEmpirical> {
    if h.space() != &g.space {
        return Err(Error::Precondition("potential and marks on different spaces".into()));
    }
    let q = g.space.len();
    let n = g.graph.n;
    let kappa = g.graph.kappa;
    let template = StarMeasure::iid(&Pmf::uniform(g.space.clone()), kappa);
    let m = template.leaf_multisets().len();
    let mut star = vec![0.0; q * m];
    let mut edge = vec![0.0; q * q];
    let mut total = 0.0;
    for v in 0..n {
        let x = g.marks[v];
        let mut counts = vec![0u32; q];
        for &u in g.graph.neighbors(v) {
            let z = g.marks[u];
            counts[z] += 1;
            edge[x * q + z] += 1.0;
            total += h.get(x, z);
        }
        let j = template
            .leaf_multisets()
            .binary_search(&counts)
            .expect("valid multiset");
        star[x * m + j] += 1.0 / n as f64;
    }
    let directed = (n * kappa) as f64;
    edge.iter_mut().for_each(|w| *w /= directed);
    Ok(NeighborhoodEmpirical {
        star: template.with_weights(star)?,
        edge: EdgeMeasure::new(g.space.clone(), edge)?,
        consensus: total / n as f64,
    })
}

/// Neumaier-compensated sum.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}
