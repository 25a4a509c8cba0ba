use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;
use serde::ser::{Serialize, SerializeSeq, Serializer};

use super::star::{compositions, counts_of, decode, multinomial, StarMeasure};
use super::TisGibbs;
use crate::error::{Error, Result};
use crate::spin_measures::{max_asymmetry, SpinSpace, SYM_TOL};

/// Exact enumeration guard for depth-r marginals.
pub const MAX_TREE_STATES: f64 = 1e7;

/// Breadth-first labeling of the depth-r κ-regular tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeShape {
    pub kappa: usize,
    pub depth: usize,
    pub parent: Vec<Option<usize>>,
    pub level: Vec<usize>,
    pub children: Vec<Vec<usize>>,
}

impl TreeShape {
    pub fn new(kappa: usize, depth: usize) -> Self {
        let mut parent = vec![None];
        let mut level = vec![0];
        let mut children = vec![Vec::new()];
        let mut frontier = vec![0usize];
        for d in 1..=depth {
            let mut next = Vec::new();
            for &v in &frontier {
                let n = if d == 1 { kappa } else { kappa - 1 };
                for _ in 0..n {
                    let id = parent.len();
                    parent.push(Some(v));
                    level.push(d);
                    children.push(Vec::new());
                    children[v].push(id);
                    next.push(id);
                }
            }
            frontier = next;
        }
        Self {
            kappa,
            depth,
            parent,
            level,
            children,
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    fn states(&self, q: usize) -> Result<usize> {
        let states = (q as f64).powi(self.len() as i32);
        if states > MAX_TREE_STATES {
            return Err(Error::TooLarge {
                states,
                limit: MAX_TREE_STATES,
            });
        }
        Ok(states as usize)
    }
}

/// Law of the marks on a depth-r tree, indexed by the breadth-first mark
/// string read as a base-q number (root most significant).
#[derive(Clone, Debug, PartialEq)]
pub struct TreeMarginal {
    pub space: SpinSpace,
    pub shape: TreeShape,
    pub weights: Vec<f64>,
}

impl TreeMarginal {
    pub fn q(&self) -> usize {
        self.space.len()
    }

    pub fn marks(&self, index: usize) -> Vec<usize> {
        decode(index, self.q(), self.shape.len())
    }

    pub fn index(&self, marks: &[usize]) -> usize {
        marks.iter().fold(0, |acc, &m| acc * self.q() + m)
    }

    pub fn prob(&self, marks: &[usize]) -> f64 {
        self.weights[self.index(marks)]
    }

    /// Law of the depth-`depth` subtree.
    pub fn marginalize(&self, depth: usize) -> Result<TreeMarginal> {
        if depth > self.shape.depth {
            return Err(Error::Precondition(format!(
                "cannot marginalize depth {} to {depth}",
                self.shape.depth
            )));
        }
        let shape = TreeShape::new(self.shape.kappa, depth);
        let drop = self.shape.len() - shape.len();
        let block = self.q().pow(drop as u32);
        let weights = self
            .weights
            .chunks(block)
            .map(|c| c.iter().sum())
            .collect();
        Ok(TreeMarginal {
            space: self.space.clone(),
            shape,
            weights,
        })
    }

    pub fn tv(&self, other: &TreeMarginal) -> f64 {
        0.5 * self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }

    /// Breadth-first mark string with comma-separated labels.
    pub fn encode(&self, index: usize) -> String {
        self.marks(index)
            .iter()
            .map(|&m| self.space.label(m))
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl Serialize for TreeMarginal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(None)?;
        for (i, &w) in self.weights.iter().enumerate() {
            if w > 0.0 {
                seq.serialize_element(&(self.encode(i), w))?;
            }
        }
        seq.end()
    }
}

/// Unnormalized weights `Π_v f(v, marks)` over all mark vectors.
fn enumerate(
    shape: &TreeShape,
    q: usize,
    factor: &(dyn Fn(usize, &[usize]) -> f64 + Sync),
) -> Result<Vec<f64>> {
    let n = shape.states(q)?;
    let len = shape.len();
    Ok((0..n)
        .into_par_iter()
        .map(|idx| {
            let marks = decode(idx, q, len);
            (0..len).map(|v| factor(v, &marks)).product()
        })
        .collect())
}

/// Exact depth-r marginal `∝ Π_edges ψ · Π_{interior} ψ̄ · Π_{leaves} ℓ`.
pub fn depth_r_marginal(g: &TisGibbs, r: usize) -> Result<TreeMarginal> {
    if r == 0 || r > 3 {
        return Err(Error::Precondition(format!("depth {r} outside 1..=3")));
    }
    let q = g.spec.q();
    let shape = TreeShape::new(g.kappa, r);
    let psi: Vec<f64> = g.spec.log_psi().iter().map(|v| v.exp()).collect();
    let psibar: Vec<f64> = g.spec.log_psibar().iter().map(|v| v.exp()).collect();
    let ell = g.ell.weights();
    let factor = |v: usize, m: &[usize]| {
        let x = m[v];
        let vertex = if shape.level[v] < r { psibar[x] } else { ell[x] };
        match shape.parent[v] {
            None => vertex,
            Some(p) => vertex * psi[m[p] * q + x],
        }
    };
    let mut w = enumerate(&shape, q, &factor)?;
    let z: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= z);
    Ok(TreeMarginal {
        space: g.spec.space().clone(),
        shape,
        weights: w,
    })
}

/// Conditional star kernels `P̂_μ(x, x′)` over multisets of the `κ−1`
/// remaining leaves.
struct Kernels {
    leaves: Vec<Vec<u32>>,
    table: HashMap<(usize, usize), Vec<f64>>,
}

impl Kernels {
    fn new(mu: &StarMeasure) -> Result<Self> {
        let q = mu.q();
        let k = mu.kappa();
        let pm = mu.edge_matrix();
        if max_asymmetry(q, &pm) > SYM_TOL {
            return Err(Error::Precondition("star law has an asymmetric edge marginal".into()));
        }
        let leaves = compositions(k as u32 - 1, q);
        let mut table = HashMap::new();
        for x in 0..q {
            for xp in 0..q {
                let mass = pm[x * q + xp];
                if mass <= 0.0 {
                    continue;
                }
                let w: Vec<f64> = leaves
                    .iter()
                    .map(|c| {
                        let mut full = c.clone();
                        full[xp] += 1;
                        mu.weight(x, &full) * full[xp] as f64 / (k as f64 * mass)
                    })
                    .collect();
                table.insert((x, xp), w);
            }
        }
        Ok(Self { leaves, table })
    }

    fn get(&self, x: usize, parent: usize) -> Result<&[f64]> {
        self.table.get(&(x, parent)).map(Vec::as_slice).ok_or_else(|| {
            Error::Domain(format!("conditional star kernel undefined at zero-mass pair ({x}, {parent})"))
        })
    }

    fn labeled(&self, x: usize, parent: usize, children: &[usize], q: usize) -> Result<f64> {
        let c = counts_of(children, q);
        let j = self.leaves.binary_search(&c).expect("valid multiset");
        Ok(self.get(x, parent)?[j] / multinomial(&c))
    }
}

/// Exact law of the unimodular extension of `μ` on the depth-`depth` tree.
pub fn unimodular_extension(mu: &StarMeasure, depth: usize) -> Result<TreeMarginal> {
    if depth == 0 || depth > 3 {
        return Err(Error::Precondition(format!(
            "exact extension supports depth 1..=3, got {depth}; use UnimodularSampler"
        )));
    }
    let q = mu.q();
    let kernels = Kernels::new(mu)?;
    let shape = TreeShape::new(mu.kappa(), depth);
    let n = shape.states(q)?;
    let mut weights = vec![0.0; n];
    let star_end = 1 + mu.kappa();
    for (idx, w) in weights.iter_mut().enumerate() {
        let marks = decode(idx, q, shape.len());
        let mut p = mu.labeled_prob(marks[0], &marks[1..star_end]);
        if p == 0.0 {
            continue;
        }
        for v in 1..shape.len() {
            let ch = &shape.children[v];
            if ch.is_empty() {
                continue;
            }
            let parent = shape.parent[v].expect("non-root");
            let cm: Vec<usize> = ch.iter().map(|&c| marks[c]).collect();
            p *= kernels.labeled(marks[v], marks[parent], &cm, q)?;
            if p == 0.0 {
                break;
            }
        }
        *w = p;
    }
    Ok(TreeMarginal {
        space: mu.space().clone(),
        shape,
        weights,
    })
}

/// Draws labeled marked trees from the unimodular extension of `μ`.
pub struct UnimodularSampler {
    mu: StarMeasure,
    kernels: Kernels,
}

fn draw(weights: &[f64], rng: &mut impl Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

fn arrange(counts: &[u32], rng: &mut impl Rng) -> Vec<usize> {
    let mut marks: Vec<usize> = counts
        .iter()
        .enumerate()
        .flat_map(|(x, &c)| std::iter::repeat_n(x, c as usize))
        .collect();
    for i in (1..marks.len()).rev() {
        let j = rng.random_range(0..=i);
        marks.swap(i, j);
    }
    marks
}

impl UnimodularSampler {
    pub fn new(mu: &StarMeasure) -> Result<Self> {
        Ok(Self {
            mu: mu.clone(),
            kernels: Kernels::new(mu)?,
        })
    }

    /// Breadth-first marks of one sampled depth-`depth` tree.
    pub fn sample(&self, depth: usize, rng: &mut impl Rng) -> Result<Vec<usize>> {
        let shape = TreeShape::new(self.mu.kappa(), depth);
        let mut marks = vec![0usize; shape.len()];
        let slot = draw(self.mu.weights(), rng);
        let m = self.mu.leaf_multisets().len();
        marks[0] = slot / m;
        if depth == 0 {
            return Ok(marks);
        }
        let leaves = arrange(&self.mu.leaf_multisets()[slot % m], rng);
        for (c, x) in shape.children[0].iter().zip(leaves) {
            marks[*c] = x;
        }
        for v in 1..shape.len() {
            let ch = &shape.children[v];
            if ch.is_empty() {
                continue;
            }
            let parent = shape.parent[v].expect("non-root");
            let kern = self.kernels.get(marks[v], marks[parent])?;
            let j = draw(kern, rng);
            let kids = arrange(&self.kernels.leaves[j], rng);
            for (c, x) in ch.iter().zip(kids) {
                marks[*c] = x;
            }
        }
        Ok(marks)
    }
}
