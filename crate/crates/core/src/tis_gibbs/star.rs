use serde::ser::{Serialize, SerializeSeq, Serializer};

use crate::error::{Error, Result};
use crate::spin_measures::{EdgeMeasure, EdgePotential, Measure, Pmf, SpinSpace};

/// All compositions of `k` into `q` non-negative parts, in lexicographic order.
pub(crate) fn compositions(k: u32, q: usize) -> Vec<Vec<u32>> {
    fn rec(k: u32, q: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if q == 1 {
            prefix.push(k);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for i in 0..=k {
            prefix.push(i);
            rec(k - i, q - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, q, &mut Vec::with_capacity(q), &mut out);
    out
}

/// `k! / Π c_i!`.
pub(crate) fn multinomial(counts: &[u32]) -> f64 {
    let mut out = 1.0;
    let mut n = 0u32;
    for &c in counts {
        for j in 1..=c {
            n += 1;
            out *= n as f64 / j as f64;
        }
    }
    out
}

pub(crate) fn counts_of(marks: &[usize], q: usize) -> Vec<u32> {
    let mut c = vec![0u32; q];
    for &m in marks {
        c[m] += 1;
    }
    c
}

/// Exchangeable law of a marked κ-star, stored as (root mark, leaf multiset).
#[derive(Clone, Debug, PartialEq)]
pub struct StarMeasure {
    space: SpinSpace,
    kappa: usize,
    leaves: Vec<Vec<u32>>,
    weights: Vec<f64>,
}

impl StarMeasure {
    fn from_fn(space: SpinSpace, kappa: usize, f: impl Fn(usize, &[u32]) -> f64) -> Self {
        let q = space.len();
        let leaves = compositions(kappa as u32, q);
        let mut weights = Vec::with_capacity(q * leaves.len());
        for x in 0..q {
            for c in &leaves {
                weights.push(f(x, c));
            }
        }
        Self {
            space,
            kappa,
            leaves,
            weights,
        }
    }

    /// `η₁`: root and leaves i.i.d. `ν`.
    pub fn iid(nu: &Pmf, kappa: usize) -> Self {
        let w = nu.weights();
        Self::from_fn(nu.space().clone(), kappa, |x, c| {
            w[x] * multinomial(c) * c.iter().zip(w).map(|(&n, p)| p.powi(n as i32)).product::<f64>()
        })
    }

    /// Builds an exchangeable star law from weights over labeled tuples
    /// `(root, leaf_1, …, leaf_κ)` in lexicographic order.
    pub fn from_labeled(space: SpinSpace, kappa: usize, tuples: &[f64]) -> Result<Self> {
        let q = space.len();
        let n = q.pow(kappa as u32 + 1);
        if tuples.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: tuples.len(),
            });
        }
        let total: f64 = tuples.iter().sum();
        if (total - 1.0).abs() > 1e-12 || tuples.iter().any(|w| *w < 0.0) {
            return Err(Error::InvalidMeasure("labeled star weights are not a pmf".into()));
        }
        let mut out = Self::from_fn(space, kappa, |_, _| 0.0);
        let mut canonical: Vec<Option<f64>> = vec![None; out.weights.len()];
        for (idx, &w) in tuples.iter().enumerate() {
            let marks = decode(idx, q, kappa + 1);
            let counts = counts_of(&marks[1..], q);
            let slot = out.slot(marks[0], &counts);
            match canonical[slot] {
                None => canonical[slot] = Some(w),
                Some(v) if (v - w).abs() > 1e-12 => {
                    return Err(Error::Precondition(
                        "star law is not exchangeable in its leaves".into(),
                    ))
                }
                _ => {}
            }
            out.weights[slot] += w;
        }
        Ok(out)
    }

    pub fn space(&self) -> &SpinSpace {
        &self.space
    }

    pub fn q(&self) -> usize {
        self.space.len()
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Leaf multisets, shared by every root mark.
    pub fn leaf_multisets(&self) -> &[Vec<u32>] {
        &self.leaves
    }

    fn slot(&self, root: usize, counts: &[u32]) -> usize {
        let j = self
            .leaves
            .binary_search_by(|c| c.as_slice().cmp(counts))
            .expect("valid leaf multiset");
        root * self.leaves.len() + j
    }

    /// Mass of the root mark with the given leaf multiset.
    pub fn weight(&self, root: usize, counts: &[u32]) -> f64 {
        self.weights[self.slot(root, counts)]
    }

    /// Probability of one labeled star.
    pub fn labeled_prob(&self, root: usize, leaves: &[usize]) -> f64 {
        let c = counts_of(leaves, self.q());
        self.weight(root, &c) / multinomial(&c)
    }

    /// Iterator over `(root, leaf multiset, weight)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, &[u32], f64)> + '_ {
        let m = self.leaves.len();
        self.weights
            .iter()
            .enumerate()
            .map(move |(i, &w)| (i / m, self.leaves[i % m].as_slice(), w))
    }

    /// Raw (possibly asymmetric) edge matrix `π_μ(x, z) = E[1{root = x} · #z-leaves] / κ`.
    pub fn edge_matrix(&self) -> Vec<f64> {
        let q = self.q();
        let k = self.kappa as f64;
        let mut pi = vec![0.0; q * q];
        for (x, c, w) in self.entries() {
            for z in 0..q {
                pi[x * q + z] += w * c[z] as f64 / k;
            }
        }
        pi
    }

    pub fn edge_marginal(&self) -> Result<EdgeMeasure> {
        EdgeMeasure::new(self.space.clone(), self.edge_matrix())
    }

    /// `κ E_{π_μ}[h]`.
    pub fn consensus(&self, h: &EdgePotential) -> f64 {
        let k = self.kappa as f64;
        k * self.edge_matrix().iter().zip(h.values()).map(|(p, v)| p * v).sum::<f64>()
    }

    /// Convex combination `(1−λ) self + λ other`.
    pub fn mix(&self, other: &StarMeasure, lambda: f64) -> Result<StarMeasure> {
        if self.space != other.space || self.kappa != other.kappa {
            return Err(Error::Precondition("mixing star laws of different shapes".into()));
        }
        let mut out = self.clone();
        for (a, b) in out.weights.iter_mut().zip(&other.weights) {
            *a = (1.0 - lambda) * *a + lambda * b;
        }
        Ok(out)
    }

    /// Replaces the weight vector; used to build perturbed laws.
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<StarMeasure> {
        if weights.len() != self.weights.len() {
            return Err(Error::Dimension {
                expected: self.weights.len(),
                got: weights.len(),
            });
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 || weights.iter().any(|w| *w < 0.0) {
            return Err(Error::InvalidMeasure("star weights are not a pmf".into()));
        }
        Ok(StarMeasure {
            weights,
            ..self.clone()
        })
    }
}

pub(crate) fn decode(mut idx: usize, q: usize, len: usize) -> Vec<usize> {
    let mut marks = vec![0; len];
    for v in (0..len).rev() {
        marks[v] = idx % q;
        idx /= q;
    }
    marks
}

impl Measure for StarMeasure {
    fn masses(&self) -> &[f64] {
        &self.weights
    }
    fn shape(&self) -> Vec<usize> {
        vec![self.q(), self.kappa, self.leaves.len()]
    }
}

impl Serialize for StarMeasure {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(serde::Serialize)]
        struct Entry<'a> {
            root: &'a str,
            leaves: &'a [u32],
            weight: f64,
        }
        let mut seq = s.serialize_seq(None)?;
        for (x, c, w) in self.entries() {
            if w > 0.0 {
                seq.serialize_element(&Entry {
                    root: self.space.label(x),
                    leaves: c,
                    weight: w,
                })?;
            }
        }
        seq.end()
    }
}

/// `μ^(π)`: root `~ π_o`, leaves i.i.d. `π^{1|o}(· | root)`.
pub fn star_measure(pi: &EdgeMeasure, kappa: usize) -> Result<StarMeasure> {
    if kappa < 1 {
        return Err(Error::Precondition("kappa must be positive".into()));
    }
    let q = pi.q();
    let po = pi.marginal();
    let rows: Vec<Option<Vec<f64>>> = (0..q).map(|x| pi.conditional(x).ok()).collect();
    Ok(StarMeasure::from_fn(pi.space().clone(), kappa, |x, c| match &rows[x] {
        None => 0.0,
        Some(r) => {
            po.weights()[x]
                * multinomial(c)
                * c.iter().zip(r).map(|(&n, p)| p.powi(n as i32)).product::<f64>()
        }
    }))
}
