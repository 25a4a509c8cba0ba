//! Finite spin spaces, probability vectors, symmetric edge measures and the
//! rate functionals built on them.
//!
//! All logarithms are natural. Entropy sums run over strictly positive
//! entries only, so values at simplex boundary points are exact.

mod entropy;
mod rates;
mod two_spin;

pub use entropy::{relative_entropy, shannon_entropy, Measure};
pub use rates::{
    consensus_of_edge, directional_derivative, edge_hessian_form, edge_rate_j, feasible,
    neighborhood_rate_i1,
};
pub use two_spin::{
    slope_w, t_of_c, two_spin_coords, two_spin_j, two_spin_j_and_grad, two_spin_pi, w_c,
    TwoSpinCoords,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for total mass of a probability vector or matrix.
pub const MASS_TOL: f64 = 1e-12;
/// Tolerance for symmetry of an edge measure or potential.
pub const SYM_TOL: f64 = 1e-12;

pub(crate) fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Ordered set of spin labels.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct SpinSpace {
    labels: Vec<String>,
}

impl SpinSpace {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() < 2 {
            return Err(Error::SpinSpace(format!(
                "need at least two labels, got {}",
                labels.len()
            )));
        }
        for (i, a) in labels.iter().enumerate() {
            if labels[..i].contains(a) {
                return Err(Error::SpinSpace(format!("duplicate label {a:?}")));
            }
        }
        Ok(Self { labels })
    }

    /// The two-spin space in canonical order `(1, -1)`.
    pub fn two_spin() -> Self {
        Self {
            labels: vec!["1".into(), "-1".into()],
        }
    }

    /// Labels `1..=q`.
    pub fn numbered(q: usize) -> Result<Self> {
        Self::new((1..=q).map(|i| i.to_string()))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn is_two_spin(&self) -> bool {
        self.labels == ["1", "-1"]
    }
}

impl TryFrom<Vec<String>> for SpinSpace {
    type Error = Error;
    fn try_from(v: Vec<String>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SpinSpace> for Vec<String> {
    fn from(s: SpinSpace) -> Self {
        s.labels
    }
}

fn check_mass(weights: &[f64]) -> Result<()> {
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::InvalidMeasure(format!("weight {w} is not a finite non-negative number")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > MASS_TOL {
        return Err(Error::InvalidMeasure(format!("total mass {total} differs from 1")));
    }
    Ok(())
}

/// Probability vector over a spin space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PmfRepr", into = "PmfRepr")]
pub struct Pmf {
    space: SpinSpace,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PmfRepr {
    labels: Vec<String>,
    weights: Vec<f64>,
}

impl TryFrom<PmfRepr> for Pmf {
    type Error = Error;
    fn try_from(r: PmfRepr) -> Result<Self> {
        Pmf::new(SpinSpace::new(r.labels)?, r.weights)
    }
}

impl From<Pmf> for PmfRepr {
    fn from(p: Pmf) -> Self {
        PmfRepr {
            labels: p.space.into(),
            weights: p.weights,
        }
    }
}

impl Pmf {
    pub fn new(space: SpinSpace, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != space.len() {
            return Err(Error::Dimension {
                expected: space.len(),
                got: weights.len(),
            });
        }
        check_mass(&weights)?;
        Ok(Self { space, weights })
    }

    /// Normalizes a non-negative vector with positive total.
    pub fn from_unnormalized(space: SpinSpace, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != space.len() {
            return Err(Error::Dimension {
                expected: space.len(),
                got: weights.len(),
            });
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) || weights.iter().any(|w| *w < 0.0) {
            return Err(Error::InvalidMeasure(format!("cannot normalize {weights:?}")));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { space, weights })
    }

    pub fn uniform(space: SpinSpace) -> Self {
        let q = space.len();
        Self {
            space,
            weights: vec![1.0 / q as f64; q],
        }
    }

    /// Two-spin Bernoulli law with `P(1) = p`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidMeasure(format!("Bernoulli parameter {p} outside [0, 1]")));
        }
        Ok(Self {
            space: SpinSpace::two_spin(),
            weights: vec![p, 1.0 - p],
        })
    }

    pub fn point_mass(space: SpinSpace, i: usize) -> Self {
        let mut weights = vec![0.0; space.len()];
        weights[i] = 1.0;
        Self { space, weights }
    }

    pub fn space(&self) -> &SpinSpace {
        &self.space
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn is_interior(&self) -> bool {
        self.weights.iter().all(|w| *w > 0.0)
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.weights[i] > 0.0).collect()
    }

    pub fn tv(&self, other: &Pmf) -> f64 {
        0.5 * self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }

    /// Conditional law on a subset of labels.
    pub fn restrict(&self, subset: &[usize]) -> Result<Vec<f64>> {
        let mass: f64 = subset.iter().map(|&i| self.weights[i]).sum();
        if mass <= 0.0 {
            return Err(Error::Domain("restriction to a null set".into()));
        }
        Ok(subset.iter().map(|&i| self.weights[i] / mass).collect())
    }
}

/// Symmetric probability matrix on `X x X`, stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct EdgeMeasure {
    space: SpinSpace,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    labels: Vec<String>,
    matrix: Vec<Vec<f64>>,
}

fn flatten(space: &SpinSpace, matrix: Vec<Vec<f64>>) -> Result<Vec<f64>> {
    let q = space.len();
    if matrix.len() != q {
        return Err(Error::Dimension {
            expected: q,
            got: matrix.len(),
        });
    }
    let mut flat = Vec::with_capacity(q * q);
    for row in matrix {
        if row.len() != q {
            return Err(Error::Dimension {
                expected: q,
                got: row.len(),
            });
        }
        flat.extend(row);
    }
    Ok(flat)
}

fn unflatten(q: usize, flat: &[f64]) -> Vec<Vec<f64>> {
    flat.chunks(q).map(<[f64]>::to_vec).collect()
}

impl TryFrom<MatrixRepr> for EdgeMeasure {
    type Error = Error;
    fn try_from(r: MatrixRepr) -> Result<Self> {
        let space = SpinSpace::new(r.labels)?;
        let flat = flatten(&space, r.matrix)?;
        EdgeMeasure::new(space, flat)
    }
}

impl From<EdgeMeasure> for MatrixRepr {
    fn from(m: EdgeMeasure) -> Self {
        let q = m.space.len();
        MatrixRepr {
            matrix: unflatten(q, &m.weights),
            labels: m.space.into(),
        }
    }
}

pub(crate) fn max_asymmetry(q: usize, w: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for x in 0..q {
        for z in x + 1..q {
            worst = worst.max((w[x * q + z] - w[z * q + x]).abs());
        }
    }
    worst
}

impl EdgeMeasure {
    /// Validates mass and symmetry, then symmetrizes away residual noise.
    pub fn new(space: SpinSpace, mut weights: Vec<f64>) -> Result<Self> {
        let q = space.len();
        if weights.len() != q * q {
            return Err(Error::Dimension {
                expected: q * q,
                got: weights.len(),
            });
        }
        check_mass(&weights)?;
        let asym = max_asymmetry(q, &weights);
        if asym > SYM_TOL {
            return Err(Error::InvalidMeasure(format!("asymmetry {asym:e} exceeds {SYM_TOL:e}")));
        }
        for x in 0..q {
            for z in x + 1..q {
                let m = 0.5 * (weights[x * q + z] + weights[z * q + x]);
                weights[x * q + z] = m;
                weights[z * q + x] = m;
            }
        }
        Ok(Self { space, weights })
    }

    /// Symmetrizes and normalizes a non-negative matrix.
    pub fn from_unnormalized(space: SpinSpace, weights: Vec<f64>) -> Result<Self> {
        let q = space.len();
        if weights.len() != q * q {
            return Err(Error::Dimension {
                expected: q * q,
                got: weights.len(),
            });
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) || weights.iter().any(|w| *w < 0.0) {
            return Err(Error::InvalidMeasure("cannot normalize edge weights".into()));
        }
        let mut sym = vec![0.0; q * q];
        for x in 0..q {
            for z in 0..q {
                sym[x * q + z] = 0.5 * (weights[x * q + z] + weights[z * q + x]) / total;
            }
        }
        Ok(Self { space, weights: sym })
    }

    pub fn from_matrix(space: SpinSpace, matrix: Vec<Vec<f64>>) -> Result<Self> {
        let flat = flatten(&space, matrix)?;
        Self::new(space, flat)
    }

    pub fn product(a: &Pmf, b: &Pmf) -> Result<Self> {
        if a.space != b.space {
            return Err(Error::Precondition("product of pmfs on different spaces".into()));
        }
        let q = a.len();
        let mut w = vec![0.0; q * q];
        for x in 0..q {
            for z in 0..q {
                w[x * q + z] = a.weights[x] * b.weights[z];
            }
        }
        Self::new(a.space.clone(), w)
    }

    pub fn point_mass(space: SpinSpace, x: usize) -> Self {
        let q = space.len();
        let mut w = vec![0.0; q * q];
        w[x * q + x] = 1.0;
        Self { space, weights: w }
    }

    pub fn uniform(space: SpinSpace) -> Self {
        let q = space.len();
        Self {
            space,
            weights: vec![1.0 / (q * q) as f64; q * q],
        }
    }

    pub fn space(&self) -> &SpinSpace {
        &self.space
    }

    pub fn q(&self) -> usize {
        self.space.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, x: usize, z: usize) -> f64 {
        self.weights[x * self.q() + z]
    }

    pub fn matrix(&self) -> Vec<Vec<f64>> {
        unflatten(self.q(), &self.weights)
    }

    /// Row marginal `π_o(x) = Σ_z π(x, z)`.
    pub fn marginal(&self) -> Pmf {
        let q = self.q();
        let w = (0..q)
            .map(|x| self.weights[x * q..(x + 1) * q].iter().sum())
            .collect();
        Pmf {
            space: self.space.clone(),
            weights: w,
        }
    }

    /// Conditional kernel row `π^{1|o}(· | x)`.
    pub fn conditional(&self, x: usize) -> Result<Vec<f64>> {
        let q = self.q();
        let row = &self.weights[x * q..(x + 1) * q];
        let m: f64 = row.iter().sum();
        if m <= 0.0 {
            return Err(Error::Domain(format!("conditional on null root mark {x}")));
        }
        Ok(row.iter().map(|v| v / m).collect())
    }

    pub fn is_interior(&self) -> bool {
        self.weights.iter().all(|w| *w > 0.0)
    }

    /// Vertex support `{x : π_o(x) > 0}`.
    pub fn support(&self) -> Vec<usize> {
        self.marginal().support()
    }

    pub fn tv(&self, other: &EdgeMeasure) -> f64 {
        0.5 * self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }

    /// Embeds a measure on a subset of labels into the full space.
    pub fn lift(space: &SpinSpace, subset: &[usize], sub_weights: &[f64]) -> Result<Self> {
        let q = space.len();
        let k = subset.len();
        if sub_weights.len() != k * k {
            return Err(Error::Dimension {
                expected: k * k,
                got: sub_weights.len(),
            });
        }
        let mut w = vec![0.0; q * q];
        for (a, &x) in subset.iter().enumerate() {
            for (b, &z) in subset.iter().enumerate() {
                w[x * q + z] = sub_weights[a * k + b];
            }
        }
        Self::new(space.clone(), w)
    }
}

/// Symmetric real edge potential `h` on `X x X`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct EdgePotential {
    space: SpinSpace,
    values: Vec<f64>,
}

impl TryFrom<MatrixRepr> for EdgePotential {
    type Error = Error;
    fn try_from(r: MatrixRepr) -> Result<Self> {
        let space = SpinSpace::new(r.labels)?;
        let flat = flatten(&space, r.matrix)?;
        EdgePotential::new(space, flat)
    }
}

impl From<EdgePotential> for MatrixRepr {
    fn from(m: EdgePotential) -> Self {
        let q = m.space.len();
        MatrixRepr {
            matrix: unflatten(q, &m.values),
            labels: m.space.into(),
        }
    }
}

impl EdgePotential {
    pub fn new(space: SpinSpace, values: Vec<f64>) -> Result<Self> {
        let q = space.len();
        if values.len() != q * q {
            return Err(Error::Dimension {
                expected: q * q,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMeasure("potential has non-finite entries".into()));
        }
        let asym = max_asymmetry(q, &values);
        if asym > SYM_TOL {
            return Err(Error::InvalidMeasure(format!("potential asymmetry {asym:e}")));
        }
        Ok(Self { space, values })
    }

    pub fn from_matrix(space: SpinSpace, matrix: Vec<Vec<f64>>) -> Result<Self> {
        let flat = flatten(&space, matrix)?;
        Self::new(space, flat)
    }

    /// Two-spin potential from `(h(1,1), h(1,-1), h(-1,-1))`.
    pub fn two_spin(h11: f64, h1m: f64, hmm: f64) -> Self {
        Self {
            space: SpinSpace::two_spin(),
            values: vec![h11, h1m, h1m, hmm],
        }
    }

    /// The consensus potential `m(x, y) = xy`.
    pub fn consensus() -> Self {
        Self::two_spin(1.0, -1.0, 1.0)
    }

    pub fn space(&self) -> &SpinSpace {
        &self.space
    }

    pub fn q(&self) -> usize {
        self.space.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, z: usize) -> f64 {
        self.values[x * self.q() + z]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_constant(&self) -> bool {
        self.max() - self.min() == 0.0
    }

    /// `(min, max)` of `h` over `subset x subset`.
    pub fn range_on(&self, subset: &[usize]) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &x in subset {
            for &z in subset {
                let v = self.get(x, z);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        (lo, hi)
    }

    /// Row-major restriction to `subset x subset`.
    pub fn restrict(&self, subset: &[usize]) -> Vec<f64> {
        let mut out = Vec::with_capacity(subset.len() * subset.len());
        for &x in subset {
            for &z in subset {
                out.push(self.get(x, z));
            }
        }
        out
    }
}
