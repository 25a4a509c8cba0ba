use super::{EdgeMeasure, Pmf};
use crate::error::{Error, Result};

/// A finite measure exposing its masses in a fixed enumeration order.
pub trait Measure {
    fn masses(&self) -> &[f64];
    /// Shape descriptor; two measures are comparable iff their shapes agree.
    fn shape(&self) -> Vec<usize>;
}

impl Measure for Pmf {
    fn masses(&self) -> &[f64] {
        self.weights()
    }
    fn shape(&self) -> Vec<usize> {
        vec![self.len()]
    }
}

impl Measure for EdgeMeasure {
    fn masses(&self) -> &[f64] {
        self.weights()
    }
    fn shape(&self) -> Vec<usize> {
        vec![self.q(), self.q()]
    }
}

pub(crate) fn kl_slices(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            acc += a * (a / b).ln();
        }
    }
    acc
}

pub(crate) fn entropy_slice(p: &[f64]) -> f64 {
    -p.iter().map(|&x| super::xlogx(x)).sum::<f64>()
}

/// `H(p‖q) = Σ p log(p/q)`, `+∞` when `p` charges a zero of `q`.
pub fn relative_entropy<M: Measure + ?Sized>(p: &M, q: &M) -> Result<f64> {
    let (sp, sq) = (p.shape(), q.shape());
    if sp != sq {
        return Err(Error::Dimension {
            expected: sp.iter().product(),
            got: sq.iter().product(),
        });
    }
    Ok(kl_slices(p.masses(), q.masses()))
}

/// Shannon entropy in nats.
pub fn shannon_entropy<M: Measure + ?Sized>(p: &M) -> f64 {
    entropy_slice(p.masses())
}
