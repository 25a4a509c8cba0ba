use serde::{Deserialize, Serialize};

use super::tree::{TreeMarginal, TreeShape};
use crate::error::{Error, Result};
use crate::spin_measures::{EdgeMeasure, SpinSpace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreezingKind {
    /// Point mass on the all-(+1) tree.
    Plus,
    /// Point mass on the all-(−1) tree.
    Minus,
    /// 50/50 mixture of the two alternating trees.
    Alternating,
}

/// Zero/infinite-temperature limit of the Ising model on the κ-regular tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreezingMeasure {
    pub kind: FreezingKind,
    pub kappa: usize,
}

impl FreezingMeasure {
    pub fn new(kind: FreezingKind, kappa: usize) -> Result<Self> {
        if kappa < 2 {
            return Err(Error::Precondition(format!("kappa = {kappa} < 2")));
        }
        Ok(Self { kind, kappa })
    }

    pub fn magnetization(&self) -> f64 {
        match self.kind {
            FreezingKind::Plus => 1.0,
            FreezingKind::Minus => -1.0,
            FreezingKind::Alternating => 0.0,
        }
    }

    pub fn consensus(&self) -> f64 {
        match self.kind {
            FreezingKind::Alternating => -(self.kappa as f64),
            _ => self.kappa as f64,
        }
    }

    pub fn edge_marginal(&self) -> EdgeMeasure {
        let space = SpinSpace::two_spin();
        match self.kind {
            FreezingKind::Plus => EdgeMeasure::point_mass(space, 0),
            FreezingKind::Minus => EdgeMeasure::point_mass(space, 1),
            FreezingKind::Alternating => EdgeMeasure::new(space, vec![0.0, 0.5, 0.5, 0.0])
                .expect("alternating edge law is valid"),
        }
    }

    pub fn depth_r_marginal(&self, r: usize) -> Result<TreeMarginal> {
        let shape = TreeShape::new(self.kappa, r);
        let len = shape.len();
        if len >= usize::BITS as usize {
            return Err(Error::TooLarge {
                states: 2f64.powi(len as i32),
                limit: super::MAX_TREE_STATES,
            });
        }
        let n = 1usize << len;
        if n as f64 > super::MAX_TREE_STATES {
            return Err(Error::TooLarge {
                states: n as f64,
                limit: super::MAX_TREE_STATES,
            });
        }
        let mut weights = vec![0.0; n];
        let index = |root: usize| {
            shape
                .level
                .iter()
                .fold(0, |acc, l| 2 * acc + ((root + l) % 2))
        };
        match self.kind {
            FreezingKind::Plus => weights[0] = 1.0,
            FreezingKind::Minus => weights[n - 1] = 1.0,
            FreezingKind::Alternating => {
                weights[index(0)] = 0.5;
                weights[index(1)] = 0.5;
            }
        }
        Ok(TreeMarginal {
            space: SpinSpace::two_spin(),
            shape,
            weights,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin_measures::{consensus_of_edge, EdgePotential};

    #[test]
    fn functionals() {
        let p = FreezingMeasure::new(FreezingKind::Plus, 4).unwrap();
        assert_eq!((p.consensus(), p.magnetization()), (4.0, 1.0));
        let a = FreezingMeasure::new(FreezingKind::Alternating, 4).unwrap();
        assert_eq!((a.consensus(), a.magnetization()), (-4.0, 0.0));
        let c = consensus_of_edge(&a.edge_marginal(), &EdgePotential::consensus(), 4).unwrap();
        assert_eq!(c, -4.0);
    }

    #[test]
    fn alternating_tree_marginal() {
        let a = FreezingMeasure::new(FreezingKind::Alternating, 3).unwrap();
        let t = a.depth_r_marginal(2).unwrap();
        assert_eq!(t.weights.iter().sum::<f64>(), 1.0);
        let one = t.marginalize(1).unwrap();
        // root 1 with all leaves -1, and the reverse
        assert_eq!(one.prob(&[0, 1, 1, 1]), 0.5);
        assert_eq!(one.prob(&[1, 0, 0, 0]), 0.5);
    }
}
