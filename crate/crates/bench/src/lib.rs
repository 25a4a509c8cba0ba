//! Fixed problem instances shared by the solver benchmarks.

use gibbs_consensus::spin_measures::{EdgePotential, Pmf, SpinSpace};

/// Two-spin edge problem `(ν, h, c, κ)`.
pub struct TwoSpinCase {
    pub name: &'static str,
    pub nu: Pmf,
    pub h: EdgePotential,
    pub c: f64,
    pub kappa: usize,
}

pub fn two_spin_cases() -> Vec<TwoSpinCase> {
    vec![
        TwoSpinCase {
            name: "symmetric_interior",
            nu: Pmf::bernoulli(0.5).unwrap(),
            h: EdgePotential::consensus(),
            c: 1.0,
            kappa: 3,
        },
        TwoSpinCase {
            name: "symmetric_pair",
            nu: Pmf::bernoulli(0.5).unwrap(),
            h: EdgePotential::consensus(),
            c: 2.0,
            kappa: 3,
        },
        TwoSpinCase {
            name: "boundary",
            nu: Pmf::bernoulli(1.0 / 3.0).unwrap(),
            h: EdgePotential::two_spin(7.0, -5.0, 4.0),
            c: 20.0,
            kappa: 5,
        },
    ]
}

/// Three-label problem whose minimizer lies on a face of the simplex.
pub fn three_state_case() -> (Pmf, EdgePotential, f64, usize) {
    let space = SpinSpace::numbered(3).unwrap();
    let mut h = vec![0.5; 9];
    for x in 0..3 {
        h[x * 3 + 2] = -1.0;
        h[2 * 3 + x] = -1.0;
    }
    h[8] = 1.0;
    (
        Pmf::uniform(space.clone()),
        EdgePotential::new(space, h).unwrap(),
        1.5,
        3,
    )
}
