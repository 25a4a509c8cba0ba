use gibbs_consensus::spin_measures::{EdgePotential, Pmf, SpinSpace};
use gibbs_consensus::Error;

/// Comma-separated reals.
pub fn reals(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| format!("not a finite number: {t:?}"))
        })
        .collect()
}

/// Comma-separated non-negative integers.
pub fn sizes(s: &str) -> Result<Vec<usize>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| format!("not a size: {t:?}")))
        .collect()
}

/// Mark law from `--p` (two-spin `P(1)`) or `--nu` (weights in label order).
pub fn mark_law(p: Option<f64>, nu: Option<&[f64]>) -> Result<Pmf, Error> {
    match (p, nu) {
        (Some(_), Some(_)) => Err(Error::Precondition("give either --p or --nu, not both".into())),
        (Some(p), None) => Pmf::bernoulli(p),
        (None, Some(w)) if w.len() == 2 => Pmf::new(SpinSpace::two_spin(), w.to_vec()),
        (None, Some(w)) => Pmf::new(SpinSpace::numbered(w.len())?, w.to_vec()),
        (None, None) => Err(Error::Precondition("a mark law is required: --p or --nu".into())),
    }
}

/// Edge potential on the mark space: the triple `h11,h1m1,hm1m1` for two
/// spins, row-major `q×q` values otherwise, consensus `xy` when absent.
pub fn potential(space: &SpinSpace, h: Option<&[f64]>) -> Result<EdgePotential, Error> {
    let q = space.len();
    match h {
        None if space.is_two_spin() => Ok(EdgePotential::consensus()),
        None => Err(Error::Precondition("--h is required for more than two labels".into())),
        Some(&[a, b, c]) if space.is_two_spin() => Ok(EdgePotential::two_spin(a, b, c)),
        Some(v) if v.len() == q * q => EdgePotential::new(space.clone(), v.to_vec()),
        Some(v) => Err(Error::Dimension {
            expected: if space.is_two_spin() { 3 } else { q * q },
            got: v.len(),
        }),
    }
}
