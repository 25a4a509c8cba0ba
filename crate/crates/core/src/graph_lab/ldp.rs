use rayon::prelude::*;
use serde::Serialize;

use super::{exact_conditional, gen_with_rng, task_rng, Direction, CompensatedSum};
use crate::edge_optimizer::r_edge;
use crate::error::{Error, Result};
use crate::spin_measures::{EdgeMeasure, EdgePotential, Pmf};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LdpConfig {
    pub n_list: Vec<usize>,
    pub kappa: usize,
    pub nu: Pmf,
    pub h: EdgePotential,
    pub c: f64,
    pub direction: Direction,
    pub delta: f64,
    pub n_graphs: usize,
    pub batches: usize,
    pub seed: u64,
}

/// Estimates at one graph size; errors are batch-means standard errors.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LdpPoint {
    pub n: usize,
    pub n_graphs: usize,
    pub p_hat: f64,
    pub p_hat_error: f64,
    /// `−(1/n) log P̂_n`.
    pub rate: f64,
    pub rate_error: f64,
    /// `E[edge empirical measure | event]` over graphs and marks.
    pub conditional_edge_marginal: Option<EdgeMeasure>,
    pub batch_probabilities: Vec<f64>,
    pub batch_edge_marginals: Vec<Option<EdgeMeasure>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LdpCurve {
    pub config: LdpConfig,
    /// Limiting rate `R_edge(c)` from the edge optimizer.
    pub r_edge: f64,
    pub points: Vec<LdpPoint>,
    /// `|rate_n − R_edge|` per point.
    pub gaps: Vec<f64>,
    /// Gaps are non-increasing along `n_list`.
    pub monotone_toward_target: bool,
}

/// Standard error of the mean of batch values.
pub(crate) fn batch_error(values: &[f64]) -> f64 {
    let k = values.len() as f64;
    if values.len() < 2 {
        return f64::NAN;
    }
    let m = values.iter().sum::<f64>() / k;
    let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (k - 1.0);
    (var / k).sqrt()
}

fn pooled(space: &crate::spin_measures::SpinSpace, items: &[(f64, Option<EdgeMeasure>)]) -> Result<Option<EdgeMeasure>> {
    let q = space.len();
    let mut mass = CompensatedSum::default();
    let mut acc = vec![CompensatedSum::default(); q * q];
    for (p, m) in items {
        if let Some(m) = m {
            mass.add(*p);
            for (a, w) in acc.iter_mut().zip(m.weights()) {
                a.add(p * w);
            }
        }
    }
    if mass.value() <= 0.0 {
        return Ok(None);
    }
    Ok(Some(EdgeMeasure::from_unnormalized(
        space.clone(),
        acc.iter().map(|a| a.value()).collect(),
    )?))
}

/// Exact mark-conditional probabilities averaged over sampled graphs, for
/// each `n`. Graph `i` at size `n` uses the stream `task_rng(seed, n << 32 | i)`.
pub fn ldp_rate_curve(config: &LdpConfig) -> Result<LdpCurve> {
    if config.n_graphs == 0 || config.batches == 0 || config.batches > config.n_graphs {
        return Err(Error::Precondition(format!(
            "need 1 <= batches <= n_graphs, got {} and {}",
            config.batches, config.n_graphs
        )));
    }
    let target = r_edge(&config.nu, &config.h, config.c, config.kappa)?.value;
    let space = config.nu.space().clone();
    let mut points = Vec::with_capacity(config.n_list.len());
    for &n in &config.n_list {
        let per_graph: Vec<(f64, Option<EdgeMeasure>)> = (0..config.n_graphs)
            .into_par_iter()
            .map(|i| {
                let mut rng = task_rng(config.seed, ((n as u64) << 32) | i as u64);
                let g = gen_with_rng(n, config.kappa, &mut rng)?;
                let e = exact_conditional(
                    &g,
                    &config.nu,
                    &config.h,
                    config.c,
                    config.direction,
                    config.delta,
                )?;
                Ok((e.probability, e.conditional_edge_marginal))
            })
            .collect::<Result<_>>()?;
        let nb = config.batches;
        let bounds: Vec<usize> = (0..=nb).map(|b| b * per_graph.len() / nb).collect();
        let mut batch_probabilities = Vec::with_capacity(nb);
        let mut batch_edge_marginals = Vec::with_capacity(nb);
        for b in 0..nb {
            let part = &per_graph[bounds[b]..bounds[b + 1]];
            let mut s = CompensatedSum::default();
            part.iter().for_each(|(p, _)| s.add(*p));
            batch_probabilities.push(s.value() / part.len() as f64);
            batch_edge_marginals.push(pooled(&space, part)?);
        }
        let mut s = CompensatedSum::default();
        per_graph.iter().for_each(|(p, _)| s.add(*p));
        let p_hat = s.value() / per_graph.len() as f64;
        let p_hat_error = batch_error(&batch_probabilities);
        points.push(LdpPoint {
            n,
            n_graphs: config.n_graphs,
            p_hat,
            p_hat_error,
            rate: -p_hat.ln() / n as f64,
            rate_error: p_hat_error / (n as f64 * p_hat),
            conditional_edge_marginal: pooled(&space, &per_graph)?,
            batch_probabilities,
            batch_edge_marginals,
        });
    }
    let gaps: Vec<f64> = points.iter().map(|p| (p.rate - target).abs()).collect();
    let monotone_toward_target = gaps.windows(2).all(|w| w[1] <= w[0]);
    Ok(LdpCurve {
        config: config.clone(),
        r_edge: target,
        points,
        gaps,
        monotone_toward_target,
    })
}
