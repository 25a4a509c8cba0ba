use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::ldp::batch_error;
use super::RegularGraph;
use crate::error::{Error, Result};
use crate::spin_measures::{EdgeMeasure, SpinSpace};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GlauberConfig {
    pub sweeps: usize,
    pub burn_in: usize,
    pub batches: usize,
    pub seed: u64,
    /// Keep the spin configuration after every sweep.
    pub record_samples: bool,
}

impl GlauberConfig {
    pub fn new(sweeps: usize, seed: u64) -> Self {
        Self {
            sweeps,
            burn_in: 100,
            batches: 20,
            seed,
            record_samples: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GlauberReport {
    pub beta: f64,
    #[serde(rename = "B")]
    pub field: f64,
    pub config: GlauberConfig,
    /// Time-averaged edge empirical measure over `(1, -1)`.
    pub edge_marginal: EdgeMeasure,
    /// Batch-means standard error per entry of `edge_marginal`.
    pub edge_marginal_error: Vec<f64>,
    pub magnetization: f64,
    pub magnetization_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<Vec<i8>>>,
}

/// Heat-bath probability of `σ_v = +1` given the neighbor spin sum:
/// `1 / (1 + exp(−2(β s + B)))`.
pub fn heat_bath_prob(neighbor_sum: i32, beta: f64, field: f64) -> f64 {
    1.0 / (1.0 + (-2.0 * (beta * neighbor_sum as f64 + field)).exp())
}

/// Single-site heat-bath dynamics for `∝ exp(β Σ_{uv∈E} σ_u σ_v + B Σ_v σ_v)`,
/// sweeping vertices in order and sampling after every sweep.
pub fn glauber_posterior(
    g: &RegularGraph,
    beta: f64,
    field: f64,
    config: &GlauberConfig,
) -> Result<GlauberReport> {
    if !beta.is_finite() || !field.is_finite() {
        return Err(Error::Precondition("Glauber dynamics needs finite beta and field".into()));
    }
    if config.batches == 0 || config.sweeps < config.batches {
        return Err(Error::Precondition(format!(
            "need sweeps >= batches >= 1, got {} and {}",
            config.sweeps, config.batches
        )));
    }
    let n = g.n;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut s: Vec<i8> = (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
    let kmax = g.kappa as i32;
    let up: Vec<f64> = (-kmax..=kmax).map(|k| heat_bath_prob(k, beta, field)).collect();
    let sweep = |s: &mut Vec<i8>, rng: &mut ChaCha8Rng| {
        for v in 0..n {
            let sum: i32 = g.neighbors(v).iter().map(|&u| s[u] as i32).sum();
            s[v] = if rng.random::<f64>() < up[(sum + kmax) as usize] { 1 } else { -1 };
        }
    };
    for _ in 0..config.burn_in {
        sweep(&mut s, &mut rng);
    }
    let directed = (n * g.kappa) as f64;
    let per_batch = config.sweeps / config.batches;
    let used = per_batch * config.batches;
    let mut batch_edges = vec![[0.0f64; 4]; config.batches];
    let mut batch_mag = vec![0.0f64; config.batches];
    let mut samples = config.record_samples.then(Vec::new);
    for t in 0..used {
        sweep(&mut s, &mut rng);
        let b = t / per_batch;
        let mut e = [0usize; 4];
        for &(u, v) in &g.edges {
            let i = usize::from(s[u] < 0) * 2 + usize::from(s[v] < 0);
            let j = usize::from(s[v] < 0) * 2 + usize::from(s[u] < 0);
            e[i] += 1;
            e[j] += 1;
        }
        for k in 0..4 {
            batch_edges[b][k] += e[k] as f64 / directed;
        }
        batch_mag[b] += s.iter().map(|&x| x as f64).sum::<f64>() / n as f64;
        if let Some(out) = samples.as_mut() {
            out.push(s.clone());
        }
    }
    for b in 0..config.batches {
        batch_edges[b].iter_mut().for_each(|x| *x /= per_batch as f64);
        batch_mag[b] /= per_batch as f64;
    }
    let nb = config.batches as f64;
    let mean_edge: Vec<f64> = (0..4)
        .map(|k| batch_edges.iter().map(|e| e[k]).sum::<f64>() / nb)
        .collect();
    let edge_marginal_error = (0..4)
        .map(|k| batch_error(&batch_edges.iter().map(|e| e[k]).collect::<Vec<_>>()))
        .collect();
    Ok(GlauberReport {
        beta,
        field,
        config: config.clone(),
        edge_marginal: EdgeMeasure::from_unnormalized(SpinSpace::two_spin(), mean_edge)?,
        edge_marginal_error,
        magnetization: batch_mag.iter().sum::<f64>() / nb,
        magnetization_error: batch_error(&batch_mag),
        samples,
    })
}
