use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use gibbs_consensus::cavity_bp::{
    bp_fixed_points, ising_fixed_points, theta_to_boundary_law, FixedPointSet, IsingParams,
    Specification,
};
use gibbs_consensus::conditional_limits::{
    classify as classify_limits, fmt_real, general_limit_set, phase_diagram as phase_rows,
    write_phase_csv,
};
use gibbs_consensus::edge_optimizer::{c_ref, grid_oracle};
use gibbs_consensus::graph_lab::{
    gen_regular_graph, glauber_posterior, ldp_rate_curve, neighborhood_empirical, splitmix64,
    task_rng, Direction, GlauberConfig, LdpConfig, MarkedGraph, RegularGraph,
};
use gibbs_consensus::spin_measures::{EdgePotential, Pmf};
use gibbs_consensus::tis_gibbs::{ising_consensus, root_magnetization};
use gibbs_consensus::Error;

use crate::parse;
use crate::{Failure, Format, Run};

#[derive(Serialize)]
struct Envelope<'a, C: Serialize, R: Serialize> {
    command: &'a str,
    seed: u64,
    config: &'a C,
    result: &'a R,
    #[serde(skip_serializing_if = "Option::is_none")]
    paper_anchor: Option<Anchor>,
}

#[derive(Serialize)]
struct Anchor {
    theorem1_case: String,
}

fn json<C: Serialize, R: Serialize>(
    command: &str,
    run: &Run,
    config: &C,
    result: &R,
    anchor: Option<Anchor>,
) -> Result<Vec<u8>, Failure> {
    let env = Envelope {
        command,
        seed: run.seed,
        config,
        result,
        paper_anchor: anchor,
    };
    let mut out = serde_json::to_vec_pretty(&env).map_err(|e| Failure::Io(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

/// CSV artifact whose first line is a `#` comment carrying the command,
/// seed and resolved config as JSON.
fn csv_preamble<C: Serialize>(command: &str, run: &Run, config: &C) -> Result<Vec<u8>, Failure> {
    let meta = serde_json::json!({ "command": command, "seed": run.seed, "config": config });
    Ok(format!("# {meta}\n").into_bytes())
}

fn csv_rows(mut out: Vec<u8>, header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>, Failure> {
    let mut w = csv::Writer::from_writer(&mut out);
    let io = |e: csv::Error| Failure::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush()?;
    drop(w);
    Ok(out)
}

fn json_only(command: &str, run: &Run) -> Result<(), Failure> {
    match run.format {
        Format::Json => Ok(()),
        Format::Csv => Err(Failure::Usage(format!("{command} has no csv output; use --format json"))),
    }
}

fn optional_reals(s: &Option<String>) -> Result<Option<Vec<f64>>, Failure> {
    s.as_deref().map(parse::reals).transpose().map_err(Failure::Usage)
}

#[derive(Args, Debug)]
pub struct MarkArgs {
    /// Two-spin mark law P(1).
    #[arg(long)]
    p: Option<f64>,
    /// Mark law weights, comma-separated in label order (1,-1 for two spins).
    #[arg(long)]
    nu: Option<String>,
    /// Edge potential: h11,h1m1,hm1m1 for two spins, row-major q*q values otherwise.
    #[arg(long, allow_hyphen_values = true)]
    h: Option<String>,
}

impl MarkArgs {
    fn resolve(&self) -> Result<(Pmf, EdgePotential), Failure> {
        let nu = parse::mark_law(self.p, optional_reals(&self.nu)?.as_deref())?;
        let h = parse::potential(nu.space(), optional_reals(&self.h)?.as_deref())?;
        Ok((nu, h))
    }
}

#[derive(Args, Debug, Serialize)]
pub struct ClassifyArgs {
    #[arg(long)]
    kappa: usize,
    /// Mark law P(1).
    #[arg(long)]
    p: f64,
    /// Consensus level.
    #[arg(long, allow_hyphen_values = true)]
    c: f64,
}

pub fn classify(a: &ClassifyArgs, run: &Run) -> Result<Vec<u8>, Failure> {
    json_only("classify", run)?;
    let report = classify_limits(a.kappa, a.p, a.c)?;
    let anchor = Anchor {
        theorem1_case: report.case.to_string(),
    };
    json("classify", run, a, &report, Some(anchor))
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[arg(long)]
    kappa: usize,
    #[command(flatten)]
    marks: MarkArgs,
    #[arg(long, allow_hyphen_values = true)]
    c: f64,
}

#[derive(Serialize)]
struct ProblemConfig {
    kappa: usize,
    nu: Pmf,
    h: EdgePotential,
    c: f64,
}

pub fn solve(a: &SolveArgs, run: &Run) -> Result<Vec<u8>, Failure> {
    json_only("solve", run)?;
    let (nu, h) = a.marks.resolve()?;
    let set = general_limit_set(&nu, &h, a.c, a.kappa)?;
    let config = ProblemConfig {
        kappa: a.kappa,
        nu,
        h,
        c: a.c,
    };
    json("solve", run, &config, &set, None)
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[arg(long)]
    kappa: usize,
    #[command(flatten)]
    marks: MarkArgs,
    #[arg(long, allow_hyphen_values = true)]
    c: f64,
    /// Grid spacing on the simplex of edge measures.
    #[arg(long, default_value_t = 1e-3)]
    resolution: f64,
}

#[derive(Serialize)]
struct OracleConfig {
    #[serde(flatten)]
    problem: ProblemConfig,
    resolution: f64,
}

pub fn oracle(a: &OracleArgs, run: &Run) -> Result<Vec<u8>, Failure> {
    json_only("oracle", run)?;
    let (nu, h) = a.marks.resolve()?;
    let result = grid_oracle(&nu, &h, a.c, a.kappa, a.resolution)?;
    let config = OracleConfig {
        problem: ProblemConfig {
            kappa: a.kappa,
            nu,
            h,
            c: a.c,
        },
        resolution: a.resolution,
    };
    json("oracle", run, &config, &result, None)
}

#[derive(Args, Debug, Serialize)]
pub struct CavityArgs {
    #[arg(long)]
    kappa: usize,
    /// Ising coupling.
    #[arg(long, allow_hyphen_values = true)]
    beta: f64,
    /// External field.
    #[arg(long = "B", allow_hyphen_values = true)]
    #[serde(rename = "B")]
    field: f64,
    /// Also run belief propagation from this many starts (0 skips it).
    #[arg(long, default_value_t = 16)]
    bp_starts: usize,
    #[arg(long, default_value_t = 1e-12)]
    bp_tol: f64,
}

#[derive(Serialize)]
struct CavityMeasure {
    theta: f64,
    boundary_law: Pmf,
    magnetization: f64,
    consensus: f64,
}

#[derive(Serialize)]
struct CavityResult {
    fixed_points: FixedPointSet,
    measures: Vec<CavityMeasure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bp_boundary_laws: Option<Vec<Pmf>>,
}

pub fn cavity(a: &CavityArgs, run: &Run) -> Result<Vec<u8>, Failure> {
    json_only("cavity", run)?;
    let fixed_points = ising_fixed_points(&IsingParams::new(a.kappa, a.beta, a.field))?;
    let measures = fixed_points
        .thetas()
        .into_iter()
        .map(|theta| CavityMeasure {
            theta,
            boundary_law: theta_to_boundary_law(theta),
            magnetization: root_magnetization(theta, a.beta),
            consensus: ising_consensus(theta, a.beta, a.kappa),
        })
        .collect();
    let bp_boundary_laws = if a.bp_starts > 0 {
        let spec = Specification::ising(a.beta, a.field)?;
        Some(bp_fixed_points(&spec, a.kappa, a.bp_starts, a.bp_tol)?)
    } else {
        None
    };
    let result = CavityResult {
        fixed_points,
        measures,
        bp_boundary_laws,
    };
    json("cavity", run, a, &result, None)
}

#[derive(Args, Debug, Serialize)]
pub struct PhaseArgs {
    #[arg(long)]
    kappa: usize,
    #[arg(long)]
    p: f64,
    #[arg(long, allow_hyphen_values = true)]
    c_min: f64,
    #[arg(long, allow_hyphen_values = true)]
    c_max: f64,
    /// Number of grid points, endpoints included.
    #[arg(long)]
    steps: usize,
}

pub fn phase_diagram(a: &PhaseArgs, run: &Run) -> Result<Vec<u8>, Failure> {
    if a.steps < 2 || a.c_max.partial_cmp(&a.c_min) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::Precondition("need steps >= 2 and c_max > c_min".into()).into());
    }
    let span = a.c_max - a.c_min;
    let last = (a.steps - 1) as f64;
    let grid: Vec<f64> = (0..a.steps)
        .map(|i| a.c_min + span * (i as f64 / last))
        .collect();
    let rows = phase_rows(a.kappa, a.p, &grid)?;
    match run.format {
        Format::Json => json("phase-diagram", run, a, &rows, None),
        Format::Csv => {
            let mut out = csv_preamble("phase-diagram", run, a)?;
            write_phase_csv(&rows, &mut out)?;
            Ok(out)
        }
    }
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Number of vertices.
    #[arg(long)]
    n: usize,
    #[arg(long)]
    kappa: usize,
    #[command(flatten)]
    marks: MarkArgs,
    /// Also write the graph as an edge list to this file.
    #[arg(long)]
    graph_out: Option<PathBuf>,
}

#[derive(Serialize)]
struct SimulateConfig {
    n: usize,
    kappa: usize,
    nu: Pmf,
    h: EdgePotential,
}

#[derive(Serialize)]
struct SimulateResult {
    edges: Vec<(usize, usize)>,
    marks: Vec<String>,
    edge_marginal: gibbs_consensus::spin_measures::EdgeMeasure,
    consensus: f64,
}

pub fn simulate(a: &SimulateArgs, run: &Run) -> Result<Vec<u8>, Failure> {
    let (nu, h) = a.marks.resolve()?;
    let graph = gen_regular_graph(a.n, a.kappa, run.seed)?;
    if let Some(path) = &a.graph_out {
        std::fs::write(path, graph.to_edge_list())
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
    }
    let mut rng = task_rng(run.seed, 1);
    let marked = MarkedGraph::iid(graph, &nu, &mut rng);
    let emp = neighborhood_empirical(&marked, &h)?;
    let labels: Vec<String> = marked
        .marks
        .iter()
        .map(|&m| marked.space.label(m).to_string())
        .collect();
    let config = SimulateConfig {
        n: a.n,
        kappa: a.kappa,
        nu,
        h,
    };
    match run.format {
        Format::Json => {
            let result = SimulateResult {
                edges: marked.graph.edges.clone(),
                marks: labels,
                edge_marginal: emp.edge,
                consensus: emp.consensus,
            };
            json("simulate", run, &config, &result, None)
        }
        Format::Csv => {
            let out = csv_preamble("simulate", run, &config)?;
            let rows: Vec<Vec<String>> = labels
                .into_iter()
                .enumerate()
                .map(|(v, m)| vec![v.to_string(), m])
                .collect();
            csv_rows(out, &["vertex".into(), "mark".into()], &rows)
        }
    }
}

#[derive(Args, Debug)]
pub struct LdpArgs {
    #[arg(long)]
    kappa: usize,
    #[command(flatten)]
    marks: MarkArgs,
    #[arg(long, allow_hyphen_values = true)]
    c: f64,
    /// Graph sizes, comma-separated.
    #[arg(long, default_value = "8,12,16,20")]
    n_list: String,
    /// Graphs sampled per size.
    #[arg(long, default_value_t = 500)]
    graphs: usize,
    #[arg(long, default_value_t = 20)]
    batches: usize,
    /// Event side, ge or le (default: away from the typical consensus).
    #[arg(long)]
    direction: Option<Direction>,
    /// Sharpening of the threshold to c + delta (ge) or c - delta (le).
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
}

pub fn verify_ldp(a: &LdpArgs, run: &Run) -> Result<Vec<u8>, Failure> {
    let (nu, h) = a.marks.resolve()?;
    let n_list = parse::sizes(&a.n_list).map_err(Failure::Usage)?;
    let direction = a
        .direction
        .unwrap_or_else(|| Direction::toward(a.c, c_ref(&nu, &h, a.kappa)));
    let config = LdpConfig {
        n_list,
        kappa: a.kappa,
        nu,
        h,
        c: a.c,
        direction,
        delta: a.delta,
        n_graphs: a.graphs,
        batches: a.batches,
        seed: run.seed,
    };
    let curve = ldp_rate_curve(&config)?;
    match run.format {
        Format::Json => json("verify-ldp", run, &config, &curve, None),
        Format::Csv => {
            let out = csv_preamble("verify-ldp", run, &config)?;
            let header: Vec<String> = ["n", "n_graphs", "p_hat", "p_hat_error", "rate", "rate_error", "r_edge", "gap"]
                .iter()
                .map(|s| s.to_string())
                .collect();
            let rows: Vec<Vec<String>> = curve
                .points
                .iter()
                .zip(&curve.gaps)
                .map(|(p, g)| {
                    vec![
                        p.n.to_string(),
                        p.n_graphs.to_string(),
                        fmt_real(p.p_hat),
                        fmt_real(p.p_hat_error),
                        fmt_real(p.rate),
                        fmt_real(p.rate_error),
                        fmt_real(curve.r_edge),
                        fmt_real(*g),
                    ]
                })
                .collect();
            csv_rows(out, &header, &rows)
        }
    }
}

#[derive(Args, Debug)]
pub struct GlauberArgs {
    /// Number of vertices of a freshly sampled graph.
    #[arg(long, required_unless_present = "graph")]
    n: Option<usize>,
    #[arg(long, required_unless_present = "graph")]
    kappa: Option<usize>,
    /// Edge-list file ("n kappa" header, then "u v" lines) used instead of sampling.
    #[arg(long, conflicts_with_all = ["n", "kappa"])]
    graph: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    beta: f64,
    #[arg(long = "B", allow_hyphen_values = true)]
    field: f64,
    #[arg(long, default_value_t = 2000)]
    sweeps: usize,
    #[arg(long, default_value_t = 100)]
    burn_in: usize,
    #[arg(long, default_value_t = 20)]
    batches: usize,
    /// Keep every post-burn-in configuration (csv output lists them).
    #[arg(long)]
    record_samples: bool,
}

#[derive(Serialize)]
struct GlauberRunConfig {
    n: usize,
    kappa: usize,
    graph: Option<PathBuf>,
    beta: f64,
    #[serde(rename = "B")]
    field: f64,
    dynamics: GlauberConfig,
}

pub fn glauber(a: &GlauberArgs, run: &Run) -> Result<Vec<u8>, Failure> {
    let graph = match (&a.graph, a.n, a.kappa) {
        (Some(path), _, _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
            RegularGraph::from_edge_list(&text)?
        }
        (None, Some(n), Some(kappa)) => gen_regular_graph(n, kappa, run.seed)?,
        _ => return Err(Failure::Usage("give --graph or both --n and --kappa".into())),
    };
    if run.format == Format::Csv && !a.record_samples {
        return Err(Failure::Usage("glauber csv output lists samples; add --record-samples".into()));
    }
    let dynamics = GlauberConfig {
        sweeps: a.sweeps,
        burn_in: a.burn_in,
        batches: a.batches,
        seed: run.seed ^ splitmix64(1),
        record_samples: a.record_samples,
    };
    let report = glauber_posterior(&graph, a.beta, a.field, &dynamics)?;
    let config = GlauberRunConfig {
        n: graph.n,
        kappa: graph.kappa,
        graph: a.graph.clone(),
        beta: a.beta,
        field: a.field,
        dynamics,
    };
    match run.format {
        Format::Json => json("glauber", run, &config, &report, None),
        Format::Csv => {
            let out = csv_preamble("glauber", run, &config)?;
            let mut header = vec!["sweep".to_string()];
            header.extend((0..graph.n).map(|v| format!("s{v}")));
            let rows: Vec<Vec<String>> = report
                .samples
                .unwrap_or_default()
                .iter()
                .enumerate()
                .map(|(t, s)| {
                    std::iter::once(t.to_string())
                        .chain(s.iter().map(|x| x.to_string()))
                        .collect()
                })
                .collect();
            csv_rows(out, &header, &rows)
        }
    }
}
