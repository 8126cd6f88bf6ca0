use std::io::Write;

use dymatch::adversary::{adaptive_step, DeleteMatched, MatchedChurn, Update};
use dymatch::driver::{apply_update, Algorithm};
use dymatch::graph::ceil_log2;
use dymatch::batchinc::minibatch_size;
use dymatch::{Graph, Partition, SimConfig, Simulation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone)]
pub struct Grid {
    pub algorithm: Algorithm,
    /// `m` for fullydyn, `ℓ` for batchinc.
    pub sizes: Vec<usize>,
    pub ks: Vec<usize>,
    pub betas: Vec<usize>,
    pub trials: usize,
    /// Measured deletions per fullydyn trial.
    pub steps: usize,
    /// Vertex count for batchinc cells.
    pub n: usize,
    pub seed: u64,
}

#[derive(Debug, Serialize)]
struct Row {
    algorithm: &'static str,
    n: usize,
    k: usize,
    beta: usize,
    size: usize,
    trials: usize,
    mean_rounds: f64,
    max_rounds: u64,
    bound: usize,
    ratio: f64,
    max_link_tokens: usize,
}

const HEADER: [&str; 11] = [
    "algorithm",
    "n",
    "k",
    "beta",
    "size",
    "trials",
    "mean_rounds",
    "max_rounds",
    "bound",
    "ratio",
    "max_link_tokens",
];

fn sim(n: usize, k: usize, beta: usize, seed: u64) -> Result<Simulation, CliError> {
    Simulation::new(SimConfig::new(n, k, beta, seed), Partition::round_robin(n, k)).map_err(CliError::usage)
}

fn algo(e: dymatch::Error) -> CliError {
    CliError::Algorithm(e.to_string())
}

/// Fills a graph on `2√m + 1` vertices to `m` edges, then alternates a
/// matched-edge deletion with a refill. Only deletions are measured.
fn fullydyn_cell(m: usize, k: usize, beta: usize, g: &Grid, rng: &mut ChaCha8Rng) -> Result<Row, CliError> {
    let n = 2 * m.isqrt() + 1;
    let (mut rounds, mut max_link) = (Vec::new(), 0);
    for trial in 0..g.trials {
        let mut s = sim(n, k, beta, g.seed.wrapping_add(trial as u64))?;
        let mut churn = MatchedChurn { target_edges: m };
        while s.graph().m() < m {
            let Some(up) = adaptive_step(&mut churn, &s, rng).map_err(algo)? else { break };
            apply_update(&mut s, Algorithm::Fullydyn, &up).map_err(algo)?;
        }
        for _ in 0..g.steps {
            let Some(up) = adaptive_step(&mut DeleteMatched, &s, rng).map_err(algo)? else { break };
            let out = apply_update(&mut s, Algorithm::Fullydyn, &up).map_err(algo)?;
            if matches!(up, Update::Delete { .. }) {
                rounds.push(out.rounds);
            }
            if let Some(up) = adaptive_step(&mut churn, &s, rng).map_err(algo)? {
                apply_update(&mut s, Algorithm::Fullydyn, &up).map_err(algo)?;
            }
        }
        max_link = max_link.max(s.metrics().max_link_tokens_per_round);
    }
    let bound = m.isqrt().div_ceil(k * beta).max(1);
    Ok(row("fullydyn", n, k, beta, m, g.trials, &rounds, bound, max_link))
}

/// Background of `n` edges inserted in batches of 16, then one measured
/// batch of `ℓ` fresh edges.
fn batchinc_cell(ell: usize, k: usize, beta: usize, g: &Grid, rng: &mut ChaCha8Rng) -> Result<Row, CliError> {
    let n = g.n;
    if ell + n > n * (n - 1) / 2 {
        return Err(CliError::Usage(format!("ℓ={ell} does not fit on n={n}")));
    }
    let (mut rounds, mut max_link) = (Vec::new(), 0);
    for trial in 0..g.trials {
        let mut s = sim(n, k, beta, g.seed.wrapping_add(trial as u64))?;
        let mut shadow = Graph::new(n);
        let mut draw = || loop {
            let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
            if u != v && !shadow.has_edge(u, v) {
                shadow.insert(u, v).expect("absent edge");
                return (u, v);
            }
        };
        let background: Vec<_> = (0..n).map(|_| draw()).collect();
        let batch: Vec<_> = (0..ell).map(|_| draw()).collect();
        for chunk in background.chunks(16) {
            let up = Update::InsertBatch { edges: chunk.to_vec() };
            apply_update(&mut s, Algorithm::Batchinc, &up).map_err(algo)?;
        }
        let out = apply_update(&mut s, Algorithm::Batchinc, &Update::InsertBatch { edges: batch }).map_err(algo)?;
        rounds.push(out.rounds);
        max_link = max_link.max(s.metrics().max_link_tokens_per_round);
    }
    let bound = ell.div_ceil(minibatch_size(k, beta)).max(1) * ceil_log2(n).max(1);
    Ok(row("batchinc", n, k, beta, ell, g.trials, &rounds, bound, max_link))
}

#[allow(clippy::too_many_arguments)]
fn row(
    algorithm: &'static str,
    n: usize,
    k: usize,
    beta: usize,
    size: usize,
    trials: usize,
    rounds: &[u64],
    bound: usize,
    max_link_tokens: usize,
) -> Row {
    let mean = if rounds.is_empty() {
        0.0
    } else {
        rounds.iter().sum::<u64>() as f64 / rounds.len() as f64
    };
    Row {
        algorithm,
        n,
        k,
        beta,
        size,
        trials,
        mean_rounds: mean,
        max_rounds: rounds.iter().copied().max().unwrap_or(0),
        bound,
        ratio: mean / bound as f64,
        max_link_tokens,
    }
}

/// Writes one CSV row per grid cell in size-major order.
pub fn bench(grid: &Grid, out: &mut dyn Write) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(HEADER).map_err(CliError::io)?;
    let mut rng = ChaCha8Rng::seed_from_u64(grid.seed);
    for &size in &grid.sizes {
        for &k in &grid.ks {
            for &beta in &grid.betas {
                let r = match grid.algorithm {
                    Algorithm::Fullydyn => fullydyn_cell(size, k, beta, grid, &mut rng)?,
                    Algorithm::Batchinc => batchinc_cell(size, k, beta, grid, &mut rng)?,
                };
                w.serialize(r).map_err(CliError::io)?;
            }
        }
    }
    w.flush().map_err(CliError::io)
}
