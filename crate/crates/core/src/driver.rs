//! Per-update driver loop shared by the CLI, the bindings and the tests.

use serde::{Deserialize, Serialize};

use crate::adversary::{LBInstance, Update};
use crate::batchinc::{BatchIncremental, BatchReport};
use crate::error::{Error, Result};
use crate::fullydyn::FullyDynamic;
use crate::oracle::find_3aug_paths;
use crate::sim::{SimConfig, Simulation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Fullydyn,
    Batchinc,
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fullydyn" => Ok(Self::Fullydyn),
            "batchinc" => Ok(Self::Batchinc),
            _ => Err(Error::BadConfig(format!("unknown algorithm {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct UpdateOutcome {
    pub rounds: u64,
    pub tokens: u64,
    pub max_link_tokens: usize,
    /// Present for batch-incremental updates.
    pub batch: Option<BatchReport>,
}

/// Validates and processes one update with `alg`, bracketing it with the
/// simulator's per-update accounting.
pub fn apply_update(sim: &mut Simulation, alg: Algorithm, update: &Update) -> Result<UpdateOutcome> {
    update.validate(sim.graph())?;
    if alg == Algorithm::Batchinc && matches!(update, Update::Delete { .. }) {
        return Err(Error::InvalidUpdate("batch-incremental algorithm accepts insertions only".into()));
    }
    let tokens0 = sim.metrics().tokens_total;
    sim.begin_update();
    let result = run(sim, alg, update);
    let rounds = sim.end_update();
    let batch = result?;
    Ok(UpdateOutcome {
        rounds,
        tokens: sim.metrics().tokens_total - tokens0,
        max_link_tokens: sim.metrics().max_link_tokens_per_update.last().copied().unwrap_or(0),
        batch,
    })
}

fn run(sim: &mut Simulation, alg: Algorithm, update: &Update) -> Result<Option<BatchReport>> {
    match (alg, update) {
        (Algorithm::Fullydyn, Update::Insert { u, v }) => FullyDynamic::new().insert(sim, *u, *v).map(|_| None),
        (Algorithm::Fullydyn, Update::Delete { u, v }) => FullyDynamic::new().delete(sim, *u, *v).map(|_| None),
        (Algorithm::Fullydyn, Update::InsertBatch { edges }) => {
            let fd = FullyDynamic::new();
            for &(u, v) in edges {
                fd.insert(sim, u, v)?;
            }
            Ok(None)
        }
        (Algorithm::Batchinc, Update::Insert { u, v }) => BatchIncremental::new().process_batch(sim, &[(*u, *v)]).map(Some),
        (Algorithm::Batchinc, Update::InsertBatch { edges }) => BatchIncremental::new().process_batch(sim, edges).map(Some),
        (Algorithm::Batchinc, Update::Delete { .. }) => unreachable!("rejected before the update starts"),
    }
}

/// Result of one lower-bound trial.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LbTrial {
    pub p: usize,
    pub ell: usize,
    /// Bits received by player `p` while the challenge batch was processed.
    pub bits_to_p: u64,
    /// `ℓ · token_bits`.
    pub reference_bits: u64,
    /// Segments where the `{u,v}` / `{v,w}` statuses were required to swap.
    pub flips_required: usize,
    pub flips_observed: usize,
    /// Segments still containing a 3-augmenting path afterwards.
    pub segments_with_3aug: usize,
}

impl LbTrial {
    pub fn ok(&self) -> bool {
        self.flips_required == self.flips_observed && self.segments_with_3aug == 0 && self.bits_to_p >= self.ell as u64
    }
}

/// Runs the setup insertions one at a time, then the challenge batch, with
/// the batch-incremental algorithm.
pub fn run_lb_trial(inst: &LBInstance, beta: usize, seed: u64) -> Result<LbTrial> {
    let config = SimConfig::new(inst.n, inst.k, beta, seed);
    let mut sim = Simulation::new(config, inst.partition.clone())?;
    for u in &inst.setup_updates {
        apply_update(&mut sim, Algorithm::Batchinc, u)?;
    }
    let pre = sim.matching().clone();
    let bits0 = sim.metrics().bits_received_per_player[inst.p];
    if !inst.challenge_batch.is_empty() {
        let batch = Update::InsertBatch {
            edges: inst.challenge_batch.clone(),
        };
        apply_update(&mut sim, Algorithm::Batchinc, &batch)?;
    }
    let bits_to_p = sim.metrics().bits_received_per_player[inst.p] - bits0;
    let post = sim.matching();

    let mut flips_required = 0;
    let mut flips_observed = 0;
    for (&i, &bit) in inst.j_p.iter().zip(&inst.gamma) {
        let [_, u, v, w, _] = inst.segments[i];
        if !bit && pre.contains(u, v) {
            flips_required += 1;
            if !post.contains(u, v) && post.contains(v, w) {
                flips_observed += 1;
            }
        }
    }
    let bad: std::collections::BTreeSet<usize> = find_3aug_paths(sim.graph(), post).iter().map(|p| p.1 / 5).collect();

    Ok(LbTrial {
        p: inst.p,
        ell: inst.j_p.len(),
        bits_to_p,
        reference_bits: (inst.j_p.len() * sim.config().token_bits) as u64,
        flips_required,
        flips_observed,
        segments_with_3aug: bad.len(),
    })
}
