use std::io::Write;

use dymatch::adversary::{
    adaptive_step, from_jsonl, random_workload_capped, DeleteMatched, HubChurn, MatchedChurn, Replay, Strategy, Update,
};
use dymatch::driver::{apply_update, Algorithm};
use dymatch::oracle::{certify, check_batch_report, oracle_cap};
use dymatch::{Partition, SimConfig, Simulation};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{Adversary, PartitionKind, RunConfig, Verify};
use crate::CliError;

#[derive(Debug, Serialize)]
struct OracleRecord {
    maximal: bool,
    three_aug_count: usize,
    mcm: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    mcm_exhaustive: Option<usize>,
    ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    phase_failures: Option<Vec<String>>,
}

#[derive(Debug, Serialize)]
struct Record {
    update_index: usize,
    kind: &'static str,
    ell: usize,
    rounds: u64,
    max_link_tokens: usize,
    spreading_invocations: u64,
    matching_size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleRecord>,
}

fn partition(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<Partition, CliError> {
    let (n, k) = (cfg.n, cfg.k);
    if k == 0 {
        return Err(CliError::Usage("k must be at least 1".into()));
    }
    Ok(match cfg.partition {
        PartitionKind::RoundRobin => Partition::round_robin(n, k),
        PartitionKind::Contiguous => Partition::contiguous(n, k),
        PartitionKind::Random => {
            let mut owners: Vec<usize> = (0..n).map(|v| v % k).collect();
            owners.shuffle(rng);
            Partition::from_owners(owners, k).map_err(CliError::usage)?
        }
    })
}

enum Source {
    Fixed(std::vec::IntoIter<Update>),
    Adaptive(Box<dyn Strategy>),
}

fn source(cfg: &RunConfig, rng: &mut ChaCha8Rng, replay: Option<Vec<Update>>) -> Result<Source, CliError> {
    if let Some(updates) = replay {
        return Ok(Source::Adaptive(Box::new(Replay::new(updates))));
    }
    Ok(match cfg.adversary {
        Adversary::Random => Source::Fixed(
            random_workload_capped(rng, cfg.n, cfg.updates, cfg.p_delete, cfg.max_batch, cfg.max_edges).into_iter(),
        ),
        Adversary::DeleteMatched => Source::Adaptive(Box::new(DeleteMatched)),
        Adversary::MatchedChurn => Source::Adaptive(Box::new(MatchedChurn {
            target_edges: cfg.target_edges,
        })),
        Adversary::HubChurn => Source::Adaptive(Box::new(HubChurn::new(cfg.hub_pairs))),
        Adversary::Replay => {
            let path = cfg.replay.as_ref().expect("checked at load");
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            Source::Adaptive(Box::new(Replay::new(from_jsonl(&text).map_err(CliError::usage)?)))
        }
    })
}

/// Runs `cfg` and writes one JSONL record per update. `replay` replaces the
/// configured adversary.
pub fn run(cfg: &RunConfig, replay: Option<Vec<Update>>, out: &mut dyn Write) -> Result<(), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let part = partition(cfg, &mut rng)?;
    let mut sim = Simulation::new(SimConfig::new(cfg.n, cfg.k, cfg.beta, cfg.seed), part).map_err(CliError::usage)?;
    let replaying = replay.is_some();
    let mut src = source(cfg, &mut rng, replay)?;
    let cap = oracle_cap();

    let mut index = 0;
    while replaying || index < cfg.updates {
        let update = match &mut src {
            Source::Fixed(it) => it.next(),
            Source::Adaptive(s) => adaptive_step(s.as_mut(), &sim, &mut rng).map_err(CliError::usage)?,
        };
        let Some(update) = update else { break };
        if cfg.algorithm == Algorithm::Batchinc && matches!(update, Update::Delete { .. }) {
            let why = if replaying { "batchinc accepts insertions only" } else { "graph is full, raise n or lower updates" };
            return Err(CliError::Usage(format!("update {index}: {why}")));
        }
        update
            .validate(sim.graph())
            .map_err(|e| CliError::Usage(format!("update {index}: {e}")))?;

        let before = (cfg.verify == Verify::Phase).then(|| sim.graph().clone());
        let spreads0 = sim.metrics().spreading_invocations;
        let outcome = apply_update(&mut sim, cfg.algorithm, &update)
            .map_err(|e| CliError::Algorithm(format!("update {index}: {e}")))?;

        let mut failure = None;
        let oracle = (cfg.verify != Verify::Off).then(|| {
            let c = certify(sim.graph(), sim.matching(), cap);
            if !c.ok() {
                failure = Some(format!(
                    "update {index}: certificate failed (free edge {:?}, {} 3-augmenting paths, |M|={} mcm={})",
                    c.free_edge, c.three_aug_count, c.matching_size, c.mcm
                ));
            }
            let phase_failures = match (&before, &outcome.batch) {
                (Some(g), Some(report)) => {
                    let names: Vec<String> = check_batch_report(g, report)
                        .iter()
                        .enumerate()
                        .flat_map(|(i, r)| {
                            r.failures()
                                .map(move |f| format!("minibatch {i}: {} {}", f.name, f.witness.as_deref().unwrap_or("")))
                        })
                        .collect();
                    if let (None, Some(first)) = (&failure, names.first()) {
                        failure = Some(format!("update {index}: {first}"));
                    }
                    Some(names)
                }
                _ => None,
            };
            OracleRecord {
                maximal: c.maximal,
                three_aug_count: c.three_aug_count,
                mcm: c.mcm,
                mcm_exhaustive: c.mcm_exhaustive,
                ratio: c.ratio,
                phase_failures,
            }
        });

        let record = Record {
            update_index: index,
            kind: update.kind(),
            ell: update.len(),
            rounds: outcome.rounds,
            max_link_tokens: outcome.max_link_tokens,
            spreading_invocations: sim.metrics().spreading_invocations - spreads0,
            matching_size: sim.matching().size(),
            oracle,
        };
        serde_json::to_writer(&mut *out, &record).map_err(CliError::io)?;
        writeln!(out).map_err(CliError::io)?;
        if let Some(f) = failure {
            out.flush().map_err(CliError::io)?;
            return Err(CliError::Oracle(f));
        }
        index += 1;
    }
    out.flush().map_err(CliError::io)
}
