use std::path::{Path, PathBuf};
use std::str::FromStr;

use dymatch::driver::Algorithm;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Verify {
    Off,
    Post,
    Phase,
}

impl FromStr for Verify {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "off" => Ok(Self::Off),
            "post" | "post-update" => Ok(Self::Post),
            "phase" | "per-phase" => Ok(Self::Phase),
            _ => Err(CliError::Usage(format!("unknown verify level {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Adversary {
    Random,
    DeleteMatched,
    MatchedChurn,
    HubChurn,
    Replay,
}

impl FromStr for Adversary {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "random" => Ok(Self::Random),
            "delete-matched" => Ok(Self::DeleteMatched),
            "matched-churn" => Ok(Self::MatchedChurn),
            "hub-churn" => Ok(Self::HubChurn),
            "replay" => Ok(Self::Replay),
            _ => Err(CliError::Usage(format!("unknown adversary {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionKind {
    RoundRobin,
    Contiguous,
    Random,
}

impl FromStr for PartitionKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "round-robin" | "round_robin" => Ok(Self::RoundRobin),
            "contiguous" => Ok(Self::Contiguous),
            "random" => Ok(Self::Random),
            _ => Err(CliError::Usage(format!("unknown partition {s:?}"))),
        }
    }
}

/// Raw file contents; every key is optional so defaults live in one place.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    n: Option<usize>,
    k: Option<usize>,
    beta: Option<usize>,
    seed: Option<u64>,
    algorithm: Option<String>,
    adversary: Option<String>,
    updates: Option<usize>,
    p_delete: Option<f64>,
    max_batch: Option<usize>,
    max_edges: Option<usize>,
    target_edges: Option<usize>,
    hub_pairs: Option<usize>,
    replay: Option<PathBuf>,
    verify: Option<String>,
    partition: Option<String>,
}

pub const RUN_KEYS_HELP: &str = "\
Config keys (flat TOML):
  n             vertices (required)
  k             players (required)
  beta          tokens per link per round (default 1)
  seed          RNG seed (default 0)
  algorithm     fullydyn | batchinc (default fullydyn)
  adversary     random | delete-matched | matched-churn | hub-churn | replay (default random)
  updates       number of updates to issue (default 100)
  p_delete      deletion probability for `random` (default 0.0)
  max_batch     largest batch for `random`, 1 = single inserts (default 1)
  max_edges     edge ceiling for `random` (default unlimited)
  target_edges  edge count `matched-churn` refills to (default 2n)
  hub_pairs     matched pairs around the hub for `hub-churn` (default (n-2)/2)
  replay        JSONL update file for `replay`, relative to the config file
  verify        off | post | phase (default post)
  partition     round-robin | contiguous | random (default round-robin)";

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub n: usize,
    pub k: usize,
    pub beta: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub adversary: Adversary,
    pub updates: usize,
    pub p_delete: f64,
    pub max_batch: usize,
    pub max_edges: usize,
    pub target_edges: usize,
    pub hub_pairs: usize,
    pub replay: Option<PathBuf>,
    pub verify: Verify,
    pub partition: PartitionKind,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = read(path)?;
        let raw: RawRun = toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_raw(raw, base)
    }

    fn from_raw(raw: RawRun, base: &Path) -> Result<Self, CliError> {
        let n = raw.n.ok_or_else(|| CliError::Usage("config: missing n".into()))?;
        let k = raw.k.ok_or_else(|| CliError::Usage("config: missing k".into()))?;
        let algorithm = match raw.algorithm.as_deref() {
            None => Algorithm::Fullydyn,
            Some(s) => s.parse().map_err(|e: dymatch::Error| CliError::Usage(e.to_string()))?,
        };
        let cfg = Self {
            n,
            k,
            beta: raw.beta.unwrap_or(1),
            seed: raw.seed.unwrap_or(0),
            algorithm,
            adversary: raw.adversary.as_deref().unwrap_or("random").parse()?,
            updates: raw.updates.unwrap_or(100),
            p_delete: raw.p_delete.unwrap_or(0.0),
            max_batch: raw.max_batch.unwrap_or(1),
            max_edges: raw.max_edges.unwrap_or(usize::MAX),
            target_edges: raw.target_edges.unwrap_or(2 * n),
            hub_pairs: raw.hub_pairs.unwrap_or(n.saturating_sub(2) / 2),
            replay: raw.replay.map(|p| base.join(p)),
            verify: raw.verify.as_deref().unwrap_or("post").parse()?,
            partition: raw.partition.as_deref().unwrap_or("round-robin").parse()?,
        };
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        if !(0.0..=1.0).contains(&self.p_delete) {
            return usage(format!("p_delete={} outside [0, 1]", self.p_delete));
        }
        if self.max_batch == 0 {
            return usage("max_batch must be at least 1".into());
        }
        if self.algorithm == Algorithm::Batchinc {
            let deletes = match self.adversary {
                Adversary::Random => self.p_delete > 0.0,
                Adversary::DeleteMatched | Adversary::MatchedChurn | Adversary::HubChurn => true,
                Adversary::Replay => false,
            };
            if deletes {
                return usage("batchinc accepts insertions only; use adversary=random with p_delete=0 or replay".into());
            }
        }
        if self.adversary == Adversary::Replay && self.replay.is_none() {
            return usage("adversary=replay needs a replay file".into());
        }
        if self.adversary == Adversary::HubChurn && 2 * self.hub_pairs + 2 > self.n {
            return usage(format!("hub_pairs={} needs n ≥ {}", self.hub_pairs, 2 * self.hub_pairs + 2));
        }
        Ok(())
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchGrid {
    pub algorithm: Option<String>,
    #[serde(default)]
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub k: Vec<usize>,
    #[serde(default)]
    pub beta: Vec<usize>,
    pub trials: Option<usize>,
    pub steps: Option<usize>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
}

impl BenchGrid {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = read(path)?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, CliError> {
        RunConfig::from_raw(toml::from_str(text).map_err(|e| CliError::Usage(e.to_string()))?, Path::new("."))
    }

    #[test]
    fn defaults_fill_in() {
        let c = parse("n = 10\nk = 2").unwrap();
        assert_eq!((c.beta, c.seed, c.updates), (1, 0, 100));
        assert_eq!(c.verify, Verify::Post);
        assert_eq!(c.algorithm, Algorithm::Fullydyn);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse("k = 2").is_err());
        assert!(parse("n = 10\nk = 2\nfoo = 1").is_err());
        assert!(parse("n = 10\nk = 2\nverify = \"sometimes\"").is_err());
        assert!(parse("n = 10\nk = 2\nalgorithm = \"batchinc\"\np_delete = 0.5").is_err());
        assert!(parse("n = 10\nk = 2\nadversary = \"replay\"").is_err());
    }
}
