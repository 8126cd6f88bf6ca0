//! All-to-all dissemination of `N` tokens in `O(⌈N/(βk)⌉)` rounds.
//!
//! Three steps:
//! 1. one round in which every player announces its token count;
//! 2. optional rebalancing so that no player holds more than `⌈N/k⌉`
//!    tokens, surplus shipped over direct links at `β` per round;
//! 3. every player sends its tokens to every other player.
//!
//! Since every player learns all counts in step 1, every player agrees on
//! whether step 2 pays off. It is skipped when direct broadcast from the
//! current holders is no slower. Each player ends up with the same
//! deduplicated token set.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::sim::{PlayerId, Simulation, Token, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpreadOutcome {
    /// What each player holds afterwards (own tokens included).
    pub per_player: Vec<BTreeSet<Token>>,
    pub rounds: u64,
}

impl SpreadOutcome {
    /// The common token set (every player holds the same one).
    pub fn tokens(&self) -> &BTreeSet<Token> {
        &self.per_player[0]
    }
}

/// Rounds the protocol will use, as computed by every player from the counts.
fn plan_transfers(counts: &[usize], beta: usize) -> (Vec<(PlayerId, PlayerId, usize)>, usize) {
    let k = counts.len();
    let total: usize = counts.iter().sum();
    let cap = total.div_ceil(k);
    let max_count = counts.iter().copied().max().unwrap_or(0);
    let direct = max_count.div_ceil(beta);

    let mut surplus: Vec<(PlayerId, usize)> = counts
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c > cap)
        .map(|(p, &c)| (p, c - cap))
        .collect();
    let mut deficit: Vec<(PlayerId, usize)> = counts
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c < cap)
        .map(|(p, &c)| (p, cap - c))
        .collect();
    let mut transfers = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < surplus.len() && j < deficit.len() {
        let amount = surplus[i].1.min(deficit[j].1);
        transfers.push((surplus[i].0, deficit[j].0, amount));
        surplus[i].1 -= amount;
        deficit[j].1 -= amount;
        if surplus[i].1 == 0 {
            i += 1;
        }
        if deficit[j].1 == 0 {
            j += 1;
        }
    }
    let rebalance = transfers.iter().map(|t| t.2.div_ceil(beta)).max().unwrap_or(0);
    let balanced = rebalance + cap.div_ceil(beta);
    if direct <= balanced {
        (Vec::new(), direct)
    } else {
        (transfers, balanced)
    }
}

/// Number of rounds [`spread`] takes for the given per-player counts.
pub fn predicted_rounds(counts: &[usize], beta: usize) -> u64 {
    1 + plan_transfers(counts, beta).1 as u64
}

/// Disseminates every player's tokens to all players.
pub fn spread(sim: &mut Simulation, batch: Vec<Vec<Token>>) -> Result<SpreadOutcome> {
    let k = sim.k();
    let beta = sim.beta();
    if batch.len() != k {
        return Err(Error::StateCorrupt(format!(
            "spread batch for {} players, expected {k}",
            batch.len()
        )));
    }
    let start = sim.round();
    sim.metrics_mut().spreading_invocations += 1;

    let mut held: Vec<Vec<Token>> = batch
        .into_iter()
        .map(|ts| {
            let set: BTreeSet<Token> = ts.into_iter().collect();
            set.into_iter().collect()
        })
        .collect();
    let mut known: Vec<BTreeSet<Token>> = held.iter().map(|ts| ts.iter().copied().collect()).collect();

    // Step 1: counts.
    let mut msgs = Vec::new();
    for p in 0..k {
        let t = Token::new(TokenKind::ControlRecord, &[p, held[p].len()]);
        msgs.extend((0..k).filter(|&q| q != p).map(|q| (p, q, t)));
    }
    let inboxes = sim.direct_exchange(&msgs)?;
    // Every player reconstructs the same count vector from what it received.
    let mut counts = vec![0; k];
    counts[0] = held[0].len();
    for &(_, t) in &inboxes[0] {
        counts[t.get(0)] = t.get(1);
    }

    // Step 2: rebalance.
    let (transfers, _) = plan_transfers(&counts, beta);
    if !transfers.is_empty() {
        let mut msgs = Vec::new();
        for &(from, to, amount) in &transfers {
            let keep = held[from].len() - amount;
            msgs.extend(held[from].drain(keep..).map(|t| (from, to, t)));
        }
        let inboxes = sim.direct_exchange(&msgs)?;
        for (p, inbox) in inboxes.into_iter().enumerate() {
            for (_, t) in inbox {
                held[p].push(t);
                known[p].insert(t);
            }
        }
    }

    // Step 3: all-to-all broadcast of the (balanced) holdings.
    let mut msgs = Vec::new();
    for (p, ts) in held.iter().enumerate() {
        for &t in ts {
            msgs.extend((0..k).filter(|&q| q != p).map(|q| (p, q, t)));
        }
    }
    let inboxes = sim.direct_exchange(&msgs)?;
    for (p, inbox) in inboxes.into_iter().enumerate() {
        known[p].extend(inbox.into_iter().map(|(_, t)| t));
    }

    debug_assert!(known.windows(2).all(|w| w[0] == w[1]));
    Ok(SpreadOutcome {
        per_player: known,
        rounds: sim.round() - start,
    })
}

/// Convenience wrapper: tokens tagged with the player that contributes them.
pub fn spread_from(sim: &mut Simulation, tokens: impl IntoIterator<Item = (PlayerId, Token)>) -> Result<BTreeSet<Token>> {
    let mut batch = vec![Vec::new(); sim.k()];
    for (p, t) in tokens {
        batch[p].push(t);
    }
    Ok(spread(sim, batch)?.per_player.swap_remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Partition;
    use crate::sim::SimConfig;

    fn sim(k: usize, beta: usize) -> Simulation {
        let n = 64.max(k);
        Simulation::new(SimConfig::new(n, k, beta, 1), Partition::contiguous(n, k)).unwrap()
    }

    fn tokens(n: usize) -> Vec<Token> {
        (0..n).map(|i| Token::new(TokenKind::VertexRecord, &[i])).collect()
    }

    #[test]
    fn empty_batch() {
        let mut s = sim(4, 2);
        let out = spread(&mut s, vec![Vec::new(); 4]).unwrap();
        assert_eq!(out.rounds, 1);
        assert!(out.per_player.iter().all(BTreeSet::is_empty));
        assert_eq!(s.metrics().spreading_invocations, 1);
    }

    #[test]
    fn eight_tokens_at_one_player() {
        let mut s = sim(4, 2);
        let mut batch = vec![Vec::new(); 4];
        batch[1] = tokens(8);
        let out = spread(&mut s, batch).unwrap();
        let all: BTreeSet<Token> = tokens(8).into_iter().collect();
        assert!(out.per_player.iter().all(|p| *p == all));
        assert!(out.rounds <= 3 * (1 + 2));
        assert!(s.metrics().max_link_tokens_per_round <= 2);
    }

    #[test]
    fn duplicates_collapse() {
        let mut s = sim(3, 1);
        let t = Token::edge(1, 2);
        let out = spread(&mut s, vec![vec![t], vec![t], vec![t, t]]).unwrap();
        assert!(out.per_player.iter().all(|p| p.len() == 1));
    }

    #[test]
    fn linear_scaling() {
        let measure = |n: usize| {
            let mut s = sim(4, 2);
            let mut batch = vec![Vec::new(); 4];
            batch[0] = tokens(n);
            spread(&mut s, batch).unwrap().rounds as f64
        };
        let ratio = measure(256) / measure(64);
        assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn predicted_matches_actual() {
        let mut s = sim(5, 3);
        let batch = vec![tokens(17), tokens(2), Vec::new(), tokens(40), tokens(1)];
        let counts: Vec<usize> = batch.iter().map(Vec::len).collect();
        let out = spread(&mut s, batch).unwrap();
        assert_eq!(out.rounds, predicted_rounds(&counts, 3));
    }
}
