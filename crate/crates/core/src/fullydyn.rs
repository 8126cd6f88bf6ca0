//! Memoryless fully-dynamic maintenance of a maximal matching without
//! 3-augmenting paths under single edge insertions and deletions.
//!
//! Players keep nothing between updates beyond their hosted adjacency and
//! matched incident edges. All coordination goes through the round engine:
//! single "free neighbour?" queries use one broadcast round plus one round of
//! direct replies, and parallel queries are merged into one spreading call.
//! Ties are broken by lowest vertex id (lexicographically for tuples).

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;

use crate::error::{Error, Result};
use crate::graph::Vertex;
use crate::oracle;
use crate::sim::{log_n, opt, PlayerId, RoundPlan, Simulation, Token, TokenKind};
use crate::spreading::spread_from;

/// Neighbours sampled per attempt in case 2(b): `C_GAMMA · ⌈log₂ n⌉`.
pub const C_GAMMA: usize = 4;
/// Case 2(b) gives up after `SAMPLING_LIMIT · ⌈log₂ n⌉` attempts.
pub const SAMPLING_LIMIT: usize = 64;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FullyDynamic {
    /// Check the incoming matching with the oracle before each update and
    /// fail with [`Error::StateCorrupt`] if it is not a valid starting point.
    pub strict: bool,
}

impl FullyDynamic {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn strict() -> Self {
        Self { strict: true }
    }

    fn precondition(&self, sim: &Simulation) -> Result<()> {
        if !self.strict {
            return Ok(());
        }
        sim.matching().validate(sim.graph())?;
        if let Some((a, b)) = oracle::is_maximal(sim.graph(), sim.matching()) {
            return Err(Error::StateCorrupt(format!("free edge {a}-{b} before update")));
        }
        if oracle::has_3aug_path(sim.graph(), sim.matching()) {
            return Err(Error::StateCorrupt("3-augmenting path before update".into()));
        }
        Ok(())
    }

    /// Inserts `{u, v}` and repairs the matching. Returns rounds used.
    pub fn insert(&self, sim: &mut Simulation, u: Vertex, v: Vertex) -> Result<u64> {
        self.precondition(sim)?;
        sim.apply_insert(u, v)?;
        self.handle_insert(sim, u, v)
    }

    /// Deletes `{u, v}` and repairs the matching. Returns rounds used.
    pub fn delete(&self, sim: &mut Simulation, u: Vertex, v: Vertex) -> Result<u64> {
        self.precondition(sim)?;
        let was_matched = sim.apply_delete(u, v)?;
        self.handle_delete(sim, u, v, was_matched)
    }

    /// Reacts to an already applied insertion of `{u, v}`.
    pub fn handle_insert(&self, sim: &mut Simulation, u: Vertex, v: Vertex) -> Result<u64> {
        let start = sim.round();
        let (pu, pv) = (sim.owner(u), sim.owner(v));
        let (mu, mv) = (sim.matching().partner(u), sim.matching().partner(v));
        if pu != pv {
            sim.direct_exchange(&[
                (pu, pv, Token::new(TokenKind::StatusRecord, &[u, opt(mu)])),
                (pv, pu, Token::new(TokenKind::StatusRecord, &[v, opt(mv)])),
            ])?;
        }
        match (mu, mv) {
            (Some(_), Some(_)) => {}
            (None, None) => sim.matching_mut().add(u, v),
            (None, Some(w)) => self.try_rotate_on_insert(sim, u, v, w)?,
            (Some(w), None) => self.try_rotate_on_insert(sim, v, u, w)?,
        }
        Ok(sim.round() - start)
    }

    /// `free` just gained matched neighbour `matched`, whose partner is `w`.
    fn try_rotate_on_insert(&self, sim: &mut Simulation, free: Vertex, matched: Vertex, w: Vertex) -> Result<()> {
        let (pm, pw) = (sim.owner(matched), sim.owner(w));
        if pm != pw {
            sim.direct_exchange(&[(pm, pw, Token::new(TokenKind::ControlRecord, &[w, free]))])?;
        }
        if let Some(x) = query_free_neighbor(sim, w, &[free])? {
            commit(sim, pw, &[free, matched, x])?;
            sim.matching_mut().rotate(free, matched, w, x);
        }
        Ok(())
    }

    /// Reacts to an already applied deletion of `{u, v}`.
    pub fn handle_delete(&self, sim: &mut Simulation, u: Vertex, v: Vertex, was_matched: bool) -> Result<u64> {
        let start = sim.round();
        if was_matched {
            // The first repair must not hand `v` out as a rotation partner:
            // that would match it without looking at its free neighbours.
            // The second may take `u`, which by then has none.
            self.repair(sim, u, Some(v))?;
            self.repair(sim, v, None)?;
        }
        Ok(sim.round() - start)
    }

    /// Restores maximality and removes 3-augmenting paths through the free
    /// vertex `u`. A no-op if `u` has been matched in the meantime.
    pub fn free_repair(&self, sim: &mut Simulation, u: Vertex) -> Result<u64> {
        self.repair(sim, u, None)
    }

    /// As [`Self::free_repair`], never choosing `reserved` as the new partner
    /// of a rotated vertex.
    fn repair(&self, sim: &mut Simulation, u: Vertex, reserved: Option<Vertex>) -> Result<u64> {
        let start = sim.round();
        if !sim.matching().is_free(u) {
            return Ok(0);
        }
        if let Some(w) = query_free_neighbor(sim, u, &[])? {
            commit(sim, sim.owner(u), &[w])?;
            sim.matching_mut().add(u, w);
            sim.metrics_mut().fully_dynamic.free_neighbor_repairs += 1;
        } else if low_degree(sim, u) {
            self.case_2a(sim, u, reserved)?;
        } else {
            self.case_2b(sim, u, reserved)?;
        }
        Ok(sim.round() - start)
    }

    /// `u` is free, all its neighbours are matched and `d(u) ≤ 2√m`.
    fn case_2a(&self, sim: &mut Simulation, u: Vertex, reserved: Option<Vertex>) -> Result<()> {
        sim.metrics_mut().fully_dynamic.case_2a += 1;
        let pu = sim.owner(u);
        let nbrs: Vec<Vertex> = sim.graph().neighbors(u).iter().copied().collect();
        let known = spread_from(
            sim,
            nbrs.iter().map(|&v| (pu, Token::new(TokenKind::VertexRecord, &[u, v]))),
        )?;
        let n_u: BTreeSet<Vertex> = known.iter().map(|t| t.get(1)).collect();

        // Hosts of partners of u's neighbours ask whether those partners have a
        // free neighbour other than u.
        let mut queries = Vec::new();
        for p in 0..sim.k() {
            for &w in sim.partition().hosted(p) {
                if let Some(v) = sim.matching().partner(w) {
                    if n_u.contains(&v) {
                        queries.push((p, Token::new(TokenKind::QueryRecord, &[w, v])));
                    }
                }
            }
        }
        let queries = spread_from(sim, queries)?;
        let partner_of: BTreeMap<Vertex, Vertex> = queries.iter().map(|t| (t.get(0), t.get(1))).collect();

        let exclude: Vec<Vertex> = std::iter::once(u).chain(reserved).collect();
        let mut answers = Vec::new();
        for p in 0..sim.k() {
            for &w in partner_of.keys() {
                if let Some(x) = hosted_free_neighbor(sim, p, w, &exclude) {
                    answers.push((p, Token::new(TokenKind::StatusRecord, &[w, x])));
                }
            }
        }
        let answers = spread_from(sim, answers)?;
        let best = answers
            .iter()
            .map(|t| {
                let (w, x) = (t.get(0), t.get(1));
                (partner_of[&w], w, x)
            })
            .min();
        if let Some((v, w, x)) = best {
            commit(sim, pu, &[v, w, x])?;
            sim.matching_mut().rotate(u, v, w, x);
        }
        Ok(())
    }

    /// `u` is free, all its neighbours are matched and `d(u) > 2√m`.
    fn case_2b(&self, sim: &mut Simulation, u: Vertex, reserved: Option<Vertex>) -> Result<()> {
        sim.metrics_mut().fully_dynamic.case_2b += 1;
        let pu = sim.owner(u);
        let logn = log_n(sim.config().n);
        let gamma = C_GAMMA * logn;
        let limit = SAMPLING_LIMIT * logn;
        let mut rng = sim.player_rng(pu, u as u64);
        let nbrs: Vec<Vertex> = sim.graph().neighbors(u).iter().copied().collect();

        for _ in 0..limit {
            sim.metrics_mut().fully_dynamic.sampling_attempts += 1;
            let mut picked: Vec<Vertex> = sample(&mut rng, nbrs.len(), gamma.min(nbrs.len()))
                .into_iter()
                .map(|i| nbrs[i])
                .collect();
            picked.sort_unstable();
            let picked = spread_from(
                sim,
                picked.iter().map(|&s| (pu, Token::new(TokenKind::VertexRecord, &[u, s]))),
            )?;

            // Hosts of sampled neighbours forward to the hosts of their partners.
            let mut forwards = Vec::new();
            for t in &picked {
                let s = t.get(1);
                if let Some(w) = sim.matching().partner(s) {
                    forwards.push((sim.owner(s), sim.owner(w), Token::new(TokenKind::ControlRecord, &[s, w])));
                }
            }
            let inboxes = sim.direct_exchange(&forwards)?;
            let mut reports = Vec::new();
            for (p, inbox) in inboxes.iter().enumerate() {
                for &(_, t) in inbox {
                    let (s, w) = (t.get(0), t.get(1));
                    let d = sim.graph().degree(w);
                    reports.push((p, Token::new(TokenKind::VertexRecord, &[w, s, d])));
                }
            }
            let reports = spread_from(sim, reports)?;
            let m = sim.graph().m();
            let choice = reports
                .iter()
                .filter(|t| t.get(2) * t.get(2) <= 4 * m)
                .map(|t| (t.get(0), t.get(1)))
                .min();
            let Some((w_low, v_low)) = choice else { continue };
            if !low_degree(sim, w_low) {
                sim.metrics_mut().fully_dynamic.high_degree_selections += 1;
            }

            commit(sim, pu, &[v_low, w_low])?;
            sim.matching_mut().remove_vertex(v_low);
            sim.matching_mut().add(u, v_low);

            let exclude: Vec<Vertex> = reserved.into_iter().collect();
            if let Some(x) = query_free_neighbor(sim, w_low, &exclude)? {
                commit(sim, sim.owner(w_low), &[x])?;
                sim.matching_mut().add(w_low, x);
            } else {
                self.case_2a(sim, w_low, reserved)?;
            }
            return Ok(());
        }
        Err(Error::SamplingExhausted {
            vertex: u,
            attempts: limit,
        })
    }
}

/// `d(v) ≤ 2√m`, evaluated exactly as `d² ≤ 4m`.
pub fn low_degree(sim: &Simulation, v: Vertex) -> bool {
    let d = sim.graph().degree(v);
    d * d <= 4 * sim.graph().m()
}

/// Lowest free neighbour of `w` hosted by `p`, skipping `exclude`. Uses only
/// `p`'s local view: hosted vertices, their adjacency and their status.
pub(crate) fn hosted_free_neighbor(sim: &Simulation, p: PlayerId, w: Vertex, exclude: &[Vertex]) -> Option<Vertex> {
    sim.partition()
        .hosted(p)
        .iter()
        .copied()
        .filter(|&x| !exclude.contains(&x) && x != w)
        .find(|&x| sim.matching().is_free(x) && sim.graph().has_edge(x, w))
}

/// The host of `w` asks every player for a free neighbour of `w` (one round)
/// and collects direct replies (one round). Returns the lowest witness.
/// At most two vertices can be excluded (they travel in the query token).
pub fn query_free_neighbor(sim: &mut Simulation, w: Vertex, exclude: &[Vertex]) -> Result<Option<Vertex>> {
    assert!(exclude.len() <= 2, "query token carries at most two exclusions");
    let pw = sim.owner(w);
    let fields: Vec<usize> = std::iter::once(w).chain(exclude.iter().copied()).collect();
    sim.broadcast_one(pw, Token::new(TokenKind::QueryRecord, &fields))?;
    let mut replies = Vec::new();
    for p in (0..sim.k()).filter(|&p| p != pw) {
        if let Some(x) = hosted_free_neighbor(sim, p, w, exclude) {
            replies.push((p, pw, Token::new(TokenKind::StatusRecord, &[w, x])));
        }
    }
    let inboxes = if replies.is_empty() {
        // Nobody answers; the asker still waits out the reply round.
        sim.run_round(&RoundPlan::new())?
    } else {
        sim.direct_exchange(&replies)?
    };
    let local = hosted_free_neighbor(sim, pw, w, exclude);
    Ok(inboxes[pw].iter().map(|(_, t)| t.get(1)).chain(local).min())
}

/// The initiator notifies the hosts of the affected vertices of a matching
/// change (one round unless all are local).
fn commit(sim: &mut Simulation, initiator: PlayerId, involved: &[Vertex]) -> Result<()> {
    let targets: BTreeSet<PlayerId> = involved
        .iter()
        .map(|&v| sim.owner(v))
        .filter(|&p| p != initiator)
        .collect();
    let msgs: Vec<_> = targets
        .into_iter()
        .map(|p| (initiator, p, Token::new(TokenKind::ControlRecord, involved)))
        .collect();
    sim.direct_exchange(&msgs)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Graph, Partition};
    use crate::oracle::{certify, is_maximal, find_3aug_paths};
    use crate::sim::SimConfig;

    fn sim(n: usize, k: usize) -> Simulation {
        Simulation::new(SimConfig::new(n, k, 1, 3), Partition::round_robin(n, k)).unwrap()
    }

    /// Inserts edges into the graph and installs a given matching directly.
    fn setup(n: usize, k: usize, edges: &[(usize, usize)], matched: &[(usize, usize)]) -> Simulation {
        let mut s = sim(n, k);
        for &(u, v) in edges {
            s.apply_insert(u, v).unwrap();
        }
        for &(u, v) in matched {
            s.matching_mut().add(u, v);
        }
        s
    }

    #[test]
    fn insert_between_matched_is_noop() {
        let mut s = setup(5, 2, &[(1, 2), (3, 4)], &[(1, 2), (3, 4)]);
        FullyDynamic::strict().insert(&mut s, 2, 3).unwrap();
        assert_eq!(s.matching().edges(), vec![(1, 2), (3, 4)]);
    }

    #[test]
    fn insert_between_free_matches() {
        let mut s = sim(3, 2);
        FullyDynamic::strict().insert(&mut s, 1, 2).unwrap();
        assert_eq!(s.matching().edges(), vec![(1, 2)]);
    }

    #[test]
    fn insert_rotates_through_partner() {
        let mut s = setup(5, 2, &[(2, 3), (3, 4)], &[(2, 3)]);
        FullyDynamic::strict().insert(&mut s, 0, 2).unwrap();
        assert_eq!(s.matching().edges(), vec![(0, 2), (3, 4)]);
        assert!(certify(s.graph(), s.matching(), 24).ok());
    }

    #[test]
    fn insert_into_triangle_keeps_matching() {
        // free 0 joins matched 1-2 where 2's only free neighbour is 0 itself
        let mut s = setup(3, 2, &[(1, 2), (0, 2)], &[(1, 2)]);
        FullyDynamic::strict().insert(&mut s, 0, 1).unwrap();
        assert_eq!(s.matching().edges(), vec![(1, 2)]);
    }

    #[test]
    fn delete_unmatched_costs_nothing() {
        let mut s = setup(4, 2, &[(0, 1), (1, 2)], &[(0, 1)]);
        let r = FullyDynamic::strict().delete(&mut s, 1, 2).unwrap();
        assert_eq!(r, 0);
        assert_eq!(s.matching().edges(), vec![(0, 1)]);
    }

    #[test]
    fn delete_rematches_star_center() {
        let mut s = setup(5, 2, &[(1, 2), (1, 3), (1, 4)], &[(1, 2)]);
        FullyDynamic::strict().delete(&mut s, 1, 2).unwrap();
        assert_eq!(s.matching().partner(1), Some(3));
        assert!(certify(s.graph(), s.matching(), 24).ok());
    }

    #[test]
    fn free_repair_case_one_rounds() {
        let mut s = setup(4, 2, &[(0, 1)], &[]);
        let r = FullyDynamic::new().free_repair(&mut s, 0).unwrap();
        // query, reply, commit
        assert_eq!(r, 3);
        assert_eq!(s.matching().edges(), vec![(0, 1)]);
    }

    #[test]
    fn delete_triggers_case_2a_rotation() {
        // u=0 matched to 1; 0 also adjacent to 2 (matched to 3), 3 has free 4.
        // Pre-state has no 3-augmenting path because 2's side has no free
        // neighbour while 0 is matched.
        let mut s = setup(6, 3, &[(0, 1), (0, 2), (2, 3), (3, 4)], &[(0, 1), (2, 3)]);
        assert!(find_3aug_paths(s.graph(), s.matching()).is_empty());
        FullyDynamic::strict().delete(&mut s, 0, 1).unwrap();
        assert_eq!(s.matching().edges(), vec![(0, 2), (3, 4)]);
        assert_eq!(s.metrics().fully_dynamic.case_2a, 2);
    }

    #[test]
    fn figure_case_2b_scenario() {
        // u=0 has 20 neighbours v_i, each matched to a leaf w_i that has its
        // own free neighbour y_i; 0 was matched to v=1 which is deleted.
        let d = 20;
        let n = 2 + 3 * d;
        let mut edges = vec![(0, 1)];
        let mut matched = vec![(0, 1)];
        for i in 0..d {
            let (v, w, y) = (2 + 3 * i, 3 + 3 * i, 4 + 3 * i);
            edges.extend([(0, v), (v, w), (w, y)]);
            matched.push((v, w));
        }
        let mut s = setup(n, 4, &edges, &matched);
        assert!(certify(s.graph(), s.matching(), 0).ok());
        FullyDynamic::strict().delete(&mut s, 0, 1).unwrap();
        let stats = &s.metrics().fully_dynamic;
        assert_eq!(stats.case_2b, 1);
        assert_eq!(stats.high_degree_selections, 0);
        assert!(s.matching().partner(0).is_some());
        let c = certify(s.graph(), s.matching(), 0);
        assert!(c.ok(), "{c:?}");
    }

    #[test]
    fn random_matched_deletions_stay_valid() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let alg = FullyDynamic::strict();
        for trial in 0..200 {
            let n = rng.gen_range(4..=12);
            let mut s = Simulation::new(
                SimConfig::new(n, 2 + trial % 3, 1 + trial % 2, trial as u64),
                Partition::round_robin(n, 2 + trial % 3),
            )
            .unwrap();
            let mut g = Graph::new(n);
            for _ in 0..rng.gen_range(1..=n * 2) {
                let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
                if u != v && !g.has_edge(u, v) {
                    g.insert(u, v).unwrap();
                    alg.insert(&mut s, u, v).unwrap();
                }
            }
            let matched = s.matching().edges();
            if matched.is_empty() {
                continue;
            }
            let (u, v) = matched[rng.gen_range(0..matched.len())];
            alg.delete(&mut s, u, v).unwrap();
            assert!(is_maximal(s.graph(), s.matching()).is_none());
            assert!(find_3aug_paths(s.graph(), s.matching()).is_empty());
        }
    }

    #[test]
    fn strict_rejects_corrupt_state() {
        let mut s = setup(4, 2, &[(0, 1)], &[]);
        assert!(matches!(
            FullyDynamic::strict().insert(&mut s, 2, 3),
            Err(Error::StateCorrupt(_))
        ));
    }
}
