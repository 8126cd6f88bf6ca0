//! Batch-incremental maintenance of a maximal matching without 3-augmenting
//! paths.
//!
//! A batch of `ℓ` insertions is cut into mini-batches of `b = ⌊√(kβ)⌋`
//! edges. Each mini-batch runs three phases:
//!
//! * **Phase 1** collects the small subgraph `G₁` (new free-free edges,
//!   matched edges with new free neighbours at both ends, harmful triangles)
//!   at player 0, which makes it maximal and free of 3-augmenting paths.
//! * **Phase 2** identifies the important matched edges `I` (one endpoint `w`
//!   with an old free neighbour, the other `u` with a new one) and computes a
//!   virtual maximal matching between `W` and the old free neighbours `X` of
//!   `W` by a proposal protocol.
//! * **Phase 3** gathers `G*' = G[X' ∪ W ∪ U ∪ V]` at player 0, which
//!   resolves the remaining 3-augmenting paths through `I` in two stages.
//!
//! No phase ever unmatches a matched vertex, so edges between two vertices
//! matched at the start of a mini-batch are inserted but otherwise ignored.

mod important;
mod phase1;
mod phase2;
mod phase3;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{edge, Matching, Vertex};
use crate::sim::{Simulation, Token, TokenKind};
use crate::spreading::spread_from;

pub use phase2::bipartite_maximal_matching;

pub type Edge = (Vertex, Vertex);

/// Guard constant for `|E(G₁)|` and `|V(G*')|`, in units of `b`.
pub const SIZE_GUARD: usize = 6;

/// `b = ⌊√(kβ)⌋`, at least 1.
pub fn minibatch_size(k: usize, beta: usize) -> usize {
    (k * beta).isqrt().max(1)
}

/// Working sets of one mini-batch. Everything here is knowledge that all
/// players (or player 0, for the `G₁` / `G*'` contents) hold at the end of
/// the respective step.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseContext {
    /// The mini-batch `B_i` as inserted.
    pub batch: Vec<Edge>,
    /// `B_i` minus the edges joining two vertices matched at mini-batch start.
    pub considered: Vec<Edge>,
    /// Status `(vertex, partner)` of every endpoint of `B_i` at mini-batch start.
    pub endpoint_status: BTreeMap<Vertex, Option<Vertex>>,
    pub f: BTreeSet<Edge>,
    pub i1: BTreeSet<Edge>,
    pub i1_hat: BTreeSet<Edge>,
    /// Harmful triangles `(w, u, c)` with `{w, u}` matched, `w < u`, `c` free.
    pub triangles: BTreeSet<(Vertex, Vertex, Vertex)>,
    pub t: BTreeSet<Edge>,
    pub g1: BTreeSet<Edge>,
    /// Important edges, oriented `(w_i, u_i)`, in processing order.
    pub important: Vec<Edge>,
    pub w: BTreeSet<Vertex>,
    pub u: BTreeSet<Vertex>,
    pub v: BTreeSet<Vertex>,
    /// Virtual matching `w_i -> x_i`.
    pub virtual_matching: BTreeMap<Vertex, Vertex>,
    pub x_prime: BTreeSet<Vertex>,
    pub g_star_prime_vertices: BTreeSet<Vertex>,
    pub g_star_prime_edges: BTreeSet<Edge>,
}

impl PhaseContext {
    pub fn is_new(&self, u: Vertex, v: Vertex) -> bool {
        let e = edge(u, v);
        self.batch.binary_search(&e).is_ok()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseRounds {
    pub phase1: u64,
    pub important: u64,
    pub phase2: u64,
    pub phase3: u64,
}

impl PhaseRounds {
    pub fn total(&self) -> u64 {
        self.phase1 + self.important + self.phase2 + self.phase3
    }
}

/// Everything needed to re-check one mini-batch after the fact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinibatchTrace {
    pub ctx: PhaseContext,
    pub m0: Matching,
    pub m1: Matching,
    pub m_final: Matching,
    pub rounds: PhaseRounds,
    pub spreads_outside_phase2: u64,
    pub phase2_iterations: usize,
    pub stage1_rotations: usize,
    pub stage2_rotations: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchReport {
    pub rounds: u64,
    pub minibatches: Vec<MinibatchTrace>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BatchIncremental;

impl BatchIncremental {
    pub fn new() -> Self {
        Self
    }

    /// Inserts `edges` mini-batch by mini-batch, repairing after each.
    pub fn process_batch(&self, sim: &mut Simulation, edges: &[Edge]) -> Result<BatchReport> {
        validate_batch(sim, edges)?;
        let b = minibatch_size(sim.k(), sim.beta());
        let start = sim.round();
        let mut report = BatchReport::default();
        for chunk in edges.chunks(b) {
            report.minibatches.push(self.process_minibatch(sim, chunk)?);
        }
        report.rounds = sim.round() - start;
        Ok(report)
    }

    /// Inserts one mini-batch and runs the three phases.
    pub fn process_minibatch(&self, sim: &mut Simulation, edges: &[Edge]) -> Result<MinibatchTrace> {
        let m0 = sim.matching().clone();
        let mut batch: Vec<Edge> = edges.iter().map(|&(u, v)| edge(u, v)).collect();
        batch.sort_unstable();
        for &(u, v) in &batch {
            sim.apply_insert(u, v)?;
        }
        let mut ctx = PhaseContext {
            batch,
            ..PhaseContext::default()
        };
        let spreads0 = sim.metrics().spreading_invocations;
        let b = minibatch_size(sim.k(), sim.beta());

        let r0 = sim.round();
        phase1::run(sim, &mut ctx, b)?;
        let m1 = sim.matching().clone();
        let r1 = sim.round();
        important::run(sim, &mut ctx)?;
        let r2 = sim.round();
        let spreads_before_p2 = sim.metrics().spreading_invocations;
        let phase2_iterations = phase2::run(sim, &mut ctx)?;
        let phase2_spreads = sim.metrics().spreading_invocations - spreads_before_p2;
        let r3 = sim.round();
        let (stage1_rotations, stage2_rotations) = phase3::run(sim, &mut ctx, b)?;
        let r4 = sim.round();

        Ok(MinibatchTrace {
            m0,
            m1,
            m_final: sim.matching().clone(),
            rounds: PhaseRounds {
                phase1: r1 - r0,
                important: r2 - r1,
                phase2: r3 - r2,
                phase3: r4 - r3,
            },
            spreads_outside_phase2: sim.metrics().spreading_invocations - spreads0 - phase2_spreads,
            phase2_iterations,
            stage1_rotations,
            stage2_rotations,
            ctx,
        })
    }
}

fn validate_batch(sim: &Simulation, edges: &[Edge]) -> Result<()> {
    let n = sim.graph().n();
    let mut seen = BTreeSet::new();
    for &(u, v) in edges {
        for x in [u, v] {
            if x >= n {
                return Err(Error::VertexOutOfRange(x));
            }
        }
        if u == v {
            return Err(Error::SelfLoop(u));
        }
        let e = edge(u, v);
        if sim.graph().has_edge(u, v) || !seen.insert(e) {
            return Err(Error::DuplicateEdge(e.0, e.1));
        }
    }
    Ok(())
}

/// Partner lookups over a player's assembled knowledge.
pub(crate) type StatusMap = BTreeMap<Vertex, Option<Vertex>>;

/// Player 0 broadcasts the partner changes between `before` and its local
/// result, then every player applies them.
pub(crate) fn publish_diff(sim: &mut Simulation, before: &StatusMap, after: &StatusMap) -> Result<()> {
    let changed: Vec<(Vertex, Option<Vertex>)> = after
        .iter()
        .filter(|(v, p)| before.get(v) != Some(p))
        .map(|(&v, &p)| (v, p))
        .collect();
    let tokens = changed
        .iter()
        .map(|&(v, p)| (0, Token::new(TokenKind::StatusRecord, &[v, crate::sim::opt(p)])));
    let received = spread_from(sim, tokens)?;
    let updates: Vec<(Vertex, Option<Vertex>)> = received.iter().map(|t| (t.get(0), t.field(1))).collect();
    apply_status_updates(sim.matching_mut(), &updates);
    Ok(())
}

fn apply_status_updates(m: &mut Matching, updates: &[(Vertex, Option<Vertex>)]) {
    for &(v, _) in updates {
        m.remove_vertex(v);
    }
    for &(v, p) in updates {
        if let Some(p) = p {
            if m.partner(v) != Some(p) {
                m.add(v, p);
            }
        }
    }
}

/// Adjacency over an edge set known to one player.
#[derive(Debug, Default)]
pub(crate) struct LocalGraph {
    adj: BTreeMap<Vertex, BTreeSet<Vertex>>,
}

impl LocalGraph {
    pub(crate) fn from_edges<'a>(edges: impl IntoIterator<Item = &'a Edge>) -> Self {
        let mut g = Self::default();
        for &(u, v) in edges {
            g.adj.entry(u).or_default().insert(v);
            g.adj.entry(v).or_default().insert(u);
        }
        g
    }

    pub(crate) fn neighbors(&self, v: Vertex) -> impl Iterator<Item = Vertex> + '_ {
        self.adj.get(&v).into_iter().flatten().copied()
    }
}

/// Rotates `(a, b, c, d)` in a status map: unmatch `{b, c}`, match `{a, b}`
/// and `{c, d}`.
pub(crate) fn rotate_status(status: &mut StatusMap, a: Vertex, b: Vertex, c: Vertex, d: Vertex) {
    status.insert(a, Some(b));
    status.insert(b, Some(a));
    status.insert(c, Some(d));
    status.insert(d, Some(c));
}
