//! Update sequences: uniform random workloads, adaptive strategies that see
//! the whole simulator, and the segment construction used for the batch
//! lower bound.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{edge, Graph, Partition, Vertex};
use crate::sim::{PlayerId, Simulation};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Update {
    Insert { u: Vertex, v: Vertex },
    Delete { u: Vertex, v: Vertex },
    InsertBatch { edges: Vec<(Vertex, Vertex)> },
}

impl Update {
    pub fn kind(&self) -> &'static str {
        match self {
            Update::Insert { .. } => "insert",
            Update::Delete { .. } => "delete",
            Update::InsertBatch { .. } => "insert_batch",
        }
    }

    /// Number of edges touched.
    pub fn len(&self) -> usize {
        match self {
            Update::InsertBatch { edges } => edges.len(),
            _ => 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Checks the update against the current graph.
    pub fn validate(&self, g: &Graph) -> Result<()> {
        let check = |u: Vertex, v: Vertex| -> Result<()> {
            if u >= g.n() || v >= g.n() {
                return Err(Error::InvalidUpdate(format!("vertex out of range in {u}-{v}")));
            }
            if u == v {
                return Err(Error::InvalidUpdate(format!("self-loop at {u}")));
            }
            Ok(())
        };
        match self {
            Update::Insert { u, v } => {
                check(*u, *v)?;
                if g.has_edge(*u, *v) {
                    return Err(Error::InvalidUpdate(format!("edge {u}-{v} already present")));
                }
            }
            Update::Delete { u, v } => {
                check(*u, *v)?;
                if !g.has_edge(*u, *v) {
                    return Err(Error::InvalidUpdate(format!("edge {u}-{v} not present")));
                }
            }
            Update::InsertBatch { edges } => {
                let mut seen = BTreeSet::new();
                for &(u, v) in edges {
                    check(u, v)?;
                    if g.has_edge(u, v) || !seen.insert(edge(u, v)) {
                        return Err(Error::InvalidUpdate(format!("duplicate edge {u}-{v} in batch")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Applies the update to a plain graph (used for shadow bookkeeping).
    pub fn apply(&self, g: &mut Graph) -> Result<()> {
        match self {
            Update::Insert { u, v } => g.insert(*u, *v),
            Update::Delete { u, v } => g.remove(*u, *v),
            Update::InsertBatch { edges } => edges.iter().try_for_each(|&(u, v)| g.insert(u, v)),
        }
    }
}

pub fn to_jsonl(updates: &[Update]) -> String {
    updates
        .iter()
        .map(|u| serde_json::to_string(u).expect("updates serialize") + "\n")
        .collect()
}

pub fn from_jsonl(text: &str) -> Result<Vec<Update>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::InvalidUpdate(format!("line {}: {e}", i + 1))))
        .collect()
}

fn random_absent_edge<R: Rng + ?Sized>(rng: &mut R, g: &Graph) -> Option<(Vertex, Vertex)> {
    let n = g.n();
    if n < 2 || g.m() == n * (n - 1) / 2 {
        return None;
    }
    for _ in 0..64 {
        let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if u != v && !g.has_edge(u, v) {
            return Some(edge(u, v));
        }
    }
    let absent: Vec<_> = (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .filter(|&(u, v)| !g.has_edge(u, v))
        .collect();
    Some(absent[rng.gen_range(0..absent.len())])
}

fn random_present_edge<R: Rng + ?Sized>(rng: &mut R, g: &Graph) -> Option<(Vertex, Vertex)> {
    if g.m() == 0 {
        return None;
    }
    let edges = g.edges();
    Some(edges[rng.gen_range(0..edges.len())])
}

/// Random updates valid against the evolving graph, starting from empty.
pub fn random_workload<R: Rng>(rng: &mut R, n: usize, num_updates: usize, p_delete: f64, max_batch: usize) -> Vec<Update> {
    random_workload_capped(rng, n, num_updates, p_delete, max_batch, usize::MAX)
}

/// As [`random_workload`], but deletes whenever the graph holds `max_edges`
/// edges, and batches never overshoot that cap.
pub fn random_workload_capped<R: Rng>(
    rng: &mut R,
    n: usize,
    num_updates: usize,
    p_delete: f64,
    max_batch: usize,
    max_edges: usize,
) -> Vec<Update> {
    let mut g = Graph::new(n);
    let mut out = Vec::with_capacity(num_updates);
    while out.len() < num_updates {
        let full = g.m() >= max_edges || random_absent_edge(rng, &g).is_none();
        let delete = g.m() > 0 && (full || rng.gen_bool(p_delete));
        let update = if delete {
            let (u, v) = random_present_edge(rng, &g).expect("graph has edges");
            Update::Delete { u, v }
        } else if full {
            break;
        } else if max_batch <= 1 {
            let (u, v) = random_absent_edge(rng, &g).expect("checked above");
            Update::Insert { u, v }
        } else {
            let want = rng.gen_range(1..=max_batch).min(max_edges - g.m());
            let mut shadow = g.clone();
            let mut edges = Vec::new();
            while edges.len() < want {
                let Some((u, v)) = random_absent_edge(rng, &shadow) else { break };
                shadow.insert(u, v).expect("absent edge");
                edges.push((u, v));
            }
            Update::InsertBatch { edges }
        };
        update.apply(&mut g).expect("generated updates are valid");
        out.push(update);
    }
    out
}

/// An adversary choosing the next update from the full simulator state.
pub trait Strategy {
    fn propose(&mut self, sim: &Simulation, rng: &mut dyn rand::RngCore) -> Option<Update>;
}

/// Deletes the lowest matched edge; inserts a random edge when nothing is
/// matched.
#[derive(Debug, Clone, Copy, Default)]
pub struct DeleteMatched;

impl Strategy for DeleteMatched {
    fn propose(&mut self, sim: &Simulation, rng: &mut dyn rand::RngCore) -> Option<Update> {
        if let Some(&(u, v)) = sim.matching().edges().first() {
            return Some(Update::Delete { u, v });
        }
        random_absent_edge(rng, sim.graph()).map(|(u, v)| Update::Insert { u, v })
    }
}

/// Alternates between growing the graph to `target_edges` and deleting the
/// lowest matched edge, keeping the edge count near the target.
#[derive(Debug, Clone, Copy)]
pub struct MatchedChurn {
    pub target_edges: usize,
}

impl Strategy for MatchedChurn {
    fn propose(&mut self, sim: &Simulation, rng: &mut dyn rand::RngCore) -> Option<Update> {
        if sim.graph().m() < self.target_edges {
            if let Some((u, v)) = random_absent_edge(rng, sim.graph()) {
                return Some(Update::Insert { u, v });
            }
        }
        DeleteMatched.propose(sim, rng)
    }
}

/// Builds a hub `0` whose neighbours are matched to pendants, then keeps
/// matching the hub to a fresh vertex and deleting that edge. Every
/// deletion leaves the hub free with only matched neighbours, and once
/// `d(hub)² > 4m` the repair has to sample.
#[derive(Debug, Clone)]
pub struct HubChurn {
    setup: std::collections::VecDeque<Update>,
}

impl HubChurn {
    /// Uses pairs `(2i+1, 2i+2)` for `i < pairs`; vertices above `2·pairs`
    /// serve as the hub's transient partners.
    pub fn new(pairs: usize) -> Self {
        let mut setup: std::collections::VecDeque<Update> =
            (0..pairs).map(|i| Update::Insert { u: 2 * i + 1, v: 2 * i + 2 }).collect();
        setup.extend((0..pairs).map(|i| Update::Insert { u: 0, v: 2 * i + 1 }));
        Self { setup }
    }
}

impl Strategy for HubChurn {
    fn propose(&mut self, sim: &Simulation, rng: &mut dyn rand::RngCore) -> Option<Update> {
        let g = sim.graph();
        while let Some(up) = self.setup.pop_front() {
            if up.validate(g).is_ok() {
                return Some(up);
            }
        }
        if let Some(x) = sim.matching().partner(0) {
            return Some(Update::Delete { u: 0, v: x });
        }
        let fresh: Vec<Vertex> = (1..g.n()).filter(|&x| !g.has_edge(0, x) && sim.matching().is_free(x)).collect();
        if !fresh.is_empty() {
            let x = fresh[rng.gen_range(0..fresh.len())];
            return Some(Update::Insert { u: 0, v: x });
        }
        random_present_edge(rng, g).map(|(u, v)| Update::Delete { u, v })
    }
}

/// Replays a fixed sequence.
#[derive(Debug, Clone, Default)]
pub struct Replay {
    pub updates: std::collections::VecDeque<Update>,
}

impl Replay {
    pub fn new(updates: impl IntoIterator<Item = Update>) -> Self {
        Self {
            updates: updates.into_iter().collect(),
        }
    }
}

impl Strategy for Replay {
    fn propose(&mut self, _sim: &Simulation, _rng: &mut dyn rand::RngCore) -> Option<Update> {
        self.updates.pop_front()
    }
}

/// Asks `strategy` for the next update and validates it against the
/// current graph. `Ok(None)` means the strategy is exhausted.
pub fn adaptive_step(strategy: &mut dyn Strategy, sim: &Simulation, rng: &mut dyn rand::RngCore) -> Result<Option<Update>> {
    let Some(update) = strategy.propose(sim, rng) else { return Ok(None) };
    update.validate(sim.graph())?;
    Ok(Some(update))
}

/// Segment `i` is the path `t_i u_i v_i w_i x_i` (ids `5i..5i+5`), of which
/// the setup inserts only `{u_i, v_i}` and `{v_i, w_i}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LBInstance {
    pub n: usize,
    pub k: usize,
    pub segments: Vec<[Vertex; 5]>,
    pub partition: Partition,
    /// The designated player.
    pub p: PlayerId,
    /// Middle vertices hosted by `p`.
    pub s_p: Vec<Vertex>,
    /// Segment indices of `s_p`.
    pub i_p: Vec<usize>,
    /// Sampled challenge segments, ascending.
    pub j_p: Vec<usize>,
    /// `gamma[j]` is the challenge bit of segment `j_p[j]`.
    pub gamma: Vec<bool>,
    pub setup_updates: Vec<Update>,
    pub challenge_batch: Vec<(Vertex, Vertex)>,
}

/// Owner of row `r` (0 = t, …, 4 = x) of segment `i`.
///
/// The `q = n/5` segments are cut into `k` column blocks of `q/k`
/// consecutive segments, and in block `c` row `r` goes to player
/// `(c - r) mod k`. Every player thus hosts exactly one block per row
/// (`n/k` vertices in all), and for `k ≥ 3` the rows u, v, w of one segment
/// land on three different players.
fn lb_owner(i: usize, r: usize, q: usize, k: usize) -> PlayerId {
    let c = i / (q / k);
    (c + k * 5 - r) % k
}

pub fn build_lb_instance<R: Rng>(n: usize, k: usize, ell: usize, rng: &mut R) -> Result<LBInstance> {
    build_lb_instance_with(n, k, ell, rng, None)
}

/// As [`build_lb_instance`], optionally with forced challenge bits.
pub fn build_lb_instance_with<R: Rng>(
    n: usize,
    k: usize,
    ell: usize,
    rng: &mut R,
    forced_gamma: Option<Vec<bool>>,
) -> Result<LBInstance> {
    if n == 0 || n % 5 != 0 {
        return Err(Error::BadDimensions(format!("5 does not divide n={n}")));
    }
    let q = n / 5;
    if k == 0 || q % k != 0 {
        return Err(Error::BadDimensions(format!("k={k} does not divide n/5={q}")));
    }
    if k < 3 {
        return Err(Error::BadDimensions(format!(
            "k={k}: u, v, w of a segment need three distinct players"
        )));
    }
    if ell > q / k {
        return Err(Error::BadDimensions(format!("ell={ell} exceeds n/(5k)={}", q / k)));
    }

    let segments: Vec<[Vertex; 5]> = (0..q).map(|i| std::array::from_fn(|r| 5 * i + r)).collect();
    let owners: Vec<PlayerId> = (0..n).map(|v| lb_owner(v / 5, v % 5, q, k)).collect();
    let partition = Partition::from_owners(owners, k)?;
    for s in &segments {
        let hosts: BTreeSet<PlayerId> = s[1..4].iter().map(|&v| partition.owner(v)).collect();
        assert_eq!(hosts.len(), 3, "segment {s:?} shares a host among u, v, w");
    }

    let middle_count = |p: PlayerId| segments.iter().filter(|s| partition.owner(s[2]) == p).count();
    let best = (0..k).map(middle_count).max().unwrap_or(0);
    let p = (0..k).find(|&p| middle_count(p) == best).expect("k ≥ 1");
    let i_p: Vec<usize> = (0..q).filter(|&i| partition.owner(segments[i][2]) == p).collect();
    let s_p: Vec<Vertex> = i_p.iter().map(|&i| segments[i][2]).collect();

    let mut j_p: Vec<usize> = sample(rng, i_p.len(), ell).into_iter().map(|j| i_p[j]).collect();
    j_p.sort_unstable();
    let gamma = match forced_gamma {
        Some(g) if g.len() == ell => g,
        Some(g) => {
            return Err(Error::BadDimensions(format!("forced gamma has {} bits, expected {ell}", g.len())));
        }
        None => (0..ell).map(|_| rng.gen_bool(0.5)).collect(),
    };

    let setup_updates = segments
        .iter()
        .flat_map(|s| [Update::Insert { u: s[1], v: s[2] }, Update::Insert { u: s[2], v: s[3] }])
        .collect();
    let challenge_batch = j_p
        .iter()
        .zip(&gamma)
        .map(|(&i, &bit)| {
            let s = segments[i];
            if bit {
                (s[3], s[4])
            } else {
                (s[0], s[1])
            }
        })
        .collect();

    Ok(LBInstance {
        n,
        k,
        segments,
        partition,
        p,
        s_p,
        i_p,
        j_p,
        gamma,
        setup_updates,
        challenge_batch,
    })
}
