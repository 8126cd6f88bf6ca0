//! Synchronous round engine for `k` fully connected players.
//!
//! Every ordered link carries at most `beta` tokens per round; a plan that
//! exceeds the budget is rejected with [`Error::LinkOverflow`] and nothing is
//! delivered. A token stands for `token_bits` bits of payload.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{ceil_log2, validate_partition, Graph, LocalView, Matching, Partition, Vertex};

pub type PlayerId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub k: usize,
    pub beta: usize,
    pub seed: u64,
    pub token_bits: usize,
}

impl SimConfig {
    /// Config with the default token size `⌈3·log₂ n⌉` bits.
    pub fn new(n: usize, k: usize, beta: usize, seed: u64) -> Self {
        Self {
            n,
            k,
            beta,
            seed,
            token_bits: default_token_bits(n),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::BadConfig(format!("k = {} < 2", self.k)));
        }
        if self.n < self.k {
            return Err(Error::BadConfig(format!("n = {} < k = {}", self.n, self.k)));
        }
        if self.beta < 1 {
            return Err(Error::BadConfig("beta must be at least 1".into()));
        }
        if self.token_bits == 0 {
            return Err(Error::BadConfig("token_bits must be positive".into()));
        }
        Ok(())
    }
}

pub fn default_token_bits(n: usize) -> usize {
    ((3.0 * (n.max(2) as f64).log2()).ceil() as usize).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    EdgeRecord,
    VertexRecord,
    StatusRecord,
    QueryRecord,
    ControlRecord,
}

/// Placeholder for an absent vertex field (e.g. "no partner").
pub const NONE: u32 = u32::MAX;

/// One unit of communication: a kind tag and up to four vertex-sized fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    pub payload: [u32; 4],
}

impl Token {
    pub fn new(kind: TokenKind, fields: &[usize]) -> Self {
        assert!(fields.len() <= 4, "token holds at most four fields");
        let mut payload = [NONE; 4];
        for (slot, &f) in payload.iter_mut().zip(fields) {
            *slot = u32::try_from(f).expect("field fits a vertex id");
        }
        Self { kind, payload }
    }

    pub fn edge(u: Vertex, v: Vertex) -> Self {
        Self::new(TokenKind::EdgeRecord, &[u, v])
    }

    /// Field `i` as a vertex id, `None` for the placeholder.
    pub fn field(&self, i: usize) -> Option<usize> {
        let f = self.payload[i];
        (f != NONE).then_some(f as usize)
    }

    /// Field `i`, panicking on the placeholder.
    pub fn get(&self, i: usize) -> usize {
        self.field(i).expect("token field present")
    }
}

/// Encodes an optional vertex into a token field.
pub fn opt(v: Option<Vertex>) -> usize {
    v.unwrap_or(NONE as usize)
}

/// Tokens to send this round, per ordered player pair.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RoundPlan {
    sends: BTreeMap<(PlayerId, PlayerId), Vec<Token>>,
}

impl RoundPlan {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, from: PlayerId, to: PlayerId, token: Token) {
        self.sends.entry((from, to)).or_default().push(token);
    }

    pub fn is_empty(&self) -> bool {
        self.sends.values().all(Vec::is_empty)
    }

    pub fn links(&self) -> impl Iterator<Item = (&(PlayerId, PlayerId), &Vec<Token>)> {
        self.sends.iter()
    }
}

/// Tokens received by one player, tagged with their sender, in sender order.
pub type Inbox = Vec<(PlayerId, Token)>;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FullyDynStats {
    pub free_neighbor_repairs: u64,
    pub case_2a: u64,
    pub case_2b: u64,
    pub sampling_attempts: u64,
    /// Number of times case 2(b) picked a w′ above the `2√m` degree bound.
    pub high_degree_selections: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metrics {
    pub rounds_total: u64,
    pub rounds_per_update: Vec<u64>,
    pub tokens_per_update: Vec<u64>,
    pub max_link_tokens_per_round: usize,
    /// Busiest link of any round within each update.
    pub max_link_tokens_per_update: Vec<usize>,
    pub spreading_invocations: u64,
    pub bits_received_per_player: Vec<u64>,
    pub tokens_total: u64,
    pub fully_dynamic: FullyDynStats,
}

/// Algorithm-owned persistent memory of a player beyond its input and output.
/// A memoryless algorithm leaves it empty.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerMemory {
    pub scratch: BTreeMap<String, Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerState {
    pub view: LocalView,
    pub m: usize,
    pub memory: PlayerMemory,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    config: SimConfig,
    partition: Partition,
    graph: Graph,
    matching: Matching,
    memory: Vec<PlayerMemory>,
    round: u64,
    metrics: Metrics,
    update_index: u64,
    update_start: Option<(u64, u64)>,
    update_max_link: usize,
}

impl Simulation {
    pub fn new(config: SimConfig, partition: Partition) -> Result<Self> {
        config.validate()?;
        validate_partition(&partition, config.n, config.k)?;
        let metrics = Metrics {
            bits_received_per_player: vec![0; config.k],
            ..Metrics::default()
        };
        Ok(Self {
            graph: Graph::new(config.n),
            matching: Matching::new(config.n),
            memory: vec![PlayerMemory::default(); config.k],
            partition,
            config,
            round: 0,
            metrics,
            update_index: 0,
            update_start: None,
            update_max_link: 0,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn k(&self) -> usize {
        self.config.k
    }

    pub fn beta(&self) -> usize {
        self.config.beta
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn matching(&self) -> &Matching {
        &self.matching
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn metrics(&self) -> &Metrics {
        &self.metrics
    }

    pub(crate) fn metrics_mut(&mut self) -> &mut Metrics {
        &mut self.metrics
    }

    pub(crate) fn matching_mut(&mut self) -> &mut Matching {
        &mut self.matching
    }

    pub fn owner(&self, v: Vertex) -> PlayerId {
        self.partition.owner(v)
    }

    pub fn update_index(&self) -> u64 {
        self.update_index
    }

    /// Inserts an edge; the hosts of both endpoints learn the change.
    pub fn apply_insert(&mut self, u: Vertex, v: Vertex) -> Result<()> {
        self.graph.insert(u, v)
    }

    /// Deletes an edge, clearing the matched pair if it was matched.
    /// Returns whether the edge was matched.
    pub fn apply_delete(&mut self, u: Vertex, v: Vertex) -> Result<bool> {
        self.graph.remove(u, v)?;
        if self.matching.contains(u, v) {
            self.matching.remove_vertex(u);
            Ok(true)
        } else {
            Ok(false)
        }
    }

    /// Executes one synchronous round.
    pub fn run_round(&mut self, plan: &RoundPlan) -> Result<Vec<Inbox>> {
        let k = self.config.k;
        let beta = self.config.beta;
        for (&(from, to), tokens) in plan.links() {
            if from >= k || to >= k || from == to {
                return Err(Error::StateCorrupt(format!("invalid link {from}->{to}")));
            }
            if tokens.len() > beta {
                return Err(Error::LinkOverflow {
                    from,
                    to,
                    count: tokens.len(),
                    beta,
                });
            }
        }
        let mut inboxes = vec![Vec::new(); k];
        let mut max_link = 0;
        for (&(from, to), tokens) in plan.links() {
            max_link = max_link.max(tokens.len());
            inboxes[to].extend(tokens.iter().map(|&t| (from, t)));
        }
        let bits = self.config.token_bits as u64;
        for (p, inbox) in inboxes.iter().enumerate() {
            self.metrics.bits_received_per_player[p] += inbox.len() as u64 * bits;
            self.metrics.tokens_total += inbox.len() as u64;
        }
        self.metrics.max_link_tokens_per_round = self.metrics.max_link_tokens_per_round.max(max_link);
        self.update_max_link = self.update_max_link.max(max_link);
        self.metrics.rounds_total += 1;
        self.round += 1;
        Ok(inboxes)
    }

    /// Delivers point-to-point messages, packing each link at `beta` tokens per
    /// round. Messages a player addresses to itself are delivered for free.
    /// Uses `max over links ⌈count/β⌉` rounds (zero if nothing crosses a link).
    pub fn direct_exchange(&mut self, msgs: &[(PlayerId, PlayerId, Token)]) -> Result<Vec<Inbox>> {
        let k = self.config.k;
        let beta = self.config.beta;
        let mut inboxes = vec![Vec::new(); k];
        let mut per_link: BTreeMap<(PlayerId, PlayerId), Vec<Token>> = BTreeMap::new();
        for &(from, to, t) in msgs {
            if from == to {
                inboxes[to].push((from, t));
            } else {
                per_link.entry((from, to)).or_default().push(t);
            }
        }
        let rounds = per_link
            .values()
            .map(|ts| ts.len().div_ceil(beta))
            .max()
            .unwrap_or(0);
        for r in 0..rounds {
            let mut plan = RoundPlan::new();
            for (&(from, to), ts) in &per_link {
                for &t in ts.iter().skip(r * beta).take(beta) {
                    plan.push(from, to, t);
                }
            }
            for (p, inbox) in self.run_round(&plan)?.into_iter().enumerate() {
                inboxes[p].extend(inbox);
            }
        }
        Ok(inboxes)
    }

    /// Sends `token` from `from` to every other player in a single round.
    pub fn broadcast_one(&mut self, from: PlayerId, token: Token) -> Result<Vec<Inbox>> {
        let mut plan = RoundPlan::new();
        for to in (0..self.config.k).filter(|&p| p != from) {
            plan.push(from, to, token);
        }
        self.run_round(&plan)
    }

    /// Deterministic per-player random stream for the current update.
    pub fn player_rng(&self, p: PlayerId, salt: u64) -> ChaCha8Rng {
        let mut h = splitmix(self.config.seed);
        h = splitmix(h ^ p as u64);
        h = splitmix(h ^ self.update_index);
        h = splitmix(h ^ salt);
        ChaCha8Rng::seed_from_u64(h)
    }

    pub fn begin_update(&mut self) {
        self.update_start = Some((self.round, self.metrics.tokens_total));
        self.update_max_link = 0;
    }

    /// Closes the current update and returns the rounds it used.
    pub fn end_update(&mut self) -> u64 {
        let (r0, t0) = self.update_start.take().unwrap_or((self.round, self.metrics.tokens_total));
        let rounds = self.round - r0;
        self.metrics.rounds_per_update.push(rounds);
        self.metrics.tokens_per_update.push(self.metrics.tokens_total - t0);
        self.metrics.max_link_tokens_per_update.push(self.update_max_link);
        self.update_max_link = 0;
        self.update_index += 1;
        rounds
    }

    pub fn memory(&self, p: PlayerId) -> &PlayerMemory {
        &self.memory[p]
    }

    pub fn memory_mut(&mut self, p: PlayerId) -> &mut PlayerMemory {
        &mut self.memory[p]
    }

    pub fn player_state(&self, p: PlayerId) -> PlayerState {
        PlayerState {
            view: LocalView::build(p, &self.graph, &self.matching, &self.partition),
            m: self.graph.m(),
            memory: self.memory[p].clone(),
        }
    }

    /// Serialized persistent memory of player `p`.
    pub fn snapshot_player_state(&self, p: PlayerId) -> Vec<u8> {
        serde_json::to_vec(&self.player_state(p)).expect("state serializes")
    }
}

/// The snapshot a memoryless player must have given only the input graph and
/// output matching.
pub fn memoryless_snapshot(
    p: PlayerId,
    g: &Graph,
    m: &Matching,
    part: &Partition,
) -> Vec<u8> {
    let state = PlayerState {
        view: LocalView::build(p, g, m, part),
        m: g.m(),
        memory: PlayerMemory::default(),
    };
    serde_json::to_vec(&state).expect("state serializes")
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// `⌈log₂ n⌉`, at least 1.
pub fn log_n(n: usize) -> usize {
    ceil_log2(n).max(1)
}
