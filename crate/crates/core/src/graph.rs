//! Ground-truth graph, matching and vertex partition.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::PlayerId;

pub type Vertex = usize;

/// Normalised undirected edge, smaller endpoint first.
pub fn edge(u: Vertex, v: Vertex) -> (Vertex, Vertex) {
    if u <= v {
        (u, v)
    } else {
        (v, u)
    }
}

/// `⌈log₂ n⌉`, with `log₂ 1 = 0`.
pub fn ceil_log2(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

/// Simple undirected graph on the fixed vertex set `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    adjacency: Vec<BTreeSet<Vertex>>,
    m: usize,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Self {
            adjacency: vec![BTreeSet::new(); n],
            m: 0,
        }
    }

    pub fn from_edges(n: usize, edges: &[(Vertex, Vertex)]) -> Result<Self> {
        let mut g = Self::new(n);
        for &(u, v) in edges {
            g.insert(u, v)?;
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.adjacency[v].len()
    }

    pub fn neighbors(&self, v: Vertex) -> &BTreeSet<Vertex> {
        &self.adjacency[v]
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        u < self.n() && self.adjacency[u].contains(&v)
    }

    fn check_vertex(&self, v: Vertex) -> Result<()> {
        if v >= self.n() {
            Err(Error::VertexOutOfRange(v))
        } else {
            Ok(())
        }
    }

    pub fn insert(&mut self, u: Vertex, v: Vertex) -> Result<()> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        if u == v {
            return Err(Error::SelfLoop(u));
        }
        if self.has_edge(u, v) {
            let (a, b) = edge(u, v);
            return Err(Error::DuplicateEdge(a, b));
        }
        self.adjacency[u].insert(v);
        self.adjacency[v].insert(u);
        self.m += 1;
        Ok(())
    }

    pub fn remove(&mut self, u: Vertex, v: Vertex) -> Result<()> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        if !self.has_edge(u, v) {
            let (a, b) = edge(u, v);
            return Err(Error::MissingEdge(a, b));
        }
        self.adjacency[u].remove(&v);
        self.adjacency[v].remove(&u);
        self.m -= 1;
        Ok(())
    }

    /// All edges in lexicographic order.
    pub fn edges(&self) -> Vec<(Vertex, Vertex)> {
        let mut out = Vec::with_capacity(self.m);
        for (u, nbrs) in self.adjacency.iter().enumerate() {
            out.extend(nbrs.range(u + 1..).map(|&v| (u, v)));
        }
        out
    }

    /// Edge-list text: one `u v` line per edge, with a trailing `M` when the
    /// edge is matched.
    pub fn to_edge_list(&self, matching: &Matching) -> String {
        let mut s = String::new();
        for (u, v) in self.edges() {
            if matching.partner(u) == Some(v) {
                let _ = writeln!(s, "{u} {v} M");
            } else {
                let _ = writeln!(s, "{u} {v}");
            }
        }
        s
    }

    /// Parses the format written by [`Graph::to_edge_list`].
    pub fn from_edge_list(n: usize, text: &str) -> Result<(Graph, Matching)> {
        let mut g = Graph::new(n);
        let mut matched = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<Vertex>()
                    .map_err(|_| Error::BadConfig(format!("bad edge line: {line}")))
            };
            if parts.len() < 2 || parts.len() > 3 || (parts.len() == 3 && parts[2] != "M") {
                return Err(Error::BadConfig(format!("bad edge line: {line}")));
            }
            let (u, v) = (parse(parts[0])?, parse(parts[1])?);
            g.insert(u, v)?;
            if parts.len() == 3 {
                matched.push((u, v));
            }
        }
        let mut mm = Matching::new(n);
        for (u, v) in matched {
            if !mm.is_free(u) || !mm.is_free(v) {
                return Err(Error::StateCorrupt(format!("vertex of {u} {v} matched twice")));
            }
            mm.add(u, v);
        }
        Ok((g, mm))
    }
}

/// Symmetric partner map.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Matching {
    partner: Vec<Option<Vertex>>,
}

impl Matching {
    pub fn new(n: usize) -> Self {
        Self {
            partner: vec![None; n],
        }
    }

    pub fn from_pairs(n: usize, pairs: &[(Vertex, Vertex)]) -> Self {
        let mut m = Self::new(n);
        for &(u, v) in pairs {
            m.add(u, v);
        }
        m
    }

    pub fn n(&self) -> usize {
        self.partner.len()
    }

    pub fn partner(&self, v: Vertex) -> Option<Vertex> {
        self.partner[v]
    }

    pub fn is_free(&self, v: Vertex) -> bool {
        self.partner[v].is_none()
    }

    pub fn contains(&self, u: Vertex, v: Vertex) -> bool {
        self.partner[u] == Some(v)
    }

    /// Matches two free vertices.
    pub fn add(&mut self, u: Vertex, v: Vertex) {
        assert!(u != v, "cannot match {u} with itself");
        assert!(
            self.partner[u].is_none() && self.partner[v].is_none(),
            "matching {u}-{v} over a matched endpoint"
        );
        self.partner[u] = Some(v);
        self.partner[v] = Some(u);
    }

    /// Unmatches `v` and its partner; returns the former partner.
    pub fn remove_vertex(&mut self, v: Vertex) -> Option<Vertex> {
        let p = self.partner[v].take()?;
        self.partner[p] = None;
        Some(p)
    }

    /// Replaces matched `{b, c}` by `{a, b}` and `{c, d}`.
    pub fn rotate(&mut self, a: Vertex, b: Vertex, c: Vertex, d: Vertex) {
        assert!(self.contains(b, c), "rotation over unmatched {b}-{c}");
        self.remove_vertex(b);
        self.add(a, b);
        self.add(c, d);
    }

    pub fn size(&self) -> usize {
        self.partner.iter().filter(|p| p.is_some()).count() / 2
    }

    pub fn edges(&self) -> Vec<(Vertex, Vertex)> {
        self.partner
            .iter()
            .enumerate()
            .filter_map(|(u, p)| p.filter(|&v| u < v).map(|v| (u, v)))
            .collect()
    }

    pub fn matched_vertices(&self) -> BTreeSet<Vertex> {
        self.partner
            .iter()
            .enumerate()
            .filter_map(|(u, p)| p.map(|_| u))
            .collect()
    }

    /// Every pair is symmetric and is an edge of `g`.
    pub fn validate(&self, g: &Graph) -> Result<()> {
        if self.n() != g.n() {
            return Err(Error::StateCorrupt("matching/graph size mismatch".into()));
        }
        for (u, p) in self.partner.iter().enumerate() {
            if let Some(v) = *p {
                if self.partner[v] != Some(u) {
                    return Err(Error::StateCorrupt(format!("asymmetric pair {u}-{v}")));
                }
                if !g.has_edge(u, v) {
                    return Err(Error::StateCorrupt(format!("matched {u}-{v} is not an edge")));
                }
            }
        }
        Ok(())
    }
}

/// Vertex-to-player assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    owner: Vec<PlayerId>,
    hosted: Vec<Vec<Vertex>>,
}

impl Partition {
    pub fn from_owners(owner: Vec<PlayerId>, k: usize) -> Result<Self> {
        let mut hosted = vec![Vec::new(); k];
        for (v, &p) in owner.iter().enumerate() {
            if p >= k {
                return Err(Error::BadConfig(format!("vertex {v} assigned to player {p} >= k")));
            }
            hosted[p].push(v);
        }
        Ok(Self { owner, hosted })
    }

    /// Contiguous blocks of `⌈n/k⌉` vertices.
    pub fn contiguous(n: usize, k: usize) -> Self {
        let block = n.div_ceil(k.max(1)).max(1);
        let owner = (0..n).map(|v| (v / block).min(k - 1)).collect();
        Self::from_owners(owner, k).expect("in range")
    }

    pub fn round_robin(n: usize, k: usize) -> Self {
        Self::from_owners((0..n).map(|v| v % k).collect(), k).expect("in range")
    }

    pub fn owner(&self, v: Vertex) -> PlayerId {
        self.owner[v]
    }

    pub fn hosted(&self, p: PlayerId) -> &[Vertex] {
        &self.hosted[p]
    }

    pub fn n(&self) -> usize {
        self.owner.len()
    }

    pub fn k(&self) -> usize {
        self.hosted.len()
    }
}

/// Largest admissible per-player load: `max(⌈n/k⌉·⌈log₂ n⌉, 1)`.
pub fn balance_bound(n: usize, k: usize) -> usize {
    (n.div_ceil(k) * ceil_log2(n)).max(1)
}

pub fn validate_partition(p: &Partition, n: usize, k: usize) -> Result<()> {
    if p.n() != n || p.k() != k {
        return Err(Error::BadConfig(format!(
            "partition covers {} vertices / {} players, expected {n} / {k}",
            p.n(),
            p.k()
        )));
    }
    let bound = balance_bound(n, k);
    for player in 0..k {
        let load = p.hosted(player).len();
        if load > bound {
            return Err(Error::UnbalancedPartition {
                player,
                load,
                bound,
            });
        }
    }
    Ok(())
}

/// What player `p` legitimately knows: its hosted vertices, their
/// neighbourhoods with neighbour owners, and its own matched edges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalView {
    pub player: PlayerId,
    pub vertices: Vec<HostedVertex>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HostedVertex {
    pub id: Vertex,
    pub neighbors: Vec<(Vertex, PlayerId)>,
    pub partner: Option<Vertex>,
}

impl LocalView {
    pub fn build(p: PlayerId, g: &Graph, m: &Matching, part: &Partition) -> Self {
        let vertices = part
            .hosted(p)
            .iter()
            .map(|&v| HostedVertex {
                id: v,
                neighbors: g.neighbors(v).iter().map(|&w| (w, part.owner(w))).collect(),
                partner: m.partner(v),
            })
            .collect();
        Self {
            player: p,
            vertices,
        }
    }

    /// Free/matched status this view can vouch for; `None` for vertices the
    /// player does not host.
    pub fn status_of(&self, v: Vertex) -> Option<Option<Vertex>> {
        self.vertices.iter().find(|h| h.id == v).map(|h| h.partner)
    }
}
