//! Omniscient verification outside the communication model. Nothing here
//! charges rounds.

mod blossom;
pub mod invariants;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Matching, Vertex};

pub use blossom::maximum_matching;
pub use invariants::{check_batch_report, check_phase_invariants, LemmaCheck, PhaseReport, PhaseTag};

/// Default edge cap for the exhaustive matcher.
pub const DEFAULT_ORACLE_CAP: usize = 24;

/// Edge cap for [`max_matching_size`]; `DYMATCH_ORACLE_CAP` overrides it.
pub fn oracle_cap() -> usize {
    std::env::var("DYMATCH_ORACLE_CAP")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_ORACLE_CAP)
}

/// Exact maximum matching cardinality by branch and bound over edges.
pub fn max_matching_size(g: &Graph) -> Result<usize> {
    max_matching_size_capped(g, oracle_cap())
}

pub fn max_matching_size_capped(g: &Graph, cap: usize) -> Result<usize> {
    let edges = g.edges();
    if edges.len() > cap {
        return Err(Error::TooLarge {
            edges: edges.len(),
            cap,
        });
    }
    let mut used = vec![false; g.n()];
    let mut best = 0;
    branch(&edges, 0, 0, g.n(), &mut used, &mut best);
    Ok(best)
}

fn branch(
    edges: &[(Vertex, Vertex)],
    i: usize,
    size: usize,
    free: usize,
    used: &mut [bool],
    best: &mut usize,
) {
    if size > *best {
        *best = size;
    }
    if i == edges.len() {
        return;
    }
    let bound = size + (edges.len() - i).min(free / 2);
    if bound <= *best {
        return;
    }
    let (u, v) = edges[i];
    if !used[u] && !used[v] {
        used[u] = true;
        used[v] = true;
        branch(edges, i + 1, size + 1, free - 2, used, best);
        used[u] = false;
        used[v] = false;
    }
    branch(edges, i + 1, size, free, used, best);
}

/// `None` when `m` is maximal, otherwise the lexicographically first edge
/// joining two free vertices.
pub fn is_maximal(g: &Graph, m: &Matching) -> Option<(Vertex, Vertex)> {
    g.edges()
        .into_iter()
        .find(|&(u, v)| m.is_free(u) && m.is_free(v))
}

/// Every `(a, b, c, d)` with `{b, c}` matched, `a, d` free and distinct,
/// `{a, b}` and `{c, d}` edges. Both orientations of a matched edge are
/// reported.
pub fn find_3aug_paths(g: &Graph, m: &Matching) -> Vec<(Vertex, Vertex, Vertex, Vertex)> {
    let mut out = Vec::new();
    for b in 0..g.n() {
        let Some(c) = m.partner(b) else { continue };
        for &a in g.neighbors(b).iter().filter(|&&a| m.is_free(a)) {
            for &d in g.neighbors(c).iter().filter(|&&d| m.is_free(d) && d != a) {
                out.push((a, b, c, d));
            }
        }
    }
    out
}

/// Whether any 3-augmenting path exists (cheaper than enumerating).
pub fn has_3aug_path(g: &Graph, m: &Matching) -> bool {
    (0..g.n()).any(|b| match m.partner(b) {
        Some(c) if b < c => {
            let fb: Vec<Vertex> = g.neighbors(b).iter().copied().filter(|&a| m.is_free(a)).collect();
            if fb.is_empty() {
                return false;
            }
            g.neighbors(c)
                .iter()
                .filter(|&&d| m.is_free(d))
                .any(|&d| fb.iter().any(|&a| a != d))
        }
        _ => false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub maximal: bool,
    pub free_edge: Option<(Vertex, Vertex)>,
    pub three_aug_count: usize,
    pub matching_size: usize,
    /// Maximum matching size from the blossom matcher.
    pub mcm: usize,
    /// Exhaustive cross-check, present when the graph is within the cap.
    pub mcm_exhaustive: Option<usize>,
    pub ratio: f64,
}

impl Certificate {
    /// Maximal, no 3-augmenting path, `|M| ≥ ⅔·mcm`, and the two exact
    /// matchers agree when both ran.
    pub fn ok(&self) -> bool {
        self.maximal
            && self.three_aug_count == 0
            && 3 * self.matching_size >= 2 * self.mcm
            && self.mcm_exhaustive.is_none_or(|x| x == self.mcm)
    }
}

/// Full post-update check of `m` against `g`.
pub fn certify(g: &Graph, m: &Matching, cap: usize) -> Certificate {
    let free_edge = is_maximal(g, m);
    let three_aug_count = find_3aug_paths(g, m).len();
    let mcm = maximum_matching(g).size();
    let mcm_exhaustive = max_matching_size_capped(g, cap).ok();
    let size = m.size();
    Certificate {
        maximal: free_edge.is_none(),
        free_edge,
        three_aug_count,
        matching_size: size,
        mcm,
        mcm_exhaustive,
        ratio: if mcm == 0 { 1.0 } else { size as f64 / mcm as f64 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n: usize, e: &[(usize, usize)]) -> Graph {
        Graph::from_edges(n, e).unwrap()
    }

    #[test]
    fn small_known_sizes() {
        let tri = g(3, &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(max_matching_size(&tri).unwrap(), 1);
        assert_eq!(maximum_matching(&tri).size(), 1);
        let three = g(6, &[(0, 1), (2, 3), (4, 5)]);
        assert_eq!(max_matching_size(&three).unwrap(), 3);
        // 5-cycle with a pendant on each vertex.
        let sun = g(
            10,
            &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (0, 5), (1, 6), (2, 7), (3, 8), (4, 9)],
        );
        assert_eq!(max_matching_size(&sun).unwrap(), 5);
        assert_eq!(maximum_matching(&sun).size(), 5);
    }

    #[test]
    fn too_large_rejected() {
        let edges: Vec<_> = (0..25).map(|i| (i, i + 1)).collect();
        let path = g(26, &edges);
        assert_eq!(
            max_matching_size_capped(&path, 24),
            Err(Error::TooLarge { edges: 25, cap: 24 })
        );
        assert_eq!(maximum_matching(&path).size(), 13);
    }

    #[test]
    fn blossom_needs_contraction() {
        // Odd cycle 0..4 with stems that force augmenting through the blossom.
        let gr = g(7, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (0, 5), (3, 6)]);
        assert_eq!(maximum_matching(&gr).size(), 3);
        assert_eq!(max_matching_size(&gr).unwrap(), 3);
    }

    #[test]
    fn maximality_and_paths() {
        let single = g(2, &[(0, 1)]);
        assert_eq!(is_maximal(&single, &Matching::new(2)), Some((0, 1)));
        let path = g(5, &[(1, 2), (2, 3), (3, 4)]);
        let m = Matching::from_pairs(5, &[(2, 3)]);
        assert_eq!(is_maximal(&path, &m), None);
        let found = find_3aug_paths(&path, &m);
        assert!(found.contains(&(1, 2, 3, 4)));
        assert!(found.contains(&(4, 3, 2, 1)));
        assert!(has_3aug_path(&path, &m));
        let perfect = Matching::from_pairs(5, &[(1, 2), (3, 4)]);
        assert!(find_3aug_paths(&path, &perfect).is_empty());
        let c = certify(&path, &m, 24);
        assert!(!c.ok());
        assert!(certify(&path, &perfect, 24).ok());
    }
}
