//! Phase 2: virtual maximal matching between `W` and the old free
//! neighbours `X` of `W` (minus `V`), by rounds of proposals.

use std::collections::{BTreeMap, BTreeSet};

use super::{Edge, PhaseContext};
use crate::error::Result;
use crate::graph::{edge, Vertex};
use crate::sim::{Simulation, Token, TokenKind};
use crate::spreading::spread_from;

pub(super) fn run(sim: &mut Simulation, ctx: &mut PhaseContext) -> Result<usize> {
    let mut x = BTreeSet::new();
    for p in 0..sim.k() {
        for &v in sim.partition().hosted(p) {
            let eligible = sim.matching().is_free(v)
                && !ctx.v.contains(&v)
                && sim
                    .graph()
                    .neighbors(v)
                    .iter()
                    .any(|&w| ctx.w.contains(&w) && !ctx.is_new(v, w));
            if eligible {
                x.insert(v);
            }
        }
    }
    let (matching, iterations) = bipartite_maximal_matching(sim, &ctx.w, &x, &ctx.batch)?;
    ctx.x_prime = matching.values().copied().collect();
    ctx.virtual_matching = matching;
    Ok(iterations)
}

/// Maximal matching of `G[W, X]` over old edges (those not in `new_edges`).
///
/// Each iteration, every player proposes its lowest unused hosted `x` to
/// each still unmatched `w` adjacent to it (in id order, one `x` per `w`),
/// sending directly to `w`'s host; each `w` accepts its lowest proposer and
/// the accepted pairs are spread. Stops once `W` is covered or an iteration
/// matches nothing, so there are at most `|W|` iterations. Returns the
/// matching `w -> x` and the iteration count.
pub fn bipartite_maximal_matching(
    sim: &mut Simulation,
    w: &BTreeSet<Vertex>,
    x: &BTreeSet<Vertex>,
    new_edges: &[Edge],
) -> Result<(BTreeMap<Vertex, Vertex>, usize)> {
    let mut matched: BTreeMap<Vertex, Vertex> = BTreeMap::new();
    let mut taken: BTreeSet<Vertex> = BTreeSet::new();
    let mut iterations = 0;
    let old = |a: Vertex, b: Vertex| new_edges.binary_search(&edge(a, b)).is_err();
    while matched.len() < w.len() {
        iterations += 1;
        let mut proposals = Vec::new();
        for p in 0..sim.k() {
            let mut used = BTreeSet::new();
            for &wv in w.iter().filter(|wv| !matched.contains_key(wv)) {
                let pick = sim.partition().hosted(p).iter().copied().find(|&xv| {
                    x.contains(&xv)
                        && !taken.contains(&xv)
                        && !used.contains(&xv)
                        && sim.graph().has_edge(xv, wv)
                        && old(xv, wv)
                });
                if let Some(xv) = pick {
                    used.insert(xv);
                    proposals.push((p, sim.owner(wv), Token::new(TokenKind::QueryRecord, &[wv, xv])));
                }
            }
        }
        let inboxes = sim.direct_exchange(&proposals)?;
        let mut accepted = Vec::new();
        for (p, inbox) in inboxes.iter().enumerate() {
            let mut best: BTreeMap<Vertex, Vertex> = BTreeMap::new();
            for &(_, t) in inbox {
                let e = best.entry(t.get(0)).or_insert(t.get(1));
                *e = (*e).min(t.get(1));
            }
            accepted.extend(best.into_iter().map(|(wv, xv)| (p, Token::new(TokenKind::EdgeRecord, &[wv, xv]))));
        }
        let pairs = spread_from(sim, accepted)?;
        if pairs.is_empty() {
            break;
        }
        for t in &pairs {
            matched.insert(t.get(0), t.get(1));
            taken.insert(t.get(1));
        }
    }
    Ok((matched, iterations))
}
