//! Phase 1: make the mini-batch's own neighbourhood maximal and free of
//! 3-augmenting paths.

use std::collections::{BTreeMap, BTreeSet};

use super::{edge, publish_diff, rotate_status, Edge, LocalGraph, PhaseContext, StatusMap, SIZE_GUARD};
use crate::error::{Error, Result};
use crate::graph::Vertex;
use crate::sim::{opt, Simulation, Token, TokenKind};
use crate::spreading::spread_from;

pub(super) fn run(sim: &mut Simulation, ctx: &mut PhaseContext, b: usize) -> Result<()> {
    // The host of the lower endpoint contributes each new edge.
    let contrib: Vec<_> = ctx.batch.iter().map(|&(u, v)| (sim.owner(u), Token::edge(u, v))).collect();
    let batch: Vec<Edge> = spread_from(sim, contrib)?.iter().map(|t| (t.get(0), t.get(1))).collect();
    debug_assert_eq!(batch, ctx.batch);

    let endpoints: BTreeSet<Vertex> = batch.iter().flat_map(|&(u, v)| [u, v]).collect();
    let contrib: Vec<_> = endpoints
        .iter()
        .map(|&v| {
            let p = sim.matching().partner(v);
            (sim.owner(v), Token::new(TokenKind::StatusRecord, &[v, opt(p)]))
        })
        .collect();
    ctx.endpoint_status = spread_from(sim, contrib)?
        .iter()
        .map(|t| (t.get(0), t.field(1)))
        .collect();

    classify(ctx);
    let triangles = detect_triangles(sim, ctx);
    let contrib: Vec<_> = triangles
        .into_iter()
        .map(|(p, (w, u, c))| (p, Token::new(TokenKind::EdgeRecord, &[w, u, c])))
        .collect();
    ctx.triangles = spread_from(sim, contrib)?
        .iter()
        .map(|t| (t.get(0), t.get(1), t.get(2)))
        .collect();
    collect_g1(ctx);
    let limit = SIZE_GUARD * b;
    if ctx.g1.len() > limit {
        return Err(Error::G1Overflow {
            edges: ctx.g1.len(),
            limit,
        });
    }

    let before = g1_status(ctx);
    let after = resolve_locally(&ctx.g1, &before);
    publish_diff(sim, &before, &after)
}

/// New edges from `v` to vertices free at mini-batch start.
pub(super) fn new_free_neighbors(batch: &[Edge], status: &StatusMap, v: Vertex) -> BTreeSet<Vertex> {
    batch
        .iter()
        .filter_map(|&(a, b)| match () {
            _ if a == v => Some(b),
            _ if b == v => Some(a),
            _ => None,
        })
        .filter(|x| status.get(x).copied().flatten().is_none())
        .collect()
}

/// `considered`, `F`, `I₁` and `Î₁` from the spread endpoint statuses.
fn classify(ctx: &mut PhaseContext) {
    let st = &ctx.endpoint_status;
    let matched = |v: &Vertex| st.get(v).copied().flatten().is_some();
    ctx.considered = ctx
        .batch
        .iter()
        .copied()
        .filter(|(u, v)| !(matched(u) && matched(v)))
        .collect();
    ctx.f = ctx
        .considered
        .iter()
        .copied()
        .filter(|(u, v)| !matched(u) && !matched(v))
        .collect();

    let nf: BTreeMap<Vertex, BTreeSet<Vertex>> = st
        .iter()
        .filter(|(_, p)| p.is_some())
        .map(|(&v, _)| (v, new_free_neighbors(&ctx.batch, st, v)))
        .collect();
    let empty = BTreeSet::new();
    for (&w, &p) in st {
        let Some(u) = p else { continue };
        if w > u && st.contains_key(&u) {
            continue;
        }
        let (nw, nu) = (nf.get(&w).unwrap_or(&empty), nf.get(&u).unwrap_or(&empty));
        if nw.iter().any(|a| nu.iter().any(|b| a != b)) {
            let e = edge(w, u);
            ctx.i1.insert(e);
            ctx.i1_hat.insert(e);
            for &a in nw {
                ctx.i1_hat.insert(edge(w, a));
            }
            for &b in nu {
                ctx.i1_hat.insert(edge(u, b));
            }
        }
    }
}

/// Each host reports triangles `(w, u, c)` around its free vertices `c`
/// where `{w, u}` is matched and one of `w, u` has a new edge to a free
/// vertex.
fn detect_triangles(sim: &Simulation, ctx: &PhaseContext) -> Vec<(usize, (Vertex, Vertex, Vertex))> {
    let st = &ctx.endpoint_status;
    let mut out = BTreeSet::new();
    for p in 0..sim.k() {
        for &c in sim.partition().hosted(p) {
            if !sim.matching().is_free(c) {
                continue;
            }
            let nbrs = sim.graph().neighbors(c);
            for &w in nbrs {
                let Some(Some(u)) = st.get(&w).copied() else { continue };
                if !nbrs.contains(&u) {
                    continue;
                }
                let harmful = !new_free_neighbors(&ctx.batch, st, w).is_empty()
                    || (st.contains_key(&u) && !new_free_neighbors(&ctx.batch, st, u).is_empty());
                if harmful {
                    out.insert((p, (w.min(u), w.max(u), c)));
                }
            }
        }
    }
    out.into_iter().collect()
}

fn collect_g1(ctx: &mut PhaseContext) {
    let st = &ctx.endpoint_status;
    for &(w, u, c) in &ctx.triangles {
        ctx.t.extend([edge(w, u), edge(w, c), edge(u, c)]);
        for x in [w, u] {
            if st.contains_key(&x) {
                ctx.t.extend(new_free_neighbors(&ctx.batch, st, x).into_iter().map(|a| edge(x, a)));
            }
        }
    }
    ctx.g1 = ctx.f.iter().chain(&ctx.i1_hat).chain(&ctx.t).copied().collect();
}

/// What player 0 knows about the statuses of `G₁`'s vertices.
fn g1_status(ctx: &PhaseContext) -> StatusMap {
    let mut status: StatusMap = BTreeMap::new();
    for &(w, u, c) in &ctx.triangles {
        status.insert(w, Some(u));
        status.insert(u, Some(w));
        status.insert(c, None);
    }
    for &(a, b) in &ctx.g1 {
        for v in [a, b] {
            if let Some(&s) = ctx.endpoint_status.get(&v) {
                status.insert(v, s);
                if let Some(p) = s {
                    status.insert(p, Some(v));
                }
            }
        }
    }
    status
}

/// Greedy maximal extension in edge order, then rotations along the
/// lexicographically first 3-augmenting path until none is left.
pub(super) fn resolve_locally(edges: &BTreeSet<Edge>, before: &StatusMap) -> StatusMap {
    let mut st = before.clone();
    let free = |st: &StatusMap, v: Vertex| st.get(&v).copied().flatten().is_none();
    for &(a, b) in edges {
        if free(&st, a) && free(&st, b) {
            st.insert(a, Some(b));
            st.insert(b, Some(a));
        }
    }
    let g = LocalGraph::from_edges(edges);
    while let Some((a, b, c, d)) = first_3aug(edges, &g, &st) {
        rotate_status(&mut st, a, b, c, d);
    }
    st
}

fn first_3aug(edges: &BTreeSet<Edge>, g: &LocalGraph, st: &StatusMap) -> Option<(Vertex, Vertex, Vertex, Vertex)> {
    let free = |v: Vertex| st.get(&v).copied().flatten().is_none();
    for &(x, y) in edges {
        if st.get(&x).copied().flatten() != Some(y) {
            continue;
        }
        for (b, c) in [(x, y), (y, x)] {
            for a in g.neighbors(b).filter(|&a| free(a)) {
                if let Some(d) = g.neighbors(c).find(|&d| free(d) && d != a) {
                    return Some((a, b, c, d));
                }
            }
        }
    }
    None
}
