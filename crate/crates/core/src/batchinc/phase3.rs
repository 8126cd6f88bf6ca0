//! Phase 3: player 0 gathers `G*' = G[X' ∪ W ∪ U ∪ V]` and removes the
//! 3-augmenting paths through `I`.
//!
//! Stage 1 walks `I` in order and rotates `(x_i, w_i, u_i, v)` with the
//! virtual partner `x_i` and the lowest free `v` next to `u_i`. Stage 2
//! revisits the edges still matched and rotates with any free pair
//! `x ≠ v` next to `w_i` and `u_i` in `G*'`.

use super::{publish_diff, rotate_status, LocalGraph, PhaseContext, StatusMap, SIZE_GUARD};
use crate::error::{Error, Result};
use crate::graph::Vertex;
use crate::sim::{Simulation, Token};
use crate::spreading::spread_from;

pub(super) fn run(sim: &mut Simulation, ctx: &mut PhaseContext, b: usize) -> Result<(usize, usize)> {
    let vertices: std::collections::BTreeSet<Vertex> = ctx
        .x_prime
        .iter()
        .chain(&ctx.w)
        .chain(&ctx.u)
        .chain(&ctx.v)
        .copied()
        .collect();
    let limit = SIZE_GUARD * b;
    if vertices.len() > limit {
        return Err(Error::GStarOverflow {
            vertices: vertices.len(),
            limit,
        });
    }
    let mut reports = Vec::new();
    for &a in &vertices {
        for &c in sim.graph().neighbors(a).range(a + 1..) {
            if vertices.contains(&c) {
                reports.push((sim.owner(a), Token::edge(a, c)));
            }
        }
    }
    ctx.g_star_prime_edges = spread_from(sim, reports)?
        .iter()
        .map(|t| (t.get(0), t.get(1)))
        .collect();
    ctx.g_star_prime_vertices = vertices;

    // Statuses are common knowledge: W, U matched along I, X' and V free.
    let mut before: StatusMap = StatusMap::new();
    for &v in ctx.x_prime.iter().chain(&ctx.v) {
        before.insert(v, None);
    }
    for &(w, u) in &ctx.important {
        before.insert(w, Some(u));
        before.insert(u, Some(w));
    }
    let (after, s1, s2) = resolve(ctx, &before);
    publish_diff(sim, &before, &after)?;
    Ok((s1, s2))
}

fn resolve(ctx: &PhaseContext, before: &StatusMap) -> (StatusMap, usize, usize) {
    let g = LocalGraph::from_edges(&ctx.g_star_prime_edges);
    let mut st = before.clone();
    let free = |st: &StatusMap, v: Vertex| st.get(&v).copied().flatten().is_none();
    let still = |st: &StatusMap, w: Vertex, u: Vertex| st.get(&w).copied().flatten() == Some(u);

    let mut stage1 = 0;
    for &(w, u) in &ctx.important {
        let Some(&x) = ctx.virtual_matching.get(&w) else { continue };
        if !still(&st, w, u) || !free(&st, x) {
            continue;
        }
        if let Some(v) = g.neighbors(u).find(|&v| v != x && free(&st, v)) {
            rotate_status(&mut st, x, w, u, v);
            stage1 += 1;
        }
    }

    let mut stage2 = 0;
    for &(w, u) in &ctx.important {
        if !still(&st, w, u) {
            continue;
        }
        let pick = g
            .neighbors(w)
            .filter(|&x| free(&st, x))
            .find_map(|x| g.neighbors(u).find(|&v| v != x && free(&st, v)).map(|v| (x, v)));
        if let Some((x, v)) = pick {
            rotate_status(&mut st, x, w, u, v);
            stage2 += 1;
        }
    }
    (st, stage1, stage2)
}
