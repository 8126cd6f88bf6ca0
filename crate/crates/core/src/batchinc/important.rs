//! Identification of the important edges `I` after phase 1.
//!
//! `{w, u} ∈ M₁` is important, oriented `(w, u)`, when `u` has a new edge
//! to a free vertex, `w` has an old edge to a free vertex outside `u`'s new
//! free neighbours, and every new free neighbour of `w` is one of `u`'s.
//! If both orientations qualify the lower `w` wins.

use std::collections::{BTreeMap, BTreeSet};

use super::{Edge, PhaseContext, StatusMap};
use crate::error::Result;
use crate::graph::Vertex;
use crate::sim::{Simulation, Token, TokenKind};
use crate::spreading::spread_from;

pub(super) fn run(sim: &mut Simulation, ctx: &mut PhaseContext) -> Result<()> {
    // Statuses of the batch endpoints are common knowledge after phase 1.
    let status: StatusMap = ctx
        .endpoint_status
        .keys()
        .map(|&v| (v, sim.matching().partner(v)))
        .collect();
    let nf1: BTreeMap<Vertex, BTreeSet<Vertex>> = status
        .iter()
        .filter(|(_, p)| p.is_some())
        .map(|(&v, _)| (v, super::phase1::new_free_neighbors(&ctx.batch, &status, v)))
        .filter(|(_, s)| !s.is_empty())
        .collect();
    let candidates: Vec<Edge> = nf1
        .keys()
        .map(|&u| (status[&u].expect("matched"), u))
        .collect();

    // Hosts answer for their free vertices directly to the host of `w`.
    let empty = BTreeSet::new();
    let mut replies = Vec::new();
    for p in 0..sim.k() {
        for &(w, u) in &candidates {
            let exclude = nf1.get(&u).unwrap_or(&empty);
            let witness = sim.partition().hosted(p).iter().copied().find(|&x| {
                sim.matching().is_free(x)
                    && sim.graph().has_edge(x, w)
                    && !ctx.is_new(x, w)
                    && !exclude.contains(&x)
            });
            if let Some(x) = witness {
                replies.push((p, sim.owner(w), Token::new(TokenKind::QueryRecord, &[w, x])));
            }
        }
    }
    let before = sim.round();
    let inboxes = sim.direct_exchange(&replies)?;
    if sim.round() == before && !candidates.is_empty() {
        // The hosts of the candidates still wait one round for answers.
        sim.run_round(&Default::default())?;
    }

    let mut decisions = Vec::new();
    for &(w, u) in &candidates {
        let pw = sim.owner(w);
        let has_witness = inboxes[pw].iter().any(|(_, t)| t.get(0) == w);
        let nw = nf1.get(&w).unwrap_or(&empty);
        if has_witness && nw.is_subset(&nf1[&u]) {
            decisions.push((pw, Token::new(TokenKind::EdgeRecord, &[w, u])));
        }
    }
    let accepted: BTreeSet<Edge> = spread_from(sim, decisions)?
        .iter()
        .map(|t| (t.get(0), t.get(1)))
        .collect();

    ctx.important = accepted
        .iter()
        .copied()
        .filter(|&(w, u)| !(accepted.contains(&(u, w)) && u < w))
        .collect();
    for &(w, u) in &ctx.important {
        ctx.w.insert(w);
        ctx.u.insert(u);
        ctx.v.extend(nf1[&u].iter().copied());
    }
    Ok(())
}
