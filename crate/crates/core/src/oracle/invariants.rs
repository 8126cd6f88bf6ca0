//! Ground-truth checks of the batch phases against a [`MinibatchTrace`].
//!
//! `g` is the graph right after the mini-batch's insertions. All sets that
//! no single player knows (such as the full `X`) are recomputed here from
//! the graph and the recorded matchings.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{find_3aug_paths, is_maximal};
use crate::batchinc::{BatchReport, MinibatchTrace};
use crate::graph::{edge, Graph, Matching, Vertex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseTag {
    Phase1,
    Phase2,
    Phase3,
    All,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaCheck {
    pub name: String,
    pub passed: bool,
    pub witness: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub checks: Vec<LemmaCheck>,
}

impl PhaseReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &LemmaCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn push(&mut self, name: &str, witness: Option<String>) {
        self.checks.push(LemmaCheck {
            name: name.to_string(),
            passed: witness.is_none(),
            witness,
        });
    }
}

type Path = (Vertex, Vertex, Vertex, Vertex);

fn induced(g: &Graph, vs: &BTreeSet<Vertex>) -> Graph {
    let edges: Vec<_> = g
        .edges()
        .into_iter()
        .filter(|(a, b)| vs.contains(a) && vs.contains(b))
        .collect();
    Graph::from_edges(g.n(), &edges).expect("subgraph of a valid graph")
}

fn new_free(g: &Graph, trace: &MinibatchTrace, m: &Matching, v: Vertex) -> BTreeSet<Vertex> {
    g.neighbors(v)
        .iter()
        .copied()
        .filter(|&a| m.is_free(a) && trace.ctx.is_new(v, a))
        .collect()
}

fn old_free(g: &Graph, trace: &MinibatchTrace, m: &Matching, v: Vertex) -> BTreeSet<Vertex> {
    g.neighbors(v)
        .iter()
        .copied()
        .filter(|&a| m.is_free(a) && !trace.ctx.is_new(v, a))
        .collect()
}

/// The full `X`: free old neighbours of `W` after phase 1.
pub fn full_x(g: &Graph, trace: &MinibatchTrace) -> BTreeSet<Vertex> {
    trace
        .ctx
        .w
        .iter()
        .flat_map(|&w| old_free(g, trace, &trace.m1, w))
        .collect()
}

fn first<T: std::fmt::Debug>(it: impl IntoIterator<Item = T>) -> Option<String> {
    it.into_iter().next().map(|x| format!("{x:?}"))
}

/// Runs the checks selected by `tag`.
pub fn check_phase_invariants(trace: &MinibatchTrace, g: &Graph, tag: PhaseTag) -> PhaseReport {
    let mut r = PhaseReport::default();
    if matches!(tag, PhaseTag::Phase1 | PhaseTag::All) {
        phase1_checks(trace, g, &mut r);
    }
    if matches!(tag, PhaseTag::Phase2 | PhaseTag::All) {
        phase2_checks(trace, g, &mut r);
    }
    if matches!(tag, PhaseTag::Phase3 | PhaseTag::All) {
        phase3_checks(trace, g, &mut r);
    }
    r
}

fn phase1_checks(t: &MinibatchTrace, g: &Graph, r: &mut PhaseReport) {
    let (m0, m1) = (&t.m0, &t.m1);
    r.push(
        "part1_a_matched_stay_matched",
        first((0..g.n()).filter(|&v| !m0.is_free(v) && m1.is_free(v))),
    );
    r.push(
        "part1_b_g1_maximal",
        first(t.ctx.g1.iter().filter(|&&(a, b)| m1.is_free(a) && m1.is_free(b))),
    );
    let g1 = Graph::from_edges(g.n(), &t.ctx.g1.iter().copied().collect::<Vec<_>>()).expect("G1 edges");
    r.push("part1_c_g1_no_3aug", first(find_3aug_paths(&g1, m1)));
    let new_new: Vec<Path> = find_3aug_paths(g, m1)
        .into_iter()
        .filter(|&(a, b, c, d)| t.ctx.is_new(a, b) && t.ctx.is_new(c, d))
        .collect();
    r.push("part1_d_no_new_new_3aug", first(new_new));
    r.push("part1_maximal", is_maximal(g, m1).map(|e| format!("{e:?}")));
}

fn phase2_checks(t: &MinibatchTrace, g: &Graph, r: &mut PhaseReport) {
    let m1 = &t.m1;
    let ctx = &t.ctx;
    let x = full_x(g, t);
    let xv: BTreeSet<Vertex> = x.union(&ctx.v).copied().collect();
    let adjacent = g
        .edges()
        .into_iter()
        .filter(|(a, b)| xv.contains(a) && xv.contains(b));
    r.push("x_and_v_independent", first(adjacent));

    let x_minus_v: BTreeSet<Vertex> = x.difference(&ctx.v).copied().collect();
    let clash = x_minus_v
        .iter()
        .filter(|v| ctx.w.contains(v) || ctx.u.contains(v) || ctx.v.contains(v));
    r.push("x_disjoint", first(clash));

    let mut bad = Vec::new();
    for &(w, u) in &ctx.important {
        let nu = new_free(g, t, m1, u);
        let ok = m1.contains(w, u)
            && !nu.is_empty()
            && new_free(g, t, m1, w).is_subset(&nu)
            && old_free(g, t, m1, u).is_empty()
            && old_free(g, t, m1, w).difference(&nu).next().is_some();
        if !ok {
            bad.push((w, u));
        }
    }
    r.push("w_u_property", first(bad));

    let outside: Vec<Path> = find_3aug_paths(g, m1)
        .into_iter()
        .filter(|&(_, b, c, _)| !ctx.important.iter().any(|&(w, u)| edge(w, u) == edge(b, c)))
        .collect();
    r.push("all_3aug_through_i", first(outside));

    let vm = &ctx.virtual_matching;
    let mut bad = Vec::new();
    for (&w, &xv) in vm {
        if !ctx.w.contains(&w) || !x_minus_v.contains(&xv) || !g.has_edge(w, xv) || ctx.is_new(w, xv) {
            bad.push((w, xv));
        }
    }
    let used: BTreeSet<Vertex> = vm.values().copied().collect();
    if used.len() != vm.len() {
        bad.push((usize::MAX, usize::MAX));
    }
    for &w in ctx.w.iter().filter(|w| !vm.contains_key(w)) {
        if let Some(&xv) = g
            .neighbors(w)
            .iter()
            .find(|&&xv| x_minus_v.contains(&xv) && !used.contains(&xv) && !ctx.is_new(w, xv))
        {
            bad.push((w, xv));
        }
    }
    r.push("virtual_matching_maximal", first(bad));
}

fn phase3_checks(t: &MinibatchTrace, g: &Graph, r: &mut PhaseReport) {
    let (m1, mf) = (&t.m1, &t.m_final);
    let ctx = &t.ctx;
    r.push(
        "p3_a_matched_stay_matched",
        first((0..g.n()).filter(|&v| !m1.is_free(v) && mf.is_free(v))),
    );

    let mut bad = Vec::new();
    for &(w, u) in &ctx.important {
        if mf.contains(w, u) {
            continue;
        }
        let (pw, pu) = (mf.partner(w), mf.partner(u));
        let ok_w = pw.is_some_and(|p| ctx.x_prime.contains(&p) || ctx.v.contains(&p));
        let ok_u = pu.is_some_and(|p| ctx.v.contains(&p));
        let ok_x = match ctx.virtual_matching.get(&w) {
            Some(&xi) if pw != Some(xi) => !mf.is_free(xi),
            _ => true,
        };
        if !(ok_w && ok_u && ok_x) {
            bad.push((w, u));
        }
    }
    r.push("p3_b_important_outcome", first(bad));

    let gstar_v: BTreeSet<Vertex> = full_x(g, t)
        .into_iter()
        .chain(ctx.w.iter().copied())
        .chain(ctx.u.iter().copied())
        .chain(ctx.v.iter().copied())
        .collect();
    let gstar = induced(g, &gstar_v);
    r.push("p3_c_gstar_maximal", is_maximal(&gstar, mf).map(|e| format!("{e:?}")));
    let leak = gstar_v.iter().flat_map(|&v| {
        g.neighbors(v)
            .iter()
            .filter(|&&a| !gstar_v.contains(&a) && mf.is_free(a))
            .map(move |&a| (v, a))
            .collect::<Vec<_>>()
    });
    r.push("no_free_outside_gstar", first(leak));
    r.push("gstar_no_3aug", first(find_3aug_paths(&gstar, mf)));
    r.push("final_maximal", is_maximal(g, mf).map(|e| format!("{e:?}")));
    r.push("final_no_3aug", first(find_3aug_paths(g, mf)));
}

/// Checks every mini-batch of `report`, replaying its insertions on top of
/// `initial` (the graph before the batch).
pub fn check_batch_report(initial: &Graph, report: &BatchReport) -> Vec<PhaseReport> {
    let mut g = initial.clone();
    report
        .minibatches
        .iter()
        .map(|t| {
            for &(a, b) in &t.ctx.batch {
                g.insert(a, b).expect("batch edges are new");
            }
            check_phase_invariants(t, &g, PhaseTag::All)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::batchinc::BatchIncremental;
    use crate::graph::Partition;
    use crate::sim::{SimConfig, Simulation};

    fn traced() -> (MinibatchTrace, Graph) {
        let mut s = Simulation::new(SimConfig::new(6, 2, 1, 1), Partition::contiguous(6, 2)).unwrap();
        for (u, v) in [(0, 1), (0, 2), (0, 3)] {
            s.apply_insert(u, v).unwrap();
        }
        s.matching_mut().add(0, 1);
        let t = BatchIncremental::new().process_minibatch(&mut s, &[(1, 2), (4, 5)]).unwrap();
        (t, s.graph().clone())
    }

    #[test]
    fn clean_trace_passes() {
        let (t, g) = traced();
        let r = check_phase_invariants(&t, &g, PhaseTag::All);
        assert!(r.all_passed(), "{r:?}");
        assert_eq!(r.checks.len(), 17);
    }

    #[test]
    fn injected_unmatching_is_caught() {
        let (mut t, g) = traced();
        t.m1.remove_vertex(4);
        let r = check_phase_invariants(&t, &g, PhaseTag::Phase1);
        let failed: Vec<&str> = r.failures().map(|c| c.name.as_str()).collect();
        assert!(failed.contains(&"part1_b_g1_maximal"), "{failed:?}");
        assert!(failed.contains(&"part1_maximal"));

        let (mut t, g) = traced();
        t.m1.remove_vertex(0);
        let r = check_phase_invariants(&t, &g, PhaseTag::Phase1);
        let a = r.checks.iter().find(|c| c.name == "part1_a_matched_stay_matched").unwrap();
        assert!(!a.passed);
        assert_eq!(a.witness.as_deref(), Some("0"));
    }

    #[test]
    fn injected_final_path_is_caught() {
        let (mut t, g) = traced();
        t.m_final = t.m1.clone();
        let r = check_phase_invariants(&t, &g, PhaseTag::Phase3);
        assert!(r.failures().any(|c| c.name == "final_no_3aug"));
        assert!(r.failures().any(|c| c.name == "p3_b_important_outcome") || r.failures().any(|c| c.name == "gstar_no_3aug"));
    }
}
