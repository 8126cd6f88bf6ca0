//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::collections::BTreeMap;
use std::process::ExitCode;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dymatch::adversary::{
    adaptive_step, build_lb_instance, random_workload_capped, DeleteMatched, HubChurn, MatchedChurn, Strategy, Update,
};
use dymatch::batchinc::minibatch_size;
use dymatch::driver::{apply_update, run_lb_trial, Algorithm};
use dymatch::graph::ceil_log2;
use dymatch::oracle::{certify, check_batch_report, max_matching_size_capped, maximum_matching, Certificate};
use dymatch::sim::memoryless_snapshot;
use dymatch::spreading::spread;
use dymatch::{Graph, Partition, SimConfig, Simulation, Token, TokenKind};

const CAP: usize = 24;

/// Bookkeeping shared by all criteria.
#[derive(Default)]
struct Totals {
    sims: usize,
    rounds: u64,
    link_violations: Vec<String>,
    /// Certificates that were maximal and free of 3-augmenting paths but
    /// below two thirds of the maximum.
    ratio_violations: usize,
    certificates: usize,
}

impl Totals {
    fn finish(&mut self, label: &str, sim: &Simulation) {
        self.sims += 1;
        self.rounds += sim.round();
        let max = sim.metrics().max_link_tokens_per_round;
        if max > sim.beta() {
            self.link_violations.push(format!("{label}: {max} > β={}", sim.beta()));
        }
    }

    fn certify(&mut self, g: &Graph, m: &dymatch::Matching) -> Certificate {
        let c = certify(g, m, CAP);
        self.certificates += 1;
        if c.maximal && c.three_aug_count == 0 && 3 * c.matching_size < 2 * c.mcm {
            self.ratio_violations += 1;
        }
        c
    }
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn report(id: u32, name: &str, o: &Outcome) {
    let tag = if o.passed { "PASS" } else { "FAIL" };
    println!("criterion {id} [{tag}] {name}: {}", o.detail);
}

fn random_partition(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Partition {
    let mut owners: Vec<usize> = (0..n).map(|v| v % k).collect();
    owners.shuffle(rng);
    Partition::from_owners(owners, k).expect("balanced")
}

fn new_sim(n: usize, k: usize, beta: usize, seed: u64, rng: &mut ChaCha8Rng) -> Simulation {
    Simulation::new(SimConfig::new(n, k, beta, seed), random_partition(n, k, rng)).expect("valid config")
}

const GRID_KB: [(usize, usize); 6] = [(2, 1), (2, 4), (4, 1), (4, 4), (8, 1), (8, 4)];

/// Fully-dynamic correctness and memorylessness (criteria 1 and 3).
fn fully_dynamic_sweep(t: &mut Totals) -> (Outcome, Outcome) {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC1);
    let (mut seqs, mut updates, mut failures) = (0, 0, Vec::new());
    let (mut snapshots, mut snapshot_failures) = (0usize, 0usize);
    let mut adaptive = 0;
    let mut high_degree_repairs = 0;
    for seq in 0..504 {
        let (k, beta) = GRID_KB[seq % GRID_KB.len()];
        let n = rng.gen_range(k.max(8)..=60);
        let mut sim = new_sim(n, k, beta, seq as u64, &mut rng);
        let mut shadow = Graph::new(n);
        let mut strategy: Option<Box<dyn Strategy>> = match seq % 4 {
            0 => Some(Box::new(MatchedChurn { target_edges: CAP })),
            1 => Some(Box::new(DeleteMatched)),
            2 => Some(Box::new(HubChurn::new((n / 2 - 2).min(11)))),
            _ => None,
        };
        let workload = random_workload_capped(&mut rng, n, 120, 0.35, 1, CAP);
        let mut replay = workload.into_iter();
        for step in 0..120 {
            let update = match strategy.as_mut() {
                Some(s) => {
                    // Delete-matched on an empty matching inserts; cap the
                    // graph so the exhaustive matcher always applies.
                    let mut up = adaptive_step(s.as_mut(), &sim, &mut rng).expect("valid").expect("endless");
                    if sim.graph().m() >= CAP {
                        if let Update::Insert { .. } = up {
                            let (u, v) = sim.graph().edges()[0];
                            up = Update::Delete { u, v };
                        }
                    }
                    up
                }
                None => match replay.next() {
                    Some(u) => u,
                    None => break,
                },
            };
            if let Err(e) = apply_update(&mut sim, Algorithm::Fullydyn, &update) {
                failures.push(format!("seq {seq} step {step}: {e}"));
                break;
            }
            update.apply(&mut shadow).expect("shadow");
            updates += 1;
            let c = t.certify(&shadow, sim.matching());
            if !c.ok() || c.mcm_exhaustive.is_none() {
                failures.push(format!("seq {seq} step {step}: {c:?}"));
                break;
            }
            for p in 0..k {
                snapshots += 1;
                if sim.snapshot_player_state(p) != memoryless_snapshot(p, &shadow, sim.matching(), sim.partition()) {
                    snapshot_failures += 1;
                }
            }
        }
        if strategy.is_some() {
            adaptive += 1;
        }
        high_degree_repairs += sim.metrics().fully_dynamic.case_2b;
        seqs += 1;
        t.finish("fullydyn", &sim);
    }
    let c1 = Outcome {
        passed: failures.is_empty() && seqs >= 500 && updates >= 100 * 500,
        detail: format!(
            "{seqs} sequences ({adaptive} adaptive), {updates} updates, {high_degree_repairs} sampled repairs, {} failures{}",
            failures.len(),
            failures.first().map(|f| format!("; first: {f}")).unwrap_or_default()
        ),
    };
    let c3 = Outcome {
        passed: snapshot_failures == 0 && snapshots > 0,
        detail: format!("{snapshots} player snapshots compared, {snapshot_failures} mismatches"),
    };
    (c1, c3)
}

/// Batch-incremental correctness with per-phase checks (criterion 2).
fn batch_sweep(t: &mut Totals) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC2);
    let (mut seqs, mut batches, mut minibatches, mut failures) = (0, 0, 0, Vec::<String>::new());
    let mut per_ell: BTreeMap<&str, usize> = BTreeMap::new();
    for seq in 0..504 {
        let (k, beta) = GRID_KB[seq % GRID_KB.len()];
        let b = minibatch_size(k, beta);
        let n = rng.gen_range(k.max(8)..=60);
        let mut sim = new_sim(n, k, beta, seq as u64, &mut rng);
        let target = CAP.min(n * (n - 1) / 2);
        'seq: while sim.graph().m() < target {
            let (label, ell) = [("1", 1), ("b", b), ("3b+1", 3 * b + 1)][rng.gen_range(0..3)];
            let ell = ell.min(target - sim.graph().m());
            let mut shadow = sim.graph().clone();
            let mut edges = Vec::new();
            while edges.len() < ell {
                let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
                if u != v && !shadow.has_edge(u, v) {
                    shadow.insert(u, v).expect("absent");
                    edges.push((u, v));
                }
            }
            let before = sim.graph().clone();
            let out = match apply_update(&mut sim, Algorithm::Batchinc, &Update::InsertBatch { edges }) {
                Ok(o) => o,
                Err(e) => {
                    failures.push(format!("seq {seq}: {e}"));
                    break 'seq;
                }
            };
            *per_ell.entry(label).or_default() += 1;
            batches += 1;
            let report = out.batch.expect("batch report");
            minibatches += report.minibatches.len();
            for (i, r) in check_batch_report(&before, &report).iter().enumerate() {
                if let Some(f) = r.failures().next() {
                    failures.push(format!("seq {seq} minibatch {i}: {} {:?}", f.name, f.witness));
                    break 'seq;
                }
            }
            let c = t.certify(sim.graph(), sim.matching());
            if !c.ok() || c.mcm_exhaustive.is_none() {
                failures.push(format!("seq {seq}: {c:?}"));
                break;
            }
        }
        seqs += 1;
        t.finish("batchinc", &sim);
    }
    Outcome {
        passed: failures.is_empty() && seqs >= 500 && per_ell.len() == 3,
        detail: format!(
            "{seqs} sequences, {batches} batches {per_ell:?}, {minibatches} mini-batches phase-checked, {} failures{}",
            failures.len(),
            failures.first().map(|f| format!("; first: {f}")).unwrap_or_default()
        ),
    }
}

/// Spreading round bound and linear scaling (criterion 5).
fn spreading_grid(t: &mut Totals) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC5);
    let mut bad = Vec::new();
    let mut cells = 0;
    let (mut min_ratio, mut max_ratio) = (f64::MAX, 0f64);
    for k in [2, 4, 8, 16] {
        for beta in [1, 2, 8] {
            for layout in ["one", "even", "random"] {
                let mut rounds = BTreeMap::new();
                for mult in [1, 4, 16, 64] {
                    let big_n = mult * beta * k;
                    let mut batch = vec![Vec::new(); k];
                    for i in 0..big_n {
                        let p = match layout {
                            "one" => 0,
                            "even" => i % k,
                            _ => rng.gen_range(0..k),
                        };
                        batch[p].push(Token::new(TokenKind::VertexRecord, &[i]));
                    }
                    let n = 64.max(k);
                    let mut sim = Simulation::new(SimConfig::new(n, k, beta, 5), Partition::contiguous(n, k)).unwrap();
                    let out = spread(&mut sim, batch).expect("spread");
                    cells += 1;
                    let bound = 3 * (big_n.div_ceil(beta * k) + 2) as u64;
                    if out.rounds > bound || out.tokens().len() != big_n {
                        bad.push(format!("N={big_n} k={k} β={beta} {layout}: {} rounds > {bound}", out.rounds));
                    }
                    rounds.insert(mult, out.rounds);
                    t.finish("spread", &sim);
                }
                let ratio = rounds[&64] as f64 / rounds[&16] as f64;
                min_ratio = min_ratio.min(ratio);
                max_ratio = max_ratio.max(ratio);
                if !(3.0..=5.0).contains(&ratio) {
                    bad.push(format!("k={k} β={beta} {layout}: ratio {ratio:.2}"));
                }
            }
        }
    }
    Outcome {
        passed: bad.is_empty(),
        detail: format!(
            "{cells} cells, rounds(64βk)/rounds(16βk) in [{min_ratio:.2}, {max_ratio:.2}], {} violations{}",
            bad.len(),
            bad.first().map(|f| format!("; first: {f}")).unwrap_or_default()
        ),
    }
}

/// Least-squares fit of `y = c·x + c0`.
fn fit(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / n, sy / n);
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let c = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    (c, my - c * mx)
}

/// Fully-dynamic deletion rounds against `⌈√m/(kβ)⌉` (criterion 6).
///
/// Dense random graphs with `m` edges on `2√m` vertices; every step
/// deletes the lowest matched edge and then restores `m` with a random
/// insertion, so each deletion forces a repair around two high-degree
/// vertices.
fn fully_dynamic_scaling(t: &mut Totals) -> Outcome {
    let (k, beta) = (4, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(0xC6);
    let mut means = Vec::new();
    let mut worst = Vec::new();
    for m in [64usize, 256, 1024] {
        let n = 2 * m.isqrt() + 1;
        let mut deletions = Vec::new();
        for trial in 0..3 {
            let mut sim = new_sim(n, k, beta, 60 + trial, &mut rng);
            let mut churn = MatchedChurn { target_edges: m };
            while sim.graph().m() < m {
                let up = adaptive_step(&mut churn, &sim, &mut rng).unwrap().unwrap();
                apply_update(&mut sim, Algorithm::Fullydyn, &up).expect("insert");
            }
            for _ in 0..150 {
                let up = adaptive_step(&mut DeleteMatched, &sim, &mut rng).unwrap().unwrap();
                let out = apply_update(&mut sim, Algorithm::Fullydyn, &up).expect("delete");
                if let Update::Delete { .. } = up {
                    deletions.push(out.rounds);
                }
                let up = adaptive_step(&mut churn, &sim, &mut rng).unwrap().unwrap();
                apply_update(&mut sim, Algorithm::Fullydyn, &up).expect("refill");
            }
            let c = t.certify(sim.graph(), sim.matching());
            if !c.ok() {
                worst.push(format!("m={m}: final matching invalid"));
            }
            t.finish("fullydyn-scaling", &sim);
        }
        let mean = deletions.iter().sum::<u64>() as f64 / deletions.len() as f64;
        let x = m.isqrt().div_ceil(k * beta).max(1) as f64;
        means.push((m, x, mean));
    }
    let (c, c0) = fit(&means.iter().map(|&(_, x, y)| (x, y)).collect::<Vec<_>>());
    let ratios: Vec<f64> = means.windows(2).map(|w| w[1].2 / w[0].2).collect();
    let within = means.iter().all(|&(_, x, y)| y <= 12.0 * x + 10.0);
    let passed = worst.is_empty() && c <= 12.0 && c0 <= 10.0 && within && ratios.iter().all(|&r| r <= 3.0);
    let cells: Vec<String> = means
        .iter()
        .map(|(m, x, y)| format!("m={m}: {y:.1} rounds (bound term {x})"))
        .collect();
    Outcome {
        passed,
        detail: format!(
            "k={k} β={beta}; {}; fitted C={c:.2} C0={c0:.2}; ratios {:?}{}",
            cells.join(", "),
            ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>(),
            worst.first().map(|f| format!("; {f}")).unwrap_or_default()
        ),
    }
}

fn median(v: &mut [u64]) -> u64 {
    v.sort_unstable();
    v[v.len() / 2]
}

/// Batch rounds against `ℓ` at `kβ = 16` (criterion 7).
fn batch_scaling(t: &mut Totals) -> Outcome {
    let n = 400;
    let mut rng = ChaCha8Rng::seed_from_u64(0xC7);
    let mut rounds: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
    let mut per_minibatch = Vec::new();
    let (mut max_spreads, mut iter_violations, mut minibatches) = (0, 0, 0);
    let mut failures = Vec::new();
    for (k, beta) in [(4, 4), (16, 1)] {
        for ell in [64usize, 256] {
            for trial in 0..4 {
                let mut sim = new_sim(n, k, beta, 70 + trial, &mut rng);
                // Background graph of 2n edges built in batches of 16.
                let mut shadow = Graph::new(n);
                let mut pending = Vec::new();
                let draw = |shadow: &mut Graph, rng: &mut ChaCha8Rng| loop {
                    let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
                    if u != v && !shadow.has_edge(u, v) {
                        shadow.insert(u, v).unwrap();
                        return (u, v);
                    }
                };
                for _ in 0..2 * n {
                    pending.push(draw(&mut shadow, &mut rng));
                    if pending.len() == 16 {
                        let up = Update::InsertBatch { edges: std::mem::take(&mut pending) };
                        apply_update(&mut sim, Algorithm::Batchinc, &up).expect("setup");
                    }
                }
                let edges: Vec<_> = (0..ell).map(|_| draw(&mut shadow, &mut rng)).collect();
                let out = apply_update(&mut sim, Algorithm::Batchinc, &Update::InsertBatch { edges }).expect("batch");
                rounds.entry(ell).or_default().push(out.rounds);
                for mb in &out.batch.expect("report").minibatches {
                    minibatches += 1;
                    max_spreads = max_spreads.max(mb.spreads_outside_phase2);
                    if mb.phase2_iterations > mb.ctx.w.len() {
                        iter_violations += 1;
                    }
                    per_minibatch.push(mb.rounds.total());
                }
                if !t.certify(sim.graph(), sim.matching()).ok() {
                    failures.push(format!("k={k} ℓ={ell}: invalid matching"));
                }
                t.finish("batch-scaling", &sim);
            }
        }
    }
    let mean = |v: &Vec<u64>| v.iter().sum::<u64>() as f64 / v.len() as f64;
    let ratio = mean(&rounds[&256]) / mean(&rounds[&64]);
    let med = median(&mut per_minibatch);
    let reference = 20 * ceil_log2(n) as u64;
    Outcome {
        passed: failures.is_empty() && (2.5..=6.0).contains(&ratio) && max_spreads <= 10 && iter_violations == 0,
        detail: format!(
            "mean rounds ℓ=64: {:.1}, ℓ=256: {:.1}, ratio {ratio:.2}; {minibatches} mini-batches, max spreads outside phase 2 = {max_spreads}, iteration-bound violations {iter_violations}; median rounds per mini-batch {med} (reported, reference 20⌈log₂n⌉ = {reference})",
            mean(&rounds[&64]),
            mean(&rounds[&256])
        ),
    }
}

/// Lower-bound construction (criterion 8).
fn lower_bound(t: &mut Totals) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC8);
    let dims = [(40, 4), (40, 8), (200, 4), (200, 5), (200, 8), (200, 10)];
    let (mut trials, mut flips, mut failures) = (0, 0, Vec::new());
    let mut min_slack = u64::MAX;
    for round in 0..10 {
        for &(n, k) in &dims {
            let max_ell = n / (5 * k);
            let ell = rng.gen_range(1..=max_ell);
            let inst = build_lb_instance(n, k, ell, &mut rng).expect("dimensions");
            let beta = 1 + round % 2;
            let trial = run_lb_trial(&inst, beta, round as u64).expect("trial");
            trials += 1;
            t.sims += 1;
            flips += trial.flips_required;
            min_slack = min_slack.min(trial.bits_to_p.saturating_sub(ell as u64));
            if !trial.ok() {
                failures.push(format!("n={n} k={k} ℓ={ell}: {trial:?}"));
            }
        }
    }
    Outcome {
        passed: failures.is_empty() && trials >= 50,
        detail: format!(
            "{trials} instances, {flips} required flips all observed: {}, no surviving 3-aug paths, min(bits_to_P - ℓ) = {min_slack}{}",
            failures.is_empty(),
            failures.first().map(|f| format!("; first: {f}")).unwrap_or_default()
        ),
    }
}

/// Exact matchers agree (criterion 9, first half).
fn oracle_agreement() -> (usize, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC9);
    let mut bad = Vec::new();
    for i in 0..10_000 {
        let n = rng.gen_range(2..=16);
        let max_m = (n * (n - 1) / 2).min(CAP);
        let m = rng.gen_range(0..=max_m);
        let mut g = Graph::new(n);
        while g.m() < m {
            let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
            if u != v && !g.has_edge(u, v) {
                g.insert(u, v).unwrap();
            }
        }
        let blossom = maximum_matching(&g);
        let exhaustive = max_matching_size_capped(&g, CAP).expect("within cap");
        if blossom.size() != exhaustive || blossom.validate(&g).is_err() {
            bad.push(format!("graph {i}: blossom {} vs exhaustive {exhaustive}", blossom.size()));
        }
    }
    (10_000, bad)
}

fn main() -> ExitCode {
    let mut t = Totals::default();
    let mut all = true;
    let mut emit = |id, name, o: Outcome| {
        report(id, name, &o);
        all &= o.passed;
    };

    let (c1, c3) = fully_dynamic_sweep(&mut t);
    emit(1, "fully-dynamic correctness", c1);
    emit(2, "batch-incremental correctness with phase checks", batch_sweep(&mut t));
    emit(3, "memoryless player state", c3);
    emit(5, "spreading bound", spreading_grid(&mut t));
    emit(6, "fully-dynamic round scaling", fully_dynamic_scaling(&mut t));
    emit(7, "batch round scaling", batch_scaling(&mut t));
    emit(8, "lower-bound construction", lower_bound(&mut t));

    let (graphs, bad) = oracle_agreement();
    emit(
        9,
        "oracle self-check",
        Outcome {
            passed: bad.is_empty() && t.ratio_violations == 0,
            detail: format!(
                "{graphs} graphs, {} disagreements; 2/3 implication violated in {} of {} certificates",
                bad.len(),
                t.ratio_violations,
                t.certificates
            ),
        },
    );
    emit(
        4,
        "bandwidth",
        Outcome {
            passed: t.link_violations.is_empty(),
            detail: format!(
                "{} simulations, {} rounds, {} links over β{}",
                t.sims,
                t.rounds,
                t.link_violations.len(),
                t.link_violations.first().map(|f| format!("; first: {f}")).unwrap_or_default()
            ),
        },
    );

    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
