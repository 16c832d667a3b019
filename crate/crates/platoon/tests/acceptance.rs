//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

mod common;

use std::collections::HashMap;
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use common::*;
use platoon::baselines::{sample_instances, solve_p_platooning, solve_s_platooning, SamplerConfig};
use platoon::dual::{dual_solve, primal_recover_with, DualConfig, SolveReport, Status, StepKind, SyncRule, TraceRow};
use platoon::feasibility::check_feasible;
use platoon::fptas::fptas_solve;
use platoon::fuel::{minimize_edge_time, EdgeCost, Mode};
use platoon::inner::{decompose_fractional, generalized_weights, solve_path_platoon, FractionalSolution};
use platoon::network::{generate_grid, Edge, EdgeId, GridParams, NodeId, RoadNetwork};
use platoon::pipeline::{run_pipeline, Choice, PipelineConfig};
use platoon::planning::{evaluate, Skeleton};
use platoon::{toy, TaskPair};
use rand::prelude::*;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

// ---------------------------------------------------------------- 1

fn toy_golden() -> Verdict {
    let start = Instant::now();
    let net = toy::network();
    let tasks = toy::tasks(&net);
    let report = run_pipeline(&net, &tasks, toy::ETA, &PipelineConfig::default()).unwrap();
    let plan = match &report.outcome {
        platoon::dual::Outcome::Platoon { plan } => plan.clone(),
        _ => return verdict(false, "pipeline did not platoon".into()),
    };
    let no_wait = primal_recover_with(&net, &tasks, toy::ETA, &plan.skeleton(), SyncRule::NoWait).unwrap();
    let no_wait_fuel = evaluate(&net, &tasks, &no_wait, toy::ETA).unwrap().total_fuel;
    let elapsed = start.elapsed().as_secs_f64();

    let separate = report.separate_fuel.unwrap() / 2.0;
    let restricted = no_wait_fuel / 2.0;
    let full = report.total_fuel / 2.0;
    let rel = |x: f64, target: f64| (x - target).abs() / target;
    let save_restricted = 100.0 * (separate - restricted) / separate;
    let save_full = 100.0 * (separate - full) / separate;
    let pass = rel(separate, 51.00) <= 5e-3
        && rel(restricted, 49.62) <= 5e-3
        && rel(full, 49.30) <= 5e-3
        && (save_restricted - 2.7).abs() <= 0.3
        && (save_full - 3.3).abs() <= 0.3
        && report.choice == Choice::Platoon
        && elapsed < 1.0;
    verdict(
        pass,
        format!(
            "avg fuel {separate:.3}/{restricted:.3}/{full:.3}, savings {save_restricted:.2}%/{save_full:.2}%, {elapsed:.3}s"
        ),
    )
}

// ---------------------------------------------------------------- 2

fn inner_exactness() -> Verdict {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut mismatches = 0;
    let mut solved = 0;
    for seed in 0..200u64 {
        let n = 4 + (seed as usize % 5);
        let net = random_digraph(1000 + seed, n, 0.45);
        let mut r = rng(seed);
        let tasks = loop {
            let (s1, d1, s2, d2) = (r.gen_range(0..n), r.gen_range(0..n), r.gen_range(0..n), r.gen_range(0..n));
            if s1 != d1 && s2 != d2 {
                break TaskPair { s1, d1, s2, d2, ts1: 0.0, ts2: 0.0, td1: 5.0, td2: 5.0 };
            }
        };
        let lambda = [0, 1, 2, 3].map(|_| if r.gen_bool(0.3) { 0.0 } else { r.gen_range(0.0..60.0) });
        let weights = generalized_weights(&net, lambda, ETA).unwrap();
        let cat = PathCatalog::new(&net);
        let w = [0, 1, 2, 3, 4].map(|i| weights.weight[i].as_slice());
        let brute = brute_inner(&net, &cat, &tasks, w);
        let ours = solve_path_platoon(&net, &tasks, &weights).ok().map(|s| s.objective);
        match (brute, ours) {
            (None, None) => {}
            (Some(b), Some(o)) => {
                solved += 1;
                let d = (b - o).abs() / b.abs().max(1.0);
                worst = worst.max(d);
                if d > 1e-9 {
                    mismatches += 1;
                }
            }
            _ => mismatches += 1,
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        mismatches == 0 && elapsed < 120.0,
        format!("{solved} reachable of 200, {mismatches} mismatches, worst rel diff {worst:.1e}, {elapsed:.2}s"),
    )
}

// ---------------------------------------------------------------- 3

/// Random multigraph with one common speed, so paths of equal travel time
/// (and therefore re-merging after a split) occur often.
fn fixed_speed_multigraph(seed: u64, n: usize, p: f64) -> RoadNetwork {
    let mut r = rng(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u == v || !r.gen_bool(p) {
                continue;
            }
            for _ in 0..r.gen_range(1..=2) {
                let mut e: Edge = random_edge(&mut r, edges.len(), u, v);
                e.length = 10.0 * r.gen_range(1..=4) as f64;
                e.v_min = 50.0;
                e.v_max = 50.0;
                edges.push(e);
            }
        }
    }
    RoadNetwork::new((0..n).map(|i| format!("v{i}")).collect(), edges).unwrap()
}

/// Pareto front of (time, cost) over all simple paths `u -> v`, with
/// `factor` scaling the cost.
fn fronts(net: &RoadNetwork, cat: &PathCatalog, factor: f64) -> HashMap<(NodeId, NodeId), Vec<(f64, f64)>> {
    let mut out = HashMap::new();
    for u in 0..net.node_count() {
        for v in 0..net.node_count() {
            let mut pts: Vec<(f64, f64)> = cat
                .get(u, v)
                .iter()
                .map(|p| {
                    let t: f64 = p.iter().map(|&e| net.edge(e).t_min()).sum();
                    let c: f64 = p.iter().map(|&e| cost_at_time(net.edge(e), net.edge(e).t_min(), factor)).sum();
                    (t, c)
                })
                .collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
            let mut front: Vec<(f64, f64)> = Vec::new();
            for p in pts {
                if front.last().is_none_or(|l| p.1 < l.1) {
                    front.push(p);
                }
            }
            out.insert((u, v), front);
        }
    }
    out
}

/// Cheapest pair of distinct paths `u -> v` with equal travel time, per time.
fn twin_paths(net: &RoadNetwork, cat: &PathCatalog, u: NodeId, v: NodeId) -> Vec<(f64, f64)> {
    let mut by_time: Vec<(f64, f64)> = cat
        .get(u, v)
        .iter()
        .map(|p| {
            let t: f64 = p.iter().map(|&e| net.edge(e).t_min()).sum();
            let c: f64 = p.iter().map(|&e| cost_at_time(net.edge(e), net.edge(e).t_min(), 1.0)).sum();
            (t, c)
        })
        .collect();
    by_time.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut out = Vec::new();
    for w in by_time.windows(2) {
        if (w[0].0 - w[1].0).abs() < 1e-9 && out.last().is_none_or(|&(t, _): &(f64, f64)| (t - w[0].0).abs() > 1e-9) {
            out.push((w[0].0, w[0].1 + w[1].1));
        }
    }
    out
}

fn platoon_once_optimality() -> Verdict {
    let mut worst = f64::NEG_INFINITY;
    let mut two_segment_feasible = 0;
    let mut checked = 0;
    let mut seed = 0u64;
    let platoon_factor = 2.0 * (1.0 - ETA);
    while checked < 100 {
        seed += 1;
        let n = 4 + (seed as usize % 3);
        let net = fixed_speed_multigraph(5000 + seed, n, 0.45);
        let cat = PathCatalog::new(&net);
        let solo = fronts(&net, &cat, 1.0);
        let plat = fronts(&net, &cat, platoon_factor);
        let mut r = rng(seed);
        let (s1, d1, s2, d2) = (r.gen_range(0..n), r.gen_range(0..n), r.gen_range(0..n), r.gen_range(0..n));
        if s1 == d1 || s2 == d2 {
            continue;
        }
        let (ts1, ts2) = (0.0, if r.gen_bool(0.5) { 0.0 } else { 0.2 * r.gen_range(0..3) as f64 });
        let (td1, td2) = (r.gen_range(1.5..4.0), r.gen_range(1.5..4.0));

        // One segment: s -> m, m -> p platoon, p -> d.
        let mut one = f64::INFINITY;
        for m in 0..n {
            for p in 0..n {
                for &(t1, c1) in &solo[&(s1, m)] {
                    for &(t2, c2) in &solo[&(s2, m)] {
                        let a = (ts1 + t1).max(ts2 + t2);
                        for &(t3, c3) in &plat[&(m, p)] {
                            for &(t4, c4) in &solo[&(p, d1)] {
                                if a + t3 + t4 > td1 + 1e-9 {
                                    continue;
                                }
                                for &(t5, c5) in &solo[&(p, d2)] {
                                    if a + t3 + t5 <= td2 + 1e-9 {
                                        one = one.min(c1 + c2 + c3 + c4 + c5);
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        // Two segments: platoon m1 -> p1, split onto two distinct paths of
        // equal time, re-merge at m2, platoon m2 -> p2.
        let mut two = f64::INFINITY;
        for m1 in 0..n {
            for p1 in 0..n {
                for m2 in 0..n {
                    let twins = twin_paths(&net, &cat, p1, m2);
                    if twins.is_empty() {
                        continue;
                    }
                    for p2 in 0..n {
                        for &(t1, c1) in &solo[&(s1, m1)] {
                            for &(t2, c2) in &solo[&(s2, m1)] {
                                let a = (ts1 + t1).max(ts2 + t2);
                                for &(t3, c3) in &plat[&(m1, p1)] {
                                    for &(tw, cw) in &twins {
                                        for &(t6, c6) in &plat[&(m2, p2)] {
                                            let e = a + t3 + tw + t6;
                                            let base = c1 + c2 + c3 + cw + c6;
                                            let tail1 = solo[&(p2, d1)].iter().filter(|x| e + x.0 <= td1 + 1e-9).map(|x| x.1).fold(f64::INFINITY, f64::min);
                                            let tail2 = solo[&(p2, d2)].iter().filter(|x| e + x.0 <= td2 + 1e-9).map(|x| x.1).fold(f64::INFINITY, f64::min);
                                            two = two.min(base + tail1 + tail2);
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        if !one.is_finite() && !two.is_finite() {
            continue;
        }
        checked += 1;
        if two.is_finite() {
            two_segment_feasible += 1;
            worst = worst.max(one - two);
        }
    }
    verdict(
        worst <= 1e-9,
        format!(
            "100 instances, {two_segment_feasible} admit two segments, max (one - two) = {}",
            if worst == f64::NEG_INFINITY { "n/a".to_string() } else { format!("{worst:.3e}") }
        ),
    )
}

// ---------------------------------------------------------------- 4, 5, 6

const EPS: [f64; 3] = [0.5, 0.2, 0.1];

struct SmallCase {
    net: RoadNetwork,
    tasks: TaskPair,
    dual: SolveReport,
    fptas: Vec<Option<SolveReport>>,
    opt: Option<f64>,
}

struct SmallSuite {
    cases: Vec<SmallCase>,
    fptas_seconds: f64,
    oracle_seconds: f64,
}

fn small_suite() -> &'static SmallSuite {
    static SUITE: OnceLock<SmallSuite> = OnceLock::new();
    SUITE.get_or_init(|| {
        let mut fptas_seconds = 0.0;
        let mut oracle_seconds = 0.0;
        let cases = instance_suite(100, (5, 7), 0.35, (1.02, 1.5), 77)
            .into_iter()
            .map(|(net, tasks)| {
                let dual = dual_solve(&net, &tasks, ETA, &DualConfig::default()).unwrap();
                let t = Instant::now();
                let fptas: Vec<Option<SolveReport>> = EPS.iter().map(|&e| fptas_solve(&net, &tasks, ETA, e).ok()).collect();
                fptas_seconds += t.elapsed().as_secs_f64();
                let incumbent = fptas
                    .iter()
                    .flatten()
                    .map(|r| r.total_fuel)
                    .chain([dual.total_fuel])
                    .filter(|f| f.is_finite())
                    .fold(f64::INFINITY, f64::min);
                let t = Instant::now();
                let cutoff = incumbent.is_finite().then_some(incumbent * (1.0 + 1e-6));
                let opt = opt_oracle(&net, &tasks, ETA, cutoff).or_else(|| opt_oracle(&net, &tasks, ETA, None));
                oracle_seconds += t.elapsed().as_secs_f64();
                SmallCase { net, tasks, dual, fptas, opt }
            })
            .collect();
        SmallSuite { cases, fptas_seconds, oracle_seconds }
    })
}

fn fptas_ratio() -> Verdict {
    let suite = small_suite();
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for case in &suite.cases {
        let Some(opt) = case.opt else {
            failures += 1;
            continue;
        };
        for (k, &eps) in EPS.iter().enumerate() {
            let ok = case.fptas[k].as_ref().and_then(|r| {
                let plan = r.platoon_plan()?;
                let ev = evaluate(&case.net, &case.tasks, plan, ETA).ok()?;
                let ratio = ev.total_fuel / opt;
                worst = worst.max((ratio - 1.0) / eps);
                Some(ev.slacks.feasible() && ev.total_fuel <= (1.0 + eps) * opt + 1e-9)
            });
            if ok != Some(true) {
                failures += 1;
            }
        }
    }
    let secs = suite.fptas_seconds + suite.oracle_seconds;
    verdict(
        failures == 0 && secs < 600.0,
        format!(
            "{} instances x 3 eps, {failures} failures, max (ratio-1)/eps {worst:.3}, fptas {:.1}s + oracle {:.1}s",
            suite.cases.len(),
            suite.fptas_seconds,
            suite.oracle_seconds
        ),
    )
}

fn posterior_bound_validity() -> Verdict {
    let suite = small_suite();
    let mut checked = 0;
    let mut tight = 0;
    let mut failures = 0;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_gap: f64 = 0.0;
    for case in &suite.cases {
        let (Some(opt), Some(plan)) = (case.opt, case.dual.platoon_plan()) else {
            continue;
        };
        let Some(b) = case.dual.posterior_bound else {
            failures += 1;
            continue;
        };
        checked += 1;
        let fuel = case.dual.total_fuel;
        let excess = fuel - opt - b;
        worst_excess = worst_excess.max(excess);
        worst_gap = worst_gap.max(fuel - opt);
        if excess > 1e-6 {
            failures += 1;
        }
        let slacks = case.tasks.slacks(plan.durations()).to_array();
        let all_tight = slacks.iter().zip(case.tasks.slack_scales()).all(|(d, w)| d.abs() <= 1e-9 * w);
        if all_tight || case.dual.status == Status::Optimal {
            tight += 1;
            if (fuel - opt).abs() > 1e-6 {
                failures += 1;
            }
        }
    }
    verdict(
        failures == 0 && checked > 0,
        format!(
            "{checked} feasible returns ({tight} with zero slacks), {failures} failures, max fuel - OPT {worst_gap:.2e}, max (fuel - OPT - B) {worst_excess:.2e}"
        ),
    )
}

/// Violations of the trace invariants, checked against `floor`, the
/// cheapest fuel known to be feasible.
fn trace_violations(trace: &[TraceRow], fuel: f64, floor: f64) -> usize {
    let tol = |x: f64| 1e-9 * x.abs().max(1.0);
    let mut bad = 0;
    for w in trace.windows(2) {
        if w[1].best_dual < w[0].best_dual {
            bad += 1;
        }
    }
    for row in trace {
        if row.dual_value > row.best_dual + tol(row.best_dual) {
            bad += 1;
        }
        if row.best_dual > fuel + tol(fuel) || row.best_dual > floor + 1e-7 * floor {
            bad += 1;
        }
        if row.feasible && row.best_dual > row.fuel + tol(row.fuel) {
            bad += 1;
        }
    }
    bad
}

fn weak_duality() -> Verdict {
    let suite = small_suite();
    let mut runs = 0;
    let mut bad = 0;
    for case in &suite.cases {
        if case.dual.trace.is_empty() {
            continue;
        }
        runs += 1;
        let floor = case.opt.unwrap_or(f64::INFINITY);
        bad += trace_violations(&case.dual.trace, case.dual.total_fuel, floor);
    }
    for run in convergence_runs() {
        runs += 2;
        bad += trace_violations(&run.short.trace, run.short.total_fuel, f64::INFINITY);
        bad += trace_violations(&run.long.trace, run.long.total_fuel, f64::INFINITY);
    }
    verdict(bad == 0 && runs > 0, format!("{runs} traced runs, {bad} violations"))
}

// ---------------------------------------------------------------- 7

struct ConvergenceRun {
    short: SolveReport,
    long: SolveReport,
    reference: f64,
}

fn tight_grid_instances(count: usize, seed: u64) -> (RoadNetwork, Vec<TaskPair>) {
    let net = generate_grid(5, 5, seed, &GridParams::default()).unwrap();
    let cfg = SamplerConfig { count: 8 * count, seed, delay_factor: Some(1.15), ..SamplerConfig::default() };
    let tasks = sample_instances(&net, &cfg)
        .unwrap()
        .into_iter()
        .filter(|t| check_feasible(&net, t).unwrap().feasible)
        .take(count)
        .collect();
    (net, tasks)
}

fn convergence_runs() -> &'static [ConvergenceRun] {
    static RUNS: OnceLock<Vec<ConvergenceRun>> = OnceLock::new();
    RUNS.get_or_init(|| {
        let (net, tasks) = tight_grid_instances(30, 7);
        let config = |k: usize, step: StepKind| DualConfig {
            max_iterations: k,
            step,
            target_gap: 0.0,
            ..DualConfig::default()
        };
        tasks
            .iter()
            .map(|t| {
                let short = dual_solve(&net, t, ETA, &config(400, StepKind::ConstantOverSqrtK)).unwrap();
                let long = dual_solve(&net, t, ETA, &config(1600, StepKind::ConstantOverSqrtK)).unwrap();
                let best = dual_solve(&net, t, ETA, &config(6400, StepKind::Adaptive)).unwrap();
                let reference = [&short, &long, &best]
                    .iter()
                    .filter_map(|r| r.lower_bound)
                    .fold(f64::NEG_INFINITY, f64::max);
                ConvergenceRun { short, long, reference }
            })
            .collect()
    })
}

fn convergence_trend() -> Verdict {
    let runs = convergence_runs();
    let gap = |r: &SolveReport, reference: f64| reference - r.lower_bound.unwrap_or(f64::NEG_INFINITY);
    let g400 = median(runs.iter().map(|r| gap(&r.short, r.reference)).collect());
    let g1600 = median(runs.iter().map(|r| gap(&r.long, r.reference)).collect());
    verdict(
        runs.len() == 30 && g1600 <= 0.6 * g400,
        format!("{} instances, median dual gap K=400 {g400:.4e}, K=1600 {g1600:.4e}", runs.len()),
    )
}

// ---------------------------------------------------------------- 8

/// Random skeleton on a DAG: a random path between random node pairs.
fn random_skeleton(net: &RoadNetwork, cat: &PathCatalog, tasks: &TaskPair, r: &mut impl Rng) -> Option<Skeleton> {
    let n = net.node_count();
    for _ in 0..50 {
        let (m, s) = (r.gen_range(0..n), r.gen_range(0..n));
        let ends = [(tasks.s1, m), (tasks.s2, m), (m, s), (s, tasks.d1), (s, tasks.d2)];
        let lists: Vec<&[Vec<EdgeId>]> = ends.iter().map(|&(a, b)| cat.get(a, b)).collect();
        if lists.iter().any(|l| l.is_empty()) {
            continue;
        }
        let paths = [0, 1, 2, 3, 4].map(|i| lists[i][r.gen_range(0..lists[i].len())].clone());
        return Some(Skeleton { merge: m, split: s, paths });
    }
    None
}

fn decomposition_exactness() -> Verdict {
    let mut done = 0;
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    let mut max_components = 0;
    let mut seed = 0u64;
    while done < 100 {
        seed += 1;
        let n = 6 + (seed as usize % 4);
        let net = random_dag(9000 + seed, n, 0.5);
        let cat = PathCatalog::new(&net);
        let mut r = rng(seed);
        let tasks = TaskPair { s1: 0, s2: r.gen_range(0..2), d1: n - 1, d2: n - 1 - r.gen_range(0..2), ts1: 0.0, ts2: 0.0, td1: 9.0, td2: 9.0 };
        let k = r.gen_range(2..=4);
        let parts: Option<Vec<Skeleton>> = (0..k).map(|_| random_skeleton(&net, &cat, &tasks, &mut r)).collect();
        let Some(parts) = parts else { continue };
        let raw: Vec<f64> = (0..k).map(|_| r.gen_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let mix: Vec<(f64, &Skeleton)> = raw.iter().map(|w| w / total).zip(parts.iter()).collect();
        let frac = FractionalSolution::mixture(&net, &mix);
        done += 1;
        let Ok(components) = decompose_fractional(&net, &tasks, &frac) else {
            failures += 1;
            continue;
        };
        max_components = max_components.max(components.len());
        let theta: f64 = components.iter().map(|c| c.theta).sum();
        let rebuilt = FractionalSolution::mixture(&net, &components.iter().map(|c| (c.theta, &c.skeleton)).collect::<Vec<_>>());
        let err = rebuilt.max_abs_diff(&frac);
        worst = worst.max(err);
        let members_valid = components.iter().all(|c| {
            let single = FractionalSolution::mixture(&net, &[(1.0, &c.skeleton)]);
            c.theta > 0.0 && single.validate(&net, &tasks).is_ok()
        });
        if (theta - 1.0).abs() > 1e-9 || err > 1e-9 || !members_valid || components.len() > net.edge_count() {
            failures += 1;
        }
    }
    verdict(
        failures == 0,
        format!("100 mixtures, {failures} failures, max recombination error {worst:.1e}, at most {max_components} components"),
    )
}

// ---------------------------------------------------------------- 9

fn feasibility_agreement() -> Verdict {
    let mut agree = 0;
    let mut feasible = 0;
    let mut seed = 0u64;
    let mut total = 0;
    while total < 200 {
        seed += 1;
        let n = 4 + (seed as usize % 4);
        let net = random_digraph(20_000 + seed, n, 0.35);
        let mut r = rng(seed);
        let (s1, d1, s2, d2) = (r.gen_range(0..n), r.gen_range(0..n), r.gen_range(0..n), r.gen_range(0..n));
        if s1 == d1 || s2 == d2 {
            continue;
        }
        let ts2 = if r.gen_bool(0.5) { 0.0 } else { r.gen_range(0.0..1.0) };
        let tasks = TaskPair { s1, d1, s2, d2, ts1: 0.0, ts2, td1: r.gen_range(0.5..4.0), td2: ts2 + r.gen_range(0.5..4.0) };
        total += 1;
        let cat = PathCatalog::new(&net);
        let brute = brute_feasible(&net, &cat, &tasks);
        let ours = check_feasible(&net, &tasks).unwrap().feasible;
        feasible += brute as usize;
        agree += (brute == ours) as usize;
    }
    verdict(agree == 200, format!("{agree}/200 agree ({feasible} feasible)"))
}

// ---------------------------------------------------------------- 10

fn baseline_dominance() -> Verdict {
    let net = generate_grid(8, 8, 2024, &GridParams::default()).unwrap();
    let cfg = SamplerConfig { count: 100, seed: 11, ..SamplerConfig::default() };
    let instances = sample_instances(&net, &cfg).unwrap();
    let mut violations = 0;
    let mut compared = 0;
    let mut savings_p = Vec::new();
    let mut small_gap = 0;
    let mut with_bound = 0;
    for tasks in &instances {
        let ours = run_pipeline(&net, tasks, ETA, &PipelineConfig::default()).unwrap();
        let p = solve_p_platooning(&net, tasks, ETA).ok().map(|r| r.total_fuel).filter(|f| f.is_finite());
        let s = solve_s_platooning(&net, tasks, ETA).ok().map(|r| r.total_fuel).filter(|f| f.is_finite());
        if let (Some(p), Some(s)) = (p, s) {
            if ours.total_fuel.is_finite() {
                compared += 1;
                if ours.total_fuel > p.min(s) + 1e-6 {
                    violations += 1;
                }
            }
        }
        if let Some(p) = p {
            savings_p.push((p - ours.total_fuel) / p);
        }
        if let Some(lb) = ours.lower_bound {
            with_bound += 1;
            if (ours.total_fuel - lb) / ours.total_fuel < 0.02 {
                small_gap += 1;
            }
        }
    }
    let mean_p = savings_p.iter().sum::<f64>() / savings_p.len().max(1) as f64;
    let gap_share = small_gap as f64 / instances.len() as f64;
    verdict(
        violations == 0 && compared > 0 && mean_p > 0.0 && gap_share >= 0.9,
        format!(
            "{} instances, {compared} compared, {violations} dominance violations, mean saving vs P {:.2}%, gap < 2% on {small_gap}/{} ({with_bound} bounded)",
            instances.len(),
            100.0 * mean_p,
            instances.len()
        ),
    )
}

// ---------------------------------------------------------------- 11

fn edge_speed_oracle() -> Verdict {
    let start = Instant::now();
    let mut r = rng(424242);
    let mut worst: f64 = 0.0;
    for k in 0..1000 {
        let edge = random_edge(&mut r, k, 0, 1);
        let (mode, factor) = if r.gen_bool(0.5) {
            (Mode::Solo, 1.0)
        } else {
            (Mode::Platoon { eta: ETA }, 2.0 * (1.0 - ETA))
        };
        let price = if r.gen_bool(0.2) { 0.0 } else { r.gen_range(0.0..80.0) };
        let ours = minimize_edge_time(&EdgeCost::new(&edge, mode), price);
        let (lo, hi) = (edge.t_min(), edge.t_max());
        let grid = (0..10_000)
            .map(|i| {
                let t = lo + (hi - lo) * i as f64 / 9_999.0;
                cost_at_time(&edge, t, factor) + price * t
            })
            .fold(f64::INFINITY, f64::min);
        let own = cost_at_time(&edge, ours.time, factor) + price * ours.time;
        worst = worst.max((ours.value - grid).abs() / grid).max((own - ours.value).abs() / grid);
    }
    let elapsed = start.elapsed().as_secs_f64();
    verdict(worst <= 1e-6 && elapsed < 10.0, format!("1000 draws, max rel diff {worst:.2e}, {elapsed:.2}s"))
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("toy instance reproduces the reference fuel table", toy_golden),
        ("inner solve equals brute force", inner_exactness),
        ("one platoon segment suffices", platoon_once_optimality),
        ("rounding scheme stays within 1 + eps", fptas_ratio),
        ("posterior bound covers the optimality gap", posterior_bound_validity),
        ("best dual value is monotone and a lower bound", weak_duality),
        ("dual gap shrinks with the iteration budget", convergence_trend),
        ("fractional mixtures decompose exactly", decomposition_exactness),
        ("feasibility check equals brute force", feasibility_agreement),
        ("pipeline dominates both baselines", baseline_dominance),
        ("edge speed optimum equals grid search", edge_speed_oracle),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let results: Vec<(usize, &str, Verdict, f64)> = std::thread::scope(|scope| {
        let handles: Vec<_> = criteria
            .iter()
            .enumerate()
            .filter(|(i, (name, _))| {
                filter.is_empty()
                    || filter.iter().any(|f| match f.parse::<usize>() {
                        Ok(k) => k == i + 1,
                        Err(_) => name.contains(f.as_str()),
                    })
            })
            .map(|(i, &(name, run))| {
                scope.spawn(move || {
                    let t = Instant::now();
                    let v = run();
                    (i + 1, name, v, t.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("criterion panicked")).collect()
    });
    let mut failed = 0;
    for (i, name, v, secs) in &results {
        println!("{} [{i:2}] {name}: {} ({secs:.1}s)", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        failed += (!v.pass) as usize;
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
