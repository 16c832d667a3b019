//! Cost-rounding approximation scheme.
//!
//! Fuel is quantized in units of `S = L eps / (5 (N + 1))`. For each merge/split
//! pair, four dynamic programs compute the least travel time reaching every
//! node within every integer cost budget (from `s1`, from `s2`, from the
//! merge node with platoon costs, from the split node). A coordination step
//! then picks the smallest total budget whose five subpaths meet both
//! deadlines. Rounding adds at most one unit per edge, and a plan has fewer
//! than `5 (N + 1)` edges, so any plan found costs at most `OPT + eps L`.
//!
//! A geometric search over the guess `B` (halving `log(U / L)` each round)
//! narrows the bracket until `U / L <= 2`; the final call returns a plan
//! within `(1 + eps)` of the pair's optimum.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dual::{Outcome, SolveReport, Status};
use crate::feasibility::FastestTables;
use crate::fuel::{EdgeCost, Mode};
use crate::network::{dijkstra, Direction, NodeId, RoadNetwork};
use crate::planning::{evaluate, PlatoonPlan, Subpath, TaskPair};
use crate::{Error, Result};

const NO_EDGE: u32 = u32::MAX;

/// Per-edge inverse cost tables for one rounding scale.
#[derive(Debug, Clone)]
pub struct QuantizedCosts {
    pub scale: f64,
    pub u_hat: usize,
    /// Index 0 for solo costs, 1 for platoon costs.
    tables: [Vec<EdgeTable>; 2],
}

#[derive(Debug, Clone)]
struct EdgeTable {
    /// `ceil(c_min / S)`: the cheapest budget that buys any time at all.
    lo: usize,
    /// `ceil(c(t_min) / S)`: the budget that buys top speed.
    hi: usize,
    /// `times[k]` is the travel time bought with budget `lo + k`.
    times: Vec<f64>,
}

impl EdgeTable {
    fn new(ec: &EdgeCost, scale: f64, cap: usize) -> Self {
        let t_free = ec.free_time();
        let c_min = ec.cost_unchecked(t_free);
        let c_fast = ec.cost_unchecked(ec.t_min);
        let lo = ((c_min / scale).ceil() as usize).max(1);
        let hi = ((c_fast / scale).ceil() as usize).max(lo);
        let top = hi.min(cap);
        let times = (lo..=top)
            .map(|c| {
                if c >= hi {
                    return ec.t_min;
                }
                // Smallest time on the decreasing branch costing at most c * S.
                let budget = c as f64 * scale;
                let (mut a, mut b) = (ec.t_min, t_free);
                for _ in 0..200 {
                    if b - a <= 1e-13 * b {
                        break;
                    }
                    let mid = 0.5 * (a + b);
                    if ec.cost_unchecked(mid) <= budget {
                        b = mid;
                    } else {
                        a = mid;
                    }
                }
                b
            })
            .collect();
        Self { lo, hi, times }
    }

    fn time(&self, c: usize) -> f64 {
        self.times[c - self.lo]
    }

    fn top(&self) -> usize {
        self.lo + self.times.len() - 1
    }
}

impl QuantizedCosts {
    /// Scale and tables for the bracket `[L, U]`.
    pub fn new(net: &RoadNetwork, eta: f64, lower: f64, upper: f64, eps: f64) -> Self {
        let slots = 5 * (net.node_count() + 1);
        let scale = lower * eps / slots as f64;
        let u_hat = (upper / scale).floor() as usize + slots;
        let tables = [Mode::Solo, Mode::Platoon { eta }].map(|mode| {
            net.edges()
                .iter()
                .map(|e| EdgeTable::new(&EdgeCost::new(e, mode), scale, u_hat))
                .collect()
        });
        Self { scale, u_hat, tables }
    }

    /// Time bought on edge `e` with budget `c`, or `None` below the cheapest budget.
    pub fn time(&self, platoon: bool, e: usize, c: usize) -> Option<f64> {
        let t = &self.tables[platoon as usize][e];
        (c >= t.lo).then(|| t.time(c.min(t.hi).min(t.top())))
    }
}

/// Operation counters of one solve.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FptasStats {
    pub tests: usize,
    pub pairs_examined: usize,
    pub dp_relaxations: u64,
    pub coordination_checks: u64,
    pub max_u_hat: usize,
}

/// Least-time tables `g(v, c)` from one source.
struct BudgetDp {
    source: NodeId,
    n: usize,
    g: Vec<f64>,
    pred: Vec<(u32, u32)>,
}

impl BudgetDp {
    fn run(net: &RoadNetwork, q: &QuantizedCosts, platoon: bool, source: NodeId, stats: &mut FptasStats) -> Self {
        let n = net.node_count();
        let cells = (q.u_hat + 1) * n;
        let mut g = vec![f64::INFINITY; cells];
        let mut pred = vec![(NO_EDGE, 0); cells];
        let tables = &q.tables[platoon as usize];
        for c in 0..=q.u_hat {
            let row = c * n;
            if c > 0 {
                g.copy_within(row - n..row, row);
            }
            g[row + source] = 0.0;
            for (e, edge) in net.edges().iter().enumerate() {
                let t = &tables[e];
                if c < t.lo {
                    continue;
                }
                let (u, v) = (edge.tail, edge.head);
                let mut best = g[row + v];
                let mut choice = None;
                for cb in t.lo..=c.min(t.top()) {
                    let cand = g[(c - cb) * n + u] + t.time(cb);
                    if cand < best {
                        best = cand;
                        choice = Some(cb);
                    }
                }
                stats.dp_relaxations += (c.min(t.top()) + 1 - t.lo) as u64;
                if let Some(cb) = choice {
                    g[row + v] = best;
                    pred[row + v] = (e as u32, cb as u32);
                }
            }
        }
        Self { source, n, g, pred }
    }

    fn at(&self, v: NodeId, c: usize) -> f64 {
        self.g[c * self.n + v]
    }

    fn column(&self, v: NodeId) -> Vec<f64> {
        self.g.iter().skip(v).step_by(self.n).copied().collect()
    }

    /// Edges and times of the path realizing `g(v, c)`.
    fn path(&self, net: &RoadNetwork, q: &QuantizedCosts, platoon: bool, mut v: NodeId, mut c: usize) -> Subpath {
        let mut edges = Vec::new();
        let mut times = Vec::new();
        while v != self.source {
            let (e, cb) = self.pred[c * self.n + v];
            if e == NO_EDGE {
                c -= 1;
                continue;
            }
            let (e, cb) = (e as usize, cb as usize);
            edges.push(e);
            times.push(q.tables[platoon as usize][e].time(cb));
            v = net.edge(e).tail;
            c -= cb;
        }
        edges.reverse();
        times.reverse();
        Subpath::new(edges, times)
    }
}

/// Smallest budget whose least time is within `limit`.
fn min_budget(g: &[f64], limit: f64) -> Option<usize> {
    let c = g.partition_point(|&t| t > limit);
    (c < g.len()).then_some(c)
}

/// One rounding pass for a fixed merge/split pair.
///
/// Returns the plan with the smallest total rounded budget that meets both
/// deadlines, or `None` when no budget up to `U-hat` does.
#[allow(clippy::too_many_arguments)]
pub fn fptas_test(
    net: &RoadNetwork,
    tasks: &TaskPair,
    merge: NodeId,
    split: NodeId,
    eta: f64,
    lower: f64,
    upper: f64,
    eps: f64,
) -> Option<PlatoonPlan> {
    fptas_test_counted(net, tasks, merge, split, eta, lower, upper, eps, &mut FptasStats::default())
}

#[allow(clippy::too_many_arguments)]
fn fptas_test_counted(
    net: &RoadNetwork,
    tasks: &TaskPair,
    merge: NodeId,
    split: NodeId,
    eta: f64,
    lower: f64,
    upper: f64,
    eps: f64,
    stats: &mut FptasStats,
) -> Option<PlatoonPlan> {
    if !(lower > 0.0 && upper >= lower && eps > 0.0) {
        return None;
    }
    stats.tests += 1;
    let q = QuantizedCosts::new(net, eta, lower, upper, eps);
    stats.max_u_hat = stats.max_u_hat.max(q.u_hat);
    let dp1 = BudgetDp::run(net, &q, false, tasks.s1, stats);
    let dp2 = BudgetDp::run(net, &q, false, tasks.s2, stats);
    let dp3 = BudgetDp::run(net, &q, true, merge, stats);
    let dp4 = BudgetDp::run(net, &q, false, split, stats);
    let [g1, g2, g3, g4, g5] = [
        dp1.column(merge),
        dp2.column(merge),
        dp3.column(split),
        dp4.column(tasks.d1),
        dp4.column(tasks.d2),
    ];
    let tol = 1e-10 * tasks.td1.abs().max(tasks.td2.abs()).max(1.0);

    let mut arrivals: Vec<f64> = g1
        .iter()
        .map(|t| tasks.ts1 + t)
        .chain(g2.iter().map(|t| tasks.ts2 + t))
        .filter(|a| a.is_finite())
        .collect();
    arrivals.sort_by(f64::total_cmp);
    arrivals.dedup();
    let breaks3: Vec<usize> = (0..g3.len())
        .filter(|&c| g3[c].is_finite() && (c == 0 || g3[c] < g3[c - 1]))
        .collect();

    let mut best: Option<(usize, [usize; 5])> = None;
    for &a in &arrivals {
        let (Some(c1), Some(c2)) = (min_budget(&g1, a - tasks.ts1 + tol), min_budget(&g2, a - tasks.ts2 + tol)) else {
            continue;
        };
        let merge_time = (tasks.ts1 + g1[c1]).max(tasks.ts2 + g2[c2]);
        for &c3 in &breaks3 {
            stats.coordination_checks += 1;
            let partial = c1 + c2 + c3;
            if best.is_some_and(|(b, _)| partial >= b) || partial > q.u_hat {
                break;
            }
            let split_time = merge_time + g3[c3];
            let (Some(c4), Some(c5)) = (
                min_budget(&g4, tasks.td1 - split_time + tol),
                min_budget(&g5, tasks.td2 - split_time + tol),
            ) else {
                continue;
            };
            let total = partial + c4 + c5;
            if total <= q.u_hat && best.is_none_or(|(b, _)| total < b) {
                best = Some((total, [c1, c2, c3, c4, c5]));
            }
        }
    }
    let (_, [c1, c2, c3, c4, c5]) = best?;
    debug_assert!(dp1.at(merge, c1).is_finite());
    let subpaths = [
        dp1.path(net, &q, false, merge, c1),
        dp2.path(net, &q, false, merge, c2),
        dp3.path(net, &q, true, split, c3),
        dp4.path(net, &q, false, tasks.d1, c4),
        dp4.path(net, &q, false, tasks.d2, c5),
    ];
    let plan = PlatoonPlan::synchronized(merge, split, subpaths, tasks);
    let ev = evaluate(net, tasks, &plan, eta).ok()?;
    ev.slacks.feasible().then_some(plan)
}

/// Free-speed lower bounds per merge/split pair.
struct PairBounds {
    from_s1: Vec<f64>,
    from_s2: Vec<f64>,
    to_d1: Vec<f64>,
    to_d2: Vec<f64>,
    from_merge: Vec<Vec<f64>>,
}

impl PairBounds {
    fn new(net: &RoadNetwork, tasks: &TaskPair, eta: f64) -> Self {
        let solo: Vec<f64> = net
            .edges()
            .iter()
            .map(|e| {
                let ec = EdgeCost::solo(e);
                ec.cost_unchecked(ec.free_time())
            })
            .collect();
        let shared: Vec<f64> = solo.iter().map(|c| 2.0 * (1.0 - eta) * c).collect();
        let tree = |root, dir, w: &[f64]| dijkstra(net, root, dir, |e| w[e]).dist;
        Self {
            from_s1: tree(tasks.s1, Direction::Forward, &solo),
            from_s2: tree(tasks.s2, Direction::Forward, &solo),
            to_d1: tree(tasks.d1, Direction::Reverse, &solo),
            to_d2: tree(tasks.d2, Direction::Reverse, &solo),
            from_merge: (0..net.node_count())
                .map(|m| tree(m, Direction::Forward, &shared))
                .collect(),
        }
    }

    fn lower(&self, m: NodeId, s: NodeId) -> f64 {
        self.from_s1[m] + self.from_s2[m] + self.from_merge[m][s] + self.to_d1[s] + self.to_d2[s]
    }
}

/// `(1 + eps)`-approximate plan over all merge/split pairs.
pub fn fptas_solve(net: &RoadNetwork, tasks: &TaskPair, eta: f64, eps: f64) -> Result<SolveReport> {
    fptas_solve_with_stats(net, tasks, eta, eps).map(|(r, _)| r)
}

/// [`fptas_solve`] with operation counters.
pub fn fptas_solve_with_stats(net: &RoadNetwork, tasks: &TaskPair, eta: f64, eps: f64) -> Result<(SolveReport, FptasStats)> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter("eps must be positive".into()));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidParameter(format!("eta must lie in (0, 1), got {eta}")));
    }
    let start = Instant::now();
    let tables = FastestTables::new(net, tasks)?;
    let bounds = PairBounds::new(net, tasks, eta);
    let mut stats = FptasStats::default();

    let mut pairs: Vec<(f64, NodeId, NodeId)> = Vec::new();
    for m in 0..net.node_count() {
        for s in 0..net.node_count() {
            if tables.pair_feasible(tasks, m, s) {
                pairs.push((bounds.lower(m, s), m, s));
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::Infeasible);
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));

    let mut best: Option<(f64, PlatoonPlan)> = None;
    let mut lower_bound = f64::INFINITY;
    for &(lb, m, s) in &pairs {
        if let Some((f, _)) = &best {
            if lb >= *f {
                lower_bound = lower_bound.min(lb);
                break;
            }
        }
        stats.pairs_examined += 1;
        let fastest = tables.fastest_plan(net, tasks, m, s).expect("feasible pair is reachable");
        let ub = evaluate(net, tasks, &fastest, eta)?.total_fuel;
        let (mut bl, mut bu) = (lb, ub.max(lb));
        while bu / bl > 2.0 {
            let guess = (bl * bu).sqrt();
            if fptas_test_counted(net, tasks, m, s, eta, guess, guess, eps, &mut stats).is_some() {
                bu = guess;
            } else {
                bl = guess;
            }
        }
        let widen = 2f64.max(1.0 + eps);
        let found = fptas_test_counted(net, tasks, m, s, eta, bl, widen * bu, eps, &mut stats);
        lower_bound = lower_bound.min(bl);
        let plan = match found {
            Some(p) => p,
            None => fastest,
        };
        let fuel = evaluate(net, tasks, &plan, eta)?.total_fuel;
        if best.as_ref().is_none_or(|(f, _)| fuel < *f) {
            best = Some((fuel, plan));
        }
    }
    let (fuel, plan) = best.ok_or(Error::Infeasible)?;
    let lower_bound = lower_bound.min(fuel);
    let report = SolveReport {
        status: Status::FeasibleWithBound,
        outcome: Outcome::Platoon { plan },
        total_fuel: fuel,
        lower_bound: Some(lower_bound),
        posterior_bound: None,
        gap_bound: Some(fuel - lower_bound),
        iterations: stats.tests,
        wall_time: start.elapsed().as_secs_f64(),
        trace: Vec::new(),
    };
    Ok((report, stats))
}
