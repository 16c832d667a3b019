//! Reference solvers, instance sampling and evaluation metrics.
//!
//! - [`solve_single_truck`]: one truck's optimal path and speeds, used for the
//!   drive-separately alternative.
//! - [`solve_p_platooning`]: optimize paths and the platoon pair with every
//!   edge at top speed.
//! - [`solve_s_platooning`]: keep each truck on its fastest path, platoon on
//!   the best shared run and optimize speeds.

mod metrics;
mod sampling;
mod single;

use std::time::Instant;

pub use metrics::{compute_metrics, spor, Metrics};
pub use sampling::{sample_instances, SamplerConfig};
pub use single::{optimize_fixed_path, solve_single_truck, KShortestPaths, SingleTruckSolution};

use crate::dual::{primal_recover, Outcome, SolveReport, Status};
use crate::fuel::EdgeCost;
use crate::network::{dijkstra, shortest_time_tree, Direction, EdgeId, NodeId, RoadNetwork};
use crate::planning::{evaluate, evaluate_separate, PlatoonPlan, Skeleton, SoloPlan, Subpath, TaskPair};
use crate::{Error, Result, SLACK_TOL};

fn report(status: Status, outcome: Outcome, total_fuel: f64, start: Instant) -> SolveReport {
    SolveReport {
        status,
        outcome,
        total_fuel,
        lower_bound: None,
        posterior_bound: None,
        gap_bound: None,
        iterations: 1,
        wall_time: start.elapsed().as_secs_f64(),
        trace: Vec::new(),
    }
}

fn at_top_speed(net: &RoadNetwork, edges: Vec<EdgeId>) -> SoloPlan {
    let times = edges.iter().map(|&e| net.edge(e).t_min()).collect();
    SoloPlan { edges, times }
}

/// One truck at top speed: the cheapest path if it is on time, else the fastest.
fn fastest_solo(net: &RoadNetwork, s: NodeId, d: NodeId, window: f64, cost: &[f64]) -> Option<SoloPlan> {
    let cheap = dijkstra(net, s, Direction::Forward, |e| cost[e]).path(net, d)?;
    if net.path_fastest_time(&cheap) <= window + SLACK_TOL {
        return Some(at_top_speed(net, cheap));
    }
    let fast = dijkstra(net, s, Direction::Forward, |e| net.edge(e).t_min()).path(net, d)?;
    (net.path_fastest_time(&fast) <= window + SLACK_TOL).then(|| at_top_speed(net, fast))
}

/// Path planning with platooning at fixed top speed.
///
/// Every merge/split pair is priced with its five cheapest top-speed paths;
/// the cheapest pair meeting both deadlines competes with both trucks driving
/// their own top-speed routes.
pub fn solve_p_platooning(net: &RoadNetwork, tasks: &TaskPair, eta: f64) -> Result<SolveReport> {
    let start = Instant::now();
    tasks.validate(net)?;
    let solo: Vec<f64> = net.edges().iter().map(|e| EdgeCost::solo(e).cost_unchecked(e.t_min())).collect();
    let platoon: Vec<f64> = solo.iter().map(|c| 2.0 * (1.0 - eta) * c).collect();

    let from_s1 = dijkstra(net, tasks.s1, Direction::Forward, |e| solo[e]);
    let from_s2 = dijkstra(net, tasks.s2, Direction::Forward, |e| solo[e]);
    let to_d1 = dijkstra(net, tasks.d1, Direction::Reverse, |e| solo[e]);
    let to_d2 = dijkstra(net, tasks.d2, Direction::Reverse, |e| solo[e]);
    let mut best: Option<(f64, PlatoonPlan)> = None;
    for m in 0..net.node_count() {
        if !(from_s1.reachable(m) && from_s2.reachable(m)) {
            continue;
        }
        let from_m = dijkstra(net, m, Direction::Forward, |e| platoon[e]);
        for s in 0..net.node_count() {
            let total = from_s1.dist[m] + from_s2.dist[m] + from_m.dist[s] + to_d1.dist[s] + to_d2.dist[s];
            if !total.is_finite() || best.as_ref().is_some_and(|(b, _)| total >= *b) {
                continue;
            }
            let paths = [
                from_s1.path(net, m),
                from_s2.path(net, m),
                from_m.path(net, s),
                to_d1.path(net, s),
                to_d2.path(net, s),
            ]
            .map(|p| p.expect("finite distance"));
            let tau = paths.clone().map(|p| net.path_fastest_time(&p));
            if tasks.slacks(tau).max() > SLACK_TOL {
                continue;
            }
            let subpaths = paths.map(|p| {
                let sp = at_top_speed(net, p);
                Subpath::new(sp.edges, sp.times)
            });
            best = Some((total, PlatoonPlan::synchronized(m, s, subpaths, tasks)));
        }
    }
    let platoon_choice = match best {
        Some((_, plan)) => Some((evaluate(net, tasks, &plan, eta)?.total_fuel, plan)),
        None => None,
    };
    let separate = match (
        fastest_solo(net, tasks.s1, tasks.d1, tasks.td1 - tasks.ts1, &solo),
        fastest_solo(net, tasks.s2, tasks.d2, tasks.td2 - tasks.ts2, &solo),
    ) {
        (Some(a), Some(b)) => Some((evaluate_separate(net, tasks, &a, &b)?.total_fuel, a, b)),
        _ => None,
    };
    choose(platoon_choice, separate, start)
}

fn choose(
    platoon: Option<(f64, PlatoonPlan)>,
    separate: Option<(f64, SoloPlan, SoloPlan)>,
    start: Instant,
) -> Result<SolveReport> {
    match (platoon, separate) {
        (Some((pf, plan)), sep) if sep.as_ref().is_none_or(|s| pf <= s.0) => {
            Ok(report(Status::FeasibleWithBound, Outcome::Platoon { plan }, pf, start))
        }
        (_, Some((sf, a, b))) => Ok(report(
            Status::SeparateFallback,
            Outcome::Separate { truck1: a, truck2: b },
            sf,
            start,
        )),
        _ => Err(Error::Infeasible),
    }
}

/// Maximal runs of consecutive edges shared by two paths, as
/// `(start in a, start in b, length)`.
pub fn common_runs(a: &[EdgeId], b: &[EdgeId]) -> Vec<(usize, usize, usize)> {
    let mut runs = Vec::new();
    for i in 0..a.len() {
        for j in 0..b.len() {
            if a[i] != b[j] || (i > 0 && j > 0 && a[i - 1] == b[j - 1]) {
                continue;
            }
            let mut len = 0;
            while i + len < a.len() && j + len < b.len() && a[i + len] == b[j + len] {
                len += 1;
            }
            runs.push((i, j, len));
        }
    }
    runs
}

/// Speed planning with platooning on fixed fastest-time paths.
///
/// Each shared run of the two fastest paths is tried as the platoon segment
/// with speeds re-optimized; the cheapest competes with both trucks speed
/// planning their own path.
pub fn solve_s_platooning(net: &RoadNetwork, tasks: &TaskPair, eta: f64) -> Result<SolveReport> {
    let start = Instant::now();
    tasks.validate(net)?;
    let path1 = shortest_time_tree(net, tasks.s1, Direction::Forward)?
        .path(net, tasks.d1)
        .ok_or(Error::Infeasible)?;
    let path2 = shortest_time_tree(net, tasks.s2, Direction::Forward)?
        .path(net, tasks.d2)
        .ok_or(Error::Infeasible)?;

    let mut best: Option<(f64, PlatoonPlan)> = None;
    for (i, j, len) in common_runs(&path1, &path2) {
        let run = &path1[i..i + len];
        let skeleton = Skeleton {
            merge: net.edge(run[0]).tail,
            split: net.edge(run[len - 1]).head,
            paths: [
                path1[..i].to_vec(),
                path2[..j].to_vec(),
                run.to_vec(),
                path1[i + len..].to_vec(),
                path2[j + len..].to_vec(),
            ],
        };
        if let Ok(plan) = primal_recover(net, tasks, eta, &skeleton) {
            let fuel = evaluate(net, tasks, &plan, eta)?.total_fuel;
            if best.as_ref().is_none_or(|(b, _)| fuel < *b) {
                best = Some((fuel, plan));
            }
        }
    }

    let separate = match (
        optimize_fixed_path(net, &path1, tasks.td1 - tasks.ts1),
        optimize_fixed_path(net, &path2, tasks.td2 - tasks.ts2),
    ) {
        (Ok((t1, f1)), Ok((t2, f2))) => Some((
            f1 + f2,
            SoloPlan { edges: path1.clone(), times: t1 },
            SoloPlan { edges: path2.clone(), times: t2 },
        )),
        _ => None,
    };
    choose(best, separate, start)
}
