//! Speed re-optimization on a fixed skeleton.
//!
//! With paths fixed, the problem is convex in the five subpath durations:
//! minimize `sum C_i(tau_i)` subject to the four deadline slacks, where
//! `C_i` is the water-filled cost of subpath `i`. Its KKT system is
//! parametrized by the platoon price `p3 >= 0`: the pre-merge prices split
//! `p3` so that both trucks reach the merge together (or the later one sets
//! the merge time and the other pays nothing), and the post-split prices are
//! the smallest ones meeting each deadline from the resulting split time.
//! The residual `p4 + p5 - p3` is nonincreasing in `p3`, so one outer
//! bisection finds the optimum.

use crate::fuel::{duration_at_price, price_bracket, price_for_duration, EdgeCost};
use crate::network::RoadNetwork;
use crate::planning::{check_walk, PlatoonPlan, Skeleton, Subpath, TaskPair};
use crate::{Error, Result, SLACK_TOL};

/// Largest residual deadline violation, in hours, that the repair step fixes.
pub const REPAIR_TOL: f64 = 1e-6;

const PRICE_REL_TOL: f64 = 1e-13;

/// How the trucks may synchronize at the merge node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyncRule {
    /// Either truck may wait at its origin.
    Wait,
    /// Both trucks must reach the merge node at the same instant by speed alone.
    NoWait,
}

struct Legs {
    costs: [Vec<EdgeCost>; 5],
    fastest: [f64; 5],
}

#[derive(Debug, Clone, Copy)]
struct PricePoint {
    prices: [f64; 5],
    residual: f64,
}

impl Legs {
    fn new(net: &RoadNetwork, sk: &Skeleton, eta: f64) -> Self {
        let costs: [Vec<EdgeCost>; 5] = std::array::from_fn(|i| {
            sk.paths[i]
                .iter()
                .map(|&e| {
                    let edge = net.edge(e);
                    if i == 2 {
                        EdgeCost::platoon(edge, eta)
                    } else {
                        EdgeCost::solo(edge)
                    }
                })
                .collect()
        });
        let fastest = std::array::from_fn(|i| costs[i].iter().map(|c| c.t_min).sum());
        Self { costs, fastest }
    }

    fn duration(&self, i: usize, price: f64) -> f64 {
        if price.is_infinite() {
            self.fastest[i]
        } else {
            duration_at_price(&self.costs[i], price)
        }
    }

    /// Prices `(p1, p2)` with `p1 + p2 = p3` and the resulting merge time.
    fn merge_side(&self, tasks: &TaskPair, p3: f64, rule: SyncRule) -> Option<(f64, f64, f64)> {
        let a1 = |p: f64| tasks.ts1 + self.duration(0, p);
        let a2 = |p: f64| tasks.ts2 + self.duration(1, p);
        let gap = |p1: f64| a1(p1) - a2(p3 - p1);
        let (mut lo, mut hi) = match rule {
            SyncRule::Wait => {
                if gap(0.0) <= 0.0 {
                    return Some((0.0, p3, a2(p3).max(a1(0.0))));
                }
                if gap(p3) >= 0.0 {
                    return Some((p3, 0.0, a1(p3).max(a2(0.0))));
                }
                (0.0, p3)
            }
            SyncRule::NoWait => {
                let (slow1, fast1) = price_bracket(&self.costs[0]);
                let (slow2, fast2) = price_bracket(&self.costs[1]);
                let lo = slow1.min(p3 - fast2) - 1.0;
                let hi = fast1.max(p3 - slow2) + 1.0;
                if gap(lo) < 0.0 || gap(hi) > 0.0 {
                    return None;
                }
                (lo, hi)
            }
        };
        while hi - lo > PRICE_REL_TOL * hi.abs().max(lo.abs()).max(1.0) {
            let mid = 0.5 * (lo + hi);
            if gap(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let p1 = hi;
        let p2 = p3 - p1;
        Some((p1, p2, a1(p1).max(a2(p2))))
    }

    /// Smallest nonnegative price finishing leg `i` within `budget`.
    fn finish_price(&self, i: usize, budget: f64) -> f64 {
        if self.duration(i, 0.0) <= budget {
            0.0
        } else if self.fastest[i] > budget {
            f64::INFINITY
        } else {
            price_for_duration(&self.costs[i], budget)
        }
    }

    fn at(&self, tasks: &TaskPair, p3: f64, rule: SyncRule) -> Option<PricePoint> {
        let (p1, p2, merge_time) = self.merge_side(tasks, p3, rule)?;
        let split_time = merge_time + self.duration(2, p3);
        let p4 = self.finish_price(3, tasks.td1 - split_time);
        let p5 = self.finish_price(4, tasks.td2 - split_time);
        Some(PricePoint {
            prices: [p1, p2, p3, p4, p5],
            residual: p4 + p5 - p3,
        })
    }

    fn times(&self, prices: [f64; 5]) -> [Vec<f64>; 5] {
        std::array::from_fn(|i| {
            self.costs[i]
                .iter()
                .map(|c| {
                    if prices[i].is_infinite() {
                        c.t_min
                    } else {
                        c.time_at_price(prices[i])
                    }
                })
                .collect()
        })
    }
}

fn structure_check(net: &RoadNetwork, tasks: &TaskPair, sk: &Skeleton) -> Result<()> {
    let ends = [
        (tasks.s1, sk.merge),
        (tasks.s2, sk.merge),
        (sk.merge, sk.split),
        (sk.split, tasks.d1),
        (sk.split, tasks.d2),
    ];
    for (i, (path, (from, to))) in sk.paths.iter().zip(ends).enumerate() {
        check_walk(net, path, from, to, i + 1)?;
    }
    Ok(())
}

/// Pre-merge, shared and post-split subpaths of each of the four slacks.
const CHAINS: [[usize; 3]; 4] = [[0, 2, 3], [1, 2, 3], [0, 2, 4], [1, 2, 4]];

/// Shrinks times on violating chains toward their fastest values.
fn repair(net: &RoadNetwork, sk: &Skeleton, tasks: &TaskPair, times: &mut [Vec<f64>; 5]) -> bool {
    for _ in 0..4 {
        let tau: [f64; 5] = std::array::from_fn(|i| times[i].iter().sum());
        let slacks = tasks.slacks(tau).to_array();
        let Some(j) = (0..4).filter(|&j| slacks[j] > 0.0).max_by(|&a, &b| slacks[a].total_cmp(&slacks[b])) else {
            return true;
        };
        if slacks[j] > REPAIR_TOL {
            return false;
        }
        let spare: f64 = CHAINS[j]
            .iter()
            .flat_map(|&i| sk.paths[i].iter().zip(&times[i]).map(|(&e, &t)| t - net.edge(e).t_min()))
            .sum();
        let need = slacks[j] * (1.0 + 1e-6) + 1e-13;
        if spare < need {
            return false;
        }
        let keep = 1.0 - need / spare;
        for &i in &CHAINS[j] {
            for (t, &e) in times[i].iter_mut().zip(&sk.paths[i]) {
                let lo = net.edge(e).t_min();
                *t = lo + keep * (*t - lo);
            }
        }
    }
    let tau: [f64; 5] = std::array::from_fn(|i| times[i].iter().sum());
    tasks.slacks(tau).max() <= 0.0
}

/// Fuel-optimal times for a fixed skeleton, with origin waiting allowed.
///
/// Fails with [`Error::Infeasible`] when even fastest driving misses a
/// deadline.
pub fn primal_recover(net: &RoadNetwork, tasks: &TaskPair, eta: f64, skeleton: &Skeleton) -> Result<PlatoonPlan> {
    primal_recover_with(net, tasks, eta, skeleton, SyncRule::Wait)
}

/// [`primal_recover`] under an explicit synchronization rule.
pub fn primal_recover_with(
    net: &RoadNetwork,
    tasks: &TaskPair,
    eta: f64,
    skeleton: &Skeleton,
    rule: SyncRule,
) -> Result<PlatoonPlan> {
    tasks.validate(net)?;
    structure_check(net, tasks, skeleton)?;
    let legs = Legs::new(net, skeleton, eta);
    if tasks.slacks(legs.fastest).max() > SLACK_TOL {
        return Err(Error::Infeasible);
    }
    let point = solve_platoon_price(&legs, tasks, rule).ok_or(Error::Infeasible)?;
    let mut times = legs.times(point.prices);
    if rule == SyncRule::Wait && !repair(net, skeleton, tasks, &mut times) {
        return Err(Error::Infeasible);
    }
    let subpaths = std::array::from_fn(|i| Subpath::new(skeleton.paths[i].clone(), times[i].clone()));
    let plan = PlatoonPlan::synchronized(skeleton.merge, skeleton.split, subpaths, tasks);
    if tasks.slacks(plan.durations()).max() > SLACK_TOL {
        return Err(Error::Infeasible);
    }
    Ok(plan)
}

fn solve_platoon_price(legs: &Legs, tasks: &TaskPair, rule: SyncRule) -> Option<PricePoint> {
    let zero = legs.at(tasks, 0.0, rule);
    if let Some(p) = zero {
        if p.residual <= 0.0 {
            return Some(p);
        }
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut upper = None;
    for _ in 0..200 {
        match legs.at(tasks, hi, rule) {
            Some(p) if p.residual <= 0.0 => {
                upper = Some(p);
                break;
            }
            _ => {
                lo = hi;
                hi *= 2.0;
            }
        }
    }
    let mut upper = upper?;
    while hi - lo > PRICE_REL_TOL * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        match legs.at(tasks, mid, rule) {
            Some(p) if p.residual <= 0.0 => {
                upper = p;
                hi = mid;
            }
            _ => lo = mid,
        }
    }
    Some(upper)
}
