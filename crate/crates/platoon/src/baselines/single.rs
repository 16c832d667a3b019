//! One truck, one deadline: Lagrangian search on a single multiplier followed
//! by k-shortest-path gap closing.
//!
//! For a multiplier `lambda >= 0`, `D(lambda) = min_path sum_e w_e(lambda) -
//! lambda T` with `w_e(lambda) = min_t c_e(t) + lambda t` bounds every path's
//! fixed-path optimum from below. Bisection on the sign of the time slack
//! finds the best multiplier; paths are then enumerated in increasing
//! `w(lambda*)` order and priced exactly until the bound of the next path
//! exceeds the best price found.

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::fuel::{minimize_edge_time, subpath_cost_of_duration, EdgeCost};
use crate::network::{dijkstra, shortest_time_tree, Direction, EdgeId, NodeId, RoadNetwork};
use crate::planning::SoloPlan;
use crate::{Error, Result, SLACK_TOL};

/// Path cap for the gap-closing enumeration.
const MAX_ENUMERATED_PATHS: usize = 500;

/// Result of [`solve_single_truck`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleTruckSolution {
    pub plan: SoloPlan,
    pub fuel: f64,
    /// Certified lower bound on the optimal fuel.
    pub lower_bound: f64,
    /// Multiplier with the best dual value.
    pub lambda: f64,
    /// Whether the enumeration closed the gap.
    pub exact: bool,
}

/// Cheapest times for a fixed path finishing within `window` hours.
pub fn optimize_fixed_path(net: &RoadNetwork, edges: &[EdgeId], window: f64) -> Result<(Vec<f64>, f64)> {
    let costs: Vec<EdgeCost> = edges.iter().map(|&e| EdgeCost::solo(net.edge(e))).collect();
    let fastest: f64 = costs.iter().map(|c| c.t_min).sum();
    if fastest > window + SLACK_TOL {
        return Err(Error::Infeasible);
    }
    let free: Vec<f64> = costs.iter().map(|c| c.free_time()).collect();
    if free.iter().sum::<f64>() <= window {
        let fuel = costs.iter().zip(&free).map(|(c, &t)| c.cost_unchecked(t)).sum();
        return Ok((free, fuel));
    }
    let alloc = subpath_cost_of_duration(&costs, window.max(fastest))?;
    Ok((alloc.times, alloc.cost))
}

struct Probe {
    path: Vec<EdgeId>,
    duration: f64,
    dual: f64,
}

fn probe(net: &RoadNetwork, s: NodeId, d: NodeId, lambda: f64, window: f64) -> Probe {
    let opts: Vec<_> = net
        .edges()
        .iter()
        .map(|e| minimize_edge_time(&EdgeCost::solo(e), lambda))
        .collect();
    let tree = dijkstra(net, s, Direction::Forward, |e| opts[e].value);
    let path = tree.path(net, d).expect("destination reachable");
    let duration = path.iter().map(|&e| opts[e].time).sum();
    Probe {
        dual: tree.dist[d] - lambda * window,
        duration,
        path,
    }
}

/// Loopless paths from `s` to `d` in nondecreasing weight order (Yen).
pub struct KShortestPaths<'a, W: Fn(EdgeId) -> f64> {
    net: &'a RoadNetwork,
    source: NodeId,
    target: NodeId,
    weight: W,
    accepted: Vec<Vec<EdgeId>>,
    candidates: BTreeSet<(OrderedCost, Vec<EdgeId>)>,
    started: bool,
}

#[derive(Debug, Clone, Copy)]
struct OrderedCost(f64);

impl PartialEq for OrderedCost {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other).is_eq()
    }
}

impl Eq for OrderedCost {}

impl PartialOrd for OrderedCost {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrderedCost {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl<'a, W: Fn(EdgeId) -> f64> KShortestPaths<'a, W> {
    pub fn new(net: &'a RoadNetwork, source: NodeId, target: NodeId, weight: W) -> Self {
        Self {
            net,
            source,
            target,
            weight,
            accepted: Vec::new(),
            candidates: BTreeSet::new(),
            started: false,
        }
    }

    fn cost(&self, path: &[EdgeId]) -> f64 {
        path.iter().map(|&e| (self.weight)(e)).sum()
    }

    fn nodes(&self, path: &[EdgeId]) -> Vec<NodeId> {
        std::iter::once(self.source)
            .chain(path.iter().map(|&e| self.net.edge(e).head))
            .collect()
    }

    fn spur_candidates(&mut self) {
        let last = self.accepted.last().expect("at least one path").clone();
        let nodes = self.nodes(&last);
        for i in 0..last.len() {
            let root = &last[..i];
            let spur = nodes[i];
            let blocked_edges: HashSet<EdgeId> = self
                .accepted
                .iter()
                .filter(|p| p.len() > i && p[..i] == *root)
                .map(|p| p[i])
                .collect();
            let blocked_nodes: HashSet<NodeId> = nodes[..i].iter().copied().collect();
            let net = self.net;
            let tree = dijkstra(net, spur, Direction::Forward, |e| {
                let edge = net.edge(e);
                if blocked_edges.contains(&e) || blocked_nodes.contains(&edge.head) || blocked_nodes.contains(&edge.tail) {
                    f64::INFINITY
                } else {
                    (self.weight)(e)
                }
            });
            if let Some(tail) = tree.path(net, self.target) {
                let mut full = root.to_vec();
                full.extend(tail);
                let c = self.cost(&full);
                self.candidates.insert((OrderedCost(c), full));
            }
        }
    }
}

impl<W: Fn(EdgeId) -> f64> Iterator for KShortestPaths<'_, W> {
    type Item = (Vec<EdgeId>, f64);

    fn next(&mut self) -> Option<Self::Item> {
        if !self.started {
            self.started = true;
            let tree = dijkstra(self.net, self.source, Direction::Forward, &self.weight);
            let path = tree.path(self.net, self.target)?;
            let c = self.cost(&path);
            self.accepted.push(path.clone());
            return Some((path, c));
        }
        if self.accepted.is_empty() {
            return None;
        }
        self.spur_candidates();
        loop {
            let (OrderedCost(c), path) = self.candidates.pop_first()?;
            if !self.accepted.contains(&path) {
                self.accepted.push(path.clone());
                return Some((path, c));
            }
        }
    }
}

/// Fuel-optimal path and speeds for one truck leaving at `ts` with deadline `td`.
pub fn solve_single_truck(net: &RoadNetwork, s: NodeId, d: NodeId, ts: f64, td: f64) -> Result<SingleTruckSolution> {
    net.check_node(s)?;
    net.check_node(d)?;
    if s == d {
        return Err(Error::InvalidTask("origin equals destination".into()));
    }
    let window = td - ts;
    if !(window > 0.0 && window.is_finite()) {
        return Err(Error::InvalidTask("each window needs T_s < T_d".into()));
    }
    let fastest = shortest_time_tree(net, s, Direction::Forward)?.dist[d];
    if fastest.is_nan() || fastest > window + SLACK_TOL {
        return Err(Error::Infeasible);
    }

    let mut priced: HashMap<Vec<EdgeId>, Option<(Vec<f64>, f64)>> = HashMap::new();
    let mut best: Option<(Vec<EdgeId>, Vec<f64>, f64)> = None;
    let mut price_path = |path: &Vec<EdgeId>, best: &mut Option<(Vec<EdgeId>, Vec<f64>, f64)>| {
        let entry = priced
            .entry(path.clone())
            .or_insert_with(|| optimize_fixed_path(net, path, window).ok());
        if let Some((times, fuel)) = entry {
            if best.as_ref().is_none_or(|b| *fuel < b.2) {
                *best = Some((path.clone(), times.clone(), *fuel));
            }
        }
    };

    let zero = probe(net, s, d, 0.0, window);
    price_path(&zero.path, &mut best);
    let (mut best_dual, mut best_lambda) = (zero.dual, 0.0);
    if zero.duration > window {
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let p = probe(net, s, d, hi, window);
            price_path(&p.path, &mut best);
            if p.dual > best_dual {
                (best_dual, best_lambda) = (p.dual, hi);
            }
            if p.duration <= window {
                break;
            }
            lo = hi;
            hi *= 2.0;
        }
        while hi - lo > 1e-12 * hi.max(1.0) {
            let mid = 0.5 * (lo + hi);
            let p = probe(net, s, d, mid, window);
            price_path(&p.path, &mut best);
            if p.dual > best_dual {
                (best_dual, best_lambda) = (p.dual, mid);
            }
            if p.duration <= window {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }

    let weights: Vec<f64> = net
        .edges()
        .iter()
        .map(|e| minimize_edge_time(&EdgeCost::solo(e), best_lambda).value)
        .collect();
    let mut exact = false;
    let mut lower_bound = best_dual;
    for (path, w) in KShortestPaths::new(net, s, d, |e| weights[e]).take(MAX_ENUMERATED_PATHS) {
        let bound = w - best_lambda * window;
        let incumbent = best.as_ref().map_or(f64::INFINITY, |b| b.2);
        if bound >= incumbent - 1e-12 * incumbent.abs().max(1.0) {
            exact = true;
            break;
        }
        price_path(&path, &mut best);
    }
    let (edges, times, fuel) = best.ok_or(Error::Infeasible)?;
    if exact || best_dual >= fuel {
        exact = true;
        lower_bound = fuel;
    }
    Ok(SingleTruckSolution {
        plan: SoloPlan { edges, times },
        fuel,
        lower_bound: lower_bound.min(fuel),
        lambda: best_lambda,
        exact,
    })
}
