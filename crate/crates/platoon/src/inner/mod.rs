//! The Lagrangian inner problem.
//!
//! For multipliers `lambda = (l1, l2, l3, l4) >= 0` on the four deadline
//! slacks, the Lagrangian separates into per-edge speed problems and a purely
//! combinatorial path problem. Each edge on subpath `i` faces a price per hour
//! equal to the sum of the multipliers whose slack contains that subpath:
//!
//! | subpath | price |
//! |---|---|
//! | 1: `s1 -> merge` | `l1 + l3` |
//! | 2: `s2 -> merge` | `l2 + l4` |
//! | 3: platoon | `l1 + l2 + l3 + l4` |
//! | 4: `split -> d1` | `l1 + l2` |
//! | 5: `split -> d2` | `l3 + l4` |
//!
//! The minimized edge cost becomes the edge weight, and the best plan is five
//! shortest paths around the best merge/split pair.

mod decompose;

pub use decompose::{decompose_fractional, Component, FractionalSolution};

use crate::fuel::{minimize_edge_time, EdgeCost};
use crate::network::{dijkstra, Direction, RoadNetwork, ShortestTree};
use crate::planning::{PlatoonPlan, Skeleton, Subpath, TaskPair};
use crate::{Error, Result};

/// Per-subpath edge prices induced by the multipliers.
pub fn subpath_prices(lambda: [f64; 4]) -> [f64; 5] {
    let [l1, l2, l3, l4] = lambda;
    [l1 + l3, l2 + l4, l1 + l2 + l3 + l4, l1 + l2, l3 + l4]
}

/// The plan-independent part of the dual function.
pub fn h_value(tasks: &TaskPair, lambda: [f64; 4]) -> f64 {
    let [l1, l2, l3, l4] = lambda;
    l1 * (tasks.ts1 - tasks.td1)
        + l2 * (tasks.ts2 - tasks.td1)
        + l3 * (tasks.ts1 - tasks.td2)
        + l4 * (tasks.ts2 - tasks.td2)
}

/// Minimized generalized edge costs and their minimizing times.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedWeights {
    pub lambda: [f64; 4],
    /// `weight[i][e]` for subpath `i` (0-based) and edge `e`.
    pub weight: [Vec<f64>; 5],
    pub time: [Vec<f64>; 5],
}

/// Solves every per-edge speed problem for the given multipliers.
pub fn generalized_weights(net: &RoadNetwork, lambda: [f64; 4], eta: f64) -> Result<GeneralizedWeights> {
    for (index, &value) in lambda.iter().enumerate() {
        if value < 0.0 || !value.is_finite() {
            return Err(Error::NegativeMultiplier { index, value });
        }
    }
    let prices = subpath_prices(lambda);
    let mut weight: [Vec<f64>; 5] = Default::default();
    let mut time: [Vec<f64>; 5] = Default::default();
    for i in 0..5 {
        weight[i].reserve(net.edge_count());
        time[i].reserve(net.edge_count());
    }
    for edge in net.edges() {
        let solo = EdgeCost::solo(edge);
        let platoon = EdgeCost::platoon(edge, eta);
        for i in 0..5 {
            let ec = if i == 2 { &platoon } else { &solo };
            let opt = minimize_edge_time(ec, prices[i]);
            weight[i].push(opt.value);
            time[i].push(opt.time);
        }
    }
    Ok(GeneralizedWeights { lambda, weight, time })
}

/// Optimal inner plan for fixed multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerSolution {
    pub skeleton: Skeleton,
    /// Sum of generalized weights along the five subpaths.
    pub objective: f64,
    /// `h(lambda) + objective`, a lower bound on the optimal fuel.
    pub dual_value: f64,
}

impl InnerSolution {
    /// The plan with the minimizing per-edge times.
    pub fn plan(&self, tasks: &TaskPair, weights: &GeneralizedWeights) -> PlatoonPlan {
        let sk = &self.skeleton;
        let subpaths = std::array::from_fn(|i| {
            let edges = sk.paths[i].clone();
            let times = edges.iter().map(|&e| weights.time[i][e]).collect();
            Subpath::new(edges, times)
        });
        PlatoonPlan::synchronized(sk.merge, sk.split, subpaths, tasks)
    }
}

/// Trees shared by every merge/split candidate.
struct EndpointTrees {
    from_s1: ShortestTree,
    from_s2: ShortestTree,
    to_d1: ShortestTree,
    to_d2: ShortestTree,
    from_merge: Vec<ShortestTree>,
}

/// Five shortest paths around the best merge/split pair under arbitrary
/// nonnegative per-subpath edge weights.
///
/// Ties go to the lexicographically smallest `(merge, split)`; within a tree,
/// to the lowest node id and then the lowest edge id. Returns the skeleton
/// and its total weight.
pub fn best_pair(net: &RoadNetwork, tasks: &TaskPair, weights: [&[f64]; 5]) -> Result<(Skeleton, f64)> {
    tasks.validate(net)?;
    let trees = EndpointTrees {
        from_s1: dijkstra(net, tasks.s1, Direction::Forward, |e| weights[0][e]),
        from_s2: dijkstra(net, tasks.s2, Direction::Forward, |e| weights[1][e]),
        to_d1: dijkstra(net, tasks.d1, Direction::Reverse, |e| weights[3][e]),
        to_d2: dijkstra(net, tasks.d2, Direction::Reverse, |e| weights[4][e]),
        from_merge: (0..net.node_count())
            .map(|m| dijkstra(net, m, Direction::Forward, |e| weights[2][e]))
            .collect(),
    };
    let mut best: Option<(f64, usize, usize)> = None;
    for m in 0..net.node_count() {
        let pre = trees.from_s1.dist[m] + trees.from_s2.dist[m];
        if !pre.is_finite() {
            continue;
        }
        for s in 0..net.node_count() {
            let total = pre + trees.from_merge[m].dist[s] + trees.to_d1.dist[s] + trees.to_d2.dist[s];
            if total.is_finite() && best.is_none_or(|(b, _, _)| total < b) {
                best = Some((total, m, s));
            }
        }
    }
    let (objective, merge, split) = best.ok_or(Error::NoPlatoonPair)?;
    let path = |t: &ShortestTree, v| t.path(net, v).expect("reachable by construction");
    let skeleton = Skeleton {
        merge,
        split,
        paths: [
            path(&trees.from_s1, merge),
            path(&trees.from_s2, merge),
            path(&trees.from_merge[merge], split),
            path(&trees.to_d1, split),
            path(&trees.to_d2, split),
        ],
    };
    Ok((skeleton, objective))
}

/// Exact minimizer of the inner path-and-platooning problem.
pub fn solve_path_platoon(net: &RoadNetwork, tasks: &TaskPair, weights: &GeneralizedWeights) -> Result<InnerSolution> {
    let w: [&[f64]; 5] = std::array::from_fn(|i| weights.weight[i].as_slice());
    let (skeleton, objective) = best_pair(net, tasks, w)?;
    Ok(InnerSolution {
        skeleton,
        objective,
        dual_value: h_value(tasks, weights.lambda) + objective,
    })
}
