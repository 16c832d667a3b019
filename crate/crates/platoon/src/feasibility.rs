//! Can any single-platoon plan meet both deadlines?
//!
//! With every edge at its fastest time, a merge/split pair `(m, s)` is
//! feasible iff the fastest subpath durations satisfy the four slack
//! conditions. Four one-to-all trees (from `s1`, from `s2`, to `d1`, to `d2`)
//! plus one tree per merge candidate give every duration, so the check costs
//! `O(N (M + N log N) + N^2)`.

use serde::{Deserialize, Serialize};

use crate::network::{shortest_time_tree, Direction, NodeId, RoadNetwork, ShortestTree};
use crate::planning::{PlatoonPlan, Subpath, TaskPair};
use crate::Result;

/// Verdict of [`check_feasible`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// First feasible `(merge, split)` in node-id order.
    pub witness: Option<(NodeId, NodeId)>,
}

/// Fastest-time trees around a task pair.
#[derive(Debug, Clone)]
pub struct FastestTables {
    pub from_s1: ShortestTree,
    pub from_s2: ShortestTree,
    pub to_d1: ShortestTree,
    pub to_d2: ShortestTree,
    /// One forward tree per node, used for the platoon leg.
    pub from_node: Vec<ShortestTree>,
}

impl FastestTables {
    pub fn new(net: &RoadNetwork, tasks: &TaskPair) -> Result<Self> {
        tasks.validate(net)?;
        let from_node = (0..net.node_count())
            .map(|v| shortest_time_tree(net, v, Direction::Forward))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            from_s1: shortest_time_tree(net, tasks.s1, Direction::Forward)?,
            from_s2: shortest_time_tree(net, tasks.s2, Direction::Forward)?,
            to_d1: shortest_time_tree(net, tasks.d1, Direction::Reverse)?,
            to_d2: shortest_time_tree(net, tasks.d2, Direction::Reverse)?,
            from_node,
        })
    }

    /// Fastest durations of the five subpaths for a merge/split pair.
    pub fn durations(&self, merge: NodeId, split: NodeId) -> [f64; 5] {
        [
            self.from_s1.dist[merge],
            self.from_s2.dist[merge],
            self.from_node[merge].dist[split],
            self.to_d1.dist[split],
            self.to_d2.dist[split],
        ]
    }

    /// Whether the pair meets all four deadline conditions at fastest speeds.
    pub fn pair_feasible(&self, tasks: &TaskPair, merge: NodeId, split: NodeId) -> bool {
        let tau = self.durations(merge, split);
        if tau.iter().any(|t| !t.is_finite()) {
            return false;
        }
        let slack = tasks.slacks(tau).to_array();
        let scale = tasks.td1.abs().max(tasks.td2.abs()).max(1.0);
        slack.iter().all(|&s| s <= 1e-12 * scale)
    }

    /// The pair's fastest plan with origin waits, if every leg is reachable.
    pub fn fastest_plan(&self, net: &RoadNetwork, tasks: &TaskPair, merge: NodeId, split: NodeId) -> Option<PlatoonPlan> {
        let paths = [
            self.from_s1.path(net, merge)?,
            self.from_s2.path(net, merge)?,
            self.from_node[merge].path(net, split)?,
            self.to_d1.path(net, split)?,
            self.to_d2.path(net, split)?,
        ];
        let subpaths = paths.map(|edges| {
            let times = edges.iter().map(|&e| net.edge(e).t_min()).collect();
            Subpath::new(edges, times)
        });
        Some(PlatoonPlan::synchronized(merge, split, subpaths, tasks))
    }
}

/// Decides feasibility and returns the first witness in `(merge, split)` order.
pub fn check_feasible(net: &RoadNetwork, tasks: &TaskPair) -> Result<FeasibilityReport> {
    let tables = FastestTables::new(net, tasks)?;
    for merge in 0..net.node_count() {
        for split in 0..net.node_count() {
            if tables.pair_feasible(tasks, merge, split) {
                return Ok(FeasibilityReport {
                    feasible: true,
                    witness: Some((merge, split)),
                });
            }
        }
    }
    Ok(FeasibilityReport {
        feasible: false,
        witness: None,
    })
}
