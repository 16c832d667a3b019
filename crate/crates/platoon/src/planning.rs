//! Tasks, plans and exact plan evaluation.

use serde::{Deserialize, Serialize};

use crate::fuel::EdgeCost;
use crate::network::{EdgeId, NodeId, RoadNetwork};
use crate::{Error, Result, SLACK_TOL};

/// Origins, destinations and time windows of the two trucks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskPair {
    pub s1: NodeId,
    pub d1: NodeId,
    pub s2: NodeId,
    pub d2: NodeId,
    /// Earliest departures, hours.
    pub ts1: f64,
    pub ts2: f64,
    /// Latest arrivals, hours.
    pub td1: f64,
    pub td2: f64,
}

impl TaskPair {
    pub fn validate(&self, net: &RoadNetwork) -> Result<()> {
        for v in [self.s1, self.d1, self.s2, self.d2] {
            net.check_node(v)?;
        }
        if self.s1 == self.d1 || self.s2 == self.d2 {
            return Err(Error::InvalidTask("origin equals destination".into()));
        }
        let all_finite = [self.ts1, self.ts2, self.td1, self.td2].iter().all(|x| x.is_finite());
        if !all_finite || self.ts1 >= self.td1 || self.ts2 >= self.td2 {
            return Err(Error::InvalidTask("each window needs T_s < T_d".into()));
        }
        Ok(())
    }

    /// Slacks from the five subpath durations.
    pub fn slacks(&self, tau: [f64; 5]) -> Slacks {
        let [t1, t2, t3, t4, t5] = tau;
        Slacks {
            d1_via1: self.ts1 + t1 + t3 + t4 - self.td1,
            d1_via2: self.ts2 + t2 + t3 + t4 - self.td1,
            d2_via1: self.ts1 + t1 + t3 + t5 - self.td2,
            d2_via2: self.ts2 + t2 + t3 + t5 - self.td2,
        }
    }

    /// Window lengths `T_d - T_s` aligned with the four slacks.
    pub fn slack_scales(&self) -> [f64; 4] {
        [
            self.td1 - self.ts1,
            self.td1 - self.ts2,
            self.td2 - self.ts1,
            self.td2 - self.ts2,
        ]
    }
}

/// Signed deadline violations; a plan is on time iff all four are `<= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slacks {
    /// Truck 1's departure to destination 1.
    pub d1_via1: f64,
    /// Truck 2's departure to destination 1.
    pub d1_via2: f64,
    /// Truck 1's departure to destination 2.
    pub d2_via1: f64,
    /// Truck 2's departure to destination 2.
    pub d2_via2: f64,
}

impl Slacks {
    pub fn to_array(self) -> [f64; 4] {
        [self.d1_via1, self.d1_via2, self.d2_via1, self.d2_via2]
    }

    pub fn max(self) -> f64 {
        self.to_array().into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn feasible(self) -> bool {
        self.max() <= SLACK_TOL
    }
}

/// Edges of one subpath with their travel times.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Subpath {
    pub edges: Vec<EdgeId>,
    pub times: Vec<f64>,
}

impl Subpath {
    pub fn new(edges: Vec<EdgeId>, times: Vec<f64>) -> Self {
        Self { edges, times }
    }

    pub fn duration(&self) -> f64 {
        self.times.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// Merge and split nodes plus the five edge lists, without times.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Skeleton {
    pub merge: NodeId,
    pub split: NodeId,
    /// Truck 1 to merge, truck 2 to merge, platoon, split to d1, split to d2.
    pub paths: [Vec<EdgeId>; 5],
}

/// A joint plan with one platoon segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatoonPlan {
    pub merge: NodeId,
    pub split: NodeId,
    pub subpaths: [Subpath; 5],
    /// Waiting time at each origin.
    pub wait1: f64,
    pub wait2: f64,
}

impl PlatoonPlan {
    /// Builds a plan and sets the origin waits that synchronize the merge.
    pub fn synchronized(merge: NodeId, split: NodeId, subpaths: [Subpath; 5], tasks: &TaskPair) -> Self {
        let a1 = tasks.ts1 + subpaths[0].duration();
        let a2 = tasks.ts2 + subpaths[1].duration();
        let merge_time = a1.max(a2);
        Self {
            merge,
            split,
            subpaths,
            wait1: merge_time - a1,
            wait2: merge_time - a2,
        }
    }

    pub fn durations(&self) -> [f64; 5] {
        std::array::from_fn(|i| self.subpaths[i].duration())
    }

    pub fn skeleton(&self) -> Skeleton {
        Skeleton {
            merge: self.merge,
            split: self.split,
            paths: std::array::from_fn(|i| self.subpaths[i].edges.clone()),
        }
    }

    /// Miles driven in platoon and total miles driven by both trucks.
    pub fn platoon_miles(&self, net: &RoadNetwork) -> (f64, f64) {
        let len: [f64; 5] = std::array::from_fn(|i| net.path_length(&self.subpaths[i].edges));
        (2.0 * len[2], len[0] + len[1] + 2.0 * len[2] + len[3] + len[4])
    }
}

/// A single truck's path with per-edge times.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SoloPlan {
    pub edges: Vec<EdgeId>,
    pub times: Vec<f64>,
}

impl SoloPlan {
    pub fn duration(&self) -> f64 {
        self.times.iter().sum()
    }
}

/// Outcome of [`evaluate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub total_fuel: f64,
    pub slacks: Slacks,
    pub merge_time: f64,
    pub arrival1: f64,
    pub arrival2: f64,
}

/// Outcome of [`evaluate_separate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparateEvaluation {
    pub total_fuel: f64,
    pub fuel1: f64,
    pub fuel2: f64,
    /// `T_s + duration - T_d` per truck.
    pub slack1: f64,
    pub slack2: f64,
    pub arrival1: f64,
    pub arrival2: f64,
}

impl SeparateEvaluation {
    pub fn feasible(&self) -> bool {
        self.slack1 <= SLACK_TOL && self.slack2 <= SLACK_TOL
    }
}

/// Checks that `edges` form a walk from `from` to `to`.
pub fn check_walk(net: &RoadNetwork, edges: &[EdgeId], from: NodeId, to: NodeId, subpath: usize) -> Result<()> {
    let mut cur = from;
    for &e in edges {
        if e >= net.edge_count() {
            return Err(Error::Structure {
                subpath,
                reason: format!("edge index {e} out of range"),
            });
        }
        let edge = net.edge(e);
        if edge.tail != cur {
            return Err(Error::Structure {
                subpath,
                reason: format!("edge {} does not start at node {}", edge.id, net.node_name(cur)),
            });
        }
        cur = edge.head;
    }
    if cur != to {
        return Err(Error::Structure {
            subpath,
            reason: format!("walk ends at {} instead of {}", net.node_name(cur), net.node_name(to)),
        });
    }
    Ok(())
}

fn subpath_fuel(net: &RoadNetwork, sp: &Subpath, platoon_eta: Option<f64>, index: usize) -> Result<f64> {
    if sp.edges.len() != sp.times.len() {
        return Err(Error::Structure {
            subpath: index,
            reason: "edge and time lists differ in length".into(),
        });
    }
    let mut total = 0.0;
    for (&e, &t) in sp.edges.iter().zip(&sp.times) {
        let ec = match platoon_eta {
            Some(eta) => EdgeCost::platoon(net.edge(e), eta),
            None => EdgeCost::solo(net.edge(e)),
        };
        total += ec.cost(t).map_err(|err| Error::Structure {
            subpath: index,
            reason: format!("edge {}: {err}", net.edge(e).id),
        })?;
    }
    Ok(total)
}

/// Total fuel, slacks and arrivals of a platoon plan.
///
/// The merge happens at `max(T_s1 + dur1, T_s2 + dur2)`; the stored waits are
/// informational. Slacks are measured from the synchronized merge time, so
/// both slacks of one destination coincide; they are all `<= 0` exactly when
/// the raw slacks of [`TaskPair::slacks`] are. Subpath indices in errors are
/// 1-based.
pub fn evaluate(net: &RoadNetwork, tasks: &TaskPair, plan: &PlatoonPlan, eta: f64) -> Result<Evaluation> {
    let ends = [
        (tasks.s1, plan.merge),
        (tasks.s2, plan.merge),
        (plan.merge, plan.split),
        (plan.split, tasks.d1),
        (plan.split, tasks.d2),
    ];
    let mut fuel = 0.0;
    for (i, (sp, &(from, to))) in plan.subpaths.iter().zip(&ends).enumerate() {
        check_walk(net, &sp.edges, from, to, i + 1)?;
        let platoon = if i == 2 { Some(eta) } else { None };
        fuel += subpath_fuel(net, sp, platoon, i + 1)?;
    }
    let tau = plan.durations();
    let merge_time = (tasks.ts1 + tau[0]).max(tasks.ts2 + tau[1]);
    let synced = TaskPair { ts1: merge_time - tau[0], ts2: merge_time - tau[1], ..*tasks };
    Ok(Evaluation {
        total_fuel: fuel,
        slacks: synced.slacks(tau),
        merge_time,
        arrival1: merge_time + tau[2] + tau[3],
        arrival2: merge_time + tau[2] + tau[4],
    })
}

/// Fuel and slacks when the trucks drive on their own.
pub fn evaluate_separate(net: &RoadNetwork, tasks: &TaskPair, plan1: &SoloPlan, plan2: &SoloPlan) -> Result<SeparateEvaluation> {
    let mut fuel = [0.0; 2];
    for (k, (plan, from, to)) in [(plan1, tasks.s1, tasks.d1), (plan2, tasks.s2, tasks.d2)]
        .into_iter()
        .enumerate()
    {
        check_walk(net, &plan.edges, from, to, k + 1)?;
        let sp = Subpath::new(plan.edges.clone(), plan.times.clone());
        fuel[k] = subpath_fuel(net, &sp, None, k + 1)?;
    }
    let arrival1 = tasks.ts1 + plan1.duration();
    let arrival2 = tasks.ts2 + plan2.duration();
    Ok(SeparateEvaluation {
        total_fuel: fuel[0] + fuel[1],
        fuel1: fuel[0],
        fuel2: fuel[1],
        slack1: arrival1 - tasks.td1,
        slack2: arrival2 - tasks.td2,
        arrival1,
        arrival2,
    })
}
