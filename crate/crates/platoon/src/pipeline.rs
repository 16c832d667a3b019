//! End-to-end flow: drive separately, check platoon feasibility, solve, and
//! keep the cheaper of the two.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::{solve_single_truck, SingleTruckSolution};
use crate::dual::{dual_solve, DualConfig, Outcome, SolveReport, Status};
use crate::feasibility::check_feasible;
use crate::fptas::fptas_solve;
use crate::network::RoadNetwork;
use crate::planning::TaskPair;
use crate::{Error, Result};

/// Schema tag of instance documents.
pub const INSTANCE_SCHEMA: &str = "platoon-instance/1";
/// Schema tag of pipeline reports.
pub const REPORT_SCHEMA: &str = "platoon-report/1";

/// Which platoon solver the pipeline runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Dual,
    Fptas,
}

/// Pipeline settings; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub method: Method,
    pub dual: DualConfig,
    /// Approximation parameter of the rounding scheme.
    pub eps: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            method: Method::Dual,
            dual: DualConfig::default(),
            eps: 0.1,
        }
    }
}

/// Task pair by node names plus the platoon saving ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDocument {
    #[serde(default)]
    pub schema: Option<String>,
    pub s1: String,
    pub d1: String,
    pub s2: String,
    pub d2: String,
    #[serde(default)]
    pub ts1: f64,
    #[serde(default)]
    pub ts2: f64,
    pub td1: f64,
    pub td2: f64,
    pub eta: f64,
}

impl InstanceDocument {
    pub fn from_tasks(net: &RoadNetwork, tasks: &TaskPair, eta: f64) -> Self {
        Self {
            schema: Some(INSTANCE_SCHEMA.into()),
            s1: net.node_name(tasks.s1).into(),
            d1: net.node_name(tasks.d1).into(),
            s2: net.node_name(tasks.s2).into(),
            d2: net.node_name(tasks.d2).into(),
            ts1: tasks.ts1,
            ts2: tasks.ts2,
            td1: tasks.td1,
            td2: tasks.td2,
            eta,
        }
    }

    /// Resolves node names and validates the task pair and `eta`.
    pub fn resolve(&self, net: &RoadNetwork) -> Result<(TaskPair, f64)> {
        if let Some(s) = &self.schema {
            if s != INSTANCE_SCHEMA {
                return Err(Error::InvalidParameter(format!("unsupported instance schema `{s}`")));
            }
        }
        let tasks = TaskPair {
            s1: net.node(&self.s1)?,
            d1: net.node(&self.d1)?,
            s2: net.node(&self.s2)?,
            d2: net.node(&self.d2)?,
            ts1: self.ts1,
            ts2: self.ts2,
            td1: self.td1,
            td2: self.td2,
        };
        tasks.validate(net)?;
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::InvalidParameter(format!("eta must lie in (0, 1), got {}", self.eta)));
        }
        Ok((tasks, self.eta))
    }
}

/// Which alternative the pipeline returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Choice {
    Platoon,
    Separate,
}

/// Pipeline output document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub schema: String,
    pub status: Status,
    pub choice: Choice,
    pub total_fuel: f64,
    /// Separate-driving optimum, when both trucks can make it alone.
    pub separate_fuel: Option<f64>,
    /// Platoon solver fuel, when a platoon plan exists.
    pub platoon_fuel: Option<f64>,
    /// `min(platoon lower bound, separate lower bound)`.
    pub lower_bound: Option<f64>,
    pub posterior_bound: Option<f64>,
    pub gap_bound: Option<f64>,
    pub platoon_feasible: bool,
    pub outcome: Outcome,
    /// Full platoon solver report, when it ran.
    pub solver: Option<SolveReport>,
    pub wall_time: f64,
}

/// Runs the flow on a resolved instance.
pub fn run_pipeline(net: &RoadNetwork, tasks: &TaskPair, eta: f64, config: &PipelineConfig) -> Result<PipelineReport> {
    let start = Instant::now();
    tasks.validate(net)?;
    config.dual.validate()?;
    let separate = separate_optimum(net, tasks);
    let feasible = check_feasible(net, tasks)?.feasible;
    let solver = if feasible {
        Some(match config.method {
            Method::Dual => dual_solve(net, tasks, eta, &config.dual)?,
            Method::Fptas => fptas_solve(net, tasks, eta, config.eps)?,
        })
    } else {
        None
    };

    let platoon = solver
        .as_ref()
        .filter(|r| matches!(r.outcome, Outcome::Platoon { .. }));
    let platoon_fuel = platoon.map(|r| r.total_fuel);
    let separate_fuel = separate.as_ref().map(|(a, b)| a.fuel + b.fuel);
    let separate_lb = separate.as_ref().map(|(a, b)| a.lower_bound + b.lower_bound);
    let platoon_lb = solver.as_ref().and_then(|r| r.lower_bound);
    let lower_bound = match (platoon_lb, separate_lb) {
        (Some(p), Some(s)) => Some(p.min(s)),
        (Some(p), None) => Some(p),
        // Without a platoon bound only the separate alternative is certified.
        (None, Some(s)) if !feasible => Some(s),
        _ => None,
    };

    let use_platoon = match (platoon_fuel, separate_fuel) {
        (Some(p), Some(s)) => p <= s,
        (Some(_), None) => true,
        _ => false,
    };
    let (status, choice, total_fuel, outcome) = if use_platoon {
        let r = platoon.expect("platoon fuel implies a report");
        (r.status, Choice::Platoon, r.total_fuel, r.outcome.clone())
    } else if let Some((a, b)) = separate {
        let status = if feasible { Status::FeasibleWithBound } else { Status::SeparateFallback };
        let outcome = Outcome::Separate { truck1: a.plan, truck2: b.plan };
        (status, Choice::Separate, a.fuel + b.fuel, outcome)
    } else {
        (Status::Infeasible, Choice::Separate, f64::INFINITY, Outcome::None)
    };
    let gap_bound = lower_bound.filter(|_| total_fuel.is_finite()).map(|lb| total_fuel - lb);
    Ok(PipelineReport {
        schema: REPORT_SCHEMA.into(),
        status,
        choice,
        total_fuel,
        separate_fuel,
        platoon_fuel,
        lower_bound,
        posterior_bound: if use_platoon { platoon.and_then(|r| r.posterior_bound) } else { None },
        gap_bound,
        platoon_feasible: feasible,
        outcome,
        solver,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

fn separate_optimum(net: &RoadNetwork, tasks: &TaskPair) -> Option<(SingleTruckSolution, SingleTruckSolution)> {
    let a = solve_single_truck(net, tasks.s1, tasks.d1, tasks.ts1, tasks.td1).ok()?;
    let b = solve_single_truck(net, tasks.s2, tasks.d2, tasks.ts2, tasks.td2).ok()?;
    Some((a, b))
}
