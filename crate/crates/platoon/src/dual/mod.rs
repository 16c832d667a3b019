//! Projected dual-subgradient ascent on the four deadline multipliers.
//!
//! Every iterate solves the inner problem exactly, so `D(lambda[k])` is a
//! valid lower bound on the optimal fuel and the slacks of the inner plan are
//! a subgradient. The solver keeps the best dual value, the cheapest
//! deadline-feasible plan seen so far, and re-optimizes speeds on every new
//! skeleton the inner problem proposes.

mod recover;

use std::collections::HashMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use recover::{primal_recover, primal_recover_with, SyncRule, REPAIR_TOL};

use crate::baselines::solve_single_truck;
use crate::feasibility::{check_feasible, FastestTables};
use crate::inner::{generalized_weights, solve_path_platoon};
use crate::network::RoadNetwork;
use crate::planning::{evaluate, PlatoonPlan, Skeleton, SoloPlan, TaskPair};
use crate::{Error, Result, SLACK_TOL};

/// Step-size rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    /// `phi_k = c / sqrt(K)` for every `k`.
    ConstantOverSqrtK,
    /// `phi_k = c / sqrt(k + 1)`.
    Adaptive,
}

/// Step sizes `phi_0 .. phi_{K-1}`.
pub fn step_schedule(kind: StepKind, iterations: usize, scale: f64) -> Vec<f64> {
    (0..iterations)
        .map(|k| match kind {
            StepKind::ConstantOverSqrtK => scale / (iterations as f64).sqrt(),
            StepKind::Adaptive => scale / ((k + 1) as f64).sqrt(),
        })
        .collect()
}

/// Solver settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DualConfig {
    /// Iteration budget `K`.
    pub max_iterations: usize,
    pub step: StepKind,
    /// Step scale `c`; derived from the first iterate when absent.
    pub step_scale: Option<f64>,
    /// Stop once `fuel - best_dual <= target_gap * fuel`. Zero disables.
    pub target_gap: f64,
    /// `|delta_j| <= subgradient_tol * window_j` counts as zero.
    pub subgradient_tol: f64,
    /// Maximum number of skeletons whose speeds are re-optimized.
    pub polish_limit: usize,
    pub record_trace: bool,
}

impl Default for DualConfig {
    fn default() -> Self {
        Self {
            max_iterations: 400,
            step: StepKind::ConstantOverSqrtK,
            step_scale: None,
            target_gap: 1e-3,
            subgradient_tol: 1e-6,
            polish_limit: 32,
            record_trace: true,
        }
    }
}

impl DualConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be at least 1".into()));
        }
        if let Some(c) = self.step_scale {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::InvalidParameter("step_scale must be positive".into()));
            }
        }
        if [self.target_gap, self.subgradient_tol].iter().any(|t| t.is_nan() || *t < 0.0) {
            return Err(Error::InvalidParameter("tolerances must be nonnegative".into()));
        }
        Ok(())
    }
}

/// How a solve ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// Zero subgradient or zero gap: the plan is optimal.
    Optimal,
    /// Feasible plan with a certified gap.
    FeasibleWithBound,
    /// No dual iterate was feasible; the plan comes from speed re-optimization.
    Recovered,
    /// No platoon plan was usable; the trucks drive separately.
    SeparateFallback,
    Infeasible,
}

impl Status {
    pub fn has_plan(self) -> bool {
        self != Status::Infeasible
    }
}

/// The plan a solver settled on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Platoon { plan: PlatoonPlan },
    Separate { truck1: SoloPlan, truck2: SoloPlan },
    None,
}

/// One row of the iteration trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    pub lambda: [f64; 4],
    pub dual_value: f64,
    pub best_dual: f64,
    pub slacks: [f64; 4],
    pub feasible: bool,
    /// Fuel of the iterate's own plan.
    pub fuel: f64,
}

/// Tab-separated trace with a header line.
pub fn trace_table(rows: &[TraceRow]) -> String {
    let mut out = String::from("k\tdual\tbest_dual\tlambda1\tlambda2\tlambda3\tlambda4\tdelta1\tdelta2\tdelta3\tdelta4\tfeasible\tfuel\n");
    for r in rows {
        let l = r.lambda;
        let d = r.slacks;
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            r.k, r.dual_value, r.best_dual, l[0], l[1], l[2], l[3], d[0], d[1], d[2], d[3], r.feasible, r.fuel
        ));
    }
    out
}

/// Result of any solver in this crate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: Status,
    pub outcome: Outcome,
    /// Joint fuel of the returned plan; infinite when there is none.
    pub total_fuel: f64,
    /// Best dual value `D-bar`, when the solver computes one.
    pub lower_bound: Option<f64>,
    /// Posterior bound `B` at the iterate whose plan is returned.
    pub posterior_bound: Option<f64>,
    /// `total_fuel - lower_bound`.
    pub gap_bound: Option<f64>,
    pub iterations: usize,
    pub wall_time: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceRow>,
}

impl SolveReport {
    pub fn infeasible() -> Self {
        Self {
            status: Status::Infeasible,
            outcome: Outcome::None,
            total_fuel: f64::INFINITY,
            lower_bound: None,
            posterior_bound: None,
            gap_bound: None,
            iterations: 0,
            wall_time: 0.0,
            trace: Vec::new(),
        }
    }

    pub fn platoon_plan(&self) -> Option<&PlatoonPlan> {
        match &self.outcome {
            Outcome::Platoon { plan } => Some(plan),
            _ => None,
        }
    }
}

/// Posterior bound `-sum lambda_j delta_j` at a feasible iterate.
pub fn posterior_bound(lambda: [f64; 4], slacks: [f64; 4]) -> Result<f64> {
    if slacks.iter().any(|&s| s > SLACK_TOL) {
        return Err(Error::Infeasible);
    }
    let b: f64 = lambda.iter().zip(slacks).map(|(l, s)| -l * s).sum();
    Ok(b.max(0.0))
}

/// Bookkeeping of one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub lambda: [f64; 4],
    pub iteration: usize,
    pub best_dual: f64,
    pub best_lambda: [f64; 4],
    /// Iterate index and fuel of the cheapest feasible raw iterate.
    pub best_feasible: Option<(usize, f64)>,
    pub trace: Vec<TraceRow>,
}

impl DualState {
    fn new() -> Self {
        Self {
            lambda: [0.0; 4],
            iteration: 0,
            best_dual: f64::NEG_INFINITY,
            best_lambda: [0.0; 4],
            best_feasible: None,
            trace: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Source {
    Iterate,
    Polished,
}

struct Candidate {
    plan: PlatoonPlan,
    fuel: f64,
    /// Best dual value among the iterates that proposed this skeleton.
    dual_at: f64,
    source: Source,
}

struct SkeletonInfo {
    best_dual: f64,
    polished: Option<f64>,
}

fn plan_fuel(net: &RoadNetwork, tasks: &TaskPair, plan: &PlatoonPlan, eta: f64) -> Result<(f64, [f64; 4])> {
    let ev = evaluate(net, tasks, plan, eta)?;
    Ok((ev.total_fuel, tasks.slacks(plan.durations()).to_array()))
}

/// Runs the subgradient method and returns the cheapest certified plan.
///
/// Errors with [`Error::Infeasible`] when no single-platoon plan can meet the
/// deadlines.
pub fn dual_solve(net: &RoadNetwork, tasks: &TaskPair, eta: f64, config: &DualConfig) -> Result<SolveReport> {
    let (report, _) = dual_solve_with_state(net, tasks, eta, config)?;
    Ok(report)
}

/// [`dual_solve`] that also hands back the final [`DualState`].
pub fn dual_solve_with_state(
    net: &RoadNetwork,
    tasks: &TaskPair,
    eta: f64,
    config: &DualConfig,
) -> Result<(SolveReport, DualState)> {
    config.validate()?;
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidParameter(format!("eta must lie in (0, 1), got {eta}")));
    }
    let start = Instant::now();
    let report = check_feasible(net, tasks)?;
    let Some((wm, ws)) = report.witness else {
        return Err(Error::Infeasible);
    };
    let windows = tasks.slack_scales();
    let mut state = DualState::new();
    let mut best: Option<Candidate> = None;
    let mut any_feasible_iterate = false;
    let mut skeletons: HashMap<Skeleton, SkeletonInfo> = HashMap::new();
    let mut polish_calls = 0usize;
    let mut steps: Vec<f64> = Vec::new();
    let mut zero_subgradient = false;

    let consider = |best: &mut Option<Candidate>, cand: Candidate| {
        if best.as_ref().is_none_or(|b| cand.fuel < b.fuel) {
            *best = Some(cand);
        }
    };

    for k in 0..config.max_iterations {
        state.iteration = k;
        let weights = generalized_weights(net, state.lambda, eta)?;
        let inner = solve_path_platoon(net, tasks, &weights)?;
        let plan = inner.plan(tasks, &weights);
        let (fuel, slacks) = plan_fuel(net, tasks, &plan, eta)?;
        let d = inner.dual_value;
        if d > state.best_dual {
            state.best_dual = d;
            state.best_lambda = state.lambda;
        }
        let feasible = slacks.iter().all(|&s| s <= SLACK_TOL);
        if config.record_trace {
            state.trace.push(TraceRow {
                k,
                lambda: state.lambda,
                dual_value: d,
                best_dual: state.best_dual,
                slacks,
                feasible,
                fuel,
            });
        }

        let info = skeletons.entry(inner.skeleton.clone()).or_insert(SkeletonInfo {
            best_dual: d,
            polished: None,
        });
        info.best_dual = info.best_dual.max(d);
        let dual_at = info.best_dual;
        if feasible {
            any_feasible_iterate = true;
            if state.best_feasible.is_none_or(|(_, f)| fuel < f) {
                state.best_feasible = Some((k, fuel));
            }
            consider(&mut best, Candidate { plan, fuel, dual_at: d, source: Source::Iterate });
        }
        if info.polished.is_none() && polish_calls < config.polish_limit {
            polish_calls += 1;
            if let Ok(p) = primal_recover(net, tasks, eta, &inner.skeleton) {
                let (pf, _) = plan_fuel(net, tasks, &p, eta)?;
                info.polished = Some(pf);
                consider(&mut best, Candidate { plan: p, fuel: pf, dual_at, source: Source::Polished });
            } else {
                info.polished = Some(f64::INFINITY);
            }
        } else if let (Some(b), Some(pf)) = (best.as_mut(), info.polished) {
            // A later iterate may certify the same polished plan more tightly.
            if b.source == Source::Polished && b.plan.skeleton() == inner.skeleton && pf == b.fuel {
                b.dual_at = b.dual_at.max(dual_at);
            }
        }

        let zero = slacks
            .iter()
            .zip(windows)
            .all(|(s, w)| s.abs() <= config.subgradient_tol * w);
        if zero {
            zero_subgradient = true;
            break;
        }
        if let Some(b) = &best {
            let gap = b.fuel - state.best_dual;
            if config.target_gap > 0.0 && gap <= config.target_gap * b.fuel {
                break;
            }
            if gap <= 1e-12 * b.fuel.max(1.0) {
                break;
            }
        }
        if k == 0 {
            let scale = config.step_scale.unwrap_or_else(|| {
                let norm: f64 = slacks.iter().map(|s| s.abs()).sum();
                fuel / (norm + 1.0)
            });
            steps = step_schedule(config.step, config.max_iterations, scale);
        }
        for (l, s) in state.lambda.iter_mut().zip(slacks) {
            *l = (*l + steps[k] * s).max(0.0);
        }
    }

    if best.is_none() {
        let witness = FastestTables::new(net, tasks)?
            .fastest_plan(net, tasks, wm, ws)
            .expect("witness legs are reachable");
        if let Ok(p) = primal_recover(net, tasks, eta, &witness.skeleton()) {
            let (pf, _) = plan_fuel(net, tasks, &p, eta)?;
            best = Some(Candidate { plan: p, fuel: pf, dual_at: state.best_dual, source: Source::Polished });
        }
    }

    let iterations = state.iteration + 1;
    let wall = start.elapsed().as_secs_f64();
    let trace = state.trace.clone();
    let report = match best {
        Some(c) => {
            let gap = c.fuel - state.best_dual;
            let status = if zero_subgradient || gap <= 1e-9 * c.fuel.max(1.0) {
                Status::Optimal
            } else if c.source == Source::Polished && !any_feasible_iterate {
                Status::Recovered
            } else {
                Status::FeasibleWithBound
            };
            SolveReport {
                status,
                outcome: Outcome::Platoon { plan: c.plan },
                total_fuel: c.fuel,
                lower_bound: Some(state.best_dual),
                posterior_bound: Some((c.fuel - c.dual_at).max(0.0)),
                gap_bound: Some(gap),
                iterations,
                wall_time: wall,
                trace,
            }
        }
        None => separate_fallback(net, tasks, state.best_dual, iterations, start, trace),
    };
    Ok((report, state))
}

fn separate_fallback(
    net: &RoadNetwork,
    tasks: &TaskPair,
    best_dual: f64,
    iterations: usize,
    start: Instant,
    trace: Vec<TraceRow>,
) -> SolveReport {
    let one = solve_single_truck(net, tasks.s1, tasks.d1, tasks.ts1, tasks.td1);
    let two = solve_single_truck(net, tasks.s2, tasks.d2, tasks.ts2, tasks.td2);
    match (one, two) {
        (Ok(a), Ok(b)) => SolveReport {
            status: Status::SeparateFallback,
            total_fuel: a.fuel + b.fuel,
            outcome: Outcome::Separate { truck1: a.plan, truck2: b.plan },
            lower_bound: Some(best_dual),
            posterior_bound: None,
            gap_bound: Some(a.fuel + b.fuel - best_dual),
            iterations,
            wall_time: start.elapsed().as_secs_f64(),
            trace,
        },
        _ => SolveReport {
            iterations,
            wall_time: start.elapsed().as_secs_f64(),
            trace,
            ..SolveReport::infeasible()
        },
    }
}
