//! Per-instance evaluation metrics.

use serde::{Deserialize, Serialize};

use crate::dual::{Outcome, SolveReport};
use crate::network::{shortest_time_tree, Direction, RoadNetwork};
use crate::planning::TaskPair;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Platoon miles (both trucks) over all miles driven.
    pub platooning_ratio: f64,
    /// Shared length of the fastest paths over their mean length.
    pub spor: f64,
    /// Share of the platooning potential captured, measured against the
    /// solver's dual bound; `None` when there is no potential.
    pub achieving_ratio: Option<f64>,
    /// Deadline window over fastest trip time, per truck.
    pub delay_factor: [f64; 2],
    /// Relative saving `(other - ours) / other` against driving separately
    /// and each baseline.
    pub saving_vs_separate: f64,
    pub saving_vs_p: Option<f64>,
    pub saving_vs_s: Option<f64>,
}

/// Overlap ratio of the two trucks' fastest paths.
pub fn spor(net: &RoadNetwork, tasks: &TaskPair) -> Result<f64> {
    let p1 = shortest_time_tree(net, tasks.s1, Direction::Forward)?.path(net, tasks.d1);
    let p2 = shortest_time_tree(net, tasks.s2, Direction::Forward)?.path(net, tasks.d2);
    let (Some(p1), Some(p2)) = (p1, p2) else {
        return Ok(0.0);
    };
    let total = net.path_length(&p1) + net.path_length(&p2);
    if total <= 0.0 {
        return Ok(0.0);
    }
    let shared: f64 = p1.iter().filter(|e| p2.contains(e)).map(|&e| net.edge(e).length).sum();
    Ok(2.0 * shared / total)
}

fn saving(other: f64, ours: f64) -> Option<f64> {
    (other.is_finite() && other > 0.0).then(|| (other - ours) / other)
}

/// Metrics of our report against the baselines and the separate optimum.
pub fn compute_metrics(
    net: &RoadNetwork,
    tasks: &TaskPair,
    ours: &SolveReport,
    p_base: Option<&SolveReport>,
    s_base: Option<&SolveReport>,
    separate_fuel: f64,
) -> Result<Metrics> {
    let platooning_ratio = match &ours.outcome {
        Outcome::Platoon { plan } => {
            let (shared, total) = plan.platoon_miles(net);
            if total > 0.0 {
                shared / total
            } else {
                0.0
            }
        }
        _ => 0.0,
    };
    let achieving_ratio = ours.lower_bound.and_then(|lb| {
        let potential = separate_fuel - lb;
        (potential > 1e-12 * separate_fuel.abs().max(1.0)).then(|| (separate_fuel - ours.total_fuel) / potential)
    });
    let fastest = |s, d| -> Result<f64> { Ok(shortest_time_tree(net, s, Direction::Forward)?.dist[d]) };
    let delay_factor = [
        (tasks.td1 - tasks.ts1) / fastest(tasks.s1, tasks.d1)?,
        (tasks.td2 - tasks.ts2) / fastest(tasks.s2, tasks.d2)?,
    ];
    Ok(Metrics {
        platooning_ratio,
        spor: spor(net, tasks)?,
        achieving_ratio,
        delay_factor,
        saving_vs_separate: saving(separate_fuel, ours.total_fuel).unwrap_or(0.0),
        saving_vs_p: p_base.and_then(|r| saving(r.total_fuel, ours.total_fuel)),
        saving_vs_s: s_base.and_then(|r| saving(r.total_fuel, ours.total_fuel)),
    })
}
