//! Fuel cost as a function of travel time, and the convex time-allocation
//! problems built on it.
//!
//! For an edge of length `D` with fuel rate `f(v)`, driving it in `t` hours
//! costs `c(t) = t * f(D / t)` gallons. A platoon edge carries both trucks and
//! costs `2 (1 - eta) c(t)`. On `[t_min, t_max]` the cost is strictly convex
//! with derivative `c'(t) = a0 - a2 v^2 - 2 a3 v^3`, `v = D / t`.

use crate::network::Edge;
use crate::{Error, Result};

/// Relative slack accepted when checking a time against its bounds.
const RANGE_TOL: f64 = 1e-9;

/// Whether an edge is driven alone or by the two-truck platoon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Solo,
    /// Joint cost of both trucks with saving ratio `eta` in `(0, 1)`.
    Platoon { eta: f64 },
}

/// Fuel cost of one edge as a function of its travel time.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeCost {
    pub length: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub fuel: [f64; 4],
    pub mode: Mode,
    factor: f64,
}

/// Minimizer of `cost(t) + price * t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeOptimum {
    pub time: f64,
    pub value: f64,
}

impl EdgeCost {
    pub fn new(edge: &Edge, mode: Mode) -> Self {
        let factor = match mode {
            Mode::Solo => 1.0,
            Mode::Platoon { eta } => 2.0 * (1.0 - eta),
        };
        Self {
            length: edge.length,
            t_min: edge.t_min(),
            t_max: edge.t_max(),
            fuel: edge.fuel,
            mode,
            factor,
        }
    }

    pub fn solo(edge: &Edge) -> Self {
        Self::new(edge, Mode::Solo)
    }

    pub fn platoon(edge: &Edge, eta: f64) -> Self {
        Self::new(edge, Mode::Platoon { eta })
    }

    /// Multiplier applied to the single-truck cost.
    pub fn factor(&self) -> f64 {
        self.factor
    }

    fn rate(&self, v: f64) -> f64 {
        let [a0, a1, a2, a3] = self.fuel;
        ((a3 * v + a2) * v + a1) * v + a0
    }

    /// Cost without the range check.
    pub fn cost_unchecked(&self, t: f64) -> f64 {
        self.factor * t * self.rate(self.length / t)
    }

    /// Cost in gallons of traversing the edge in `t` hours.
    pub fn cost(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.cost_unchecked(t))
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        let ok = t.is_finite()
            && t >= self.t_min * (1.0 - RANGE_TOL)
            && t <= self.t_max * (1.0 + RANGE_TOL);
        if ok {
            Ok(())
        } else {
            Err(Error::TimeOutOfRange {
                t,
                lo: self.t_min,
                hi: self.t_max,
            })
        }
    }

    /// `d cost / d t`, increasing in `t`.
    pub fn derivative(&self, t: f64) -> f64 {
        let [a0, _, a2, a3] = self.fuel;
        let v = self.length / t;
        self.factor * (a0 - a2 * v * v - 2.0 * a3 * v * v * v)
    }

    /// Argmin over `[t_min, t_max]` of `cost(t) + price * t` for any real price.
    ///
    /// Negative prices reward slow driving; they arise when a duration longer
    /// than the fuel-optimal one is imposed.
    pub fn time_at_price(&self, price: f64) -> f64 {
        let (mut lo, mut hi) = (self.t_min, self.t_max);
        if hi <= lo || self.derivative(lo) + price >= 0.0 {
            return lo;
        }
        if self.derivative(hi) + price <= 0.0 {
            return hi;
        }
        let tol = 1e-10 * self.t_max;
        while hi - lo >= tol {
            let mid = 0.5 * (lo + hi);
            if self.derivative(mid) + price < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Fuel-optimal travel time, ignoring deadlines.
    pub fn free_time(&self) -> f64 {
        self.time_at_price(0.0)
    }

    /// Price at which `t_min` becomes optimal; any higher price keeps it.
    pub fn price_for_fastest(&self) -> f64 {
        (-self.derivative(self.t_min)).max(0.0)
    }
}

/// Minimizes `cost(t) + price * t` over the edge's time range.
pub fn minimize_edge_time(ec: &EdgeCost, price: f64) -> EdgeOptimum {
    let time = ec.time_at_price(price);
    EdgeOptimum {
        time,
        value: ec.cost_unchecked(time) + price * time,
    }
}

/// Optimal allocation of a fixed duration over a path.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub cost: f64,
    pub times: Vec<f64>,
    /// Common marginal price that induced the times.
    pub price: f64,
}

/// Total time of a path when every edge faces `price`.
pub fn duration_at_price(edges: &[EdgeCost], price: f64) -> f64 {
    edges.iter().map(|e| e.time_at_price(price)).sum()
}

/// Price bracket `(slowest, fastest)`: at the first price every edge sits at
/// `t_max`, at the second every edge sits at `t_min`.
pub fn price_bracket(edges: &[EdgeCost]) -> (f64, f64) {
    let slow = edges
        .iter()
        .map(|e| -e.derivative(e.t_max))
        .fold(f64::INFINITY, f64::min);
    let fast = edges
        .iter()
        .map(|e| -e.derivative(e.t_min))
        .fold(f64::NEG_INFINITY, f64::max);
    if edges.is_empty() {
        (0.0, 0.0)
    } else {
        (slow.min(fast), fast.max(slow))
    }
}

/// Smallest price whose induced path time does not exceed `duration`.
///
/// The caller guarantees `sum t_min <= duration <= sum t_max`.
pub fn price_for_duration(edges: &[EdgeCost], duration: f64) -> f64 {
    let (mut lo, mut hi) = price_bracket(edges);
    if duration_at_price(edges, lo) <= duration {
        return lo;
    }
    let target_tol = 1e-9 * duration.abs().max(1e-300);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let d = duration_at_price(edges, mid);
        if d <= duration {
            hi = mid;
            if duration - d < target_tol {
                break;
            }
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * hi.abs().max(1.0) {
            break;
        }
    }
    hi
}

/// Cheapest way to drive `edges` in exactly `duration` hours.
///
/// Water-filling: all edges share one marginal price, found by bisection so
/// that the induced times sum to the duration within `1e-9` relative. The
/// returned times never sum above `duration`.
pub fn subpath_cost_of_duration(edges: &[EdgeCost], duration: f64) -> Result<Allocation> {
    let lo: f64 = edges.iter().map(|e| e.t_min).sum();
    let hi: f64 = edges.iter().map(|e| e.t_max).sum();
    let tol = RANGE_TOL * hi.max(1e-300);
    if !(duration >= lo - tol && duration <= hi + tol) {
        return Err(Error::TimeOutOfRange { t: duration, lo, hi });
    }
    if edges.is_empty() {
        return Ok(Allocation {
            cost: 0.0,
            times: Vec::new(),
            price: 0.0,
        });
    }
    let price = if duration <= lo {
        price_bracket(edges).1
    } else {
        price_for_duration(edges, duration)
    };
    let times: Vec<f64> = edges.iter().map(|e| e.time_at_price(price)).collect();
    let cost = edges
        .iter()
        .zip(&times)
        .map(|(e, &t)| e.cost_unchecked(t))
        .sum();
    Ok(Allocation { cost, times, price })
}
