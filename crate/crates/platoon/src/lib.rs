//! Fuel-minimal coordination of two trucks with individual deadlines.
//!
//! Each truck drives from its origin to its destination over a directed road
//! network. The trucks may merge once into a platoon, drive a shared path at a
//! reduced joint fuel rate, and split again. Per-edge speeds are free inside
//! the edge's speed range and a truck may wait at its origin at no cost.
//!
//! The crate provides:
//! - [`network`]: the road graph, its file format and a seeded grid generator;
//! - [`fuel`]: per-edge fuel cost as a function of travel time and the convex
//!   speed sub-problems built on it;
//! - [`planning`]: task pairs, plans and their exact evaluation;
//! - [`feasibility`]: the fastest-time feasibility check;
//! - [`inner`]: the Lagrangian inner problem and fractional decomposition;
//! - [`dual`]: the dual-subgradient solver, posterior bound and primal recovery;
//! - [`fptas`]: the cost-rounding approximation scheme;
//! - [`baselines`]: separate driving, two literature baselines, sampling and metrics;
//! - [`pipeline`]: the end-to-end flow that picks the cheaper of platooning
//!   and driving separately.

pub mod baselines;
pub mod dual;
mod error;
pub mod feasibility;
pub mod fptas;
pub mod fuel;
pub mod inner;
pub mod network;
pub mod pipeline;
pub mod planning;
pub mod toy;

pub use error::{Error, Result};
pub use network::{EdgeId, NodeId, RoadNetwork};
pub use planning::{PlatoonPlan, SoloPlan, TaskPair};

/// Tolerance, in hours, under which a deadline slack counts as met.
pub const SLACK_TOL: f64 = 1e-9;
