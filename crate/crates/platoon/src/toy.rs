//! Six-node example network used in docs, tests and the CLI demo.
//!
//! Two corridors lead to a shared trunk `m -> p`; direct links `s1 -> d1` and
//! `s2 -> d2` offer the no-platoon alternative. Every edge has fuel rate
//! `4e-4 v^2 - 6e-3 v + 1` gallons per hour (optimum at 50 mph) and speed
//! bounds `[10, 100]` mph.

use crate::network::{Edge, RoadNetwork};
use crate::planning::TaskPair;

/// Fuel coefficients `[a0, a1, a2, a3]` shared by all toy edges.
pub const FUEL: [f64; 4] = [1.0, -6e-3, 4e-4, 0.0];
/// Platoon saving ratio of the example.
pub const ETA: f64 = 0.1;

const LINKS: [(&str, &str, f64); 7] = [
    ("s1", "m", 200.0),
    ("s2", "m", 100.0),
    ("m", "p", 1000.0),
    ("p", "d1", 350.0),
    ("p", "d2", 450.0),
    ("s1", "d1", 1500.0),
    ("s2", "d2", 1500.0),
];

pub fn network() -> RoadNetwork {
    let names: Vec<String> = ["s1", "s2", "m", "p", "d1", "d2"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let pos = |n: &str| names.iter().position(|x| x == n).unwrap();
    let edges = LINKS
        .iter()
        .enumerate()
        .map(|(i, &(t, h, len))| Edge {
            id: i as u64,
            tail: pos(t),
            head: pos(h),
            length: len,
            v_min: 10.0,
            v_max: 100.0,
            fuel: FUEL,
        })
        .collect();
    RoadNetwork::new(names, edges).expect("toy network is valid")
}

/// Both trucks leave at time 0; deadlines 31 h and 33 h.
pub fn tasks(net: &RoadNetwork) -> TaskPair {
    TaskPair {
        s1: net.node("s1").unwrap(),
        d1: net.node("d1").unwrap(),
        s2: net.node("s2").unwrap(),
        d2: net.node("d2").unwrap(),
        ts1: 0.0,
        ts2: 0.0,
        td1: 31.0,
        td2: 33.0,
    }
}
