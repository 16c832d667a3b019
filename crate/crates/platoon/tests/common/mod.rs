//! Independent oracles and instance generators shared by the integration tests.
//!
//! Nothing here calls the solver code paths it is used to check: paths are
//! enumerated by depth-first search, and speed allocation works in speed space
//! with its own bisections.

#![allow(dead_code)]

use std::collections::HashMap;

use platoon::network::{Edge, EdgeId, NodeId, RoadNetwork};
use platoon::TaskPair;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub const ETA: f64 = 0.1;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_edge(rng: &mut ChaCha8Rng, id: usize, tail: NodeId, head: NodeId) -> Edge {
    Edge {
        id: id as u64,
        tail,
        head,
        length: rng.gen_range(20.0..100.0),
        v_min: rng.gen_range(10.0..20.0),
        v_max: rng.gen_range(60.0..80.0),
        fuel: [
            rng.gen_range(0.8..1.2),
            -6e-3,
            rng.gen_range(3.2e-4..4.8e-4),
            rng.gen_range(0.0..1e-6),
        ],
    }
}

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("v{i}")).collect()
}

/// Random digraph without self-loops; each ordered pair gets an edge with probability `p`.
pub fn random_digraph(seed: u64, n: usize, p: f64) -> RoadNetwork {
    let mut rng = rng(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.gen_bool(p) {
                let id = edges.len();
                edges.push(random_edge(&mut rng, id, u, v));
            }
        }
    }
    RoadNetwork::new(names(n), edges).unwrap()
}

/// Random DAG on `0..n` with edges only from lower to higher ids.
pub fn random_dag(seed: u64, n: usize, p: f64) -> RoadNetwork {
    let mut rng = rng(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if v == u + 1 || rng.gen_bool(p) {
                let id = edges.len();
                edges.push(random_edge(&mut rng, id, u, v));
            }
        }
    }
    RoadNetwork::new(names(n), edges).unwrap()
}

/// All simple paths from `u` to `v`; the empty path when `u == v`.
pub fn simple_paths(net: &RoadNetwork, u: NodeId, v: NodeId) -> Vec<Vec<EdgeId>> {
    fn dfs(net: &RoadNetwork, cur: NodeId, v: NodeId, seen: &mut Vec<bool>, path: &mut Vec<EdgeId>, out: &mut Vec<Vec<EdgeId>>) {
        if cur == v {
            out.push(path.clone());
            return;
        }
        for &e in net.out_edges(cur) {
            let h = net.edge(e).head;
            if !seen[h] {
                seen[h] = true;
                path.push(e);
                dfs(net, h, v, seen, path, out);
                path.pop();
                seen[h] = false;
            }
        }
    }
    let mut seen = vec![false; net.node_count()];
    seen[u] = true;
    let mut out = Vec::new();
    dfs(net, u, v, &mut seen, &mut Vec::new(), &mut out);
    out
}

/// Simple paths for every ordered node pair.
pub struct PathCatalog {
    paths: HashMap<(NodeId, NodeId), Vec<Vec<EdgeId>>>,
}

impl PathCatalog {
    pub fn new(net: &RoadNetwork) -> Self {
        let mut paths = HashMap::new();
        for u in 0..net.node_count() {
            for v in 0..net.node_count() {
                paths.insert((u, v), simple_paths(net, u, v));
            }
        }
        Self { paths }
    }

    pub fn get(&self, u: NodeId, v: NodeId) -> &[Vec<EdgeId>] {
        &self.paths[&(u, v)]
    }
}

fn subpath_ends(tasks: &TaskPair, m: NodeId, s: NodeId) -> [(NodeId, NodeId); 5] {
    [(tasks.s1, m), (tasks.s2, m), (m, s), (s, tasks.d1), (s, tasks.d2)]
}

/// Exhaustive optimum of the inner problem for per-subpath edge weights.
pub fn brute_inner(net: &RoadNetwork, cat: &PathCatalog, tasks: &TaskPair, w: [&[f64]; 5]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for m in 0..net.node_count() {
        for s in 0..net.node_count() {
            let mut total = 0.0;
            for (i, (a, b)) in subpath_ends(tasks, m, s).into_iter().enumerate() {
                let cheapest = cat
                    .get(a, b)
                    .iter()
                    .map(|p| p.iter().map(|&e| w[i][e]).sum::<f64>())
                    .fold(f64::INFINITY, f64::min);
                total += cheapest;
            }
            if total.is_finite() && best.is_none_or(|b| total < b) {
                best = Some(total);
            }
        }
    }
    best
}

fn fastest(net: &RoadNetwork, p: &[EdgeId]) -> f64 {
    p.iter().map(|&e| net.edge(e).length / net.edge(e).v_max).sum()
}

/// Exhaustive feasibility at top speed.
pub fn brute_feasible(net: &RoadNetwork, cat: &PathCatalog, tasks: &TaskPair) -> bool {
    for m in 0..net.node_count() {
        for s in 0..net.node_count() {
            let tau: Vec<f64> = subpath_ends(tasks, m, s)
                .iter()
                .map(|&(a, b)| cat.get(a, b).iter().map(|p| fastest(net, p)).fold(f64::INFINITY, f64::min))
                .collect();
            if tau.iter().any(|t| !t.is_finite()) {
                continue;
            }
            let ok = tasks.ts1 + tau[0] + tau[2] + tau[3] <= tasks.td1 + 1e-12
                && tasks.ts2 + tau[1] + tau[2] + tau[3] <= tasks.td1 + 1e-12
                && tasks.ts1 + tau[0] + tau[2] + tau[4] <= tasks.td2 + 1e-12
                && tasks.ts2 + tau[1] + tau[2] + tau[4] <= tasks.td2 + 1e-12;
            if ok {
                return true;
            }
        }
    }
    false
}

/// Fuel rate at speed `v`.
pub fn rate(e: &Edge, v: f64) -> f64 {
    let [a0, a1, a2, a3] = e.fuel;
    a0 + a1 * v + a2 * v * v + a3 * v * v * v
}

/// Cost of driving edge `e` at constant speed `v`, scaled by `factor`.
pub fn cost_at_speed(e: &Edge, v: f64, factor: f64) -> f64 {
    factor * e.length / v * rate(e, v)
}

/// Cost of edge `e` driven in `t` hours.
pub fn cost_at_time(e: &Edge, t: f64, factor: f64) -> f64 {
    cost_at_speed(e, e.length / t, factor)
}

/// Speed whose marginal cost per hour saved equals `mu`.
///
/// With `v = D / t`, `d cost / d t = factor (a0 - a2 v^2 - 2 a3 v^3)`; the
/// speed solving `factor (a0 - a2 v^2 - 2 a3 v^3) + mu = 0` is found by
/// bisection on `[v_min, v_max]`, where the left side decreases in `v`.
pub fn speed_at_price(e: &Edge, mu: f64, factor: f64) -> f64 {
    let [a0, _, a2, a3] = e.fuel;
    let h = |v: f64| factor * (a0 - a2 * v * v - 2.0 * a3 * v * v * v) + mu;
    if h(e.v_min) <= 0.0 {
        return e.v_min;
    }
    if h(e.v_max) >= 0.0 {
        return e.v_max;
    }
    let (mut lo, mut hi) = (e.v_min, e.v_max);
    while hi - lo > 1e-14 * hi {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Path cost and speeds at which the whole path takes at most `budget` hours,
/// fuel-optimally. `None` when even top speed is too slow.
pub fn path_cost_within(net: &RoadNetwork, path: &[EdgeId], factor: f64, budget: f64) -> Option<f64> {
    let edges: Vec<&Edge> = path.iter().map(|&e| net.edge(e)).collect();
    let duration = |mu: f64| -> f64 { edges.iter().map(|e| e.length / speed_at_price(e, mu, factor)).sum() };
    let cost = |mu: f64| -> f64 { edges.iter().map(|e| cost_at_speed(e, speed_at_price(e, mu, factor), factor)).sum() };
    if edges.is_empty() {
        return (budget >= -1e-12).then_some(0.0);
    }
    let top: f64 = edges.iter().map(|e| e.length / e.v_max).sum();
    if top > budget + 1e-12 {
        return None;
    }
    if duration(0.0) <= budget {
        return Some(cost(0.0));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while duration(hi) > budget {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if duration(mid) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Some(cost(hi))
}

/// Cost of a path as a function of its time allowance, tabulated on a grid.
pub struct PathProfile {
    pub edges: Vec<EdgeId>,
    pub factor: f64,
    pub fastest: f64,
    pub free_time: f64,
    pub free_cost: f64,
    grid: Vec<f64>,
}

pub const GRID_POINTS: usize = 400;

impl PathProfile {
    pub fn new(net: &RoadNetwork, edges: Vec<EdgeId>, factor: f64) -> Self {
        let fastest = fastest(net, &edges);
        let free_time: f64 = edges
            .iter()
            .map(|&e| net.edge(e).length / speed_at_price(net.edge(e), 0.0, factor))
            .sum();
        let free_cost = path_cost_within(net, &edges, factor, free_time.max(fastest)).unwrap();
        let grid = if free_time > fastest {
            (0..GRID_POINTS)
                .map(|k| {
                    let b = fastest + (free_time - fastest) * k as f64 / (GRID_POINTS - 1) as f64;
                    path_cost_within(net, &edges, factor, b).unwrap_or(f64::INFINITY)
                })
                .collect()
        } else {
            vec![free_cost]
        };
        Self { edges, factor, fastest, free_time, free_cost, grid }
    }

    /// Interpolated cost with at most `budget` hours.
    pub fn approx(&self, budget: f64) -> f64 {
        if budget < self.fastest - 1e-12 {
            return f64::INFINITY;
        }
        if budget >= self.free_time || self.grid.len() == 1 {
            return self.free_cost;
        }
        let x = (budget - self.fastest) / (self.free_time - self.fastest) * (GRID_POINTS - 1) as f64;
        let k = (x.floor() as usize).min(GRID_POINTS - 2);
        let f = x - k as f64;
        self.grid[k] * (1.0 - f) + self.grid[k + 1] * f
    }

    pub fn exact(&self, net: &RoadNetwork, budget: f64) -> f64 {
        if budget >= self.free_time {
            return self.free_cost;
        }
        path_cost_within(net, &self.edges, self.factor, budget).unwrap_or(f64::INFINITY)
    }
}

/// Minimizes a convex function on `[a, b]` by golden-section search.
pub fn golden<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    if b <= a {
        return (a, f(a));
    }
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let candidates = [(a, f(a)), (b, f(b)), (c, fc), (d, fd)];
    candidates.into_iter().fold((a, f64::INFINITY), |best, x| if x.1 < best.1 { x } else { best })
}

/// Optimal joint fuel of one fixed five-path combination.
///
/// The merge time `A` and split time `E` are the only coupling variables;
/// the objective is jointly convex in them, so nested golden searches find
/// the optimum of the tabulated profiles, which is then re-optimized on exact
/// costs in a narrow window. Combinations whose tabulated optimum exceeds
/// `cutoff` by more than 0.1% skip the exact refinement; interpolating a
/// 400-point table is far more accurate than that.
pub fn combo_optimum(net: &RoadNetwork, tasks: &TaskPair, p: [&PathProfile; 5], cutoff: f64) -> Option<f64> {
    let low_a = (tasks.ts1 + p[0].fastest).max(tasks.ts2 + p[1].fastest);
    let e_max = (tasks.td1 - p[3].fastest).min(tasks.td2 - p[4].fastest);
    let e_min = low_a + p[2].fastest;
    if e_min > e_max + 1e-12 {
        return None;
    }
    let e_max = e_max.max(e_min);
    let objective = |a: f64, e: f64, exact: bool| -> f64 {
        let b = [a - tasks.ts1, a - tasks.ts2, e - a, tasks.td1 - e, tasks.td2 - e];
        (0..5)
            .map(|i| if exact { p[i].exact(net, b[i].max(p[i].fastest)) } else { p[i].approx(b[i].max(p[i].fastest)) })
            .sum()
    };
    let inner = |e: f64, lo: f64, hi: f64, exact: bool, iters: usize| {
        golden(|a| objective(a, e, exact), lo, hi.min(e - p[2].fastest).max(lo), iters)
    };
    let (e0, _) = golden(|e| inner(e, low_a, e - p[2].fastest, false, 60).1, e_min, e_max, 60);
    let (a0, approx) = inner(e0, low_a, e0 - p[2].fastest, false, 60);
    if approx > cutoff * (1.0 + 1e-3) {
        return Some(approx);
    }
    // Exact refinement around the tabulated optimum.
    let width = |x: &PathProfile| (x.free_time - x.fastest) / (GRID_POINTS - 1) as f64;
    let h = 4.0 * p.iter().map(|x| width(x)).fold(1e-9, f64::max);
    let (e_lo, e_hi) = ((e0 - h).max(e_min), (e0 + h).min(e_max));
    let (_, v1) = golden(
        |e| inner(e, (a0 - h).max(low_a), a0 + h, true, 30).1,
        e_lo,
        e_hi,
        30,
    );
    let (_, v_center) = inner(e0, low_a.max(a0 - h), a0 + h, true, 30);
    Some(v1.min(v_center).min(objective(a0, e0, true)))
}

/// Exhaustive optimum over merge/split pairs and simple paths, with optional
/// incumbent to prune combinations whose cost lower bound cannot beat it.
///
/// Each path is first bounded by its exact water-filled cost at the largest
/// time allowance any deadline-feasible combination could give it; the
/// tabulated profiles are only built for combinations that survive.
pub fn opt_oracle(net: &RoadNetwork, tasks: &TaskPair, eta: f64, incumbent: Option<f64>) -> Option<f64> {
    let cat = PathCatalog::new(net);
    let mut profiles: HashMap<(&[EdgeId], bool), PathProfile> = HashMap::new();
    let mut best = incumbent.unwrap_or(f64::INFINITY);
    let mut found = None;
    let factor = |i: usize| if i == 2 { 2.0 * (1.0 - eta) } else { 1.0 };
    for m in 0..net.node_count() {
        for s in 0..net.node_count() {
            let ends = subpath_ends(tasks, m, s);
            let lists: Vec<&[Vec<EdgeId>]> = ends.iter().map(|&(a, b)| cat.get(a, b)).collect();
            if lists.iter().any(|l| l.is_empty()) {
                continue;
            }
            let tau: Vec<f64> = lists
                .iter()
                .map(|l| l.iter().map(|p| fastest(net, p)).fold(f64::INFINITY, f64::min))
                .collect();
            let a_min = (tasks.ts1 + tau[0]).max(tasks.ts2 + tau[1]);
            let e_max = (tasks.td1 - tau[3]).min(tasks.td2 - tau[4]);
            if e_max < a_min + tau[2] - 1e-12 {
                continue;
            }
            let caps = [
                e_max - tau[2] - tasks.ts1,
                e_max - tau[2] - tasks.ts2,
                e_max - a_min,
                tasks.td1 - a_min - tau[2],
                tasks.td2 - a_min - tau[2],
            ];
            let sorted: Vec<Vec<(f64, &[EdgeId])>> = lists
                .iter()
                .enumerate()
                .map(|(i, list)| {
                    let mut v: Vec<(f64, &[EdgeId])> = list
                        .iter()
                        .filter_map(|p| Some((path_cost_within(net, p, factor(i), caps[i])?, p.as_slice())))
                        .collect();
                    v.sort_by(|a, b| a.0.total_cmp(&b.0));
                    v
                })
                .collect();
            if sorted.iter().any(|l| l.is_empty()) {
                continue;
            }
            let floor: Vec<f64> = sorted.iter().map(|l| l[0].0).collect();
            let rest = |from: usize| -> f64 { floor[from..].iter().sum() };
            for &(c1, p1) in &sorted[0] {
                if c1 + rest(1) >= best {
                    break;
                }
                for &(l2, p2) in &sorted[1] {
                    let c2 = c1 + l2;
                    if c2 + rest(2) >= best {
                        break;
                    }
                    for &(l3, p3) in &sorted[2] {
                        let c3 = c2 + l3;
                        if c3 + rest(3) >= best {
                            break;
                        }
                        for &(l4, p4) in &sorted[3] {
                            let c4 = c3 + l4;
                            if c4 + rest(4) >= best {
                                break;
                            }
                            for &(l5, p5) in &sorted[4] {
                                if c4 + l5 >= best {
                                    break;
                                }
                                let combo = [p1, p2, p3, p4, p5];
                                for (i, p) in combo.iter().enumerate() {
                                    profiles
                                        .entry((p, i == 2))
                                        .or_insert_with(|| PathProfile::new(net, p.to_vec(), factor(i)));
                                }
                                let refs = [0, 1, 2, 3, 4].map(|i| &profiles[&(combo[i], i == 2)]);
                                if let Some(v) = combo_optimum(net, tasks, refs, best) {
                                    if v < best {
                                        best = v;
                                        found = Some(v);
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    found
}

/// Random task pair on `net` with deadlines `beta` times each truck's fastest
/// trip, feasible for a single platoon; `None` if none was found.
pub fn random_tasks(net: &RoadNetwork, rng: &mut ChaCha8Rng, beta: (f64, f64)) -> Option<TaskPair> {
    let n = net.node_count();
    for _ in 0..200 {
        let s1 = rng.gen_range(0..n);
        let d1 = rng.gen_range(0..n);
        let s2 = rng.gen_range(0..n);
        let d2 = rng.gen_range(0..n);
        if s1 == d1 || s2 == d2 {
            continue;
        }
        let t1 = platoon::network::shortest_time_tree(net, s1, platoon::network::Direction::Forward)
            .unwrap()
            .dist[d1];
        let t2 = platoon::network::shortest_time_tree(net, s2, platoon::network::Direction::Forward)
            .unwrap()
            .dist[d2];
        if !t1.is_finite() || !t2.is_finite() {
            continue;
        }
        let ts2 = if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.0..1.0) };
        let tasks = TaskPair {
            s1,
            d1,
            s2,
            d2,
            ts1: 0.0,
            ts2,
            td1: rng.gen_range(beta.0..beta.1) * t1,
            td2: ts2 + rng.gen_range(beta.0..beta.1) * t2,
        };
        if platoon::feasibility::check_feasible(net, &tasks).unwrap().feasible {
            return Some(tasks);
        }
    }
    None
}

/// Small feasible instance: random digraph with `n` nodes and tasks.
pub fn small_instance(seed: u64, n: usize, p: f64, beta: (f64, f64)) -> Option<(RoadNetwork, TaskPair)> {
    let net = random_digraph(seed, n, p);
    let mut r = rng(seed ^ 0x9e37_79b9_7f4a_7c15);
    let tasks = random_tasks(&net, &mut r, beta)?;
    Some((net, tasks))
}

/// Seeds `0..` filtered to those producing a feasible small instance.
pub fn instance_suite(count: usize, n_range: (usize, usize), p: f64, beta: (f64, f64), salt: u64) -> Vec<(RoadNetwork, TaskPair)> {
    let mut out = Vec::new();
    let mut seed = salt;
    while out.len() < count {
        let n = n_range.0 + (seed as usize % (n_range.1 - n_range.0 + 1));
        if let Some(inst) = small_instance(seed, n, p, beta) {
            out.push(inst);
        }
        seed += 1;
    }
    out
}
