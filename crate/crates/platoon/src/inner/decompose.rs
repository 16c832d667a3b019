//! Decomposition of a fractional plan into a convex combination of integral
//! plans.
//!
//! A fractional plan assigns each subpath a flow `x[i][e]` in `[0, 1]`, a merge
//! distribution `y` and a split distribution `z`, all satisfying the flow
//! conservation rules of the five subpaths. Peeling repeatedly takes the
//! smallest positive entry as the next weight `theta`, grows an integral plan
//! through that entry by walking along positive flow (forward along `Out(v)`,
//! backward along `In(v)`), and subtracts `theta` times the plan. Each round
//! zeroes at least one entry, so there are at most as many components as
//! positive entries, and the total work is quadratic in the support size.
//!
//! Walks consume each edge at most once. On supports where every subpath's
//! flow is acyclic (always the case for optimal fractional points under
//! positive weights) the walks never stall.

use serde::{Deserialize, Serialize};

use crate::network::{EdgeId, NodeId, RoadNetwork};
use crate::planning::{check_walk, Skeleton, TaskPair};
use crate::{Error, Result};

const ZERO: f64 = 1e-12;
const CONSERVATION_TOL: f64 = 1e-9;

/// Fractional point of the relaxed plan polytope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionalSolution {
    /// `x[i][e]`: flow of subpath `i` (0-based) on edge `e`.
    pub x: [Vec<f64>; 5],
    /// Merge weight per node.
    pub y: Vec<f64>,
    /// Split weight per node.
    pub z: Vec<f64>,
}

/// One integral plan with its weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub theta: f64,
    pub skeleton: Skeleton,
}

impl FractionalSolution {
    /// All-zero point sized for `net`.
    pub fn zeros(net: &RoadNetwork) -> Self {
        Self {
            x: std::array::from_fn(|_| vec![0.0; net.edge_count()]),
            y: vec![0.0; net.node_count()],
            z: vec![0.0; net.node_count()],
        }
    }

    /// Adds `theta` times an integral plan.
    pub fn add(&mut self, theta: f64, sk: &Skeleton) {
        for (i, path) in sk.paths.iter().enumerate() {
            for &e in path {
                self.x[i][e] += theta;
            }
        }
        self.y[sk.merge] += theta;
        self.z[sk.split] += theta;
    }

    /// Convex combination of weighted integral plans.
    pub fn mixture(net: &RoadNetwork, parts: &[(f64, &Skeleton)]) -> Self {
        let mut f = Self::zeros(net);
        for &(theta, sk) in parts {
            f.add(theta, sk);
        }
        f
    }

    /// Largest componentwise difference to another point.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let xs = self.x.iter().zip(&other.x).flat_map(|(a, b)| a.iter().zip(b));
        xs.chain(self.y.iter().zip(&other.y))
            .chain(self.z.iter().zip(&other.z))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn check_shape(&self, net: &RoadNetwork) -> Result<()> {
        let ok = self.x.iter().all(|xi| xi.len() == net.edge_count())
            && self.y.len() == net.node_count()
            && self.z.len() == net.node_count();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter("fractional solution does not match the network".into()))
        }
    }

    /// Verifies bounds, unit mass and flow conservation of every subpath.
    pub fn validate(&self, net: &RoadNetwork, tasks: &TaskPair) -> Result<()> {
        self.check_shape(net)?;
        let in_unit = |v: f64| (-CONSERVATION_TOL..=1.0 + CONSERVATION_TOL).contains(&v);
        let all = self.x.iter().flatten().chain(&self.y).chain(&self.z);
        if !all.copied().all(in_unit) {
            return Err(Error::InvalidParameter("entries must lie in [0, 1]".into()));
        }
        let ysum: f64 = self.y.iter().sum();
        let zsum: f64 = self.z.iter().sum();
        if (ysum - 1.0).abs() > CONSERVATION_TOL || (zsum - 1.0).abs() > CONSERVATION_TOL {
            return Err(Error::InvalidParameter("merge and split weights must sum to 1".into()));
        }
        for v in 0..net.node_count() {
            let ind = |n: NodeId| if n == v { 1.0 } else { 0.0 };
            let rhs = [
                ind(tasks.s1) - self.y[v],
                ind(tasks.s2) - self.y[v],
                self.y[v] - self.z[v],
                self.z[v] - ind(tasks.d1),
                self.z[v] - ind(tasks.d2),
            ];
            for (i, r) in rhs.iter().enumerate() {
                let out: f64 = net.out_edges(v).iter().map(|&e| self.x[i][e]).sum();
                let inc: f64 = net.in_edges(v).iter().map(|&e| self.x[i][e]).sum();
                if (out - inc - r).abs() > CONSERVATION_TOL {
                    return Err(Error::FlowConservation { node: v, subpath: i + 1 });
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum Entry {
    Flow(usize, EdgeId),
    Merge(NodeId),
    Split(NodeId),
}

struct Peeler<'a> {
    net: &'a RoadNetwork,
    tasks: &'a TaskPair,
    res: FractionalSolution,
}

impl Peeler<'_> {
    fn smallest_entry(&self) -> Option<(f64, Entry)> {
        let mut best: Option<(f64, Entry)> = None;
        let mut offer = |v: f64, entry: Entry| {
            if v > ZERO && best.is_none_or(|(b, _)| v < b) {
                best = Some((v, entry));
            }
        };
        for i in 0..5 {
            for (e, &v) in self.res.x[i].iter().enumerate() {
                offer(v, Entry::Flow(i, e));
            }
        }
        for (n, &v) in self.res.y.iter().enumerate() {
            offer(v, Entry::Merge(n));
        }
        for (n, &v) in self.res.z.iter().enumerate() {
            offer(v, Entry::Split(n));
        }
        best
    }

    /// Follows positive flow of subpath `i` until no unused edge continues.
    /// Returns the edges in walking order and the final node.
    fn walk(&self, i: usize, start: NodeId, forward: bool, used: &mut Vec<EdgeId>) -> (Vec<EdgeId>, NodeId) {
        let mut edges = Vec::new();
        let mut cur = start;
        loop {
            let candidates = if forward {
                self.net.out_edges(cur)
            } else {
                self.net.in_edges(cur)
            };
            let next = candidates
                .iter()
                .copied()
                .filter(|&e| self.res.x[i][e] > ZERO && !used.contains(&e))
                .min();
            let Some(e) = next else { break };
            used.push(e);
            edges.push(e);
            let edge = self.net.edge(e);
            cur = if forward { edge.head } else { edge.tail };
        }
        if !forward {
            edges.reverse();
        }
        (edges, cur)
    }

    fn stalled(&self, subpath: usize, node: NodeId) -> Error {
        Error::DecompositionStalled { node, subpath: subpath + 1 }
    }

    fn forward_to_end(&self, i: usize, start: NodeId) -> Result<(Vec<EdgeId>, NodeId)> {
        let (edges, end) = self.walk(i, start, true, &mut Vec::new());
        self.check_end(i, end)?;
        Ok((edges, end))
    }

    fn backward_to_start(&self, i: usize, start: NodeId) -> Result<(Vec<EdgeId>, NodeId)> {
        let (edges, begin) = self.walk(i, start, false, &mut Vec::new());
        self.check_begin(i, begin)?;
        Ok((edges, begin))
    }

    fn check_end(&self, i: usize, end: NodeId) -> Result<()> {
        let ok = match i {
            0 | 1 => self.res.y[end] > ZERO,
            2 => self.res.z[end] > ZERO,
            3 => end == self.tasks.d1,
            _ => end == self.tasks.d2,
        };
        if ok {
            Ok(())
        } else {
            Err(self.stalled(i, end))
        }
    }

    fn check_begin(&self, i: usize, begin: NodeId) -> Result<()> {
        let ok = match i {
            0 => begin == self.tasks.s1,
            1 => begin == self.tasks.s2,
            2 => self.res.y[begin] > ZERO,
            _ => self.res.z[begin] > ZERO,
        };
        if ok {
            Ok(())
        } else {
            Err(self.stalled(i, begin))
        }
    }

    /// Path of subpath `i` through edge `e`.
    fn through(&self, i: usize, e: EdgeId) -> Result<(Vec<EdgeId>, NodeId, NodeId)> {
        let edge = self.net.edge(e);
        let mut used = vec![e];
        let (mut back, begin) = self.walk(i, edge.tail, false, &mut used);
        self.check_begin(i, begin)?;
        let (fwd, end) = self.walk(i, edge.head, true, &mut used);
        self.check_end(i, end)?;
        back.push(e);
        back.extend(fwd);
        Ok((back, begin, end))
    }

    /// Integral plan containing the given entry.
    fn component(&self, entry: Entry) -> Result<Skeleton> {
        let mut paths: [Option<Vec<EdgeId>>; 5] = Default::default();
        let (merge, split) = match entry {
            Entry::Merge(v) => {
                let (p3, s) = self.forward_to_end(2, v)?;
                paths[2] = Some(p3);
                (v, s)
            }
            Entry::Split(v) => {
                let (p3, m) = self.backward_to_start(2, v)?;
                paths[2] = Some(p3);
                (m, v)
            }
            Entry::Flow(i, e) => {
                let (p, begin, end) = self.through(i, e)?;
                paths[i] = Some(p);
                match i {
                    0 | 1 => {
                        let (p3, s) = self.forward_to_end(2, end)?;
                        paths[2] = Some(p3);
                        (end, s)
                    }
                    2 => (begin, end),
                    _ => {
                        let (p3, m) = self.backward_to_start(2, begin)?;
                        paths[2] = Some(p3);
                        (m, begin)
                    }
                }
            }
        };
        for i in [0, 1] {
            if paths[i].is_none() {
                paths[i] = Some(self.backward_to_start(i, merge)?.0);
            }
        }
        for i in [3, 4] {
            if paths[i].is_none() {
                paths[i] = Some(self.forward_to_end(i, split)?.0);
            }
        }
        Ok(Skeleton {
            merge,
            split,
            paths: paths.map(|p| p.expect("all subpaths assigned")),
        })
    }

    fn subtract(&mut self, theta: f64, sk: &Skeleton) {
        let clean = |v: &mut f64| {
            *v -= theta;
            if v.abs() <= ZERO {
                *v = 0.0;
            }
        };
        for (i, path) in sk.paths.iter().enumerate() {
            for &e in path {
                clean(&mut self.res.x[i][e]);
            }
        }
        clean(&mut self.res.y[sk.merge]);
        clean(&mut self.res.z[sk.split]);
    }
}

/// Writes a fractional plan as a convex combination of integral plans.
///
/// Components are produced in peeling order; their weights are positive and
/// sum to one, and `sum theta_k * plan_k` reproduces the input up to
/// floating-point rounding.
pub fn decompose_fractional(net: &RoadNetwork, tasks: &TaskPair, frac: &FractionalSolution) -> Result<Vec<Component>> {
    tasks.validate(net)?;
    frac.validate(net, tasks)?;
    let mut peeler = Peeler {
        net,
        tasks,
        res: frac.clone(),
    };
    let support = frac.x.iter().flatten().chain(&frac.y).chain(&frac.z).filter(|&&v| v > ZERO).count();
    let mut components = Vec::new();
    while let Some((theta, entry)) = peeler.smallest_entry() {
        if components.len() > support {
            return Err(Error::InvalidParameter("decomposition did not terminate".into()));
        }
        let skeleton = peeler.component(entry)?;
        let ends = [
            (tasks.s1, skeleton.merge),
            (tasks.s2, skeleton.merge),
            (skeleton.merge, skeleton.split),
            (skeleton.split, tasks.d1),
            (skeleton.split, tasks.d2),
        ];
        for (i, (path, (from, to))) in skeleton.paths.iter().zip(ends).enumerate() {
            check_walk(net, path, from, to, i + 1)?;
        }
        peeler.subtract(theta, &skeleton);
        components.push(Component { theta, skeleton });
    }
    Ok(components)
}
