//! Road network model, validation, file format and synthetic generation.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::io::Read;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Dense node index, in declaration order.
pub type NodeId = usize;
/// Dense edge index, in declaration order.
pub type EdgeId = usize;

/// Schema tag written into network documents.
pub const NETWORK_SCHEMA: &str = "platoon-network/1";

/// A directed road segment.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// External identifier from the network document.
    pub id: u64,
    pub tail: NodeId,
    pub head: NodeId,
    /// Length in miles.
    pub length: f64,
    /// Speed bounds in mph.
    pub v_min: f64,
    pub v_max: f64,
    /// Fuel rate coefficients `[a0, a1, a2, a3]`, gallons per hour at speed v:
    /// `a3 v^3 + a2 v^2 + a1 v + a0`.
    pub fuel: [f64; 4],
}

impl Edge {
    /// Fuel rate in gallons per hour at speed `v`.
    pub fn rate(&self, v: f64) -> f64 {
        let [a0, a1, a2, a3] = self.fuel;
        ((a3 * v + a2) * v + a1) * v + a0
    }

    /// Fastest travel time in hours.
    pub fn t_min(&self) -> f64 {
        self.length / self.v_max
    }

    /// Slowest travel time in hours.
    pub fn t_max(&self) -> f64 {
        self.length / self.v_min
    }

    fn validate(&self) -> Result<()> {
        let bad = |reason: &str| Error::InvalidEdge {
            edge: self.id,
            reason: reason.to_string(),
        };
        let finite = self.length.is_finite()
            && self.v_min.is_finite()
            && self.v_max.is_finite()
            && self.fuel.iter().all(|a| a.is_finite());
        if !finite {
            return Err(bad("non-finite field"));
        }
        if self.length <= 0.0 {
            return Err(bad("length must be positive"));
        }
        if self.v_min <= 0.0 {
            return Err(bad("v_min must be positive"));
        }
        if self.v_min > self.v_max {
            return Err(bad("v_min exceeds v_max"));
        }
        if self.tail == self.head {
            return Err(bad("self-loop"));
        }
        let [_, a1, a2, a3] = self.fuel;
        for v in [self.v_min, self.v_max] {
            if 6.0 * a3 * v + 2.0 * a2 <= 0.0 {
                return Err(bad("fuel rate is not strictly convex on the speed range"));
            }
        }
        // Positivity at the endpoints and at interior stationary points.
        let mut probes = vec![self.v_min, self.v_max];
        let (qa, qb, qc) = (3.0 * a3, 2.0 * a2, a1);
        if qa.abs() < 1e-300 {
            if qb != 0.0 {
                probes.push(-qc / qb);
            }
        } else {
            let disc = qb * qb - 4.0 * qa * qc;
            if disc >= 0.0 {
                let r = disc.sqrt();
                probes.push((-qb + r) / (2.0 * qa));
                probes.push((-qb - r) / (2.0 * qa));
            }
        }
        for v in probes {
            if v >= self.v_min && v <= self.v_max && self.rate(v) <= 0.0 {
                return Err(bad("fuel rate is not positive on the speed range"));
            }
        }
        Ok(())
    }
}

/// Direction of a shortest-time search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Distances from the root.
    Forward,
    /// Distances to the root.
    Reverse,
}

/// Immutable directed multigraph with per-node adjacency lists.
#[derive(Debug, Clone)]
pub struct RoadNetwork {
    names: Vec<String>,
    index: HashMap<String, NodeId>,
    edges: Vec<Edge>,
    out_edges: Vec<Vec<EdgeId>>,
    in_edges: Vec<Vec<EdgeId>>,
}

impl PartialEq for RoadNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names && self.edges == other.edges
    }
}

impl RoadNetwork {
    /// Builds and validates a network from node names and edges.
    pub fn new(names: Vec<String>, edges: Vec<Edge>) -> Result<Self> {
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::DuplicateNode(name.clone()));
            }
        }
        let n = names.len();
        let mut out_edges = vec![Vec::new(); n];
        let mut in_edges = vec![Vec::new(); n];
        let mut ids = HashSet::with_capacity(edges.len());
        for (k, e) in edges.iter().enumerate() {
            if !ids.insert(e.id) {
                return Err(Error::DuplicateEdge(e.id));
            }
            if e.tail >= n || e.head >= n {
                return Err(Error::InvalidEdge {
                    edge: e.id,
                    reason: "endpoint is not a declared node".into(),
                });
            }
            e.validate()?;
            out_edges[e.tail].push(k);
            in_edges[e.head].push(k);
        }
        Ok(Self {
            names,
            index,
            edges,
            out_edges,
            in_edges,
        })
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e]
    }

    pub fn out_edges(&self, v: NodeId) -> &[EdgeId] {
        &self.out_edges[v]
    }

    pub fn in_edges(&self, v: NodeId) -> &[EdgeId] {
        &self.in_edges[v]
    }

    pub fn node_name(&self, v: NodeId) -> &str {
        &self.names[v]
    }

    pub fn node_names(&self) -> &[String] {
        &self.names
    }

    /// Looks a node up by its document name.
    pub fn node(&self, name: &str) -> Result<NodeId> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownNode(name.to_string()))
    }

    pub fn check_node(&self, v: NodeId) -> Result<()> {
        if v < self.node_count() {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange(v))
        }
    }

    /// Network with every edge reversed; ids and attributes are kept.
    pub fn transposed(&self) -> RoadNetwork {
        let edges = self
            .edges
            .iter()
            .map(|e| Edge {
                tail: e.head,
                head: e.tail,
                ..e.clone()
            })
            .collect();
        RoadNetwork::new(self.names.clone(), edges).expect("transpose keeps validity")
    }

    /// Total length in miles of a list of edges.
    pub fn path_length(&self, path: &[EdgeId]) -> f64 {
        path.iter().map(|&e| self.edges[e].length).sum()
    }

    /// Fastest traversal time of a list of edges.
    pub fn path_fastest_time(&self, path: &[EdgeId]) -> f64 {
        path.iter().map(|&e| self.edges[e].t_min()).sum()
    }

    pub fn to_document(&self) -> NetworkDocument {
        NetworkDocument {
            schema: Some(NETWORK_SCHEMA.to_string()),
            nodes: self.names.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeRecord {
                    id: e.id,
                    tail: self.names[e.tail].clone(),
                    head: self.names[e.head].clone(),
                    length_miles: e.length,
                    v_min_mph: e.v_min,
                    v_max_mph: e.v_max,
                    fuel: e.fuel,
                })
                .collect(),
        }
    }

    pub fn from_document(doc: NetworkDocument) -> Result<Self> {
        if let Some(tag) = doc.schema.as_deref().filter(|&t| t != NETWORK_SCHEMA) {
            return Err(Error::InvalidParameter(format!("unsupported network schema `{tag}`")));
        }
        let mut index = HashMap::new();
        for (i, name) in doc.nodes.iter().enumerate() {
            if index.insert(name.as_str(), i).is_some() {
                return Err(Error::DuplicateNode(name.clone()));
            }
        }
        let lookup = |name: &str, edge: u64| {
            index.get(name).copied().ok_or_else(|| Error::InvalidEdge {
                edge,
                reason: format!("unknown node `{name}`"),
            })
        };
        let mut edges = Vec::with_capacity(doc.edges.len());
        for r in &doc.edges {
            edges.push(Edge {
                id: r.id,
                tail: lookup(&r.tail, r.id)?,
                head: lookup(&r.head, r.id)?,
                length: r.length_miles,
                v_min: r.v_min_mph,
                v_max: r.v_max_mph,
                fuel: r.fuel,
            });
        }
        RoadNetwork::new(doc.nodes, edges)
    }

    /// Serializes to a pretty-printed JSON document.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("network serializes")
    }
}

/// One edge as written in a network document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub id: u64,
    pub tail: String,
    pub head: String,
    pub length_miles: f64,
    pub v_min_mph: f64,
    pub v_max_mph: f64,
    /// `[a0, a1, a2, a3]`.
    pub fuel: [f64; 4],
}

/// On-disk network document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub nodes: Vec<String>,
    pub edges: Vec<EdgeRecord>,
}

/// Parses and validates a network document from a byte stream.
pub fn load_network<R: Read>(source: R) -> Result<RoadNetwork> {
    let doc: NetworkDocument = serde_json::from_reader(source)?;
    RoadNetwork::from_document(doc)
}

/// Parameters of the synthetic grid generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridParams {
    /// Miles per link, drawn uniformly.
    pub length_range: (f64, f64),
    /// Lower speed bound in mph, drawn uniformly per link.
    pub v_min_range: (f64, f64),
    /// Upper speed bound in mph, drawn uniformly per link.
    pub v_max_range: (f64, f64),
    /// Base fuel polynomial `[a0, a1, a2, a3]`.
    pub fuel_base: [f64; 4],
    /// Relative jitter applied to `a0` and `a2`.
    pub fuel_jitter: f64,
    /// Upper bound of the cubic coefficient, drawn uniformly from `[0, a3_max]`.
    pub a3_max: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        Self {
            length_range: (20.0, 80.0),
            v_min_range: (10.0, 20.0),
            v_max_range: (60.0, 80.0),
            fuel_base: [1.0, -6e-3, 4e-4, 0.0],
            fuel_jitter: 0.2,
            a3_max: 1e-6,
        }
    }
}

impl GridParams {
    pub fn validate(&self) -> Result<()> {
        let ordered = |(a, b): (f64, f64)| a.is_finite() && b.is_finite() && a > 0.0 && a <= b;
        if !ordered(self.length_range) || !ordered(self.v_min_range) || !ordered(self.v_max_range)
        {
            return Err(Error::InvalidParameter("grid ranges must be positive and ordered".into()));
        }
        if self.v_min_range.1 > self.v_max_range.0 {
            return Err(Error::InvalidParameter("v_min range overlaps v_max range".into()));
        }
        if !(0.0..1.0).contains(&self.fuel_jitter) || self.a3_max < 0.0 {
            return Err(Error::InvalidParameter("fuel jitter must be in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Bidirected `rows x cols` grid with seeded random attributes.
///
/// Each undirected link becomes two directed edges sharing length, speed
/// bounds and fuel coefficients. Node `r * cols + c` is named `n{r}_{c}`.
pub fn generate_grid(rows: usize, cols: usize, seed: u64, params: &GridParams) -> Result<RoadNetwork> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidParameter("grid needs at least one row and column".into()));
    }
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| format!("n{r}_{c}")))
        .collect();
    let mut edges = Vec::new();
    let draw = |a: f64, b: f64, rng: &mut ChaCha8Rng| if a < b { rng.gen_range(a..=b) } else { a };
    let mut links = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            if c + 1 < cols {
                links.push((v, v + 1));
            }
            if r + 1 < rows {
                links.push((v, v + cols));
            }
        }
    }
    for (u, v) in links {
        let length = draw(params.length_range.0, params.length_range.1, &mut rng);
        let v_min = draw(params.v_min_range.0, params.v_min_range.1, &mut rng);
        let v_max = draw(params.v_max_range.0, params.v_max_range.1, &mut rng);
        let j = params.fuel_jitter;
        let [a0, a1, a2, _] = params.fuel_base;
        let fuel = [
            a0 * (1.0 + draw(-j, j, &mut rng)),
            a1,
            a2 * (1.0 + draw(-j, j, &mut rng)),
            draw(0.0, params.a3_max, &mut rng),
        ];
        for (tail, head) in [(u, v), (v, u)] {
            edges.push(Edge {
                id: edges.len() as u64,
                tail,
                head,
                length,
                v_min,
                v_max,
                fuel,
            });
        }
    }
    RoadNetwork::new(names, edges)
}

/// Result of a single-root Dijkstra search.
#[derive(Debug, Clone, PartialEq)]
pub struct ShortestTree {
    pub root: NodeId,
    pub direction: Direction,
    /// Distance from (forward) or to (reverse) the root; `f64::INFINITY` when unreachable.
    pub dist: Vec<f64>,
    /// Tree edge entering the node (forward) or leaving it (reverse).
    pub parent: Vec<Option<EdgeId>>,
}

impl ShortestTree {
    pub fn reachable(&self, v: NodeId) -> bool {
        self.dist[v].is_finite()
    }

    /// Edges of the tree path between the root and `v`, in driving order.
    pub fn path(&self, net: &RoadNetwork, v: NodeId) -> Option<Vec<EdgeId>> {
        if !self.reachable(v) {
            return None;
        }
        let mut edges = Vec::new();
        let mut cur = v;
        while let Some(e) = self.parent[cur] {
            edges.push(e);
            cur = match self.direction {
                Direction::Forward => net.edge(e).tail,
                Direction::Reverse => net.edge(e).head,
            };
        }
        if self.direction == Direction::Forward {
            edges.reverse();
        }
        Some(edges)
    }
}

#[derive(PartialEq)]
struct HeapItem(f64, NodeId);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra under arbitrary nonnegative edge weights.
///
/// Ties settle the lowest node id first; a parent is replaced only by a
/// strictly shorter distance, so the lowest-id edge among equals wins.
pub fn dijkstra<W>(net: &RoadNetwork, root: NodeId, direction: Direction, weight: W) -> ShortestTree
where
    W: Fn(EdgeId) -> f64,
{
    let n = net.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut parent = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[root] = 0.0;
    heap.push(HeapItem(0.0, root));
    while let Some(HeapItem(d, u)) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        let adjacent = match direction {
            Direction::Forward => net.out_edges(u),
            Direction::Reverse => net.in_edges(u),
        };
        for &e in adjacent {
            let edge = net.edge(e);
            let v = match direction {
                Direction::Forward => edge.head,
                Direction::Reverse => edge.tail,
            };
            let nd = d + weight(e);
            if nd < dist[v] {
                dist[v] = nd;
                parent[v] = Some(e);
                heap.push(HeapItem(nd, v));
            }
        }
    }
    ShortestTree {
        root,
        direction,
        dist,
        parent,
    }
}

/// Minimum travel time tree with every edge at its fastest time `D / v_max`.
pub fn shortest_time_tree(net: &RoadNetwork, root: NodeId, direction: Direction) -> Result<ShortestTree> {
    net.check_node(root)?;
    Ok(dijkstra(net, root, direction, |e| net.edge(e).t_min()))
}

/// Shortest distance tree in miles.
pub fn shortest_length_tree(net: &RoadNetwork, root: NodeId, direction: Direction) -> Result<ShortestTree> {
    net.check_node(root)?;
    Ok(dijkstra(net, root, direction, |e| net.edge(e).length))
}
