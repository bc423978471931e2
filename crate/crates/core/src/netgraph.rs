//! Peer topology graphs, exact connectivity metrics, topology generators,
//! and the decentralisation predicate.
//!
//! Connectivity is computed exactly with unit-capacity maximum flows — no
//! approximation. Desk-scale graphs (hundreds of nodes) keep this affordable:
//! edge connectivity needs `|V| - 1` flow computations and vertex
//! connectivity one per non-adjacent pair on the split graph. Distances for
//! the mean shortest path are hop counts, exactly as the decentralisation
//! definition states them; latency-weighted paths belong to the propagation
//! simulator instead.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::RngExt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{rng_for, SimRng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRole {
    Miner,
    Relay,
    SpvClient,
}

impl NodeRole {
    pub fn as_str(&self) -> &'static str {
        match self {
            NodeRole::Miner => "miner",
            NodeRole::Relay => "relay",
            NodeRole::SpvClient => "spv_client",
        }
    }

    pub fn parse(s: &str) -> Option<NodeRole> {
        match s {
            "miner" => Some(NodeRole::Miner),
            "relay" => Some(NodeRole::Relay),
            "spv_client" => Some(NodeRole::SpvClient),
            _ => None,
        }
    }
}

/// Undirected edge with link attributes. Stored with `a < b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: u32,
    pub b: u32,
    pub latency_ms: f64,
    pub bandwidth_bps: f64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("node id {0} out of range")]
    NodeOutOfRange(u32),
    #[error("self-loop at node {0}")]
    SelfLoop(u32),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(u32, u32),
    #[error("edge {0}-{1} has non-finite or non-positive attributes")]
    BadEdgeAttributes(u32, u32),
    #[error("graph needs at least two vertices")]
    TooFewVertices,
    #[error("graph is disconnected")]
    Disconnected,
    #[error("connectivity thresholds must exceed 1 (got k={k}, l={l})")]
    InvalidThreshold { k: u32, l: u32 },
    #[error("invalid topology parameters: {0}")]
    InvalidParams(String),
    #[error("graph file line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Undirected peer topology: dense node ids `0..n`, each node carrying a
/// role, each edge carrying latency and bandwidth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkGraph {
    roles: Vec<NodeRole>,
    edges: Vec<Edge>,
    #[serde(skip)]
    adjacency: Vec<Vec<(u32, u32)>>, // (neighbor, edge index), sorted by neighbor
}

impl NetworkGraph {
    pub fn new(roles: Vec<NodeRole>, mut edges: Vec<Edge>) -> Result<Self, GraphError> {
        let n = roles.len() as u32;
        let mut seen = BTreeSet::new();
        for edge in &mut edges {
            if edge.a >= n {
                return Err(GraphError::NodeOutOfRange(edge.a));
            }
            if edge.b >= n {
                return Err(GraphError::NodeOutOfRange(edge.b));
            }
            if edge.a == edge.b {
                return Err(GraphError::SelfLoop(edge.a));
            }
            if edge.a > edge.b {
                std::mem::swap(&mut edge.a, &mut edge.b);
            }
            if !seen.insert((edge.a, edge.b)) {
                return Err(GraphError::DuplicateEdge(edge.a, edge.b));
            }
            if !edge.latency_ms.is_finite()
                || edge.latency_ms < 0.0
                || !edge.bandwidth_bps.is_finite()
                || edge.bandwidth_bps <= 0.0
            {
                return Err(GraphError::BadEdgeAttributes(edge.a, edge.b));
            }
        }
        edges.sort_by_key(|e| (e.a, e.b));
        let mut graph = NetworkGraph {
            roles,
            edges,
            adjacency: Vec::new(),
        };
        graph.rebuild_adjacency();
        Ok(graph)
    }

    fn rebuild_adjacency(&mut self) {
        let mut adjacency = vec![Vec::new(); self.roles.len()];
        for (idx, edge) in self.edges.iter().enumerate() {
            adjacency[edge.a as usize].push((edge.b, idx as u32));
            adjacency[edge.b as usize].push((edge.a, idx as u32));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        self.adjacency = adjacency;
    }

    pub fn node_count(&self) -> usize {
        self.roles.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn roles(&self) -> &[NodeRole] {
        &self.roles
    }

    pub fn role(&self, node: u32) -> NodeRole {
        self.roles[node as usize]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, index: u32) -> &Edge {
        &self.edges[index as usize]
    }

    /// Neighbors of `node` as (neighbor id, edge index), sorted by id.
    pub fn neighbors(&self, node: u32) -> &[(u32, u32)] {
        &self.adjacency[node as usize]
    }

    pub fn degree(&self, node: u32) -> u32 {
        self.adjacency[node as usize].len() as u32
    }

    pub fn min_degree(&self) -> u32 {
        (0..self.node_count() as u32)
            .map(|v| self.degree(v))
            .min()
            .unwrap_or(0)
    }

    pub fn contains_edge(&self, a: u32, b: u32) -> bool {
        self.adjacency[a as usize]
            .binary_search_by_key(&b, |&(nb, _)| nb)
            .is_ok()
    }

    pub fn miners(&self) -> impl Iterator<Item = u32> + '_ {
        self.roles
            .iter()
            .enumerate()
            .filter(|(_, r)| **r == NodeRole::Miner)
            .map(|(i, _)| i as u32)
    }

    /// Hop distances from `source` to every node; `u32::MAX` if unreachable.
    pub fn bfs_distances(&self, source: u32) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.node_count()];
        dist[source as usize] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for &(v, _) in self.neighbors(u) {
                if dist[v as usize] == u32::MAX {
                    dist[v as usize] = dist[u as usize] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        if self.node_count() == 0 {
            return true;
        }
        self.bfs_distances(0).iter().all(|&d| d != u32::MAX)
    }

    /// Interchange text format: a header line `<n> <role_0> ... <role_{n-1}>`
    /// followed by one `<u> <v> <latency_ms> <bandwidth_bps>` line per edge.
    /// Lines starting with `#` are comments.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.roles.len().to_string());
        for role in &self.roles {
            out.push(' ');
            out.push_str(role.as_str());
        }
        out.push('\n');
        for edge in &self.edges {
            writeln!(
                out,
                "{} {} {} {}",
                edge.a, edge.b, edge.latency_ms, edge.bandwidth_bps
            )
            .expect("writing to string cannot fail");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, GraphError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (header_line, header) = lines.next().ok_or(GraphError::Parse {
            line: 1,
            reason: "missing header line".into(),
        })?;
        let mut fields = header.split_whitespace();
        let n: usize = fields
            .next()
            .and_then(|f| f.parse().ok())
            .ok_or(GraphError::Parse {
                line: header_line,
                reason: "header must start with the node count".into(),
            })?;
        let roles: Vec<NodeRole> = fields
            .map(|f| {
                NodeRole::parse(f).ok_or(GraphError::Parse {
                    line: header_line,
                    reason: format!("unknown role '{f}'"),
                })
            })
            .collect::<Result<_, _>>()?;
        if roles.len() != n {
            return Err(GraphError::Parse {
                line: header_line,
                reason: format!("expected {n} roles, found {}", roles.len()),
            });
        }
        let mut edges = Vec::new();
        for (line, text) in lines {
            let fields: Vec<&str> = text.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(GraphError::Parse {
                    line,
                    reason: "edge lines are '<u> <v> <latency_ms> <bandwidth_bps>'".into(),
                });
            }
            let parse_err = |what: &str| GraphError::Parse {
                line,
                reason: format!("bad {what}"),
            };
            edges.push(Edge {
                a: fields[0].parse().map_err(|_| parse_err("node id"))?,
                b: fields[1].parse().map_err(|_| parse_err("node id"))?,
                latency_ms: fields[2].parse().map_err(|_| parse_err("latency"))?,
                bandwidth_bps: fields[3].parse().map_err(|_| parse_err("bandwidth"))?,
            });
        }
        NetworkGraph::new(roles, edges)
    }
}

// ---------------------------------------------------------------------------
// Unit-capacity maximum flow (Edmonds–Karp), used by both connectivity metrics.

struct FlowNet {
    to: Vec<u32>,
    cap: Vec<i32>,
    head: Vec<Vec<u32>>, // per node: indices into `to`/`cap`
}

const INF_CAP: i32 = i32::MAX / 2;

impl FlowNet {
    fn new(n: usize) -> Self {
        FlowNet {
            to: Vec::new(),
            cap: Vec::new(),
            head: vec![Vec::new(); n],
        }
    }

    /// Directed arc plus its zero-capacity reverse; arcs are paired as
    /// `e` and `e ^ 1`.
    fn add_arc(&mut self, u: u32, v: u32, cap: i32) {
        self.head[u as usize].push(self.to.len() as u32);
        self.to.push(v);
        self.cap.push(cap);
        self.head[v as usize].push(self.to.len() as u32);
        self.to.push(u);
        self.cap.push(0);
    }

    fn max_flow(&mut self, source: u32, sink: u32, stop_at: i32) -> i32 {
        let mut flow = 0;
        let mut parent_arc = vec![u32::MAX; self.head.len()];
        while flow < stop_at {
            parent_arc.fill(u32::MAX);
            parent_arc[source as usize] = u32::MAX - 1;
            let mut queue = VecDeque::from([source]);
            let mut reached = false;
            'bfs: while let Some(u) = queue.pop_front() {
                for &arc in &self.head[u as usize] {
                    let v = self.to[arc as usize];
                    if self.cap[arc as usize] > 0 && parent_arc[v as usize] == u32::MAX {
                        parent_arc[v as usize] = arc;
                        if v == sink {
                            reached = true;
                            break 'bfs;
                        }
                        queue.push_back(v);
                    }
                }
            }
            if !reached {
                break;
            }
            // Bottleneck along the path, then augment.
            let mut bottleneck = INF_CAP;
            let mut v = sink;
            while v != source {
                let arc = parent_arc[v as usize];
                bottleneck = bottleneck.min(self.cap[arc as usize]);
                v = self.to[(arc ^ 1) as usize];
            }
            let mut v = sink;
            while v != source {
                let arc = parent_arc[v as usize];
                self.cap[arc as usize] -= bottleneck;
                self.cap[(arc ^ 1) as usize] += bottleneck;
                v = self.to[(arc ^ 1) as usize];
            }
            flow += bottleneck;
        }
        flow
    }
}

/// Max number of edge-disjoint paths between two vertices.
fn edge_disjoint_paths(g: &NetworkGraph, s: u32, t: u32, stop_at: i32) -> i32 {
    let mut net = FlowNet::new(g.node_count());
    for edge in g.edges() {
        // An undirected unit edge is usable in either direction.
        net.add_arc(edge.a, edge.b, 1);
        net.add_arc(edge.b, edge.a, 1);
    }
    net.max_flow(s, t, stop_at)
}

/// Max number of internally vertex-disjoint paths between two non-adjacent
/// vertices, via the standard vertex-split construction.
fn vertex_disjoint_paths(g: &NetworkGraph, s: u32, t: u32, stop_at: i32) -> i32 {
    let n = g.node_count() as u32;
    // v_in = 2v, v_out = 2v + 1
    let mut net = FlowNet::new(2 * n as usize);
    for v in 0..n {
        let cap = if v == s || v == t { INF_CAP } else { 1 };
        net.add_arc(2 * v, 2 * v + 1, cap);
    }
    for edge in g.edges() {
        net.add_arc(2 * edge.a + 1, 2 * edge.b, INF_CAP);
        net.add_arc(2 * edge.b + 1, 2 * edge.a, INF_CAP);
    }
    net.max_flow(2 * s + 1, 2 * t, stop_at)
}

/// Exact edge connectivity λ(G): the minimum over s–t maximum flows with unit
/// edge capacities, s fixed, t ranging over all other vertices. Zero for
/// disconnected graphs.
pub fn edge_connectivity(g: &NetworkGraph) -> Result<u32, GraphError> {
    if g.node_count() < 2 {
        return Err(GraphError::TooFewVertices);
    }
    let mut best = i32::MAX;
    for t in 1..g.node_count() as u32 {
        best = best.min(edge_disjoint_paths(g, 0, t, best));
        if best == 0 {
            break;
        }
    }
    Ok(best as u32)
}

/// Exact vertex connectivity κ(G): the minimum of vertex-split maximum flows
/// over all non-adjacent pairs, with κ(Kₙ) = n − 1 for complete graphs by
/// convention. Zero for disconnected graphs.
pub fn vertex_connectivity(g: &NetworkGraph) -> Result<u32, GraphError> {
    let n = g.node_count() as u32;
    if n < 2 {
        return Err(GraphError::TooFewVertices);
    }
    let mut best = i32::MAX;
    for u in 0..n {
        for v in (u + 1)..n {
            if g.contains_edge(u, v) {
                continue;
            }
            best = best.min(vertex_disjoint_paths(g, u, v, best));
            if best == 0 {
                return Ok(0);
            }
        }
    }
    if best == i32::MAX {
        // No non-adjacent pair: complete graph.
        return Ok(n - 1);
    }
    Ok(best as u32)
}

/// Mean shortest path in hops, averaged over ordered pairs `u != v`.
pub fn mean_shortest_path(g: &NetworkGraph) -> Result<f64, GraphError> {
    let (sum, pairs) = path_length_sum(g)?;
    Ok(sum as f64 / pairs as f64)
}

/// Sum of pairwise hop distances over ordered pairs, plus the pair count.
fn path_length_sum(g: &NetworkGraph) -> Result<(u64, u64), GraphError> {
    let n = g.node_count();
    if n < 2 {
        return Err(GraphError::TooFewVertices);
    }
    let mut sum: u64 = 0;
    for source in 0..n as u32 {
        for &d in &g.bfs_distances(source) {
            if d == u32::MAX {
                return Err(GraphError::Disconnected);
            }
            sum += d as u64;
        }
    }
    Ok((sum, (n as u64) * (n as u64 - 1)))
}

/// Exact connectivity metrics of a graph. `mean_path` and `diameter` are
/// `None` when the graph is disconnected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityReport {
    pub kappa: u32,
    pub lambda: u32,
    pub min_degree: u32,
    pub mean_path: Option<f64>,
    pub diameter: Option<u32>,
}

pub fn connectivity_report(g: &NetworkGraph) -> Result<ConnectivityReport, GraphError> {
    if g.node_count() < 2 {
        return Err(GraphError::TooFewVertices);
    }
    let kappa = vertex_connectivity(g)?;
    let lambda = edge_connectivity(g)?;
    let (mean_path, diameter) = if g.is_connected() {
        let mean = mean_shortest_path(g)?;
        let diameter = (0..g.node_count() as u32)
            .map(|s| g.bfs_distances(s).into_iter().max().unwrap_or(0))
            .max()
            .unwrap_or(0);
        (Some(mean), Some(diameter))
    } else {
        (None, None)
    };
    Ok(ConnectivityReport {
        kappa,
        lambda,
        min_degree: g.min_degree(),
        mean_path,
        diameter,
    })
}

/// Decentralisation verdict for one graph against the three thresholds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct S3Report {
    pub holds: bool,
    pub min_vertex_connectivity: u32,
    pub min_edge_connectivity: u32,
    pub max_mean_path: f64,
    pub report: ConnectivityReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Topological decentralisation: κ(G) ≥ k ∧ λ(G) ≥ l ∧ mean path ≤ bound,
/// with k, l > 1 enforced — thresholds of 1 or 0 would declare a star or a
/// chain "decentralised", which the definition explicitly rules out.
pub fn evaluate_s3(
    g: &NetworkGraph,
    k: u32,
    l: u32,
    max_mean_path: f64,
) -> Result<S3Report, GraphError> {
    if k <= 1 || l <= 1 {
        return Err(GraphError::InvalidThreshold { k, l });
    }
    let report = connectivity_report(g)?;
    let holds = report.kappa >= k
        && report.lambda >= l
        && report.mean_path.is_some_and(|d| d <= max_mean_path);
    Ok(S3Report {
        holds,
        min_vertex_connectivity: k,
        min_edge_connectivity: l,
        max_mean_path,
        report,
        error: None,
    })
}

// ---------------------------------------------------------------------------
// Topology generators.

/// Generator parameters for each supported topology family.
///
/// `BaranLattice` realizes lattice redundancy levels: level 1 is the plain
/// rows×cols grid, level 2 adds row and column wraparound (torus), level 3
/// adds main diagonals, level 4 adds anti-diagonals. Each level strictly
/// increases path multiplicity, deterministically.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    Ring {
        n: u32,
    },
    Star {
        leaves: u32,
    },
    Tree {
        n: u32,
        arity: u32,
    },
    Grid {
        rows: u32,
        cols: u32,
    },
    RandomRegular {
        n: u32,
        degree: u32,
    },
    BaranLattice {
        rows: u32,
        cols: u32,
        redundancy: u32,
    },
}

impl TopologyKind {
    pub fn name(&self) -> &'static str {
        match self {
            TopologyKind::Ring { .. } => "ring",
            TopologyKind::Star { .. } => "star",
            TopologyKind::Tree { .. } => "tree",
            TopologyKind::Grid { .. } => "grid",
            TopologyKind::RandomRegular { .. } => "random_regular",
            TopologyKind::BaranLattice { .. } => "baran_lattice",
        }
    }
}

/// Node-role proportions; the remainder are relays.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoleMix {
    pub miner_fraction: f64,
    pub spv_fraction: f64,
}

impl Default for RoleMix {
    fn default() -> Self {
        RoleMix {
            miner_fraction: 0.0,
            spv_fraction: 0.0,
        }
    }
}

/// Uniform link attributes applied to every generated edge.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkProfile {
    pub latency_ms: f64,
    pub bandwidth_bps: f64,
}

impl Default for LinkProfile {
    fn default() -> Self {
        LinkProfile {
            latency_ms: 50.0,
            bandwidth_bps: 1_000_000.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopologySpec {
    pub kind: TopologyKind,
    #[serde(default)]
    pub roles: RoleMix,
    #[serde(default)]
    pub link: LinkProfile,
}

/// Deterministic topology generation: same `(spec, seed)`, same graph.
/// The seed drives random-regular wiring and role assignment.
pub fn generate_topology(spec: &TopologySpec, seed: u64) -> Result<NetworkGraph, GraphError> {
    let pairs: Vec<(u32, u32)>;
    let n: u32;
    match spec.kind {
        TopologyKind::Ring { n: size } => {
            if size < 3 {
                return Err(GraphError::InvalidParams("ring needs n >= 3".into()));
            }
            n = size;
            pairs = (0..size).map(|i| (i, (i + 1) % size)).collect();
        }
        TopologyKind::Star { leaves } => {
            if leaves < 1 {
                return Err(GraphError::InvalidParams(
                    "star needs at least 1 leaf".into(),
                ));
            }
            n = leaves + 1;
            pairs = (1..=leaves).map(|leaf| (0, leaf)).collect();
        }
        TopologyKind::Tree { n: size, arity } => {
            if size < 2 || arity < 1 {
                return Err(GraphError::InvalidParams(
                    "tree needs n >= 2 and arity >= 1".into(),
                ));
            }
            n = size;
            pairs = (1..size).map(|i| ((i - 1) / arity, i)).collect();
        }
        TopologyKind::Grid { rows, cols } => {
            if rows * cols < 2 {
                return Err(GraphError::InvalidParams(
                    "grid needs at least 2 nodes".into(),
                ));
            }
            n = rows * cols;
            pairs = grid_pairs(rows, cols);
        }
        TopologyKind::RandomRegular { n: size, degree } => {
            if degree >= size || (size as u64 * degree as u64) % 2 != 0 {
                return Err(GraphError::InvalidParams(
                    "random regular graph needs degree < n and n*degree even".into(),
                ));
            }
            n = size;
            pairs = random_regular_pairs(size, degree, &mut rng_for(seed, "topology-wiring", 0))?;
        }
        TopologyKind::BaranLattice {
            rows,
            cols,
            redundancy,
        } => {
            if rows < 2 || cols < 2 {
                return Err(GraphError::InvalidParams(
                    "baran lattice needs rows >= 2 and cols >= 2".into(),
                ));
            }
            if !(1..=4).contains(&redundancy) {
                return Err(GraphError::InvalidParams(
                    "baran lattice redundancy level must be 1..=4".into(),
                ));
            }
            n = rows * cols;
            pairs = baran_pairs(rows, cols, redundancy);
        }
    }

    let edges = pairs
        .into_iter()
        .map(|(a, b)| Edge {
            a,
            b,
            latency_ms: spec.link.latency_ms,
            bandwidth_bps: spec.link.bandwidth_bps,
        })
        .collect();
    let roles = assign_roles(n, &spec.roles, &mut rng_for(seed, "topology-roles", 0))?;
    NetworkGraph::new(roles, edges)
}

fn grid_pairs(rows: u32, cols: u32) -> Vec<(u32, u32)> {
    let id = |r: u32, c: u32| r * cols + c;
    let mut pairs = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                pairs.push((id(r, c), id(r, c + 1)));
            }
            if r + 1 < rows {
                pairs.push((id(r, c), id(r + 1, c)));
            }
        }
    }
    pairs
}

fn baran_pairs(rows: u32, cols: u32, redundancy: u32) -> Vec<(u32, u32)> {
    let id = |r: u32, c: u32| (r % rows) * cols + (c % cols);
    let mut set: BTreeSet<(u32, u32)> = BTreeSet::new();
    let add = |a: u32, b: u32, set: &mut BTreeSet<(u32, u32)>| {
        if a != b {
            set.insert((a.min(b), a.max(b)));
        }
    };
    for (a, b) in grid_pairs(rows, cols) {
        add(a, b, &mut set);
    }
    if redundancy >= 2 {
        for r in 0..rows {
            add(id(r, cols - 1), id(r, 0), &mut set);
        }
        for c in 0..cols {
            add(id(rows - 1, c), id(0, c), &mut set);
        }
    }
    if redundancy >= 3 {
        for r in 0..rows {
            for c in 0..cols {
                add(id(r, c), id(r + 1, c + 1), &mut set);
            }
        }
    }
    if redundancy >= 4 {
        for r in 0..rows {
            for c in 0..cols {
                add(id(r, c), id(r + 1, c + cols - 1), &mut set);
            }
        }
    }
    set.into_iter().collect()
}

/// Random regular graph by incremental stub matching (Steger–Wormald):
/// repeatedly pair two random free stubs whose edge is legal, restarting the
/// construction when the remaining stubs admit no legal pair.
fn random_regular_pairs(
    n: u32,
    degree: u32,
    rng: &mut SimRng,
) -> Result<Vec<(u32, u32)>, GraphError> {
    if degree == 0 {
        return Err(GraphError::InvalidParams(
            "random regular graph needs degree >= 1".into(),
        ));
    }
    'restart: for _ in 0..1_000 {
        let mut stubs: Vec<u32> = (0..n)
            .flat_map(|v| std::iter::repeat_n(v, degree as usize))
            .collect();
        stubs.shuffle(rng);
        let mut edges: BTreeSet<(u32, u32)> = BTreeSet::new();
        while !stubs.is_empty() {
            let mut paired = false;
            // Random draws first; fall back to a full scan before giving up.
            for _ in 0..50 {
                let i = rng.random_range(0..stubs.len());
                let mut j = rng.random_range(0..stubs.len());
                if stubs.len() > 1 {
                    while j == i {
                        j = rng.random_range(0..stubs.len());
                    }
                }
                let (u, v) = (stubs[i], stubs[j]);
                let key = (u.min(v), u.max(v));
                if u != v && !edges.contains(&key) {
                    edges.insert(key);
                    let (hi, lo) = (i.max(j), i.min(j));
                    stubs.swap_remove(hi);
                    stubs.swap_remove(lo);
                    paired = true;
                    break;
                }
            }
            if !paired {
                let legal = stubs.iter().enumerate().any(|(i, &u)| {
                    stubs
                        .iter()
                        .skip(i + 1)
                        .any(|&v| u != v && !edges.contains(&(u.min(v), u.max(v))))
                });
                if !legal {
                    continue 'restart;
                }
            }
        }
        return Ok(edges.into_iter().collect());
    }
    Err(GraphError::InvalidParams(
        "random regular construction did not converge; parameters too tight".into(),
    ))
}

fn assign_roles(n: u32, mix: &RoleMix, rng: &mut SimRng) -> Result<Vec<NodeRole>, GraphError> {
    if !(0.0..=1.0).contains(&mix.miner_fraction)
        || !(0.0..=1.0).contains(&mix.spv_fraction)
        || mix.miner_fraction + mix.spv_fraction > 1.0
    {
        return Err(GraphError::InvalidParams(
            "role fractions must be within [0,1] and sum to at most 1".into(),
        ));
    }
    let miners = (n as f64 * mix.miner_fraction).floor() as usize;
    let spv = (n as f64 * mix.spv_fraction).floor() as usize;
    let mut ids: Vec<u32> = (0..n).collect();
    ids.shuffle(rng);
    let mut roles = vec![NodeRole::Relay; n as usize];
    for &id in ids.iter().take(miners) {
        roles[id as usize] = NodeRole::Miner;
    }
    for &id in ids.iter().skip(miners).take(spv) {
        roles[id as usize] = NodeRole::SpvClient;
    }
    Ok(roles)
}

/// Convenience: all-relay graph from bare adjacency pairs with default links.
pub fn graph_from_pairs(n: u32, pairs: &[(u32, u32)]) -> Result<NetworkGraph, GraphError> {
    let link = LinkProfile::default();
    NetworkGraph::new(
        vec![NodeRole::Relay; n as usize],
        pairs
            .iter()
            .map(|&(a, b)| Edge {
                a,
                b,
                latency_ms: link.latency_ms,
                bandwidth_bps: link.bandwidth_bps,
            })
            .collect(),
    )
}
