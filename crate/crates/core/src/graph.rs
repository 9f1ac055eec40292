//! Finite simple graphs, their lifted directed graphs, and edge-subset algebra.
//!
//! Edges are identified by their position in the input (edge id), and an edge
//! set is a 64-bit mask over edge ids. Vertex labels from the input file are
//! re-indexed densely in ascending label order; the original labels are kept
//! for reporting.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest edge count representable by [`EdgeSubset`].
pub const MAX_EDGES: usize = 64;

/// A set of edge ids, stored as a bitmask (bit `e` set iff edge `e` is in the set).
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeSubset(u64);

impl EdgeSubset {
    pub const EMPTY: EdgeSubset = EdgeSubset(0);

    pub fn from_bits(bits: u64) -> Self {
        EdgeSubset(bits)
    }

    /// All of `0..edge_count`.
    pub fn full(edge_count: usize) -> Self {
        if edge_count >= 64 {
            EdgeSubset(u64::MAX)
        } else {
            EdgeSubset((1u64 << edge_count) - 1)
        }
    }

    pub fn singleton(edge: usize) -> Self {
        EdgeSubset(1u64 << edge)
    }

    pub fn from_edges<I: IntoIterator<Item = usize>>(edges: I) -> Self {
        edges.into_iter().fold(Self::EMPTY, |acc, e| acc.with(e))
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, edge: usize) -> bool {
        edge < 64 && self.0 >> edge & 1 == 1
    }

    #[must_use]
    pub fn with(self, edge: usize) -> Self {
        EdgeSubset(self.0 | 1u64 << edge)
    }

    #[must_use]
    pub fn without(self, edge: usize) -> Self {
        EdgeSubset(self.0 & !(1u64 << edge))
    }

    #[must_use]
    pub fn union(self, other: Self) -> Self {
        EdgeSubset(self.0 | other.0)
    }

    #[must_use]
    pub fn intersection(self, other: Self) -> Self {
        EdgeSubset(self.0 & other.0)
    }

    #[must_use]
    pub fn difference(self, other: Self) -> Self {
        EdgeSubset(self.0 & !other.0)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Edge ids in ascending order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let e = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(e)
            }
        })
    }
}

impl fmt::Debug for EdgeSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// An oriented edge `tail -> head`; also a vertex of the lifted graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DirectedEdge {
    pub tail: usize,
    pub head: usize,
    pub edge_id: usize,
}

/// Finite connected simple graph with a marked start vertex.
#[derive(Debug, Clone)]
pub struct Graph {
    labels: Vec<u64>,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<(usize, usize)>>,
    incident: Vec<EdgeSubset>,
    neighborhoods: Vec<EdgeSubset>,
    start: usize,
}

impl Graph {
    /// Builds and validates a graph from labelled edges. Edge ids follow input order.
    pub fn from_labeled_edges(edges: &[(u64, u64)], start_label: u64) -> Result<Graph> {
        let mut seen = BTreeSet::new();
        for &(u, v) in edges {
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::DuplicateEdge { u, v });
            }
        }
        if edges.len() > MAX_EDGES {
            return Err(Error::TooManyEdges(edges.len()));
        }
        let labels: Vec<u64> = edges
            .iter()
            .flat_map(|&(u, v)| [u, v])
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let index: HashMap<u64, usize> = labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
        let start = *index
            .get(&start_label)
            .ok_or(Error::UnknownStartVertex(start_label))?;
        let dense: Vec<(usize, usize)> = edges.iter().map(|&(u, v)| (index[&u], index[&v])).collect();
        Graph::from_dense(labels, dense, start)
    }

    fn from_dense(labels: Vec<u64>, edges: Vec<(usize, usize)>, start: usize) -> Result<Graph> {
        let n = labels.len();
        if n < 3 || edges.len() < 2 {
            return Err(Error::TooSmall { vertices: n, edges: edges.len() });
        }
        let mut adjacency = vec![Vec::new(); n];
        let mut incident = vec![EdgeSubset::EMPTY; n];
        for (e, &(u, v)) in edges.iter().enumerate() {
            adjacency[u].push((v, e));
            adjacency[v].push((u, e));
            incident[u] = incident[u].with(e);
            incident[v] = incident[v].with(e);
        }
        let neighborhoods = edges
            .iter()
            .map(|&(u, v)| incident[u].union(incident[v]))
            .collect();
        let graph = Graph { labels, edges, adjacency, incident, neighborhoods, start };
        if !graph.is_connected_subset(graph.full_set()) {
            return Err(Error::DisconnectedGraph);
        }
        Ok(graph)
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    /// Number of edges.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    /// `(neighbor, edge id)` pairs of `v`, in edge-id order.
    pub fn adjacency(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn start_vertex(&self) -> usize {
        self.start
    }

    pub fn labels(&self) -> &[u64] {
        &self.labels
    }

    pub fn label(&self, v: usize) -> u64 {
        self.labels[v]
    }

    pub fn vertex_of_label(&self, label: u64) -> Option<usize> {
        self.labels.binary_search(&label).ok()
    }

    pub fn full_set(&self) -> EdgeSubset {
        EdgeSubset::full(self.edge_count())
    }

    /// Edges incident to `v`.
    pub fn incident(&self, v: usize) -> EdgeSubset {
        self.incident[v]
    }

    pub fn edge_between(&self, u: usize, v: usize) -> Option<usize> {
        self.adjacency[u].iter().find(|&&(w, _)| w == v).map(|&(_, e)| e)
    }

    /// `E_e`: every edge sharing a vertex with `e`, including `e`.
    pub fn edge_neighborhood(&self, e: usize) -> EdgeSubset {
        self.neighborhoods[e]
    }

    /// `∂E'`: edges of `set` adjacent to some edge outside `set`.
    pub fn boundary_edges(&self, set: EdgeSubset) -> EdgeSubset {
        let outside = self.full_set().difference(set);
        EdgeSubset::from_edges(
            set.iter()
                .filter(|&e| !self.neighborhoods[e].intersection(outside).is_empty()),
        )
    }

    /// Whether `set` is nonempty and its edges form a connected graph on their endpoints.
    pub fn is_connected_subset(&self, set: EdgeSubset) -> bool {
        let Some(first) = set.iter().next() else {
            return false;
        };
        let mut reached = EdgeSubset::singleton(first);
        loop {
            let grown = reached
                .iter()
                .fold(reached, |acc, e| acc.union(self.neighborhoods[e]))
                .intersection(set);
            if grown == reached {
                return reached == set;
            }
            reached = grown;
        }
    }

    /// Whether `set` belongs to the universe of connected, start-incident edge sets.
    pub fn is_admissible(&self, set: EdgeSubset) -> bool {
        !set.intersection(self.incident[self.start]).is_empty() && self.is_connected_subset(set)
    }

    /// Edges adjacent to `set` but not in it.
    pub fn frontier(&self, set: EdgeSubset) -> EdgeSubset {
        set.iter()
            .fold(EdgeSubset::EMPTY, |acc, e| acc.union(self.neighborhoods[e]))
            .difference(set)
    }

    /// True for stars (one vertex on every edge) and for the triangle.
    pub fn is_star_or_triangle(&self) -> bool {
        let full = self.full_set();
        let star = self.incident.contains(&full);
        let triangle = self.vertex_count() == 3 && self.edge_count() == 3;
        star || triangle
    }

    /// `u-v` using input labels.
    pub fn edge_label(&self, e: usize) -> String {
        let (u, v) = self.edges[e];
        format!("{}-{}", self.labels[u], self.labels[v])
    }

    /// Comma-separated `u-v` tokens, ascending edge id.
    pub fn format_set(&self, set: EdgeSubset) -> String {
        set.iter().map(|e| self.edge_label(e)).collect::<Vec<_>>().join(",")
    }

    /// Resolves comma-separated `u-v` tokens against the input labels.
    pub fn parse_edge_tokens(&self, text: &str) -> Result<EdgeSubset> {
        let mut set = EdgeSubset::EMPTY;
        for token in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let unknown = || Error::UnknownEdge(token.to_string());
            let (a, b) = token.split_once('-').ok_or_else(unknown)?;
            let a: u64 = a.trim().parse().map_err(|_| unknown())?;
            let b: u64 = b.trim().parse().map_err(|_| unknown())?;
            let (u, v) = self
                .vertex_of_label(a)
                .zip(self.vertex_of_label(b))
                .ok_or_else(unknown)?;
            let e = self.edge_between(u, v).ok_or_else(unknown)?;
            set = set.with(e);
        }
        Ok(set)
    }

    /// Same graph with vertex labels mapped through `relabel` (edge ids unchanged).
    pub fn relabeled(&self, relabel: impl Fn(u64) -> u64) -> Result<Graph> {
        let edges: Vec<(u64, u64)> = self
            .edges
            .iter()
            .map(|&(u, v)| (relabel(self.labels[u]), relabel(self.labels[v])))
            .collect();
        Graph::from_labeled_edges(&edges, relabel(self.labels[self.start]))
    }
}

/// Parses the edge-list format: one `u v` pair per line, `#` comments, blank lines ignored.
pub fn parse_graph(text: &str, start: u64) -> Result<Graph> {
    let mut edges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |reason: &str| Error::Parse { line: i + 1, reason: reason.to_string() };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(parse_err("expected two vertex labels"));
        }
        let u = fields[0]
            .parse::<u64>()
            .map_err(|_| parse_err("vertex label is not a nonnegative integer"))?;
        let v = fields[1]
            .parse::<u64>()
            .map_err(|_| parse_err("vertex label is not a nonnegative integer"))?;
        edges.push((u, v));
    }
    Graph::from_labeled_edges(&edges, start)
}

/// Directed graph on oriented edges; `z1 -> z2` iff `head(z1) == tail(z2)`.
#[derive(Debug, Clone)]
pub struct LiftedGraph {
    nodes: Vec<DirectedEdge>,
    out_adjacency: Vec<Vec<usize>>,
}

impl LiftedGraph {
    pub fn nodes(&self) -> &[DirectedEdge] {
        &self.nodes
    }

    pub fn node(&self, z: usize) -> DirectedEdge {
        self.nodes[z]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn successors(&self, z: usize) -> &[usize] {
        &self.out_adjacency[z]
    }

    pub fn out_degree(&self, z: usize) -> usize {
        self.out_adjacency[z].len()
    }

    /// Index of the node `tail -> head` on edge `edge_id`.
    pub fn index_of(&self, g: &Graph, tail: usize, head: usize) -> Option<usize> {
        let e = g.edge_between(tail, head)?;
        let (u, v) = g.edge(e);
        let forward = u.min(v) == tail;
        Some(2 * e + usize::from(!forward))
    }

    /// The node with the same edge and opposite orientation.
    pub fn reversal(z: usize) -> usize {
        z ^ 1
    }

    /// `D(E')`: node indices whose underlying edge lies in `set`, ascending.
    pub fn nodes_over(&self, set: EdgeSubset) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&z| set.contains(self.nodes[z].edge_id))
            .collect()
    }

    /// Nodes of `D(set)` with a successor outside `D(set)`.
    pub fn lifted_boundary(&self, set: EdgeSubset) -> Vec<usize> {
        self.nodes_over(set)
            .into_iter()
            .filter(|&z| {
                self.out_adjacency[z]
                    .iter()
                    .any(|&w| !set.contains(self.nodes[w].edge_id))
            })
            .collect()
    }
}

/// Builds the lifted graph. Node `2e` is edge `e` oriented from its smaller
/// dense vertex id to its larger one; node `2e + 1` is the reverse.
pub fn lift(g: &Graph) -> LiftedGraph {
    let mut nodes = Vec::with_capacity(2 * g.edge_count());
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        let (a, b) = (u.min(v), u.max(v));
        nodes.push(DirectedEdge { tail: a, head: b, edge_id: e });
        nodes.push(DirectedEdge { tail: b, head: a, edge_id: e });
    }
    let out_adjacency = nodes
        .iter()
        .map(|z| {
            let mut succ: Vec<usize> = g
                .adjacency(z.head)
                .iter()
                .map(|&(w, e)| 2 * e + usize::from(z.head > w))
                .collect();
            succ.sort_unstable();
            succ
        })
        .collect();
    LiftedGraph { nodes, out_adjacency }
}
