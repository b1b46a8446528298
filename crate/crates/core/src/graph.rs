//! Finite directed graphs with range/source maps.
//!
//! An edge `e` points from `s(e)` to `r(e)`; a path `e_1 ... e_n` satisfies
//! `s(e_i) = r(e_{i+1})`, so paths compose right to left. `vE^1` is the set of
//! edges with range `v`, and a vertex with `vE^1` empty is a *source*.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeId(pub usize);

/// Graph description as it appears on disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawGraph {
    pub vertices: Vec<String>,
    pub edges: Vec<RawEdge>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawEdge {
    pub id: String,
    pub range: String,
    pub source: String,
}

impl RawGraph {
    /// Convenience constructor from `(id, range, source)` triples.
    pub fn new(vertices: &[&str], edges: &[(&str, &str, &str)]) -> Self {
        RawGraph {
            vertices: vertices.iter().map(|s| s.to_string()).collect(),
            edges: edges
                .iter()
                .map(|(id, r, s)| RawEdge {
                    id: id.to_string(),
                    range: r.to_string(),
                    source: s.to_string(),
                })
                .collect(),
        }
    }
}

/// Problems found while validating a [`RawGraph`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphIssue {
    DuplicateId(String),
    UnknownVertex { edge: String, vertex: String },
    InvalidId(String),
    /// `vE^1` is empty. Not fatal for validation; downstream modules reject it.
    HasSource(String),
}

impl GraphIssue {
    pub fn is_fatal(&self) -> bool {
        !matches!(self, GraphIssue::HasSource(_))
    }
}

impl fmt::Display for GraphIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphIssue::DuplicateId(id) => write!(f, "duplicate id `{id}`"),
            GraphIssue::UnknownVertex { edge, vertex } => {
                write!(f, "edge `{edge}` references unknown vertex `{vertex}`")
            }
            GraphIssue::InvalidId(id) => write!(f, "invalid id `{id}`"),
            GraphIssue::HasSource(v) => write!(f, "vertex `{v}` is a source"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Graph {
    vertex_names: Vec<String>,
    edge_names: Vec<String>,
    range: Vec<VertexId>,
    source: Vec<VertexId>,
    by_range: Vec<Vec<EdgeId>>,
    by_source: Vec<Vec<EdgeId>>,
    pos_in_range: Vec<usize>,
    vertex_index: HashMap<String, VertexId>,
    edge_index: HashMap<String, EdgeId>,
}

/// Validate a raw description. Fatal issues are returned as the error; sources
/// are tolerated here and reported by [`Graph::sources`].
pub fn validate_graph(raw: &RawGraph) -> std::result::Result<Graph, Vec<GraphIssue>> {
    let mut issues = Vec::new();
    let mut seen = HashSet::new();
    for v in &raw.vertices {
        if v.is_empty() {
            issues.push(GraphIssue::InvalidId(v.clone()));
        }
        if !seen.insert(v.as_str()) {
            issues.push(GraphIssue::DuplicateId(v.clone()));
        }
    }
    let mut seen_edges = HashSet::new();
    for e in &raw.edges {
        // edge ids appear in dotted path keys
        if e.id.is_empty() || e.id.contains('.') || e.id.starts_with('@') {
            issues.push(GraphIssue::InvalidId(e.id.clone()));
        }
        if !seen_edges.insert(e.id.as_str()) {
            issues.push(GraphIssue::DuplicateId(e.id.clone()));
        }
        for end in [&e.range, &e.source] {
            if !seen.contains(end.as_str()) {
                issues.push(GraphIssue::UnknownVertex {
                    edge: e.id.clone(),
                    vertex: end.clone(),
                });
            }
        }
    }
    if !issues.is_empty() {
        return Err(issues);
    }
    Ok(Graph::build(raw))
}

impl Graph {
    fn build(raw: &RawGraph) -> Graph {
        let vertex_index: HashMap<String, VertexId> = raw
            .vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), VertexId(i)))
            .collect();
        let nv = raw.vertices.len();
        let mut range = Vec::with_capacity(raw.edges.len());
        let mut source = Vec::with_capacity(raw.edges.len());
        let mut by_range = vec![Vec::new(); nv];
        let mut by_source = vec![Vec::new(); nv];
        let mut pos_in_range = Vec::with_capacity(raw.edges.len());
        let mut edge_index = HashMap::new();
        for (i, e) in raw.edges.iter().enumerate() {
            let r = vertex_index[&e.range];
            let s = vertex_index[&e.source];
            range.push(r);
            source.push(s);
            pos_in_range.push(by_range[r.0].len());
            by_range[r.0].push(EdgeId(i));
            by_source[s.0].push(EdgeId(i));
            edge_index.insert(e.id.clone(), EdgeId(i));
        }
        Graph {
            vertex_names: raw.vertices.clone(),
            edge_names: raw.edges.iter().map(|e| e.id.clone()).collect(),
            range,
            source,
            by_range,
            by_source,
            pos_in_range,
            vertex_index,
            edge_index,
        }
    }

    /// Validate and fail on any fatal issue.
    pub fn from_raw(raw: &RawGraph) -> Result<Graph> {
        validate_graph(raw).map_err(Error::InvalidGraph)
    }

    pub fn to_raw(&self) -> RawGraph {
        RawGraph {
            vertices: self.vertex_names.clone(),
            edges: (0..self.edge_count())
                .map(|i| RawEdge {
                    id: self.edge_names[i].clone(),
                    range: self.vertex_names[self.range[i].0].clone(),
                    source: self.vertex_names[self.source[i].0].clone(),
                })
                .collect(),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_names.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        (0..self.vertex_count()).map(VertexId)
    }

    pub fn edges(&self) -> impl Iterator<Item = EdgeId> {
        (0..self.edge_count()).map(EdgeId)
    }

    pub fn range(&self, e: EdgeId) -> VertexId {
        self.range[e.0]
    }

    pub fn source(&self, e: EdgeId) -> VertexId {
        self.source[e.0]
    }

    /// `vE^1`, in edge order.
    pub fn edges_with_range(&self, v: VertexId) -> &[EdgeId] {
        &self.by_range[v.0]
    }

    /// `E^1v`, in edge order.
    pub fn edges_with_source(&self, v: VertexId) -> &[EdgeId] {
        &self.by_source[v.0]
    }

    /// Position of `e` inside `edges_with_range(r(e))`.
    pub(crate) fn position_in_range(&self, e: EdgeId) -> usize {
        self.pos_in_range[e.0]
    }

    pub fn vertex_name(&self, v: VertexId) -> &str {
        &self.vertex_names[v.0]
    }

    pub fn edge_name(&self, e: EdgeId) -> &str {
        &self.edge_names[e.0]
    }

    pub fn vertex(&self, name: &str) -> Result<VertexId> {
        self.vertex_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownVertex(name.to_string()))
    }

    pub fn edge(&self, name: &str) -> Result<EdgeId> {
        self.edge_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownEdge(name.to_string()))
    }

    /// Vertices with `vE^1` empty.
    pub fn sources(&self) -> Vec<VertexId> {
        self.vertices()
            .filter(|v| self.by_range[v.0].is_empty())
            .collect()
    }

    pub fn require_no_sources(&self) -> Result<()> {
        match self.sources().first() {
            Some(v) => Err(Error::HasSource(self.vertex_name(*v).to_string())),
            None => Ok(()),
        }
    }

    /// Issues that do not block construction.
    pub fn issues(&self) -> Vec<GraphIssue> {
        self.sources()
            .into_iter()
            .map(|v| GraphIssue::HasSource(self.vertex_name(v).to_string()))
            .collect()
    }

    pub fn adjacency(&self) -> AdjacencyMatrix {
        let n = self.vertex_count();
        let mut m = vec![vec![0u64; n]; n];
        for e in self.edges() {
            m[self.range(e).0][self.source(e).0] += 1;
        }
        AdjacencyMatrix { entries: m }
    }

    /// Arcs followed from source to range.
    fn successors(&self) -> Vec<Vec<usize>> {
        let mut succ = vec![Vec::new(); self.vertex_count()];
        for e in self.edges() {
            succ[self.source(e).0].push(self.range(e).0);
        }
        succ
    }

    pub fn is_strongly_connected(&self) -> bool {
        self.vertex_count() > 0 && strongly_connected_components(&self.successors()).len() == 1
    }

    pub fn require_strongly_connected(&self) -> Result<()> {
        if self.is_strongly_connected() {
            Ok(())
        } else {
            Err(Error::NotStronglyConnected)
        }
    }

    /// BFS distance labelling from vertex 0, following arcs source -> range.
    pub(crate) fn arc_distances(&self) -> Vec<Option<u64>> {
        let succ = self.successors();
        let mut dist = vec![None; self.vertex_count()];
        if self.vertex_count() == 0 {
            return dist;
        }
        dist[0] = Some(0);
        let mut queue = VecDeque::from([0usize]);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].unwrap();
            for &w in &succ[v] {
                if dist[w].is_none() {
                    dist[w] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// The period: gcd of all cycle lengths, via the BFS labelling
    /// `gcd |d(s(e)) + 1 - d(r(e))|` over all edges.
    pub fn period(&self) -> Result<u64> {
        self.require_strongly_connected()?;
        let dist = self.arc_distances();
        let mut g = 0u64;
        for e in self.edges() {
            let ds = dist[self.source(e).0].unwrap() as i64;
            let dr = dist[self.range(e).0].unwrap() as i64;
            g = g.gcd(&((ds + 1 - dr).unsigned_abs()));
        }
        if g == 0 {
            // single vertex without edges: strongly connected but no cycles
            return Err(Error::HasSource(self.vertex_name(VertexId(0)).to_string()));
        }
        Ok(g)
    }
}

/// Square nonnegative integer matrix, `A(v, w) = |vE^1w|`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjacencyMatrix {
    entries: Vec<Vec<u64>>,
}

impl AdjacencyMatrix {
    pub fn from_rows(entries: Vec<Vec<u64>>) -> Self {
        AdjacencyMatrix { entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, v: usize, w: usize) -> u64 {
        self.entries[v][w]
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.entries
    }

    pub fn mul(&self, other: &AdjacencyMatrix) -> AdjacencyMatrix {
        let n = self.dim();
        let mut out = vec![vec![0u64; n]; n];
        for (i, row) in out.iter_mut().enumerate() {
            for k in 0..n {
                let a = self.entries[i][k];
                if a == 0 {
                    continue;
                }
                for j in 0..n {
                    row[j] += a * other.entries[k][j];
                }
            }
        }
        AdjacencyMatrix { entries: out }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = vec![vec![0u64; n]; n];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1;
        }
        AdjacencyMatrix { entries: m }
    }

    pub fn pow(&self, k: u32) -> AdjacencyMatrix {
        let mut acc = AdjacencyMatrix::identity(self.dim());
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// Replace every nonzero entry by 1. Keeps reachability powers bounded.
    pub fn pattern(&self) -> AdjacencyMatrix {
        AdjacencyMatrix {
            entries: self
                .entries
                .iter()
                .map(|r| r.iter().map(|&x| u64::from(x > 0)).collect())
                .collect(),
        }
    }

    pub fn is_irreducible(&self) -> bool {
        let succ: Vec<Vec<usize>> = (0..self.dim())
            .map(|w| (0..self.dim()).filter(|&v| self.entries[v][w] > 0).collect())
            .collect();
        self.dim() > 0 && strongly_connected_components(&succ).len() == 1
    }
}

/// Strongly connected components of an adjacency-list digraph (iterative
/// Tarjan). Components come out in reverse topological order.
pub fn strongly_connected_components(succ: &[Vec<usize>]) -> Vec<Vec<usize>> {
    const UNSEEN: usize = usize::MAX;
    let n = succ.len();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut next = 0usize;
    let mut call: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        call.push((root, 0));
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut i)) = call.last_mut() {
            if *i < succ[v].len() {
                let w = succ[v][*i];
                *i += 1;
                if index[w] == UNSEEN {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    comps.push(comp);
                }
            }
        }
    }
    comps
}
