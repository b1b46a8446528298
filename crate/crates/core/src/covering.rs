//! The covering graph `E(n)`, its path bijection with `E^*`, and the
//! partition of vertices by the cocycle `C_n`.
//!
//! `E(n)^0 = E^{<n}` and `E(n)^1 = {(e, μ) : μ ∈ s(e)E^{<n}}` with
//! `s_n(e, μ) = μ` and `r_n(e, μ) = eμ` when `|μ| < n - 1`, `r(e)` otherwise.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;
use std::sync::Arc;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeId, Graph, VertexId};
use crate::path::{Path, PathSpace};

#[derive(Debug, Clone)]
pub struct CoveringGraph {
    graph: Arc<Graph>,
    space: Arc<PathSpace>,
    n: usize,
    vertex_count: usize,
    /// Position of each node among nodes with the same range.
    rank_in_range: Vec<u32>,
    /// Nodes of `E^{<n}` grouped by range.
    by_range: Vec<Vec<u32>>,
    /// First covering edge with base edge `e`.
    edge_offset: Vec<usize>,
    edge_base: Vec<u32>,
    edge_source: Vec<u32>,
    edge_range: Vec<u32>,
}

/// A path in `E(n)`: covering edges listed range end first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoveringPath {
    pub range: usize,
    pub source: usize,
    pub edges: Vec<usize>,
}

pub fn build_covering(g: &Graph, n: usize) -> Result<CoveringGraph> {
    let g = Arc::new(g.clone());
    let space = Arc::new(PathSpace::new(&g, n));
    CoveringGraph::with_space(g, space, n)
}

impl CoveringGraph {
    /// Build on an existing path space with `cap >= n`; node indices are shared.
    pub fn with_space(graph: Arc<Graph>, space: Arc<PathSpace>, n: usize) -> Result<CoveringGraph> {
        if n == 0 {
            return Err(Error::LevelOutOfRange(0));
        }
        graph.require_no_sources()?;
        let vertex_count = space.count_below(n);
        let mut by_range = vec![Vec::new(); graph.vertex_count()];
        let mut rank_in_range = Vec::with_capacity(vertex_count);
        for i in 0..vertex_count {
            let r = space.range_of(i).0;
            rank_in_range.push(by_range[r].len() as u32);
            by_range[r].push(i as u32);
        }
        let mut edge_offset = Vec::with_capacity(graph.edge_count() + 1);
        let mut edge_base = Vec::new();
        let mut edge_source = Vec::new();
        let mut edge_range = Vec::new();
        for e in graph.edges() {
            edge_offset.push(edge_base.len());
            let pos = graph
                .edges_with_source(graph.source(e))
                .iter()
                .position(|&f| f == e)
                .unwrap();
            for &mu in &by_range[graph.source(e).0] {
                let mu = mu as usize;
                let r = if space.len_of(mu) + 1 < n {
                    space.prepend(pos, mu).expect("prepend within cap")
                } else {
                    graph.range(e).0
                };
                edge_base.push(e.0 as u32);
                edge_source.push(mu as u32);
                edge_range.push(r as u32);
            }
        }
        edge_offset.push(edge_base.len());
        Ok(CoveringGraph {
            graph,
            space,
            n,
            vertex_count,
            rank_in_range,
            by_range,
            edge_offset,
            edge_base,
            edge_source,
            edge_range,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn space(&self) -> &PathSpace {
        &self.space
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edge_base.len()
    }

    /// Base edge `e` of the covering edge `(e, μ)`.
    pub fn edge_base(&self, i: usize) -> EdgeId {
        EdgeId(self.edge_base[i] as usize)
    }

    pub fn edge_source(&self, i: usize) -> usize {
        self.edge_source[i] as usize
    }

    pub fn edge_range(&self, i: usize) -> usize {
        self.edge_range[i] as usize
    }

    /// Index of the covering edge `(e, μ)`.
    pub fn edge_index(&self, e: EdgeId, mu: usize) -> Option<usize> {
        if mu >= self.vertex_count || self.space.range_of(mu) != self.graph.source(e) {
            return None;
        }
        Some(self.edge_offset[e.0] + self.rank_in_range[mu] as usize)
    }

    /// Nodes of `vE^{<n}`.
    pub fn nodes_with_range(&self, v: VertexId) -> impl Iterator<Item = usize> + '_ {
        self.by_range[v.0].iter().map(|&i| i as usize)
    }

    pub fn vertex_key(&self, i: usize) -> String {
        self.space.key(&self.graph, i)
    }

    /// `(A_{E(n)} m)(x) = Σ_{edges y -> x} m(y)`, by the explicit edge list.
    pub fn apply_adjacency<S: Clone + num_traits::Zero>(&self, m: &[S]) -> Vec<S> {
        assert_eq!(m.len(), self.vertex_count);
        let mut out = vec![S::zero(); self.vertex_count];
        for i in 0..self.edge_count() {
            let (r, s) = (self.edge_range(i), self.edge_source(i));
            out[r] = out[r].clone() + m[s].clone();
        }
        out
    }

    /// Transposed action `(A^T w)(y) = Σ_{edges y -> x} w(x)`.
    pub fn apply_adjacency_transpose<S: Clone + num_traits::Zero>(&self, w: &[S]) -> Vec<S> {
        assert_eq!(w.len(), self.vertex_count);
        let mut out = vec![S::zero(); self.vertex_count];
        for i in 0..self.edge_count() {
            let (r, s) = (self.edge_range(i), self.edge_source(i));
            out[s] = out[s].clone() + w[r].clone();
        }
        out
    }

    /// Successor lists following covering edges source -> range.
    pub fn successors(&self) -> Vec<Vec<usize>> {
        let mut succ = vec![Vec::new(); self.vertex_count];
        for i in 0..self.edge_count() {
            succ[self.edge_source(i)].push(self.edge_range(i));
        }
        succ
    }

    /// Weakly connected components by BFS; labels in order of first vertex.
    pub fn weak_components(&self) -> Vec<usize> {
        let mut adj = vec![Vec::new(); self.vertex_count];
        for i in 0..self.edge_count() {
            let (r, s) = (self.edge_range(i), self.edge_source(i));
            adj[r].push(s);
            adj[s].push(r);
        }
        let mut label = vec![usize::MAX; self.vertex_count];
        let mut next = 0;
        for root in 0..self.vertex_count {
            if label[root] != usize::MAX {
                continue;
            }
            label[root] = next;
            let mut queue = VecDeque::from([root]);
            while let Some(x) = queue.pop_front() {
                for &y in &adj[x] {
                    if label[y] == usize::MAX {
                        label[y] = next;
                        queue.push_back(y);
                    }
                }
            }
            next += 1;
        }
        label
    }

    /// True when every vertex in `members` reaches and is reached from the
    /// first one without leaving `members`.
    pub fn is_strongly_connected_on(&self, members: &[usize]) -> bool {
        let Some(&root) = members.first() else {
            return false;
        };
        let mut inside = vec![false; self.vertex_count];
        for &m in members {
            inside[m] = true;
        }
        let mut fwd = vec![Vec::new(); self.vertex_count];
        let mut bwd = vec![Vec::new(); self.vertex_count];
        for i in 0..self.edge_count() {
            let (r, s) = (self.edge_range(i), self.edge_source(i));
            if inside[r] && inside[s] {
                fwd[s].push(r);
                bwd[r].push(s);
            }
        }
        let reach = |adj: &Vec<Vec<usize>>| {
            let mut seen = vec![false; self.vertex_count];
            seen[root] = true;
            let mut count = 1;
            let mut queue = VecDeque::from([root]);
            while let Some(x) = queue.pop_front() {
                for &y in &adj[x] {
                    if !seen[y] {
                        seen[y] = true;
                        count += 1;
                        queue.push_back(y);
                    }
                }
            }
            count
        };
        reach(&fwd) == members.len() && reach(&bwd) == members.len()
    }

    /// Lift `(μ, ν)` with `ν ∈ s(μ)E^{<n}` to
    /// `(μ_1, [μ_2 ... μ_{|μ|} ν]_n) ... (μ_{|μ|}, ν)`.
    pub fn lift_path(&self, mu: &Path, nu: &Path) -> Result<CoveringPath> {
        if mu.source() != nu.range() {
            return Err(Error::SourceRangeMismatch);
        }
        let g = &*self.graph;
        let mut x = self
            .space
            .index_of(nu)
            .filter(|&i| i < self.vertex_count)
            .ok_or_else(|| Error::PathTooLong(nu.key(g)))?;
        let source = x;
        let mut edges = Vec::with_capacity(mu.len());
        for &e in mu.edges().iter().rev() {
            let idx = self.edge_index(e, x).expect("composable covering edge");
            edges.push(idx);
            x = self.edge_range(idx);
        }
        edges.reverse();
        Ok(CoveringPath {
            range: x,
            source,
            edges,
        })
    }

    /// Inverse of [`lift_path`](Self::lift_path).
    pub fn flatten_path(&self, p: &CoveringPath) -> Result<(Path, Path)> {
        let g = &*self.graph;
        let mut expect = p.range;
        for &i in &p.edges {
            if self.edge_range(i) != expect {
                return Err(Error::SourceRangeMismatch);
            }
            expect = self.edge_source(i);
        }
        if expect != p.source {
            return Err(Error::SourceRangeMismatch);
        }
        let nu = self.space.path(p.source);
        if p.edges.is_empty() {
            return Ok((Path::vertex(nu.range()), nu));
        }
        let base: Vec<EdgeId> = p.edges.iter().map(|&i| self.edge_base(i)).collect();
        Ok((Path::from_edges(g, &base)?, nu))
    }

    /// DOT rendering; vertices coloured by their `C_n` class.
    pub fn to_dot(&self, partition: Option<&ComponentPartition>) -> String {
        const PALETTE: [&str; 8] = [
            "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
        ];
        let mut out = format!("digraph \"E({})\" {{\n", self.n);
        for i in 0..self.vertex_count {
            let colour = partition
                .map(|p| PALETTE[p.label(self.space.source_of(i)) % PALETTE.len()])
                .unwrap_or("black");
            let _ = writeln!(out, "  n{i} [label=\"{}\", color=\"{colour}\"];", self.vertex_key(i));
        }
        for i in 0..self.edge_count() {
            let _ = writeln!(
                out,
                "  n{} -> n{} [label=\"{}\"];",
                self.edge_source(i),
                self.edge_range(i),
                self.graph.edge_name(self.edge_base(i))
            );
        }
        out.push_str("}\n");
        out
    }
}

/// `C_n(v, w) = d(v) - d(w) mod gcd(P_E, n)`.
pub fn cn_value(g: &Graph, n: usize, v: VertexId, w: VertexId) -> Result<usize> {
    let p = g.period()? as usize;
    let m = p.gcd(&n);
    let d = g.arc_distances();
    let dv = d[v.0].unwrap() as i64;
    let dw = d[w.0].unwrap() as i64;
    Ok((dv - dw).rem_euclid(m as i64) as usize)
}

/// The partition `E^0 / ~_n` into `gcd(P_E, n)` classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentPartition {
    pub n: usize,
    pub gcd: usize,
    labels: Vec<usize>,
    names: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct PartitionFile {
    n: usize,
    gcd: usize,
    classes: BTreeMap<String, usize>,
}

impl ComponentPartition {
    pub fn label(&self, v: VertexId) -> usize {
        self.labels[v.0]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_count(&self) -> usize {
        self.gcd
    }

    /// Vertices of class `c`.
    pub fn class(&self, c: usize) -> Vec<VertexId> {
        (0..self.labels.len())
            .filter(|&i| self.labels[i] == c)
            .map(VertexId)
            .collect()
    }

    pub fn classes(&self) -> Vec<Vec<VertexId>> {
        (0..self.gcd).map(|c| self.class(c)).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let f = PartitionFile {
            n: self.n,
            gcd: self.gcd,
            classes: self
                .names
                .iter()
                .cloned()
                .zip(self.labels.iter().copied())
                .collect(),
        };
        serde_json::to_value(f).expect("partition serialises")
    }
}

pub fn components(g: &Graph, n: usize) -> Result<ComponentPartition> {
    g.require_no_sources()?;
    let p = g.period()? as usize;
    let m = p.gcd(&n);
    let d = g.arc_distances();
    let labels = d.iter().map(|x| (x.unwrap() as usize) % m).collect();
    Ok(ComponentPartition {
        n,
        gcd: m,
        labels,
        names: g.vertices().map(|v| g.vertex_name(v).to_string()).collect(),
    })
}

/// Class of `s(μ)` for every vertex `μ` of `E(n)`.
pub fn covering_classes(cov: &CoveringGraph, part: &ComponentPartition) -> Vec<usize> {
    (0..cov.vertex_count())
        .map(|i| part.label(cov.space().source_of(i)))
        .collect()
}

fn bool_mul(a: &[Vec<bool>], b: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let n = a.len();
    let mut out = vec![vec![false; n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] {
                for j in 0..n {
                    out[i][j] |= b[k][j];
                }
            }
        }
    }
    out
}

/// Is `vE^{jn}w` nonempty for some `j >= 0`? Checked with boolean powers of
/// `A^n`, for `j` up to `|E^{<n}|`.
pub fn has_covering_path(g: &Graph, n: usize, v: VertexId, w: VertexId) -> bool {
    let a: Vec<Vec<bool>> = g
        .adjacency()
        .rows()
        .iter()
        .map(|r| r.iter().map(|&x| x > 0).collect())
        .collect();
    let dim = a.len();
    let mut an: Vec<Vec<bool>> = (0..dim).map(|i| (0..dim).map(|j| i == j).collect()).collect();
    for _ in 0..n {
        an = bool_mul(&an, &a);
    }
    let bound = PathSpace::new(g, n).node_count();
    // reach[x]: x E^{jn} w nonempty for some j up to the current step
    let mut reach = vec![false; dim];
    reach[w.0] = true;
    for _ in 0..bound {
        let mut next = reach.clone();
        for x in 0..dim {
            for y in 0..dim {
                if an[x][y] && reach[y] {
                    next[x] = true;
                }
            }
        }
        if next == reach {
            break;
        }
        reach = next;
    }
    reach[v.0]
}
