//! Finite paths and the enumerated path space `E^{<N}`.

use std::fmt;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, Graph, VertexId};

/// A finite path `e_1 ... e_n` with `s(e_i) = r(e_{i+1})`. The empty path
/// carries its vertex so `r` and `s` are always defined.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Path {
    range: VertexId,
    source: VertexId,
    edges: Vec<EdgeId>,
}

#[allow(clippy::len_without_is_empty)]
impl Path {
    pub fn vertex(v: VertexId) -> Path {
        Path {
            range: v,
            source: v,
            edges: Vec::new(),
        }
    }

    pub fn edge(g: &Graph, e: EdgeId) -> Path {
        Path {
            range: g.range(e),
            source: g.source(e),
            edges: vec![e],
        }
    }

    /// Build from a nonempty edge sequence, checking composability.
    pub fn from_edges(g: &Graph, edges: &[EdgeId]) -> Result<Path> {
        let (first, last) = match (edges.first(), edges.last()) {
            (Some(f), Some(l)) => (*f, *l),
            _ => return Err(Error::BadPathKey(String::new())),
        };
        for w in edges.windows(2) {
            if g.source(w[0]) != g.range(w[1]) {
                return Err(Error::NotAPath(
                    g.edge_name(w[0]).to_string(),
                    g.edge_name(w[1]).to_string(),
                ));
            }
        }
        Ok(Path {
            range: g.range(first),
            source: g.source(last),
            edges: edges.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_vertex(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn range(&self) -> VertexId {
        self.range
    }

    pub fn source(&self) -> VertexId {
        self.source
    }

    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    /// `self · other`; needs `s(self) = r(other)`.
    pub fn concat(&self, g: &Graph, other: &Path) -> Result<Path> {
        if self.source != other.range {
            return Err(Error::NotAPath(self.key(g), other.key(g)));
        }
        let mut edges = self.edges.clone();
        edges.extend_from_slice(&other.edges);
        Ok(Path {
            range: self.range,
            source: other.source,
            edges,
        })
    }

    /// The prefix of length `j` (clamped to `|self|`).
    pub fn prefix(&self, g: &Graph, j: usize) -> Path {
        let j = j.min(self.len());
        if j == 0 {
            return Path::vertex(self.range);
        }
        Path {
            range: self.range,
            source: g.source(self.edges[j - 1]),
            edges: self.edges[..j].to_vec(),
        }
    }

    /// Drop the first `i` edges.
    pub fn drop_front(&self, g: &Graph, i: usize) -> Path {
        let i = i.min(self.len());
        if i == self.len() {
            return Path::vertex(self.source);
        }
        Path {
            range: g.range(self.edges[i]),
            source: self.source,
            edges: self.edges[i..].to_vec(),
        }
    }

    /// The suffix of length `j` (clamped to `|self|`).
    pub fn suffix(&self, g: &Graph, j: usize) -> Path {
        self.drop_front(g, self.len() - j.min(self.len()))
    }

    /// If `self = prefix · rest`, return `rest`.
    pub fn strip_prefix(&self, g: &Graph, prefix: &Path) -> Option<Path> {
        if prefix.range != self.range || !self.edges.starts_with(&prefix.edges) {
            return None;
        }
        Some(self.drop_front(g, prefix.len()))
    }

    /// `[μ]_n`: the prefix of length `|μ| mod n`.
    pub fn residue(&self, g: &Graph, n: usize) -> Path {
        assert!(n > 0, "residue modulus must be positive");
        self.prefix(g, self.len() % n)
    }

    /// `τ_n(μ)`: the suffix of length `|μ| mod n`.
    pub fn tail(&self, g: &Graph, n: usize) -> Path {
        assert!(n > 0, "tail modulus must be positive");
        self.suffix(g, self.len() % n)
    }

    /// JSON map key: `@v` for a vertex path, dotted edge ids otherwise.
    pub fn key(&self, g: &Graph) -> String {
        if self.is_vertex() {
            format!("@{}", g.vertex_name(self.range))
        } else {
            self.edges
                .iter()
                .map(|e| g.edge_name(*e))
                .collect::<Vec<_>>()
                .join(".")
        }
    }

    pub fn parse_key(g: &Graph, key: &str) -> Result<Path> {
        if let Some(v) = key.strip_prefix('@') {
            return Ok(Path::vertex(g.vertex(v)?));
        }
        if key.is_empty() {
            return Err(Error::BadPathKey(key.to_string()));
        }
        let edges = key
            .split('.')
            .map(|name| g.edge(name))
            .collect::<Result<Vec<_>>>()?;
        Path::from_edges(g, &edges)
    }

    pub fn display<'a>(&'a self, g: &'a Graph) -> PathDisplay<'a> {
        PathDisplay { path: self, graph: g }
    }
}

pub struct PathDisplay<'a> {
    path: &'a Path,
    graph: &'a Graph,
}

impl fmt::Display for PathDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.path.key(self.graph))
    }
}

/// All paths of length `< cap`, stored as a trie with dense node indices.
///
/// Nodes are ordered by length, then lexicographically on edge indices with
/// `e_1` most significant. Because of this ordering, `E^{<n}` for `n <= cap`
/// is exactly the first `count_below(n)` nodes, so indices are shared between
/// levels of a divisor chain.
#[derive(Debug, Clone)]
pub struct PathSpace {
    cap: usize,
    vertex_count: usize,
    len: Vec<u32>,
    range: Vec<u32>,
    source: Vec<u32>,
    last: Vec<u32>,
    parent: Vec<u32>,
    suffix: Vec<u32>,
    child_start: Vec<u32>,
    /// `level_start[j]` is the first node of length `j`.
    level_start: Vec<usize>,
    /// Position of each edge in `vE^1` for `v = r(e)`.
    pos_in_range: Vec<u32>,
    /// `E^1 v` for each vertex, and per node the index of `e·μ` for each such `e`.
    prepend_start: Vec<u32>,
    prepend: Vec<u32>,
}

const NONE: u32 = u32::MAX;

impl PathSpace {
    /// Enumerate `E^{<cap}`. `cap` must be at least 1.
    pub fn new(g: &Graph, cap: usize) -> PathSpace {
        assert!(cap >= 1, "path space needs cap >= 1");
        let nv = g.vertex_count();
        let mut s = PathSpace {
            cap,
            vertex_count: nv,
            len: Vec::new(),
            range: Vec::new(),
            source: Vec::new(),
            last: Vec::new(),
            parent: Vec::new(),
            suffix: Vec::new(),
            child_start: Vec::new(),
            level_start: vec![0],
            pos_in_range: g.edges().map(|e| g.position_in_range(e) as u32).collect(),
            prepend_start: Vec::new(),
            prepend: Vec::new(),
        };
        for v in g.vertices() {
            s.push(0, v.0, v.0, NONE, NONE, NONE);
        }
        s.level_start.push(s.len.len());
        if cap == 1 {
            s.finish(g);
            return s;
        }
        for e in g.edges() {
            let sv = g.source(e).0;
            s.push(1, g.range(e).0, sv, e.0 as u32, g.range(e).0 as u32, sv as u32);
        }
        s.level_start.push(s.len.len());
        for j in 2..cap {
            let (lo, hi) = (s.level_start[j - 1], s.level_start[j]);
            for p in lo..hi {
                s.child_start[p] = s.len.len() as u32;
                let sp = s.source[p] as usize;
                let suffix_p = s.suffix[p];
                for &e in g.edges_with_range(VertexId(sp)) {
                    // suffix(p·e) = suffix(p)·e
                    let suf = s.append_raw(suffix_p as usize, e);
                    let r = s.range[p] as usize;
                    s.push(j as u32, r, g.source(e).0, e.0 as u32, p as u32, suf as u32);
                }
            }
            s.level_start.push(s.len.len());
        }
        s.finish(g);
        s
    }

    fn push(&mut self, len: u32, range: usize, source: usize, last: u32, parent: u32, suffix: u32) {
        self.len.push(len);
        self.range.push(range as u32);
        self.source.push(source as u32);
        self.last.push(last);
        self.parent.push(parent);
        self.suffix.push(suffix);
        self.child_start.push(NONE);
    }

    fn append_raw(&self, node: usize, e: EdgeId) -> usize {
        if self.len[node] == 0 {
            self.vertex_count + e.0
        } else {
            self.child_start[node] as usize + self.pos_in_range[e.0] as usize
        }
    }

    fn finish(&mut self, g: &Graph) {
        let n = self.len.len();
        self.prepend_start = Vec::with_capacity(n + 1);
        self.prepend_start.push(0);
        for i in 0..n {
            let r = VertexId(self.range[i] as usize);
            let into = g.edges_with_source(r);
            let base = *self.prepend_start.last().unwrap();
            self.prepend_start.push(base + into.len() as u32);
        }
        self.prepend = vec![NONE; *self.prepend_start.last().unwrap() as usize];
        for i in 0..n {
            if self.len[i] as usize + 1 >= self.cap {
                continue;
            }
            let r = VertexId(self.range[i] as usize);
            let base = self.prepend_start[i] as usize;
            for (k, &e) in g.edges_with_source(r).iter().enumerate() {
                let idx = if self.len[i] == 0 {
                    self.vertex_count + e.0
                } else {
                    // e·(p·f) = (e·p)·f, and parents come earlier in node order
                    let p = self.parent[i] as usize;
                    let ep = self.prepend[self.prepend_start[p] as usize + k];
                    self.append_raw(ep as usize, EdgeId(self.last[i] as usize))
                };
                self.prepend[base + k] = idx as u32;
            }
        }
    }

    /// Paths have length `< cap`.
    pub fn cap(&self) -> usize {
        self.cap
    }

    /// `|E^{<cap}|`.
    pub fn node_count(&self) -> usize {
        self.len.len()
    }

    /// `|E^{<n}|` for `n <= cap`.
    pub fn count_below(&self, n: usize) -> usize {
        assert!(n >= 1 && n <= self.cap, "n = {n} outside 1..={}", self.cap);
        self.level_start[n]
    }

    /// Nodes of length exactly `j`.
    pub fn nodes_of_length(&self, j: usize) -> std::ops::Range<usize> {
        self.level_start[j]..self.level_start[j + 1]
    }

    pub fn len_of(&self, node: usize) -> usize {
        self.len[node] as usize
    }

    pub fn range_of(&self, node: usize) -> VertexId {
        VertexId(self.range[node] as usize)
    }

    pub fn source_of(&self, node: usize) -> VertexId {
        VertexId(self.source[node] as usize)
    }

    /// Last edge, `None` for vertex paths.
    pub fn last_edge(&self, node: usize) -> Option<EdgeId> {
        (self.last[node] != NONE).then(|| EdgeId(self.last[node] as usize))
    }

    /// First edge, `None` for vertex paths.
    pub fn first_edge(&self, node: usize) -> Option<EdgeId> {
        let mut i = node;
        while self.len[i] > 1 {
            i = self.parent[i] as usize;
        }
        self.last_edge(i)
    }

    /// Drop the last edge.
    pub fn parent(&self, node: usize) -> Option<usize> {
        (self.parent[node] != NONE).then(|| self.parent[node] as usize)
    }

    /// Drop the first edge: `μ_2 ... μ_{|μ|}` (the vertex `s(μ_1)` when `|μ| = 1`).
    pub fn drop_first(&self, node: usize) -> Option<usize> {
        (self.suffix[node] != NONE).then(|| self.suffix[node] as usize)
    }

    /// `μ·e`, if it is a path of length `< cap`.
    pub fn append(&self, node: usize, e: EdgeId) -> Option<usize> {
        if self.len[node] as usize + 1 >= self.cap || self.source[node] as usize != self.range_of_edge(e) {
            return None;
        }
        Some(self.append_raw(node, e))
    }

    fn range_of_edge(&self, e: EdgeId) -> usize {
        self.range[self.vertex_count + e.0] as usize
    }

    /// `e·μ`, if it is a path of length `< cap`.
    pub fn prepend(&self, e_pos_in_source: usize, node: usize) -> Option<usize> {
        let base = self.prepend_start[node] as usize;
        let end = self.prepend_start[node + 1] as usize;
        if base + e_pos_in_source >= end {
            return None;
        }
        let idx = self.prepend[base + e_pos_in_source];
        (idx != NONE).then_some(idx as usize)
    }

    /// `e·μ` where `e` is looked up in `E^1 r(μ)`.
    pub fn prepend_edge(&self, g: &Graph, e: EdgeId, node: usize) -> Option<usize> {
        if g.source(e) != self.range_of(node) {
            return None;
        }
        let pos = g.edges_with_source(self.range_of(node)).iter().position(|&f| f == e)?;
        self.prepend(pos, node)
    }

    /// Ancestor of length `j <= |μ|`.
    pub fn prefix(&self, node: usize, j: usize) -> usize {
        let mut i = node;
        while self.len[i] as usize > j {
            i = self.parent[i] as usize;
        }
        i
    }

    /// `[μ]_n`.
    pub fn residue(&self, node: usize, n: usize) -> usize {
        self.prefix(node, self.len_of(node) % n)
    }

    /// Descendant obtained by dropping the first `i` edges.
    pub fn drop_front(&self, node: usize, i: usize) -> usize {
        let mut x = node;
        for _ in 0..i.min(self.len_of(node)) {
            x = self.suffix[x] as usize;
        }
        x
    }

    /// `τ_n(μ)`.
    pub fn tail(&self, node: usize, n: usize) -> usize {
        let l = self.len_of(node);
        self.drop_front(node, l - l % n)
    }

    /// Edge sequence of a node.
    pub fn edges_of(&self, node: usize) -> Vec<EdgeId> {
        let mut out = Vec::with_capacity(self.len_of(node));
        let mut i = node;
        while let Some(e) = self.last_edge(i) {
            out.push(e);
            i = self.parent[i] as usize;
        }
        out.reverse();
        out
    }

    pub fn path(&self, node: usize) -> Path {
        Path {
            range: self.range_of(node),
            source: self.source_of(node),
            edges: self.edges_of(node),
        }
    }

    /// Node index of a path, if it is shorter than `cap`.
    pub fn index_of(&self, p: &Path) -> Option<usize> {
        if p.len() >= self.cap {
            return None;
        }
        let mut i = p.range().0;
        for &e in p.edges() {
            if self.source[i] as usize != self.range_of_edge(e) {
                return None;
            }
            i = self.append_raw(i, e);
        }
        Some(i)
    }

    /// Concatenation of two nodes, when short enough.
    pub fn concat(&self, a: usize, b: usize) -> Option<usize> {
        if self.source[a] != self.range[b] || self.len_of(a) + self.len_of(b) >= self.cap {
            return None;
        }
        let mut i = a;
        for e in self.edges_of(b) {
            i = self.append_raw(i, e);
        }
        Some(i)
    }

    /// Is `p` a prefix of `q`?
    pub fn is_prefix(&self, p: usize, q: usize) -> bool {
        self.len_of(p) <= self.len_of(q) && self.prefix(q, self.len_of(p)) == p
    }

    pub fn key(&self, g: &Graph, node: usize) -> String {
        self.path(node).key(g)
    }
}

/// `E^{<n}` as an ordered list.
pub fn paths_up_to(g: &Graph, n: usize) -> Vec<Path> {
    let space = PathSpace::new(g, n);
    (0..space.node_count()).map(|i| space.path(i)).collect()
}
