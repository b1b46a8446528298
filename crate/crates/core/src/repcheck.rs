//! Truncated matrix model of the path-space representation on
//! `ℓ²(E^* ×_{E^0} lim E^{<n_k})`: basis `h_{λ,x}` with `|λ| ≤ L` and
//! `x ∈ E^{<n_k}`, `s(λ) = r(x)`, and integer matrices for `t_e`, `q_v`,
//! `π_{(μ,j)}`. Used to check the defining relations, the injectivity
//! criterion, the central block decomposition, the product rule and the
//! state formula.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::{spanning_product, FormalSum, SpanningElement};
use crate::covering::components;
use crate::error::{Error, Result};
use crate::graph::{EdgeId, VertexId};
use crate::measures::LevelMeasure;
use crate::path::{Path, PathSpace};
use crate::spectral::Spectrum;
use crate::system::PathSystem;

const NONE: u32 = u32::MAX;

/// Column-major sparse integer matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseMatrix {
    cols: Vec<Vec<(usize, i64)>>,
}

impl SparseMatrix {
    pub fn zeros(n: usize) -> Self {
        SparseMatrix {
            cols: vec![Vec::new(); n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal((0..n).map(|_| true))
    }

    pub fn diagonal(mask: impl Iterator<Item = bool>) -> Self {
        SparseMatrix {
            cols: mask
                .enumerate()
                .map(|(i, on)| if on { vec![(i, 1)] } else { Vec::new() })
                .collect(),
        }
    }

    /// 0/1 matrix sending column `j` to row `map[j]`.
    pub fn from_partial_map(map: &[Option<usize>]) -> Self {
        SparseMatrix {
            cols: map.iter().map(|m| m.map(|i| vec![(i, 1)]).unwrap_or_default()).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.cols.len()
    }

    pub fn col(&self, j: usize) -> &[(usize, i64)] {
        &self.cols[j]
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.cols[j].iter().find(|(r, _)| *r == i).map_or(0, |(_, v)| *v)
    }

    pub fn add_entry(&mut self, i: usize, j: usize, v: i64) {
        let mut col = std::mem::take(&mut self.cols[j]);
        col.push((i, v));
        self.cols[j] = normalise(col);
    }

    pub fn is_zero(&self) -> bool {
        self.cols.iter().all(|c| c.is_empty())
    }

    pub fn apply(&self, v: &[(usize, i64)]) -> Vec<(usize, i64)> {
        let mut out = Vec::new();
        for &(j, a) in v {
            for &(i, b) in &self.cols[j] {
                out.push((i, a * b));
            }
        }
        normalise(out)
    }

    pub fn mul(&self, other: &SparseMatrix) -> SparseMatrix {
        SparseMatrix {
            cols: other.cols.iter().map(|c| self.apply(c)).collect(),
        }
    }

    pub fn add(&self, other: &SparseMatrix) -> SparseMatrix {
        self.combine(other, 1)
    }

    pub fn sub(&self, other: &SparseMatrix) -> SparseMatrix {
        self.combine(other, -1)
    }

    fn combine(&self, other: &SparseMatrix, sign: i64) -> SparseMatrix {
        SparseMatrix {
            cols: self
                .cols
                .iter()
                .zip(&other.cols)
                .map(|(a, b)| {
                    let mut c = a.clone();
                    c.extend(b.iter().map(|(i, v)| (*i, sign * v)));
                    normalise(c)
                })
                .collect(),
        }
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut cols = vec![Vec::new(); self.dim()];
        for (j, c) in self.cols.iter().enumerate() {
            for &(i, v) in c {
                cols[i].push((j, v));
            }
        }
        SparseMatrix { cols }
    }

    /// Largest entry of `|self - other|` over the masked columns, with the
    /// first column attaining a nonzero deviation.
    pub fn deviation_on(&self, other: &SparseMatrix, mask: &[bool]) -> (i64, Option<usize>) {
        let mut worst = 0;
        let mut witness = None;
        for j in 0..self.dim() {
            if !mask[j] {
                continue;
            }
            let mut d = self.cols[j].clone();
            d.extend(other.cols[j].iter().map(|(i, v)| (*i, -v)));
            let d = normalise(d);
            let m = d.iter().map(|(_, v)| v.abs()).max().unwrap_or(0);
            if m > 0 && witness.is_none() {
                witness = Some(j);
            }
            worst = worst.max(m);
        }
        (worst, witness)
    }
}

fn normalise(mut v: Vec<(usize, i64)>) -> Vec<(usize, i64)> {
    v.sort_unstable_by_key(|(i, _)| *i);
    let mut out: Vec<(usize, i64)> = Vec::with_capacity(v.len());
    for (i, a) in v {
        match out.last_mut() {
            Some((j, b)) if *j == i => *b += a,
            _ => out.push((i, a)),
        }
    }
    out.retain(|(_, a)| *a != 0);
    out
}

/// A generator of the Toeplitz algebra.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    T(EdgeId),
    TStar(EdgeId),
    Q(VertexId),
    Pi { level: usize, node: usize },
}

/// Result of pushing a vector through a chain of generators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    /// The image, exact because no `t_e` left the cap.
    Exact(Vec<(usize, i64)>),
    /// Some `t_e` was applied to a vector of length `L`.
    Clipped,
}

#[derive(Debug, Clone)]
pub struct TruncatedRep {
    sys: Arc<PathSystem>,
    level: usize,
    cap: usize,
    space: PathSpace,
    basis: Vec<(usize, usize)>,
    /// `lookup[λ * nx + x]`.
    lookup: Vec<u32>,
    nx: usize,
    t: Vec<SparseMatrix>,
    tstar: Vec<SparseMatrix>,
    q: Vec<SparseMatrix>,
    /// `pi[j - 1][μ]` for `μ ∈ E^{<n_j}`.
    pi: Vec<Vec<SparseMatrix>>,
}

impl TruncatedRep {
    /// Basis `h_{λ,x}`, `|λ| ≤ cap`, cylinders at level `k`.
    pub fn build(sys: Arc<PathSystem>, k: usize, cap: usize) -> Result<Self> {
        sys.check_level(k)?;
        if cap == 0 {
            return Err(Error::CapTooSmall);
        }
        let g = sys.graph_arc();
        let n = sys.n(k);
        let space = PathSpace::new(&g, cap + n);
        let nl = space.count_below(cap + 1);
        let nx = space.count_below(n);
        let mut basis = Vec::new();
        let mut lookup = vec![NONE; nl * nx];
        for lam in 0..nl {
            for x in 0..nx {
                if space.source_of(lam) == space.range_of(x) {
                    lookup[lam * nx + x] = basis.len() as u32;
                    basis.push((lam, x));
                }
            }
        }
        if basis.is_empty() {
            return Err(Error::CapTooSmall);
        }
        let at = |lam: usize, x: usize| match lookup[lam * nx + x] {
            NONE => None,
            i => Some(i as usize),
        };
        let t: Vec<SparseMatrix> = g
            .edges()
            .map(|e| {
                let map: Vec<Option<usize>> = basis
                    .iter()
                    .map(|&(lam, x)| {
                        if space.len_of(lam) >= cap {
                            return None;
                        }
                        space.prepend_edge(&g, e, lam).and_then(|l| at(l, x))
                    })
                    .collect();
                SparseMatrix::from_partial_map(&map)
            })
            .collect();
        let tstar = t.iter().map(|m| m.transpose()).collect();
        let q = g
            .vertices()
            .map(|v| SparseMatrix::diagonal(basis.iter().map(|&(lam, _)| space.range_of(lam) == v)))
            .collect();
        let mut pi = Vec::with_capacity(k);
        for j in 1..=k {
            let nj = sys.n(j);
            let joined: Vec<usize> = basis
                .iter()
                .map(|&(lam, x)| space.residue(space.concat(lam, x).expect("λx fits the space"), nj))
                .collect();
            pi.push(
                (0..space.count_below(nj))
                    .map(|mu| SparseMatrix::diagonal(joined.iter().map(|&r| r == mu)))
                    .collect(),
            );
        }
        Ok(TruncatedRep {
            sys,
            level: k,
            cap,
            space,
            basis,
            lookup,
            nx,
            t,
            tstar,
            q,
            pi,
        })
    }

    pub fn system(&self) -> &PathSystem {
        &self.sys
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// `(λ, x)` of a basis vector as path-space nodes.
    pub fn basis_vector(&self, i: usize) -> (Path, Path) {
        let (lam, x) = self.basis[i];
        (self.space.path(lam), self.space.path(x))
    }

    pub fn index_of(&self, lam: &Path, x: &Path) -> Option<usize> {
        let l = self.space.index_of(lam)?;
        let x = self.space.index_of(x)?;
        if l >= self.lookup.len() / self.nx || x >= self.nx {
            return None;
        }
        match self.lookup[l * self.nx + x] {
            NONE => None,
            i => Some(i as usize),
        }
    }

    /// `h(λ, x)` label of a basis vector.
    pub fn basis_key(&self, i: usize) -> String {
        let g = self.sys.graph();
        let (lam, x) = self.basis[i];
        format!("h({}, {})", self.space.key(g, lam), self.space.key(g, x))
    }

    pub fn lambda_len(&self, i: usize) -> usize {
        self.space.len_of(self.basis[i].0)
    }

    /// Columns whose `t_e`-images stay within the cap.
    pub fn interior(&self) -> Vec<bool> {
        (0..self.dim()).map(|i| self.lambda_len(i) < self.cap).collect()
    }

    pub fn all_columns(&self) -> Vec<bool> {
        vec![true; self.dim()]
    }

    pub fn matrix(&self, gen: Generator) -> &SparseMatrix {
        match gen {
            Generator::T(e) => &self.t[e.0],
            Generator::TStar(e) => &self.tstar[e.0],
            Generator::Q(v) => &self.q[v.0],
            Generator::Pi { level, node } => &self.pi[level - 1][node],
        }
    }

    pub fn generators(&self) -> Vec<Generator> {
        let g = self.sys.graph();
        let mut out: Vec<Generator> = g.edges().flat_map(|e| [Generator::T(e), Generator::TStar(e)]).collect();
        out.extend(g.vertices().map(Generator::Q));
        for j in 1..=self.level {
            out.extend((0..self.pi[j - 1].len()).map(|node| Generator::Pi { level: j, node }));
        }
        out
    }

    /// Add `delta` to entry `(row, col)` of `t_e` (and of its adjoint).
    pub fn inject_fault(&mut self, e: EdgeId, row: usize, col: usize, delta: i64) {
        self.t[e.0].add_entry(row, col, delta);
        self.tstar[e.0] = self.t[e.0].transpose();
    }

    /// `π_{(μ,j)}` for a path `μ ∈ E^{<n_j}`.
    pub fn pi_of(&self, mu: &Path, j: usize) -> Result<&SparseMatrix> {
        if j == 0 || j > self.level {
            return Err(Error::LevelOutOfRange(j));
        }
        let node = self
            .space
            .index_of(mu)
            .filter(|&i| i < self.pi[j - 1].len())
            .ok_or_else(|| Error::PathTooLong(mu.key(self.sys.graph())))?;
        Ok(&self.pi[j - 1][node])
    }

    fn apply_t(&self, e: EdgeId, v: Vec<(usize, i64)>) -> Action {
        let s = self.sys.graph().source(e);
        for &(i, _) in &v {
            let lam = self.basis[i].0;
            if self.space.len_of(lam) >= self.cap && self.space.range_of(lam) == s {
                return Action::Clipped;
            }
        }
        Action::Exact(self.t[e.0].apply(&v))
    }

    /// `ς(t_α π_{(τ,j)} t*_β) v`, one generator matrix at a time.
    pub fn apply_element(&self, a: &SpanningElement, v: Vec<(usize, i64)>) -> Result<Action> {
        let mut v = v;
        if a.beta.is_vertex() {
            v = self.q[a.beta.range().0].apply(&v);
        }
        for e in a.beta.edges() {
            if v.is_empty() {
                return Ok(Action::Exact(v));
            }
            v = self.tstar[e.0].apply(&v);
        }
        v = self.pi_of(&a.tau, a.level)?.apply(&v);
        if a.alpha.is_vertex() {
            v = self.q[a.alpha.range().0].apply(&v);
        }
        for e in a.alpha.edges().iter().rev() {
            if v.is_empty() {
                return Ok(Action::Exact(v));
            }
            match self.apply_t(*e, v) {
                Action::Exact(w) => v = w,
                Action::Clipped => return Ok(Action::Clipped),
            }
        }
        Ok(Action::Exact(v))
    }

    /// `ς(a)` as a matrix, with clipped columns left zero.
    pub fn element_matrix(&self, a: &SpanningElement) -> Result<SparseMatrix> {
        let mut m = SparseMatrix::zeros(self.dim());
        for j in 0..self.dim() {
            if let Action::Exact(col) = self.apply_element(a, vec![(j, 1)])? {
                for (i, v) in col {
                    m.add_entry(i, j, v);
                }
            }
        }
        Ok(m)
    }
}

/// Outcome of one named relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationResult {
    pub name: String,
    pub holds: bool,
    pub max_deviation: i64,
    pub witness: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationReport {
    pub results: Vec<RelationResult>,
}

impl RelationReport {
    pub fn holds(&self) -> bool {
        self.results.iter().all(|r| r.holds)
    }

    pub fn max_deviation(&self) -> i64 {
        self.results.iter().map(|r| r.max_deviation).max().unwrap_or(0)
    }

    pub fn failures(&self) -> Vec<&RelationResult> {
        self.results.iter().filter(|r| !r.holds).collect()
    }
}

struct Recorder<'a> {
    rep: &'a TruncatedRep,
    results: Vec<RelationResult>,
}

impl Recorder<'_> {
    fn check(&mut self, name: String, lhs: &SparseMatrix, rhs: &SparseMatrix, mask: &[bool]) {
        let (dev, w) = lhs.deviation_on(rhs, mask);
        self.results.push(RelationResult {
            name,
            holds: dev == 0,
            max_deviation: dev,
            witness: w.map(|j| self.rep.basis_key(j)),
        });
    }
}

/// Checks, on interior vectors:
///
/// * `t_e^* t_e = q_{s(e)}`, `t_e^* t_f = 0` for `e ≠ f`;
/// * `q_v` mutually orthogonal projections summing to `1`;
/// * `q_v - Σ_{e ∈ vE^1} t_e t_e^*` is a projection (the Toeplitz inequality);
/// * `π_{(μ,j)}` mutually orthogonal projections, `Σ_{μ ∈ vE^{<n_j}} π_{(μ,j)} = q_v`,
///   and `π_{(μ,j)} = Σ_{[ν]_{n_j} = μ} π_{(ν,j+1)}`;
/// * `t_e^* π_{(μ,j)}` equals `π_{(μ',j)} t_e^*` when `μ = eμ'`,
///   `Σ_{eλ ∈ E^{n_j}} π_{(λ,j)} t_e^*` when `μ = r(e)`, and `0` otherwise;
/// * `t_μ^* Θ_{r(μ)} = Θ_{s(μ)} t_μ^*` for `|μ| ∈ n_j ℕ`, `Θ_v = π_{(v,j)}`.
pub fn rep_relations_check(rep: &TruncatedRep) -> RelationReport {
    let sys = rep.system();
    let g = sys.graph();
    let space = sys.space();
    let mask = rep.interior();
    let dim = rep.dim();
    let zero = SparseMatrix::zeros(dim);
    let mut rec = Recorder {
        rep,
        results: Vec::new(),
    };

    for e in g.edges() {
        for f in g.edges() {
            let lhs = rep.tstar[e.0].mul(&rep.t[f.0]);
            let rhs = if e == f { &rep.q[g.source(e).0] } else { &zero };
            rec.check(format!("t*_{} t_{}", g.edge_name(e), g.edge_name(f)), &lhs, rhs, &mask);
        }
    }
    let mut qsum = SparseMatrix::zeros(dim);
    for v in g.vertices() {
        for w in g.vertices() {
            let lhs = rep.q[v.0].mul(&rep.q[w.0]);
            let rhs = if v == w { &rep.q[v.0] } else { &zero };
            rec.check(format!("q_{} q_{}", g.vertex_name(v), g.vertex_name(w)), &lhs, rhs, &mask);
        }
        qsum = qsum.add(&rep.q[v.0]);
        let mut gap = rep.q[v.0].clone();
        for &e in g.edges_with_range(v) {
            gap = gap.sub(&rep.t[e.0].mul(&rep.tstar[e.0]));
        }
        rec.check(format!("gap_{} projection", g.vertex_name(v)), &gap.mul(&gap), &gap, &mask);
        rec.check(format!("gap_{} self-adjoint", g.vertex_name(v)), &gap.transpose(), &gap, &mask);
    }
    rec.check("sum q_v = 1".into(), &qsum, &SparseMatrix::identity(dim), &mask);

    for j in 1..=rep.level {
        let nj = sys.n(j);
        let count = space.count_below(nj);
        for v in g.vertices() {
            let mut sum = SparseMatrix::zeros(dim);
            for mu in (0..count).filter(|&m| space.range_of(m) == v) {
                sum = sum.add(&rep.pi[j - 1][mu]);
            }
            rec.check(format!("sum pi(*, {j}) over {} = q", g.vertex_name(v)), &sum, &rep.q[v.0], &mask);
        }
        for a in 0..count {
            let pa = &rep.pi[j - 1][a];
            rec.check(format!("pi({}, {j}) projection", sys.key(a)), &pa.mul(pa), pa, &mask);
        }
        for a in 0..count {
            for b in (0..count).filter(|&b| b != a) {
                let prod = rep.pi[j - 1][a].mul(&rep.pi[j - 1][b]);
                if !prod.is_zero() {
                    rec.check(format!("pi({}, {j}) pi({}, {j})", sys.key(a), sys.key(b)), &prod, &zero, &mask);
                }
            }
        }
        if j < rep.level {
            let nn = sys.n(j + 1);
            for mu in 0..count {
                let mut sum = SparseMatrix::zeros(dim);
                for nu in (0..space.count_below(nn)).filter(|&nu| space.residue(nu, nj) == mu) {
                    sum = sum.add(&rep.pi[j][nu]);
                }
                rec.check(format!("refine pi({}, {j})", sys.key(mu)), &sum, &rep.pi[j - 1][mu], &mask);
            }
        }
        for e in g.edges() {
            for mu in 0..count {
                let lhs = rep.tstar[e.0].mul(&rep.pi[j - 1][mu]);
                let rhs = if space.first_edge(mu) == Some(e) {
                    rep.pi[j - 1][space.drop_first(mu).unwrap()].mul(&rep.tstar[e.0])
                } else if space.len_of(mu) == 0 && space.range_of(mu) == g.range(e) {
                    let mut sum = SparseMatrix::zeros(dim);
                    for lam in space.nodes_of_length(nj - 1) {
                        if space.range_of(lam) == g.source(e) {
                            sum = sum.add(&rep.pi[j - 1][lam]);
                        }
                    }
                    sum.mul(&rep.tstar[e.0])
                } else {
                    zero.clone()
                };
                rec.check(format!("t*_{} pi({}, {j})", g.edge_name(e), sys.key(mu)), &lhs, &rhs, &mask);
            }
        }
        let rspace = &rep.space;
        let mut len = nj;
        while len <= rep.cap {
            for mu in rspace.nodes_of_length(len) {
                let path = rspace.path(mu);
                let mut tmu = SparseMatrix::identity(dim);
                for e in path.edges() {
                    tmu = rep.tstar[e.0].mul(&tmu);
                }
                let lhs = tmu.mul(&rep.pi[j - 1][path.range().0]);
                let rhs = rep.pi[j - 1][path.source().0].mul(&tmu);
                rec.check(format!("covariance {} at level {j}", path.key(g)), &lhs, &rhs, &mask);
            }
            len += nj;
        }
    }
    RelationReport { results: rec.results }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoburnResult {
    pub holds: bool,
    pub witness: Option<String>,
}

/// Whether `(q_{r(μ)} - Σ_{e ∈ r(μ)E^1} t_e t_e^*) π_{(μ,k)} ≠ 0`.
pub fn coburn_check(rep: &TruncatedRep, mu: &Path, k: usize) -> Result<CoburnResult> {
    let g = rep.system().graph();
    let pi = rep.pi_of(mu, k)?;
    if pi.is_zero() {
        return Err(Error::EmptyCylinder(mu.key(g), k));
    }
    let v = mu.range();
    let mut gap = rep.q[v.0].clone();
    for &e in g.edges_with_range(v) {
        gap = gap.sub(&rep.t[e.0].mul(&rep.tstar[e.0]));
    }
    let prod = gap.mul(pi);
    let witness = (0..rep.dim()).find(|&j| !prod.col(j).is_empty());
    Ok(CoburnResult {
        holds: witness.is_some(),
        witness: witness.map(|j| rep.basis_key(j)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockReport {
    pub level: usize,
    pub classes: Vec<Vec<String>>,
    pub relations: RelationReport,
    /// Spanning elements checked symbolically and the first failure.
    pub symbolic_checked: usize,
    pub symbolic_failure: Option<String>,
}

impl BlockReport {
    pub fn holds(&self) -> bool {
        self.relations.holds() && self.symbolic_failure.is_none()
    }
}

/// `Q_{k0,Λ} = Σ_{s(μ) ∈ Λ} π_{(μ,k0)}`: checks that the blocks are nonzero
/// orthogonal projections summing to `1`, that every generator commutes with
/// them and has no cross terms, and that `Q_Λ a Q_Λ ∈ {0, a}` for the given
/// spanning elements at levels `≥ k0`.
pub fn central_blocks_check(rep: &TruncatedRep, k0: usize, elements: &[SpanningElement]) -> Result<BlockReport> {
    let sys = rep.system();
    if k0 < sys.stable_level()? {
        return Err(Error::UnstablePrefix);
    }
    if k0 > rep.level {
        return Err(Error::LevelOutOfRange(k0));
    }
    let g = sys.graph();
    let space = sys.space();
    let part = components(g, sys.n(k0))?;
    let classes = part.classes();
    let dim = rep.dim();
    let mask = rep.interior();
    let blocks: Vec<SparseMatrix> = classes
        .iter()
        .map(|lambda| {
            let mut q = SparseMatrix::zeros(dim);
            for mu in 0..sys.size(k0) {
                if lambda.contains(&space.source_of(mu)) {
                    q = q.add(&rep.pi[k0 - 1][mu]);
                }
            }
            q
        })
        .collect();
    let mut rec = Recorder {
        rep,
        results: Vec::new(),
    };
    let mut total = SparseMatrix::zeros(dim);
    for (a, qa) in blocks.iter().enumerate() {
        total = total.add(qa);
        rec.results.push(RelationResult {
            name: format!("Q{a} nonzero"),
            holds: !qa.is_zero(),
            max_deviation: 0,
            witness: None,
        });
        rec.check(format!("Q{a} projection"), &qa.mul(qa), qa, &mask);
    }
    rec.check("sum Q = 1".into(), &total, &SparseMatrix::identity(dim), &mask);
    let zero = SparseMatrix::zeros(dim);
    for gen in rep.generators() {
        let m = rep.matrix(gen);
        for (a, qa) in blocks.iter().enumerate() {
            rec.check(format!("[Q{a}, {gen:?}]"), &qa.mul(m), &m.mul(qa), &mask);
            for (b, qb) in blocks.iter().enumerate() {
                if a != b {
                    rec.check(format!("Q{a} {gen:?} Q{b}"), &qa.mul(m).mul(qb), &zero, &mask);
                }
            }
        }
    }

    let sym_blocks: Vec<FormalSum<crate::Rational>> = classes
        .iter()
        .map(|lambda| {
            let mut q = FormalSum::zero();
            for mu in 0..sys.size(k0) {
                if lambda.contains(&space.source_of(mu)) {
                    q.add_term(
                        SpanningElement::projection(sys, sys.path(mu), k0).expect("valid cylinder"),
                        crate::Rational::from_integer(1),
                    );
                }
            }
            q
        })
        .collect();
    let mut symbolic_failure = None;
    for a in elements {
        if a.level < k0 {
            continue;
        }
        let single = FormalSum::single(a.clone());
        let home = part.label(a.tau.source());
        for (c, q) in sym_blocks.iter().enumerate() {
            let got = q.mul(sys, &single)?.mul(sys, q)?;
            let want = if c == home { single.clone() } else { FormalSum::zero() };
            if got != want && symbolic_failure.is_none() {
                symbolic_failure = Some(format!("Q{c} a Q{c} for a = {}", a.display(g)));
            }
        }
    }
    Ok(BlockReport {
        level: k0,
        classes: classes
            .iter()
            .map(|c| c.iter().map(|v| g.vertex_name(*v).to_string()).collect())
            .collect(),
        relations: RelationReport { results: rec.results },
        symbolic_checked: elements.iter().filter(|a| a.level >= k0).count(),
        symbolic_failure,
    })
}

/// Comparison of `ς(a)ς(b)` with `ς(product(a, b))`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductComparison {
    /// Columns where neither side was clipped.
    pub compared: usize,
    /// Compared columns with a nonzero image.
    pub nonzero: usize,
    pub mismatches: usize,
}

/// Compare the symbolic product with the matrix product on every column where
/// no `t_e` leaves the cap.
pub fn compare_product(rep: &TruncatedRep, a: &SpanningElement, b: &SpanningElement) -> Result<ProductComparison> {
    let c = spanning_product(rep.system(), a, b)?;
    let mut out = ProductComparison::default();
    for j in 0..rep.dim() {
        let lhs = match rep.apply_element(b, vec![(j, 1)])? {
            Action::Exact(v) if v.is_empty() => Action::Exact(v),
            Action::Exact(v) => rep.apply_element(a, v)?,
            Action::Clipped => Action::Clipped,
        };
        let rhs = match &c {
            Some(c) => rep.apply_element(c, vec![(j, 1)])?,
            None => Action::Exact(Vec::new()),
        };
        if let (Action::Exact(l), Action::Exact(r)) = (lhs, rhs) {
            out.compared += 1;
            if !l.is_empty() || !r.is_empty() {
                out.nonzero += 1;
            }
            if l != r {
                out.mismatches += 1;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepStateValue {
    pub value: f64,
    pub bound: f64,
}

/// `Σ_{|λ| ≤ L} e^{-β|λ|} Σ_{r(x) = s(λ)} ⟨ς(a) h_{λ,x}, h_{λ,x}⟩ ε_k({x})` with
/// remainder bound `κ (ρe^{-β})^{L+1} / (1 - ρe^{-β}) ‖a‖_1 ‖ε‖_1`.
pub fn rep_state_eval(
    rep: &TruncatedRep,
    a: &FormalSum<f64>,
    eps: &LevelMeasure<f64>,
    beta: f64,
    spec: &Spectrum<f64>,
) -> Result<RepStateValue> {
    if beta <= spec.ln_rho() {
        return Err(Error::BetaNotSupercritical {
            beta,
            critical: spec.ln_rho(),
        });
    }
    if eps.level != rep.level {
        return Err(Error::LevelMismatch(eps.level, rep.level));
    }
    let mut value = 0.0;
    for (el, coeff) in a.terms() {
        for j in 0..rep.dim() {
            let (lam, x) = rep.basis[j];
            let w = eps.weights[x];
            if w == 0.0 {
                continue;
            }
            if let Action::Exact(v) = rep.apply_element(el, vec![(j, 1)])? {
                if let Some((_, d)) = v.iter().find(|(i, _)| *i == j) {
                    value += coeff * (*d as f64) * (-beta * rep.space.len_of(lam) as f64).exp() * w;
                }
            }
        }
    }
    let r = spec.rho() * (-beta).exp();
    let a_norm: f64 = a.terms().map(|(_, c)| c.abs()).sum();
    let bound = spec.kappa() * r.powi(rep.cap as i32 + 1) / (1.0 - r) * a_norm * eps.total_variation();
    Ok(RepStateValue { value, bound })
}
