//! Spanning elements `t_α π_{(τ,k)} t*_β`, finitely supported formal sums of
//! them, refinement of cylinders to deeper levels and the product rule.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, Graph, VertexId};
use crate::path::Path;
use crate::scalar::Scalar;
use crate::system::PathSystem;

/// `t_α π_{(τ,k)} t*_β` with `τ ∈ E^{<n_k}` and `α, β ∈ E^* r(τ)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpanningElement {
    pub alpha: Path,
    pub tau: Path,
    pub level: usize,
    pub beta: Path,
}

impl SpanningElement {
    pub fn new(sys: &PathSystem, alpha: Path, tau: Path, level: usize, beta: Path) -> Result<Self> {
        sys.check_level(level)?;
        let g = sys.graph();
        if tau.len() >= sys.n(level) {
            return Err(Error::PathTooLong(tau.key(g)));
        }
        if alpha.source() != tau.range() || beta.source() != tau.range() {
            return Err(Error::InvalidSpanningElement(format!(
                "alpha `{}`, tau `{}`, beta `{}`",
                alpha.key(g),
                tau.key(g),
                beta.key(g)
            )));
        }
        Ok(SpanningElement {
            alpha,
            tau,
            level,
            beta,
        })
    }

    /// `π_{(τ,k)} = t_{r(τ)} π_{(τ,k)} t*_{r(τ)}`.
    pub fn projection(sys: &PathSystem, tau: Path, level: usize) -> Result<Self> {
        let v = Path::vertex(tau.range());
        Self::new(sys, v.clone(), tau, level, v)
    }

    /// Gauge degree `|α| - |β|`.
    pub fn degree(&self) -> i64 {
        self.alpha.len() as i64 - self.beta.len() as i64
    }

    pub fn adjoint(&self) -> Self {
        SpanningElement {
            alpha: self.beta.clone(),
            tau: self.tau.clone(),
            level: self.level,
            beta: self.alpha.clone(),
        }
    }

    pub fn display<'a>(&'a self, g: &'a Graph) -> SpanningDisplay<'a> {
        SpanningDisplay { el: self, graph: g }
    }
}

pub struct SpanningDisplay<'a> {
    el: &'a SpanningElement,
    graph: &'a Graph,
}

impl fmt::Display for SpanningDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let g = self.graph;
        write!(
            f,
            "t[{}] pi({}, {}) t*[{}]",
            self.el.alpha.key(g),
            self.el.tau.key(g),
            self.el.level,
            self.el.beta.key(g)
        )
    }
}

/// Product of two spanning elements at a common level `k`, with `n = n_k`:
///
/// * `β = γβ'`, `ν = β'μ` gives `t_α π_μ t*_{δβ'}`;
/// * `β = γνρ`, `|ρμ| ∈ nℕ` gives `t_α π_μ t*_{δνρ}`;
/// * `γ = βγ'`, `μ = γ'ν` gives `t_{αγ'} π_ν t*_δ`;
/// * `γ = βμρ`, `|ρν| ∈ nℕ` gives `t_{αμρ} π_ν t*_δ`;
/// * otherwise `0`.
pub fn spanning_product(
    sys: &PathSystem,
    a: &SpanningElement,
    b: &SpanningElement,
) -> Result<Option<SpanningElement>> {
    if a.level != b.level {
        return Err(Error::LevelMismatch(a.level, b.level));
    }
    let g = sys.graph();
    let n = sys.n(a.level);
    let (mu, nu) = (&a.tau, &b.tau);
    if let Some(bp) = a.beta.strip_prefix(g, &b.alpha) {
        let hit = bp.concat(g, mu).ok().as_ref() == Some(nu)
            || bp
                .strip_prefix(g, nu)
                .is_some_and(|rho| (rho.len() + mu.len()) % n == 0);
        if !hit {
            return Ok(None);
        }
        let beta = b.beta.concat(g, &bp)?;
        return Ok(Some(SpanningElement {
            alpha: a.alpha.clone(),
            tau: mu.clone(),
            level: a.level,
            beta,
        }));
    }
    if let Some(gp) = b.alpha.strip_prefix(g, &a.beta) {
        let hit = gp.concat(g, nu).ok().as_ref() == Some(mu)
            || gp
                .strip_prefix(g, mu)
                .is_some_and(|rho| (rho.len() + nu.len()) % n == 0);
        if !hit {
            return Ok(None);
        }
        let alpha = a.alpha.concat(g, &gp)?;
        return Ok(Some(SpanningElement {
            alpha,
            tau: nu.clone(),
            level: a.level,
            beta: b.beta.clone(),
        }));
    }
    Ok(None)
}

/// Level-`k` cylinders `λ ∈ E^{<n_k}` with `[λ]_{n_l} = τ`.
pub fn refining_cylinders(sys: &PathSystem, tau: &Path, from: usize, to: usize) -> Result<Vec<Path>> {
    sys.check_level(from)?;
    sys.check_level(to)?;
    if to < from {
        return Err(Error::LevelNotInChain { from, to });
    }
    let t = sys.index_at(from, tau)?;
    let n = sys.n(from);
    Ok((0..sys.size(to))
        .filter(|&i| sys.space().residue(i, n) == t)
        .map(|i| sys.path(i))
        .collect())
}

/// `π_{(τ,l)} = Σ_{[λ]_{n_l} = τ} π_{(λ,k)}`, applied inside `a`.
pub fn refine<S: Scalar>(sys: &PathSystem, a: &SpanningElement, k: usize) -> Result<FormalSum<S>> {
    let mut out = FormalSum::zero();
    for lambda in refining_cylinders(sys, &a.tau, a.level, k)? {
        out.add_term(
            SpanningElement {
                alpha: a.alpha.clone(),
                tau: lambda,
                level: k,
                beta: a.beta.clone(),
            },
            S::one(),
        );
    }
    Ok(out)
}

/// Finitely supported real combination of spanning elements; zero
/// coefficients are pruned.
#[derive(Debug, Clone, PartialEq)]
pub struct FormalSum<S> {
    terms: BTreeMap<SpanningElement, S>,
}

impl<S: Scalar> Default for FormalSum<S> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<S: Scalar> FormalSum<S> {
    pub fn zero() -> Self {
        FormalSum {
            terms: BTreeMap::new(),
        }
    }

    pub fn single(a: SpanningElement) -> Self {
        let mut s = Self::zero();
        s.add_term(a, S::one());
        s
    }

    pub fn add_term(&mut self, a: SpanningElement, c: S) {
        let entry = self.terms.entry(a).or_insert_with(S::zero);
        *entry = entry.clone() + c;
        if entry.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&SpanningElement, &S)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Highest level among the terms, or `None` for the zero sum.
    pub fn max_level(&self) -> Option<usize> {
        self.terms.keys().map(|a| a.level).max()
    }

    pub fn scale(&self, c: &S) -> Self {
        let mut out = Self::zero();
        for (a, v) in &self.terms {
            out.add_term(a.clone(), v.clone() * c.clone());
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (a, v) in &other.terms {
            out.add_term(a.clone(), v.clone());
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero();
        for (a, v) in &self.terms {
            out.add_term(a.adjoint(), v.clone());
        }
        out
    }

    /// Every term refined to level `k`.
    pub fn refine_to(&self, sys: &PathSystem, k: usize) -> Result<Self> {
        let mut out = Self::zero();
        for (a, v) in &self.terms {
            out = out.add(&refine::<S>(sys, a, k)?.scale(v));
        }
        Ok(out)
    }

    /// Product via the spanning rule after refining both sides to a common level.
    pub fn mul(&self, sys: &PathSystem, other: &Self) -> Result<Self> {
        let k = match (self.max_level(), other.max_level()) {
            (Some(a), Some(b)) => a.max(b),
            _ => return Ok(Self::zero()),
        };
        let (x, y) = (self.refine_to(sys, k)?, other.refine_to(sys, k)?);
        let mut out = Self::zero();
        for (a, u) in &x.terms {
            for (b, v) in &y.terms {
                if let Some(c) = spanning_product(sys, a, b)? {
                    out.add_term(c, u.clone() * v.clone());
                }
            }
        }
        Ok(out)
    }

    /// Apply a linear functional given on spanning elements.
    pub fn eval<T: Scalar>(&self, mut f: impl FnMut(&SpanningElement, &S) -> Result<T>) -> Result<T> {
        let mut acc = T::zero();
        for (a, v) in &self.terms {
            acc = acc + f(a, v)?;
        }
        Ok(acc)
    }
}

/// `q_v = Σ_{μ ∈ vE^{<n_1}} π_{(μ,1)}`.
pub fn vertex_projection<S: Scalar>(sys: &PathSystem, v: VertexId) -> Result<FormalSum<S>> {
    let mut out = FormalSum::zero();
    for i in 0..sys.size(1) {
        if sys.space().range_of(i) == v {
            out.add_term(SpanningElement::projection(sys, sys.path(i), 1)?, S::one());
        }
    }
    Ok(out)
}

/// `t_e = Σ_{μ ∈ s(e)E^{<n_1}} t_e π_{(μ,1)} t*_{s(e)}`.
pub fn edge_element<S: Scalar>(sys: &PathSystem, e: EdgeId) -> Result<FormalSum<S>> {
    let g = sys.graph();
    let v = g.source(e);
    let mut out = FormalSum::zero();
    for i in 0..sys.size(1) {
        if sys.space().range_of(i) == v {
            out.add_term(
                SpanningElement::new(sys, Path::edge(g, e), sys.path(i), 1, Path::vertex(v))?,
                S::one(),
            );
        }
    }
    Ok(out)
}

/// Random path with source `v` and length at most `len` (shorter only when a
/// vertex emits no edges).
pub fn random_path_from<R: Rng>(g: &Graph, v: VertexId, len: usize, rng: &mut R) -> Path {
    let mut rev = Vec::with_capacity(len);
    let mut at = v;
    for _ in 0..len {
        match g.edges_with_source(at).choose(rng) {
            Some(&e) => {
                rev.push(e);
                at = g.range(e);
            }
            None => break,
        }
    }
    if rev.is_empty() {
        return Path::vertex(v);
    }
    rev.reverse();
    Path::from_edges(g, &rev).expect("walk composes")
}

/// Random path with range `v` and length at most `len`.
pub fn random_path_to<R: Rng>(g: &Graph, v: VertexId, len: usize, rng: &mut R) -> Path {
    let mut edges = Vec::with_capacity(len);
    let mut at = v;
    for _ in 0..len {
        match g.edges_with_range(at).choose(rng) {
            Some(&e) => {
                edges.push(e);
                at = g.source(e);
            }
            None => break,
        }
    }
    if edges.is_empty() {
        return Path::vertex(v);
    }
    Path::from_edges(g, &edges).expect("walk composes")
}

/// Uniform cylinder at level `k`, random `α`, `β` of length `≤ max_len`.
pub fn random_element<R: Rng>(sys: &PathSystem, k: usize, max_len: usize, rng: &mut R) -> SpanningElement {
    let tau = sys.path(rng.gen_range(0..sys.size(k)));
    random_element_at(sys, tau, k, max_len, rng)
}

fn random_element_at<R: Rng>(sys: &PathSystem, tau: Path, k: usize, max_len: usize, rng: &mut R) -> SpanningElement {
    let g = sys.graph();
    let v = tau.range();
    let alpha = random_path_from(g, v, rng.gen_range(0..=max_len), rng);
    let beta = random_path_from(g, v, rng.gen_range(0..=max_len), rng);
    SpanningElement {
        alpha,
        tau,
        level: k,
        beta,
    }
}

fn random_cylinder_with_range<R: Rng>(sys: &PathSystem, k: usize, v: VertexId, rng: &mut R) -> Path {
    let nodes: Vec<usize> = (0..sys.size(k)).filter(|&i| sys.space().range_of(i) == v).collect();
    sys.path(*nodes.choose(rng).expect("every vertex is a level-k cylinder"))
}

/// Random pair at level `k`; two thirds of the pairs have comparable inner
/// paths so the product has a chance to be nonzero.
pub fn random_pair<R: Rng>(
    sys: &PathSystem,
    k: usize,
    max_len: usize,
    rng: &mut R,
) -> (SpanningElement, SpanningElement) {
    let g = sys.graph();
    let a = random_element(sys, k, max_len, rng);
    let b = match rng.gen_range(0..3) {
        0 => random_element(sys, k, max_len, rng),
        1 => {
            // γ a prefix of β
            let gamma = a.beta.prefix(g, rng.gen_range(0..=a.beta.len()));
            let tau = random_cylinder_with_range(sys, k, gamma.source(), rng);
            let delta = random_path_from(g, tau.range(), rng.gen_range(0..=max_len), rng);
            SpanningElement {
                alpha: gamma,
                tau,
                level: k,
                beta: delta,
            }
        }
        _ => {
            // γ extends β
            let ext = random_path_to(g, a.beta.source(), rng.gen_range(0..=max_len), rng);
            let gamma = a.beta.concat(g, &ext).expect("extension starts at s(beta)");
            let tau = random_cylinder_with_range(sys, k, gamma.source(), rng);
            let delta = random_path_from(g, tau.range(), rng.gen_range(0..=max_len), rng);
            SpanningElement {
                alpha: gamma,
                tau,
                level: k,
                beta: delta,
            }
        }
    };
    (a, b)
}

/// Random formal sum of up to `terms` elements at level `k` with coefficients
/// in `[-1, 1]`.
pub fn random_sum<R: Rng>(sys: &PathSystem, k: usize, max_len: usize, terms: usize, rng: &mut R) -> FormalSum<f64> {
    let mut out = FormalSum::zero();
    for _ in 0..terms {
        out.add_term(random_element(sys, k, max_len, rng), rng.gen_range(-1.0..1.0));
    }
    out
}
