//! Signed measures on `E^{<n_k}` and consistent towers across levels.
//!
//! A level measure stores the mass of every cylinder `Z(μ, k)`, `μ ∈ E^{<n_k}`,
//! indexed by node number in the shared path trie. A tower is consistent when
//! pushing level `k + 1` down along `ν ↦ [ν]_{n_k}` reproduces level `k`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::VertexId;
use crate::omega::OmegaPrefix;
use crate::scalar::Scalar;
use crate::system::PathSystem;
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, PartialEq)]
pub struct LevelMeasure<S> {
    pub level: usize,
    pub weights: Vec<S>,
}

impl<S: Scalar> LevelMeasure<S> {
    pub fn zeros(sys: &PathSystem, level: usize) -> Self {
        LevelMeasure {
            level,
            weights: vec![S::zero(); sys.size(level)],
        }
    }

    pub fn from_weights(sys: &PathSystem, level: usize, weights: Vec<S>) -> Result<Self> {
        sys.check_level(level)?;
        if weights.len() != sys.size(level) {
            return Err(Error::WeightCount {
                level,
                expected: sys.size(level),
                found: weights.len(),
            });
        }
        Ok(LevelMeasure { level, weights })
    }

    pub fn delta(sys: &PathSystem, level: usize, node: usize) -> Self {
        let mut m = Self::zeros(sys, level);
        m.weights[node] = S::one();
        m
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total(&self) -> S {
        self.weights.iter().cloned().fold(S::zero(), |a, b| a + b)
    }

    pub fn total_variation(&self) -> S {
        self.weights.iter().map(|w| w.abs()).fold(S::zero(), |a, b| a + b)
    }

    pub fn is_zero(&self) -> bool {
        self.weights.iter().all(|w| w.is_zero())
    }

    /// First node with a negative weight.
    pub fn negative_at(&self) -> Option<usize> {
        self.weights.iter().position(|w| w.is_negative())
    }

    pub fn scale(&self, c: &S) -> Self {
        LevelMeasure {
            level: self.level,
            weights: self.weights.iter().map(|w| w.clone() * c.clone()).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.level, other.level);
        LevelMeasure {
            level: self.level,
            weights: self
                .weights
                .iter()
                .zip(&other.weights)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-S::one()))
    }

    /// `max |self - other|`, as `f64`.
    pub fn max_diff(&self, other: &Self) -> f64 {
        self.weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a.clone() - b.clone()).abs().to_f64_lossy())
            .fold(0.0, f64::max)
    }

    pub fn map<T>(&self, f: impl Fn(&S) -> T) -> LevelMeasure<T> {
        LevelMeasure {
            level: self.level,
            weights: self.weights.iter().map(f).collect(),
        }
    }
}

/// `p*(m)({μ}) = Σ_{[ν]_{n_k} = μ} m({ν})` for `m` at level `k + 1`.
pub fn pushforward<S: Scalar>(sys: &PathSystem, m: &LevelMeasure<S>) -> Result<LevelMeasure<S>> {
    if m.level < 2 || m.level > sys.depth() {
        return Err(Error::LevelOutOfRange(m.level));
    }
    let k = m.level - 1;
    let mut out = LevelMeasure::<S>::zeros(sys, k);
    for (i, w) in m.weights.iter().enumerate() {
        let p = sys.parent_of(k, i);
        out.weights[p] = out.weights[p].clone() + w.clone();
    }
    Ok(out)
}

/// Push down to any lower level.
pub fn pushforward_to<S: Scalar>(sys: &PathSystem, m: &LevelMeasure<S>, k: usize) -> Result<LevelMeasure<S>> {
    if k == 0 || k > m.level {
        return Err(Error::LevelNotInChain { from: m.level, to: k });
    }
    let mut cur = m.clone();
    while cur.level > k {
        cur = pushforward(sys, &cur)?;
    }
    Ok(cur)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Jordan<S> {
    pub plus: LevelMeasure<S>,
    pub minus: LevelMeasure<S>,
    pub total_variation: S,
}

pub fn jordan<S: Scalar>(m: &LevelMeasure<S>) -> Jordan<S> {
    let plus = m.map(|w| if w.is_positive() { w.clone() } else { S::zero() });
    let minus = m.map(|w| if w.is_negative() { -w.clone() } else { S::zero() });
    let total_variation = plus.total() + minus.total();
    Jordan {
        plus,
        minus,
        total_variation,
    }
}

/// Levels `1..=K` of a measure on the projective limit.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureTower<S> {
    levels: Vec<LevelMeasure<S>>,
}

impl<S: Scalar> MeasureTower<S> {
    /// Levels must be `1, 2, ..., K` in order with matching sizes.
    pub fn new(sys: &PathSystem, levels: Vec<LevelMeasure<S>>) -> Result<Self> {
        for (i, m) in levels.iter().enumerate() {
            if m.level != i + 1 {
                return Err(Error::LevelOutOfRange(m.level));
            }
            sys.check_level(m.level)?;
            if m.len() != sys.size(m.level) {
                return Err(Error::WeightCount {
                    level: m.level,
                    expected: sys.size(m.level),
                    found: m.len(),
                });
            }
        }
        if levels.is_empty() {
            return Err(Error::EmptyOmega);
        }
        Ok(MeasureTower { levels })
    }

    /// The consistent tower generated by a top-level measure.
    pub fn from_top(sys: &PathSystem, top: LevelMeasure<S>) -> Result<Self> {
        let mut levels = vec![top];
        while levels.last().unwrap().level > 1 {
            let next = pushforward(sys, levels.last().unwrap())?;
            levels.push(next);
        }
        levels.reverse();
        MeasureTower::new(sys, levels)
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, k: usize) -> &LevelMeasure<S> {
        &self.levels[k - 1]
    }

    pub fn levels(&self) -> &[LevelMeasure<S>] {
        &self.levels
    }

    pub fn top(&self) -> &LevelMeasure<S> {
        self.levels.last().unwrap()
    }

    pub fn level_mut(&mut self, k: usize) -> &mut LevelMeasure<S> {
        &mut self.levels[k - 1]
    }

    pub fn map_levels(&self, f: impl Fn(&LevelMeasure<S>) -> LevelMeasure<S>) -> Self {
        MeasureTower {
            levels: self.levels.iter().map(f).collect(),
        }
    }

    pub fn scale(&self, c: &S) -> Self {
        self.map_levels(|m| m.scale(c))
    }

    pub fn add(&self, other: &Self) -> Self {
        MeasureTower {
            levels: self.levels.iter().zip(&other.levels).map(|(a, b)| a.add(b)).collect(),
        }
    }

    pub fn is_positive(&self) -> bool {
        self.levels.iter().all(|m| m.negative_at().is_none())
    }

    pub fn is_zero(&self) -> bool {
        self.levels.iter().all(|m| m.is_zero())
    }

    /// `m(X)`, the mass of level 1.
    pub fn mass(&self) -> S {
        self.levels[0].total()
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        self.levels
            .iter()
            .zip(&other.levels)
            .map(|(a, b)| a.max_diff(b))
            .fold(0.0, f64::max)
    }

    pub fn to_f64(&self) -> MeasureTower<f64> {
        MeasureTower {
            levels: self.levels.iter().map(|m| m.map(|w| w.to_f64_lossy())).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TowerReport {
    pub consistent: bool,
    /// First inconsistency: level `k` and the level-`k` path that disagrees.
    pub violation: Option<(usize, String)>,
    pub max_deviation: f64,
    pub total_variations: Vec<f64>,
    /// Total variation strictly increases at every level of the prefix.
    pub variation_grows: bool,
}

pub fn check_tower<S: Scalar>(sys: &PathSystem, t: &MeasureTower<S>, tol: &Tolerances) -> TowerReport {
    let mut violation = None;
    let mut max_deviation = 0.0f64;
    for k in 1..t.depth() {
        let pushed = pushforward(sys, t.level(k + 1)).expect("level in range");
        for (i, (a, b)) in pushed.weights.iter().zip(&t.level(k).weights).enumerate() {
            let d = (a.clone() - b.clone()).abs().to_f64_lossy();
            max_deviation = max_deviation.max(d);
            if !a.approx_eq(b, tol.consistency) && violation.is_none() {
                violation = Some((k, sys.key(i)));
            }
        }
    }
    let total_variations: Vec<f64> = t.levels().iter().map(|m| m.total_variation().to_f64_lossy()).collect();
    let variation_grows = total_variations.len() >= 2 && total_variations.windows(2).all(|w| w[1] > w[0]);
    TowerReport {
        consistent: violation.is_none(),
        violation,
        max_deviation,
        total_variations,
        variation_grows,
    }
}

/// The divergent signed tower on the one-loop graph with `n_k = 2^k`:
/// `m_k({e^j}) = 2 m_{k-1}({e^j})` and `m_k({e^{j + 2^{k-1}}}) = -m_{k-1}({e^j})`
/// for `j < 2^{k-1}`, starting from `m_0({v}) = 1`.
pub fn build_remark_tower<S: Scalar>(depth: usize) -> Result<(std::sync::Arc<PathSystem>, MeasureTower<S>)> {
    if depth == 0 {
        return Err(Error::EmptyOmega);
    }
    let omega = OmegaPrefix::new(&(1..=depth).map(|k| 1usize << k).collect::<Vec<_>>())?;
    let sys = PathSystem::new(&crate::corpus::g1(), &omega)?;
    // on the one-loop graph node j is e^j
    let two = S::one() + S::one();
    let mut prev = vec![S::one()];
    let mut levels = Vec::with_capacity(depth);
    for k in 1..=depth {
        let half = 1usize << (k - 1);
        let mut cur = vec![S::zero(); 2 * half];
        for j in 0..half {
            cur[j] = two.clone() * prev[j].clone();
            cur[j + half] = -prev[j].clone();
        }
        levels.push(LevelMeasure::from_weights(&sys, k, cur.clone())?);
        prev = cur;
    }
    let tower = MeasureTower::new(&sys, levels)?;
    Ok((sys, tower))
}

/// Normalised restriction `m^Λ(U) = m(U ∩ X_Λ) / m(X_Λ)` where
/// `X_Λ = {x : s(x_k) ∈ Λ}` for levels `k >= k0`. Levels below `k0` are
/// obtained by pushing level `k0` down.
pub fn restrict_component<S: Scalar>(
    sys: &PathSystem,
    t: &MeasureTower<S>,
    lambda: &[VertexId],
    k0: usize,
) -> Result<MeasureTower<S>> {
    if k0 < sys.stable_level()? || k0 > t.depth() {
        return Err(Error::UnstablePrefix);
    }
    for m in t.levels() {
        if let Some(i) = m.negative_at() {
            return Err(Error::NotPositive(sys.key(i)));
        }
    }
    let space = sys.space();
    let inside = |i: usize| lambda.contains(&space.source_of(i));
    let restrict = |m: &LevelMeasure<S>| {
        let mut r = m.clone();
        for (i, w) in r.weights.iter_mut().enumerate() {
            if !inside(i) {
                *w = S::zero();
            }
        }
        r
    };
    let mass = restrict(t.level(k0)).total();
    if !mass.is_positive() {
        return Err(Error::ZeroMass);
    }
    let inv = S::one() / mass;
    let mut levels: Vec<LevelMeasure<S>> = Vec::with_capacity(t.depth());
    for k in k0..=t.depth() {
        levels.push(restrict(t.level(k)).scale(&inv));
    }
    let mut below = Vec::new();
    let mut cur = levels[0].clone();
    while cur.level > 1 {
        cur = pushforward(sys, &cur)?;
        below.push(cur.clone());
    }
    below.reverse();
    below.extend(levels);
    MeasureTower::new(sys, below)
}

/// On-disk form of a level measure: `{"level":1,"values":{"@v":0.5,"e":0.5}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelMeasureFile {
    pub level: usize,
    pub values: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TowerFile {
    pub omega: Vec<usize>,
    pub levels: Vec<LevelMeasureFile>,
}

impl LevelMeasure<f64> {
    /// Omitted paths have weight zero.
    pub fn from_file(sys: &PathSystem, f: &LevelMeasureFile) -> Result<Self> {
        sys.check_level(f.level)?;
        let mut m = LevelMeasure::zeros(sys, f.level);
        for (key, &w) in &f.values {
            let i = sys.parse_key_at(f.level, key)?;
            m.weights[i] = w;
        }
        Ok(m)
    }

    pub fn to_file(&self, sys: &PathSystem) -> LevelMeasureFile {
        LevelMeasureFile {
            level: self.level,
            values: self
                .weights
                .iter()
                .enumerate()
                .map(|(i, &w)| (sys.key(i), w))
                .collect(),
        }
    }
}

impl MeasureTower<f64> {
    pub fn to_file(&self, sys: &PathSystem) -> TowerFile {
        TowerFile {
            omega: sys.omega().terms()[..self.depth()].to_vec(),
            levels: self.levels.iter().map(|m| m.to_file(sys)).collect(),
        }
    }

    pub fn from_file(sys: &PathSystem, f: &TowerFile) -> Result<Self> {
        let levels = f
            .levels
            .iter()
            .map(|l| LevelMeasure::from_file(sys, l))
            .collect::<Result<Vec<_>>>()?;
        MeasureTower::new(sys, levels)
    }
}
