//! KMS states of the gauge dynamics: the resolvent `(1 - e^{-β}A)^{-1}`, state
//! constructors from subinvariant and boundary towers, the critical extreme
//! points, state counting and the factors-through test.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::{spanning_product, FormalSum, SpanningElement};
use crate::error::{Error, Result};
use crate::graph::VertexId;
use crate::linalg::Dense;
use crate::measures::{check_tower, LevelMeasure, MeasureTower, TowerFile};
use crate::scalar::{Real, Scalar};
use crate::spectral::{
    apply_transfer, class_eigen_towers, classify_subinvariance, decompose_eigen_tower, Spectrum,
    SubinvarianceVerdict,
};
use crate::system::PathSystem;
use crate::tolerance::Tolerances;

/// Target for the truncation error of [`Kms::path_sum_inverse`].
pub const PATH_SUM_TOL: f64 = 1e-10;

/// Total mass tolerance for probability towers.
pub const MASS_TOL: f64 = 1e-10;

/// Solve `(I - q A_{n_k}) m_k = ε_k` on every level, exactly for rational `q`.
pub fn resolvent<S: Scalar>(sys: &PathSystem, eps: &MeasureTower<S>, q: &S) -> Result<MeasureTower<S>> {
    let mut levels = Vec::with_capacity(eps.depth());
    for e in eps.levels() {
        let n = e.len();
        let mut mat = Dense::<S>::identity(n);
        for j in 0..n {
            let col = apply_transfer(sys, &LevelMeasure::<S>::delta(sys, e.level, j));
            for (i, a) in col.weights.iter().enumerate() {
                if !a.is_zero() {
                    mat.add_to(i, j, -(q.clone() * a.clone()));
                }
            }
        }
        levels.push(LevelMeasure {
            level: e.level,
            weights: mat.solve(&e.weights)?,
        });
    }
    MeasureTower::new(sys, levels)
}

/// `Σ_{j < terms} q^j A^j ε` on every level.
pub fn neumann_series<S: Scalar>(sys: &PathSystem, eps: &MeasureTower<S>, q: &S, terms: usize) -> MeasureTower<S> {
    eps.map_levels(|e| {
        let mut acc = LevelMeasure::zeros(sys, e.level);
        let mut cur = e.clone();
        for _ in 0..terms {
            acc = acc.add(&cur);
            cur = apply_transfer(sys, &cur).scale(q);
        }
        acc
    })
}

/// Truncated path sum with its remainder bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSum<F> {
    pub value: F,
    pub bound: F,
    /// Longest covering path length included.
    pub length: usize,
}

/// Where a state came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    FromMeasure,
    FromBoundary,
    /// Extreme critical state supported on the named vertex class.
    Critical { class: Vec<String> },
    Convex,
}

/// `φ(t_μ π_{(τ,k)} t*_ν) = δ_{μ,ν} e^{-β|μ|} m_k({τ})`.
#[derive(Debug, Clone)]
pub struct KmsState<F> {
    beta: F,
    tower: MeasureTower<F>,
    provenance: Provenance,
    sys: Arc<PathSystem>,
}

impl<F: Real> KmsState<F> {
    pub fn beta(&self) -> F {
        self.beta
    }

    pub fn tower(&self) -> &MeasureTower<F> {
        &self.tower
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn system(&self) -> &PathSystem {
        &self.sys
    }

    pub fn eval(&self, a: &SpanningElement) -> Result<F> {
        if a.level > self.tower.depth() {
            return Err(Error::LevelOutOfRange(a.level));
        }
        if a.alpha != a.beta {
            return Ok(F::zero());
        }
        let t = self.sys.index_at(a.level, &a.tau)?;
        let len = <F as Scalar>::from_usize(a.alpha.len());
        Ok((-self.beta * len).exp() * self.tower.level(a.level).weights[t])
    }

    pub fn eval_sum(&self, a: &FormalSum<F>) -> Result<F> {
        a.eval(|el, c| Ok(*c * self.eval(el)?))
    }

    /// `m^φ(X_Λ)` at level `k` for each class.
    pub fn class_masses(&self, k: usize, classes: &[Vec<VertexId>]) -> Vec<F> {
        let space = self.sys.space();
        classes
            .iter()
            .map(|lambda| {
                self.tower
                    .level(k)
                    .weights
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| lambda.contains(&space.source_of(*i)))
                    .fold(F::zero(), |s, (_, w)| s + *w)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub beta: f64,
    pub provenance: Provenance,
    pub measure: TowerFile,
}

impl KmsState<f64> {
    pub fn to_file(&self) -> StateFile {
        StateFile {
            beta: self.beta,
            provenance: self.provenance.clone(),
            measure: self.tower.to_file(&self.sys),
        }
    }
}

/// Per-level comparison of an implemented critical tower against the
/// unnormalised closed form `ρ^{-|τ|} x_{s(τ)} / Σ_{v ∈ Λ} x_v` on `s(τ) ∈ Λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalComparison {
    pub class: Vec<String>,
    pub levels: Vec<LevelComparison>,
    /// Whether the closed-form values themselves form a consistent tower.
    pub closed_form_consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelComparison {
    pub level: usize,
    /// Range of `implemented / closed form` over the class support.
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub closed_form_mass: f64,
    pub implemented_mass: f64,
}

/// Graph, divisor chain prefix and Perron data, shared by all constructors.
#[derive(Debug, Clone)]
pub struct Kms<F> {
    sys: Arc<PathSystem>,
    spec: Spectrum<F>,
    tol: Tolerances,
}

impl<F: Real> Kms<F> {
    pub fn new(sys: Arc<PathSystem>) -> Result<Self> {
        Self::with_tolerances(sys, Tolerances::default())
    }

    pub fn with_tolerances(sys: Arc<PathSystem>, tol: Tolerances) -> Result<Self> {
        let spec = Spectrum::new(sys.graph())?;
        Ok(Kms { sys, spec, tol })
    }

    pub fn system(&self) -> &Arc<PathSystem> {
        &self.sys
    }

    pub fn spectrum(&self) -> &Spectrum<F> {
        &self.spec
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    /// `ln ρ(A_E)`.
    pub fn critical_beta(&self) -> F {
        self.spec.ln_rho()
    }

    fn require_supercritical(&self, beta: F) -> Result<()> {
        if beta > self.critical_beta() {
            Ok(())
        } else {
            Err(Error::BetaNotSupercritical {
                beta: beta.to_f64_lossy(),
                critical: self.critical_beta().to_f64_lossy(),
            })
        }
    }

    /// `y_v = Σ_{μ ∈ E^* v} e^{-β|μ|}` from `(I - e^{-β} A^T) y = 1`.
    pub fn y_vector(&self, beta: F) -> Result<Vec<F>> {
        self.require_supercritical(beta)?;
        let g = self.sys.graph();
        let a = g.adjacency();
        let q = (-beta).exp();
        let n = g.vertex_count();
        let mut mat = Dense::<F>::identity(n);
        for v in 0..n {
            for w in 0..n {
                let c = F::from_u64(a.get(w, v)).unwrap();
                mat.add_to(v, w, -(q * c));
            }
        }
        mat.solve(&vec![F::one(); n])
    }

    /// `(1 - e^{-β}A_ω)^{-1} ε` by a dense solve per level.
    pub fn neumann_inverse(&self, eps: &MeasureTower<F>, beta: F) -> Result<MeasureTower<F>> {
        self.require_supercritical(beta)?;
        if let Some(i) = eps.levels().iter().find_map(|m| m.negative_at()) {
            return Err(Error::NotPositive(self.sys.key(i)));
        }
        resolvent(&self.sys, eps, &(-beta).exp())
    }

    /// `Σ_{(λ,ν) ∈ τE(n_k)^*} e^{-β|λ|} ε_k({ν})`, summed over covering paths of
    /// length at most `L`, where `L` is the least length whose remainder bound
    /// `κ (ρe^{-β})^{L+1} / (1 - ρe^{-β}) ‖ε‖_1` drops below `1e-10`.
    /// Uses the explicit edge list of `E(n_k)`.
    pub fn path_sum_inverse(&self, eps: &LevelMeasure<F>, beta: F, tau: usize) -> Result<PathSum<F>> {
        self.require_supercritical(beta)?;
        let q = (-beta).exp();
        let r = self.spec.rho() * q;
        let norm = eps.total_variation();
        let scale = self.spec.kappa() * norm / (F::one() - r);
        let target = F::from_f64(PATH_SUM_TOL).unwrap();
        let mut length = 0usize;
        let mut bound = scale * r;
        while bound >= target && bound > F::zero() {
            bound = bound * r;
            length += 1;
        }
        let cover = self.sys.cover(eps.level);
        let mut w = vec![F::zero(); eps.len()];
        w[tau] = F::one();
        let mut value = F::zero();
        for j in 0..=length {
            value = value + w.iter().zip(&eps.weights).fold(F::zero(), |s, (a, b)| s + *a * *b);
            if j < length {
                w = cover.apply_adjacency_transpose(&w).into_iter().map(|x| x * q).collect();
            }
        }
        Ok(PathSum { value, bound, length })
    }

    fn require_probability(&self, t: &MeasureTower<F>) -> Result<()> {
        for m in t.levels() {
            let mass = m.total().to_f64_lossy();
            if (mass - 1.0).abs() > MASS_TOL {
                return Err(Error::NotProbability(mass));
            }
        }
        Ok(())
    }

    /// Subinvariance verdict of `m` against `e^β`.
    pub fn verdict(&self, m: &MeasureTower<F>, beta: F) -> Result<SubinvarianceVerdict> {
        classify_subinvariance(&self.sys, m, beta.exp(), self.spec.rho(), &self.tol)
    }

    pub fn state_from_measure(&self, m: &MeasureTower<F>, beta: F) -> Result<KmsState<F>> {
        self.state_with(m.clone(), beta, Provenance::FromMeasure)
    }

    fn state_with(&self, m: MeasureTower<F>, beta: F, provenance: Provenance) -> Result<KmsState<F>> {
        let slack = F::from_f64(self.tol.eigen).unwrap();
        if beta < self.critical_beta() - slack {
            return Err(Error::BetaNotSupercritical {
                beta: beta.to_f64_lossy(),
                critical: self.critical_beta().to_f64_lossy(),
            });
        }
        if let SubinvarianceVerdict::NotSubinvariant { level, path, .. } = self.verdict(&m, beta)? {
            return Err(Error::NotSubinvariant { level, path });
        }
        self.require_probability(&m)?;
        Ok(KmsState {
            beta,
            tower: m,
            provenance,
            sys: self.sys.clone(),
        })
    }

    /// `ε_k({τ}) = mb_k({τ}) / y_{r(τ)}`.
    pub fn boundary_to_epsilon(&self, mb: &MeasureTower<F>, beta: F) -> Result<MeasureTower<F>> {
        let y = self.y_vector(beta)?;
        let space = self.sys.space();
        Ok(mb.map_levels(|m| LevelMeasure {
            level: m.level,
            weights: m
                .weights
                .iter()
                .enumerate()
                .map(|(i, w)| *w / y[space.range_of(i).0])
                .collect(),
        }))
    }

    /// `∫ y dε` on the top level.
    pub fn y_integral(&self, eps: &MeasureTower<F>, beta: F) -> Result<F> {
        let y = self.y_vector(beta)?;
        let space = self.sys.space();
        Ok(eps
            .top()
            .weights
            .iter()
            .enumerate()
            .fold(F::zero(), |s, (i, w)| s + *w * y[space.range_of(i).0]))
    }

    /// `m ↦ φ_{y^{-1} m}`.
    pub fn state_from_boundary(&self, mb: &MeasureTower<F>, beta: F) -> Result<KmsState<F>> {
        self.require_supercritical(beta)?;
        if let Some(i) = mb.levels().iter().find_map(|m| m.negative_at()) {
            return Err(Error::NotPositive(self.sys.key(i)));
        }
        self.require_probability(mb)?;
        let report = check_tower(&self.sys, mb, &self.tol);
        if let Some((level, path)) = report.violation {
            return Err(Error::NotConsistent { level, path });
        }
        let eps = self.boundary_to_epsilon(mb, beta)?;
        let integral = self.y_integral(&eps, beta)?.to_f64_lossy();
        if (integral - 1.0).abs() > MASS_TOL {
            return Err(Error::NotProbability(integral));
        }
        let m = self.neumann_inverse(&eps, beta)?;
        self.state_with(m, beta, Provenance::FromBoundary)
    }

    /// `y · (1 - e^{-β}A_ω) m^φ`, the inverse of [`Kms::state_from_boundary`].
    pub fn boundary_of(&self, phi: &KmsState<F>) -> Result<MeasureTower<F>> {
        let beta = phi.beta;
        let y = self.y_vector(beta)?;
        let q = (-beta).exp();
        let space = self.sys.space();
        Ok(phi.tower.map_levels(|m| {
            let am = apply_transfer(&self.sys, m);
            LevelMeasure {
                level: m.level,
                weights: m
                    .weights
                    .iter()
                    .zip(&am.weights)
                    .enumerate()
                    .map(|(i, (w, a))| (*w - q * *a) * y[space.range_of(i).0])
                    .collect(),
            }
        }))
    }

    /// One state per class `Λ` at `β = ln ρ(A_E)`, built from the normalised
    /// restriction of the Perron-Frobenius tower.
    pub fn critical_states(&self) -> Result<Vec<KmsState<F>>> {
        let g = self.sys.graph();
        g.require_strongly_connected()?;
        let beta = self.critical_beta();
        class_eigen_towers(&self.sys, &self.spec)?
            .into_iter()
            .map(|(lambda, t)| {
                let class = lambda.iter().map(|v| g.vertex_name(*v).to_string()).collect();
                self.state_with(t, beta, Provenance::Critical { class })
            })
            .collect()
    }

    /// `Σ t_i φ_i` for states at a common `β`; coefficients must form a
    /// probability vector.
    pub fn convex_combination(&self, states: &[KmsState<F>], coeffs: &[F]) -> Result<KmsState<F>> {
        let total = coeffs.iter().fold(F::zero(), |s, c| s + *c);
        if states.is_empty() || states.len() != coeffs.len() || coeffs.iter().any(|c| *c < F::zero()) {
            return Err(Error::NotProbability(total.to_f64_lossy()));
        }
        if (total.to_f64_lossy() - 1.0).abs() > MASS_TOL {
            return Err(Error::NotProbability(total.to_f64_lossy()));
        }
        let beta = states[0].beta;
        let mut tower = states[0].tower.scale(&coeffs[0]);
        for (s, c) in states.iter().zip(coeffs).skip(1) {
            if s.beta != beta {
                return Err(Error::Invariant("convex combination across temperatures".into()));
            }
            tower = tower.add(&s.tower.scale(c));
        }
        self.state_with(tower, beta, Provenance::Convex)
    }

    /// Coefficients of `φ` over the given extreme states, with fit residual.
    pub fn decompose(&self, phi: &KmsState<F>, extremes: &[KmsState<F>]) -> Result<(Vec<F>, F)> {
        let basis: Vec<MeasureTower<F>> = extremes.iter().map(|s| s.tower.clone()).collect();
        decompose_eigen_tower(&basis, &phi.tower)
    }

    /// Number of extreme critical states, `gcd(P_E, ω)`.
    pub fn extreme_count(&self) -> Result<usize> {
        extreme_count(&self.sys)
    }

    pub fn is_simple(&self) -> Result<bool> {
        is_simple(&self.sys)
    }

    /// `|φ(ab) - e^{-β deg(a)} φ(ba)|` with products from the spanning rule.
    pub fn check_kms_condition(&self, phi: &KmsState<F>, a: &SpanningElement, b: &SpanningElement) -> Result<F> {
        let ab = match spanning_product(&self.sys, a, b)? {
            Some(c) => phi.eval(&c)?,
            None => F::zero(),
        };
        let ba = match spanning_product(&self.sys, b, a)? {
            Some(c) => phi.eval(&c)?,
            None => F::zero(),
        };
        let deg = F::from_i64(a.degree()).unwrap();
        Ok((ab - (-phi.beta * deg).exp() * ba).abs())
    }

    /// Whether `φ` descends to the quotient: `A_ω m^φ = e^β m^φ`. Disagreement
    /// with the `β = ln ρ(A_E)` criterion is reported as an internal error.
    pub fn factors_through(&self, phi: &KmsState<F>) -> Result<bool> {
        let eigen = self.verdict(&phi.tower, phi.beta)? == SubinvarianceVerdict::Eigen;
        let critical = (phi.beta - self.critical_beta()).abs().to_f64_lossy() <= self.tol.eigen;
        if eigen != critical {
            return Err(Error::Invariant(format!(
                "eigen verdict {eigen} disagrees with beta = {} vs ln rho = {}",
                phi.beta.to_f64_lossy(),
                self.critical_beta().to_f64_lossy()
            )));
        }
        Ok(eigen)
    }

    /// Compare each critical state with the closed form on its class.
    pub fn critical_comparison(&self) -> Result<Vec<CriticalComparison>> {
        let g = self.sys.graph();
        let space = self.sys.space();
        let rho = self.spec.rho();
        let x = &self.spec.right.x;
        let mut out = Vec::new();
        for (lambda, t) in class_eigen_towers(&self.sys, &self.spec)? {
            let xsum = lambda.iter().fold(F::zero(), |s, v| s + x[v.0]);
            let closed: Vec<LevelMeasure<F>> = (1..=self.sys.depth())
                .map(|k| LevelMeasure {
                    level: k,
                    weights: (0..self.sys.size(k))
                        .map(|i| {
                            let s = space.source_of(i);
                            if lambda.contains(&s) {
                                rho.powi(-(space.len_of(i) as i32)) * x[s.0] / xsum
                            } else {
                                F::zero()
                            }
                        })
                        .collect(),
                })
                .collect();
            let closed = MeasureTower::new(&self.sys, closed)?;
            let levels = (1..=self.sys.depth())
                .map(|k| {
                    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                    for (a, b) in t.level(k).weights.iter().zip(&closed.level(k).weights) {
                        if !b.is_zero() {
                            let r = (*a / *b).to_f64_lossy();
                            lo = lo.min(r);
                            hi = hi.max(r);
                        }
                    }
                    LevelComparison {
                        level: k,
                        ratio_min: lo,
                        ratio_max: hi,
                        closed_form_mass: closed.level(k).total().to_f64_lossy(),
                        implemented_mass: t.level(k).total().to_f64_lossy(),
                    }
                })
                .collect();
            out.push(CriticalComparison {
                class: lambda.iter().map(|v| g.vertex_name(*v).to_string()).collect(),
                levels,
                closed_form_consistent: check_tower(&self.sys, &closed, &self.tol).consistent,
            });
        }
        Ok(out)
    }
}

/// `gcd(P_E, ω)` on a certified-stable prefix.
pub fn extreme_count(sys: &PathSystem) -> Result<usize> {
    sys.graph().require_strongly_connected()?;
    sys.class_count()
}

/// Simplicity of the quotient: exactly one extreme critical state. Needs the
/// prefix to be flagged as coming from a divergent chain.
pub fn is_simple(sys: &PathSystem) -> Result<bool> {
    let count = extreme_count(sys)?;
    if !sys.omega().is_eventually_divergent() {
        return Err(Error::DivergenceUnknown);
    }
    Ok(count == 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::random_pair;
    use crate::corpus;
    use crate::graph::Graph;
    use crate::omega::OmegaPrefix;
    use crate::path::Path;
    use crate::Rational;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sys(g: &Graph, w: &[usize]) -> Arc<PathSystem> {
        PathSystem::new(g, &OmegaPrefix::new(w).unwrap()).unwrap()
    }

    fn kms(g: &Graph, w: &[usize]) -> Kms<f64> {
        Kms::new(sys(g, w)).unwrap()
    }

    fn el(s: &PathSystem, a: &str, t: &str, k: usize, b: &str) -> SpanningElement {
        let g = s.graph();
        SpanningElement::new(
            s,
            Path::parse_key(g, a).unwrap(),
            Path::parse_key(g, t).unwrap(),
            k,
            Path::parse_key(g, b).unwrap(),
        )
        .unwrap()
    }

    fn uniform(s: &PathSystem) -> MeasureTower<f64> {
        let top = s.depth();
        let n = s.size(top) as f64;
        MeasureTower::from_top(s, LevelMeasure::from_weights(s, top, vec![1.0 / n; s.size(top)]).unwrap()).unwrap()
    }

    fn random_probability(s: &PathSystem, rng: &mut ChaCha8Rng) -> MeasureTower<f64> {
        let top = s.depth();
        let w: Vec<f64> = (0..s.size(top)).map(|_| rng.gen_range(0.01..1.0)).collect();
        let t: f64 = w.iter().sum();
        let w = w.into_iter().map(|x| x / t).collect();
        MeasureTower::from_top(s, LevelMeasure::from_weights(s, top, w).unwrap()).unwrap()
    }

    #[test]
    fn y_vector_examples() {
        let k = kms(&corpus::g2(), &[2]);
        let y = k.y_vector(4f64.ln()).unwrap();
        assert!((y[0] - 2.0).abs() < 1e-12);
        let k = kms(&corpus::g1(), &[2]);
        let y = k.y_vector(2f64.ln()).unwrap();
        assert!((y[0] - 2.0).abs() < 1e-12);
        assert!(matches!(k.y_vector(0.0), Err(Error::BetaNotSupercritical { .. })));
        for g in corpus::all() {
            let y = Kms::<f64>::new(sys(&g, &[1])).unwrap().y_vector(60.0).unwrap();
            assert!(y.iter().all(|v| (v - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn exact_resolvent_example() {
        let g1 = corpus::g1();
        let s = sys(&g1, &[2]);
        let eps = MeasureTower::new(&s, vec![LevelMeasure::<Rational>::delta(&s, 1, 0)]).unwrap();
        let m = resolvent(&s, &eps, &Rational::new(1, 2)).unwrap();
        assert_eq!(m.level(1).weights, vec![Rational::new(4, 3), Rational::new(2, 3)]);
        let z = MeasureTower::new(&s, vec![LevelMeasure::<Rational>::zeros(&s, 1)]).unwrap();
        assert!(resolvent(&s, &z, &Rational::new(1, 2)).unwrap().is_zero());
    }

    #[test]
    fn path_sum_examples() {
        let g1 = corpus::g1();
        let k = kms(&g1, &[2]);
        let s = k.system().clone();
        let eps = LevelMeasure::<f64>::delta(&s, 1, 0);
        // ρ = 1 for the single loop
        let beta = 2f64.ln();
        let at_v = k.path_sum_inverse(&eps, beta, 0).unwrap();
        assert!((at_v.value - 4.0 / 3.0).abs() < 1e-10);
        assert!(at_v.bound < 1e-10);
        let at_e = k.path_sum_inverse(&eps, beta, 1).unwrap();
        assert!((at_e.value - 2.0 / 3.0).abs() < 1e-10);
        let z = LevelMeasure::<f64>::zeros(&s, 1);
        assert_eq!(k.path_sum_inverse(&z, beta, 0).unwrap().value, 0.0);
    }

    #[test]
    fn three_resolvent_oracles_agree_far_from_criticality() {
        for g in corpus::all() {
            let k = kms(&g, &[2, 4]);
            let s = k.system().clone();
            let beta = k.critical_beta() + 1.0;
            let eps = uniform(&s);
            let dense = k.neumann_inverse(&eps, beta).unwrap();
            let series = neumann_series(&s, &eps, &(-beta).exp(), 60);
            assert!(dense.max_diff(&series) < 1e-9);
            for lvl in 1..=2 {
                for t in 0..s.size(lvl) {
                    let p = k.path_sum_inverse(eps.level(lvl), beta, t).unwrap();
                    assert!((p.value - dense.level(lvl).weights[t]).abs() < 1e-9);
                }
            }
            assert!(check_tower(&s, &dense, &Tolerances::default()).consistent);
        }
    }

    #[test]
    fn state_from_measure_examples() {
        let g1 = corpus::g1();
        let k = kms(&g1, &[2]);
        let s = k.system().clone();
        let phi = k.state_from_measure(&uniform(&s), 2f64.ln()).unwrap();
        assert!((phi.eval(&el(&s, "e", "e", 1, "e")).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(phi.eval(&el(&s, "e", "e", 1, "@v")).unwrap(), 0.0);
        let one = crate::algebra::vertex_projection::<f64>(&s, VertexId(0)).unwrap();
        assert!((phi.eval_sum(&one).unwrap() - 1.0).abs() < 1e-15);

        let bad = MeasureTower::new(&s, vec![LevelMeasure::from_weights(&s, 1, vec![1.0, 0.0]).unwrap()]).unwrap();
        assert!(matches!(k.state_from_measure(&bad, 2f64.ln()), Err(Error::NotSubinvariant { .. })));
        let heavy = uniform(&s).scale(&2.0);
        assert!(matches!(k.state_from_measure(&heavy, 2f64.ln()), Err(Error::NotProbability(_))));
    }

    #[test]
    fn boundary_examples() {
        let g2 = corpus::g2();
        let k = kms(&g2, &[2]);
        let s = k.system().clone();
        let beta = 4f64.ln();
        let mb = uniform(&s);
        let eps = k.boundary_to_epsilon(&mb, beta).unwrap();
        assert!((eps.mass() - 0.5).abs() < 1e-15);
        assert!((k.y_integral(&eps, beta).unwrap() - 1.0).abs() < 1e-15);
        let phi = k.state_from_boundary(&mb, beta).unwrap();
        let back = k.boundary_of(&phi).unwrap();
        assert!(back.max_diff(&mb) < 1e-10);
        assert!(!k.factors_through(&phi).unwrap());

        let point = MeasureTower::from_top(&s, LevelMeasure::delta(&s, 1, 2)).unwrap();
        let phi = k.state_from_boundary(&point, beta).unwrap();
        assert!(phi.tower().is_positive());
    }

    #[test]
    fn boundary_round_trip_on_random_towers() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for g in corpus::all() {
            let k = kms(&g, &[2, 4]);
            let s = k.system().clone();
            for shift in [0.1, 1.0, 3.0] {
                let beta = k.critical_beta() + shift;
                for _ in 0..5 {
                    let mb = random_probability(&s, &mut rng);
                    let phi = k.state_from_boundary(&mb, beta).unwrap();
                    assert!(k.boundary_of(&phi).unwrap().max_diff(&mb) < 1e-10);
                }
            }
        }
    }

    #[test]
    fn critical_examples() {
        let c2 = corpus::c2();
        let k = kms(&c2, &[2, 4]);
        let s = k.system().clone();
        let states = k.critical_states().unwrap();
        assert_eq!(states.len(), 2);
        let u = states
            .iter()
            .find(|p| *p.provenance() == Provenance::Critical { class: vec!["u".into()] })
            .unwrap();
        assert!((u.eval(&el(&s, "@u", "@u", 1, "@u")).unwrap() - 0.5).abs() < 1e-12);
        for p in &states {
            assert!(k.factors_through(p).unwrap());
        }

        let g2 = corpus::g2();
        let k = kms(&g2, &[2, 4]);
        let s = k.system().clone();
        let states = k.critical_states().unwrap();
        assert_eq!(states.len(), 1);
        let v = states[0].eval(&el(&s, "e", "f", 1, "e")).unwrap();
        assert!((v - 0.125).abs() < 1e-12);

        assert_eq!(kms(&corpus::gf(), &[2, 4]).critical_states().unwrap().len(), 1);
    }

    #[test]
    fn census_and_simplicity() {
        let c2 = corpus::c2();
        let s = PathSystem::new(&c2, &OmegaPrefix::new(&[2, 4, 8]).unwrap().with_divergence(true)).unwrap();
        assert_eq!((extreme_count(&s).unwrap(), is_simple(&s).unwrap()), (2, false));
        let s = PathSystem::new(&c2, &OmegaPrefix::new(&[3, 9]).unwrap().with_divergence(true)).unwrap();
        assert_eq!((extreme_count(&s).unwrap(), is_simple(&s).unwrap()), (1, true));
        let s = PathSystem::new(&c2, &OmegaPrefix::new(&[3, 9]).unwrap()).unwrap();
        assert_eq!(is_simple(&s), Err(Error::DivergenceUnknown));
        let gf = corpus::gf();
        let s = PathSystem::new(&gf, &OmegaPrefix::new(&[2, 4]).unwrap().with_divergence(true)).unwrap();
        assert_eq!((extreme_count(&s).unwrap(), is_simple(&s).unwrap()), (1, true));
    }

    #[test]
    fn kms_condition_examples() {
        let g1 = corpus::g1();
        let k = kms(&g1, &[2]);
        let s = k.system().clone();
        let phi = k.state_from_measure(&uniform(&s), 2f64.ln()).unwrap();
        let a = el(&s, "e", "e", 1, "e");
        assert_eq!(k.check_kms_condition(&phi, &a, &a).unwrap(), 0.0);
        let a = el(&s, "e", "e", 1, "@v");
        assert!(k.check_kms_condition(&phi, &a, &a.adjoint()).unwrap() < 1e-12);
    }

    #[test]
    fn kms_condition_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for g in corpus::all() {
            let k = kms(&g, &[2, 4]);
            let s = k.system().clone();
            let mut states = k.critical_states().unwrap();
            states.push(k.state_from_boundary(&random_probability(&s, &mut rng), k.critical_beta() + 0.7).unwrap());
            for phi in &states {
                for _ in 0..300 {
                    let lvl = rng.gen_range(1..=2);
                    let (a, b) = random_pair(&s, lvl, 3, &mut rng);
                    assert!(k.check_kms_condition(phi, &a, &b).unwrap() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn positivity_and_refinement_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for g in corpus::all() {
            let k = kms(&g, &[2, 4]);
            let s = k.system().clone();
            let phi = k.state_from_boundary(&random_probability(&s, &mut rng), k.critical_beta() + 0.5).unwrap();
            for _ in 0..50 {
                let a = crate::algebra::random_sum(&s, 1, 2, 4, &mut rng);
                let aa = a.adjoint().mul(&s, &a).unwrap();
                assert!(phi.eval_sum(&aa).unwrap() >= -1e-12);
                let refined = a.refine_to(&s, 2).unwrap();
                assert!((phi.eval_sum(&a).unwrap() - phi.eval_sum(&refined).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn subcritical_towers_fail_the_gate() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for g in corpus::all() {
            let k = kms(&g, &[2, 4]);
            let s = k.system().clone();
            let beta = k.critical_beta() - 0.1;
            for _ in 0..50 {
                let m = random_probability(&s, &mut rng);
                assert!(matches!(k.verdict(&m, beta).unwrap(), SubinvarianceVerdict::NotSubinvariant { .. }));
            }
        }
    }

    #[test]
    fn critical_states_are_extreme() {
        for g in corpus::all() {
            let k = kms(&g, &[2, 4, 8]);
            let states = k.critical_states().unwrap();
            for (i, phi) in states.iter().enumerate() {
                let (coeffs, residual) = k.decompose(phi, &states).unwrap();
                assert!(residual < 1e-9);
                for (j, c) in coeffs.iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((c - expect).abs() < 1e-9);
                }
            }
            if states.len() > 1 {
                let mix = k.convex_combination(&states, &vec![1.0 / states.len() as f64; states.len()]).unwrap();
                assert!(k.factors_through(&mix).unwrap());
            }
        }
    }

    #[test]
    fn closed_form_comparison_has_constant_ratio() {
        for g in corpus::all() {
            let k = kms(&g, &[2, 4]);
            for c in k.critical_comparison().unwrap() {
                for l in &c.levels {
                    assert!((l.ratio_max - l.ratio_min).abs() < 1e-9 * l.ratio_max);
                    assert!((l.implemented_mass - 1.0).abs() < 1e-12);
                }
            }
        }
    }
}
