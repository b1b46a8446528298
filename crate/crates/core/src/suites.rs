//! Seeded verification suites. Every property of every module is run as a
//! named check; the report is sorted by suite and name so that a fixed seed
//! gives byte-identical JSON.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{random_element, random_pair, random_path_from, random_sum, refine, spanning_product};
use crate::covering::{build_covering, cn_value, components, covering_classes, has_covering_path};
use crate::error::Result;
use crate::graph::{AdjacencyMatrix, Graph};
use crate::kms::Kms;
use crate::measures::{build_remark_tower, check_tower, pushforward, restrict_component, LevelMeasure, MeasureTower};
use crate::omega::{divides_omega, gcd_omega, OmegaPrefix};
use crate::path::paths_up_to;
use crate::repcheck::{central_blocks_check, coburn_check, compare_product, rep_relations_check, rep_state_eval, TruncatedRep};
use crate::spectral::{
    apply_transfer, block_spectral, check_intertwine, class_eigen_towers, classify_subinvariance, decompose_eigen_tower,
    perron, pf_tower, zeta_norm, Spectrum, SubinvarianceVerdict,
};
use crate::system::PathSystem;
use crate::tolerance::Tolerances;
use crate::{corpus, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Algebra,
    Spectral,
    Kms,
    All,
}

impl Suite {
    fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    /// The property is false as stated; the detail carries the counterexample.
    Refuted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub suite: Suite,
    pub name: String,
    pub status: Status,
    pub cases: usize,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn failures(&self) -> Vec<&CheckResult> {
        self.checks.iter().filter(|c| c.status == Status::Fail).collect()
    }
}

struct Outcome {
    ok: bool,
    cases: usize,
    detail: String,
}

impl Outcome {
    fn new(ok: bool, cases: usize, detail: impl Into<String>) -> Self {
        Outcome {
            ok,
            cases,
            detail: detail.into(),
        }
    }
}

/// Counts cases and keeps the first failure.
#[derive(Default)]
struct Tally {
    cases: usize,
    failure: Option<String>,
}

impl Tally {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok && self.failure.is_none() {
            self.failure = Some(what());
        }
    }

    fn done(self, summary: impl Into<String>) -> Result<Outcome> {
        Ok(match self.failure {
            None => Outcome::new(true, self.cases, summary),
            Some(f) => Outcome::new(false, self.cases, f),
        })
    }
}

type CheckFn = fn(&mut ChaCha8Rng, &Tolerances) -> Result<Outcome>;

struct Check {
    suite: Suite,
    name: &'static str,
    /// The stated property is known to be false.
    disputed: bool,
    run: CheckFn,
}

const fn check(suite: Suite, name: &'static str, run: CheckFn) -> Check {
    Check {
        suite,
        name,
        disputed: false,
        run,
    }
}

const fn disputed(suite: Suite, name: &'static str, run: CheckFn) -> Check {
    Check {
        suite,
        name,
        disputed: true,
        run,
    }
}

fn registry() -> Vec<Check> {
    use Suite::*;
    vec![
        check(Algebra, "graph/period-divides-cycle-lengths", period_divides_cycles),
        check(Algebra, "graph/path-counts-match-matrix-powers", path_counts),
        check(Algebra, "graph/residue-tail-reconstruction", residue_tail),
        check(Algebra, "covering/weak-components-match-classes", weak_components_match),
        check(Algebra, "covering/path-criterion-matches-cn", path_criterion),
        check(Algebra, "covering/class-sizes", class_sizes),
        check(Algebra, "covering/lift-flatten-round-trip", lift_flatten),
        check(Algebra, "omega/gcd-monotone", gcd_monotone),
        check(Algebra, "omega/divides-reflexive-transitive", divides_order),
        check(Algebra, "measures/pushforward-contracts", pushforward_contracts),
        check(Algebra, "measures/positive-mass-constant", positive_mass_constant),
        check(Algebra, "measures/remark-tower-consistent", remark_consistent),
        disputed(Algebra, "measures/remark-tower-norm-doubles", remark_norm),
        check(Algebra, "measures/restrict-component", restrict_components),
        check(Algebra, "algebra/product-adjoint", product_adjoint),
        check(Algebra, "repcheck/dual-oracle-products", dual_oracle),
        check(Algebra, "repcheck/relations", relations),
        check(Algebra, "repcheck/pi-resolution", pi_resolution),
        check(Algebra, "repcheck/coburn-every-cylinder", coburn_all),
        check(Algebra, "repcheck/central-blocks", central_blocks),
        check(Spectral, "spectral/perron-residual", perron_residual),
        check(Spectral, "spectral/transfer-matches-covering", transfer_matches_covering),
        check(Spectral, "spectral/block-radii", block_radii),
        check(Spectral, "spectral/pf-stratum-mass", pf_stratum_mass),
        disputed(Spectral, "spectral/operator-norm-bound", operator_norm_tv),
        check(Spectral, "spectral/zeta-norm-bound", operator_norm_zeta),
        check(Spectral, "spectral/eigen-tower-decomposition", eigen_decomposition),
        check(Spectral, "spectral/intertwining", intertwining),
        check(Kms, "kms/boundary-round-trip", round_trip),
        check(Kms, "kms/no-subcritical-states", no_subcritical),
        check(Kms, "kms/critical-extremality", critical_extremality),
        check(Kms, "kms/positivity", positivity),
        check(Kms, "kms/refinement-consistency", refinement_consistency),
        check(Kms, "kms/kms-condition", kms_condition),
        check(Kms, "kms/factors-through-dichotomy", factors_dichotomy),
        check(Kms, "kms/census", census),
        check(Kms, "repcheck/state-formula", state_formula),
    ]
}

fn name_seed(seed: u64, name: &str) -> u64 {
    // FNV-1a
    name.bytes()
        .fold(0xcbf2_9ce4_8422_2325u64 ^ seed, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

/// Run every check of `suite` with the given seed.
pub fn run_suite(suite: Suite, seed: u64, tol: &Tolerances) -> VerifyReport {
    let checks: Vec<Check> = registry().into_iter().filter(|c| suite.includes(c.suite)).collect();
    let mut results: Vec<CheckResult> = checks
        .par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(name_seed(seed, c.name));
            let outcome = catch_unwind(AssertUnwindSafe(|| (c.run)(&mut rng, tol)));
            let (status, cases, detail) = match outcome {
                Ok(Ok(o)) if o.ok => (Status::Pass, o.cases, o.detail),
                Ok(Ok(o)) if c.disputed => (Status::Refuted, o.cases, o.detail),
                Ok(Ok(o)) => (Status::Fail, o.cases, o.detail),
                Ok(Err(e)) => (Status::Fail, 0, e.to_string()),
                Err(p) => (Status::Fail, 0, panic_message(p)),
            };
            CheckResult {
                suite: c.suite,
                name: c.name.to_string(),
                status,
                cases,
                detail,
            }
        })
        .collect();
    results.sort_by(|a, b| (a.suite, &a.name).cmp(&(b.suite, &b.name)));
    VerifyReport {
        suite,
        seed,
        tolerances: *tol,
        passed: results.iter().all(|r| r.status != Status::Fail),
        checks: results,
    }
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = p.downcast_ref::<&str>() {
        format!("panic: {s}")
    } else if let Some(s) = p.downcast_ref::<String>() {
        format!("panic: {s}")
    } else {
        "panic".into()
    }
}

fn sys(g: &Graph, w: &[usize]) -> Result<Arc<PathSystem>> {
    PathSystem::new(g, &OmegaPrefix::new(w)?)
}

/// Corpus graphs plus a few seeded random strongly connected graphs.
fn graphs(rng: &mut ChaCha8Rng, extra: usize) -> Vec<Graph> {
    let mut out = corpus::all();
    out.extend((0..extra).map(|_| corpus::random_strongly_connected(rng, 4, 7)));
    out
}

fn random_probability(s: &PathSystem, rng: &mut ChaCha8Rng) -> Result<MeasureTower<f64>> {
    let top = s.depth();
    let w: Vec<f64> = (0..s.size(top)).map(|_| rng.gen_range(0.01..1.0)).collect();
    let t: f64 = w.iter().sum();
    MeasureTower::from_top(s, LevelMeasure::from_weights(s, top, w.into_iter().map(|x| x / t).collect())?)
}

fn random_signed(s: &PathSystem, k: usize, rng: &mut ChaCha8Rng) -> Result<LevelMeasure<f64>> {
    LevelMeasure::from_weights(s, k, (0..s.size(k)).map(|_| rng.gen_range(-1.0..1.0)).collect())
}

fn same_partition(a: &[usize], b: &[usize]) -> bool {
    (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}

// graph_core

fn period_divides_cycles(rng: &mut ChaCha8Rng, _: &Tolerances) -> Result<Outcome> {
    let mut t = Tally::default();
    for g in graphs(rng, 20) {
        let p = g.period()? as usize;
        let a = g.adjacency();
        let mut power = AdjacencyMatrix::identity(a.dim());
        let mut lengths_gcd = 0usize;
        for len in 1..=2 * g.vertex_count() {
            power = power.mul(&a);
            let trace: u64 = (0..a.dim()).map(|i| power.get(i, i)).sum();
            if trace > 0 {
                t.check(len % p == 0, || format!("cycle of length {len} with period {p}"));
                lengths_gcd = lengths_gcd.gcd(&len);
            }
        }
        t.check(lengths_gcd == p, || format!("cycle-length gcd {lengths_gcd} vs period {p}"));
    }
    t.done("every closed-walk length up to 2|E^0| is a multiple of the period")
}

fn path_counts(rng: &mut ChaCha8Rng, _: &Tolerances) -> Result<Outcome> {
    let mut t = Tally::default();
    for g in graphs(rng, 10) {
        let a = g.adjacency();
        for n in 1..=8 {
            let expected: u64 = (0..n as u32)
                .map(|j| a.pow(j).rows().iter().flatten().sum::<u64>())
                .sum();
            let got = paths_up_to(&g, n).len() as u64;
            t.check(got == expected, || format!("|E^<{n}| = {got}, matrix powers give {expected}"));
        }
    }
    t.done("path counts agree with matrix powers for n <= 8")
}

fn residue_tail(rng: &mut ChaCha8Rng, _: &Tolerances) -> Result<Outcome> {
    let mut t = Tally::default();
    for g in corpus::all() {
        for _ in 0..200 {
            let v = crate::VertexId(rng.gen_range(0..g.vertex_count()));
            let len = rng.gen_range(0..12);
            let mu = random_path_from(&g, v, len, rng);
            for n in 1..=6 {
                let r = mu.residue(&g, n);
                let rest = mu.drop_front(&g, r.len());
                let tail = mu.tail(&g, n);
                let head = mu.prefix(&g, mu.len() - tail.len());
                let ok = r.len() % n == mu.len() % n
                    && rest.len() % n == 0
                    && r.concat(&g, &rest).ok().as_ref() == Some(&mu)
                    && head.len() % n == 0
                    && head.concat(&g, &tail).ok().as_ref() == Some(&mu);
                t.check(ok, || format!("{} at n = {n}", mu.key(&g)));
            }
        }
    }
    t.done("residue and tail decompositions reconstruct the path")
}

// covering

fn weak_components_match(_: &mut ChaCha8Rng, _: &Tolerances) -> Result<Outcome> {
    let mut t = Tally::default();
    for g in corpus::all() {
        for n in 1..=12 {
            let cov = build_covering(&g, n)?;
            let part = components(&g, n)?;
            let ok = same_partition(&cov.weak_components(), &covering_classes(&cov, &part));
            t.check(ok, || format!("n = {n}: weak components differ from the class partition"));
        }
    }
    t.done("BFS components of E(n) equal the class partition for n <= 12")
}

fn path_criterion(rng: &mut ChaCha8Rng, _: &Tolerances) -> Result<Outcome> {
    let mut t = Tally::default();
    for g in graphs(rng, 10) {
        for n in 1..=8 {
            for v in g.vertices() {
                for w in g.vertices() {
                    let ok = has_covering_path(&g, n, v, w) == (cn_value(&g, n, v, w)? == 0);
                    t.check(ok, || format!("n = {n}, ({}, {})", g.vertex_name(v), g.vertex_name(w)));
                }
            }
        }
    }
    t.done("vE^{jn}w nonempty for some j exactly when C_n(v, w) = 0")
}

fn class_sizes(rng: &mut ChaCha8Rng, _: &Tolerances) -> Result<Outcome> {
    let mut t = Tally::default();
    for g in graphs(rng, 10) {
        for n in 1..=10 {
            let cov = build_covering(&g, n)?;
            let part = components(&g, n)?;
            let labels = covering_classes(&cov, &part);
            let sizes: Vec<usize> = (0..part.class_count())
                .map(|c| labels.iter().filter(|&&l| l == c).count())
                .collect();
            let ok = sizes.iter().all(|&s| s > 0) && sizes.iter().sum::<usize>() == cov.vertex_count();
            t.check(ok, || format!("n = {n}: class sizes {sizes:?}"));
        }
    }
    t.done("classes are nonempty and cover E^{<n}")
}

fn lift_flatten(rng: &mut ChaCha8Rng, _: &Tolerances) -> Result<Outcome> {
    let mut t = Tally::default();
    for g in corpus::all() {
        for n in 1..=6 {
            let cov = build_covering(&g, n)?;
            for _ in 0..50 {
                let x = rng.gen_range(0..cov.vertex_count());
                let nu = cov.space().path(x);
                let len = rng.gen_range(0..8);
                let mu = random_path_from(&g, nu.range(), len, rng);
                let lifted = cov.lift_path(&mu, &nu)?;
                let back = cov.flatten_path(&lifted)?;
                let relifted = cov.lift_path(&back.0, &back.1)?;
                t.check(back == (mu.clone(), nu.clone()) && relifted == lifted, || {
                    format!("n = {n}: ({}, {})", mu.key(&g), nu.key(&g))
                });
            }
        }
    }
    t.done("flatten inverts lift on random pairs")
}

// omega

fn random_prefix(rng: &mut ChaCha8Rng, depth: usize) -> Vec<usize> {
    let mut w = vec![rng.gen_range(1..=4)];
    while w.len() < depth {
        let last = *w.last().unwrap();
        w.push(last * rng.gen_range(1..=3));
    }
    w
}

fn gcd_monotone(rng: &mut ChaCha8Rng, _: &Tolerances) -> Result<Outcome> {
    let mut t = Tally::default();
    for _ in 0..200 {
        let p = rng.gen_range(1..=12);
        let depth = rng.gen_range(1..=5);
        let w = random_prefix(rng, depth);
        let mut prev = 0;
        for k in 1..=w.len() {
            let gk = gcd_omega(p, &OmegaPrefix::new(&w[..k])?).value;
            t.check(gk >= prev && gk <= p && p % gk == 0, || format!("p = {p}, prefix {:?}", &w[..k]));
            prev = gk;
        }
    }
    t.done("gcd(p, prefix) grows with the prefix and divides p")
}

fn divides_order(rng: &mut ChaCha8Rng, _: &Tolerances) -> Result<Outcome> {
    let mut t = Tally::default();
    for _ in 0..200 {
        let mut draw = || {
            let depth = rng.gen_range(1..=3);
            OmegaPrefix::new(&random_prefix(rng, depth))
        };
        let (a, b, c) = (draw()?, draw()?, draw()?);
        t.check(divides_omega(&a, &a), || format!("{:?} does not divide itself", a.terms()));
        if divides_omega(&a, &b) && divides_omega(&b, &c) {
            t.check(divides_omega(&a, &c), || format!("{:?} | {:?} | {:?}", a.terms(), b.terms(), c.terms()));
        }
    }
    t.done("divisibility of prefixes is reflexive and transitive")
}

// measures

fn pushforward_contracts(rng: &mut ChaCha8Rng, _: &Tolerances) -> Result<Outcome> {
    let mut t = Tally::default();
    for g in corpus::all() {
        let s = sys(&g, &[1, 2, 4, 8])?;
        for _ in 0..50 {
            let k = rng.gen_range(2..=4);
            let m = random_signed(&s, k, rng)?;
            let p = pushforward(&s, &m)?;
            t.check(p.total_variation() <= m.total_variation() + 1e-12, || format!("level {k}"));
        }
    }
    t.done("total variation does not grow under pushforward")
}

fn positive_mass_constant(rng: &mut ChaCha8Rng, tol: &Tolerances) -> Result<Outcome> {
    let mut t = Tally::default();
    for g in corpus::all() {
        let s = sys(&g, &[1, 2, 4, 8])?;
        for _ in 0..50 {
            let m = random_probability(&s, rng)?;
            let ok = m.levels().iter().all(|l| (l.total() - 1.0).abs() < tol.consistency);
            t.check(ok, || "mass changes across levels".into());
        }
    }
    t.done("positive towers keep their mass at every level")
}

fn remark_consistent(_: &mut ChaCha8Rng, tol: &Tolerances) -> Result<Outcome> {
    let mut t = Tally::default();
    for depth in 1..=12 {
        let (s, m) = build_remark_tower::<Rational>(depth)?;
        let report = check_tower(&s, &m, tol);
        t.check(report.consistent, || format!("K = {depth}: {:?}", report.violation));
        for k in 1..=depth {
            t.check(m.level(k).weights[0] == Rational::from_integer(1 << k), || format!("m_{k}(v) != 2^{k}"));
        }
    }
    t.done("consistent for K <= 12 with m_k({v}) = 2^k")
}

fn remark_norm(_: &mut ChaCha8Rng, _: &Tolerances) -> Result<Outcome> {
    let mut t = Tally::default();
    let (_, m) = build_remark_tower::<Rational>(12)?;
    for k in 1..=12 {
        let tv = m.level(k).total_variation();
        t.check(tv == Rational::from_integer(1 << k), || format!("||m_{k}|| = {tv}, expected 2^{k}"));
    }
    t.done("||m_k|| = 2^k for k <= 12")
}

fn restrict_components(_: &mut ChaCha8Rng, tol: &Tolerances) -> Result<Outcome> {
    let mut t = Tally::default();
    for g in corpus::all() {
        let s = sys(&g, &[2, 4, 8])?;
        let spec = Spectrum::<f64>::new(&g)?;
        let pf = pf_tower(&s, &spec)?;
        let k0 = s.stable_level()?;
        let part = components(&g, s.n(k0))?;
        for lambda in part.classes() {
            let r = restrict_component(&s, &pf, &lambda, k0)?;
            for k in 1..=s.depth() {
                t.check((r.level(k).total() - 1.0).abs() < tol.eigen, || format!("level {k} mass"));
            }
            for k in k0..=s.depth() {
                let outside = (0..s.size(k))
                    .filter(|&i| !lambda.contains(&s.space().source_of(i)))
                    .all(|i| r.level(k).weights[i] == 0.0);
                t.check(outside, || format!("level {k} support leaves the class"));
            }
            t.check(check_tower(&s, &r, tol).consistent, || "restricted tower inconsistent".into());
        }
    }
    t.done("restricted towers are consistent probability towers supported on their class")
}

// algebra and repcheck

fn product_adjoint(rng: &mut ChaCha8Rng, _: &Tolerances) -> Result<Outcome> {
    let mut t = Tally::default();
    for g in corpus::all() {
        let s = sys(&g, &[2, 4])?;
        for _ in 0..500 {
            let k = rng.gen_range(1..=2);
            let (a, b) = random_pair(&s, k, 3, rng);
            let ab = spanning_product(&s, &a, &b)?.map(|c| c.adjoint());
            let ba = spanning_product(&s, &b.adjoint(), &a.adjoint())?;
            t.check(ab == ba, || format!("({})({})", a.display(&g), b.display(&g)));
            if let Some(c) = spanning_product(&s, &a, &b)? {
                t.check(c.degree() == a.degree() + b.degree(), || "degree not additive".into());
            }
        }
    }
    t.done("(ab)* = b*a* and degrees add")
}

fn dual_oracle(rng: &mut ChaCha8Rng, _: &Tolerances) -> Result<Outcome> {
    let mut t = Tally::default();
    let mut nonzero = 0;
    for g in corpus::all() {
        let s = sys(&g, &[2, 4])?;
        let rep = TruncatedRep::build(s.clone(), 2, 5)?;
        for _ in 0..2500 {
            let k = rng.gen_range(1..=2);
            let (a, b) = random_pair(&s, k, 2, rng);
            let c = compare_product(&rep, &a, &b)?;
            nonzero += c.nonzero;
            t.check(c.mismatches == 0, || format!("({})({})", a.display(&g), b.display(&g)));
        }
    }
    t.check(nonzero > 0, || "no pair acted nontrivially".into());
    t.done(format!("symbolic and matrix products agree; {nonzero} nonzero interior columns"))
}

fn relations(_: &mut ChaCha8Rng, _: &Tolerances) -> Result<Outcome> {
    let mut t = Tally::default();
    for g in corpus::all() {
        for (w, cap) in [(vec![2, 4], 4), (vec![1, 3], 4)] {
            let rep = TruncatedRep::build(sys(&g, &w)?, w.len(), cap)?;
            for r in rep_relations_check(&rep).results {
                t.check(r.holds, || format!("{}: {} at {:?}", w[w.len() - 1], r.name, r.witness));
            }
        }
    }
    t.done("all relations hold on interior vectors")
}

fn pi_resolution(_: &mut ChaCha8Rng, _: &Tolerances) -> Result<Outcome> {
    let mut t = Tally::default();
    for g in corpus::all() {
        let s = sys(&g, &[2, 4])?;
        let rep = TruncatedRep::build(s.clone(), 2, 3)?;
        for k in 1..=2 {
            for v in g.vertices() {
                let mut sum = crate::repcheck::SparseMatrix::zeros(rep.dim());
                for mu in (0..s.size(k)).filter(|&m| s.space().range_of(m) == v) {
                    sum = sum.add(rep.pi_of(&s.path(mu), k)?);
                }
                t.check(&sum == rep.matrix(crate::repcheck::Generator::Q(v)), || {
                    format!("level {k}, vertex {}", g.vertex_name(v))
                });
            }
        }
    }
    t.done("sum of pi over vE^{<n_k} equals q_v on every vector")
}

fn coburn_all(_: &mut ChaCha8Rng, _: &Tolerances) -> Result<Outcome> {
    let mut t = Tally::default();
    for g in corpus::all() {
        let s = sys(&g, &[2, 4])?;
        let rep = TruncatedRep::build(s.clone(), 2, 3)?;
        for k in 1..=2 {
            for mu in 0..s.size(k) {
                let path = s.path(mu);
                let r = coburn_check(&rep, &path, k)?;
                t.check(r.holds, || format!("({}, {k})", path.key(&g)));
            }
        }
    }
    t.done("the gap projection never kills a cylinder")
}

fn central_blocks(rng: &mut ChaCha8Rng, _: &Tolerances) -> Result<Outcome> {
    let mut t = Tally::default();
    for g in corpus::all() {
        let s = sys(&g, &[2, 4])?;
        let k0 = s.stable_level()?;
        let rep = TruncatedRep::build(s.clone(), 2, 3)?;
        let els: Vec<_> = (0..200).map(|_| random_element(&s, rng.gen_range(k0..=2), 3, rng)).collect();
        let r = central_blocks_check(&rep, k0, &els)?;
        let bad = r.relations.failures().first().map(|f| f.name.clone());
        t.check(r.holds(), || format!("{:?} {:?}", bad, r.symbolic_failure));
    }
    t.done("class blocks are central projections")
}

// spectral

fn perron_residual(rng: &mut ChaCha8Rng, tol: &Tolerances) -> Result<Outcome> {
    let mut t = Tally::default();
    for g in graphs(rng, 20) {
        let p = perron::<f64>(&g.adjacency())?;
        let a = g.adjacency();
        let dim = a.dim();
        let resid = (0..dim)
            .map(|i| ((0..dim).map(|j| a.get(i, j) as f64 * p.x[j]).sum::<f64>() - p.rho * p.x[i]).abs())
            .fold(0.0, f64::max);
        let sum: f64 = p.x.iter().sum();
        t.check(resid < tol.eigen && (sum - 1.0).abs() < 1e-12 && p.x.iter().all(|&v| v > 0.0), || {
            format!("residual {resid:e}, sum {sum}")
        });
    }
    t.done("Ax = rho x, sum x = 1, x > 0")
}

fn transfer_matches_covering(rng: &mut ChaCha8Rng, _: &Tolerances) -> Result<Outcome> {
    let mut t = Tally::default();
    for g in corpus::all() {
        for n in 1..=12 {
            let s = sys(&g, &[n])?;
            let w: Vec<Rational> = (0..s.size(1)).map(|_| Rational::from_integer(rng.gen_range(-5..=5))).collect();
            let m = LevelMeasure::from_weights(&s, 1, w.clone())?;
            let ok = apply_transfer(&s, &m).weights == s.cover(1).apply_adjacency(&w);
            t.check(ok, || format!("n = {n}"));
        }
    }
    t.done("transfer equals the covering adjacency matrix exactly, n <= 12")
}

fn block_radii(_: &mut ChaCha8Rng, tol: &Tolerances) -> Result<Outcome> {
    let mut t = Tally::default();
    for g in corpus::all() {
        let rho = Spectrum::<f64>::new(&g)?.rho();
        for w in [vec![2, 4], vec![3, 6], vec![1, 2, 4, 8, 16]] {
            let s = sys(&g, &w)?;
            for k in s.stable_level()?..=s.depth() {
                for lambda in components(&g, s.n(k))?.classes() {
                    let b = block_spectral::<f64>(&s, k, &lambda)?;
                    t.check((b.rho - rho).abs() < tol.eigen, || format!("level {k}: {} vs {rho}", b.rho));
                }
            }
        }
    }
    t.done("every stabilized block has spectral radius rho")
}

fn pf_stratum_mass(_: &mut ChaCha8Rng, tol: &Tolerances) -> Result<Outcome> {
    let mut t = Tally::default();
    for g in corpus::all() {
        let spec = Spectrum::<f64>::new(&g)?;
        let s = sys(&g, &[2, 4, 8, 16])?;
        let pf = pf_tower(&s, &spec)?;
        t.check(check_tower(&s, &pf, tol).consistent, || "pf tower inconsistent".into());
        for k in 1..=s.depth() {
            let n = s.n(k);
            for j in 0..n {
                let mass: f64 = s.space().nodes_of_length(j).map(|i| pf.level(k).weights[i]).sum();
                t.check((mass - 1.0 / n as f64).abs() < tol.eigen, || format!("level {k}, length {j}: {mass}"));
            }
        }
    }
    t.done("each length stratum of m_k carries mass 1/n_k")
}

fn operator_norm_tv(rng: &mut ChaCha8Rng, tol: &Tolerances) -> Result<Outcome> {
    let mut t = Tally::default();
    for g in corpus::all() {
        let rho = Spectrum::<f64>::new(&g)?.rho();
        let s = sys(&g, &[2, 4])?;
        for _ in 0..50 {
            let k = rng.gen_range(1..=2);
            let m = random_signed(&s, k, rng)?;
            let lhs = apply_transfer(&s, &m).total_variation();
            let rhs = rho * m.total_variation() + tol.eigen;
            t.check(lhs <= rhs, || format!("{:?}: ||Am|| = {lhs} > rho ||m|| = {rhs}", g.vertex_count()));
        }
    }
    t.done("||Am|| <= rho ||m|| in total variation")
}

fn operator_norm_zeta(rng: &mut ChaCha8Rng, tol: &Tolerances) -> Result<Outcome> {
    let mut t = Tally::default();
    for g in corpus::all() {
        let spec = Spectrum::<f64>::new(&g)?;
        let s = sys(&g, &[2, 4])?;
        for _ in 0..50 {
            let k = rng.gen_range(1..=2);
            let m = random_signed(&s, k, rng)?;
            let lhs = zeta_norm(&s, &spec, &apply_transfer(&s, &m));
            let rhs = spec.rho() * zeta_norm(&s, &spec, &m);
            t.check(lhs <= rhs + tol.eigen, || format!("{lhs} > {rhs}"));
        }
        let pf = pf_tower(&s, &spec)?;
        let lhs = zeta_norm(&s, &spec, &apply_transfer(&s, pf.level(2)));
        let rhs = spec.rho() * zeta_norm(&s, &spec, pf.level(2));
        t.check((lhs - rhs).abs() < tol.eigen, || "pf tower does not attain the bound".into());
    }
    t.done("weighted norm bound holds and is attained by the pf tower")
}

fn eigen_decomposition(rng: &mut ChaCha8Rng, tol: &Tolerances) -> Result<Outcome> {
    let mut t = Tally::default();
    for g in corpus::all() {
        let spec = Spectrum::<f64>::new(&g)?;
        let s = sys(&g, &[2, 4])?;
        let basis: Vec<MeasureTower<f64>> = class_eigen_towers(&s, &spec)?.into_iter().map(|(_, m)| m).collect();
        for _ in 0..20 {
            let c: Vec<f64> = basis.iter().map(|_| rng.gen_range(0.01..1.0)).collect();
            let total: f64 = c.iter().sum();
            let c: Vec<f64> = c.iter().map(|x| x / total).collect();
            let mut m = basis[0].scale(&c[0]);
            for (b, ci) in basis.iter().zip(&c).skip(1) {
                m = m.add(&b.scale(ci));
            }
            let (got, residual) = decompose_eigen_tower(&basis, &m)?;
            let err = got.iter().zip(&c).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            t.check(residual < tol.eigen && err < tol.eigen, || format!("residual {residual:e}, error {err:e}"));
        }
    }
    t.done("random convex combinations of class towers are recovered")
}

fn intertwining(rng: &mut ChaCha8Rng, tol: &Tolerances) -> Result<Outcome> {
    let mut t = Tally::default();
    for g in corpus::all() {
        let s = sys(&g, &[2, 4, 8])?;
        for _ in 0..10 {
            let m = random_probability(&s, rng)?;
            let r = check_intertwine(&s, &m, tol);
            t.check(r.holds, || format!("{:?}", r.witness));
        }
    }
    t.done("pushforward intertwines the transfer operators")
}

// kms

fn kms_for(g: &Graph, w: &[usize]) -> Result<Kms<f64>> {
    Kms::new(sys(g, w)?)
}

fn round_trip(rng: &mut ChaCha8Rng, _: &Tolerances) -> Result<Outcome> {
    let mut t = Tally::default();
    for g in corpus::all() {
        let k = kms_for(&g, &[2, 4])?;
        let s = k.system().clone();
        for shift in [0.1, 1.0, 3.0] {
            let beta = k.critical_beta() + shift;
            for _ in 0..10 {
                let mb = random_probability(&s, rng)?;
                let phi = k.state_from_boundary(&mb, beta)?;
                let d = k.boundary_of(&phi)?.max_diff(&mb);
                t.check(d < 1e-10, || format!("beta = ln rho + {shift}: deviation {d:e}"));
            }
        }
    }
    t.done("boundary -> state -> boundary is the identity")
}

fn no_subcritical(rng: &mut ChaCha8Rng, tol: &Tolerances) -> Result<Outcome> {
    let mut t = Tally::default();
    for g in corpus::all() {
        let spec = Spectrum::<f64>::new(&g)?;
        let s = sys(&g, &[2, 4])?;
        let beta = spec.ln_rho() - 0.1;
        for _ in 0..125 {
            let m = random_probability(&s, rng)?;
            let v = classify_subinvariance(&s, &m, beta.exp(), spec.rho(), tol)?;
            t.check(matches!(v, SubinvarianceVerdict::NotSubinvariant { .. }), || format!("{v:?}"));
        }
    }
    t.done("no positive tower is subinvariant below ln rho")
}

fn critical_extremality(_: &mut ChaCha8Rng, tol: &Tolerances) -> Result<Outcome> {
    let mut t = Tally::default();
    for g in corpus::all() {
        let k = kms_for(&g, &[2, 4])?;
        let states = k.critical_states()?;
        for (i, phi) in states.iter().enumerate() {
            let (c, residual) = k.decompose(phi, &states)?;
            let ok = residual < tol.eigen
                && c.iter().enumerate().all(|(j, x)| (x - if i == j { 1.0 } else { 0.0 }).abs() < tol.eigen);
            t.check(ok, || format!("coefficients {c:?}"));
        }
    }
    t.done("critical states decompose with 0/1 coefficients")
}

fn positivity(rng: &mut ChaCha8Rng, _: &Tolerances) -> Result<Outcome> {
    let mut t = Tally::default();
    for g in corpus::all() {
        let k = kms_for(&g, &[2, 4])?;
        let s = k.system().clone();
        let m = random_probability(&s, rng)?;
        let beta = k.critical_beta() + 0.7;
        let phi = k.state_from_boundary(&m, beta)?;
        for _ in 0..50 {
            let a = random_sum(&s, rng.gen_range(1..=2), 2, 3, rng);
            let v = phi.eval_sum(&a.adjoint().mul(&s, &a)?)?;
            t.check(v >= -1e-12, || format!("phi(a*a) = {v}"));
        }
    }
    t.done("phi(a*a) >= 0 on random formal sums")
}

fn refinement_consistency(rng: &mut ChaCha8Rng, _: &Tolerances) -> Result<Outcome> {
    let mut t = Tally::default();
    for g in corpus::all() {
        let k = kms_for(&g, &[2, 4])?;
        let s = k.system().clone();
        let mut states = k.critical_states()?;
        let mb = random_probability(&s, rng)?;
        states.push(k.state_from_boundary(&mb, k.critical_beta() + 1.0)?);
        for phi in &states {
            for mu in 0..s.size(1) {
                let coarse = phi.tower().level(1).weights[mu];
                let fine: f64 = (0..s.size(2))
                    .filter(|&nu| s.residue_at(1, nu) == mu)
                    .map(|nu| phi.tower().level(2).weights[nu])
                    .sum();
                t.check((coarse - fine).abs() < 1e-12, || format!("{}: {coarse} vs {fine}", s.key(mu)));
            }
            for _ in 0..50 {
                let a = random_element(&s, 1, 3, rng);
                let lhs = phi.eval(&a)?;
                let rhs = phi.eval_sum(&refine::<f64>(&s, &a, 2)?)?;
                t.check((lhs - rhs).abs() < 1e-12, || format!("{}", a.display(&g)));
            }
        }
    }
    t.done("states are level-consistent and refinement invariant")
}

fn produced_states(k: &Kms<f64>, rng: &mut ChaCha8Rng) -> Result<Vec<crate::kms::KmsState<f64>>> {
    let s = k.system().clone();
    let mut states = k.critical_states()?;
    for shift in [0.1, 1.0] {
        let mb = random_probability(&s, rng)?;
        states.push(k.state_from_boundary(&mb, k.critical_beta() + shift)?);
    }
    Ok(states)
}

fn kms_condition(rng: &mut ChaCha8Rng, _: &Tolerances) -> Result<Outcome> {
    let mut t = Tally::default();
    for g in corpus::all() {
        let k = kms_for(&g, &[2, 4])?;
        let s = k.system().clone();
        for phi in produced_states(&k, rng)? {
            for _ in 0..200 {
                let (a, b) = random_pair(&s, rng.gen_range(1..=2), 3, rng);
                let d = k.check_kms_condition(&phi, &a, &b)?;
                t.check(d < 1e-12, || format!("({})({}): {d:e}", a.display(&g), b.display(&g)));
            }
        }
    }
    t.done("phi(ab) = e^{-beta deg a} phi(ba)")
}

fn factors_dichotomy(rng: &mut ChaCha8Rng, _: &Tolerances) -> Result<Outcome> {
    let mut t = Tally::default();
    for g in corpus::all() {
        let k = kms_for(&g, &[2, 4])?;
        for phi in produced_states(&k, rng)? {
            let critical = matches!(phi.provenance(), crate::kms::Provenance::Critical { .. });
            t.check(k.factors_through(&phi)? == critical, || format!("{:?}", phi.provenance()));
        }
    }
    t.done("exactly the critical states factor through the quotient")
}

fn census(_: &mut ChaCha8Rng, _: &Tolerances) -> Result<Outcome> {
    let mut t = Tally::default();
    let c2 = corpus::c2();
    let cases = [
        (c2.clone(), vec![2, 4, 8], 2, false),
        (c2, vec![3, 9], 1, true),
        (corpus::gf(), vec![2, 4, 8], 1, true),
        (corpus::gf(), vec![3, 9], 1, true),
    ];
    for (g, w, count, simple) in cases {
        let s = PathSystem::new(&g, &OmegaPrefix::new(&w)?.with_divergence(true))?;
        let got = crate::kms::extreme_count(&s)?;
        let is_simple = crate::kms::is_simple(&s)?;
        t.check(got == count && is_simple == simple, || format!("{w:?}: {got} states, simple = {is_simple}"));
    }
    t.done("extreme point counts and simplicity")
}

fn state_formula(rng: &mut ChaCha8Rng, _: &Tolerances) -> Result<Outcome> {
    let mut t = Tally::default();
    for (g, cap) in [(corpus::g1(), 30), (corpus::g2(), 10), (corpus::c2(), 20), (corpus::gf(), 9)] {
        let k = kms_for(&g, &[2])?;
        let s = k.system().clone();
        let beta = k.critical_beta() + 1.0;
        let mb = random_probability(&s, rng)?;
        let phi = k.state_from_boundary(&mb, beta)?;
        let eps = k.boundary_to_epsilon(&mb, beta)?;
        let rep = TruncatedRep::build(s.clone(), 1, cap)?;
        for _ in 0..20 {
            let a = random_sum(&s, 1, 2, 2, rng);
            let r = rep_state_eval(&rep, &a, eps.level(1), beta, k.spectrum())?;
            let closed = phi.eval_sum(&a)?;
            t.check((r.value - closed).abs() <= r.bound + 1e-12, || {
                format!("rep {} vs closed form {closed}, bound {:e}", r.value, r.bound)
            });
        }
    }
    t.done("truncated representation reproduces the closed-form state")
}
