//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero if a criterion fails that is not listed in `KNOWN_DEFECTS`.

#![allow(clippy::needless_range_loop)]

use std::collections::VecDeque;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use bdlab::algebra::{random_pair, spanning_product};
use bdlab::covering::{build_covering, components, CoveringGraph};
use bdlab::kms::{extreme_count, is_simple, neumann_series, resolvent, Provenance};
use bdlab::measures::{build_remark_tower, check_tower};
use bdlab::repcheck::{coburn_check, compare_product};
use bdlab::spectral::{apply_transfer, block_spectral, classify_subinvariance, pf_tower, SubinvarianceVerdict};
use bdlab::{corpus, Graph, Kms, LevelMeasure, MeasureTower, OmegaPrefix, PathSystem, Rational, State, Tolerances};
use bdlab::{Spectrum, TruncatedRep};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria that fail as stated; see the decisions ledger.
/// 4: a 60-term series cannot reach 1e-9 at β = ln ρ + 0.1, its truncation
///    error is about (ρe^{-β})^60 / (1 - ρe^{-β}) ≈ 2.6e-2.
/// 12: the divergent tower has ‖m_k‖ = 3^k; only m_k({v}) equals 2^k.
const KNOWN_DEFECTS: [usize; 2] = [4, 12];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn sys(g: &Graph, w: &[usize]) -> Arc<PathSystem> {
    PathSystem::new(g, &OmegaPrefix::new(w).unwrap()).unwrap()
}

fn random_probability(s: &PathSystem, rng: &mut ChaCha8Rng) -> MeasureTower<f64> {
    let top = s.depth();
    let w: Vec<f64> = (0..s.size(top)).map(|_| rng.gen_range(0.01..1.0)).collect();
    let t: f64 = w.iter().sum();
    let top_level = LevelMeasure::from_weights(s, top, w.into_iter().map(|x| x / t).collect()).unwrap();
    MeasureTower::from_top(s, top_level).unwrap()
}

/// gcd of closed-walk lengths up to |E^0|, which covers every simple cycle.
fn period_oracle(g: &Graph) -> usize {
    let a = g.adjacency();
    let mut p = a.clone();
    let mut d = 0usize;
    for len in 1..=g.vertex_count() {
        if (0..a.dim()).any(|i| p.get(i, i) > 0) {
            d = d.gcd(&len);
        }
        p = p.mul(&a);
    }
    d
}

/// Undirected BFS component labels of the covering graph from its edge list.
fn covering_components(cov: &CoveringGraph) -> Vec<usize> {
    let n = cov.vertex_count();
    let mut adj = vec![Vec::new(); n];
    for i in 0..cov.edge_count() {
        adj[cov.edge_source(i)].push(cov.edge_range(i));
        adj[cov.edge_range(i)].push(cov.edge_source(i));
    }
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        label[start] = next;
        let mut queue = VecDeque::from([start]);
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

fn reachable(succ: &[Vec<usize>], from: usize) -> Vec<bool> {
    let mut seen = vec![false; succ.len()];
    seen[from] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(x) = queue.pop_front() {
        for &y in &succ[x] {
            if !seen[y] {
                seen[y] = true;
                queue.push_back(y);
            }
        }
    }
    seen
}

/// Pairwise reachability inside each component, checked from one member in
/// both directions.
fn components_strongly_connected(cov: &CoveringGraph, label: &[usize]) -> bool {
    let n = cov.vertex_count();
    let mut fwd = vec![Vec::new(); n];
    let mut bwd = vec![Vec::new(); n];
    for i in 0..cov.edge_count() {
        fwd[cov.edge_source(i)].push(cov.edge_range(i));
        bwd[cov.edge_range(i)].push(cov.edge_source(i));
    }
    let classes = label.iter().max().map_or(0, |m| m + 1);
    (0..classes).all(|c| {
        let root = label.iter().position(|&l| l == c).unwrap();
        let (f, b) = (reachable(&fwd, root), reachable(&bwd, root));
        (0..n).filter(|&i| label[i] == c).all(|i| f[i] && b[i])
    })
}

fn path_count_below(g: &Graph, n: u32) -> u64 {
    let a = g.adjacency();
    (0..n).map(|j| a.pow(j).rows().iter().flatten().sum::<u64>()).sum()
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut graphs = corpus::all();
    let mut rejected = 0;
    while graphs.len() < 54 {
        let g = corpus::random_strongly_connected(&mut rng, 6, 14);
        if path_count_below(&g, 12) > 200_000 {
            rejected += 1;
            continue;
        }
        graphs.push(g);
    }
    let mut cases = 0;
    for g in &graphs {
        let p = period_oracle(g);
        for n in 1..=12 {
            let cov = build_covering(g, n).unwrap();
            let label = covering_components(&cov);
            let count = label.iter().max().unwrap() + 1;
            if count != p.gcd(&n) {
                return verdict(false, format!("n = {n}: {count} components, gcd(P, n) = {}", p.gcd(&n)));
            }
            if !components_strongly_connected(&cov, &label) {
                return verdict(false, format!("n = {n}: a component is not strongly connected"));
            }
            cases += 1;
        }
    }
    let t = start.elapsed();
    verdict(
        t < Duration::from_secs(10),
        format!("{cases} (graph, n) cases, {rejected} oversized random graphs redrawn, {t:.2?}"),
    )
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let tol = Tolerances::default();
    let mut worst_mass = 0.0f64;
    let mut worst_resid = 0.0f64;
    for g in corpus::all() {
        let spec = Spectrum::<f64>::new(&g).unwrap();
        for w in [vec![2, 4, 8, 16], vec![1, 2, 4, 8, 16], vec![4, 16]] {
            let s = sys(&g, &w);
            let pf = pf_tower(&s, &spec).unwrap();
            let report = check_tower(&s, &pf, &tol);
            if !report.consistent {
                return verdict(false, format!("inconsistent at {:?}", report.violation));
            }
            for k in 1..=s.depth() {
                let m = pf.level(k);
                worst_mass = worst_mass.max((m.total() - 1.0).abs());
                let am = apply_transfer(&s, m);
                for (a, b) in am.weights.iter().zip(&m.weights) {
                    worst_resid = worst_resid.max((a - spec.rho() * b).abs());
                }
            }
        }
    }
    let t = start.elapsed();
    verdict(
        worst_mass < 1e-12 && worst_resid < 1e-9 && t < Duration::from_secs(5),
        format!("mass error {worst_mass:.1e}, eigen residual {worst_resid:.1e}, {t:.2?}"),
    )
}

fn criterion_3() -> Verdict {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for g in corpus::all() {
        let rho = Spectrum::<f64>::new(&g).unwrap().rho();
        for w in [vec![2, 4, 8], vec![3, 6, 12], vec![1, 2, 4, 8, 16], vec![5, 10]] {
            let s = sys(&g, &w);
            for k in s.stable_level().unwrap()..=s.depth() {
                for lambda in components(&g, s.n(k)).unwrap().classes() {
                    let b = block_spectral::<f64>(&s, k, &lambda).unwrap();
                    worst = worst.max((b.rho - rho).abs());
                    cases += 1;
                }
            }
        }
    }
    verdict(worst < 1e-9, format!("{cases} blocks, max |ρ_Λ - ρ| = {worst:.1e}"))
}

/// Exact Gauss-Jordan on a small rational system.
fn solve_rational(mut a: Vec<Vec<Rational>>, mut b: Vec<Rational>) -> Vec<Rational> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).find(|&r| !a[r][c].is_zero()).expect("nonsingular");
        a.swap(c, p);
        b.swap(c, p);
        let inv = Rational::one() / a[c][c];
        for j in 0..n {
            a[c][j] *= inv;
        }
        b[c] *= inv;
        for r in 0..n {
            if r != c && !a[r][c].is_zero() {
                let f = a[r][c];
                for j in 0..n {
                    let v = a[c][j];
                    a[r][j] -= f * v;
                }
                let v = b[c];
                b[r] -= f * v;
            }
        }
    }
    b
}

fn criterion_4() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = [[0.0f64; 3]; 2];
    for g in corpus::all() {
        let k = Kms::<f64>::new(sys(&g, &[2, 4])).unwrap();
        let s = k.system().clone();
        for (si, shift) in [0.1, 1.0].into_iter().enumerate() {
            let worst = &mut worst[si];
            let beta = k.critical_beta() + shift;
            let q = (-beta).exp();
            let eps = random_probability(&s, &mut rng);
            let dense = resolvent(&s, &eps, &q).unwrap();
            let series = neumann_series(&s, &eps, &q, 60);
            for lvl in 1..=s.depth() {
                for tau in 0..s.size(lvl) {
                    let d = dense.level(lvl).weights[tau];
                    let n = series.level(lvl).weights[tau];
                    let p = k.path_sum_inverse(eps.level(lvl), beta, tau).unwrap().value;
                    worst[0] = worst[0].max((d - n).abs());
                    worst[1] = worst[1].max((d - p).abs());
                    worst[2] = worst[2].max((n - p).abs());
                }
            }
        }
    }
    // G1, ε = δ_{@v}, β = ln 2: exact solve from the covering edge list.
    let s = sys(&corpus::g1(), &[2]);
    let half = Rational::new(1, 2);
    let eps = MeasureTower::from_top(&s, LevelMeasure::<Rational>::delta(&s, 1, 0)).unwrap();
    let got = resolvent(&s, &eps, &half).unwrap().level(1).weights.clone();
    let cov = s.cover(1);
    let n = cov.vertex_count();
    let mut a = vec![vec![Rational::zero(); n]; n];
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = Rational::one();
    }
    for i in 0..cov.edge_count() {
        a[cov.edge_range(i)][cov.edge_source(i)] -= half;
    }
    let mut rhs = vec![Rational::zero(); n];
    rhs[0] = Rational::one();
    let oracle = solve_rational(a, rhs);
    let exact = got == oracle && got == vec![Rational::new(4, 3), Rational::new(2, 3)];
    let show = |w: &[f64; 3]| format!("{:.1e}/{:.1e}/{:.1e}", w[0], w[1], w[2]);
    verdict(
        worst.iter().flatten().all(|&w| w < 1e-9) && exact,
        format!(
            "max pairwise gaps dense-series/dense-path/series-path at ln ρ + 0.1: {}, at ln ρ + 1: {}; G1 value exact: {exact}",
            show(&worst[0]),
            show(&worst[1])
        ),
    )
}

/// Every kind of state the kms module produces, per corpus graph.
fn produced_states(k: &Kms<f64>, rng: &mut ChaCha8Rng) -> Vec<State> {
    let s = k.system().clone();
    let critical = k.critical_states().unwrap();
    let mut states = critical.clone();
    if critical.len() > 1 {
        let c = vec![1.0 / critical.len() as f64; critical.len()];
        states.push(k.convex_combination(&critical, &c).unwrap());
    }
    for shift in [0.1, 1.0, 3.0] {
        let beta = k.critical_beta() + shift;
        let mb = random_probability(&s, rng);
        states.push(k.state_from_boundary(&mb, beta).unwrap());
        let m = k.neumann_inverse(&random_probability(&s, rng), beta).unwrap();
        let mass = m.mass();
        states.push(k.state_from_measure(&m.scale(&(1.0 / mass)), beta).unwrap());
    }
    states
}

fn criterion_5() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let mut count = 0;
    for g in corpus::all() {
        let k = Kms::<f64>::new(sys(&g, &[2, 4])).unwrap();
        let s = k.system().clone();
        for phi in produced_states(&k, &mut rng) {
            count += 1;
            for _ in 0..1000 {
                let lvl = rng.gen_range(1..=2);
                let (a, b) = random_pair(&s, lvl, 3, &mut rng);
                worst = worst.max(k.check_kms_condition(&phi, &a, &b).unwrap());
            }
        }
    }
    verdict(worst < 1e-12, format!("{count} states x 1000 pairs, max deviation {worst:.1e}"))
}

fn criterion_6() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for g in corpus::all() {
        let k = Kms::<f64>::new(sys(&g, &[2, 4])).unwrap();
        let s = k.system().clone();
        for shift in [0.1, 1.0, 3.0] {
            let beta = k.critical_beta() + shift;
            for _ in 0..100 {
                let mb = random_probability(&s, &mut rng);
                let phi = k.state_from_boundary(&mb, beta).unwrap();
                worst = worst.max(k.boundary_of(&phi).unwrap().max_diff(&mb));
            }
        }
    }
    verdict(worst < 1e-10, format!("4 graphs x 3 β x 100 towers, max deviation {worst:.1e}"))
}

fn criterion_7() -> Verdict {
    let divergent = |g: &Graph, w: &[usize]| PathSystem::new(g, &OmegaPrefix::new(w).unwrap().with_divergence(true)).unwrap();
    let c248 = divergent(&corpus::c2(), &[2, 4, 8]);
    let c39 = divergent(&corpus::c2(), &[3, 9]);
    let mut ok = extreme_count(&c248).unwrap() == 2 && !is_simple(&c248).unwrap();
    ok &= extreme_count(&c39).unwrap() == 1 && is_simple(&c39).unwrap();
    for w in [vec![1], vec![2, 4, 8], vec![3, 9], vec![2, 6, 30]] {
        ok &= extreme_count(&divergent(&corpus::gf(), &w)).unwrap() == 1;
    }
    let k = Kms::<f64>::new(c248).unwrap();
    ok &= k.critical_states().unwrap().len() == 2;
    verdict(ok, "C2 [2,4,8]: 2, not simple; C2 [3,9]: 1, simple; GF: 1")
}

fn criterion_8() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let tol = Tolerances::default();
    let mut bad = 0;
    for g in corpus::all() {
        let spec = Spectrum::<f64>::new(&g).unwrap();
        let s = sys(&g, &[2, 4]);
        let beta = spec.ln_rho() - 0.1;
        for _ in 0..500 {
            let m = random_probability(&s, &mut rng);
            let v = classify_subinvariance(&s, &m, beta.exp(), spec.rho(), &tol).unwrap();
            if !matches!(v, SubinvarianceVerdict::NotSubinvariant { .. }) {
                bad += 1;
            }
        }
    }
    verdict(bad == 0, format!("4 graphs x 500 towers, {bad} not rejected"))
}

fn criterion_9() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut checked = 0;
    for g in corpus::all() {
        for w in [vec![2, 4], vec![3, 6]] {
            let k = Kms::<f64>::new(sys(&g, &w)).unwrap();
            for phi in produced_states(&k, &mut rng) {
                let at_critical = matches!(phi.provenance(), Provenance::Critical { .. } | Provenance::Convex);
                let expected = at_critical && (phi.beta() - k.critical_beta()).abs() < 1e-12;
                if k.factors_through(&phi).unwrap() != expected {
                    return verdict(false, format!("{:?} at β = {}", phi.provenance(), phi.beta()));
                }
                checked += 1;
            }
        }
    }
    verdict(true, format!("{checked} states classified"))
}

fn criterion_10() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut mismatches = 0;
    let mut nonzero = 0;
    let mut symbolic_zero = 0;
    for g in corpus::all() {
        let s = sys(&g, &[2, 4]);
        let rep = TruncatedRep::build(s.clone(), 2, 5).unwrap();
        for _ in 0..10_000 {
            let lvl = rng.gen_range(1..=2);
            let (a, b) = random_pair(&s, lvl, 2, &mut rng);
            if spanning_product(&s, &a, &b).unwrap().is_none() {
                symbolic_zero += 1;
            }
            let c = compare_product(&rep, &a, &b).unwrap();
            mismatches += c.mismatches;
            nonzero += c.nonzero;
        }
    }
    let t = start.elapsed();
    verdict(
        mismatches == 0 && nonzero > 0 && t < Duration::from_secs(60),
        format!("4 x 10^4 pairs, {nonzero} nonzero interior columns, {symbolic_zero} zero products, {mismatches} mismatches, {t:.2?}"),
    )
}

fn criterion_11() -> Verdict {
    let mut cases = 0;
    for g in corpus::all() {
        for w in [vec![2, 4], vec![1, 3], vec![3, 6]] {
            let s = sys(&g, &w);
            let rep = TruncatedRep::build(s.clone(), 2, 3).unwrap();
            for k in 1..=2 {
                for mu in 0..s.size(k) {
                    let path = s.path(mu);
                    if !coburn_check(&rep, &path, k).unwrap().holds {
                        return verdict(false, format!("({}, {k}) with ω = {w:?}", path.key(&g)));
                    }
                    cases += 1;
                }
            }
        }
    }
    verdict(true, format!("{cases} cylinders"))
}

fn criterion_12() -> Verdict {
    let tol = Tolerances::default();
    let mut consistent = true;
    let mut norm_ok = true;
    let mut vertex_ok = true;
    let mut first_bad = None;
    for depth in 1..=12 {
        let (s, m) = build_remark_tower::<Rational>(depth).unwrap();
        consistent &= check_tower(&s, &m, &tol).consistent;
        for k in 1..=depth {
            let two_k = Rational::from_integer(1 << k);
            let tv = m.level(k).total_variation();
            if tv != two_k {
                norm_ok = false;
                first_bad.get_or_insert((k, tv));
            }
            vertex_ok &= m.level(k).weights[0] == two_k;
        }
    }
    let detail = match first_bad {
        Some((k, tv)) => format!("consistent: {consistent}; ||m_{k}|| = {tv}, not 2^{k}; m_k({{v}}) = 2^k: {vertex_ok}"),
        None => format!("consistent: {consistent}; ||m_k|| = 2^k"),
    };
    verdict(consistent && norm_ok, detail)
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("component count", criterion_1),
        ("PF eigen tower", criterion_2),
        ("block spectral radii", criterion_3),
        ("resolvent oracles", criterion_4),
        ("KMS condition", criterion_5),
        ("boundary round trip", criterion_6),
        ("critical census", criterion_7),
        ("no subcritical states", criterion_8),
        ("factors-through dichotomy", criterion_9),
        ("dual-oracle algebra", criterion_10),
        ("injectivity criterion", criterion_11),
        ("divergent tower", criterion_12),
    ];
    let mut unexpected = Vec::new();
    let mut fixed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = i + 1;
        let v = run();
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {tag} {name}: {}", v.detail);
        let known = KNOWN_DEFECTS.contains(&id);
        if !v.pass && !known {
            unexpected.push(id);
        }
        if v.pass && known {
            fixed.push(id);
        }
    }
    println!("known failing criteria: {KNOWN_DEFECTS:?}");
    if !unexpected.is_empty() || !fixed.is_empty() {
        println!("unexpected failures: {unexpected:?}; unexpectedly passing: {fixed:?}");
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}
