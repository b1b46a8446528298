//! Property tests over seeded random graphs, paths, elements and towers.

use std::sync::Arc;

use bdlab::algebra::{random_pair, random_path_from, random_sum, refine, spanning_product};
use bdlab::covering::{build_covering, cn_value, components, covering_classes, has_covering_path};
use bdlab::measures::{check_tower, pushforward};
use bdlab::repcheck::{compare_product, rep_relations_check};
use bdlab::spectral::{apply_transfer, zeta_norm};
use bdlab::{corpus, Graph, Kms, LevelMeasure, MeasureTower, OmegaPrefix, PathSystem, Spectrum, Tolerances, TruncatedRep};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sys(g: &Graph, w: &[usize]) -> Arc<PathSystem> {
    PathSystem::new(g, &OmegaPrefix::new(w).unwrap()).unwrap()
}

fn corpus_graph() -> impl Strategy<Value = Graph> {
    (0usize..4).prop_map(|i| corpus::all().swap_remove(i))
}

fn path_count_below(g: &Graph, n: u32) -> u64 {
    let a = g.adjacency();
    (0..n).map(|j| a.pow(j).rows().iter().flatten().sum::<u64>()).sum()
}

// Dense draws make the path spaces too large for a quick property run.
fn small_graph() -> impl Strategy<Value = Graph> {
    any::<u64>()
        .prop_map(|seed| corpus::random_strongly_connected(&mut ChaCha8Rng::seed_from_u64(seed), 4, 6))
        .prop_filter("at most 4000 paths of length < 10", |g| path_count_below(g, 10) <= 4000)
}

fn chain() -> impl Strategy<Value = Vec<usize>> {
    prop_oneof![Just(vec![2, 4]), Just(vec![1, 3]), Just(vec![3, 6]), Just(vec![2, 6])]
}

fn probability(s: &PathSystem, rng: &mut ChaCha8Rng) -> MeasureTower<f64> {
    let top = s.depth();
    let w: Vec<f64> = (0..s.size(top)).map(|_| rng.gen_range(0.01..1.0)).collect();
    let t: f64 = w.iter().sum();
    MeasureTower::from_top(s, LevelMeasure::from_weights(s, top, w.into_iter().map(|x| x / t).collect()).unwrap())
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn residue_then_multiple_of_n_rebuilds_path(g in corpus_graph(), seed: u64, len in 0usize..14, n in 1usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = bdlab::VertexId(rng.gen_range(0..g.vertex_count()));
        let mu = random_path_from(&g, v, len, &mut rng);
        let r = mu.residue(&g, n);
        let rest = mu.drop_front(&g, r.len());
        prop_assert_eq!(r.len() % n, mu.len() % n);
        prop_assert_eq!(rest.len() % n, 0);
        prop_assert_eq!(r.concat(&g, &rest).unwrap(), mu.clone());
        let tail = mu.tail(&g, n);
        let head = mu.prefix(&g, mu.len() - tail.len());
        prop_assert_eq!(head.len() % n, 0);
        prop_assert_eq!(head.concat(&g, &tail).unwrap(), mu);
    }

    #[test]
    fn covering_components_are_the_classes(g in small_graph(), n in 1usize..9) {
        let cov = build_covering(&g, n).unwrap();
        let part = components(&g, n).unwrap();
        let weak = cov.weak_components();
        let classes = covering_classes(&cov, &part);
        for i in 0..weak.len() {
            for j in 0..weak.len() {
                prop_assert_eq!(weak[i] == weak[j], classes[i] == classes[j]);
            }
        }
        for v in g.vertices() {
            for w in g.vertices() {
                prop_assert_eq!(has_covering_path(&g, n, v, w), cn_value(&g, n, v, w).unwrap() == 0);
            }
        }
    }

    #[test]
    fn lift_and_flatten_are_inverse(g in corpus_graph(), seed: u64, n in 1usize..7, len in 0usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cov = build_covering(&g, n).unwrap();
        let nu = cov.space().path(rng.gen_range(0..cov.vertex_count()));
        let mu = random_path_from(&g, nu.range(), len, &mut rng);
        let lifted = cov.lift_path(&mu, &nu).unwrap();
        prop_assert_eq!(cov.flatten_path(&lifted).unwrap(), (mu, nu));
    }

    #[test]
    fn pushforward_does_not_increase_variation(g in corpus_graph(), seed: u64) {
        let s = sys(&g, &[1, 2, 4]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.gen_range(2..=3);
        let m = LevelMeasure::from_weights(&s, k, (0..s.size(k)).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        prop_assert!(pushforward(&s, &m).unwrap().total_variation() <= m.total_variation() + 1e-12);
    }

    #[test]
    fn weighted_norm_is_contracted_by_rho(g in corpus_graph(), seed: u64) {
        let s = sys(&g, &[2, 4]);
        let spec = Spectrum::<f64>::new(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = LevelMeasure::from_weights(&s, 2, (0..s.size(2)).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let lhs = zeta_norm(&s, &spec, &apply_transfer(&s, &m));
        prop_assert!(lhs <= spec.rho() * zeta_norm(&s, &spec, &m) + 1e-9);
    }

    #[test]
    fn products_respect_adjoints(g in corpus_graph(), w in chain(), seed: u64) {
        let s = sys(&g, &w);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.gen_range(1..=2);
        let (a, b) = random_pair(&s, k, 3, &mut rng);
        let ab = spanning_product(&s, &a, &b).unwrap();
        let ba = spanning_product(&s, &b.adjoint(), &a.adjoint()).unwrap();
        prop_assert_eq!(ab.clone().map(|c| c.adjoint()), ba);
        if let Some(c) = ab {
            prop_assert_eq!(c.degree(), a.degree() + b.degree());
        }
    }

    #[test]
    fn symbolic_products_match_matrices(g in corpus_graph(), w in chain(), seed: u64) {
        let s = sys(&g, &w);
        let rep = TruncatedRep::build(s.clone(), 2, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let k = rng.gen_range(1..=2);
            let (a, b) = random_pair(&s, k, 2, &mut rng);
            prop_assert_eq!(compare_product(&rep, &a, &b).unwrap().mismatches, 0);
        }
    }

    #[test]
    fn kms_condition_and_refinement(g in corpus_graph(), w in chain(), seed: u64, shift in 0.05f64..3.0) {
        let k = Kms::<f64>::new(sys(&g, &w)).unwrap();
        let s = k.system().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mb = probability(&s, &mut rng);
        let phi = k.state_from_boundary(&mb, k.critical_beta() + shift).unwrap();
        prop_assert!(k.boundary_of(&phi).unwrap().max_diff(&mb) < 1e-10);
        prop_assert!(check_tower(&s, phi.tower(), &Tolerances::default()).consistent);
        for _ in 0..20 {
            let (a, b) = random_pair(&s, rng.gen_range(1..=2), 3, &mut rng);
            prop_assert!(k.check_kms_condition(&phi, &a, &b).unwrap() < 1e-12);
            let direct = phi.eval(&a).unwrap();
            let refined = phi.eval_sum(&refine::<f64>(&s, &a, 2).unwrap()).unwrap();
            prop_assert!((direct - refined).abs() < 1e-12);
        }
        let x = random_sum(&s, 2, 2, 3, &mut rng);
        prop_assert!(phi.eval_sum(&x.adjoint().mul(&s, &x).unwrap()).unwrap() >= -1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn relations_hold_on_random_graphs(g in small_graph(), w in chain()) {
        let rep = TruncatedRep::build(sys(&g, &w), 2, 3).unwrap();
        let report = rep_relations_check(&rep);
        prop_assert!(report.holds(), "{:?}", report.failures().first());
    }
}
