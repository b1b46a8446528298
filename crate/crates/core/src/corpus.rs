//! Small reference graphs and a random strongly connected generator.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::{Graph, RawGraph};

/// One vertex `v`, one loop `e`.
pub fn g1() -> Graph {
    build(RawGraph::new(&["v"], &[("e", "v", "v")]))
}

/// One vertex `v`, two loops `e`, `f`.
pub fn g2() -> Graph {
    build(RawGraph::new(&["v"], &[("e", "v", "v"), ("f", "v", "v")]))
}

/// Two-cycle: `a` from `v` to `u`, `b` from `u` to `v`.
pub fn c2() -> Graph {
    build(RawGraph::new(&["u", "v"], &[("a", "u", "v"), ("b", "v", "u")]))
}

/// Fibonacci graph, adjacency `[[1,1],[1,0]]`: loop `e` at `u`, `a` from `v`
/// to `u`, `b` from `u` to `v`.
pub fn gf() -> Graph {
    build(RawGraph::new(
        &["u", "v"],
        &[("e", "u", "u"), ("a", "u", "v"), ("b", "v", "u")],
    ))
}

pub fn all() -> Vec<Graph> {
    vec![g1(), g2(), c2(), gf()]
}

pub fn named() -> Vec<(&'static str, Graph)> {
    vec![("G1", g1()), ("G2", g2()), ("C2", c2()), ("GF", gf())]
}

fn build(raw: RawGraph) -> Graph {
    Graph::from_raw(&raw).expect("corpus graph is valid")
}

/// Random strongly connected graph: a Hamiltonian cycle through a random
/// vertex order plus random extra edges.
pub fn random_strongly_connected<R: Rng>(rng: &mut R, max_vertices: usize, max_edges: usize) -> Graph {
    assert!(max_vertices >= 1 && max_edges >= max_vertices);
    let n = rng.gen_range(1..=max_vertices);
    let total = rng.gen_range(n..=max_edges);
    let vertices: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = Vec::with_capacity(total);
    for i in 0..n {
        // edge from order[i] to order[i+1]
        edges.push((order[(i + 1) % n], order[i]));
    }
    while edges.len() < total {
        edges.push((rng.gen_range(0..n), rng.gen_range(0..n)));
    }
    let raw = RawGraph {
        vertices: vertices.clone(),
        edges: edges
            .iter()
            .enumerate()
            .map(|(i, &(r, s))| crate::graph::RawEdge {
                id: format!("e{i}"),
                range: vertices[r].clone(),
                source: vertices[s].clone(),
            })
            .collect(),
    };
    build(raw)
}
