//! A graph together with a divisor chain prefix and everything indexed by it.

use std::sync::Arc;

use crate::covering::CoveringGraph;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::omega::{gcd_omega, OmegaPrefix};
use crate::path::{Path, PathSpace};

/// `E^{<n_k}` for every level of `ω`, sharing one path trie, plus the
/// covering graphs `E(n_k)` and the residue maps between consecutive levels.
#[derive(Debug, Clone)]
pub struct PathSystem {
    graph: Arc<Graph>,
    omega: OmegaPrefix,
    space: Arc<PathSpace>,
    covers: Vec<CoveringGraph>,
    /// `down[k-1][i] = [i]_{n_k}` for nodes `i` of level `k + 1`.
    down: Vec<Vec<u32>>,
}

impl PathSystem {
    pub fn new(graph: &Graph, omega: &OmegaPrefix) -> Result<Arc<PathSystem>> {
        graph.require_no_sources()?;
        let graph = Arc::new(graph.clone());
        let space = Arc::new(PathSpace::new(&graph, omega.last()));
        let covers = omega
            .terms()
            .iter()
            .map(|&n| CoveringGraph::with_space(graph.clone(), space.clone(), n))
            .collect::<Result<Vec<_>>>()?;
        let mut down = Vec::new();
        for k in 1..omega.depth() {
            let n_lo = omega.terms()[k - 1];
            let size_hi = space.count_below(omega.terms()[k]);
            down.push((0..size_hi).map(|i| space.residue(i, n_lo) as u32).collect());
        }
        Ok(Arc::new(PathSystem {
            graph,
            omega: omega.clone(),
            space,
            covers,
            down,
        }))
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn graph_arc(&self) -> Arc<Graph> {
        self.graph.clone()
    }

    pub fn omega(&self) -> &OmegaPrefix {
        &self.omega
    }

    pub fn space(&self) -> &PathSpace {
        &self.space
    }

    pub fn depth(&self) -> usize {
        self.omega.depth()
    }

    pub fn check_level(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.depth() {
            Err(Error::LevelOutOfRange(k))
        } else {
            Ok(())
        }
    }

    /// `n_k`.
    pub fn n(&self, k: usize) -> usize {
        self.omega.terms()[k - 1]
    }

    /// `|E^{<n_k}|`.
    pub fn size(&self, k: usize) -> usize {
        self.space.count_below(self.n(k))
    }

    pub fn cover(&self, k: usize) -> &CoveringGraph {
        &self.covers[k - 1]
    }

    /// `[i]_{n_k}` for a node `i` of level `k + 1`.
    pub fn parent_of(&self, k: usize, i: usize) -> usize {
        self.down[k - 1][i] as usize
    }

    /// `[i]_{n_k}` for any node.
    pub fn residue_at(&self, k: usize, i: usize) -> usize {
        self.space.residue(i, self.n(k))
    }

    pub fn path(&self, i: usize) -> Path {
        self.space.path(i)
    }

    pub fn key(&self, i: usize) -> String {
        self.space.key(&self.graph, i)
    }

    /// Node of a path at level `k`.
    pub fn index_at(&self, k: usize, p: &Path) -> Result<usize> {
        self.check_level(k)?;
        self.space
            .index_of(p)
            .filter(|&i| i < self.size(k))
            .ok_or_else(|| Error::PathTooLong(p.key(&self.graph)))
    }

    pub fn parse_key_at(&self, k: usize, key: &str) -> Result<usize> {
        let p = Path::parse_key(&self.graph, key)?;
        self.index_at(k, &p)
    }

    pub fn period(&self) -> Result<usize> {
        Ok(self.graph.period()? as usize)
    }

    /// `gcd(P_E, ω)`, certified stable.
    pub fn class_count(&self) -> Result<usize> {
        gcd_omega(self.period()?, &self.omega).require_stable()
    }

    /// First level where `gcd(P_E, n_k)` reaches its stable value.
    pub fn stable_level(&self) -> Result<usize> {
        self.omega.stable_level(self.period()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn residue_maps_match_paths() {
        let g = corpus::gf();
        let w = OmegaPrefix::new(&[2, 4, 8]).unwrap();
        let sys = PathSystem::new(&g, &w).unwrap();
        for k in 1..3 {
            for i in 0..sys.size(k + 1) {
                let p = sys.path(i).residue(&g, sys.n(k));
                assert_eq!(sys.path(sys.parent_of(k, i)), p);
            }
        }
        assert_eq!(sys.class_count().unwrap(), 1);
    }

    #[test]
    fn sources_are_rejected() {
        let raw = crate::graph::RawGraph::new(&["v", "w"], &[("e", "v", "v")]);
        let g = Graph::from_raw(&raw).unwrap();
        let w = OmegaPrefix::new(&[2]).unwrap();
        assert!(matches!(PathSystem::new(&g, &w), Err(Error::HasSource(_))));
    }
}
