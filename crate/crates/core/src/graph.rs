//! Sampled percolation configurations on a finite box.
//!
//! Nearest-neighbour edges (sup-norm distance one) are implicit and always
//! present. Long edges are stored once, as `(i, j)` with `i < j`, sorted, with
//! a CSR index of long neighbours per vertex.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::kernel::ModelConfig;
use crate::lattice::Lattice;

/// Anything BFS can walk.
pub trait Neighbourhood {
    fn lattice(&self) -> &Lattice;

    fn for_each_neighbour(&self, v: usize, f: impl FnMut(usize));

    fn vertex_count(&self) -> usize {
        self.lattice().len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LrpGraph {
    config: ModelConfig,
    lattice: Lattice,
    long_edges: Vec<(u64, u64)>,
    offsets: Vec<usize>,
    neighbours: Vec<u32>,
}

impl LrpGraph {
    /// Builds a graph from an arbitrary list of long edges. Endpoint order and
    /// duplicates are normalised; short or out-of-box edges are rejected.
    pub fn from_long_edges(config: ModelConfig, edges: Vec<(u64, u64)>) -> Result<Self> {
        let lattice = Lattice::new(config.d, config.n)?;
        let len = lattice.len() as u64;
        let mut edges: Vec<(u64, u64)> = edges
            .into_iter()
            .map(|(a, b)| if a < b { (a, b) } else { (b, a) })
            .collect();
        for &(a, b) in &edges {
            if b >= len {
                return Err(Error::VertexOutside(b as usize));
            }
            if lattice.sup_distance(a as usize, b as usize) < 2 {
                return Err(Error::NotLongDisplacement(
                    lattice.displacement(a as usize, b as usize),
                ));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        Ok(Self::from_sorted(config, lattice, edges))
    }

    /// Empty configuration: nearest-neighbour edges only.
    pub fn nearest_only(config: ModelConfig) -> Result<Self> {
        Self::from_long_edges(config, Vec::new())
    }

    pub(crate) fn from_sorted(
        config: ModelConfig,
        lattice: Lattice,
        edges: Vec<(u64, u64)>,
    ) -> Self {
        let nv = lattice.len();
        let mut degree = vec![0usize; nv + 1];
        for &(a, b) in &edges {
            degree[a as usize] += 1;
            degree[b as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(nv + 1);
        let mut acc = 0;
        offsets.push(0);
        for &c in &degree[..nv] {
            acc += c;
            offsets.push(acc);
        }
        let mut fill = offsets.clone();
        let mut neighbours = vec![0u32; acc];
        for &(a, b) in &edges {
            neighbours[fill[a as usize]] = b as u32;
            fill[a as usize] += 1;
            neighbours[fill[b as usize]] = a as u32;
            fill[b as usize] += 1;
        }
        for v in 0..nv {
            neighbours[offsets[v]..offsets[v + 1]].sort_unstable();
        }
        Self {
            config,
            lattice,
            long_edges: edges,
            offsets,
            neighbours,
        }
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn long_edges(&self) -> &[(u64, u64)] {
        &self.long_edges
    }

    pub fn long_neighbours(&self, v: usize) -> &[u32] {
        &self.neighbours[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        if u == v {
            return false;
        }
        match self.lattice.sup_distance(u, v) {
            1 => true,
            _ => self.long_neighbours(u).binary_search(&(v as u32)).is_ok(),
        }
    }

    pub fn degree(&self, v: usize) -> usize {
        let mut nn = 0;
        self.lattice.for_each_nearest(v, |_| nn += 1);
        nn + self.long_neighbours(v).len()
    }
}

impl Neighbourhood for LrpGraph {
    fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    #[inline]
    fn for_each_neighbour(&self, v: usize, mut f: impl FnMut(usize)) {
        self.lattice.for_each_nearest(v, &mut f);
        for &u in self.long_neighbours(v) {
            f(u as usize);
        }
    }
}

/// A graph with a set of extra edges switched on.
#[derive(Debug, Clone)]
pub struct WithShortcuts<'a> {
    base: &'a LrpGraph,
    extra: HashMap<usize, Vec<usize>>,
}

impl<'a> WithShortcuts<'a> {
    pub fn new(base: &'a LrpGraph, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut extra: HashMap<usize, Vec<usize>> = HashMap::new();
        for (a, b) in edges {
            if a == b {
                continue;
            }
            extra.entry(a).or_default().push(b);
            extra.entry(b).or_default().push(a);
        }
        Self { base, extra }
    }
}

impl Neighbourhood for WithShortcuts<'_> {
    fn lattice(&self) -> &Lattice {
        self.base.lattice()
    }

    fn for_each_neighbour(&self, v: usize, mut f: impl FnMut(usize)) {
        self.base.for_each_neighbour(v, &mut f);
        if let Some(list) = self.extra.get(&v) {
            for &u in list {
                f(u);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(d: usize, n: u64) -> ModelConfig {
        ModelConfig::new(d, 1.0, n, 0).unwrap()
    }

    #[test]
    fn normalises_and_indexes_edges() {
        let g =
            LrpGraph::from_long_edges(cfg(1, 10), vec![(7, 2), (2, 7), (0, 9), (3, 5)]).unwrap();
        assert_eq!(g.long_edges(), &[(0, 9), (2, 7), (3, 5)]);
        assert_eq!(g.long_neighbours(2), &[7]);
        assert_eq!(g.long_neighbours(9), &[0]);
        assert!(g.has_edge(4, 5));
        assert!(g.has_edge(5, 3));
        assert!(!g.has_edge(4, 6));
        assert_eq!(g.degree(0), 2);
        // Round trip: the CSR lists reproduce the edge list.
        let mut back = Vec::new();
        for v in 0..10 {
            for &u in g.long_neighbours(v) {
                if (v as u32) < u {
                    back.push((v as u64, u as u64));
                }
            }
        }
        assert_eq!(back, g.long_edges());
    }

    #[test]
    fn rejects_short_and_outside_edges() {
        assert!(LrpGraph::from_long_edges(cfg(1, 10), vec![(3, 4)]).is_err());
        assert!(LrpGraph::from_long_edges(cfg(1, 10), vec![(3, 10)]).is_err());
        // Diagonal neighbours are nearest neighbours in sup norm.
        assert!(LrpGraph::from_long_edges(cfg(2, 4), vec![(0, 5)]).is_err());
        assert!(LrpGraph::from_long_edges(cfg(2, 4), vec![(0, 2)]).is_ok());
    }

    #[test]
    fn shortcut_overlay() {
        let g = LrpGraph::nearest_only(cfg(1, 8)).unwrap();
        let s = WithShortcuts::new(&g, [(0, 5)]);
        let mut nb = Vec::new();
        s.for_each_neighbour(0, |u| nb.push(u));
        nb.sort();
        assert_eq!(nb, vec![1, 5]);
    }
}
