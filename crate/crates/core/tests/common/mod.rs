//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::collections::HashMap;

use lrplab_core::graph::Neighbourhood;
use lrplab_core::quadrature::adaptive;
use petgraph::algo::dijkstra;
use petgraph::graph::{NodeIndex, UnGraph};

/// I(k) in d = 1: the second difference of −ln|t|, which is
/// 2 ln k − ln(k − 1) − ln(k + 1) = −ln(1 − 1/k²).
pub fn kernel_oracle_1d(k: f64) -> f64 {
    -(-1.0 / (k * k)).ln_1p()
}

/// I(k) in d = 2. Along the axis with the larger |k| the tent-weighted
/// integral is done numerically; along the other it is the second
/// difference of G(t) = t·atan(t/s)/(2s³), the double antiderivative of
/// (t² + s²)^{-2}.
pub fn kernel_oracle_2d(k: [f64; 2]) -> f64 {
    let (kx, ky) = if k[0].abs() >= k[1].abs() {
        (k[1], k[0])
    } else {
        (k[0], k[1])
    };
    let g = |t: f64, s: f64| t * (t / s).atan() / (2.0 * s.powi(3));
    let f = |y: f64| {
        let s = ky + y;
        (1.0 - y.abs()) * (g(kx + 1.0, s) - 2.0 * g(kx, s) + g(kx - 1.0, s))
    };
    adaptive(f, -1.0, 0.0, 1e-13, 0.0).unwrap().value
        + adaptive(f, 0.0, 1.0, 1e-13, 0.0).unwrap().value
}

/// The graph as a petgraph undirected graph (unit weights).
pub fn to_petgraph<G: Neighbourhood>(g: &G, keep: impl Fn(usize) -> bool) -> UnGraph<(), u32> {
    let n = g.vertex_count();
    let mut pg = UnGraph::<(), u32>::with_capacity(n, 0);
    for _ in 0..n {
        pg.add_node(());
    }
    for v in 0..n {
        if !keep(v) {
            continue;
        }
        g.for_each_neighbour(v, |u| {
            if u > v && keep(u) {
                pg.add_edge(NodeIndex::new(v), NodeIndex::new(u), 1);
            }
        });
    }
    pg
}

pub fn dijkstra_from(pg: &UnGraph<(), u32>, s: usize) -> HashMap<NodeIndex, u32> {
    dijkstra(pg, NodeIndex::new(s), None, |e| *e.weight())
        .into_iter()
        .collect()
}

/// Number of shortest x–y paths, by depth-first enumeration of all paths of
/// the Dijkstra length; `None` when the count exceeds `cap`.
pub fn enumerate_geodesics(pg: &UnGraph<(), u32>, x: usize, y: usize, cap: u64) -> Option<u64> {
    let to_y = dijkstra_from(pg, y);
    let len = *to_y.get(&NodeIndex::new(x))?;
    let mut count = 0u64;
    fn dfs(
        pg: &UnGraph<(), u32>,
        to_y: &HashMap<NodeIndex, u32>,
        v: NodeIndex,
        y: NodeIndex,
        left: u32,
        count: &mut u64,
        cap: u64,
    ) -> bool {
        if v == y {
            *count += 1;
            return *count <= cap;
        }
        if left == 0 {
            return true;
        }
        for u in pg.neighbors(v) {
            if to_y.get(&u).is_some_and(|&d| d <= left - 1) && !dfs(pg, to_y, u, y, left - 1, count, cap) {
                return false;
            }
        }
        true
    }
    if dfs(pg, &to_y, NodeIndex::new(x), NodeIndex::new(y), len, &mut count, cap) {
        Some(count)
    } else {
        None
    }
}

/// Checks the two witness conditions for every member by trying every
/// candidate witness set.
pub fn brute_force_sperner(n: u32, members: &[u32]) -> bool {
    let full = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let big = |b: u32| 2 * b.count_ones() >= n;
    members.iter().all(|&a| {
        let rest = full & !a;
        let upward = subsets(rest).any(|b| {
            big(b)
                && members
                    .iter()
                    .all(|&m| !(m & a == a && m & b != 0))
        });
        let downward = || {
            subsets(a).any(|b| {
                big(b)
                    && members
                        .iter()
                        .all(|&m| !(m & a == m && b & !m != 0))
            })
        };
        upward || downward()
    })
}

/// All submasks of `mask`, largest first.
pub fn subsets(mask: u32) -> impl Iterator<Item = u32> {
    let mut next = Some(mask);
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == 0 { None } else { Some((cur - 1) & mask) };
        Some(cur)
    })
}

/// Connected vertex sets of each size ≤ k containing `root`, counted by
/// growing canonical sorted sets breadth-first with a hash set.
pub fn brute_connected_sets(adj: &[Vec<usize>], root: usize, k: usize) -> Vec<u64> {
    use std::collections::BTreeSet;
    let mut layer: BTreeSet<Vec<usize>> = BTreeSet::from([vec![root]]);
    let mut out = Vec::new();
    for _ in 0..k {
        out.push(layer.len() as u64);
        let mut next = BTreeSet::new();
        for set in &layer {
            for &v in set {
                for &u in &adj[v] {
                    if !set.contains(&u) {
                        let mut s = set.clone();
                        s.push(u);
                        s.sort_unstable();
                        next.insert(s);
                    }
                }
            }
        }
        layer = next;
    }
    out
}
