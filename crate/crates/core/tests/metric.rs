mod common;

use common::{dijkstra_from, enumerate_geodesics, to_petgraph};
use lrplab_core::graph::{Neighbourhood, WithShortcuts};
use lrplab_core::metric::*;
use lrplab_core::sampler::GraphSampler;
use lrplab_core::{LrpGraph, ModelConfig};
use petgraph::graph::NodeIndex;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_graph(rng: &mut impl Rng) -> LrpGraph {
    let d = rng.random_range(1..=2usize);
    let n = if d == 1 { rng.random_range(4..=64) } else { rng.random_range(3..=8) };
    let beta = rng.random_range(0.2..3.0);
    let config = ModelConfig::new(d, beta, n, rng.random()).unwrap();
    GraphSampler::new(&config).unwrap().sample(rng.random())
}

#[test]
fn bfs_and_geodesic_counts_match_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..60 {
        let g = random_graph(&mut rng);
        let pg = to_petgraph(&g, |_| true);
        let x = rng.random_range(0..g.vertex_count());
        let y = rng.random_range(0..g.vertex_count());
        let field = distance_field(&g, &[x], None).unwrap();
        let oracle = dijkstra_from(&pg, x);
        for v in 0..g.vertex_count() {
            assert_eq!(field.get(v), oracle.get(&NodeIndex::new(v)).copied());
        }
        let dag = geodesic_dag(&g, x, y, None).unwrap();
        if let Some(count) = enumerate_geodesics(&pg, x, y, 10_000) {
            assert_eq!(dag.count(), count);
            assert_eq!(dag.exact_count(), count.into());
        }
    }
}

#[test]
fn restricted_distance_matches_induced_subgraph() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..40 {
        let g = random_graph(&mut rng);
        let l = g.lattice().clone();
        let centre: Vec<f64> = (0..l.dim()).map(|_| rng.random_range(0.0..l.side() as f64)).collect();
        let region = Region::ball(&centre, rng.random_range(1.0..l.side() as f64));
        let mask = region.mask(&l);
        let inside: Vec<usize> = (0..l.len()).filter(|&v| mask[v]).collect();
        if inside.is_empty() {
            continue;
        }
        let x = inside[rng.random_range(0..inside.len())];
        let pg = to_petgraph(&g, |v| mask[v]);
        let oracle = dijkstra_from(&pg, x);
        for &y in &inside {
            let got = distance(&g, x, y, Some(&region)).unwrap();
            assert_eq!(got, oracle.get(&NodeIndex::new(y)).copied());
        }
        let outside = (0..l.len()).find(|&v| !mask[v]);
        if let Some(o) = outside {
            assert!(matches!(
                distance(&g, o, x, Some(&region)),
                Err(lrplab_core::Error::VertexOutside(_))
            ));
        }
    }
}

#[test]
fn sampled_geodesics_are_shortest_paths() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..30 {
        let g = random_graph(&mut rng);
        let x = rng.random_range(0..g.vertex_count());
        let y = rng.random_range(0..g.vertex_count());
        let dag = geodesic_dag(&g, x, y, None).unwrap();
        let path = dag.sample_geodesic(&mut rng);
        assert_eq!(path.len() as u32, dag.length + 1);
        assert_eq!((path[0], *path.last().unwrap()), (x, y));
        for w in path.windows(2) {
            assert!(g.has_edge(w[0], w[1]));
        }
    }
}

#[test]
fn diameter_matches_all_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let g = random_graph(&mut rng);
        let pg = to_petgraph(&g, |_| true);
        let truth = (0..g.vertex_count())
            .map(|v| dijkstra_from(&pg, v).values().copied().max().unwrap())
            .max()
            .unwrap();
        let d = diameter(&g, &Region::Whole).unwrap();
        assert!(d.exact);
        assert_eq!(d.value, truth);
    }
}

#[test]
fn shortcuts_overlay_acts_like_added_edges() {
    let config = ModelConfig::new(1, 0.5, 30, 1).unwrap();
    let g = LrpGraph::nearest_only(config).unwrap();
    let over = WithShortcuts::new(&g, [(0usize, 20usize)]);
    assert_eq!(distance(&over, 0, 29, None).unwrap(), Some(10));
    let real = LrpGraph::from_long_edges(config, vec![(0, 20)]).unwrap();
    assert_eq!(distance(&real, 0, 29, None).unwrap(), Some(10));
}

#[test]
fn set_distance_rejects_empty_sets() {
    let config = ModelConfig::new(2, 1.0, 6, 1).unwrap();
    let g = LrpGraph::nearest_only(config).unwrap();
    let far = Region::ball(&[100.0, 100.0], 1.0);
    let near = Region::ball(&[0.0, 0.0], 1.0);
    assert!(set_distance(&g, &far, &near, &Region::Whole).is_err());
    // The Euclidean unit ball at the origin holds (0,0), (1,0), (0,1); the
    // closest of these is 5 sup-norm steps from (5,5).
    assert_eq!(
        set_distance(&g, &near, &Region::ball(&[5.0, 5.0], 0.5), &Region::Whole).unwrap(),
        Some(5)
    );
    let square = Region::cube(&[0.5, 0.5], 1.0);
    assert_eq!(
        set_distance(&g, &square, &Region::ball(&[5.0, 5.0], 0.5), &Region::Whole).unwrap(),
        Some(4)
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn distances_are_a_metric(seed in any::<u64>(), n in 5u64..40) {
        let config = ModelConfig::new(1, 1.0, n, seed).unwrap();
        let g = GraphSampler::new(&config).unwrap().sample(0);
        let fields: Vec<DistanceField> = (0..n as usize)
            .map(|v| distance_field(&g, &[v], None).unwrap())
            .collect();
        for a in 0..n as usize {
            prop_assert_eq!(fields[a].dist[a], 0);
            for b in 0..n as usize {
                prop_assert_eq!(fields[a].dist[b], fields[b].dist[a]);
                // Nearest-neighbour edges bound every distance by |a − b|.
                prop_assert!(fields[a].dist[b] as usize <= a.abs_diff(b));
                for c in 0..n as usize {
                    prop_assert!(fields[a].dist[c] <= fields[a].dist[b] + fields[b].dist[c]);
                }
            }
        }
    }

    #[test]
    fn restriction_never_shortens(seed in any::<u64>(), r in 1.0f64..6.0) {
        let config = ModelConfig::new(2, 1.0, 8, seed).unwrap();
        let g = GraphSampler::new(&config).unwrap().sample(1);
        let region = Region::ball(&[3.5, 3.5], r);
        let mask = region.mask(g.lattice());
        let inside: Vec<usize> = (0..64).filter(|&v| mask[v]).collect();
        prop_assume!(inside.len() >= 2);
        let (x, y) = (inside[0], inside[inside.len() - 1]);
        let free = distance(&g, x, y, None).unwrap().unwrap();
        if let Some(restricted) = distance(&g, x, y, Some(&region)).unwrap() {
            prop_assert!(restricted >= free);
        }
    }
}
