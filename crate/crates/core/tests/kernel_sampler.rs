mod common;

use common::{kernel_oracle_1d, kernel_oracle_2d};
use lrplab_core::graph_io::{read_binary, read_text, write_binary, write_text};
use lrplab_core::kernel::*;
use lrplab_core::lattice::Lattice;
use lrplab_core::sampler::{positive_representatives, GraphSampler};
use lrplab_core::stats::{chi_square_binned, chi_square_sf, ks_two_sample};
use lrplab_core::{LrpGraph, ModelConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Binomial, Discrete};

#[test]
fn kernel_matches_oracles_in_one_and_two_dimensions() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..25 {
        let k = rng.random_range(2..200i64);
        let got = kernel_integral(&[k], DEFAULT_TOLERANCE).unwrap();
        let want = kernel_oracle_1d(k as f64);
        assert!((got / want - 1.0).abs() < 1e-9, "k={k}");
    }
    for _ in 0..25 {
        let a = rng.random_range(2..40i64);
        let b = rng.random_range(0..=a);
        let got = kernel_integral(&[a, b], DEFAULT_TOLERANCE).unwrap();
        let want = kernel_oracle_2d([a as f64, b as f64]);
        assert!((got / want - 1.0).abs() < 1e-8, "k=({a},{b}): {got} vs {want}");
    }
}

#[test]
fn asymptotic_branch_is_accurate_past_the_threshold() {
    // The neglected term is O(|k|^{-4}) relative.
    for k in [65i64, 100, 400] {
        let tol = 1e-7 * (65.0 / k as f64).powi(4);
        let got = asymptotic_integral(&[k as f64]);
        assert!((got / kernel_oracle_1d(k as f64) - 1.0).abs() < tol, "k={k}");
        let got = asymptotic_integral(&[k as f64, 7.0]);
        assert!((got / kernel_oracle_2d([k as f64, 7.0]) - 1.0).abs() < tol, "k={k}");
    }
}

#[test]
fn kernel_table_agrees_with_direct_evaluation() {
    let table = DisplacementKernel::build(2, 0.7, 12).unwrap();
    for e in &table.entries {
        let k: Vec<i64> = e.class.iter().map(|&c| c as i64).collect();
        let p = edge_probability(&k, 0.7).unwrap();
        assert!((p - e.probability).abs() < 1e-12);
        // Any signed permutation looks up the same entry.
        let flipped = [-k[1], k[0]];
        assert_eq!(table.get(&flipped).unwrap().class, e.class);
    }
}

#[test]
fn class_sizes_partition_the_shell() {
    for d in 1..=3usize {
        for r in 2..6u64 {
            let total: u64 = classes_in_range(d, r, r).iter().map(|c| class_size(c)).sum();
            let shell = (2 * r + 1).pow(d as u32) - (2 * r - 1).pow(d as u32);
            assert_eq!(total, shell, "d={d} r={r}");
            for c in classes_in_range(d, r, r) {
                assert_eq!(2 * positive_representatives(&c).len() as u64, class_size(&c));
            }
        }
    }
}

#[test]
fn expected_degree_matches_direct_sum() {
    let est = expected_degree(1.0, 1, 200).unwrap();
    let direct: f64 = 2.0
        + (2..=200)
            .map(|k| 2.0 * probability_from_integral(1.0, kernel_oracle_1d(k as f64)))
            .sum::<f64>();
    assert!((est.value - direct).abs() < 1e-9);
    assert!((est.tail_bound - 2.0 / 200.0).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kernel_is_symmetric_and_decreasing(a in 2i64..30, b in 0i64..30) {
        let b = b.min(a);
        let base = kernel_integral(&[a, b], 1e-10).unwrap();
        for k in [[-a, b], [b, a], [-b, -a], [a, -b]] {
            let v = kernel_integral(&k, 1e-10).unwrap();
            prop_assert!((v / base - 1.0).abs() < 1e-9);
        }
        let further = kernel_integral(&[a + 1, b], 1e-10).unwrap();
        prop_assert!(further < base);
        let p = edge_probability(&[a, b], 2.0).unwrap();
        prop_assert!(p > 0.0 && p < 1.0);
    }
}

#[test]
fn per_class_counts_follow_the_binomial_law() {
    let config = ModelConfig::new(1, 1.0, 64, 3).unwrap();
    let sampler = GraphSampler::new(&config).unwrap();
    let reps = 400u64;
    let lattice = Lattice::new(1, 64).unwrap();
    let mut counts = vec![vec![0u64; 0]; sampler.plans().len()];
    for (c, plan) in sampler.plans().iter().enumerate() {
        counts[c] = vec![0; plan.candidates as usize + 1];
    }
    for r in 0..reps {
        let g = sampler.sample(r);
        let mut per = vec![0usize; sampler.plans().len()];
        for &(a, b) in g.long_edges() {
            let k = lattice.sup_distance(a as usize, b as usize);
            per[k as usize - 2] += 1;
        }
        for (c, &m) in per.iter().enumerate() {
            counts[c][m] += 1;
        }
    }
    let mut stat = 0.0;
    let mut df = 0.0;
    for (c, plan) in sampler.plans().iter().enumerate() {
        let law = Binomial::new(plan.probability, plan.candidates).unwrap();
        let expected: Vec<f64> = (0..=plan.candidates)
            .map(|m| reps as f64 * law.pmf(m))
            .collect();
        let (s, bins) = chi_square_binned(&counts[c], &expected, 5.0);
        if bins >= 2 {
            stat += s;
            df += (bins - 1) as f64;
        }
    }
    assert!(chi_square_sf(stat, df) > 0.001, "χ² = {stat} on {df} df");
}

#[test]
fn substream_relabelling_leaves_the_law_unchanged() {
    let config = ModelConfig::new(2, 0.8, 10, 9).unwrap();
    let sampler = GraphSampler::new(&config).unwrap();
    let classes = sampler.plans().len() as u64;
    let edges = |relabel: bool| -> Vec<f64> {
        (0..300)
            .map(|r| {
                let g = if relabel {
                    sampler.sample_with(1000 + r, |c| classes - 1 - c as u64)
                } else {
                    sampler.sample(r)
                };
                g.long_edges().len() as f64
            })
            .collect()
    };
    let (_, p) = ks_two_sample(&edges(false), &edges(true));
    assert!(p > 0.001);
}

#[test]
fn sampling_is_deterministic_and_edges_are_long() {
    let config = ModelConfig::new(2, 1.0, 12, 5).unwrap();
    let sampler = GraphSampler::new(&config).unwrap();
    let a = sampler.sample(17);
    let b = sampler.sample(17);
    assert_eq!(a, b);
    assert_ne!(a, sampler.sample(18));
    let lattice = Lattice::new(2, 12).unwrap();
    for &(u, v) in a.long_edges() {
        assert!(u < v);
        assert!(lattice.sup_distance(u as usize, v as usize) >= 2);
    }
    for v in 0..lattice.len() {
        for &u in a.long_neighbours(v) {
            assert!(a.has_edge(u as usize, v));
        }
    }
}

#[test]
fn graph_files_round_trip() {
    let config = ModelConfig::new(2, 1.3, 9, 2).unwrap();
    let g = GraphSampler::new(&config).unwrap().sample(4);
    let mut bin = Vec::new();
    write_binary(&g, &mut bin).unwrap();
    assert_eq!(read_binary(&bin[..]).unwrap(), g);
    let mut txt = Vec::new();
    write_text(&g, &mut txt).unwrap();
    let back: LrpGraph = read_text(&txt[..]).unwrap();
    assert_eq!(back, g);
}
