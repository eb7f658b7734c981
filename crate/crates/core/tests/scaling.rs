mod common;

use common::{enumerate_geodesics, to_petgraph};
use lrplab_core::metric::distance;
use lrplab_core::rng::RngStream;
use lrplab_core::scaling::*;
use lrplab_core::stats::*;
use lrplab_core::ModelConfig;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn all_permutations(m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in all_permutations(m - 1) {
        for slot in 0..=p.len() {
            let mut q = p.clone();
            q.insert(slot, m - 1);
            out.push(q);
        }
    }
    out
}

/// Tie-free Spearman via 1 − 6Σd²/(m(m² − 1)).
fn rho_no_ties(rx: &[usize], ry: &[usize]) -> f64 {
    let m = rx.len() as f64;
    let d2: f64 = rx.iter().zip(ry).map(|(&a, &b)| (a as f64 - b as f64).powi(2)).sum();
    1.0 - 6.0 * d2 / (m * (m * m - 1.0))
}

#[test]
fn spearman_exact_p_matches_permutation_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for m in 3..=7usize {
        let perms = all_permutations(m);
        for _ in 0..10 {
            let y: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
            let x: Vec<f64> = (0..m).map(|i| i as f64).collect();
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| y[a].total_cmp(&y[b]));
            let mut ry = vec![0; m];
            for (r, &i) in order.iter().enumerate() {
                ry[i] = r;
            }
            let rx: Vec<usize> = (0..m).collect();
            let rho = rho_no_ties(&rx, &ry);
            let hits = perms.iter().filter(|p| rho_no_ties(&rx, p) <= rho + 1e-12).count();
            let got = spearman(&x, &y).unwrap();
            assert!(got.exact);
            assert!((got.rho - rho).abs() < 1e-12);
            assert!((got.p_decreasing - hits as f64 / perms.len() as f64).abs() < 1e-12);
        }
    }
    let down: Vec<f64> = (0..20).map(|i| -(i as f64)).collect();
    let up: Vec<f64> = (0..20).map(f64::from).collect();
    let s = spearman(&up, &down).unwrap();
    assert!(!s.exact && s.rho < -0.999 && s.p_decreasing < 1e-6);
}

#[test]
fn ks_statistic_matches_direct_supremum() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let a: Vec<f64> = (0..rng.random_range(5..60)).map(|_| rng.random_range(0..10) as f64).collect();
        let b: Vec<f64> = (0..rng.random_range(5..60)).map(|_| rng.random_range(0..12) as f64).collect();
        let cdf = |v: &[f64], t: f64| v.iter().filter(|&&x| x <= t).count() as f64 / v.len() as f64;
        let want = a
            .iter()
            .chain(&b)
            .map(|&t| (cdf(&a, t) - cdf(&b, t)).abs())
            .fold(0.0, f64::max);
        let (stat, p) = ks_two_sample(&a, &b);
        assert!((stat - want).abs() < 1e-12);
        assert!((0.0..=1.0).contains(&p));
    }
    // Tabulated Kolmogorov survival values.
    assert!((kolmogorov_sf(1.0) - 0.269_999_671).abs() < 1e-8);
    assert!((kolmogorov_sf(1.358) - 0.050_042).abs() < 1e-4);
}

#[test]
fn chi_square_and_wilson_match_reference_formulas() {
    for (x, k) in [(3.0, 2.0), (12.5, 7.0), (40.0, 30.0), (0.1, 1.0)] {
        let want = 1.0 - ChiSquared::new(k).unwrap().cdf(x);
        assert!((chi_square_sf(x, k) - want).abs() < 1e-12);
    }
    let (s, n, z) = (17usize, 40usize, 1.96);
    let p = s as f64 / n as f64;
    let centre = (p + z * z / (2.0 * n as f64)) / (1.0 + z * z / n as f64);
    let half = z / (1.0 + z * z / n as f64) * (p * (1.0 - p) / n as f64 + z * z / (4.0 * (n * n) as f64)).sqrt();
    let (lo, hi) = wilson_interval(s, n, z);
    assert!((lo - (centre - half)).abs() < 1e-12 && (hi - (centre + half)).abs() < 1e-12);
}

#[test]
fn merged_bins_meet_the_minimum() {
    let observed = [1u64, 0, 3, 20, 40, 25, 8, 2, 1];
    let expected = [0.5, 1.0, 4.0, 18.0, 42.0, 24.0, 7.5, 2.0, 1.0];
    let (stat, bins) = chi_square_binned(&observed, &expected, 5.0);
    // {0,1,2}, 3, 4, 5, {6,7,8}.
    assert_eq!(bins, 5);
    let groups = [(4.0, 5.5), (20.0, 18.0), (40.0, 42.0), (25.0, 24.0), (11.0, 10.5)];
    let want: f64 = groups.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    assert!((stat - want).abs() < 1e-12);
}

#[test]
fn scaling_fit_recovers_a_synthetic_exponent() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let ns = [32u64, 64, 128, 256, 512, 1024];
    let samples: Vec<ScaleSample> = ns
        .iter()
        .map(|&n| ScaleSample {
            n,
            distances: (0..200)
                .map(|_| (2.0 * (n as f64).powf(0.6) * rng.random_range(0.8..1.25)).round() as u32)
                .collect(),
        })
        .collect();
    let fit = estimate_scaling(&samples, RngStream::new(1, 0, 0)).unwrap();
    assert!((fit.theta_hat - 0.6).abs() < 0.02, "{}", fit.theta_hat);
    assert!(fit.ci.0 <= fit.theta_hat && fit.theta_hat <= fit.ci.1);
    for p in &fit.points {
        assert!(p.ci_lo <= p.a_n && p.a_n <= p.ci_hi);
    }
    let again = estimate_scaling(&samples, RngStream::new(1, 0, 0)).unwrap();
    assert_eq!(fit, again);
}

#[test]
fn ecdf_queries_match_counting() {
    let s = ScaleSample { n: 8, distances: vec![4, 6, 6, 6, 8, 9, 12, 6, 4] };
    let e = Ecdf::from_sample(&s);
    assert_eq!(e.a_n, 6.0);
    for t in [0.0, 0.5, 0.66, 1.0, 1.4, 2.0, 3.0] {
        let want = s.distances.iter().filter(|&&d| d as f64 / 6.0 <= t).count() as f64 / 9.0;
        assert_eq!(e.cdf(t), want);
    }
    assert!((e.max_atom() - 4.0 / 9.0).abs() < 1e-15);
    let w = window_mass(&e, 1.0, 0.4).unwrap();
    let want = s.distances.iter().filter(|&&d| (d as f64 / 6.0 - 1.0).abs() < 0.4).count() as f64 / 9.0;
    assert!((w - want).abs() < 1e-15);
    assert!(window_mass(&e, 1.0, 0.0).is_err());
}

#[test]
fn measured_distances_and_multiplicities_match_oracles() {
    let t = ModelConfig::new(2, 1.0, 2, 3).unwrap();
    let setup = ScaleSetup::new(&t, 6, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for r in 0..8 {
        let g = setup.sample(3, r);
        let d = setup.measure(3, r);
        assert_eq!(Some(d), distance(&g, setup.source, setup.target, None).unwrap());
        assert!(d <= 6);
        let (count, saturated, overlap) = multiplicity_on_graph(&g, setup.source, setup.target, &mut rng).unwrap();
        let pg = to_petgraph(&g, |_| true);
        if let Some(want) = enumerate_geodesics(&pg, setup.source, setup.target, 1_000_000) {
            assert!(!saturated);
            assert_eq!(count, want);
        }
        assert!((0.0..=1.0).contains(&overlap));
        if count == 1 {
            assert_eq!(overlap, 1.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ols_recovers_exact_lines(a in -5.0f64..5.0, b in -5.0f64..5.0, m in 2usize..20) {
        let x: Vec<f64> = (0..m).map(|i| i as f64 * 0.7 - 3.0).collect();
        let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let f = ols(&x, &y).unwrap();
        prop_assert!((f.slope - a).abs() < 1e-9 && (f.intercept - b).abs() < 1e-9);
    }

    #[test]
    fn ranks_average_over_ties(v in proptest::collection::vec(0u8..5, 1..30)) {
        let v: Vec<f64> = v.into_iter().map(f64::from).collect();
        let r = ranks(&v);
        for i in 0..v.len() {
            let below = v.iter().filter(|&&x| x < v[i]).count() as f64;
            let equal = v.iter().filter(|&&x| x == v[i]).count() as f64;
            prop_assert!((r[i] - (below + (equal + 1.0) / 2.0)).abs() < 1e-12);
        }
    }
}
