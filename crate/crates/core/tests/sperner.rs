mod common;

use common::brute_force_sperner;
use lrplab_core::graph::Neighbourhood;
use lrplab_core::metric::distance;
use lrplab_core::sperner::*;
use lrplab_core::{LrpGraph, ModelConfig};
use num::{BigRational, ToPrimitive};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_family(n: u32, rng: &mut impl Rng) -> SetFamily {
    let size = rng.random_range(0..=3 * n as usize);
    let members = (0..size).map(|_| rng.random_range(0..=full_mask(n))).collect();
    SetFamily::new(n, members).unwrap()
}

#[test]
fn classification_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut seen = [0usize; 2];
    for _ in 0..400 {
        let n = rng.random_range(1..=12);
        let family = random_family(n, &mut rng);
        let fast = is_sperner(&family);
        assert_eq!(fast, brute_force_sperner(n, family.members()), "{family:?}");
        assert_eq!(fast, is_sperner_family(&family).is_sperner);
        seen[fast as usize] += 1;
    }
    // Both outcomes must actually be exercised.
    assert!(seen[0] > 20 && seen[1] > 20, "{seen:?}");
}

#[test]
fn generated_families_are_sperner() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for kind in [FamilyKind::AntichainLow, FamilyKind::GreedyMaximal, FamilyKind::RandomLevels] {
        for n in 1..=10 {
            let family = generate_family(kind, n, &mut rng).unwrap();
            assert!(brute_force_sperner(n, family.members()), "{kind:?} n={n}");
        }
    }
}

#[test]
fn probability_and_lym_match_float_sums() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let p = BigRational::new(2.into(), 7.into());
    for _ in 0..50 {
        let n = rng.random_range(1..=14);
        let family = random_family(n, &mut rng);
        let pf: f64 = 2.0 / 7.0;
        let direct: f64 = family
            .members()
            .iter()
            .map(|m| {
                let k = m.count_ones() as i32;
                pf.powi(k) * (1.0 - pf).powi(n as i32 - k)
            })
            .sum();
        let exact = event_probability(&family, &p).unwrap().to_f64().unwrap();
        assert!((exact - direct).abs() <= 1e-14 * direct.max(1e-300));
        let choose = |k: u32| (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
        let lym: f64 = family.members().iter().map(|m| 1.0 / choose(m.count_ones())).sum();
        assert!((lym_sum(&family).to_f64().unwrap() - lym).abs() < 1e-12);
    }
}

#[test]
fn level_families_saturate_lym() {
    for n in 1..=12 {
        for k in 0..=n {
            let lvl = SetFamily::level(n, k).unwrap();
            assert_eq!(lym_sum(&lvl), BigRational::from_integer(1.into()));
            // A full level of size ≤ n/2 is Sperner via the upward witness.
            if 2 * k <= n {
                assert!(is_sperner(&lvl));
            }
        }
    }
}

#[test]
fn power_set_is_not_sperner_and_bound_check_refuses_it() {
    let family = SetFamily::power_set(6).unwrap();
    assert!(!brute_force_sperner(6, family.members()));
    let p = parse_rational("1/2").unwrap();
    assert!(matches!(sperner_bound_check(&family, &p), Err(lrplab_core::Error::NotSperner)));
}

#[test]
fn log_central_term_matches_exact_value() {
    for n in [5u32, 17, 40] {
        for (a, b) in [(1, 2), (1, 3), (9, 10)] {
            let p = BigRational::new(a.into(), b.into());
            let (central, _) = central_term(n, &p);
            let logged = log_central_term(n as u64, a as f64 / b as f64);
            assert!((logged - central.to_f64().unwrap().ln()).abs() < 1e-10);
        }
    }
    // Stays finite where the exact value would be astronomically expensive.
    let big = scaled_sperner_bound(1 << 30, 0.5);
    assert!(big.is_finite() && (big - 4.0 * (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-3);
}

#[test]
fn window_family_records_every_pattern() {
    let config = ModelConfig::new(1, 1.0, 40, 0).unwrap();
    let g = LrpGraph::nearest_only(config).unwrap();
    let shortcuts = [(0usize, 10usize), (10, 25), (25, 39), (5, 30), (0, 39)];
    let x = 0;
    let y = 39;
    let w = distance_window_family(&g, &shortcuts, x, y, 20.0, 15.0).unwrap();
    for mask in 0u32..32 {
        let on: Vec<(u64, u64)> = (0..5)
            .filter(|b| mask >> b & 1 == 1)
            .map(|b| (shortcuts[b].0 as u64, shortcuts[b].1 as u64))
            .collect();
        let real = LrpGraph::from_long_edges(config, on).unwrap();
        let d = distance(&real, x, y, None).unwrap().unwrap();
        assert_eq!(w.distances[mask as usize], d);
        assert_eq!(w.family.contains(mask), d > 5 && d < 35);
    }
    assert_eq!(w.report.is_sperner, brute_force_sperner(5, w.family.members()));
    assert_eq!(g.vertex_count(), 40);
}

#[test]
fn family_files_round_trip() {
    let family = SetFamily::new(5, vec![0, 0b10101, 0b00011]).unwrap();
    let mut buf = Vec::new();
    write_family(&family, &mut buf).unwrap();
    assert_eq!(read_family(&buf[..]).unwrap(), family);
    assert!(read_family("n=3\n4\n".as_bytes()).is_err());
    assert!(read_family("x\n".as_bytes()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chain_holds_for_every_sperner_family(seed in any::<u64>(), n in 1u32..=12, num in 1i64..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let family = generate_family(FamilyKind::GreedyMaximal, n, &mut rng).unwrap();
        let p = BigRational::new(num.into(), 20.into());
        let report = sperner_bound_check(&family, &p).unwrap();
        prop_assert!(report.holds());
        prop_assert!(report.lym <= BigRational::from_integer(4.into()));
    }

    #[test]
    fn antichains_are_sperner(seed in any::<u64>(), n in 1u32..=12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let family = generate_family(FamilyKind::AntichainLow, n, &mut rng).unwrap();
        for &a in family.members() {
            for &b in family.members() {
                prop_assert!(a == b || (a & b != a && a & b != b));
            }
        }
        prop_assert!(is_sperner(&family));
        prop_assert!(lym_sum(&family) <= BigRational::from_integer(1.into()));
    }
}
