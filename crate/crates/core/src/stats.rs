//! Small statistics toolkit: medians, least squares, bootstrap, rank
//! correlation and goodness-of-fit tests.

use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Empirical median with linear interpolation between the two middle order
/// statistics for even sample sizes.
pub fn median(values: &[f64]) -> Option<f64> {
    quantile(values, 0.5)
}

/// Type-7 quantile (linear interpolation of order statistics).
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(quantile_sorted(&v, q))
}

pub fn quantile_sorted(v: &[f64], q: f64) -> f64 {
    let h = (v.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Unbiased sample variance.
pub fn variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (values.len() as f64 - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of y on x. Requires at least two distinct x
/// values. A constant response gives slope 0 and r² = 1.
pub fn ols(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::DegenerateFit("need at least two points"));
    }
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateFit("all x values coincide"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 {
        (sxy * sxy / (sxx * syy)).min(1.0)
    } else {
        1.0
    };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Percentile interval of `level` (e.g. 0.95) from bootstrap replicates.
pub fn percentile_interval(mut reps: Vec<f64>, level: f64) -> (f64, f64) {
    reps.sort_by(f64::total_cmp);
    let a = (1.0 - level) / 2.0;
    (quantile_sorted(&reps, a), quantile_sorted(&reps, 1.0 - a))
}

/// Bootstrap percentile interval of `stat` over resamples of `data`.
pub fn bootstrap_ci(
    data: &[f64],
    resamples: usize,
    level: f64,
    rng: &mut impl Rng,
    stat: impl Fn(&[f64]) -> f64,
) -> (f64, f64) {
    let mut buf = vec![0.0; data.len()];
    let reps = (0..resamples)
        .map(|_| {
            for slot in buf.iter_mut() {
                *slot = data[rng.random_range(0..data.len())];
            }
            stat(&buf)
        })
        .collect();
    percentile_interval(reps, level)
}

/// Average ranks (1-based) with ties sharing the mean rank.
pub fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let mx = mean(x);
    let my = mean(y);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Spearman {
    pub rho: f64,
    /// One-sided p-value for a decreasing trend (rho < 0).
    pub p_decreasing: f64,
    /// Whether the p-value came from full enumeration of permutations.
    pub exact: bool,
}

/// Largest sample size for which the permutation distribution is
/// enumerated exactly.
pub const SPEARMAN_EXACT_MAX: usize = 9;

/// Spearman rank correlation of y against x with a one-sided p-value for
/// a decreasing trend.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Spearman> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::DegenerateFit("need at least three points"));
    }
    let rx = ranks(x);
    let ry = ranks(y);
    let rho = pearson(&rx, &ry);
    let m = x.len();
    if m <= SPEARMAN_EXACT_MAX {
        let mut perm: Vec<usize> = (0..m).collect();
        let mut permuted = vec![0.0; m];
        let (mut hits, mut total) = (0u64, 0u64);
        loop {
            for (slot, &p) in permuted.iter_mut().zip(&perm) {
                *slot = ry[p];
            }
            if pearson(&rx, &permuted) <= rho + 1e-12 {
                hits += 1;
            }
            total += 1;
            if !next_permutation(&mut perm) {
                break;
            }
        }
        return Ok(Spearman {
            rho,
            p_decreasing: hits as f64 / total as f64,
            exact: true,
        });
    }
    let df = (m - 2) as f64;
    let t = rho * (df / (1.0 - rho * rho).max(1e-300)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df is positive");
    Ok(Spearman {
        rho,
        p_decreasing: dist.cdf(t),
        exact: false,
    })
}

fn next_permutation(v: &mut [usize]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Two-sample Kolmogorov–Smirnov statistic and asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = (na * nb / (na + nb)).sqrt();
    let lambda = (ne + 0.12 + 0.11 / ne) * d;
    (d, kolmogorov_sf(lambda))
}

/// Survival function of the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let term = (-2.0 * (k as f64 * lambda).powi(2)).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Chi-square statistic after merging bins (from both tails inwards)
/// until each expected count is at least `min_expected`. Returns the
/// statistic and the number of merged bins.
pub fn chi_square_binned(observed: &[u64], expected: &[f64], min_expected: f64) -> (f64, usize) {
    assert_eq!(observed.len(), expected.len());
    let mut bins: Vec<(f64, f64)> = observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| (o as f64, e))
        .collect();
    // Merge from the right, then from the left.
    while bins.len() > 1 && bins[bins.len() - 1].1 < min_expected {
        let last = bins.pop().expect("nonempty");
        let prev = bins.last_mut().expect("nonempty");
        prev.0 += last.0;
        prev.1 += last.1;
    }
    while bins.len() > 1 && bins[0].1 < min_expected {
        let first = bins.remove(0);
        bins[0].0 += first.0;
        bins[0].1 += first.1;
    }
    // Interior bins below the threshold are merged into their right
    // neighbour.
    let mut merged: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for b in bins {
        acc.0 += b.0;
        acc.1 += b.1;
        if acc.1 >= min_expected {
            merged.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.1 > 0.0 || acc.0 > 0.0 {
        match merged.last_mut() {
            Some(last) => {
                last.0 += acc.0;
                last.1 += acc.1;
            }
            None => merged.push(acc),
        }
    }
    let stat = merged
        .iter()
        .filter(|b| b.1 > 0.0)
        .map(|&(o, e)| (o - e).powi(2) / e)
        .sum();
    (stat, merged.len())
}

/// Upper tail of the chi-square distribution.
pub fn chi_square_sf(stat: f64, df: f64) -> f64 {
    if df <= 0.0 {
        return 1.0;
    }
    1.0 - ChiSquared::new(df).expect("df is positive").cdf(stat)
}

/// Standard error of a binomial proportion estimate.
pub fn binomial_se(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Wilson score interval at normal quantile `z`.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn medians_interpolate() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn ols_recovers_lines() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 0.7 * v - 2.0).collect();
        let f = ols(&x, &y).unwrap();
        assert!((f.slope - 0.7).abs() < 1e-14);
        assert!((f.intercept + 2.0).abs() < 1e-14);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
        assert!(ols(&[1.0, 1.0], &[2.0, 3.0]).is_err());
        assert_eq!(ols(&x, &[5.0; 4]).unwrap().slope, 0.0);
    }

    #[test]
    fn ranks_share_ties() {
        assert_eq!(ranks(&[10.0, 20.0, 10.0, 5.0]), vec![2.5, 4.0, 2.5, 1.0]);
    }

    #[test]
    fn spearman_exact_extremes() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let s = spearman(&x, &[5.0, 4.0, 3.0, 2.0, 1.0]).unwrap();
        assert!((s.rho + 1.0).abs() < 1e-12);
        assert!((s.p_decreasing - 1.0 / 120.0).abs() < 1e-12);
        let s = spearman(&x, &x).unwrap();
        assert!((s.p_decreasing - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ks_identical_and_disjoint() {
        let a: Vec<f64> = (0..200).map(f64::from).collect();
        let (d, p) = ks_two_sample(&a, &a);
        assert_eq!(d, 0.0);
        assert!(p > 0.99);
        let b: Vec<f64> = (1000..1200).map(f64::from).collect();
        let (d, p) = ks_two_sample(&a, &b);
        assert_eq!(d, 1.0);
        assert!(p < 1e-10);
    }

    #[test]
    fn chi_square_merges_sparse_tails() {
        let (stat, bins) =
            chi_square_binned(&[50, 30, 15, 4, 1], &[50.0, 30.0, 15.0, 4.0, 1.0], 5.0);
        assert_eq!(bins, 4);
        assert!(stat.abs() < 1e-12);
        assert!((chi_square_sf(3.841_458_820_694_124, 1.0) - 0.05).abs() < 1e-9);
    }

    #[test]
    fn wilson_contains_estimate() {
        let (lo, hi) = wilson_interval(30, 100, 1.96);
        assert!(lo < 0.3 && 0.3 < hi);
    }
}
