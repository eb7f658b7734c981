//! Edge probabilities of the critical long-range percolation model.
//!
//! Two distinct vertices i, j of Z^d are joined with probability one when
//! ‖i − j‖∞ = 1 and otherwise with probability `1 − exp(−β I(j − i))`, where
//!
//! ```text
//! I(k) = ∫_{V1(0)} ∫_{V1(k)} |u − v|^{−2d} dv du
//! ```
//!
//! over unit cubes. Writing s = v − u − k reduces the 2d-dimensional
//! integral to a d-dimensional one against the tent weight Π(1 − |s_i|) on
//! [−1, 1]^d, which is smooth on each orthant piece and is integrated with a
//! tensor Gauss–Legendre rule. Far from the origin the second-order moment
//! expansion `|k|^{−2d} (1 + d(d+2)/(6|k|²))` is used instead.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature::GaussLegendre;

/// Radius (sup-norm) above which the closed asymptotic form replaces
/// quadrature.
pub const DEFAULT_ASYMPTOTIC_THRESHOLD: u64 = 64;
/// Relative accuracy certified for every stored integral.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub d: usize,
    pub beta: f64,
    pub n: u64,
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(d: usize, beta: f64, n: u64, seed: u64) -> Result<Self> {
        let c = Self { d, beta, n, seed };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.d > 3 {
            return Err(invalid("d", format!("{} (supported: 1, 2, 3)", self.d)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(invalid("beta", format!("{} (must be positive)", self.beta)));
        }
        if self.n < 2 {
            return Err(invalid("n", format!("{} (must be at least 2)", self.n)));
        }
        Ok(())
    }
}

fn sup_norm(k: &[f64]) -> f64 {
    k.iter().fold(0.0f64, |m, c| m.max(c.abs()))
}

/// Tent-weighted integral of |k + s|^{-2d} over s ∈ [−1, 1]^d using `panels`
/// sub-panels per half axis and the given rule.
fn tent_integral(k: &[f64], rule: &GaussLegendre, panels: usize) -> f64 {
    let d = k.len();
    // One-dimensional node list (offset s, weight including the tent).
    let h = 1.0 / panels as f64;
    let mut axis: Vec<(f64, f64)> = Vec::with_capacity(2 * panels * rule.nodes.len());
    for p in 0..panels {
        let lo = p as f64 * h;
        for (s, w) in rule.mapped(lo, lo + h) {
            axis.push((s, w * (1.0 - s)));
            axis.push((-s, w * (1.0 - s)));
        }
    }
    let exponent = -(d as f64);
    match d {
        1 => axis
            .iter()
            .map(|&(s, w)| {
                let t = k[0] + s;
                w * (t * t).powf(exponent)
            })
            .sum(),
        2 => {
            let mut acc = 0.0;
            for &(s0, w0) in &axis {
                let t0 = k[0] + s0;
                let t0 = t0 * t0;
                let mut row = 0.0;
                for &(s1, w1) in &axis {
                    let t1 = k[1] + s1;
                    let r2 = t0 + t1 * t1;
                    row += w1 / (r2 * r2);
                }
                acc += w0 * row;
            }
            acc
        }
        _ => {
            // Generic odometer over d axes.
            let m = axis.len();
            let mut idx = vec![0usize; d];
            let mut acc = 0.0;
            loop {
                let mut w = 1.0;
                let mut r2 = 0.0;
                for (a, &i) in idx.iter().enumerate() {
                    let (s, wi) = axis[i];
                    w *= wi;
                    let t = k[a] + s;
                    r2 += t * t;
                }
                acc += w * r2.powf(exponent);
                let mut a = 0;
                loop {
                    idx[a] += 1;
                    if idx[a] < m {
                        break;
                    }
                    idx[a] = 0;
                    a += 1;
                    if a == d {
                        return acc;
                    }
                }
            }
        }
    }
}

/// Second-order moment expansion of I(k), accurate to O(|k|^{-2d-4}).
pub fn asymptotic_integral(k: &[f64]) -> f64 {
    let d = k.len() as f64;
    let r2: f64 = k.iter().map(|c| c * c).sum();
    r2.powf(-d) * (1.0 + d * (d + 2.0) / (6.0 * r2))
}

/// Integral of |u − v|^{−2d} over u ∈ V1(0), v ∈ V1(k) for a real
/// displacement with ‖k‖∞ > 1 (the cubes are separated), computed by tensor
/// Gauss–Legendre quadrature to relative accuracy `tolerance`.
pub fn unit_cube_pair_integral(k: &[f64], tolerance: f64) -> Result<f64> {
    if k.is_empty() {
        return Err(invalid("d", "dimension must be at least 1"));
    }
    if !(tolerance > 0.0) {
        return Err(invalid("tolerance", "must be positive"));
    }
    if !(sup_norm(k) > 1.0) {
        return Err(Error::NotLongDisplacement(
            k.iter().map(|c| c.round() as i64).collect(),
        ));
    }
    let coarse = GaussLegendre::new(12);
    let fine = GaussLegendre::new(16);
    // Closer cubes need more panels; separation ≥ 1 keeps this short.
    let mut panels = if sup_norm(k) < 3.0 { 2 } else { 1 };
    loop {
        let a = tent_integral(k, &coarse, panels);
        let b = tent_integral(k, &fine, panels);
        if ((a - b) / b).abs() <= tolerance * 0.1 || panels >= 64 {
            if ((a - b) / b).abs() > tolerance {
                return Err(Error::Quadrature(tolerance));
            }
            return Ok(b);
        }
        panels *= 2;
    }
}

/// The kernel integral I(k) for an integer long displacement (‖k‖∞ ≥ 2).
pub fn kernel_integral(k: &[i64], tolerance: f64) -> Result<f64> {
    let sup = k.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0);
    if sup <= 1 {
        return Err(Error::NotLongDisplacement(k.to_vec()));
    }
    let kf: Vec<f64> = k.iter().map(|&c| c as f64).collect();
    unit_cube_pair_integral(&kf, tolerance)
}

/// Probability that the edge with displacement `k` is present.
pub fn edge_probability(k: &[i64], beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(invalid("beta", "must be positive"));
    }
    let sup = k.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0);
    match sup {
        0 => Err(Error::NotLongDisplacement(k.to_vec())),
        1 => Ok(1.0),
        _ => Ok(probability_from_integral(
            beta,
            kernel_integral(k, DEFAULT_TOLERANCE)?,
        )),
    }
}

pub fn probability_from_integral(beta: f64, integral: f64) -> f64 {
    -(-beta * integral).exp_m1()
}

/// Canonical representative of a displacement class: absolute coordinates
/// sorted in descending order.
pub fn canonical_class(k: &[i64]) -> Vec<u64> {
    let mut c: Vec<u64> = k.iter().map(|x| x.unsigned_abs()).collect();
    c.sort_unstable_by(|a, b| b.cmp(a));
    c
}

/// Number of displacement vectors (signed permutations) in a class.
pub fn class_size(class: &[u64]) -> u64 {
    let d = class.len();
    let mut perms: u64 = (1..=d as u64).product();
    let mut i = 0;
    while i < d {
        let mut j = i;
        while j < d && class[j] == class[i] {
            j += 1;
        }
        perms /= (1..=(j - i) as u64).product::<u64>();
        i = j;
    }
    let nonzero = class.iter().filter(|&&c| c != 0).count() as u32;
    perms << nonzero
}

/// All canonical classes with sup-norm in [lo, hi], ordered by sup-norm and
/// then lexicographically.
pub fn classes_in_range(d: usize, lo: u64, hi: u64) -> Vec<Vec<u64>> {
    fn rec(prefix: &mut Vec<u64>, d: usize, max: u64, out: &mut Vec<Vec<u64>>) {
        if prefix.len() == d {
            out.push(prefix.clone());
            return;
        }
        for c in (0..=max).rev() {
            prefix.push(c);
            rec(prefix, d, c, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for r in lo..=hi {
        let start = out.len();
        let mut prefix = vec![r];
        rec(&mut prefix, d, r, &mut out);
        out[start..].reverse();
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelEntry {
    pub class: Vec<u64>,
    pub integral: f64,
    pub probability: f64,
}

/// Table of I_k and p_k per canonical class with 2 ≤ ‖k‖∞ ≤ max_radius.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DisplacementKernel {
    pub d: usize,
    pub beta: f64,
    pub max_radius: u64,
    pub asymptotic_threshold: u64,
    pub tolerance: f64,
    pub entries: Vec<KernelEntry>,
}

impl DisplacementKernel {
    pub fn build(d: usize, beta: f64, max_radius: u64) -> Result<Self> {
        Self::build_with(
            d,
            beta,
            max_radius,
            DEFAULT_ASYMPTOTIC_THRESHOLD,
            DEFAULT_TOLERANCE,
        )
    }

    pub fn build_with(
        d: usize,
        beta: f64,
        max_radius: u64,
        asymptotic_threshold: u64,
        tolerance: f64,
    ) -> Result<Self> {
        if d == 0 {
            return Err(invalid("d", "dimension must be at least 1"));
        }
        if !(beta > 0.0) {
            return Err(invalid("beta", "must be positive"));
        }
        let mut entries = Vec::new();
        if max_radius >= 2 {
            for class in classes_in_range(d, 2, max_radius) {
                let kf: Vec<f64> = class.iter().map(|&c| c as f64).collect();
                let integral = if class[0] > asymptotic_threshold {
                    asymptotic_integral(&kf)
                } else {
                    unit_cube_pair_integral(&kf, tolerance)?
                };
                entries.push(KernelEntry {
                    probability: probability_from_integral(beta, integral),
                    class,
                    integral,
                });
            }
        }
        Ok(Self {
            d,
            beta,
            max_radius,
            asymptotic_threshold,
            tolerance,
            entries,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, k: &[i64]) -> Option<&KernelEntry> {
        let class = canonical_class(k);
        self.entries
            .binary_search_by(|e| e.class[0].cmp(&class[0]).then_with(|| e.class.cmp(&class)))
            .ok()
            .map(|i| &self.entries[i])
    }
}

/// Expected degree of a vertex of Z^d truncated at sup-norm radius `cutoff`,
/// with a rigorous bound on the omitted tail.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DegreeEstimate {
    pub value: f64,
    pub tail_bound: f64,
}

pub fn expected_degree(beta: f64, d: usize, cutoff: u64) -> Result<DegreeEstimate> {
    if cutoff < 2 {
        return Err(invalid("cutoff", "must be at least 2"));
    }
    if !(beta > 0.0) {
        return Err(invalid("beta", "must be positive"));
    }
    let nearest = 3f64.powi(d as i32) - 1.0;
    let mut long = 0.0;
    // Iterate shell by shell so memory stays flat for large cutoffs.
    for r in 2..=cutoff {
        for class in classes_in_range(d, r, r) {
            let kf: Vec<f64> = class.iter().map(|&c| c as f64).collect();
            let integral = if r > DEFAULT_ASYMPTOTIC_THRESHOLD {
                asymptotic_integral(&kf)
            } else {
                unit_cube_pair_integral(&kf, DEFAULT_TOLERANCE)?
            };
            long += class_size(&class) as f64 * probability_from_integral(beta, integral);
        }
    }
    // Σ_{‖k‖∞ > R} p_k ≤ β Σ I_k ≤ β ∫_{‖w‖∞ ≥ R} ‖w‖∞^{-2d} dw = β 2^d R^{-d}.
    let tail_bound = beta * 2f64.powi(d as i32) / (cutoff as f64).powi(d as i32);
    Ok(DegreeEstimate {
        value: nearest + long,
        tail_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // d = 1 closed form: the second difference of -ln|t|.
    fn closed_form_1d(k: f64) -> f64 {
        2.0 * k.ln() - (k - 1.0).ln() - (k + 1.0).ln()
    }

    #[test]
    fn one_dimensional_values_match_closed_form() {
        let v = kernel_integral(&[2], 1e-12).unwrap();
        assert!((v - (4.0f64 / 3.0).ln()).abs() < 1e-13);
        for k in [3i64, 5, 8, 17, 40] {
            let v = kernel_integral(&[k], 1e-12).unwrap();
            let exact = closed_form_1d(k as f64);
            assert!(((v - exact) / exact).abs() < 1e-11, "k={k}");
        }
    }

    #[test]
    fn quarter_at_distance_two() {
        let p = edge_probability(&[2], 1.0).unwrap();
        assert!((p - 0.25).abs() < 1e-12);
        assert_eq!(edge_probability(&[-1], 1.0).unwrap(), 1.0);
        assert_eq!(edge_probability(&[1, -1], 0.3).unwrap(), 1.0);
        let tiny = edge_probability(&[2], 1e-12).unwrap();
        assert!(tiny > 0.0 && tiny < 1e-11);
    }

    #[test]
    fn rejects_short_displacements() {
        assert!(matches!(
            kernel_integral(&[1, 1], 1e-9),
            Err(Error::NotLongDisplacement(_))
        ));
        assert!(kernel_integral(&[0], 1e-9).is_err());
        assert!(edge_probability(&[0, 0], 1.0).is_err());
    }

    #[test]
    fn symmetric_under_sign_and_permutation() {
        let a = kernel_integral(&[3, 1], 1e-12).unwrap();
        let b = kernel_integral(&[-1, 3], 1e-12).unwrap();
        let c = kernel_integral(&[1, -3], 1e-12).unwrap();
        assert!((a - b).abs() < 1e-15 * a.max(1.0) * 10.0);
        assert!((a - c).abs() < 1e-14);
    }

    #[test]
    fn asymptotic_form_past_threshold() {
        for k in [[65.0, 0.0], [65.0, 40.0], [70.0, 70.0]] {
            let q = unit_cube_pair_integral(&k, 1e-12).unwrap();
            let a = asymptotic_integral(&k);
            assert!(((q - a) / q).abs() < 1e-7, "{k:?}");
        }
        let q = unit_cube_pair_integral(&[65.0], 1e-12).unwrap();
        assert!(((q - asymptotic_integral(&[65.0])) / q).abs() < 1e-7);
    }

    #[test]
    fn large_one_dimensional_limit() {
        let m = 1e4;
        let v = asymptotic_integral(&[m]) * m * m;
        assert!((v - 1.0).abs() < 1e-3);
        let exact = closed_form_1d(m) * m * m;
        assert!((exact - 1.0).abs() < 1e-3);
    }

    #[test]
    fn classes_and_multiplicities() {
        let c = classes_in_range(2, 2, 3);
        assert_eq!(
            c,
            vec![
                vec![2, 0],
                vec![2, 1],
                vec![2, 2],
                vec![3, 0],
                vec![3, 1],
                vec![3, 2],
                vec![3, 3]
            ]
        );
        assert_eq!(class_size(&[2, 0]), 4);
        assert_eq!(class_size(&[2, 1]), 8);
        assert_eq!(class_size(&[2, 2]), 4);
        assert_eq!(class_size(&[5]), 2);
        assert_eq!(class_size(&[3, 3, 0]), 12);
        // Shell of sup-radius r in Z^2 has (2r+1)^2 - (2r-1)^2 = 8r points.
        for r in 2..6u64 {
            let total: u64 = classes_in_range(2, r, r)
                .iter()
                .map(|c| class_size(c))
                .sum();
            assert_eq!(total, 8 * r);
        }
    }

    #[test]
    fn table_invariants() {
        let t = DisplacementKernel::build(2, 0.7, 12).unwrap();
        for e in &t.entries {
            let p = -(-0.7 * e.integral).exp_m1();
            assert_eq!(p, e.probability);
            assert!(e.probability > 0.0 && e.probability < 1.0);
        }
        // Strictly decreasing along each axis direction.
        for r in 2..12i64 {
            let a = t.get(&[r, 1]).unwrap().integral;
            let b = t.get(&[r + 1, 1]).unwrap().integral;
            assert!(b < a);
        }
        assert!(t.get(&[1, 1]).is_none());
        assert_eq!(t.get(&[-3, 5]).unwrap().class, vec![5, 3]);
    }

    #[test]
    fn expected_degree_limits() {
        let small = expected_degree(1e-9, 1, 100).unwrap();
        assert!((small.value - 2.0).abs() < 1e-7);
        let a = expected_degree(0.5, 2, 20).unwrap();
        let b = expected_degree(0.6, 2, 20).unwrap();
        assert!(b.value > a.value);
        assert!(a.value > 8.0);
    }
}
