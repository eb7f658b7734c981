//! Annulus ladders, continuum crossing probabilities, and the firework
//! spreading process that dominates the joint law of the crossing events.
//!
//! The continuum long-edge process puts a Poisson number of edges with mean
//! β∬_{A×B} |u − v|^{−2d} between disjoint sets A and B. For the radially
//! symmetric sets used here the double integral reduces to a one-dimensional
//! integral over the inner radius of a closed-form antiderivative in the outer
//! radius; the remaining integral is done by adaptive Gauss–Kronrod.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernel::{probability_from_integral, unit_cube_pair_integral};
use crate::quadrature::{adaptive, adaptive_to_infinity, Estimate};
use crate::rng::RngStream;
use crate::stats::{binomial_se, ols, LinearFit};

/// Relative tolerance requested from the adaptive quadrature. The certified
/// target is 10^-6; asking for less leaves headroom for the error estimate.
pub const CROSSING_REL_TOL: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Ladder

/// The geometric scale ladder M_1 < M_2 < … < M_K with radii r_i = Σ_{k≤i} M_k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusLadder {
    pub eps: f64,
    pub theta: f64,
    pub c_star1: f64,
    /// Number of scales, ⌈√ln(1/ε)⌉.
    pub k: usize,
    /// Ratio M_{i+1}/M_i.
    pub n_ratio: f64,
    /// M_1 … M_K (index 0 holds M_1).
    pub m: Vec<f64>,
    /// r_0 = 0, r_1, …, r_K.
    pub r: Vec<f64>,
    /// Largest δ with 4δ^{θ/2} ≤ c_star1, i.e. (c_star1/4)^{2/θ}.
    pub delta_max: f64,
}

pub fn build_ladder(eps: f64, theta: f64, c_star1: f64) -> Result<AnnulusLadder> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid("eps", "must lie in (0,1)"));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(invalid("theta", "must lie in (0,1)"));
    }
    if !(c_star1 > 0.0 && c_star1.is_finite()) {
        return Err(invalid("c_star1", "must be positive"));
    }
    let k = (1.0 / eps).ln().sqrt().ceil().max(1.0) as usize;
    let base = 4f64.powf(-(1.0 + 1.0 / theta)) * (c_star1 / eps).powf(1.0 / theta);
    let n_ratio = base.powf(1.0 / k as f64);
    let m1 = (4.0 * eps / c_star1).powf(1.0 / theta);
    if !(n_ratio >= 2.0) {
        return Err(Error::LadderCondition(format!(
            "N = {n_ratio} < 2 (eps = {eps} is too large)"
        )));
    }
    let ladder = AnnulusLadder::from_parts(k, n_ratio, m1)?;
    let total = ladder.total();
    if !(total <= 1.0) {
        return Err(Error::LadderCondition(format!(
            "sum of M_i = {total} > 1 (eps = {eps} is too large)"
        )));
    }
    Ok(AnnulusLadder {
        eps,
        theta,
        c_star1,
        delta_max: (c_star1 / 4.0).powf(2.0 / theta),
        ..ladder
    })
}

impl AnnulusLadder {
    /// A ladder with explicit K, N and M_1; the ε-dependent fields are NaN.
    /// Used for sweeps over N at fixed geometry.
    pub fn from_parts(k: usize, n_ratio: f64, m1: f64) -> Result<Self> {
        if k == 0 {
            return Err(invalid("k", "need at least one scale"));
        }
        if !(n_ratio > 1.0 && n_ratio.is_finite()) {
            return Err(invalid("n_ratio", "must exceed 1"));
        }
        if !(m1 > 0.0 && m1.is_finite()) {
            return Err(invalid("m1", "must be positive"));
        }
        let mut m = Vec::with_capacity(k);
        let mut r = vec![0.0];
        let mut cur = m1;
        for i in 0..k {
            if i > 0 {
                cur *= n_ratio;
            }
            m.push(cur);
            r.push(r[i] + cur);
        }
        Ok(Self {
            eps: f64::NAN,
            theta: f64::NAN,
            c_star1: f64::NAN,
            k,
            n_ratio,
            m,
            r,
            delta_max: f64::NAN,
        })
    }

    /// M_i for 1 ≤ i ≤ K.
    pub fn m_at(&self, i: usize) -> f64 {
        self.m[i - 1]
    }

    pub fn total(&self) -> f64 {
        self.r[self.k]
    }

    /// Closed-form geometric sum M_1 (N^K − 1)/(N − 1).
    pub fn geometric_total(&self) -> f64 {
        self.m[0] * (self.n_ratio.powi(self.k as i32) - 1.0) / (self.n_ratio - 1.0)
    }

    /// Inner radius r_i − M_i/8 of the shell jumped by E_{i,1}; 0 for i = 0.
    pub fn e_inner(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.r[i] - self.m_at(i) / 8.0
        }
    }
}

// ---------------------------------------------------------------------------
// Continuum regions and crossing integrals

/// A region of R^d. Radial regions are centred at the origin; intervals are
/// only meaningful for d = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ContinuumRegion {
    /// Closed ball of the given radius.
    Ball { radius: f64 },
    /// inner ≤ |x| ≤ outer.
    Annulus { inner: f64, outer: f64 },
    /// |x| ≥ radius.
    BallComplement { radius: f64 },
    /// lo ≤ x ≤ hi on the line (either end may be infinite).
    Interval { lo: f64, hi: f64 },
}

impl ContinuumRegion {
    fn radial(&self) -> Option<(f64, f64)> {
        match *self {
            Self::Ball { radius } => Some((0.0, radius)),
            Self::Annulus { inner, outer } => Some((inner, outer)),
            Self::BallComplement { radius } => Some((radius, f64::INFINITY)),
            Self::Interval { .. } => None,
        }
    }

    /// The region as disjoint intervals of the line (d = 1).
    fn line_pieces(&self) -> Vec<(f64, f64)> {
        match *self {
            Self::Interval { lo, hi } => vec![(lo, hi)],
            _ => {
                let (a, b) = self.radial().expect("radial region");
                if a == 0.0 {
                    vec![(-b, b)]
                } else {
                    vec![(-b, -a), (a, b)]
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let (a, b) = match *self {
            Self::Interval { lo, hi } => (lo, hi),
            _ => self.radial().expect("radial region"),
        };
        if a.is_nan() || b.is_nan() || a > b {
            return Err(invalid("region", format!("empty or malformed: {self:?}")));
        }
        if self.radial().is_some() && a < 0.0 {
            return Err(invalid("region", "radii must be nonnegative"));
        }
        Ok(())
    }
}

/// Result of a crossing computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    /// ∬ |u − v|^{−2d} over the region product.
    pub integral: f64,
    /// Quadrature error estimate for `integral`.
    pub error: f64,
    /// 1 − exp(−β · integral).
    pub probability: f64,
}

/// Probability that the continuum process has an edge between `inner` and
/// `outer`.
pub fn crossing_probability(
    d: usize,
    inner: &ContinuumRegion,
    outer: &ContinuumRegion,
    beta: f64,
) -> Result<Crossing> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(invalid("beta", "must be nonnegative and finite"));
    }
    let est = crossing_integral(d, inner, outer)?;
    Ok(Crossing {
        integral: est.value,
        error: est.error,
        probability: probability_from_integral(beta, est.value),
    })
}

/// The double integral ∬_{inner × outer} |u − v|^{−2d} du dv.
pub fn crossing_integral(
    d: usize,
    inner: &ContinuumRegion,
    outer: &ContinuumRegion,
) -> Result<Estimate> {
    if !(1..=3).contains(&d) {
        return Err(invalid(
            "d",
            "crossing integrals are implemented for d in 1..=3",
        ));
    }
    inner.validate()?;
    outer.validate()?;
    if d == 1 {
        let mut value = 0.0;
        let mut error = 0.0;
        for p in inner.line_pieces() {
            for q in outer.line_pieces() {
                let e = interval_pair(p, q)?;
                value += e.value;
                error += e.error;
            }
        }
        return Ok(Estimate { value, error });
    }
    let (Some(p), Some(q)) = (inner.radial(), outer.radial()) else {
        return Err(invalid("region", "intervals are only defined for d = 1"));
    };
    radial_pair(d, p, q)
}

fn zero() -> Estimate {
    Estimate {
        value: 0.0,
        error: 0.0,
    }
}

/// Orders two intervals so the first lies strictly below the second.
fn separate(p: (f64, f64), q: (f64, f64)) -> Result<((f64, f64), (f64, f64))> {
    if p.1 < q.0 {
        Ok((p, q))
    } else if q.1 < p.0 {
        Ok((q, p))
    } else {
        Err(Error::OverlappingRegions)
    }
}

/// ∫_a^b ∫_c^e (t − s)^{−2} dt ds on the line, with b < c.
fn interval_pair(p: (f64, f64), q: (f64, f64)) -> Result<Estimate> {
    if p.0 == p.1 || q.0 == q.1 {
        return Ok(zero());
    }
    let ((a, b), (c, e)) = separate(p, q)?;
    if a == f64::NEG_INFINITY && e == f64::INFINITY {
        return Err(invalid(
            "region",
            "both regions unbounded: the integral diverges",
        ));
    }
    // Put the bounded side on the integration variable.
    if a == f64::NEG_INFINITY {
        // Reflect x -> -x so the lower interval becomes the bounded one.
        return interval_pair((-e, -c), (-b, -a));
    }
    // 1/(c − s) − 1/(e − s), written without the difference.
    let inner = |s: f64| {
        if e.is_finite() {
            (e - c) / ((c - s) * (e - s))
        } else {
            1.0 / (c - s)
        }
    };
    adaptive(inner, a, b, CROSSING_REL_TOL, 0.0)
}

/// Angular-integrated kernel: ∬ |u − v|^{−2d} over the shells of radii s
/// and t, per unit ds dt.
fn radial_kernel(d: usize, s: f64, t: f64) -> f64 {
    use std::f64::consts::PI;
    let (x, y) = (s * s, t * t);
    let w = (t - s) * (t + s);
    match d {
        2 => 4.0 * PI * PI * s * t * (x + y) / w.powi(3),
        3 => 16.0 * PI * PI * x * y * (x + y) / w.powi(4),
        _ => unreachable!("radial kernel only for d = 2, 3"),
    }
}

/// ∫_c^e k_2(s, t) dt for s < c, in closed form. With x = s², Y = t² the
/// antiderivative is 2π²s(−1/(Y − x) − x/(Y − x)²); the difference is
/// expanded so that no two large terms cancel.
fn radial_inner_d2(s: f64, c: f64, e: f64) -> f64 {
    use std::f64::consts::PI;
    let x = s * s;
    let w1 = (c - s) * (c + s);
    let value = if e.is_finite() {
        let w2 = (e - s) * (e + s);
        let dy = (e - c) * (e + c);
        dy / (w1 * w2) + x * dy * (w1 + w2) / (w1 * w1 * w2 * w2)
    } else {
        1.0 / w1 + x / (w1 * w1)
    };
    2.0 * PI * PI * s * value
}

fn radial_pair(d: usize, p: (f64, f64), q: (f64, f64)) -> Result<Estimate> {
    if p.0 == p.1 || q.0 == q.1 {
        return Ok(zero());
    }
    // The reduced kernel is symmetric in (s, t).
    let ((a, b), (c, e)) = separate(p, q)?;
    if d == 2 {
        return adaptive(|s| radial_inner_d2(s, c, e), a, b, CROSSING_REL_TOL, 0.0);
    }
    // d = 3: nested quadrature of the kernel.
    let mut failure = None;
    let outer = adaptive(
        |s| {
            let inner = if e.is_finite() {
                adaptive(|t| radial_kernel(d, s, t), c, e, 1e-11, 0.0)
            } else {
                adaptive_to_infinity(|t| radial_kernel(d, s, t), c, 1e-11, 0.0)
            };
            match inner {
                Ok(v) => v.value,
                Err(err) => {
                    failure = Some(err);
                    0.0
                }
            }
        },
        a,
        b,
        CROSSING_REL_TOL,
        0.0,
    )?;
    match failure {
        Some(err) => Err(err),
        None => Ok(outer),
    }
}

/// P[A_i] and P[E_{i,1}] for one ladder index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingRow {
    pub i: usize,
    pub p_a: f64,
    pub p_e: f64,
}

/// A_i: an edge from B_{r_{i−1}} to the complement of B_{r_{i−1} + M_i/8}.
pub fn prob_a(ladder: &AnnulusLadder, i: usize, d: usize, beta: f64) -> Result<Crossing> {
    check_index(ladder, i)?;
    let r = ladder.r[i - 1];
    crossing_probability(
        d,
        &ContinuumRegion::Ball { radius: r },
        &ContinuumRegion::BallComplement {
            radius: r + ladder.m_at(i) / 8.0,
        },
        beta,
    )
}

/// E_{i,1}: an edge from B_{r_i − M_i/8} to the complement of B_{r_i}.
pub fn prob_e(ladder: &AnnulusLadder, i: usize, d: usize, beta: f64) -> Result<Crossing> {
    check_index(ladder, i)?;
    crossing_probability(
        d,
        &ContinuumRegion::Ball {
            radius: ladder.e_inner(i),
        },
        &ContinuumRegion::BallComplement {
            radius: ladder.r[i],
        },
        beta,
    )
}

fn check_index(ladder: &AnnulusLadder, i: usize) -> Result<()> {
    if i == 0 || i > ladder.k {
        return Err(invalid(
            "i",
            format!("ladder index must lie in 1..={}", ladder.k),
        ));
    }
    Ok(())
}

pub fn crossing_table(ladder: &AnnulusLadder, d: usize, beta: f64) -> Result<Vec<CrossingRow>> {
    (1..=ladder.k)
        .map(|i| {
            Ok(CrossingRow {
                i,
                p_a: prob_a(ladder, i, d, beta)?.probability,
                p_e: prob_e(ladder, i, d, beta)?.probability,
            })
        })
        .collect()
}

/// log P[A_i] against log N over a sweep of ratios at fixed i and M_1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSweep {
    pub d: usize,
    pub i: usize,
    pub points: Vec<(f64, f64)>,
    pub fit: LinearFit,
}

pub fn a_ratio_sweep(d: usize, beta: f64, i: usize, ratios: &[f64]) -> Result<RatioSweep> {
    let mut points = Vec::with_capacity(ratios.len());
    for &n in ratios {
        let ladder = AnnulusLadder::from_parts(i.max(1), n, 1.0)?;
        points.push((n, prob_a(&ladder, i, d, beta)?.probability));
    }
    let x: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateFit(
            "zero crossing probability in the sweep",
        ));
    }
    Ok(RatioSweep {
        d,
        i,
        points,
        fit: ols(&x, &y)?,
    })
}

// ---------------------------------------------------------------------------
// Step laws and the firework process

/// Bound 1 − exp(−c2/(1/8 + 2^{s−1})) on P[L_l ≥ s].
pub fn step_tail(s: u32, c2: f64) -> f64 {
    let s = s.max(1);
    -(-c2 / (0.125 + 2f64.powi(s as i32 - 1))).exp_m1()
}

/// α̃(s) = exp(−c2/(1/8 + 2^s)) for s ≥ 0, and 0 for s < 0.
pub fn alpha_tilde(s: i64, c2: f64) -> f64 {
    if s < 0 {
        0.0
    } else {
        (-c2 / (0.125 + 2f64.powi(s.min(2000) as i32))).exp()
    }
}

/// Law of a single reach L ∈ {0, 1, 2, …}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StepLaw {
    /// P[L ≤ s] = α̃(s).
    AlphaTilde { c2: f64 },
    /// pmf[s] = P[L = s]; mass beyond the vector is zero.
    Discrete { pmf: Vec<f64> },
}

impl StepLaw {
    pub fn alpha_tilde(c2: f64) -> Result<Self> {
        if !(c2 >= 0.0 && c2.is_finite()) {
            return Err(invalid("c2", "must be nonnegative and finite"));
        }
        Ok(Self::AlphaTilde { c2 })
    }

    pub fn discrete(pmf: Vec<f64>) -> Result<Self> {
        if pmf.is_empty() || pmf.iter().any(|p| !(*p >= 0.0)) {
            return Err(invalid(
                "pmf",
                "must be a nonempty vector of nonnegative weights",
            ));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid("pmf", format!("weights sum to {total}, not 1")));
        }
        Ok(Self::Discrete { pmf })
    }

    /// Point mass at `s`.
    pub fn constant(s: usize) -> Self {
        let mut pmf = vec![0.0; s + 1];
        pmf[s] = 1.0;
        Self::Discrete { pmf }
    }

    /// Distribution function P[L ≤ s].
    pub fn cdf(&self, s: i64) -> f64 {
        if s < 0 {
            return 0.0;
        }
        match self {
            Self::AlphaTilde { c2 } => alpha_tilde(s, *c2),
            Self::Discrete { pmf } => {
                let top = (s as usize).min(pmf.len() - 1);
                pmf[..=top].iter().sum::<f64>().min(1.0)
            }
        }
    }

    /// P[L = s].
    pub fn pmf(&self, s: u64) -> f64 {
        match self {
            Self::Discrete { pmf } => pmf.get(s as usize).copied().unwrap_or(0.0),
            Self::AlphaTilde { .. } => self.cdf(s as i64) - self.cdf(s as i64 - 1),
        }
    }

    /// P[L ≥ s].
    pub fn tail(&self, s: i64) -> f64 {
        1.0 - self.cdf(s - 1)
    }

    /// Inversion sampling.
    pub fn sample(&self, rng: &mut impl Rng) -> u64 {
        let u: f64 = rng.random();
        match self {
            Self::AlphaTilde { .. } => {
                let mut s = 0i64;
                // α̃ reaches 1.0 in floating point well before s = 1100.
                while self.cdf(s) < u && s < 1100 {
                    s += 1;
                }
                s as u64
            }
            Self::Discrete { pmf } => {
                let mut acc = 0.0;
                for (s, p) in pmf.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return s as u64;
                    }
                }
                // Rounding left a sliver above the last cumulative sum.
                pmf.iter().rposition(|p| *p > 0.0).unwrap_or(0) as u64
            }
        }
    }
}

/// How the reach of a run is read off its covered sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReachVariant {
    /// Largest covered site index.
    #[default]
    Max,
    /// Smallest covered site index l ≥ 1 (0 when none is covered).
    Min,
}

/// Sites 0, 1, …, k; site l < k throws L_l with its own law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FireworkModel {
    pub k: usize,
    pub laws: Vec<StepLaw>,
    pub variant: ReachVariant,
}

impl FireworkModel {
    pub fn homogeneous(k: usize, law: StepLaw) -> Result<Self> {
        if k == 0 {
            return Err(invalid("k", "need at least one site"));
        }
        Ok(Self {
            k,
            laws: vec![law; k],
            variant: ReachVariant::Max,
        })
    }

    pub fn per_site(laws: Vec<StepLaw>) -> Result<Self> {
        if laws.is_empty() {
            return Err(invalid("k", "need at least one site"));
        }
        Ok(Self {
            k: laws.len(),
            laws,
            variant: ReachVariant::Max,
        })
    }

    pub fn with_variant(mut self, variant: ReachVariant) -> Self {
        self.variant = variant;
        self
    }
}

/// One run of the spreading process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachSample {
    /// L_0 … L_{k−1}.
    pub steps: Vec<u64>,
    /// W_0 = {0}, W_1, … (each sorted; the last one is nonempty).
    pub generations: Vec<Vec<usize>>,
    pub reach: usize,
}

/// Runs the generations W_m from given reaches. W_m collects the sites not
/// yet covered that some site of W_{m−1} reaches.
pub fn spread(k: usize, steps: &[u64], variant: ReachVariant) -> ReachSample {
    let mut covered = vec![false; k + 1];
    covered[0] = true;
    let mut generations = vec![vec![0usize]];
    loop {
        let last = generations.last().expect("W_0 is present");
        let front = last
            .iter()
            .map(|&l| {
                let step = if l < k { steps[l] } else { 0 };
                (l as u64).saturating_add(step).min(k as u64) as usize
            })
            .max()
            .unwrap_or(0);
        let next: Vec<usize> = (1..=front).filter(|&s| !covered[s]).collect();
        if next.is_empty() {
            break;
        }
        for &s in &next {
            covered[s] = true;
        }
        generations.push(next);
    }
    let reach = match variant {
        ReachVariant::Max => (0..=k).rev().find(|&s| covered[s]).unwrap_or(0),
        ReachVariant::Min => (1..=k).find(|&s| covered[s]).unwrap_or(0),
    };
    ReachSample {
        steps: steps.to_vec(),
        generations,
        reach,
    }
}

pub fn simulate_firework(model: &FireworkModel, rng: &mut impl Rng) -> ReachSample {
    let steps: Vec<u64> = model.laws.iter().map(|law| law.sample(rng)).collect();
    spread(model.k, &steps, model.variant)
}

/// Exact P[reach ≥ k] (max variant) by dynamic programming over the
/// covered front: sites are processed left to right and site l extends the
/// front only if l is already covered.
pub fn exact_full_reach(model: &FireworkModel) -> f64 {
    let k = model.k;
    // dist[f] = P[front = f] among runs still spreading after sites < l.
    let mut dist = vec![0.0; k + 1];
    dist[0] = 1.0;
    for l in 0..k {
        let mut next = vec![0.0; k + 1];
        for f in 0..=k {
            let p = dist[f];
            if p == 0.0 {
                continue;
            }
            if f < l {
                // Site l is not covered: the process has stopped.
                next[f] += p;
                continue;
            }
            let law = &model.laws[l];
            let mut mass = 0.0;
            for step in 0..(k - l) {
                let q = law.pmf(step as u64);
                mass += q;
                next[f.max(l + step)] += p * q;
            }
            next[k] += p * (1.0 - mass).max(0.0);
        }
        dist = next;
    }
    dist[k]
}

/// Empirical P[reach ≥ k] for one k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub k: usize,
    pub tail: f64,
    pub se: f64,
    pub hits: u64,
    pub runs: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachTail {
    pub points: Vec<TailPoint>,
    /// Fit of ln(tail) on k over the points with tail ≥ 10/runs.
    pub fit: Option<LinearFit>,
    /// exp(slope) of the fit.
    pub kappa_hat: Option<f64>,
    /// r² ≥ 0.95 on at least two fitted points.
    pub log_linear: bool,
}

pub const MIN_TAIL_RUNS: u64 = 10_000;
const RUNS_PER_SUBSTREAM: u64 = 1_000;

/// Monte Carlo tail P[reach ≥ k] for each k, with a homogeneous law. Runs
/// are drawn in fixed blocks of substreams, so the result does not depend on
/// the thread count.
pub fn reach_tail(
    law: &StepLaw,
    ks: &[usize],
    runs: u64,
    variant: ReachVariant,
    stream: RngStream,
) -> Result<ReachTail> {
    if runs < MIN_TAIL_RUNS {
        return Err(invalid(
            "runs",
            format!("need at least {MIN_TAIL_RUNS} runs"),
        ));
    }
    let mut points = Vec::with_capacity(ks.len());
    for &k in ks {
        let model = FireworkModel::homogeneous(k, law.clone())?.with_variant(variant);
        let hits = count_full_reach(&model, runs, stream.substream((k as u64) << 32));
        let tail = hits as f64 / runs as f64;
        points.push(TailPoint {
            k,
            tail,
            se: binomial_se(tail, runs as usize),
            hits,
            runs,
        });
    }
    let usable: Vec<&TailPoint> = points
        .iter()
        .filter(|p| p.tail >= 10.0 / runs as f64)
        .collect();
    let fit = if usable.len() >= 2 {
        let x: Vec<f64> = usable.iter().map(|p| p.k as f64).collect();
        let y: Vec<f64> = usable.iter().map(|p| p.tail.ln()).collect();
        ols(&x, &y).ok()
    } else {
        None
    };
    Ok(ReachTail {
        kappa_hat: fit.map(|f| f.slope.exp()),
        log_linear: fit.is_some_and(|f| f.r_squared >= 0.95),
        fit,
        points,
    })
}

/// Number of runs (out of `runs`) whose reach is at least `model.k`.
pub fn count_full_reach(model: &FireworkModel, runs: u64, stream: RngStream) -> u64 {
    let blocks = runs.div_ceil(RUNS_PER_SUBSTREAM);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream.substream(stream.substream_id + b).rng();
            let n = RUNS_PER_SUBSTREAM.min(runs - b * RUNS_PER_SUBSTREAM);
            (0..n)
                .filter(|_| simulate_firework(model, &mut rng).reach >= model.k)
                .count() as u64
        })
        .sum()
}

// ---------------------------------------------------------------------------
// The crossing vector ξ

/// Joint sampler for ξ_1 … ξ_K, where ξ_i = 1 iff no edge joins
/// B_{r_i − M_i/8} to the complement of B_{r_i}.
///
/// Only the radii of an edge's endpoints matter. With a_i = r_i − M_i/8 and
/// b_i = r_i, the inner radius falls in a bin S_j = (a_{j−1}, a_j] and the
/// outer radius in T_q = (b_q, b_{q+1}] (b_{K+1} = ∞); an edge with j ≤ q
/// switches off ξ_j … ξ_q and no other edge affects ξ. Each bin is further
/// split into `resolution` equal radial sub-shells, and every sub-shell pair
/// carries an independent Poisson number of edges, so the joint law is exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiSampler {
    pub d: usize,
    pub beta: f64,
    pub k: usize,
    pub resolution: usize,
    /// (j, q, presence probability of each sub-shell pair of S_j × T_q).
    cells: Vec<(usize, usize, Vec<f64>)>,
}

/// One draw of ξ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiDraw {
    pub xi: Vec<bool>,
    /// occupied[j−1][q−1]: some edge from S_j to T_q.
    pub occupied: Vec<Vec<bool>>,
    /// Number of occupied sub-shell cells.
    pub occupied_cells: u64,
}

impl XiSampler {
    pub fn new(ladder: &AnnulusLadder, d: usize, beta: f64, resolution: usize) -> Result<Self> {
        if resolution == 0 {
            return Err(invalid("resolution", "need at least one sub-shell per bin"));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(invalid("beta", "must be nonnegative and finite"));
        }
        let k = ladder.k;
        let sub = |lo: f64, hi: f64| -> Vec<(f64, f64)> {
            if hi.is_infinite() {
                // Geometric sub-shells ending in an unbounded one.
                let mut out = Vec::with_capacity(resolution);
                let mut a = lo;
                for _ in 1..resolution {
                    out.push((a, 2.0 * a));
                    a *= 2.0;
                }
                out.push((a, f64::INFINITY));
                return out;
            }
            let h = (hi - lo) / resolution as f64;
            (0..resolution)
                .map(|c| {
                    (
                        lo + c as f64 * h,
                        if c + 1 == resolution {
                            hi
                        } else {
                            lo + (c + 1) as f64 * h
                        },
                    )
                })
                .collect()
        };
        let mut cells = Vec::new();
        for j in 1..=k {
            let s_bin = sub(ladder.e_inner(j - 1), ladder.e_inner(j));
            for q in j..=k {
                let hi = if q == k {
                    f64::INFINITY
                } else {
                    ladder.r[q + 1]
                };
                let t_bin = sub(ladder.r[q], hi);
                let mut probs = Vec::with_capacity(resolution * resolution);
                for &s in &s_bin {
                    for &t in &t_bin {
                        let inner = ContinuumRegion::Annulus {
                            inner: s.0,
                            outer: s.1,
                        };
                        let outer = if t.1.is_infinite() {
                            ContinuumRegion::BallComplement { radius: t.0 }
                        } else {
                            ContinuumRegion::Annulus {
                                inner: t.0,
                                outer: t.1,
                            }
                        };
                        probs.push(crossing_probability(d, &inner, &outer, beta)?.probability);
                    }
                }
                cells.push((j, q, probs));
            }
        }
        Ok(Self {
            d,
            beta,
            k,
            resolution,
            cells,
        })
    }

    /// P[some edge between S_j and T_q].
    pub fn pair_probability(&self, j: usize, q: usize) -> f64 {
        self.cells
            .iter()
            .find(|c| c.0 == j && c.1 == q)
            .map(|c| 1.0 - c.2.iter().map(|p| 1.0 - p).product::<f64>())
            .unwrap_or(0.0)
    }

    pub fn sample(&self, rng: &mut impl Rng) -> XiDraw {
        let k = self.k;
        let mut occupied = vec![vec![false; k]; k];
        let mut occupied_cells = 0;
        for (j, q, probs) in &self.cells {
            for &p in probs {
                if p > 0.0 && rng.random::<f64>() < p {
                    occupied[j - 1][q - 1] = true;
                    occupied_cells += 1;
                }
            }
        }
        let xi = (1..=k)
            .map(|i| !(1..=i).any(|j| (i..=k).any(|q| occupied[j - 1][q - 1])))
            .collect();
        XiDraw {
            xi,
            occupied,
            occupied_cells,
        }
    }
}

pub fn simulate_xi_vector(
    ladder: &AnnulusLadder,
    d: usize,
    beta: f64,
    resolution: usize,
    rng: &mut impl Rng,
) -> Result<XiDraw> {
    Ok(XiSampler::new(ladder, d, beta, resolution)?.sample(rng))
}

/// Reaches L_0 … L_{k−1} read off a ξ draw for the ladder sub-sequence
/// `subset` = (i_1 < … < i_k): L_l is the largest s such that an edge starts
/// in the shell (a_{i_l}, a_{i_{l+1}}] and ends beyond r_{i_{l+s}}.
pub fn steps_from_draw(draw: &XiDraw, subset: &[usize]) -> Vec<u64> {
    let k = subset.len();
    let idx = |l: usize| if l == 0 { 0 } else { subset[l - 1] };
    (0..k)
        .map(|l| {
            let mut best = 0;
            for s in 1..=(k - l) {
                let target = idx(l + s);
                let hit = (idx(l) + 1..=idx(l + 1))
                    .any(|j| (target..=draw.occupied.len()).any(|q| draw.occupied[j - 1][q - 1]));
                if hit {
                    best = s;
                }
            }
            best as u64
        })
        .collect()
}

/// The firework whose site l has P[L_l ≥ s] = 1 − exp(−β I(shell_l, B_{r_{i_{l+s}}}^c))
/// for the shells (a_{i_l}, a_{i_{l+1}}] of the sub-sequence `subset`.
pub fn matched_firework(
    ladder: &AnnulusLadder,
    subset: &[usize],
    d: usize,
    beta: f64,
) -> Result<FireworkModel> {
    validate_subset(ladder, subset)?;
    let k = subset.len();
    let idx = |l: usize| if l == 0 { 0 } else { subset[l - 1] };
    let mut laws = Vec::with_capacity(k);
    for l in 0..k {
        let shell = ContinuumRegion::Annulus {
            inner: ladder.e_inner(idx(l)),
            outer: ladder.e_inner(idx(l + 1)),
        };
        // tails[s] = P[L_l ≥ s] for s = 0 ..= k − l + 1.
        let mut tails = vec![1.0];
        for s in 1..=(k - l) {
            let outer = ContinuumRegion::BallComplement {
                radius: ladder.r[idx(l + s)],
            };
            tails.push(crossing_probability(d, &shell, &outer, beta)?.probability);
        }
        tails.push(0.0);
        let pmf: Vec<f64> = tails.windows(2).map(|w| (w[0] - w[1]).max(0.0)).collect();
        let total: f64 = pmf.iter().sum();
        laws.push(StepLaw::Discrete {
            pmf: pmf.iter().map(|p| p / total).collect(),
        });
    }
    FireworkModel::per_site(laws)
}

fn validate_subset(ladder: &AnnulusLadder, subset: &[usize]) -> Result<()> {
    if subset.is_empty() {
        return Err(invalid("subset", "must be nonempty"));
    }
    if subset.windows(2).any(|w| w[0] >= w[1])
        || subset[0] == 0
        || subset[subset.len() - 1] > ladder.k
    {
        return Err(invalid(
            "subset",
            format!("must be increasing within 1..={}", ladder.k),
        ));
    }
    Ok(())
}

/// Per-subset outcome of the coupling check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingRow {
    pub subset: Vec<usize>,
    /// Empirical P[ξ_i = 0 for all i in the subset].
    pub w: f64,
    pub w_se: f64,
    /// Empirical P[reach ≥ k] of the independently simulated matched firework.
    pub reach: f64,
    pub reach_se: f64,
    /// w ≤ reach + 3·sqrt(w_se² + reach_se²).
    pub holds: bool,
    /// Draws where every ξ in the subset vanished but the firework built from
    /// the same edges did not cover all sites (must be 0).
    pub pathwise_violations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingReport {
    pub runs: u64,
    pub rows: Vec<CouplingRow>,
    /// Empirical P[ξ_i = 0] per i, next to the exact P[E_{i,1}].
    pub marginals: Vec<(f64, f64)>,
}

impl CouplingReport {
    pub fn holds(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.holds && r.pathwise_violations == 0)
    }
}

pub const MAX_COUPLING_K: usize = 10;

/// Compares w_S = P[ξ_i = 0, i ∈ S] with P[reach ≥ |S|] of the matched
/// firework for every nonempty subset S of the ladder indices.
pub fn coupling_check(
    ladder: &AnnulusLadder,
    d: usize,
    beta: f64,
    runs: u64,
    stream: RngStream,
) -> Result<CouplingReport> {
    if ladder.k > MAX_COUPLING_K {
        return Err(Error::CapExceeded {
            what: "ladder scales for subset enumeration",
            value: ladder.k,
            limit: MAX_COUPLING_K,
        });
    }
    if runs == 0 {
        return Err(invalid("runs", "must be positive"));
    }
    let k = ladder.k;
    let sampler = XiSampler::new(ladder, d, beta, 1)?;
    let blocks = runs.div_ceil(RUNS_PER_SUBSTREAM);
    let draws: Vec<XiDraw> = (0..blocks)
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = stream.substream(b).rng();
            let n = RUNS_PER_SUBSTREAM.min(runs - b * RUNS_PER_SUBSTREAM);
            (0..n).map(|_| sampler.sample(&mut rng)).collect::<Vec<_>>()
        })
        .collect();
    let marginals = (1..=k)
        .map(|i| {
            let zeros = draws.iter().filter(|x| !x.xi[i - 1]).count();
            Ok((
                zeros as f64 / runs as f64,
                prob_e(ladder, i, d, beta)?.probability,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for mask in 1u32..(1 << k) {
        let subset: Vec<usize> = (1..=k).filter(|i| mask >> (i - 1) & 1 == 1).collect();
        let mut all_zero = 0u64;
        let mut violations = 0u64;
        for x in &draws {
            if subset.iter().all(|&i| !x.xi[i - 1]) {
                all_zero += 1;
                let run = spread(
                    subset.len(),
                    &steps_from_draw(x, &subset),
                    ReachVariant::Max,
                );
                if run.reach < subset.len() {
                    violations += 1;
                }
            }
        }
        let model = matched_firework(ladder, &subset, d, beta)?;
        let hits = count_full_reach(
            &model,
            runs,
            stream.substream((1u64 << 40) + ((mask as u64) << 20)),
        );
        let w = all_zero as f64 / runs as f64;
        let reach = hits as f64 / runs as f64;
        let w_se = binomial_se(w, runs as usize);
        let reach_se = binomial_se(reach, runs as usize);
        rows.push(CouplingRow {
            subset,
            w,
            w_se,
            reach,
            reach_se,
            holds: w <= reach + 3.0 * w_se.hypot(reach_se),
            pathwise_violations: violations,
        });
    }
    Ok(CouplingReport {
        runs,
        rows,
        marginals,
    })
}

// ---------------------------------------------------------------------------
// Concentration of Σξ

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub kappa: f64,
    /// (1 − κ)K/2.
    pub threshold: f64,
    /// Empirical P[Σξ ≤ threshold].
    pub empirical: f64,
    pub se: f64,
    /// exp(−(1 − κ)²K/2).
    pub bound: f64,
    /// empirical ≤ bound + 3·se.
    pub within: bool,
}

pub fn concentration_check(samples: &[Vec<bool>], kappa: f64) -> Result<ConcentrationReport> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(invalid("kappa", "must lie in (0,1)"));
    }
    let Some(first) = samples.first() else {
        return Err(Error::Empty("xi samples"));
    };
    let k = first.len();
    if samples.iter().any(|s| s.len() != k) {
        return Err(invalid(
            "samples",
            "all ξ vectors must have the same length",
        ));
    }
    let threshold = (1.0 - kappa) * k as f64 / 2.0;
    let hits = samples
        .iter()
        .filter(|s| (s.iter().filter(|&&b| b).count() as f64) <= threshold)
        .count();
    let empirical = hits as f64 / samples.len() as f64;
    let se = binomial_se(empirical, samples.len());
    let bound = (-(1.0 - kappa).powi(2) * k as f64 / 2.0).exp();
    Ok(ConcentrationReport {
        kappa,
        threshold,
        empirical,
        se,
        bound,
        within: empirical <= bound + 3.0 * se,
    })
}

// ---------------------------------------------------------------------------
// Cube pairs between the two shells of scale i

/// Edge probabilities between the small cubes of side δM_i inside the shells
/// r_{i−1} ≤ |x| ≤ r_{i−1} + M_i/8 and r_i − M_i/8 ≤ |x| ≤ r_i.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubePairReport {
    pub i: usize,
    pub delta: f64,
    pub side: f64,
    /// Centres of the cubes in the first and second shell.
    pub first: Vec<Vec<f64>>,
    pub second: Vec<Vec<f64>>,
    /// Row-major P[V1_k ~ V2_l].
    pub probabilities: Vec<f64>,
    /// Smallest Euclidean distance between a cube of each shell.
    pub min_separation: f64,
    /// Largest distance between points of a cube pair.
    pub max_distance: f64,
    /// Every pair is at least 3M_i/4 apart.
    pub separation_ok: bool,
    /// exp(−β side^{2d}/sep^{2d}) ≤ P[≁] and P[~] ≥ 1 − exp(−β side^{2d}/dist^{2d})
    /// for every pair, with sep and dist the pair's own distances.
    pub sandwich_ok: bool,
    /// The largest pair distance is below r_i + r_{i−1} + γM_i.
    pub gamma_bound_ok: bool,
    /// Fraction of the shell volume covered by the cubes.
    pub coverage: (f64, f64),
}

impl CubePairReport {
    pub fn probability(&self, k: usize, l: usize) -> f64 {
        self.probabilities[k * self.second.len() + l]
    }
}

pub const MAX_CUBE_PAIRS: usize = 250_000;

/// Cubes of side h on the grid anchored at the origin that lie inside the
/// shell lo ≤ |x| ≤ hi. In d = 1 this is an exact tiling once h divides the
/// shell width and the grid is anchored at the shell edges.
fn shell_cubes(d: usize, lo: f64, hi: f64, h: f64) -> Vec<Vec<f64>> {
    if d == 1 {
        let count = ((hi - lo) / h).round() as usize;
        let mut out = Vec::with_capacity(2 * count);
        for c in 0..count {
            let x = lo + (c as f64 + 0.5) * h;
            if lo == 0.0 {
                out.push(vec![x]);
                out.push(vec![-x]);
            } else {
                out.push(vec![-x]);
                out.push(vec![x]);
            }
        }
        out.sort_by(|a, b| a[0].total_cmp(&b[0]));
        return out;
    }
    let reach = (hi / h).ceil() as i64;
    let mut out = Vec::new();
    let mut idx = vec![-reach; d];
    loop {
        let centre: Vec<f64> = idx.iter().map(|&j| (j as f64 + 0.5) * h).collect();
        let far: f64 = centre
            .iter()
            .map(|c| (c.abs() + h / 2.0).powi(2))
            .sum::<f64>()
            .sqrt();
        let near: f64 = centre
            .iter()
            .map(|c| (c.abs() - h / 2.0).max(0.0).powi(2))
            .sum::<f64>()
            .sqrt();
        if near >= lo - 1e-12 * hi && far <= hi * (1.0 + 1e-12) {
            out.push(centre);
        }
        let mut a = 0;
        loop {
            idx[a] += 1;
            if idx[a] < reach {
                break;
            }
            idx[a] = -reach;
            a += 1;
            if a == d {
                return out;
            }
        }
    }
}

fn ball_volume(d: usize, r: f64) -> f64 {
    use std::f64::consts::PI;
    match d {
        1 => 2.0 * r,
        2 => PI * r * r,
        3 => 4.0 / 3.0 * PI * r.powi(3),
        _ => unreachable!(),
    }
}

pub fn cube_pair_edge_probs(
    ladder: &AnnulusLadder,
    i: usize,
    d: usize,
    delta: f64,
    beta: f64,
    gamma: f64,
) -> Result<CubePairReport> {
    check_index(ladder, i)?;
    if !(1..=3).contains(&d) {
        return Err(invalid("d", "must lie in 1..=3"));
    }
    if !(delta > 0.0 && delta <= 1.0 / 8.0) {
        return Err(invalid("delta", "must lie in (0, 1/8]"));
    }
    if ladder.delta_max.is_finite() && delta > ladder.delta_max {
        return Err(invalid(
            "delta",
            format!(
                "4·delta^(theta/2) exceeds c_star1 (delta_max = {})",
                ladder.delta_max
            ),
        ));
    }
    let per_width = 1.0 / (8.0 * delta);
    if (per_width - per_width.round()).abs() > 1e-9 {
        return Err(Error::Tiling(format!(
            "cube side delta·M_i does not divide the shell width M_i/8 (1/(8·delta) = {per_width})"
        )));
    }
    let m = ladder.m_at(i);
    let h = delta * m;
    let (lo1, hi1) = (ladder.r[i - 1], ladder.r[i - 1] + m / 8.0);
    let (lo2, hi2) = (ladder.e_inner(i), ladder.r[i]);
    let first = shell_cubes(d, lo1, hi1, h);
    let second = shell_cubes(d, lo2, hi2, h);
    if first.is_empty() || second.is_empty() {
        return Err(Error::Tiling("no cube fits inside a shell".into()));
    }
    let pairs = first.len() * second.len();
    if pairs > MAX_CUBE_PAIRS {
        return Err(Error::CapExceeded {
            what: "cube pairs",
            value: pairs,
            limit: MAX_CUBE_PAIRS,
        });
    }
    let gap = |a: &[f64], b: &[f64]| -> (f64, f64) {
        let mut near = 0.0;
        let mut far = 0.0;
        for (x, y) in a.iter().zip(b) {
            let c = (x - y).abs();
            near += (c - h).max(0.0).powi(2);
            far += (c + h).powi(2);
        }
        (near.sqrt(), far.sqrt())
    };
    let mut min_separation = f64::INFINITY;
    let mut max_distance = 0.0f64;
    for a in &first {
        for b in &second {
            let (near, far) = gap(a, b);
            min_separation = min_separation.min(near);
            max_distance = max_distance.max(far);
        }
    }
    let separation_ok = min_separation >= 0.75 * m * (1.0 - 1e-12);
    if !(min_separation > 0.0) {
        return Err(Error::OverlappingRegions);
    }
    let rows: Vec<Result<Vec<(f64, bool)>>> = first
        .par_iter()
        .map(|a| {
            second
                .iter()
                .map(|b| {
                    let k: Vec<f64> = a.iter().zip(b).map(|(x, y)| (y - x) / h).collect();
                    // The integral is invariant under the scaling u -> u/h.
                    let integral = unit_cube_pair_integral(&k, 1e-11)?;
                    let p = probability_from_integral(beta, integral);
                    let (near, far) = gap(a, b);
                    let dd = 2 * d as i32;
                    let upper = (h / near).powi(dd);
                    let lower = (h / far).powi(dd);
                    let tol = 1e-9 * integral;
                    Ok((p, integral <= upper + tol && integral >= lower - tol))
                })
                .collect()
        })
        .collect();
    let mut probabilities = Vec::with_capacity(pairs);
    let mut sandwich_ok = true;
    for row in rows {
        for (p, ok) in row? {
            probabilities.push(p);
            sandwich_ok &= ok;
        }
    }
    let vol = h.powi(d as i32);
    let coverage = (
        first.len() as f64 * vol / (ball_volume(d, hi1) - ball_volume(d, lo1)),
        second.len() as f64 * vol / (ball_volume(d, hi2) - ball_volume(d, lo2)),
    );
    Ok(CubePairReport {
        i,
        delta,
        side: h,
        first,
        second,
        probabilities,
        min_separation,
        max_distance,
        separation_ok,
        sandwich_ok,
        gamma_bound_ok: max_distance <= ladder.r[i] + ladder.r[i - 1] + gamma * m,
        coverage,
    })
}
