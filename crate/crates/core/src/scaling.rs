//! Monte Carlo estimation of the distance exponent: medians of d(0, n·1),
//! the rescaled distance law, its largest atom, and geodesic multiplicity.
//!
//! Each measurement at scale `n` samples a fresh graph on a box of side
//! `side_factor · n` (3 by default) with the endpoints `(n, …, n)` and
//! `(2n, …, 2n)`, so the segment sits in the middle of the box.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::LrpGraph;
use crate::kernel::{DisplacementKernel, ModelConfig};
use crate::metric::{distance, geodesic_dag};
use crate::rng::{stream_id, RngStream};
use crate::sampler::GraphSampler;
use crate::stats;

pub const DEFAULT_SIDE_FACTOR: u64 = 3;
pub const MIN_REPLICATES: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ladder {
    pub n_values: Vec<u64>,
    pub replicates: usize,
}

impl Ladder {
    pub fn new(n_values: Vec<u64>, replicates: usize) -> Result<Self> {
        let l = Self {
            n_values,
            replicates,
        };
        l.validate()?;
        Ok(l)
    }

    /// `2^lo, …, 2^hi`.
    pub fn dyadic(lo: u32, hi: u32, replicates: usize) -> Result<Self> {
        Self::new((lo..=hi).map(|k| 1u64 << k).collect(), replicates)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() {
            return Err(invalid("ladder", "no box sizes"));
        }
        if self.n_values[0] == 0 || self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid(
                "ladder",
                "box sizes must be positive and strictly increasing",
            ));
        }
        if self.replicates < MIN_REPLICATES {
            return Err(invalid(
                "replicates",
                format!("{} (at least {MIN_REPLICATES})", self.replicates),
            ));
        }
        Ok(())
    }
}

/// Distance samples at one scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleSample {
    pub n: u64,
    pub distances: Vec<u32>,
}

impl ScaleSample {
    pub fn as_f64(&self) -> Vec<f64> {
        self.distances.iter().map(|&d| d as f64).collect()
    }

    pub fn median(&self) -> f64 {
        stats::median(&self.as_f64()).expect("at least one replicate")
    }
}

/// Sampler for the box used at scale `n`, plus the two endpoints.
#[derive(Debug, Clone)]
pub struct ScaleSetup {
    pub n: u64,
    pub sampler: GraphSampler,
    pub source: usize,
    pub target: usize,
}

impl ScaleSetup {
    pub fn new(template: &ModelConfig, n: u64, side_factor: u64) -> Result<Self> {
        Self::with_kernel(template, n, side_factor, None)
    }

    /// Reuses a precomputed kernel table when it covers the box.
    pub fn with_kernel(
        template: &ModelConfig,
        n: u64,
        side_factor: u64,
        kernel: Option<&DisplacementKernel>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n", "must be positive"));
        }
        if side_factor < 3 {
            return Err(invalid("side_factor", "must be at least 3"));
        }
        let side = side_factor * n;
        let config = ModelConfig {
            n: side,
            ..*template
        };
        let sampler = match kernel {
            Some(k) if k.max_radius + 1 >= side && k.d == config.d && k.beta == config.beta => {
                GraphSampler::from_kernel(&config, k)?
            }
            _ => GraphSampler::new(&config)?,
        };
        let lattice = crate::lattice::Lattice::new(config.d, side)?;
        let lo = ((side - n) / 2) as i64;
        let source = lattice
            .index(&vec![lo; config.d])
            .ok_or(Error::VertexOutside(0))?;
        let target = lattice
            .index(&vec![lo + n as i64; config.d])
            .ok_or(Error::VertexOutside(0))?;
        Ok(Self {
            n,
            sampler,
            source,
            target,
        })
    }

    pub fn stream(&self, side_factor: u64, replicate: u64) -> u64 {
        stream_id("scaling", &[self.n, side_factor, replicate])
    }

    pub fn sample(&self, side_factor: u64, replicate: u64) -> LrpGraph {
        self.sampler.sample(self.stream(side_factor, replicate))
    }

    pub fn measure(&self, side_factor: u64, replicate: u64) -> u32 {
        let g = self.sample(side_factor, replicate);
        distance(&g, self.source, self.target, None)
            .expect("endpoints lie in the box")
            .expect("nearest-neighbour edges connect the box")
    }
}

/// Samples d(0, n·1) for every scale of the ladder. Replicates run in
/// parallel on the current rayon pool; results are in replicate order.
pub fn sample_distances(
    template: &ModelConfig,
    ladder: &Ladder,
    side_factor: u64,
) -> Result<Vec<ScaleSample>> {
    ladder.validate()?;
    template.validate()?;
    let max_side = side_factor * ladder.n_values.last().copied().unwrap_or(1);
    let kernel = DisplacementKernel::build(template.d, template.beta, max_side.max(3) - 1)?;
    ladder
        .n_values
        .iter()
        .map(|&n| {
            let setup = ScaleSetup::with_kernel(template, n, side_factor, Some(&kernel))?;
            let distances = (0..ladder.replicates as u64)
                .into_par_iter()
                .map(|r| setup.measure(side_factor, r))
                .collect();
            Ok(ScaleSample { n, distances })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MedianPoint {
    pub n: u64,
    pub a_n: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub points: Vec<MedianPoint>,
    pub theta_hat: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub ci: (f64, f64),
}

pub const BOOTSTRAP_RESAMPLES: usize = 1000;

/// Medians with bootstrap intervals, the log-log fit and a bootstrap
/// interval for its slope (replicates resampled within each scale).
pub fn estimate_scaling(samples: &[ScaleSample], stream: RngStream) -> Result<ScalingFit> {
    let mut rng = stream.rng();
    let mut points = Vec::with_capacity(samples.len());
    for s in samples {
        let data = s.as_f64();
        let (ci_lo, ci_hi) = stats::bootstrap_ci(&data, BOOTSTRAP_RESAMPLES, 0.95, &mut rng, |b| {
            stats::median(b).expect("nonempty")
        });
        points.push(MedianPoint {
            n: s.n,
            a_n: s.median(),
            ci_lo,
            ci_hi,
            replicates: data.len(),
        });
    }
    let ns: Vec<u64> = points.iter().map(|p| p.n).collect();
    let medians: Vec<f64> = points.iter().map(|p| p.a_n).collect();
    let fit = fit_theta(&ns, &medians)?;
    let data: Vec<Vec<f64>> = samples.iter().map(ScaleSample::as_f64).collect();
    let mut slopes = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let mut buf = Vec::new();
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let meds: Vec<f64> = data
            .iter()
            .map(|d| {
                buf.clear();
                buf.extend((0..d.len()).map(|_| d[rng.random_range(0..d.len())]));
                stats::median(&buf).expect("nonempty")
            })
            .collect();
        slopes.push(fit_theta(&ns, &meds)?.slope);
    }
    Ok(ScalingFit {
        points,
        theta_hat: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        ci: stats::percentile_interval(slopes, 0.95),
    })
}

/// Least-squares slope of log a_n against log n.
pub fn fit_theta(n: &[u64], a_n: &[f64]) -> Result<stats::LinearFit> {
    if n.len() < 4 {
        return Err(Error::DegenerateFit("need at least four ladder points"));
    }
    if a_n.iter().any(|&a| !(a > 0.0)) {
        return Err(Error::DegenerateFit("medians must be positive"));
    }
    let x: Vec<f64> = n.iter().map(|&v| (v as f64).ln()).collect();
    let y: Vec<f64> = a_n.iter().map(|v| v.ln()).collect();
    stats::ols(&x, &y)
}

/// Sorted rescaled distances d(0, n·1)/a_n at one scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ecdf {
    pub n: u64,
    pub a_n: f64,
    pub values: Vec<f64>,
}

impl Ecdf {
    pub fn from_sample(s: &ScaleSample) -> Self {
        let a_n = s.median();
        let mut values: Vec<f64> = s.distances.iter().map(|&d| d as f64 / a_n).collect();
        values.sort_by(f64::total_cmp);
        Self {
            n: s.n,
            a_n,
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Empirical P[X ≤ x].
    pub fn cdf(&self, x: f64) -> f64 {
        self.values.partition_point(|&v| v <= x) as f64 / self.values.len() as f64
    }

    /// Largest probability carried by a single value.
    pub fn max_atom(&self) -> f64 {
        let mut best = 0;
        let mut i = 0;
        while i < self.values.len() {
            let j = self.values.partition_point(|&v| v <= self.values[i]);
            best = best.max(j - i);
            i = j;
        }
        best as f64 / self.values.len() as f64
    }
}

/// Empirical mass of the open window (a − eps, a + eps).
pub fn window_mass(ecdf: &Ecdf, a: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(invalid("eps", "must be positive"));
    }
    let v = &ecdf.values;
    let lo = v.partition_point(|&x| x <= a - eps);
    let hi = v.partition_point(|&x| x < a + eps);
    Ok(hi.saturating_sub(lo) as f64 / v.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomTrend {
    pub n: Vec<u64>,
    pub max_atom: Vec<f64>,
    pub spearman: stats::Spearman,
}

/// Largest atom of the rescaled law at each scale, with a Spearman test
/// for a decreasing trend in n.
pub fn atom_trend(ecdfs: &[Ecdf]) -> Result<AtomTrend> {
    if ecdfs.len() < 3 {
        return Err(Error::DegenerateFit("need at least three scales"));
    }
    let n: Vec<u64> = ecdfs.iter().map(|e| e.n).collect();
    let max_atom: Vec<f64> = ecdfs.iter().map(Ecdf::max_atom).collect();
    let x: Vec<f64> = n.iter().map(|&v| v as f64).collect();
    let spearman = stats::spearman(&x, &max_atom)?;
    Ok(AtomTrend {
        n,
        max_atom,
        spearman,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplicityStats {
    pub counts: Vec<u64>,
    pub saturated: Vec<bool>,
    pub overlaps: Vec<f64>,
    pub fraction_unique: f64,
    pub median_overlap: f64,
    pub mean_overlap: f64,
}

/// Geodesic count between `x` and `y` and the overlap (shared edges over
/// length) of two independent uniform geodesics.
pub fn multiplicity_on_graph(
    g: &LrpGraph,
    x: usize,
    y: usize,
    rng: &mut impl Rng,
) -> Result<(u64, bool, f64)> {
    if x == y {
        return Err(invalid("endpoints", "must be distinct"));
    }
    let dag = geodesic_dag(g, x, y, None)?;
    let p = dag.sample_geodesic(rng);
    let q = dag.sample_geodesic(rng);
    let shared = p
        .windows(2)
        .zip(q.windows(2))
        .filter(|(a, b)| a == b)
        .count();
    Ok((
        dag.count(),
        dag.saturated,
        shared as f64 / dag.length as f64,
    ))
}

/// Geodesic multiplicity between the scale-`n` endpoints over replicates.
pub fn multiplicity_stats(
    template: &ModelConfig,
    n: u64,
    replicates: usize,
    side_factor: u64,
) -> Result<MultiplicityStats> {
    let setup = ScaleSetup::new(template, n, side_factor)?;
    let per: Vec<(u64, bool, f64)> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let g = setup.sample(side_factor, r);
            let mut rng = RngStream::new(
                template.seed,
                stream_id("multiplicity", &[n, side_factor, r]),
                0,
            )
            .rng();
            multiplicity_on_graph(&g, setup.source, setup.target, &mut rng)
        })
        .collect::<Result<_>>()?;
    Ok(summarise_multiplicity(per))
}

pub fn summarise_multiplicity(per: Vec<(u64, bool, f64)>) -> MultiplicityStats {
    let counts: Vec<u64> = per.iter().map(|p| p.0).collect();
    let saturated = per.iter().map(|p| p.1).collect();
    let overlaps: Vec<f64> = per.iter().map(|p| p.2).collect();
    let m = counts.len().max(1) as f64;
    MultiplicityStats {
        fraction_unique: counts.iter().filter(|&&c| c == 1).count() as f64 / m,
        median_overlap: stats::median(&overlaps).unwrap_or(f64::NAN),
        mean_overlap: if overlaps.is_empty() {
            f64::NAN
        } else {
            stats::mean(&overlaps)
        },
        counts,
        saturated,
        overlaps,
    }
}

/// Medians at side factors 3 and 5 for the same n, to gauge how much the
/// finite box shortens distances.
pub fn boundary_check(template: &ModelConfig, n: u64, replicates: usize) -> Result<(f64, f64)> {
    let med = |factor: u64| -> Result<f64> {
        let setup = ScaleSetup::new(template, n, factor)?;
        let d: Vec<f64> = (0..replicates as u64)
            .into_par_iter()
            .map(|r| setup.measure(factor, r) as f64)
            .collect();
        stats::median(&d).ok_or(Error::Empty("replicates"))
    };
    Ok((med(3)?, med(5)?))
}
