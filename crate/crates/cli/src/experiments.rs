//! One function per experiment kind. Each is a pure function of the config
//! and returns its data files in memory.

use anyhow::{Context, Result};
use num::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use lrplab_core::firework::{
    a_ratio_sweep, build_ladder, coupling_check, crossing_table, exact_full_reach, reach_tail,
    FireworkModel, StepLaw,
};
use lrplab_core::geodesic_dim::{
    box_count, fit_dimension, geodesic_stream, good_cube_rates, path_coords, renorm_stats,
    sample_cube_profiles, classify_profile, GoodCubeParams,
};
use lrplab_core::graph_io::write_text;
use lrplab_core::metric::geodesic_dag;
use lrplab_core::rng::{stream_id, RngStream};
use lrplab_core::scaling::{
    atom_trend, estimate_scaling, multiplicity_stats, sample_distances, Ecdf, Ladder, ScaleSetup,
};
use lrplab_core::sperner::{
    generate_family, log_central_term, lym_sum, parse_rational, scaled_sperner_bound,
    sperner_bound_check,
};
use lrplab_core::stats::{self, ols};
use lrplab_core::{GraphSampler, ModelConfig, Neighbourhood};

use crate::config::{ExperimentConfig, Kind};
use crate::output::{num, Outputs};

pub fn run(cfg: &ExperimentConfig) -> Result<Outputs> {
    let mut out = Outputs::default();
    match cfg.kind {
        Kind::Sample => sample(cfg, &mut out)?,
        Kind::Scaling => scaling(cfg, &mut out)?,
        Kind::Dim => dim(cfg, &mut out)?,
        Kind::Goodcubes => goodcubes(cfg, &mut out)?,
        Kind::Sperner => sperner(cfg, &mut out)?,
        Kind::Firework => firework(cfg, &mut out)?,
        Kind::XiCoupling => xi_coupling(cfg, &mut out)?,
    }
    Ok(out)
}

fn template(cfg: &ExperimentConfig) -> Result<ModelConfig> {
    let m = &cfg.model;
    Ok(ModelConfig::new(m.d, m.beta, m.n.max(2), cfg.seed)?)
}

macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$($x.to_string()),*] };
}

fn sample(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let config = template(cfg)?;
    let sampler = GraphSampler::new(&config)?;
    let graphs: Vec<_> = (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|r| sampler.sample(stream_id("sample", &[r])))
        .collect();
    let mut rows = Vec::new();
    for (r, g) in graphs.iter().enumerate() {
        let n = g.vertex_count();
        let max_degree = (0..n).map(|v| g.degree(v)).max().unwrap_or(0);
        let mean_degree = (0..n).map(|v| g.degree(v)).sum::<usize>() as f64 / n as f64;
        rows.push(row![r, g.long_edges().len(), max_degree, num(mean_degree)]);
        let mut text = Vec::new();
        write_text(g, &mut text)?;
        out.raw(&format!("graph_{r}.txt"), text);
    }
    out.csv("sample.csv", &["replicate", "long_edges", "max_degree", "mean_degree"], rows);
    out.csv(
        "classes.csv",
        &["class", "candidates", "probability"],
        sampler.plans().iter().map(|p| {
            let class: Vec<String> = p.class.iter().map(u64::to_string).collect();
            row![class.join(";"), p.candidates, num(p.probability)]
        }),
    );
    #[derive(Serialize)]
    struct Summary {
        expected_long_edges: f64,
        long_edge_sd: f64,
    }
    out.json(
        "sample.json",
        &Summary {
            expected_long_edges: sampler.expected_long_edges(),
            long_edge_sd: sampler.long_edge_variance().sqrt(),
        },
    );
    let classes = sampler.plans().len() as u64;
    out.stream("sample", "[replicate]", cfg.replicates as u64 * classes);
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct ThetaSummary {
    pub theta_hat: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub atom_rho: f64,
    pub atom_p_decreasing: f64,
    pub atom_exact: bool,
}

fn scaling(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let t = template(cfg)?;
    let sf = cfg.scaling.side_factor;
    let ladder = Ladder::new(cfg.model.ladder.clone(), cfg.replicates)?;
    let samples = sample_distances(&t, &ladder, sf)?;
    let boot = RngStream::new(cfg.seed, stream_id("scaling-bootstrap", &[]), 0);
    let fit = estimate_scaling(&samples, boot)?;
    out.csv(
        "distances.csv",
        &["n", "replicate", "distance"],
        samples
            .iter()
            .flat_map(|s| s.distances.iter().enumerate().map(|(r, d)| row![s.n, r, d])),
    );
    out.csv(
        "medians.csv",
        &["n", "a_n", "ci_lo", "ci_hi", "replicates"],
        fit.points
            .iter()
            .map(|p| row![p.n, num(p.a_n), num(p.ci_lo), num(p.ci_hi), p.replicates]),
    );
    let ecdfs: Vec<Ecdf> = samples.iter().map(Ecdf::from_sample).collect();
    for e in &ecdfs {
        out.csv(
            &format!("ecdf_{}.csv", e.n),
            &["value", "cdf"],
            e.values
                .iter()
                .enumerate()
                .map(|(i, v)| row![num(*v), num((i + 1) as f64 / e.len() as f64)]),
        );
    }
    let trend = if ecdfs.len() >= 3 {
        Some(atom_trend(&ecdfs)?)
    } else {
        None
    };
    out.csv(
        "atoms.csv",
        &["n", "max_atom"],
        ecdfs.iter().map(|e| row![e.n, num(e.max_atom())]),
    );
    out.json(
        "theta.json",
        &ThetaSummary {
            theta_hat: fit.theta_hat,
            intercept: fit.intercept,
            r_squared: fit.r_squared,
            ci_lo: fit.ci.0,
            ci_hi: fit.ci.1,
            atom_rho: trend.as_ref().map_or(f64::NAN, |t| t.spearman.rho),
            atom_p_decreasing: trend.as_ref().map_or(f64::NAN, |t| t.spearman.p_decreasing),
            atom_exact: trend.as_ref().is_some_and(|t| t.spearman.exact),
        },
    );
    let reps = (ladder.n_values.len() * cfg.replicates) as u64;
    out.stream("scaling", "[n, side_factor, replicate]", reps);
    out.stream("scaling-bootstrap", "[]", 1);
    if cfg.scaling.multiplicity {
        let mut rows = Vec::new();
        for &n in &ladder.n_values {
            let m = multiplicity_stats(&t, n, cfg.replicates, sf)?;
            rows.push(row![
                n,
                num(m.fraction_unique),
                num(m.median_overlap),
                num(m.mean_overlap),
                m.saturated.iter().filter(|&&s| s).count()
            ]);
        }
        out.csv(
            "multiplicity.csv",
            &["n", "fraction_unique", "median_overlap", "mean_overlap", "saturated"],
            rows,
        );
        out.stream("multiplicity", "[n, side_factor, replicate]", reps);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct DimSummary {
    /// Slope of mean ln N against ln(L/side).
    pub dim_hat: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Mean and standard deviation of the per-path slopes.
    pub path_mean: f64,
    pub path_sd: f64,
    pub paths: usize,
}

fn dim(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let t = template(cfg)?;
    let n = cfg.model.n;
    let sf = cfg.dim.side_factor;
    let setup = ScaleSetup::new(&t, n, sf)?;
    let l = n as f64;
    let scales = &cfg.dim.scales;
    let per: Vec<(Vec<usize>, f64)> = (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|r| -> Result<(Vec<usize>, f64)> {
            let g = setup.sample(sf, r);
            let dag = geodesic_dag(&g, setup.source, setup.target, None)?;
            let mut rng = geodesic_stream(cfg.seed, n, r).rng();
            let path = path_coords(g.lattice(), &dag.sample_geodesic(&mut rng));
            let covers = scales
                .iter()
                .map(|&k| box_count(&path, l / f64::from(1u32 << k)))
                .collect::<lrplab_core::Result<Vec<_>>>()?;
            let fit = fit_dimension(&covers, l)?;
            Ok((covers.iter().map(|c| c.count()).collect(), fit.dim_hat))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (r, (counts, _)) in per.iter().enumerate() {
        for (&k, &c) in scales.iter().zip(counts) {
            rows.push(row![r, k, num(l / f64::from(1u32 << k)), c]);
        }
    }
    out.csv("dim.csv", &["replicate", "k", "side", "count"], rows);
    let x: Vec<f64> = scales.iter().map(|&k| f64::from(1u32 << k).ln()).collect();
    let y: Vec<f64> = (0..scales.len())
        .map(|j| stats::mean(&per.iter().map(|p| (p.0[j] as f64).ln()).collect::<Vec<_>>()))
        .collect();
    let fit = ols(&x, &y)?;
    let slopes: Vec<f64> = per.iter().map(|p| p.1).collect();
    out.json(
        "dim_fit.json",
        &DimSummary {
            dim_hat: fit.slope,
            intercept: fit.intercept,
            r_squared: fit.r_squared,
            path_mean: stats::mean(&slopes),
            path_sd: stats::variance(&slopes).sqrt(),
            paths: per.len(),
        },
    );
    out.stream("scaling", "[n, side_factor, replicate]", cfg.replicates as u64);
    out.stream("geodesic", "[n, replicate]", cfg.replicates as u64);
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct GoodcubesSummary {
    pub a_s: f64,
    pub cubes: usize,
    /// Cubes good at some (α, b) but bad at a weakly smaller pair.
    pub monotonicity_violations: usize,
    pub mu_hat: f64,
    pub mu_se: f64,
}

fn goodcubes(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let t = template(cfg)?;
    let g = &cfg.goodcubes;
    let a_s = match g.a_s {
        Some(a) => a,
        None => {
            let setup = ScaleSetup::new(&t, g.s, 3)?;
            let d: Vec<f64> = (0..cfg.replicates as u64)
                .into_par_iter()
                .map(|r| setup.measure(3, r) as f64)
                .collect();
            out.stream("scaling", "[n, side_factor, replicate]", cfg.replicates as u64);
            stats::median(&d).context("no replicates")?
        }
    };
    let profiles = sample_cube_profiles(&t, g.s, cfg.replicates)?;
    out.stream("goodcubes", "[s, replicate]", cfg.replicates as u64);
    let s = g.s as f64;
    let rates = good_cube_rates(&profiles, s, g.theta, a_s, &g.alphas, &g.bs)?;
    out.csv(
        "goodcubes.csv",
        &["alpha", "b", "good", "replicates", "rate", "ci_lo", "ci_hi"],
        rates.iter().map(|r| {
            row![num(r.alpha), num(r.b), r.good, r.replicates, num(r.rate), num(r.ci.0), num(r.ci.1)]
        }),
    );
    let grid: Vec<(f64, f64)> = g
        .bs
        .iter()
        .flat_map(|&b| g.alphas.iter().map(move |&a| (a, b)))
        .collect();
    let violations = profiles
        .par_iter()
        .filter(|p| {
            let good: Vec<bool> = grid
                .iter()
                .map(|&(alpha, b)| {
                    classify_profile(p, &GoodCubeParams { s, alpha, b, theta: g.theta }, a_s).good
                })
                .collect();
            grid.iter().enumerate().any(|(i, &(a1, b1))| {
                grid.iter()
                    .enumerate()
                    .any(|(j, &(a2, b2))| a2 <= a1 && b2 <= b1 && good[i] && !good[j])
            })
        })
        .count();
    let renorm = renorm_stats(&t, g.tile_side, g.tiles, g.k_max, cfg.replicates)?;
    out.stream("renorm", "[tile_side, tiles, replicate]", cfg.replicates as u64);
    let mu_hi = renorm.mu_hat + 3.0 * renorm.mu_se;
    out.csv(
        "cs_counts.csv",
        &["k", "mean", "bound", "bound_3se"],
        renorm.cs_counts.iter().enumerate().map(|(i, &c)| {
            let k = (i + 1) as i32;
            row![k, num(c), num((4.0 * renorm.mu_hat).powi(k)), num((4.0 * mu_hi).powi(k))]
        }),
    );
    out.json(
        "goodcubes.json",
        &GoodcubesSummary {
            a_s,
            cubes: profiles.len(),
            monotonicity_violations: violations,
            mu_hat: renorm.mu_hat,
            mu_se: renorm.mu_se,
        },
    );
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct SpernerSummary {
    pub families: usize,
    pub checks: usize,
    pub chain_failures: usize,
    pub lym_max: f64,
}

fn sperner(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let sp = &cfg.sperner;
    let ps = sp
        .p
        .iter()
        .map(|p| parse_rational(p))
        .collect::<lrplab_core::Result<Vec<_>>>()?;
    let jobs: Vec<(u32, usize, u64)> = sp
        .n_values
        .iter()
        .flat_map(|&n| {
            (0..sp.kinds.len()).flat_map(move |k| (0..cfg.replicates as u64).map(move |i| (n, k, i)))
        })
        .collect();
    let rows: Vec<Vec<Vec<String>>> = jobs
        .par_iter()
        .map(|&(n, k, i)| -> Result<Vec<Vec<String>>> {
            let mut rng = RngStream::new(cfg.seed, stream_id("sperner", &[n as u64, k as u64, i]), 0).rng();
            let family = generate_family(sp.kinds[k], n, &mut rng)?;
            let lym = lym_sum(&family);
            let mut rows = Vec::new();
            for (p_text, p) in sp.p.iter().zip(&ps) {
                let r = sperner_bound_check(&family, p)?;
                rows.push(row![
                    n,
                    serde_json::to_value(sp.kinds[k])?.as_str().unwrap_or("?"),
                    i,
                    family.len(),
                    lym,
                    p_text,
                    num(r.probability.to_f64().unwrap_or(f64::NAN)),
                    num(r.central.to_f64().unwrap_or(f64::NAN)),
                    r.first_link,
                    r.second_link,
                    num(r.scaled_probability),
                    num(r.scaled_bound)
                ]);
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let rows: Vec<Vec<String>> = rows.into_iter().flatten().collect();
    let chain_failures = rows.iter().filter(|r| r[8] != "true" || r[9] != "true").count();
    let lym_max = rows
        .iter()
        .filter_map(|r| parse_rational(&r[4]).ok()?.to_f64())
        .fold(0.0, f64::max);
    let checks = rows.len();
    out.csv(
        "sperner.csv",
        &[
            "n", "kind", "family", "size", "lym", "p", "probability", "central", "first_link",
            "second_link", "scaled_probability", "scaled_bound",
        ],
        rows,
    );
    let pf: Vec<f64> = ps.iter().map(|p| p.to_f64().unwrap_or(f64::NAN)).collect();
    out.csv(
        "bound.csv",
        &["n", "p", "log_central", "scaled_bound"],
        (1..=sp.bound_n_max).flat_map(|n| {
            sp.p.iter()
                .zip(&pf)
                .map(move |(t, &p)| row![n, t, num(log_central_term(n, p)), num(scaled_sperner_bound(n, p))])
        }),
    );
    out.json(
        "sperner.json",
        &SpernerSummary {
            families: jobs.len(),
            checks,
            chain_failures,
            lym_max,
        },
    );
    out.stream("sperner", "[n, kind, family]", jobs.len() as u64);
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct FireworkSummary {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub kappa_hat: f64,
    pub log_linear: bool,
}

fn firework(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let f = &cfg.firework;
    let law = StepLaw::alpha_tilde(f.c2)?;
    let stream = RngStream::new(cfg.seed, stream_id("firework", &[]), 0);
    let tail = reach_tail(&law, &f.ks, cfg.replicates as u64, f.variant, stream)?;
    let mut rows = Vec::new();
    for p in &tail.points {
        let exact = if p.k <= f.exact_k_max {
            let model = FireworkModel::homogeneous(p.k, law.clone())?.with_variant(f.variant);
            num(exact_full_reach(&model))
        } else {
            String::new()
        };
        rows.push(row![p.k, num(p.tail), num(p.se), p.hits, p.runs, exact]);
    }
    out.csv("firework.csv", &["k", "tail", "se", "hits", "runs", "exact"], rows);
    let fit = tail.fit;
    out.json(
        "firework.json",
        &FireworkSummary {
            slope: fit.map_or(f64::NAN, |f| f.slope),
            intercept: fit.map_or(f64::NAN, |f| f.intercept),
            r_squared: fit.map_or(f64::NAN, |f| f.r_squared),
            kappa_hat: tail.kappa_hat.unwrap_or(f64::NAN),
            log_linear: tail.log_linear,
        },
    );
    let blocks = (cfg.replicates as u64).div_ceil(1000);
    out.stream("firework", "[] (substream k<<32 + block)", blocks * f.ks.len() as u64);
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct CouplingSummary {
    pub holds: bool,
    pub pathwise_violations: u64,
    pub sweep_slope: f64,
    pub sweep_r_squared: f64,
}

fn xi_coupling(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let x = &cfg.xi;
    let (d, beta) = (cfg.model.d, cfg.model.beta);
    let ladder = build_ladder(x.eps, x.theta, x.c_star1)?;
    out.json("ladder.json", &ladder);
    out.csv(
        "crossing.csv",
        &["i", "p_a", "p_e"],
        crossing_table(&ladder, d, beta)?
            .iter()
            .map(|r| row![r.i, num(r.p_a), num(r.p_e)]),
    );
    let stream = RngStream::new(cfg.seed, stream_id("xi-coupling", &[]), 0);
    let report = coupling_check(&ladder, d, beta, cfg.replicates as u64, stream)?;
    out.csv(
        "coupling.csv",
        &["subset", "size", "w", "w_se", "reach", "reach_se", "holds", "pathwise_violations"],
        report.rows.iter().map(|r| {
            let s: Vec<String> = r.subset.iter().map(usize::to_string).collect();
            row![
                s.join(";"),
                r.subset.len(),
                num(r.w),
                num(r.w_se),
                num(r.reach),
                num(r.reach_se),
                r.holds,
                r.pathwise_violations
            ]
        }),
    );
    out.csv(
        "marginals.csv",
        &["i", "empirical", "exact"],
        report
            .marginals
            .iter()
            .enumerate()
            .map(|(i, &(e, x))| row![i + 1, num(e), num(x)]),
    );
    let sweep = a_ratio_sweep(d, beta, x.sweep_index, &x.sweep)?;
    out.csv(
        "crossing_sweep.csv",
        &["ratio", "p_a"],
        sweep.points.iter().map(|&(r, p)| row![num(r), num(p)]),
    );
    out.json(
        "coupling.json",
        &CouplingSummary {
            holds: report.holds(),
            pathwise_violations: report.rows.iter().map(|r| r.pathwise_violations).sum(),
            sweep_slope: sweep.fit.slope,
            sweep_r_squared: sweep.fit.r_squared,
        },
    );
    let blocks = (cfg.replicates as u64).div_ceil(1000);
    let subsets = (1u64 << ladder.k) - 1;
    out.stream("xi-coupling", "[] (ξ draws: substream = block)", blocks);
    out.stream(
        "xi-coupling",
        "[] (firework: substream 2^40 + mask·2^20 + block)",
        blocks * subsets,
    );
    Ok(())
}
