//! Summaries and plot-ready TSV files (x, y, ci_lo, ci_hi) for a finished
//! run. Series without an interval repeat y in both interval columns.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use crate::experiments::{
    CouplingSummary, DimSummary, FireworkSummary, GoodcubesSummary, SpernerSummary, ThetaSummary,
};
use crate::output::num;
use crate::run::verify;

pub const REPORT_DIR: &str = "report";

struct Table {
    rows: Vec<HashMap<String, String>>,
}

impl Table {
    fn read(dir: &Path, name: &str) -> Result<Self> {
        let text = fs::read_to_string(dir.join(name)).with_context(|| format!("reading {name}"))?;
        let mut lines = text.lines();
        let header: Vec<String> = lines
            .next()
            .with_context(|| format!("{name} is empty"))?
            .split(',')
            .map(str::to_string)
            .collect();
        let rows = lines
            .map(|l| header.iter().cloned().zip(l.split(',').map(str::to_string)).collect())
            .collect();
        Ok(Self { rows })
    }

    fn f64s(&self, col: &str) -> Result<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| {
                let v = r.get(col).with_context(|| format!("missing column {col}"))?;
                if v.is_empty() {
                    return Ok(f64::NAN);
                }
                v.parse().with_context(|| format!("column {col}: `{v}`"))
            })
            .collect()
    }
}

fn read_json<T: serde::de::DeserializeOwned>(dir: &Path, name: &str) -> Result<T> {
    let text = fs::read_to_string(dir.join(name)).with_context(|| format!("reading {name}"))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {name}"))
}

#[derive(Debug, Default)]
pub struct Report {
    pub summary: String,
    /// TSV files written, relative to the report directory.
    pub figures: Vec<PathBuf>,
}

fn tsv(points: impl IntoIterator<Item = [f64; 4]>) -> String {
    let mut s = String::from("x\ty\tci_lo\tci_hi\n");
    for p in points {
        let _ = writeln!(s, "{}\t{}\t{}\t{}", num(p[0]), num(p[1]), num(p[2]), num(p[3]));
    }
    s
}

fn params(pairs: &[(&str, f64)]) -> String {
    let mut s = String::from("param\tvalue\n");
    for (k, v) in pairs {
        let _ = writeln!(s, "{k}\t{}", num(*v));
    }
    s
}

/// Verifies the run, then writes `report/summary.txt` and the TSV files.
pub fn report(dir: &Path) -> Result<Report> {
    let manifest = verify(dir)?;
    let mut files: Vec<(String, String)> = Vec::new();
    let mut summary = format!(
        "run: {}\nkind: {}\nversion: {}\nseed: {}\nfiles: {}\n",
        dir.display(),
        manifest.kind,
        manifest.code_version,
        manifest.rng.master_seed,
        manifest.files.len()
    );
    match manifest.kind.as_str() {
        "sample" => {
            let t = Table::read(dir, "sample.csv")?;
            let s: serde_json::Value = read_json(dir, "sample.json")?;
            let mean = s["expected_long_edges"].as_f64().unwrap_or(f64::NAN);
            let sd = s["long_edge_sd"].as_f64().unwrap_or(f64::NAN);
            let edges = t.f64s("long_edges")?;
            files.push((
                "sample.tsv".into(),
                tsv(edges
                    .iter()
                    .enumerate()
                    .map(|(r, &e)| [r as f64, e, mean - 1.96 * sd, mean + 1.96 * sd])),
            ));
            let _ = writeln!(summary, "expected long edges: {} (sd {})", num(mean), num(sd));
        }
        "scaling" => {
            let t = Table::read(dir, "medians.csv")?;
            let (n, a, lo, hi) = (t.f64s("n")?, t.f64s("a_n")?, t.f64s("ci_lo")?, t.f64s("ci_hi")?);
            files.push((
                "scaling.tsv".into(),
                tsv((0..n.len()).map(|i| [n[i].ln(), a[i].ln(), lo[i].ln(), hi[i].ln()])),
            ));
            let th: ThetaSummary = read_json(dir, "theta.json")?;
            files.push((
                "scaling_fit.tsv".into(),
                params(&[
                    ("slope", th.theta_hat),
                    ("intercept", th.intercept),
                    ("r_squared", th.r_squared),
                ]),
            ));
            let atoms = Table::read(dir, "atoms.csv")?;
            let (an, am) = (atoms.f64s("n")?, atoms.f64s("max_atom")?);
            files.push((
                "atoms.tsv".into(),
                tsv((0..an.len()).map(|i| [an[i].ln(), am[i], am[i], am[i]])),
            ));
            let _ = writeln!(
                summary,
                "theta_hat: {} (95% CI {} .. {}), r2 {}\nmax-atom trend: rho {} p {}",
                num(th.theta_hat),
                num(th.ci_lo),
                num(th.ci_hi),
                num(th.r_squared),
                num(th.atom_rho),
                num(th.atom_p_decreasing)
            );
        }
        "dim" => {
            let t = Table::read(dir, "dim.csv")?;
            let (k, count) = (t.f64s("k")?, t.f64s("count")?);
            let mut by_k: Vec<(f64, Vec<f64>)> = Vec::new();
            for (&kk, &c) in k.iter().zip(&count) {
                match by_k.iter_mut().find(|e| e.0 == kk) {
                    Some(e) => e.1.push(c.ln()),
                    None => by_k.push((kk, vec![c.ln()])),
                }
            }
            files.push((
                "dim.tsv".into(),
                tsv(by_k.iter().map(|(kk, v)| {
                    let q = |p| lrplab_core::stats::quantile(v, p).unwrap_or(f64::NAN);
                    [kk * std::f64::consts::LN_2, lrplab_core::stats::mean(v), q(0.025), q(0.975)]
                })),
            ));
            let s: DimSummary = read_json(dir, "dim_fit.json")?;
            files.push((
                "dim_fit.tsv".into(),
                params(&[("slope", s.dim_hat), ("intercept", s.intercept), ("r_squared", s.r_squared)]),
            ));
            let _ = writeln!(
                summary,
                "box-counting dimension: {} (r2 {}); per path {} ± {} over {} paths",
                num(s.dim_hat),
                num(s.r_squared),
                num(s.path_mean),
                num(s.path_sd),
                s.paths
            );
        }
        "goodcubes" => {
            let t = Table::read(dir, "goodcubes.csv")?;
            let (al, b, r, lo, hi) =
                (t.f64s("alpha")?, t.f64s("b")?, t.f64s("rate")?, t.f64s("ci_lo")?, t.f64s("ci_hi")?);
            let mut bs: Vec<f64> = Vec::new();
            for &x in &b {
                if !bs.contains(&x) {
                    bs.push(x);
                }
            }
            for (j, &bv) in bs.iter().enumerate() {
                files.push((
                    format!("goodcubes_b{j}.tsv"),
                    tsv((0..al.len()).filter(|&i| b[i] == bv).map(|i| [al[i], r[i], lo[i], hi[i]])),
                ));
            }
            let cs = Table::read(dir, "cs_counts.csv")?;
            let (k, m, bound) = (cs.f64s("k")?, cs.f64s("mean")?, cs.f64s("bound_3se")?);
            files.push((
                "cs_counts.tsv".into(),
                tsv((0..k.len()).map(|i| [k[i], m[i].ln(), m[i].ln(), bound[i].ln()])),
            ));
            let s: GoodcubesSummary = read_json(dir, "goodcubes.json")?;
            let _ = writeln!(
                summary,
                "a_s: {}; cubes: {}; monotonicity violations: {}; mu_hat: {} (se {})",
                num(s.a_s),
                s.cubes,
                s.monotonicity_violations,
                num(s.mu_hat),
                num(s.mu_se)
            );
        }
        "sperner" => {
            let t = Table::read(dir, "bound.csv")?;
            let (n, b) = (t.f64s("n")?, t.f64s("scaled_bound")?);
            let first_p = t.rows.first().and_then(|r| r.get("p").cloned()).unwrap_or_default();
            files.push((
                "sperner_bound.tsv".into(),
                tsv((0..n.len())
                    .filter(|&i| t.rows[i].get("p") == Some(&first_p))
                    .map(|i| [n[i], b[i], b[i], b[i]])),
            ));
            let s: SpernerSummary = read_json(dir, "sperner.json")?;
            let _ = writeln!(
                summary,
                "families: {}; chain checks: {}; failures: {}; max LYM: {}",
                s.families,
                s.checks,
                s.chain_failures,
                num(s.lym_max)
            );
        }
        "firework" => {
            let t = Table::read(dir, "firework.csv")?;
            let (k, p, se) = (t.f64s("k")?, t.f64s("tail")?, t.f64s("se")?);
            files.push((
                "firework.tsv".into(),
                tsv((0..k.len()).map(|i| {
                    [k[i], p[i].ln(), (p[i] - 1.96 * se[i]).max(0.0).ln(), (p[i] + 1.96 * se[i]).ln()]
                })),
            ));
            let s: FireworkSummary = read_json(dir, "firework.json")?;
            files.push((
                "firework_fit.tsv".into(),
                params(&[("slope", s.slope), ("intercept", s.intercept), ("r_squared", s.r_squared)]),
            ));
            let _ = writeln!(
                summary,
                "kappa_hat: {}; log-linear: {} (r2 {})",
                num(s.kappa_hat),
                s.log_linear,
                num(s.r_squared)
            );
        }
        "xi-coupling" => {
            let t = Table::read(dir, "coupling.csv")?;
            let (size, w, se) = (t.f64s("size")?, t.f64s("w")?, t.f64s("w_se")?);
            let (reach, rse) = (t.f64s("reach")?, t.f64s("reach_se")?);
            files.push((
                "coupling_w.tsv".into(),
                tsv((0..w.len()).map(|i| [size[i], w[i], w[i] - 1.96 * se[i], w[i] + 1.96 * se[i]])),
            ));
            files.push((
                "coupling_reach.tsv".into(),
                tsv((0..w.len()).map(|i| {
                    [size[i], reach[i], reach[i] - 1.96 * rse[i], reach[i] + 1.96 * rse[i]]
                })),
            ));
            let sw = Table::read(dir, "crossing_sweep.csv")?;
            let (ratio, pa) = (sw.f64s("ratio")?, sw.f64s("p_a")?);
            files.push((
                "crossing_sweep.tsv".into(),
                tsv((0..ratio.len()).map(|i| [ratio[i].ln(), pa[i].ln(), pa[i].ln(), pa[i].ln()])),
            ));
            let s: CouplingSummary = read_json(dir, "coupling.json")?;
            let _ = writeln!(
                summary,
                "coupling holds: {}; pathwise violations: {}; crossing sweep slope: {} (r2 {})",
                s.holds,
                s.pathwise_violations,
                num(s.sweep_slope),
                num(s.sweep_r_squared)
            );
        }
        other => anyhow::bail!("unknown run kind `{other}` in manifest"),
    }
    let out = dir.join(REPORT_DIR);
    fs::create_dir_all(&out)?;
    let mut figures = Vec::new();
    for (name, text) in &files {
        fs::write(out.join(name), text)?;
        figures.push(PathBuf::from(name));
    }
    fs::write(out.join("summary.txt"), &summary)?;
    Ok(Report { summary, figures })
}
