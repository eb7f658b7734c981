//! Experiment configuration. Values are resolved as built-in defaults, then
//! `LRPLAB_*` environment variables, then the config file, then flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

pub const ENV_PREFIX: &str = "LRPLAB_";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Sample,
    Scaling,
    Dim,
    Goodcubes,
    Sperner,
    Firework,
    XiCoupling,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Sample => "sample",
            Kind::Scaling => "scaling",
            Kind::Dim => "dim",
            Kind::Goodcubes => "goodcubes",
            Kind::Sperner => "sperner",
            Kind::Firework => "firework",
            Kind::XiCoupling => "xi-coupling",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub d: usize,
    pub beta: f64,
    /// Box side for `sample`; macroscopic scale for `dim`.
    pub n: u64,
    /// Scales for `scaling`.
    pub ladder: Vec<u64>,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            d: 1,
            beta: 1.0,
            n: 64,
            ladder: (5..=9).map(|k| 1 << k).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalingSection {
    pub side_factor: u64,
    /// Also count geodesics and their overlap at every scale.
    pub multiplicity: bool,
}

impl Default for ScalingSection {
    fn default() -> Self {
        Self {
            side_factor: 3,
            multiplicity: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DimSection {
    pub side_factor: u64,
    /// Tile sides are L / 2^k for these k.
    pub scales: Vec<u32>,
}

impl Default for DimSection {
    fn default() -> Self {
        Self {
            side_factor: 3,
            scales: vec![1, 2, 3, 4, 5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GoodcubesSection {
    pub s: u64,
    pub alphas: Vec<f64>,
    pub bs: Vec<f64>,
    pub theta: f64,
    /// Distance scale a_s; estimated as the median d(0, s·1) when absent.
    pub a_s: Option<f64>,
    /// Tile side and tiles per axis for the connected-set counts.
    pub tile_side: u64,
    pub tiles: u64,
    pub k_max: usize,
}

impl Default for GoodcubesSection {
    fn default() -> Self {
        Self {
            s: 16,
            alphas: vec![0.5, 0.25, 0.1],
            bs: vec![1.0],
            theta: 0.5,
            a_s: None,
            tile_side: 8,
            tiles: 15,
            k_max: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpernerSection {
    pub n_values: Vec<u32>,
    pub kinds: Vec<lrplab_core::sperner::FamilyKind>,
    /// Bernoulli parameters as fractions, e.g. "1/4".
    pub p: Vec<String>,
    /// Largest n for the log-space bound curve.
    pub bound_n_max: u64,
}

impl Default for SpernerSection {
    fn default() -> Self {
        use lrplab_core::sperner::FamilyKind::*;
        Self {
            n_values: (4..=12).collect(),
            kinds: vec![AntichainLow, GreedyMaximal, RandomLevels],
            p: vec!["1/4".into(), "1/2".into(), "3/4".into()],
            bound_n_max: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FireworkSection {
    pub c2: f64,
    pub ks: Vec<usize>,
    pub variant: lrplab_core::firework::ReachVariant,
    /// Exact reach probabilities are also computed for k up to this value.
    pub exact_k_max: usize,
}

impl Default for FireworkSection {
    fn default() -> Self {
        Self {
            c2: 1.0,
            ks: (2..=12).collect(),
            variant: Default::default(),
            exact_k_max: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct XiSection {
    pub eps: f64,
    pub theta: f64,
    pub c_star1: f64,
    /// Ratios N for the P[A_i] sweep.
    pub sweep: Vec<f64>,
    pub sweep_index: usize,
}

impl Default for XiSection {
    fn default() -> Self {
        Self {
            eps: 1e-3,
            theta: 0.5,
            c_star1: 0.5,
            sweep: vec![2.0, 4.0, 8.0, 16.0],
            sweep_index: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub seed: u64,
    pub out: PathBuf,
    pub replicates: usize,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub scaling: ScalingSection,
    #[serde(default)]
    pub dim: DimSection,
    #[serde(default)]
    pub goodcubes: GoodcubesSection,
    #[serde(default)]
    pub sperner: SpernerSection,
    #[serde(default)]
    pub firework: FireworkSection,
    #[serde(default)]
    pub xi: XiSection,
}

/// What a config file may contain: every field optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    kind: Option<Kind>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    replicates: Option<usize>,
    jobs: Option<usize>,
    model: Option<ModelSection>,
    scaling: Option<ScalingSection>,
    dim: Option<DimSection>,
    goodcubes: Option<GoodcubesSection>,
    sperner: Option<SpernerSection>,
    firework: Option<FireworkSection>,
    xi: Option<XiSection>,
}

/// Command-line values; `None` leaves the lower layers in charge.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub replicates: Option<usize>,
}

fn default_replicates(kind: Kind) -> usize {
    match kind {
        Kind::Sample => 1,
        Kind::Scaling | Kind::Dim => 50,
        Kind::Goodcubes => 200,
        Kind::Sperner => 100,
        Kind::Firework | Kind::XiCoupling => 10_000,
    }
}

fn env_value<T: std::str::FromStr>(key: &str, env: &dyn Fn(&str) -> Option<String>) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    let name = format!("{ENV_PREFIX}{key}");
    match env(&name) {
        None => Ok(None),
        Some(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|e| anyhow::anyhow!("environment variable {name}: {e}")),
    }
}

impl ExperimentConfig {
    /// Resolves a config from the process environment.
    pub fn resolve(kind: Kind, flags: &Overrides) -> Result<Self> {
        Self::resolve_with_env(kind, flags, &|k| std::env::var(k).ok())
    }

    pub fn resolve_with_env(
        kind: Kind,
        flags: &Overrides,
        env: &dyn Fn(&str) -> Option<String>,
    ) -> Result<Self> {
        let file = match &flags.config {
            Some(path) => Self::read_file(path)?,
            None => FileConfig::default(),
        };
        if let Some(k) = file.kind {
            if k != kind {
                bail!(
                    "config field `kind`: file says `{}` but the subcommand is `{}`",
                    k.name(),
                    kind.name()
                );
            }
        }
        let mut cfg = ExperimentConfig {
            kind,
            seed: 0,
            out: PathBuf::from(format!("runs/{}", kind.name())),
            replicates: default_replicates(kind),
            jobs: 0,
            model: ModelSection::default(),
            scaling: ScalingSection::default(),
            dim: DimSection::default(),
            goodcubes: GoodcubesSection::default(),
            sperner: SpernerSection::default(),
            firework: FireworkSection::default(),
            xi: XiSection::default(),
        };
        if let Some(v) = env_value("SEED", env)? {
            cfg.seed = v;
        }
        if let Some(v) = env_value::<String>("OUT", env)? {
            cfg.out = v.into();
        }
        if let Some(v) = env_value("JOBS", env)? {
            cfg.jobs = v;
        }
        if let Some(v) = env_value("REPLICATES", env)? {
            cfg.replicates = v;
        }
        cfg.seed = file.seed.unwrap_or(cfg.seed);
        cfg.out = file.out.unwrap_or(cfg.out);
        cfg.replicates = file.replicates.unwrap_or(cfg.replicates);
        cfg.jobs = file.jobs.unwrap_or(cfg.jobs);
        cfg.model = file.model.unwrap_or(cfg.model);
        cfg.scaling = file.scaling.unwrap_or(cfg.scaling);
        cfg.dim = file.dim.unwrap_or(cfg.dim);
        cfg.goodcubes = file.goodcubes.unwrap_or(cfg.goodcubes);
        cfg.sperner = file.sperner.unwrap_or(cfg.sperner);
        cfg.firework = file.firework.unwrap_or(cfg.firework);
        cfg.xi = file.xi.unwrap_or(cfg.xi);
        cfg.seed = flags.seed.unwrap_or(cfg.seed);
        cfg.out = flags.out.clone().unwrap_or(cfg.out);
        cfg.replicates = flags.replicates.unwrap_or(cfg.replicates);
        cfg.jobs = flags.jobs.unwrap_or(cfg.jobs);
        cfg.validate()?;
        Ok(cfg)
    }

    fn read_file(path: &Path) -> Result<FileConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    /// Parses a complete config (as stored in a manifest).
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).context("invalid config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is plain data")
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            bail!("config field `replicates`: must be positive");
        }
        let m = &self.model;
        lrplab_core::ModelConfig::new(m.d, m.beta, m.n.max(2), self.seed)
            .context("config section `model`")?;
        match self.kind {
            Kind::Scaling => {
                lrplab_core::scaling::Ladder::new(m.ladder.clone(), self.replicates)
                    .context("config fields `model.ladder`/`replicates`")?;
                if self.scaling.side_factor < 3 {
                    bail!("config field `scaling.side_factor`: must be at least 3");
                }
            }
            Kind::Dim => {
                if self.dim.scales.len() < lrplab_core::geodesic_dim::MIN_SCALES {
                    bail!("config field `dim.scales`: need at least four scales");
                }
                if self.dim.scales.iter().any(|&k| m.n >> k == 0) {
                    bail!("config field `dim.scales`: tiles smaller than one lattice unit");
                }
            }
            Kind::Goodcubes => {
                let g = &self.goodcubes;
                if g.s < 2 {
                    bail!("config field `goodcubes.s`: must be at least 2");
                }
                if g.alphas.is_empty() || g.bs.is_empty() {
                    bail!("config field `goodcubes.alphas`/`goodcubes.bs`: must be nonempty");
                }
            }
            Kind::Sperner => {
                for p in &self.sperner.p {
                    lrplab_core::sperner::parse_rational(p).context("config field `sperner.p`")?;
                }
            }
            Kind::Firework | Kind::XiCoupling | Kind::Sample => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_env(_: &str) -> Option<String> {
        None
    }

    #[test]
    fn precedence_is_default_env_file_flag() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "seed = 7\nreplicates = 40\n").unwrap();
        let env = |k: &str| match k {
            "LRPLAB_SEED" => Some("3".to_string()),
            "LRPLAB_JOBS" => Some("2".to_string()),
            "LRPLAB_REPLICATES" => Some("99".to_string()),
            _ => None,
        };
        let flags = Overrides {
            config: Some(path),
            replicates: Some(31),
            ..Default::default()
        };
        let cfg = ExperimentConfig::resolve_with_env(Kind::Scaling, &flags, &env).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.jobs, 2);
        assert_eq!(cfg.replicates, 31);
    }

    #[test]
    fn unknown_keys_and_kinds_are_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "[model]\nbta = 1.0\n").unwrap();
        let flags = Overrides {
            config: Some(path.clone()),
            ..Default::default()
        };
        let err = ExperimentConfig::resolve_with_env(Kind::Sample, &flags, &no_env).unwrap_err();
        assert!(format!("{err:#}").contains("bta"), "{err:#}");
        std::fs::write(&path, "kind = \"bogus\"\n").unwrap();
        let err = ExperimentConfig::resolve_with_env(Kind::Sample, &flags, &no_env).unwrap_err();
        assert!(format!("{err:#}").contains("kind"), "{err:#}");
    }

    #[test]
    fn full_config_round_trips() {
        let cfg = ExperimentConfig::resolve_with_env(Kind::Dim, &Overrides::default(), &no_env).unwrap();
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }
}
