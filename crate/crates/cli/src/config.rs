//! Optional TOML configuration. Every value can also be given as a flag;
//! flags win.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;
use valuechain::icio::IcioCleaning;
use valuechain::ingest::ColumnMapping;
use valuechain::{FloorRule, MissingRank};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default)]
    pub cleaning: CleaningConfig,
    pub columns: Option<ColumnMapping>,
    /// ICIO country merges and dropped codes; defaults to the 2021 OECD edition.
    pub icio: Option<IcioCleaning>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub bench: BenchConfig,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub rca_locations_1: Option<f64>,
    pub rca_industries_1: Option<f64>,
    pub rca_locations_2: Option<f64>,
    pub rca_industries_2: Option<f64>,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub missing_rank: Option<MissingRank>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CleaningConfig {
    pub import_floor: Option<f64>,
    pub export_floor: Option<f64>,
    pub floor_rule: Option<FloorRule>,
    pub exclude_file: Option<PathBuf>,
    #[serde(default)]
    pub exclude: Vec<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// `lo:hi:step` applied to all four thresholds.
    pub range: Option<String>,
    pub rca_locations_1: Option<String>,
    pub rca_industries_1: Option<String>,
    pub rca_locations_2: Option<String>,
    pub rca_industries_2: Option<String>,
    pub checkpoint: Option<PathBuf>,
    pub checkpoint_every: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub regions: Option<usize>,
    pub products: Option<usize>,
    pub links: Option<usize>,
    pub strength: Option<f64>,
    pub noise: Option<f64>,
    pub seeds: Option<u64>,
    pub regions_per_link: Option<usize>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: Config =
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        // relative paths in the file are relative to the file
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.cleaning.exclude_file, &mut cfg.grid.checkpoint]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}
