//! TOML run configuration. Every key is optional and defaults to the
//! published parameter values.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::execution::{Constraints, CostModel};
use crate::hypothesis::{GeneratorConfig, GeneratorSet};
use crate::marketdata::LoadOptions;
use crate::stats::StatsOptions;
use crate::walkforward::{FoldConfig, WalkForwardConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config:\n{}", format_problems(.0))]
    Invalid(Vec<(String, String)>),
}

fn format_problems(p: &[(String, String)]) -> String {
    p.iter()
        .map(|(k, m)| format!("  {k}: {m}"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Directory holding the manifest and bar files. Relative paths resolve
    /// against the config file's directory.
    pub dir: Option<PathBuf>,
    /// Manifest file name inside `dir`.
    pub manifest: String,
    pub max_gap_days: usize,
    pub reject_invalid_rows: bool,
    /// Benchmark symbol; used for regression and regimes, never traded.
    pub benchmark: Option<String>,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            dir: None,
            manifest: "universe.csv".into(),
            max_gap_days: 5,
            reject_invalid_rows: false,
            benchmark: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub epsilon_train: f64,
    pub epsilon_test: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            epsilon_train: 0.7,
            epsilon_test: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PortfolioConfig {
    pub initial_capital: f64,
    pub max_positions: usize,
    pub max_weight: f64,
    pub max_sector_weight: f64,
    pub max_hold_days: usize,
    pub cash_floor_fraction: f64,
    pub conflict_margin: f64,
    pub intraday_exits: bool,
}

impl Default for PortfolioConfig {
    fn default() -> Self {
        let c = Constraints::default();
        PortfolioConfig {
            initial_capital: 100_000.0,
            max_positions: c.max_positions,
            max_weight: c.max_weight,
            max_sector_weight: c.max_sector_weight,
            max_hold_days: c.max_hold_days,
            cash_floor_fraction: c.cash_floor_fraction,
            conflict_margin: c.conflict_margin,
            intraday_exits: c.intraday_exits,
        }
    }
}

impl PortfolioConfig {
    pub fn constraints(&self) -> Constraints {
        Constraints {
            max_positions: self.max_positions,
            max_weight: self.max_weight,
            max_sector_weight: self.max_sector_weight,
            max_hold_days: self.max_hold_days,
            cash_floor_fraction: self.cash_floor_fraction,
            conflict_margin: self.conflict_margin,
            intraday_exits: self.intraday_exits,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegimeConfig {
    /// Benchmark daily volatility separating low- from high-vol folds.
    pub threshold: f64,
}

impl Default for RegimeConfig {
    fn default() -> Self {
        RegimeConfig { threshold: 0.02 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    /// Worker threads for folds and resampling; 0 = all cores.
    pub jobs: usize,
    /// Output directory; relative paths resolve against the config file.
    pub output_dir: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            seed: 42,
            jobs: 0,
            output_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    pub walkforward: WalkForwardConfig,
    pub agent: AgentConfig,
    pub costs: CostModel,
    pub portfolio: PortfolioConfig,
    pub hypotheses: GeneratorConfig,
    pub stats: StatsOptions,
    pub regimes: RegimeConfig,
    pub run: RunSection,
}

fn unit(p: &mut Vec<(String, String)>, key: &str, v: f64) {
    if !(0.0..=1.0).contains(&v) {
        p.push((key.into(), format!("{v} must lie in [0, 1]")));
    }
}

fn positive(p: &mut Vec<(String, String)>, key: &str, v: f64) {
    if !(v > 0.0 && v.is_finite()) {
        p.push((key.into(), format!("{v} must be positive")));
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Parses and validates the file, resolving relative paths against it.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_toml_str(&text, path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(dir) = &cfg.data.dir {
            if dir.is_relative() {
                cfg.data.dir = Some(base.join(dir));
            }
        }
        if cfg.run.output_dir.is_relative() {
            cfg.run.output_dir = base.join(&cfg.run.output_dir);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Field-level problems, keyed by dotted path.
    pub fn problems(&self) -> Vec<(String, String)> {
        let mut p = Vec::new();
        unit(&mut p, "agent.epsilon_train", self.agent.epsilon_train);
        unit(&mut p, "agent.epsilon_test", self.agent.epsilon_test);
        if !(self.costs.commission >= 0.0 && self.costs.commission.is_finite()) {
            p.push(("costs.commission".into(), "must be a non-negative amount".into()));
        }
        if !(0.0..1.0).contains(&self.costs.slippage) {
            p.push((
                "costs.slippage".into(),
                format!("{} must lie in [0, 1)", self.costs.slippage),
            ));
        }
        let pf = &self.portfolio;
        positive(&mut p, "portfolio.initial_capital", pf.initial_capital);
        if pf.max_positions == 0 {
            p.push(("portfolio.max_positions".into(), "must be at least 1".into()));
        }
        if pf.max_hold_days == 0 {
            p.push(("portfolio.max_hold_days".into(), "must be at least 1".into()));
        }
        for (k, v) in [
            ("portfolio.max_weight", pf.max_weight),
            ("portfolio.max_sector_weight", pf.max_sector_weight),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                p.push((k.into(), format!("{v} must lie in (0, 1]")));
            }
        }
        if !(0.0..1.0).contains(&pf.cash_floor_fraction) {
            p.push((
                "portfolio.cash_floor_fraction".into(),
                format!("{} must lie in [0, 1)", pf.cash_floor_fraction),
            ));
        }
        if !(pf.conflict_margin >= 0.0) {
            p.push(("portfolio.conflict_margin".into(), "must be non-negative".into()));
        }
        let wf = &self.walkforward;
        for (k, v) in [
            ("walkforward.train_days", wf.train_days),
            ("walkforward.test_days", wf.test_days),
            ("walkforward.step_days", wf.step_days),
        ] {
            if v == 0 {
                p.push((k.into(), "must be at least 1".into()));
            }
        }
        if wf.test_days == 1 {
            p.push((
                "walkforward.test_days".into(),
                "needs at least 2 days to place and fill an order".into(),
            ));
        }
        p.extend(self.hypotheses.problems());
        let so = &self.stats;
        positive(&mut p, "stats.periods_per_year", so.periods_per_year);
        if so.bootstrap_resamples == 0 {
            p.push(("stats.bootstrap_resamples".into(), "must be at least 1".into()));
        }
        if so.permutations == 0 {
            p.push(("stats.permutations".into(), "must be at least 1".into()));
        }
        if !(so.confidence_level > 0.0 && so.confidence_level < 1.0) {
            p.push(("stats.confidence_level".into(), "must lie in (0, 1)".into()));
        }
        if !(so.alpha > 0.0 && so.alpha < 1.0) {
            p.push(("stats.alpha".into(), "must lie in (0, 1)".into()));
        }
        positive(&mut p, "regimes.threshold", self.regimes.threshold);
        p
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(p))
        }
    }

    /// sha256 of the canonical JSON form of the config, leaving out the
    /// settings that cannot change results (paths and worker count).
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.data.dir = None;
        c.run.jobs = 0;
        c.run.output_dir = PathBuf::new();
        let json = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn load_options(&self) -> LoadOptions {
        LoadOptions {
            max_gap_days: self.data.max_gap_days,
            reject_invalid_rows: self.data.reject_invalid_rows,
        }
    }

    pub fn fold_config(&self) -> FoldConfig {
        let mut generators = GeneratorSet::from_config(&self.hypotheses);
        if let Some(b) = &self.data.benchmark {
            generators = generators.skipping([b.clone()]);
        }
        FoldConfig {
            initial_capital: self.portfolio.initial_capital,
            epsilon_train: self.agent.epsilon_train,
            epsilon_test: self.agent.epsilon_test,
            costs: self.costs.clone(),
            constraints: self.portfolio.constraints(),
            generators,
        }
    }
}
