//! Load → schedule folds → run them → summarize.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::marketdata::{load_panel, LoadReport, MarketDataError, PanelData};
use crate::par::Schedule;
use crate::stats::{regime_split, sample_sd, FoldSummary, PerformanceReport, RegimeSplit};
use crate::walkforward::{run_all, schedule, FoldResult, FoldSpec, WalkForwardError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Data(#[from] MarketDataError),
    #[error(transparent)]
    WalkForward(#[from] WalkForwardError),
    #[error("{0}")]
    Runtime(String),
}

impl PipelineError {
    /// 1 = configuration, 2 = data, 3 = anything that failed mid-run.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 1,
            PipelineError::Data(_) => 2,
            PipelineError::WalkForward(e) => match e {
                WalkForwardError::InvalidWindow { .. } => 1,
                WalkForwardError::EmptySchedule { .. } | WalkForwardError::Data(_) => 2,
                WalkForwardError::OutOfPanel { .. } | WalkForwardError::Fold { .. } => 3,
            },
            PipelineError::Runtime(_) => 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub specs: Vec<FoldSpec>,
    pub folds: Vec<FoldResult>,
    pub summaries: Vec<FoldSummary>,
    pub performance: PerformanceReport,
    pub regimes: Option<RegimeSplit>,
    pub benchmark: Option<String>,
    pub load_report: Option<LoadReport>,
    pub panel_days: usize,
    pub symbols: Vec<String>,
}

/// Manifest location: `[data] dir` unless overridden.
pub fn manifest_path(cfg: &RunConfig, data_dir: Option<&Path>) -> Result<(PathBuf, PathBuf), ConfigError> {
    let dir = data_dir
        .map(Path::to_path_buf)
        .or_else(|| cfg.data.dir.clone())
        .ok_or_else(|| ConfigError::Invalid(vec![("data.dir".into(), "no data directory given".into())]))?;
    Ok((dir.join(&cfg.data.manifest), dir))
}

/// Loads the panel named by the config and runs it.
pub fn run(cfg: &RunConfig, data_dir: Option<&Path>, sched: Schedule) -> Result<RunOutput, PipelineError> {
    cfg.validate()?;
    let (manifest, dir) = manifest_path(cfg, data_dir)?;
    let (panel, report) = load_panel(&manifest, &dir, &cfg.load_options())?;
    let mut out = run_panel(cfg, &panel, sched)?;
    out.load_report = Some(report);
    Ok(out)
}

/// Runs every fold on an in-memory panel and computes the statistics.
pub fn run_panel(cfg: &RunConfig, panel: &PanelData, sched: Schedule) -> Result<RunOutput, PipelineError> {
    cfg.validate()?;
    let bench = match &cfg.data.benchmark {
        Some(b) => Some(panel.symbol_index(b).ok_or_else(|| {
            ConfigError::Invalid(vec![("data.benchmark".into(), format!("{b} is not in the universe"))])
        })?),
        None => None,
    };
    let specs = schedule(panel.num_days(), &cfg.walkforward)?;
    let folds = run_all(panel, &specs, &cfg.fold_config(), cfg.run.seed, sched)?;
    let summaries = fold_summaries(panel, &folds, bench);
    let performance = PerformanceReport::compute(&summaries, &cfg.stats, cfg.run.seed, sched);
    let regimes = bench.map(|_| regime_split(&summaries, cfg.regimes.threshold, &cfg.stats, cfg.run.seed, sched));
    Ok(RunOutput {
        specs,
        folds,
        summaries,
        performance,
        regimes,
        benchmark: cfg.data.benchmark.clone(),
        load_report: None,
        panel_days: panel.num_days(),
        symbols: panel.universe().iter().map(|m| m.symbol.clone()).collect(),
    })
}

/// Buy-and-hold return of `symbol` over a test window, entering at the
/// close before it.
pub fn benchmark_return(panel: &PanelData, symbol: usize, test: (usize, usize)) -> f64 {
    let s = panel.series(symbol);
    s[test.1].close / s[test.0.saturating_sub(1)].close - 1.0
}

/// Sample sd of the daily close returns over a test window; None below two days.
pub fn benchmark_vol(panel: &PanelData, symbol: usize, test: (usize, usize)) -> Option<f64> {
    let r = panel.close_returns(symbol, test.0, test.1);
    (r.len() >= 2).then(|| sample_sd(&r))
}

pub fn fold_summaries(panel: &PanelData, folds: &[FoldResult], bench: Option<usize>) -> Vec<FoldSummary> {
    folds
        .iter()
        .map(|f| FoldSummary {
            index: f.index,
            fold_return: f.fold_return,
            trade_count: f.trade_count,
            trade_wins: f.trade_wins,
            benchmark_return: bench.map(|b| benchmark_return(panel, b, f.spec.test)),
            benchmark_vol: bench.and_then(|b| benchmark_vol(panel, b, f.spec.test)),
        })
        .collect()
}
