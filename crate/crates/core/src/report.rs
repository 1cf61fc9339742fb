//! Writes a run's results: report.json, folds.csv, trades.csv, manifest.json
//! and plot-ready series under `plots/`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::agent::AgentSnapshot;
use crate::config::RunConfig;
use crate::features::{FeatureRegistry, FeatureSpec};
use crate::marketdata::LoadReport;
use crate::pipeline::RunOutput;
use crate::seed::RNG_ALGORITHM;
use crate::stats::{
    cumulative, drawdowns, rolling_sharpe, rolling_win_rate, FoldSummary, PerformanceReport, RegimeSplit,
};
use crate::walkforward::WalkForwardConfig;

pub const SCHEMA_VERSION: u32 = 1;
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("{path}: {message}")]
    Json { path: PathBuf, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> ReportError + '_ {
    move |e| ReportError::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub master_seed: u64,
    pub engine_version: String,
    pub rng: String,
    /// symbol → sha256 of its bar file.
    pub panel_fingerprint: BTreeMap<String, String>,
    /// RFC 3339, UTC.
    pub timestamp: String,
    /// output file (relative) → sha256, filled in by [`emit_report`].
    #[serde(default)]
    pub outputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(cfg: &RunConfig, load: Option<&LoadReport>) -> Self {
        RunManifest {
            config_hash: cfg.hash(),
            master_seed: cfg.run.seed,
            engine_version: ENGINE_VERSION.into(),
            rng: RNG_ALGORITHM.into(),
            panel_fingerprint: load.map(LoadReport::fingerprint).unwrap_or_default(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            outputs: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FoldEntry<'a> {
    pub index: usize,
    pub train: (usize, usize),
    pub test: (usize, usize),
    pub test_start_date: String,
    pub test_end_date: String,
    pub seed: u64,
    pub fold_return: f64,
    pub train_return: f64,
    pub trade_count: usize,
    pub trade_wins: usize,
    pub train_trade_count: usize,
    pub benchmark_return: Option<f64>,
    pub benchmark_vol: Option<f64>,
    pub agent_snapshot: &'a AgentSnapshot,
}

/// Shape of report.json. Contains no timestamps, so identical inputs give
/// identical bytes.
#[derive(Debug, Clone, Serialize)]
pub struct ReportDocument<'a> {
    pub schema_version: u32,
    pub engine_version: &'static str,
    pub rng: &'static str,
    pub config_hash: String,
    pub master_seed: u64,
    pub walkforward: &'a WalkForwardConfig,
    pub panel_days: usize,
    pub symbols: &'a [String],
    pub benchmark: Option<&'a str>,
    pub fold_count: usize,
    pub performance: &'a PerformanceReport,
    pub regimes: Option<&'a RegimeSplit>,
    pub folds: Vec<FoldEntry<'a>>,
    pub features: Vec<FeatureSpec>,
    pub load_report: Option<&'a LoadReport>,
}

/// One folds.csv row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRow {
    pub index: usize,
    pub train_start: usize,
    pub train_end: usize,
    pub test_start: usize,
    pub test_end: usize,
    pub test_start_date: String,
    pub test_end_date: String,
    pub fold_return: f64,
    pub train_return: f64,
    pub trade_count: usize,
    pub trade_wins: usize,
    pub benchmark_return: Option<f64>,
    pub benchmark_vol: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
struct TradeRow<'a> {
    fold: usize,
    symbol: &'a str,
    htype: u8,
    htype_name: String,
    entry_date: String,
    entry_price: f64,
    exit_date: String,
    exit_price: f64,
    shares: u64,
    gross_return: f64,
    net_return: f64,
    exit_reason: &'static str,
    entry_commission: f64,
    exit_commission: f64,
    costs: f64,
    explanation: &'a str,
}

pub fn fold_rows(run: &RunOutput) -> Vec<FoldRow> {
    run.folds
        .iter()
        .zip(&run.summaries)
        .map(|(f, s)| FoldRow {
            index: f.index,
            train_start: f.spec.train.0,
            train_end: f.spec.train.1,
            test_start: f.spec.test.0,
            test_end: f.spec.test.1,
            test_start_date: f.test_start_date.to_string(),
            test_end_date: f.test_end_date.to_string(),
            fold_return: f.fold_return,
            train_return: f.train_return,
            trade_count: f.trade_count,
            trade_wins: f.trade_wins,
            benchmark_return: s.benchmark_return,
            benchmark_vol: s.benchmark_vol,
            seed: f.seed,
        })
        .collect()
}

pub fn report_document<'a>(run: &'a RunOutput, cfg: &'a RunConfig) -> ReportDocument<'a> {
    let folds = run
        .folds
        .iter()
        .zip(&run.summaries)
        .map(|(f, s)| FoldEntry {
            index: f.index,
            train: f.spec.train,
            test: f.spec.test,
            test_start_date: f.test_start_date.to_string(),
            test_end_date: f.test_end_date.to_string(),
            seed: f.seed,
            fold_return: f.fold_return,
            train_return: f.train_return,
            trade_count: f.trade_count,
            trade_wins: f.trade_wins,
            train_trade_count: f.train_trade_count,
            benchmark_return: s.benchmark_return,
            benchmark_vol: s.benchmark_vol,
            agent_snapshot: &f.agent_snapshot,
        })
        .collect();
    ReportDocument {
        schema_version: SCHEMA_VERSION,
        engine_version: ENGINE_VERSION,
        rng: RNG_ALGORITHM,
        config_hash: cfg.hash(),
        master_seed: cfg.run.seed,
        walkforward: &cfg.walkforward,
        panel_days: run.panel_days,
        symbols: &run.symbols,
        benchmark: run.benchmark.as_deref(),
        fold_count: run.folds.len(),
        performance: &run.performance,
        regimes: run.regimes.as_ref(),
        folds,
        features: FeatureRegistry::standard().specs().to_vec(),
        load_report: run.load_report.as_ref(),
    }
}

/// report.json bytes for a run.
pub fn report_json(run: &RunOutput, cfg: &RunConfig) -> String {
    let mut s = serde_json::to_string_pretty(&report_document(run, cfg)).expect("report serializes");
    s.push('\n');
    s
}

fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = T>) -> Result<(), ReportError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(csv_err(path))?;
    w.write_record(header).map_err(csv_err(path))?;
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_plots(run: &RunOutput, cfg: &RunConfig, dir: &Path) -> Result<(), ReportError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let r: Vec<f64> = run.summaries.iter().map(|s| s.fold_return).collect();
    let bench: Option<Vec<f64>> = run.summaries.iter().map(|s| s.benchmark_return).collect();
    let cum = cumulative(&r);
    let bench_cum = bench.as_deref().map(cumulative);
    let dates: Vec<String> = run.folds.iter().map(|f| f.test_end_date.to_string()).collect();
    let idx: Vec<usize> = run.folds.iter().map(|f| f.index).collect();

    write_csv(
        &dir.join("cumulative_return.csv"),
        &[
            "fold",
            "test_end_date",
            "cumulative_return",
            "benchmark_cumulative_return",
        ],
        (0..r.len()).map(|i| {
            (
                idx[i],
                &dates[i],
                cum[i] - 1.0,
                opt(bench_cum.as_ref().map(|b| b[i] - 1.0)),
            )
        }),
    )?;
    write_csv(
        &dir.join("fold_returns.csv"),
        &[
            "fold",
            "test_end_date",
            "fold_return",
            "benchmark_return",
            "trade_count",
        ],
        run.summaries.iter().enumerate().map(|(i, s)| {
            (
                s.index,
                &dates[i],
                s.fold_return,
                opt(s.benchmark_return),
                s.trade_count,
            )
        }),
    )?;
    let dd = drawdowns(&r);
    write_csv(
        &dir.join("drawdown.csv"),
        &["fold", "test_end_date", "value", "drawdown"],
        (0..r.len()).map(|i| (idx[i], &dates[i], cum[i], dd[i])),
    )?;
    let w = cfg.stats.rolling_window;
    let rs = rolling_sharpe(&r, w, cfg.stats.periods_per_year);
    let rw = rolling_win_rate(&r, w);
    write_csv(
        &dir.join("rolling.csv"),
        &["fold", "test_end_date", "window", "rolling_sharpe", "rolling_win_rate"],
        (0..r.len()).map(|i| (idx[i], &dates[i], w, opt(rs[i]), opt(rw[i]))),
    )?;
    write_csv(
        &dir.join("daily_equity.csv"),
        &["fold", "calendar_index", "equity"],
        run.folds.iter().flat_map(|f| {
            f.equity
                .iter()
                .enumerate()
                .map(move |(i, v)| (f.index, f.spec.test.0 + i, *v))
        }),
    )?;
    write_csv(
        &dir.join("hypothesis_types.csv"),
        &[
            "fold",
            "htype",
            "name",
            "train_executions",
            "train_wins",
            "train_win_rate",
            "train_mean_return",
            "test_trades",
            "test_wins",
        ],
        run.folds.iter().flat_map(|f| {
            f.agent_snapshot.iter().map(move |(name, st)| {
                let trades: Vec<_> = f.trades.iter().filter(|t| t.htype.name() == *name).collect();
                let htype = f
                    .trades
                    .iter()
                    .find(|t| t.htype.name() == *name)
                    .map(|t| t.htype.0)
                    .or_else(|| {
                        crate::hypothesis::HypothesisType::BUILTIN
                            .iter()
                            .find(|h| h.name() == *name)
                            .map(|h| h.0)
                    });
                (
                    f.index,
                    htype.map(|h| h.to_string()).unwrap_or_default(),
                    name.clone(),
                    st.executions,
                    st.wins,
                    st.win_rate(),
                    st.mean_return,
                    trades.len(),
                    trades.iter().filter(|t| t.net_return > 0.0).count(),
                )
            })
        }),
    )?;
    Ok(())
}

fn sha256_file(path: &Path) -> Result<String, ReportError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Writes every output file and returns their paths, manifest.json last.
pub fn emit_report(
    run: &RunOutput,
    cfg: &RunConfig,
    mut manifest: RunManifest,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;

    let report = out_dir.join("report.json");
    fs::write(&report, report_json(run, cfg)).map_err(io_err(&report))?;

    let folds = out_dir.join("folds.csv");
    let mut w = csv::Writer::from_path(&folds).map_err(csv_err(&folds))?;
    for row in fold_rows(run) {
        w.serialize(row).map_err(csv_err(&folds))?;
    }
    if run.folds.is_empty() {
        w.write_record([
            "index",
            "train_start",
            "train_end",
            "test_start",
            "test_end",
            "test_start_date",
            "test_end_date",
            "fold_return",
            "train_return",
            "trade_count",
            "trade_wins",
            "benchmark_return",
            "benchmark_vol",
            "seed",
        ])
        .map_err(csv_err(&folds))?;
    }
    w.flush().map_err(io_err(&folds))?;

    let trades = out_dir.join("trades.csv");
    write_csv(
        &trades,
        &[
            "fold",
            "symbol",
            "htype",
            "htype_name",
            "entry_date",
            "entry_price",
            "exit_date",
            "exit_price",
            "shares",
            "gross_return",
            "net_return",
            "exit_reason",
            "entry_commission",
            "exit_commission",
            "costs",
            "explanation",
        ],
        run.folds.iter().flat_map(|f| {
            f.trades.iter().map(move |t| TradeRow {
                fold: f.index,
                symbol: &t.symbol,
                htype: t.htype.0,
                htype_name: t.htype.name(),
                entry_date: t.entry_date.to_string(),
                entry_price: t.entry_price,
                exit_date: t.exit_date.to_string(),
                exit_price: t.exit_price,
                shares: t.shares,
                gross_return: t.gross_return,
                net_return: t.net_return,
                exit_reason: t.exit_reason.as_str(),
                entry_commission: t.entry_commission,
                exit_commission: t.exit_commission,
                costs: t.costs,
                explanation: &t.explanation,
            })
        }),
    )?;

    let plots = out_dir.join("plots");
    write_plots(run, cfg, &plots)?;

    let mut written = vec![report, folds, trades];
    let mut plot_files: Vec<PathBuf> = fs::read_dir(&plots)
        .map_err(io_err(&plots))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    plot_files.sort();
    written.extend(plot_files);

    manifest.outputs.clear();
    for p in &written {
        let rel = p
            .strip_prefix(out_dir)
            .unwrap_or(p)
            .to_string_lossy()
            .replace('\\', "/");
        manifest.outputs.insert(rel, sha256_file(p)?);
    }
    let mpath = out_dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    fs::write(&mpath, text).map_err(io_err(&mpath))?;
    written.push(mpath);
    Ok(written)
}

#[derive(Debug, Deserialize)]
struct SummaryRow {
    #[serde(default)]
    index: Option<usize>,
    fold_return: f64,
    #[serde(default)]
    trade_count: Option<usize>,
    #[serde(default)]
    trade_wins: Option<usize>,
    #[serde(default)]
    benchmark_return: Option<f64>,
    #[serde(default)]
    benchmark_vol: Option<f64>,
}

/// Fold summaries from a CSV with at least a `fold_return` column; `index`,
/// `trade_count`, `trade_wins`, `benchmark_return` and `benchmark_vol` are
/// optional.
pub fn read_fold_summaries(path: &Path) -> Result<Vec<FoldSummary>, ReportError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => ReportError::Io {
                path: path.to_path_buf(),
                source: std::io::Error::other(e.to_string()),
            },
            _ => csv_err(path)(e),
        })?;
    let headers = rdr.headers().map_err(csv_err(path))?.clone();
    if !headers.iter().any(|h| h == "fold_return") {
        return Err(ReportError::Csv {
            path: path.to_path_buf(),
            message: "missing required column fold_return".into(),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<SummaryRow>().enumerate() {
        let row = rec.map_err(csv_err(path))?;
        if !row.fold_return.is_finite() {
            return Err(ReportError::Csv {
                path: path.to_path_buf(),
                message: format!("row {}: fold_return is not finite", i + 2),
            });
        }
        out.push(FoldSummary {
            index: row.index.unwrap_or(i + 1),
            fold_return: row.fold_return,
            trade_count: row.trade_count.unwrap_or(0),
            trade_wins: row.trade_wins.unwrap_or(0),
            benchmark_return: row.benchmark_return,
            benchmark_vol: row.benchmark_vol,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summaries_read_with_optional_columns() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        fs::write(&p, "fold_return\n0.01\n-0.02\n").unwrap();
        let s = read_fold_summaries(&p).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!((s[1].index, s[1].fold_return, s[1].benchmark_return), (2, -0.02, None));

        fs::write(&p, "index,fold_return,benchmark_return,extra\n3,0.5,,x\n").unwrap();
        let s = read_fold_summaries(&p).unwrap();
        assert_eq!((s[0].index, s[0].benchmark_return), (3, None));
    }

    #[test]
    fn malformed_summaries_fail() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        fs::write(&p, "fold_return\nabc\n").unwrap();
        assert!(matches!(read_fold_summaries(&p), Err(ReportError::Csv { .. })));
        fs::write(&p, "ret\n0.1\n").unwrap();
        assert!(read_fold_summaries(&p).is_err());
        assert!(matches!(
            read_fold_summaries(&dir.path().join("missing.csv")),
            Err(ReportError::Io { .. })
        ));
    }
}
