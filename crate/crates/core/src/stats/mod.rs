//! Fold-level performance metrics, benchmark regression and the
//! inference battery.

mod diagnostics;
mod inference;
mod metrics;
mod power;

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par::Schedule;
use crate::seed::{derive_labeled, EngineRng};

pub use diagnostics::{
    autocorrelation, distribution_diagnostics, excess_kurtosis, ljung_box, shapiro_wilk, skewness, Diagnostics,
    LjungBox, ShapiroWilk, LJUNG_BOX_LAGS,
};
pub use inference::{
    binomial_test, bootstrap_ci, bootstrap_means, permutation_test, quantile_sorted, t_test, Interval, TTest,
};
pub use metrics::{
    annualized_return, calmar, calmar_ratio, cumulative, downside_deviation, drawdowns, max_drawdown,
    regress_benchmark, rolling_sharpe, rolling_win_rate, sharpe, sortino, BenchmarkRegression, PERIODS_PER_YEAR,
};
pub use power::{effect_size_and_power, effect_size_for, n_for_power, power, EffectSize, PowerRow, PowerVariant};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("value {index} is not finite")]
    NonFinite { index: usize },
    #[error("{0} is zero; the statistic is undefined")]
    ZeroDispersion(&'static str),
    #[error("series lengths differ ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("{0}")]
    Invalid(String),
    #[error("distribution: {0}")]
    Distribution(String),
}

pub(crate) fn check(r: &[f64], needed: usize) -> Result<(), StatsError> {
    if r.len() < needed {
        return Err(StatsError::TooShort { needed, got: r.len() });
    }
    if let Some(index) = r.iter().position(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite { index });
    }
    Ok(())
}

pub fn mean(r: &[f64]) -> f64 {
    r.iter().sum::<f64>() / r.len() as f64
}

/// Sample (n - 1) standard deviation.
pub fn sample_sd(r: &[f64]) -> f64 {
    let m = mean(r);
    (r.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (r.len() as f64 - 1.0)).sqrt()
}

/// Labeled, validated sequence of per-period returns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    label: String,
    values: Vec<f64>,
}

impl ReturnSeries {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Result<Self, StatsError> {
        check(&values, 1)?;
        Ok(ReturnSeries {
            label: label.into(),
            values,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl std::ops::Deref for ReturnSeries {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.values
    }
}

/// Seeded normal draws shifted and scaled to exactly `mean` and sample sd `sd`.
pub fn matched_series(n: usize, target_mean: f64, sd: f64, seed: u64) -> Vec<f64> {
    let mut rng = EngineRng::seed_from_u64(seed);
    let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let (m, s) = (mean(&z), sample_sd(&z));
    z.iter().map(|x| target_mean + sd * (x - m) / s).collect()
}

/// Per-fold inputs to the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldSummary {
    pub index: usize,
    pub fold_return: f64,
    pub trade_count: usize,
    pub trade_wins: usize,
    /// Benchmark buy-and-hold return over the same test window.
    pub benchmark_return: Option<f64>,
    /// Sample sd of the benchmark's daily returns over the test window.
    pub benchmark_vol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsOptions {
    pub periods_per_year: f64,
    pub bootstrap_resamples: usize,
    pub permutations: usize,
    pub confidence_level: f64,
    pub alpha: f64,
    pub rolling_window: usize,
}

impl Default for StatsOptions {
    fn default() -> Self {
        StatsOptions {
            periods_per_year: PERIODS_PER_YEAR,
            bootstrap_resamples: 10_000,
            permutations: 10_000,
            confidence_level: 0.95,
            alpha: 0.05,
            rolling_window: 4,
        }
    }
}

/// Return and risk metrics of one series; None where undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnMetrics {
    pub periods: usize,
    pub mean_return: Option<f64>,
    pub annualized_return: Option<f64>,
    pub stdev: Option<f64>,
    pub annualized_stdev: Option<f64>,
    pub best: Option<f64>,
    pub worst: Option<f64>,
    pub sharpe_ratio: Option<f64>,
    pub sortino_ratio: Option<f64>,
    pub max_drawdown: Option<f64>,
    pub calmar_ratio: Option<f64>,
    pub profitable_periods: usize,
    pub win_rate: Option<f64>,
}

impl ReturnMetrics {
    pub fn compute(r: &[f64], periods_per_year: f64) -> Self {
        let some = !r.is_empty() && check(r, 1).is_ok();
        let two = r.len() >= 2 && some;
        let sd = two.then(|| sample_sd(r));
        let profitable = r.iter().filter(|x| **x > 0.0).count();
        ReturnMetrics {
            periods: r.len(),
            mean_return: some.then(|| mean(r)),
            annualized_return: annualized_return(r, periods_per_year).ok(),
            stdev: sd,
            annualized_stdev: sd.map(|s| s * periods_per_year.sqrt()),
            best: some.then(|| r.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            worst: some.then(|| r.iter().copied().fold(f64::INFINITY, f64::min)),
            sharpe_ratio: sharpe(r, periods_per_year).ok(),
            sortino_ratio: sortino(r, periods_per_year).ok(),
            max_drawdown: max_drawdown(r).ok(),
            calmar_ratio: calmar(r, periods_per_year).ok(),
            profitable_periods: profitable,
            win_rate: (!r.is_empty()).then(|| profitable as f64 / r.len() as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradingActivity {
    pub total_test_periods: usize,
    pub profitable_periods: usize,
    pub average_trades_per_period: Option<f64>,
    pub total_trades: usize,
    pub winning_trades: usize,
    /// Σ wins / Σ trades over all folds.
    pub trade_win_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinomialResult {
    pub successes: u64,
    pub trials: u64,
    pub null_rate: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestBattery {
    pub t_test: Option<TTest>,
    pub bootstrap_ci: Option<Interval>,
    pub permutation_p: Option<f64>,
    pub binomial_win_rate: Option<BinomialResult>,
    pub effect_size: Option<EffectSize>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceReport {
    pub strategy: ReturnMetrics,
    pub benchmark: Option<ReturnMetrics>,
    pub market_exposure: Option<BenchmarkRegression>,
    pub trading: TradingActivity,
    pub tests: TestBattery,
}

impl PerformanceReport {
    /// Everything derivable from the fold summaries. Resampling streams are
    /// derived from `seed`; `schedule` never changes the numbers.
    pub fn compute(folds: &[FoldSummary], opts: &StatsOptions, seed: u64, schedule: Schedule) -> Self {
        let r: Vec<f64> = folds.iter().map(|f| f.fold_return).collect();
        let ppy = opts.periods_per_year;
        let strategy = ReturnMetrics::compute(&r, ppy);
        let bench: Option<Vec<f64>> = if folds.is_empty() {
            None
        } else {
            folds.iter().map(|f| f.benchmark_return).collect()
        };
        let total_trades: usize = folds.iter().map(|f| f.trade_count).sum();
        let winning_trades: usize = folds.iter().map(|f| f.trade_wins).sum();
        let trading = TradingActivity {
            total_test_periods: folds.len(),
            profitable_periods: strategy.profitable_periods,
            average_trades_per_period: (!folds.is_empty()).then(|| total_trades as f64 / folds.len() as f64),
            total_trades,
            winning_trades,
            trade_win_rate: (total_trades > 0).then(|| winning_trades as f64 / total_trades as f64),
        };
        let binomial_win_rate = (!r.is_empty()).then(|| {
            let (k, n) = (strategy.profitable_periods as u64, r.len() as u64);
            BinomialResult {
                successes: k,
                trials: n,
                null_rate: 0.5,
                p_value: binomial_test(k, n, 0.5).expect("k <= n"),
            }
        });
        let tests = TestBattery {
            t_test: t_test(&r, 0.0).ok(),
            bootstrap_ci: bootstrap_ci(
                &r,
                opts.bootstrap_resamples,
                opts.confidence_level,
                derive_labeled(seed, "bootstrap", 0),
                schedule,
            )
            .ok(),
            permutation_p: permutation_test(&r, opts.permutations, derive_labeled(seed, "permutation", 0), schedule)
                .ok(),
            binomial_win_rate,
            effect_size: effect_size_and_power(&r, opts.alpha).ok(),
            diagnostics: distribution_diagnostics(&r),
        };
        PerformanceReport {
            strategy,
            market_exposure: bench.as_ref().and_then(|b| regress_benchmark(&r, b, ppy).ok()),
            benchmark: bench.map(|b| ReturnMetrics::compute(&b, ppy)),
            trading,
            tests,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub fold_indices: Vec<usize>,
    /// True when no fold fell in this regime.
    pub empty: bool,
    pub report: Option<PerformanceReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeSplit {
    pub threshold: f64,
    pub low_vol: RegimeReport,
    pub high_vol: RegimeReport,
}

/// Splits folds by benchmark realized daily volatility: `< threshold` is
/// low, `>= threshold` high. Folds without a volatility reading are left out.
pub fn regime_split(
    folds: &[FoldSummary],
    threshold: f64,
    opts: &StatsOptions,
    seed: u64,
    schedule: Schedule,
) -> RegimeSplit {
    let side = |high: bool, label: &str| {
        let sel: Vec<FoldSummary> = folds
            .iter()
            .filter(|f| f.benchmark_vol.is_some_and(|v| (v >= threshold) == high))
            .cloned()
            .collect();
        RegimeReport {
            fold_indices: sel.iter().map(|f| f.index).collect(),
            empty: sel.is_empty(),
            report: (!sel.is_empty())
                .then(|| PerformanceReport::compute(&sel, opts, derive_labeled(seed, label, 0), schedule)),
        }
    };
    RegimeSplit {
        threshold,
        low_vol: side(false, "regime-low"),
        high_vol: side(true, "regime-high"),
    }
}
