//! Rolling train/test folds and the per-fold train-then-test protocol.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{AgentSnapshot, AgentState};
use crate::execution::{run_phase, Constraints, CostModel, ExecutionError, PhaseParams, Portfolio, TradeRecord};
use crate::hypothesis::GeneratorSet;
use crate::marketdata::{MarketDataError, PanelData};
use crate::par::{map_indexed, Schedule};
use crate::seed::derive_seed;

#[derive(Debug, Error)]
pub enum WalkForwardError {
    #[error("window sizes must be at least 1 (train {train}, test {test}, step {step})")]
    InvalidWindow { train: usize, test: usize, step: usize },
    #[error("{days} days cannot hold one fold of {train} train + {test} test days")]
    EmptySchedule { days: usize, train: usize, test: usize },
    #[error("fold {index}: range {start}..={end} outside a {days}-day panel")]
    OutOfPanel {
        index: usize,
        start: usize,
        end: usize,
        days: usize,
    },
    #[error("fold {index}: {source}")]
    Fold {
        index: usize,
        #[source]
        source: ExecutionError,
    },
    #[error(transparent)]
    Data(#[from] MarketDataError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkForwardConfig {
    pub train_days: usize,
    pub test_days: usize,
    pub step_days: usize,
    /// Drop the final fold when the days past it don't fill a whole step.
    pub drop_partial_final: bool,
}

impl Default for WalkForwardConfig {
    fn default() -> Self {
        WalkForwardConfig {
            train_days: 252,
            test_days: 63,
            step_days: 63,
            drop_partial_final: false,
        }
    }
}

/// One fold, calendar indices 0-based and inclusive; `index` counts from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSpec {
    pub index: usize,
    pub train: (usize, usize),
    pub test: (usize, usize),
}

/// Folds k = 1..K with K = floor((T - W - H) / step) + 1.
pub fn partition(days: usize, train: usize, test: usize, step: usize) -> Result<Vec<FoldSpec>, WalkForwardError> {
    if train == 0 || test == 0 || step == 0 {
        return Err(WalkForwardError::InvalidWindow { train, test, step });
    }
    if days < train + test {
        return Err(WalkForwardError::EmptySchedule { days, train, test });
    }
    let k = (days - train - test) / step + 1;
    Ok((0..k)
        .map(|i| {
            let s = i * step;
            FoldSpec {
                index: i + 1,
                train: (s, s + train - 1),
                test: (s + train, s + train + test - 1),
            }
        })
        .collect())
}

/// [`partition`] with the config's windows and partial-final rule.
pub fn schedule(days: usize, cfg: &WalkForwardConfig) -> Result<Vec<FoldSpec>, WalkForwardError> {
    let mut folds = partition(days, cfg.train_days, cfg.test_days, cfg.step_days)?;
    let leftover = (days - cfg.train_days - cfg.test_days) % cfg.step_days;
    if cfg.drop_partial_final && leftover != 0 && folds.len() > 1 {
        folds.pop();
    }
    Ok(folds)
}

/// Everything a fold needs besides the panel and its seed.
#[derive(Debug, Clone)]
pub struct FoldConfig {
    pub initial_capital: f64,
    pub epsilon_train: f64,
    pub epsilon_test: f64,
    pub costs: CostModel,
    pub constraints: Constraints,
    pub generators: GeneratorSet,
}

impl FoldConfig {
    pub fn new(generators: GeneratorSet) -> Self {
        FoldConfig {
            initial_capital: 100_000.0,
            epsilon_train: 0.7,
            epsilon_test: 0.1,
            costs: CostModel::default(),
            constraints: Constraints::default(),
            generators,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldResult {
    pub index: usize,
    pub spec: FoldSpec,
    pub seed: u64,
    pub test_start_date: NaiveDate,
    pub test_end_date: NaiveDate,
    /// Test-phase terminal value over initial capital, minus one.
    pub fold_return: f64,
    pub trade_count: usize,
    pub trade_wins: usize,
    pub train_return: f64,
    pub train_trade_count: usize,
    /// Agent statistics at the end of training; frozen through testing.
    pub agent_snapshot: AgentSnapshot,
    pub trades: Vec<TradeRecord>,
    /// Test-phase value at each close, last entry after liquidation.
    pub equity: Vec<f64>,
}

/// Train then test one fold on its own slice of the panel.
pub fn run_fold(
    panel: &PanelData,
    spec: &FoldSpec,
    config: &FoldConfig,
    seed: u64,
) -> Result<FoldResult, WalkForwardError> {
    let (start, end) = (spec.train.0, spec.test.1);
    if end >= panel.num_days() || spec.train.1 + 1 != spec.test.0 {
        return Err(WalkForwardError::OutOfPanel {
            index: spec.index,
            start,
            end,
            days: panel.num_days(),
        });
    }
    let window = panel.slice(start, end)?;
    let (train_end, test_start, test_end) = (spec.train.1 - start, spec.test.0 - start, end - start);
    let fold_err = |source| WalkForwardError::Fold {
        index: spec.index,
        source,
    };

    let mut agent = AgentState::new(&config.generators.types(), seed);
    let mut book = Portfolio::new(config.initial_capital, config.costs.clone(), config.constraints.clone());
    let train = run_phase(
        &mut book,
        &mut agent,
        &window,
        &config.generators,
        0,
        train_end,
        PhaseParams {
            epsilon: config.epsilon_train,
            learn: true,
        },
    )
    .map_err(fold_err)?;
    let snapshot = agent.snapshot();

    let mut book = Portfolio::new(config.initial_capital, config.costs.clone(), config.constraints.clone());
    let test = run_phase(
        &mut book,
        &mut agent,
        &window,
        &config.generators,
        test_start,
        test_end,
        PhaseParams {
            epsilon: config.epsilon_test,
            learn: false,
        },
    )
    .map_err(fold_err)?;
    debug_assert_eq!(snapshot, agent.snapshot());

    let calendar = window.calendar();
    Ok(FoldResult {
        index: spec.index,
        spec: *spec,
        seed,
        test_start_date: calendar[test_start],
        test_end_date: calendar[test_end],
        fold_return: test.terminal_value / config.initial_capital - 1.0,
        trade_count: test.trades.len(),
        trade_wins: test.trades.iter().filter(|r| r.net_return > 0.0).count(),
        train_return: train.terminal_value / config.initial_capital - 1.0,
        train_trade_count: train.trades.len(),
        agent_snapshot: snapshot,
        trades: test.trades,
        equity: test.equity,
    })
}

/// Seed for fold `index`; depends on nothing but the master seed and `index`.
pub fn fold_seed(master_seed: u64, index: usize) -> u64 {
    derive_seed(master_seed, index as u64)
}

/// Every fold in `specs`, ordered as given, independent of `schedule`.
pub fn run_all(
    panel: &PanelData,
    specs: &[FoldSpec],
    config: &FoldConfig,
    master_seed: u64,
    schedule: Schedule,
) -> Result<Vec<FoldResult>, WalkForwardError> {
    map_indexed(specs.len(), schedule, |i| {
        run_fold(panel, &specs[i], config, fold_seed(master_seed, specs[i].index))
    })
    .into_iter()
    .collect()
}
