//! Order handling, fills with frictions, constraint enforcement and exits.

mod portfolio;
mod simulate;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::AgentError;
use crate::hypothesis::{Action, Hypothesis, HypothesisType};
use crate::marketdata::MarketDataError;

pub use portfolio::{ExitOrder, Fill, Portfolio, Position};
pub use simulate::{liquidate, run_phase, simulate_day, DayOutcome, PhaseOutcome, PhaseParams};

#[derive(Debug, Error)]
pub enum ExecutionError {
    #[error("order for {0} shares; quantity must be positive")]
    NonPositiveShares(u64),
    #[error("execution price {0} must be positive")]
    NonPositivePrice(f64),
    #[error("no price for held symbol {0}")]
    MissingPrice(String),
    #[error("no open position in {0}")]
    NotHeld(String),
    #[error("day {t}: orders need a next session, but the window ends at {last}")]
    NoNextSession { t: usize, last: usize },
    #[error(transparent)]
    Data(#[from] MarketDataError),
    #[error(transparent)]
    Agent(#[from] AgentError),
}

/// Fixed commission per fill plus proportional slippage on traded value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostModel {
    pub commission: f64,
    pub slippage: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            commission: 1.0,
            slippage: 0.0005,
        }
    }
}

impl CostModel {
    /// Commission plus slippage on `shares` executed at `exec_price`.
    pub fn transaction_cost(&self, shares: u64, exec_price: f64) -> Result<f64, ExecutionError> {
        if shares == 0 {
            return Err(ExecutionError::NonPositiveShares(shares));
        }
        if !(exec_price > 0.0) {
            return Err(ExecutionError::NonPositivePrice(exec_price));
        }
        Ok(self.commission + self.slippage * shares as f64 * exec_price)
    }

    pub fn buy_fill(&self, open: f64) -> f64 {
        open * (1.0 + self.slippage)
    }

    pub fn sell_fill(&self, open: f64) -> f64 {
        open * (1.0 - self.slippage)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Constraints {
    pub max_positions: usize,
    pub max_weight: f64,
    pub max_sector_weight: f64,
    pub max_hold_days: usize,
    /// Share of initial capital that open cost basis may never eat into.
    pub cash_floor_fraction: f64,
    /// Minimum |vote| to act on opposing hypotheses for one symbol.
    pub conflict_margin: f64,
    /// Evaluate targets/stops on intraday highs/lows instead of closes.
    pub intraday_exits: bool,
}

impl Default for Constraints {
    fn default() -> Self {
        Constraints {
            max_positions: 5,
            max_weight: 0.20,
            max_sector_weight: 0.50,
            max_hold_days: 30,
            cash_floor_fraction: 0.80,
            conflict_margin: 0.1,
            intraday_exits: false,
        }
    }
}

impl Constraints {
    /// Dollar budget for a new position: equal split over the open slots,
    /// capped at `max_weight` of value and at `available_cash`.
    pub fn budget(&self, portfolio_value: f64, open_positions: usize, available_cash: f64) -> f64 {
        (portfolio_value / (open_positions as f64 + 1.0))
            .min(self.max_weight * portfolio_value)
            .min(available_cash)
            .max(0.0)
    }

    /// Whole shares affordable within [`Constraints::budget`]; 0 means skip.
    pub fn position_size(
        &self,
        portfolio_value: f64,
        open_positions: usize,
        exec_price: f64,
        available_cash: f64,
    ) -> u64 {
        if !(exec_price > 0.0) {
            return 0;
        }
        let budget = self.budget(portfolio_value, open_positions, available_cash);
        if budget < exec_price {
            return 0;
        }
        (budget / exec_price).floor() as u64
    }
}

/// Picks at most one hypothesis among those for a single symbol.
///
/// Same direction: the most confident wins, ties going to the lowest type.
/// Opposing directions: the confidence-weighted vote must clear `margin`,
/// then the most confident hypothesis on the winning side is taken.
pub fn resolve_conflicts(hypotheses: &[Hypothesis], margin: f64) -> Option<&Hypothesis> {
    let best = |side: Action| {
        hypotheses.iter().filter(|h| h.action() == side).min_by(|a, b| {
            b.confidence()
                .total_cmp(&a.confidence())
                .then(a.htype().cmp(&b.htype()))
        })
    };
    let buys = hypotheses.iter().filter(|h| h.action() == Action::Buy).count();
    let sells = hypotheses.len() - buys;
    match (buys, sells) {
        (0, 0) => None,
        (_, 0) => best(Action::Buy),
        (0, _) => best(Action::Sell),
        _ => {
            let vote: f64 = hypotheses
                .iter()
                .map(|h| match h.action() {
                    Action::Buy => h.confidence(),
                    Action::Sell => -h.confidence(),
                })
                .sum();
            if vote.abs() <= margin {
                None
            } else if vote > 0.0 {
                best(Action::Buy)
            } else {
                best(Action::Sell)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitReason {
    Target,
    Stop,
    Time,
    FoldEnd,
}

impl ExitReason {
    pub fn as_str(self) -> &'static str {
        match self {
            ExitReason::Target => "target",
            ExitReason::Stop => "stop",
            ExitReason::Time => "time",
            ExitReason::FoldEnd => "fold_end",
        }
    }
}

/// Why an accepted hypothesis did not become a position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    AlreadyHeld,
    PositionCap,
    ZeroShares,
    SectorCap,
    CashFloor,
}

/// One round trip, from entry fill to exit fill.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeRecord {
    pub symbol: String,
    pub htype: HypothesisType,
    pub entry_date: NaiveDate,
    /// Fill price including slippage.
    pub entry_price: f64,
    pub exit_date: NaiveDate,
    pub exit_price: f64,
    pub shares: u64,
    pub gross_return: f64,
    pub net_return: f64,
    pub exit_reason: ExitReason,
    pub entry_commission: f64,
    pub exit_commission: f64,
    /// Commissions plus slippage on both legs.
    pub costs: f64,
    pub explanation: String,
}

impl TradeRecord {
    /// Net return recomputed from the record's own fills and commissions.
    pub fn recomputed_net_return(&self) -> f64 {
        let q = self.shares as f64;
        (q * self.exit_price - self.exit_commission) / (q * self.entry_price + self.entry_commission) - 1.0
    }
}
