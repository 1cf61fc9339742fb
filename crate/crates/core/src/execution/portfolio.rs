use std::collections::{BTreeMap, HashMap};

use chrono::NaiveDate;
use serde::Serialize;

use super::{Constraints, CostModel, ExecutionError, ExitReason, Rejection, TradeRecord};
use crate::hypothesis::{Hypothesis, HypothesisType};
use crate::marketdata::InformationSet;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Position {
    pub symbol: String,
    pub symbol_index: usize,
    pub sector: String,
    pub shares: u64,
    /// Entry fill price (open plus slippage).
    pub entry_price: f64,
    pub entry_open: f64,
    pub entry_index: usize,
    pub entry_date: NaiveDate,
    pub target_return: f64,
    pub stop_loss: f64,
    pub htype: HypothesisType,
    pub entry_commission: f64,
    pub explanation: String,
}

impl Position {
    /// Shares times entry fill plus the entry commission.
    pub fn cost_basis(&self) -> f64 {
        self.shares as f64 * self.entry_price + self.entry_commission
    }
}

/// Result of an entry fill, with the quantities the caps were checked on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fill {
    pub symbol: String,
    pub shares: u64,
    pub price: f64,
    pub commission: f64,
    /// Shares times fill price plus commission.
    pub cost: f64,
    /// Portfolio value just before the fill, marked at the fill session's opens.
    pub value_before: f64,
    pub value_after: f64,
    pub sector_value_after: f64,
    pub open_positions_after: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExitOrder {
    pub symbol: String,
    pub reason: ExitReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Portfolio {
    cash: f64,
    initial_capital: f64,
    positions: BTreeMap<String, Position>,
    costs: CostModel,
    constraints: Constraints,
}

impl Portfolio {
    pub fn new(initial_capital: f64, costs: CostModel, constraints: Constraints) -> Self {
        Portfolio {
            cash: initial_capital,
            initial_capital,
            positions: BTreeMap::new(),
            costs,
            constraints,
        }
    }

    pub fn cash(&self) -> f64 {
        self.cash
    }

    pub fn initial_capital(&self) -> f64 {
        self.initial_capital
    }

    pub fn positions(&self) -> &BTreeMap<String, Position> {
        &self.positions
    }

    pub fn holds(&self, symbol: &str) -> bool {
        self.positions.contains_key(symbol)
    }

    pub fn costs(&self) -> &CostModel {
        &self.costs
    }

    pub fn constraints(&self) -> &Constraints {
        &self.constraints
    }

    /// Cash plus every position valued at `prices`.
    pub fn mark_to_market(&self, prices: &HashMap<String, f64>) -> Result<f64, ExecutionError> {
        let mut value = self.cash;
        for (sym, p) in &self.positions {
            let px = prices
                .get(sym)
                .ok_or_else(|| ExecutionError::MissingPrice(sym.clone()))?;
            value += p.shares as f64 * px;
        }
        Ok(value)
    }

    fn open_cost_basis(&self) -> f64 {
        self.positions.values().map(Position::cost_basis).sum()
    }

    /// Cash that a new entry may use without breaching the cash floor.
    pub fn deployable_cash(&self) -> f64 {
        let room = (1.0 - self.constraints.cash_floor_fraction) * self.initial_capital - self.open_cost_basis();
        room.min(self.cash).max(0.0)
    }

    /// Buys `h` at the next session's open plus slippage. On rejection
    /// the portfolio is unchanged.
    ///
    /// `opens` must price every held symbol at the fill session; the
    /// weight and sector caps are measured on those marks.
    #[allow(clippy::too_many_arguments)]
    pub fn open_position(
        &mut self,
        h: &Hypothesis,
        symbol_index: usize,
        sector: &str,
        next_open: f64,
        opens: &HashMap<String, f64>,
        entry_index: usize,
        entry_date: NaiveDate,
    ) -> Result<Result<Fill, Rejection>, ExecutionError> {
        let symbol = h.symbol();
        if self.holds(symbol) {
            return Ok(Err(Rejection::AlreadyHeld));
        }
        if self.positions.len() >= self.constraints.max_positions {
            return Ok(Err(Rejection::PositionCap));
        }
        if !(next_open > 0.0) {
            return Err(ExecutionError::NonPositivePrice(next_open));
        }
        let value_before = self.mark_to_market(opens)?;
        let fill = self.costs.buy_fill(next_open);
        let commission = self.costs.commission;
        let available = self.deployable_cash();
        let open_n = self.positions.len();
        let budget = self.constraints.budget(value_before, open_n, available);
        let mut shares = self.constraints.position_size(value_before, open_n, fill, available);
        while shares > 0 && shares as f64 * fill + commission > budget {
            shares -= 1;
        }
        if shares == 0 {
            let unconstrained = self.constraints.budget(value_before, open_n, f64::INFINITY);
            let reason = if available < unconstrained && available < fill + commission {
                Rejection::CashFloor
            } else {
                Rejection::ZeroShares
            };
            return Ok(Err(reason));
        }
        let q = shares as f64;
        let cost = q * fill + commission;
        let value_after = value_before - cost + q * next_open;
        let mut sector_value_after = q * next_open;
        for p in self.positions.values().filter(|p| p.sector == sector) {
            sector_value_after += p.shares as f64 * opens[&p.symbol];
        }
        if sector_value_after > self.constraints.max_sector_weight * value_after {
            return Ok(Err(Rejection::SectorCap));
        }

        self.cash -= cost;
        self.positions.insert(
            symbol.to_string(),
            Position {
                symbol: symbol.to_string(),
                symbol_index,
                sector: sector.to_string(),
                shares,
                entry_price: fill,
                entry_open: next_open,
                entry_index,
                entry_date,
                target_return: h.target_return(),
                stop_loss: h.stop_loss(),
                htype: h.htype(),
                entry_commission: commission,
                explanation: h.explanation().to_string(),
            },
        );
        Ok(Ok(Fill {
            symbol: symbol.to_string(),
            shares,
            price: fill,
            commission,
            cost,
            value_before,
            value_after,
            sector_value_after,
            open_positions_after: self.positions.len(),
        }))
    }

    /// Exit orders triggered by day `t`'s bar, in symbol order.
    /// When several rules fire the reason is stop, then target, then time.
    pub fn check_exits(&self, info: &InformationSet<'_>, t: usize) -> Result<Vec<ExitOrder>, ExecutionError> {
        let mut out = Vec::new();
        for p in self.positions.values() {
            let bar = info.bar(p.symbol_index, t)?;
            let (worst, best) = if self.constraints.intraday_exits {
                (bar.low, bar.high)
            } else {
                (bar.close, bar.close)
            };
            let reason = if worst / p.entry_price - 1.0 <= -p.stop_loss {
                Some(ExitReason::Stop)
            } else if best / p.entry_price - 1.0 >= p.target_return {
                Some(ExitReason::Target)
            } else if t.saturating_sub(p.entry_index) >= self.constraints.max_hold_days {
                Some(ExitReason::Time)
            } else {
                None
            };
            if let Some(reason) = reason {
                out.push(ExitOrder {
                    symbol: p.symbol.clone(),
                    reason,
                });
            }
        }
        Ok(out)
    }

    /// Sells the whole position at `price`, applying sell slippage when
    /// `slippage` is set, and charging the commission.
    pub fn close_position(
        &mut self,
        symbol: &str,
        price: f64,
        slippage: bool,
        exit_date: NaiveDate,
        reason: ExitReason,
    ) -> Result<TradeRecord, ExecutionError> {
        if !(price > 0.0) {
            return Err(ExecutionError::NonPositivePrice(price));
        }
        let p = self
            .positions
            .remove(symbol)
            .ok_or_else(|| ExecutionError::NotHeld(symbol.to_string()))?;
        let fill = if slippage { self.costs.sell_fill(price) } else { price };
        let commission = self.costs.commission;
        let q = p.shares as f64;
        let proceeds = q * fill - commission;
        self.cash += proceeds;
        let costs = p.entry_commission + q * (p.entry_price - p.entry_open) + commission + q * (price - fill);
        Ok(TradeRecord {
            symbol: p.symbol.clone(),
            htype: p.htype,
            entry_date: p.entry_date,
            entry_price: p.entry_price,
            exit_date,
            exit_price: fill,
            shares: p.shares,
            gross_return: price / p.entry_open - 1.0,
            net_return: proceeds / p.cost_basis() - 1.0,
            exit_reason: reason,
            entry_commission: p.entry_commission,
            exit_commission: commission,
            costs,
            explanation: p.explanation,
        })
    }
}
