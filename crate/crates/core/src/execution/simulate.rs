use std::collections::HashMap;

use serde::Serialize;

use super::{resolve_conflicts, ExecutionError, ExitReason, Fill, Portfolio, Rejection, TradeRecord};
use crate::agent::AgentState;
use crate::hypothesis::{generate_all, Action, GeneratorSet, Hypothesis};
use crate::marketdata::{as_of, PanelData};

/// Exploration rate and whether closed trades feed back into the agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseParams {
    pub epsilon: f64,
    pub learn: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DayOutcome {
    pub generated: usize,
    pub accepted: usize,
    pub fills: Vec<Fill>,
    pub rejections: Vec<(String, Rejection)>,
    pub closed: Vec<TradeRecord>,
    /// Cash after the next session's fills.
    pub cash_after: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PhaseOutcome {
    pub trades: Vec<TradeRecord>,
    /// Marked value at each close of the phase; the last entry is the
    /// cash left after liquidation.
    pub equity: Vec<f64>,
    pub terminal_value: f64,
    pub generated: usize,
    pub accepted: usize,
    pub fills: usize,
    pub rejections: usize,
}

fn opens_at(panel: &PanelData, portfolio: &Portfolio, t: usize) -> Result<HashMap<String, f64>, ExecutionError> {
    let info = as_of(panel, t)?;
    portfolio
        .positions()
        .values()
        .map(|p| Ok((p.symbol.clone(), info.bar(p.symbol_index, t)?.open)))
        .collect()
}

fn closes_at(panel: &PanelData, portfolio: &Portfolio, t: usize) -> Result<HashMap<String, f64>, ExecutionError> {
    let info = as_of(panel, t)?;
    portfolio
        .positions()
        .values()
        .map(|p| Ok((p.symbol.clone(), info.bar(p.symbol_index, t)?.close)))
        .collect()
}

/// One decision day: signals on day `t`, fills at the open of `t + 1`.
/// `last` is the final index of the phase window and must exceed `t`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_day(
    portfolio: &mut Portfolio,
    agent: &mut AgentState,
    panel: &PanelData,
    generators: &GeneratorSet,
    t: usize,
    last: usize,
    params: PhaseParams,
) -> Result<DayOutcome, ExecutionError> {
    if t >= last || last >= panel.num_days() {
        return Err(ExecutionError::NoNextSession { t, last });
    }
    let info = as_of(panel, t)?;
    let exits = portfolio.check_exits(&info, t)?;

    let hypotheses = generate_all(&info, t, generators)?;
    let mut out = DayOutcome {
        generated: hypotheses.len(),
        ..Default::default()
    };
    let mut entries: Vec<(usize, Hypothesis)> = Vec::new();
    let mut i = 0;
    while i < hypotheses.len() {
        let sym = hypotheses[i].symbol();
        let mut j = i;
        while j < hypotheses.len() && hypotheses[j].symbol() == sym {
            j += 1;
        }
        let group = &hypotheses[i..j];
        i = j;
        let Some(pick) = resolve_conflicts(group, portfolio.constraints().conflict_margin) else {
            continue;
        };
        if pick.action() == Action::Sell || portfolio.holds(sym) {
            continue;
        }
        if agent.decide(pick, params.epsilon)? {
            let idx = info.symbol_index(sym).expect("generated for a universe symbol");
            entries.push((idx, pick.clone()));
        }
    }
    out.accepted = entries.len();

    let next = t + 1;
    let fill_info = as_of(panel, next)?;
    let date = fill_info.calendar()[next];
    for order in exits {
        let idx = portfolio.positions()[&order.symbol].symbol_index;
        let open = fill_info.bar(idx, next)?.open;
        let rec = portfolio.close_position(&order.symbol, open, true, date, order.reason)?;
        if params.learn {
            agent.update(rec.htype, rec.net_return)?;
        }
        out.closed.push(rec);
    }
    for (idx, h) in entries {
        let opens = opens_at(panel, portfolio, next)?;
        let open = fill_info.bar(idx, next)?.open;
        let sector = &fill_info.universe()[idx].sector;
        match portfolio.open_position(&h, idx, sector, open, &opens, next, date)? {
            Ok(fill) => out.fills.push(fill),
            Err(r) => out.rejections.push((h.symbol().to_string(), r)),
        }
    }
    out.cash_after = portfolio.cash();
    Ok(out)
}

/// Closes every position at day `t`'s close without slippage.
pub fn liquidate(portfolio: &mut Portfolio, panel: &PanelData, t: usize) -> Result<Vec<TradeRecord>, ExecutionError> {
    let info = as_of(panel, t)?;
    let date = info.calendar()[t];
    let held: Vec<(String, usize)> = portfolio
        .positions()
        .values()
        .map(|p| (p.symbol.clone(), p.symbol_index))
        .collect();
    let mut out = Vec::with_capacity(held.len());
    for (sym, idx) in held {
        let close = info.bar(idx, t)?.close;
        out.push(portfolio.close_position(&sym, close, false, date, ExitReason::FoldEnd)?);
    }
    Ok(out)
}

/// Runs the day loop over `[start, end]` and liquidates at `end`'s close.
pub fn run_phase(
    portfolio: &mut Portfolio,
    agent: &mut AgentState,
    panel: &PanelData,
    generators: &GeneratorSet,
    start: usize,
    end: usize,
    params: PhaseParams,
) -> Result<PhaseOutcome, ExecutionError> {
    let mut out = PhaseOutcome::default();
    out.equity
        .push(portfolio.mark_to_market(&closes_at(panel, portfolio, start)?)?);
    for t in start..end {
        let day = simulate_day(portfolio, agent, panel, generators, t, end, params)?;
        out.generated += day.generated;
        out.accepted += day.accepted;
        out.fills += day.fills.len();
        out.rejections += day.rejections.len();
        out.trades.extend(day.closed);
        out.equity
            .push(portfolio.mark_to_market(&closes_at(panel, portfolio, t + 1)?)?);
    }
    let final_trades = liquidate(portfolio, panel, end)?;
    if params.learn {
        for rec in &final_trades {
            agent.update(rec.htype, rec.net_return)?;
        }
    }
    out.trades.extend(final_trades);
    out.terminal_value = portfolio.cash();
    if let Some(last) = out.equity.last_mut() {
        *last = out.terminal_value;
    }
    Ok(out)
}
