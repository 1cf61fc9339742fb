//! Daily OHLCV panels and the time-truncated views every decision reads.
//!
//! A [`PanelData`] is immutable once built. Code that makes trading decisions
//! only ever sees an [`InformationSet`], which refuses reads past its cutoff.

mod load;
mod synth;

use std::collections::HashMap;
use std::path::PathBuf;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use load::{load_panel, write_panel, LoadOptions, LoadReport, SymbolLoadReport};
pub use synth::{generate_synthetic, Episode, EpisodeKind, Regime, SynthSpec};

#[derive(Debug, Error)]
pub enum MarketDataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed row: {message}")]
    Malformed { path: PathBuf, line: u64, message: String },
    #[error("{path}:{line}: invalid bar: {reason}")]
    InvalidBar { path: PathBuf, line: u64, reason: String },
    #[error("{path}:{line}: date {date} is not after the previous row")]
    NonIncreasingDate { path: PathBuf, line: u64, date: NaiveDate },
    #[error(
        "symbol {symbol}: {missing} consecutive trading days missing after {after} \
         (maximum allowed gap is {max_gap} days)"
    )]
    GapTooLarge {
        symbol: String,
        after: NaiveDate,
        missing: usize,
        max_gap: usize,
    },
    #[error("symbol {0} listed more than once")]
    DuplicateSymbol(String),
    #[error("unknown symbol {0}")]
    UnknownSymbol(String),
    #[error("symbol date ranges do not overlap")]
    EmptyIntersection,
    #[error("symbol {0} has no rows")]
    EmptySeries(String),
    #[error("invalid panel: {0}")]
    InvalidPanel(String),
    #[error("calendar index {t} out of range for {len} trading days")]
    OutOfRange { t: usize, len: usize },
    #[error("read at index {requested} is past the information cutoff {cutoff}")]
    Lookahead { requested: usize, cutoff: usize },
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: f64,
}

impl Bar {
    /// Checks the OHLC ordering and sign invariants.
    pub fn validate(&self) -> Result<(), String> {
        let prices = [self.open, self.high, self.low, self.close];
        if prices.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return Err("prices must be finite and strictly positive".into());
        }
        if !self.volume.is_finite() || self.volume < 0.0 {
            return Err("volume must be finite and non-negative".into());
        }
        if self.low > self.high {
            return Err(format!("low {} exceeds high {}", self.low, self.high));
        }
        if self.low > self.open.min(self.close) {
            return Err(format!("low {} above min(open, close)", self.low));
        }
        if self.high < self.open.max(self.close) {
            return Err(format!("high {} below max(open, close)", self.high));
        }
        Ok(())
    }

    /// Zero-volume bar that carries the previous close across a missing day.
    pub fn carry(date: NaiveDate, prev_close: f64) -> Self {
        Bar {
            date,
            open: prev_close,
            high: prev_close,
            low: prev_close,
            close: prev_close,
            volume: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymbolMeta {
    pub symbol: String,
    pub sector: String,
}

/// A cross-sectional panel of daily bars on a shared calendar.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelData {
    universe: Vec<SymbolMeta>,
    calendar: Vec<NaiveDate>,
    bars: Vec<Vec<Bar>>,
    index: HashMap<String, usize>,
}

impl PanelData {
    /// Builds a panel, checking alignment and bar invariants.
    pub fn new(
        universe: Vec<SymbolMeta>,
        calendar: Vec<NaiveDate>,
        bars: Vec<Vec<Bar>>,
    ) -> Result<Self, MarketDataError> {
        if universe.len() != bars.len() {
            return Err(MarketDataError::InvalidPanel(format!(
                "{} symbols but {} bar series",
                universe.len(),
                bars.len()
            )));
        }
        if calendar.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MarketDataError::InvalidPanel(
                "calendar is not strictly increasing".into(),
            ));
        }
        let mut index = HashMap::with_capacity(universe.len());
        for (i, meta) in universe.iter().enumerate() {
            if index.insert(meta.symbol.clone(), i).is_some() {
                return Err(MarketDataError::DuplicateSymbol(meta.symbol.clone()));
            }
        }
        for (meta, series) in universe.iter().zip(&bars) {
            if series.len() != calendar.len() {
                return Err(MarketDataError::InvalidPanel(format!(
                    "{} has {} bars for {} calendar days",
                    meta.symbol,
                    series.len(),
                    calendar.len()
                )));
            }
            for (bar, day) in series.iter().zip(&calendar) {
                if bar.date != *day {
                    return Err(MarketDataError::InvalidPanel(format!(
                        "{} bar dated {} misaligned with calendar day {}",
                        meta.symbol, bar.date, day
                    )));
                }
                bar.validate().map_err(|reason| {
                    MarketDataError::InvalidPanel(format!("{} {}: {reason}", meta.symbol, bar.date))
                })?;
            }
        }
        Ok(PanelData {
            universe,
            calendar,
            bars,
            index,
        })
    }

    pub fn universe(&self) -> &[SymbolMeta] {
        &self.universe
    }

    pub fn calendar(&self) -> &[NaiveDate] {
        &self.calendar
    }

    pub fn num_days(&self) -> usize {
        self.calendar.len()
    }

    pub fn num_symbols(&self) -> usize {
        self.universe.len()
    }

    pub fn symbol_index(&self, symbol: &str) -> Option<usize> {
        self.index.get(symbol).copied()
    }

    /// Full bar series for one symbol. Decision code should go through
    /// [`InformationSet`] instead.
    pub fn series(&self, symbol: usize) -> &[Bar] {
        &self.bars[symbol]
    }

    /// Sub-panel covering calendar indices `start..=end`, re-based to 0.
    pub fn slice(&self, start: usize, end: usize) -> Result<PanelData, MarketDataError> {
        if start > end {
            return Err(MarketDataError::OutOfRange { t: start, len: end + 1 });
        }
        if end >= self.calendar.len() {
            return Err(MarketDataError::OutOfRange {
                t: end,
                len: self.calendar.len(),
            });
        }
        Ok(PanelData {
            universe: self.universe.clone(),
            calendar: self.calendar[start..=end].to_vec(),
            bars: self.bars.iter().map(|s| s[start..=end].to_vec()).collect(),
            index: self.index.clone(),
        })
    }

    /// Copy of the panel with every bar strictly after `t` rewritten by `f`.
    /// Used to probe that nothing at or before `t` depends on the future.
    pub fn rewrite_after<F>(&self, t: usize, f: F) -> Result<PanelData, MarketDataError>
    where
        F: Fn(usize, usize, &Bar) -> Bar,
    {
        let bars = self
            .bars
            .iter()
            .enumerate()
            .map(|(s, series)| {
                series
                    .iter()
                    .enumerate()
                    .map(|(i, b)| if i > t { f(s, i, b) } else { *b })
                    .collect()
            })
            .collect();
        PanelData::new(self.universe.clone(), self.calendar.clone(), bars)
    }

    /// Daily close-to-close returns of one symbol over `start..=end`
    /// (the first day's return uses the previous close when available).
    pub fn close_returns(&self, symbol: usize, start: usize, end: usize) -> Vec<f64> {
        let s = &self.bars[symbol];
        (start.max(1)..=end.min(s.len().saturating_sub(1)))
            .map(|i| (s[i].close - s[i - 1].close) / s[i - 1].close)
            .collect()
    }
}

/// Everything observable up to and including calendar index `cutoff`.
#[derive(Debug, Clone, Copy)]
pub struct InformationSet<'a> {
    panel: &'a PanelData,
    cutoff: usize,
}

/// Time-truncated view of `panel` at day `t`.
pub fn as_of(panel: &PanelData, t: usize) -> Result<InformationSet<'_>, MarketDataError> {
    if t >= panel.num_days() {
        return Err(MarketDataError::OutOfRange {
            t,
            len: panel.num_days(),
        });
    }
    Ok(InformationSet { panel, cutoff: t })
}

impl<'a> InformationSet<'a> {
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn universe(&self) -> &'a [SymbolMeta] {
        self.panel.universe()
    }

    pub fn num_symbols(&self) -> usize {
        self.panel.num_symbols()
    }

    pub fn symbol_index(&self, symbol: &str) -> Option<usize> {
        self.panel.symbol_index(symbol)
    }

    /// Calendar days up to and including the cutoff.
    pub fn calendar(&self) -> &'a [NaiveDate] {
        &self.panel.calendar()[..=self.cutoff]
    }

    pub fn bar(&self, symbol: usize, t: usize) -> Result<&'a Bar, MarketDataError> {
        if t > self.cutoff {
            return Err(MarketDataError::Lookahead {
                requested: t,
                cutoff: self.cutoff,
            });
        }
        self.panel
            .bars
            .get(symbol)
            .map(|s| &s[t])
            .ok_or_else(|| MarketDataError::UnknownSymbol(format!("#{symbol}")))
    }

    /// Bars `0..=t` for one symbol; `t` must not exceed the cutoff.
    pub fn history(&self, symbol: usize, t: usize) -> Result<&'a [Bar], MarketDataError> {
        if t > self.cutoff {
            return Err(MarketDataError::Lookahead {
                requested: t,
                cutoff: self.cutoff,
            });
        }
        self.panel
            .bars
            .get(symbol)
            .map(|s| &s[..=t])
            .ok_or_else(|| MarketDataError::UnknownSymbol(format!("#{symbol}")))
    }

    /// Same view, narrowed to an earlier cutoff.
    pub fn narrow(&self, t: usize) -> Result<InformationSet<'a>, MarketDataError> {
        if t > self.cutoff {
            return Err(MarketDataError::Lookahead {
                requested: t,
                cutoff: self.cutoff,
            });
        }
        Ok(InformationSet {
            panel: self.panel,
            cutoff: t,
        })
    }
}


#[cfg(test)]
mod tests {
    use super::test_util::panel_from_closes;
    use super::*;

    fn panel() -> PanelData {
        panel_from_closes(&[(0..20).map(|i| 100.0 + i as f64).collect()])
    }

    #[test]
    fn last_index_reads_everything() {
        let p = panel();
        let info = as_of(&p, 19).unwrap();
        for t in 0..20 {
            assert!(info.bar(0, t).is_ok());
        }
    }

    #[test]
    fn cutoff_is_inclusive_and_fenced() {
        let p = panel();
        let info = as_of(&p, 10).unwrap();
        assert_eq!(info.bar(0, 10).unwrap().close, 110.0);
        assert!(matches!(
            info.bar(0, 11),
            Err(MarketDataError::Lookahead {
                requested: 11,
                cutoff: 10
            })
        ));
        assert!(info.history(0, 11).is_err());
        assert_eq!(info.history(0, 10).unwrap().len(), 11);
        assert_eq!(info.calendar().len(), 11);
    }

    #[test]
    fn as_of_out_of_range() {
        let p = panel();
        assert!(matches!(as_of(&p, 20), Err(MarketDataError::OutOfRange { .. })));
    }

    #[test]
    fn bar_invariants() {
        let d = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let good = Bar {
            date: d,
            open: 10.0,
            high: 11.0,
            low: 9.0,
            close: 10.5,
            volume: 0.0,
        };
        assert!(good.validate().is_ok());
        assert!(Bar { low: 12.0, ..good }.validate().is_err());
        assert!(Bar { high: 10.2, ..good }.validate().is_err());
        assert!(Bar { volume: -1.0, ..good }.validate().is_err());
        assert!(Bar {
            open: 0.0,
            low: 0.0,
            ..good
        }
        .validate()
        .is_err());
    }

    #[test]
    fn slice_rebases_indices() {
        let p = panel();
        let s = p.slice(5, 9).unwrap();
        assert_eq!(s.num_days(), 5);
        assert_eq!(s.series(0)[0].close, 105.0);
        assert!(p.slice(5, 20).is_err());
    }

    #[test]
    fn rewrite_after_leaves_prefix_alone() {
        let p = panel();
        let q = p
            .rewrite_after(10, |_, _, b| Bar {
                close: b.close * 2.0,
                high: b.high * 2.0,
                ..*b
            })
            .unwrap();
        let a = as_of(&p, 10).unwrap();
        let b = as_of(&q, 10).unwrap();
        assert_eq!(a.history(0, 10).unwrap(), b.history(0, 10).unwrap());
        assert_ne!(p.series(0)[11], q.series(0)[11]);
    }
}
