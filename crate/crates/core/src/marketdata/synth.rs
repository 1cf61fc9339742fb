//! Seeded synthetic panels with regime changes and injected patterns.

use chrono::{Datelike, NaiveDate};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Bar, MarketDataError, PanelData, SymbolMeta};
use crate::seed::{derive_labeled, rng_from_seed, EngineRng};

/// Drift and volatility of daily log returns from day `start` onwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub start: usize,
    pub drift: f64,
    pub volatility: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpisodeKind {
    /// Heavy up-day volume with a flat closing level, followed by an
    /// optional steady markup.
    Accumulation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Episode {
    pub kind: EpisodeKind,
    pub symbol: usize,
    pub start: usize,
    #[serde(default = "default_episode_len")]
    pub length: usize,
    /// Up-day volume as a multiple of the base volume.
    #[serde(default = "default_volume_multiple")]
    pub volume_multiple: f64,
    /// Total close-to-close gain spread over `markup_days` after the episode.
    #[serde(default)]
    pub markup: f64,
    #[serde(default)]
    pub markup_days: usize,
}

fn default_episode_len() -> usize {
    10
}
fn default_volume_multiple() -> f64 {
    3.0
}

/// Parameters of a synthetic panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub symbols: usize,
    pub days: usize,
    pub start_date: NaiveDate,
    /// Sector labels assigned round-robin.
    pub sectors: Vec<String>,
    pub initial_price: f64,
    pub base_volume: f64,
    /// Log-normal dispersion of daily volume.
    pub volume_noise: f64,
    /// Share of each day's return variance realized between open and close;
    /// the rest is an overnight gap.
    pub intraday_share: f64,
    /// Fixed fractional wick added above the body high and below the body low.
    pub wick: f64,
    pub regimes: Vec<Regime>,
    /// Benchmark symbol appended after the tradeable universe.
    pub benchmark: Option<String>,
    /// Benchmark volatility as a multiple of the regime volatility.
    pub benchmark_vol_scale: f64,
    pub episodes: Vec<Episode>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            symbols: 10,
            days: 600,
            start_date: NaiveDate::from_ymd_opt(2015, 1, 2).unwrap(),
            sectors: ["Technology", "Financials", "Health Care", "Energy", "Industrials"]
                .into_iter()
                .map(String::from)
                .collect(),
            initial_price: 100.0,
            base_volume: 1_000_000.0,
            volume_noise: 0.3,
            intraday_share: 0.5,
            wick: 0.0,
            regimes: vec![Regime {
                start: 0,
                drift: 0.0002,
                volatility: 0.015,
            }],
            benchmark: None,
            benchmark_vol_scale: 0.7,
            episodes: Vec::new(),
        }
    }
}

impl SynthSpec {
    fn validate(&self) -> Result<(), MarketDataError> {
        let bad = |m: String| Err(MarketDataError::InvalidSpec(m));
        if self.symbols == 0 {
            return bad("symbols must be positive".into());
        }
        if self.days == 0 {
            return bad("days must be positive".into());
        }
        if self.sectors.is_empty() {
            return bad("at least one sector label is required".into());
        }
        if !(self.initial_price > 0.0 && self.initial_price.is_finite()) {
            return bad("initial_price must be positive".into());
        }
        if !(self.base_volume >= 0.0) || !(self.volume_noise >= 0.0) || !(self.wick >= 0.0) {
            return bad("base_volume, volume_noise and wick must be non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.intraday_share) {
            return bad("intraday_share must lie in [0, 1]".into());
        }
        if self.regimes.is_empty() || self.regimes[0].start != 0 {
            return bad("the first regime must start at day 0".into());
        }
        if self.regimes.windows(2).any(|w| w[0].start >= w[1].start) {
            return bad("regime starts must be strictly increasing".into());
        }
        if self
            .regimes
            .iter()
            .any(|r| !(r.volatility >= 0.0) || !r.drift.is_finite())
        {
            return bad("regime volatility must be non-negative and drift finite".into());
        }
        for e in &self.episodes {
            if e.symbol >= self.symbols {
                return bad(format!("episode symbol {} outside universe", e.symbol));
            }
            if e.start == 0 || e.start + e.length + e.markup_days > self.days {
                return bad(format!("episode at day {} does not fit the panel", e.start));
            }
            if e.markup_days == 0 && e.markup != 0.0 {
                return bad("markup requires markup_days > 0".into());
            }
        }
        Ok(())
    }

    fn regime_at(&self, day: usize) -> &Regime {
        self.regimes
            .iter()
            .rev()
            .find(|r| r.start <= day)
            .unwrap_or(&self.regimes[0])
    }
}

fn business_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if d.weekday().num_days_from_monday() < 5 {
            out.push(d);
        }
        d = d.succ_opt().expect("calendar overflow");
    }
    out
}

struct Draws([f64; 5]);

impl Draws {
    fn sample(rng: &mut EngineRng) -> Self {
        let mut z = [0.0; 5];
        for v in &mut z {
            *v = StandardNormal.sample(rng);
        }
        Draws(z)
    }
}

enum Phase {
    Normal,
    Accumulation { day: usize, multiple: f64 },
    Markup { step: f64 },
}

fn phase_for(episodes: &[&Episode], day: usize) -> Phase {
    for e in episodes {
        if day >= e.start && day < e.start + e.length {
            return Phase::Accumulation {
                day: day - e.start,
                multiple: e.volume_multiple,
            };
        }
        let m0 = e.start + e.length;
        if e.markup_days > 0 && day >= m0 && day < m0 + e.markup_days {
            return Phase::Markup {
                step: (1.0 + e.markup).powf(1.0 / e.markup_days as f64),
            };
        }
    }
    Phase::Normal
}

fn simulate_series(
    spec: &SynthSpec,
    calendar: &[NaiveDate],
    seed: u64,
    vol_scale: f64,
    episodes: &[&Episode],
) -> Vec<Bar> {
    let mut rng = rng_from_seed(seed);
    let mut bars = Vec::with_capacity(calendar.len());
    let mut prev_close = spec.initial_price;
    // closing level frozen at the start of each accumulation episode
    let mut level = prev_close;
    let share = spec.intraday_share;
    for (day, &date) in calendar.iter().enumerate() {
        let z = Draws::sample(&mut rng).0;
        let regime = spec.regime_at(day);
        let vol = regime.volatility * vol_scale;
        let vol_mult = (spec.volume_noise * z[4] - 0.5 * spec.volume_noise * spec.volume_noise).exp();
        let mut volume = (spec.base_volume * vol_mult).round();

        let phase = phase_for(episodes, day);
        let (open, close) = match phase {
            Phase::Normal => {
                let gap = regime.drift * (1.0 - share) + vol * (1.0 - share).sqrt() * z[0];
                let body = regime.drift * share + vol * share.sqrt() * z[1];
                let open = if day == 0 { prev_close } else { prev_close * gap.exp() };
                (open, open * body.exp())
            }
            Phase::Accumulation { day: k, multiple } => {
                if k == 0 {
                    level = prev_close;
                }
                // zig-zag around the frozen level: heavy up days, light down days
                if k % 2 == 0 {
                    volume = (spec.base_volume * multiple).round();
                    (level * 0.99, level * 1.02)
                } else {
                    volume = (spec.base_volume * 0.5).round();
                    (level * 1.01, level)
                }
            }
            Phase::Markup { step } => (prev_close, prev_close * step),
        };
        if let Phase::Normal = phase {
            level = close;
        }
        let wick_hi = spec.wick + 0.5 * vol * z[2].abs();
        let wick_lo = spec.wick + 0.5 * vol * z[3].abs();
        let body_hi = open.max(close);
        let body_lo = open.min(close);
        bars.push(Bar {
            date,
            open,
            high: body_hi * (1.0 + wick_hi),
            low: body_lo / (1.0 + wick_lo),
            close,
            volume,
        });
        prev_close = close;
    }
    bars
}

/// Generates a panel that is a pure function of `(spec, seed)`.
///
/// Each symbol draws from its own stream keyed by its index, so growing the
/// universe leaves existing symbols untouched.
pub fn generate_synthetic(spec: &SynthSpec, seed: u64) -> Result<PanelData, MarketDataError> {
    spec.validate()?;
    let calendar = business_days(spec.start_date, spec.days);
    let mut universe = Vec::new();
    let mut bars = Vec::new();
    for s in 0..spec.symbols {
        universe.push(SymbolMeta {
            symbol: format!("S{s:03}"),
            sector: spec.sectors[s % spec.sectors.len()].clone(),
        });
        let episodes: Vec<&Episode> = spec.episodes.iter().filter(|e| e.symbol == s).collect();
        bars.push(simulate_series(
            spec,
            &calendar,
            derive_labeled(seed, "synth-symbol", s as u64),
            1.0,
            &episodes,
        ));
    }
    if let Some(name) = &spec.benchmark {
        universe.push(SymbolMeta {
            symbol: name.clone(),
            sector: "Benchmark".into(),
        });
        bars.push(simulate_series(
            spec,
            &calendar,
            derive_labeled(seed, "synth-benchmark", 0),
            spec.benchmark_vol_scale,
            &[],
        ));
    }
    PanelData::new(universe, calendar, bars)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_panel() {
        let spec = SynthSpec {
            symbols: 4,
            days: 120,
            ..Default::default()
        };
        let a = generate_synthetic(&spec, 42).unwrap();
        let b = generate_synthetic(&spec, 42).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic(&spec, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_volatility_gives_constant_closes() {
        let spec = SynthSpec {
            symbols: 2,
            days: 50,
            regimes: vec![Regime {
                start: 0,
                drift: 0.0,
                volatility: 0.0,
            }],
            ..Default::default()
        };
        let p = generate_synthetic(&spec, 1).unwrap();
        for s in 0..2 {
            assert!(p.series(s).iter().all(|b| b.close == 100.0));
        }
    }

    #[test]
    fn adding_symbols_keeps_existing_streams() {
        let small = SynthSpec {
            symbols: 2,
            days: 60,
            ..Default::default()
        };
        let big = SynthSpec {
            symbols: 5,
            ..small.clone()
        };
        let a = generate_synthetic(&small, 7).unwrap();
        let b = generate_synthetic(&big, 7).unwrap();
        assert_eq!(a.series(1), b.series(1));
    }

    #[test]
    fn rejects_empty_dimensions() {
        assert!(generate_synthetic(
            &SynthSpec {
                symbols: 0,
                ..Default::default()
            },
            1
        )
        .is_err());
        assert!(generate_synthetic(
            &SynthSpec {
                days: 0,
                ..Default::default()
            },
            1
        )
        .is_err());
    }

    #[test]
    fn benchmark_is_appended() {
        let spec = SynthSpec {
            symbols: 3,
            days: 30,
            benchmark: Some("SPY".into()),
            ..Default::default()
        };
        let p = generate_synthetic(&spec, 3).unwrap();
        assert_eq!(p.num_symbols(), 4);
        assert_eq!(p.universe()[3].symbol, "SPY");
    }

    #[test]
    fn markup_lifts_price() {
        let spec = SynthSpec {
            symbols: 1,
            days: 80,
            regimes: vec![Regime {
                start: 0,
                drift: 0.0,
                volatility: 0.0,
            }],
            episodes: vec![Episode {
                kind: EpisodeKind::Accumulation,
                symbol: 0,
                start: 30,
                length: 10,
                volume_multiple: 3.0,
                markup: 0.12,
                markup_days: 12,
            }],
            ..Default::default()
        };
        let p = generate_synthetic(&spec, 0).unwrap();
        let s = p.series(0);
        assert_eq!(s[39].close, 100.0);
        assert!((s[51].close / 100.0 - 1.12).abs() < 1e-9);
        assert!(s[30].close > s[30].open && s[30].volume == 3_000_000.0);
    }
}
