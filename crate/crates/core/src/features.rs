//! Per-symbol daily features computed from an [`InformationSet`].
//!
//! Each feature is a pure function of the bar history up to and including
//! day `t`. Short histories yield a fixed neutral default, never NaN.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use crate::marketdata::{Bar, InformationSet, MarketDataError};

/// Guard used by the ratio features.
pub const EPSILON: f64 = 1e-6;

/// Bars of Wilder warm-up before the 14-bar RSI seed.
const RSI_WARMUP: usize = 250;

pub mod names {
    pub const DAILY_RETURN: &str = "daily_return";
    pub const VOLUME_IMBALANCE: &str = "volume_imbalance";
    pub const VOLUME_RATIO: &str = "volume_ratio";
    pub const PRICE_EFFICIENCY: &str = "price_efficiency";
    pub const PRICE_IMPACT: &str = "price_impact";
    pub const RETURN_5D: &str = "return_5d";
    pub const RETURN_20D: &str = "return_20d";
    pub const RSI_14: &str = "rsi_14";
    pub const REALIZED_VOL_20: &str = "realized_vol_20";
    pub const DIST_FROM_HIGH_252: &str = "dist_from_high_252";
    pub const RANGE_FRACTION_20: &str = "range_fraction_20";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub window: usize,
    pub default: f64,
}

/// A single named feature over a bar history ending at the evaluation day.
pub trait Feature: Send + Sync {
    fn spec(&self) -> FeatureSpec;
    /// `history` is non-empty and its last bar is day `t`.
    fn compute(&self, history: &[Bar]) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    DailyReturn,
    VolumeImbalance,
    VolumeRatio,
    PriceEfficiency,
    PriceImpact,
    Return5d,
    Return20d,
    Rsi14,
    RealizedVol20,
    DistFromHigh252,
    RangeFraction20,
}

impl Builtin {
    pub const ALL: [Builtin; 11] = [
        Builtin::DailyReturn,
        Builtin::VolumeImbalance,
        Builtin::VolumeRatio,
        Builtin::PriceEfficiency,
        Builtin::PriceImpact,
        Builtin::Return5d,
        Builtin::Return20d,
        Builtin::Rsi14,
        Builtin::RealizedVol20,
        Builtin::DistFromHigh252,
        Builtin::RangeFraction20,
    ];
}

impl Feature for Builtin {
    fn spec(&self) -> FeatureSpec {
        let (name, window, default) = match self {
            Builtin::DailyReturn => (names::DAILY_RETURN, 2, 0.0),
            Builtin::VolumeImbalance => (names::VOLUME_IMBALANCE, 5, 0.0),
            Builtin::VolumeRatio => (names::VOLUME_RATIO, 20, 1.0),
            Builtin::PriceEfficiency => (names::PRICE_EFFICIENCY, 10, 0.5),
            Builtin::PriceImpact => (names::PRICE_IMPACT, 20, 0.0),
            Builtin::Return5d => (names::RETURN_5D, 5, 0.0),
            Builtin::Return20d => (names::RETURN_20D, 20, 0.0),
            Builtin::Rsi14 => (names::RSI_14, 14, 50.0),
            Builtin::RealizedVol20 => (names::REALIZED_VOL_20, 20, 0.0),
            Builtin::DistFromHigh252 => (names::DIST_FROM_HIGH_252, 252, -1.0),
            Builtin::RangeFraction20 => (names::RANGE_FRACTION_20, 20, 1.0),
        };
        FeatureSpec {
            name: name.to_string(),
            window,
            default,
        }
    }

    fn compute(&self, h: &[Bar]) -> f64 {
        match self {
            Builtin::DailyReturn => daily_return_of(h),
            Builtin::VolumeImbalance => volume_imbalance_of(h),
            Builtin::VolumeRatio => volume_ratio_of(h),
            Builtin::PriceEfficiency => price_efficiency_of(h),
            Builtin::PriceImpact => price_impact_of(h),
            Builtin::Return5d => trailing_return(h, 5),
            Builtin::Return20d => trailing_return(h, 20),
            Builtin::Rsi14 => rsi_of(h, 14),
            Builtin::RealizedVol20 => realized_vol_of(h, 20),
            Builtin::DistFromHigh252 => dist_from_high_of(h, 252),
            Builtin::RangeFraction20 => range_fraction_of(h, 20),
        }
    }
}

fn ret_at(h: &[Bar], i: usize) -> f64 {
    (h[i].close - h[i - 1].close) / h[i - 1].close
}

fn last(h: &[Bar]) -> usize {
    h.len() - 1
}

fn daily_return_of(h: &[Bar]) -> f64 {
    let t = last(h);
    if t < 1 {
        return 0.0;
    }
    ret_at(h, t)
}

fn volume_imbalance_of(h: &[Bar]) -> f64 {
    let t = last(h);
    if t < 4 {
        return 0.0;
    }
    let (mut signed, mut total) = (0.0, 0.0);
    for b in &h[t - 4..=t] {
        total += b.volume;
        if b.close > b.open {
            signed += b.volume;
        } else if b.close < b.open {
            signed -= b.volume;
        }
    }
    if total <= EPSILON {
        0.0
    } else {
        signed / total
    }
}

fn volume_ratio_of(h: &[Bar]) -> f64 {
    let t = last(h);
    if t < 19 {
        return 1.0;
    }
    let mean = h[t - 19..=t].iter().map(|b| b.volume).sum::<f64>() / 20.0;
    if mean <= 0.0 {
        1.0
    } else {
        h[t].volume / mean
    }
}

fn price_efficiency_of(h: &[Bar]) -> f64 {
    let t = last(h);
    if t < 10 {
        return 0.5;
    }
    let (mut net, mut gross) = (0.0, 0.0);
    for i in t - 9..=t {
        let r = ret_at(h, i);
        net += r;
        gross += r.abs();
    }
    net.abs() / (gross + EPSILON)
}

fn price_impact_of(h: &[Bar]) -> f64 {
    let ratio = volume_ratio_of(h);
    if ratio <= 0.0 {
        return 0.0;
    }
    daily_return_of(h).abs() / ratio
}

fn trailing_return(h: &[Bar], n: usize) -> f64 {
    let t = last(h);
    if t < n {
        return 0.0;
    }
    h[t].close / h[t - n].close - 1.0
}

/// Wilder RSI; the average gain/loss is seeded with a simple mean over the
/// first `period` changes of a bounded warm-up window ending at `t`.
fn rsi_of(h: &[Bar], period: usize) -> f64 {
    let t = last(h);
    if t < period {
        return 50.0;
    }
    let start = t.saturating_sub(RSI_WARMUP + period);
    let change = |i: usize| h[i].close - h[i - 1].close;
    let (mut gain, mut loss) = (0.0, 0.0);
    for i in start + 1..=start + period {
        let c = change(i);
        if c > 0.0 {
            gain += c;
        } else {
            loss -= c;
        }
    }
    let p = period as f64;
    gain /= p;
    loss /= p;
    for i in start + period + 1..=t {
        let c = change(i);
        gain = (gain * (p - 1.0) + c.max(0.0)) / p;
        loss = (loss * (p - 1.0) + (-c).max(0.0)) / p;
    }
    if loss == 0.0 {
        return if gain == 0.0 { 50.0 } else { 100.0 };
    }
    let rs = gain / loss;
    100.0 - 100.0 / (1.0 + rs)
}

fn realized_vol_of(h: &[Bar], n: usize) -> f64 {
    let t = last(h);
    if t < n {
        return 0.0;
    }
    let rets: Vec<f64> = (t + 1 - n..=t).map(|i| ret_at(h, i)).collect();
    let mean = rets.iter().sum::<f64>() / n as f64;
    let var = rets.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    var.sqrt()
}

fn dist_from_high_of(h: &[Bar], n: usize) -> f64 {
    let t = last(h);
    if t + 1 < n {
        return -1.0;
    }
    let high = h[t + 1 - n..=t].iter().map(|b| b.high).fold(f64::MIN, f64::max);
    h[t].close / high - 1.0
}

fn range_fraction_of(h: &[Bar], n: usize) -> f64 {
    let t = last(h);
    if t + 1 < n {
        return 1.0;
    }
    let w = &h[t + 1 - n..=t];
    let hi = w.iter().map(|b| b.high).fold(f64::MIN, f64::max);
    let lo = w.iter().map(|b| b.low).fold(f64::MAX, f64::min);
    (hi - lo) / h[t].close
}

/// Ordered set of features; vectors produced from one registry share it.
pub struct FeatureRegistry {
    features: Vec<Arc<dyn Feature>>,
    specs: Vec<FeatureSpec>,
    index: HashMap<String, usize>,
}

impl fmt::Debug for FeatureRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.specs.iter().map(|s| &s.name)).finish()
    }
}

impl FeatureRegistry {
    pub fn empty() -> Self {
        FeatureRegistry {
            features: Vec::new(),
            specs: Vec::new(),
            index: HashMap::new(),
        }
    }

    /// The built-in feature set used by the rule generators.
    pub fn standard() -> Self {
        Builtin::ALL.into_iter().fold(Self::empty(), |r, b| r.with(Arc::new(b)))
    }

    /// Appends a feature. Panics if the name is taken or its window is zero.
    pub fn with(mut self, feature: Arc<dyn Feature>) -> Self {
        let spec = feature.spec();
        assert!(spec.window >= 1, "feature {} has an empty window", spec.name);
        assert!(spec.default.is_finite(), "feature {} default must be finite", spec.name);
        let prev = self.index.insert(spec.name.clone(), self.specs.len());
        assert!(prev.is_none(), "duplicate feature {}", spec.name);
        self.specs.push(spec);
        self.features.push(feature);
        self
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn specs(&self) -> &[FeatureSpec] {
        &self.specs
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// JSON dump of `{name, window, default}` entries.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.specs).expect("feature specs serialize")
    }
}

#[derive(Clone)]
pub struct FeatureVector {
    values: Vec<f64>,
    registry: Arc<FeatureRegistry>,
}

impl FeatureVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn registry(&self) -> &Arc<FeatureRegistry> {
        &self.registry
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.registry.index_of(name).map(|i| self.values[i])
    }

    /// Builds a vector from named values over `registry`; unnamed entries
    /// take their defaults.
    pub fn from_pairs(registry: Arc<FeatureRegistry>, pairs: &[(&str, f64)]) -> Self {
        let mut values: Vec<f64> = registry.specs().iter().map(|s| s.default).collect();
        for (name, v) in pairs {
            let i = registry
                .index_of(name)
                .unwrap_or_else(|| panic!("unknown feature {name}"));
            values[i] = *v;
        }
        FeatureVector { values, registry }
    }
}

impl PartialEq for FeatureVector {
    fn eq(&self, other: &Self) -> bool {
        self.values == other.values && self.registry.specs() == other.registry.specs()
    }
}

impl fmt::Debug for FeatureVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map()
            .entries(self.registry.specs().iter().map(|s| &s.name).zip(&self.values))
            .finish()
    }
}

impl Serialize for FeatureVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.values.len()))?;
        for (spec, v) in self.registry.specs().iter().zip(&self.values) {
            map.serialize_entry(&spec.name, v)?;
        }
        map.end()
    }
}

pub fn daily_return(info: &InformationSet<'_>, symbol: usize, t: usize) -> Result<f64, MarketDataError> {
    Ok(daily_return_of(info.history(symbol, t)?))
}

pub fn volume_imbalance(info: &InformationSet<'_>, symbol: usize, t: usize) -> Result<f64, MarketDataError> {
    Ok(volume_imbalance_of(info.history(symbol, t)?))
}

pub fn volume_ratio(info: &InformationSet<'_>, symbol: usize, t: usize) -> Result<f64, MarketDataError> {
    Ok(volume_ratio_of(info.history(symbol, t)?))
}

pub fn price_efficiency(info: &InformationSet<'_>, symbol: usize, t: usize) -> Result<f64, MarketDataError> {
    Ok(price_efficiency_of(info.history(symbol, t)?))
}

/// Every registry feature for `(symbol, t)`. Non-finite outputs from a
/// custom feature are replaced by that feature's default.
pub fn compute_features(
    info: &InformationSet<'_>,
    symbol: usize,
    t: usize,
    registry: &Arc<FeatureRegistry>,
) -> Result<FeatureVector, MarketDataError> {
    let history = info.history(symbol, t)?;
    let values = registry
        .features
        .iter()
        .zip(registry.specs())
        .map(|(f, spec)| {
            let v = f.compute(history);
            if v.is_finite() {
                v
            } else {
                spec.default
            }
        })
        .collect();
    Ok(FeatureVector {
        values,
        registry: Arc::clone(registry),
    })
}
