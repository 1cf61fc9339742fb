//! Trading hypotheses and the rule-based generators that emit them.
//!
//! A [`Hypothesis`] carries everything needed to audit a trade after the
//! fact: the symbol, direction, type, a plain-language explanation built
//! from live feature values, confidence, the feature snapshot, and the
//! target/stop that later drive exits.
//!
//! Any source of hypotheses (hand-written rules, evolved formulas, language
//! models) plugs in through [`HypothesisGenerator`].

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{compute_features, names, FeatureRegistry, FeatureVector};
use crate::marketdata::{InformationSet, MarketDataError, SymbolMeta};

#[derive(Debug, Error, PartialEq)]
pub enum HypothesisError {
    #[error("confidence {0} outside [0, 1]")]
    Confidence(f64),
    #[error("target return must be positive, got {0}")]
    Target(f64),
    #[error("stop loss must be positive, got {0}")]
    Stop(f64),
    #[error("explanation must not be empty")]
    EmptyExplanation,
}

/// Identifier of a hypothesis family. The five built-in rules use 1..=5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HypothesisType(pub u8);

impl HypothesisType {
    pub const ACCUMULATION: HypothesisType = HypothesisType(1);
    pub const FLOW_MOMENTUM: HypothesisType = HypothesisType(2);
    pub const MEAN_REVERSION: HypothesisType = HypothesisType(3);
    pub const BREAKOUT: HypothesisType = HypothesisType(4);
    pub const RANGE_VALUE: HypothesisType = HypothesisType(5);

    pub const BUILTIN: [HypothesisType; 5] = [
        Self::ACCUMULATION,
        Self::FLOW_MOMENTUM,
        Self::MEAN_REVERSION,
        Self::BREAKOUT,
        Self::RANGE_VALUE,
    ];

    pub fn name(self) -> String {
        match self.0 {
            1 => "accumulation".into(),
            2 => "flow_momentum".into(),
            3 => "mean_reversion".into(),
            4 => "breakout".into(),
            5 => "range_value".into(),
            n => format!("type{n}"),
        }
    }
}

impl fmt::Display for HypothesisType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Buy,
    Sell,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hypothesis {
    symbol: String,
    action: Action,
    htype: HypothesisType,
    explanation: String,
    confidence: f64,
    features: FeatureVector,
    target_return: f64,
    stop_loss: f64,
}

impl Hypothesis {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        symbol: impl Into<String>,
        action: Action,
        htype: HypothesisType,
        explanation: impl Into<String>,
        confidence: f64,
        features: FeatureVector,
        target_return: f64,
        stop_loss: f64,
    ) -> Result<Self, HypothesisError> {
        let explanation = explanation.into();
        if !(0.0..=1.0).contains(&confidence) {
            return Err(HypothesisError::Confidence(confidence));
        }
        if !(target_return > 0.0 && target_return.is_finite()) {
            return Err(HypothesisError::Target(target_return));
        }
        if !(stop_loss > 0.0 && stop_loss.is_finite()) {
            return Err(HypothesisError::Stop(stop_loss));
        }
        if explanation.trim().is_empty() {
            return Err(HypothesisError::EmptyExplanation);
        }
        Ok(Hypothesis {
            symbol: symbol.into(),
            action,
            htype,
            explanation,
            confidence,
            features,
            target_return,
            stop_loss,
        })
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }
    pub fn action(&self) -> Action {
        self.action
    }
    pub fn htype(&self) -> HypothesisType {
        self.htype
    }
    pub fn explanation(&self) -> &str {
        &self.explanation
    }
    pub fn confidence(&self) -> f64 {
        self.confidence
    }
    pub fn features(&self) -> &FeatureVector {
        &self.features
    }
    pub fn target_return(&self) -> f64 {
        self.target_return
    }
    pub fn stop_loss(&self) -> f64 {
        self.stop_loss
    }
}

/// A source of hypotheses for one symbol on one day.
pub trait HypothesisGenerator: Send + Sync {
    fn htype(&self) -> HypothesisType;
    fn generate(&self, info: &InformationSet<'_>, symbol: &SymbolMeta, features: &FeatureVector) -> Option<Hypothesis>;
}

fn feature(fv: &FeatureVector, name: &str) -> f64 {
    fv.get(name).unwrap_or_else(|| panic!("feature registry lacks {name}"))
}

/// Fills `{placeholder}` slots from live feature values.
fn render(template: &str, symbol: &str, fv: &FeatureVector) -> String {
    let pct0 = |n: &str| format!("{:.0}", feature(fv, n) * 100.0);
    let pct1 = |n: &str| format!("{:.1}", feature(fv, n) * 100.0);
    type Slot<'a> = (&'a str, Box<dyn Fn() -> String + 'a>);
    let slots: [Slot; 10] = [
        ("{symbol}", Box::new(|| symbol.to_string())),
        ("{imbalance}", Box::new(|| pct0(names::VOLUME_IMBALANCE))),
        (
            "{ratio}",
            Box::new(|| format!("{:.1}", feature(fv, names::VOLUME_RATIO))),
        ),
        ("{ret20}", Box::new(|| pct1(names::RETURN_20D))),
        ("{ret5}", Box::new(|| pct1(names::RETURN_5D))),
        (
            "{efficiency}",
            Box::new(|| format!("{:.2}", feature(fv, names::PRICE_EFFICIENCY))),
        ),
        ("{rsi}", Box::new(|| format!("{:.0}", feature(fv, names::RSI_14)))),
        (
            "{vol}",
            Box::new(|| format!("{:.2}", feature(fv, names::REALIZED_VOL_20) * 100.0)),
        ),
        ("{dist}", Box::new(|| pct1(names::DIST_FROM_HIGH_252))),
        ("{range}", Box::new(|| pct1(names::RANGE_FRACTION_20))),
    ];
    let mut out = template.to_string();
    for (slot, value) in &slots {
        if out.contains(slot) {
            out = out.replace(slot, &value());
        }
    }
    out
}

/// Number of feature-valued placeholders in a template.
pub fn live_value_slots(template: &str) -> usize {
    [
        "{imbalance}",
        "{ratio}",
        "{ret20}",
        "{ret5}",
        "{efficiency}",
        "{rsi}",
        "{vol}",
        "{dist}",
        "{range}",
    ]
    .iter()
    .filter(|s| template.contains(*s))
    .count()
}

macro_rules! rule_common {
    () => {
        pub fn emit(&self, htype: HypothesisType, symbol: &str, fv: &FeatureVector) -> Option<Hypothesis> {
            Hypothesis::new(
                symbol,
                Action::Buy,
                htype,
                render(&self.template, symbol, fv),
                self.confidence,
                fv.clone(),
                self.target,
                self.stop,
            )
            .ok()
        }
    };
}

/// Sustained buy-side volume while the price holds still.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AccumulationRule {
    pub enabled: bool,
    pub confidence: f64,
    pub target: f64,
    pub stop: f64,
    pub template: String,
    pub min_imbalance: f64,
    pub min_volume_ratio: f64,
    pub max_abs_return_20d: f64,
}

impl Default for AccumulationRule {
    fn default() -> Self {
        AccumulationRule {
            enabled: true,
            confidence: 0.75,
            target: 0.08,
            stop: 0.04,
            template: "{symbol} shows institutional accumulation: {imbalance}% buy imbalance with \
                       {ratio}x volume. Price stable, suggesting smart money positioning before move."
                .into(),
            min_imbalance: 0.30,
            min_volume_ratio: 1.5,
            max_abs_return_20d: 0.10,
        }
    }
}

impl AccumulationRule {
    rule_common!();
    pub fn fires(&self, fv: &FeatureVector) -> bool {
        feature(fv, names::VOLUME_IMBALANCE) > self.min_imbalance
            && feature(fv, names::VOLUME_RATIO) > self.min_volume_ratio
            && feature(fv, names::RETURN_20D).abs() < self.max_abs_return_20d
    }
}

/// Price momentum confirmed by order flow and efficient price action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowMomentumRule {
    pub enabled: bool,
    pub confidence: f64,
    pub target: f64,
    pub stop: f64,
    pub template: String,
    pub min_return_20d: f64,
    pub min_imbalance: f64,
    pub min_efficiency: f64,
    pub max_rsi: f64,
}

impl Default for FlowMomentumRule {
    fn default() -> Self {
        FlowMomentumRule {
            enabled: true,
            confidence: 0.70,
            target: 0.10,
            stop: 0.05,
            template: "{symbol} shows flow momentum: {ret20}% 20-day gain confirmed by {imbalance}% \
                       buy imbalance and {efficiency} price efficiency (RSI {rsi})."
                .into(),
            min_return_20d: 0.10,
            min_imbalance: 0.20,
            min_efficiency: 0.50,
            max_rsi: 80.0,
        }
    }
}

impl FlowMomentumRule {
    rule_common!();
    pub fn fires(&self, fv: &FeatureVector) -> bool {
        feature(fv, names::RETURN_20D) > self.min_return_20d
            && feature(fv, names::VOLUME_IMBALANCE) > self.min_imbalance
            && feature(fv, names::PRICE_EFFICIENCY) > self.min_efficiency
            && feature(fv, names::RSI_14) < self.max_rsi
    }
}

/// Oversold in a calm regime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeanReversionRule {
    pub enabled: bool,
    pub confidence: f64,
    pub target: f64,
    pub stop: f64,
    pub template: String,
    pub max_rsi: f64,
    pub max_return_5d: f64,
    pub max_volatility: f64,
}

impl Default for MeanReversionRule {
    fn default() -> Self {
        MeanReversionRule {
            enabled: true,
            confidence: 0.65,
            target: 0.05,
            stop: 0.03,
            template: "{symbol} looks oversold in a stable regime: RSI {rsi} after a {ret5}% 5-day \
                       move with {vol}% daily volatility, favoring a bounce."
                .into(),
            max_rsi: 30.0,
            max_return_5d: -0.05,
            max_volatility: 0.02,
        }
    }
}

impl MeanReversionRule {
    rule_common!();
    pub fn fires(&self, fv: &FeatureVector) -> bool {
        feature(fv, names::RSI_14) < self.max_rsi
            && feature(fv, names::RETURN_5D) < self.max_return_5d
            && feature(fv, names::REALIZED_VOL_20) < self.max_volatility
    }
}

/// Near the trailing one-year high on expanding volume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BreakoutRule {
    pub enabled: bool,
    pub confidence: f64,
    pub target: f64,
    pub stop: f64,
    pub template: String,
    pub min_dist_from_high: f64,
    pub min_volume_ratio: f64,
    pub min_return_20d: f64,
}

impl Default for BreakoutRule {
    fn default() -> Self {
        BreakoutRule {
            enabled: true,
            confidence: 0.68,
            target: 0.07,
            stop: 0.04,
            template: "{symbol} is breaking out: {dist}% from its 252-day high on {ratio}x volume \
                       with {ret20}% 20-day momentum."
                .into(),
            min_dist_from_high: -0.02,
            min_volume_ratio: 1.5,
            min_return_20d: 0.0,
        }
    }
}

impl BreakoutRule {
    rule_common!();
    pub fn fires(&self, fv: &FeatureVector) -> bool {
        feature(fv, names::DIST_FROM_HIGH_252) > self.min_dist_from_high
            && feature(fv, names::VOLUME_RATIO) > self.min_volume_ratio
            && feature(fv, names::RETURN_20D) > self.min_return_20d
    }
}

/// Buying pressure inside a tight, calm range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RangeValueRule {
    pub enabled: bool,
    pub confidence: f64,
    pub target: f64,
    pub stop: f64,
    pub template: String,
    pub max_range_fraction: f64,
    pub min_imbalance: f64,
    pub max_volatility: f64,
}

impl Default for RangeValueRule {
    fn default() -> Self {
        RangeValueRule {
            enabled: true,
            confidence: 0.60,
            target: 0.05,
            stop: 0.03,
            template: "{symbol} is range-bound ({range}% 20-day range, {vol}% daily volatility) with \
                       {imbalance}% buy imbalance, suggesting value accumulation."
                .into(),
            max_range_fraction: 0.10,
            min_imbalance: 0.20,
            max_volatility: 0.02,
        }
    }
}

impl RangeValueRule {
    rule_common!();
    pub fn fires(&self, fv: &FeatureVector) -> bool {
        feature(fv, names::RANGE_FRACTION_20) < self.max_range_fraction
            && feature(fv, names::VOLUME_IMBALANCE) > self.min_imbalance
            && feature(fv, names::REALIZED_VOL_20) < self.max_volatility
    }
}

/// Thresholds and trade parameters for the five built-in rules.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub type1: AccumulationRule,
    pub type2: FlowMomentumRule,
    pub type3: MeanReversionRule,
    pub type4: BreakoutRule,
    pub type5: RangeValueRule,
}

impl GeneratorConfig {
    /// Field-level problems, as `(key, message)` pairs.
    pub fn problems(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut check = |section: &str, confidence: f64, target: f64, stop: f64, template: &str, thresholds: &[f64]| {
            if !(0.0..=1.0).contains(&confidence) {
                out.push((format!("hypotheses.{section}.confidence"), "must lie in [0, 1]".into()));
            }
            if !(target > 0.0 && target.is_finite()) {
                out.push((format!("hypotheses.{section}.target"), "must be positive".into()));
            }
            if !(stop > 0.0 && stop.is_finite()) {
                out.push((format!("hypotheses.{section}.stop"), "must be positive".into()));
            }
            if thresholds.iter().any(|v| !v.is_finite()) {
                out.push((format!("hypotheses.{section}"), "thresholds must be finite".into()));
            }
            if live_value_slots(template) < 2 {
                out.push((
                    format!("hypotheses.{section}.template"),
                    "must interpolate at least two feature values".into(),
                ));
            }
        };
        let c = &self.type1;
        check(
            "type1",
            c.confidence,
            c.target,
            c.stop,
            &c.template,
            &[c.min_imbalance, c.min_volume_ratio, c.max_abs_return_20d],
        );
        let c = &self.type2;
        check(
            "type2",
            c.confidence,
            c.target,
            c.stop,
            &c.template,
            &[c.min_return_20d, c.min_imbalance, c.min_efficiency, c.max_rsi],
        );
        let c = &self.type3;
        check(
            "type3",
            c.confidence,
            c.target,
            c.stop,
            &c.template,
            &[c.max_rsi, c.max_return_5d, c.max_volatility],
        );
        let c = &self.type4;
        check(
            "type4",
            c.confidence,
            c.target,
            c.stop,
            &c.template,
            &[c.min_dist_from_high, c.min_volume_ratio, c.min_return_20d],
        );
        let c = &self.type5;
        check(
            "type5",
            c.confidence,
            c.target,
            c.stop,
            &c.template,
            &[c.max_range_fraction, c.min_imbalance, c.max_volatility],
        );
        out
    }

    /// Disables every built-in rule.
    pub fn all_disabled() -> Self {
        let mut c = Self::default();
        c.type1.enabled = false;
        c.type2.enabled = false;
        c.type3.enabled = false;
        c.type4.enabled = false;
        c.type5.enabled = false;
        c
    }
}

pub fn gen_accumulation(fv: &FeatureVector, symbol: &str, rule: &AccumulationRule) -> Option<Hypothesis> {
    rule.fires(fv)
        .then(|| rule.emit(HypothesisType::ACCUMULATION, symbol, fv))
        .flatten()
}

pub fn gen_flow_momentum(fv: &FeatureVector, symbol: &str, rule: &FlowMomentumRule) -> Option<Hypothesis> {
    rule.fires(fv)
        .then(|| rule.emit(HypothesisType::FLOW_MOMENTUM, symbol, fv))
        .flatten()
}

pub fn gen_mean_reversion(fv: &FeatureVector, symbol: &str, rule: &MeanReversionRule) -> Option<Hypothesis> {
    rule.fires(fv)
        .then(|| rule.emit(HypothesisType::MEAN_REVERSION, symbol, fv))
        .flatten()
}

pub fn gen_breakout(fv: &FeatureVector, symbol: &str, rule: &BreakoutRule) -> Option<Hypothesis> {
    rule.fires(fv)
        .then(|| rule.emit(HypothesisType::BREAKOUT, symbol, fv))
        .flatten()
}

pub fn gen_range_value(fv: &FeatureVector, symbol: &str, rule: &RangeValueRule) -> Option<Hypothesis> {
    rule.fires(fv)
        .then(|| rule.emit(HypothesisType::RANGE_VALUE, symbol, fv))
        .flatten()
}

macro_rules! impl_generator {
    ($rule:ty, $htype:expr, $f:ident) => {
        impl HypothesisGenerator for $rule {
            fn htype(&self) -> HypothesisType {
                $htype
            }
            fn generate(
                &self,
                _info: &InformationSet<'_>,
                symbol: &SymbolMeta,
                fv: &FeatureVector,
            ) -> Option<Hypothesis> {
                $f(fv, &symbol.symbol, self)
            }
        }
    };
}

impl_generator!(AccumulationRule, HypothesisType::ACCUMULATION, gen_accumulation);
impl_generator!(FlowMomentumRule, HypothesisType::FLOW_MOMENTUM, gen_flow_momentum);
impl_generator!(MeanReversionRule, HypothesisType::MEAN_REVERSION, gen_mean_reversion);
impl_generator!(BreakoutRule, HypothesisType::BREAKOUT, gen_breakout);
impl_generator!(RangeValueRule, HypothesisType::RANGE_VALUE, gen_range_value);

/// The feature registry, the active generators in type order, and the
/// symbols that never receive hypotheses (e.g. a benchmark).
#[derive(Clone)]
pub struct GeneratorSet {
    registry: Arc<FeatureRegistry>,
    generators: Vec<Arc<dyn HypothesisGenerator>>,
    skip: Vec<String>,
}

impl std::fmt::Debug for GeneratorSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GeneratorSet")
            .field("features", &self.registry.len())
            .field("types", &self.types())
            .field("skip", &self.skip)
            .finish()
    }
}

impl GeneratorSet {
    pub fn from_config(config: &GeneratorConfig) -> Self {
        let mut generators: Vec<Arc<dyn HypothesisGenerator>> = Vec::new();
        if config.type1.enabled {
            generators.push(Arc::new(config.type1.clone()));
        }
        if config.type2.enabled {
            generators.push(Arc::new(config.type2.clone()));
        }
        if config.type3.enabled {
            generators.push(Arc::new(config.type3.clone()));
        }
        if config.type4.enabled {
            generators.push(Arc::new(config.type4.clone()));
        }
        if config.type5.enabled {
            generators.push(Arc::new(config.type5.clone()));
        }
        GeneratorSet {
            registry: Arc::new(FeatureRegistry::standard()),
            generators,
            skip: Vec::new(),
        }
    }

    /// Adds a generator; generators run in ascending type order.
    pub fn with_generator(mut self, g: Arc<dyn HypothesisGenerator>) -> Self {
        self.generators.push(g);
        self.generators.sort_by_key(|g| g.htype());
        self
    }

    pub fn with_registry(mut self, registry: Arc<FeatureRegistry>) -> Self {
        self.registry = registry;
        self
    }

    pub fn skipping(mut self, symbols: impl IntoIterator<Item = String>) -> Self {
        self.skip.extend(symbols);
        self
    }

    pub fn registry(&self) -> &Arc<FeatureRegistry> {
        &self.registry
    }

    /// Every type this set can emit, ascending.
    pub fn types(&self) -> Vec<HypothesisType> {
        self.generators.iter().map(|g| g.htype()).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    fn skips(&self, symbol: &str) -> bool {
        self.skip.iter().any(|s| s == symbol)
    }
}

/// All hypotheses for day `t`, in universe order then type order.
pub fn generate_all(
    info: &InformationSet<'_>,
    t: usize,
    set: &GeneratorSet,
) -> Result<Vec<Hypothesis>, MarketDataError> {
    let view = info.narrow(t)?;
    let mut out = Vec::new();
    if set.is_empty() {
        return Ok(out);
    }
    for (s, meta) in view.universe().iter().enumerate() {
        if set.skips(&meta.symbol) {
            continue;
        }
        let fv = compute_features(&view, s, t, &set.registry)?;
        out.extend(set.generators.iter().filter_map(|g| g.generate(&view, meta, &fv)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marketdata::{as_of, generate_synthetic, Episode, EpisodeKind, Regime, SynthSpec};

    fn fv(pairs: &[(&str, f64)]) -> FeatureVector {
        FeatureVector::from_pairs(Arc::new(FeatureRegistry::standard()), pairs)
    }

    #[test]
    fn accumulation_fires_and_explains() {
        let c = GeneratorConfig::default();
        let v = fv(&[
            (names::VOLUME_IMBALANCE, 0.45),
            (names::VOLUME_RATIO, 2.1),
            (names::RETURN_20D, 0.03),
        ]);
        let h = gen_accumulation(&v, "AAPL", &c.type1).unwrap();
        assert_eq!(h.action(), Action::Buy);
        assert_eq!(h.confidence(), 0.75);
        assert_eq!(h.target_return(), 0.08);
        assert_eq!(h.stop_loss(), 0.04);
        assert_eq!(
            h.explanation(),
            "AAPL shows institutional accumulation: 45% buy imbalance with 2.1x volume. \
             Price stable, suggesting smart money positioning before move."
        );
    }

    #[test]
    fn accumulation_boundaries() {
        let c = GeneratorConfig::default();
        let at_edge = fv(&[
            (names::VOLUME_IMBALANCE, 0.30),
            (names::VOLUME_RATIO, 2.1),
            (names::RETURN_20D, 0.03),
        ]);
        assert!(gen_accumulation(&at_edge, "X", &c.type1).is_none());
        let big_move = fv(&[
            (names::VOLUME_IMBALANCE, 0.5),
            (names::VOLUME_RATIO, 2.0),
            (names::RETURN_20D, -0.12),
        ]);
        assert!(gen_accumulation(&big_move, "X", &c.type1).is_none());
    }

    #[test]
    fn flow_momentum_cases() {
        let c = GeneratorConfig::default();
        let base = [
            (names::RETURN_20D, 0.15),
            (names::VOLUME_IMBALANCE, 0.25),
            (names::PRICE_EFFICIENCY, 0.6),
            (names::RSI_14, 65.0),
        ];
        let h = gen_flow_momentum(&fv(&base), "X", &c.type2).unwrap();
        assert_eq!((h.confidence(), h.target_return(), h.stop_loss()), (0.70, 0.10, 0.05));
        let mut hot = base;
        hot[3].1 = 80.0;
        assert!(gen_flow_momentum(&fv(&hot), "X", &c.type2).is_none());
        let mut choppy = base;
        choppy[2].1 = 0.5;
        assert!(gen_flow_momentum(&fv(&choppy), "X", &c.type2).is_none());
    }

    #[test]
    fn mean_reversion_cases() {
        let c = GeneratorConfig::default();
        let base = [
            (names::RSI_14, 22.0),
            (names::RETURN_5D, -0.08),
            (names::REALIZED_VOL_20, 0.012),
        ];
        let h = gen_mean_reversion(&fv(&base), "X", &c.type3).unwrap();
        assert_eq!((h.confidence(), h.target_return(), h.stop_loss()), (0.65, 0.05, 0.03));
        let mut warm = base;
        warm[0].1 = 35.0;
        assert!(gen_mean_reversion(&fv(&warm), "X", &c.type3).is_none());
        let mut wild = base;
        wild[2].1 = 0.05;
        assert!(gen_mean_reversion(&fv(&wild), "X", &c.type3).is_none());
    }

    #[test]
    fn breakout_cases() {
        let c = GeneratorConfig::default();
        let base = [
            (names::DIST_FROM_HIGH_252, -0.01),
            (names::VOLUME_RATIO, 1.8),
            (names::RETURN_20D, 0.04),
        ];
        let h = gen_breakout(&fv(&base), "X", &c.type4).unwrap();
        assert_eq!((h.confidence(), h.target_return(), h.stop_loss()), (0.68, 0.07, 0.04));
        let mut far = base;
        far[0].1 = -0.05;
        assert!(gen_breakout(&fv(&far), "X", &c.type4).is_none());
        let mut thin = base;
        thin[1].1 = 1.5;
        assert!(gen_breakout(&fv(&thin), "X", &c.type4).is_none());
    }

    #[test]
    fn range_value_cases() {
        let c = GeneratorConfig::default();
        let base = [
            (names::RANGE_FRACTION_20, 0.06),
            (names::VOLUME_IMBALANCE, 0.3),
            (names::REALIZED_VOL_20, 0.01),
        ];
        let h = gen_range_value(&fv(&base), "X", &c.type5).unwrap();
        assert_eq!((h.confidence(), h.target_return(), h.stop_loss()), (0.60, 0.05, 0.03));
        let mut wide = base;
        wide[0].1 = 0.15;
        assert!(gen_range_value(&fv(&wide), "X", &c.type5).is_none());
        let mut weak = base;
        weak[1].1 = 0.1;
        assert!(gen_range_value(&fv(&weak), "X", &c.type5).is_none());
    }

    #[test]
    fn default_templates_carry_two_live_values() {
        assert!(GeneratorConfig::default().problems().is_empty());
        let mut c = GeneratorConfig::default();
        c.type3.template = "{symbol} bounce".into();
        c.type1.confidence = 1.2;
        let keys: Vec<_> = c.problems().into_iter().map(|p| p.0).collect();
        assert_eq!(keys, ["hypotheses.type1.confidence", "hypotheses.type3.template"]);
    }

    #[test]
    fn invalid_hypotheses_rejected() {
        let v = fv(&[]);
        let mk = |c: f64, r: f64, s: f64, e: &str| {
            Hypothesis::new("X", Action::Buy, HypothesisType(9), e, c, v.clone(), r, s)
        };
        assert_eq!(mk(1.1, 0.1, 0.1, "x").unwrap_err(), HypothesisError::Confidence(1.1));
        assert_eq!(mk(0.5, 0.0, 0.1, "x").unwrap_err(), HypothesisError::Target(0.0));
        assert_eq!(mk(0.5, 0.1, -0.1, "x").unwrap_err(), HypothesisError::Stop(-0.1));
        assert_eq!(mk(0.5, 0.1, 0.1, " ").unwrap_err(), HypothesisError::EmptyExplanation);
        assert!(mk(0.5, 0.1, 0.1, "ok").is_ok());
    }

    pub(crate) fn flat_spec() -> SynthSpec {
        SynthSpec {
            symbols: 3,
            days: 120,
            volume_noise: 0.0,
            wick: 0.06,
            regimes: vec![Regime {
                start: 0,
                drift: 0.0,
                volatility: 0.0,
            }],
            ..Default::default()
        }
    }

    #[test]
    fn flat_market_is_silent() {
        let p = generate_synthetic(&flat_spec(), 1).unwrap();
        let set = GeneratorSet::from_config(&GeneratorConfig::default());
        let info = as_of(&p, 119).unwrap();
        for t in 0..120 {
            assert!(generate_all(&info, t, &set).unwrap().is_empty(), "day {t}");
        }
    }

    #[test]
    fn injected_accumulation_yields_exactly_type1() {
        let spec = SynthSpec {
            episodes: vec![Episode {
                kind: EpisodeKind::Accumulation,
                symbol: 1,
                start: 60,
                length: 10,
                volume_multiple: 3.0,
                markup: 0.0,
                markup_days: 0,
            }],
            ..flat_spec()
        };
        let p = generate_synthetic(&spec, 1).unwrap();
        let set = GeneratorSet::from_config(&GeneratorConfig::default());
        let info = as_of(&p, 60).unwrap();
        let hs = generate_all(&info, 60, &set).unwrap();
        assert_eq!(hs.len(), 1);
        assert_eq!(hs[0].symbol(), "S001");
        assert_eq!(hs[0].htype(), HypothesisType::ACCUMULATION);
        assert!(hs[0].features().get(names::VOLUME_IMBALANCE).unwrap() > 0.30);
        // nothing fires before the episode
        assert!(generate_all(&info, 59, &set).unwrap().is_empty());
    }

    #[test]
    fn two_types_on_one_symbol_keep_type_order() {
        // a custom generator that always fires as type 0 and one as type 7
        struct Always(u8);
        impl HypothesisGenerator for Always {
            fn htype(&self) -> HypothesisType {
                HypothesisType(self.0)
            }
            fn generate(&self, _: &InformationSet<'_>, s: &SymbolMeta, fv: &FeatureVector) -> Option<Hypothesis> {
                Hypothesis::new(
                    &s.symbol,
                    Action::Buy,
                    HypothesisType(self.0),
                    "always",
                    0.5,
                    fv.clone(),
                    0.1,
                    0.1,
                )
                .ok()
            }
        }
        let set = GeneratorSet::from_config(&GeneratorConfig::all_disabled())
            .with_generator(Arc::new(Always(7)))
            .with_generator(Arc::new(Always(0)))
            .skipping(["S002".to_string()]);
        let p = generate_synthetic(&flat_spec(), 1).unwrap();
        let hs = generate_all(&as_of(&p, 50).unwrap(), 50, &set).unwrap();
        let order: Vec<_> = hs.iter().map(|h| (h.symbol().to_string(), h.htype().0)).collect();
        assert_eq!(
            order,
            [
                ("S000".into(), 0),
                ("S000".into(), 7),
                ("S001".into(), 0),
                ("S001".into(), 7)
            ]
        );
    }
}
