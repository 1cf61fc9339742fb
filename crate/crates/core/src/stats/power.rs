use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{check, mean, sample_sd, StatsError};

/// Normal-approximation power formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerVariant {
    /// Noncentrality d·sqrt(n).
    OneSample,
    /// Noncentrality d·sqrt(n/2); the variant whose 80% sample size lands
    /// near 540 at d = 0.17.
    TwoSample,
}

impl PowerVariant {
    pub fn label(self) -> &'static str {
        match self {
            PowerVariant::OneSample => "one-sample normal approximation, ncp = d*sqrt(n)",
            PowerVariant::TwoSample => "two-sample normal approximation, ncp = d*sqrt(n/2)",
        }
    }

    fn ncp(self, d: f64, n: f64) -> f64 {
        match self {
            PowerVariant::OneSample => d * n.sqrt(),
            PowerVariant::TwoSample => d * (n / 2.0).sqrt(),
        }
    }
}

fn unit() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Two-sided power at level `alpha`.
pub fn power(d: f64, n: f64, alpha: f64, variant: PowerVariant) -> f64 {
    let z = unit();
    let crit = z.inverse_cdf(1.0 - alpha / 2.0);
    let ncp = variant.ncp(d, n);
    z.cdf(ncp - crit) + z.cdf(-ncp - crit)
}

/// Smallest n reaching `target` power; None when d = 0 or n would exceed 10^9.
pub fn n_for_power(d: f64, target: f64, alpha: f64, variant: PowerVariant) -> Option<u64> {
    if d == 0.0 || !(target > alpha && target < 1.0) {
        return None;
    }
    let (mut lo, mut hi) = (1u64, 2u64);
    while power(d, hi as f64, alpha, variant) < target {
        lo = hi;
        hi *= 2;
        if hi > 1_000_000_000 {
            return None;
        }
    }
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if power(d, mid as f64, alpha, variant) >= target {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Some(lo)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub variant: PowerVariant,
    pub formula: String,
    pub power_at_n: f64,
    /// (target power, n) pairs.
    pub n_for_power: Vec<(f64, Option<u64>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectSize {
    pub cohens_d: f64,
    pub n: usize,
    pub alpha: f64,
    pub primary: PowerVariant,
    pub variants: Vec<PowerRow>,
}

impl EffectSize {
    /// Power under the primary variant.
    pub fn power(&self) -> f64 {
        self.variants
            .iter()
            .find(|v| v.variant == self.primary)
            .map(|v| v.power_at_n)
            .unwrap_or(f64::NAN)
    }
}

pub const POWER_TARGETS: [f64; 4] = [0.5, 0.7, 0.8, 0.9];

/// Cohen's d = mean / sample sd, with power under both variants.
pub fn effect_size_and_power(r: &[f64], alpha: f64) -> Result<EffectSize, StatsError> {
    check(r, 2)?;
    let sd = sample_sd(r);
    if sd == 0.0 {
        return Err(StatsError::ZeroDispersion("standard deviation"));
    }
    Ok(effect_size_for(mean(r) / sd, r.len(), alpha))
}

pub fn effect_size_for(d: f64, n: usize, alpha: f64) -> EffectSize {
    let variants = [PowerVariant::TwoSample, PowerVariant::OneSample]
        .into_iter()
        .map(|v| PowerRow {
            variant: v,
            formula: v.label().to_string(),
            power_at_n: power(d, n as f64, alpha, v),
            n_for_power: POWER_TARGETS
                .iter()
                .map(|t| (*t, n_for_power(d, *t, alpha, v)))
                .collect(),
        })
        .collect();
    EffectSize {
        cohens_d: d,
        n,
        alpha,
        primary: PowerVariant::TwoSample,
        variants,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::matched_series;
    use proptest::prelude::*;

    #[test]
    fn matched_series_effect_size() {
        let e = effect_size_and_power(&matched_series(34, 0.0014, 0.0082, 2), 0.05).unwrap();
        assert!((e.cohens_d - 0.171).abs() < 5e-4);
    }

    #[test]
    fn power_bracket_and_sample_size() {
        let two = power(0.17, 34.0, 0.05, PowerVariant::TwoSample);
        let one = power(0.17, 34.0, 0.05, PowerVariant::OneSample);
        assert!((0.10..=0.20).contains(&two), "{two}");
        assert!((0.10..=0.20).contains(&one), "{one}");
        assert!(one > two);
        let n80 = n_for_power(0.17, 0.8, 0.05, PowerVariant::TwoSample).unwrap();
        assert!((530..=550).contains(&n80), "{n80}");
        let n1 = n_for_power(0.17, 0.8, 0.05, PowerVariant::OneSample).unwrap();
        assert!((260..=280).contains(&n1), "{n1}");
    }

    #[test]
    fn null_effect_gives_alpha() {
        for v in [PowerVariant::OneSample, PowerVariant::TwoSample] {
            let p = power(0.0, 34.0, 0.05, v);
            assert!((p - 0.05).abs() < 1e-9, "{p}");
        }
        assert_eq!(n_for_power(0.0, 0.8, 0.05, PowerVariant::OneSample), None);
    }

    proptest! {
        #[test]
        fn power_grows_with_n(d in 0.01..2.0f64, n in 2u32..500) {
            for v in [PowerVariant::OneSample, PowerVariant::TwoSample] {
                let (a, b) = (power(d, n as f64, 0.05, v), power(d, n as f64 + 1.0, 0.05, v));
                prop_assert!(b > a || b > 1.0 - 1e-12);
            }
        }
    }
}
