use serde::{Deserialize, Serialize};

use super::{check, mean, sample_sd, StatsError};

/// Fold returns per year for quarterly (63-day) test windows.
pub const PERIODS_PER_YEAR: f64 = 4.0;

/// mean / sample sd, scaled by sqrt(periods_per_year).
pub fn sharpe(r: &[f64], periods_per_year: f64) -> Result<f64, StatsError> {
    check(r, 2)?;
    let sd = sample_sd(r);
    if sd == 0.0 {
        return Err(StatsError::ZeroDispersion("standard deviation"));
    }
    Ok(mean(r) / sd * periods_per_year.sqrt())
}

/// Root-mean-square of min(r, 0) over all periods.
pub fn downside_deviation(r: &[f64]) -> f64 {
    (r.iter().map(|x| x.min(0.0).powi(2)).sum::<f64>() / r.len() as f64).sqrt()
}

/// mean / downside deviation, scaled by sqrt(periods_per_year).
pub fn sortino(r: &[f64], periods_per_year: f64) -> Result<f64, StatsError> {
    check(r, 2)?;
    let dd = downside_deviation(r);
    if dd == 0.0 {
        return Err(StatsError::ZeroDispersion("downside deviation"));
    }
    Ok(mean(r) / dd * periods_per_year.sqrt())
}

/// Compounded value after each period, starting from 1.
pub fn cumulative(r: &[f64]) -> Vec<f64> {
    r.iter()
        .scan(1.0, |v, x| {
            *v *= 1.0 + x;
            Some(*v)
        })
        .collect()
}

/// Drawdown of the compounded curve after each period (peak includes the
/// starting value 1).
pub fn drawdowns(r: &[f64]) -> Vec<f64> {
    let mut peak = 1.0_f64;
    cumulative(r)
        .into_iter()
        .map(|v| {
            peak = peak.max(v);
            v / peak - 1.0
        })
        .collect()
}

/// Worst drawdown, always ≤ 0.
pub fn max_drawdown(r: &[f64]) -> Result<f64, StatsError> {
    check(r, 1)?;
    Ok(drawdowns(r).into_iter().fold(0.0, f64::min))
}

pub fn annualized_return(r: &[f64], periods_per_year: f64) -> Result<f64, StatsError> {
    check(r, 1)?;
    Ok(mean(r) * periods_per_year)
}

/// Annualized return over |MDD|.
pub fn calmar_ratio(annualized: f64, mdd: f64) -> Result<f64, StatsError> {
    if mdd == 0.0 {
        return Err(StatsError::ZeroDispersion("drawdown"));
    }
    Ok(annualized / mdd.abs())
}

pub fn calmar(r: &[f64], periods_per_year: f64) -> Result<f64, StatsError> {
    calmar_ratio(annualized_return(r, periods_per_year)?, max_drawdown(r)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRegression {
    pub beta: f64,
    pub beta_se: f64,
    /// Per-period intercept times periods per year.
    pub alpha: f64,
    pub correlation: f64,
    /// Sample sd of the active return, annualized.
    pub tracking_error: f64,
}

/// OLS of `strategy` on `benchmark`.
pub fn regress_benchmark(
    strategy: &[f64],
    benchmark: &[f64],
    periods_per_year: f64,
) -> Result<BenchmarkRegression, StatsError> {
    if strategy.len() != benchmark.len() {
        return Err(StatsError::LengthMismatch {
            left: strategy.len(),
            right: benchmark.len(),
        });
    }
    check(strategy, 3)?;
    check(benchmark, 3)?;
    let n = strategy.len() as f64;
    let (ms, mb) = (mean(strategy), mean(benchmark));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (s, b) in strategy.iter().zip(benchmark) {
        sxy += (s - ms) * (b - mb);
        sxx += (b - mb).powi(2);
        syy += (s - ms).powi(2);
    }
    if sxx == 0.0 {
        return Err(StatsError::ZeroDispersion("benchmark variance"));
    }
    let beta = sxy / sxx;
    let intercept = ms - beta * mb;
    let rss: f64 = strategy
        .iter()
        .zip(benchmark)
        .map(|(s, b)| (s - intercept - beta * b).powi(2))
        .sum();
    let beta_se = (rss / (n - 2.0) / sxx).sqrt();
    let correlation = if syy == 0.0 { 0.0 } else { sxy / (sxx * syy).sqrt() };
    let active: Vec<f64> = strategy.iter().zip(benchmark).map(|(s, b)| s - b).collect();
    Ok(BenchmarkRegression {
        beta,
        beta_se,
        alpha: intercept * periods_per_year,
        correlation,
        tracking_error: sample_sd(&active) * periods_per_year.sqrt(),
    })
}

/// Trailing-window Sharpe per position (None until the window fills or
/// when the window has no dispersion).
pub fn rolling_sharpe(r: &[f64], window: usize, periods_per_year: f64) -> Vec<Option<f64>> {
    (0..r.len())
        .map(|i| {
            if i + 1 < window || window < 2 {
                return None;
            }
            sharpe(&r[i + 1 - window..=i], periods_per_year).ok()
        })
        .collect()
}

/// Share of positive values in each trailing window.
pub fn rolling_win_rate(r: &[f64], window: usize) -> Vec<Option<f64>> {
    (0..r.len())
        .map(|i| {
            if i + 1 < window || window == 0 {
                return None;
            }
            let w = &r[i + 1 - window..=i];
            Some(w.iter().filter(|x| **x > 0.0).count() as f64 / window as f64)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::matched_series;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn sharpe_from_summary_stats() {
        let r = matched_series(34, 0.0014, 0.0082, 1);
        let s = sharpe(&r, 4.0).unwrap();
        assert!((s - 0.0014 / 0.0082 * 2.0).abs() < 1e-12);
        assert!((s - 0.3415).abs() < 1e-4);
        assert!(sharpe(&[0.01; 5], 4.0).is_err());
        let neg: Vec<f64> = r.iter().map(|x| -x).collect();
        assert!((sharpe(&neg, 4.0).unwrap() + s).abs() < 1e-12);
    }

    #[test]
    fn sortino_cases() {
        assert!(sortino(&[0.01, 0.02, 0.03], 4.0).is_err());
        assert_eq!(sortino(&[0.02, -0.02, 0.01, -0.01], 4.0).unwrap(), 0.0);
        // mean 0.01, downside sqrt(0.0004/4) = 0.01
        let s = sortino(&[0.03, -0.02, 0.03, 0.0], 4.0).unwrap();
        assert!((s - 2.0).abs() < 1e-12);
    }

    #[test]
    fn drawdown_examples() {
        assert!((max_drawdown(&[0.10, -0.20, 0.10]).unwrap() - (0.88 / 1.10 - 1.0)).abs() < 1e-12);
        assert_eq!(max_drawdown(&[0.01, 0.02]).unwrap(), 0.0);
        assert!((max_drawdown(&[-0.05]).unwrap() + 0.05).abs() < 1e-15);
        assert!(max_drawdown(&[]).is_err());
    }

    #[test]
    fn calmar_examples() {
        assert!((calmar_ratio(0.0055, -0.0276).unwrap() - 0.199).abs() < 0.002);
        assert!(calmar_ratio(0.01, 0.0).is_err());
        assert!(calmar(&[-0.01, -0.02, 0.005], 4.0).unwrap() < 0.0);
    }

    #[test]
    fn regression_identities() {
        let b = matched_series(40, 0.01, 0.05, 2);
        let same = regress_benchmark(&b, &b, 4.0).unwrap();
        assert!((same.beta - 1.0).abs() < 1e-12);
        assert!(same.alpha.abs() < 1e-12);
        assert!((same.correlation - 1.0).abs() < 1e-12);
        assert!(same.tracking_error.abs() < 1e-12);
        let half: Vec<f64> = b.iter().map(|x| 0.5 * x).collect();
        assert!((regress_benchmark(&half, &b, 4.0).unwrap().beta - 0.5).abs() < 1e-12);
        assert!(regress_benchmark(&b[..3], &b[..4], 4.0).is_err());
    }

    #[test]
    fn uncorrelated_pair_has_small_beta() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let draw =
            |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> { (0..1000).map(|_| StandardNormal.sample(rng)).collect() };
        let (s, b) = (draw(&mut rng), draw(&mut rng));
        let reg = regress_benchmark(&s, &b, 4.0).unwrap();
        assert!(reg.beta.abs() < 0.1);
        assert!(reg.beta.abs() < 3.0 * reg.beta_se);
    }

    #[test]
    fn rolling_windows() {
        let r = [0.01, -0.02, 0.03, 0.01];
        let wr = rolling_win_rate(&r, 2);
        assert_eq!(wr, vec![None, Some(0.5), Some(0.5), Some(1.0)]);
        let rs = rolling_sharpe(&r, 3, 4.0);
        assert!(rs[1].is_none());
        assert!((rs[2].unwrap() - sharpe(&r[..3], 4.0).unwrap()).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn drawdown_monotone_in_extension(r in prop::collection::vec(-0.5..0.5f64, 1..60)) {
            let full = max_drawdown(&r).unwrap();
            prop_assert!(full <= 0.0);
            for k in 1..=r.len() {
                prop_assert!(max_drawdown(&r[..k]).unwrap() >= full);
            }
        }

        #[test]
        fn annualization_is_twice_ratio(r in prop::collection::vec(-0.2..0.2f64, 2..60)) {
            if let Ok(s) = sharpe(&r, 4.0) {
                prop_assert_eq!(s, mean(&r) / sample_sd(&r) * 2.0);
            }
        }
    }
}
