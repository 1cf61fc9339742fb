use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use super::{check, mean, StatsError};

pub const LJUNG_BOX_LAGS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapiroWilk {
    pub w: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LjungBox {
    pub lags: usize,
    pub q: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub skewness: Option<f64>,
    pub excess_kurtosis: Option<f64>,
    pub shapiro_wilk: Option<ShapiroWilk>,
    pub ljung_box: Option<LjungBox>,
}

fn central_moment(r: &[f64], k: i32) -> f64 {
    let m = mean(r);
    r.iter().map(|x| (x - m).powi(k)).sum::<f64>() / r.len() as f64
}

/// Moment skewness m3 / m2^1.5.
pub fn skewness(r: &[f64]) -> Result<f64, StatsError> {
    check(r, 3)?;
    let m2 = central_moment(r, 2);
    if m2 == 0.0 {
        return Err(StatsError::ZeroDispersion("variance"));
    }
    Ok(central_moment(r, 3) / m2.powf(1.5))
}

/// Moment excess kurtosis m4 / m2^2 - 3.
pub fn excess_kurtosis(r: &[f64]) -> Result<f64, StatsError> {
    check(r, 4)?;
    let m2 = central_moment(r, 2);
    if m2 == 0.0 {
        return Err(StatsError::ZeroDispersion("variance"));
    }
    Ok(central_moment(r, 4) / (m2 * m2) - 3.0)
}

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, k| acc * x + k)
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Shapiro–Wilk W with Royston's (1992/1995) coefficient and p-value
/// approximations, 3 ≤ n ≤ 5000.
pub fn shapiro_wilk(r: &[f64]) -> Result<ShapiroWilk, StatsError> {
    check(r, 3)?;
    let n = r.len();
    if n > 5000 {
        return Err(StatsError::Invalid(format!("Shapiro-Wilk needs n <= 5000, got {n}")));
    }
    let mut x = r.to_vec();
    x.sort_by(f64::total_cmp);
    let range = x[n - 1] - x[0];
    if range == 0.0 {
        return Err(StatsError::ZeroDispersion("range"));
    }
    let nf = n as f64;
    let norm = std_normal();
    let half = n / 2;

    // a[i] for the upper half, i = 0 is the largest order statistic
    let mut a = vec![0.0; half];
    if n == 3 {
        a[0] = 0.5f64.sqrt();
    } else {
        let m: Vec<f64> = (1..=half)
            .map(|i| -norm.inverse_cdf((i as f64 - 0.375) / (nf + 0.25)))
            .collect();
        let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
        let ssumm2 = summ2.sqrt();
        let rsn = 1.0 / nf.sqrt();
        const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056];
        const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
        let a1 = poly(&C1, rsn) + m[0] / ssumm2;
        let (i1, fac) = if n > 5 {
            let a2 = poly(&C2, rsn) + m[1] / ssumm2;
            let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2)).sqrt();
            a[1] = a2;
            (2, fac)
        } else {
            let fac = ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt();
            (1, fac)
        };
        a[0] = a1;
        for i in i1..half {
            a[i] = m[i] / fac;
        }
    }

    let xm = mean(&x);
    let ssq: f64 = x.iter().map(|v| (v - xm).powi(2)).sum();
    let num: f64 = (0..half).map(|i| a[i] * (x[n - 1 - i] - x[i])).sum();
    let w = (num * num / ssq).min(1.0);

    let p = if n == 3 {
        let pi6 = 6.0 / std::f64::consts::PI;
        let stqr = (0.75f64).sqrt().asin();
        (pi6 * (w.sqrt().asin() - stqr)).max(0.0)
    } else if n <= 11 {
        const G: [f64; 2] = [-2.273, 0.459];
        const C3: [f64; 4] = [0.5440, -0.39978, 0.025054, -6.714e-4];
        const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
        let gamma = poly(&G, nf);
        let y = -(gamma - (1.0 - w).ln()).ln();
        let (mu, sigma) = (poly(&C3, nf), poly(&C4, nf).exp());
        norm.sf((y - mu) / sigma)
    } else {
        const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
        const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
        let ln_n = nf.ln();
        let (mu, sigma) = (poly(&C5, ln_n), poly(&C6, ln_n).exp());
        norm.sf(((1.0 - w).ln() - mu) / sigma)
    };
    Ok(ShapiroWilk { w, p })
}

/// Sample autocorrelation at `lag`.
pub fn autocorrelation(r: &[f64], lag: usize) -> f64 {
    let m = mean(r);
    let denom: f64 = r.iter().map(|x| (x - m).powi(2)).sum();
    let num: f64 = (lag..r.len()).map(|t| (r[t] - m) * (r[t - lag] - m)).sum();
    num / denom
}

/// Q = n(n+2) Σ ρ_k² / (n-k) against chi-square with `lags` df.
pub fn ljung_box(r: &[f64], lags: usize) -> Result<LjungBox, StatsError> {
    check(r, lags + 2)?;
    if central_moment(r, 2) == 0.0 {
        return Err(StatsError::ZeroDispersion("variance"));
    }
    let n = r.len() as f64;
    let q = n
        * (n + 2.0)
        * (1..=lags)
            .map(|k| autocorrelation(r, k).powi(2) / (n - k as f64))
            .sum::<f64>();
    let chi = ChiSquared::new(lags as f64).map_err(|e| StatsError::Distribution(e.to_string()))?;
    Ok(LjungBox { lags, q, p: chi.sf(q) })
}

/// Every diagnostic the series is long and dispersed enough for.
pub fn distribution_diagnostics(r: &[f64]) -> Diagnostics {
    Diagnostics {
        skewness: skewness(r).ok(),
        excess_kurtosis: excess_kurtosis(r).ok(),
        shapiro_wilk: shapiro_wilk(r).ok(),
        ljung_box: ljung_box(r, LJUNG_BOX_LAGS).ok(),
    }
}
