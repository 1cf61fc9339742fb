use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, ContinuousCDF, DiscreteCDF, StudentsT};

use super::{check, mean, sample_sd, StatsError};
use crate::par::{map_indexed, Schedule};
use crate::seed::{derive_seed, rng_from_seed};

/// Resamples drawn from one derived rng stream. Fixed, so the output does
/// not depend on how chunks are scheduled.
const CHUNK: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    pub p_two_sided: f64,
    /// H1: mean > mu0.
    pub p_one_sided: f64,
}

/// One-sample t-test of the mean against `mu0`.
pub fn t_test(r: &[f64], mu0: f64) -> Result<TTest, StatsError> {
    check(r, 2)?;
    let sd = sample_sd(r);
    if sd == 0.0 {
        return Err(StatsError::ZeroDispersion("standard deviation"));
    }
    let n = r.len() as f64;
    let t = (mean(r) - mu0) / (sd / n.sqrt());
    let df = n - 1.0;
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| StatsError::Distribution(e.to_string()))?;
    let p_one = dist.sf(t);
    Ok(TTest {
        t,
        df,
        p_two_sided: 2.0 * p_one.min(1.0 - p_one),
        p_one_sided: p_one,
    })
}

/// P(X ≥ successes) for X ~ Binomial(n, p0).
pub fn binomial_test(successes: u64, n: u64, p0: f64) -> Result<f64, StatsError> {
    if successes > n {
        return Err(StatsError::Invalid(format!("{successes} successes out of {n} trials")));
    }
    if successes == 0 {
        return Ok(1.0);
    }
    let dist = Binomial::new(p0, n).map_err(|e| StatsError::Distribution(e.to_string()))?;
    Ok(dist.sf(successes - 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn chunked<F>(total: usize, seed: u64, schedule: Schedule, f: F) -> Vec<f64>
where
    F: Fn(&mut crate::seed::EngineRng) -> f64 + Sync + Send,
{
    let chunks = total.div_ceil(CHUNK);
    map_indexed(chunks, schedule, |c| {
        let mut rng = rng_from_seed(derive_seed(seed, c as u64));
        let len = CHUNK.min(total - c * CHUNK);
        (0..len).map(|_| f(&mut rng)).collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Means of `resamples` bootstrap resamples, in draw order.
pub fn bootstrap_means(r: &[f64], resamples: usize, seed: u64, schedule: Schedule) -> Result<Vec<f64>, StatsError> {
    check(r, 1)?;
    let n = r.len();
    Ok(chunked(resamples, seed, schedule, |rng| {
        (0..n).map(|_| r[rng.random_range(0..n)]).sum::<f64>() / n as f64
    }))
}

/// Percentile bootstrap interval for the mean.
pub fn bootstrap_ci(
    r: &[f64],
    resamples: usize,
    level: f64,
    seed: u64,
    schedule: Schedule,
) -> Result<Interval, StatsError> {
    if !(level > 0.0 && level < 1.0) || resamples == 0 {
        return Err(StatsError::Invalid(format!("level {level} with {resamples} resamples")));
    }
    let mut means = bootstrap_means(r, resamples, seed, schedule)?;
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok(Interval {
        level,
        lower: quantile_sorted(&means, tail),
        upper: quantile_sorted(&means, 1.0 - tail),
    })
}

/// Sign-flip randomization test; p = share of flipped means ≥ the observed
/// mean (one-sided, greater).
pub fn permutation_test(r: &[f64], permutations: usize, seed: u64, schedule: Schedule) -> Result<f64, StatsError> {
    check(r, 1)?;
    if permutations == 0 {
        return Err(StatsError::Invalid("zero permutations".into()));
    }
    let observed: f64 = r.iter().sum();
    let tol = 1e-12 * r.iter().map(|x| x.abs()).sum::<f64>();
    let hits = chunked(permutations, seed, schedule, |rng| {
        let s: f64 = r.iter().map(|x| if rng.random::<bool>() { *x } else { -x }).sum();
        if s >= observed - tol {
            1.0
        } else {
            0.0
        }
    });
    Ok(hits.iter().sum::<f64>() / permutations as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::matched_series;
    use proptest::prelude::*;

    fn tail_sum(k: u64, n: u64, p: f64) -> f64 {
        (k..=n)
            .map(|i| {
                let mut c = 1.0;
                for j in 0..i {
                    c = c * (n - j) as f64 / (j + 1) as f64;
                }
                c * p.powi(i as i32) * (1.0 - p).powi((n - i) as i32)
            })
            .sum()
    }

    #[test]
    fn t_test_summary_stats() {
        let r = matched_series(34, 0.0014, 0.0082, 4);
        let t = t_test(&r, 0.0).unwrap();
        assert_eq!(t.df, 33.0);
        assert!((t.t - 0.9955).abs() < 1e-3);
        assert!((t.p_two_sided - 0.33).abs() < 0.05);
        assert!(t_test(&[1.0, 1.0], 0.0).is_err());
        let sym = [0.01, -0.01, 0.02, -0.02];
        assert!(t_test(&sym, 0.0).unwrap().t.abs() < 1e-12);
    }

    #[test]
    fn t_test_shift_matches_recomputation() {
        let r = matched_series(20, 0.002, 0.01, 8);
        let shifted: Vec<f64> = r.iter().map(|x| x + 0.003).collect();
        let direct = (mean(&shifted)) / (sample_sd(&shifted) / 20f64.sqrt());
        assert!((t_test(&shifted, 0.0).unwrap().t - direct).abs() < 1e-10);
        assert!((t_test(&shifted, 0.003).unwrap().t - t_test(&r, 0.0).unwrap().t).abs() < 1e-9);
    }

    #[test]
    fn binomial_examples() {
        let p = binomial_test(14, 34, 0.5).unwrap();
        assert!((p - tail_sum(14, 34, 0.5)).abs() < 1e-12);
        // exact tail is 0.88526; 0.89 to two places
        assert!((p - 0.8852594934869558).abs() < 1e-12);
        assert!((p - 0.89).abs() < 0.005);
        assert!((binomial_test(34, 34, 0.5).unwrap() - 0.5f64.powi(34)).abs() < 1e-20);
        assert_eq!(binomial_test(0, 34, 0.5).unwrap(), 1.0);
        assert!(binomial_test(35, 34, 0.5).is_err());
        assert!((binomial_test(7, 10, 0.3).unwrap() - tail_sum(7, 10, 0.3)).abs() < 1e-12);
    }

    #[test]
    fn bootstrap_properties() {
        let c = bootstrap_ci(&[0.02; 10], 2000, 0.95, 1, Schedule::Sequential).unwrap();
        assert!((c.lower - 0.02).abs() < 1e-15 && (c.upper - 0.02).abs() < 1e-15);
        let r = matched_series(34, 0.0014, 0.0082, 4);
        let ci95 = bootstrap_ci(&r, 10_000, 0.95, 7, Schedule::Sequential).unwrap();
        assert!(ci95.contains(0.0));
        let ci90 = bootstrap_ci(&r, 10_000, 0.90, 7, Schedule::Sequential).unwrap();
        assert!(ci95.lower <= ci90.lower && ci90.upper <= ci95.upper);
        assert_eq!(
            ci95,
            bootstrap_ci(&r, 10_000, 0.95, 7, Schedule::Parallel { jobs: 4 }).unwrap()
        );
    }

    #[test]
    fn permutation_properties() {
        assert!(permutation_test(&[0.01; 20], 5000, 1, Schedule::Sequential).unwrap() < 0.001);
        let anti: Vec<f64> = (1..=20).flat_map(|i| [i as f64 * 0.001, -(i as f64) * 0.001]).collect();
        let p = permutation_test(&anti, 10_000, 3, Schedule::Sequential).unwrap();
        assert!((p - 0.5).abs() < 0.02, "{p}");
        let a = permutation_test(&anti, 3000, 9, Schedule::Sequential).unwrap();
        assert_eq!(
            a,
            permutation_test(&anti, 3000, 9, Schedule::Parallel { jobs: 3 }).unwrap()
        );
    }

    proptest! {
        #[test]
        fn two_sided_is_twice_smaller_tail(r in prop::collection::vec(-0.1..0.1f64, 3..40)) {
            if let Ok(t) = t_test(&r, 0.0) {
                let expect = 2.0 * t.p_one_sided.min(1.0 - t.p_one_sided);
                prop_assert!((t.p_two_sided - expect).abs() < 1e-12);
            }
        }
    }
}
