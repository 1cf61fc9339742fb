//! Data-parallel map with a sequential fallback.
//!
//! With the `parallel` feature the closures run on a rayon pool; without it
//! (or with `jobs == 1`) they run in order on the calling thread. Output order
//! always follows input order, so results never depend on scheduling.

/// How to schedule independent work items.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    Sequential,
    /// Bounded worker pool; `0` means rayon's default width.
    Parallel {
        jobs: usize,
    },
}

impl Schedule {
    pub fn from_jobs(jobs: usize) -> Self {
        if jobs == 1 {
            Schedule::Sequential
        } else {
            Schedule::Parallel { jobs }
        }
    }
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule::Parallel { jobs: 0 }
    }
}

/// Map `f` over `0..n`, returning results in index order.
pub fn map_indexed<T, F>(n: usize, schedule: Schedule, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match schedule {
        Schedule::Sequential => (0..n).map(f).collect(),
        Schedule::Parallel { jobs } => parallel_map(n, jobs, f),
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T, F>(n: usize, jobs: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    if jobs == 0 {
        return (0..n).into_par_iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
        // no threads available: run in order
        Err(_) => (0..n).map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, F>(n: usize, _jobs: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let seq = map_indexed(100, Schedule::Sequential, |i| i * i);
        let par = map_indexed(100, Schedule::Parallel { jobs: 4 }, |i| i * i);
        assert_eq!(seq, par);
        assert_eq!(seq[7], 49);
    }
}
