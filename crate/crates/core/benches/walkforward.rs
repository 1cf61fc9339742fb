use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use hypowalk::hypothesis::{GeneratorConfig, GeneratorSet};
use hypowalk::marketdata::{generate_synthetic, SynthSpec};
use hypowalk::par::Schedule;
use hypowalk::stats::{bootstrap_ci, matched_series, permutation_test};
use hypowalk::walkforward::{run_all, schedule, FoldConfig, WalkForwardConfig};

fn schedules() -> [(&'static str, Schedule); 2] {
    [
        ("sequential", Schedule::Sequential),
        ("parallel", Schedule::Parallel { jobs: 0 }),
    ]
}

fn folds(c: &mut Criterion) {
    let spec = SynthSpec {
        symbols: 10,
        days: 820,
        ..SynthSpec::default()
    };
    let panel = generate_synthetic(&spec, 1).unwrap();
    let specs = schedule(panel.num_days(), &WalkForwardConfig::default()).unwrap();
    let cfg = FoldConfig::new(GeneratorSet::from_config(&GeneratorConfig::default()));
    let mut g = c.benchmark_group("run_all");
    g.sample_size(10);
    for (name, s) in schedules() {
        g.bench_with_input(BenchmarkId::new(name, specs.len()), &s, |b, s| {
            b.iter(|| run_all(black_box(&panel), &specs, &cfg, 7, *s).unwrap())
        });
    }
    g.finish();
}

fn resampling(c: &mut Criterion) {
    let r = matched_series(34, 0.0014, 0.0082, 3);
    let mut g = c.benchmark_group("resampling");
    for (name, s) in schedules() {
        g.bench_with_input(BenchmarkId::new("bootstrap", name), &s, |b, s| {
            b.iter(|| bootstrap_ci(black_box(&r), 10_000, 0.95, 1, *s).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("permutation", name), &s, |b, s| {
            b.iter(|| permutation_test(black_box(&r), 10_000, 1, *s).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, folds, resampling);
criterion_main!(benches);
