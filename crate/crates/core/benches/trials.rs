//! Sequential vs parallel Monte Carlo trials of majority and the clock.

use std::hint::black_box;

use bcp::analysis::{measure_time, Estimator};
use bcp::cmsim::{clock_bp, run_clock};
use bcp::model::trial_rng;
use bcp::par::{map_trials, Exec};
use bcp::presburger::majority_protocol;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn modes() -> Vec<(&'static str, Exec)> {
    let mut m = vec![("sequential", Exec::Sequential)];
    if Exec::available() == Exec::Parallel {
        m.push(("parallel", Exec::Parallel));
    }
    m
}

fn majority(c: &mut Criterion) {
    let p = majority_protocol();
    let mut g = c.benchmark_group("majority_trials");
    g.sample_size(10);
    for n in [100u64, 1000] {
        for (name, exec) in modes() {
            g.bench_with_input(BenchmarkId::new(name, n), &n, |b, &n| {
                let input = [("x", n / 2 + 1), ("y", n - n / 2 - 1)];
                b.iter(|| measure_time(&p, &input, 64, Estimator::Quiescence, u64::MAX, black_box(1), exec).unwrap())
            });
        }
    }
    g.finish();
}

fn clock(c: &mut Criterion) {
    let spec = clock_bp();
    let (zero, one) = (spec.id("0").unwrap(), spec.id("1").unwrap());
    let mut g = c.benchmark_group("clock_trials");
    g.sample_size(10);
    for (name, exec) in modes() {
        g.bench_function(BenchmarkId::new(name, 1000), |b| {
            b.iter(|| map_trials(64, exec, |t| run_clock(&spec, zero, &one, 1000, &mut trial_rng(black_box(2), t), 1 << 32)))
        });
    }
    g.finish();
}

criterion_group!(benches, majority, clock);
criterion_main!(benches);
