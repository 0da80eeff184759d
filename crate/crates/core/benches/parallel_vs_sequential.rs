use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId as Id, Criterion};

use hyra::corpus::BenchmarkId;
use hyra::exec::Mode;
use hyra::reach::{reach, ReachOptions};
use hyra::setrep::IntervalBox;
use hyra::simulate::{sample_initial, simulate_batch, IntegratorKind, SimOptions};

const MODES: [(&str, Mode); 2] = [("sequential", Mode::Sequential), ("parallel", Mode::Parallel)];

fn simulation_batches(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulate_batch");
    for id in [BenchmarkId::BouncingBall2, BenchmarkId::LinSwitch4] {
        let b = id.build();
        let starts = sample_initial(&IntervalBox::new(b.initial.intervals.clone()), 100, 42);
        let opts = SimOptions::new(b.settings.step / 10.0, IntegratorKind::SecondOrder);
        for (name, mode) in MODES {
            g.bench_with_input(Id::new(name, id.name()), &mode, |bench, &mode| {
                bench.iter(|| simulate_batch(black_box(&b), &starts, &opts, mode))
            });
        }
    }
    g.finish();
}

fn reachability(c: &mut Criterion) {
    let mut g = c.benchmark_group("reach");
    g.sample_size(10);
    for id in [BenchmarkId::BouncingBall2, BenchmarkId::Tank3, BenchmarkId::Platoon6] {
        let b = id.build();
        for (name, mode) in MODES {
            let opts = ReachOptions {
                mode,
                ..ReachOptions::default()
            };
            g.bench_with_input(Id::new(name, id.name()), &opts, |bench, opts| {
                bench.iter(|| reach(black_box(&b), opts).unwrap())
            });
        }
    }
    g.finish();
}

criterion_group!(benches, simulation_batches, reachability);
criterion_main!(benches);
