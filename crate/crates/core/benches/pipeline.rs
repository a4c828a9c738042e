//! One rayon thread against the whole pool on the heavy stages.
//!
//! Build with `--no-default-features` to time the plain sequential code
//! path instead of a one-thread pool.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use tvrec::domain::{ProgramId, UserId};
use tvrec::eval::{cross_validate, EvalConfig};
use tvrec::ingestion::{build_interactions, merge_simulcasts, Dataset};
use tvrec::synthgen::{generate, SynthParams};
use tvrec::wrmf::{self, WrmfParams};

fn dataset() -> Dataset {
    let s = generate(&SynthParams {
        n_users: 150,
        n_channels: 10,
        programs_per_week: 150,
        n_weeks: 6,
        ..SynthParams::default()
    })
    .unwrap();
    let catalog = merge_simulcasts(&s.catalog().unwrap());
    let mut buf = Vec::new();
    tvrec::ingestion::write_views(&s.events, &mut buf).unwrap();
    let (log, report) = tvrec::ingestion::read_views(buf.as_slice(), &catalog).unwrap();
    Dataset { catalog, log, report }
}

fn pools() -> Vec<(usize, rayon::ThreadPool)> {
    let all = std::thread::available_parallelism().map_or(1, |n| n.get()).max(2);
    [1, all]
        .into_iter()
        .map(|n| (n, rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap()))
        .collect()
}

fn bench(c: &mut Criterion) {
    let data = dataset();
    let counts: Vec<(UserId, ProgramId, f64)> = build_interactions(&data.log, &data.catalog, Default::default())
        .into_iter()
        .filter(|r| r.positive_days > 0)
        .map(|r| (r.user, r.program, f64::from(r.positive_days)))
        .collect();
    let cfg = EvalConfig {
        ltr: tvrec::ltr::LtrParams {
            rounds: 20,
            ..Default::default()
        },
        ..EvalConfig::default()
    };

    let mut g = c.benchmark_group("wrmf_fit");
    g.sample_size(10);
    for (n, pool) in pools() {
        g.bench_with_input(
            BenchmarkId::from_parameter(format!("{n}_threads")),
            &counts,
            |b, counts| b.iter(|| pool.install(|| black_box(wrmf::fit(counts, WrmfParams::default()).unwrap()))),
        );
    }
    g.finish();

    let mut g = c.benchmark_group("cross_validate");
    g.sample_size(10);
    for (n, pool) in pools() {
        g.bench_with_input(BenchmarkId::from_parameter(format!("{n}_threads")), &data, |b, d| {
            b.iter(|| pool.install(|| black_box(cross_validate(&d.catalog, &d.log, &cfg).unwrap())))
        });
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
