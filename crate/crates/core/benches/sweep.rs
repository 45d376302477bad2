//! Parallel vs sequential throughput on two representative workloads:
//! a full setting sweep of the entanglement scenario and a batch of
//! randomized scenario evaluations.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use lwfs_core::exec::{map_collect, map_collect_seq};
use lwfs_core::library::fr_entanglement;
use lwfs_core::predict::setting_conditioned;
use lwfs_core::scenario::{OutcomeMap, SettingVector};
use lwfs_testkit::gen::{random_query, random_scenario, rng, GenLimits};

fn halting_sweep(c: &mut Criterion) {
    let circ = fr_entanglement().compiled().unwrap();
    let targets: OutcomeMap = [(3usize, 0usize), (4, 0)].into_iter().collect();
    let givens = OutcomeMap::new();
    // Repeat the four free-setting vectors to give the pool enough work
    // per iteration to amortize scheduling.
    let vectors: Vec<SettingVector> = SettingVector::enumerate(&circ.pinned_mask())
        .into_iter()
        .cycle()
        .take(64)
        .collect();

    let mut group = c.benchmark_group("halting_sweep");
    group.bench_function("parallel", |b| {
        b.iter(|| {
            map_collect(&vectors, |x| {
                setting_conditioned(&circ, &targets, &givens, x).unwrap()
            })
        })
    });
    group.bench_function("sequential", |b| {
        b.iter(|| {
            map_collect_seq(&vectors, |x| {
                setting_conditioned(&circ, &targets, &givens, x).unwrap()
            })
        })
    });
    group.finish();
}

fn random_batch(c: &mut Criterion) {
    let mut r = rng(31);
    let limits = GenLimits::default();
    let cases: Vec<_> = (0..24)
        .map(|_| {
            let spec = random_scenario(&mut r, &limits);
            let circ = lwfs_core::compile::compile(&spec).unwrap();
            let q = random_query(&mut r, &spec);
            (circ, q)
        })
        .collect();

    let mut group = c.benchmark_group("random_batch");
    group.bench_function("parallel", |b| {
        b.iter_batched(
            || cases.clone(),
            |cases| {
                map_collect(&cases, |(circ, q)| {
                    lwfs_core::predict::joint_probability(circ, &q.x, &q.combined()).unwrap()
                })
            },
            BatchSize::SmallInput,
        )
    });
    group.bench_function("sequential", |b| {
        b.iter_batched(
            || cases.clone(),
            |cases| {
                map_collect_seq(&cases, |(circ, q)| {
                    lwfs_core::predict::joint_probability(circ, &q.x, &q.combined()).unwrap()
                })
            },
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

criterion_group!(benches, halting_sweep, random_batch);
criterion_main!(benches);
