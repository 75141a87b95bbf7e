//! Sequential vs parallel execution on the two heaviest fan-outs: word
//! enumeration for a complexity profile and per-point set classification.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ivl_core::classify::{classify_set, Notion};
use ivl_core::dynamics::q;
use ivl_core::examples::{build_example, ExampleId};
use ivl_core::spanning::{complexity_profile, Mode, Resolution, SpanBudget, TargetGrid};
use ivl_core::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn span(c: &mut Criterion) {
    let ex = build_example(ExampleId::A1_FEI_not_EI).unwrap();
    let grid = TargetGrid::new(&ex.target, Resolution::Step(q(1, 512))).unwrap();
    let eps = q(1, 10);
    let mut g = c.benchmark_group("a1_span_n16");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| complexity_profile(&ex.system, &ex.target, &grid, &eps, 16, Mode::Plain, &SpanBudget::default(), exec).unwrap())
        });
    }
    g.finish();
}

fn classify(c: &mut Criterion) {
    let ex = build_example(ExampleId::A1_FEI_not_EI).unwrap();
    let budget = ex.budget();
    let eps = q(1, 10);
    let mut g = c.benchmark_group("a1_fei_set_step_1_128");
    g.sample_size(10);
    for (name, exec) in MODES {
        let prob = ex.problem_at(Resolution::Step(q(1, 128)), exec).unwrap();
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| classify_set(&prob, Notion::FEI, &eps, &budget).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, span, classify);
criterion_main!(benches);
