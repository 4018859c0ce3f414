//! Sequential against data-parallel execution of the parallel stages:
//! covering-array construction and per-requirement model checking.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use std::path::Path;
use stpa_workbench::behavior::{expand, Machine, DEFAULT_NODE_CAP};
use stpa_workbench::context::generate_covering_array_with;
use stpa_workbench::harness::load_project;
use stpa_workbench::harness::pipeline::{check_all, formalize_all};
use stpa_workbench::par::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn covering_arrays(c: &mut Criterion) {
    let mut g = c.benchmark_group("covering_array");
    g.sample_size(10);
    for (label, domains, t) in [
        ("acc 3x3x2x4 t=2", vec![3, 3, 2, 4], 2),
        ("12x4 t=2", vec![4; 12], 2),
        ("8x3 t=3", vec![3; 8], 3),
    ] {
        for (mode, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(mode, label), &domains, |b, d| {
                b.iter(|| generate_covering_array_with(black_box(d), t, 0, exec).unwrap())
            });
        }
    }
    g.finish();
}

fn model_checking(c: &mut Criterion) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../projects/acc.stpa");
    let (project, _) = load_project(&path).unwrap();
    let k = expand(&Machine::compile(&project).unwrap(), DEFAULT_NODE_CAP).unwrap();
    let formalizations = formalize_all(&project).unwrap();
    let mut g = c.benchmark_group("verify_acc");
    for (mode, exec) in MODES {
        g.bench_function(mode, |b| {
            b.iter(|| check_all(black_box(&k), &formalizations, DEFAULT_NODE_CAP * 64, exec))
        });
    }
    g.finish();
}

criterion_group!(benches, covering_arrays, model_checking);
criterion_main!(benches);
