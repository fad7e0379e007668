use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use metric_entropy_lab::entropy::{entropy_profile, ProfileOptions};
use metric_entropy_lab::estimators::RegressionTuning;
use metric_entropy_lab::instance::{default_regression_spec, generate_curves, CurveClass, Model};
use metric_entropy_lab::risk::integrated_sq_risk;
use metric_entropy_lab::{Exec, MetricSpec, PointSet};
use std::hint::black_box;
use std::path::Path;

const MODES: [(&str, Exec); 2] = [
    ("sequential", Exec::Sequential),
    ("parallel", Exec::Parallel),
];

fn pool(n: usize) -> PointSet {
    let curves = generate_curves(CurveClass::Lipschitz, n, 21, 1.0, 1).unwrap();
    PointSet::new(curves, MetricSpec::Lp { p: 2.0 }).unwrap()
}

fn distance_matrix(c: &mut Criterion) {
    let mut group = c.benchmark_group("distance_matrix");
    group.sample_size(20);
    let curves = generate_curves(CurveClass::Lipschitz, 600, 101, 1.0, 1).unwrap();
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new(name, 600), |b| {
            b.iter_batched(
                || PointSet::new(curves.clone(), MetricSpec::Lp { p: 2.0 }).unwrap(),
                |ps| black_box(ps.distance_matrix_with(exec).max()),
                BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

fn profile(c: &mut Criterion) {
    let mut group = c.benchmark_group("entropy_profile");
    group.sample_size(10);
    let ps = pool(400);
    ps.distance_matrix();
    let radii: Vec<f64> = (0..12).map(|k| 0.5 * 0.8f64.powi(k)).collect();
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new(name, 400), |b| {
            b.iter(|| {
                entropy_profile(&ps, black_box(&radii), ProfileOptions::default(), exec).unwrap()
            })
        });
    }
    group.finish();
}

fn risk_replications(c: &mut Criterion) {
    let mut group = c.benchmark_group("integrated_sq_risk");
    group.sample_size(10);
    let inst = default_regression_spec().build(Path::new(".")).unwrap();
    let Model::Regression(reg) = &inst.model else {
        unreachable!("built-in regression spec")
    };
    let tuning = RegressionTuning::for_sample_size(2000, 1.0, 0.8, 0.25).unwrap();
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new(name, "n2000x64"), |b| {
            b.iter(|| integrated_sq_risk(reg, &tuning, 2000, 64, black_box(3), exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, distance_matrix, profile, risk_replications);
criterion_main!(benches);
