use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use oddlift::operators::{bochner_residual, odd_identity_residual};
use oddlift::{apply_flap_direct, gaussian_kernel, Field, LevyPlan, OperatorSpec, QuadratureSpec, Symmetry};

fn odd_gaussian(n: usize) -> Field {
    Field::new(n, |x: &[f64]| x[0] * (-PI * x.iter().map(|v| v * v).sum::<f64>()).exp())
        .with_symmetry(Symmetry::Antisymmetric)
        .with_decay(1.0, 64.0)
        .with_normal_derivative(|rest: &[f64]| (-PI * rest.iter().map(|v| v * v).sum::<f64>()).exp())
}

fn flap_point(c: &mut Criterion) {
    let q = QuadratureSpec::default();
    let u = Field::new(1, |x: &[f64]| (-PI * x[0] * x[0]).exp()).with_decay(1.0, 64.0);
    let mut group = c.benchmark_group("flap_1d");
    for s in [0.25, 0.5, 0.75] {
        group.bench_with_input(BenchmarkId::from_parameter(s), &s, |b, &s| {
            b.iter(|| apply_flap_direct(s, &u, black_box(&[0.5]), &q).unwrap())
        });
    }
    group.finish();
}

fn lifted_plan(c: &mut Criterion) {
    let q = QuadratureSpec::default();
    let v = Field::new(3, |x: &[f64]| (-PI * x.iter().map(|v| v * v).sum::<f64>()).exp())
        .with_symmetry(Symmetry::Isotropic3)
        .with_decay(1.0, 64.0);
    let plan = LevyPlan::new(&gaussian_kernel(3).unwrap(), &q).unwrap();
    c.bench_function("gaussian_kernel_isotropic_3d", |b| b.iter(|| plan.apply(&v, black_box(&[0.5, 0.0, 0.0])).unwrap()));
}

fn identities(c: &mut Criterion) {
    let q = QuadratureSpec::default();
    let mut group = c.benchmark_group("identities");
    group.sample_size(10);
    let u = odd_gaussian(1);
    let points = vec![vec![0.5], vec![1.0]];
    group.bench_function("odd_identity_n1", |b| {
        b.iter(|| odd_identity_residual(&OperatorSpec::Fractional(0.5), &u, &points, &q).unwrap())
    });
    let g = Field::new(1, |x: &[f64]| (-PI * x[0] * x[0]).exp());
    let xi: Vec<f64> = (0..9).map(|i| -4.0 + i as f64).collect();
    group.bench_function("bochner_gaussian", |b| b.iter(|| bochner_residual(&g, &xi).unwrap()));
    group.finish();
}

criterion_group!(benches, flap_point, lifted_plan, identities);
criterion_main!(benches);
