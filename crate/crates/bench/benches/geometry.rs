use criterion::{black_box, criterion_group, criterion_main, Criterion};

use kahler_core::dombrowski::{self, Chart, TangentState};
use kahler_core::jacobi::{self, Generator};
use kahler_core::manifold::{self, NaturalPoint};
use kahler_core::schrodinger::{self as sch, LogGrid, SchrodingerParams};
use kahler_core::QuadratureSpec;

fn geometry(c: &mut Criterion) {
    let p = NaturalPoint::new(0.7, -1.3).unwrap();
    let q = QuadratureSpec::default();
    c.bench_function("fisher_metric_oracle/40", |b| {
        b.iter(|| manifold::fisher_metric_oracle(black_box(&p), q).unwrap())
    });
    c.bench_function("christoffel_e/40", |b| {
        b.iter(|| manifold::christoffel_e(black_box(&p), q).unwrap())
    });

    let s = TangentState::new(0.7, -1.3, 0.2, -0.4).unwrap();
    c.bench_function("verify_structure/natural", |b| {
        b.iter(|| {
            dombrowski::verify_structure(&dombrowski::kahler(black_box(&s), Chart::Natural), 1e-10)
        })
    });
    c.bench_function("closedness_residual/natural", |b| {
        b.iter(|| dombrowski::closedness_residual(black_box(&s), 1e-4, Chart::Natural).unwrap())
    });
}

fn dynamics(c: &mut Criterion) {
    let start = TangentState::new(1.0, -1.0, 0.0, 1.0).unwrap();
    c.bench_function("integrate_flow/G/100", |b| {
        b.iter(|| jacobi::integrate_flow(Generator::G.into(), black_box(start), 0.1, 1e-3).unwrap())
    });
    let curve = jacobi::integrate_flow(Generator::Q.into(), start, 0.02, 1e-3).unwrap();
    let grid = LogGrid::default();
    let params = SchrodingerParams::default();
    c.bench_function("schrodinger_residual/Q/257", |b| {
        b.iter(|| sch::schrodinger_residual(black_box(&curve), &grid, &params).unwrap())
    });
}

criterion_group!(benches, geometry, dynamics);
criterion_main!(benches);
