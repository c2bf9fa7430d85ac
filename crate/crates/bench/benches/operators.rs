use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use muskat_core::layer_potentials::apply_layer;
use muskat_core::muskat_rhs::compute_phi;
use muskat_core::nonlocal_operators::truncated_hilbert;
use muskat_core::{Grid, GridFunction, InterfaceState, LayerKind, LayerRequest, PhysicalParams};

fn state(n: usize) -> InterfaceState {
    let g = Grid::new(n, 2.0 * PI).unwrap();
    let f = GridFunction::from_fn(g, |x| -0.2 * (-(x * x) / 0.25).exp() + 0.05 * (3.0 * x).sin());
    let h = GridFunction::from_fn(g, |x| 0.1 * (2.0 * x).cos());
    InterfaceState::new(f, h, PhysicalParams::from_thetas(-0.5, -0.5, 1.0).unwrap()).unwrap()
}

fn bench_phi(c: &mut Criterion) {
    let mut group = c.benchmark_group("compute_phi");
    for n in [64, 128, 256] {
        let x = state(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &x, |b, x| b.iter(|| compute_phi(black_box(x))));
    }
    group.finish();
}

fn bench_layers(c: &mut Criterion) {
    let x = state(128);
    let w = GridFunction::from_fn(x.grid(), |s| s.sin().exp());
    let mut group = c.benchmark_group("apply_layer_n128");
    for kind in LayerKind::ALL {
        group.bench_function(kind.name(), |b| {
            b.iter(|| apply_layer(&LayerRequest::plain(kind, vec![black_box(&x)], &w)))
        });
    }
    group.finish();
}

fn bench_hilbert(c: &mut Criterion) {
    let g = Grid::new(256, 2.0 * PI).unwrap();
    let w = GridFunction::from_fn(g, |s| (2.0 * s).cos() + 0.3 * s.sin().exp());
    c.bench_function("truncated_hilbert_n256", |b| b.iter(|| truncated_hilbert(black_box(0.5), &w)));
}

criterion_group!(benches, bench_phi, bench_layers, bench_hilbert);
criterion_main!(benches);
