//! Benchmark groups for the hot numerical paths.

use std::f64::consts::{FRAC_PI_2, PI};

use criterion::{black_box, BenchmarkId, Criterion};
use dbsample::kernel::kernel_free;
use dbsample::schrodinger::{xi_at, xi_picard};
use dbsample::spectrum::compute_spectrum;
use dbsample::{Complex64, Potential};

pub fn solvers(c: &mut Criterion) {
    let p = Potential::cosine_preset(PI);
    let mut g = c.benchmark_group("xi");
    for z in [Complex64::new(4.0, 0.0), Complex64::new(100.0, 0.0), Complex64::new(-30.0, 40.0)] {
        g.bench_with_input(BenchmarkId::new("ode", z), &z, |b, &z| b.iter(|| xi_at(&p, black_box(z), PI)));
        g.bench_with_input(BenchmarkId::new("picard", z), &z, |b, &z| {
            b.iter(|| xi_picard(&p, black_box(z), PI, 40))
        });
    }
    g.finish();
}

pub fn spectra(c: &mut Criterion) {
    let p = Potential::cosine_preset(PI);
    let mut g = c.benchmark_group("spectrum");
    g.sample_size(10);
    for n in [20, 100] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| compute_spectrum(&p, PI, FRAC_PI_2, n))
        });
    }
    g.finish();
}

pub fn free_kernel(c: &mut Criterion) {
    let z = Complex64::new(7.3, 0.4);
    let w = Complex64::new(12.0, -1.0);
    c.bench_function("kernel_free", |b| b.iter(|| kernel_free(PI, black_box(z), black_box(w))));
}
