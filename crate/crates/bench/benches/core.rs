use criterion::{black_box, criterion_group, criterion_main, Criterion};
use nalgebra::{DMatrix, DVector};

use hens_core::carnot::{bch_product, conical_product};
use hens_core::cc::{cc_distance, CcOptions};
use hens_core::classification::{contact4_general_family, jacobi_constraints};
use hens_core::coadjoint::{coadjoint_check, w_polynomial};
use hens_core::profiles::{gh_distance, GhMode, PointedSample};
use hens_core::{builtin, GroupElement, JacobiMode};

fn products(c: &mut Criterion) {
    let h = builtin("heisenberg1").unwrap();
    let c3 = builtin("contact3(1,0,1)").unwrap();
    let x = GroupElement::from_slice(&[0.4, -0.3, 0.5]);
    let y = GroupElement::from_slice(&[-0.2, 0.6, 0.3]);
    c.bench_function("bch heisenberg1", |b| b.iter(|| bch_product(&h, black_box(&x), black_box(&y))));
    c.bench_function("conical contact3", |b| b.iter(|| conical_product(&c3, black_box(&x), black_box(&y))));
}

fn distances(c: &mut Criterion) {
    let h = builtin("heisenberg1").unwrap();
    let opts = CcOptions { restarts: 2, ..CcOptions::default() };
    let to = DVector::from_column_slice(&[0.3, 0.2, 0.4]);
    let mut group = c.benchmark_group("cc");
    group.sample_size(10);
    group.bench_function("heisenberg1 distance", |b| {
        b.iter(|| cc_distance(&h, &DVector::zeros(3), black_box(&to), &opts))
    });
    group.finish();
}

/// Points on a line against the same points slightly perturbed.
fn line_sample(n: usize, wobble: f64) -> PointedSample {
    let pos: Vec<f64> = (0..n).map(|i| i as f64 / n as f64 + wobble * ((i * 7 % 5) as f64 - 2.0)).collect();
    let d = (0..n).map(|i| (0..n).map(|j| (pos[i] - pos[j]).abs()).collect()).collect();
    PointedSample::new(d, 0).unwrap()
}

fn gromov_hausdorff(c: &mut Criterion) {
    let (a, b8) = (line_sample(8, 0.0), line_sample(8, 0.01));
    let (a24, b24) = (line_sample(24, 0.0), line_sample(24, 0.01));
    c.bench_function("gh exact 8 points", |b| b.iter(|| gh_distance(&a, &b8, GhMode::Exact)));
    c.bench_function("gh bound 24 points", |b| b.iter(|| gh_distance(&a24, &b24, GhMode::Bound)));
}

fn algebra(c: &mut Criterion) {
    let family = contact4_general_family();
    c.bench_function("jacobi contact4 general", |b| b.iter(|| jacobi_constraints(&family, JacobiMode::Full)));
    let c3 = builtin("contact3(1,0,1)").unwrap();
    let x = DVector::from_column_slice(&[0.2, 1.0, -0.5]);
    c.bench_function("w polynomial contact3", |b| b.iter(|| w_polynomial(&c3, black_box(&x))));
    let so2 = builtin("heisenberg_so2").unwrap();
    let (s, co) = 0.7f64.sin_cos();
    let f = DMatrix::from_row_slice(4, 4, &[1.0, 0.0, 0.0, 0.0, 0.0, co, -s, 0.0, 0.0, s, co, 0.0, 0.0, 0.0, 0.0, 1.0]);
    c.bench_function("coadjoint heisenberg_so2", |b| b.iter(|| coadjoint_check(&so2, black_box(&f))));
}

criterion_group!(benches, products, distances, gromov_hausdorff, algebra);
criterion_main!(benches);
