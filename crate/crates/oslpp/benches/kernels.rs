//! Criterion benchmarks for the data-parallel kernels, comparing the
//! default dispatch path against the sequential reference
//! implementations.
//!
//! With the default `parallel` feature the dispatch path runs on
//! rayon, so each group shows the speedup over one thread; built with
//! `--no-default-features` both paths coincide.

use std::collections::BTreeSet;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::DMatrix;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use oslpp::numerics::{pairwise_sq_dists, pairwise_sq_dists_seq};
use oslpp::pipeline::{run, Hyperparams};
use oslpp::pseudo::{
    class_means, propagate_rejections, propagate_rejections_seq, pseudo_label, pseudo_label_seq,
};
use oslpp::synth::{generate, SynthConfig};

fn random_matrix(rng: &mut StdRng, n: usize, d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0))
}

fn bench_pairwise(c: &mut Criterion) {
    let mut group = c.benchmark_group("pairwise_sq_dists");
    for &(n, d) in &[(500usize, 32usize), (2000, 64)] {
        let mut rng = StdRng::seed_from_u64(1);
        let x = random_matrix(&mut rng, n, d);
        let y = random_matrix(&mut rng, n, d);
        group.bench_with_input(BenchmarkId::new("dispatch", format!("{n}x{d}")), &(), |b, _| {
            b.iter(|| pairwise_sq_dists(black_box(&x), black_box(&y)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("sequential", format!("{n}x{d}")), &(), |b, _| {
            b.iter(|| pairwise_sq_dists_seq(black_box(&x), black_box(&y)).unwrap())
        });
    }
    group.finish();
}

fn bench_pseudo_label(c: &mut Criterion) {
    let mut group = c.benchmark_group("pseudo_label");
    let mut rng = StdRng::seed_from_u64(2);
    let n = 4000;
    let d = 64;
    let classes = 25;
    let z_source = random_matrix(&mut rng, classes * 4, d);
    let labels: Vec<i64> = (0..classes * 4).map(|i| (i % classes) as i64).collect();
    let space = oslpp::data::build_label_space(&labels).unwrap();
    let means = class_means(&z_source, &labels, &space).unwrap();
    let z = random_matrix(&mut rng, n, d);
    group.bench_function("dispatch", |b| {
        b.iter(|| pseudo_label(black_box(&z), black_box(&means)).unwrap())
    });
    group.bench_function("sequential", |b| {
        b.iter(|| pseudo_label_seq(black_box(&z), black_box(&means)).unwrap())
    });
    group.finish();
}

fn bench_propagate(c: &mut Criterion) {
    let mut group = c.benchmark_group("propagate_rejections");
    let mut rng = StdRng::seed_from_u64(3);
    let n = 3000;
    let z = random_matrix(&mut rng, n, 16);
    let selected: BTreeSet<usize> = (0..n / 3).collect();
    let rejected: BTreeSet<usize> = (n / 3..n / 2).collect();
    group.bench_function("dispatch", |b| {
        b.iter(|| propagate_rejections(black_box(&z), black_box(&selected), black_box(&rejected)))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| {
            propagate_rejections_seq(black_box(&z), black_box(&selected), black_box(&rejected))
        })
    });
    group.finish();
}

fn bench_end_to_end(c: &mut Criterion) {
    let cfg = SynthConfig {
        n_known: 5,
        n_unknown: 5,
        dim: 20,
        per_class: 60,
        shift: 1.0,
        spread: 0.3,
        unknown_margin: 3.0,
        seed: 0,
    };
    let (source, target) = generate(&cfg).unwrap();
    let hp = Hyperparams {
        d_pca: 10,
        d: 5,
        iterations: 10,
        n_r: 150,
        seed: 0,
    };
    let mut group = c.benchmark_group("pipeline_run");
    group.sample_size(10);
    group.bench_function("synthetic_900_samples", |b| {
        b.iter(|| run(black_box(&source), black_box(&target), black_box(&hp)).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_pairwise,
    bench_pseudo_label,
    bench_propagate,
    bench_end_to_end
);
criterion_main!(benches);
