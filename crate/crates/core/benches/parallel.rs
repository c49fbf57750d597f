//! Parallel versus sequential execution of the data-parallel kernels.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use isodisplay::fixtures;
use isodisplay::free_space::{ae_norm_primal, random_metric, random_molecule};
use isodisplay::graph_norm::{brute_force_signed_maps, GammaSpace};
use isodisplay::par;
use isodisplay::pimple::{default_sequence, display_and_verify, DisplayConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const MODES: [(&str, bool); 2] = [("parallel", false), ("sequential", true)];

fn signed_maps(c: &mut Criterion) {
    let space = GammaSpace::new(fixtures::graph("rigid-tree7").unwrap()).unwrap();
    let mut group = c.benchmark_group("brute_force_signed_maps");
    for (name, seq) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            par::set_sequential(seq);
            b.iter(|| black_box(brute_force_signed_maps(&space).unwrap()));
        });
    }
    par::set_sequential(false);
    group.finish();
}

fn display(c: &mut Criterion) {
    let g = fixtures::matrix_group("pm-s3").unwrap();
    let x = default_sequence(g.dim());
    let cfg = DisplayConfig { samples: 500, ..DisplayConfig::default() };
    let mut group = c.benchmark_group("display_and_verify");
    group.sample_size(10);
    for (name, seq) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            par::set_sequential(seq);
            b.iter(|| black_box(display_and_verify(&g, &x, &cfg).unwrap()));
        });
    }
    par::set_sequential(false);
    group.finish();
}

fn transport_batch(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let space = random_metric(&mut rng, 12, false);
    let molecules: Vec<Vec<f64>> = (0..200).map(|_| random_molecule(&mut rng, 12, 12)).collect();
    let mut group = c.benchmark_group("transport_batch");
    for (name, seq) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            par::set_sequential(seq);
            b.iter(|| black_box(par::map(&molecules, |m| ae_norm_primal(&space, m).unwrap().value)));
        });
    }
    par::set_sequential(false);
    group.finish();
}

criterion_group!(benches, signed_maps, display, transport_batch);
criterion_main!(benches);
