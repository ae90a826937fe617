use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use phasemod::analysis::TrainSetup;
use phasemod::parallel::{map_indexed, sequential_map_indexed};
use phasemod::sim::SystemParams;
use phasemod::steady::{delta_i_pi, Method};
use phasemod::LaserParams;

fn dipi_cell(k: usize) -> f64 {
    let p = LaserParams {
        chi: 1.0 + (k % 50) as f64,
        alpha: 3.0 + (k / 50) as f64,
        ..LaserParams::reference_device()
    };
    delta_i_pi(&p, 30e-3, 0.1e-9, Method::Numerical).map(|d| d.delta_i_pi).unwrap_or(f64::NAN)
}

fn noisy_member(k: usize) -> f64 {
    let setup = TrainSetup {
        noise: true,
        seed: 1,
        stream: k as u64,
        warmup: 0.5e-9,
        ..TrainSetup::default()
    };
    let (_, rec) = setup.run(&SystemParams::reference_device(), 4, &[]).expect("member runs");
    rec.iter().map(|r| r.phase).sum()
}

fn sweep(c: &mut Criterion) {
    let mut g = c.benchmark_group("dipi_sweep_200");
    g.bench_function("parallel", |b| b.iter(|| black_box(map_indexed(200, dipi_cell))));
    g.bench_function("sequential", |b| b.iter(|| black_box(sequential_map_indexed(200, dipi_cell))));
    g.finish();
}

fn ensemble(c: &mut Criterion) {
    let mut g = c.benchmark_group("noisy_ensemble");
    g.sample_size(10);
    for members in [4usize, 8] {
        g.bench_with_input(BenchmarkId::new("parallel", members), &members, |b, &m| {
            b.iter(|| black_box(map_indexed(m, noisy_member)))
        });
        g.bench_with_input(BenchmarkId::new("sequential", members), &members, |b, &m| {
            b.iter(|| black_box(sequential_map_indexed(m, noisy_member)))
        });
    }
    g.finish();
}

criterion_group!(benches, sweep, ensemble);
criterion_main!(benches);
