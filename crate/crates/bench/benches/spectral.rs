use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use dampwave::grid::{forward_real, Grid};
use dampwave::kernel::{kernel_pair, propagate_linear};
use dampwave::profiles::{DataPair, Family};
use dampwave::solver::{PropagatorState, Stepper};

fn fft(c: &mut Criterion) {
    for (dim, n) in [(1, 4096), (2, 128), (3, 32)] {
        let grid = Grid::new(dim, n, 20.0).unwrap();
        let x = grid.sample(|p| (-p[..dim].iter().map(|v| v * v).sum::<f64>()).exp());
        c.bench_function(&format!("fft round trip {dim}d n={n}"), |b| {
            b.iter(|| forward_real(&grid, black_box(&x)).unwrap().to_real())
        });
    }
}

fn kernel(c: &mut Criterion) {
    let xi2: Vec<f64> = (0..4096).map(|k| (k as f64 * 0.01).powi(2)).collect();
    c.bench_function("kernel pair 4096 modes", |b| {
        b.iter(|| xi2.iter().map(|&k| kernel_pair(black_box(7.5), k).0).sum::<f64>())
    });
    let grid = Grid::new(1, 4096, 2048.0).unwrap();
    let data = DataPair::from_family(
        &grid,
        Family::LogProfile {
            gamma: 0.5,
            r0: 0.5,
            log_power: 1.0,
        },
        1.0,
    )
    .unwrap();
    c.bench_function("propagate linear 1d n=4096", |b| {
        b.iter(|| propagate_linear(&data.u0, &data.u1, black_box(100.0)).unwrap())
    });
}

fn solver(c: &mut Criterion) {
    for (dim, n, l) in [(1, 4096, 2048.0), (2, 128, 64.0)] {
        let grid = Grid::new(dim, n, l).unwrap();
        let data = DataPair::from_family(&grid, Family::LaplacianGaussian { k: 0 }, 0.1).unwrap();
        let mut stepper = Stepper::new(grid, 0.05, 2.0, true).unwrap();
        let start = PropagatorState::initial(&data);
        c.bench_function(&format!("nonlinear step {dim}d n={n}"), |b| {
            b.iter_batched(
                || start.clone(),
                |mut s| {
                    stepper.advance(&mut s).unwrap();
                    s
                },
                criterion::BatchSize::LargeInput,
            )
        });
    }
}

criterion_group!(benches, fft, kernel, solver);
criterion_main!(benches);
