use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shearflow::solver::ops::{rhs_nonlinear, RhsInputs};
use shearflow::solver::step_if_rk4;
use shearflow::weights::{WeightParams, WeightTable};
use shearflow::{Fft2, Grid, SpectralField};

const NX: usize = 128;
const NY: usize = 512;

fn bench_grid() -> Grid {
    Grid::new(NX, NY, 2.0 * std::f64::consts::PI, 8.0 * std::f64::consts::PI).unwrap()
}

fn random_field(grid: Grid) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut f = SpectralField::zeros(grid);
    for c in &mut f.c {
        *c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    f.enforce_hermitian();
    f.dealias();
    f
}

fn fft_roundtrip(c: &mut Criterion) {
    let grid = bench_grid();
    let mut fft = Fft2::new(grid);
    let f = random_field(grid);
    c.bench_function("fft2 roundtrip 128x512", |b| {
        b.iter(|| {
            let p = fft.inverse(&f).unwrap();
            fft.forward(&p).unwrap()
        })
    });
}

fn weight_table_build(c: &mut Criterion) {
    let grid = bench_grid();
    let p = WeightParams {
        nu: 1e-3,
        beta: 0.5,
        sigma: 6.0,
        s: 4.0,
    };
    c.bench_function("weight table 128x512", |b| {
        b.iter(|| WeightTable::build(grid, 12.5, 0.5, &p).unwrap())
    });
}

fn solver_step(c: &mut Criterion) {
    let grid = bench_grid();
    let f = random_field(grid);
    let mut fft = Fft2::new(grid);
    let mut rhs = |w: &SpectralField, s: f64, _t: f64| {
        let inputs = RhsInputs {
            utilde: None,
            usecond: None,
            nonlinear: true,
        };
        rhs_nonlinear(w, s, &inputs, &mut fft)
    };
    c.bench_function("if-rk4 nonlinear step 128x512", |b| {
        b.iter_batched(
            || f.clone(),
            |mut w| step_if_rk4(&mut w, 0.3, 1.0, 0.05, 1e-3, &mut rhs).unwrap(),
            BatchSize::LargeInput,
        )
    });
}

criterion_group!(kernels, fft_roundtrip, weight_table_build, solver_step);
criterion_main!(kernels);
