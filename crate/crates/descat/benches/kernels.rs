//! Criterion benches for the hot kernels, comparing the data-parallel and
//! sequential execution paths in one process (see `descat::par`).

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use descat::evolve::{rhs, step_rk4_vec, EvolveConfig, StateVec};
use descat::par;
use descat::s3::basis::{Basis, BasisSpec};
use descat::s3::ops;
use descat::state::{make_admissible, random_raw_data};

fn bench_kernels(c: &mut Criterion) {
    let basis = Basis::new(BasisSpec::with_band_limit(8)).unwrap();
    let raw = random_raw_data(&basis, 0.1, 1);
    let state = make_admissible(&raw, 1.0, 1e-12).unwrap();
    let y = StateVec::from_state(&state);
    let cfg = EvolveConfig::default();
    let values = state.phi.values().to_vec();
    let coeffs = state.phi.coeffs().to_vec();

    let modes: &[(&str, bool)] = &[("par", true), ("seq", false)];

    let mut group = c.benchmark_group("transform");
    for &(name, par_on) in modes {
        group.bench_with_input(BenchmarkId::new("forward", name), &par_on, |b, &p| {
            par::set_parallel(p);
            b.iter(|| basis.forward(&values));
        });
        group.bench_with_input(BenchmarkId::new("inverse", name), &par_on, |b, &p| {
            par::set_parallel(p);
            b.iter(|| basis.inverse(&coeffs));
        });
    }
    group.finish();

    let mut group = c.benchmark_group("evolution");
    for &(name, par_on) in modes {
        group.bench_with_input(BenchmarkId::new("rhs", name), &par_on, |b, &p| {
            par::set_parallel(p);
            b.iter(|| rhs(&basis, &y, Some(state.a0.coeffs()), 1e-12).unwrap());
        });
        group.bench_with_input(BenchmarkId::new("rk4_step", name), &par_on, |b, &p| {
            par::set_parallel(p);
            b.iter(|| step_rk4_vec(&basis, &y, 1e-3, Some(state.a0.coeffs()), &cfg).unwrap());
        });
    }
    group.finish();

    let mut group = c.benchmark_group("projection");
    for &(name, par_on) in modes {
        group.bench_with_input(BenchmarkId::new("divfree", name), &par_on, |b, &p| {
            par::set_parallel(p);
            b.iter(|| ops::project_divfree(&state.a_vec));
        });
    }
    group.finish();
    par::set_parallel(true);
}

criterion_group!(benches, bench_kernels);
criterion_main!(benches);
