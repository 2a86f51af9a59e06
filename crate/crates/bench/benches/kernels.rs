use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use powerbound_core::clockwork::{effective_unitary, lattice_simulate, LatticeClock};
use powerbound_core::operator::propagator;
use powerbound_core::random::random_hermitian;
use powerbound_core::scenarios::{qubit_machine, QubitParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bench_propagator(c: &mut Criterion) {
    let mut group = c.benchmark_group("propagator");
    for n in [4usize, 16, 64] {
        let h = random_hermitian(&mut ChaCha8Rng::seed_from_u64(1), n, 1.0);
        group.bench_with_input(BenchmarkId::from_parameter(n), &h, |b, h| {
            b.iter(|| propagator(black_box(h), 0.7, 1.0).unwrap())
        });
    }
    group.finish();
}

fn qubit(profile_ratio: f64, grid_points: usize, steps: usize) -> powerbound_core::ClockMachineSpec {
    let p = QubitParams {
        profile_ratio,
        grid_points,
        steps,
        ..QubitParams::default()
    };
    qubit_machine(&p, 1.0).unwrap()
}

fn bench_effective_unitary(c: &mut Criterion) {
    let mut group = c.benchmark_group("effective_unitary");
    for steps in [256usize, 4096] {
        let m = qubit(0.01, 401, steps);
        group.bench_with_input(BenchmarkId::from_parameter(steps), &m, |b, m| {
            b.iter(|| effective_unitary(m.profile(), m.h_s(), m.hbar(), m.nu(), m.steps()).unwrap())
        });
    }
    group.finish();
}

fn bench_lattice(c: &mut Criterion) {
    let mut group = c.benchmark_group("lattice_simulate");
    group.sample_size(10);
    for cells in [16usize, 32] {
        let dx = 1.0 / cells as f64;
        let m = qubit(0.25, 8 * cells + 1, cells / 4);
        let lattice = LatticeClock::for_spec(&m, dx, 0.125).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(lattice.sites()), &lattice, |b, l| {
            b.iter(|| lattice_simulate(&m, l).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_propagator, bench_effective_unitary, bench_lattice);
criterion_main!(benches);
