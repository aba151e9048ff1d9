use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use wignerkit::fock::{cat_state, displacement_matrix};
use wignerkit::fpsim::{estimate_field, simulate, OuParams, Scheme, TrajectoryEnsemble};
use wignerkit::inversion::rho_from_field;
use wignerkit::superop::{compile_generator, parse_master_equation, Ordering};
use wignerkit::wigner::{field_on_grid, Method, OrderingParam, PhaseSpaceGrid};
use wignerkit::{Complex64, FockDim};

const DAMPED: &str =
    "-(g/2)*(N+1)*(ad*a*rho + rho*ad*a - 2*a*rho*ad) - (g/2)*N*(a*ad*rho + rho*a*ad - 2*ad*rho*a)";

fn displacement(c: &mut Criterion) {
    let mut group = c.benchmark_group("displacement_matrix");
    for n_max in [10usize, 40, 100] {
        group.bench_with_input(BenchmarkId::from_parameter(n_max), &n_max, |b, &n| {
            b.iter(|| displacement_matrix(black_box(Complex64::new(0.7, -0.4)), FockDim::new(n)))
        });
    }
    group.finish();
}

fn fields(c: &mut Criterion) {
    let rho = cat_state(Complex64::new(1.5, 0.0), 1, FockDim::new(20)).unwrap();
    let grid = PhaseSpaceGrid::square(-4.0, 4.0, 41).unwrap();
    let mut group = c.benchmark_group("field_41x41_nmax20");
    group.sample_size(10);
    for (method, s) in [(Method::W1, -0.5), (Method::W3, 0.4), (Method::W2, -0.5)] {
        group.bench_function(method.name(), |b| {
            b.iter(|| field_on_grid(&rho, &grid, OrderingParam::new(s).unwrap(), method).unwrap())
        });
    }
    group.finish();
}

fn inversion(c: &mut Criterion) {
    let rho = cat_state(Complex64::new(1.5, 0.0), 1, FockDim::new(20)).unwrap();
    let grid = PhaseSpaceGrid::square(-4.0, 4.0, 81).unwrap();
    let field = field_on_grid(&rho, &grid, OrderingParam::new(0.0).unwrap(), Method::W1).unwrap();
    let mut group = c.benchmark_group("rho_from_field_81x81");
    group.sample_size(10);
    for n_max in [8usize, 16] {
        group.bench_with_input(BenchmarkId::from_parameter(n_max), &n_max, |b, &n| {
            b.iter(|| rho_from_field(&field, FockDim::new(n)).unwrap())
        });
    }
    group.finish();
}

fn simulation(c: &mut Criterion) {
    let p = OuParams::new(1.0, 0.5, 0.0).unwrap();
    let e = TrajectoryEnsemble::coherent(Complex64::new(1.0, 0.0), 10_000, 0.0, 1).unwrap();
    let mut group = c.benchmark_group("simulate_1e4x10");
    for scheme in [Scheme::EulerMaruyama, Scheme::ExactGaussianStep] {
        group.bench_function(scheme.name(), |b| b.iter(|| simulate(&e, &p, 0.05, 10, scheme).unwrap()));
    }
    group.finish();
    let grid = PhaseSpaceGrid::square(-4.0, 4.0, 81).unwrap();
    c.bench_function("kde_1e4_81x81", |b| b.iter(|| estimate_field(&e, &grid, 0.1).unwrap()));
}

fn compile(c: &mut Criterion) {
    c.bench_function("compile_damped_oscillator", |b| {
        b.iter(|| {
            let meq = parse_master_equation(black_box(DAMPED)).unwrap();
            compile_generator(&meq, &Ordering::Symbolic).unwrap()
        })
    });
}

criterion_group!(benches, displacement, fields, inversion, simulation, compile);
criterion_main!(benches);
