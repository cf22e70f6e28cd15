use criterion::{black_box, criterion_group, criterion_main, Criterion};
use cvqkd_core::intercept::{eve_success, IrDensity};
use cvqkd_core::keyrate::{AttackScenario, KeyRateGrid};
use cvqkd_core::protocol::{run_protocol, QuadratureSampler};
use cvqkd_core::state::{default_truncation, fock_coefficients, PascsWigner};
use cvqkd_core::{KeyRateConfig, PhasePoint, ProtocolConfig, SignalLabel, StateFamily};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn wigner(c: &mut Criterion) {
    let alpha = Complex64::new(1.0, 0.0);
    let w = PascsWigner::new(StateFamily::Pascs.params(alpha)).unwrap();
    c.bench_function("wigner_pascs_eval", |b| {
        b.iter(|| w.eval(black_box(PhasePoint::new(0.3, -0.2))))
    });
}

fn keyrate(c: &mut Criterion) {
    let s = AttackScenario::with_transmission(StateFamily::Pascs, 0.5, 0.75).unwrap();
    let cfg = KeyRateConfig::default();
    c.bench_function("keyrate_grid_build", |b| b.iter(|| KeyRateGrid::new(black_box(&s), &cfg).unwrap()));
    let grid = KeyRateGrid::new(&s, &cfg).unwrap();
    c.bench_function("keyrate_report", |b| b.iter(|| grid.report(black_box(0.35)).unwrap()));
}

fn intercept(c: &mut Criterion) {
    let d = IrDensity::new(StateFamily::Pascs, 1.0, SignalLabel::Plus).unwrap();
    c.bench_function("ir_density_eval", |b| b.iter(|| d.eval(black_box(0.4), black_box(-0.1))));
    let mut g = c.benchmark_group("slow");
    g.sample_size(10);
    g.bench_function("eve_success", |b| b.iter(|| eve_success(StateFamily::Pascs, black_box(1.0)).unwrap()));
    g.finish();
}

fn protocol(c: &mut Criterion) {
    let alpha = Complex64::new(1.0, 0.0);
    let state = fock_coefficients(&StateFamily::Pascs.params(alpha), default_truncation(alpha)).unwrap();
    let sampler = QuadratureSampler::for_state(&state, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    c.bench_function("quadrature_sample", |b| b.iter(|| sampler.sample(&mut rng)));
    let cfg = ProtocolConfig {
        family: StateFamily::Pascs,
        alpha: 1.0,
        beta_c: 0.5,
        n_pulses: 100_000,
        rng_seed: 1,
        t_squared: 1.0,
    };
    let mut g = c.benchmark_group("slow");
    g.sample_size(10);
    g.bench_function("run_protocol_1e5", |b| b.iter(|| run_protocol(black_box(&cfg)).unwrap()));
    g.finish();
}

criterion_group!(benches, wigner, keyrate, intercept, protocol);
criterion_main!(benches);
