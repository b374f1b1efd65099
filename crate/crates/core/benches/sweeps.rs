use std::f64::consts::FRAC_PI_2;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qbat_core::{
    sweep_tau, with_max_threads, BatterySpectrum, IntegratorConfig, PulseShape, ScheduleFamily,
};

fn sweep_cells(c: &mut Criterion) {
    let family = ScheduleFamily::closed_loop(PulseShape::SinPi, FRAC_PI_2).unwrap();
    let spectrum = BatterySpectrum::default();
    let config = IntegratorConfig::default();
    let grid = qbat_core::geomspace(0.2, 20.0, 48);

    let mut group = c.benchmark_group("tau_sweep_48pt");
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("threads", "default"), |b| {
        b.iter(|| sweep_tau(&family, &spectrum, &grid, &config).unwrap())
    });
    group.bench_function(BenchmarkId::new("threads", "1"), |b| {
        b.iter(|| {
            with_max_threads(Some(1), || {
                sweep_tau(&family, &spectrum, &grid, &config).unwrap()
            })
        })
    });
    group.finish();
}

criterion_group!(benches, sweep_cells);
criterion_main!(benches);
