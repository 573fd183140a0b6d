use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wclab_core::emulation::{generate_with_cable, AcquisitionMode, Scenario, Snapshot, TargetState};
use wclab_core::estimation::{bartlett_pas, range_velocity_map, target_slice_cir, ScanSector, SteeringModel, Window};
use wclab_core::geometry::{synthesize_transfer_matrix, wavelength, RadiationPattern, UpaGeometry};
use wclab_core::linalg::{random_sdd_matrix, spectral_condition_number};

const F: f64 = 3.5e9;

fn dut() -> UpaGeometry {
    UpaGeometry::at_origin(4, 8, wavelength(F) / 2.0, RadiationPattern::WAVEGUIDE).unwrap()
}

fn small_scenario() -> Scenario {
    Scenario {
        carrier_hz: F,
        bandwidth_hz: 100e6,
        num_freq: 257,
        num_time: 64,
        snapshot_interval_s: 1.0 / 700.0,
        snapshots: vec![Snapshot {
            label: "bench".into(),
            targets: vec![TargetState::new(50.0, 7.0, 30.0, -20.0, 0.0).unwrap(), TargetState::new(120.0, -4.0, 0.0, 10.0, -10.0).unwrap()],
        }],
    }
}

fn linalg(c: &mut Criterion) {
    let mut group = c.benchmark_group("spectral_condition");
    for n in [32usize, 128] {
        let m = random_sdd_matrix(n, &mut ChaCha8Rng::seed_from_u64(n as u64));
        group.bench_with_input(BenchmarkId::from_parameter(n), &m, |b, m| b.iter(|| spectral_condition_number(black_box(m)).unwrap()));
    }
    group.finish();
    let m = random_sdd_matrix(32, &mut ChaCha8Rng::seed_from_u64(1));
    c.bench_function("inverse_32", |b| b.iter(|| black_box(&m).inverse().unwrap()));
}

fn geometry(c: &mut Criterion) {
    let d = dut();
    let probe = d.facing(0.30).unwrap();
    c.bench_function("transfer_matrix_32", |b| b.iter(|| synthesize_transfer_matrix(black_box(&d), &probe, F).unwrap()));
}

fn pipeline(c: &mut Criterion) {
    let g = dut();
    let s = small_scenario();
    let acq = AcquisitionMode::PerElementMonostatic;
    c.bench_function("generate_dataset", |b| b.iter(|| generate_with_cable(&s, &s.snapshots[0], &g, None, acq).unwrap()));

    let ds = generate_with_cable(&s, &s.snapshots[0], &g, None, acq).unwrap();
    c.bench_function("range_velocity_map_pad4", |b| b.iter(|| range_velocity_map(black_box(&ds), 0, Window::Hann, 4).unwrap()));

    let h = target_slice_cir(&ds, 50.0, Some(7.0), Window::Rectangular, 4).unwrap();
    let sector = ScanSector::default();
    c.bench_function("bartlett_pas_1deg", |b| b.iter(|| bartlett_pas(black_box(&h), &g, &sector, SteeringModel::TwoWay, F).unwrap()));
}

criterion_group!(benches, linalg, geometry, pipeline);
criterion_main!(benches);
