//! Transfer-matrix synthesis, calibration and emulation properties.

use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use wclab_core::calibration::{
    invert_calibration, isolation_report, quantize_matrix, simulate_onoff_measurement, MeasurementErrorModel, QuantizationModel,
};
use wclab_core::emulation::{generate_with_cable, AcquisitionMode, CfrDataset, Scenario, Snapshot, TargetState, WirelessCable};
use wclab_core::geometry::{synthesize_transfer_matrix, wavelength, Direction, RadiationPattern, UpaGeometry};
use wclab_core::linalg::{infinity_condition_number, random_sdd_matrix, spectral_condition_number, ComplexMatrix};

const F: f64 = 3.5e9;

fn dut(pattern: RadiationPattern) -> UpaGeometry {
    UpaGeometry::at_origin(4, 8, wavelength(F) / 2.0, pattern).unwrap()
}

fn face_to_face(standoff_m: f64, pattern: RadiationPattern) -> ComplexMatrix {
    let d = dut(pattern);
    synthesize_transfer_matrix(&d, &d.facing(standoff_m).unwrap(), F).unwrap()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    0.5 * (v[(n - 1) / 2] + v[n / 2])
}

#[test]
fn conditioning_grows_with_distance() {
    let cs: Vec<ComplexMatrix> = [0.01, 0.30, 0.80].iter().map(|&s| face_to_face(s, RadiationPattern::WAVEGUIDE)).collect();
    let k2: Vec<f64> = cs.iter().map(|c| spectral_condition_number(c).unwrap()).collect();
    let kinf: Vec<f64> = cs.iter().map(|c| infinity_condition_number(c).unwrap()).collect();
    assert!(k2.windows(2).all(|w| w[1] > w[0]), "{k2:?}");
    assert!(kinf.windows(2).all(|w| w[1] > w[0]), "{kinf:?}");
    assert!(k2[0] <= 10.0);
}

#[test]
fn wider_pattern_weakens_dominance() {
    let narrow = face_to_face(0.01, RadiationPattern::WAVEGUIDE);
    let wide = face_to_face(0.01, RadiationPattern::PATCH);
    assert!(spectral_condition_number(&wide).unwrap() >= spectral_condition_number(&narrow).unwrap());
    assert!(infinity_condition_number(&wide).unwrap() >= infinity_condition_number(&narrow).unwrap());
}

#[test]
fn isolation_degrades_with_conditioning() {
    let seeds: Vec<u64> = (1..=20).collect();
    let q = QuantizationModel::default();
    let medians: Vec<f64> = [0.01, 0.30, 0.80]
        .iter()
        .map(|&s| {
            let c = face_to_face(s, RadiationPattern::WAVEGUIDE);
            median(
                seeds
                    .iter()
                    .map(|&seed| {
                        let measured = simulate_onoff_measurement(&c, &MeasurementErrorModel::new(-40.0, seed).unwrap()).unwrap();
                        let calib = quantize_matrix(&invert_calibration(&measured).unwrap(), &q);
                        isolation_report(&c, &calib).unwrap().mean_db
                    })
                    .collect(),
            )
        })
        .collect();
    assert!(medians.windows(2).all(|w| w[1] <= w[0]), "{medians:?}");
    assert!(medians[0] >= 25.0);
}

fn small_scenario(targets: Vec<TargetState>) -> Scenario {
    Scenario {
        carrier_hz: F,
        bandwidth_hz: 40e6,
        num_freq: 17,
        num_time: 12,
        snapshot_interval_s: 1.0 / 700.0,
        snapshots: vec![Snapshot { label: "p".into(), targets }],
    }
}

#[test]
fn cfr_binary_round_trip_and_corruption() {
    let g = dut(RadiationPattern::WAVEGUIDE);
    let s = small_scenario(vec![TargetState::new(40.0, 3.0, 10.0, -5.0, -2.0).unwrap()]);
    let ds = generate_with_cable(&s, &s.snapshots[0], &g, None, AcquisitionMode::FixedReferenceColumn).unwrap();
    let mut bytes = Vec::new();
    ds.write_binary(&mut bytes).unwrap();
    assert_eq!(bytes.len(), 43 + 16 * 12 * 17 * 32);
    assert_eq!(CfrDataset::read_binary(bytes.as_slice()).unwrap(), ds);

    assert!(CfrDataset::read_binary(&bytes[..bytes.len() - 1]).is_err());
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(CfrDataset::read_binary(bad.as_slice()).is_err());
    let mut bad_mode = bytes;
    bad_mode[42] = 9;
    assert!(CfrDataset::read_binary(bad_mode.as_slice()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mirror_aligned_arrays_are_reciprocal(
        rows in 1usize..=4,
        cols in 1usize..=6,
        standoff in 0.01f64..1.0,
        q in 0.0f64..20.0,
    ) {
        let g = UpaGeometry::at_origin(rows, cols, wavelength(F) / 2.0, RadiationPattern::new(q, 0.01).unwrap()).unwrap();
        let c = synthesize_transfer_matrix(&g, &g.facing(standoff).unwrap(), F).unwrap();
        prop_assert!(c.max_abs_diff(&c.transpose()).unwrap() <= 1e-12);
        let d = c.diagonal();
        for z in &d {
            prop_assert!((z.norm() - d[0].norm()).abs() <= 1e-9 * d[0].norm());
        }
    }

    #[test]
    fn steering_entries_are_unit_modulus(el in -90.0f64..=90.0, az in -180.0f64..=180.0) {
        let g = dut(RadiationPattern::WAVEGUIDE);
        for a in g.steering_vector(Direction::new(el, az).unwrap(), F).unwrap() {
            prop_assert!((a.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_calibration_isolation_is_high(n in 2usize..=32, seed in any::<u64>()) {
        let c = random_sdd_matrix(n, &mut ChaCha8Rng::seed_from_u64(seed));
        let calib = invert_calibration(&c).unwrap();
        prop_assert!(isolation_report(&c, &calib).unwrap().min_db >= 120.0);
    }

    #[test]
    fn phase_quantization_error_is_bounded(bits in 1u32..=16, mag in 1e-6f64..1e3, phase in -PI..PI) {
        let q = QuantizationModel::new(bits, 0.0).unwrap();
        let z = Complex64::from_polar(mag, phase);
        let err = (q.quantize(z) / z).arg().abs();
        prop_assert!(err <= PI / (1u64 << bits) as f64 + 1e-12);
    }

    #[test]
    fn perfect_calibration_reproduces_ideal(
        seed in any::<u64>(),
        range in 5.0f64..300.0,
        v in -14.0f64..14.0,
        el in -60.0f64..60.0,
        az in -60.0f64..60.0,
    ) {
        let g = dut(RadiationPattern::WAVEGUIDE);
        let c = random_sdd_matrix(32, &mut ChaCha8Rng::seed_from_u64(seed));
        let cable = WirelessCable::establish(&c, &MeasurementErrorModel::none(), None).unwrap();
        let s = small_scenario(vec![TargetState::new(range, v, el, az, -3.0).unwrap()]);
        let acq = AcquisitionMode::PerElementMonostatic;
        let ideal = generate_with_cable(&s, &s.snapshots[0], &g, None, acq).unwrap();
        let ota = generate_with_cable(&s, &s.snapshots[0], &g, Some(&cable), acq).unwrap();
        let diff: f64 = ideal.values.iter().zip(&ota.values).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        prop_assert!(diff <= 1e-10 * ideal.norm_fro());
    }
}
