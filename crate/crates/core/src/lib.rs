//! Wireless-cable over-the-air test lab for ISAC base stations.
//!
//! The crate models a DUT array facing a probe array at short range, the
//! coupling matrix between them, its ON-OFF calibration and inversion, the
//! emulation of monostatic sensing channels through the inverted cable, and
//! the DUT-side estimation chain that turns CFR datasets into range, velocity,
//! angle and gain estimates.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod emulation;
pub mod error;
pub mod estimation;
pub mod geometry;
pub mod linalg;

pub use calibration::{
    invert_calibration, isolation_report, quantize_matrix, quantize_weights, simulate_onoff_measurement, IsolationReport,
    MeasurementErrorModel, QuantizationModel,
};
pub use emulation::{
    generate_cfr_dataset, generate_with_cable, AcquisitionMode, CfrDataset, EmulationMode, EmulationSetup, Scenario, Snapshot, TargetState,
    WirelessCable,
};
pub use error::{Error, Result};
pub use estimation::{
    bartlett_pas, detect_peaks, normalized_gain_estimate, psp, range_velocity_map, range_velocity_map_cropped, target_slice_cir, AnglePeak,
    PasGrid, RangeVelocityMap, RangeVelocityPeak, ScanSector, SteeringModel, Window,
};
pub use geometry::{synthesize_transfer_matrix, wavelength, Direction, RadiationPattern, UpaGeometry, SPEED_OF_LIGHT};
pub use linalg::{infinity_condition_number, sdd_analysis, spectral_condition_number, ComplexMatrix, SddReport};

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
