//! Target sensing channels and their wireless-cable emulation.
//!
//! The ideal channel is the sum of per-target rank-one terms
//! `a(Θ)·G·exp(j2πνt)·exp(j2πfτ)·a(Θ)ᵀ`. The emulated channel wraps each
//! steering vector with the calibration matrix on the APM side and the
//! physical transfer matrix on the air side:
//! `C·Q(Ĉ⁻¹a)·RTS·Q(aᵀĈ⁻¹)·C`, where `Q` is the APM quantizer.

use std::f64::consts::PI;
use std::io::{Read, Write};

use num_complex::Complex64;

use crate::calibration::{invert_calibration, quantize_weights, simulate_onoff_measurement, MeasurementErrorModel, QuantizationModel};
use crate::error::{Error, Result};
use crate::geometry::{wavelength, Direction, UpaGeometry, SPEED_OF_LIGHT};
use crate::linalg::ComplexMatrix;

/// Magic bytes opening a CFR dataset file.
pub const CFR_MAGIC: &[u8; 6] = b"WCCFR1";

/// One point target as seen by the DUT.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetState {
    pub range_m: f64,
    pub radial_velocity_mps: f64,
    pub elevation_deg: f64,
    pub azimuth_deg: f64,
    /// Normalized channel gain, amplitude `10^(gain_db/20)`.
    pub gain_db: f64,
}

impl TargetState {
    pub fn new(range_m: f64, radial_velocity_mps: f64, elevation_deg: f64, azimuth_deg: f64, gain_db: f64) -> Result<Self> {
        let t = Self { range_m, radial_velocity_mps, elevation_deg, azimuth_deg, gain_db };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.range_m > 0.0 && self.range_m.is_finite()) {
            return Err(Error::Parameter(format!("range_m must be positive, got {}", self.range_m)));
        }
        if !self.radial_velocity_mps.is_finite() || !self.gain_db.is_finite() {
            return Err(Error::Parameter("velocity and gain must be finite".into()));
        }
        self.direction().map(|_| ())
    }

    pub fn direction(&self) -> Result<Direction> {
        Direction::new(self.elevation_deg, self.azimuth_deg)
    }

    pub fn amplitude(&self) -> f64 {
        10f64.powf(self.gain_db / 20.0)
    }

    /// Round-trip delay `2R/c`.
    pub fn delay_s(&self) -> f64 {
        2.0 * self.range_m / SPEED_OF_LIGHT
    }

    /// Round-trip Doppler `2v/λ`.
    pub fn doppler_hz(&self, carrier_hz: f64) -> f64 {
        2.0 * self.radial_velocity_mps / wavelength(carrier_hz)
    }
}

/// `G·exp(j2πν·t)·exp(j2πf·τ)`.
pub fn rts_term(t: &TargetState, time_s: f64, baseband_freq_hz: f64, carrier_hz: f64) -> Complex64 {
    let doppler = Complex64::from_polar(1.0, 2.0 * PI * t.doppler_hz(carrier_hz) * time_s);
    let delay = Complex64::from_polar(1.0, 2.0 * PI * baseband_freq_hz * t.delay_s());
    doppler * delay * t.amplitude()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub label: String,
    pub targets: Vec<TargetState>,
}

/// Waveform, sampling and target parameters of a sensing scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub num_freq: usize,
    pub num_time: usize,
    pub snapshot_interval_s: f64,
    pub snapshots: Vec<Snapshot>,
}

impl Scenario {
    pub const DEFAULT_CARRIER_HZ: f64 = 3.5e9;
    pub const DEFAULT_BANDWIDTH_HZ: f64 = 40e6;
    pub const DEFAULT_NUM_FREQ: usize = 1001;
    pub const DEFAULT_NUM_TIME: usize = 1000;
    pub const DEFAULT_INTERVAL_S: f64 = 1.0 / 700.0;

    /// Two drones over three snapshots.
    pub fn two_drones() -> Self {
        let t = |r, v, el, az, g| TargetState { range_m: r, radial_velocity_mps: v, elevation_deg: el, azimuth_deg: az, gain_db: g };
        let snap = |label: &str, targets| Snapshot { label: label.into(), targets };
        Self {
            carrier_hz: Self::DEFAULT_CARRIER_HZ,
            bandwidth_hz: Self::DEFAULT_BANDWIDTH_HZ,
            num_freq: Self::DEFAULT_NUM_FREQ,
            num_time: Self::DEFAULT_NUM_TIME,
            snapshot_interval_s: Self::DEFAULT_INTERVAL_S,
            snapshots: vec![
                snap("t1", vec![t(50.0, 7.0, 50.0, -20.0, -5.0), t(155.0, 5.0, 0.0, 0.0, -25.0)]),
                snap("t2", vec![t(26.0, 2.0, 20.0, 10.0, 0.0), t(125.0, 10.0, 0.0, 0.0, -20.0)]),
                snap("t3", vec![t(38.0, 10.0, -10.0, 30.0, -3.0), t(110.0, 15.0, 0.0, 0.0, -13.0)]),
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.carrier_hz > 0.0) || !(self.bandwidth_hz > 0.0) {
            return Err(Error::Parameter("carrier_hz and bandwidth_hz must be positive".into()));
        }
        if self.num_freq < 2 || self.num_time < 2 {
            return Err(Error::Parameter(format!("num_freq and num_time must be >= 2, got {} and {}", self.num_freq, self.num_time)));
        }
        if !(self.snapshot_interval_s > 0.0 && self.snapshot_interval_s.is_finite()) {
            return Err(Error::Parameter(format!("snapshot_interval_s must be positive, got {}", self.snapshot_interval_s)));
        }
        for s in &self.snapshots {
            for t in &s.targets {
                t.validate()?;
            }
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        wavelength(self.carrier_hz)
    }

    pub fn freq_step_hz(&self) -> f64 {
        self.bandwidth_hz / (self.num_freq - 1) as f64
    }

    /// Baseband frequency of grid point `j`, spanning `[-B/2, B/2]`.
    pub fn baseband_freq(&self, j: usize) -> f64 {
        -self.bandwidth_hz / 2.0 + j as f64 * self.freq_step_hz()
    }

    /// Largest unaliased speed, `λ/(4Δt)`.
    pub fn max_unambiguous_velocity(&self) -> f64 {
        self.wavelength() / (4.0 * self.snapshot_interval_s)
    }

    /// Largest unaliased range, `c/(2Δf)`.
    pub fn max_unambiguous_range(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.freq_step_hz())
    }

    /// Messages for targets at or beyond the Doppler Nyquist edge.
    pub fn aliasing_warnings(&self) -> Vec<String> {
        let vmax = self.max_unambiguous_velocity();
        let mut out = Vec::new();
        for s in &self.snapshots {
            for (i, t) in s.targets.iter().enumerate() {
                if t.radial_velocity_mps.abs() >= 0.99 * vmax {
                    out.push(format!(
                        "snapshot {} target {}: radial velocity {} m/s at or beyond the unambiguous limit {:.4} m/s; the estimate may wrap sign",
                        s.label,
                        i + 1,
                        t.radial_velocity_mps,
                        vmax
                    ));
                }
                if t.range_m >= self.max_unambiguous_range() {
                    out.push(format!(
                        "snapshot {} target {}: range {} m beyond the unambiguous range {:.1} m",
                        s.label,
                        i + 1,
                        t.range_m,
                        self.max_unambiguous_range()
                    ));
                }
            }
        }
        out
    }
}

/// `H = Σ_n a(Θ_n)·rts_n·a(Θ_n)ᵀ`.
pub fn ideal_sensing_channel(
    targets: &[TargetState],
    geom: &UpaGeometry,
    time_s: f64,
    baseband_freq_hz: f64,
    carrier_hz: f64,
) -> Result<ComplexMatrix> {
    let k = geom.element_count();
    let mut h = ComplexMatrix::zeros(k, k);
    for t in targets {
        let a = geom.steering_vector(t.direction()?, carrier_hz)?;
        let s = rts_term(t, time_s, baseband_freq_hz, carrier_hz);
        for i in 0..k {
            for j in 0..k {
                h[(i, j)] += a[i] * s * a[j];
            }
        }
    }
    Ok(h)
}

/// APM weights for one target: transmit `calib·a`, receive `aᵀ·calib`.
pub fn apm_weight_vectors(
    calib: &ComplexMatrix,
    dir: Direction,
    geom: &UpaGeometry,
    freq_hz: f64,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    if calib.rows() != geom.element_count() || !calib.is_square() {
        return Err(Error::Dimension(format!(
            "calibration is {}x{}, array has {} elements",
            calib.rows(),
            calib.cols(),
            geom.element_count()
        )));
    }
    let a = geom.steering_vector(dir, freq_hz)?;
    Ok((calib.mul_vec(&a)?, calib.vec_mul(&a)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EmulationMode {
    /// The target channel itself.
    Ideal,
    /// Cabled APM network: `C = I`, no over-the-air calibration.
    Conducted,
    /// Wireless cables through a physical transfer matrix.
    Ota,
}

impl EmulationMode {
    pub const ALL: [EmulationMode; 3] = [EmulationMode::Ideal, EmulationMode::Conducted, EmulationMode::Ota];

    pub fn name(&self) -> &'static str {
        match self {
            EmulationMode::Ideal => "ideal",
            EmulationMode::Conducted => "conducted",
            EmulationMode::Ota => "ota",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }
}

/// How the `K x K` channel is reduced to one trace per element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcquisitionMode {
    /// Diagonal: every element transmits and receives itself.
    PerElementMonostatic,
    /// Column 0: element 0 transmits, every element receives.
    FixedReferenceColumn,
}

impl AcquisitionMode {
    pub fn code(&self) -> u8 {
        match self {
            AcquisitionMode::PerElementMonostatic => 0,
            AcquisitionMode::FixedReferenceColumn => 1,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(AcquisitionMode::PerElementMonostatic),
            1 => Ok(AcquisitionMode::FixedReferenceColumn),
            other => Err(Error::Format(format!("unknown acquisition mode code {other}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AcquisitionMode::PerElementMonostatic => "per-element-monostatic",
            AcquisitionMode::FixedReferenceColumn => "fixed-reference-column",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [AcquisitionMode::PerElementMonostatic, AcquisitionMode::FixedReferenceColumn].into_iter().find(|m| m.name() == s)
    }
}

/// Everything needed to emulate the channel through one test setup.
#[derive(Debug, Clone)]
pub struct EmulationSetup {
    pub mode: EmulationMode,
    /// Physical probe-to-DUT transfer matrix; required for [`EmulationMode::Ota`].
    pub physical_c: Option<ComplexMatrix>,
    pub error: MeasurementErrorModel,
    pub quantization: Option<QuantizationModel>,
    pub acquisition: AcquisitionMode,
}

impl EmulationSetup {
    pub fn ideal(acquisition: AcquisitionMode) -> Self {
        Self { mode: EmulationMode::Ideal, physical_c: None, error: MeasurementErrorModel::none(), quantization: None, acquisition }
    }
}

/// A calibrated link: the physical matrix and the calibration loaded into the APM network.
#[derive(Debug, Clone)]
pub struct WirelessCable {
    pub physical: ComplexMatrix,
    pub calibration: ComplexMatrix,
    pub quantization: Option<QuantizationModel>,
}

impl WirelessCable {
    /// Measures `Ĉ`, inverts it, and keeps both sides of the link.
    pub fn establish(physical: &ComplexMatrix, err: &MeasurementErrorModel, quantization: Option<QuantizationModel>) -> Result<Self> {
        let measured = simulate_onoff_measurement(physical, err)?;
        let calibration = invert_calibration(&measured)?;
        Ok(Self { physical: physical.clone(), calibration, quantization })
    }

    /// Cabled baseline: identity transfer and identity calibration.
    pub fn conducted(k: usize, quantization: Option<QuantizationModel>) -> Self {
        Self { physical: ComplexMatrix::identity(k), calibration: ComplexMatrix::identity(k), quantization }
    }

    /// Effective transmit column `C·Q(Ĉ⁻¹a)` and receive row `Q(aᵀĈ⁻¹)·C`.
    pub fn effective_vectors(&self, dir: Direction, geom: &UpaGeometry, carrier_hz: f64) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        let (mut tx, mut rx) = apm_weight_vectors(&self.calibration, dir, geom, carrier_hz)?;
        if let Some(q) = &self.quantization {
            tx = quantize_weights(&tx, q);
            rx = quantize_weights(&rx, q);
        }
        Ok((self.physical.mul_vec(&tx)?, self.physical.vec_mul(&rx)?))
    }
}

/// Full `K x K` emulated channel at one `(t, f)`.
pub fn emulated_sensing_channel(
    cable: &WirelessCable,
    targets: &[TargetState],
    geom: &UpaGeometry,
    time_s: f64,
    baseband_freq_hz: f64,
    carrier_hz: f64,
) -> Result<ComplexMatrix> {
    let k = geom.element_count();
    let mut h = ComplexMatrix::zeros(k, k);
    for t in targets {
        let (u, v) = cable.effective_vectors(t.direction()?, geom, carrier_hz)?;
        let s = rts_term(t, time_s, baseband_freq_hz, carrier_hz);
        for i in 0..k {
            for j in 0..k {
                h[(i, j)] += u[i] * s * v[j];
            }
        }
    }
    Ok(h)
}

/// Measured channel frequency responses, `N_t x N_f x K`, time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CfrDataset {
    pub values: Vec<Complex64>,
    pub num_time: usize,
    pub num_freq: usize,
    pub element_count: usize,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub dt_s: f64,
    pub acquisition: AcquisitionMode,
}

impl CfrDataset {
    #[inline]
    pub fn index(&self, t: usize, f: usize, k: usize) -> usize {
        (t * self.num_freq + f) * self.element_count + k
    }

    #[inline]
    pub fn get(&self, t: usize, f: usize, k: usize) -> Complex64 {
        self.values[self.index(t, f, k)]
    }

    pub fn time_axis_s(&self) -> Vec<f64> {
        (0..self.num_time).map(|i| i as f64 * self.dt_s).collect()
    }

    pub fn freq_step_hz(&self) -> f64 {
        self.bandwidth_hz / (self.num_freq - 1) as f64
    }

    pub fn baseband_freq(&self, j: usize) -> f64 {
        -self.bandwidth_hz / 2.0 + j as f64 * self.freq_step_hz()
    }

    /// RF frequencies, symmetric about the carrier.
    pub fn freq_axis_hz(&self) -> Vec<f64> {
        (0..self.num_freq).map(|j| self.carrier_hz + self.baseband_freq(j)).collect()
    }

    pub fn wavelength(&self) -> f64 {
        wavelength(self.carrier_hz)
    }

    /// `N_t x N_f` slice of one element, time-major.
    pub fn element_slice(&self, k: usize) -> Result<Vec<Complex64>> {
        if k >= self.element_count {
            return Err(Error::OutOfRange(format!("element {k} of {}", self.element_count)));
        }
        Ok((0..self.num_time * self.num_freq).map(|tf| self.values[tf * self.element_count + k]).collect())
    }

    pub fn norm_fro(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let dim = |n: usize| -> Result<[u8; 4]> {
            u32::try_from(n).map(u32::to_le_bytes).map_err(|_| Error::Format(format!("dimension {n} exceeds u32")))
        };
        w.write_all(CFR_MAGIC)?;
        w.write_all(&dim(self.num_time)?)?;
        w.write_all(&dim(self.num_freq)?)?;
        w.write_all(&dim(self.element_count)?)?;
        w.write_all(&self.carrier_hz.to_le_bytes())?;
        w.write_all(&self.bandwidth_hz.to_le_bytes())?;
        w.write_all(&self.dt_s.to_le_bytes())?;
        w.write_all(&[self.acquisition.code()])?;
        let mut buf = Vec::with_capacity(16 * 4096);
        for chunk in self.values.chunks(4096) {
            buf.clear();
            for z in chunk {
                buf.extend_from_slice(&z.re.to_le_bytes());
                buf.extend_from_slice(&z.im.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 6];
        r.read_exact(&mut magic)?;
        if &magic != CFR_MAGIC {
            return Err(Error::Format("bad CFR magic".into()));
        }
        let mut u32buf = [0u8; 4];
        let mut f64buf = [0u8; 8];
        let mut read_u32 = |r: &mut R| -> Result<usize> {
            r.read_exact(&mut u32buf)?;
            Ok(u32::from_le_bytes(u32buf) as usize)
        };
        let num_time = read_u32(&mut r)?;
        let num_freq = read_u32(&mut r)?;
        let element_count = read_u32(&mut r)?;
        let mut read_f64 = |r: &mut R| -> Result<f64> {
            r.read_exact(&mut f64buf)?;
            Ok(f64::from_le_bytes(f64buf))
        };
        let carrier_hz = read_f64(&mut r)?;
        let bandwidth_hz = read_f64(&mut r)?;
        let dt_s = read_f64(&mut r)?;
        let mut code = [0u8; 1];
        r.read_exact(&mut code)?;
        let acquisition = AcquisitionMode::from_code(code[0])?;
        if num_time < 2 || num_freq < 2 || element_count == 0 {
            return Err(Error::Format(format!("bad dimensions {num_time}x{num_freq}x{element_count}")));
        }
        let n = num_time * num_freq * element_count;
        let mut bytes = vec![0u8; n * 16];
        r.read_exact(&mut bytes)?;
        let values = bytes
            .chunks_exact(16)
            .map(|c| Complex64::new(f64::from_le_bytes(c[..8].try_into().unwrap()), f64::from_le_bytes(c[8..].try_into().unwrap())))
            .collect();
        Ok(Self { values, num_time, num_freq, element_count, carrier_hz, bandwidth_hz, dt_s, acquisition })
    }
}

/// Per-target, per-element coefficient multiplying the RTS term after reduction.
fn element_coefficients(
    targets: &[TargetState],
    geom: &UpaGeometry,
    carrier_hz: f64,
    cable: Option<&WirelessCable>,
    acquisition: AcquisitionMode,
) -> Result<Vec<Vec<Complex64>>> {
    targets
        .iter()
        .map(|t| {
            let dir = t.direction()?;
            let (u, v) = match cable {
                None => {
                    let a = geom.steering_vector(dir, carrier_hz)?;
                    (a.clone(), a)
                }
                Some(c) => c.effective_vectors(dir, geom, carrier_hz)?,
            };
            Ok(match acquisition {
                AcquisitionMode::PerElementMonostatic => u.iter().zip(&v).map(|(a, b)| a * b).collect(),
                AcquisitionMode::FixedReferenceColumn => u.iter().map(|a| a * v[0]).collect(),
            })
        })
        .collect()
}

/// Builds the wireless-cable link for a setup, or `None` in ideal mode.
pub fn cable_for_setup(setup: &EmulationSetup, k: usize) -> Result<Option<WirelessCable>> {
    match setup.mode {
        EmulationMode::Ideal => Ok(None),
        EmulationMode::Conducted => Ok(Some(WirelessCable::conducted(k, setup.quantization))),
        EmulationMode::Ota => {
            let c = setup.physical_c.as_ref().ok_or_else(|| Error::Parameter("ota mode needs a physical transfer matrix".into()))?;
            if c.rows() != k || !c.is_square() {
                return Err(Error::Dimension(format!("transfer matrix is {}x{}, array has {k} elements", c.rows(), c.cols())));
            }
            Ok(Some(WirelessCable::establish(c, &setup.error, setup.quantization)?))
        }
    }
}

/// CFR dataset for one snapshot with an already established link.
pub fn generate_with_cable(
    scenario: &Scenario,
    snapshot: &Snapshot,
    geom: &UpaGeometry,
    cable: Option<&WirelessCable>,
    acquisition: AcquisitionMode,
) -> Result<CfrDataset> {
    scenario.validate()?;
    let (nt, nf, k) = (scenario.num_time, scenario.num_freq, geom.element_count());
    let coeffs = element_coefficients(&snapshot.targets, geom, scenario.carrier_hz, cable, acquisition)?;
    let doppler: Vec<Vec<Complex64>> = snapshot
        .targets
        .iter()
        .map(|t| {
            let nu = t.doppler_hz(scenario.carrier_hz);
            let g = t.amplitude();
            (0..nt).map(|i| Complex64::from_polar(g, 2.0 * PI * nu * (i as f64 * scenario.snapshot_interval_s))).collect()
        })
        .collect();
    let delay: Vec<Vec<Complex64>> = snapshot
        .targets
        .iter()
        .map(|t| {
            let tau = t.delay_s();
            (0..nf).map(|j| Complex64::from_polar(1.0, 2.0 * PI * scenario.baseband_freq(j) * tau)).collect()
        })
        .collect();

    let mut values = vec![Complex64::new(0.0, 0.0); nt * nf * k];
    let mut s = vec![Complex64::new(0.0, 0.0); coeffs.len()];
    for (i, block) in values.chunks_mut(nf * k).enumerate() {
        for (j, cell) in block.chunks_mut(k).enumerate() {
            for (n, sn) in s.iter_mut().enumerate() {
                *sn = doppler[n][i] * delay[n][j];
            }
            for (n, b) in coeffs.iter().enumerate() {
                for (out, bk) in cell.iter_mut().zip(b) {
                    *out += bk * s[n];
                }
            }
        }
    }
    Ok(CfrDataset {
        values,
        num_time: nt,
        num_freq: nf,
        element_count: k,
        carrier_hz: scenario.carrier_hz,
        bandwidth_hz: scenario.bandwidth_hz,
        dt_s: scenario.snapshot_interval_s,
        acquisition,
    })
}

/// CFR dataset of snapshot `snapshot_index` as acquired through `setup`.
pub fn generate_cfr_dataset(scenario: &Scenario, snapshot_index: usize, geom: &UpaGeometry, setup: &EmulationSetup) -> Result<CfrDataset> {
    let snapshot = scenario
        .snapshots
        .get(snapshot_index)
        .ok_or_else(|| Error::OutOfRange(format!("snapshot {snapshot_index} of {}", scenario.snapshots.len())))?;
    let cable = cable_for_setup(setup, geom.element_count())?;
    generate_with_cable(scenario, snapshot, geom, cable.as_ref(), setup.acquisition)
}
