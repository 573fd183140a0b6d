//! DUT-side sensing chain: range-velocity maps, peak extraction, delay-domain
//! slicing, Bartlett power angular spectrum, PAS similarity and gain estimates.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::emulation::{CfrDataset, TargetState};
use crate::error::{Error, Result};
use crate::geometry::{Direction, UpaGeometry, SPEED_OF_LIGHT};

/// Power floor used when converting zero power to dB.
const MIN_DB: f64 = -400.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Rectangular,
    Hann,
}

impl Window {
    pub fn coefficients(&self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            // Periodic-free symmetric Hann without zero endpoints.
            Window::Hann => (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * (i as f64 + 0.5) / n as f64).cos()).collect(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Window::Rectangular => "rectangular",
            Window::Hann => "hann",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "rectangular" => Some(Window::Rectangular),
            "hann" => Some(Window::Hann),
            _ => None,
        }
    }
}

fn to_db(p: f64) -> f64 {
    if p > 0.0 {
        10.0 * p.log10()
    } else {
        MIN_DB
    }
}

/// Range-velocity power map. Rows are velocity bins, columns range bins.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeVelocityMap {
    /// Row-major `n_velocity x n_range`, dB relative to the map maximum.
    pub power_db: Vec<f64>,
    pub n_range: usize,
    pub n_velocity: usize,
    pub range_step_m: f64,
    pub velocity_start_mps: f64,
    pub velocity_step_mps: f64,
    pub zero_pad_factor: usize,
    /// Absolute power of the maximum cell, in dB (unit-amplitude tone on a bin = 0 dB).
    pub reference_db: f64,
}

impl RangeVelocityMap {
    pub fn range_axis_m(&self) -> Vec<f64> {
        (0..self.n_range).map(|i| i as f64 * self.range_step_m).collect()
    }

    pub fn velocity_axis_mps(&self) -> Vec<f64> {
        (0..self.n_velocity).map(|j| self.velocity_start_mps + j as f64 * self.velocity_step_mps).collect()
    }

    #[inline]
    pub fn at(&self, velocity_bin: usize, range_bin: usize) -> f64 {
        self.power_db[velocity_bin * self.n_range + range_bin]
    }

    /// Full-resolution range bin, `c/(2·N_f·Δf)`.
    pub fn native_range_bin_m(&self) -> f64 {
        self.range_step_m * self.zero_pad_factor as f64
    }

    pub fn native_velocity_bin_mps(&self) -> f64 {
        self.velocity_step_mps * self.zero_pad_factor as f64
    }

    /// Width of the (periodic) velocity axis.
    pub fn velocity_span_mps(&self) -> f64 {
        self.velocity_step_mps * self.n_velocity as f64
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# range_start={:.9e},range_step={:.9e},vel_start={:.9e},vel_step={:.9e}",
            0.0, self.range_step_m, self.velocity_start_mps, self.velocity_step_mps
        )?;
        let mut line = String::with_capacity(self.n_range * 9);
        for v in 0..self.n_velocity {
            line.clear();
            for r in 0..self.n_range {
                if r > 0 {
                    line.push(',');
                }
                line.push_str(&format!("{:.3}", self.at(v, r).max(-300.0)));
            }
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }
}

/// Range-velocity map of one element without range cropping.
pub fn range_velocity_map(ds: &CfrDataset, element_index: usize, window: Window, zero_pad: usize) -> Result<RangeVelocityMap> {
    range_velocity_map_cropped(ds, element_index, window, zero_pad, None)
}

/// Range-velocity map keeping only range bins up to `max_range_m`.
///
/// Frequency is transformed with the forward (negative-exponent) DFT so a
/// `exp(+j2πfτ)` response lands at positive delay; time is transformed the same
/// way and shifted so zero Doppler sits in the middle row.
pub fn range_velocity_map_cropped(
    ds: &CfrDataset,
    element_index: usize,
    window: Window,
    zero_pad: usize,
    max_range_m: Option<f64>,
) -> Result<RangeVelocityMap> {
    if element_index >= ds.element_count {
        return Err(Error::OutOfRange(format!("element {element_index} of {}", ds.element_count)));
    }
    if zero_pad == 0 {
        return Err(Error::Parameter("zero_pad must be >= 1".into()));
    }
    let (nt, nf) = (ds.num_time, ds.num_freq);
    let (mf, mt) = (nf * zero_pad, nt * zero_pad);
    let range_step_m = SPEED_OF_LIGHT / (2.0 * mf as f64 * ds.freq_step_hz());
    let n_range = match max_range_m {
        Some(r) if r > 0.0 => ((r / range_step_m).floor() as usize + 1).min(mf),
        Some(r) => return Err(Error::Parameter(format!("max_range_m must be positive, got {r}"))),
        None => mf,
    };
    let wf = window.coefficients(nf);
    let wt = window.coefficients(nt);
    let norm = wf.iter().sum::<f64>() * wt.iter().sum::<f64>();

    let mut planner = FftPlanner::<f64>::new();
    let fft_f = planner.plan_fft_forward(mf);
    let fft_t = planner.plan_fft_forward(mt);

    // Delay transform per time row, cropped.
    let mut delay_rows = vec![Complex64::new(0.0, 0.0); nt * n_range];
    let mut buf = vec![Complex64::new(0.0, 0.0); mf];
    for t in 0..nt {
        buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for f in 0..nf {
            buf[f] = ds.get(t, f, element_index) * wf[f];
        }
        fft_f.process(&mut buf);
        delay_rows[t * n_range..(t + 1) * n_range].copy_from_slice(&buf[..n_range]);
    }

    // Doppler transform per range column.
    let mut power = vec![0.0; mt * n_range];
    let mut col = vec![Complex64::new(0.0, 0.0); mt];
    let half = mt / 2;
    for r in 0..n_range {
        col.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for t in 0..nt {
            col[t] = delay_rows[t * n_range + r] * wt[t];
        }
        fft_t.process(&mut col);
        for (bin, z) in col.iter().enumerate() {
            let row = (bin + half) % mt;
            power[row * n_range + r] = (z / norm).norm_sqr();
        }
    }

    let max = power.iter().cloned().fold(0.0, f64::max);
    let reference_db = to_db(max);
    let power_db = power.iter().map(|&p| if max > 0.0 { to_db(p / max) } else { MIN_DB }).collect();
    let lambda = ds.wavelength();
    let velocity_step_mps = lambda / (2.0 * mt as f64 * ds.dt_s);
    Ok(RangeVelocityMap {
        power_db,
        n_range,
        n_velocity: mt,
        range_step_m,
        velocity_start_mps: -(half as f64) * velocity_step_mps,
        velocity_step_mps,
        zero_pad_factor: zero_pad,
        reference_db,
    })
}

/// Total linear power of a map relative to its reference, i.e. `Σ|X|²`.
pub fn map_total_power(map: &RangeVelocityMap) -> f64 {
    let reference = 10f64.powf(map.reference_db / 10.0);
    map.power_db.iter().map(|&db| if db <= MIN_DB { 0.0 } else { 10f64.powf(db / 10.0) * reference }).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeVelocityPeak {
    pub range_m: f64,
    pub velocity_mps: f64,
    /// Relative to the map maximum.
    pub power_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnglePeak {
    pub elevation_deg: f64,
    pub azimuth_deg: f64,
    pub power_db: f64,
}

/// A grid maximum with sub-bin offsets (rows, cols).
#[derive(Debug, Clone, Copy, PartialEq)]
struct GridPeak {
    row: usize,
    col: usize,
    row_offset: f64,
    col_offset: f64,
    value: f64,
}

fn parabolic_offset(left: f64, center: f64, right: f64) -> (f64, f64) {
    let denom = left - 2.0 * center + right;
    if denom >= 0.0 || !denom.is_finite() {
        return (0.0, center);
    }
    let delta = (0.5 * (left - right) / denom).clamp(-0.5, 0.5);
    (delta, center - 0.25 * (left - right) * delta)
}

/// Greedy maxima with square exclusion zones; rows may be periodic.
fn grid_peaks(
    values: &[f64],
    rows: usize,
    cols: usize,
    wrap_rows: bool,
    max_peaks: usize,
    min_separation: usize,
    floor: f64,
) -> Vec<GridPeak> {
    let row_dist = |a: usize, b: usize| {
        let d = a.abs_diff(b);
        if wrap_rows {
            d.min(rows - d)
        } else {
            d
        }
    };
    let at = |r: usize, c: usize| values[r * cols + c];
    let is_local_max = |r: usize, c: usize| {
        let v = at(r, c);
        for dr in [-1i64, 0, 1] {
            for dc in [-1i64, 0, 1] {
                if dr == 0 && dc == 0 {
                    continue;
                }
                let cc = c as i64 + dc;
                if cc < 0 || cc >= cols as i64 {
                    continue;
                }
                let rr = r as i64 + dr;
                let rr = if wrap_rows {
                    rr.rem_euclid(rows as i64)
                } else if rr < 0 || rr >= rows as i64 {
                    continue;
                } else {
                    rr
                };
                if at(rr as usize, cc as usize) > v {
                    return false;
                }
            }
        }
        true
    };

    let mut chosen: Vec<GridPeak> = Vec::new();
    while chosen.len() < max_peaks {
        let mut best: Option<(usize, usize, f64)> = None;
        // Column-outer scan: on ties the lower range (column), then lower row, wins.
        for c in 0..cols {
            for r in 0..rows {
                let v = at(r, c);
                if !(v >= floor) {
                    continue;
                }
                if let Some((_, _, bv)) = best {
                    if v <= bv {
                        continue;
                    }
                }
                if chosen.iter().any(|p| row_dist(p.row, r) < min_separation && p.col.abs_diff(c) < min_separation) {
                    continue;
                }
                if !is_local_max(r, c) {
                    continue;
                }
                best = Some((r, c, v));
            }
        }
        let Some((r, c, v)) = best else { break };
        let (col_offset, col_val) = if c > 0 && c + 1 < cols { parabolic_offset(at(r, c - 1), v, at(r, c + 1)) } else { (0.0, v) };
        let (row_offset, row_val) = if wrap_rows || (r > 0 && r + 1 < rows) {
            let up = (r + rows - 1) % rows;
            let down = (r + 1) % rows;
            parabolic_offset(at(up, c), v, at(down, c))
        } else {
            (0.0, v)
        };
        chosen.push(GridPeak { row: r, col: c, row_offset, col_offset, value: col_val.max(row_val) });
    }
    chosen
}

/// Greedy peak picking on a range-velocity map with parabolic sub-bin refinement.
/// `min_separation_bins` is measured in map bins on both axes.
pub fn detect_peaks(map: &RangeVelocityMap, max_peaks: usize, min_separation_bins: usize, floor_db: f64) -> Vec<RangeVelocityPeak> {
    grid_peaks(&map.power_db, map.n_velocity, map.n_range, true, max_peaks.max(1), min_separation_bins.max(1), floor_db)
        .into_iter()
        .map(|p| RangeVelocityPeak {
            range_m: (p.col as f64 + p.col_offset) * map.range_step_m,
            velocity_mps: map.velocity_start_mps + (p.row as f64 + p.row_offset) * map.velocity_step_mps,
            power_db: p.value,
        })
        .collect()
}

pub fn write_range_velocity_peaks<W: Write>(peaks: &[RangeVelocityPeak], mut w: W) -> Result<()> {
    writeln!(w, "range_m,velocity_mps,power_db")?;
    for p in peaks {
        writeln!(w, "{:.6},{:.6},{:.6}", p.range_m, p.velocity_mps, p.power_db)?;
    }
    Ok(())
}

pub fn write_angle_peaks<W: Write>(peaks: &[AnglePeak], mut w: W) -> Result<()> {
    writeln!(w, "elevation_deg,azimuth_deg,power_db")?;
    for p in peaks {
        writeln!(w, "{:.6},{:.6},{:.6}", p.elevation_deg, p.azimuth_deg, p.power_db)?;
    }
    Ok(())
}

/// Per-element CIR at the delay bin nearest `2·range/c` on the zero-padded grid.
///
/// With a velocity hint the response is Doppler-compensated and averaged
/// coherently over all time samples; otherwise time index 0 is used.
pub fn target_slice_cir(
    ds: &CfrDataset,
    range_m: f64,
    velocity_hint_mps: Option<f64>,
    window: Window,
    zero_pad: usize,
) -> Result<Vec<Complex64>> {
    if zero_pad == 0 {
        return Err(Error::Parameter("zero_pad must be >= 1".into()));
    }
    let max_range = SPEED_OF_LIGHT / (2.0 * ds.freq_step_hz());
    if !(range_m >= 0.0 && range_m < max_range) {
        return Err(Error::OutOfRange(format!("range {range_m} m outside [0, {max_range:.1}) m")));
    }
    let mf = (ds.num_freq * zero_pad) as f64;
    let delay_step = 1.0 / (mf * ds.freq_step_hz());
    let tau = (2.0 * range_m / SPEED_OF_LIGHT / delay_step).round() * delay_step;

    let wf = window.coefficients(ds.num_freq);
    let wf_sum: f64 = wf.iter().sum();
    let kernel: Vec<Complex64> =
        (0..ds.num_freq).map(|j| Complex64::from_polar(wf[j] / wf_sum, -2.0 * PI * ds.baseband_freq(j) * tau)).collect();

    let k = ds.element_count;
    let (times, weights): (Vec<usize>, Vec<Complex64>) = match velocity_hint_mps {
        None => (vec![0], vec![Complex64::new(1.0, 0.0)]),
        Some(v) => {
            let nu = 2.0 * v / ds.wavelength();
            let wt = window.coefficients(ds.num_time);
            let wt_sum: f64 = wt.iter().sum();
            (0..ds.num_time).map(|i| (i, Complex64::from_polar(wt[i] / wt_sum, -2.0 * PI * nu * i as f64 * ds.dt_s))).unzip()
        }
    };

    let mut out = vec![Complex64::new(0.0, 0.0); k];
    let mut row = vec![Complex64::new(0.0, 0.0); k];
    for (&t, wt) in times.iter().zip(&weights) {
        row.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        let base = ds.index(t, 0, 0);
        for (f, kf) in kernel.iter().enumerate() {
            let cell = &ds.values[base + f * k..base + (f + 1) * k];
            for (acc, x) in row.iter_mut().zip(cell) {
                *acc += x * kf;
            }
        }
        for (o, r) in out.iter_mut().zip(&row) {
            *o += r * wt;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SteeringModel {
    OneWay,
    TwoWay,
}

impl SteeringModel {
    pub fn name(&self) -> &'static str {
        match self {
            SteeringModel::OneWay => "one-way",
            SteeringModel::TwoWay => "two-way",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "one-way" => Some(SteeringModel::OneWay),
            "two-way" => Some(SteeringModel::TwoWay),
            _ => None,
        }
    }
}

/// Elevation/azimuth scan grid, inclusive bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSector {
    pub elevation_min_deg: f64,
    pub elevation_max_deg: f64,
    pub azimuth_min_deg: f64,
    pub azimuth_max_deg: f64,
    pub step_deg: f64,
}

impl Default for ScanSector {
    fn default() -> Self {
        Self { elevation_min_deg: -60.0, elevation_max_deg: 60.0, azimuth_min_deg: -60.0, azimuth_max_deg: 60.0, step_deg: 1.0 }
    }
}

impl ScanSector {
    pub fn with_step(step_deg: f64) -> Self {
        Self { step_deg, ..Self::default() }
    }

    fn count(min: f64, max: f64, step: f64) -> usize {
        ((max - min) / step + 1e-9).floor() as usize + 1
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_deg > 0.0 && self.step_deg.is_finite()) {
            return Err(Error::Parameter(format!("grid step must be positive, got {}", self.step_deg)));
        }
        if !(self.elevation_min_deg <= self.elevation_max_deg && self.azimuth_min_deg <= self.azimuth_max_deg) {
            return Err(Error::Parameter("scan sector bounds are inverted".into()));
        }
        Direction::new(self.elevation_min_deg, self.azimuth_min_deg)?;
        Direction::new(self.elevation_max_deg, self.azimuth_max_deg)?;
        Ok(())
    }
}

/// Power angular spectrum over an elevation x azimuth grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PasGrid {
    /// Row-major `n_elevation x n_azimuth`.
    pub power: Vec<f64>,
    pub n_elevation: usize,
    pub n_azimuth: usize,
    pub elevation_start_deg: f64,
    pub azimuth_start_deg: f64,
    pub grid_step_deg: f64,
}

impl PasGrid {
    pub fn elevation_at(&self, i: usize) -> f64 {
        self.elevation_start_deg + i as f64 * self.grid_step_deg
    }

    pub fn azimuth_at(&self, j: usize) -> f64 {
        self.azimuth_start_deg + j as f64 * self.grid_step_deg
    }

    pub fn at(&self, el: usize, az: usize) -> f64 {
        self.power[el * self.n_azimuth + az]
    }

    /// Sum-normalized view; an all-zero grid stays zero.
    pub fn normalized(&self) -> Vec<f64> {
        let total: f64 = self.power.iter().sum();
        if total > 0.0 {
            self.power.iter().map(|p| p / total).collect()
        } else {
            self.power.clone()
        }
    }

    /// Grid maximum; ties go to the lower elevation, then lower azimuth.
    pub fn peak(&self) -> AnglePeak {
        let (mut bi, mut bv) = (0, f64::NEG_INFINITY);
        for (i, &v) in self.power.iter().enumerate() {
            if v > bv {
                bi = i;
                bv = v;
            }
        }
        AnglePeak {
            elevation_deg: self.elevation_at(bi / self.n_azimuth),
            azimuth_deg: self.azimuth_at(bi % self.n_azimuth),
            power_db: to_db(bv),
        }
    }

    /// Greedy local maxima in dB with square exclusion zones (no sub-bin refinement).
    pub fn detect_peaks(&self, max_peaks: usize, min_separation_bins: usize, floor_db: f64) -> Vec<AnglePeak> {
        let db: Vec<f64> = self.power.iter().map(|&p| to_db(p)).collect();
        grid_peaks(&db, self.n_elevation, self.n_azimuth, false, max_peaks.max(1), min_separation_bins.max(1), floor_db)
            .into_iter()
            .map(|p| AnglePeak {
                elevation_deg: self.elevation_at(p.row),
                azimuth_deg: self.azimuth_at(p.col),
                power_db: db[p.row * self.n_azimuth + p.col],
            })
            .collect()
    }

    fn same_grid(&self, other: &Self) -> bool {
        self.n_elevation == other.n_elevation
            && self.n_azimuth == other.n_azimuth
            && (self.elevation_start_deg - other.elevation_start_deg).abs() < 1e-9
            && (self.azimuth_start_deg - other.azimuth_start_deg).abs() < 1e-9
            && (self.grid_step_deg - other.grid_step_deg).abs() < 1e-9
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# el_start={:.9e},el_step={:.9e},az_start={:.9e},az_step={:.9e}",
            self.elevation_start_deg, self.grid_step_deg, self.azimuth_start_deg, self.grid_step_deg
        )?;
        for i in 0..self.n_elevation {
            let row: Vec<String> = (0..self.n_azimuth).map(|j| format!("{:.9e}", self.at(i, j))).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Bartlett scan `P(Θ) = |a_s(Θ)ᴴ h|² / K²`.
pub fn bartlett_pas(h: &[Complex64], geom: &UpaGeometry, sector: &ScanSector, steering: SteeringModel, carrier_hz: f64) -> Result<PasGrid> {
    sector.validate()?;
    let k = geom.element_count();
    if h.len() != k {
        return Err(Error::Dimension(format!("CIR has {} entries, array has {k} elements", h.len())));
    }
    let n_el = ScanSector::count(sector.elevation_min_deg, sector.elevation_max_deg, sector.step_deg);
    let n_az = ScanSector::count(sector.azimuth_min_deg, sector.azimuth_max_deg, sector.step_deg);
    let mut power = Vec::with_capacity(n_el * n_az);
    let k2 = (k * k) as f64;
    for i in 0..n_el {
        let el = sector.elevation_min_deg + i as f64 * sector.step_deg;
        for j in 0..n_az {
            let az = sector.azimuth_min_deg + j as f64 * sector.step_deg;
            let mut a = geom.steering_vector(Direction::new(el, az)?, carrier_hz)?;
            if steering == SteeringModel::TwoWay {
                a.iter_mut().for_each(|z| *z = *z * *z);
            }
            let inner: Complex64 = a.iter().zip(h).map(|(s, x)| s.conj() * x).sum();
            power.push(inner.norm_sqr() / k2);
        }
    }
    Ok(PasGrid {
        power,
        n_elevation: n_el,
        n_azimuth: n_az,
        elevation_start_deg: sector.elevation_min_deg,
        azimuth_start_deg: sector.azimuth_min_deg,
        grid_step_deg: sector.step_deg,
    })
}

/// PAS similarity percentage: `(1 − ½·Σ|p̂1 − p̂2|)·100` on sum-normalized grids.
pub fn psp(p1: &PasGrid, p2: &PasGrid) -> Result<f64> {
    if !p1.same_grid(p2) {
        return Err(Error::Dimension("PAS grids differ".into()));
    }
    let (s1, s2): (f64, f64) = (p1.power.iter().sum(), p2.power.iter().sum());
    if !(s1 > 0.0 && s2 > 0.0) {
        return Err(Error::Parameter("PAS grid carries no power".into()));
    }
    let tv: f64 = p1.power.iter().zip(&p2.power).map(|(a, b)| (a / s1 - b / s2).abs()).sum::<f64>() * 0.5;
    Ok(((1.0 - tv) * 100.0).clamp(0.0, 100.0))
}

/// One detected target in one snapshot, with its absolute power in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainObservation {
    pub range_m: f64,
    pub velocity_mps: f64,
    pub power_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotObservations {
    pub targets: Vec<TargetState>,
    pub observations: Vec<GainObservation>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainEstimate {
    /// `pairing[s][n]` is the observation index paired with target `n` of snapshot `s`.
    pub pairing: Vec<Vec<Option<usize>>>,
    /// `gains_db[s][n]`, re-referenced so the strongest observation sits at the strongest configured gain.
    pub gains_db: Vec<Vec<Option<f64>>>,
    pub warnings: Vec<String>,
}

/// Axis scales for nearest-neighbour pairing of detections to targets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairingScale {
    pub range_bin_m: f64,
    pub velocity_bin_mps: f64,
    /// Period of the velocity axis; differences wrap when set.
    pub velocity_span_mps: Option<f64>,
}

impl PairingScale {
    fn distance(&self, t: &TargetState, o: &GainObservation) -> f64 {
        let dr = (t.range_m - o.range_m) / self.range_bin_m;
        let mut dv = t.radial_velocity_mps - o.velocity_mps;
        if let Some(span) = self.velocity_span_mps {
            dv = (dv + span / 2.0).rem_euclid(span) - span / 2.0;
        }
        let dv = dv / self.velocity_bin_mps;
        (dr * dr + dv * dv).sqrt()
    }
}

/// Greedy nearest-neighbour pairing in (range, velocity), closest pairs first.
pub fn pair_observations(targets: &[TargetState], observations: &[GainObservation], scale: &PairingScale) -> Vec<Option<usize>> {
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for (n, t) in targets.iter().enumerate() {
        for (m, o) in observations.iter().enumerate() {
            candidates.push((scale.distance(t, o), n, m));
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut pairing = vec![None; targets.len()];
    let mut used = vec![false; observations.len()];
    for (_, n, m) in candidates {
        if pairing[n].is_none() && !used[m] {
            pairing[n] = Some(m);
            used[m] = true;
        }
    }
    pairing
}

pub fn normalized_gain_estimate(snapshots: &[SnapshotObservations], scale: &PairingScale) -> Result<GainEstimate> {
    let total: usize = snapshots.iter().map(|s| s.observations.len()).sum();
    if total == 0 {
        return Err(Error::Parameter("no peaks to estimate gains from".into()));
    }
    let mut warnings = Vec::new();
    let pairing: Vec<Vec<Option<usize>>> = snapshots
        .iter()
        .enumerate()
        .map(|(s, snap)| {
            if snap.targets.len() != snap.observations.len() {
                warnings.push(format!(
                    "snapshot {s}: {} targets but {} peaks; pairing is best-effort",
                    snap.targets.len(),
                    snap.observations.len()
                ));
            }
            pair_observations(&snap.targets, &snap.observations, scale)
        })
        .collect();
    let strongest_observed = snapshots.iter().flat_map(|s| s.observations.iter().map(|o| o.power_db)).fold(f64::NEG_INFINITY, f64::max);
    let strongest_configured = snapshots.iter().flat_map(|s| s.targets.iter().map(|t| t.gain_db)).fold(f64::NEG_INFINITY, f64::max);
    let reference = if strongest_configured.is_finite() { strongest_configured } else { 0.0 };
    let gains_db = snapshots
        .iter()
        .zip(&pairing)
        .map(|(snap, pairs)| pairs.iter().map(|p| p.map(|m| snap.observations[m].power_db - strongest_observed + reference)).collect())
        .collect();
    Ok(GainEstimate { pairing, gains_db, warnings })
}
