//! Planar array geometry, element patterns, steering vectors and the
//! near-field probe-to-DUT transfer matrix.
//!
//! Coordinates follow the test-scenario convention: the DUT array center is
//! the origin, its boresight is `+y`, azimuth grows toward `+x` and elevation
//! toward `+z`. Element lattices use a horizontal axis obtained by projecting
//! `+x` onto the array plane and a vertical axis obtained from `+z`, so two
//! identical arrays facing each other are mirror-aligned: element `k` of one
//! sits directly across from element `k` of the other.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub type Vec3 = [f64; 3];

pub fn wavelength(freq_hz: f64) -> f64 {
    SPEED_OF_LIGHT / freq_hz
}

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn add_scaled(a: Vec3, b: Vec3, s: f64) -> Vec3 {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]]
}

fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

fn normalize(a: Vec3) -> Vec3 {
    let n = norm(a);
    [a[0] / n, a[1] / n, a[2] / n]
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Angle in degrees between two non-zero vectors.
fn angle_deg(a: Vec3, b: Vec3) -> f64 {
    (dot(a, b) / (norm(a) * norm(b))).clamp(-1.0, 1.0).acos().to_degrees()
}

/// A direction seen from the DUT array center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    pub elevation_deg: f64,
    pub azimuth_deg: f64,
}

impl Direction {
    pub fn new(elevation_deg: f64, azimuth_deg: f64) -> Result<Self> {
        if !(-90.0..=90.0).contains(&elevation_deg) {
            return Err(Error::Parameter(format!("elevation {elevation_deg} outside [-90, 90]")));
        }
        if !(-180.0..=180.0).contains(&azimuth_deg) {
            return Err(Error::Parameter(format!("azimuth {azimuth_deg} outside [-180, 180]")));
        }
        Ok(Self { elevation_deg, azimuth_deg })
    }

    pub fn broadside() -> Self {
        Self { elevation_deg: 0.0, azimuth_deg: 0.0 }
    }

    /// Unit vector `(cos θ sin φ, cos θ cos φ, sin θ)`.
    pub fn unit_vector(&self) -> Vec3 {
        let (el, az) = (self.elevation_deg.to_radians(), self.azimuth_deg.to_radians());
        [el.cos() * az.sin(), el.cos() * az.cos(), el.sin()]
    }
}

/// Cosine-power element pattern with a floor for back-hemisphere leakage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiationPattern {
    pub exponent_q: f64,
    pub floor_gain: f64,
}

impl RadiationPattern {
    /// Narrow, waveguide-like element.
    pub const WAVEGUIDE: Self = Self { exponent_q: 14.0, floor_gain: 0.01 };
    /// Wide, patch-like element.
    pub const PATCH: Self = Self { exponent_q: 2.0, floor_gain: 0.01 };

    pub fn new(exponent_q: f64, floor_gain: f64) -> Result<Self> {
        if !(exponent_q >= 0.0 && exponent_q.is_finite()) {
            return Err(Error::Parameter(format!("pattern exponent {exponent_q} must be >= 0")));
        }
        if !(0.0..=1.0).contains(&floor_gain) {
            return Err(Error::Parameter(format!("pattern floor {floor_gain} must be in [0, 1]")));
        }
        Ok(Self { exponent_q, floor_gain })
    }

    /// Amplitude gain at `off_boresight_deg` in `[0, 180]`.
    pub fn gain(&self, off_boresight_deg: f64) -> f64 {
        if off_boresight_deg >= 90.0 {
            return self.floor_gain;
        }
        let c = off_boresight_deg.to_radians().cos().max(0.0);
        c.powf(self.exponent_q).max(self.floor_gain)
    }

    /// Off-boresight angle at which the amplitude drops to `2^(-1/2)`.
    pub fn half_power_angle_deg(&self) -> f64 {
        2f64.powf(-1.0 / (2.0 * self.exponent_q)).acos().to_degrees()
    }
}

pub fn pattern_gain(p: &RadiationPattern, off_boresight_deg: f64) -> f64 {
    p.gain(off_boresight_deg)
}

/// One radiating element with its own boresight and pattern.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayElement {
    pub position: Vec3,
    pub boresight: Vec3,
    pub pattern: RadiationPattern,
}

/// Uniform planar array: `rows` along the vertical axis, `cols` along the horizontal one.
#[derive(Debug, Clone, PartialEq)]
pub struct UpaGeometry {
    pub rows: usize,
    pub cols: usize,
    pub spacing_m: f64,
    pub center_m: Vec3,
    pub boresight: Vec3,
    pub pattern: RadiationPattern,
}

impl UpaGeometry {
    pub fn new(rows: usize, cols: usize, spacing_m: f64, center_m: Vec3, boresight: Vec3, pattern: RadiationPattern) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Geometry(format!("array must have at least one element, got {rows}x{cols}")));
        }
        if !(spacing_m > 0.0 && spacing_m.is_finite()) {
            return Err(Error::Geometry(format!("spacing_m must be positive, got {spacing_m}")));
        }
        let n = norm(boresight);
        if !(n.is_finite() && (n - 1.0).abs() < 1e-9) {
            return Err(Error::Geometry(format!("boresight must be a unit vector, |b| = {n}")));
        }
        if center_m.iter().any(|x| !x.is_finite()) {
            return Err(Error::Geometry("center_m must be finite".into()));
        }
        Ok(Self { rows, cols, spacing_m, center_m, boresight, pattern })
    }

    /// DUT-style array at the origin facing `+y`.
    pub fn at_origin(rows: usize, cols: usize, spacing_m: f64, pattern: RadiationPattern) -> Result<Self> {
        Self::new(rows, cols, spacing_m, [0.0; 3], [0.0, 1.0, 0.0], pattern)
    }

    /// Identical array placed `standoff_m` in front of `self`, facing back at it.
    pub fn facing(&self, standoff_m: f64) -> Result<Self> {
        if !(standoff_m > 0.0) {
            return Err(Error::Geometry(format!("standoff must be positive, got {standoff_m}")));
        }
        let b = self.boresight;
        Self::new(self.rows, self.cols, self.spacing_m, add_scaled(self.center_m, b, standoff_m), [-b[0], -b[1], -b[2]], self.pattern)
    }

    pub fn with_center(&self, center_m: Vec3) -> Self {
        Self { center_m, ..self.clone() }
    }

    pub fn element_count(&self) -> usize {
        self.rows * self.cols
    }

    /// In-plane (horizontal, vertical) unit axes.
    pub fn lattice_axes(&self) -> (Vec3, Vec3) {
        let b = self.boresight;
        let x = [1.0, 0.0, 0.0];
        let z = [0.0, 0.0, 1.0];
        let h = if dot(x, b).abs() > 1.0 - 1e-9 {
            normalize(add_scaled([0.0, 1.0, 0.0], b, -b[1]))
        } else {
            normalize(add_scaled(x, b, -dot(x, b)))
        };
        let vz = add_scaled(add_scaled(z, b, -dot(z, b)), h, -dot(z, h));
        let v = if norm(vz) < 1e-9 { cross(b, h) } else { normalize(vz) };
        (h, v)
    }

    /// Element positions, row-major with row 0 at the bottom and column 0 on the
    /// negative horizontal side. The centroid is `center_m`.
    pub fn element_positions(&self) -> Vec<Vec3> {
        let (h, v) = self.lattice_axes();
        let row_mid = (self.rows as f64 - 1.0) / 2.0;
        let col_mid = (self.cols as f64 - 1.0) / 2.0;
        let mut out = Vec::with_capacity(self.element_count());
        for r in 0..self.rows {
            for c in 0..self.cols {
                let dv = (r as f64 - row_mid) * self.spacing_m;
                let dh = (c as f64 - col_mid) * self.spacing_m;
                out.push(add_scaled(add_scaled(self.center_m, h, dh), v, dv));
            }
        }
        out
    }

    pub fn elements(&self) -> Vec<ArrayElement> {
        self.element_positions()
            .into_iter()
            .map(|position| ArrayElement { position, boresight: self.boresight, pattern: self.pattern })
            .collect()
    }

    /// One-way steering vector, `exp(+j·2π/λ·⟨p_k − center, u⟩)`.
    pub fn steering_vector(&self, dir: Direction, freq_hz: f64) -> Result<Vec<Complex64>> {
        if !(freq_hz > 0.0 && freq_hz.is_finite()) {
            return Err(Error::Parameter(format!("frequency must be positive, got {freq_hz}")));
        }
        let k = 2.0 * PI / wavelength(freq_hz);
        let u = dir.unit_vector();
        Ok(self.element_positions().into_iter().map(|p| Complex64::from_polar(1.0, k * dot(sub(p, self.center_m), u))).collect())
    }

    /// Copies of this array tiled edge to edge into a `tile_rows x tile_cols`
    /// virtual aperture centred on `center_m`, ordered row-major (bottom-left first).
    pub fn tiled_positions(&self, tile_rows: usize, tile_cols: usize) -> Vec<UpaGeometry> {
        let (h, v) = self.lattice_axes();
        let tile_w = self.cols as f64 * self.spacing_m;
        let tile_h = self.rows as f64 * self.spacing_m;
        let mut out = Vec::with_capacity(tile_rows * tile_cols);
        for tr in 0..tile_rows {
            for tc in 0..tile_cols {
                let dh = (tc as f64 - (tile_cols as f64 - 1.0) / 2.0) * tile_w;
                let dv = (tr as f64 - (tile_rows as f64 - 1.0) / 2.0) * tile_h;
                out.push(self.with_center(add_scaled(add_scaled(self.center_m, h, dh), v, dv)));
            }
        }
        out
    }
}

pub fn element_positions(geom: &UpaGeometry) -> Vec<Vec3> {
    geom.element_positions()
}

pub fn steering_vector(geom: &UpaGeometry, dir: Direction, freq_hz: f64) -> Result<Vec<Complex64>> {
    geom.steering_vector(dir, freq_hz)
}

/// Element-wise square of the one-way steering vector (monostatic round trip).
pub fn two_way_steering_vector(geom: &UpaGeometry, dir: Direction, freq_hz: f64) -> Result<Vec<Complex64>> {
    Ok(geom.steering_vector(dir, freq_hz)?.into_iter().map(|a| a * a).collect())
}

/// Transfer matrix between DUT elements (rows) and probe elements (columns):
/// `c_ij = g_dut(α_ij)·g_probe(β_ij)·λ/(4π d_ij)·exp(−j 2π d_ij/λ)`.
pub fn synthesize_between(dut: &[ArrayElement], probe: &[ArrayElement], freq_hz: f64) -> Result<ComplexMatrix> {
    if !(freq_hz > 0.0 && freq_hz.is_finite()) {
        return Err(Error::Parameter(format!("frequency must be positive, got {freq_hz}")));
    }
    if dut.is_empty() || probe.is_empty() {
        return Err(Error::Geometry("empty element list".into()));
    }
    let lambda = wavelength(freq_hz);
    let min_distance = lambda / 10.0;
    let mut data = Vec::with_capacity(dut.len() * probe.len());
    for (i, d) in dut.iter().enumerate() {
        for (j, p) in probe.iter().enumerate() {
            let r = sub(p.position, d.position);
            let dist = norm(r);
            if dist < min_distance {
                return Err(Error::Geometry(format!(
                    "DUT element {i} and probe element {j} are {dist:.4e} m apart, below lambda/10 = {min_distance:.4e} m"
                )));
            }
            let alpha = angle_deg(d.boresight, r);
            let beta = angle_deg(p.boresight, [-r[0], -r[1], -r[2]]);
            let amp = d.pattern.gain(alpha) * p.pattern.gain(beta) * lambda / (4.0 * PI * dist);
            data.push(Complex64::from_polar(amp, -2.0 * PI * dist / lambda));
        }
    }
    ComplexMatrix::new(dut.len(), probe.len(), data)
}

pub fn synthesize_transfer_matrix(dut: &UpaGeometry, probe: &UpaGeometry, freq_hz: f64) -> Result<ComplexMatrix> {
    if dut.element_count() != probe.element_count() {
        return Err(Error::Dimension(format!("DUT has {} elements, probe has {}", dut.element_count(), probe.element_count())));
    }
    synthesize_between(&dut.elements(), &probe.elements(), freq_hz)
}

/// Stitches a square grid of equally sized square blocks into one matrix;
/// block `(r, c)` lands at rows `rK..rK+K`, columns `cK..cK+K`.
pub fn assemble_synthetic_matrix(blocks: &[Vec<ComplexMatrix>]) -> Result<ComplexMatrix> {
    let grid = blocks.len();
    if grid == 0 {
        return Err(Error::Dimension("no blocks".into()));
    }
    let k = blocks[0].first().map(|b| b.rows()).unwrap_or(0);
    for (r, row) in blocks.iter().enumerate() {
        if row.len() != grid {
            return Err(Error::Dimension(format!("block row {r} has {} blocks, expected {grid}", row.len())));
        }
        for (c, b) in row.iter().enumerate() {
            if b.rows() != k || b.cols() != k {
                return Err(Error::Dimension(format!("block ({r}, {c}) is {}x{}, expected {k}x{k}", b.rows(), b.cols())));
            }
        }
    }
    let n = grid * k;
    Ok(ComplexMatrix::from_fn(n, n, |i, j| blocks[i / k][j / k][(i % k, j % k)]))
}

/// Synthesizes the full transfer matrix between two tiled virtual apertures
/// block by block: block `(r, c)` pairs DUT position `r` with probe position `c`.
pub fn synthesize_blocks(dut_positions: &[UpaGeometry], probe_positions: &[UpaGeometry], freq_hz: f64) -> Result<Vec<Vec<ComplexMatrix>>> {
    dut_positions.iter().map(|d| probe_positions.iter().map(|p| synthesize_transfer_matrix(d, p, freq_hz)).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sdd_analysis;
    use approx::assert_relative_eq;

    const F: f64 = 3.5e9;

    fn half_wave() -> f64 {
        wavelength(F) / 2.0
    }

    #[test]
    fn single_element_sits_at_center() {
        let g = UpaGeometry::new(1, 1, 0.1, [0.3, -1.0, 2.0], [0.0, 1.0, 0.0], RadiationPattern::WAVEGUIDE).unwrap();
        assert_eq!(g.element_positions(), vec![[0.3, -1.0, 2.0]]);
    }

    #[test]
    fn lattice_extents_for_4x8() {
        let g = UpaGeometry::at_origin(4, 8, half_wave(), RadiationPattern::WAVEGUIDE).unwrap();
        let p = g.element_positions();
        let xs: Vec<f64> = p.iter().map(|q| q[0]).collect();
        let zs: Vec<f64> = p.iter().map(|q| q[2]).collect();
        let span = |v: &[f64]| v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min);
        assert_relative_eq!(span(&xs), 7.0 * half_wave(), epsilon = 1e-12);
        assert_relative_eq!(span(&zs), 3.0 * half_wave(), epsilon = 1e-12);
        assert!((span(&xs) - 0.2998).abs() < 1e-3);
        assert!((span(&zs) - 0.1285).abs() < 1e-3);
        // row 0 is the bottom row, column 0 is on the -x side
        assert!(p[0][0] < p[1][0] && p[0][2] < p[8][2]);
    }

    #[test]
    fn centroid_matches_center_for_tilted_array() {
        let b = normalize([0.3, 0.8, -0.2]);
        let g = UpaGeometry::new(3, 5, 0.02, [1.0, 2.0, 3.0], b, RadiationPattern::PATCH).unwrap();
        let p = g.element_positions();
        for axis in 0..3 {
            let mean = p.iter().map(|q| q[axis]).sum::<f64>() / p.len() as f64;
            assert_relative_eq!(mean, g.center_m[axis], epsilon = 1e-12);
        }
        // elements lie in the plane orthogonal to boresight
        for q in &p {
            assert!(dot(sub(*q, g.center_m), b).abs() < 1e-12);
        }
    }

    #[test]
    fn steering_examples() {
        let g = UpaGeometry::at_origin(4, 8, half_wave(), RadiationPattern::WAVEGUIDE).unwrap();
        for a in g.steering_vector(Direction::broadside(), F).unwrap() {
            assert_relative_eq!(a.re, 1.0, epsilon = 1e-15);
            assert_relative_eq!(a.im, 0.0, epsilon = 1e-15);
        }
        let pair = UpaGeometry::at_origin(1, 2, half_wave(), RadiationPattern::WAVEGUIDE).unwrap();
        let a = pair.steering_vector(Direction::new(0.0, 90.0).unwrap(), F).unwrap();
        let dphi = (a[1] / a[0]).arg().abs();
        assert_relative_eq!(dphi, PI, epsilon = 1e-12);
        assert!(g.steering_vector(Direction::broadside(), 0.0).is_err());
    }

    #[test]
    fn direction_validation() {
        assert!(Direction::new(91.0, 0.0).is_err());
        assert!(Direction::new(0.0, -181.0).is_err());
        assert!(Direction::new(-90.0, 180.0).is_ok());
    }

    #[test]
    fn pattern_half_power_angles() {
        let narrow = RadiationPattern::new(14.0, 0.0).unwrap();
        let wide = RadiationPattern::new(2.0, 0.0).unwrap();
        assert_eq!(narrow.gain(0.0), 1.0);
        let a14 = narrow.half_power_angle_deg();
        let a2 = wide.half_power_angle_deg();
        assert!((a14 - 12.7).abs() < 0.1, "{a14}");
        assert!((a2 - 32.8).abs() < 0.1, "{a2}");
        assert_relative_eq!(narrow.gain(a14), 0.5f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(wide.gain(a2), 0.5f64.sqrt(), epsilon = 1e-12);
        let floored = RadiationPattern::WAVEGUIDE;
        assert_eq!(floored.gain(120.0), 0.01);
        assert_eq!(floored.gain(89.0), 0.01);
        let mut last = 1.0;
        for deg in 0..=180 {
            let g = floored.gain(deg as f64);
            assert!(g <= last + 1e-15 && g >= floored.floor_gain);
            last = g;
        }
        assert!(RadiationPattern::new(-1.0, 0.0).is_err());
    }

    #[test]
    fn friis_term_for_single_pair() {
        let d = UpaGeometry::at_origin(1, 1, 0.01, RadiationPattern::WAVEGUIDE).unwrap();
        let p = d.facing(1.0).unwrap();
        let c = synthesize_transfer_matrix(&d, &p, F).unwrap();
        let lambda = wavelength(F);
        assert_relative_eq!(c[(0, 0)].norm(), lambda / (4.0 * PI), epsilon = 1e-15);
        assert!((c[(0, 0)].norm() - 6.816e-3).abs() < 1e-6);
        let expected = Complex64::from_polar(1.0, -2.0 * PI / lambda);
        assert!((c[(0, 0)] / c[(0, 0)].norm() - expected).norm() < 1e-9);
    }

    #[test]
    fn face_to_face_is_symmetric_and_sdd_at_1cm() {
        let d = UpaGeometry::at_origin(4, 8, half_wave(), RadiationPattern::WAVEGUIDE).unwrap();
        let p = d.facing(0.01).unwrap();
        let c = synthesize_transfer_matrix(&d, &p, F).unwrap();
        assert!(c.max_abs_diff(&c.transpose()).unwrap() < 1e-12);
        let r = sdd_analysis(&c).unwrap();
        assert!(r.is_sdd);
        assert_relative_eq!(r.d_max, r.d_min, max_relative = 1e-9);
    }

    #[test]
    fn reactive_near_field_is_rejected() {
        let d = UpaGeometry::at_origin(2, 2, half_wave(), RadiationPattern::WAVEGUIDE).unwrap();
        let p = d.facing(0.001).unwrap();
        assert!(matches!(synthesize_transfer_matrix(&d, &p, F), Err(Error::Geometry(_))));
        let small = UpaGeometry::at_origin(1, 2, half_wave(), RadiationPattern::WAVEGUIDE).unwrap();
        assert!(matches!(synthesize_transfer_matrix(&d, &small, F), Err(Error::Dimension(_))));
    }

    #[test]
    fn assembly_places_blocks() {
        let blocks: Vec<Vec<ComplexMatrix>> = (0..4).map(|_| (0..4).map(|_| ComplexMatrix::identity(2)).collect()).collect();
        let m = assemble_synthetic_matrix(&blocks).unwrap();
        assert_eq!((m.rows(), m.cols()), (8, 8));
        for i in 0..8 {
            for j in 0..8 {
                let expected = if i % 2 == j % 2 { 1.0 } else { 0.0 };
                assert_eq!(m[(i, j)].re, expected);
            }
        }
        let mut bad = blocks.clone();
        bad[3][3] = ComplexMatrix::identity(3);
        assert!(matches!(assemble_synthetic_matrix(&bad), Err(Error::Dimension(_))));
    }
}
