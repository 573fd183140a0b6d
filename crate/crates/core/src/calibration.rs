//! ON-OFF measurement of the transfer matrix, calibration-matrix inversion,
//! APM weight quantization and wireless-cable isolation scoring.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{inverse_residual, ComplexMatrix, LuDecomposition};

/// Isolation values are clipped here so reports never carry infinities.
pub const ISOLATION_CAP_DB: f64 = 160.0;

/// Residual bound a calibration matrix has to meet.
pub const CALIBRATION_RESIDUAL_LIMIT: f64 = 1e-8;

/// Additive i.i.d. circular complex Gaussian error on the measured matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementErrorModel {
    /// Error level relative to the rms entry modulus of `C`; `None` means error-free.
    pub relative_error_db: Option<f64>,
    pub seed: u64,
}

impl MeasurementErrorModel {
    pub fn none() -> Self {
        Self { relative_error_db: None, seed: 0 }
    }

    pub fn new(relative_error_db: f64, seed: u64) -> Result<Self> {
        if !(relative_error_db <= 0.0) {
            return Err(Error::Parameter(format!("relative_error_db must be <= 0, got {relative_error_db}")));
        }
        Ok(Self { relative_error_db: Some(relative_error_db), seed })
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

/// Phase shifter resolution and optional amplitude stepping of the APM network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizationModel {
    pub phase_bits: u32,
    /// Amplitude step in dB; `0` leaves magnitudes untouched.
    pub amplitude_step_db: f64,
}

impl Default for QuantizationModel {
    fn default() -> Self {
        Self { phase_bits: 10, amplitude_step_db: 0.0 }
    }
}

impl QuantizationModel {
    pub fn new(phase_bits: u32, amplitude_step_db: f64) -> Result<Self> {
        if phase_bits == 0 || phase_bits > 52 {
            return Err(Error::Parameter(format!("phase_bits must be in 1..=52, got {phase_bits}")));
        }
        if !(amplitude_step_db >= 0.0 && amplitude_step_db.is_finite()) {
            return Err(Error::Parameter(format!("amplitude_step_db must be >= 0, got {amplitude_step_db}")));
        }
        Ok(Self { phase_bits, amplitude_step_db })
    }

    pub fn phase_step(&self) -> f64 {
        2.0 * PI / (1u64 << self.phase_bits) as f64
    }

    pub fn quantize(&self, z: Complex64) -> Complex64 {
        let mag = z.norm();
        if mag == 0.0 {
            return z;
        }
        let step = self.phase_step();
        let phase = (z.arg() / step).round() * step;
        let mag = if self.amplitude_step_db > 0.0 {
            let db = 20.0 * mag.log10();
            10f64.powf((db / self.amplitude_step_db).round() * self.amplitude_step_db / 20.0)
        } else {
            mag
        };
        Complex64::from_polar(mag, phase)
    }
}

pub fn quantize_weights(w: &[Complex64], q: &QuantizationModel) -> Vec<Complex64> {
    w.iter().map(|&z| q.quantize(z)).collect()
}

pub fn quantize_matrix(m: &ComplexMatrix, q: &QuantizationModel) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.rows(), m.cols(), |i, j| q.quantize(m[(i, j)]))
}

/// `Ĉ = C + E`, with `E` entries of standard deviation `rms(|C|)·10^(dB/20)`.
pub fn simulate_onoff_measurement(c: &ComplexMatrix, err: &MeasurementErrorModel) -> Result<ComplexMatrix> {
    if !c.is_square() {
        return Err(Error::Dimension(format!("transfer matrix must be square, got {}x{}", c.rows(), c.cols())));
    }
    let Some(db) = err.relative_error_db else {
        return Ok(c.clone());
    };
    let sigma = c.rms_modulus() * 10f64.powf(db / 20.0);
    // Each quadrature carries half the variance.
    let s = sigma * std::f64::consts::FRAC_1_SQRT_2;
    let mut rng = ChaCha8Rng::seed_from_u64(err.seed);
    let e = ComplexMatrix::from_fn(c.rows(), c.cols(), |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(re * s, im * s)
    });
    c.add(&e)
}

/// `Ĉ⁻¹` with `‖Ĉ·Ĉ⁻¹ − I‖∞ ≤ 1e-8`; one round of iterative refinement is
/// applied when the plain LU inverse misses the bound.
pub fn invert_calibration(c_hat: &ComplexMatrix) -> Result<ComplexMatrix> {
    let lu = LuDecomposition::new(c_hat)?;
    let mut inv = lu.inverse();
    let mut residual = inverse_residual(c_hat, &inv)?;
    if residual > CALIBRATION_RESIDUAL_LIMIT && residual.is_finite() {
        // X ← X + X·(I − Ĉ·X)
        let n = c_hat.rows();
        let r = ComplexMatrix::identity(n).sub(&c_hat.matmul(&inv)?)?;
        inv = inv.add(&inv.matmul(&r)?)?;
        residual = inverse_residual(c_hat, &inv)?;
    }
    if !(residual <= CALIBRATION_RESIDUAL_LIMIT) {
        return Err(Error::Singular(format!("calibration residual {residual:.3e} exceeds 1e-8")));
    }
    Ok(inv)
}

/// Link isolation of the established wireless cables, from `P = C·calib`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsolationReport {
    pub product_matrix: ComplexMatrix,
    /// Row-major `K x K`; entry `(i, j)` is `20·log10(|P_ii|/|P_ij|)`, diagonal at the cap.
    pub isolation_db: Vec<f64>,
    pub size: usize,
    pub mean_db: f64,
    pub min_db: f64,
}

impl IsolationReport {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.isolation_db[i * self.size + j]
    }

    /// `i,j,isolation_db` rows followed by a `# mean_db=..,min_db=..` summary line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "i,j,isolation_db")?;
        for i in 0..self.size {
            for j in 0..self.size {
                writeln!(w, "{i},{j},{:.6}", self.get(i, j))?;
            }
        }
        writeln!(w, "# mean_db={:.6},min_db={:.6}", self.mean_db, self.min_db)?;
        Ok(())
    }
}

pub fn isolation_report(c: &ComplexMatrix, calib: &ComplexMatrix) -> Result<IsolationReport> {
    let p = c.matmul(calib)?;
    if !p.is_square() {
        return Err(Error::Dimension(format!("C·calib is {}x{}, expected square", p.rows(), p.cols())));
    }
    let k = p.rows();
    let mut iso = vec![ISOLATION_CAP_DB; k * k];
    let mut sum = 0.0;
    let mut min = f64::INFINITY;
    let mut count = 0usize;
    for i in 0..k {
        let diag = p[(i, i)].norm();
        if diag == 0.0 {
            return Err(Error::DegenerateLink { link: i });
        }
        for j in (0..k).filter(|&j| j != i) {
            let off = p[(i, j)].norm();
            let v = if off == 0.0 { ISOLATION_CAP_DB } else { (20.0 * (diag / off).log10()).min(ISOLATION_CAP_DB) };
            iso[i * k + j] = v;
            sum += v;
            min = min.min(v);
            count += 1;
        }
    }
    let (mean_db, min_db) = if count == 0 { (ISOLATION_CAP_DB, ISOLATION_CAP_DB) } else { (sum / count as f64, min) };
    Ok(IsolationReport { product_matrix: p, isolation_db: iso, size: k, mean_db, min_db })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_sdd_matrix;
    use approx::assert_relative_eq;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn error_free_measurement_is_exact() {
        let c = random_sdd_matrix(6, &mut rng(1));
        assert_eq!(simulate_onoff_measurement(&c, &MeasurementErrorModel::none()).unwrap(), c);
    }

    #[test]
    fn measurement_is_seed_deterministic() {
        let c = random_sdd_matrix(8, &mut rng(2));
        let m = MeasurementErrorModel::new(-30.0, 42).unwrap();
        let a = simulate_onoff_measurement(&c, &m).unwrap();
        let b = simulate_onoff_measurement(&c, &m).unwrap();
        assert_eq!(a, b);
        let other = simulate_onoff_measurement(&c, &m.with_seed(43)).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn error_level_matches_frobenius_ratio() {
        let c = random_sdd_matrix(32, &mut rng(5));
        let mut inside = 0;
        for seed in 0..1000 {
            let m = MeasurementErrorModel::new(-40.0, seed).unwrap();
            let e = simulate_onoff_measurement(&c, &m).unwrap().sub(&c).unwrap();
            let ratio = e.norm_fro() / c.norm_fro();
            if ratio > 0.005 && ratio < 0.02 {
                inside += 1;
            }
        }
        assert!(inside as f64 / 1000.0 > 0.99, "{inside}");
    }

    #[test]
    fn positive_error_level_rejected() {
        assert!(MeasurementErrorModel::new(3.0, 0).is_err());
        assert!(QuantizationModel::new(0, 0.0).is_err());
        assert!(QuantizationModel::new(10, -1.0).is_err());
    }

    #[test]
    fn calibration_inverse_examples() {
        let id = ComplexMatrix::identity(4);
        assert_eq!(invert_calibration(&id).unwrap(), id);
        let d = ComplexMatrix::from_diag(&[Complex64::new(2.0, 0.0), Complex64::new(4.0, 0.0)]);
        let inv = invert_calibration(&d).unwrap();
        assert_relative_eq!(inv[(0, 0)].re, 0.5);
        assert_relative_eq!(inv[(1, 1)].re, 0.25);
        let m = random_sdd_matrix(32, &mut rng(9));
        let inv = invert_calibration(&m).unwrap();
        assert!(inverse_residual(&m, &inv).unwrap() <= 1e-8);
        let singular = ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[1.0, 1.0]]).unwrap();
        assert!(matches!(invert_calibration(&singular), Err(Error::Singular(_))));
    }

    #[test]
    fn phase_quantization_bounds() {
        let q = QuantizationModel::default();
        for k in 0..2000 {
            let z = Complex64::from_polar(0.3 + k as f64 * 1e-3, k as f64 * 0.0137 - 12.0);
            let w = q.quantize(z);
            let dphi = (w / z).arg().abs();
            assert!(dphi <= PI / 1024.0 + 1e-12, "{dphi}");
            assert_relative_eq!(w.norm(), z.norm(), max_relative = 1e-14);
        }
        assert_eq!(q.quantize(Complex64::new(0.0, 0.0)), Complex64::new(0.0, 0.0));
        let amp = QuantizationModel::new(10, 0.5).unwrap();
        assert_eq!(amp.quantize(Complex64::new(0.0, 0.0)), Complex64::new(0.0, 0.0));
        let z = amp.quantize(Complex64::new(1.1, 0.0));
        let db = 20.0 * z.norm().log10();
        assert_relative_eq!(db, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn exact_inverse_isolation_hits_cap() {
        let c = random_sdd_matrix(16, &mut rng(4));
        let inv = c.inverse().unwrap();
        let r = isolation_report(&c, &inv).unwrap();
        assert!(r.min_db >= 120.0);
        let r = isolation_report(&ComplexMatrix::identity(3), &ComplexMatrix::identity(3)).unwrap();
        assert_eq!(r.min_db, ISOLATION_CAP_DB);
        assert_eq!(r.mean_db, ISOLATION_CAP_DB);
        assert!(r.mean_db >= r.min_db);
    }

    #[test]
    fn isolation_is_ratio_of_row_entries() {
        let c = ComplexMatrix::from_real_rows(&[&[1.0, 0.1], &[0.01, 1.0]]).unwrap();
        let r = isolation_report(&c, &ComplexMatrix::identity(2)).unwrap();
        assert_relative_eq!(r.get(0, 1), 20.0, epsilon = 1e-12);
        assert_relative_eq!(r.get(1, 0), 40.0, epsilon = 1e-12);
        assert_relative_eq!(r.mean_db, 30.0, epsilon = 1e-12);
        assert_relative_eq!(r.min_db, 20.0, epsilon = 1e-12);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("i,j,isolation_db\n0,0,160.000000\n0,1,20.000000\n"));
        assert!(text.ends_with("# mean_db=30.000000,min_db=20.000000\n"));
    }

    #[test]
    fn zero_diagonal_is_degenerate() {
        let c = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        assert!(matches!(isolation_report(&c, &ComplexMatrix::identity(2)), Err(Error::DegenerateLink { link: 0 })));
    }

    #[test]
    fn isolation_invariant_to_reciprocal_scaling() {
        let c = random_sdd_matrix(8, &mut rng(6));
        let c_hat = simulate_onoff_measurement(&c, &MeasurementErrorModel::new(-30.0, 1).unwrap()).unwrap();
        let calib = invert_calibration(&c_hat).unwrap();
        let base = isolation_report(&c, &calib).unwrap();
        let alpha = Complex64::new(-2.5, 0.7);
        let scaled = isolation_report(&c.scale(alpha), &calib.scale(alpha.inv())).unwrap();
        for (a, b) in base.isolation_db.iter().zip(&scaled.isolation_db) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
