//! Dense complex linear algebra and conditioning diagnostics.
//!
//! The transfer matrix `C`, its measured counterpart `Ĉ`, and the calibration
//! matrix `Ĉ⁻¹` all live in [`ComplexMatrix`]. Besides the usual products and
//! an LU-based inverse, this module provides the two condition numbers used
//! throughout the lab (spectral and infinity-norm) and the strictly diagonally
//! dominant (SDD) analysis with the Ahlberg-Nilson-Varah inverse bound and the
//! epsilon-parameterized condition-number bound derived from it.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Singular values below this fraction of the largest one are treated as zero.
pub const SINGULAR_RATIO: f64 = 1e-14;

/// Maximum tolerated `‖M·M⁻¹ − I‖∞` before an inverse is rejected.
pub const INVERSE_RESIDUAL_LIMIT: f64 = 1e-6;

/// Dense complex matrix stored row-major. All entries are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!("matrix must be non-empty, got {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!("{rows}x{cols} matrix needs {} entries, got {}", rows * cols, data.len())));
        }
        if let Some(pos) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Parameter(format!("non-finite entry at ({}, {})", pos / cols, pos % cols)));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix must be non-empty");
        Self { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_diag(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    /// Builds a matrix from a closure. Panics if the closure yields a non-finite value.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data).expect("from_fn produced an invalid matrix")
    }

    /// Real-valued convenience constructor, row-major.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        let data = rows.iter().flat_map(|r| r.iter().map(|&x| Complex64::new(x, 0.0))).collect();
        Self::new(n_rows, n_cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, alpha: Complex64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * alpha).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension(format!("{}x{} vs {}x{}", self.rows, self.cols, other.rows, other.cols)));
        }
        Ok(())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!("cannot multiply {}x{} by {}x{}", self.rows, self.cols, other.rows, other.cols)));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows * other.cols];
        for i in 0..self.rows {
            let out_row = &mut out[i * other.cols..(i + 1) * other.cols];
            for (k, a) in self.row(i).iter().enumerate() {
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for (o, b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(Self { rows: self.rows, cols: other.cols, data: out })
    }

    /// `self · v` for a column vector `v`.
    pub fn mul_vec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.cols {
            return Err(Error::Dimension(format!("matrix has {} columns, vector has {} entries", self.cols, v.len())));
        }
        Ok((0..self.rows).map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum()).collect())
    }

    /// `vᵀ · self` for a row vector `v` (no conjugation).
    pub fn vec_mul(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.rows {
            return Err(Error::Dimension(format!("matrix has {} rows, vector has {} entries", self.rows, v.len())));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.cols];
        for (i, vi) in v.iter().enumerate() {
            for (o, m) in out.iter_mut().zip(self.row(i)) {
                *o += vi * m;
            }
        }
        Ok(out)
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows).map(|i| self.row(i).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Root-mean-square entry modulus, `‖M‖_F / sqrt(rows·cols)`.
    pub fn rms_modulus(&self) -> f64 {
        self.norm_fro() / ((self.rows * self.cols) as f64).sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    /// Copies out the `n_rows x n_cols` block starting at `(r0, c0)`.
    pub fn submatrix(&self, r0: usize, c0: usize, n_rows: usize, n_cols: usize) -> Result<Self> {
        if r0 + n_rows > self.rows || c0 + n_cols > self.cols || n_rows == 0 || n_cols == 0 {
            return Err(Error::Dimension(format!("block {n_rows}x{n_cols} at ({r0}, {c0}) exceeds {}x{}", self.rows, self.cols)));
        }
        Ok(Self::from_fn(n_rows, n_cols, |i, j| self[(r0 + i, c0 + j)]))
    }

    /// Inverse via LU with partial pivoting, followed by a residual check.
    pub fn inverse(&self) -> Result<Self> {
        let lu = LuDecomposition::new(self)?;
        let inv = lu.inverse();
        let residual = inverse_residual(self, &inv)?;
        if !residual.is_finite() || residual > INVERSE_RESIDUAL_LIMIT {
            return Err(Error::Singular(format!("inverse residual {residual:.3e} too large")));
        }
        Ok(inv)
    }

    /// Singular values in descending order (one-sided Jacobi).
    pub fn singular_values(&self) -> Vec<f64> {
        // Work on the tall orientation; singular values are transpose-invariant.
        let a = if self.rows >= self.cols { self.clone() } else { self.conj_transpose() };
        let (m, n) = (a.rows, a.cols);
        let mut cols: Vec<Vec<Complex64>> = (0..n).map(|j| a.column(j)).collect();

        for _sweep in 0..80 {
            let mut rotated = false;
            for p in 0..n {
                for q in p + 1..n {
                    let alpha: f64 = cols[p].iter().map(|z| z.norm_sqr()).sum();
                    let beta: f64 = cols[q].iter().map(|z| z.norm_sqr()).sum();
                    let gamma: Complex64 = cols[p].iter().zip(&cols[q]).map(|(x, y)| x.conj() * y).sum();
                    let g = gamma.norm();
                    if g == 0.0 || g <= 1e-15 * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    // Re-phase column q so the coupling is real, then apply a real rotation.
                    let phase = gamma.conj() / g;
                    let zeta = (beta - alpha) / (2.0 * g);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    let (left, right) = cols.split_at_mut(q);
                    for (x, y) in left[p].iter_mut().zip(right[0].iter_mut()) {
                        let yq = *y * phase;
                        let xp = *x;
                        *x = xp * c - yq * s;
                        *y = xp * s + yq * c;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
        debug_assert!(m >= n);
        let mut sv: Vec<f64> = cols.iter().map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    }

    /// Writes the `row,col,re,im` CSV dump.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "row,col,re,im")?;
        let mut line = String::new();
        for i in 0..self.rows {
            for j in 0..self.cols {
                let z = self[(i, j)];
                line.clear();
                let _ = writeln!(line, "{i},{j},{:.12e},{:.12e}", z.re, z.im);
                w.write_all(line.as_bytes())?;
            }
        }
        Ok(())
    }

    /// Parses the `row,col,re,im` CSV dump written by [`ComplexMatrix::write_csv`].
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut entries = Vec::new();
        let (mut rows, mut cols) = (0usize, 0usize);
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            if lineno == 0 {
                if line.trim() != "row,col,re,im" {
                    return Err(Error::Format(format!("unexpected header {line:?}")));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(Error::Format(format!("line {}: expected 4 fields", lineno + 1)));
            }
            let bad = |_| Error::Format(format!("line {}: bad number", lineno + 1));
            let i: usize = fields[0].trim().parse().map_err(|_| Error::Format(format!("line {}: bad row", lineno + 1)))?;
            let j: usize = fields[1].trim().parse().map_err(|_| Error::Format(format!("line {}: bad col", lineno + 1)))?;
            let re: f64 = fields[2].trim().parse().map_err(bad)?;
            let im: f64 = fields[3].trim().parse().map_err(bad)?;
            rows = rows.max(i + 1);
            cols = cols.max(j + 1);
            entries.push((i, j, Complex64::new(re, im)));
        }
        if entries.len() != rows * cols {
            return Err(Error::Format(format!("{} entries do not fill a {rows}x{cols} matrix", entries.len())));
        }
        let mut data = vec![Complex64::new(0.0, 0.0); rows * cols];
        for (i, j, z) in entries {
            data[i * cols + j] = z;
        }
        Self::new(rows, cols, data)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds");
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds");
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization `P·A = L·U` with partial (row) pivoting.
#[derive(Debug, Clone)]
pub struct LuDecomposition {
    n: usize,
    lu: Vec<Complex64>,
    perm: Vec<usize>,
}

impl LuDecomposition {
    pub fn new(a: &ComplexMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension(format!("LU needs a square matrix, got {}x{}", a.rows, a.cols)));
        }
        let n = a.rows;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.data.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return Err(Error::Singular("zero matrix".into()));
        }
        for k in 0..n {
            let (pivot_row, pivot_abs) =
                (k..n).map(|i| (i, lu[i * n + k].norm())).fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot_abs <= f64::EPSILON * scale * n as f64 {
                return Err(Error::Singular(format!("zero pivot in column {k}")));
            }
            if pivot_row != k {
                for j in 0..n {
                    lu.swap(k * n + j, pivot_row * n + j);
                }
                perm.swap(k, pivot_row);
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let factor = lu[i * n + k] / pivot;
                lu[i * n + k] = factor;
                if factor.re == 0.0 && factor.im == 0.0 {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[k * n + j];
                    lu[i * n + j] -= factor * u;
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    /// Solves `A·x = b`.
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let acc = row.iter().zip(&x[..i]).map(|(l, xj)| l * xj).sum::<Complex64>();
            x[i] -= acc;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n + i + 1..(i + 1) * n];
            let acc = x[i] - row.iter().zip(&x[i + 1..]).map(|(u, xj)| u * xj).sum::<Complex64>();
            x[i] = acc / self.lu[i * n + i];
        }
        x
    }

    pub fn inverse(&self) -> ComplexMatrix {
        let n = self.n;
        let mut inv = ComplexMatrix::zeros(n, n);
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            e.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            e[j] = Complex64::new(1.0, 0.0);
            for (i, v) in self.solve(&e).into_iter().enumerate() {
                inv[(i, j)] = v;
            }
        }
        inv
    }
}

/// `‖M·X − I‖∞`.
pub fn inverse_residual(m: &ComplexMatrix, x: &ComplexMatrix) -> Result<f64> {
    let prod = m.matmul(x)?;
    if !prod.is_square() {
        return Err(Error::Dimension("product is not square".into()));
    }
    Ok(prod.sub(&ComplexMatrix::identity(prod.rows))?.norm_inf())
}

fn require_square(m: &ComplexMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Dimension(format!("expected a square matrix, got {}x{}", m.rows, m.cols)));
    }
    Ok(())
}

/// `σ_max / σ_min`, or `+∞` when `σ_min < 1e-14·σ_max`.
pub fn spectral_condition_number(m: &ComplexMatrix) -> Result<f64> {
    require_square(m)?;
    let sv = m.singular_values();
    let (max, min) = (sv[0], *sv.last().unwrap());
    if max == 0.0 || min < SINGULAR_RATIO * max {
        return Ok(f64::INFINITY);
    }
    Ok(max / min)
}

/// `‖M‖∞ · ‖M⁻¹‖∞`.
pub fn infinity_condition_number(m: &ComplexMatrix) -> Result<f64> {
    require_square(m)?;
    let inv = m.inverse()?;
    Ok(m.norm_inf() * inv.norm_inf())
}

/// Diagonal-dominance diagnostics of a square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SddReport {
    pub is_sdd: bool,
    /// Worst ratio of off-diagonal row mass to the diagonal modulus; present iff SDD.
    pub epsilon: Option<f64>,
    pub d_max: f64,
    pub d_min: f64,
    /// Upper bound on `‖M⁻¹‖∞`: `1 / min_i(|m_ii| − Σ_{j≠i}|m_ij|)`.
    pub varah_inverse_bound: Option<f64>,
    /// Upper bound on `κ∞`: `(d_max/d_min)·(1+ε)/(1−ε)`.
    pub kappa_inf_upper: Option<f64>,
}

pub fn sdd_analysis(m: &ComplexMatrix) -> Result<SddReport> {
    require_square(m)?;
    let n = m.rows;
    let mut is_sdd = true;
    let mut epsilon = 0.0f64;
    let mut min_margin = f64::INFINITY;
    let mut d_max = 0.0f64;
    let mut d_min = f64::INFINITY;
    for i in 0..n {
        let diag = m[(i, i)].norm();
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| m[(i, j)].norm()).sum();
        d_max = d_max.max(diag);
        d_min = d_min.min(diag);
        if diag > off {
            epsilon = epsilon.max(off / diag);
            min_margin = min_margin.min(diag - off);
        } else {
            is_sdd = false;
        }
    }
    if !is_sdd {
        return Ok(SddReport { is_sdd, epsilon: None, d_max, d_min, varah_inverse_bound: None, kappa_inf_upper: None });
    }
    Ok(SddReport {
        is_sdd,
        epsilon: Some(epsilon),
        d_max,
        d_min,
        varah_inverse_bound: Some(1.0 / min_margin),
        kappa_inf_upper: Some((d_max / d_min) * (1.0 + epsilon) / (1.0 - epsilon)),
    })
}

/// Random SDD matrix: complex standard normal off-diagonals, each diagonal set to
/// its row's off-diagonal modulus sum times `1 + u`, `u ~ U(0.05, 1)`.
pub fn random_sdd_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(n, n);
    let half = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        let mut off = 0.0;
        for j in 0..n {
            if i != j {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                let z = Complex64::new(re * half, im * half);
                off += z.norm();
                m[(i, j)] = z;
            }
        }
        let u = rng.gen_range(0.05..1.0);
        // A 1x1 matrix has no off-diagonal mass; keep it non-singular.
        let diag = if n == 1 { 1.0 + u } else { off * (1.0 + u) };
        m[(i, i)] = Complex64::new(diag, 0.0);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn rejects_non_finite_and_empty() {
        assert!(ComplexMatrix::new(1, 1, vec![Complex64::new(f64::NAN, 0.0)]).is_err());
        assert!(ComplexMatrix::new(0, 1, vec![]).is_err());
        assert!(ComplexMatrix::new(2, 2, vec![c(1.0); 3]).is_err());
    }

    #[test]
    fn spectral_condition_examples() {
        assert_relative_eq!(spectral_condition_number(&ComplexMatrix::identity(4)).unwrap(), 1.0, epsilon = 1e-14);
        let d = ComplexMatrix::from_diag(&[c(4.0), c(2.0)]);
        assert_relative_eq!(spectral_condition_number(&d).unwrap(), 2.0, epsilon = 1e-14);
        let rank1 = ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[1.0, 1.0]]).unwrap();
        assert!(spectral_condition_number(&rank1).unwrap().is_infinite());
        let rect = ComplexMatrix::zeros(2, 3);
        assert!(matches!(spectral_condition_number(&rect), Err(Error::Dimension(_))));
    }

    #[test]
    fn infinity_condition_examples() {
        assert_relative_eq!(infinity_condition_number(&ComplexMatrix::identity(3)).unwrap(), 1.0);
        let m = ComplexMatrix::from_real_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
        assert_relative_eq!(infinity_condition_number(&m).unwrap(), 3.0, epsilon = 1e-14);
        let rank1 = ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[1.0, 1.0]]).unwrap();
        assert!(matches!(infinity_condition_number(&rank1), Err(Error::Singular(_))));
    }

    #[test]
    fn sdd_examples() {
        let id = sdd_analysis(&ComplexMatrix::identity(5)).unwrap();
        assert!(id.is_sdd);
        assert_eq!(id.epsilon, Some(0.0));
        assert_eq!(id.varah_inverse_bound, Some(1.0));
        assert_eq!(id.kappa_inf_upper, Some(1.0));

        let m = ComplexMatrix::from_real_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
        let r = sdd_analysis(&m).unwrap();
        assert!(r.is_sdd);
        assert_eq!(r.epsilon, Some(0.5));
        assert_eq!((r.d_max, r.d_min), (2.0, 2.0));
        assert_eq!(r.varah_inverse_bound, Some(1.0));
        assert_relative_eq!(r.kappa_inf_upper.unwrap(), 3.0);
        assert_relative_eq!(r.kappa_inf_upper.unwrap(), infinity_condition_number(&m).unwrap(), epsilon = 1e-14);

        let not = ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[2.0, 1.0]]).unwrap();
        let r = sdd_analysis(&not).unwrap();
        assert!(!r.is_sdd);
        assert!(r.epsilon.is_none() && r.varah_inverse_bound.is_none() && r.kappa_inf_upper.is_none());
    }

    #[test]
    fn inverse_of_random_sdd_has_small_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_sdd_matrix(32, &mut rng);
        let inv = m.inverse().unwrap();
        assert!(inverse_residual(&m, &inv).unwrap() < 1e-12);
        let lu = LuDecomposition::new(&m).unwrap();
        let b: Vec<Complex64> = (0..32).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let x = lu.solve(&b);
        let back = m.mul_vec(&x).unwrap();
        for (u, v) in back.iter().zip(&b) {
            assert!((u - v).norm() < 1e-10);
        }
    }

    #[test]
    fn products_and_blocks() {
        let a = ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let v = [c(1.0), c(1.0)];
        assert_eq!(a.mul_vec(&v).unwrap(), vec![c(3.0), c(7.0)]);
        assert_eq!(a.vec_mul(&v).unwrap(), vec![c(4.0), c(6.0)]);
        assert_eq!(a.norm_inf(), 7.0);
        assert_eq!(a.submatrix(1, 0, 1, 2).unwrap().row(0), &[c(3.0), c(4.0)]);
        assert!(a.submatrix(1, 1, 2, 1).is_err());
        assert!(a.matmul(&ComplexMatrix::zeros(3, 1)).is_err());
    }

    #[test]
    fn csv_round_trip_is_lossless_enough() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = random_sdd_matrix(5, &mut rng);
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("row,col,re,im\n0,0,"));
        assert_eq!(text.lines().count(), 26);
        let back = ComplexMatrix::read_csv(&buf[..]).unwrap();
        assert!(back.max_abs_diff(&m).unwrap() < 1e-10);
    }
}
