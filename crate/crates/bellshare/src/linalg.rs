//! Dense complex linear algebra kernel: products, Kronecker products,
//! Hermitian eigendecomposition, and positive-semidefinite square roots.
//!
//! Everything operates on the row-major [`ComplexMatrix`]. Matrices in this
//! crate stay small (local dimension ≤ 64, composite ≤ ~1024), so the
//! implementations favour tight error bounds over asymptotics: the
//! eigensolver is a cyclic complex Jacobi iteration, which delivers
//! machine-precision residuals on the Hermitian operators used everywhere
//! else in the crate.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Absolute entrywise tolerance for accepting a matrix as Hermitian.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Eigenvalues in `[PSD_EIG_FLOOR, 0)` are clamped to zero by [`psd_sqrt`];
/// anything below the floor is rejected. Floating-point noise on exact
/// projectors must not abort a run.
pub const PSD_EIG_FLOOR: f64 = -1e-10;

const MAX_JACOBI_SWEEPS: usize = 100;

/// Dense complex square-or-rectangular matrix, row-major storage.
///
/// Carrier for density matrices, POVM effects, observables and unitaries.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Build a matrix from row-major data. Fails when the entry count does
    /// not match `rows * cols` or either dimension is zero.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape(format!("dimensions must be >= 1, got {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "entry count {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Build a matrix from real row-major data.
    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        let cdata = data.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::from_vec(rows, cols, cdata)
    }

    /// Build a matrix destined for a Hermitian role; verifies
    /// `max |M - M†| <= HERMITICITY_TOL` entrywise.
    pub fn hermitian_from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        let m = Self::from_vec(rows, cols, data)?;
        let residual = m.hermiticity_residual();
        if residual > HERMITICITY_TOL {
            return Err(Error::Contract(format!(
                "matrix is not Hermitian: residual {residual:.3e} > {HERMITICITY_TOL:.0e}"
            )));
        }
        Ok(m)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] = v;
    }

    /// Row-major entries.
    #[inline]
    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Self::from_vec(self.rows, self.cols, data)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Self::from_vec(self.rows, self.cols, data)
    }

    pub fn scale(&self, factor: f64) -> Self {
        let data = self.data.iter().map(|a| a * factor).collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    /// `self += w * other`; shapes must already agree.
    pub fn add_assign_scaled(&mut self, other: &Self, w: f64) {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * w;
        }
    }

    /// Standard matrix product; dimensions must conform.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let (n, k, m) = (self.rows, self.cols, other.cols);
        let mut out = vec![Complex64::new(0.0, 0.0); n * m];
        for i in 0..n {
            let row = &self.data[i * k..(i + 1) * k];
            let orow = &mut out[i * m..(i + 1) * m];
            for (l, &a) in row.iter().enumerate() {
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let brow = &other.data[l * m..(l + 1) * m];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(Self {
            rows: n,
            cols: m,
            data: out,
        })
    }

    /// Kronecker product: block (i, j) equals `self[i,j] * other`.
    pub fn kron(&self, other: &Self) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out = vec![Complex64::new(0.0, 0.0); rows * cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.data[i * self.cols + j];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for p in 0..other.rows {
                    let dst = (i * other.rows + p) * cols + j * other.cols;
                    let src = p * other.cols;
                    for q in 0..other.cols {
                        out[dst + q] = a * other.data[src + q];
                    }
                }
            }
        }
        Self { rows, cols, data: out }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows * self.cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[j * self.rows + i] = self.data[i * self.cols + j].conj();
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            data: out,
        }
    }

    /// Sum of diagonal entries; requires a square matrix.
    pub fn trace(&self) -> Result<Complex64> {
        if !self.is_square() {
            return Err(Error::Shape(format!(
                "trace requires a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        let mut t = Complex64::new(0.0, 0.0);
        for i in 0..self.rows {
            t += self.data[i * self.cols + i];
        }
        Ok(t)
    }

    /// `tr(self * other)` in O(n²) without forming the product.
    pub fn trace_product(&self, other: &Self) -> Result<Complex64> {
        if self.cols != other.rows || self.rows != other.cols {
            return Err(Error::Shape(format!(
                "trace_product needs conforming shapes, got {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut t = Complex64::new(0.0, 0.0);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t += self.data[i * self.cols + j] * other.data[j * other.cols + i];
            }
        }
        Ok(t)
    }

    /// `max_ij |self[i,j] - conj(self[j,i])|` (0 for exactly Hermitian input).
    pub fn hermiticity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let d = self.data[i * n + j] - self.data[j * n + i].conj();
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise difference magnitude.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape(format!(
                "shapes differ: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations.
///
/// Returns eigenvalues in ascending order together with a unitary matrix
/// whose columns are the matching eigenvectors, so that
/// `h = V diag(λ) V†` holds with a max-entry residual below
/// `1e-10 * max(1, max|h|)`.
pub fn hermitian_eigen(h: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    if !h.is_square() {
        return Err(Error::Shape(format!(
            "eigendecomposition requires a square matrix, got {}x{}",
            h.rows, h.cols
        )));
    }
    let residual = h.hermiticity_residual();
    if residual > HERMITICITY_TOL {
        return Err(Error::Contract(format!(
            "eigendecomposition input is not Hermitian: residual {residual:.3e}"
        )));
    }

    let n = h.rows;
    // Work on the exactly Hermitian part so sub-tolerance input noise cannot
    // leak into the iteration.
    let mut a = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            let s = (h.data[i * n + j] + h.data[j * n + i].conj()) * 0.5;
            a[i * n + j] = if i == j { Complex64::new(s.re, 0.0) } else { s };
        }
    }
    let mut v = ComplexMatrix::identity(n).data;

    let scale = h.max_abs().max(1.0);
    let stop = f64::EPSILON * scale;

    for _sweep in 0..MAX_JACOBI_SWEEPS {
        let mut off_max = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off_max = off_max.max(a[p * n + q].norm());
            }
        }
        if off_max <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let apq_abs = apq.norm();
                if apq_abs <= stop * 0.1 {
                    continue;
                }
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                let tau = (aqq - app) / (2.0 * apq_abs);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (tau - (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let sigma = apq * (s / apq_abs); // s · e^{iφ}

                // A <- A·G (columns p, q), then A <- G†·A (rows p, q).
                for k in 0..n {
                    let kp = a[k * n + p];
                    let kq = a[k * n + q];
                    a[k * n + p] = kp * c - kq * sigma.conj();
                    a[k * n + q] = kp * sigma + kq * c;
                }
                for k in 0..n {
                    let pk = a[p * n + k];
                    let qk = a[q * n + k];
                    a[p * n + k] = pk * c - sigma * qk;
                    a[q * n + k] = sigma.conj() * pk + qk * c;
                }
                // The rotation zeroes (p,q) analytically; pin it and keep the
                // diagonal exactly real.
                a[p * n + q] = Complex64::new(0.0, 0.0);
                a[q * n + p] = Complex64::new(0.0, 0.0);
                a[p * n + p] = Complex64::new(a[p * n + p].re, 0.0);
                a[q * n + q] = Complex64::new(a[q * n + q].re, 0.0);

                for k in 0..n {
                    let kp = v[k * n + p];
                    let kq = v[k * n + q];
                    v[k * n + p] = kp * c - kq * sigma.conj();
                    v[k * n + q] = kp * sigma + kq * c;
                }
            }
        }
    }

    let mut final_off = 0.0f64;
    for p in 0..n {
        for q in (p + 1)..n {
            final_off = final_off.max(a[p * n + q].norm());
        }
    }
    if final_off > stop * 100.0 {
        return Err(Error::Contract(format!(
            "eigendecomposition did not converge: off-diagonal residual {final_off:.3e}"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    let eigvals: Vec<f64> = (0..n).map(|i| a[i * n + i].re).collect();
    order.sort_by(|&i, &j| eigvals[i].total_cmp(&eigvals[j]));

    let sorted_vals: Vec<f64> = order.iter().map(|&i| eigvals[i]).collect();
    let mut sorted_vecs = vec![Complex64::new(0.0, 0.0); n * n];
    for (new_col, &old_col) in order.iter().enumerate() {
        for k in 0..n {
            sorted_vecs[k * n + new_col] = v[k * n + old_col];
        }
    }

    Ok((sorted_vals, ComplexMatrix {
        rows: n,
        cols: n,
        data: sorted_vecs,
    }))
}

/// Hermitian PSD square root: returns `S` with `S·S = e` entrywise within
/// 1e-10. Eigenvalues in `[PSD_EIG_FLOOR, 0)` are clamped to zero; anything
/// lower is a [`Error::NotPsd`].
pub fn psd_sqrt(e: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (eigvals, v) = hermitian_eigen(e)?;
    let n = e.rows;
    let mut roots = Vec::with_capacity(n);
    for &lambda in &eigvals {
        if lambda < PSD_EIG_FLOOR {
            return Err(Error::NotPsd { min_eig: lambda });
        }
        roots.push(lambda.max(0.0).sqrt());
    }
    // S = V diag(√λ) V†
    let mut scaled = v.clone();
    for col in 0..n {
        for row in 0..n {
            scaled.data[row * n + col] *= roots[col];
        }
    }
    scaled.multiply(&v.adjoint())
}
