//! Dense column-major matrices and the Hermitian factorizations used by the
//! channel model and the detectors.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::{Error, Result};

/// Dense complex matrix, column-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
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
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for c in 0..cols {
            for r in 0..rows {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds from column-major storage.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        Error::check_len("matrix storage", rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
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

    pub fn as_col_major(&self) -> &[Complex64] {
        &self.data
    }

    pub fn col(&self, c: usize) -> &[Complex64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn col_mut(&mut self, c: usize) -> &mut [Complex64] {
        let r = self.rows;
        &mut self.data[c * r..(c + 1) * r]
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|v| v.norm_sqr()).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn mul(&self, rhs: &CMatrix) -> Result<CMatrix> {
        Error::check_len("matrix product inner dimension", self.cols, rhs.rows)?;
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for j in 0..rhs.cols {
            for k in 0..self.cols {
                let b = rhs[(k, j)];
                if b == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let a = self.col(k);
                for (o, &x) in out.col_mut(j).iter_mut().zip(a) {
                    *o += x * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        Error::check_len("matrix-vector operand", self.cols, x.len())?;
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows];
        for (k, &xk) in x.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.col(k)) {
                *o += a * xk;
            }
        }
        Ok(out)
    }

    /// `A = A^H` up to `rel_tol · max|A|`.
    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let tol = rel_tol * self.max_abs().max(f64::MIN_POSITIVE);
        (0..self.rows).all(|i| (0..=i).all(|j| (self[(i, j)] - self[(j, i)].conj()).norm() <= tol))
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[c * self.rows + r]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[c * self.rows + r]
    }
}

/// Dense real matrix, column-major.
#[derive(Clone, Debug, PartialEq)]
pub struct RMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for c in 0..cols {
            for r in 0..rows {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Error::check_len("matrix storage", rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_col_major(&self) -> &[f64] {
        &self.data
    }

    pub fn col(&self, c: usize) -> &[f64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn mul(&self, rhs: &RMatrix) -> Result<RMatrix> {
        Error::check_len("matrix product inner dimension", self.cols, rhs.rows)?;
        let mut out = RMatrix::zeros(self.rows, rhs.cols);
        for j in 0..rhs.cols {
            for k in 0..self.cols {
                let b = rhs[(k, j)];
                if b == 0.0 {
                    continue;
                }
                let a = &self.data[k * self.rows..(k + 1) * self.rows];
                let o = &mut out.data[j * self.rows..(j + 1) * self.rows];
                for (o, &x) in o.iter_mut().zip(a) {
                    *o += x * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        Error::check_len("matrix-vector operand", self.cols, x.len())?;
        let mut out = vec![0.0; self.rows];
        for (k, &xk) in x.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.col(k)) {
                *o += a * xk;
            }
        }
        Ok(out)
    }

    /// Real matrix times complex vector (real and imaginary parts independently).
    pub fn mul_cvec(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        Error::check_len("matrix-vector operand", self.cols, x.len())?;
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows];
        for (k, &xk) in x.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.col(k)) {
                *o += xk * a;
            }
        }
        Ok(out)
    }

    /// `self^T · x` for complex `x`.
    pub fn tr_mul_cvec(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        Error::check_len("transposed matrix-vector operand", self.rows, x.len())?;
        Ok((0..self.cols)
            .map(|c| {
                self.col(c)
                    .iter()
                    .zip(x)
                    .fold(Complex64::new(0.0, 0.0), |acc, (&a, &v)| acc + v * a)
            })
            .collect())
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|v| v * v).sum())
    }
}

impl Index<(usize, usize)> for RMatrix {
    type Output = f64;

    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[c * self.rows + r]
    }
}

impl IndexMut<(usize, usize)> for RMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[c * self.rows + r]
    }
}

const HERMITIAN_TOL: f64 = 1e-12;
const INDEFINITE_TOL: f64 = 1e-10;

/// Lower-triangular Cholesky factor `L` with `L·L^H = A`.
///
/// `A` must be Hermitian positive semi-definite. Pivots that fall in
/// `[-1e-10·‖A‖, ~0]` are clamped to zero and the rest of that column is
/// zeroed, so rank-deficient inputs (e.g. a fully correlated exponential
/// model) still factor. A pivot below `-1e-10·‖A‖` is reported as indefinite.
pub fn cholesky(a: &CMatrix) -> Result<CMatrix> {
    if !a.is_square() {
        return Err(Error::Decomposition(format!(
            "matrix is {}x{}, not square",
            a.rows(),
            a.cols()
        )));
    }
    if !a.is_hermitian(HERMITIAN_TOL) {
        return Err(Error::Decomposition("matrix is not Hermitian".into()));
    }
    let n = a.rows();
    let scale = a.max_abs();
    let clamp = scale * (n as f64) * f64::EPSILON * 16.0;
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d < -INDEFINITE_TOL * scale {
            return Err(Error::Decomposition(format!(
                "matrix is indefinite (pivot {d:.3e} at column {j})"
            )));
        }
        if d <= clamp {
            // semidefinite direction
            continue;
        }
        let djj = libm::sqrt(d);
        l[(j, j)] = Complex64::new(djj, 0.0);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Solves `L·x = b` for lower-triangular `L` with non-zero diagonal.
pub fn forward_substitute(l: &CMatrix, b: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = l.rows();
    Error::check_len("right-hand side", n, b.len())?;
    let mut x = b.to_vec();
    for i in 0..n {
        let d = l[(i, i)];
        if d.norm() == 0.0 {
            return Err(Error::Decomposition(format!("zero pivot at row {i}")));
        }
        let mut s = x[i];
        for k in 0..i {
            s -= l[(i, k)] * x[k];
        }
        x[i] = s / d;
    }
    Ok(x)
}

/// Solves `L^H·x = b` for lower-triangular `L` with non-zero diagonal.
pub fn backward_substitute_adjoint(l: &CMatrix, b: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = l.rows();
    Error::check_len("right-hand side", n, b.len())?;
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        let d = l[(i, i)];
        if d.norm() == 0.0 {
            return Err(Error::Decomposition(format!("zero pivot at row {i}")));
        }
        let mut s = x[i];
        for k in i + 1..n {
            s -= l[(k, i)].conj() * x[k];
        }
        x[i] = s / d.conj();
    }
    Ok(x)
}

/// Solves `A·x = b` for Hermitian positive-definite `A` via Cholesky.
pub fn solve_hpd(a: &CMatrix, b: &[Complex64]) -> Result<Vec<Complex64>> {
    Error::check_len("right-hand side", a.rows(), b.len())?;
    let l = cholesky(a)?;
    let w = forward_substitute(&l, b).map_err(|_| Error::Decomposition("matrix is singular".into()))?;
    backward_substitute_adjoint(&l, &w).map_err(|_| Error::Decomposition("matrix is singular".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{standard_complex_gaussian, StreamRng};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn random_hpd(rng: &mut StreamRng, n: usize) -> CMatrix {
        let b = CMatrix::from_fn(n, n, |_, _| standard_complex_gaussian(rng));
        b.mul(&b.conj_transpose()).unwrap()
    }

    fn rel_reconstruction_error(a: &CMatrix, l: &CMatrix) -> f64 {
        let llh = l.mul(&l.conj_transpose()).unwrap();
        let diff = CMatrix::from_fn(a.rows(), a.cols(), |r, c| llh[(r, c)] - a[(r, c)]);
        diff.frobenius_norm() / a.frobenius_norm()
    }

    #[test]
    fn identity_factor_is_identity() {
        let i5 = CMatrix::identity(5);
        assert_eq!(cholesky(&i5).unwrap(), i5);
    }

    #[test]
    fn two_by_two_closed_form() {
        let a = CMatrix::from_col_major(2, 2, vec![c(1.0), c(0.5), c(0.5), c(1.0)]).unwrap();
        let l = cholesky(&a).unwrap();
        assert!((l[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!((l[(1, 0)].re - 0.5).abs() < 1e-15);
        assert!((l[(1, 1)].re - libm::sqrt(0.75)).abs() < 1e-15);
        assert_eq!(l[(0, 1)], c(0.0));
        assert!(rel_reconstruction_error(&a, &l) < 1e-12);
    }

    #[test]
    fn random_hpd_round_trip() {
        let mut rng = StreamRng::new(5, 0);
        for _ in 0..100 {
            let a = random_hpd(&mut rng, 6);
            let l = cholesky(&a).unwrap();
            assert!(rel_reconstruction_error(&a, &l) < 1e-10);
        }
    }

    #[test]
    fn semidefinite_pivots_are_clamped() {
        // all-ones matrix has rank one
        let a = CMatrix::from_fn(4, 4, |_, _| c(1.0));
        let l = cholesky(&a).unwrap();
        assert!(rel_reconstruction_error(&a, &l) < 1e-12);
        assert_eq!(l[(3, 3)], c(0.0));
    }

    #[test]
    fn rejects_non_hermitian_and_indefinite() {
        let nh = CMatrix::from_col_major(2, 2, vec![c(1.0), c(0.2), c(0.5), c(1.0)]).unwrap();
        assert!(matches!(cholesky(&nh), Err(Error::Decomposition(_))));
        let indef = CMatrix::from_col_major(2, 2, vec![c(1.0), c(2.0), c(2.0), c(1.0)]).unwrap();
        assert!(matches!(cholesky(&indef), Err(Error::Decomposition(_))));
        assert!(cholesky(&CMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn solve_trivial_systems() {
        let b = vec![Complex64::new(1.0, 2.0), Complex64::new(-3.0, 0.5), c(4.0)];
        assert_eq!(solve_hpd(&CMatrix::identity(3), &b).unwrap(), b);
        let mut two = CMatrix::identity(3);
        two.scale(2.0);
        let x = solve_hpd(&two, &b).unwrap();
        for (xi, bi) in x.iter().zip(&b) {
            assert!((xi - bi / 2.0).norm() < 1e-15);
        }
    }

    #[test]
    fn solve_random_hpd_residual() {
        let mut rng = StreamRng::new(6, 0);
        for _ in 0..20 {
            let mut a = random_hpd(&mut rng, 12);
            for i in 0..12 {
                a[(i, i)] += c(1e-3);
            }
            let b: Vec<Complex64> = (0..12).map(|_| standard_complex_gaussian(&mut rng)).collect();
            let x = solve_hpd(&a, &b).unwrap();
            let ax = a.mul_vec(&x).unwrap();
            let res: f64 = ax.iter().zip(&b).map(|(p, q)| (p - q).norm_sqr()).sum();
            let nb: f64 = b.iter().map(|v| v.norm_sqr()).sum();
            assert!(libm::sqrt(res / nb) < 1e-9);
        }
    }

    #[test]
    fn solve_singular_fails() {
        let a = CMatrix::from_fn(3, 3, |_, _| c(1.0));
        assert!(matches!(
            solve_hpd(&a, &[c(1.0), c(1.0), c(1.0)]),
            Err(Error::Decomposition(_))
        ));
    }

    #[test]
    fn real_matrix_products() {
        let a = RMatrix::from_fn(2, 3, |r, c| (r * 3 + c) as f64);
        let at = a.transpose();
        assert_eq!(at[(2, 1)], 5.0);
        let p = a.mul(&at).unwrap();
        assert_eq!(p[(0, 0)], 5.0);
        assert_eq!(p[(1, 1)], 50.0);
        let x = [Complex64::new(1.0, 1.0), c(0.0), c(2.0)];
        let y = a.mul_cvec(&x).unwrap();
        assert_eq!(y[1], Complex64::new(3.0 + 10.0, 3.0));
        let back = a.tr_mul_cvec(&y).unwrap();
        assert_eq!(back.len(), 3);
    }
}
