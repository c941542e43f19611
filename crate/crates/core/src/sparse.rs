//! Compressed-sensing reporting channel.
//!
//! A relay compresses a length-`n` report `x` into `y = Φ·x` with a random
//! Gaussian `M×n` matrix `Φ` (`M < n`). The fusion center models `x` as
//! sparse in an orthonormal basis `Ψ` (`x₀ = Ψ·x`) and recovers `x₀` from
//! `y = Φ·Ψ^T·x₀` with orthogonal matching pursuit, then maps back with
//! `x̂ = Ψ^T·x̂₀`.
//!
//! Data may be complex while `Φ` and `Ψ` are real: OMP runs with complex
//! coefficients over the real dictionary `A = Φ·Ψ^T`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::detect::LocalDecisionVector;
use crate::numerics::RMatrix;
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Orthonormal sparsifying basis. Rows of the matrix are the basis vectors,
/// so `Ψ·x` is the forward transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Basis {
    /// Orthonormal DCT-II.
    Dct,
    Identity,
    /// Real orthonormal Fourier basis: DC, cosine/sine pairs, and the
    /// alternating Nyquist row for even `n`.
    Dft,
}

impl Basis {
    pub fn matrix(self, n: usize) -> RMatrix {
        match self {
            Basis::Dct => dct_basis(n),
            Basis::Identity => RMatrix::identity(n),
            Basis::Dft => real_fourier_basis(n),
        }
    }
}

/// Orthonormal DCT-II matrix: `Ψ[k][j] = c_k·cos(π(2j+1)k / 2n)`.
pub fn dct_basis(n: usize) -> RMatrix {
    let nf = n as f64;
    let c0 = libm::sqrt(1.0 / nf);
    let ck = libm::sqrt(2.0 / nf);
    RMatrix::from_fn(n, n, |k, j| {
        if k == 0 {
            c0
        } else {
            ck * libm::cos(core::f64::consts::PI * (2 * j + 1) as f64 * k as f64 / (2.0 * nf))
        }
    })
}

fn real_fourier_basis(n: usize) -> RMatrix {
    let nf = n as f64;
    let two_pi = 2.0 * core::f64::consts::PI;
    let amp = libm::sqrt(2.0 / nf);
    let pairs = (n - 1) / 2;
    RMatrix::from_fn(n, n, |row, j| {
        let jf = j as f64;
        if row == 0 {
            libm::sqrt(1.0 / nf)
        } else if row <= 2 * pairs {
            let k = row.div_ceil(2) as f64;
            let arg = two_pi * k * jf / nf;
            if row % 2 == 1 {
                amp * libm::cos(arg)
            } else {
                amp * libm::sin(arg)
            }
        } else {
            // Nyquist row, only present for even n
            if j % 2 == 0 {
                libm::sqrt(1.0 / nf)
            } else {
                -libm::sqrt(1.0 / nf)
            }
        }
    })
}

/// `M×n` measurement matrix with iid N(0, 1/M) entries.
pub fn gaussian_phi<R: Rng + ?Sized>(rng: &mut R, m: usize, n: usize) -> Result<RMatrix> {
    if m == 0 || m >= n {
        return Err(Error::invalid(format!(
            "measurement count must satisfy 0 < M < n, got M={m}, n={n}"
        )));
    }
    let s = 1.0 / libm::sqrt(m as f64);
    let data = (0..m * n)
        .map(|_| {
            let g: f64 = rng.sample(StandardNormal);
            g * s
        })
        .collect();
    RMatrix::from_col_major(m, n, data)
}

/// OMP stops after `max_atoms` selections or once `‖r‖ ≤ residual_tol·‖y‖`,
/// whichever comes first.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StopPolicy {
    pub max_atoms: usize,
    pub residual_tol: f64,
}

impl StopPolicy {
    pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-6;

    /// `⌈M/8⌉` atoms, relative tolerance 1e-6.
    pub fn default_for(m: usize) -> Self {
        Self {
            max_atoms: m.div_ceil(8).max(1),
            residual_tol: Self::DEFAULT_RESIDUAL_TOL,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_atoms == 0 {
            return Err(Error::invalid("OMP atom budget must be positive"));
        }
        if !(self.residual_tol >= 0.0) {
            return Err(Error::invalid("OMP residual tolerance must be >= 0"));
        }
        Ok(())
    }
}

/// Real dictionary with its cached Gram matrix.
#[derive(Clone, Debug)]
pub struct Dictionary {
    atoms: RMatrix,
    // column-major n×n Gram matrix A^T·A
    gram: Vec<f64>,
}

impl Dictionary {
    pub fn new(atoms: RMatrix) -> Result<Self> {
        let n = atoms.cols();
        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            let ai = atoms.col(i);
            for j in 0..=i {
                let g: f64 = ai.iter().zip(atoms.col(j)).map(|(a, b)| a * b).sum();
                gram[i * n + j] = g;
                gram[j * n + i] = g;
            }
        }
        if let Some(j) = (0..n).position(|i| gram[i * n + i] == 0.0) {
            return Err(Error::invalid(format!("dictionary atom {j} is zero")));
        }
        Ok(Self { atoms, gram })
    }

    pub fn atoms(&self) -> &RMatrix {
        &self.atoms
    }

    pub fn rows(&self) -> usize {
        self.atoms.rows()
    }

    pub fn cols(&self) -> usize {
        self.atoms.cols()
    }

    fn gram_at(&self, i: usize, j: usize) -> f64 {
        self.gram[j * self.cols() + i]
    }

    fn gram_col(&self, j: usize) -> &[f64] {
        let n = self.cols();
        &self.gram[j * n..(j + 1) * n]
    }
}

/// Sparse estimate produced by [`omp`].
#[derive(Clone, Debug, PartialEq)]
pub struct OmpSolution {
    /// Dense coefficient vector, non-zero only on `support`.
    pub coefficients: Vec<Complex64>,
    /// Selected atoms in selection order.
    pub support: Vec<usize>,
    /// `‖r‖` before the first selection and after each one.
    pub residual_norms: Vec<f64>,
}

impl OmpSolution {
    pub fn final_residual(&self) -> f64 {
        *self.residual_norms.last().unwrap_or(&0.0)
    }
}

fn norm(v: &[Complex64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x.norm_sqr()).sum())
}

/// Orthogonal matching pursuit over a real dictionary.
///
/// Each iteration selects the unused atom maximizing `|A_j^T r| / ‖A_j‖`
/// and re-fits all selected coefficients by least squares (incremental
/// Cholesky of the support Gram matrix). Correlations are updated from the
/// cached Gram matrix; the residual itself is recomputed explicitly.
///
/// Iteration also ends early when the residual is numerically orthogonal to
/// every remaining atom or the next atom is linearly dependent on the
/// support. A residual that grows between iterations signals numerical
/// breakdown and returns [`Error::Recovery`] carrying the last estimate.
pub fn omp(y: &[Complex64], dict: &Dictionary, stop: StopPolicy) -> Result<OmpSolution> {
    stop.validate()?;
    let (m, n) = (dict.rows(), dict.cols());
    Error::check_len("compressed report", m, y.len())?;
    let a = dict.atoms();

    let c0 = a.tr_mul_cvec(y)?;
    let y_norm = norm(y);
    let tol = stop.residual_tol * y_norm;
    let budget = stop.max_atoms.min(m).min(n);

    let mut corr = c0.clone();
    let mut selected = vec![false; n];
    let mut support: Vec<usize> = Vec::with_capacity(budget);
    // row-major lower-triangular Cholesky factor of the support Gram matrix
    let mut chol: Vec<f64> = Vec::with_capacity(budget * budget);
    let mut x: Vec<Complex64> = Vec::with_capacity(budget);
    let mut residual = y.to_vec();
    let mut res_norm = y_norm;
    let mut residual_norms = vec![res_norm];

    let dense = |support: &[usize], x: &[Complex64]| {
        let mut out = vec![ZERO; n];
        for (s, v) in support.iter().zip(x) {
            out[*s] = *v;
        }
        out
    };

    while res_norm > tol && support.len() < budget {
        let mut best = None;
        let mut best_score = 0.0;
        for j in 0..n {
            if selected[j] {
                continue;
            }
            // squared normalized correlation
            let score = corr[j].norm_sqr() / dict.gram_at(j, j);
            if score > best_score {
                best_score = score;
                best = Some(j);
            }
        }
        let Some(j) = best else { break };
        if libm::sqrt(best_score) <= 1e-13 * y_norm {
            break;
        }

        // extend the Cholesky factor with the new atom
        let k = support.len();
        let mut w = vec![0.0; k];
        for i in 0..k {
            let mut s = dict.gram_at(support[i], j);
            for t in 0..i {
                s -= chol[i * budget + t] * w[t];
            }
            w[i] = s / chol[i * budget + i];
        }
        let gjj = dict.gram_at(j, j);
        let d2 = gjj - w.iter().map(|v| v * v).sum::<f64>();
        if d2 <= 1e-12 * gjj {
            break;
        }
        chol.resize((k + 1) * budget, 0.0);
        chol[k * budget..k * budget + k].copy_from_slice(&w);
        chol[k * budget + k] = libm::sqrt(d2);
        support.push(j);
        selected[j] = true;

        // least squares over the support: (L L^T) x = A_S^T y
        let k = support.len();
        let mut t: Vec<Complex64> = support.iter().map(|s| c0[*s]).collect();
        for i in 0..k {
            let mut s = t[i];
            for p in 0..i {
                s -= t[p] * chol[i * budget + p];
            }
            t[i] = s / chol[i * budget + i];
        }
        for i in (0..k).rev() {
            let mut s = t[i];
            for p in i + 1..k {
                s -= t[p] * chol[p * budget + i];
            }
            t[i] = s / chol[i * budget + i];
        }

        residual.copy_from_slice(y);
        for (s, v) in support.iter().zip(&t) {
            for (r, a) in residual.iter_mut().zip(a.col(*s)) {
                *r -= v * a;
            }
        }
        let new_norm = norm(&residual);
        if new_norm > res_norm * (1.0 + 1e-10) {
            return Err(Error::Recovery {
                iteration: k,
                partial: dense(&support[..k - 1], &x),
            });
        }
        x = t;
        res_norm = new_norm;
        residual_norms.push(res_norm);

        corr.copy_from_slice(&c0);
        for (s, xs) in support.iter().zip(&x) {
            for (c, g) in corr.iter_mut().zip(dict.gram_col(*s)) {
                *c -= xs * g;
            }
        }
    }

    Ok(OmpSolution {
        coefficients: dense(&support, &x),
        support,
        residual_norms,
    })
}

/// Measurement matrix, sparsifying basis and recovery settings shared by
/// the relay and the fusion center.
#[derive(Clone, Debug)]
pub struct CsCodec {
    id: u64,
    phi: RMatrix,
    basis: Basis,
    psi: RMatrix,
    dict: Dictionary,
    stop: StopPolicy,
    complement_decoding: bool,
    // Φ·1, used to decode the complement of a dense decision vector
    phi_ones: Vec<f64>,
}

impl CsCodec {
    /// Codec for a compressive `Φ` (`M < n`).
    pub fn new(phi: RMatrix, basis: Basis, stop: StopPolicy) -> Result<Self> {
        if phi.rows() == 0 || phi.rows() >= phi.cols() {
            return Err(Error::invalid(format!(
                "measurement matrix must be wide (M < n), got {}x{}",
                phi.rows(),
                phi.cols()
            )));
        }
        Self::build(phi, basis, stop)
    }

    /// Draws `Φ` with [`gaussian_phi`].
    pub fn gaussian<R: Rng + ?Sized>(rng: &mut R, m: usize, n: usize, basis: Basis, stop: StopPolicy) -> Result<Self> {
        Self::new(gaussian_phi(rng, m, n)?, basis, stop)
    }

    /// Degenerate `Φ = I` codec (`M = n`), for round-trip checks only.
    pub fn passthrough(n: usize, basis: Basis) -> Result<Self> {
        let stop = StopPolicy {
            max_atoms: n,
            residual_tol: 1e-12,
        };
        Self::build(RMatrix::identity(n), basis, stop)
    }

    fn build(phi: RMatrix, basis: Basis, stop: StopPolicy) -> Result<Self> {
        stop.validate()?;
        let n = phi.cols();
        let psi = basis.matrix(n);
        let dict = Dictionary::new(phi.mul(&psi.transpose())?)?;
        let phi_ones = (0..phi.rows()).map(|r| (0..n).map(|c| phi[(r, c)]).sum()).collect();
        let id = fingerprint(&phi, basis);
        Ok(Self {
            id,
            phi,
            basis,
            psi,
            dict,
            stop,
            complement_decoding: true,
            phi_ones,
        })
    }

    /// Enables or disables complement decoding of decision reports (on by
    /// default): the fusion center also recovers `1 − u` from `Φ·1 − y` and
    /// keeps whichever explanation fits better, so nearly-all-ones vectors
    /// are as recoverable as nearly-all-zeros ones.
    pub fn with_complement_decoding(mut self, on: bool) -> Self {
        self.complement_decoding = on;
        self
    }

    pub fn with_stop(mut self, stop: StopPolicy) -> Result<Self> {
        stop.validate()?;
        self.stop = stop;
        Ok(self)
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn m(&self) -> usize {
        self.phi.rows()
    }

    pub fn n(&self) -> usize {
        self.phi.cols()
    }

    pub fn phi(&self) -> &RMatrix {
        &self.phi
    }

    pub fn psi(&self) -> &RMatrix {
        &self.psi
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn stop(&self) -> StopPolicy {
        self.stop
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dict
    }
}

// FNV-1a over the shape, basis tag and matrix bits.
fn fingerprint(phi: &RMatrix, basis: Basis) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |bytes: &[u8]| {
        for b in bytes {
            h ^= u64::from(*b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    eat(&(phi.rows() as u64).to_le_bytes());
    eat(&(phi.cols() as u64).to_le_bytes());
    eat(&[basis as u8]);
    for v in phi.as_col_major() {
        eat(&v.to_bits().to_le_bytes());
    }
    h
}

/// Compressed raw-measurement report, `y = Φ·z_*`.
#[derive(Clone, Debug, PartialEq)]
pub struct CompressedReport {
    pub y: Vec<Complex64>,
    pub codec_id: u64,
}

/// Compressed local-decision report, `y = Φ·u_*`.
#[derive(Clone, Debug, PartialEq)]
pub struct DecisionReport {
    pub y: Vec<f64>,
    pub codec_id: u64,
}

pub fn compress(x: &[Complex64], codec: &CsCodec) -> Result<CompressedReport> {
    Ok(CompressedReport {
        y: codec.phi.mul_cvec(x)?,
        codec_id: codec.id,
    })
}

pub fn compress_decisions(u: &LocalDecisionVector, codec: &CsCodec) -> Result<DecisionReport> {
    Ok(DecisionReport {
        y: codec.phi.mul_vec(&u.to_real())?,
        codec_id: codec.id,
    })
}

fn check_codec(report_id: u64, codec: &CsCodec) -> Result<()> {
    if report_id == codec.id {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "report was produced by codec {report_id:#018x}, not {:#018x}",
            codec.id
        )))
    }
}

/// Fusion-center estimate `ẑ_* = Ψ^T·x̂₀` of the compressed vector.
pub fn reconstruct_raw(report: &CompressedReport, codec: &CsCodec) -> Result<Vec<Complex64>> {
    check_codec(report.codec_id, codec)?;
    let sol = omp(&report.y, &codec.dict, codec.stop)?;
    codec.psi.tr_mul_cvec(&sol.coefficients)
}

/// `‖estimate − truth‖²`.
pub fn reconstruction_error(estimate: &[Complex64], truth: &[Complex64]) -> Result<f64> {
    Error::check_len("reconstruction", truth.len(), estimate.len())?;
    Ok(estimate.iter().zip(truth).map(|(a, b)| (a - b).norm_sqr()).sum())
}

/// Recovers the local-decision vector: OMP on the real report, mapping back
/// through `Ψ^T`, then thresholding each entry at 0.5.
///
/// Always returns a length-`N` vector, even when the report is not
/// recoverable (e.g. a dense decision vector with complement decoding off).
pub fn reconstruct_decisions(report: &DecisionReport, codec: &CsCodec) -> Result<LocalDecisionVector> {
    check_codec(report.codec_id, codec)?;
    Error::check_len("decision report", codec.m(), report.y.len())?;
    let recover = |y: &[f64]| -> Result<(Vec<f64>, OmpSolution)> {
        let yc: Vec<Complex64> = y.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        let sol = omp(&yc, &codec.dict, codec.stop)?;
        let est = codec.psi.tr_mul_cvec(&sol.coefficients)?;
        Ok((est.iter().map(|v| v.re).collect(), sol))
    };

    let (direct, direct_sol) = recover(&report.y)?;
    let mut decisions: Vec<bool> = direct.iter().map(|v| *v > 0.5).collect();

    if codec.complement_decoding {
        let flipped: Vec<f64> = codec.phi_ones.iter().zip(&report.y).map(|(a, b)| a - b).collect();
        let (comp, comp_sol) = recover(&flipped)?;
        let norm_direct = libm::sqrt(report.y.iter().map(|v| v * v).sum());
        let norm_comp = libm::sqrt(flipped.iter().map(|v| v * v).sum());
        let tol = codec.stop.residual_tol;
        let converged = |sol: &OmpSolution, yn: f64| sol.final_residual() <= tol * yn;
        let prefer_comp = match (converged(&direct_sol, norm_direct), converged(&comp_sol, norm_comp)) {
            (true, true) => comp_sol.support.len() < direct_sol.support.len(),
            (false, true) => true,
            (true, false) => false,
            (false, false) => comp_sol.final_residual() < direct_sol.final_residual(),
        };
        if prefer_comp {
            decisions = comp.iter().map(|v| 1.0 - *v > 0.5).collect();
        }
    }
    Ok(LocalDecisionVector(decisions))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{standard_complex_gaussian, StreamRng};
    use rand::seq::index::sample;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn orthonormality_error(psi: &RMatrix) -> f64 {
        let p = psi.mul(&psi.transpose()).unwrap();
        let n = psi.rows();
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| (p[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max)
    }

    // Textbook OMP with explicit residual correlations and a normal-equation
    // solve per iteration; independent of the Gram/Cholesky path.
    fn naive_omp(y: &[Complex64], a: &RMatrix, k: usize) -> Vec<Complex64> {
        let n = a.cols();
        let mut r = y.to_vec();
        let mut support: Vec<usize> = Vec::new();
        let mut x = Vec::new();
        for _ in 0..k {
            let corr = a.tr_mul_cvec(&r).unwrap();
            let norms: Vec<f64> = (0..n)
                .map(|j| a.col(j).iter().map(|v| v * v).sum::<f64>().sqrt())
                .collect();
            let j = (0..n)
                .filter(|j| !support.contains(j))
                .max_by(|p, q| (corr[*p].norm() / norms[*p]).total_cmp(&(corr[*q].norm() / norms[*q])))
                .unwrap();
            support.push(j);
            let s = support.len();
            let g = crate::numerics::CMatrix::from_fn(s, s, |p, q| {
                c(a.col(support[p])
                    .iter()
                    .zip(a.col(support[q]))
                    .map(|(u, v)| u * v)
                    .sum())
            });
            let rhs: Vec<Complex64> = support
                .iter()
                .map(|&j| a.col(j).iter().zip(y).map(|(u, v)| v * *u).sum())
                .collect();
            x = crate::numerics::solve_hpd(&g, &rhs).unwrap();
            r = y.to_vec();
            for (j, v) in support.iter().zip(&x) {
                for (ri, aij) in r.iter_mut().zip(a.col(*j)) {
                    *ri -= v * aij;
                }
            }
        }
        let mut out = vec![ZERO; n];
        for (j, v) in support.iter().zip(&x) {
            out[*j] = *v;
        }
        out
    }

    #[test]
    fn dct_examples() {
        let one = dct_basis(1);
        assert_eq!(one.as_col_major(), &[1.0]);
        for n in [2, 4, 7, 64, 600] {
            assert!(orthonormality_error(&dct_basis(n)) < 1e-12, "n={n}");
        }
        let y = dct_basis(4).mul_vec(&[1.0; 4]).unwrap();
        assert!((y[0] - 2.0).abs() < 1e-15);
        assert!(y[1..].iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn other_bases_are_orthonormal() {
        for n in [1, 2, 5, 6, 100] {
            assert!(orthonormality_error(&Basis::Dft.matrix(n)) < 1e-12, "dft n={n}");
            assert!(orthonormality_error(&Basis::Identity.matrix(n)) == 0.0);
        }
    }

    #[test]
    fn basis_preserves_energy() {
        let mut rng = StreamRng::new(12, 0);
        let psi = dct_basis(50);
        for _ in 0..20 {
            let x: Vec<Complex64> = (0..50).map(|_| standard_complex_gaussian(&mut rng)).collect();
            let y = psi.mul_cvec(&x).unwrap();
            assert!((norm(&x) - norm(&y)).abs() < 1e-10);
        }
    }

    #[test]
    fn phi_examples() {
        let a = gaussian_phi(&mut StreamRng::new(1, 0), 480, 600).unwrap();
        let b = gaussian_phi(&mut StreamRng::new(1, 0), 480, 600).unwrap();
        assert_eq!(a, b);
        let mean_sq: f64 = (0..600)
            .map(|j| a.col(j).iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            / 600.0;
        assert!((mean_sq - 1.0).abs() < 0.15);
        assert!(gaussian_phi(&mut StreamRng::new(1, 0), 600, 600).is_err());
        assert!(gaussian_phi(&mut StreamRng::new(1, 0), 0, 600).is_err());
    }

    #[test]
    fn compression_is_linear() {
        let mut rng = StreamRng::new(2, 0);
        let codec = CsCodec::gaussian(&mut rng, 480, 600, Basis::Dct, StopPolicy::default_for(480)).unwrap();
        let zero = compress(&vec![ZERO; 600], &codec).unwrap();
        assert_eq!(zero.y.len(), 480);
        assert!(zero.y.iter().all(|v| *v == ZERO));
        let x1: Vec<Complex64> = (0..600).map(|_| standard_complex_gaussian(&mut rng)).collect();
        let x2: Vec<Complex64> = (0..600).map(|_| standard_complex_gaussian(&mut rng)).collect();
        let a = Complex64::new(0.7, -1.3);
        let lhs: Vec<Complex64> = x1.iter().zip(&x2).map(|(p, q)| a * p + q).collect();
        let y = compress(&lhs, &codec).unwrap().y;
        let y1 = compress(&x1, &codec).unwrap().y;
        let y2 = compress(&x2, &codec).unwrap().y;
        for i in 0..480 {
            assert!((y[i] - (a * y1[i] + y2[i])).norm() < 1e-12);
        }
        assert!(compress(&x1[..599], &codec).is_err());
    }

    #[test]
    fn omp_zero_input_exits_immediately() {
        let dict = Dictionary::new(gaussian_phi(&mut StreamRng::new(3, 0), 20, 40).unwrap()).unwrap();
        let sol = omp(&vec![ZERO; 20], &dict, StopPolicy::default_for(20)).unwrap();
        assert!(sol.support.is_empty());
        assert!(sol.coefficients.iter().all(|v| *v == ZERO));
    }

    #[test]
    fn omp_single_atom() {
        let a = gaussian_phi(&mut StreamRng::new(4, 0), 480, 600).unwrap();
        let dict = Dictionary::new(a.clone()).unwrap();
        let y: Vec<Complex64> = a.col(7).iter().map(|v| c(3.0 * v)).collect();
        let sol = omp(&y, &dict, StopPolicy::default_for(480)).unwrap();
        assert_eq!(sol.support, vec![7]);
        for (j, v) in sol.coefficients.iter().enumerate() {
            let want = if j == 7 { 3.0 } else { 0.0 };
            assert!((v - c(want)).norm() < 1e-10);
        }
    }

    #[test]
    fn omp_recovers_sparse_complex_signals() {
        let (m, n, k) = (480, 600, 10);
        let mut rng = StreamRng::new(5, 0);
        let dict = Dictionary::new(gaussian_phi(&mut rng, m, n).unwrap()).unwrap();
        let stop = StopPolicy {
            max_atoms: 60,
            residual_tol: 1e-10,
        };
        let mut exact = 0;
        for _ in 0..100 {
            let mut x = vec![ZERO; n];
            let mut supp: Vec<usize> = sample(&mut rng, n, k).into_vec();
            for j in &supp {
                x[*j] = standard_complex_gaussian(&mut rng);
            }
            let y = dict.atoms().mul_cvec(&x).unwrap();
            let sol = omp(&y, &dict, stop).unwrap();
            let mut got = sol.support.clone();
            got.sort_unstable();
            supp.sort_unstable();
            let err = libm::sqrt(reconstruction_error(&sol.coefficients, &x).unwrap());
            if got == supp && err < 1e-8 {
                exact += 1;
            }
        }
        assert!(exact >= 99, "{exact}/100");
    }

    #[test]
    fn omp_matches_naive_reference() {
        let mut rng = StreamRng::new(6, 0);
        let a = gaussian_phi(&mut rng, 40, 90).unwrap();
        let dict = Dictionary::new(a.clone()).unwrap();
        for _ in 0..10 {
            // dense signal: the loop runs the full budget
            let y: Vec<Complex64> = (0..40).map(|_| standard_complex_gaussian(&mut rng)).collect();
            let fast = omp(
                &y,
                &dict,
                StopPolicy {
                    max_atoms: 12,
                    residual_tol: 0.0,
                },
            )
            .unwrap();
            let slow = naive_omp(&y, &a, 12);
            assert_eq!(fast.support.len(), 12);
            assert!(libm::sqrt(reconstruction_error(&fast.coefficients, &slow).unwrap()) < 1e-9);
        }
    }

    #[test]
    fn omp_residual_never_increases_and_atoms_are_unique() {
        let mut rng = StreamRng::new(7, 0);
        let dict = Dictionary::new(gaussian_phi(&mut rng, 60, 100).unwrap()).unwrap();
        for _ in 0..20 {
            let y: Vec<Complex64> = (0..60).map(|_| standard_complex_gaussian(&mut rng)).collect();
            let sol = omp(
                &y,
                &dict,
                StopPolicy {
                    max_atoms: 60,
                    residual_tol: 0.0,
                },
            )
            .unwrap();
            assert!(sol.residual_norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-10)));
            let mut s = sol.support.clone();
            s.sort_unstable();
            s.dedup();
            assert_eq!(s.len(), sol.support.len());
        }
    }

    #[test]
    fn omp_dimension_and_policy_errors() {
        let dict = Dictionary::new(gaussian_phi(&mut StreamRng::new(8, 0), 10, 20).unwrap()).unwrap();
        assert!(omp(&[ZERO; 9], &dict, StopPolicy::default_for(10)).is_err());
        assert!(omp(
            &[ZERO; 10],
            &dict,
            StopPolicy {
                max_atoms: 0,
                residual_tol: 0.0
            }
        )
        .is_err());
        assert!(Dictionary::new(RMatrix::zeros(3, 4)).is_err());
    }

    #[test]
    fn passthrough_round_trip() {
        let mut rng = StreamRng::new(9, 0);
        for basis in [Basis::Identity, Basis::Dct] {
            let codec = CsCodec::passthrough(24, basis).unwrap();
            let x: Vec<Complex64> = (0..24).map(|_| standard_complex_gaussian(&mut rng)).collect();
            let est = reconstruct_raw(&compress(&x, &codec).unwrap(), &codec).unwrap();
            assert!(reconstruction_error(&est, &x).unwrap() < 1e-18);
        }
    }

    #[test]
    fn sparse_in_dct_round_trip() {
        let n = 600;
        let mut rng = StreamRng::new(10, 0);
        let codec = CsCodec::gaussian(
            &mut rng,
            480,
            n,
            Basis::Dct,
            StopPolicy {
                max_atoms: 60,
                residual_tol: 1e-10,
            },
        )
        .unwrap();
        let mut x0 = vec![ZERO; n];
        for j in sample(&mut rng, n, 20).into_vec() {
            x0[j] = standard_complex_gaussian(&mut rng);
        }
        let z = codec.psi().tr_mul_cvec(&x0).unwrap();
        let est = reconstruct_raw(&compress(&z, &codec).unwrap(), &codec).unwrap();
        assert!(libm::sqrt(reconstruction_error(&est, &z).unwrap()) < 1e-8);
    }

    #[test]
    fn reports_must_match_codec() {
        let mut rng = StreamRng::new(11, 0);
        let a = CsCodec::gaussian(&mut rng, 10, 20, Basis::Identity, StopPolicy::default_for(10)).unwrap();
        let b = CsCodec::gaussian(&mut rng, 10, 20, Basis::Identity, StopPolicy::default_for(10)).unwrap();
        assert_ne!(a.id(), b.id());
        let report = compress(&[ZERO; 20], &a).unwrap();
        assert!(reconstruct_raw(&report, &b).is_err());
        assert!(CsCodec::new(RMatrix::identity(4), Basis::Dct, StopPolicy::default_for(4)).is_err());
    }

    fn decisions_with_ones(n: usize, ones: &[usize]) -> LocalDecisionVector {
        LocalDecisionVector((0..n).map(|i| ones.contains(&i)).collect())
    }

    #[test]
    fn decision_pipeline_sparse_vectors() {
        let mut rng = StreamRng::new(13, 0);
        let codec = CsCodec::gaussian(
            &mut rng,
            70,
            100,
            Basis::Identity,
            StopPolicy {
                max_atoms: 20,
                residual_tol: 1e-6,
            },
        )
        .unwrap()
        .with_complement_decoding(false);
        let zeros = decisions_with_ones(100, &[]);
        assert_eq!(
            reconstruct_decisions(&compress_decisions(&zeros, &codec).unwrap(), &codec).unwrap(),
            zeros
        );
        let mut exact = 0;
        for _ in 0..100 {
            let u = decisions_with_ones(100, &sample(&mut rng, 100, 3).into_vec());
            let rec = reconstruct_decisions(&compress_decisions(&u, &codec).unwrap(), &codec).unwrap();
            exact += usize::from(rec == u);
        }
        assert!(exact >= 95, "{exact}/100");
    }

    #[test]
    fn decision_pipeline_dense_vectors() {
        let mut rng = StreamRng::new(14, 0);
        let stop = StopPolicy {
            max_atoms: 20,
            residual_tol: 1e-6,
        };
        let plain = CsCodec::gaussian(&mut StreamRng::new(15, 0), 70, 100, Basis::Identity, stop)
            .unwrap()
            .with_complement_decoding(false);
        let ones = decisions_with_ones(100, &(0..100).collect::<Vec<_>>());
        let rec = reconstruct_decisions(&compress_decisions(&ones, &plain).unwrap(), &plain).unwrap();
        assert_eq!(rec.len(), 100);

        let dual = plain.clone().with_complement_decoding(true);
        assert_eq!(
            reconstruct_decisions(&compress_decisions(&ones, &dual).unwrap(), &dual).unwrap(),
            ones
        );
        let mut exact = 0;
        for _ in 0..100 {
            let zeros = sample(&mut rng, 100, 3).into_vec();
            let u = LocalDecisionVector((0..100).map(|i| !zeros.contains(&i)).collect());
            let rec = reconstruct_decisions(&compress_decisions(&u, &dual).unwrap(), &dual).unwrap();
            exact += usize::from(rec == u);
        }
        assert!(exact >= 95, "{exact}/100");
        // the complement path must not disturb sparse vectors
        let u = decisions_with_ones(100, &[4, 50, 77]);
        assert_eq!(
            reconstruct_decisions(&compress_decisions(&u, &dual).unwrap(), &dual).unwrap(),
            u
        );
    }
}
