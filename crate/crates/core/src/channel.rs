//! Correlated Alice→Bobs / Eve→Bobs channel ensembles and noisy CIR
//! measurements.
//!
//! Channels are `L×N` complex matrices (taps × nodes). Receive-side
//! correlation follows the exponential model `[R]_{ij} = ρ^{|i-j|}` applied
//! through a Kronecker construction `H = c · H_iid · F^T` with `F·F^T = R`
//! and `c = 1/sqrt(tr R)` when trace normalization is enabled.
//!
//! Stacked vectors are node-major: node 0 taps `0..L`, then node 1, and so
//! on. This is exactly the column-major storage of an `L×N` [`CMatrix`].

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;

use crate::numerics::linalg::{cholesky, forward_substitute};
use crate::numerics::{standard_complex_gaussian, CMatrix, RMatrix};
use crate::{Error, Result};

/// Which transmitter occupies the sensing channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Occupant {
    Alice,
    Eve,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelConfig {
    pub n_nodes: usize,
    pub n_taps: usize,
    pub rho: f64,
    /// Per-tap average power.
    pub pdp: Vec<f64>,
    /// Apply the `1/sqrt(tr R)` factor of the Kronecker model.
    pub normalize_kronecker: bool,
}

impl ChannelConfig {
    /// Uniform unit-energy power-delay profile (`1/L` per tap), trace
    /// normalization on.
    pub fn new(n_nodes: usize, n_taps: usize, rho: f64) -> Self {
        let pdp = if n_taps == 0 {
            Vec::new()
        } else {
            vec![1.0 / n_taps as f64; n_taps]
        };
        Self {
            n_nodes,
            n_taps,
            rho,
            pdp,
            normalize_kronecker: true,
        }
    }

    pub fn with_pdp(mut self, pdp: Vec<f64>) -> Self {
        self.pdp = pdp;
        self
    }

    pub fn with_normalization(mut self, on: bool) -> Self {
        self.normalize_kronecker = on;
        self
    }

    pub fn stacked_len(&self) -> usize {
        self.n_nodes * self.n_taps
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_nodes == 0 || self.n_taps == 0 {
            return Err(Error::invalid("node and tap counts must be positive"));
        }
        check_rho(self.rho)?;
        Error::check_len("power-delay profile", self.n_taps, self.pdp.len())?;
        if let Some(p) = self.pdp.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
            return Err(Error::invalid(format!(
                "power-delay profile entries must be >= 0, got {p}"
            )));
        }
        Ok(())
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if (0.0..=1.0).contains(&rho) {
        Ok(())
    } else {
        Err(Error::invalid(format!("correlation must lie in [0, 1], got {rho}")))
    }
}

/// `N×N` matrix with entries `ρ^{|i-j|}`.
pub fn exp_correlation_matrix(n: usize, rho: f64) -> Result<CMatrix> {
    check_rho(rho)?;
    Ok(CMatrix::from_fn(n, n, |i, j| {
        Complex64::new(libm::pow(rho, i.abs_diff(j) as f64), 0.0)
    }))
}

/// Alice's and Eve's channels to every node, each `L×N`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelEnsemble {
    pub h_ab: CMatrix,
    pub h_eb: CMatrix,
}

impl ChannelEnsemble {
    pub fn channel(&self, occupant: Occupant) -> &CMatrix {
        match occupant {
            Occupant::Alice => &self.h_ab,
            Occupant::Eve => &self.h_eb,
        }
    }

    /// Node-major stacked CIR of `occupant`.
    pub fn stacked(&self, occupant: Occupant) -> &[Complex64] {
        self.channel(occupant).as_col_major()
    }
}

/// Stacks the columns of an `L×N` matrix node-major.
pub fn stack_columns(h: &CMatrix) -> Vec<Complex64> {
    h.as_col_major().to_vec()
}

/// Inverse of [`stack_columns`].
pub fn unstack(stacked: &[Complex64], n_taps: usize, n_nodes: usize) -> Result<CMatrix> {
    CMatrix::from_col_major(n_taps, n_nodes, stacked.to_vec())
}

/// Channel generator with the correlation factor precomputed.
#[derive(Clone, Debug)]
pub struct ChannelModel {
    cfg: ChannelConfig,
    // lower-triangular F with F·F^T = R
    corr_factor: RMatrix,
    tap_std: Vec<f64>,
    scale: f64,
}

impl ChannelModel {
    pub fn new(cfg: ChannelConfig) -> Result<Self> {
        cfg.validate()?;
        let r = exp_correlation_matrix(cfg.n_nodes, cfg.rho)?;
        let f = cholesky(&r)?;
        let corr_factor = RMatrix::from_fn(cfg.n_nodes, cfg.n_nodes, |i, j| f[(i, j)].re);
        let tap_std = cfg.pdp.iter().map(|p| libm::sqrt(*p)).collect();
        let scale = if cfg.normalize_kronecker {
            1.0 / libm::sqrt(r.trace().re)
        } else {
            1.0
        };
        Ok(Self {
            cfg,
            corr_factor,
            tap_std,
            scale,
        })
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.cfg
    }

    /// Uncorrelated `L×N` draw with tap `l` of every column ~ CN(0, pdp[l]).
    pub fn draw_iid<R: Rng + ?Sized>(&self, rng: &mut R) -> CMatrix {
        let (l, n) = (self.cfg.n_taps, self.cfg.n_nodes);
        let mut data = Vec::with_capacity(l * n);
        for _ in 0..n {
            for s in &self.tap_std {
                data.push(standard_complex_gaussian(rng) * *s);
            }
        }
        CMatrix::from_col_major(l, n, data).expect("storage sized by construction")
    }

    /// `scale · G · F^T`: column `n` mixes columns `0..=n` of `G`.
    pub fn correlate(&self, iid: &CMatrix) -> CMatrix {
        let (l, n) = (self.cfg.n_taps, self.cfg.n_nodes);
        let mut out = CMatrix::zeros(l, n);
        for col in 0..n {
            let dst = out.col_mut(col);
            for k in 0..=col {
                let w = self.corr_factor[(col, k)] * self.scale;
                if w == 0.0 {
                    continue;
                }
                for (d, g) in dst.iter_mut().zip(iid.col(k)) {
                    *d += g * w;
                }
            }
        }
        out
    }

    /// Independent correlated draws for Alice and then Eve.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelEnsemble {
        let h_ab = self.correlate(&self.draw_iid(rng));
        let h_eb = self.correlate(&self.draw_iid(rng));
        ChannelEnsemble { h_ab, h_eb }
    }
}

/// One-shot ensemble draw; prefer [`ChannelModel`] when drawing repeatedly.
pub fn draw_channel<R: Rng + ?Sized>(rng: &mut R, cfg: &ChannelConfig) -> Result<ChannelEnsemble> {
    Ok(ChannelModel::new(cfg.clone())?.draw(rng))
}

#[derive(Clone, Debug)]
struct NodeNoise {
    sigma2: f64,
    cov: CMatrix,
    factor: CMatrix,
    // Σ = σ²·I
    isotropic: bool,
}

/// Per-node measurement-noise covariances `Σ_n` (block diagonal `Σ_*`).
#[derive(Clone, Debug)]
pub struct NoiseModel {
    n_taps: usize,
    nodes: Vec<NodeNoise>,
}

impl NoiseModel {
    /// `Σ_n = σ²·I_L` at every node.
    pub fn homogeneous(n_nodes: usize, n_taps: usize, sigma2: f64) -> Result<Self> {
        Self::isotropic(vec![sigma2; n_nodes], n_taps)
    }

    /// Homogeneous noise at `SNR = 1/σ²` given in dB.
    pub fn from_snr_db(n_nodes: usize, n_taps: usize, snr_db: f64) -> Result<Self> {
        Self::homogeneous(n_nodes, n_taps, libm::pow(10.0, -snr_db / 10.0))
    }

    /// `Σ_n = σ_n²·I_L` with per-node noise powers.
    pub fn isotropic(sigma2: Vec<f64>, n_taps: usize) -> Result<Self> {
        if n_taps == 0 || sigma2.is_empty() {
            return Err(Error::invalid("noise model needs at least one node and one tap"));
        }
        let nodes = sigma2
            .into_iter()
            .map(|s2| {
                if !(s2 > 0.0) || !s2.is_finite() {
                    return Err(Error::invalid(format!("noise power must be positive, got {s2}")));
                }
                let mut cov = CMatrix::identity(n_taps);
                cov.scale(s2);
                let mut factor = CMatrix::identity(n_taps);
                factor.scale(libm::sqrt(s2));
                Ok(NodeNoise {
                    sigma2: s2,
                    cov,
                    factor,
                    isotropic: true,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n_taps, nodes })
    }

    /// General per-node covariances, e.g. `σ_n²·(S^H S)^{-1}` for a
    /// non-orthogonal training matrix `S`. Each must be Hermitian
    /// positive-definite.
    pub fn with_covariances(sigma2: Vec<f64>, covariances: Vec<CMatrix>) -> Result<Self> {
        Error::check_len("noise covariances", sigma2.len(), covariances.len())?;
        let n_taps = covariances
            .first()
            .map(CMatrix::rows)
            .ok_or_else(|| Error::invalid("noise model needs at least one node"))?;
        let nodes = sigma2
            .into_iter()
            .zip(covariances)
            .map(|(s2, cov)| {
                if !(s2 > 0.0) {
                    return Err(Error::invalid(format!("noise power must be positive, got {s2}")));
                }
                Error::check_len("noise covariance order", n_taps, cov.rows())?;
                let factor = cholesky(&cov)?;
                if (0..n_taps).any(|i| factor[(i, i)].re <= 0.0) {
                    return Err(Error::Decomposition("noise covariance is singular".into()));
                }
                Ok(NodeNoise {
                    sigma2: s2,
                    cov,
                    factor,
                    isotropic: false,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n_taps, nodes })
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_taps(&self) -> usize {
        self.n_taps
    }

    pub fn sigma2(&self, node: usize) -> f64 {
        self.nodes[node].sigma2
    }

    /// Received SNR at a node, `1/σ_n²`.
    pub fn snr(&self, node: usize) -> f64 {
        1.0 / self.nodes[node].sigma2
    }

    pub fn covariance(&self, node: usize) -> &CMatrix {
        &self.nodes[node].cov
    }

    /// `r^H Σ_n^{-1} r`, evaluated as `‖F_n^{-1} r‖²` so the result is real.
    pub fn whitened_energy(&self, node: usize, residual: &[Complex64]) -> Result<f64> {
        Error::check_len("per-node residual", self.n_taps, residual.len())?;
        let nn = &self.nodes[node];
        if nn.isotropic {
            return Ok(residual.iter().map(|v| v.norm_sqr()).sum::<f64>() / nn.sigma2);
        }
        let w = forward_substitute(&nn.factor, residual)?;
        Ok(w.iter().map(|v| v.norm_sqr()).sum())
    }

    /// One draw of `v_n ~ CN(0, Σ_n)`.
    pub fn sample_node<R: Rng + ?Sized>(&self, rng: &mut R, node: usize, out: &mut Vec<Complex64>) {
        let nn = &self.nodes[node];
        let start = out.len();
        out.extend((0..self.n_taps).map(|_| standard_complex_gaussian(rng)));
        if nn.isotropic {
            let s = libm::sqrt(nn.sigma2);
            for v in &mut out[start..] {
                *v *= s;
            }
        } else {
            let g: Vec<Complex64> = out[start..].to_vec();
            for (i, v) in out[start..].iter_mut().enumerate() {
                *v = (0..=i).map(|k| nn.factor[(i, k)] * g[k]).sum();
            }
        }
    }
}

/// Stacked noisy measurement `z_* = h_{CO,*} + v_*` with its ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementBatch {
    pub z_star: Vec<Complex64>,
    pub truth: Occupant,
    n_taps: usize,
}

impl MeasurementBatch {
    pub fn n_taps(&self) -> usize {
        self.n_taps
    }

    pub fn n_nodes(&self) -> usize {
        self.z_star.len() / self.n_taps
    }

    pub fn node(&self, n: usize) -> &[Complex64] {
        &self.z_star[n * self.n_taps..(n + 1) * self.n_taps]
    }
}

/// Noisy measurement of the occupant's channel at every node.
pub fn measure<R: Rng + ?Sized>(
    rng: &mut R,
    ensemble: &ChannelEnsemble,
    occupant: Occupant,
    noise: &NoiseModel,
) -> Result<MeasurementBatch> {
    let h = ensemble.channel(occupant);
    Error::check_len("noise model nodes", h.cols(), noise.n_nodes())?;
    Error::check_len("noise model taps", h.rows(), noise.n_taps())?;
    let mut z = Vec::with_capacity(h.rows() * h.cols());
    for node in 0..h.cols() {
        noise.sample_node(rng, node, &mut z);
    }
    for (zi, hi) in z.iter_mut().zip(h.as_col_major()) {
        *zi += hi;
    }
    Ok(MeasurementBatch {
        z_star: z,
        truth: occupant,
        n_taps: h.rows(),
    })
}
