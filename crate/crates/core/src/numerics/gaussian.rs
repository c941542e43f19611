use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

/// One CN(0, 1) draw: real and imaginary parts independent N(0, 1/2).
#[inline]
pub fn standard_complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
}

/// `n` iid CN(0, variance) draws.
pub fn sample_complex_gaussian<R: Rng + ?Sized>(rng: &mut R, n: usize, variance: f64) -> Result<Vec<Complex64>> {
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(Error::invalid(format!("variance must be positive, got {variance}")));
    }
    let scale = libm::sqrt(variance);
    Ok((0..n).map(|_| standard_complex_gaussian(rng) * scale).collect())
}
