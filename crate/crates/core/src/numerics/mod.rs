//! Numerical kernels shared by every other module.

mod chi2;
mod gaussian;
pub mod linalg;
mod rng;
pub mod stats;

pub use chi2::{chi2_cdf, chi2_quantile, chi2_sf, ln_gamma, regularized_gamma_p, regularized_gamma_q};
pub use gaussian::{sample_complex_gaussian, standard_complex_gaussian};
pub use linalg::{cholesky, solve_hpd, CMatrix, RMatrix};
pub use rng::StreamRng;
