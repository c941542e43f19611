//! Fast invariant suite run by `distauth selfcheck`.

use std::fmt;

use distauth_core::detect::{fuse, fused_pfa_analytic, FusionKind, FusionRule, LocalDecisionVector};
use distauth_core::numerics::{chi2_cdf, chi2_quantile, cholesky, standard_complex_gaussian, CMatrix, StreamRng};
use distauth_core::sparse::{gaussian_phi, omp, Basis, Dictionary, StopPolicy};
use distauth_core::Complex64;

const SEED: u64 = 0x5e1f_c4ec;

/// Test hooks for exercising failure reporting.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SelfcheckOptions {
    /// Relative error injected into every quantile before checking it.
    pub quantile_perturbation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelfcheckReport {
    pub checks: Vec<CheckResult>,
}

impl SelfcheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect()
    }
}

impl fmt::Display for SelfcheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        Ok(())
    }
}

fn check(name: &'static str, r: Result<String, String>) -> CheckResult {
    match r {
        Ok(detail) => CheckResult {
            name,
            passed: true,
            detail,
        },
        Err(detail) => CheckResult {
            name,
            passed: false,
            detail,
        },
    }
}

fn chi2_roundtrip(perturb: f64) -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for dof in [2u32, 12, 120, 1200] {
        for p in [1e-4, 1e-2, 0.5, 0.99, 0.999, 0.9999] {
            let q = chi2_quantile(p, dof).map_err(|e| e.to_string())? * (1.0 + perturb);
            let back = chi2_cdf(q, dof).map_err(|e| e.to_string())?;
            let err = (back - p).abs();
            worst = worst.max(err);
            if err > 1e-8 {
                return Err(format!("cdf(quantile({p}, {dof})) = {back}"));
            }
        }
    }
    let d = chi2_quantile(0.99, 12).map_err(|e| e.to_string())? * (1.0 + perturb);
    if (d - 26.217).abs() > 0.05 {
        return Err(format!("quantile(0.99, 12) = {d}"));
    }
    Ok(format!("max |cdf(q(p)) - p| = {worst:.1e}"))
}

fn cholesky_roundtrip() -> Result<String, String> {
    let mut rng = StreamRng::new(SEED, 1);
    let n = 12;
    let b = CMatrix::from_fn(n, n, |_, _| standard_complex_gaussian(&mut rng));
    let mut a = b.mul(&b.conj_transpose()).map_err(|e| e.to_string())?;
    for i in 0..n {
        a[(i, i)] += Complex64::new(1.0, 0.0);
    }
    let l = cholesky(&a).map_err(|e| e.to_string())?;
    let back = l.mul(&l.conj_transpose()).map_err(|e| e.to_string())?;
    let mut diff = back.clone();
    for c in 0..n {
        for r in 0..n {
            diff[(r, c)] = back[(r, c)] - a[(r, c)];
        }
    }
    let rel = diff.frobenius_norm() / a.frobenius_norm();
    if rel > 1e-12 {
        return Err(format!("relative reconstruction error {rel:.2e}"));
    }
    Ok(format!("relative error {rel:.1e}"))
}

fn omp_single_atom() -> Result<String, String> {
    let mut rng = StreamRng::new(SEED, 2);
    let (m, n, k) = (40, 100, 37);
    let phi = gaussian_phi(&mut rng, m, n).map_err(|e| e.to_string())?;
    let atoms = phi.mul(&Basis::Dct.matrix(n).transpose()).map_err(|e| e.to_string())?;
    let dict = Dictionary::new(atoms).map_err(|e| e.to_string())?;
    let c = Complex64::new(2.5, -1.0);
    let y: Vec<Complex64> = dict.atoms().col(k).iter().map(|a| c * *a).collect();
    let sol = omp(&y, &dict, StopPolicy::default_for(m)).map_err(|e| e.to_string())?;
    if sol.support != [k] {
        return Err(format!("support {:?}, expected [{k}]", sol.support));
    }
    let err = (sol.coefficients[k] - c).norm();
    if err > 1e-10 {
        return Err(format!("coefficient error {err:.2e}"));
    }
    Ok(format!("atom {k} recovered, coefficient error {err:.1e}"))
}

fn fusion_identities() -> Result<String, String> {
    let f = |u: &LocalDecisionVector, r: &FusionRule| fuse(u, r).map(|h| h.is_h1()).map_err(|e| e.to_string());
    let mut inputs = 0u64;
    for n in 1..=10usize {
        for bits in 0u32..(1 << n) {
            let u = LocalDecisionVector((0..n).map(|i| bits >> i & 1 == 1).collect());
            let (or, and, maj) = (
                f(&u, &FusionRule::or())?,
                f(&u, &FusionRule::and())?,
                f(&u, &FusionRule::majority())?,
            );
            if (maj && !or) || (and && !maj) {
                return Err(format!("dominance violated at N={n}, u={bits:b}"));
            }
            if f(&u, &FusionRule::average())? != maj {
                return Err(format!("uniform average differs from majority at N={n}, u={bits:b}"));
            }
            inputs += 1;
        }
    }
    let a = 0.01;
    for n in 1..=12 {
        let or = fused_pfa_analytic(a, n, FusionKind::Or).map_err(|e| e.to_string())?;
        let and_c = fused_pfa_analytic(1.0 - a, n, FusionKind::And).map_err(|e| e.to_string())?;
        if (or - (1.0 - and_c)).abs() > 1e-12 {
            return Err(format!("Or/And duality violated at N={n}"));
        }
    }
    let maj1 = fused_pfa_analytic(a, 1, FusionKind::Majority).map_err(|e| e.to_string())?;
    if (maj1 - a).abs() > 1e-12 {
        return Err(format!("single-node majority rate {maj1}"));
    }
    Ok(format!("{inputs} decision vectors enumerated"))
}

pub fn run_selfcheck(opts: SelfcheckOptions) -> SelfcheckReport {
    SelfcheckReport {
        checks: vec![
            check("chi2_roundtrip", chi2_roundtrip(opts.quantile_perturbation)),
            check("cholesky_roundtrip", cholesky_roundtrip()),
            check("omp_single_atom", omp_single_atom()),
            check("fusion_identities", fusion_identities()),
        ],
    }
}
