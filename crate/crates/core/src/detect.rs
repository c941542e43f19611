//! Neyman-Pearson tests at the fusion center and at individual nodes,
//! threshold calibration from false-alarm targets, and hard-decision fusion.
//!
//! All tests compare a whitened distance to the legitimate reference
//! channel, `(z − h_A)^H Σ^{-1} (z − h_A)`, against a threshold; `H1`
//! (Eve) is declared only when the statistic strictly exceeds it.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::channel::NoiseModel;
use crate::numerics::{chi2_quantile, ln_gamma};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    /// Legitimate transmitter; data accepted.
    H0,
    /// Intruder; data discarded.
    H1,
}

impl Hypothesis {
    pub fn is_h1(self) -> bool {
        self == Hypothesis::H1
    }
}

/// Scaling applied to the whitened quadratic form.
///
/// For `v ~ CN(0, Σ)` the form `v^H Σ^{-1} v` has mean `L` (half a
/// `χ²(2L)` variable); doubling it makes the statistic exactly `χ²(2L)`
/// under H0, so thresholds from the chi-squared quantile hit their target
/// false-alarm rates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum StatisticScale {
    #[default]
    Chi2,
    RawQuadratic,
}

impl StatisticScale {
    pub fn factor(self) -> f64 {
        match self {
            StatisticScale::Chi2 => 2.0,
            StatisticScale::RawQuadratic => 1.0,
        }
    }
}

/// Threshold for a target false-alarm rate: the `1 − α` quantile of `χ²(dof)`.
pub fn solve_threshold(alpha: f64, dof: u32) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!(
            "false-alarm target must lie in (0, 1), got {alpha}"
        )));
    }
    chi2_quantile(1.0 - alpha, dof)
}

/// A single threshold test with its calibration provenance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectorConfig {
    pub threshold: f64,
    /// Target false-alarm rate the threshold was solved from, if any.
    pub target_pfa: Option<f64>,
    pub scale: StatisticScale,
}

impl DetectorConfig {
    pub fn with_threshold(threshold: f64, scale: StatisticScale) -> Result<Self> {
        if !(threshold > 0.0) || !threshold.is_finite() {
            return Err(Error::invalid(format!("threshold must be positive, got {threshold}")));
        }
        Ok(Self {
            threshold,
            target_pfa: None,
            scale,
        })
    }

    /// Solves the threshold from `alpha` for a statistic with `dof` degrees
    /// of freedom (`2L` locally, `2NL` at the fusion center).
    pub fn from_pfa(alpha: f64, dof: u32, scale: StatisticScale) -> Result<Self> {
        Ok(Self {
            threshold: solve_threshold(alpha, dof)?,
            target_pfa: Some(alpha),
            scale,
        })
    }
}

/// Fusion-center statistic on the stacked raw measurements.
pub fn fc_raw_statistic(
    z_star: &[Complex64],
    h_ab_star: &[Complex64],
    noise: &NoiseModel,
    scale: StatisticScale,
) -> Result<f64> {
    let l = noise.n_taps();
    let n = noise.n_nodes();
    Error::check_len("stacked measurement", n * l, z_star.len())?;
    Error::check_len("stacked reference channel", n * l, h_ab_star.len())?;
    let mut residual = vec![Complex64::new(0.0, 0.0); l];
    let mut total = 0.0;
    for node in 0..n {
        let span = node * l..(node + 1) * l;
        for ((r, z), h) in residual.iter_mut().zip(&z_star[span.clone()]).zip(&h_ab_star[span]) {
            *r = z - h;
        }
        total += noise.whitened_energy(node, &residual)?;
    }
    Ok(total * scale.factor())
}

/// Strict threshold comparison; ties resolve to H0.
pub fn fc_raw_decide(statistic: f64, delta: f64) -> Hypothesis {
    if statistic > delta {
        Hypothesis::H1
    } else {
        Hypothesis::H0
    }
}

/// Per-node statistic on an `L`-tap measurement.
pub fn local_statistic(
    z_n: &[Complex64],
    h_abn: &[Complex64],
    noise: &NoiseModel,
    node: usize,
    scale: StatisticScale,
) -> Result<f64> {
    Error::check_len("node measurement", noise.n_taps(), z_n.len())?;
    Error::check_len("node reference channel", noise.n_taps(), h_abn.len())?;
    let residual: Vec<Complex64> = z_n.iter().zip(h_abn).map(|(z, h)| z - h).collect();
    Ok(noise.whitened_energy(node, &residual)? * scale.factor())
}

/// Per-node hard decision, `true` meaning H1.
pub fn local_decide(
    z_n: &[Complex64],
    h_abn: &[Complex64],
    noise: &NoiseModel,
    node: usize,
    delta_n: f64,
    scale: StatisticScale,
) -> Result<bool> {
    let t = local_statistic(z_n, h_abn, noise, node, scale)?;
    Ok(fc_raw_decide(t, delta_n).is_h1())
}

/// One hard decision per node (`true` = H1).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LocalDecisionVector(pub Vec<bool>);

impl LocalDecisionVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count_h1(&self) -> usize {
        self.0.iter().filter(|u| **u).count()
    }

    /// Decisions as `{0.0, 1.0}` amplitudes.
    pub fn to_real(&self) -> Vec<f64> {
        self.0.iter().map(|&u| if u { 1.0 } else { 0.0 }).collect()
    }

    /// Local decisions of every node against per-node thresholds.
    pub fn from_statistics(statistics: &[f64], thresholds: &[f64]) -> Result<Self> {
        Error::check_len("per-node thresholds", statistics.len(), thresholds.len())?;
        Ok(Self(
            statistics
                .iter()
                .zip(thresholds)
                .map(|(t, d)| fc_raw_decide(*t, *d).is_h1())
                .collect(),
        ))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FusionKind {
    Or,
    And,
    Majority,
    WeightedAverage,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FusionRule {
    pub kind: FusionKind,
    /// Per-node weights for [`FusionKind::WeightedAverage`]; uniform when absent.
    pub weights: Option<Vec<f64>>,
    pub avg_threshold: f64,
}

impl FusionRule {
    pub fn new(kind: FusionKind) -> Self {
        Self {
            kind,
            weights: None,
            avg_threshold: 0.5,
        }
    }

    pub fn or() -> Self {
        Self::new(FusionKind::Or)
    }

    pub fn and() -> Self {
        Self::new(FusionKind::And)
    }

    pub fn majority() -> Self {
        Self::new(FusionKind::Majority)
    }

    /// Uniform-weight average compared against 0.5.
    pub fn average() -> Self {
        Self::new(FusionKind::WeightedAverage)
    }

    pub fn weighted(weights: Vec<f64>, avg_threshold: f64) -> Result<Self> {
        let rule = Self {
            kind: FusionKind::WeightedAverage,
            weights: Some(weights),
            avg_threshold,
        };
        rule.validate()?;
        Ok(rule)
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind != FusionKind::WeightedAverage {
            return Ok(());
        }
        if !(self.avg_threshold > 0.0 && self.avg_threshold < 1.0) {
            return Err(Error::invalid(format!(
                "averaging threshold must lie in (0, 1), got {}",
                self.avg_threshold
            )));
        }
        if let Some(w) = &self.weights {
            if w.iter().any(|x| !(*x >= 0.0)) {
                return Err(Error::invalid("fusion weights must be non-negative"));
            }
            let s: f64 = w.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!("fusion weights must sum to 1, got {s}")));
            }
        }
        Ok(())
    }
}

/// Combines local hard decisions into the fusion center's decision.
/// Every rule resolves ties to H0.
pub fn fuse(u: &LocalDecisionVector, rule: &FusionRule) -> Result<Hypothesis> {
    if u.is_empty() {
        return Err(Error::invalid("cannot fuse an empty decision vector"));
    }
    rule.validate()?;
    let n = u.len();
    let ones = u.count_h1();
    let h1 = match rule.kind {
        FusionKind::Or => ones > 0,
        FusionKind::And => ones == n,
        FusionKind::Majority => 2 * ones > n,
        FusionKind::WeightedAverage => {
            let avg = match &rule.weights {
                Some(w) => {
                    Error::check_len("fusion weights", n, w.len())?;
                    w.iter().zip(&u.0).filter(|(_, &ui)| ui).map(|(wi, _)| wi).sum::<f64>()
                }
                None => ones as f64 / n as f64,
            };
            avg > rule.avg_threshold
        }
    };
    Ok(if h1 { Hypothesis::H1 } else { Hypothesis::H0 })
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Closed-form fused false-alarm rate for `N` independent nodes sharing
/// per-node rate `alpha`.
pub fn fused_pfa_analytic(alpha: f64, n: usize, kind: FusionKind) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid(format!(
            "false-alarm rate must lie in [0, 1], got {alpha}"
        )));
    }
    if n == 0 {
        return Err(Error::invalid("node count must be positive"));
    }
    Ok(match kind {
        FusionKind::Or => -libm::expm1(n as f64 * libm::log1p(-alpha)),
        FusionKind::And => libm::pow(alpha, n as f64),
        FusionKind::Majority => {
            if alpha == 0.0 {
                0.0
            } else if alpha == 1.0 {
                1.0
            } else {
                (n / 2 + 1..=n)
                    .map(|k| {
                        libm::exp(
                            ln_binomial(n, k) + k as f64 * libm::log(alpha) + (n - k) as f64 * libm::log1p(-alpha),
                        )
                    })
                    .sum()
            }
        }
        FusionKind::WeightedAverage => {
            return Err(Error::invalid(
                "no closed form for weighted averaging; use Majority for uniform weights",
            ))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{measure, ChannelConfig, ChannelModel, Occupant};
    use crate::numerics::{chi2_cdf, stats, StreamRng};

    fn u(bits: &[u8]) -> LocalDecisionVector {
        LocalDecisionVector(bits.iter().map(|b| *b == 1).collect())
    }

    #[test]
    fn threshold_examples() {
        assert!((solve_threshold(0.01, 12).unwrap() - 26.2).abs() < 0.05);
        assert!((solve_threshold(0.0001, 12).unwrap() - 39.1).abs() < 0.3);
        assert!((solve_threshold(0.5, 2).unwrap() - 2.0 * core::f64::consts::LN_2).abs() < 1e-9);
        assert!(solve_threshold(0.0, 12).is_err());
        assert!(solve_threshold(1.0, 12).is_err());
    }

    #[test]
    fn solved_config_hits_target() {
        for (alpha, dof) in [(0.01, 12u32), (0.001, 120), (0.05, 1200)] {
            let cfg = DetectorConfig::from_pfa(alpha, dof, StatisticScale::Chi2).unwrap();
            assert!((chi2_cdf(cfg.threshold, dof).unwrap() - (1.0 - alpha)).abs() < 1e-8);
            assert_eq!(cfg.target_pfa, Some(alpha));
        }
        assert!(DetectorConfig::with_threshold(-1.0, StatisticScale::Chi2).is_err());
    }

    #[test]
    fn threshold_monotonicity() {
        let alphas = [0.5, 0.1, 0.01, 0.001, 1e-4, 1e-6];
        for dof in [2u32, 12, 120, 1200] {
            let d: Vec<f64> = alphas.iter().map(|a| solve_threshold(*a, dof).unwrap()).collect();
            assert!(d.windows(2).all(|w| w[1] > w[0]));
        }
        for alpha in alphas {
            let d: Vec<f64> = [2u32, 12, 120, 1200]
                .iter()
                .map(|k| solve_threshold(alpha, *k).unwrap())
                .collect();
            assert!(d.windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn statistic_closed_forms() {
        let noise = NoiseModel::homogeneous(2, 3, 1.0).unwrap();
        let h: Vec<Complex64> = (0..6).map(|i| Complex64::new(i as f64, 1.0)).collect();
        assert_eq!(
            fc_raw_statistic(&h, &h, &noise, StatisticScale::Chi2).unwrap(),
            0.0
        );
        let mut z = h.clone();
        z[0] += Complex64::new(1.0, 0.0);
        assert!((fc_raw_statistic(&z, &h, &noise, StatisticScale::Chi2).unwrap() - 2.0).abs() < 1e-15);
        assert!((fc_raw_statistic(&z, &h, &noise, StatisticScale::RawQuadratic).unwrap() - 1.0).abs() < 1e-15);
        assert!(fc_raw_statistic(&z[..5], &h, &noise, StatisticScale::Chi2).is_err());
    }

    #[test]
    fn decision_ties_go_to_h0() {
        assert_eq!(fc_raw_decide(0.0, 26.2), Hypothesis::H0);
        assert_eq!(fc_raw_decide(27.0, 26.2), Hypothesis::H1);
        assert_eq!(fc_raw_decide(26.2, 26.2), Hypothesis::H0);
    }

    #[test]
    fn local_decision_matches_reference() {
        let noise = NoiseModel::homogeneous(3, 6, 0.5).unwrap();
        let h = vec![Complex64::new(0.3, -0.2); 6];
        assert!(!local_decide(&h, &h, &noise, 1, 26.2, StatisticScale::Chi2).unwrap());
        assert!(local_decide(&h[..4], &h, &noise, 1, 26.2, StatisticScale::Chi2).is_err());
    }

    #[test]
    fn fc_statistic_is_chi2_under_h0() {
        // KS against χ²(2NL), N=10, L=6, significance 0.001
        let (n, l) = (10, 6);
        let model = ChannelModel::new(ChannelConfig::new(n, l, 0.9)).unwrap();
        let noise = NoiseModel::from_snr_db(n, l, 3.0).unwrap();
        let mut rng = StreamRng::new(77, 0);
        let trials = 100_000;
        let mut stat = Vec::with_capacity(trials);
        for _ in 0..trials {
            let ens = model.draw(&mut rng);
            let z = measure(&mut rng, &ens, Occupant::Alice, &noise).unwrap();
            stat.push(
                fc_raw_statistic(
                    &z.z_star,
                    ens.stacked(Occupant::Alice),
                    &noise,
                    StatisticScale::Chi2,
                )
                .unwrap(),
            );
        }
        let mean = stat.iter().sum::<f64>() / trials as f64;
        assert!((mean - 120.0).abs() < 1.2, "mean {mean}");
        let d = stats::ks_statistic(&stat, |x| chi2_cdf(x, 120)).unwrap();
        assert!(stats::ks_p_value(d, trials) > 0.001, "D = {d}");
    }

    #[test]
    fn fusion_examples() {
        assert_eq!(fuse(&u(&[0, 0, 1]), &FusionRule::or()).unwrap(), Hypothesis::H1);
        assert_eq!(fuse(&u(&[0, 0, 1]), &FusionRule::and()).unwrap(), Hypothesis::H0);
        assert_eq!(fuse(&u(&[1, 1, 1]), &FusionRule::and()).unwrap(), Hypothesis::H1);
        assert_eq!(
            fuse(&u(&[1, 1, 0, 0]), &FusionRule::majority()).unwrap(),
            Hypothesis::H0
        );
        assert_eq!(fuse(&u(&[1, 1, 0]), &FusionRule::majority()).unwrap(), Hypothesis::H1);
        assert_eq!(fuse(&u(&[1, 1, 0, 0]), &FusionRule::average()).unwrap(), Hypothesis::H0);
        assert!(fuse(&u(&[]), &FusionRule::or()).is_err());
    }

    #[test]
    fn weighted_fusion() {
        let rule = FusionRule::weighted(vec![0.7, 0.1, 0.2], 0.5).unwrap();
        assert_eq!(fuse(&u(&[1, 0, 0]), &rule).unwrap(), Hypothesis::H1);
        assert_eq!(fuse(&u(&[0, 1, 1]), &rule).unwrap(), Hypothesis::H0);
        assert!(fuse(&u(&[0, 1]), &rule).is_err());
        assert!(FusionRule::weighted(vec![0.5, 0.6], 0.5).is_err());
        assert!(FusionRule::weighted(vec![0.5, 0.5], 1.0).is_err());
    }

    #[test]
    fn fusion_dominance_exhaustive() {
        for n in 1..=12usize {
            for mask in 0u32..(1 << n) {
                let v = LocalDecisionVector((0..n).map(|i| mask >> i & 1 == 1).collect());
                let or = fuse(&v, &FusionRule::or()).unwrap().is_h1();
                let maj = fuse(&v, &FusionRule::majority()).unwrap().is_h1();
                let and = fuse(&v, &FusionRule::and()).unwrap().is_h1();
                let avg = fuse(&v, &FusionRule::average()).unwrap().is_h1();
                assert!(!maj || or);
                assert!(!and || maj);
                assert_eq!(
                    avg, maj,
                    "uniform average differs from majority for n={n} mask={mask:b}"
                );
            }
        }
    }

    #[test]
    fn analytic_fused_pfa() {
        let or = fused_pfa_analytic(0.01, 10, FusionKind::Or).unwrap();
        assert!((or - (1.0 - 0.99f64.powi(10))).abs() < 1e-15);
        assert!((or - 0.09562).abs() < 1e-5);
        let and = fused_pfa_analytic(0.01, 10, FusionKind::And).unwrap();
        assert!((and - 1e-20).abs() < 1e-33);
        // exact binomial tail P(Bin(10, 0.01) ≥ 6), summed with integer binomials
        let choose = [210.0, 252.0, 210.0, 120.0, 45.0, 10.0, 1.0];
        let exact: f64 = (6..=10)
            .map(|k| choose[k - 4] * 0.01f64.powi(k as i32) * 0.99f64.powi(10 - k as i32))
            .sum();
        let maj = fused_pfa_analytic(0.01, 10, FusionKind::Majority).unwrap();
        assert!(((maj - exact) / exact).abs() < 1e-10, "{maj} vs {exact}");
        assert!(fused_pfa_analytic(0.01, 10, FusionKind::WeightedAverage).is_err());
        assert!(fused_pfa_analytic(1.5, 10, FusionKind::Or).is_err());
    }
}
