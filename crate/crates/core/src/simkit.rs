//! Monte Carlo engine: scenario definitions, end-to-end trials and
//! detection-probability curves over an SNR grid.
//!
//! Every trial draws from its own RNG substream addressed by
//! `(seed, snr index, occupant, trial index)`, and curves are reduced from
//! integer decision counts, so results do not depend on how trials are
//! partitioned across workers.
//!
//! One scenario sweeps several detectors over the same trials (common
//! random numbers): every threshold, every fusion rule and, for
//! compressed-sensing schemes, the uncompressed reference, all see the same
//! channel and noise realizations.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;

use crate::channel::{measure, ChannelConfig, ChannelModel, NoiseModel, Occupant};
use crate::detect::{
    fc_raw_decide, fc_raw_statistic, fuse, local_statistic, FusionKind, FusionRule, Hypothesis, LocalDecisionVector,
    StatisticScale,
};
use crate::numerics::stats::binomial_stderr;
use crate::numerics::StreamRng;
use crate::sparse::{compress, compress_decisions, reconstruct_decisions, reconstruct_raw, Basis, CsCodec, StopPolicy};
use crate::{Error, Result};

/// Substream reserved for drawing the measurement matrix.
pub const CODEC_STREAM: u64 = u64::MAX;
const TRIAL_BITS: u32 = 47;
pub const MAX_TRIALS: u64 = 1 << TRIAL_BITS;
pub const MAX_SNR_POINTS: usize = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Nodes forward raw measurements; one test on the stacked vector.
    FcRaw,
    /// Nodes test locally and forward hard decisions for fusion.
    LocalFusion,
    /// Raw measurements forwarded through the compressed-sensing link.
    FcRawCs,
    /// Local decisions forwarded through the compressed-sensing link.
    LocalFusionCs,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::FcRaw => "fc_raw",
            Scheme::LocalFusion => "local_fusion",
            Scheme::FcRawCs => "fc_raw_cs",
            Scheme::LocalFusionCs => "local_fusion_cs",
        }
    }

    pub fn is_local(self) -> bool {
        matches!(self, Scheme::LocalFusion | Scheme::LocalFusionCs)
    }

    pub fn is_compressed(self) -> bool {
        matches!(self, Scheme::FcRawCs | Scheme::LocalFusionCs)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Compressed-sensing link settings; `Φ` is drawn from the scenario seed.
#[derive(Clone, Debug, PartialEq)]
pub struct CsSettings {
    pub m: usize,
    pub basis: Basis,
    pub stop: StopPolicy,
    pub complement_decoding: bool,
}

impl CsSettings {
    pub fn new(m: usize, basis: Basis) -> Self {
        Self {
            m,
            basis,
            stop: StopPolicy::default_for(m),
            complement_decoding: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub scheme: Scheme,
    pub channel: ChannelConfig,
    pub scale: StatisticScale,
    /// Fusion-center thresholds δ (raw schemes) or per-node thresholds δ_n
    /// (local schemes); one curve family per entry.
    pub thresholds: Vec<f64>,
    /// Fusion rules evaluated by local schemes.
    pub rules: Vec<FusionRule>,
    /// Also report node 0's own decision (local schemes).
    pub single_node_baseline: bool,
    pub cs: Option<CsSettings>,
    pub snr_grid_db: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        if self.trials == 0 || self.trials > MAX_TRIALS {
            return Err(Error::invalid(format!(
                "trials must lie in [1, 2^47], got {}",
                self.trials
            )));
        }
        if self.snr_grid_db.is_empty() || self.snr_grid_db.len() > MAX_SNR_POINTS {
            return Err(Error::invalid("SNR grid must be non-empty (at most 65536 points)"));
        }
        if let Some(s) = self.snr_grid_db.iter().find(|s| !s.is_finite()) {
            return Err(Error::invalid(format!("SNR grid entries must be finite, got {s}")));
        }
        if self.thresholds.is_empty() {
            return Err(Error::invalid("at least one threshold is required"));
        }
        if let Some(d) = self.thresholds.iter().find(|d| !(**d > 0.0) || !d.is_finite()) {
            return Err(Error::invalid(format!("thresholds must be positive, got {d}")));
        }
        if self.scheme.is_local() {
            if self.rules.is_empty() && !self.single_node_baseline {
                return Err(Error::invalid("local schemes need at least one fusion rule"));
            }
            for r in &self.rules {
                r.validate()?;
                if let Some(w) = &r.weights {
                    Error::check_len("fusion weights", self.channel.n_nodes, w.len())?;
                }
            }
        }
        if self.scheme.is_compressed() {
            let cs = self
                .cs
                .as_ref()
                .ok_or_else(|| Error::invalid("compressed schemes need compressed-sensing settings"))?;
            let n = self.report_len();
            if cs.m == 0 || cs.m >= n {
                return Err(Error::invalid(format!(
                    "compressed length must satisfy 0 < M < {n}, got {}",
                    cs.m
                )));
            }
        }
        Ok(())
    }

    /// Length of the vector the relay forwards: `N·L` raw, `N` decisions.
    pub fn report_len(&self) -> usize {
        if self.scheme.is_local() {
            self.channel.n_nodes
        } else {
            self.channel.stacked_len()
        }
    }

    /// Noise power `σ² = 10^(−SNR/10)` at every node.
    pub fn sigma2(snr_db: f64) -> f64 {
        libm::pow(10.0, -snr_db / 10.0)
    }
}

/// What one curve measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurveKind {
    /// Fusion-center test on the raw stacked measurement.
    FcRaw { threshold: usize },
    /// Fusion-center test on the compressed-sensing reconstruction.
    FcReconstructed { threshold: usize },
    /// Fused local decisions; `compressed` when they crossed the CS link.
    Fused {
        threshold: usize,
        rule: usize,
        compressed: bool,
    },
    /// Node 0 alone.
    SingleNode { threshold: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurveSpec {
    pub label: String,
    pub kind: CurveKind,
}

fn rule_name(rule: &FusionRule) -> &'static str {
    match rule.kind {
        FusionKind::Or => "or",
        FusionKind::And => "and",
        FusionKind::Majority => "majority",
        FusionKind::WeightedAverage => "average",
    }
}

fn curve_specs(s: &Scenario) -> Vec<CurveSpec> {
    let mut out = Vec::new();
    for (ti, d) in s.thresholds.iter().enumerate() {
        match s.scheme {
            Scheme::FcRaw => out.push(CurveSpec {
                label: format!("delta={d}"),
                kind: CurveKind::FcRaw { threshold: ti },
            }),
            Scheme::FcRawCs => {
                out.push(CurveSpec {
                    label: format!("delta={d} cs"),
                    kind: CurveKind::FcReconstructed { threshold: ti },
                });
                out.push(CurveSpec {
                    label: format!("delta={d} raw"),
                    kind: CurveKind::FcRaw { threshold: ti },
                });
            }
            Scheme::LocalFusion | Scheme::LocalFusionCs => {
                let compressed = s.scheme == Scheme::LocalFusionCs;
                for (ri, r) in s.rules.iter().enumerate() {
                    if compressed {
                        out.push(CurveSpec {
                            label: format!("delta_n={d} {} cs", rule_name(r)),
                            kind: CurveKind::Fused {
                                threshold: ti,
                                rule: ri,
                                compressed: true,
                            },
                        });
                    }
                    out.push(CurveSpec {
                        label: if compressed {
                            format!("delta_n={d} {} raw", rule_name(r))
                        } else {
                            format!("delta_n={d} {}", rule_name(r))
                        },
                        kind: CurveKind::Fused {
                            threshold: ti,
                            rule: ri,
                            compressed: false,
                        },
                    });
                }
                if s.single_node_baseline {
                    out.push(CurveSpec {
                        label: format!("delta_n={d} single"),
                        kind: CurveKind::SingleNode { threshold: ti },
                    });
                }
            }
        }
    }
    out
}

/// Empirical detection and false-alarm probabilities over the SNR grid.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectionCurve {
    pub scheme: Scheme,
    pub label: String,
    pub snr_db: Vec<f64>,
    /// `P_d = 1 − P_md`, from trials with Eve on the channel.
    pub p_d: Vec<f64>,
    pub p_d_stderr: Vec<f64>,
    /// From trials with Alice on the channel.
    pub p_fa: Vec<f64>,
    pub p_fa_stderr: Vec<f64>,
    pub trials: u64,
    pub config_digest: String,
}

impl DetectionCurve {
    pub fn from_counts(
        scheme: Scheme,
        label: String,
        snr_db: Vec<f64>,
        detections: &[u64],
        false_alarms: &[u64],
        trials: u64,
    ) -> Self {
        let rate = |c: &u64| *c as f64 / trials as f64;
        let p_d: Vec<f64> = detections.iter().map(rate).collect();
        let p_fa: Vec<f64> = false_alarms.iter().map(rate).collect();
        Self {
            scheme,
            label,
            p_d_stderr: p_d.iter().map(|p| binomial_stderr(*p, trials)).collect(),
            p_fa_stderr: p_fa.iter().map(|p| binomial_stderr(*p, trials)).collect(),
            snr_db,
            p_d,
            p_fa,
            trials,
            config_digest: String::new(),
        }
    }

    /// Grid indices where `P_d` drops by more than `k_sigma` combined
    /// standard errors relative to the previous point.
    pub fn nonmonotone_points(&self, k_sigma: f64) -> Vec<usize> {
        (1..self.p_d.len())
            .filter(|&i| {
                let drop = self.p_d[i - 1] - self.p_d[i];
                let (a, b) = (self.p_d_stderr[i - 1], self.p_d_stderr[i]);
                let se = libm::sqrt(a * a + b * b);
                drop > k_sigma * se && drop > 0.0
            })
            .collect()
    }

    /// SNR (dB) at which `P_d` first reaches `target`, linearly
    /// interpolated between the bracketing grid points.
    pub fn crossing(&self, target: f64) -> Result<f64> {
        let i = self
            .p_d
            .iter()
            .position(|p| *p >= target)
            .ok_or_else(|| Error::NotComparable(format!("`{}` never reaches P_d = {target}", self.label)))?;
        if i == 0 {
            return Err(Error::NotComparable(format!(
                "`{}` is already at P_d >= {target} at the first grid point",
                self.label
            )));
        }
        let (s0, s1) = (self.snr_db[i - 1], self.snr_db[i]);
        let (p0, p1) = (self.p_d[i - 1], self.p_d[i]);
        Ok(s0 + (target - p0) / (p1 - p0) * (s1 - s0))
    }
}

/// Extra SNR `a` needs over `b` to reach `target_pd`.
pub fn snr_margin(a: &DetectionCurve, b: &DetectionCurve, target_pd: f64) -> Result<f64> {
    Ok(a.crossing(target_pd)? - b.crossing(target_pd)?)
}

/// A validated scenario with its channel model, per-SNR noise models and
/// codec prepared.
#[derive(Clone, Debug)]
pub struct Simulator {
    scenario: Scenario,
    model: ChannelModel,
    noise: Vec<NoiseModel>,
    codec: Option<CsCodec>,
    curves: Vec<CurveSpec>,
}

impl Simulator {
    pub fn new(scenario: Scenario) -> Result<Self> {
        scenario.validate()?;
        let model = ChannelModel::new(scenario.channel.clone())?;
        let (n, l) = (scenario.channel.n_nodes, scenario.channel.n_taps);
        let noise = scenario
            .snr_grid_db
            .iter()
            .map(|s| NoiseModel::homogeneous(n, l, Scenario::sigma2(*s)))
            .collect::<Result<Vec<_>>>()?;
        let codec = match (&scenario.cs, scenario.scheme.is_compressed()) {
            (Some(cs), true) => {
                let mut rng = StreamRng::new(scenario.seed, CODEC_STREAM);
                Some(
                    CsCodec::gaussian(&mut rng, cs.m, scenario.report_len(), cs.basis, cs.stop)?
                        .with_complement_decoding(cs.complement_decoding),
                )
            }
            _ => None,
        };
        let curves = curve_specs(&scenario);
        Ok(Self {
            scenario,
            model,
            noise,
            codec,
            curves,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn curves(&self) -> &[CurveSpec] {
        &self.curves
    }

    pub fn codec(&self) -> Option<&CsCodec> {
        self.codec.as_ref()
    }

    /// Substream id of one trial.
    pub fn trial_stream(snr_idx: usize, trial: u64, occupant: Occupant) -> u64 {
        let occ = match occupant {
            Occupant::Alice => 0u64,
            Occupant::Eve => 1u64,
        };
        ((snr_idx as u64) << (TRIAL_BITS + 1)) | (occ << TRIAL_BITS) | trial
    }

    pub fn trial_rng(&self, snr_idx: usize, trial: u64, occupant: Occupant) -> StreamRng {
        StreamRng::new(self.scenario.seed, Self::trial_stream(snr_idx, trial, occupant))
    }

    /// One end-to-end trial on its own substream; one decision per curve.
    pub fn run_trial(&self, snr_idx: usize, trial: u64, occupant: Occupant) -> Result<Vec<Hypothesis>> {
        if snr_idx >= self.noise.len() {
            return Err(Error::invalid(format!("SNR index {snr_idx} out of range")));
        }
        if trial >= MAX_TRIALS {
            return Err(Error::invalid("trial index exceeds 2^47"));
        }
        let mut rng = self.trial_rng(snr_idx, trial, occupant);
        self.run_trial_with(&mut rng, snr_idx, occupant)
    }

    /// One end-to-end trial drawing from `rng`.
    pub fn run_trial_with(&self, rng: &mut StreamRng, snr_idx: usize, occupant: Occupant) -> Result<Vec<Hypothesis>> {
        let s = &self.scenario;
        let noise = &self.noise[snr_idx];
        let ens = self.model.draw(rng);
        let z = measure(rng, &ens, occupant, noise)?;
        let h_a = ens.stacked(Occupant::Alice);
        let mut out = Vec::with_capacity(self.curves.len());

        match s.scheme {
            Scheme::FcRaw | Scheme::FcRawCs => {
                let t_raw = fc_raw_statistic(&z.z_star, h_a, noise, s.scale)?;
                let t_cs = match &self.codec {
                    Some(codec) if s.scheme == Scheme::FcRawCs => {
                        let est = reconstruct_raw(&compress(&z.z_star, codec)?, codec)?;
                        Some(fc_raw_statistic(&est, h_a, noise, s.scale)?)
                    }
                    _ => None,
                };
                for c in &self.curves {
                    out.push(match c.kind {
                        CurveKind::FcRaw { threshold } => fc_raw_decide(t_raw, s.thresholds[threshold]),
                        CurveKind::FcReconstructed { threshold } => fc_raw_decide(
                            t_cs.expect("codec present for compressed scheme"),
                            s.thresholds[threshold],
                        ),
                        _ => unreachable!("raw schemes only build fusion-center curves"),
                    });
                }
            }
            Scheme::LocalFusion | Scheme::LocalFusionCs => {
                let n = s.channel.n_nodes;
                let l = s.channel.n_taps;
                let stats = (0..n)
                    .map(|node| local_statistic(z.node(node), &h_a[node * l..(node + 1) * l], noise, node, s.scale))
                    .collect::<Result<Vec<f64>>>()?;
                let mut per_threshold: Vec<(LocalDecisionVector, Option<LocalDecisionVector>)> =
                    Vec::with_capacity(s.thresholds.len());
                for d in &s.thresholds {
                    let u = LocalDecisionVector(stats.iter().map(|t| fc_raw_decide(*t, *d).is_h1()).collect());
                    let recovered = match &self.codec {
                        Some(codec) if s.scheme == Scheme::LocalFusionCs => {
                            Some(reconstruct_decisions(&compress_decisions(&u, codec)?, codec)?)
                        }
                        _ => None,
                    };
                    per_threshold.push((u, recovered));
                }
                for c in &self.curves {
                    out.push(match c.kind {
                        CurveKind::Fused {
                            threshold,
                            rule,
                            compressed,
                        } => {
                            let (u, rec) = &per_threshold[threshold];
                            let v = if compressed {
                                rec.as_ref().expect("codec present for compressed scheme")
                            } else {
                                u
                            };
                            fuse(v, &s.rules[rule])?
                        }
                        CurveKind::SingleNode { threshold } => {
                            if per_threshold[threshold].0 .0[0] {
                                Hypothesis::H1
                            } else {
                                Hypothesis::H0
                            }
                        }
                        _ => unreachable!("local schemes only build fused and single-node curves"),
                    });
                }
            }
        }
        Ok(out)
    }

    /// Number of H1 decisions per curve over a contiguous block of trials.
    pub fn count_h1(&self, snr_idx: usize, occupant: Occupant, trials: Range<u64>) -> Result<Vec<u64>> {
        let mut counts = vec![0u64; self.curves.len()];
        for t in trials {
            for (c, d) in counts.iter_mut().zip(self.run_trial(snr_idx, t, occupant)?) {
                *c += u64::from(d.is_h1());
            }
        }
        Ok(counts)
    }

    /// Builds curves from per-SNR H1 counts (`[snr][curve]`) of Eve trials
    /// (detections) and Alice trials (false alarms).
    pub fn assemble(&self, detections: &[Vec<u64>], false_alarms: &[Vec<u64>]) -> Vec<DetectionCurve> {
        let s = &self.scenario;
        self.curves
            .iter()
            .enumerate()
            .map(|(ci, spec)| {
                let det: Vec<u64> = detections.iter().map(|row| row[ci]).collect();
                let fa: Vec<u64> = false_alarms.iter().map(|row| row[ci]).collect();
                DetectionCurve::from_counts(s.scheme, spec.label.clone(), s.snr_grid_db.clone(), &det, &fa, s.trials)
            })
            .collect()
    }

    /// Runs every SNR point on the calling thread. Either all curves are
    /// produced or an error is returned.
    pub fn estimate_curves(&self) -> Result<Vec<DetectionCurve>> {
        let mut det = Vec::with_capacity(self.noise.len());
        let mut fa = Vec::with_capacity(self.noise.len());
        for i in 0..self.noise.len() {
            det.push(self.count_h1(i, Occupant::Eve, 0..self.scenario.trials)?);
            fa.push(self.count_h1(i, Occupant::Alice, 0..self.scenario.trials)?);
        }
        Ok(self.assemble(&det, &fa))
    }
}

/// All curves of a scenario, computed sequentially.
pub fn estimate_curves(scenario: &Scenario) -> Result<Vec<DetectionCurve>> {
    Simulator::new(scenario.clone())?.estimate_curves()
}

/// The curve of a single-detector scenario.
pub fn estimate_curve(scenario: &Scenario) -> Result<DetectionCurve> {
    let sim = Simulator::new(scenario.clone())?;
    if sim.curves().len() != 1 {
        return Err(Error::invalid(format!(
            "scenario produces {} curves; use estimate_curves",
            sim.curves().len()
        )));
    }
    Ok(sim.estimate_curves()?.remove(0))
}
