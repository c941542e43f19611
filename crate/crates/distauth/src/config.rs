//! Scenario files: flat `key = value` text with section prefixes.
//!
//! ```text
//! # comment
//! scenario.scheme    = fc_raw            # fc_raw | local_fusion | fc_raw_cs | local_fusion_cs
//! scenario.snr_db    = -4:1:8            # list or start:step:stop
//! scenario.trials    = 10000
//! scenario.seed      = 1
//! channel.nodes      = 10
//! channel.taps       = 6
//! channel.rho        = 0.9
//! channel.pdp        = uniform           # uniform (1/L) | unit | explicit list
//! channel.normalize  = true
//! detector.scale     = chi2              # chi2 | raw
//! detector.thresholds = 260:20:340       # or detector.pfa = 0.01, 0.001
//! detector.rules     = or, and, majority, average
//! detector.weights   = uniform           # or explicit list summing to 1
//! detector.avg_threshold = 0.5
//! detector.single_node = false
//! cs.m               = 480
//! cs.basis           = dct               # dct | identity | dft
//! cs.max_atoms       = 60                # default ceil(M/8)
//! cs.residual_tol    = 1e-6
//! cs.complement      = true
//! ```
//!
//! Unknown keys, repeated keys, and keys that do not apply to the chosen
//! scheme are errors. Overrides given on the command line replace file
//! values.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use distauth_core::channel::ChannelConfig;
use distauth_core::detect::{solve_threshold, FusionKind, FusionRule, StatisticScale};
use distauth_core::simkit::{CsSettings, Scenario, Scheme};
use distauth_core::sparse::{Basis, StopPolicy};
use sha2::{Digest, Sha256};

const KEYS: &[&str] = &[
    "scenario.scheme",
    "scenario.snr_db",
    "scenario.trials",
    "scenario.seed",
    "channel.nodes",
    "channel.taps",
    "channel.rho",
    "channel.pdp",
    "channel.normalize",
    "detector.scale",
    "detector.thresholds",
    "detector.pfa",
    "detector.rules",
    "detector.weights",
    "detector.avg_threshold",
    "detector.single_node",
    "cs.m",
    "cs.basis",
    "cs.max_atoms",
    "cs.residual_tol",
    "cs.complement",
];

pub const DEFAULT_TRIALS: u64 = 10_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Override,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub source_name: String,
    pub origin: Option<Origin>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.origin {
            Some(Origin::Line(n)) => write!(f, "{}:{}: {}", self.source_name, n, self.message),
            Some(Origin::Override) => write!(f, "--set: {}", self.message),
            None => write!(f, "{}: {}", self.source_name, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Debug)]
struct Entry {
    value: String,
    origin: Origin,
}

/// Key-value pairs as written, before interpretation.
#[derive(Clone, Debug)]
pub struct RawConfig {
    source_name: String,
    entries: BTreeMap<String, Entry>,
}

impl RawConfig {
    pub fn parse(source_name: &str, text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self {
            source_name: source_name.to_string(),
            entries: BTreeMap::new(),
        };
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |message: String| cfg.error(Some(Origin::Line(line_no)), message);
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(err(format!("unknown key `{key}`")));
            }
            if value.is_empty() {
                return Err(err(format!("missing value for `{key}`")));
            }
            if let Some(prev) = cfg.entries.get(key) {
                let Origin::Line(p) = prev.origin else { unreachable!() };
                return Err(err(format!("duplicate key `{key}` (first set on line {p})")));
            }
            cfg.entries.insert(
                key.to_string(),
                Entry {
                    value: value.to_string(),
                    origin: Origin::Line(line_no),
                },
            );
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let name = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            source_name: name.clone(),
            origin: None,
            message: format!("cannot read config: {e}"),
        })?;
        Self::parse(&name, &text)
    }

    /// Applies a `key=value` override.
    pub fn set(&mut self, pair: &str) -> Result<(), ConfigError> {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| self.error(Some(Origin::Override), format!("expected key=value, got `{pair}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(self.error(Some(Origin::Override), format!("unknown key `{key}`")));
        }
        if value.is_empty() {
            return Err(self.error(Some(Origin::Override), format!("missing value for `{key}`")));
        }
        self.entries.insert(
            key.to_string(),
            Entry {
                value: value.to_string(),
                origin: Origin::Override,
            },
        );
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    fn error(&self, origin: Option<Origin>, message: String) -> ConfigError {
        ConfigError {
            source_name: self.source_name.clone(),
            origin,
            message,
        }
    }

    fn key_error(&self, key: &str, message: String) -> ConfigError {
        self.error(self.entries.get(key).map(|e| e.origin.clone()), message)
    }

    fn parsed<T>(&self, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> Result<Option<T>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => parse(v)
                .map(Some)
                .map_err(|m| self.key_error(key, format!("`{key}`: {m}"))),
        }
    }

    fn required<T>(&self, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> Result<T, ConfigError> {
        self.parsed(key, parse)?
            .ok_or_else(|| self.error(None, format!("missing required key `{key}`")))
    }

    /// Interprets and validates the entries.
    pub fn resolve(&self) -> Result<ResolvedConfig, ConfigError> {
        let scheme = self.required("scenario.scheme", parse_scheme)?;
        let snr_grid_db = self.required("scenario.snr_db", parse_reals)?;
        let trials = self
            .parsed("scenario.trials", parse_num::<u64>)?
            .unwrap_or(DEFAULT_TRIALS);
        let seed = self.parsed("scenario.seed", parse_num::<u64>)?.unwrap_or(0);

        let nodes = self.parsed("channel.nodes", parse_num::<usize>)?.unwrap_or(10);
        let taps = self.parsed("channel.taps", parse_num::<usize>)?.unwrap_or(6);
        let rho = self.parsed("channel.rho", parse_num::<f64>)?.unwrap_or(0.9);
        let pdp = self
            .parsed("channel.pdp", |v| parse_pdp(v, taps))?
            .unwrap_or_else(|| parse_pdp("uniform", taps).expect("uniform profile"));
        let normalize = self.parsed("channel.normalize", parse_bool)?.unwrap_or(true);
        let channel = ChannelConfig::new(nodes, taps, rho)
            .with_pdp(pdp.values.clone())
            .with_normalization(normalize);
        if let Err(e) = channel.validate() {
            let key = if nodes == 0 {
                "channel.nodes"
            } else if taps == 0 {
                "channel.taps"
            } else if !(0.0..=1.0).contains(&rho) {
                "channel.rho"
            } else {
                "channel.pdp"
            };
            return Err(self.key_error(key, format!("`{key}`: {e}")));
        }

        let scale = self.parsed("detector.scale", parse_scale)?.unwrap_or_default();
        let thresholds = match (self.get("detector.thresholds"), self.get("detector.pfa")) {
            (Some(_), Some(_)) => {
                return Err(self.key_error(
                    "detector.pfa",
                    "set either `detector.thresholds` or `detector.pfa`, not both".into(),
                ))
            }
            (None, None) => return Err(self.error(None, "missing `detector.thresholds` or `detector.pfa`".into())),
            (Some(_), None) => self.required("detector.thresholds", parse_reals)?,
            (None, Some(_)) => {
                let alphas = self.required("detector.pfa", parse_reals)?;
                let dof = if scheme.is_local() { 2 * taps } else { 2 * nodes * taps };
                let dof = u32::try_from(dof)
                    .map_err(|_| self.key_error("detector.pfa", "too many degrees of freedom".into()))?;
                alphas
                    .iter()
                    .map(|a| {
                        solve_threshold(*a, dof)
                            .map(|d| d / StatisticScale::Chi2.factor() * scale.factor())
                            .map_err(|e| self.key_error("detector.pfa", e.to_string()))
                    })
                    .collect::<Result<Vec<_>, _>>()?
            }
        };

        let local_only = [
            "detector.rules",
            "detector.weights",
            "detector.avg_threshold",
            "detector.single_node",
        ];
        let cs_only = ["cs.m", "cs.basis", "cs.max_atoms", "cs.residual_tol", "cs.complement"];
        if !scheme.is_local() {
            if let Some(k) = local_only.iter().find(|k| self.get(k).is_some()) {
                return Err(self.key_error(k, format!("`{k}` applies only to local-fusion schemes")));
            }
        }
        if !scheme.is_compressed() {
            if let Some(k) = cs_only.iter().find(|k| self.get(k).is_some()) {
                return Err(self.key_error(k, format!("`{k}` applies only to compressed schemes")));
            }
        }

        let mut weights = None;
        let mut avg_threshold = 0.5;
        let mut single_node = false;
        let mut rule_kinds = Vec::new();
        let rules = if scheme.is_local() {
            rule_kinds = self
                .parsed("detector.rules", parse_rules)?
                .unwrap_or_else(|| vec![FusionKind::Majority]);
            weights = self.parsed("detector.weights", parse_weights)?.flatten();
            avg_threshold = self.parsed("detector.avg_threshold", parse_num::<f64>)?.unwrap_or(0.5);
            single_node = self.parsed("detector.single_node", parse_bool)?.unwrap_or(false);
            rule_kinds
                .iter()
                .map(|k| FusionRule {
                    kind: *k,
                    weights: if *k == FusionKind::WeightedAverage {
                        weights.clone()
                    } else {
                        None
                    },
                    avg_threshold,
                })
                .collect()
        } else {
            Vec::new()
        };
        if let Some(w) = weights
            .as_ref()
            .filter(|_| rule_kinds.contains(&FusionKind::WeightedAverage))
        {
            if w.len() != nodes {
                return Err(self.key_error(
                    "detector.weights",
                    format!("`detector.weights` needs {nodes} entries, got {}", w.len()),
                ));
            }
        }

        let cs = if scheme.is_compressed() {
            let m = self.required("cs.m", parse_num::<usize>)?;
            let basis = self.parsed("cs.basis", parse_basis)?.unwrap_or(Basis::Dct);
            let mut stop = StopPolicy::default_for(m);
            if let Some(k) = self.parsed("cs.max_atoms", parse_num::<usize>)? {
                stop.max_atoms = k;
            }
            if let Some(t) = self.parsed("cs.residual_tol", parse_num::<f64>)? {
                stop.residual_tol = t;
            }
            let complement_decoding = self.parsed("cs.complement", parse_bool)?.unwrap_or(true);
            Some(CsSettings {
                m,
                basis,
                stop,
                complement_decoding,
            })
        } else {
            None
        };

        let scenario = Scenario {
            scheme,
            channel,
            scale,
            thresholds,
            rules,
            single_node_baseline: single_node,
            cs,
            snr_grid_db,
            trials,
            seed,
        };
        scenario.validate().map_err(|e| self.error(None, e.to_string()))?;
        if let Some(cs) = &scenario.cs {
            if cs.stop.max_atoms == 0 || !(cs.stop.residual_tol >= 0.0) {
                return Err(self.key_error(
                    "cs.max_atoms",
                    "OMP needs a positive atom budget and tolerance >= 0".into(),
                ));
            }
        }

        let canonical = canonical_text(
            &scenario,
            &pdp.canonical,
            &rule_kinds,
            weights.as_deref(),
            avg_threshold,
        );
        let digest = hex(&Sha256::digest(canonical.as_bytes()));
        Ok(ResolvedConfig {
            scenario,
            canonical,
            digest,
        })
    }
}

/// A validated scenario with its canonical text and digest.
#[derive(Clone, Debug)]
pub struct ResolvedConfig {
    pub scenario: Scenario,
    /// Every resolved key, one `key = value` per line, in fixed order.
    pub canonical: String,
    /// SHA-256 of `canonical`, lowercase hex.
    pub digest: String,
}

/// Reads a config file, applies overrides and resolves it.
pub fn load_config(path: &Path, overrides: &[String], seed: Option<u64>) -> Result<ResolvedConfig, ConfigError> {
    let mut raw = RawConfig::load(path)?;
    for o in overrides {
        raw.set(o)?;
    }
    if let Some(s) = seed {
        raw.set(&format!("scenario.seed={s}"))?;
    }
    raw.resolve()
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
}

fn canonical_text(
    s: &Scenario,
    pdp: &str,
    rules: &[FusionKind],
    weights: Option<&[f64]>,
    avg_threshold: f64,
) -> String {
    let mut lines = vec![
        format!("scenario.scheme = {}", s.scheme),
        format!("scenario.snr_db = {}", join(&s.snr_grid_db)),
        format!("scenario.trials = {}", s.trials),
        format!("scenario.seed = {}", s.seed),
        format!("channel.nodes = {}", s.channel.n_nodes),
        format!("channel.taps = {}", s.channel.n_taps),
        format!("channel.rho = {}", s.channel.rho),
        format!("channel.pdp = {pdp}"),
        format!("channel.normalize = {}", s.channel.normalize_kronecker),
        format!(
            "detector.scale = {}",
            match s.scale {
                StatisticScale::Chi2 => "chi2",
                StatisticScale::RawQuadratic => "raw",
            }
        ),
        format!("detector.thresholds = {}", join(&s.thresholds)),
    ];
    if s.scheme.is_local() {
        lines.push(format!(
            "detector.rules = {}",
            rules.iter().map(|k| rule_str(*k)).collect::<Vec<_>>().join(", ")
        ));
        lines.push(format!(
            "detector.weights = {}",
            weights.map_or_else(|| "uniform".to_string(), join)
        ));
        lines.push(format!("detector.avg_threshold = {avg_threshold}"));
        lines.push(format!("detector.single_node = {}", s.single_node_baseline));
    }
    if let Some(cs) = &s.cs {
        lines.push(format!("cs.m = {}", cs.m));
        lines.push(format!("cs.basis = {}", basis_str(cs.basis)));
        lines.push(format!("cs.max_atoms = {}", cs.stop.max_atoms));
        lines.push(format!("cs.residual_tol = {:e}", cs.stop.residual_tol));
        lines.push(format!("cs.complement = {}", cs.complement_decoding));
    }
    let mut out = lines.join("\n");
    out.push('\n');
    out
}

fn rule_str(k: FusionKind) -> &'static str {
    match k {
        FusionKind::Or => "or",
        FusionKind::And => "and",
        FusionKind::Majority => "majority",
        FusionKind::WeightedAverage => "average",
    }
}

fn basis_str(b: Basis) -> &'static str {
    match b {
        Basis::Dct => "dct",
        Basis::Identity => "identity",
        Basis::Dft => "dft",
    }
}

fn parse_num<T: std::str::FromStr>(v: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    v.parse::<T>().map_err(|e| format!("cannot parse `{v}`: {e}"))
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" | "yes" | "on" => Ok(true),
        "false" | "no" | "off" => Ok(false),
        _ => Err(format!("expected true or false, got `{v}`")),
    }
}

/// Comma-separated reals, or an inclusive `start:step:stop` range.
pub fn parse_reals(v: &str) -> Result<Vec<f64>, String> {
    if v.contains(':') {
        let parts: Vec<f64> = v
            .split(':')
            .map(|p| parse_num::<f64>(p.trim()))
            .collect::<Result<_, _>>()?;
        let [start, step, stop] = parts[..] else {
            return Err(format!("range must be start:step:stop, got `{v}`"));
        };
        if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
            return Err(format!("range needs step > 0 and start <= stop, got `{v}`"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as u64 + 1;
        if count > 1 << 16 {
            return Err(format!("range `{v}` has too many points"));
        }
        return Ok((0..count)
            .map(|i| {
                let x = start + i as f64 * step;
                (x * 1e9).round() / 1e9
            })
            .collect());
    }
    v.split(',').map(|p| parse_num::<f64>(p.trim())).collect()
}

struct Pdp {
    values: Vec<f64>,
    canonical: String,
}

fn parse_pdp(v: &str, taps: usize) -> Result<Pdp, String> {
    match v {
        "uniform" => Ok(Pdp {
            values: vec![1.0 / taps as f64; taps],
            canonical: "uniform".into(),
        }),
        "unit" => Ok(Pdp {
            values: vec![1.0; taps],
            canonical: "unit".into(),
        }),
        _ => {
            let values = parse_reals(v)?;
            Ok(Pdp {
                canonical: join(&values),
                values,
            })
        }
    }
}

fn parse_scheme(v: &str) -> Result<Scheme, String> {
    match v {
        "fc_raw" => Ok(Scheme::FcRaw),
        "local_fusion" => Ok(Scheme::LocalFusion),
        "fc_raw_cs" => Ok(Scheme::FcRawCs),
        "local_fusion_cs" => Ok(Scheme::LocalFusionCs),
        _ => Err(format!(
            "unknown scheme `{v}` (expected fc_raw, local_fusion, fc_raw_cs or local_fusion_cs)"
        )),
    }
}

fn parse_scale(v: &str) -> Result<StatisticScale, String> {
    match v {
        "chi2" => Ok(StatisticScale::Chi2),
        "raw" => Ok(StatisticScale::RawQuadratic),
        _ => Err(format!("expected chi2 or raw, got `{v}`")),
    }
}

fn parse_basis(v: &str) -> Result<Basis, String> {
    match v {
        "dct" => Ok(Basis::Dct),
        "identity" => Ok(Basis::Identity),
        "dft" => Ok(Basis::Dft),
        _ => Err(format!("expected dct, identity or dft, got `{v}`")),
    }
}

fn parse_rules(v: &str) -> Result<Vec<FusionKind>, String> {
    v.split(',')
        .map(|r| match r.trim() {
            "or" => Ok(FusionKind::Or),
            "and" => Ok(FusionKind::And),
            "majority" => Ok(FusionKind::Majority),
            "average" => Ok(FusionKind::WeightedAverage),
            other => Err(format!("unknown fusion rule `{other}`")),
        })
        .collect()
}

fn parse_weights(v: &str) -> Result<Option<Vec<f64>>, String> {
    if v == "uniform" {
        Ok(None)
    } else {
        parse_reals(v).map(Some)
    }
}
