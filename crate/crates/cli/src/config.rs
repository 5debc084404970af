//! `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {msg}")]
    Value { key: String, msg: String },
    #[error("config names experiment `{config}` but `{cli}` was requested")]
    ExperimentMismatch { config: String, cli: String },
    #[error("{0}")]
    Invalid(String),
}

fn bad(key: &str, msg: impl fmt::Display) -> ConfigError {
    ConfigError::Value {
        key: key.to_string(),
        msg: msg.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentId {
    VerifyTransform,
    VerifyN2,
    VerifyN3,
    VerifyNdimRemainder,
    VerifyLemmaAsymptotic,
    EasylemCheck,
    EnvelopeCheck,
    CounterexampleGrowth,
}

impl ExperimentId {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::VerifyTransform => "verify-transform",
            ExperimentId::VerifyN2 => "verify-n2",
            ExperimentId::VerifyN3 => "verify-n3",
            ExperimentId::VerifyNdimRemainder => "verify-ndim-remainder",
            ExperimentId::VerifyLemmaAsymptotic => "verify-lemma-asymptotic",
            ExperimentId::EasylemCheck => "easylem-check",
            ExperimentId::EnvelopeCheck => "envelope-check",
            ExperimentId::CounterexampleGrowth => "counterexample-growth",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How L is chosen for each t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum LRule {
    Fixed(f64),
    /// L = factor · t^{−3}.
    Factor(f64),
}

impl LRule {
    pub fn at(self, t: f64) -> f64 {
        match self {
            LRule::Fixed(l) => l,
            LRule::Factor(c) => c / (t * t * t),
        }
    }
}

impl FromStr for LRule {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, v) = s
            .split_once(':')
            .ok_or_else(|| format!("`{s}` is not `fixed:X` or `factor:X`"))?;
        let v: f64 = v.trim().parse().map_err(|e| format!("{e}"))?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(format!("{v} must be positive"));
        }
        match kind.trim() {
            "fixed" => Ok(LRule::Fixed(v)),
            "factor" => Ok(LRule::Factor(v)),
            other => Err(format!("unknown L rule `{other}`")),
        }
    }
}

/// Bump radius policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum EpsMode {
    Delta,
    Fixed(f64),
    /// ε = c · t.
    C1t(f64),
}

impl EpsMode {
    /// ε at time t, or `None` for the delta limit.
    pub fn at(self, t: f64) -> Option<f64> {
        match self {
            EpsMode::Delta => None,
            EpsMode::Fixed(e) => Some(e),
            EpsMode::C1t(c) => Some(c * t),
        }
    }
}

impl FromStr for EpsMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim() == "delta" {
            return Ok(EpsMode::Delta);
        }
        let (kind, v) = s
            .split_once(':')
            .ok_or_else(|| format!("`{s}` is not `delta`, `fixed:X` or `c1t:X`"))?;
        let v: f64 = v.trim().parse().map_err(|e| format!("{e}"))?;
        match kind.trim() {
            "fixed" => Ok(EpsMode::Fixed(v)),
            "c1t" => Ok(EpsMode::C1t(v)),
            other => Err(format!("unknown eps mode `{other}`")),
        }
    }
}

/// A validated experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub n: u32,
    pub t: Vec<f64>,
    pub l_rule: LRule,
    pub alpha: f64,
    pub eps_mode: EpsMode,
    pub tol: f64,
    pub r: Vec<f64>,
    pub s: Vec<f64>,
    pub sigma: f64,
    pub mu: f64,
    pub x: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub record_wall_ms: bool,
}

fn dyadic(a: i32, b: i32) -> Vec<f64> {
    (a..=b).map(|k| 2f64.powi(-k)).collect()
}

impl ExperimentConfig {
    /// Defaults for each experiment, overridden key by key from the file.
    pub fn defaults(id: ExperimentId) -> Self {
        let base = ExperimentConfig {
            experiment: id,
            n: 3,
            t: vec![0.05, 0.1, 0.2],
            l_rule: LRule::Factor(100.0),
            alpha: 0.5,
            eps_mode: EpsMode::Delta,
            tol: 1e-3,
            r: vec![1.0, 2.5, 6.0],
            s: vec![1.0, 2.5, 6.0],
            sigma: 5.0,
            mu: 2.0,
            x: vec![0.0, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0],
            samples: 16,
            seed: 0,
            output: None,
            record_wall_ms: false,
        };
        match id {
            ExperimentId::VerifyTransform => ExperimentConfig {
                t: vec![0.1, 0.2, 0.5],
                r: vec![1.0, 2.0],
                l_rule: LRule::Fixed(1e4),
                tol: 1e-2,
                ..base
            },
            ExperimentId::VerifyN2 => ExperimentConfig { n: 2, ..base },
            ExperimentId::VerifyN3 => base,
            ExperimentId::VerifyNdimRemainder => ExperimentConfig {
                n: 5,
                t: (0..=4).map(|k| 0.02 * 2f64.powi(k)).collect(),
                r: vec![1.0],
                s: vec![2.0],
                tol: 0.2,
                ..base
            },
            ExperimentId::VerifyLemmaAsymptotic => ExperimentConfig {
                n: 4,
                t: (0..=4).map(|k| 0.02 * 2f64.powi(k)).collect(),
                r: vec![1.0],
                s: vec![2.0],
                l_rule: LRule::Factor(10.0),
                tol: 0.2,
                ..base
            },
            ExperimentId::EasylemCheck => ExperimentConfig {
                n: 4,
                tol: 50.0,
                ..base
            },
            ExperimentId::EnvelopeCheck => ExperimentConfig {
                n: 4,
                samples: 200,
                tol: 1.0,
                ..base
            },
            ExperimentId::CounterexampleGrowth => ExperimentConfig {
                n: 5,
                t: dyadic(4, 10),
                tol: 0.15,
                ..base
            },
        }
    }

    /// Parses `key = value` lines on top of the experiment's defaults.
    pub fn parse(id: ExperimentId, text: &str) -> Result<Self, ConfigError> {
        let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                text: raw.to_string(),
            })?;
            let key = k.trim().to_string();
            if key.is_empty() {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    text: raw.to_string(),
                });
            }
            if entries.insert(key.clone(), (i + 1, v.trim().to_string())).is_some() {
                return Err(ConfigError::Duplicate { line: i + 1, key });
            }
        }
        let mut c = Self::defaults(id);
        for (key, (_, v)) in &entries {
            let k = key.as_str();
            match k {
                "experiment" => {
                    if v != id.name() {
                        return Err(ConfigError::ExperimentMismatch {
                            config: v.clone(),
                            cli: id.name().to_string(),
                        });
                    }
                }
                "n" => c.n = v.parse().map_err(|e| bad(k, e))?,
                "t" => c.t = parse_grid(k, v)?,
                "l_rule" => c.l_rule = v.parse().map_err(|e| bad(k, e))?,
                "alpha" => c.alpha = parse_f64(k, v)?,
                "eps_mode" => c.eps_mode = v.parse().map_err(|e| bad(k, e))?,
                "tol" => c.tol = parse_f64(k, v)?,
                "r" => c.r = parse_list(k, v)?,
                "s" => c.s = parse_list(k, v)?,
                "sigma" => c.sigma = parse_f64(k, v)?,
                "mu" => c.mu = parse_f64(k, v)?,
                "x" => c.x = parse_list(k, v)?,
                "samples" => c.samples = v.parse().map_err(|e| bad(k, e))?,
                "seed" => c.seed = v.parse().map_err(|e| bad(k, e))?,
                "output" => c.output = Some(PathBuf::from(v)),
                "record_wall_ms" => c.record_wall_ms = v.parse().map_err(|e| bad(k, e))?,
                _ => return Err(ConfigError::UnknownKey(key.clone())),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.n < 2 || self.n > 9 {
            return invalid(format!("n = {} must lie in 2..=9", self.n));
        }
        if self.t.is_empty() {
            return invalid("t grid is empty".into());
        }
        if let Some(t) = self.t.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return invalid(format!("t = {t} must be positive"));
        }
        if !(self.tol > 0.0) {
            return invalid("tol must be positive".into());
        }
        let needs_l = matches!(
            self.experiment,
            ExperimentId::VerifyTransform
                | ExperimentId::VerifyN2
                | ExperimentId::VerifyN3
                | ExperimentId::VerifyLemmaAsymptotic
        );
        if needs_l {
            for &t in &self.t {
                let l = self.l_rule.at(t);
                if !(l >= 1.0) || l * t <= 1.0 {
                    return invalid(format!("L = {l} at t = {t} must be ≥ 1 and exceed 1/t"));
                }
            }
        }
        if self.r.iter().chain(&self.s).any(|v| !(*v > 0.0)) {
            return invalid("r and s values must be positive".into());
        }
        match self.experiment {
            ExperimentId::VerifyN2 if self.n != 2 => {
                return invalid("verify-n2 runs in n = 2".into())
            }
            ExperimentId::VerifyN3 if self.n != 3 => {
                return invalid("verify-n3 runs in n = 3".into())
            }
            ExperimentId::VerifyNdimRemainder | ExperimentId::VerifyLemmaAsymptotic
                if self.n < 3 =>
            {
                return invalid("remainder experiments need n ≥ 3".into())
            }
            ExperimentId::CounterexampleGrowth => {
                if self.n < 4 {
                    return invalid("counterexample-growth needs n ≥ 4".into());
                }
                let max = (f64::from(self.n) - 3.0) / 2.0;
                if !(self.alpha > 0.0 && self.alpha < max.min(1.0)) {
                    return invalid(format!("alpha must lie in (0, {})", max.min(1.0)));
                }
                if self.t.iter().any(|&t| t > 1.0) {
                    return invalid("counterexample t grid must lie in (0, 1]".into());
                }
                if self.t.len() < 4 {
                    return invalid("slope fit needs at least 4 t values".into());
                }
                if let Some(e) = self.t.iter().filter_map(|&t| self.eps_mode.at(t)).find(|e| !(*e > 0.0 && *e < 0.5)) {
                    return invalid(format!("eps = {e} must lie in (0, 1/2)"));
                }
                if self.eps_mode != EpsMode::Delta && self.samples == 0 {
                    return invalid("bump runs need samples ≥ 1".into());
                }
            }
            ExperimentId::EasylemCheck => {
                let n = f64::from(self.n);
                if !(self.mu >= 0.0 && self.mu < n && self.sigma + self.mu > n && self.sigma != n) {
                    return invalid("easylem needs 0 ≤ mu < n, sigma + mu > n, sigma ≠ n".into());
                }
            }
            _ => {}
        }
        Ok(())
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64, ConfigError> {
    v.parse().map_err(|e| bad(key, e))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    v.split(',')
        .map(|p| p.trim())
        .filter(|p| !p.is_empty())
        .map(|p| parse_f64(key, p))
        .collect()
}

/// A comma-separated list, or `dyadic:a..b` for 2^{−a}, …, 2^{−b}.
fn parse_grid(key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    if let Some(range) = v.strip_prefix("dyadic:") {
        let (a, b) = range
            .split_once("..")
            .ok_or_else(|| bad(key, "expected dyadic:a..b"))?;
        let a: i32 = a.trim().parse().map_err(|e| bad(key, e))?;
        let b: i32 = b.trim().parse().map_err(|e| bad(key, e))?;
        if a > b {
            return Err(bad(key, "empty dyadic range"));
        }
        return Ok(dyadic(a, b));
    }
    parse_list(key, v)
}
