//! Experiment configuration: one JSON document with a `kind` discriminator.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::burgers::beta_exp_admissible;
use crate::error::{Error, Result};
use crate::spectral::{burgers_modes, check_assumption, Mode, ModeSet, SummabilityVerdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Convolve,
    SupMoment,
    SmallBall,
    Doob,
    Khintchine,
    MomentCheck,
    Burgers,
    Wiener,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Convolve => "convolve",
            Self::SupMoment => "sup-moment",
            Self::SmallBall => "small-ball",
            Self::Doob => "doob",
            Self::Khintchine => "khintchine",
            Self::MomentCheck => "moment-check",
            Self::Burgers => "burgers",
            Self::Wiener => "wiener",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

/// Where the spectral data comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModeSource {
    /// `γ_k = k^gamma_exp`, `β_k = scale · k^{-beta_decay}`.
    PowerLaw {
        n: usize,
        #[serde(default = "two")]
        gamma_exp: f64,
        beta_decay: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// Real Fourier modes of the torus, `β_k = scale · k^{-2 beta_exp}`.
    Burgers {
        n: usize,
        beta_exp: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    Inline { modes: Vec<Mode> },
    /// A `{"modes": [...]}` document, relative to the working directory.
    File { path: PathBuf },
}

impl ModeSource {
    pub fn build(&self) -> Result<ModeSet> {
        match self {
            Self::PowerLaw { n, gamma_exp, beta_decay, scale } => ModeSet::power_law(*n, *gamma_exp, *beta_decay, *scale),
            Self::Burgers { n, beta_exp, scale } => burgers_modes(*n, *beta_exp, *scale),
            Self::Inline { modes } => ModeSet::new(modes.clone()),
            Self::File { path } => ModeSet::read_json(path),
        }
    }
}

/// Every field an experiment may read; which ones are required depends on `kind`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<ExperimentKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<ModeSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Horizon `T` (moment-check: the time `t`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    /// Ladder of horizons for sup-moment and wiener.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizons: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Regularity index of the norm (moment-check: the `θ` of the formula).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_tilde: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicas: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Khintchine coefficients.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<f64>>,
    /// Burgers viscosity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    /// Burgers: physical-space snapshot resolution (0 = none).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_points: Option<usize>,
    /// Burgers: snapshot every this many steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<usize>,
    /// Ladder gate: fitted slope must lie within `slope_tolerance` of this.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_slope: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<usize>,
}

pub const DEFAULT_N_STEPS: usize = 1024;
pub const DEFAULT_REPLICAS: usize = 1000;
pub const DEFAULT_SLOPE_TOLERANCE: f64 = 0.15;
pub const DEFAULT_NU: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub severity: Severity,
    pub message: String,
}

impl Violation {
    fn error(message: impl Into<String>) -> Self {
        Self { severity: Severity::Error, message: message.into() }
    }

    fn warning(message: impl Into<String>) -> Self {
        Self { severity: Severity::Warning, message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

impl ExperimentConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(s)?;
        // a manifest carries the resolved config under "config"
        let doc = match value.get("manifest_version") {
            Some(_) => value.get("config").cloned().ok_or_else(|| Error::Config("manifest has no config".into()))?,
            None => value,
        };
        Ok(serde_json::from_value(doc)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn n_steps_or_default(&self) -> usize {
        self.n_steps.unwrap_or(DEFAULT_N_STEPS)
    }

    pub fn replicas_or_default(&self) -> usize {
        self.replicas.unwrap_or(DEFAULT_REPLICAS)
    }

    pub fn theta_tilde_or_default(&self) -> f64 {
        self.theta_tilde.unwrap_or(0.0)
    }

    pub fn seed_or_default(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

fn positive(v: Option<f64>, name: &str, out: &mut Vec<Violation>) {
    if let Some(x) = v {
        if !(x > 0.0 && x.is_finite()) {
            out.push(Violation::error(format!("{name} must be positive and finite, got {x}")));
        }
    }
}

fn require<T>(v: &Option<T>, name: &str, kind: ExperimentKind, out: &mut Vec<Violation>) {
    if v.is_none() {
        out.push(Violation::error(format!("{kind} requires `{name}`")));
    }
}

/// All violations of `config` for `kind` (empty = valid). Summability
/// problems are warnings; structural problems are errors.
pub fn validate(config: &ExperimentConfig, kind: ExperimentKind) -> Vec<Violation> {
    use ExperimentKind::*;
    let mut out = Vec::new();
    if let Some(k) = config.kind {
        if k != kind {
            out.push(Violation::error(format!("config kind `{k}` does not match the requested `{kind}`")));
        }
    }

    let needs_law = matches!(kind, Convolve | SupMoment | SmallBall | Doob | MomentCheck | Burgers);
    let needs_modes = kind != Khintchine;
    if needs_law {
        require(&config.alpha, "alpha", kind, &mut out);
    }
    if let Some(a) = config.alpha {
        if !(a > 0.0 && a <= 2.0) {
            out.push(Violation::error(format!("alpha out of range (0, 2]: {a}")));
        }
    }
    positive(config.horizon, "horizon", &mut out);
    positive(config.epsilon, "epsilon", &mut out);
    positive(config.nu, "nu", &mut out);
    if let Some(hs) = &config.horizons {
        if hs.is_empty() || hs.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            out.push(Violation::error("horizons must be a nonempty list of positive times"));
        }
    }
    if config.n_steps == Some(0) {
        out.push(Violation::error("n_steps must be at least 1"));
    }
    if config.replicas.is_some_and(|m| m < 2) {
        out.push(Violation::error("replicas must be at least 2"));
    }
    if let Some(p) = config.p {
        if !(p > 0.0 && p.is_finite()) {
            out.push(Violation::error(format!("p must be positive, got {p}")));
        }
    }

    let alpha_ok = config.alpha.filter(|a| *a > 0.0 && *a <= 2.0);
    let moment_order_ok = |p: f64, a: f64| a == 2.0 || p < a;
    match kind {
        Convolve | Burgers => require(&config.horizon, "horizon", kind, &mut out),
        SupMoment => {
            require(&config.horizons, "horizons", kind, &mut out);
            require(&config.p, "p", kind, &mut out);
        }
        Wiener => {
            if config.horizon.is_none() && config.horizons.is_none() {
                out.push(Violation::error("wiener requires `horizon` (path) or `horizons` (ladder)"));
            }
            if config.horizons.is_some() {
                require(&config.p, "p", kind, &mut out);
            }
        }
        SmallBall => {
            require(&config.horizon, "horizon", kind, &mut out);
            require(&config.epsilon, "epsilon", kind, &mut out);
        }
        Doob => {
            require(&config.horizon, "horizon", kind, &mut out);
            require(&config.p, "p", kind, &mut out);
            if let Some(p) = config.p {
                if p <= 1.0 {
                    out.push(Violation::error(format!("doob requires p > 1 (martingale maximal inequality), got {p}")));
                }
            }
        }
        MomentCheck => {
            require(&config.horizon, "horizon", kind, &mut out);
            require(&config.p, "p", kind, &mut out);
            if let (Some(p), Some(a)) = (config.p, alpha_ok) {
                if p >= a / 2.0 {
                    out.push(Violation::error(format!("moment-check requires p < alpha/2 = {}, got {p}", a / 2.0)));
                }
            }
        }
        Khintchine => {
            require(&config.p, "p", kind, &mut out);
            match &config.h {
                None => out.push(Violation::error("khintchine requires `h`")),
                Some(h) if h.is_empty() || h.iter().all(|v| *v == 0.0) || h.iter().any(|v| !v.is_finite()) => {
                    out.push(Violation::error("h must be a finite, nonzero sequence"))
                }
                Some(_) => {}
            }
        }
    }
    if matches!(kind, SupMoment | Doob) {
        if let (Some(p), Some(a)) = (config.p, alpha_ok) {
            if !moment_order_ok(p, a) {
                out.push(Violation::error(format!(
                    "p = {p} >= alpha = {a}: an alpha-stable law only has moments of order p < alpha"
                )));
            }
        }
    }

    if needs_modes {
        match &config.modes {
            None => out.push(Violation::error(format!("{kind} requires `modes`"))),
            Some(source) => match source.build() {
                Err(e) => out.push(Violation::error(format!("modes: {e}"))),
                Ok(modes) => {
                    let exponent = if kind == Wiener { Some(2.0) } else { alpha_ok };
                    if let Some(a) = exponent {
                        let report = check_assumption(&modes, a, config.theta_tilde_or_default());
                        if report.verdict == SummabilityVerdict::DivergenceSuspected {
                            out.push(Violation::warning(format!(
                                "noise summability looks divergent at theta = {} (partial sum {:.3e})",
                                report.theta, report.partial_sum
                            )));
                        }
                    }
                }
            },
        }
    }
    if kind == Burgers {
        match &config.modes {
            Some(ModeSource::Burgers { beta_exp, .. }) => {
                if let Some(a) = alpha_ok {
                    if !beta_exp_admissible(*beta_exp, a) {
                        out.push(Violation::warning(format!(
                            "β ≤ 1+1/(2α): beta_exp = {beta_exp} does not exceed {}",
                            1.0 + 1.0 / (2.0 * a)
                        )));
                    }
                }
            }
            Some(_) => out.push(Violation::error("burgers requires a `burgers` mode source")),
            None => {}
        }
    }
    out
}

pub fn has_errors(violations: &[Violation]) -> bool {
    violations.iter().any(|v| v.severity == Severity::Error)
}
