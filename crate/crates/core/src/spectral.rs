//! Diagonal operators on a truncated eigenbasis.
//!
//! `A e_k = γ_k e_k`, so fractional powers, the semigroup `e^{-At}` and the
//! graph norms `‖A^σ x‖` all act coefficient-wise.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One eigenmode: index, eigenvalue `γ_k` and noise coefficient `β_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub k: i64,
    pub gamma: f64,
    pub beta: f64,
}

/// Truncated spectral data, sorted by nondecreasing `γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModeSetDoc", into = "ModeSetDoc")]
pub struct ModeSet {
    pub(crate) entries: Vec<Mode>,
}

#[derive(Serialize, Deserialize)]
struct ModeSetDoc {
    modes: Vec<Mode>,
}

impl TryFrom<ModeSetDoc> for ModeSet {
    type Error = Error;

    fn try_from(doc: ModeSetDoc) -> Result<Self> {
        ModeSet::new(doc.modes)
    }
}

impl From<ModeSet> for ModeSetDoc {
    fn from(set: ModeSet) -> Self {
        ModeSetDoc { modes: set.entries }
    }
}

impl ModeSet {
    /// Validates and sorts by `γ` (stable, so equal eigenvalues keep their order).
    pub fn new(mut entries: Vec<Mode>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Domain("mode set is empty".into()));
        }
        for m in &entries {
            if !(m.gamma.is_finite() && m.gamma > 0.0) {
                return Err(Error::Domain(format!("mode {}: gamma must be positive and finite, got {}", m.k, m.gamma)));
            }
            if !m.beta.is_finite() {
                return Err(Error::Domain(format!("mode {}: beta must be finite", m.k)));
            }
        }
        entries.sort_by(|a, b| a.gamma.total_cmp(&b.gamma));
        let mut ks: Vec<i64> = entries.iter().map(|m| m.k).collect();
        ks.sort_unstable();
        if ks.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Domain("mode indices must be unique".into()));
        }
        Ok(Self { entries })
    }

    /// `γ_k = k^gamma_exp`, `β_k = scale · k^{-beta_decay}` for `k = 1..=n`.
    pub fn power_law(n: usize, gamma_exp: f64, beta_decay: f64, scale: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("need at least one mode".into()));
        }
        Self::new(
            (1..=n)
                .map(|k| {
                    let kf = k as f64;
                    Mode { k: k as i64, gamma: kf.powf(gamma_exp), beta: scale * kf.powf(-beta_decay) }
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Mode] {
        &self.entries
    }

    pub fn gammas(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|m| m.gamma)
    }

    pub fn betas(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|m| m.beta)
    }

    /// Same modes with every eigenvalue multiplied by `factor` (e.g. a viscosity).
    pub fn with_scaled_rates(&self, factor: f64) -> Result<Self> {
        Self::new(self.entries.iter().map(|m| Mode { gamma: m.gamma * factor, ..*m }).collect())
    }

    /// Same eigenvalues with new noise coefficients.
    pub fn with_betas(&self, betas: &[f64]) -> Result<Self> {
        if betas.len() != self.len() {
            return Err(Error::Contract(format!("{} betas for {} modes", betas.len(), self.len())));
        }
        Self::new(self.entries.iter().zip(betas).map(|(m, &beta)| Mode { beta, ..*m }).collect())
    }

    /// Weights `γ_k^{2σ}` entering `‖A^σ x‖²`.
    pub fn norm_weights(&self, sigma: f64) -> Vec<f64> {
        self.entries.iter().map(|m| m.gamma.powf(2.0 * sigma)).collect()
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}

/// Coefficients `x_k` of `x = Σ x_k e_k`, aligned with a [`ModeSet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coeffs(pub Vec<f64>);

impl Coeffs {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, other: &Coeffs) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl From<Vec<f64>> for Coeffs {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

fn check_aligned(modes: &ModeSet, x: &Coeffs) -> Result<()> {
    if modes.len() != x.len() {
        return Err(Error::Contract(format!("{} coefficients for {} modes", x.len(), modes.len())));
    }
    Ok(())
}

/// `A^σ x = (γ_k^σ x_k)_k`.
pub fn frac_power_apply(modes: &ModeSet, sigma: f64, x: &Coeffs) -> Result<Coeffs> {
    check_aligned(modes, x)?;
    Ok(Coeffs(modes.gammas().zip(&x.0).map(|(g, v)| g.powf(sigma) * v).collect()))
}

/// `e^{-At} x = (e^{-γ_k t} x_k)_k`.
pub fn apply_semigroup(modes: &ModeSet, t: f64, x: &Coeffs) -> Result<Coeffs> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("semigroup time must be nonnegative, got {t}")));
    }
    check_aligned(modes, x)?;
    Ok(Coeffs(modes.gammas().zip(&x.0).map(|(g, v)| (-g * t).exp() * v).collect()))
}

/// `‖A^σ x‖_H = (Σ γ_k^{2σ} x_k²)^{1/2}`.
pub fn hnorm(modes: &ModeSet, sigma: f64, x: &Coeffs) -> Result<f64> {
    check_aligned(modes, x)?;
    Ok(weighted_norm(&modes.norm_weights(sigma), &x.0))
}

/// `(Σ w_k x_k²)^{1/2}`; the single summation order every norm in the crate uses.
pub(crate) fn weighted_norm<'a>(weights: &[f64], x: impl IntoIterator<Item = &'a f64>) -> f64 {
    weighted_norm_sq(weights, x).sqrt()
}

pub(crate) fn weighted_norm_sq<'a>(weights: &[f64], x: impl IntoIterator<Item = &'a f64>) -> f64 {
    weights.iter().zip(x).map(|(w, v)| w * v * v).sum()
}

/// Explicit bound `sup_{u>0} u^σ e^{-ut} = (σ / (e t))^σ`, with `0^0 = 1`.
pub fn smoothing_bound(sigma: f64, t: f64) -> f64 {
    if sigma == 0.0 {
        1.0
    } else {
        (sigma / (std::f64::consts::E * t)).powf(sigma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SummabilityVerdict {
    Convergent,
    DivergenceSuspected,
}

/// Truncated `S(θ) = Σ |β_k|^α γ_k^{αθ}` with a tail diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummabilityReport {
    pub alpha: f64,
    pub theta: f64,
    pub partial_sum: f64,
    /// Contribution of the last quarter of the modes, relative to the total.
    pub tail_fraction: f64,
    /// Whether the last quarter of the per-term sequence is nonincreasing.
    pub tail_nonincreasing: bool,
    /// Fitted power `s` in `term_k ≈ c k^{-s}` over the tail, when enough nonzero terms exist.
    pub tail_decay_exponent: Option<f64>,
    pub verdict: SummabilityVerdict,
}

/// Diagnoses the summability conditions `Σ |β_k|^α < ∞` (θ = 0) and
/// `Σ |β_k|^α γ_k^{αθ} < ∞` on the truncation. Never fails.
///
/// Divergence is suspected when the tail terms grow, or decay no faster than
/// the harmonic series.
pub fn check_assumption(modes: &ModeSet, alpha: f64, theta: f64) -> SummabilityReport {
    let terms: Vec<f64> = modes
        .entries
        .iter()
        .map(|m| m.beta.abs().powf(alpha) * m.gamma.powf(alpha * theta))
        .collect();
    let partial_sum: f64 = terms.iter().sum();
    let n = terms.len();
    let tail_start = n - (n / 4).max(1);
    let tail = &terms[tail_start..];
    let tail_sum: f64 = tail.iter().sum();
    let tail_fraction = if partial_sum > 0.0 { tail_sum / partial_sum } else { 0.0 };
    let tail_nonincreasing = tail.windows(2).all(|w| w[1] <= w[0]);

    let points: Vec<(f64, f64)> = (tail_start..n)
        .filter(|&i| terms[i] > 0.0)
        .map(|i| (((i + 1) as f64).ln(), terms[i].ln()))
        .collect();
    let tail_decay_exponent = if points.len() >= 3 {
        crate::estimators::stats::ols_slope(&points).map(|(slope, _)| -slope)
    } else {
        None
    };

    let slow_decay = tail_decay_exponent.is_some_and(|s| s <= 1.0);
    let verdict = if partial_sum == 0.0 || (tail_nonincreasing && !slow_decay) {
        SummabilityVerdict::Convergent
    } else {
        SummabilityVerdict::DivergenceSuspected
    };
    SummabilityReport {
        alpha,
        theta,
        partial_sum,
        tail_fraction,
        tail_nonincreasing,
        tail_decay_exponent,
        verdict,
    }
}

/// Real Fourier modes of the mean-zero torus: for `k = 1..=n` a cosine
/// channel (index `+k`) and a sine channel (index `-k`), both with `γ = k²`
/// and `β = scale · k^{-2 beta_exp}`.
///
/// The basis is orthonormal in `L²(0, 2π)`: `cos(kξ)/√π`, `sin(kξ)/√π`.
pub fn burgers_modes(n: usize, beta_exp: f64, scale: f64) -> Result<ModeSet> {
    if n < 1 {
        return Err(Error::Domain("Burgers truncation needs N >= 1".into()));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Domain(format!("noise scale must be positive, got {scale}")));
    }
    let mut entries = Vec::with_capacity(2 * n);
    for k in 1..=n {
        let kf = k as f64;
        let gamma = kf * kf;
        let beta = scale * kf.powf(-2.0 * beta_exp);
        entries.push(Mode { k: k as i64, gamma, beta });
        entries.push(Mode { k: -(k as i64), gamma, beta });
    }
    ModeSet::new(entries)
}
