//! Stable moment law checks.
//!
//! For independent standard paths `l_k` and Rademacher signs `r_k`,
//! `Σ r_k β_k γ_k^θ l_k(t)` is symmetric stable with scale
//! `(t Σ |β_k|^α γ_k^{αθ})^{1/α}`, so its p-th absolute moment is
//! `C(α, p) scale^p`. The norm moment `E‖A^θ L_t‖^p` dominates it for `p ≤ 2`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{mean_stderr, ols_slope};
use crate::convolution::stream_for;
use crate::error::{Error, Result};
use crate::spectral::ModeSet;
use crate::stable_rng::{moment_constant, sample_increment, RngStream, StableLaw, StreamId, AUX_MODE_BASE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentCheckReport {
    pub alpha: f64,
    pub p: f64,
    pub theta: f64,
    pub t: f64,
    pub replicas: usize,
    /// `(t Σ |β_k|^α γ_k^{αθ})^{1/α}`
    pub scale: f64,
    /// `C(α, p) scale^p`
    pub predicted: f64,
    pub symmetrized_moment: f64,
    pub symmetrized_stderr: f64,
    pub norm_moment: f64,
    pub norm_stderr: f64,
    /// `|symmetrized - predicted| ≤ 3 stderr` (exact equality when both vanish).
    pub agrees: bool,
}

pub fn moment_formula_check(
    modes: &ModeSet,
    law: &StableLaw,
    theta: f64,
    t: f64,
    p: f64,
    replicas: usize,
    seed: u64,
) -> Result<MomentCheckReport> {
    let alpha = law.alpha();
    if !(p > 0.0 && p < alpha / 2.0) {
        return Err(Error::Domain(format!("need 0 < p < alpha/2 = {} for a finite-variance estimator, got {p}", alpha / 2.0)));
    }
    if !(t > 0.0 && t.is_finite()) || replicas < 2 {
        return Err(Error::Domain("need t > 0 and at least two replicas".into()));
    }
    let coeffs: Vec<f64> = modes.entries().iter().map(|m| m.beta * m.gamma.powf(theta)).collect();
    let samples: Vec<(f64, f64)> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut signs = RngStream::new(seed, StreamId::new(r as u32, AUX_MODE_BASE));
            let (mut sum, mut sq) = (0.0, 0.0);
            for (k, c) in coeffs.iter().enumerate() {
                let l = sample_increment(law, t, &mut stream_for(seed, r as u32, k)).expect("t validated");
                sum += signs.rademacher() * c * l;
                sq += (c * l).powi(2);
            }
            (sum.abs().powf(p), sq.sqrt().powf(p))
        })
        .collect();
    let sym: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let norms: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let (symmetrized_moment, symmetrized_stderr) = mean_stderr(&sym);
    let (norm_moment, norm_stderr) = mean_stderr(&norms);

    let aggregate: f64 = modes.entries().iter().map(|m| m.beta.abs().powf(alpha) * m.gamma.powf(alpha * theta)).sum();
    let scale = (t * aggregate).powf(1.0 / alpha);
    let predicted = moment_constant(alpha, p)? * scale.powf(p);
    let agrees = if predicted == 0.0 {
        symmetrized_moment == 0.0
    } else {
        (symmetrized_moment - predicted).abs() <= 3.0 * symmetrized_stderr
    };
    Ok(MomentCheckReport {
        alpha,
        p,
        theta,
        t,
        replicas,
        scale,
        predicted,
        symmetrized_moment,
        symmetrized_stderr,
        norm_moment,
        norm_stderr,
        agrees,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarScalingPoint {
    pub sigma: f64,
    pub moment: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarScalingReport {
    pub alpha: f64,
    pub p: f64,
    pub points: Vec<ScalarScalingPoint>,
    /// Log-log slope of `E|X_σ|^p` in `σ`; `None` with fewer than two scales.
    pub slope: Option<f64>,
    pub slope_stderr: Option<f64>,
    /// `C(α, p)` by quadrature.
    pub quadrature_constant: f64,
    /// Empirical `E|X_σ|^p / σ^p` pooled with inverse-variance weights.
    pub empirical_constant: f64,
}

/// Empirical `E|X|^p` for laws of scale `σ` (i.e. `l(σ^α)`), each scale on
/// its own replica streams.
pub fn scalar_moment_scaling(law: &StableLaw, p: f64, sigmas: &[f64], replicas: usize, seed: u64) -> Result<ScalarScalingReport> {
    let quadrature_constant = moment_constant(law.alpha(), p)?;
    if sigmas.is_empty() || sigmas.iter().any(|&s| !(s > 0.0)) || replicas < 2 {
        return Err(Error::Domain("need positive scales and at least two replicas".into()));
    }
    let mut points = Vec::with_capacity(sigmas.len());
    for (i, &sigma) in sigmas.iter().enumerate() {
        let dt = sigma.powf(law.alpha());
        let mut stream = RngStream::new(seed, StreamId::new(i as u32, 0));
        let xs: Vec<f64> = (0..replicas)
            .map(|_| sample_increment(law, dt, &mut stream).map(|x| x.abs().powf(p)))
            .collect::<Result<_>>()?;
        let (moment, stderr) = mean_stderr(&xs);
        points.push(ScalarScalingPoint { sigma, moment, stderr });
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|pt| (pt.sigma.ln(), pt.moment.ln())).collect();
    let fit = ols_slope(&logs);
    let (wsum, csum) = points.iter().fold((0.0, 0.0), |(w, c), pt| {
        let norm = pt.sigma.powf(p);
        let weight = (norm / pt.stderr).powi(2);
        (w + weight, c + weight * pt.moment / norm)
    });
    Ok(ScalarScalingReport {
        alpha: law.alpha(),
        p,
        slope: fit.map(|f| f.0),
        slope_stderr: fit.map(|f| f.1),
        points,
        quadrature_constant,
        empirical_constant: csum / wsum,
    })
}
