//! `E sup_{t≤T} ‖A^θ̃ Z(t)‖^p` along a ladder of horizons, and the fitted
//! small-`T` scaling exponent.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::replica::{convolution_sups, Engine};
use super::stats::{mean_stderr, median_of_means, ols_slope};
use crate::error::{Error, Result};
use crate::spectral::{check_assumption, ModeSet, SummabilityVerdict};
use crate::stable_rng::StableLaw;

/// Fraction of degenerate replicas above which a run fails.
pub const MAX_DEGENERATE_FRACTION: f64 = 0.01;

/// Ladder points needed before a slope is fitted.
pub const MIN_LADDER_POINTS: usize = 4;

const MEDIAN_OF_MEANS_BLOCKS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentParams {
    pub theta_tilde: f64,
    pub p: f64,
    pub horizons: Vec<f64>,
    pub n_steps: usize,
    pub replicas: usize,
    pub seed: u64,
}

/// Geometric ladder `2^lo, 2^{lo+1}, ..., 2^hi`.
pub fn dyadic_ladder(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|e| 2f64.powi(e)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderPoint {
    pub horizon: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub median_of_means: f64,
    /// Replicas that entered the mean.
    pub replicas: usize,
    pub degenerate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    /// `"stable"` or `"wiener"`.
    pub engine: String,
    pub alpha: Option<f64>,
    pub theta_tilde: f64,
    pub p: f64,
    pub n_steps: usize,
    pub seed: u64,
    pub ladder: Vec<LadderPoint>,
    pub slope: Option<f64>,
    pub slope_stderr: Option<f64>,
    pub warnings: Vec<String>,
}

impl MomentReport {
    /// `T,estimate,stderr,M` rows.
    pub fn write_ladder_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["T", "estimate", "stderr", "M"])?;
        for pt in &self.ladder {
            w.write_record([
                format!("{:.16e}", pt.horizon),
                format!("{:.16e}", pt.estimate),
                format!("{:.16e}", pt.stderr),
                pt.replicas.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Monte Carlo estimate of `E sup ‖A^θ̃ Z‖^p` for stable noise, using the
/// direct convolution.
pub fn sup_moment(modes: &ModeSet, law: &StableLaw, params: &MomentParams) -> Result<MomentReport> {
    law.check_moment_order(params.p)?;
    let mut warnings = Vec::new();
    let report = check_assumption(modes, law.alpha(), params.theta_tilde);
    if report.verdict == SummabilityVerdict::DivergenceSuspected {
        warnings.push(format!(
            "sum |beta_k|^alpha gamma_k^(alpha theta) looks divergent at theta = {}; no theta > theta_tilde can satisfy it",
            params.theta_tilde
        ));
    }
    run_ladder(Engine::Stable(*law), modes, params, warnings)
}

/// Wiener analogue with `q_k = β_k`.
pub fn wiener_sup_moment(modes: &ModeSet, params: &MomentParams) -> Result<MomentReport> {
    if !(params.p > 0.0 && params.p.is_finite()) {
        return Err(Error::Domain(format!("moment order must be positive, got {}", params.p)));
    }
    let mut warnings = Vec::new();
    if check_assumption(modes, 2.0, params.theta_tilde).verdict == SummabilityVerdict::DivergenceSuspected {
        warnings.push(format!("||A^theta Q||_HS looks divergent at theta = {}", params.theta_tilde));
    }
    run_ladder(Engine::Wiener, modes, params, warnings)
}

fn validate(params: &MomentParams) -> Result<()> {
    if params.horizons.is_empty() || params.horizons.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::Domain("horizons must be a nonempty list of positive times".into()));
    }
    if params.n_steps == 0 || params.replicas == 0 {
        return Err(Error::Domain("n_steps and replicas must be positive".into()));
    }
    Ok(())
}

fn run_ladder(engine: Engine, modes: &ModeSet, params: &MomentParams, warnings: Vec<String>) -> Result<MomentReport> {
    validate(params)?;
    let per_replica: Vec<Vec<f64>> = (0..params.replicas)
        .into_par_iter()
        .map(|r| {
            convolution_sups(&engine, modes, params.theta_tilde, &params.horizons, params.n_steps, params.seed, r as u32)
        })
        .collect();

    let mut ladder = Vec::with_capacity(params.horizons.len());
    for (i, &horizon) in params.horizons.iter().enumerate() {
        let values: Vec<f64> = per_replica.iter().map(|v| v[i].powf(params.p)).filter(|v| v.is_finite()).collect();
        let degenerate = params.replicas - values.len();
        if degenerate as f64 > MAX_DEGENERATE_FRACTION * params.replicas as f64 {
            return Err(Error::Degenerate { degenerate, total: params.replicas });
        }
        let (estimate, stderr) = mean_stderr(&values);
        ladder.push(LadderPoint {
            horizon,
            estimate,
            stderr,
            median_of_means: median_of_means(&values, MEDIAN_OF_MEANS_BLOCKS),
            replicas: values.len(),
            degenerate,
        });
    }
    let mut report = MomentReport {
        engine: match engine {
            Engine::Stable(_) => "stable".into(),
            Engine::Wiener => "wiener".into(),
        },
        alpha: match engine {
            Engine::Stable(law) => Some(law.alpha()),
            Engine::Wiener => None,
        },
        theta_tilde: params.theta_tilde,
        p: params.p,
        n_steps: params.n_steps,
        seed: params.seed,
        ladder,
        slope: None,
        slope_stderr: None,
        warnings,
    };
    if let Ok((slope, se)) = fit_scaling_exponent(&report) {
        report.slope = Some(slope);
        report.slope_stderr = Some(se);
    }
    Ok(report)
}

/// OLS slope of `log(estimate)` on `log(T)` over the positive ladder points.
pub fn fit_scaling_exponent(report: &MomentReport) -> Result<(f64, f64)> {
    let points: Vec<(f64, f64)> = report
        .ladder
        .iter()
        .filter(|pt| pt.estimate > 0.0 && pt.estimate.is_finite())
        .map(|pt| (pt.horizon.ln(), pt.estimate.ln()))
        .collect();
    fit_points(&points)
}

/// Same fit from raw `(T, estimate)` pairs.
pub fn fit_power_law(pairs: &[(f64, f64)]) -> Result<(f64, f64)> {
    let points: Vec<(f64, f64)> =
        pairs.iter().filter(|(t, e)| *t > 0.0 && *e > 0.0 && e.is_finite()).map(|(t, e)| (t.ln(), e.ln())).collect();
    fit_points(&points)
}

fn fit_points(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < MIN_LADDER_POINTS {
        return Err(Error::InsufficientData { needed: MIN_LADDER_POINTS, got: points.len() });
    }
    ols_slope(points).ok_or(Error::InsufficientData { needed: MIN_LADDER_POINTS, got: points.len() })
}
