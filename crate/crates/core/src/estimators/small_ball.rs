//! Probability that the convolution stays in a small ball on the whole horizon.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::moment::MAX_DEGENERATE_FRACTION;
use super::replica::{convolution_sups, Engine};
use super::stats::wilson_lower;
use crate::error::{Error, Result};
use crate::spectral::ModeSet;
use crate::stable_rng::StableLaw;

/// Confidence level of the reported Wilson lower bound.
pub const SMALL_BALL_CONFIDENCE: f64 = 0.99;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallBallParams {
    pub theta_tilde: f64,
    pub epsilon: f64,
    pub horizon: f64,
    pub n_steps: usize,
    pub replicas: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallBallReport {
    pub epsilon: f64,
    pub horizon: f64,
    pub theta_tilde: f64,
    pub replicas: usize,
    /// Replicas with `max_j ‖A^θ̃ Z(t_j)‖ ≤ ε`.
    pub hits: usize,
    /// Replicas that overflowed; they count as misses.
    pub degenerate: usize,
    pub estimate: f64,
    pub confidence: f64,
    pub wilson_lower: f64,
}

/// Per-replica `max_j ‖A^θ̃ Z(t_j)‖` under the direct convolution.
pub fn small_ball_sups(modes: &ModeSet, law: &StableLaw, params: &SmallBallParams) -> Result<Vec<f64>> {
    if !(params.horizon > 0.0 && params.horizon.is_finite()) || params.n_steps == 0 || params.replicas == 0 {
        return Err(Error::Domain("small ball needs a positive horizon, steps and replicas".into()));
    }
    let engine = Engine::Stable(*law);
    Ok((0..params.replicas)
        .into_par_iter()
        .map(|r| convolution_sups(&engine, modes, params.theta_tilde, &[params.horizon], params.n_steps, params.seed, r as u32)[0])
        .collect())
}

/// Counts replicas whose whole grid path stays in the ε-ball. Overflowed
/// replicas count as misses; more than 1% of them is an error.
pub fn small_ball(modes: &ModeSet, law: &StableLaw, params: &SmallBallParams) -> Result<SmallBallReport> {
    if !(params.epsilon > 0.0) {
        return Err(Error::Domain(format!("epsilon must be positive, got {}", params.epsilon)));
    }
    let sups = small_ball_sups(modes, law, params)?;
    let report = report_from_sups(&sups, params);
    if report.degenerate as f64 > MAX_DEGENERATE_FRACTION * report.replicas as f64 {
        return Err(Error::Degenerate { degenerate: report.degenerate, total: report.replicas });
    }
    Ok(report)
}

pub fn report_from_sups(sups: &[f64], params: &SmallBallParams) -> SmallBallReport {
    let hits = sups.iter().filter(|&&s| s <= params.epsilon).count();
    let degenerate = sups.iter().filter(|s| !s.is_finite()).count();
    SmallBallReport {
        epsilon: params.epsilon,
        horizon: params.horizon,
        theta_tilde: params.theta_tilde,
        replicas: sups.len(),
        hits,
        degenerate,
        estimate: hits as f64 / sups.len() as f64,
        confidence: SMALL_BALL_CONFIDENCE,
        wilson_lower: wilson_lower(hits, sups.len(), SMALL_BALL_CONFIDENCE),
    }
}
