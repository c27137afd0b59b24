//! Doob's maximal inequality on the weighted driving field:
//! `E sup_{t≤T} ‖A^θ̃ L_t‖^p ≤ (p/(p-1))^p E ‖A^θ̃ L_T‖^p`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::moment::MAX_DEGENERATE_FRACTION;
use super::replica::{driving_sup_and_end, Engine};
use super::stats::{bootstrap_ratio, mean_stderr, quantile};
use crate::error::{Error, Result};
use crate::spectral::ModeSet;
use crate::stable_rng::{RngStream, StableLaw, StreamId, AUX_MODE_BASE};

pub const DEFAULT_BOOTSTRAP_RESAMPLES: usize = 400;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoobParams {
    pub theta_tilde: f64,
    pub p: f64,
    pub horizon: f64,
    pub n_steps: usize,
    pub replicas: usize,
    pub seed: u64,
    pub bootstrap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoobReport {
    pub p: f64,
    /// `(p/(p-1))^p`
    pub bound: f64,
    pub sup_moment: f64,
    pub sup_stderr: f64,
    pub endpoint_moment: f64,
    pub endpoint_stderr: f64,
    /// `None` when both sides vanish (zero noise).
    pub ratio: Option<f64>,
    pub bootstrap_stderr: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub degenerate: bool,
    pub replicas: usize,
    /// `ratio ≤ bound + 3 bootstrap_stderr`, or degenerate.
    pub passes: bool,
}

pub fn doob_constant(p: f64) -> f64 {
    (p / (p - 1.0)).powf(p)
}

pub fn doob_check(modes: &ModeSet, law: &StableLaw, params: &DoobParams) -> Result<DoobReport> {
    if !(params.p > 1.0) {
        return Err(Error::Domain(format!("Doob's inequality needs p > 1, got {}", params.p)));
    }
    law.check_moment_order(params.p)?;
    if !(params.horizon > 0.0) || params.n_steps == 0 || params.replicas < 2 {
        return Err(Error::Domain("Doob check needs a positive horizon, steps and at least two replicas".into()));
    }
    let engine = Engine::Stable(*law);
    let pairs: Vec<(f64, f64)> = (0..params.replicas)
        .into_par_iter()
        .map(|r| {
            let (s, e) =
                driving_sup_and_end(&engine, modes, params.theta_tilde, params.horizon, params.n_steps, params.seed, r as u32);
            (s.powf(params.p), e.powf(params.p))
        })
        .filter(|(s, e)| s.is_finite() && e.is_finite())
        .collect();
    let overflowed = params.replicas - pairs.len();
    if overflowed as f64 > MAX_DEGENERATE_FRACTION * params.replicas as f64 {
        return Err(Error::Degenerate { degenerate: overflowed, total: params.replicas });
    }
    let sup: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let end: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (sup_moment, sup_stderr) = mean_stderr(&sup);
    let (endpoint_moment, endpoint_stderr) = mean_stderr(&end);
    let bound = doob_constant(params.p);

    let degenerate = !(endpoint_moment > 0.0);
    let (ratio, bootstrap_stderr, ci_low, ci_high) = if degenerate {
        (None, None, None, None)
    } else {
        let mut stream = RngStream::new(params.seed, StreamId::new(0, AUX_MODE_BASE + 1));
        let boot = bootstrap_ratio(&sup, &end, params.bootstrap.max(2), &mut stream);
        let mean_boot = boot.iter().sum::<f64>() / boot.len() as f64;
        let sd = (boot.iter().map(|b| (b - mean_boot).powi(2)).sum::<f64>() / (boot.len() - 1) as f64).sqrt();
        (Some(sup_moment / endpoint_moment), Some(sd), Some(quantile(&boot, 0.025)), Some(quantile(&boot, 0.975)))
    };
    let passes = match (ratio, bootstrap_stderr) {
        (Some(r), Some(se)) => r <= bound + 3.0 * se,
        _ => true,
    };
    Ok(DoobReport {
        p: params.p,
        bound,
        sup_moment,
        sup_stderr,
        endpoint_moment,
        endpoint_stderr,
        ratio,
        bootstrap_stderr,
        ci_low,
        ci_high,
        degenerate,
        replicas: pairs.len(),
        passes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(p: f64) -> DoobParams {
        DoobParams { theta_tilde: 0.0, p, horizon: 1.0, n_steps: 128, replicas: 200, seed: 3, bootstrap: 100 }
    }

    #[test]
    fn constants() {
        assert!((doob_constant(1.5) - 27f64.sqrt()).abs() < 1e-12);
        assert_eq!(doob_constant(2.0), 4.0);
    }

    #[test]
    fn order_guards() {
        let modes = ModeSet::power_law(2, 2.0, 2.5, 1.0).unwrap();
        let law = StableLaw::new(1.5).unwrap();
        assert!(matches!(doob_check(&modes, &law, &params(1.0)), Err(Error::Domain(_))));
        assert!(matches!(doob_check(&modes, &law, &params(1.5)), Err(Error::Domain(_))));
        assert!(doob_check(&modes, &StableLaw::new(2.0).unwrap(), &params(2.0)).is_ok());
    }

    #[test]
    fn zero_noise_is_degenerate() {
        let modes = ModeSet::power_law(2, 2.0, 2.5, 1.0).unwrap().with_betas(&[0.0, 0.0]).unwrap();
        let r = doob_check(&modes, &StableLaw::new(1.8).unwrap(), &params(1.5)).unwrap();
        assert_eq!(r.sup_moment, 0.0);
        assert_eq!(r.endpoint_moment, 0.0);
        assert!(r.degenerate && r.ratio.is_none() && r.passes);
    }
}
