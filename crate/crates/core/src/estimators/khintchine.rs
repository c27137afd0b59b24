//! Monte Carlo over Rademacher signs for the Khintchine ratio
//! `(Σ h_k²)^{1/2} / (E|Σ r_k h_k|^p)^{1/p}`.

use serde::{Deserialize, Serialize};

use super::stats::mean_stderr;
use crate::error::{Error, Result};
use crate::stable_rng::{RngStream, StreamId, AUX_MODE_BASE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KhintchineReport {
    pub p: f64,
    pub replicas: usize,
    pub l2_norm: f64,
    /// Estimate of `E|Σ r_k h_k|^p`.
    pub moment: f64,
    pub moment_stderr: f64,
    pub ratio: f64,
    /// Delta-method standard error of the ratio.
    pub ratio_stderr: f64,
}

pub fn khintchine_check(h: &[f64], p: f64, replicas: usize, seed: u64) -> Result<KhintchineReport> {
    if h.is_empty() || h.iter().any(|v| !v.is_finite()) || h.iter().all(|&v| v == 0.0) {
        return Err(Error::Domain("h must be a finite, nonzero sequence".into()));
    }
    if !(p > 0.0 && p.is_finite()) || replicas < 2 {
        return Err(Error::Domain("need p > 0 and at least two replicas".into()));
    }
    let mut stream = RngStream::new(seed, StreamId::new(0, AUX_MODE_BASE + 2));
    let samples: Vec<f64> = (0..replicas)
        .map(|_| h.iter().map(|&v| stream.rademacher() * v).sum::<f64>().abs().powf(p))
        .collect();
    let (moment, moment_stderr) = mean_stderr(&samples);
    let l2_norm = h.iter().map(|v| v * v).sum::<f64>().sqrt();
    let ratio = l2_norm / moment.powf(1.0 / p);
    // d/dm [c m^{-1/p}] = -(1/p) c m^{-1/p - 1}
    let ratio_stderr = ratio / p * moment_stderr / moment;
    Ok(KhintchineReport { p, replicas, l2_norm, moment, moment_stderr, ratio, ratio_stderr })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_entry_is_exact() {
        let r = khintchine_check(&[-2.5], 0.7, 1000, 1).unwrap();
        assert!((r.ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_zero_sequence() {
        assert!(khintchine_check(&[0.0, 0.0], 1.0, 10, 1).is_err());
        assert!(khintchine_check(&[], 1.0, 10, 1).is_err());
    }
}
