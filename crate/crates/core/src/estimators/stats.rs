//! Small statistical helpers shared by the estimators.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::stable_rng::RngStream;

/// Sample mean and its standard error.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Median of the means of `blocks` contiguous blocks.
pub fn median_of_means(xs: &[f64], blocks: usize) -> f64 {
    let blocks = blocks.clamp(1, xs.len().max(1));
    let size = xs.len() / blocks;
    if size == 0 {
        return f64::NAN;
    }
    let mut means: Vec<f64> = xs.chunks_exact(size).take(blocks).map(|c| c.iter().sum::<f64>() / size as f64).collect();
    means.sort_by(f64::total_cmp);
    let mid = means.len() / 2;
    if means.len() % 2 == 1 {
        means[mid]
    } else {
        0.5 * (means[mid - 1] + means[mid])
    }
}

/// Two-sided normal quantile for the given confidence level.
pub fn normal_quantile_two_sided(confidence: f64) -> f64 {
    Normal::standard().inverse_cdf(0.5 + 0.5 * confidence)
}

/// Lower end of the Wilson score interval for `hits` successes in `trials`.
pub fn wilson_lower(hits: usize, trials: usize, confidence: f64) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    let z = normal_quantile_two_sided(confidence);
    let n = trials as f64;
    let phat = hits as f64 / n;
    let z2 = z * z;
    let center = phat + z2 / (2.0 * n);
    let half = z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half) / (1.0 + z2 / n)).clamp(0.0, 1.0)
}

/// Ordinary least squares `y = a + b x`; returns `(b, stderr(b))`.
/// The standard error is 0 when only two points are given.
pub fn ols_slope(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = points.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let se = if n > 2 {
        let intercept = my - slope * mx;
        let ssr: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
        (ssr / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Some((slope, se))
}

/// Bootstrap distribution of `mean(num) / mean(den)` over paired resamples.
pub fn bootstrap_ratio(num: &[f64], den: &[f64], resamples: usize, stream: &mut RngStream) -> Vec<f64> {
    let n = num.len();
    (0..resamples)
        .map(|_| {
            let (mut a, mut b) = (0.0, 0.0);
            for _ in 0..n {
                let i = stream.below(n);
                a += num[i];
                b += den[i];
            }
            a / b
        })
        .collect()
}

/// Empirical quantile (linear interpolation) of an unsorted sample.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}
