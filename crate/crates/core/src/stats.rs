//! Small Monte Carlo statistics helpers.

use serde::Serialize;
use statrs::distribution::{Beta, ContinuousCDF};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn mean_estimate(xs: &[f64]) -> MeanEstimate {
    let n = xs.len();
    MeanEstimate { mean: mean(xs), std_error: (variance(xs) / n as f64).sqrt(), n }
}

/// Sample variance with a standard error from the empirical fourth moment.
pub fn variance_estimate(xs: &[f64]) -> MeanEstimate {
    let n = xs.len() as f64;
    let m = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    let s2 = variance(xs);
    let m4 = sq.iter().map(|d| d * d).sum::<f64>() / n;
    let m2 = sq.iter().sum::<f64>() / n;
    MeanEstimate { mean: s2, std_error: ((m4 - m2 * m2) / n).max(0.0).sqrt(), n: xs.len() }
}

/// Sample covariance of paired samples, with a delta-method standard error.
pub fn covariance_estimate(xs: &[f64], ys: &[f64]) -> MeanEstimate {
    let n = xs.len() as f64;
    let mx = mean(xs);
    let my = mean(ys);
    let prods: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    let c = prods.iter().sum::<f64>() / (n - 1.0);
    let se = (variance(&prods) / n).sqrt();
    MeanEstimate { mean: c, std_error: se, n: xs.len() }
}

/// Least-squares line y = intercept + slope * x.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub max_residual: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> LineFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).abs()).fold(0.0, f64::max);
    LineFit { slope, intercept, max_residual }
}

/// Slope of log y against log x.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> LineFit {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    fit_line(&lx, &ly)
}

/// Two-sided Clopper–Pearson interval for k successes out of n.
pub fn clopper_pearson(k: usize, n: usize, confidence: f64) -> (f64, f64) {
    let alpha = 1.0 - confidence;
    let lo = if k == 0 { 0.0 } else { Beta::new(k as f64, (n - k + 1) as f64).expect("valid beta").inverse_cdf(alpha / 2.0) };
    let hi = if k == n { 1.0 } else { Beta::new((k + 1) as f64, (n - k) as f64).expect("valid beta").inverse_cdf(1.0 - alpha / 2.0) };
    (lo, hi)
}

/// Ratio spread max/min of positive values.
pub fn spread(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::MIN, f64::max);
    let min = values.iter().cloned().fold(f64::MAX, f64::min);
    max / min
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_fit_recovers_slope() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-0.7)).collect();
        let f = loglog_slope(&x, &y);
        assert!((f.slope + 0.7).abs() < 1e-12);
    }

    #[test]
    fn clopper_pearson_zero_successes() {
        let (lo, hi) = clopper_pearson(0, 2000, 0.95);
        assert_eq!(lo, 0.0);
        assert!((hi - (1.0 - 0.025f64.powf(1.0 / 2000.0))).abs() < 1e-9);
    }

    #[test]
    fn variance_of_constant_is_zero() {
        let v = variance_estimate(&[2.0; 10]);
        assert_eq!(v.mean, 0.0);
        assert_eq!(v.std_error, 0.0);
    }
}
