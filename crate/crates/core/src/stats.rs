//! Goodness-of-fit and estimator helpers shared by the validation probes.

use serde::Serialize;

/// Two-sided Kolmogorov-Smirnov distance between the empirical distribution
/// of `samples` and `cdf`. Sorts `samples` in place.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic critical value of the one-sample KS distance at level `alpha`.
pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

/// Standard error of a binomial proportion estimate.
pub fn binomial_sigma(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_err: f64,
}

pub fn mean_estimate(xs: &[f64]) -> MeanEstimate {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    MeanEstimate {
        mean,
        std_err: (var / n).sqrt(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Sum of squared residuals.
    pub residual: f64,
}

/// Ordinary least squares `y = slope * x + intercept`. Needs two or more
/// distinct abscissae.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> LineFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    LineFit {
        slope,
        intercept,
        residual,
    }
}

/// CDF of Gamma(shape, scale 1), i.e. the regularized lower incomplete gamma.
pub fn gamma_cdf(shape: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        statrs::function::gamma::gamma_lr(shape, x)
    }
}

/// CDF of Beta(1, b): `1 - (1 - x)^b` on [0, 1].
pub fn beta1_cdf(b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        1.0 - (1.0 - x).powf(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_distance_of_perfect_grid_is_one_over_n() {
        let mut xs: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        let d = ks_statistic(&mut xs, |x| x);
        assert!((d - 0.005).abs() < 1e-12);
        // Level 0.01 two-sided coefficient is 1.6276.
        assert!((ks_critical_value(10_000, 0.01) - 0.016276).abs() < 1e-5);
    }

    #[test]
    fn line_fit_recovers_exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let fit = fit_line(&xs, &ys);
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.intercept + 1.0).abs() < 1e-12);
        assert!(fit.residual < 1e-20);
    }

    #[test]
    fn gamma_cdf_shape_one_is_exponential() {
        for x in [1e-4, 0.1, 1.0, 5.0] {
            assert!((gamma_cdf(1.0, x) - (1.0 - (-x).exp())).abs() < 1e-12);
        }
        // Shape 2: 1 - e^{-x}(1 + x).
        let x = 0.7f64;
        assert!((gamma_cdf(2.0, x) - (1.0 - (-x).exp() * (1.0 + x))).abs() < 1e-12);
    }

    #[test]
    fn beta1_cdf_matches_regularized_incomplete_beta() {
        for b in [1.0, 2.0, 3.5] {
            for x in [0.1, 0.5, 0.9] {
                let reference = statrs::function::beta::beta_reg(1.0, b, x);
                assert!((beta1_cdf(b, x) - reference).abs() < 1e-12);
            }
        }
        assert_eq!(beta1_cdf(1.0, 0.5), 0.5);
    }
}
