//! Small statistics helpers: batch-means confidence intervals and the
//! least-squares slope test used by the stability rule.

use statrs::distribution::{ContinuousCDF, StudentsT};

/// Two-sided Student-t quantile for the given confidence level.
pub fn t_quantile(confidence: f64, dof: usize) -> f64 {
    let t = StudentsT::new(0.0, 1.0, dof as f64).expect("positive degrees of freedom");
    t.inverse_cdf(0.5 + confidence / 2.0)
}

/// Mean and confidence half-width of independent (batch) observations.
pub fn mean_half_width(samples: &[f64], confidence: f64) -> (f64, f64) {
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, f64::INFINITY);
    }
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, t_quantile(confidence, n - 1) * (var / n as f64).sqrt())
}

/// Ordinary least-squares fit `y = a + b x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub std_error: f64,
}

impl SlopeFit {
    /// `slope / std_error`; infinite for a perfect fit with nonzero slope.
    pub fn t_statistic(&self) -> f64 {
        if self.std_error > 0.0 {
            self.slope / self.std_error
        } else if self.slope == 0.0 {
            0.0
        } else {
            self.slope.signum() * f64::INFINITY
        }
    }
}

pub fn fit_slope(x: &[f64], y: &[f64]) -> SlopeFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let std_error = if x.len() > 2 {
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        f64::INFINITY
    };
    SlopeFit {
        slope,
        intercept,
        std_error,
    }
}
