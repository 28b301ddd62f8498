//! Small sample-statistics helpers shared by the estimators.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Sample mean and standard error of the mean (`n − 1` denominator).
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
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

/// Event rate with an exact (Garwood) 95% Poisson interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateEstimate {
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub events: u64,
    pub exposure: f64,
}

impl RateEstimate {
    /// `events / exposure`. With zero events the estimate is 0 and the
    /// interval is `[0, upper]`.
    pub fn poisson(events: u64, exposure: f64) -> RateEstimate {
        let k = events as f64;
        let (lo, hi) = if exposure > 0.0 {
            let lo = if events == 0 {
                0.0
            } else {
                ChiSquared::new(2.0 * k).expect("positive dof").inverse_cdf(0.025) / 2.0
            };
            let hi = ChiSquared::new(2.0 * k + 2.0).expect("positive dof").inverse_cdf(0.975) / 2.0;
            (lo / exposure, hi / exposure)
        } else {
            (0.0, f64::INFINITY)
        };
        let rate = if exposure > 0.0 { k / exposure } else { 0.0 };
        RateEstimate { rate, ci_low: lo, ci_high: hi, events, exposure }
    }

    pub fn covers(&self, value: f64) -> bool {
        self.ci_low <= value && value <= self.ci_high
    }
}

/// A point estimate, its standard error and a 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Estimate {
    pub fn normal(value: f64, std_error: f64) -> Estimate {
        Estimate { value, std_error, ci_low: value - Z95 * std_error, ci_high: value + Z95 * std_error }
    }

    /// Student-t interval with `df` degrees of freedom.
    pub fn student(value: f64, std_error: f64, df: f64) -> Estimate {
        let q = if df.is_finite() {
            StudentsT::new(0.0, 1.0, df).map_or(f64::INFINITY, |t| t.inverse_cdf(0.975))
        } else {
            Z95
        };
        Estimate { value, std_error, ci_low: value - q * std_error, ci_high: value + q * std_error }
    }

    pub fn covers(&self, value: f64) -> bool {
        self.ci_low <= value && value <= self.ci_high
    }

    /// The same estimate in units multiplied by `s > 0`.
    pub fn scaled(&self, s: f64) -> Estimate {
        Estimate {
            value: self.value * s,
            std_error: self.std_error * s,
            ci_low: self.ci_low * s,
            ci_high: self.ci_high * s,
        }
    }
}
