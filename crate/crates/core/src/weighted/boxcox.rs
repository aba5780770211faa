//! Box-Cox label transform with profile-likelihood lambda.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

const LAMBDA_RANGE: (f64, f64) = (-3.0, 3.0);
const GOLDEN_TOL: f64 = 1e-4;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BoxCoxTransform {
    pub lambda: f64,
    /// Fitting summary: sample size and smallest value seen.
    pub n: usize,
    pub min: f64,
}

impl BoxCoxTransform {
    /// Transform with a pinned lambda (no fitting).
    pub fn fixed(lambda: f64) -> Self {
        BoxCoxTransform {
            lambda,
            n: 0,
            min: f64::NAN,
        }
    }

    pub fn transform(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "Box-Cox is defined for positive values, got {y}"
            )));
        }
        if self.lambda == 0.0 {
            Ok(y.ln())
        } else {
            Ok((y.powf(self.lambda) - 1.0) / self.lambda)
        }
    }

    pub fn invert(&self, v: f64) -> Result<f64> {
        if self.lambda == 0.0 {
            Ok(v.exp())
        } else {
            let inner = self.lambda * v + 1.0;
            if inner <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "{v} is outside the range of the lambda = {} transform",
                    self.lambda
                )));
            }
            Ok(inner.powf(1.0 / self.lambda))
        }
    }

    pub fn transform_slice(&self, values: &[f64]) -> Result<Vec<f64>> {
        values.iter().map(|&y| self.transform(y)).collect()
    }
}

fn profile_loglik(values: &[f64], sum_log: f64, lambda: f64) -> f64 {
    let n = values.len() as f64;
    let transformed: Vec<f64> = if lambda == 0.0 {
        values.iter().map(|y| y.ln()).collect()
    } else {
        values.iter().map(|y| (y.powf(lambda) - 1.0) / lambda).collect()
    };
    let mean = transformed.iter().sum::<f64>() / n;
    let var = transformed.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    -0.5 * n * var.max(1e-300).ln() + (lambda - 1.0) * sum_log
}

/// Fits lambda by golden-section search on the profile log-likelihood over
/// [-3, 3] and returns the transform with the transformed values.
pub fn fit_boxcox(values: &[f64]) -> Result<(BoxCoxTransform, Vec<f64>)> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("no values to transform".into()));
    }
    let mut min = f64::INFINITY;
    for &y in values {
        if !(y > 0.0) || !y.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "Box-Cox requires positive values, got {y}"
            )));
        }
        min = min.min(y);
    }
    let sum_log: f64 = values.iter().map(|y| y.ln()).sum();

    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = LAMBDA_RANGE;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = profile_loglik(values, sum_log, c);
    let mut fd = profile_loglik(values, sum_log, d);
    while (b - a) > GOLDEN_TOL {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = profile_loglik(values, sum_log, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = profile_loglik(values, sum_log, d);
        }
    }
    let lambda = 0.5 * (a + b);
    let transform = BoxCoxTransform {
        lambda,
        n: values.len(),
        min,
    };
    let transformed = transform.transform_slice(values)?;
    Ok((transform, transformed))
}
