//! Converts regression predictions on the Box-Cox scale into classifier
//! scores: the probability that the underlying ratio clears the wage-gain
//! threshold, assuming normal residuals around the prediction.

use super::BoxCoxTransform;
use crate::datamodel::WAGE_GAIN_THRESHOLD;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ScoreConverter {
    /// Box-Cox image of the 1.1 ratio threshold.
    pub threshold_bc: f64,
    pub residual_sd: f64,
}

impl ScoreConverter {
    pub fn new(transform: &BoxCoxTransform, residual_sd: f64) -> Result<Self> {
        if !(residual_sd > 0.0) || !residual_sd.is_finite() {
            return Err(Error::DegenerateFit(format!(
                "residual sd must be positive to convert predictions to scores, got \
                 {residual_sd}; the regression fit is degenerate (perfect or empty)"
            )));
        }
        Ok(ScoreConverter {
            threshold_bc: transform.transform(WAGE_GAIN_THRESHOLD)?,
            residual_sd,
        })
    }
}

/// P(outcome > threshold | prediction) = 1 - Phi((t - pred) / sd).
pub fn regression_to_score(pred: f64, conv: &ScoreConverter) -> f64 {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    1.0 - normal.cdf((conv.threshold_bc - pred) / conv.residual_sd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn converter(sd: f64) -> ScoreConverter {
        ScoreConverter::new(&BoxCoxTransform::fixed(0.0), sd).unwrap()
    }

    #[test]
    fn prediction_at_threshold_scores_exactly_half() {
        let conv = converter(0.3);
        let score = regression_to_score(conv.threshold_bc, &conv);
        assert!((score - 0.5).abs() < 1e-12, "score {score}");
    }

    #[test]
    fn one_sd_above_threshold_matches_the_normal_table() {
        let conv = converter(0.25);
        let score = regression_to_score(conv.threshold_bc + conv.residual_sd, &conv);
        assert_abs_diff_eq!(score, 0.8413447460685429, epsilon = 1e-9);
    }

    #[test]
    fn score_is_monotone_and_vanishes_far_below() {
        let conv = converter(0.2);
        let mut last = -1.0;
        for k in -40..=40 {
            let pred = conv.threshold_bc + 0.1 * k as f64;
            let s = regression_to_score(pred, &conv);
            assert!((0.0..=1.0).contains(&s));
            assert!(s >= last, "score must not decrease");
            last = s;
        }
        assert!(regression_to_score(conv.threshold_bc - 8.0, &conv) < 1e-12);
    }

    #[test]
    fn zero_residual_sd_is_rejected_with_guidance() {
        let err = ScoreConverter::new(&BoxCoxTransform::fixed(0.0), 0.0).unwrap_err();
        assert!(err.to_string().contains("degenerate"));
    }
}
