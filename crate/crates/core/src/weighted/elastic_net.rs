//! Weighted elastic-net linear and logistic fits by coordinate descent.
//!
//! Losses are self-normalized (divided by the total weight), which keeps
//! the penalty scale invariant under weight rescaling. The intercept is
//! never penalized. Convergence is declared when no coefficient moves by
//! more than 1e-7 in a sweep.

use super::{LinearModel, ModelKind, PredictorModel, Task, WeightedDataset};
use crate::error::{Error, Result};
use ndarray::ArrayView2;

const COEF_TOL: f64 = 1e-7;
const MAX_SWEEPS: usize = 50_000;
const MAX_IRLS: usize = 200;

fn soft_threshold(value: f64, at: f64) -> f64 {
    if value > at {
        value - at
    } else if value < -at {
        value + at
    } else {
        0.0
    }
}

fn validate(data: &WeightedDataset, alpha_mix: f64, penalty: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha_mix) {
        return Err(Error::InvalidArgument(format!(
            "alpha_mix must be in [0, 1], got {alpha_mix}"
        )));
    }
    if !(penalty >= 0.0) || !penalty.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "penalty must be nonnegative, got {penalty}"
        )));
    }
    let sw: f64 = data.weights.iter().sum();
    for w in &data.weights {
        if !w.is_finite() || *w < 0.0 {
            return Err(Error::InvalidArgument("weights must be finite and nonnegative".into()));
        }
    }
    if !(sw > 0.0) {
        return Err(Error::DegenerateFit("total weight is zero".into()));
    }
    Ok(sw)
}

/// One pass of cyclic coordinate descent on a weighted least-squares
/// objective; returns the largest coefficient move.
#[allow(clippy::too_many_arguments)]
fn cd_sweep(
    x: ArrayView2<'_, f64>,
    weights: &[f64],
    residual: &mut [f64],
    beta: &mut [f64],
    intercept: &mut f64,
    col_sq: &[f64],
    sw: f64,
    l1: f64,
    l2: f64,
) -> f64 {
    let mut max_move = 0.0f64;
    // intercept (unpenalized)
    let mut grad = 0.0;
    for (r, w) in residual.iter().zip(weights) {
        grad += w * r;
    }
    let delta = grad / sw;
    if delta != 0.0 {
        *intercept += delta;
        for r in residual.iter_mut() {
            *r -= delta;
        }
        max_move = max_move.max(delta.abs());
    }
    for j in 0..beta.len() {
        if col_sq[j] == 0.0 {
            continue;
        }
        let col = x.column(j);
        let mut rho = 0.0;
        for ((xi, w), r) in col.iter().zip(weights).zip(residual.iter()) {
            rho += w * xi * r;
        }
        rho = rho / sw + col_sq[j] * beta[j];
        let new = soft_threshold(rho, l1) / (col_sq[j] + l2);
        let delta = new - beta[j];
        if delta != 0.0 {
            beta[j] = new;
            for ((xi, _), r) in col.iter().zip(weights).zip(residual.iter_mut()) {
                *r -= delta * xi;
            }
            max_move = max_move.max(delta.abs());
        }
    }
    max_move
}

fn weighted_least_squares(
    x: ArrayView2<'_, f64>,
    targets: &[f64],
    weights: &[f64],
    sw_norm: f64,
    alpha_mix: f64,
    penalty: f64,
    beta: &mut [f64],
    intercept: &mut f64,
) {
    let n = targets.len();
    let d = beta.len();
    let col_sq: Vec<f64> = (0..d)
        .map(|j| {
            let col = x.column(j);
            col.iter()
                .zip(weights)
                .map(|(xi, w)| w * xi * xi)
                .sum::<f64>()
                / sw_norm
        })
        .collect();
    let mut residual: Vec<f64> = (0..n)
        .map(|i| {
            let mut eta = *intercept;
            for j in 0..d {
                eta += beta[j] * x[[i, j]];
            }
            targets[i] - eta
        })
        .collect();
    let l1 = penalty * alpha_mix;
    let l2 = penalty * (1.0 - alpha_mix);
    for _ in 0..MAX_SWEEPS {
        let moved = cd_sweep(
            x, weights, &mut residual, beta, intercept, &col_sq, sw_norm, l1, l2,
        );
        if moved < COEF_TOL {
            break;
        }
    }
}

/// Weighted elastic-net least squares. `residual_sd` is the weighted
/// standard deviation of the training residuals.
pub fn fit_en_linear(data: &WeightedDataset, alpha_mix: f64, penalty: f64) -> Result<PredictorModel> {
    let sw = validate(data, alpha_mix, penalty)?;
    let x = data.features.view();
    let d = x.ncols();
    let mut beta = vec![0.0; d];
    let mut intercept = 0.0;
    let targets: Vec<f64> = data.labels.to_vec();
    weighted_least_squares(
        x,
        &targets,
        &data.weights,
        sw,
        alpha_mix,
        penalty,
        &mut beta,
        &mut intercept,
    );
    let mut sse = 0.0;
    for i in 0..x.nrows() {
        let mut eta = intercept;
        for j in 0..d {
            eta += beta[j] * x[[i, j]];
        }
        let r = targets[i] - eta;
        sse += data.weights[i] * r * r;
    }
    let residual_sd = (sse / sw).sqrt();
    Ok(PredictorModel {
        kind: ModelKind::EnLinear(LinearModel {
            intercept,
            coefficients: beta,
        }),
        task: Task::Regression,
        residual_sd: Some(residual_sd),
    })
}

/// Weighted elastic-net logistic regression via outer IRLS with a
/// coordinate-descent inner solver on the working response.
pub fn fit_en_logistic(
    data: &WeightedDataset,
    alpha_mix: f64,
    penalty: f64,
) -> Result<PredictorModel> {
    let sw = validate(data, alpha_mix, penalty)?;
    let labels: Vec<f64> = data.labels.to_vec();
    let mut classes: Vec<u64> = labels.iter().map(|y| y.to_bits()).collect();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::DegenerateFit(
            "classification needs at least two distinct labels".into(),
        ));
    }
    for y in &labels {
        if *y != 0.0 && *y != 1.0 {
            return Err(Error::InvalidArgument(format!(
                "binary labels must be 0 or 1, got {y}"
            )));
        }
    }

    let x = data.features.view();
    let (n, d) = (x.nrows(), x.ncols());
    let base = {
        let pos: f64 = labels
            .iter()
            .zip(&data.weights)
            .map(|(y, w)| y * w)
            .sum::<f64>()
            / sw;
        let p = pos.clamp(1e-6, 1.0 - 1e-6);
        (p / (1.0 - p)).ln()
    };
    let mut beta = vec![0.0; d];
    let mut intercept = base;

    for _ in 0..MAX_IRLS {
        // quadratic approximation at the current linear predictor
        let mut eta = vec![0.0; n];
        for i in 0..n {
            let mut e = intercept;
            for j in 0..d {
                e += beta[j] * x[[i, j]];
            }
            eta[i] = e;
        }
        let mut work_w = vec![0.0; n];
        let mut work_z = vec![0.0; n];
        for i in 0..n {
            let p = 1.0 / (1.0 + (-eta[i]).exp());
            let v = (p * (1.0 - p)).max(1e-10);
            work_w[i] = data.weights[i] * v;
            work_z[i] = eta[i] + (labels[i] - p) / v;
        }
        let before = (intercept, beta.clone());
        weighted_least_squares(
            x,
            &work_z,
            &work_w,
            sw,
            alpha_mix,
            penalty,
            &mut beta,
            &mut intercept,
        );
        let mut moved = (intercept - before.0).abs();
        for j in 0..d {
            moved = moved.max((beta[j] - before.1[j]).abs());
        }
        if moved < COEF_TOL {
            break;
        }
    }
    Ok(PredictorModel {
        kind: ModelKind::EnLogistic(LinearModel {
            intercept,
            coefficients: beta,
        }),
        task: Task::Classification,
        residual_sd: None,
    })
}
