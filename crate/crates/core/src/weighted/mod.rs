//! Importance-weighted supervised learning under covariate shift.
//!
//! Every fit minimizes a self-normalized weighted loss, so uniform weights
//! reduce to the unweighted method and rescaling all weights changes
//! nothing. Families: elastic-net linear/logistic, random forest, and
//! gradient-boosted trees, plus the weighting-only estimator that skips
//! the learning stage entirely.

mod boxcox;
mod elastic_net;
mod forest;
mod gboost;
mod score;
mod tree;

pub use boxcox::{fit_boxcox, BoxCoxTransform};
pub use elastic_net::{fit_en_linear, fit_en_logistic};
pub use forest::{fit_forest, ForestConfig, ForestModel};
pub use gboost::{fit_gboost, GboostConfig, GboostModel};
pub use score::{regression_to_score, ScoreConverter};
pub use tree::{Node, Tree};

use crate::error::{Error, Result};
use crate::stage_seed;
use ndarray::{Array1, Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Task {
    Classification,
    Regression,
}

/// Training triple: encoded features, labels, and importance weights.
#[derive(Clone, Debug)]
pub struct WeightedDataset {
    pub features: Array2<f64>,
    pub labels: Array1<f64>,
    pub weights: Vec<f64>,
}

impl WeightedDataset {
    pub fn new(features: Array2<f64>, labels: Array1<f64>, weights: Vec<f64>) -> Result<Self> {
        if features.nrows() != labels.len() || features.nrows() != weights.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} feature rows, {} labels, {} weights",
                features.nrows(),
                labels.len(),
                weights.len()
            )));
        }
        for w in &weights {
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::InvalidArgument(
                    "weights must be finite and nonnegative".into(),
                ));
            }
        }
        Ok(WeightedDataset {
            features,
            labels,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn subset(&self, rows: &[usize]) -> WeightedDataset {
        let d = self.features.ncols();
        let mut features = Array2::zeros((rows.len(), d));
        let mut labels = Array1::zeros(rows.len());
        let mut weights = Vec::with_capacity(rows.len());
        for (k, &i) in rows.iter().enumerate() {
            features.row_mut(k).assign(&self.features.row(i));
            labels[k] = self.labels[i];
            weights.push(self.weights[i]);
        }
        WeightedDataset {
            features,
            labels,
            weights,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum ModelKind {
    EnLogistic(LinearModel),
    EnLinear(LinearModel),
    Forest(ForestModel),
    GradBoost(GboostModel),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
}

impl LinearModel {
    fn linear_predictor(&self, row: ndarray::ArrayView1<'_, f64>) -> f64 {
        let mut eta = self.intercept;
        for (b, x) in self.coefficients.iter().zip(row.iter()) {
            eta += b * x;
        }
        eta
    }
}

/// A fitted weighted learner. Classification predictions are scores in
/// [0, 1]; regression predictions live on the label (Box-Cox) scale.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PredictorModel {
    pub kind: ModelKind,
    pub task: Task,
    pub residual_sd: Option<f64>,
}

impl PredictorModel {
    pub fn family(&self) -> &'static str {
        match self.kind {
            ModelKind::EnLogistic(_) => "en_logistic",
            ModelKind::EnLinear(_) => "en_linear",
            ModelKind::Forest(_) => "random_forest",
            ModelKind::GradBoost(_) => "grad_boost",
        }
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Array1<f64> {
        let mut out = Array1::zeros(x.nrows());
        let mut row_buf = Vec::with_capacity(x.ncols());
        for (i, row) in x.rows().into_iter().enumerate() {
            out[i] = match &self.kind {
                ModelKind::EnLogistic(m) => 1.0 / (1.0 + (-m.linear_predictor(row)).exp()),
                ModelKind::EnLinear(m) => m.linear_predictor(row),
                ModelKind::Forest(m) => {
                    row_buf.clear();
                    row_buf.extend(row.iter().copied());
                    m.predict_row(&row_buf)
                }
                ModelKind::GradBoost(m) => {
                    row_buf.clear();
                    row_buf.extend(row.iter().copied());
                    let raw = m.predict_raw_row(&row_buf);
                    match self.task {
                        Task::Classification => 1.0 / (1.0 + (-raw).exp()),
                        Task::Regression => raw,
                    }
                }
            };
        }
        out
    }
}

/// The weighting-only estimator: self-normalized weighted label mean, in
/// percent. Labels must already be scores or binary indicators in [0, 1].
pub fn weighted_mean_label(data: &WeightedDataset) -> Result<f64> {
    let total: f64 = data.weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateFit("total weight is zero".into()));
    }
    let mut acc = 0.0;
    for (y, w) in data.labels.iter().zip(&data.weights) {
        if !(0.0..=1.0).contains(y) {
            return Err(Error::InvalidArgument(format!(
                "weighted mean labels must lie in [0, 1], got {y}"
            )));
        }
        acc += y * w;
    }
    Ok(100.0 * acc / total)
}

// ---------------------------------------------------------------------------
// hyperparameter selection

/// One cross-validation measurement for the model summary.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CvEntry {
    pub setting: String,
    pub loss: f64,
}

fn weighted_holdout_loss(model: &PredictorModel, data: &WeightedDataset) -> f64 {
    let preds = model.predict(data.features.view());
    let total: f64 = data.weights.iter().sum();
    if total <= 0.0 {
        return f64::INFINITY;
    }
    let mut loss = 0.0;
    for i in 0..data.len() {
        let (y, w) = (data.labels[i], data.weights[i]);
        loss += match model.task {
            Task::Classification => {
                let p = preds[i].clamp(1e-12, 1.0 - 1e-12);
                w * (-(y * p.ln() + (1.0 - y) * (1.0 - p).ln()))
            }
            Task::Regression => {
                let r = y - preds[i];
                w * r * r
            }
        };
    }
    loss / total
}

/// Weighted k-fold cross-validation loss of a fitting procedure. Folds are
/// seeded; a failed fold fit poisons the candidate with infinite loss.
pub fn weighted_cv_loss<F>(data: &WeightedDataset, folds: usize, seed: u64, fit: F) -> f64
where
    F: Fn(&WeightedDataset) -> Result<PredictorModel>,
{
    let n = data.len();
    let folds = folds.clamp(2, n.max(2));
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(stage_seed(seed, "cv-folds"));
    order.shuffle(&mut rng);
    let mut assignment = vec![0usize; n];
    for (pos, &i) in order.iter().enumerate() {
        assignment[i] = pos % folds;
    }
    let mut total = 0.0;
    let mut used = 0usize;
    for k in 0..folds {
        let train: Vec<usize> = (0..n).filter(|i| assignment[*i] != k).collect();
        let test: Vec<usize> = (0..n).filter(|i| assignment[*i] == k).collect();
        if train.is_empty() || test.is_empty() {
            continue;
        }
        let model = match fit(&data.subset(&train)) {
            Ok(m) => m,
            Err(_) => return f64::INFINITY,
        };
        total += weighted_holdout_loss(&model, &data.subset(&test));
        used += 1;
    }
    if used == 0 {
        f64::INFINITY
    } else {
        total / used as f64
    }
}

/// Picks (alpha_mix, penalty) for the elastic net by weighted CV.
pub fn tune_en(
    data: &WeightedDataset,
    task: Task,
    alpha_grid: &[f64],
    penalty_grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<(f64, f64, Vec<CvEntry>)> {
    let mut table = Vec::new();
    let mut best: Option<(f64, f64, f64)> = None;
    for &alpha_mix in alpha_grid {
        for &penalty in penalty_grid {
            let loss = weighted_cv_loss(data, folds, seed, |d| match task {
                Task::Classification => fit_en_logistic(d, alpha_mix, penalty),
                Task::Regression => fit_en_linear(d, alpha_mix, penalty),
            });
            table.push(CvEntry {
                setting: format!("alpha_mix={alpha_mix},penalty={penalty}"),
                loss,
            });
            if best.map_or(true, |(_, _, b)| loss < b) {
                best = Some((alpha_mix, penalty, loss));
            }
        }
    }
    let (alpha_mix, penalty, loss) = best.ok_or(Error::AllCandidatesFailed)?;
    if !loss.is_finite() {
        return Err(Error::DegenerateFit(
            "every elastic-net candidate failed cross-validation".into(),
        ));
    }
    Ok((alpha_mix, penalty, table))
}

/// Picks the tree depth for the forest by weighted CV. A single-candidate
/// grid skips the fold work.
pub fn tune_forest(
    data: &WeightedDataset,
    task: Task,
    depth_grid: &[usize],
    base: &ForestConfig,
    folds: usize,
    seed: u64,
) -> Result<(ForestConfig, Vec<CvEntry>)> {
    if depth_grid.is_empty() {
        return Err(Error::InvalidArgument("empty depth grid".into()));
    }
    let mut table = Vec::new();
    let mut best: Option<(usize, f64)> = None;
    for &depth in depth_grid {
        let cfg = ForestConfig {
            max_depth: depth,
            ..base.clone()
        };
        let loss = if depth_grid.len() == 1 {
            0.0
        } else {
            weighted_cv_loss(data, folds, seed, |d| fit_forest(d, task, &cfg))
        };
        table.push(CvEntry {
            setting: format!("max_depth={depth}"),
            loss,
        });
        if best.map_or(true, |(_, b)| loss < b) {
            best = Some((depth, loss));
        }
    }
    let (depth, _) = best.expect("non-empty grid");
    Ok((
        ForestConfig {
            max_depth: depth,
            ..base.clone()
        },
        table,
    ))
}

/// Picks the tree depth for the booster by weighted CV.
pub fn tune_gboost(
    data: &WeightedDataset,
    task: Task,
    depth_grid: &[usize],
    base: &GboostConfig,
    folds: usize,
    seed: u64,
) -> Result<(GboostConfig, Vec<CvEntry>)> {
    if depth_grid.is_empty() {
        return Err(Error::InvalidArgument("empty depth grid".into()));
    }
    let mut table = Vec::new();
    let mut best: Option<(usize, f64)> = None;
    for &depth in depth_grid {
        let cfg = GboostConfig {
            max_depth: depth,
            ..base.clone()
        };
        let loss = if depth_grid.len() == 1 {
            0.0
        } else {
            weighted_cv_loss(data, folds, seed, |d| fit_gboost(d, task, &cfg))
        };
        table.push(CvEntry {
            setting: format!("max_depth={depth}"),
            loss,
        });
        if best.map_or(true, |(_, b)| loss < b) {
            best = Some((depth, loss));
        }
    }
    let (depth, _) = best.expect("non-empty grid");
    Ok((
        GboostConfig {
            max_depth: depth,
            ..base.clone()
        },
        table,
    ))
}

/// JSON document describing a fitted model, per the reporting contract.
pub fn model_summary(model: &PredictorModel, cv_table: &[CvEntry]) -> serde_json::Value {
    serde_json::json!({
        "family": model.family(),
        "task": match model.task {
            Task::Classification => "classification",
            Task::Regression => "regression",
        },
        "residual_sd": model.residual_sd,
        "cv_table": cv_table,
        "model": serde_json::to_value(&model.kind).unwrap_or(serde_json::Value::Null),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn weighted_mean_label_examples() {
        let uniform = WeightedDataset::new(
            Array2::zeros((4, 1)),
            array![1.0, 0.0, 1.0, 0.0],
            vec![1.0; 4],
        )
        .unwrap();
        assert_abs_diff_eq!(weighted_mean_label(&uniform).unwrap(), 50.0, epsilon = 1e-12);

        let point_mass = WeightedDataset::new(
            Array2::zeros((3, 1)),
            array![1.0, 0.0, 0.0],
            vec![5.0, 0.0, 0.0],
        )
        .unwrap();
        assert_abs_diff_eq!(
            weighted_mean_label(&point_mass).unwrap(),
            100.0,
            epsilon = 1e-12
        );

        let zero =
            WeightedDataset::new(Array2::zeros((2, 1)), array![1.0, 0.0], vec![0.0, 0.0]).unwrap();
        assert!(weighted_mean_label(&zero).is_err());
    }

    #[test]
    fn weight_scaling_leaves_fits_unchanged() {
        let x = Array2::from_shape_fn((120, 2), |(i, j)| ((i * 7 + j * 3) % 13) as f64 / 6.0);
        let y = Array1::from_shape_fn(120, |i| if (i * 5) % 13 > 6 { 1.0 } else { 0.0 });
        let w: Vec<f64> = (0..120).map(|i| 1.0 + (i % 5) as f64 * 0.5).collect();
        for c in [0.1, 7.3] {
            let base = WeightedDataset::new(x.clone(), y.clone(), w.clone()).unwrap();
            let scaled =
                WeightedDataset::new(x.clone(), y.clone(), w.iter().map(|v| v * c).collect())
                    .unwrap();
            let a = fit_en_logistic(&base, 0.4, 1e-3).unwrap();
            let b = fit_en_logistic(&scaled, 0.4, 1e-3).unwrap();
            let (ModelKind::EnLogistic(la), ModelKind::EnLogistic(lb)) = (&a.kind, &b.kind) else {
                panic!()
            };
            for (p, q) in la.coefficients.iter().zip(&lb.coefficients) {
                assert_abs_diff_eq!(p, q, epsilon = 1e-9);
            }
            let cfg = GboostConfig {
                n_rounds: 20,
                ..GboostConfig::default()
            };
            let ga = fit_gboost(&base, Task::Classification, &cfg).unwrap();
            let gb = fit_gboost(&scaled, Task::Classification, &cfg).unwrap();
            let pa = ga.predict(x.view());
            let pb = gb.predict(x.view());
            for (p, q) in pa.iter().zip(pb.iter()) {
                assert_abs_diff_eq!(p, q, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn tuner_prefers_the_better_penalty() {
        // strong signal: heavy shrinkage must lose to light shrinkage
        let x = Array2::from_shape_fn((200, 1), |(i, _)| (i as f64 / 100.0) - 1.0);
        let y = Array1::from_shape_fn(200, |i| {
            let v = (i as f64 / 100.0) - 1.0;
            if v > 0.0 {
                1.0
            } else {
                0.0
            }
        });
        let data = WeightedDataset::new(x, y, vec![1.0; 200]).unwrap();
        let (_, penalty, table) =
            tune_en(&data, Task::Classification, &[0.5], &[1e-3, 1e3], 5, 0).unwrap();
        assert_eq!(penalty, 1e-3);
        assert_eq!(table.len(), 2);
    }

    use ndarray::Array2;
}
