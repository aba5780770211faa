//! Weighted random forest.
//!
//! Each tree draws a bootstrap of row indices with probability proportional
//! to the sample weights; the drawn multiset is then grown with unit
//! weights, so a doubled weight and a duplicated row agree in expectation.
//! Trees build in parallel on derived per-tree seeds, which keeps the
//! ensemble identical no matter how many threads run.

use super::tree::{grow_tree, SplitCriterion, Tree, TreeConfig};
use super::{ModelKind, PredictorModel, Task, WeightedDataset};
use crate::error::{Error, Result};
use crate::exec;
use crate::stage_seed;
use ndarray::ArrayView2;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Minimum bootstrap multiplicity per leaf side.
    pub min_leaf_weight: f64,
    /// Features tried per node; default is sqrt(d).
    pub mtry: Option<usize>,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_depth: 12,
            min_leaf_weight: 3.0,
            mtry: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ForestModel {
    pub config: ForestConfig,
    pub(crate) trees: Vec<Tree>,
}

impl ForestModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict_row(row)).sum();
        sum / self.trees.len() as f64
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }
}

pub fn fit_forest(data: &WeightedDataset, task: Task, cfg: &ForestConfig) -> Result<PredictorModel> {
    let n = data.features.nrows();
    if n == 0 {
        return Err(Error::InvalidArgument("empty dataset".into()));
    }
    if cfg.n_trees == 0 {
        return Err(Error::InvalidArgument("need at least one tree".into()));
    }
    let total_weight: f64 = data.weights.iter().sum();
    if !(total_weight > 0.0) || !total_weight.is_finite() {
        return Err(Error::DegenerateFit("all sample weights are zero".into()));
    }
    if total_weight < cfg.min_leaf_weight {
        return Err(Error::InvalidArgument(format!(
            "total weight {total_weight} is below min_leaf_weight {}",
            cfg.min_leaf_weight
        )));
    }

    let d = data.features.ncols();
    let mtry = cfg.mtry.unwrap_or_else(|| match task {
        Task::Classification => (d as f64).sqrt().ceil() as usize,
        Task::Regression => (d as f64 / 3.0).ceil() as usize,
    });
    let tree_cfg = TreeConfig {
        max_depth: cfg.max_depth,
        min_leaf_weight: cfg.min_leaf_weight,
        mtry: Some(mtry.clamp(1, d)),
        criterion: match task {
            Task::Classification => SplitCriterion::Gini,
            Task::Regression => SplitCriterion::Variance,
        },
    };
    let sampler = rand::distr::weighted::WeightedIndex::new(&data.weights)
        .map_err(|e| Error::InvalidArgument(format!("bad weights: {e}")))?;
    let x = data.features.view();
    let y: Vec<f64> = data.labels.to_vec();
    let unit = vec![1.0; n];

    let trees: Vec<Tree> = exec::map_indices(cfg.n_trees, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(stage_seed(cfg.seed, &format!("forest-tree-{t}")));
        let rows: Vec<u32> = (0..n).map(|_| sampler.sample(&mut rng) as u32).collect();
        grow_tree(x, &y, &unit, rows, &tree_cfg, &mut rng)
    });

    let residual_sd = match task {
        Task::Regression => {
            let model = ForestModel {
                config: cfg.clone(),
                trees: trees.clone(),
            };
            Some(weighted_residual_sd(&model, x, &y, &data.weights, total_weight))
        }
        Task::Classification => None,
    };

    Ok(PredictorModel {
        kind: ModelKind::Forest(ForestModel {
            config: cfg.clone(),
            trees,
        }),
        task,
        residual_sd,
    })
}

fn weighted_residual_sd(
    model: &ForestModel,
    x: ArrayView2<'_, f64>,
    y: &[f64],
    w: &[f64],
    total_weight: f64,
) -> f64 {
    let mut sse = 0.0;
    let mut row = Vec::with_capacity(x.ncols());
    for i in 0..x.nrows() {
        row.clear();
        row.extend(x.row(i).iter().copied());
        let r = y[i] - model.predict_row(&row);
        sse += w[i] * r * r;
    }
    (sse / total_weight).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{Array1, Array2};

    fn dataset(x: Array2<f64>, y: Vec<f64>, w: Vec<f64>) -> WeightedDataset {
        WeightedDataset::new(x, Array1::from(y), w).unwrap()
    }

    #[test]
    fn single_label_data_predicts_that_label_everywhere() {
        let x = Array2::from_shape_fn((20, 2), |(i, j)| (i + j) as f64);
        let data = dataset(x, vec![1.0; 20], vec![1.0; 20]);
        let model = fit_forest(&data, Task::Classification, &ForestConfig::default()).unwrap();
        let probe = Array2::from_shape_fn((5, 2), |(i, j)| (i * 7 + j) as f64);
        for s in model.predict(probe.view()).iter() {
            assert_eq!(*s, 1.0);
        }
    }

    #[test]
    fn perfect_binary_feature_reaches_full_accuracy_at_depth_one() {
        let x = Array2::from_shape_fn((40, 1), |(i, _)| (i % 2) as f64);
        let y: Vec<f64> = (0..40).map(|i| (i % 2) as f64).collect();
        let data = dataset(x.clone(), y.clone(), vec![1.0; 40]);
        let cfg = ForestConfig {
            n_trees: 30,
            max_depth: 1,
            min_leaf_weight: 1.0,
            mtry: None,
            seed: 3,
        };
        let model = fit_forest(&data, Task::Classification, &cfg).unwrap();
        let scores = model.predict(x.view());
        let correct = scores
            .iter()
            .zip(&y)
            .filter(|(s, y)| (**s > 0.5) == (**y > 0.5))
            .count();
        assert_eq!(correct, 40);
    }

    #[test]
    fn zero_weights_are_rejected() {
        let x = Array2::zeros((5, 1));
        let data = dataset(x, vec![0.0, 1.0, 0.0, 1.0, 0.0], vec![0.0; 5]);
        assert!(matches!(
            fit_forest(&data, Task::Classification, &ForestConfig::default()),
            Err(Error::DegenerateFit(_))
        ));
    }

    #[test]
    fn same_seed_rebuilds_the_same_forest() {
        let x = Array2::from_shape_fn((60, 3), |(i, j)| ((i * 13 + j * 7) % 11) as f64);
        let y: Vec<f64> = (0..60).map(|i| ((i % 3) as f64) / 2.0).collect();
        let w: Vec<f64> = (0..60).map(|i| 1.0 + (i % 4) as f64 * 0.5).collect();
        let cfg = ForestConfig {
            n_trees: 12,
            seed: 99,
            ..ForestConfig::default()
        };
        let a = fit_forest(&dataset(x.clone(), y.clone(), w.clone()), Task::Regression, &cfg).unwrap();
        let b = fit_forest(&dataset(x.clone(), y, w), Task::Regression, &cfg).unwrap();
        let pa = a.predict(x.view());
        let pb = b.predict(x.view());
        assert_eq!(pa, pb);
    }
}
