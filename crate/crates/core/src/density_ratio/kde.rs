//! Separate-KDE density-ratio baseline.
//!
//! Estimates numerator and denominator densities with product Gaussian
//! kernels and divides them. Dividing two estimates amplifies error in high
//! dimension, so this is restricted to d <= 3 and used as a test oracle for
//! the direct estimator, never as a pipeline method.

use super::{Normalization, WeightVector};
use crate::error::{Error, Result};
use crate::exec;
use ndarray::ArrayView2;

const DENSITY_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug)]
pub enum BandwidthRule {
    /// Scott's rule per dimension: sd_j * n^(-1/(d+4)).
    Scott,
    /// One bandwidth for every dimension.
    Fixed(f64),
}

fn bandwidths(data: ArrayView2<'_, f64>, rule: BandwidthRule) -> Vec<f64> {
    let (n, d) = (data.nrows() as f64, data.ncols());
    match rule {
        BandwidthRule::Fixed(h) => vec![h; d],
        BandwidthRule::Scott => {
            let factor = n.powf(-1.0 / (d as f64 + 4.0));
            (0..d)
                .map(|j| {
                    let col = data.column(j);
                    let mean = col.sum() / n;
                    let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                    let sd = var.sqrt();
                    if sd > 0.0 {
                        sd * factor
                    } else {
                        1.0
                    }
                })
                .collect()
        }
    }
}

fn kde_at(points: ArrayView2<'_, f64>, data: ArrayView2<'_, f64>, bw: &[f64]) -> Vec<f64> {
    let norm: f64 = bw
        .iter()
        .map(|h| 1.0 / (h * (2.0 * std::f64::consts::PI).sqrt()))
        .product();
    let n = data.nrows() as f64;
    exec::map_indices(points.nrows(), |i| {
        let x = points.row(i);
        let mut sum = 0.0;
        for row in data.rows() {
            let mut e = 0.0;
            for (j, h) in bw.iter().enumerate() {
                let z = (x[j] - row[j]) / h;
                e += z * z;
            }
            sum += (-0.5 * e).exp();
        }
        norm * sum / n
    })
}

/// Ratio of KDE density estimates at the denominator points, denominator
/// floored at 1e-12.
pub fn kde_ratio_baseline(
    denom: ArrayView2<'_, f64>,
    numer: ArrayView2<'_, f64>,
    rule: BandwidthRule,
) -> Result<WeightVector> {
    if denom.nrows() == 0 || numer.nrows() == 0 {
        return Err(Error::InvalidArgument("empty sample".into()));
    }
    if denom.ncols() != numer.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "denominator has {} columns, numerator has {}",
            denom.ncols(),
            numer.ncols()
        )));
    }
    if denom.ncols() > 3 {
        return Err(Error::InvalidArgument(format!(
            "KDE ratio baseline is limited to d <= 3, got d = {}",
            denom.ncols()
        )));
    }
    let bw_denom = bandwidths(denom, rule);
    let bw_numer = bandwidths(numer, rule);
    let p_denom = kde_at(denom, denom, &bw_denom);
    let p_numer = kde_at(denom, numer, &bw_numer);
    let weights = p_numer
        .iter()
        .zip(&p_denom)
        .map(|(pn, pd)| pn / pd.max(DENSITY_FLOOR))
        .collect();
    Ok(WeightVector {
        weights,
        normalization: Normalization::Raw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn identical_samples_have_near_unit_weights() {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let data = Array2::from_shape_fn((500, 1), |_| normal.sample(&mut rng));
        let w = kde_ratio_baseline(data.view(), data.view(), BandwidthRule::Scott).unwrap();
        let mean = w.mean();
        assert!((mean - 1.0).abs() < 0.15, "mean weight {mean}");
    }

    #[test]
    fn shifted_numerator_gives_monotone_weights() {
        // numerator mass on the left, denominator on the right: the ratio
        // must decrease in x
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let left = Normal::new(-1.0, 0.7).unwrap();
        let right = Normal::new(1.0, 0.7).unwrap();
        let numer = Array2::from_shape_fn((400, 1), |_| left.sample(&mut rng));
        let denom = Array2::from_shape_fn((400, 1), |_| right.sample(&mut rng));
        let w = kde_ratio_baseline(denom.view(), numer.view(), BandwidthRule::Scott).unwrap();
        // Spearman rank correlation between x and weight
        let xs: Vec<f64> = denom.column(0).to_vec();
        let rank = |v: &[f64]| -> Vec<f64> {
            let mut idx: Vec<usize> = (0..v.len()).collect();
            idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
            let mut r = vec![0.0; v.len()];
            for (pos, &i) in idx.iter().enumerate() {
                r[i] = pos as f64;
            }
            r
        };
        let rx = rank(&xs);
        let rw = rank(&w.weights);
        let n = rx.len() as f64;
        let mx = (n - 1.0) / 2.0;
        let mut num = 0.0;
        let mut dx = 0.0;
        let mut dw = 0.0;
        for i in 0..rx.len() {
            num += (rx[i] - mx) * (rw[i] - mx);
            dx += (rx[i] - mx).powi(2);
            dw += (rw[i] - mx).powi(2);
        }
        let spearman = num / (dx.sqrt() * dw.sqrt());
        assert!(spearman < -0.8, "expected strongly negative rank correlation, got {spearman}");
    }

    #[test]
    fn high_dimension_is_rejected() {
        let data = Array2::<f64>::zeros((10, 4));
        assert!(kde_ratio_baseline(data.view(), data.view(), BandwidthRule::Scott).is_err());
    }
}
