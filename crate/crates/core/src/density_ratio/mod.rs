//! Direct density-ratio estimation.
//!
//! Fits w(x) = p_T(x)/p_S(x) as a nonnegative linear combination of Gaussian
//! kernels by unconstrained least-squares importance fitting: the ridge
//! system (H + lambda I) a = h is solved analytically and negative
//! coefficients are rounded up to zero. Kernel width and regularization are
//! chosen by k-fold cross-validation of the empirical squared-error score.
//!
//! A separate-KDE ratio baseline lives in [`kde_ratio_baseline`]; it is kept
//! as an independent low-dimensional oracle, not a pipeline method.

mod kde;

pub use kde::{kde_ratio_baseline, BandwidthRule};

use crate::error::{Error, Result};
use crate::exec;
use crate::linalg;
use crate::stage_seed;
use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Gaussian kernel basis: phi_l(x) = exp(-||x - c_l||^2 / (2 sigma^2)).
#[derive(Clone, Debug)]
pub struct GaussianBasis {
    pub centers: Array2<f64>,
    pub sigma: f64,
}

impl GaussianBasis {
    pub fn new(centers: Array2<f64>, sigma: f64) -> Result<Self> {
        if centers.nrows() == 0 {
            return Err(Error::InvalidArgument("basis needs at least one center".into()));
        }
        if !(sigma > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "kernel width must be positive, got {sigma}"
            )));
        }
        Ok(GaussianBasis { centers, sigma })
    }

    pub fn size(&self) -> usize {
        self.centers.nrows()
    }

    pub fn dim(&self) -> usize {
        self.centers.ncols()
    }

    /// Kernel feature matrix, one row per sample, one column per center.
    pub fn features(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "points have dimension {}, basis has {}",
                x.ncols(),
                self.dim()
            )));
        }
        let x_sq: Array1<f64> = x.rows().into_iter().map(|r| r.dot(&r)).collect();
        let c_sq: Array1<f64> = self.centers.rows().into_iter().map(|r| r.dot(&r)).collect();
        let mut cross = x.dot(&self.centers.t());
        let inv = 1.0 / (2.0 * self.sigma * self.sigma);
        for ((i, j), v) in cross.indexed_iter_mut() {
            let d2 = (x_sq[i] + c_sq[j] - 2.0 * *v).max(0.0);
            *v = (-d2 * inv).exp();
        }
        Ok(cross)
    }
}

/// Per-row importance weights for the denominator sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    Raw,
    /// Rescaled to mean one, so the weights sum to the row count.
    SelfNormalized,
}

#[derive(Clone, Debug)]
pub struct WeightVector {
    pub weights: Vec<f64>,
    pub normalization: Normalization,
}

impl WeightVector {
    pub fn mean(&self) -> f64 {
        linalg::mean(&self.weights)
    }
}

/// One cross-validation cell: the empirical score of the model fitted on the
/// other folds, evaluated on fold `fold`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CvRecord {
    pub sigma: f64,
    pub lambda: f64,
    pub fold: usize,
    pub j_hat: f64,
}

#[derive(Clone, Debug)]
pub struct UlsifModel {
    pub basis: GaussianBasis,
    pub alpha: Array1<f64>,
    pub lambda: f64,
    pub cv_report: Vec<CvRecord>,
    pub selected: (f64, f64),
}

impl UlsifModel {
    /// Predicted ratios at `x`; never negative.
    pub fn predict(&self, x: ArrayView2<'_, f64>, normalization: Normalization) -> Result<WeightVector> {
        let phi = self.basis.features(x)?;
        let mut weights: Vec<f64> = phi.dot(&self.alpha).to_vec();
        for w in &mut weights {
            if !w.is_finite() {
                return Err(Error::Numerical("non-finite predicted ratio".into()));
            }
            *w = w.max(0.0);
        }
        if normalization == Normalization::SelfNormalized {
            let m = linalg::mean(&weights);
            if !(m > 0.0) {
                return Err(Error::DegenerateFit(
                    "all predicted ratios are zero; cannot self-normalize".into(),
                ));
            }
            for w in &mut weights {
                *w /= m;
            }
        }
        Ok(WeightVector {
            weights,
            normalization,
        })
    }

    /// Mean cross-validation score per grid point, in grid order.
    pub fn cv_means(&self) -> Vec<(f64, f64, f64)> {
        let mut order: Vec<(f64, f64)> = Vec::new();
        let mut sums: std::collections::HashMap<(u64, u64), (f64, usize)> = Default::default();
        for r in &self.cv_report {
            let key = (r.sigma.to_bits(), r.lambda.to_bits());
            if !sums.contains_key(&key) {
                order.push((r.sigma, r.lambda));
            }
            let e = sums.entry(key).or_insert((0.0, 0));
            e.0 += r.j_hat;
            e.1 += 1;
        }
        order
            .into_iter()
            .map(|(s, l)| {
                let (sum, n) = sums[&(s.to_bits(), l.to_bits())];
                (s, l, sum / n as f64)
            })
            .collect()
    }
}

/// Grid and fold configuration for [`fit_ulsif`].
#[derive(Clone, Debug)]
pub struct UlsifConfig {
    /// Kernel centers are at most this many points drawn from the numerator
    /// sample, keeping the solve O(b^3) regardless of n.
    pub basis_size: usize,
    /// Kernel width candidates as multiples of the median pairwise distance
    /// of the pooled sample.
    pub sigma_factors: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    pub folds: usize,
}

impl Default for UlsifConfig {
    fn default() -> Self {
        UlsifConfig {
            basis_size: 100,
            sigma_factors: vec![0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0],
            lambda_grid: vec![1e-3, 1e-2, 1e-1, 1.0, 10.0],
            folds: 5,
        }
    }
}

/// Empirical squared-error score: J(a) = a' H a / 2 - h' a, where H averages
/// phi phi' over the denominator sample and h averages phi over the
/// numerator sample.
pub fn empirical_j(
    alpha: &Array1<f64>,
    basis: &GaussianBasis,
    denom: ArrayView2<'_, f64>,
    numer: ArrayView2<'_, f64>,
) -> Result<f64> {
    if alpha.len() != basis.size() {
        return Err(Error::DimensionMismatch(format!(
            "alpha has {} entries, basis has {} centers",
            alpha.len(),
            basis.size()
        )));
    }
    let (gram, mean_vec) = kernel_moments(basis, denom, numer)?;
    Ok(j_value(alpha, &gram, &mean_vec))
}

fn j_value(alpha: &Array1<f64>, gram: &Array2<f64>, mean_vec: &Array1<f64>) -> f64 {
    0.5 * alpha.dot(&gram.dot(alpha)) - mean_vec.dot(alpha)
}

fn kernel_moments(
    basis: &GaussianBasis,
    denom: ArrayView2<'_, f64>,
    numer: ArrayView2<'_, f64>,
) -> Result<(Array2<f64>, Array1<f64>)> {
    if denom.nrows() == 0 || numer.nrows() == 0 {
        return Err(Error::InvalidArgument("empty sample".into()));
    }
    let phi_d = basis.features(denom)?;
    let phi_n = basis.features(numer)?;
    let gram = phi_d.t().dot(&phi_d) / denom.nrows() as f64;
    let mean_vec = phi_n.sum_axis(Axis(0)) / numer.nrows() as f64;
    Ok((gram, mean_vec))
}

/// Analytic ridge solve with nonnegative rounding. The pre-rounding solution
/// is also returned; its stationarity is what certifies the solve.
pub(crate) fn solve_regularized(
    gram: &Array2<f64>,
    mean_vec: &Array1<f64>,
    lambda: f64,
) -> Result<(Array1<f64>, Array1<f64>)> {
    if lambda < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "regularization must be nonnegative, got {lambda}"
        )));
    }
    let b = gram.nrows();
    let mut system = gram.clone();
    for i in 0..b {
        system[[i, i]] += lambda;
    }
    let unrounded = match linalg::solve_spd(&system, mean_vec) {
        Some(a) => a,
        None => {
            return Err(if lambda == 0.0 {
                Error::SingularSystem
            } else {
                Error::Numerical("kernel system is not positive definite".into())
            })
        }
    };
    let residual = &system.dot(&unrounded) - mean_vec;
    let max_resid = residual.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    if !(max_resid < 1e-8) {
        return Err(Error::Numerical(format!(
            "ridge solve residual {max_resid:e} exceeds 1e-8"
        )));
    }
    let rounded = unrounded.mapv(|a| a.max(0.0));
    Ok((rounded, unrounded))
}

/// Solves the ridge system for a fixed basis and returns the rounded
/// coefficients.
pub fn solve_ulsif(
    basis: &GaussianBasis,
    denom: ArrayView2<'_, f64>,
    numer: ArrayView2<'_, f64>,
    lambda: f64,
) -> Result<Array1<f64>> {
    let (gram, mean_vec) = kernel_moments(basis, denom, numer)?;
    let (alpha, _) = solve_regularized(&gram, &mean_vec, lambda)?;
    Ok(alpha)
}

/// Median pairwise Euclidean distance of the pooled rows.
fn median_pairwise_distance(denom: ArrayView2<'_, f64>, numer: ArrayView2<'_, f64>) -> f64 {
    let pooled: Vec<Vec<f64>> = denom
        .rows()
        .into_iter()
        .chain(numer.rows())
        .map(|r| r.to_vec())
        .collect();
    let n = pooled.len();
    let mut chunks = exec::map_indices(n, |i| {
        let mut out = Vec::with_capacity(n - i - 1);
        for j in (i + 1)..n {
            let d2: f64 = pooled[i]
                .iter()
                .zip(&pooled[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            out.push(d2);
        }
        out
    });
    let mut d2: Vec<f64> = chunks.drain(..).flatten().collect();
    if d2.is_empty() {
        return 0.0;
    }
    linalg::median(&mut d2).sqrt()
}

fn fold_assignment(n: usize, folds: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let mut fold = vec![0usize; n];
    for (pos, &i) in idx.iter().enumerate() {
        fold[i] = pos % folds;
    }
    fold
}

/// Fits a density-ratio model: seeded center choice, cross-validated
/// (sigma, lambda), final refit on all data.
pub fn fit_ulsif(
    denom: ArrayView2<'_, f64>,
    numer: ArrayView2<'_, f64>,
    cfg: &UlsifConfig,
    seed: u64,
) -> Result<UlsifModel> {
    let n = denom.nrows();
    let n_num = numer.nrows();
    if n < 2 || n_num < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 rows on each side, got {n} and {n_num}"
        )));
    }
    if denom.ncols() != numer.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "denominator has {} columns, numerator has {}",
            denom.ncols(),
            numer.ncols()
        )));
    }

    let median_dist = median_pairwise_distance(denom, numer);
    if !(median_dist > 0.0) {
        return Err(Error::DegenerateGeometry(
            "median pairwise distance is zero; all points coincide".into(),
        ));
    }

    // centers: without-replacement draw from the numerator (test) sample
    let mut center_rng = ChaCha8Rng::seed_from_u64(stage_seed(seed, "ulsif-centers"));
    let b = cfg.basis_size.min(n_num);
    let mut order: Vec<usize> = (0..n_num).collect();
    order.shuffle(&mut center_rng);
    let mut chosen: Vec<usize> = order.into_iter().take(b).collect();
    chosen.sort_unstable();
    let mut centers = Array2::<f64>::zeros((b, numer.ncols()));
    for (k, &i) in chosen.iter().enumerate() {
        centers.row_mut(k).assign(&numer.row(i));
    }

    let folds = cfg.folds.clamp(2, n.min(n_num));
    let mut fold_rng = ChaCha8Rng::seed_from_u64(stage_seed(seed, "ulsif-folds"));
    let fold_d = fold_assignment(n, folds, &mut fold_rng);
    let fold_n = fold_assignment(n_num, folds, &mut fold_rng);

    // one task per kernel width; each sweeps the lambda grid over all folds
    let per_sigma = exec::map_indices(cfg.sigma_factors.len(), |si| -> Result<Vec<CvRecord>> {
        let sigma = cfg.sigma_factors[si] * median_dist;
        let basis = GaussianBasis::new(centers.clone(), sigma)?;
        let phi_d = basis.features(denom)?;
        let phi_n = basis.features(numer)?;

        // per-fold partial moments
        let mut gram_fold = vec![Array2::<f64>::zeros((b, b)); folds];
        let mut count_d = vec![0u32; folds];
        for (i, row) in phi_d.rows().into_iter().enumerate() {
            let k = fold_d[i];
            count_d[k] += 1;
            let g = &mut gram_fold[k];
            for p in 0..b {
                let rp = row[p];
                if rp == 0.0 {
                    continue;
                }
                for q in p..b {
                    g[[p, q]] += rp * row[q];
                }
            }
        }
        for g in &mut gram_fold {
            for p in 0..b {
                for q in (p + 1)..b {
                    g[[q, p]] = g[[p, q]];
                }
            }
        }
        let mut mean_fold = vec![Array1::<f64>::zeros(b); folds];
        let mut count_n = vec![0u32; folds];
        for (j, row) in phi_n.rows().into_iter().enumerate() {
            let k = fold_n[j];
            count_n[k] += 1;
            mean_fold[k] += &row;
        }
        let gram_total = gram_fold.iter().fold(Array2::<f64>::zeros((b, b)), |a, g| a + g);
        let mean_total = mean_fold.iter().fold(Array1::<f64>::zeros(b), |a, g| a + g);

        let mut records = Vec::with_capacity(cfg.lambda_grid.len() * folds);
        for &lambda in &cfg.lambda_grid {
            for k in 0..folds {
                let n_tr = n as f64 - f64::from(count_d[k]);
                let m_tr = n_num as f64 - f64::from(count_n[k]);
                if count_d[k] == 0 || count_n[k] == 0 || n_tr == 0.0 || m_tr == 0.0 {
                    continue;
                }
                let gram_tr = (&gram_total - &gram_fold[k]) / n_tr;
                let mean_tr = (&mean_total - &mean_fold[k]) / m_tr;
                let (alpha, _) = solve_regularized(&gram_tr, &mean_tr, lambda)?;
                let gram_te = &gram_fold[k] / f64::from(count_d[k]);
                let mean_te = &mean_fold[k] / f64::from(count_n[k]);
                records.push(CvRecord {
                    sigma,
                    lambda,
                    fold: k,
                    j_hat: j_value(&alpha, &gram_te, &mean_te),
                });
            }
        }
        Ok(records)
    });

    let mut cv_report = Vec::new();
    for r in per_sigma {
        cv_report.extend(r?);
    }

    // pick the grid point with the smallest mean held-out score
    let mut best: Option<(f64, f64, f64)> = None;
    {
        let mut means: Vec<(f64, f64, f64)> = Vec::new();
        let mut acc: std::collections::HashMap<(u64, u64), (f64, usize)> = Default::default();
        let mut order: Vec<(f64, f64)> = Vec::new();
        for r in &cv_report {
            let key = (r.sigma.to_bits(), r.lambda.to_bits());
            if !acc.contains_key(&key) {
                order.push((r.sigma, r.lambda));
            }
            let e = acc.entry(key).or_insert((0.0, 0));
            e.0 += r.j_hat;
            e.1 += 1;
        }
        for (s, l) in order {
            let (sum, cnt) = acc[&(s.to_bits(), l.to_bits())];
            means.push((s, l, sum / cnt as f64));
        }
        for (s, l, j) in means {
            if best.map_or(true, |(_, _, bj)| j < bj) {
                best = Some((s, l, j));
            }
        }
    }
    let (sigma, lambda, _) = best.ok_or(Error::AllCandidatesFailed)?;

    let basis = GaussianBasis::new(centers, sigma)?;
    let (gram, mean_vec) = kernel_moments(&basis, denom, numer)?;
    let (alpha, _) = solve_regularized(&gram, &mean_vec, lambda)?;
    Ok(UlsifModel {
        basis,
        alpha,
        lambda,
        cv_report,
        selected: (sigma, lambda),
    })
}

/// Diagnostic dump of the cross-validation grid.
pub fn write_cv_report_csv(model: &UlsifModel, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "sigma,lambda,fold,J_hat")?;
    for r in &model.cv_report {
        writeln!(out, "{},{},{},{}", r.sigma, r.lambda, r.fold, r.j_hat)?;
    }
    Ok(())
}

/// Diagnostic dump of per-row weights.
pub fn write_weights_csv(weights: &WeightVector, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "row_index,weight")?;
    for (i, w) in weights.weights.iter().enumerate() {
        writeln!(out, "{i},{w}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array2};
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn column(values: &[f64]) -> Array2<f64> {
        Array2::from_shape_vec((values.len(), 1), values.to_vec()).unwrap()
    }

    #[test]
    fn empirical_j_is_zero_at_zero_alpha() {
        let basis = GaussianBasis::new(column(&[0.0]), 1.0).unwrap();
        let denom = column(&[0.1, 0.7, -0.3]);
        let numer = column(&[0.2, -0.5]);
        let j = empirical_j(&array![0.0], &basis, denom.view(), numer.view()).unwrap();
        assert_eq!(j, 0.0);
    }

    #[test]
    fn empirical_j_at_constant_kernel_is_minus_half() {
        // all points at the single center: phi is identically 1, so the
        // score is 1/2 - 1 = -0.5 exactly
        let basis = GaussianBasis::new(column(&[2.0]), 1.0).unwrap();
        let denom = column(&[2.0, 2.0, 2.0]);
        let numer = column(&[2.0, 2.0]);
        let j = empirical_j(&array![1.0], &basis, denom.view(), numer.view()).unwrap();
        assert_eq!(j, -0.5);
    }

    #[test]
    fn empirical_j_matches_scalar_arithmetic() {
        // b = 1, two denominator points, one numerator point
        let sigma = 1.3;
        let basis = GaussianBasis::new(column(&[0.0]), sigma).unwrap();
        let denom = column(&[0.4, -1.1]);
        let numer = column(&[0.8]);
        let alpha = 0.7;
        let phi = |x: f64| (-(x * x) / (2.0 * sigma * sigma)).exp();
        let gram = (phi(0.4) * phi(0.4) + phi(-1.1) * phi(-1.1)) / 2.0;
        let mean = phi(0.8);
        let expected = 0.5 * alpha * alpha * gram - alpha * mean;
        let j = empirical_j(&array![alpha], &basis, denom.view(), numer.view()).unwrap();
        assert_abs_diff_eq!(j, expected, epsilon = 1e-15);
    }

    #[test]
    fn huge_regularization_shrinks_alpha_to_zero() {
        let gram = array![[0.8, 0.2], [0.2, 0.9]];
        let mean = array![0.5, 0.4];
        let (alpha, _) = solve_regularized(&gram, &mean, 1e12).unwrap();
        assert!(alpha.iter().all(|a| a.abs() < 1e-6));
    }

    #[test]
    fn scalar_system_solves_exactly() {
        let (alpha, _) = solve_regularized(&array![[2.0]], &array![1.0], 0.0).unwrap();
        assert_abs_diff_eq!(alpha[0], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn negative_coefficient_is_rounded_to_zero() {
        // correlated kernels with a lopsided target force the second
        // unconstrained coefficient negative
        let gram = array![[1.0, 0.9], [0.9, 1.0]];
        let mean = array![1.0, 0.1];
        let (alpha, unrounded) = solve_regularized(&gram, &mean, 0.0).unwrap();
        assert!(unrounded[1] < 0.0, "construction should go negative");
        assert_eq!(alpha[1], 0.0);
        assert!(alpha[0] > 0.0);
    }

    #[test]
    fn singular_system_asks_for_regularization() {
        let gram = array![[1.0, 1.0], [1.0, 1.0]];
        let mean = array![1.0, 1.0];
        let err = solve_regularized(&gram, &mean, 0.0).unwrap_err();
        assert!(matches!(err, Error::SingularSystem));
        assert!(err.to_string().contains("increase lambda"));
    }

    #[test]
    fn unconstrained_solution_is_stationary() {
        // perturbing any coordinate of the pre-rounding solution never
        // decreases the regularized objective
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let denom = column(&(0..60).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect::<Vec<_>>());
        let numer = column(&(0..50).map(|_| rng.random::<f64>() * 2.0).collect::<Vec<_>>());
        let centers = column(&[-0.5, 0.0, 0.4, 1.1]);
        let basis = GaussianBasis::new(centers, 0.7).unwrap();
        let lambda = 0.05;
        let (gram, mean_vec) = kernel_moments(&basis, denom.view(), numer.view()).unwrap();
        let (rounded, unrounded) = solve_regularized(&gram, &mean_vec, lambda).unwrap();
        let objective = |a: &Array1<f64>| {
            j_value(a, &gram, &mean_vec) + 0.5 * lambda * a.dot(a)
        };
        let base = objective(&unrounded);
        let delta = 1e-4;
        for i in 0..unrounded.len() {
            for sign in [-1.0, 1.0] {
                let mut p = unrounded.clone();
                p[i] += sign * delta;
                assert!(
                    objective(&p) >= base,
                    "perturbing coordinate {i} decreased the objective"
                );
            }
        }
        // rounded coefficients stay nonnegative
        assert!(rounded.iter().all(|a| *a >= 0.0));
    }

    #[test]
    fn kernel_geometry_is_scale_equivariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut draw = |n: usize| {
            Array2::from_shape_fn((n, 2), |_| rng.random::<f64>() * 3.0 - 1.5)
        };
        let denom = draw(40);
        let numer = draw(30);
        let centers = draw(8);
        for c in [0.1, 7.3] {
            let base = GaussianBasis::new(centers.clone(), 0.9).unwrap();
            let scaled = GaussianBasis::new(centers.mapv(|v| c * v), 0.9 * c).unwrap();
            let (g1, h1) = kernel_moments(&base, denom.view(), numer.view()).unwrap();
            let (g2, h2) = kernel_moments(
                &scaled,
                denom.mapv(|v| c * v).view(),
                numer.mapv(|v| c * v).view(),
            )
            .unwrap();
            for (a, b) in g1.iter().zip(g2.iter()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-10);
            }
            for (a, b) in h1.iter().zip(h2.iter()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-10);
            }
            let (a1, _) = solve_regularized(&g1, &h1, 0.01).unwrap();
            let (a2, _) = solve_regularized(&g2, &h2, 0.01).unwrap();
            for (a, b) in a1.iter().zip(a2.iter()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn identical_distributions_give_unit_ratios() {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let data = Array2::from_shape_fn((500, 2), |_| normal.sample(&mut rng));
        let model = fit_ulsif(data.view(), data.view(), &UlsifConfig::default(), 5).unwrap();
        let w = model.predict(data.view(), Normalization::Raw).unwrap();
        let mean = w.mean();
        assert!((0.9..=1.1).contains(&mean), "mean ratio {mean} not near 1");
    }

    #[test]
    fn selected_pair_attains_grid_minimum() {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let denom = Array2::from_shape_fn((150, 1), |_| normal.sample(&mut rng));
        let numer = Array2::from_shape_fn((150, 1), |_| normal.sample(&mut rng) + 0.3);
        let model = fit_ulsif(denom.view(), numer.view(), &UlsifConfig::default(), 1).unwrap();
        let means = model.cv_means();
        let min = means
            .iter()
            .map(|(_, _, j)| *j)
            .fold(f64::INFINITY, f64::min);
        let selected_mean = means
            .iter()
            .find(|(s, l, _)| (*s, *l) == model.selected)
            .map(|(_, _, j)| *j)
            .unwrap();
        assert_eq!(selected_mean, min);
    }

    #[test]
    fn coincident_points_are_rejected() {
        let data = Array2::<f64>::zeros((10, 2));
        let err = fit_ulsif(data.view(), data.view(), &UlsifConfig::default(), 0).unwrap_err();
        assert!(matches!(err, Error::DegenerateGeometry(_)));
    }

    #[test]
    fn predict_at_center_with_unit_alpha_is_one() {
        let basis = GaussianBasis::new(column(&[0.7]), 2.0).unwrap();
        let model = UlsifModel {
            basis,
            alpha: array![1.0],
            lambda: 0.1,
            cv_report: vec![],
            selected: (2.0, 0.1),
        };
        let w = model
            .predict(column(&[0.7]).view(), Normalization::Raw)
            .unwrap();
        assert_eq!(w.weights[0], 1.0);
    }

    #[test]
    fn zero_alpha_predicts_zero_weights() {
        let basis = GaussianBasis::new(column(&[0.0]), 1.0).unwrap();
        let model = UlsifModel {
            basis,
            alpha: array![0.0],
            lambda: 0.1,
            cv_report: vec![],
            selected: (1.0, 0.1),
        };
        let w = model
            .predict(column(&[0.3, 0.9]).view(), Normalization::Raw)
            .unwrap();
        assert_eq!(w.weights, vec![0.0, 0.0]);
        assert!(model
            .predict(column(&[0.3]).view(), Normalization::SelfNormalized)
            .is_err());
    }

    #[test]
    fn self_normalized_weights_sum_to_row_count() {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let denom = Array2::from_shape_fn((200, 1), |_| normal.sample(&mut rng));
        let numer = Array2::from_shape_fn((200, 1), |_| normal.sample(&mut rng) + 0.4);
        let model = fit_ulsif(denom.view(), numer.view(), &UlsifConfig::default(), 2).unwrap();
        let w = model
            .predict(denom.view(), Normalization::SelfNormalized)
            .unwrap();
        let total: f64 = w.weights.iter().sum();
        assert_abs_diff_eq!(total, 200.0, epsilon = 1e-9);
    }
}
