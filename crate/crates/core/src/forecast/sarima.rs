//! Seasonal ARIMA with AIC order selection.
//!
//! Counts are differenced (regular then seasonal), demeaned, and the ARMA
//! part is fitted by maximizing the exact Gaussian likelihood, evaluated
//! with a Kalman filter started from the stationary state covariance.
//! Coefficients are optimized through a partial-autocorrelation transform,
//! so every candidate evaluated is stationary and invertible by
//! construction; candidates whose likelihood still fails to evaluate are
//! skipped rather than projected back.

use super::ChannelCountSeries;
use crate::error::{Error, Result};
use crate::exec;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SarimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub sp: usize,
    pub sd: usize,
    pub sq: usize,
    pub season: usize,
}

impl SarimaOrder {
    pub fn new(p: usize, d: usize, q: usize, sp: usize, sd: usize, sq: usize, season: usize) -> Result<Self> {
        if p > 2 || q > 2 || sp > 2 || sq > 2 {
            return Err(Error::InvalidArgument(
                "AR/MA orders are capped at 2".into(),
            ));
        }
        if d > 1 || sd > 1 {
            return Err(Error::InvalidArgument(
                "differencing orders are capped at 1".into(),
            ));
        }
        if season == 0 {
            return Err(Error::InvalidArgument("seasonal period must be positive".into()));
        }
        Ok(SarimaOrder { p, d, q, sp, sd, sq, season })
    }

    /// Number of parameters counted by AIC: coefficients plus the
    /// innovation variance.
    pub fn param_count(&self) -> usize {
        self.p + self.q + self.sp + self.sq + 1
    }

    /// Shortest series this order can be fitted on.
    pub fn min_series_len(&self) -> usize {
        let s = self.season;
        self.d + s * self.sd + (self.p + s * self.sp).max(self.q + s * self.sq) + 1
    }
}

impl std::fmt::Display for SarimaOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "({},{},{})({},{},{})[{}]",
            self.p, self.d, self.q, self.sp, self.sd, self.sq, self.season
        )
    }
}

/// Grid bounds for the order search.
#[derive(Clone, Copy, Debug)]
pub struct SarimaGridConfig {
    pub max_pq: usize,
    pub max_seasonal: usize,
    pub max_diff: usize,
    pub season: usize,
}

impl Default for SarimaGridConfig {
    fn default() -> Self {
        // semiannual data: seasonal period 2; short series cap the orders
        SarimaGridConfig {
            max_pq: 2,
            max_seasonal: 2,
            max_diff: 1,
            season: 2,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CandidateFit {
    pub order: SarimaOrder,
    /// `None` when the candidate was inadmissible or failed to converge.
    pub aic: Option<f64>,
    pub message: Option<String>,
}

#[derive(Clone, Debug)]
pub struct SarimaModel {
    pub order: SarimaOrder,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub sar: Vec<f64>,
    pub sma: Vec<f64>,
    /// Mean of the differenced series; doubles as drift once integrated.
    pub mean: f64,
    pub sigma2: f64,
    pub loglik: f64,
    pub aic: f64,
    pub candidates: Vec<CandidateFit>,
    history: Vec<f64>,
}

// ---------------------------------------------------------------------------
// differencing

fn difference(series: &[f64], lag: usize) -> Vec<f64> {
    series[lag..]
        .iter()
        .zip(series.iter())
        .map(|(a, b)| a - b)
        .collect()
}

/// Applies d regular and D seasonal differences, returning the final series
/// and the stack of intermediate series needed to integrate forecasts back.
fn difference_stack(series: &[f64], order: &SarimaOrder) -> (Vec<f64>, Vec<(usize, Vec<f64>)>) {
    let mut stack = Vec::new();
    let mut current = series.to_vec();
    for _ in 0..order.d {
        stack.push((1, current.clone()));
        current = difference(&current, 1);
    }
    for _ in 0..order.sd {
        stack.push((order.season, current.clone()));
        current = difference(&current, order.season);
    }
    (current, stack)
}

/// Undoes the differencing for a run of forecasts that extend the series.
fn integrate_forecasts(mut forecasts: Vec<f64>, stack: &[(usize, Vec<f64>)]) -> Vec<f64> {
    for (lag, base) in stack.iter().rev() {
        let mut extended = base.clone();
        for f in &forecasts {
            let prev = extended[extended.len() - lag];
            extended.push(prev + f);
        }
        forecasts = extended[base.len()..].to_vec();
    }
    forecasts
}

// ---------------------------------------------------------------------------
// stationarity-constrained parametrization

/// Levinson-Durbin expansion of reflection coefficients into the
/// coefficients of a stationary polynomial 1 - c1 B - ... - ck B^k.
fn pacf_to_coeffs(pacf: &[f64]) -> Vec<f64> {
    let mut coeffs = vec![0.0; pacf.len()];
    for (k, &kk) in pacf.iter().enumerate() {
        let prev = coeffs.clone();
        coeffs[k] = kk;
        for j in 0..k {
            coeffs[j] = prev[j] - kk * prev[k - 1 - j];
        }
    }
    coeffs
}

fn constrain(raw: &[f64]) -> Vec<f64> {
    let pacf: Vec<f64> = raw.iter().map(|u| u.clamp(-8.0, 8.0).tanh()).collect();
    pacf_to_coeffs(&pacf)
}

/// Polynomial product; both inputs start with coefficient 1 at lag 0.
fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Expands (regular, seasonal) coefficient pairs into one lag polynomial.
/// `sign` is -1 for AR-style polynomials (1 - c B) and +1 for MA-style.
fn expand(regular: &[f64], seasonal: &[f64], season: usize, sign: f64) -> Vec<f64> {
    let mut a = vec![0.0; regular.len() + 1];
    a[0] = 1.0;
    for (i, &c) in regular.iter().enumerate() {
        a[i + 1] = sign * c;
    }
    let mut b = vec![0.0; seasonal.len() * season + 1];
    b[0] = 1.0;
    for (j, &c) in seasonal.iter().enumerate() {
        b[(j + 1) * season] = sign * c;
    }
    poly_mul(&a, &b)
}

struct ArmaParams {
    /// phi_1..phi_m of the expanded AR polynomial.
    ar_full: Vec<f64>,
    /// theta_1..theta_{m-1} of the expanded MA polynomial.
    ma_full: Vec<f64>,
}

fn build_arma(order: &SarimaOrder, raw: &[f64]) -> ArmaParams {
    let (pp, qq, sp, sq) = (order.p, order.q, order.sp, order.sq);
    let phi = constrain(&raw[0..pp]);
    let theta: Vec<f64> = constrain(&raw[pp..pp + qq]).iter().map(|c| -c).collect();
    let sphi = constrain(&raw[pp + qq..pp + qq + sp]);
    let stheta: Vec<f64> = constrain(&raw[pp + qq + sp..pp + qq + sp + sq])
        .iter()
        .map(|c| -c)
        .collect();
    let ar_poly = expand(&phi, &sphi, order.season, -1.0);
    let ma_poly = expand(&theta, &stheta, order.season, 1.0);
    ArmaParams {
        ar_full: ar_poly[1..].iter().map(|c| -c).collect(),
        ma_full: ma_poly[1..].to_vec(),
    }
}

// ---------------------------------------------------------------------------
// exact Gaussian likelihood via the Kalman filter

/// Companion-form state space for the expanded ARMA polynomial. Matrices
/// are flat row-major buffers; the filter step allocates nothing.
struct StateSpace {
    dim: usize,
    /// First-column transition coefficients (companion form).
    phi: Vec<f64>,
    /// Innovation loading vector (1, theta_1, ...).
    load: Vec<f64>,
    // scratch buffers reused across filter steps
    filtered: Vec<f64>,
    tp: Vec<f64>,
}

fn flat_mat_mul(a: &[f64], b: &[f64], m: usize, out: &mut [f64]) {
    out.fill(0.0);
    for i in 0..m {
        for k in 0..m {
            let aik = a[i * m + k];
            if aik == 0.0 {
                continue;
            }
            let row = &b[k * m..(k + 1) * m];
            let dst = &mut out[i * m..(i + 1) * m];
            for (d, &bv) in dst.iter_mut().zip(row) {
                *d += aik * bv;
            }
        }
    }
}

impl StateSpace {
    fn new(params: &ArmaParams) -> Self {
        let dim = params.ar_full.len().max(params.ma_full.len() + 1).max(1);
        let mut phi = params.ar_full.clone();
        phi.resize(dim, 0.0);
        let mut load = vec![1.0];
        load.extend(&params.ma_full);
        load.resize(dim, 0.0);
        StateSpace {
            dim,
            phi,
            load,
            filtered: vec![0.0; dim * dim],
            tp: vec![0.0; dim * dim],
        }
    }

    /// T v for the companion transition matrix.
    fn transition_vec(&self, v: &[f64], out: &mut [f64]) {
        let m = self.dim;
        for i in 0..m {
            out[i] = self.phi[i] * v[0] + if i + 1 < m { v[i + 1] } else { 0.0 };
        }
    }

    /// Stationary covariance: limit of P <- T P T' + R R', by doubling.
    fn stationary_cov(&self) -> Option<Vec<f64>> {
        let m = self.dim;
        let mut s = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                s[i * m + j] = self.load[i] * self.load[j];
            }
        }
        let mut a = vec![0.0; m * m];
        for i in 0..m {
            a[i * m] = self.phi[i];
            if i + 1 < m {
                a[i * m + i + 1] = 1.0;
            }
        }
        let mut tmp1 = vec![0.0; m * m];
        let mut tmp2 = vec![0.0; m * m];
        for _ in 0..200 {
            let norm: f64 = a.iter().map(|v| v.abs()).fold(0.0, f64::max);
            if norm < 1e-18 {
                return Some(s);
            }
            if !norm.is_finite() {
                return None;
            }
            // s += a s a'
            flat_mat_mul(&a, &s, m, &mut tmp1);
            for i in 0..m {
                for j in 0..m {
                    let mut acc = 0.0;
                    for k in 0..m {
                        acc += tmp1[i * m + k] * a[j * m + k];
                    }
                    s[i * m + j] += acc;
                }
            }
            // a = a a
            flat_mat_mul(&a, &a, m, &mut tmp2);
            std::mem::swap(&mut a, &mut tmp2);
        }
        let norm: f64 = a.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if norm < 1e-8 {
            Some(s)
        } else {
            None
        }
    }

    /// One filter step on (a, p); returns (innovation, its variance), or
    /// None when the predicted variance degenerates.
    fn step(&mut self, obs: f64, a: &mut [f64], p: &mut [f64]) -> Option<(f64, f64)> {
        let m = self.dim;
        let f = p[0];
        if !(f > 1e-300) || !f.is_finite() {
            return None;
        }
        let v = obs - a[0];
        // filtered state: a + (P e1) v / F, then advanced by T
        let inv_f = 1.0 / f;
        for i in 0..m {
            self.tp[i] = a[i] + p[i * m] * v * inv_f;
        }
        for i in 0..m {
            a[i] = self.phi[i] * self.tp[0] + if i + 1 < m { self.tp[i + 1] } else { 0.0 };
        }
        // filtered covariance: P - (P e1)(P e1)' / F
        for i in 0..m {
            let pi0 = p[i * m];
            for j in 0..m {
                self.filtered[i * m + j] = p[i * m + j] - pi0 * p[j * m] * inv_f;
            }
        }
        // predicted covariance: T filtered T' + load load'
        for i in 0..m {
            for j in 0..m {
                self.tp[i * m + j] = self.phi[i] * self.filtered[j]
                    + if i + 1 < m {
                        self.filtered[(i + 1) * m + j]
                    } else {
                        0.0
                    };
            }
        }
        for i in 0..m {
            for j in 0..m {
                p[i * m + j] = self.phi[j] * self.tp[i * m]
                    + if j + 1 < m { self.tp[i * m + j + 1] } else { 0.0 }
                    + self.load[i] * self.load[j];
            }
        }
        Some((v, f))
    }
}

struct FilterOutcome {
    loglik: f64,
    sigma2: f64,
    /// One-step-ahead predicted state after the last observation.
    state: Vec<f64>,
}

/// Concentrated exact Gaussian log-likelihood of a zero-mean ARMA series.
fn kalman_loglik(z: &[f64], params: &ArmaParams) -> Option<FilterOutcome> {
    let mut ss = StateSpace::new(params);
    let m = ss.dim;
    let mut p = ss.stationary_cov()?;
    let mut a = vec![0.0; m];
    let n = z.len();
    let mut sum_sq = 0.0;
    let mut sum_log_f = 0.0;
    for &obs in z {
        let (v, f) = ss.step(obs, &mut a, &mut p)?;
        sum_sq += v * v / f;
        sum_log_f += f.ln();
    }
    let nf = n as f64;
    let sigma2 = (sum_sq / nf).max(1e-290);
    let loglik = -0.5 * nf * ((2.0 * std::f64::consts::PI).ln() + 1.0)
        - 0.5 * nf * sigma2.ln()
        - 0.5 * sum_log_f;
    if !loglik.is_finite() {
        return None;
    }
    Some(FilterOutcome {
        loglik,
        sigma2,
        state: a,
    })
}

/// Point forecasts 1..=horizon of the zero-mean ARMA series.
fn kalman_forecast(z: &[f64], params: &ArmaParams, horizon: usize) -> Option<Vec<f64>> {
    let outcome = kalman_loglik(z, params)?;
    let ss = StateSpace::new(params);
    let mut state = outcome.state;
    let mut scratch = vec![0.0; ss.dim];
    let mut out = Vec::with_capacity(horizon);
    for h in 0..horizon {
        if h > 0 {
            ss.transition_vec(&state, &mut scratch);
            state.copy_from_slice(&scratch);
        }
        out.push(state[0]);
    }
    Some(out)
}

#[cfg(test)]
pub(crate) fn exact_loglik_parts(
    z: &[f64],
    ar_full: &[f64],
    ma_full: &[f64],
) -> Option<(f64, f64)> {
    // (sum log F_t, quadratic form) for cross-checking against a direct
    // multivariate normal evaluation
    let params = ArmaParams {
        ar_full: ar_full.to_vec(),
        ma_full: ma_full.to_vec(),
    };
    let mut ss = StateSpace::new(&params);
    let m = ss.dim;
    let mut p = ss.stationary_cov()?;
    let mut a = vec![0.0; m];
    let mut sum_sq = 0.0;
    let mut sum_log_f = 0.0;
    for &obs in z {
        let (v, f) = ss.step(obs, &mut a, &mut p)?;
        sum_sq += v * v / f;
        sum_log_f += f.ln();
    }
    Some((sum_log_f, sum_sq))
}

// ---------------------------------------------------------------------------
// Nelder-Mead

fn nelder_mead(
    f: &dyn Fn(&[f64]) -> f64,
    start: &[f64],
    step: f64,
    max_evals: usize,
    tol: f64,
) -> (Vec<f64>, f64) {
    let dim = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((start.to_vec(), f(start)));
    for i in 0..dim {
        let mut v = start.to_vec();
        v[i] += step;
        let fv = f(&v);
        simplex.push((v, fv));
    }
    let mut evals = dim + 1;
    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[dim].1;
        if (worst - best).abs() <= tol * (best.abs() + tol) {
            break;
        }
        let centroid: Vec<f64> = (0..dim)
            .map(|j| simplex[..dim].iter().map(|(v, _)| v[j]).sum::<f64>() / dim as f64)
            .collect();
        let at = |coef: f64| -> Vec<f64> {
            (0..dim)
                .map(|j| centroid[j] + coef * (centroid[j] - simplex[dim].0[j]))
                .collect()
        };
        let reflected = at(1.0);
        let fr = f(&reflected);
        evals += 1;
        if fr < simplex[0].1 {
            let expanded = at(2.0);
            let fe = f(&expanded);
            evals += 1;
            simplex[dim] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[dim - 1].1 {
            simplex[dim] = (reflected, fr);
        } else {
            let contracted = at(-0.5);
            let fc = f(&contracted);
            evals += 1;
            if fc < simplex[dim].1 {
                simplex[dim] = (contracted, fc);
            } else {
                // shrink toward the best vertex
                let best_v = simplex[0].0.clone();
                for item in simplex.iter_mut().skip(1) {
                    for j in 0..dim {
                        item.0[j] = best_v[j] + 0.5 * (item.0[j] - best_v[j]);
                    }
                    item.1 = f(&item.0);
                    evals += 1;
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

// ---------------------------------------------------------------------------
// fitting

struct SingleFit {
    raw: Vec<f64>,
    mean: f64,
    sigma2: f64,
    loglik: f64,
    aic: f64,
}

fn fit_order(values: &[f64], order: &SarimaOrder) -> Option<SingleFit> {
    if values.len() < order.min_series_len() {
        return None;
    }
    let (w, _) = difference_stack(values, order);
    let mean = w.iter().sum::<f64>() / w.len() as f64;
    let z: Vec<f64> = w.iter().map(|v| v - mean).collect();
    let k = order.p + order.q + order.sp + order.sq;

    let objective = |raw: &[f64]| -> f64 {
        let params = build_arma(order, raw);
        match kalman_loglik(&z, &params) {
            Some(o) => -o.loglik,
            None => 1e12,
        }
    };

    let best_raw = if k == 0 {
        vec![]
    } else {
        let max_evals = 200 + 100 * k;
        let mut starts = vec![vec![0.0; k]];
        if k >= 3 {
            starts.push((0..k).map(|i| if i % 2 == 0 { 0.4 } else { -0.4 }).collect());
        }
        let mut best: Option<(Vec<f64>, f64)> = None;
        for s in starts {
            let (v, fv) = nelder_mead(&objective, &s, 0.5, max_evals, 1e-9);
            if best.as_ref().map_or(true, |(_, b)| fv < *b) {
                best = Some((v, fv));
            }
        }
        best?.0
    };

    let params = build_arma(order, &best_raw);
    let outcome = kalman_loglik(&z, &params)?;
    if !outcome.loglik.is_finite() || outcome.loglik <= -1e11 {
        return None;
    }
    let aic = 2.0 * order.param_count() as f64 - 2.0 * outcome.loglik;
    Some(SingleFit {
        raw: best_raw,
        mean,
        sigma2: outcome.sigma2,
        loglik: outcome.loglik,
        aic,
    })
}

fn model_from_fit(
    order: SarimaOrder,
    fit: SingleFit,
    history: Vec<f64>,
    candidates: Vec<CandidateFit>,
) -> SarimaModel {
    let (pp, qq, sp, sq) = (order.p, order.q, order.sp, order.sq);
    let ar = constrain(&fit.raw[0..pp]);
    let ma: Vec<f64> = constrain(&fit.raw[pp..pp + qq]).iter().map(|c| -c).collect();
    let sar = constrain(&fit.raw[pp + qq..pp + qq + sp]);
    let sma: Vec<f64> = constrain(&fit.raw[pp + qq + sp..pp + qq + sp + sq])
        .iter()
        .map(|c| -c)
        .collect();
    SarimaModel {
        order,
        ar,
        ma,
        sar,
        sma,
        mean: fit.mean,
        sigma2: fit.sigma2,
        loglik: fit.loglik,
        aic: fit.aic,
        candidates,
        history,
    }
}

/// Fits one fixed order.
pub fn fit_single(series: &ChannelCountSeries, order: SarimaOrder) -> Result<SarimaModel> {
    let values = series.values();
    let fit = fit_order(&values, &order).ok_or(Error::AllCandidatesFailed)?;
    Ok(model_from_fit(order, fit, values, vec![]))
}

/// Grid search over all admissible orders; returns the minimum-AIC model
/// with the full candidate list attached.
pub fn fit_sarima_with(series: &ChannelCountSeries, grid: &SarimaGridConfig) -> Result<SarimaModel> {
    let values = series.values();
    if values.len() < 8 {
        return Err(Error::SeriesTooShort {
            len: values.len(),
            need: 8,
        });
    }
    let mut orders = Vec::new();
    for p in 0..=grid.max_pq {
        for d in 0..=grid.max_diff {
            for q in 0..=grid.max_pq {
                for sp in 0..=grid.max_seasonal {
                    for sd in 0..=grid.max_diff {
                        for sq in 0..=grid.max_seasonal {
                            let order = SarimaOrder::new(p, d, q, sp, sd, sq, grid.season)?;
                            orders.push(order);
                        }
                    }
                }
            }
        }
    }

    let fits = exec::map_slice(&orders, |order| {
        if values.len() < order.min_series_len() {
            return (
                *order,
                None,
                Some("series shorter than the order requires".to_string()),
            );
        }
        match fit_order(&values, order) {
            Some(f) => (*order, Some(f), None),
            None => (*order, None, Some("did not converge".to_string())),
        }
    });

    let mut candidates = Vec::with_capacity(fits.len());
    let mut best: Option<(usize, f64)> = None;
    for (i, (order, fit, message)) in fits.iter().enumerate() {
        candidates.push(CandidateFit {
            order: *order,
            aic: fit.as_ref().map(|f| f.aic),
            message: message.clone(),
        });
        if let Some(f) = fit {
            if best.map_or(true, |(_, a)| f.aic < a) {
                best = Some((i, f.aic));
            }
        }
    }
    let (best_idx, _) = best.ok_or(Error::AllCandidatesFailed)?;
    let mut fits = fits;
    let (order, fit, _) = fits.swap_remove(best_idx);
    Ok(model_from_fit(order, fit.expect("best candidate fitted"), values, candidates))
}

/// Grid search with the default caps.
pub fn fit_sarima(series: &ChannelCountSeries) -> Result<SarimaModel> {
    fit_sarima_with(series, &SarimaGridConfig::default())
}

impl SarimaModel {
    /// Builds a model with pinned coefficients on a series; the likelihood
    /// and AIC are still evaluated exactly.
    pub fn with_params(
        order: SarimaOrder,
        ar: Vec<f64>,
        ma: Vec<f64>,
        sar: Vec<f64>,
        sma: Vec<f64>,
        series: &ChannelCountSeries,
    ) -> Result<Self> {
        if ar.len() != order.p || ma.len() != order.q || sar.len() != order.sp || sma.len() != order.sq {
            return Err(Error::InvalidArgument(
                "coefficient lengths do not match the order".into(),
            ));
        }
        let values = series.values();
        if values.len() < order.min_series_len() {
            return Err(Error::SeriesTooShort {
                len: values.len(),
                need: order.min_series_len(),
            });
        }
        let (w, _) = difference_stack(&values, &order);
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        let z: Vec<f64> = w.iter().map(|v| v - mean).collect();
        let ar_poly = expand(&ar, &sar, order.season, -1.0);
        let ma_poly = expand(&ma, &sma, order.season, 1.0);
        let params = ArmaParams {
            ar_full: ar_poly[1..].iter().map(|c| -c).collect(),
            ma_full: ma_poly[1..].to_vec(),
        };
        let outcome = kalman_loglik(&z, &params)
            .ok_or_else(|| Error::Numerical("likelihood evaluation failed".into()))?;
        let aic = 2.0 * order.param_count() as f64 - 2.0 * outcome.loglik;
        Ok(SarimaModel {
            order,
            ar,
            ma,
            sar,
            sma,
            mean,
            sigma2: outcome.sigma2,
            loglik: outcome.loglik,
            aic,
            candidates: vec![],
            history: values,
        })
    }

    fn arma_params(&self) -> ArmaParams {
        let ar_poly = expand(&self.ar, &self.sar, self.order.season, -1.0);
        let ma_poly = expand(&self.ma, &self.sma, self.order.season, 1.0);
        ArmaParams {
            ar_full: ar_poly[1..].iter().map(|c| -c).collect(),
            ma_full: ma_poly[1..].to_vec(),
        }
    }

    /// Point forecasts 1..=horizon on the original scale.
    pub fn forecast_path(&self, horizon: usize) -> Result<Vec<f64>> {
        if horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        let (w, stack) = difference_stack(&self.history, &self.order);
        let z: Vec<f64> = w.iter().map(|v| v - self.mean).collect();
        let params = self.arma_params();
        let z_hat = kalman_forecast(&z, &params, horizon)
            .ok_or_else(|| Error::Numerical("forecast filter failed".into()))?;
        let w_hat: Vec<f64> = z_hat.iter().map(|v| v + self.mean).collect();
        Ok(integrate_forecasts(w_hat, &stack))
    }
}

/// Point count forecast at the given horizon, floored at zero.
pub fn forecast_count(model: &SarimaModel, horizon: usize) -> Result<f64> {
    let path = model.forecast_path(horizon)?;
    Ok(path[horizon - 1].max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::ChannelId;
    use crate::forecast::ChannelCountSeries;
    use crate::period::{Half, HalfYearPeriod};
    use approx::assert_abs_diff_eq;
    use ndarray::{Array1, Array2};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn series(values: &[f64]) -> ChannelCountSeries {
        let start = HalfYearPeriod::new(2004, Half::H1);
        ChannelCountSeries::new(
            ChannelId::new("other"),
            values
                .iter()
                .enumerate()
                .map(|(i, &v)| (start.offset(i as i64), v))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn differencing_round_trips_through_integration() {
        let order = SarimaOrder::new(0, 1, 0, 0, 1, 0, 2).unwrap();
        let y: Vec<f64> = (0..12).map(|i| (i as f64).sin() * 3.0 + i as f64).collect();
        let (w, stack) = difference_stack(&y, &order);
        assert_eq!(w.len(), 12 - 1 - 2);
        // integrating the next true differences must reproduce the series
        let future: Vec<f64> = (12..16).map(|i| (i as f64).sin() * 3.0 + i as f64).collect();
        let mut full = y.clone();
        full.extend(&future);
        let (w_full, _) = difference_stack(&full, &order);
        let restored = integrate_forecasts(w_full[w.len()..].to_vec(), &stack);
        for (a, b) in restored.iter().zip(&future) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn pacf_transform_yields_stationary_coefficients() {
        // |coefficients| of an AR(1) from tanh are inside the unit circle
        let c = constrain(&[5.0]);
        assert!(c[0] < 1.0 && c[0] > 0.99);
        // AR(2) from arbitrary raw values satisfies the stationarity
        // triangle |c2| < 1, c2 + c1 < 1, c2 - c1 < 1
        for raw in [[2.0, -3.0], [-0.7, 0.9], [4.0, 4.0]] {
            let c = constrain(&raw);
            assert!(c[1].abs() < 1.0);
            assert!(c[1] + c[0] < 1.0);
            assert!(c[1] - c[0] < 1.0);
        }
    }

    #[test]
    fn kalman_matches_direct_multivariate_gaussian_for_ar1() {
        // AR(1): Sigma_ij = phi^|i-j| / (1 - phi^2) at unit innovation
        let phi: f64 = 0.6;
        let z = [0.3, -0.5, 0.9, 0.1, -0.2, 0.4];
        let n = z.len();
        let mut sigma = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                sigma[[i, j]] = phi.powi((i as i32 - j as i32).abs()) / (1.0 - phi * phi);
            }
        }
        let l = crate::linalg::cholesky(&sigma).unwrap();
        let logdet: f64 = (0..n).map(|i| 2.0 * l[[i, i]].ln()).sum();
        let solved = crate::linalg::cholesky_solve(&l, &Array1::from(z.to_vec()));
        let quad: f64 = z.iter().zip(solved.iter()).map(|(a, b)| a * b).sum();

        let (sum_log_f, sum_sq) = exact_loglik_parts(&z, &[phi], &[]).unwrap();
        assert_abs_diff_eq!(sum_log_f, logdet, epsilon = 1e-9);
        assert_abs_diff_eq!(sum_sq, quad, epsilon = 1e-9);
    }

    #[test]
    fn kalman_matches_direct_multivariate_gaussian_for_arma11() {
        let (phi, theta) = (0.5, 0.3);
        let z = [1.2, -0.4, 0.7, 0.2, -0.9, 0.5, 0.1];
        let n = z.len();
        // ARMA(1,1) autocovariances at unit innovation variance
        let gamma0 = (1.0 + 2.0 * phi * theta + theta * theta) / (1.0 - phi * phi);
        let gamma1 = ((1.0 + phi * theta) * (phi + theta)) / (1.0 - phi * phi);
        let mut sigma = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                let lag = (i as i32 - j as i32).unsigned_abs() as usize;
                sigma[[i, j]] = match lag {
                    0 => gamma0,
                    k => gamma1 * phi.powi(k as i32 - 1),
                };
            }
        }
        let l = crate::linalg::cholesky(&sigma).unwrap();
        let logdet: f64 = (0..n).map(|i| 2.0 * l[[i, i]].ln()).sum();
        let solved = crate::linalg::cholesky_solve(&l, &Array1::from(z.to_vec()));
        let quad: f64 = z.iter().zip(solved.iter()).map(|(a, b)| a * b).sum();

        let (sum_log_f, sum_sq) = exact_loglik_parts(&z, &[phi], &[theta]).unwrap();
        assert_abs_diff_eq!(sum_log_f, logdet, epsilon = 1e-9);
        assert_abs_diff_eq!(sum_sq, quad, epsilon = 1e-9);
    }

    #[test]
    fn constant_series_forecasts_the_constant() {
        let model = fit_sarima(&series(&[100.0; 12])).unwrap();
        let f = forecast_count(&model, 2).unwrap();
        assert_abs_diff_eq!(f, 100.0, epsilon = 1e-3);
    }

    #[test]
    fn alternating_series_forecasts_two_steps_back() {
        let values: Vec<f64> = (0..12).map(|i| if i % 2 == 0 { 100.0 } else { 200.0 }).collect();
        let model = fit_sarima(&series(&values)).unwrap();
        let f = forecast_count(&model, 2).unwrap();
        // horizon 2 lands on the same phase as the last observation
        assert!((f - 200.0).abs() < 1.0, "forecast {f}");
    }

    #[test]
    fn ar1_simulation_recovers_the_coefficient() {
        let phi = 0.7;
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut values = vec![0.0f64];
        for _ in 1..200 {
            let prev = *values.last().unwrap();
            values.push(phi * prev + normal.sample(&mut rng));
        }
        let values: Vec<f64> = values.iter().map(|v| v + 50.0).collect();
        let model = fit_sarima(&series(&values)).unwrap();
        assert!(
            !model.ar.is_empty() && (model.ar[0] - phi).abs() <= 0.15,
            "selected {} with ar {:?}",
            model.order,
            model.ar
        );
    }

    #[test]
    fn white_noise_model_forecasts_the_sample_mean() {
        let values = [3.0, 5.0, 4.0, 6.0, 2.0, 4.0, 5.0, 3.0, 4.0, 6.0];
        let order = SarimaOrder::new(0, 0, 0, 0, 0, 0, 2).unwrap();
        let model = SarimaModel::with_params(order, vec![], vec![], vec![], vec![], &series(&values)).unwrap();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        for h in 1..=3 {
            assert_abs_diff_eq!(forecast_count(&model, h).unwrap(), mean, epsilon = 1e-10);
        }
    }

    #[test]
    fn ar1_two_step_forecast_matches_closed_form() {
        // last value sits 2 above the mean; with phi = 0.5 the two-step
        // prediction is mean + 0.25 * 2
        let values = [10.0, 9.0, 11.0, 10.0, 9.0, 11.0, 10.0, 8.0, 10.0, 12.0];
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        assert_abs_diff_eq!(values[9] - mean, 2.0, epsilon = 1e-12);
        let order = SarimaOrder::new(1, 0, 0, 0, 0, 0, 2).unwrap();
        let model =
            SarimaModel::with_params(order, vec![0.5], vec![], vec![], vec![], &series(&values))
                .unwrap();
        let expected = mean + 0.25 * (values[9] - mean);
        assert_abs_diff_eq!(forecast_count(&model, 2).unwrap(), expected, epsilon = 1e-9);
    }

    #[test]
    fn linear_trend_is_nailed_by_a_differencing_candidate() {
        let values: Vec<f64> = (0..14).map(|i| 50.0 + 10.0 * i as f64).collect();
        let order = SarimaOrder::new(0, 1, 0, 0, 0, 0, 2).unwrap();
        let direct = fit_single(&series(&values), order).unwrap();
        let f = direct.forecast_path(2).unwrap();
        assert!((f[1] - (50.0 + 10.0 * 15.0)).abs() < 1e-2, "got {}", f[1]);

        // the AIC-selected model must also extrapolate the trend closely
        let model = fit_sarima(&series(&values)).unwrap();
        let f = forecast_count(&model, 2).unwrap();
        let truth = 50.0 + 10.0 * 15.0;
        assert!(
            (f - truth).abs() < 0.01 * truth,
            "selected {} forecast {f} vs {truth}",
            model.order
        );
    }

    #[test]
    fn selected_aic_is_the_grid_minimum() {
        let values: Vec<f64> = (0..16)
            .map(|i| 100.0 + 5.0 * (i % 2) as f64 + (i as f64) * 0.5)
            .collect();
        let model = fit_sarima(&series(&values)).unwrap();
        for c in &model.candidates {
            if let Some(aic) = c.aic {
                assert!(
                    model.aic <= aic + 1e-9,
                    "candidate {} has smaller AIC {aic} than selected {}",
                    c.order,
                    model.aic
                );
            }
        }
    }

    #[test]
    fn short_series_is_rejected() {
        let err = fit_sarima(&series(&[1.0; 7])).unwrap_err();
        assert!(matches!(err, Error::SeriesTooShort { .. }));
    }
}
