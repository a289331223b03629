//! Weighted linear regression and ridge-penalized logistic regression.
//!
//! Both models always carry an unpenalized intercept.

use ndarray::{Array1, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, SymMatrix};
use crate::math::sigmoid;

/// Ridge strength used when the weighted design is rank deficient,
/// relative to the mean diagonal of the centered normal matrix.
pub const WLS_FALLBACK_RIDGE: f64 = 1e-8;

pub const DEFAULT_LOGISTIC_RIDGE: f64 = 1e-4;

const PIVOT_TOL: f64 = 1e-12;
const LOGISTIC_TOL: f64 = 1e-8;
const LOGISTIC_MAX_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub intercept: f64,
    pub slopes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WlsFit {
    pub model: LinearModel,
    /// Set when the normal equations were singular and the ridge fallback
    /// produced the solution.
    pub ridge_fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub intercept: f64,
    pub slopes: Vec<f64>,
    pub ridge_lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    pub model: LogisticModel,
    pub converged: bool,
    pub iterations: usize,
}

fn check_inputs(features: &ArrayView2<f64>, target: &ArrayView1<f64>, weights: Option<&[f64]>) -> Result<()> {
    let n = features.nrows();
    if target.len() != n {
        return Err(Error::InvalidArgument(format!(
            "target has {} rows, features have {n}",
            target.len()
        )));
    }
    if features.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("features".into()));
    }
    if target.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("target".into()));
    }
    if let Some(w) = weights {
        if w.len() != n {
            return Err(Error::InvalidArgument(format!(
                "weights have {} rows, features have {n}",
                w.len()
            )));
        }
        if w.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidArgument("weights must be positive and finite".into()));
        }
    }
    Ok(())
}

/// Weighted least squares: minimizes `Σ wᵢ (yᵢ − β₀ − βᵀxᵢ)²`.
///
/// Solves the weighted normal equations on weighted-mean-centered data with
/// one step of iterative refinement. A singular design falls back to a tiny
/// ridge on the slopes and sets [`WlsFit::ridge_fallback`].
pub fn fit_wls(features: ArrayView2<f64>, target: ArrayView1<f64>, weights: &[f64]) -> Result<WlsFit> {
    check_inputs(&features, &target, Some(weights))?;
    let (n, d) = features.dim();
    if n <= d {
        return Err(Error::InvalidArgument(format!(
            "need more rows than features (n = {n}, d = {d})"
        )));
    }
    let wsum: f64 = weights.iter().sum();
    let mut xbar = vec![0.0; d];
    let mut ybar = 0.0;
    for (i, row) in features.rows().into_iter().enumerate() {
        let w = weights[i];
        for (m, x) in xbar.iter_mut().zip(row.iter()) {
            *m += w * x;
        }
        ybar += w * target[i];
    }
    xbar.iter_mut().for_each(|m| *m /= wsum);
    ybar /= wsum;

    let mut gram = SymMatrix::zeros(d);
    let mut rhs = vec![0.0; d];
    let mut xc = vec![0.0; d];
    for (i, row) in features.rows().into_iter().enumerate() {
        let w = weights[i];
        for j in 0..d {
            xc[j] = row[j] - xbar[j];
        }
        let yc = target[i] - ybar;
        for j in 0..d {
            let wx = w * xc[j];
            rhs[j] += wx * yc;
            for k in 0..=j {
                *gram.at_mut(j, k) += wx * xc[k];
            }
        }
    }
    gram.mirror_lower();

    let (chol, ridge_fallback, system) = match Cholesky::new(&gram, PIVOT_TOL) {
        Some(c) => (c, false, gram),
        None => {
            let mean_diag = (0..d).map(|j| gram.at(j, j)).sum::<f64>() / d.max(1) as f64;
            let lambda = WLS_FALLBACK_RIDGE * mean_diag.max(f64::MIN_POSITIVE);
            let mut ridged = gram.clone();
            for j in 0..d {
                *ridged.at_mut(j, j) += lambda;
            }
            let c = Cholesky::new(&ridged, 0.0).ok_or_else(|| {
                Error::InvalidArgument("weighted design is degenerate even with ridge".into())
            })?;
            (c, true, ridged)
        }
    };
    let mut beta = chol.solve(&rhs);
    // one step of iterative refinement
    let ab = system.mul_vec(&beta);
    let resid: Vec<f64> = rhs.iter().zip(&ab).map(|(r, a)| r - a).collect();
    let delta = chol.solve(&resid);
    beta.iter_mut().zip(&delta).for_each(|(b, dlt)| *b += dlt);

    let intercept = ybar - beta.iter().zip(&xbar).map(|(b, m)| b * m).sum::<f64>();
    if !intercept.is_finite() || beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::NonFinite("WLS coefficients".into()));
    }
    Ok(WlsFit {
        model: LinearModel {
            intercept,
            slopes: beta,
        },
        ridge_fallback,
    })
}

fn check_width(expected: usize, features: &ArrayView2<f64>) -> Result<()> {
    if features.ncols() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: features.ncols(),
        });
    }
    Ok(())
}

impl LinearModel {
    /// `β₀ + βᵀx` per row.
    pub fn predict(&self, features: ArrayView2<f64>) -> Result<Array1<f64>> {
        check_width(self.slopes.len(), &features)?;
        Ok(features
            .rows()
            .into_iter()
            .map(|row| {
                row.iter()
                    .zip(&self.slopes)
                    .fold(self.intercept, |acc, (x, b)| acc + x * b)
            })
            .collect())
    }
}

pub fn predict_linear(model: &LinearModel, features: ArrayView2<f64>) -> Result<Array1<f64>> {
    model.predict(features)
}

impl LogisticModel {
    fn linear_predictor(&self, row: ArrayView1<f64>) -> f64 {
        row.iter()
            .zip(&self.slopes)
            .fold(self.intercept, |acc, (x, b)| acc + x * b)
    }

    /// `σ(β₀ + βᵀx)` per row, unclipped.
    pub fn predict_proba(&self, features: ArrayView2<f64>) -> Result<Array1<f64>> {
        check_width(self.slopes.len(), &features)?;
        Ok(features
            .rows()
            .into_iter()
            .map(|row| sigmoid(self.linear_predictor(row)))
            .collect())
    }
}

pub fn predict_proba(model: &LogisticModel, features: ArrayView2<f64>) -> Result<Array1<f64>> {
    model.predict_proba(features)
}

/// Penalized weighted log-likelihood `Σ wᵢ[yᵢηᵢ − log(1 + e^ηᵢ)] − λ/2 ‖β‖²`.
fn penalized_loglik(features: &ArrayView2<f64>, target: &ArrayView1<f64>, w: &[f64], theta: &[f64], lambda: f64) -> f64 {
    let mut ll = 0.0;
    for (i, row) in features.rows().into_iter().enumerate() {
        let eta = row
            .iter()
            .zip(&theta[1..])
            .fold(theta[0], |acc, (x, b)| acc + x * b);
        // log(1 + e^η) computed stably
        let softplus = if eta > 0.0 {
            eta + (-eta).exp().ln_1p()
        } else {
            eta.exp().ln_1p()
        };
        ll += w[i] * (target[i] * eta - softplus);
    }
    ll - 0.5 * lambda * theta[1..].iter().map(|b| b * b).sum::<f64>()
}

/// Ridge-penalized logistic regression by Newton/IRLS with step halving.
///
/// Converged when the largest parameter change drops below 1e-8; after 100
/// iterations the best iterate is returned with `converged = false`.
pub fn fit_logistic(
    features: ArrayView2<f64>,
    target: ArrayView1<f64>,
    weights: Option<&[f64]>,
    ridge_lambda: f64,
) -> Result<LogisticFit> {
    check_inputs(&features, &target, weights)?;
    let (n, d) = features.dim();
    if n < 2 {
        return Err(Error::InvalidArgument("logistic fit needs at least 2 rows".into()));
    }
    if !(ridge_lambda >= 0.0 && ridge_lambda.is_finite()) {
        return Err(Error::InvalidArgument("ridge_lambda must be finite and >= 0".into()));
    }
    if target.iter().any(|&y| y != 0.0 && y != 1.0) {
        return Err(Error::InvalidArgument("logistic target must be binary".into()));
    }
    let ones;
    let w: &[f64] = match weights {
        Some(w) => w,
        None => {
            ones = vec![1.0; n];
            &ones
        }
    };
    let positives = target.iter().filter(|&&y| y == 1.0).count();
    if (positives == 0 || positives == n) && ridge_lambda == 0.0 {
        return Err(Error::SingleClass);
    }

    let p = d + 1;
    let mut theta = vec![0.0; p];
    let mut objective = penalized_loglik(&features, &target, w, &theta, ridge_lambda);
    let mut converged = false;
    let mut iterations = 0;
    let mut xt = vec![0.0; p];
    xt[0] = 1.0;
    while iterations < LOGISTIC_MAX_ITER {
        iterations += 1;
        let mut hess = SymMatrix::zeros(p);
        let mut grad = vec![0.0; p];
        for (i, row) in features.rows().into_iter().enumerate() {
            xt[1..].iter_mut().zip(row.iter()).for_each(|(a, b)| *a = *b);
            let eta: f64 = xt.iter().zip(&theta).map(|(x, t)| x * t).sum();
            let mu = sigmoid(eta);
            let r = w[i] * (target[i] - mu);
            let s = w[i] * mu * (1.0 - mu);
            for j in 0..p {
                grad[j] += r * xt[j];
                let sx = s * xt[j];
                for k in 0..=j {
                    *hess.at_mut(j, k) += sx * xt[k];
                }
            }
        }
        for j in 1..p {
            grad[j] -= ridge_lambda * theta[j];
            *hess.at_mut(j, j) += ridge_lambda;
        }
        hess.mirror_lower();
        let chol = match Cholesky::new(&hess, PIVOT_TOL) {
            Some(c) => c,
            None => {
                let mean_diag = (0..p).map(|j| hess.at(j, j)).sum::<f64>() / p as f64;
                let jitter = 1e-8 * mean_diag.max(1e-300);
                let mut h = hess.clone();
                for j in 0..p {
                    *h.at_mut(j, j) += jitter;
                }
                match Cholesky::new(&h, 0.0) {
                    Some(c) => c,
                    None => break,
                }
            }
        };
        let step = chol.solve(&grad);

        // Step halving keeps the penalized likelihood monotone.
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let cand: Vec<f64> = theta.iter().zip(&step).map(|(t, s)| t + scale * s).collect();
            let obj = penalized_loglik(&features, &target, w, &cand, ridge_lambda);
            if obj.is_finite() && obj >= objective - 1e-12 * objective.abs().max(1.0) {
                accepted = Some((cand, obj));
                break;
            }
            scale *= 0.5;
        }
        let Some((cand, obj)) = accepted else {
            break;
        };
        let max_change = cand
            .iter()
            .zip(&theta)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        theta = cand;
        objective = obj;
        if max_change < LOGISTIC_TOL {
            converged = true;
            break;
        }
    }
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite("logistic coefficients".into()));
    }
    Ok(LogisticFit {
        model: LogisticModel {
            intercept: theta[0],
            slopes: theta[1..].to_vec(),
            ridge_lambda,
        },
        converged,
        iterations,
    })
}
