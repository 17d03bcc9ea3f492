//! L2-regularized logistic regression trained by full-batch accelerated
//! gradient descent.
//!
//! Objective over `θ = [w, b]` with targets `y ∈ {−1, +1}`:
//!
//! ```text
//! J(θ) = ½‖w‖² + C · Σᵢ log(1 + exp(−yᵢ (w·xᵢ + b)))
//! ```
//!
//! The intercept is not penalized. The step is `1/L` with
//! `L = 1 + C·σ²/4`, where `σ²` bounds the largest eigenvalue of `[X 1]ᵀ[X 1]`
//! (power iteration, padded by 10%). Momentum follows the FISTA sequence and
//! is restarted whenever the gradient opposes the last step. Iteration stops
//! once `max |∇J| < tol` or after `max_iter` iterations.

use serde::{Deserialize, Serialize};

use super::{SparseRows, Targets};
use crate::matrix::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    /// Inverse regularization strength.
    pub c: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            c: 1.0,
            tol: 1e-6,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Gradient descent iterations actually run.
    pub iterations: usize,
}

impl LogisticRegression {
    pub fn fit(params: &LogisticParams, x: &DenseMatrix, y: &Targets) -> Self {
        let objective = LogisticObjective::new(x, y, params.c);
        let dim = x.cols() + 1;
        let lipschitz = 1.0 + params.c * 0.25 * 1.1 * objective.data.gram_spectral_bound(true);
        let step = 1.0 / lipschitz;

        let mut theta = vec![0.0; dim];
        let mut lookahead = theta.clone();
        let mut t = 1.0f64;
        let mut iterations = 0;
        let mut grad = objective.gradient(&lookahead);
        loop {
            // The lookahead point is itself a valid solution once its gradient is small.
            if max_abs(&grad) < params.tol {
                theta = lookahead;
                break;
            }
            if iterations == params.max_iter {
                break;
            }
            iterations += 1;
            let next: Vec<f64> = lookahead.iter().zip(&grad).map(|(p, g)| p - step * g).collect();
            let restart = grad
                .iter()
                .zip(next.iter().zip(&theta))
                .map(|(g, (n, o))| g * (n - o))
                .sum::<f64>()
                > 0.0;
            let t_next = if restart {
                1.0
            } else {
                (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0
            };
            let momentum = if restart { 0.0 } else { (t - 1.0) / t_next };
            lookahead = next
                .iter()
                .zip(&theta)
                .map(|(n, o)| n + momentum * (n - o))
                .collect();
            theta = next;
            t = t_next;
            grad = objective.gradient(&lookahead);
        }
        let intercept = theta.pop().unwrap_or(0.0);
        LogisticRegression {
            weights: theta,
            intercept,
            iterations,
        }
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        dot(&self.weights, row) + self.intercept
    }

    /// Posterior `[P(positive), P(negative)]`.
    pub fn posterior(&self, row: &[f64]) -> [f64; 2] {
        let z = self.decision(row);
        let p = sigmoid(z);
        [p, sigmoid(-z)]
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(−m))` without overflow.
fn log_loss(margin: f64) -> f64 {
    if margin > 0.0 {
        (-margin).exp().ln_1p()
    } else {
        -margin + margin.exp().ln_1p()
    }
}

/// The regularized negative log-likelihood and its gradient, exposed for
/// gradient checking. Parameters are `[w₀ … w_{d−1}, b]`.
pub struct LogisticObjective {
    data: SparseRows,
    sign: Vec<f64>,
    c: f64,
}

impl LogisticObjective {
    pub fn new(x: &DenseMatrix, y: &Targets, c: f64) -> Self {
        LogisticObjective {
            data: SparseRows::from_dense(x),
            sign: y.sign.clone(),
            c,
        }
    }

    pub fn dim(&self) -> usize {
        self.data.cols + 1
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        let (w, b) = theta.split_at(self.data.cols);
        let penalty = 0.5 * dot(w, w);
        let loss: f64 = (0..self.data.rows)
            .map(|i| log_loss(self.sign[i] * (self.data.row_dot(i, w) + b[0])))
            .sum();
        penalty + self.c * loss
    }

    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let d = self.data.cols;
        let (w, b) = theta.split_at(d);
        let mut grad = Vec::with_capacity(d + 1);
        grad.extend_from_slice(w);
        grad.push(0.0);
        for i in 0..self.data.rows {
            let y = self.sign[i];
            let z = self.data.row_dot(i, w) + b[0];
            // d/dz log(1 + exp(−y z)) = −y σ(−y z)
            let coef = -self.c * y * sigmoid(-y * z);
            self.data.add_row_scaled(i, coef, &mut grad[..d]);
            grad[d] += coef;
        }
        grad
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Label;

    #[test]
    fn zero_features_learn_prior_log_odds() {
        let x = DenseMatrix::zeros(5, 3);
        let labels = [Label::Positive, Label::Positive, Label::Positive, Label::Negative, Label::Negative];
        let y = Targets::new(&labels).unwrap();
        let model = LogisticRegression::fit(&LogisticParams::default(), &x, &y);
        assert!(model.weights.iter().all(|&w| w == 0.0));
        assert!((model.intercept - (3.0f64 / 2.0).ln()).abs() < 1e-6);
    }

    #[test]
    fn zero_model_is_even() {
        let model = LogisticRegression {
            weights: vec![0.0; 2],
            intercept: 0.0,
            iterations: 0,
        };
        assert_eq!(model.posterior(&[1.0, 2.0]), [0.5, 0.5]);
    }

    #[test]
    fn stable_loss() {
        assert!((log_loss(0.0) - 2f64.ln()).abs() < 1e-15);
        assert!(log_loss(1000.0) >= 0.0 && log_loss(1000.0) < 1e-300);
        assert!((log_loss(-1000.0) - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn converges_below_tolerance() {
        let x = DenseMatrix::from_rows(&[[1.0, 0.0], [0.9, 0.2], [0.0, 1.0], [0.1, 0.8]]);
        let y = Targets::new(&[Label::Positive, Label::Positive, Label::Negative, Label::Negative]).unwrap();
        let params = LogisticParams::default();
        let model = LogisticRegression::fit(&params, &x, &y);
        let objective = LogisticObjective::new(&x, &y, params.c);
        let mut theta = model.weights.clone();
        theta.push(model.intercept);
        assert!(max_abs(&objective.gradient(&theta)) < params.tol);
        assert!(model.iterations < params.max_iter);
    }
}
