//! Linear SVM trained by stochastic sub-gradient descent (Pegasos schedule).
//!
//! Minimizes `λ/2 ‖w‖² + (1/n) Σᵢ max(0, 1 − yᵢ (w·xᵢ + b))` with
//! `λ = 1/(C·n)`, which has the same minimizer as `½‖w‖² + C Σᵢ hingeᵢ`.
//! The bias is learned as the weight of an extra constant-1 feature and is
//! therefore regularized as well.
//!
//! Step schedule: the t-th update (t = 1, 2, …, counted across epochs) uses
//! `η_t = 1/(λ t)`. Each epoch visits the samples in an order drawn from a
//! ChaCha8 generator seeded with the classifier seed.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{SparseRows, Targets};
use crate::matrix::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    pub epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams { c: 1.0, epochs: 2000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearSvm {
    pub fn fit(params: &SvmParams, x: &DenseMatrix, y: &Targets, seed: u64) -> Self {
        let data = SparseRows::from_dense(x);
        let n = data.rows;
        let d = data.cols;
        let lambda = 1.0 / (params.c * n as f64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..n).collect();

        // w = scale · v, with the bias stored as v[d].
        let mut v = vec![0.0; d + 1];
        let mut scale = 1.0f64;
        let mut t = 0u64;
        for _ in 0..params.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                t += 1;
                let eta = 1.0 / (lambda * t as f64);
                let margin = y.sign[i] * scale * (data.row_dot(i, &v[..d]) + v[d]);
                let shrink = 1.0 - eta * lambda;
                if shrink <= 0.0 {
                    v.iter_mut().for_each(|x| *x = 0.0);
                    scale = 1.0;
                } else {
                    scale *= shrink;
                }
                if margin < 1.0 {
                    let step = eta * y.sign[i] / scale;
                    data.add_row_scaled(i, step, &mut v[..d]);
                    v[d] += step;
                }
                if scale < 1e-9 {
                    v.iter_mut().for_each(|x| *x *= scale);
                    scale = 1.0;
                }
            }
        }
        let mut weights: Vec<f64> = v.iter().map(|x| x * scale).collect();
        let bias = weights.pop().unwrap_or(0.0);
        LinearSvm { weights, bias }
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        self.weights.iter().zip(row).map(|(w, x)| w * x).sum::<f64>() + self.bias
    }
}
