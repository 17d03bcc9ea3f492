//! Multinomial naive Bayes with additive smoothing.

use serde::{Deserialize, Serialize};

use super::{ClassifierError, Targets};
use crate::matrix::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesParams {
    /// Additive smoothing; 1.0 is Laplace smoothing.
    pub alpha: f64,
}

impl Default for NaiveBayesParams {
    fn default() -> Self {
        NaiveBayesParams { alpha: 1.0 }
    }
}

/// Parameters are stored as `[positive, negative]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultinomialNb {
    pub class_log_prior: [f64; 2],
    /// `feature_log_prob[class][feature] = log P(feature | class)`
    pub feature_log_prob: [Vec<f64>; 2],
}

impl MultinomialNb {
    pub fn fit(params: &NaiveBayesParams, x: &DenseMatrix, y: &Targets) -> Result<Self, ClassifierError> {
        if let Some(&v) = x.as_slice().iter().find(|&&v| v < 0.0) {
            return Err(ClassifierError::NegativeInput(v));
        }
        let d = x.cols();
        let mut class_count = [0usize; 2];
        let mut feature_count = [vec![0.0; d], vec![0.0; d]];
        for (row, &c) in x.iter_rows().zip(&y.class_index) {
            class_count[c] += 1;
            for (acc, &v) in feature_count[c].iter_mut().zip(row) {
                *acc += v;
            }
        }
        let n = x.rows() as f64;
        let class_log_prior = [
            (class_count[0] as f64 / n).ln(),
            (class_count[1] as f64 / n).ln(),
        ];
        let feature_log_prob = feature_count.map(|counts| {
            let total: f64 = counts.iter().sum();
            let denom = (total + params.alpha * d as f64).ln();
            counts.iter().map(|&c| (c + params.alpha).ln() - denom).collect()
        });
        Ok(MultinomialNb {
            class_log_prior,
            feature_log_prob,
        })
    }

    fn joint_log_likelihood(&self, row: &[f64]) -> [f64; 2] {
        [0, 1].map(|c| {
            self.class_log_prior[c]
                + row
                    .iter()
                    .zip(&self.feature_log_prob[c])
                    .map(|(&v, &lp)| v * lp)
                    .sum::<f64>()
        })
    }

    /// Posterior `[P(positive), P(negative)]`.
    pub fn posterior(&self, row: &[f64]) -> [f64; 2] {
        let [a, b] = self.joint_log_likelihood(row);
        let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
        let norm = hi + (lo - hi).exp().ln_1p();
        [(a - norm).exp(), (b - norm).exp()]
    }

    pub fn feature_count(&self) -> usize {
        self.feature_log_prob[0].len()
    }
}
