//! Term-presence feature weighting and threshold pruning.
//!
//! For feature `i`, `tp` and `tn` count the positive and negative documents
//! that contain it. Four weights are available:
//!
//! | method     | weight                                              |
//! |------------|-----------------------------------------------------|
//! | `SentiTpc` | `|(tp − tn) − λ·(tp + tn)|`                         |
//! | `SentiTpr` | `|100·(tp − tn)/(tp + tn) − λ·(tp + tn)|`           |
//! | `Tpc`      | `|tp − tn|`                                         |
//! | `Tpr`      | `|100·(tp − tn)/(tp + tn)|`                         |
//!
//! The ratio-based weights are 0 when `tp + tn = 0`. A feature is kept when
//! its weight is at least `k`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Label;
use crate::preprocess::PresenceMatrix;

#[derive(Debug, Error, PartialEq)]
pub enum SelectError {
    #[error("threshold k must be finite and non-negative, got {0}")]
    InvalidK(f64),
    #[error("lambda must be finite, got {0}")]
    InvalidLambda(f64),
    #[error("presence matrix holds only {0} rows; both classes are required")]
    SingleClass(Label),
    #[error("mask covers {mask} features but the matrix has {matrix} columns")]
    LengthMismatch { mask: usize, matrix: usize },
    #[error("selection keeps no features")]
    EmptySelection,
}

/// Weight function used to score features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    Tpc,
    Tpr,
    SentiTpc,
    SentiTpr,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Tpc, Method::Tpr, Method::SentiTpc, Method::SentiTpr];

    /// Whether λ enters the weight.
    pub fn uses_lambda(self) -> bool {
        matches!(self, Method::SentiTpc | Method::SentiTpr)
    }

    pub fn weight(self, tp: u32, tn: u32, lambda: f64) -> f64 {
        match self {
            Method::SentiTpc => weight_sentitpc(tp, tn, lambda),
            Method::SentiTpr => weight_sentitpr(tp, tn, lambda),
            Method::Tpc => weight_tpc(tp, tn),
            Method::Tpr => weight_tpr(tp, tn),
        }
    }

    /// Default `k` search interval used under evolution.
    pub fn k_bounds(self) -> (f64, f64) {
        match self {
            Method::SentiTpc | Method::Tpc => (1.0, 30.0),
            Method::SentiTpr | Method::Tpr => (1.0, 50.0),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::SentiTpc => "sentitpc",
            Method::SentiTpr => "sentitpr",
            Method::Tpc => "tpc",
            Method::Tpr => "tpr",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sentitpc" => Ok(Method::SentiTpc),
            "sentitpr" => Ok(Method::SentiTpr),
            "tpc" => Ok(Method::Tpc),
            "tpr" => Ok(Method::Tpr),
            other => Err(format!("unknown method `{other}`")),
        }
    }
}

/// Either no feature reduction at all or selection by one [`Method`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Reduction {
    None,
    Select(Method),
}

impl Reduction {
    pub const ALL: [Reduction; 5] = [
        Reduction::None,
        Reduction::Select(Method::Tpc),
        Reduction::Select(Method::Tpr),
        Reduction::Select(Method::SentiTpc),
        Reduction::Select(Method::SentiTpr),
    ];

    pub fn method(self) -> Option<Method> {
        match self {
            Reduction::None => None,
            Reduction::Select(m) => Some(m),
        }
    }
}

impl fmt::Display for Reduction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reduction::None => f.write_str("none"),
            Reduction::Select(m) => m.fmt(f),
        }
    }
}

impl FromStr for Reduction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("none") {
            Ok(Reduction::None)
        } else {
            s.parse().map(Reduction::Select)
        }
    }
}

/// Lambda search interval under evolution.
pub const LAMBDA_BOUNDS: (f64, f64) = (0.1, 0.5);

/// Per-feature presence counts by class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub tp: Vec<u32>,
    pub tn: Vec<u32>,
}

impl FeatureStats {
    pub fn n_features(&self) -> usize {
        self.tp.len()
    }
}

pub fn compute_feature_stats(matrix: &PresenceMatrix) -> Result<FeatureStats, SelectError> {
    let labels = matrix.labels();
    if let Some(&first) = labels.first() {
        if labels.iter().all(|&l| l == first) {
            return Err(SelectError::SingleClass(first));
        }
    }
    let mut tp = vec![0u32; matrix.cols()];
    let mut tn = vec![0u32; matrix.cols()];
    for (r, label) in labels.iter().enumerate() {
        let counts = match label {
            Label::Positive => &mut tp,
            Label::Negative => &mut tn,
        };
        for c in matrix.row_features(r) {
            counts[c] += 1;
        }
    }
    Ok(FeatureStats { tp, tn })
}

pub fn weight_sentitpc(tp: u32, tn: u32, lambda: f64) -> f64 {
    let distinction = tp as f64 - tn as f64;
    let total = tp as f64 + tn as f64;
    (distinction - lambda * total).abs()
}

pub fn weight_sentitpr(tp: u32, tn: u32, lambda: f64) -> f64 {
    let total = tp as f64 + tn as f64;
    if total == 0.0 {
        return 0.0;
    }
    let ratio = 100.0 * (tp as f64 - tn as f64) / total;
    (ratio - lambda * total).abs()
}

pub fn weight_tpc(tp: u32, tn: u32) -> f64 {
    (tp as f64 - tn as f64).abs()
}

pub fn weight_tpr(tp: u32, tn: u32) -> f64 {
    let total = tp as f64 + tn as f64;
    if total == 0.0 {
        return 0.0;
    }
    (100.0 * (tp as f64 - tn as f64) / total).abs()
}

/// A weight method with its threshold `k` and balance coefficient `lambda`
/// (ignored by `Tpc` and `Tpr`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionSpec {
    pub method: Method,
    pub k: f64,
    pub lambda: f64,
}

impl SelectionSpec {
    pub fn new(method: Method, k: f64, lambda: f64) -> Result<Self, SelectError> {
        if !k.is_finite() || k < 0.0 {
            return Err(SelectError::InvalidK(k));
        }
        if !lambda.is_finite() {
            return Err(SelectError::InvalidLambda(lambda));
        }
        Ok(SelectionSpec { method, k, lambda })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionMask {
    pub keep: Vec<bool>,
    pub weights: Vec<f64>,
}

impl SelectionMask {
    pub fn kept_count(&self) -> usize {
        self.keep.iter().filter(|&&k| k).count()
    }

    /// True when nothing survived the threshold; callers treat this as the
    /// worst possible outcome.
    pub fn is_empty_selection(&self) -> bool {
        !self.keep.iter().any(|&k| k)
    }

    pub fn kept_indices(&self) -> Vec<usize> {
        self.keep
            .iter()
            .enumerate()
            .filter_map(|(i, &k)| k.then_some(i))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.keep.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keep.is_empty()
    }
}

pub fn select_features(stats: &FeatureStats, spec: &SelectionSpec) -> SelectionMask {
    let weights: Vec<f64> = stats
        .tp
        .iter()
        .zip(&stats.tn)
        .map(|(&tp, &tn)| spec.method.weight(tp, tn, spec.lambda))
        .collect();
    let keep = weights.iter().map(|&w| w >= spec.k).collect();
    SelectionMask { keep, weights }
}

/// Column projection onto the kept features. Also returns, for each new
/// column, its index in `matrix`.
pub fn apply_mask(
    matrix: &PresenceMatrix,
    mask: &SelectionMask,
) -> Result<(PresenceMatrix, Vec<usize>), SelectError> {
    if mask.len() != matrix.cols() {
        return Err(SelectError::LengthMismatch {
            mask: mask.len(),
            matrix: matrix.cols(),
        });
    }
    let kept = mask.kept_indices();
    if kept.is_empty() {
        return Err(SelectError::EmptySelection);
    }
    Ok((matrix.select_columns(&kept), kept))
}
