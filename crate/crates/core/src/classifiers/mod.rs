//! Binary classifiers used as fitness evaluators, plus min-max scaling.
//!
//! All training is single-threaded and fully determined by the
//! [`ClassifierSpec`] (including its seed) and the data.
//!
//! Trained models can be persisted with [`TrainedModel::save`] as a JSON
//! document of the form
//! `{"format": "sentireduce-model", "version": 1, "model": {...}}`.

mod forest;
mod logistic;
mod naive_bayes;
mod scale;
mod svm;

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Label;
use crate::matrix::DenseMatrix;

pub use forest::{DecisionTree, ForestParams, MaxFeatures, Node, RandomForest};
pub use logistic::{LogisticObjective, LogisticParams, LogisticRegression};
pub use naive_bayes::{MultinomialNb, NaiveBayesParams};
pub use scale::scale_minmax;
pub use svm::{LinearSvm, SvmParams};

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("training data needs both classes, got only {0}")]
    SingleClass(Label),
    #[error("no training rows")]
    Empty,
    #[error("{rows} rows but {labels} labels")]
    RowLabelMismatch { rows: usize, labels: usize },
    #[error("model expects {expected} features, input has {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("multinomial naive Bayes requires non-negative inputs, found {0}")]
    NegativeInput(f64),
    #[error("non-finite input value")]
    NonFinite,
    #[error("{0} does not produce class probabilities")]
    NoProbabilities(ClassifierKind),
    #[error("model file I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("model file format: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassifierKind {
    LinearSvm,
    LogisticRegression,
    MultinomialNb,
    RandomForest,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] = [
        ClassifierKind::LinearSvm,
        ClassifierKind::LogisticRegression,
        ClassifierKind::MultinomialNb,
        ClassifierKind::RandomForest,
    ];

    /// Short name used on the command line and in reports.
    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::LinearSvm => "svm",
            ClassifierKind::LogisticRegression => "lr",
            ClassifierKind::MultinomialNb => "nb",
            ClassifierKind::RandomForest => "rf",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassifierKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "svm" => Ok(ClassifierKind::LinearSvm),
            "lr" => Ok(ClassifierKind::LogisticRegression),
            "nb" => Ok(ClassifierKind::MultinomialNb),
            "rf" => Ok(ClassifierKind::RandomForest),
            other => Err(format!("unknown classifier `{other}` (expected svm, lr, nb or rf)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Hyperparams {
    LinearSvm(SvmParams),
    LogisticRegression(LogisticParams),
    MultinomialNb(NaiveBayesParams),
    RandomForest(ForestParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub hyperparams: Hyperparams,
    pub seed: u64,
}

impl ClassifierSpec {
    /// Default hyperparameters for `kind`.
    pub fn new(kind: ClassifierKind, seed: u64) -> Self {
        let hyperparams = match kind {
            ClassifierKind::LinearSvm => Hyperparams::LinearSvm(SvmParams::default()),
            ClassifierKind::LogisticRegression => Hyperparams::LogisticRegression(LogisticParams::default()),
            ClassifierKind::MultinomialNb => Hyperparams::MultinomialNb(NaiveBayesParams::default()),
            ClassifierKind::RandomForest => Hyperparams::RandomForest(ForestParams::default()),
        };
        ClassifierSpec { hyperparams, seed }
    }

    pub fn kind(&self) -> ClassifierKind {
        match self.hyperparams {
            Hyperparams::LinearSvm(_) => ClassifierKind::LinearSvm,
            Hyperparams::LogisticRegression(_) => ClassifierKind::LogisticRegression,
            Hyperparams::MultinomialNb(_) => ClassifierKind::MultinomialNb,
            Hyperparams::RandomForest(_) => ClassifierKind::RandomForest,
        }
    }
}

/// Labels in the two encodings the learners use.
#[derive(Debug, Clone, PartialEq)]
pub struct Targets {
    /// 0 = positive, 1 = negative
    pub class_index: Vec<usize>,
    /// +1 = positive, −1 = negative
    pub sign: Vec<f64>,
}

impl Targets {
    pub fn new(labels: &[Label]) -> Result<Self, ClassifierError> {
        let first = *labels.first().ok_or(ClassifierError::Empty)?;
        if labels.iter().all(|&l| l == first) {
            return Err(ClassifierError::SingleClass(first));
        }
        Ok(Targets {
            class_index: labels.iter().map(|&l| if l.is_positive() { 0 } else { 1 }).collect(),
            sign: labels.iter().map(|&l| if l.is_positive() { 1.0 } else { -1.0 }).collect(),
        })
    }
}

/// Compressed rows holding only the non-zero entries of a dense matrix.
pub(crate) struct SparseRows {
    pub rows: usize,
    pub cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseRows {
    pub fn from_dense(x: &DenseMatrix) -> Self {
        let mut indptr = Vec::with_capacity(x.rows() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in x.iter_rows() {
            for (c, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        SparseRows {
            rows: x.rows(),
            cols: x.cols(),
            indptr,
            indices,
            values,
        }
    }

    fn span(&self, i: usize) -> std::ops::Range<usize> {
        self.indptr[i]..self.indptr[i + 1]
    }

    pub fn row_dot(&self, i: usize, w: &[f64]) -> f64 {
        self.span(i).map(|k| self.values[k] * w[self.indices[k]]).sum()
    }

    /// `out += scale · row_i`
    pub fn add_row_scaled(&self, i: usize, scale: f64, out: &mut [f64]) {
        for k in self.span(i) {
            out[self.indices[k]] += scale * self.values[k];
        }
    }

    /// Estimate of the largest eigenvalue of `AᵀA` where `A = X` or `[X 1]`,
    /// by 100 rounds of power iteration from the all-ones vector.
    pub fn gram_spectral_bound(&self, with_intercept: bool) -> f64 {
        let dim = self.cols + usize::from(with_intercept);
        if dim == 0 || self.rows == 0 {
            return 0.0;
        }
        let mut v = vec![1.0 / (dim as f64).sqrt(); dim];
        let mut estimate = 0.0;
        for _ in 0..100 {
            let mut next = vec![0.0; dim];
            let mut norm_av = 0.0;
            for i in 0..self.rows {
                let mut av = self.row_dot(i, &v[..self.cols]);
                if with_intercept {
                    av += v[self.cols];
                }
                norm_av += av * av;
                self.add_row_scaled(i, av, &mut next[..self.cols]);
                if with_intercept {
                    next[self.cols] += av;
                }
            }
            estimate = norm_av;
            let norm: f64 = next.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            v = next.into_iter().map(|x| x / norm).collect();
        }
        estimate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Model {
    LinearSvm(LinearSvm),
    LogisticRegression(LogisticRegression),
    MultinomialNb(MultinomialNb),
    RandomForest(RandomForest),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub model: Model,
    pub feature_count: usize,
}

const MODEL_FORMAT: &str = "sentireduce-model";
const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    model: TrainedModel,
}

impl TrainedModel {
    pub fn kind(&self) -> ClassifierKind {
        match self.model {
            Model::LinearSvm(_) => ClassifierKind::LinearSvm,
            Model::LogisticRegression(_) => ClassifierKind::LogisticRegression,
            Model::MultinomialNb(_) => ClassifierKind::MultinomialNb,
            Model::RandomForest(_) => ClassifierKind::RandomForest,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ClassifierError> {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            model: self.clone(),
        };
        let json = serde_json::to_string(&file).map_err(|e| ClassifierError::Format(e.to_string()))?;
        fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ClassifierError> {
        let text = fs::read_to_string(path)?;
        let file: ModelFile = serde_json::from_str(&text).map_err(|e| ClassifierError::Format(e.to_string()))?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(ClassifierError::Format(format!(
                "unsupported model file {} v{}",
                file.format, file.version
            )));
        }
        Ok(file.model)
    }

    fn check_dims(&self, x: &DenseMatrix) -> Result<(), ClassifierError> {
        if x.cols() != self.feature_count {
            return Err(ClassifierError::DimensionMismatch {
                expected: self.feature_count,
                actual: x.cols(),
            });
        }
        Ok(())
    }
}

pub fn fit(spec: &ClassifierSpec, x: &DenseMatrix, y: &[Label]) -> Result<TrainedModel, ClassifierError> {
    if x.rows() != y.len() {
        return Err(ClassifierError::RowLabelMismatch {
            rows: x.rows(),
            labels: y.len(),
        });
    }
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(ClassifierError::NonFinite);
    }
    let targets = Targets::new(y)?;
    let model = match &spec.hyperparams {
        Hyperparams::LinearSvm(p) => Model::LinearSvm(LinearSvm::fit(p, x, &targets, spec.seed)),
        Hyperparams::LogisticRegression(p) => Model::LogisticRegression(LogisticRegression::fit(p, x, &targets)),
        Hyperparams::MultinomialNb(p) => Model::MultinomialNb(MultinomialNb::fit(p, x, &targets)?),
        Hyperparams::RandomForest(p) => Model::RandomForest(RandomForest::fit(p, x, &targets, spec.seed)),
    };
    Ok(TrainedModel {
        model,
        feature_count: x.cols(),
    })
}

fn label_of(positive: bool) -> Label {
    if positive {
        Label::Positive
    } else {
        Label::Negative
    }
}

pub fn predict(model: &TrainedModel, x: &DenseMatrix) -> Result<Vec<Label>, ClassifierError> {
    model.check_dims(x)?;
    let labels = x
        .iter_rows()
        .map(|row| match &model.model {
            Model::LinearSvm(m) => label_of(m.decision(row) >= 0.0),
            Model::LogisticRegression(m) => label_of(m.posterior(row)[0] >= 0.5),
            Model::MultinomialNb(m) => label_of(m.posterior(row)[0] >= 0.5),
            Model::RandomForest(m) => {
                let v = m.votes(row);
                label_of(v[0] >= v[1])
            }
        })
        .collect();
    Ok(labels)
}

/// Per-row `[P(positive), P(negative)]`. Not available for the linear SVM.
pub fn predict_proba(model: &TrainedModel, x: &DenseMatrix) -> Result<Vec<[f64; 2]>, ClassifierError> {
    model.check_dims(x)?;
    let rows = x.iter_rows();
    let proba = match &model.model {
        Model::LinearSvm(_) => return Err(ClassifierError::NoProbabilities(ClassifierKind::LinearSvm)),
        Model::LogisticRegression(m) => rows.map(|row| m.posterior(row)).collect(),
        Model::MultinomialNb(m) => rows.map(|row| m.posterior(row)).collect(),
        Model::RandomForest(m) => rows.map(|row| m.votes(row)).collect(),
    };
    Ok(proba)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xy() -> (DenseMatrix, Vec<Label>) {
        (
            DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]),
            vec![Label::Positive, Label::Negative],
        )
    }

    #[test]
    fn nb_predicts_own_training_docs() {
        let (x, y) = xy();
        let model = fit(&ClassifierSpec::new(ClassifierKind::MultinomialNb, 0), &x, &y).unwrap();
        assert_eq!(predict(&model, &x).unwrap(), y);
    }

    #[test]
    fn zero_weight_lr_predicts_majority() {
        let x = DenseMatrix::zeros(3, 2);
        let y = vec![Label::Negative, Label::Negative, Label::Positive];
        let model = fit(&ClassifierSpec::new(ClassifierKind::LogisticRegression, 0), &x, &y).unwrap();
        assert_eq!(predict(&model, &x).unwrap(), vec![Label::Negative; 3]);
    }

    #[test]
    fn rf_on_pure_region() {
        let x = DenseMatrix::from_rows(&[[0.0], [0.1], [0.9], [1.0]]);
        let y = vec![Label::Negative, Label::Negative, Label::Positive, Label::Positive];
        let model = fit(&ClassifierSpec::new(ClassifierKind::RandomForest, 1), &x, &y).unwrap();
        // Every bootstrap sample that contains both classes splits between 0.1 and 0.9.
        let probe = DenseMatrix::from_rows(&[[0.0], [1.0]]);
        let pred = predict(&model, &probe).unwrap();
        assert_eq!(pred, vec![Label::Negative, Label::Positive]);
    }

    #[test]
    fn errors() {
        let (x, y) = xy();
        let nb = ClassifierSpec::new(ClassifierKind::MultinomialNb, 0);
        assert!(matches!(
            fit(&nb, &x, &[Label::Positive, Label::Positive]),
            Err(ClassifierError::SingleClass(Label::Positive))
        ));
        assert!(matches!(
            fit(&nb, &x, &[Label::Positive]),
            Err(ClassifierError::RowLabelMismatch { .. })
        ));
        let model = fit(&nb, &x, &y).unwrap();
        let wide = DenseMatrix::zeros(1, 3);
        assert!(matches!(
            predict(&model, &wide),
            Err(ClassifierError::DimensionMismatch { expected: 2, actual: 3 })
        ));
        let svm = fit(&ClassifierSpec::new(ClassifierKind::LinearSvm, 0), &x, &y).unwrap();
        assert!(matches!(
            predict_proba(&svm, &x),
            Err(ClassifierError::NoProbabilities(ClassifierKind::LinearSvm))
        ));
        let bad = DenseMatrix::from_rows(&[[f64::NAN, 0.0], [0.0, 1.0]]);
        assert!(matches!(fit(&nb, &bad, &y), Err(ClassifierError::NonFinite)));
    }

    #[test]
    fn model_file_round_trip() {
        let (x, y) = xy();
        let dir = tempfile::tempdir().unwrap();
        for kind in ClassifierKind::ALL {
            let model = fit(&ClassifierSpec::new(kind, 7), &x, &y).unwrap();
            let path = dir.path().join(format!("{kind}.json"));
            model.save(&path).unwrap();
            let loaded = TrainedModel::load(&path).unwrap();
            assert_eq!(predict(&loaded, &x).unwrap(), predict(&model, &x).unwrap());
            assert_eq!(loaded.kind(), kind);
        }
        fs::write(dir.path().join("bad.json"), r#"{"format":"other","version":1,"model":null}"#).unwrap();
        assert!(TrainedModel::load(dir.path().join("bad.json")).is_err());
    }

    #[test]
    fn spectral_bound_matches_simple_case() {
        // [X 1] = [[1,1],[0,1]] → AᵀA = [[1,1],[1,2]], λ_max = (3 + √5)/2
        let x = DenseMatrix::from_rows(&[[1.0], [0.0]]);
        let bound = SparseRows::from_dense(&x).gram_spectral_bound(true);
        assert!((bound - (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn kind_parsing() {
        for kind in ClassifierKind::ALL {
            assert_eq!(kind.as_str().parse::<ClassifierKind>().unwrap(), kind);
        }
        assert!("knn".parse::<ClassifierKind>().is_err());
    }
}
