//! End-to-end runs: preprocess, count, select, scale, split, fit, evaluate.
//!
//! Counts and selection act on the whole corpus before the train/test split
//! unless [`CountsMode::TrainOnly`] is requested, in which case `tp`/`tn`
//! come from the training rows only. Scaling is applied to the selected
//! columns of the full matrix before the rows are split.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifiers::{self, scale_minmax, ClassifierError, ClassifierSpec};
use crate::corpus::{stratified_split, Corpus, CorpusError, Label, SplitIndices};
use crate::eval::{self, EvalError, RunReport};
use crate::evolve::{optimize, Bounds, DeConfig, EvolveError, Evaluation, Trace};
use crate::preprocess::{PreprocessError, Preprocessor, PresenceMatrix, Vocabulary};
use crate::selector::{
    apply_mask, compute_feature_stats, select_features, FeatureStats, Method, Reduction, SelectError,
    SelectionMask, SelectionSpec, LAMBDA_BOUNDS,
};

/// Fitness assigned to a genome whose selection keeps no features.
pub const EMPTY_SELECTION_PENALTY: f64 = 1.0;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Select(#[from] SelectError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Evolve(#[from] EvolveError),
}

/// Which documents feed the per-feature presence counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CountsMode {
    #[default]
    Full,
    TrainOnly,
}

impl fmt::Display for CountsMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CountsMode::Full => "full",
            CountsMode::TrainOnly => "train-only",
        })
    }
}

impl FromStr for CountsMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(CountsMode::Full),
            "train-only" | "train_only" => Ok(CountsMode::TrainOnly),
            other => Err(format!("unknown counts mode `{other}` (expected full or train-only)")),
        }
    }
}

/// A vectorized corpus with its split and feature counts, shared read-only by
/// every evaluation of a run.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub name: String,
    pub vocab: Vocabulary,
    pub matrix: PresenceMatrix,
    pub split: SplitIndices,
    pub stats: FeatureStats,
    pub counts: CountsMode,
}

impl PreparedData {
    pub fn new(
        corpus: &Corpus,
        preprocessor: &Preprocessor,
        ratio: f64,
        seed: u64,
        counts: CountsMode,
    ) -> Result<Self, PipelineError> {
        let split = stratified_split(corpus, ratio, seed)?;
        let (vocab, matrix) = preprocessor.fit_transform(corpus)?;
        Self::from_parts(corpus.name(), vocab, matrix, split, counts)
    }

    pub fn from_parts(
        name: &str,
        vocab: Vocabulary,
        matrix: PresenceMatrix,
        split: SplitIndices,
        counts: CountsMode,
    ) -> Result<Self, PipelineError> {
        let stats = match counts {
            CountsMode::Full => compute_feature_stats(&matrix)?,
            CountsMode::TrainOnly => compute_feature_stats(&matrix.select_rows(&split.train_ids))?,
        };
        Ok(PreparedData {
            name: name.to_string(),
            vocab,
            matrix,
            split,
            stats,
            counts,
        })
    }

    pub fn n_features(&self) -> usize {
        self.matrix.cols()
    }

    pub fn mask(&self, spec: &SelectionSpec) -> SelectionMask {
        select_features(&self.stats, spec)
    }

    fn labels_at(&self, ids: &[usize]) -> Vec<Label> {
        let labels = self.matrix.labels();
        ids.iter().map(|&i| labels[i]).collect()
    }

    /// Trains on the training rows restricted to `columns` and scores the
    /// test rows.
    pub fn evaluate_columns(&self, columns: &[usize], classifier: &ClassifierSpec) -> Result<Scores, PipelineError> {
        let scaled = scale_minmax(&self.matrix.select_columns(columns).to_dense());
        let model = classifiers::fit(
            classifier,
            &scaled.select_rows(&self.split.train_ids),
            &self.labels_at(&self.split.train_ids),
        )?;
        let predictions = classifiers::predict(&model, &scaled.select_rows(&self.split.test_ids))?;
        let truth = self.labels_at(&self.split.test_ids);
        Ok(Scores {
            accuracy: eval::accuracy(&predictions, &truth)?,
            avg_fm: eval::average_f_measure(&predictions, &truth)?,
            selected_features: columns.len(),
        })
    }

    /// Scores for `spec`, or `None` when the selection keeps nothing.
    pub fn evaluate_selection(
        &self,
        spec: &SelectionSpec,
        classifier: &ClassifierSpec,
    ) -> Result<Option<Scores>, PipelineError> {
        let mask = self.mask(spec);
        if mask.is_empty_selection() {
            return Ok(None);
        }
        let (_, columns) = apply_mask(&self.matrix, &mask)?;
        self.evaluate_columns(&columns, classifier).map(Some)
    }

    pub fn evaluate_all(&self, classifier: &ClassifierSpec) -> Result<Scores, PipelineError> {
        let columns: Vec<usize> = (0..self.n_features()).collect();
        self.evaluate_columns(&columns, classifier)
    }
}

/// Test-split metrics of one trained model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub accuracy: f64,
    pub avg_fm: f64,
    pub selected_features: usize,
}

/// Default `(k, λ)` search box for a method.
pub fn default_bounds(method: Method) -> Bounds {
    let (k_lo, k_hi) = method.k_bounds();
    Bounds::from_pairs(&[(k_lo, k_hi), LAMBDA_BOUNDS]).expect("static bounds are valid")
}

/// Objective over genomes `[k, λ]` returning `−accuracy`, or
/// [`EMPTY_SELECTION_PENALTY`] when nothing is selected. Results are memoized
/// by the set of kept features, since many genomes select the same set.
pub struct Fitness<'a> {
    data: &'a PreparedData,
    method: Method,
    classifier: ClassifierSpec,
    cache: Mutex<HashMap<Vec<bool>, Scores>>,
}

impl<'a> Fitness<'a> {
    pub fn new(data: &'a PreparedData, method: Method, classifier: ClassifierSpec) -> Self {
        Fitness {
            data,
            method,
            classifier,
            cache: Mutex::new(HashMap::new()),
        }
    }

    fn spec(&self, genome: &[f64]) -> Result<SelectionSpec, SelectError> {
        let lambda = genome.get(1).copied().unwrap_or(0.0);
        SelectionSpec::new(self.method, genome[0], lambda)
    }

    /// Metrics of the selection encoded by `genome`; `None` for an empty one.
    pub fn scores(&self, genome: &[f64]) -> Result<Option<Scores>, PipelineError> {
        let mask = self.data.mask(&self.spec(genome)?);
        if mask.is_empty_selection() {
            return Ok(None);
        }
        if let Some(hit) = self.cache.lock().expect("cache lock").get(&mask.keep) {
            return Ok(Some(*hit));
        }
        let scores = self.data.evaluate_columns(&mask.kept_indices(), &self.classifier)?;
        self.cache.lock().expect("cache lock").insert(mask.keep, scores);
        Ok(Some(scores))
    }

    pub fn evaluate(&self, genome: &[f64]) -> Result<Evaluation, PipelineError> {
        Ok(match self.scores(genome)? {
            None => Evaluation {
                fitness: EMPTY_SELECTION_PENALTY,
                accuracy: None,
                n_features: Some(0),
            },
            Some(s) => Evaluation {
                fitness: -s.accuracy,
                accuracy: Some(s.accuracy),
                n_features: Some(s.selected_features),
            },
        })
    }

    /// Distinct feature sets evaluated so far.
    pub fn cached_sets(&self) -> usize {
        self.cache.lock().expect("cache lock").len()
    }
}

pub fn make_fitness(data: &PreparedData, method: Method, classifier: ClassifierSpec) -> Fitness<'_> {
    Fitness::new(data, method, classifier)
}

fn report(
    data: &PreparedData,
    method: Reduction,
    classifier: &ClassifierSpec,
    genome: Option<(f64, f64)>,
    scores: Option<Scores>,
    started: Instant,
) -> RunReport {
    let (k, lambda) = match (method, genome) {
        (Reduction::Select(m), Some((k, l))) => (Some(k), m.uses_lambda().then_some(l)),
        _ => (None, None),
    };
    RunReport {
        dataset: data.name.clone(),
        method,
        classifier: classifier.kind(),
        k,
        lambda,
        accuracy: Some(scores.map_or(0.0, |s| s.accuracy)),
        avg_fm: Some(scores.map_or(0.0, |s| s.avg_fm)),
        initial_features: data.n_features(),
        selected_features: Some(scores.map_or(0, |s| s.selected_features)),
        seed: classifier.seed,
        wall_time_s: started.elapsed().as_secs_f64(),
    }
}

/// One fixed-parameter run. An empty selection yields a report with zero
/// accuracy, zero average F-measure and no selected features.
pub fn run_select(
    data: &PreparedData,
    method: Reduction,
    k: f64,
    lambda: f64,
    classifier: &ClassifierSpec,
) -> Result<RunReport, PipelineError> {
    let started = Instant::now();
    let scores = match method {
        Reduction::None => Some(data.evaluate_all(classifier)?),
        Reduction::Select(m) => data.evaluate_selection(&SelectionSpec::new(m, k, lambda)?, classifier)?,
    };
    Ok(report(data, method, classifier, Some((k, lambda)), scores, started))
}

#[derive(Debug, Clone)]
pub struct EvolveOutcome {
    /// Best `[k, λ]` found.
    pub genome: Vec<f64>,
    pub fitness: f64,
    pub trace: Trace,
    /// Metrics of the best genome.
    pub report: RunReport,
    pub mask: SelectionMask,
}

/// Tunes `(k, λ)` for `method` by differential evolution.
pub fn run_evolve(
    data: &PreparedData,
    method: Method,
    classifier: &ClassifierSpec,
    bounds: &Bounds,
    config: &DeConfig,
) -> Result<EvolveOutcome, PipelineError> {
    let started = Instant::now();
    let fitness = make_fitness(data, method, *classifier);
    let result = optimize(|g: &[f64]| fitness.evaluate(g), bounds, config)?;
    let genome = result.best.genome.clone();
    let scores = fitness.scores(&genome)?;
    let k = genome[0];
    let lambda = genome.get(1).copied().unwrap_or(0.0);
    let mask = data.mask(&SelectionSpec::new(method, k, lambda)?);
    Ok(EvolveOutcome {
        fitness: result.best.fitness.unwrap_or(EMPTY_SELECTION_PENALTY),
        trace: result.trace,
        report: report(data, Reduction::Select(method), classifier, Some((k, lambda)), scores, started),
        genome,
        mask,
    })
}

/// How a comparison cell picks `(k, λ)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Tuning {
    Manual { k: f64, lambda: f64 },
    /// Differential evolution. `k_bounds: None` uses each method's default
    /// interval.
    Evolve {
        config: DeConfig,
        k_bounds: Option<(f64, f64)>,
        lambda_bounds: (f64, f64),
    },
}

impl Tuning {
    pub fn evolve(config: DeConfig) -> Self {
        Tuning::Evolve {
            config,
            k_bounds: None,
            lambda_bounds: LAMBDA_BOUNDS,
        }
    }
}

/// Runs one (dataset, classifier, method) cell. Failures become rows
/// without metrics.
pub fn run_cell(
    data: &PreparedData,
    method: Reduction,
    classifier: &ClassifierSpec,
    tuning: &Tuning,
) -> RunReport {
    let started = Instant::now();
    let outcome = match (method, tuning) {
        (Reduction::None, _) => run_select(data, Reduction::None, 0.0, 0.0, classifier),
        (Reduction::Select(_), Tuning::Manual { k, lambda }) => run_select(data, method, *k, *lambda, classifier),
        (
            Reduction::Select(m),
            Tuning::Evolve {
                config,
                k_bounds,
                lambda_bounds,
            },
        ) => Bounds::from_pairs(&[k_bounds.unwrap_or_else(|| m.k_bounds()), *lambda_bounds])
            .map_err(PipelineError::from)
            .and_then(|bounds| run_evolve(data, m, classifier, &bounds, config))
            .map(|o| o.report),
    };
    outcome.unwrap_or_else(|err| {
        log::warn!("{} / {} / {}: {err}", data.name, classifier.kind(), method);
        RunReport {
            dataset: data.name.clone(),
            method,
            classifier: classifier.kind(),
            k: None,
            lambda: None,
            accuracy: None,
            avg_fm: None,
            initial_features: data.n_features(),
            selected_features: None,
            seed: classifier.seed,
            wall_time_s: started.elapsed().as_secs_f64(),
        }
    })
}
