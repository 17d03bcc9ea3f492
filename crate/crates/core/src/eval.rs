//! Metrics, run reports and CSV report emission.
//!
//! Metrics are fractions in `[0, 1]`. Every real number written to a CSV has
//! four decimal places; summaries render accuracies as percentages.
//!
//! Average F-measure is the unweighted mean of the per-class F1 scores of
//! the two classes (macro F1). On balanced data this coincides with the
//! support-weighted mean.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifiers::ClassifierKind;
use crate::corpus::Label;
use crate::evolve::Trace;
use crate::selector::Reduction;

pub const REPORT_HEADER: [&str; 11] = [
    "dataset",
    "method",
    "classifier",
    "k",
    "lambda",
    "accuracy",
    "avg_fm",
    "initial_features",
    "selected_features",
    "seed",
    "wall_time_s",
];

pub const TRACE_HEADER: [&str; 6] = ["evaluation", "k", "lambda", "fitness", "accuracy", "n_features"];

pub const SUMMARY_HEADER: [&str; 5] = ["classifier", "method", "mean_accuracy_pct", "mean_avg_fm_pct", "datasets"];

/// Written in place of metrics a row could not produce.
pub const NOT_AVAILABLE: &str = "N/A";

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{predictions} predictions for {truth} true labels")]
    LengthMismatch { predictions: usize, truth: usize },
    #[error("no labels to evaluate")]
    Empty,
    #[error("no reports with metrics to average")]
    EmptyGroup,
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("line {line}: bad value `{value}` in column `{column}`")]
    Parse { line: usize, column: &'static str, value: String },
    #[error("line {line}: expected {expected} columns, found {found}")]
    Columns { line: usize, expected: usize, found: usize },
    #[error("unexpected header `{0}`")]
    Header(String),
}

/// Counts with Positive as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn from_labels(predictions: &[Label], truth: &[Label]) -> Result<Self, EvalError> {
        check_lengths(predictions, truth)?;
        let mut m = ConfusionMatrix::default();
        for (p, t) in predictions.iter().zip(truth) {
            match (p, t) {
                (Label::Positive, Label::Positive) => m.tp += 1,
                (Label::Positive, Label::Negative) => m.fp += 1,
                (Label::Negative, Label::Negative) => m.tn += 1,
                (Label::Negative, Label::Positive) => m.fn_ += 1,
            }
        }
        Ok(m)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total() as f64
    }

    /// F1 of the positive class.
    pub fn f1_positive(&self) -> f64 {
        f1(self.tp, self.fp, self.fn_)
    }

    /// F1 of the negative class.
    pub fn f1_negative(&self) -> f64 {
        f1(self.tn, self.fn_, self.fp)
    }

    pub fn average_f_measure(&self) -> f64 {
        (self.f1_positive() + self.f1_negative()) / 2.0
    }
}

fn f1(hits: usize, false_alarms: usize, misses: usize) -> f64 {
    let denom = 2 * hits + false_alarms + misses;
    if denom == 0 {
        0.0
    } else {
        (2 * hits) as f64 / denom as f64
    }
}

fn check_lengths(predictions: &[Label], truth: &[Label]) -> Result<(), EvalError> {
    if predictions.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predictions.len(),
            truth: truth.len(),
        });
    }
    if truth.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(())
}

pub fn accuracy(predictions: &[Label], truth: &[Label]) -> Result<f64, EvalError> {
    check_lengths(predictions, truth)?;
    let hits = predictions.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

pub fn average_f_measure(predictions: &[Label], truth: &[Label]) -> Result<f64, EvalError> {
    Ok(ConfusionMatrix::from_labels(predictions, truth)?.average_f_measure())
}

/// One evaluated configuration. Missing metrics mark a row whose run failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub dataset: String,
    pub method: Reduction,
    pub classifier: ClassifierKind,
    pub k: Option<f64>,
    pub lambda: Option<f64>,
    pub accuracy: Option<f64>,
    pub avg_fm: Option<f64>,
    pub initial_features: usize,
    pub selected_features: Option<usize>,
    pub seed: u64,
    pub wall_time_s: f64,
}

impl RunReport {
    pub fn is_available(&self) -> bool {
        self.accuracy.is_some()
    }

    fn to_record(&self) -> [String; 11] {
        [
            self.dataset.clone(),
            self.method.to_string(),
            self.classifier.to_string(),
            opt_real(self.k, ""),
            opt_real(self.lambda, ""),
            opt_real(self.accuracy, NOT_AVAILABLE),
            opt_real(self.avg_fm, NOT_AVAILABLE),
            self.initial_features.to_string(),
            self.selected_features
                .map_or_else(|| NOT_AVAILABLE.to_string(), |n| n.to_string()),
            self.seed.to_string(),
            real(self.wall_time_s),
        ]
    }

    fn from_record(record: &csv::StringRecord, line: usize) -> Result<Self, EvalError> {
        if record.len() != REPORT_HEADER.len() {
            return Err(EvalError::Columns {
                line,
                expected: REPORT_HEADER.len(),
                found: record.len(),
            });
        }
        let field = |i: usize| &record[i];
        let bad = |i: usize| EvalError::Parse {
            line,
            column: REPORT_HEADER[i],
            value: record[i].to_string(),
        };
        let parse_opt_f64 = |i: usize| -> Result<Option<f64>, EvalError> {
            match field(i) {
                "" | NOT_AVAILABLE => Ok(None),
                s => s.parse().map(Some).map_err(|_| bad(i)),
            }
        };
        Ok(RunReport {
            dataset: field(0).to_string(),
            method: field(1).parse().map_err(|_| bad(1))?,
            classifier: field(2).parse().map_err(|_| bad(2))?,
            k: parse_opt_f64(3)?,
            lambda: parse_opt_f64(4)?,
            accuracy: parse_opt_f64(5)?,
            avg_fm: parse_opt_f64(6)?,
            initial_features: field(7).parse().map_err(|_| bad(7))?,
            selected_features: match field(8) {
                NOT_AVAILABLE => None,
                s => Some(s.parse().map_err(|_| bad(8))?),
            },
            seed: field(9).parse().map_err(|_| bad(9))?,
            wall_time_s: field(10).parse().map_err(|_| bad(10))?,
        })
    }
}

fn real(x: f64) -> String {
    format!("{x:.4}")
}

fn opt_real(x: Option<f64>, missing: &str) -> String {
    x.map_or_else(|| missing.to_string(), real)
}

pub fn write_report_csv<W: Write>(reports: &[RunReport], out: W) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER)?;
    for r in reports {
        w.write_record(r.to_record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_report_csv(reports: &[RunReport], path: &Path) -> Result<(), EvalError> {
    write_report_csv(reports, File::create(path)?)
}

fn check_header(reader: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<(), EvalError> {
    let header = reader.headers()?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(EvalError::Header(header.iter().collect::<Vec<_>>().join(",")));
    }
    Ok(())
}

pub fn read_report_csv<R: Read>(input: R) -> Result<Vec<RunReport>, EvalError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    check_header(&mut reader, &REPORT_HEADER)?;
    reader
        .records()
        .enumerate()
        .map(|(i, rec)| RunReport::from_record(&rec?, i + 2))
        .collect()
}

pub fn parse_report_csv(path: &Path) -> Result<Vec<RunReport>, EvalError> {
    read_report_csv(File::open(path)?)
}

/// Writes one row per evaluation. `k` and `lambda` are the first two genome
/// coordinates; `lambda` is blank for one-dimensional genomes.
pub fn write_trace_csv<W: Write>(trace: &Trace, out: W) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in &trace.records {
        w.write_record([
            r.evaluation.to_string(),
            opt_real(r.genome.first().copied(), ""),
            opt_real(r.genome.get(1).copied(), ""),
            real(r.fitness),
            opt_real(r.accuracy, NOT_AVAILABLE),
            r.n_features.map_or_else(|| NOT_AVAILABLE.to_string(), |n| n.to_string()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_trace_csv(trace: &Trace, path: &Path) -> Result<(), EvalError> {
    write_trace_csv(trace, File::create(path)?)
}

/// Mean metrics of one (classifier, method) cell across datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub classifier: ClassifierKind,
    pub method: Reduction,
    pub mean_accuracy: f64,
    pub mean_avg_fm: f64,
    pub datasets: usize,
}

/// Averages accuracy and average F-measure per (classifier, method) over the
/// reports that carry metrics. Rows come out sorted by classifier, then method.
pub fn average_over_datasets(reports: &[RunReport]) -> Result<Vec<SummaryRow>, EvalError> {
    let mut groups: BTreeMap<(ClassifierKind, Reduction), (f64, f64, usize)> = BTreeMap::new();
    for r in reports {
        let (Some(acc), Some(fm)) = (r.accuracy, r.avg_fm) else {
            continue;
        };
        let g = groups.entry((r.classifier, r.method)).or_default();
        g.0 += acc;
        g.1 += fm;
        g.2 += 1;
    }
    if groups.is_empty() {
        return Err(EvalError::EmptyGroup);
    }
    Ok(groups
        .into_iter()
        .map(|((classifier, method), (acc, fm, n))| SummaryRow {
            classifier,
            method,
            mean_accuracy: acc / n as f64,
            mean_avg_fm: fm / n as f64,
            datasets: n,
        })
        .collect())
}

/// Summary table with metrics as percentages.
pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record([
            r.classifier.to_string(),
            r.method.to_string(),
            real(100.0 * r.mean_accuracy),
            real(100.0 * r.mean_avg_fm),
            r.datasets.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::TraceRecord;
    use crate::selector::Method;
    use proptest::prelude::*;
    use Label::{Negative as N, Positive as P};

    fn report(dataset: &str, method: Reduction, classifier: ClassifierKind, acc: f64) -> RunReport {
        RunReport {
            dataset: dataset.into(),
            method,
            classifier,
            k: Some(12.5),
            lambda: Some(0.25),
            accuracy: Some(acc),
            avg_fm: Some(acc),
            initial_features: 500,
            selected_features: Some(42),
            seed: 7,
            wall_time_s: 1.5,
        }
    }

    #[test]
    fn accuracy_values() {
        assert_eq!(accuracy(&[P, N], &[P, N]).unwrap(), 1.0);
        assert_eq!(accuracy(&[P, P], &[P, N]).unwrap(), 0.5);
        assert_eq!(accuracy(&[P, P, N, N], &[P, N, N, N]).unwrap(), 0.75);
    }

    #[test]
    fn accuracy_errors() {
        assert!(matches!(
            accuracy(&[P], &[P, N]),
            Err(EvalError::LengthMismatch { predictions: 1, truth: 2 })
        ));
        assert!(matches!(accuracy(&[], &[]), Err(EvalError::Empty)));
        assert!(matches!(average_f_measure(&[P, N], &[P]), Err(EvalError::LengthMismatch { .. })));
    }

    #[test]
    fn f_measure_values() {
        assert_eq!(average_f_measure(&[P, N, P], &[P, N, P]).unwrap(), 1.0);
        let all_pos = average_f_measure(&[P, P, P, P], &[P, P, N, N]).unwrap();
        assert!((all_pos - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(average_f_measure(&[N, N, P, P], &[P, P, N, N]).unwrap(), 0.0);
    }

    #[test]
    fn class_absent_everywhere_scores_zero() {
        let m = ConfusionMatrix::from_labels(&[P, P], &[P, P]).unwrap();
        assert_eq!(m.f1_positive(), 1.0);
        assert_eq!(m.f1_negative(), 0.0);
        assert_eq!(m.average_f_measure(), 0.5);
    }

    fn labels(bits: &[bool]) -> Vec<Label> {
        bits.iter().map(|&b| if b { P } else { N }).collect()
    }

    proptest! {
        #[test]
        fn metric_invariants(pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 1..60)) {
            let pred = labels(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
            let truth = labels(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
            let m = ConfusionMatrix::from_labels(&pred, &truth).unwrap();
            prop_assert_eq!(m.total(), pred.len());
            let acc = accuracy(&pred, &truth).unwrap();
            prop_assert_eq!(m.accuracy(), acc);

            let flip = |v: &[Label]| v.iter().map(|l| l.flip()).collect::<Vec<_>>();
            let (fp, ft) = (flip(&pred), flip(&truth));
            prop_assert_eq!(accuracy(&fp, &ft).unwrap(), acc);
            let fm = average_f_measure(&pred, &truth).unwrap();
            prop_assert!((average_f_measure(&fp, &ft).unwrap() - fm).abs() < 1e-15);

            prop_assert!((0.0..=1.0).contains(&fm));
            if fm == 1.0 {
                prop_assert_eq!(&pred, &truth);
            }
            let both_classes = truth.contains(&P) && truth.contains(&N);
            if pred == truth && both_classes {
                prop_assert_eq!(fm, 1.0);
            }
        }
    }

    #[test]
    fn report_csv_shapes() {
        let mut buf = Vec::new();
        write_report_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{}\n", REPORT_HEADER.join(",")));

        let mut buf = Vec::new();
        let r = report("d1", Reduction::Select(Method::SentiTpc), ClassifierKind::LinearSvm, 0.9125);
        write_report_csv(&[r], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1], "d1,sentitpc,svm,12.5000,0.2500,0.9125,0.9125,500,42,7,1.5000");
    }

    #[test]
    fn report_csv_round_trip_with_missing_values() {
        let mut failed = report("d 2, \"quoted\"", Reduction::None, ClassifierKind::MultinomialNb, 0.0);
        failed.k = None;
        failed.lambda = None;
        failed.accuracy = None;
        failed.avg_fm = None;
        failed.selected_features = None;
        let ok = report("d1", Reduction::Select(Method::Tpr), ClassifierKind::RandomForest, 0.8875);
        let reports = vec![failed, ok];
        let mut buf = Vec::new();
        write_report_csv(&reports, &mut buf).unwrap();
        assert_eq!(read_report_csv(buf.as_slice()).unwrap(), reports);
    }

    #[test]
    fn rejects_foreign_header() {
        let err = read_report_csv("a,b\n1,2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, EvalError::Header(_)));
        let bad = format!("{}\nd,none,svm,,,x,,1,1,0,0.0\n", REPORT_HEADER.join(","));
        let err = read_report_csv(bad.as_bytes()).unwrap_err();
        assert!(matches!(err, EvalError::Parse { line: 2, column: "accuracy", .. }), "{err}");
    }

    #[test]
    fn trace_csv_rows() {
        let trace = Trace {
            records: vec![
                TraceRecord {
                    evaluation: 1,
                    genome: vec![3.0, 0.125],
                    fitness: -0.875,
                    accuracy: Some(0.875),
                    n_features: Some(10),
                },
                TraceRecord {
                    evaluation: 2,
                    genome: vec![40.0],
                    fitness: 1.0,
                    accuracy: None,
                    n_features: Some(0),
                },
            ],
        };
        let mut buf = Vec::new();
        write_trace_csv(&trace, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "evaluation,k,lambda,fitness,accuracy,n_features\n\
             1,3.0000,0.1250,-0.8750,0.8750,10\n\
             2,40.0000,,1.0000,N/A,0\n"
        );
    }

    #[test]
    fn averages_two_datasets() {
        let senti = Reduction::Select(Method::SentiTpc);
        let reports = vec![
            report("1", senti, ClassifierKind::LinearSvm, 0.9050),
            report("2", senti, ClassifierKind::LinearSvm, 0.9285),
            report("1", Reduction::None, ClassifierKind::LinearSvm, 0.8),
        ];
        let rows = average_over_datasets(&reports).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].method, Reduction::None);
        assert_eq!(rows[0].mean_accuracy, 0.8);
        assert_eq!(rows[1].datasets, 2);
        assert!((rows[1].mean_accuracy - 0.91675).abs() < 1e-12);
    }

    #[test]
    fn averaging_skips_unavailable_rows() {
        let mut na = report("1", Reduction::None, ClassifierKind::MultinomialNb, 0.0);
        na.accuracy = None;
        na.avg_fm = None;
        assert!(matches!(average_over_datasets(&[na.clone()]), Err(EvalError::EmptyGroup)));
        assert!(matches!(average_over_datasets(&[]), Err(EvalError::EmptyGroup)));
        let v = report("2", Reduction::None, ClassifierKind::MultinomialNb, 0.7);
        let rows = average_over_datasets(&[na, v.clone(), v]).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].mean_accuracy, 0.7);
    }

    #[test]
    fn summary_renders_percentages() {
        let rows = vec![SummaryRow {
            classifier: ClassifierKind::LogisticRegression,
            method: Reduction::Select(Method::SentiTpr),
            mean_accuracy: 0.965,
            mean_avg_fm: 0.9649,
            datasets: 1,
        }];
        let mut buf = Vec::new();
        write_summary_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "lr,sentitpr,96.5000,96.4900,1");
    }
}
