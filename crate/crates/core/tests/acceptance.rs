//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and exits
//! with a failure status if any criterion fails.
//!
//! Criterion 7 needs a real 1,000-review corpus: set `SENTIREDUCE_DATASET` to
//! a TSV file or a `pos/`+`neg/` directory to run it.

use std::convert::Infallible;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sentireduce::classifiers::{
    fit, predict, predict_proba, ClassifierKind, ClassifierSpec, LogisticObjective, Targets,
};
use sentireduce::corpus::{load_directory_corpus, load_tsv_corpus, Label};
use sentireduce::eval::{read_report_csv, write_report_csv, RunReport};
use sentireduce::evolve::{optimize, Bounds, DeConfig, Evaluation};
use sentireduce::matrix::DenseMatrix;
use sentireduce::pipeline::{default_bounds, run_evolve, run_select, CountsMode, PreparedData};
use sentireduce::preprocess::{Preprocessor, PresenceMatrix};
use sentireduce::selector::{
    compute_feature_stats, select_features, weight_sentitpc, weight_sentitpr, FeatureStats, Method, Reduction,
    SelectionSpec,
};
use sentireduce::synthetic::{planted_corpus, PlantedSpec};

enum Verdict {
    Pass,
    Fail,
    Skip,
}

struct Outcome {
    verdict: Verdict,
    detail: String,
}

impl Outcome {
    fn check(ok: bool, detail: String) -> Self {
        Outcome {
            verdict: if ok { Verdict::Pass } else { Verdict::Fail },
            detail,
        }
    }
}

fn labels_from(bits: impl Iterator<Item = bool>) -> Vec<Label> {
    bits.map(|b| if b { Label::Positive } else { Label::Negative }).collect()
}

/// Random presence matrix with both classes present.
fn random_presence(rng: &mut ChaCha8Rng) -> (Vec<Vec<u8>>, Vec<Label>) {
    let docs = rng.gen_range(2..=20);
    let features = rng.gen_range(1..=30);
    let density = rng.gen_range(0.05..0.9);
    let rows: Vec<Vec<u8>> = (0..docs)
        .map(|_| (0..features).map(|_| u8::from(rng.gen_bool(density))).collect())
        .collect();
    let mut labels = labels_from((0..docs).map(|_| rng.gen_bool(0.5)));
    labels[0] = Label::Positive;
    labels[1] = Label::Negative;
    (rows, labels)
}

/// Straight transcription of the four weight definitions, counting presence
/// by scanning the dense rows.
fn brute_force(rows: &[Vec<u8>], labels: &[Label], method: Method, k: f64, lambda: f64) -> (Vec<f64>, Vec<bool>) {
    let features = rows[0].len();
    let mut weights = Vec::with_capacity(features);
    for f in 0..features {
        let mut tp: f64 = 0.0;
        let mut tn: f64 = 0.0;
        for (row, label) in rows.iter().zip(labels) {
            if row[f] == 1 {
                match label {
                    Label::Positive => tp += 1.0,
                    Label::Negative => tn += 1.0,
                }
            }
        }
        let ratio = if tp + tn > 0.0 { 100.0 * (tp - tn) / (tp + tn) } else { 0.0 };
        let w: f64 = match method {
            Method::Tpc => (tp - tn).abs(),
            Method::Tpr => ratio.abs(),
            Method::SentiTpc => ((tp - tn) - lambda * (tp + tn)).abs(),
            Method::SentiTpr if tp + tn == 0.0 => 0.0,
            Method::SentiTpr => (ratio - lambda * (tp + tn)).abs(),
        };
        weights.push(w);
    }
    let keep = weights.iter().map(|&w| w >= k).collect();
    (weights, keep)
}

fn random_spec(rng: &mut ChaCha8Rng) -> (Method, f64, f64) {
    let method = Method::ALL[rng.gen_range(0..4)];
    let k = if rng.gen_bool(0.5) {
        rng.gen_range(0..=25) as f64
    } else {
        rng.gen_range(0.0..60.0)
    };
    let lambda = if rng.gen_bool(0.2) {
        [0.1, 0.25, 0.5][rng.gen_range(0..3)]
    } else {
        rng.gen_range(0.0..1.0)
    };
    (method, k, lambda)
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let matrices: Vec<_> = (0..200).map(|_| random_presence(&mut rng)).collect();
    let specs: Vec<_> = (0..100).map(|_| random_spec(&mut rng)).collect();
    let mut mismatches = 0;
    let mut comparisons = 0;
    for (rows, labels) in &matrices {
        let matrix = PresenceMatrix::from_dense(rows, labels.clone());
        let stats = compute_feature_stats(&matrix).expect("both classes present");
        for &(method, k, lambda) in &specs {
            let mask = select_features(&stats, &SelectionSpec::new(method, k, lambda).unwrap());
            let (weights, keep) = brute_force(rows, labels, method, k, lambda);
            comparisons += 1;
            if mask.keep != keep || mask.weights != weights {
                mismatches += 1;
            }
        }
    }
    let elapsed = started.elapsed();
    Outcome::check(
        mismatches == 0 && elapsed < Duration::from_secs(5),
        format!("{mismatches} mismatches in {comparisons} matrix×spec pairs, {elapsed:.2?} (limit 5 s)"),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut violations = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..40);
        let stats = FeatureStats {
            tp: (0..n).map(|_| rng.gen_range(0..200)).collect(),
            tn: (0..n).map(|_| rng.gen_range(0..200)).collect(),
        };
        let lambda = rng.gen_range(0.0..1.0);
        let k1 = rng.gen_range(0.0..100.0);
        let k2 = k1 + if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.0..100.0) };
        for method in Method::ALL {
            let low = select_features(&stats, &SelectionSpec::new(method, k1, lambda).unwrap());
            let high = select_features(&stats, &SelectionSpec::new(method, k2, lambda).unwrap());
            violations += low.keep.iter().zip(&high.keep).filter(|&(&l, &h)| h && !l).count();
        }
    }
    Outcome::check(
        violations == 0,
        format!("{violations} violations over 1000 stats/λ pairs × 4 methods"),
    )
}

fn criterion_3() -> Outcome {
    let tpc = weight_sentitpc(30, 10, 0.1);
    let tpr = weight_sentitpr(30, 10, 0.1);
    Outcome::check(
        (tpc - 16.0).abs() <= 1e-12 && (tpr - 46.0).abs() <= 1e-12,
        format!("SentiTPC(30,10,0.1) = {tpc}, SentiTPR(30,10,0.1) = {tpr}"),
    )
}

fn criterion_4() -> Outcome {
    let started = Instant::now();
    let bounds = Bounds::from_pairs(&[(-5.0, 5.0), (-5.0, 5.0)]).unwrap();
    let sphere = |x: &[f64]| -> Result<Evaluation, Infallible> { Ok(x.iter().map(|v| v * v).sum::<f64>().into()) };
    let mut converged = 0;
    let mut monotone = true;
    for seed in 0..30 {
        let config = DeConfig {
            generations: 200,
            seed,
            ..DeConfig::default()
        };
        let result = optimize(sphere, &bounds, &config).unwrap();
        if result.best.fitness.unwrap() < 1e-6 {
            converged += 1;
        }
        let best = result.trace.best_so_far();
        monotone &= best.windows(2).all(|w| w[1] <= w[0]);
    }
    let elapsed = started.elapsed();
    Outcome::check(
        converged >= 29 && monotone && elapsed < Duration::from_secs(10),
        format!(
            "{converged}/30 seeds below 1e-6, best-so-far monotone: {monotone}, {elapsed:.2?} (limit 10 s)"
        ),
    )
}

fn random_dense(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.gen_range(0.0..1.0)).collect())
}

/// Points in the unit cube labeled by a random hyperplane, keeping only
/// points at least `margin` away from it.
fn separable(rng: &mut ChaCha8Rng, n: usize, d: usize, margin: f64) -> (DenseMatrix, Vec<Label>) {
    let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    let center: f64 = w.iter().map(|v| v * 0.5).sum();
    let mut data = Vec::new();
    let mut labels = Vec::new();
    while labels.len() < n {
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0)).collect();
        let s = (x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() - center) / norm;
        if s.abs() >= margin {
            labels.push(if s > 0.0 { Label::Positive } else { Label::Negative });
            data.extend(x);
        }
    }
    if labels.iter().all(|&l| l == labels[0]) {
        return separable(rng, n, d, margin);
    }
    (DenseMatrix::from_vec(n, d, data), labels)
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut notes = Vec::new();

    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let (n, d) = (rng.gen_range(5..40), rng.gen_range(1..12));
        let x = random_dense(&mut rng, n, d);
        let mut y = labels_from((0..n).map(|_| rng.gen_bool(0.5)));
        y[0] = Label::Positive;
        y[1] = Label::Negative;
        let objective = LogisticObjective::new(&x, &Targets::new(&y).unwrap(), rng.gen_range(0.1..10.0));
        let theta: Vec<f64> = (0..objective.dim()).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let analytic = objective.gradient(&theta);
        let numeric: Vec<f64> = (0..theta.len())
            .map(|i| {
                let mut plus = theta.clone();
                let mut minus = theta.clone();
                plus[i] += h;
                minus[i] -= h;
                (objective.value(&plus) - objective.value(&minus)) / (2.0 * h)
            })
            .collect();
        let diff = analytic.iter().zip(&numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = analytic
            .iter()
            .map(|a| a * a)
            .sum::<f64>()
            .sqrt()
            .max(numeric.iter().map(|a| a * a).sum::<f64>().sqrt())
            .max(1e-12);
        worst = worst.max(diff / scale);
    }
    let gradient_ok = worst < 1e-4;
    notes.push(format!("LR gradient worst relative error {worst:.2e}"));

    let mut nb_err: f64 = 0.0;
    for _ in 0..20 {
        let (n, d) = (rng.gen_range(4..30), rng.gen_range(1..20));
        let x = random_dense(&mut rng, n, d);
        let mut y = labels_from((0..n).map(|_| rng.gen_bool(0.5)));
        y[0] = Label::Positive;
        y[1] = Label::Negative;
        let model = fit(&ClassifierSpec::new(ClassifierKind::MultinomialNb, 0), &x, &y).unwrap();
        let test = random_dense(&mut rng, 10, d);
        for p in predict_proba(&model, &test).unwrap() {
            nb_err = nb_err.max((p[0] + p[1] - 1.0).abs());
        }
    }
    let nb_ok = nb_err <= 1e-9;
    notes.push(format!("NB max |ΣP − 1| {nb_err:.1e}"));

    let mut separable_ok = true;
    for set in 0..10 {
        let (x, y) = separable(&mut rng, 40, 2 + set % 4, 0.2);
        for kind in [ClassifierKind::LinearSvm, ClassifierKind::LogisticRegression] {
            let model = fit(&ClassifierSpec::new(kind, set as u64), &x, &y).unwrap();
            let hits = predict(&model, &x).unwrap().iter().zip(&y).filter(|(p, t)| p == t).count();
            if hits != y.len() {
                separable_ok = false;
                notes.push(format!("{kind} {hits}/{} on toy set {set}", y.len()));
            }
        }
    }
    notes.push(format!("SVM/LR separable train accuracy 100%: {separable_ok}"));

    let mut deterministic = true;
    let x = random_dense(&mut rng, 30, 6);
    let y = labels_from((0..30).map(|i| i % 3 == 0));
    for kind in ClassifierKind::ALL {
        let spec = ClassifierSpec::new(kind, 17);
        let a = fit(&spec, &x, &y).unwrap();
        let b = fit(&spec, &x, &y).unwrap();
        deterministic &= a == b && predict(&a, &x).unwrap() == predict(&b, &x).unwrap();
    }
    notes.push(format!("bit-deterministic fits: {deterministic}"));

    Outcome::check(gradient_ok && nb_ok && separable_ok && deterministic, notes.join("; "))
}

fn criterion_6() -> Outcome {
    let started = Instant::now();
    let planted = planted_corpus(&PlantedSpec::default()).unwrap();
    let data = PreparedData::new(&planted.corpus, &Preprocessor::default(), 0.2, 0, CountsMode::Full).unwrap();
    let classifier = ClassifierSpec::new(ClassifierKind::LogisticRegression, 0);
    let baseline = run_select(&data, Reduction::None, 0.0, 0.0, &classifier).unwrap();
    let config = DeConfig {
        generations: 50,
        seed: 0,
        ..DeConfig::default()
    };
    let outcome = run_evolve(&data, Method::SentiTpc, &classifier, &default_bounds(Method::SentiTpc), &config).unwrap();
    let kept = outcome.mask.kept_indices();
    let planted_kept = kept.iter().filter(|&&c| planted.is_planted(data.vocab.term(c))).count();
    let noise_kept = kept.len() - planted_kept;
    let retained = planted_kept as f64 / planted.planted.len() as f64;
    let pruned = 1.0 - noise_kept as f64 / planted.noise.len() as f64;
    let accuracy = outcome.report.accuracy.unwrap_or(0.0);
    let base = baseline.accuracy.unwrap();
    let elapsed = started.elapsed();
    Outcome::check(
        retained >= 0.9 && pruned >= 0.8 && accuracy >= 0.95 && accuracy >= base && elapsed < Duration::from_secs(120),
        format!(
            "LR, k = {:.3}, λ = {:.3}: planted retained {:.1}%, noise pruned {:.1}%, test accuracy {accuracy:.4} vs baseline {base:.4}, {elapsed:.2?} (limit 120 s)",
            outcome.genome[0],
            outcome.genome[1],
            100.0 * retained,
            100.0 * pruned
        ),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn criterion_7() -> Outcome {
    let Ok(path) = std::env::var("SENTIREDUCE_DATASET") else {
        return Outcome {
            verdict: Verdict::Skip,
            detail: "SENTIREDUCE_DATASET not set (needs a 1,000-review corpus)".into(),
        };
    };
    let started = Instant::now();
    let path = Path::new(&path);
    let corpus = if path.is_dir() {
        load_directory_corpus(path)
    } else {
        load_tsv_corpus(path)
    };
    let corpus = match corpus {
        Ok(c) => c,
        Err(err) => return Outcome::check(false, format!("cannot load {}: {err}", path.display())),
    };
    let mut gains = Vec::new();
    for seed in 0..5 {
        let data = PreparedData::new(&corpus, &Preprocessor::default(), 0.2, seed, CountsMode::Full).unwrap();
        let classifier = ClassifierSpec::new(ClassifierKind::LogisticRegression, seed);
        let base = run_select(&data, Reduction::None, 0.0, 0.0, &classifier).unwrap();
        let config = DeConfig {
            generations: 100,
            seed,
            ..DeConfig::default()
        };
        let evolved = run_evolve(&data, Method::SentiTpr, &classifier, &default_bounds(Method::SentiTpr), &config).unwrap();
        gains.push(100.0 * (evolved.report.accuracy.unwrap_or(0.0) - base.accuracy.unwrap()));
    }
    let gain = median(gains.clone());
    let elapsed = started.elapsed();
    Outcome::check(
        gain >= 3.0 && elapsed < Duration::from_secs(1800),
        format!("median gain {gain:.2} pp over seeds 0–4 ({gains:.2?}), {elapsed:.2?} (limit 30 min)"),
    )
}

fn random_report(rng: &mut ChaCha8Rng) -> RunReport {
    let initial = rng.gen_range(1..5000);
    let method = Reduction::ALL[rng.gen_range(0..5)];
    RunReport {
        dataset: format!("set {}, \"v{}\"", rng.gen_range(0..9), rng.gen_range(0..9)),
        method,
        classifier: ClassifierKind::ALL[rng.gen_range(0..4)],
        k: method.method().map(|_| rng.gen_range(1.0..50.0)),
        lambda: method.method().filter(|m| m.uses_lambda()).map(|_| rng.gen_range(0.1..0.5)),
        accuracy: rng.gen_bool(0.9).then(|| rng.gen_range(0.0..=1.0)),
        avg_fm: rng.gen_bool(0.9).then(|| rng.gen_range(0.0..=1.0)),
        initial_features: initial,
        selected_features: rng.gen_bool(0.9).then(|| rng.gen_range(0..=initial)),
        seed: rng.gen(),
        wall_time_s: rng.gen_range(0.0..1000.0),
    }
}

fn close(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(a), Some(b)) => (a - b).abs() <= 5e-5 + 1e-12,
        _ => false,
    }
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut violations = 0;
    let mut runs = 0;
    for seed in 0..3 {
        let planted = planted_corpus(&PlantedSpec {
            docs_per_class: 40,
            noise_terms: 60,
            noise_rate: 0.2,
            seed,
            ..PlantedSpec::default()
        })
        .unwrap();
        let data = PreparedData::new(&planted.corpus, &Preprocessor::default(), 0.2, seed, CountsMode::Full).unwrap();
        let classifier = ClassifierSpec::new(ClassifierKind::MultinomialNb, seed);
        for _ in 0..40 {
            let method = Method::ALL[rng.gen_range(0..4)];
            let k = rng.gen_range(1.0..60.0);
            let lambda = rng.gen_range(0.1..0.5);
            let report = run_select(&data, Reduction::Select(method), k, lambda, &classifier).unwrap();
            let mask = data.mask(&SelectionSpec::new(method, k, lambda).unwrap());
            let below = mask.weights.iter().any(|&w| w < k);
            let selected = report.selected_features.unwrap();
            runs += 1;
            if selected > report.initial_features || (below && selected >= report.initial_features) {
                violations += 1;
            }
        }
    }

    let reports: Vec<RunReport> = (0..300).map(|_| random_report(&mut rng)).collect();
    let mut first = Vec::new();
    write_report_csv(&reports, &mut first).unwrap();
    let parsed = read_report_csv(first.as_slice()).unwrap();
    let mut second = Vec::new();
    write_report_csv(&parsed, &mut second).unwrap();
    let fields_ok = parsed.len() == reports.len()
        && parsed.iter().zip(&reports).all(|(p, r)| {
            p.dataset == r.dataset
                && p.method == r.method
                && p.classifier == r.classifier
                && p.initial_features == r.initial_features
                && p.selected_features == r.selected_features
                && p.seed == r.seed
                && close(p.k, r.k)
                && close(p.lambda, r.lambda)
                && close(p.accuracy, r.accuracy)
                && close(p.avg_fm, r.avg_fm)
                && close(Some(p.wall_time_s), Some(r.wall_time_s))
        });
    let bytes_ok = first == second;
    Outcome::check(
        violations == 0 && fields_ok && bytes_ok,
        format!(
            "{violations} reduction violations in {runs} runs; CSV round trip of {} reports: fields {fields_ok}, bytes {bytes_ok}",
            reports.len()
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("selector matches brute-force oracle", criterion_1),
        ("threshold monotonicity", criterion_2),
        ("weight spot values", criterion_3),
        ("DE sphere convergence", criterion_4),
        ("classifier checks", criterion_5),
        ("synthetic end-to-end evolve", criterion_6),
        ("directional reproduction on a real corpus", criterion_7),
        ("feature-reduction reporting", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = run();
        let tag = match outcome.verdict {
            Verdict::Pass => "PASS",
            Verdict::Skip => "SKIP",
            Verdict::Fail => {
                failed += 1;
                "FAIL"
            }
        };
        println!("{tag} criterion {}: {name} | {}", i + 1, outcome.detail);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
