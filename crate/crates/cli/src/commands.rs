use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::{info, warn};
use rayon::prelude::*;

use sentireduce::classifiers::{ClassifierKind, ClassifierSpec};
use sentireduce::corpus::{corpus_summary, load_directory_corpus, load_tsv_corpus, stratified_split, Corpus};
use sentireduce::eval::{self, RunReport};
use sentireduce::pipeline::{run_cell, run_evolve, run_select, CountsMode, PreparedData, Tuning};
use sentireduce::preprocess::{Lemmatizer, Preprocessor, StopList};
use sentireduce::selector::{compute_feature_stats, Method, Reduction, SelectionMask, SelectionSpec};

use crate::config::{CorpusFormat, Mode, Overrides, RunConfig};

pub fn load_corpus(config: &RunConfig) -> Result<Corpus> {
    let path = &config.corpus;
    let corpus = match config.format {
        CorpusFormat::Tsv => load_tsv_corpus(path),
        CorpusFormat::Dirs => load_directory_corpus(path),
    };
    corpus.with_context(|| format!("cannot load corpus {}", path.display()))
}

fn preprocessor(config: &RunConfig) -> Result<Preprocessor> {
    let stop = match &config.stopwords {
        Some(path) => {
            StopList::load(path).with_context(|| format!("cannot load stop words {}", path.display()))?
        }
        None => StopList::empty(),
    };
    let lemmatizer = Lemmatizer::load(&config.lemmatizer).context("cannot set up lemmatizer")?;
    Ok(Preprocessor::new(stop, lemmatizer))
}

fn prepare(config: &RunConfig) -> Result<PreparedData> {
    let corpus = load_corpus(config)?;
    let data = PreparedData::new(
        &corpus,
        &preprocessor(config)?,
        config.split_ratio,
        config.seed,
        config.counts,
    )
    .with_context(|| format!("cannot prepare {}", config.corpus.display()))?;
    info!(
        "{}: {} documents, {} features, {} train / {} test",
        data.name,
        corpus.len(),
        data.n_features(),
        data.split.train_ids.len(),
        data.split.test_ids.len()
    );
    Ok(data)
}

fn out_file(dir: &Path, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
    Ok(dir.join(name))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot write {}", path.display()))?,
    ))
}

fn finish_reports(config: &RunConfig, reports: &mut [RunReport]) {
    if !config.wall_time {
        for r in reports.iter_mut() {
            r.wall_time_s = 0.0;
        }
    }
}

fn write_reports(config: &RunConfig, reports: &mut [RunReport]) -> Result<PathBuf> {
    finish_reports(config, reports);
    let path = out_file(&config.out, "report.csv")?;
    eval::emit_report_csv(reports, &path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| format!("{v:.4}"))
}

/// `features.csv`: per-feature counts, the four weights, and the configured
/// method's weight and keep decision.
pub fn inspect(flags: &Overrides) -> Result<()> {
    let config = RunConfig::resolve(flags)?;
    let corpus = load_corpus(&config)?;
    let method = config.method.method();
    let lambda = match (config.lambda, method) {
        (Some(l), _) => Some(l),
        (None, Some(m)) if m.uses_lambda() => bail!("method {m} in manual mode needs λ (--lambda)"),
        (None, _) => None,
    };
    let (vocab, matrix) = preprocessor(&config)?.fit_transform(&corpus)?;
    let stats = match config.counts {
        CountsMode::Full => compute_feature_stats(&matrix)?,
        CountsMode::TrainOnly => {
            let split = stratified_split(&corpus, config.split_ratio, config.seed)?;
            compute_feature_stats(&matrix.select_rows(&split.train_ids))?
        }
    };
    let summary = corpus_summary(&corpus, &vocab);
    println!(
        "{}: {} reviews ({} positive, {} negative), {} features",
        corpus.name(),
        summary.num_reviews,
        summary.num_positive,
        summary.num_negative,
        summary.num_features
    );

    let path = out_file(&config.out, "features.csv")?;
    let mut w = create(&path)?;
    writeln!(w, "feature,term,tp,tn,tpc,tpr,sentitpc,sentitpr,weight,kept")?;
    for i in 0..stats.n_features() {
        let (tp, tn) = (stats.tp[i], stats.tn[i]);
        let senti = |m: Method| lambda.map(|l| m.weight(tp, tn, l));
        let weight = method.map(|m| m.weight(tp, tn, lambda.unwrap_or(0.0)));
        let kept = match (weight, config.k) {
            (Some(w), Some(k)) => u8::from(w >= k).to_string(),
            _ => String::new(),
        };
        writeln!(
            w,
            "{i},{},{tp},{tn},{},{},{},{},{},{kept}",
            vocab.term(i),
            fmt_opt(Some(Method::Tpc.weight(tp, tn, 0.0))),
            fmt_opt(Some(Method::Tpr.weight(tp, tn, 0.0))),
            fmt_opt(senti(Method::SentiTpc)),
            fmt_opt(senti(Method::SentiTpr)),
            fmt_opt(weight),
        )?;
    }
    w.flush()?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_selection(config: &RunConfig, data: &PreparedData, mask: &SelectionMask) -> Result<()> {
    let path = out_file(&config.out, "selected_features.csv")?;
    let mut w = create(&path)?;
    writeln!(w, "feature,term,tp,tn,weight")?;
    let kept = mask.kept_indices();
    for &i in &kept {
        writeln!(
            w,
            "{i},{},{},{},{:.4}",
            data.vocab.term(i),
            data.stats.tp[i],
            data.stats.tn[i],
            mask.weights[i]
        )?;
    }
    w.flush()?;

    let path = out_file(&config.out, "reduced_matrix.csv")?;
    let mut w = create(&path)?;
    write!(w, "doc,label,split")?;
    for &i in &kept {
        write!(w, ",{}", data.vocab.term(i))?;
    }
    writeln!(w)?;
    let reduced = data.matrix.select_columns(&kept);
    for (r, label) in reduced.labels().iter().enumerate() {
        let part = if data.split.test_ids.binary_search(&r).is_ok() { "test" } else { "train" };
        write!(w, "{r},{},{part}", label.as_token())?;
        for c in 0..reduced.cols() {
            write!(w, ",{}", u8::from(reduced.get(r, c)))?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

fn print_report(r: &RunReport) {
    let metric = |x: Option<f64>| x.map_or_else(|| eval::NOT_AVAILABLE.to_string(), |v| format!("{:.2}%", 100.0 * v));
    println!(
        "{} {} {}: accuracy {}, avg F-measure {}, features {}/{}",
        r.dataset,
        r.classifier,
        r.method,
        metric(r.accuracy),
        metric(r.avg_fm),
        r.selected_features.map_or_else(|| eval::NOT_AVAILABLE.to_string(), |n| n.to_string()),
        r.initial_features
    );
}

/// One run at fixed `(k, λ)`.
pub fn select(flags: &Overrides) -> Result<()> {
    let config = RunConfig::resolve(flags)?;
    let (k, lambda) = config.manual_params()?;
    let data = prepare(&config)?;
    let classifier = ClassifierSpec::new(config.classifier, config.seed);
    let report = run_select(&data, config.method, k, lambda, &classifier)?;
    let mask = match config.method {
        Reduction::Select(m) => data.mask(&SelectionSpec::new(m, k, lambda)?),
        Reduction::None => SelectionMask {
            keep: vec![true; data.n_features()],
            weights: vec![0.0; data.n_features()],
        },
    };
    if mask.is_empty_selection() {
        warn!("k = {k} is above every feature weight; no features selected, reporting penalty metrics");
    }
    write_selection(&config, &data, &mask)?;
    let mut reports = vec![report];
    let path = write_reports(&config, &mut reports)?;
    print_report(&reports[0]);
    println!("wrote {}", path.display());
    Ok(())
}

/// Differential-evolution tuning of `(k, λ)`.
pub fn evolve(flags: &Overrides) -> Result<()> {
    let config = RunConfig::resolve(flags)?;
    let Reduction::Select(method) = config.method else {
        bail!("evolve needs a selection method (tpc, tpr, sentitpc or sentitpr), not `none`");
    };
    let data = prepare(&config)?;
    let classifier = ClassifierSpec::new(config.classifier, config.seed);
    let bounds = config.bounds(method)?;
    let outcome = run_evolve(&data, method, &classifier, &bounds, &config.de)?;
    if outcome.mask.is_empty_selection() {
        warn!("best genome selects no features");
    }
    let trace_path = out_file(&config.out, "trace.csv")?;
    eval::emit_trace_csv(&outcome.trace, &trace_path)
        .with_context(|| format!("cannot write {}", trace_path.display()))?;
    write_selection(&config, &data, &outcome.mask)?;
    let mut reports = vec![outcome.report];
    let path = write_reports(&config, &mut reports)?;
    println!(
        "best k = {:.4}, lambda = {:.4}, fitness = {:.4} after {} evaluations",
        outcome.genome[0],
        outcome.genome[1],
        outcome.fitness,
        outcome.trace.len()
    );
    print_report(&reports[0]);
    println!("wrote {} and {}", path.display(), trace_path.display());
    Ok(())
}

fn list<T>(value: &Option<String>, all: &[T], what: &str) -> Result<Vec<T>>
where
    T: std::str::FromStr<Err = String> + Copy + Ord,
{
    let Some(value) = value else {
        return Ok(all.to_vec());
    };
    let mut items = value
        .split(',')
        .map(|s| s.trim().parse::<T>().map_err(|e| anyhow::anyhow!("invalid {what}: {e}")))
        .collect::<Result<Vec<T>>>()?;
    items.sort();
    items.dedup();
    Ok(items)
}

/// Every (dataset, classifier, method) cell. Rows are ordered by dataset
/// (as given), then classifier, then method.
pub fn compare(flags: &Overrides) -> Result<()> {
    let methods = list(&flags.method, &Reduction::ALL, "method")?;
    let classifiers = list(&flags.classifier, &ClassifierKind::ALL, "classifier")?;
    let mut base = flags.clone();
    base.method = None;
    base.classifier = None;
    let configs = RunConfig::resolve_all(&base)?;

    let mut reports = Vec::new();
    for config in &configs {
        let data = prepare(config)?;
        let tuning = match config.mode {
            Mode::Manual => {
                let k = config.k.context("manual mode needs a threshold (--k)")?;
                let lambda = match config.lambda {
                    Some(l) => l,
                    None if methods.iter().any(|m| m.method().is_some_and(Method::uses_lambda)) => {
                        bail!("manual mode with sentitpc/sentitpr needs λ (--lambda)")
                    }
                    None => 0.0,
                };
                Tuning::Manual { k, lambda }
            }
            Mode::Evolve => Tuning::Evolve {
                config: config.de.clone(),
                k_bounds: config.k_bounds,
                lambda_bounds: config.lambda_bounds,
            },
        };
        let cells: Vec<(ClassifierKind, Reduction)> = classifiers
            .iter()
            .flat_map(|&c| methods.iter().map(move |&m| (c, m)))
            .collect();
        let mut rows: Vec<RunReport> = cells
            .par_iter()
            .map(|&(kind, method)| run_cell(&data, method, &ClassifierSpec::new(kind, config.seed), &tuning))
            .collect();
        finish_reports(config, &mut rows);
        for r in &rows {
            print_report(r);
        }
        reports.extend(rows);
    }
    let out = &configs[0].out;
    let path = out_file(out, "report.csv")?;
    eval::emit_report_csv(&reports, &path).with_context(|| format!("cannot write {}", path.display()))?;
    let unavailable = reports.iter().filter(|r| !r.is_available()).count();
    if unavailable > 0 {
        warn!("{unavailable} of {} rows have no result (N/A)", reports.len());
    }
    println!("wrote {} ({} rows)", path.display(), reports.len());
    Ok(())
}

/// Mean metrics per (classifier, method) over every row of the given reports.
pub fn summarize(reports: &[PathBuf], out: Option<&Path>) -> Result<()> {
    if reports.is_empty() {
        bail!("no report files given");
    }
    let mut rows = Vec::new();
    for path in reports {
        rows.extend(eval::parse_report_csv(path).with_context(|| format!("cannot read report {}", path.display()))?);
    }
    let summary = eval::average_over_datasets(&rows)?;
    let mut text = Vec::new();
    eval::write_summary_csv(&summary, &mut text)?;
    match out {
        Some(dir) => {
            let path = out_file(dir, "summary.csv")?;
            fs::write(&path, &text).with_context(|| format!("cannot write {}", path.display()))?;
            println!("wrote {}", path.display());
        }
        None => print!("{}", String::from_utf8(text)?),
    }
    Ok(())
}
