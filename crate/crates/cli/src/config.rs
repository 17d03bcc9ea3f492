//! Run configuration: defaults, overridden by a TOML file, overridden by flags.
//!
//! ```toml
//! [corpus]
//! path = "reviews.tsv"
//! format = "tsv"            # or "dirs"
//!
//! [preprocess]
//! stopwords = "stop.txt"
//! lemmatizer = "identity"   # "en-rules", "dict:<path>"
//!
//! [selection]
//! method = "sentitpc"
//! k = 12.0
//! lambda = 0.2
//! counts = "full"           # or "train-only"
//! mode = "evolve"           # or "manual"; used by `compare`
//!
//! [classifier]
//! kind = "lr"
//!
//! [split]
//! ratio = 0.2
//! seed = 0
//!
//! [evolve]
//! generations = 100
//! pop_size = 15
//! cr = 0.7
//! f_range = [0.5, 1.0]
//! strategy = "best1bin"     # or "rand1bin"
//! updating = "immediate"    # or "deferred"
//! k_bounds = [1.0, 30.0]    # default depends on the method
//! lambda_bounds = [0.1, 0.5]
//!
//! [output]
//! dir = "out"
//! wall_time = false
//! ```
//!
//! Relative paths in a config file are resolved against the file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use sentireduce::classifiers::ClassifierKind;
use sentireduce::evolve::{Bounds, DeConfig, Strategy, Updating};
use sentireduce::pipeline::CountsMode;
use sentireduce::preprocess::LemmatizerSpec;
use sentireduce::selector::{Method, Reduction, LAMBDA_BOUNDS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Tsv,
    Dirs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Manual,
    Evolve,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub corpus: CorpusSection,
    #[serde(default)]
    pub preprocess: PreprocessSection,
    #[serde(default)]
    pub selection: SelectionSection,
    #[serde(default)]
    pub classifier: ClassifierSection,
    #[serde(default)]
    pub split: SplitSection,
    #[serde(default)]
    pub evolve: EvolveSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSection {
    pub path: Option<PathBuf>,
    pub format: Option<CorpusFormat>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessSection {
    pub stopwords: Option<PathBuf>,
    pub lemmatizer: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionSection {
    pub method: Option<String>,
    pub k: Option<f64>,
    pub lambda: Option<f64>,
    pub counts: Option<String>,
    pub mode: Option<Mode>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierSection {
    pub kind: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSection {
    pub ratio: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveSection {
    pub generations: Option<usize>,
    pub pop_size: Option<usize>,
    pub cr: Option<f64>,
    pub f_range: Option<(f64, f64)>,
    pub strategy: Option<String>,
    pub updating: Option<String>,
    pub k_bounds: Option<(f64, f64)>,
    pub lambda_bounds: Option<(f64, f64)>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub wall_time: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let mut config: FileConfig =
            toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut Option<PathBuf>| {
            if let Some(p) = p {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        };
        rebase(&mut config.corpus.path);
        rebase(&mut config.preprocess.stopwords);
        rebase(&mut config.output.dir);
        if let Some(lemma) = &mut config.preprocess.lemmatizer {
            if let Some(dict) = lemma.strip_prefix("dict:") {
                let dict = Path::new(dict);
                if dict.is_relative() {
                    *lemma = format!("dict:{}", base.join(dict).display());
                }
            }
        }
        Ok(config)
    }
}

/// Command-line values that override the file. `None` leaves the file value.
#[derive(Debug, Default, Clone, clap::Args)]
pub struct Overrides {
    /// TOML run configuration (repeatable for `compare`)
    #[arg(long)]
    pub config: Vec<PathBuf>,
    /// Labeled corpus: a TSV file or a directory with pos/ and neg/
    /// (repeatable for `compare`)
    #[arg(long)]
    pub corpus: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<CorpusFormat>,
    /// Stop-word list, one word per line
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    /// identity, en-rules or dict:<path>
    #[arg(long)]
    pub lemmatizer: Option<String>,
    /// none, tpc, tpr, sentitpc or sentitpr (`compare` takes a comma list)
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// svm, lr, nb or rf (`compare` takes a comma list)
    #[arg(long)]
    pub classifier: Option<String>,
    /// Test share of each class
    #[arg(long)]
    pub split: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub generations: Option<usize>,
    #[arg(long)]
    pub pop_size: Option<usize>,
    /// Crossover probability
    #[arg(long)]
    pub cr: Option<f64>,
    /// full or train-only
    #[arg(long)]
    pub counts: Option<String>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record elapsed seconds instead of 0 in reports
    #[arg(long)]
    pub wall_time: bool,
    /// How `compare` picks (k, λ)
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// best1bin or rand1bin
    #[arg(long)]
    pub strategy: Option<String>,
    /// immediate or deferred
    #[arg(long)]
    pub updating: Option<String>,
    /// Dither range of F, as `low,high`
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub f_range: Option<Vec<f64>>,
    /// Search interval of k, as `low,high`
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub k_bounds: Option<Vec<f64>>,
    /// Search interval of λ, as `low,high`
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub lambda_bounds: Option<Vec<f64>>,
}

fn pair(v: Option<Vec<f64>>, what: &str) -> Result<Option<(f64, f64)>> {
    match v.as_deref() {
        None => Ok(None),
        Some(&[a, b]) => Ok(Some((a, b))),
        Some(other) => bail!("{what} needs two values, got {}", other.len()),
    }
}

/// Fully resolved settings for one dataset.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub corpus: PathBuf,
    pub format: CorpusFormat,
    pub stopwords: Option<PathBuf>,
    pub lemmatizer: LemmatizerSpec,
    pub method: Reduction,
    pub k: Option<f64>,
    pub lambda: Option<f64>,
    pub counts: CountsMode,
    pub mode: Mode,
    pub classifier: ClassifierKind,
    pub split_ratio: f64,
    pub seed: u64,
    pub de: DeConfig,
    pub k_bounds: Option<(f64, f64)>,
    pub lambda_bounds: (f64, f64),
    pub out: PathBuf,
    pub wall_time: bool,
}

fn parse_with<T>(value: Option<String>, what: &str) -> Result<Option<T>>
where
    T: std::str::FromStr<Err = String>,
{
    value
        .map(|v| v.parse::<T>().map_err(|e| anyhow::anyhow!("invalid {what}: {e}")))
        .transpose()
}

impl RunConfig {
    /// Resolves exactly one dataset; see [`RunConfig::resolve_all`].
    pub fn resolve(flags: &Overrides) -> Result<Self> {
        let mut all = Self::resolve_all(flags)?;
        if all.len() != 1 {
            bail!("this command takes one dataset, got {}", all.len());
        }
        Ok(all.remove(0))
    }

    /// One configuration per dataset. Each `--corpus` is a dataset sharing
    /// the (single) config file; without `--corpus`, each config file is a
    /// dataset.
    pub fn resolve_all(flags: &Overrides) -> Result<Vec<Self>> {
        if !flags.corpus.is_empty() {
            if flags.config.len() > 1 {
                bail!("--corpus cannot be combined with several --config files");
            }
            return flags
                .corpus
                .iter()
                .map(|corpus| {
                    let file = match flags.config.first() {
                        Some(path) => FileConfig::load(path)?,
                        None => FileConfig::default(),
                    };
                    Self::merge(file, flags.clone(), Some(corpus.clone()))
                })
                .collect();
        }
        if flags.config.is_empty() {
            bail!("no corpus given (use --corpus or a --config with [corpus] path)");
        }
        flags
            .config
            .iter()
            .map(|path| Self::merge(FileConfig::load(path)?, flags.clone(), None))
            .collect()
    }

    pub fn merge(file: FileConfig, flags: Overrides, corpus: Option<PathBuf>) -> Result<Self> {
        let corpus = corpus
            .or(file.corpus.path)
            .context("no corpus given (use --corpus or [corpus] path)")?;
        let format = match flags.format.or(file.corpus.format) {
            Some(f) => f,
            None if corpus.is_dir() => CorpusFormat::Dirs,
            None => CorpusFormat::Tsv,
        };
        let lemmatizer = parse_with::<LemmatizerSpec>(flags.lemmatizer.or(file.preprocess.lemmatizer), "lemmatizer")?
            .unwrap_or(LemmatizerSpec::Identity);
        let method = parse_with::<Reduction>(flags.method.or(file.selection.method), "method")?
            .unwrap_or(Reduction::Select(Method::SentiTpc));
        let counts =
            parse_with::<CountsMode>(flags.counts.or(file.selection.counts), "counts mode")?.unwrap_or_default();
        let classifier = parse_with::<ClassifierKind>(flags.classifier.or(file.classifier.kind), "classifier")?
            .unwrap_or(ClassifierKind::LogisticRegression);
        let split_ratio = flags.split.or(file.split.ratio).unwrap_or(0.2);
        if !(split_ratio > 0.0 && split_ratio < 1.0) {
            bail!("split ratio must lie strictly between 0 and 1, got {split_ratio}");
        }
        let seed = flags.seed.or(file.split.seed).unwrap_or(0);

        let ev = file.evolve;
        let defaults = DeConfig::default();
        let de = DeConfig {
            pop_size: flags.pop_size.or(ev.pop_size).unwrap_or(defaults.pop_size),
            crossover_prob: flags.cr.or(ev.cr).unwrap_or(defaults.crossover_prob),
            mutation: pair(flags.f_range, "--f-range")?.or(ev.f_range).unwrap_or(defaults.mutation),
            generations: flags.generations.or(ev.generations).unwrap_or(defaults.generations),
            seed,
            strategy: match flags.strategy.or(ev.strategy).as_deref() {
                None | Some("best1bin") => Strategy::Best1Bin,
                Some("rand1bin") => Strategy::Rand1Bin,
                Some(other) => bail!("invalid strategy `{other}` (expected best1bin or rand1bin)"),
            },
            updating: match flags.updating.or(ev.updating).as_deref() {
                None | Some("immediate") => Updating::Immediate,
                Some("deferred") => Updating::Deferred,
                Some(other) => bail!("invalid updating `{other}` (expected immediate or deferred)"),
            },
        };
        de.validate()?;

        Ok(RunConfig {
            corpus,
            format,
            stopwords: flags.stopwords.or(file.preprocess.stopwords),
            lemmatizer,
            method,
            k: flags.k.or(file.selection.k),
            lambda: flags.lambda.or(file.selection.lambda),
            counts,
            mode: flags.mode.or(file.selection.mode).unwrap_or(Mode::Evolve),
            classifier,
            split_ratio,
            seed,
            de,
            k_bounds: pair(flags.k_bounds, "--k-bounds")?.or(ev.k_bounds),
            lambda_bounds: pair(flags.lambda_bounds, "--lambda-bounds")?
                .or(ev.lambda_bounds)
                .unwrap_or(LAMBDA_BOUNDS),
            out: flags.out.or(file.output.dir).unwrap_or_else(|| PathBuf::from("out")),
            wall_time: flags.wall_time || file.output.wall_time.unwrap_or(false),
        })
    }

    /// Search box for `method`: configured bounds or the method defaults.
    pub fn bounds(&self, method: Method) -> Result<Bounds> {
        let k = self.k_bounds.unwrap_or_else(|| method.k_bounds());
        Ok(Bounds::from_pairs(&[k, self.lambda_bounds])?)
    }

    /// `(k, λ)` for a manual run. λ is demanded only by methods that use it.
    pub fn manual_params(&self) -> Result<(f64, f64)> {
        let Reduction::Select(method) = self.method else {
            return Ok((0.0, 0.0));
        };
        let k = self
            .k
            .with_context(|| format!("method {method} in manual mode needs a threshold (--k)"))?;
        let lambda = match self.lambda {
            Some(l) => l,
            None if method.uses_lambda() => bail!("method {method} in manual mode needs λ (--lambda)"),
            None => 0.0,
        };
        Ok((k, lambda))
    }
}
