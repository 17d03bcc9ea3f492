//! Labeled review corpora: loading from disk, shape summaries and seeded
//! stratified train/test splits.
//!
//! Two on-disk layouts are understood:
//!
//! * TSV: one `<label>\t<text>` record per line, no header. Labels are
//!   `pos`, `neg`, `1`, `0`, `positive` or `negative` (any case). Blank lines
//!   are skipped, CRLF endings are accepted.
//! * Directory: `<root>/pos/*.txt` and `<root>/neg/*.txt`, one document per
//!   file.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised while loading or splitting a corpus.
#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed record, expected `<label>\\t<text>`")]
    MissingTab { path: PathBuf, line: usize },
    #[error("{path}:{line}: unknown label `{token}`")]
    UnknownLabel {
        path: PathBuf,
        line: usize,
        token: String,
    },
    #[error("{path}:{line}: empty document text")]
    EmptyText { path: PathBuf, line: usize },
    #[error("{0}: empty document")]
    EmptyFile(PathBuf),
    #[error("no documents")]
    NoDocuments,
    #[error("corpus contains only {0} documents; both classes are required")]
    SingleClass(Label),
    #[error("missing subdirectory {0}")]
    MissingSubdir(PathBuf),
    #[error("subdirectory {0} holds no .txt documents")]
    EmptySubdir(PathBuf),
    #[error("document text contains a line break and cannot be written as TSV (document {0})")]
    UnwritableText(usize),
    #[error("split ratio {0} is outside (0, 1)")]
    InvalidRatio(f64),
    #[error("{label} class has {size} documents; ratio {ratio} leaves an empty train or test side")]
    ClassTooSmall { label: Label, size: usize, ratio: f64 },
}

/// Binary sentiment class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }

    /// The other class.
    pub fn flip(self) -> Label {
        match self {
            Label::Positive => Label::Negative,
            Label::Negative => Label::Positive,
        }
    }

    /// Canonical TSV token.
    pub fn as_token(self) -> &'static str {
        match self {
            Label::Positive => "pos",
            Label::Negative => "neg",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Positive => "positive",
            Label::Negative => "negative",
        })
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "pos" | "1" | "positive" => Ok(Label::Positive),
            "neg" | "0" | "negative" => Ok(Label::Negative),
            other => Err(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: usize,
    pub raw_text: String,
    pub label: Label,
}

/// An ordered, immutable collection of labeled documents.
///
/// Ids are always `0..len()` in order and both classes are present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    name: String,
    documents: Vec<Document>,
}

impl Corpus {
    /// Builds a corpus from `(label, text)` pairs, assigning ids in order.
    pub fn from_labeled<I, S>(name: impl Into<String>, records: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = (Label, S)>,
        S: Into<String>,
    {
        let documents: Vec<Document> = records
            .into_iter()
            .enumerate()
            .map(|(id, (label, text))| Document {
                id,
                raw_text: text.into(),
                label,
            })
            .collect();
        if documents.is_empty() {
            return Err(CorpusError::NoDocuments);
        }
        if let Some(doc) = documents.iter().find(|d| d.raw_text.trim().is_empty()) {
            return Err(CorpusError::EmptyText {
                path: PathBuf::from(format!("<{}>", doc.id)),
                line: doc.id + 1,
            });
        }
        let first = documents[0].label;
        if documents.iter().all(|d| d.label == first) {
            return Err(CorpusError::SingleClass(first));
        }
        Ok(Corpus {
            name: name.into(),
            documents,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.documents.iter().map(|d| d.label).collect()
    }

    pub fn count(&self, label: Label) -> usize {
        self.documents.iter().filter(|d| d.label == label).count()
    }

    /// Writes the corpus in the canonical TSV layout.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<(), CorpusError> {
        for doc in &self.documents {
            if doc.raw_text.contains(['\n', '\r']) {
                return Err(CorpusError::UnwritableText(doc.id));
            }
            writeln!(out, "{}\t{}", doc.label.as_token(), doc.raw_text).map_err(|source| {
                CorpusError::Io {
                    path: PathBuf::from("<writer>"),
                    source,
                }
            })?;
        }
        Ok(())
    }
}

/// Loads a `<label>\t<text>` corpus. The corpus name is the file stem.
pub fn load_tsv_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut records = Vec::new();
    for (idx, raw_line) in content.split('\n').enumerate() {
        let line_no = idx + 1;
        let line = raw_line.strip_suffix('\r').unwrap_or(raw_line);
        if line.trim().is_empty() {
            continue;
        }
        let (token, text) = line.split_once('\t').ok_or_else(|| CorpusError::MissingTab {
            path: path.to_path_buf(),
            line: line_no,
        })?;
        let label = token.parse::<Label>().map_err(|token| CorpusError::UnknownLabel {
            path: path.to_path_buf(),
            line: line_no,
            token,
        })?;
        if text.trim().is_empty() {
            return Err(CorpusError::EmptyText {
                path: path.to_path_buf(),
                line: line_no,
            });
        }
        records.push((label, text.to_string()));
    }
    Corpus::from_labeled(stem_name(path), records)
}

/// Loads a `pos/` + `neg/` directory corpus. Positive files come first, each
/// class in lexicographic filename order.
pub fn load_directory_corpus(root: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let root = root.as_ref();
    let mut records = Vec::new();
    for (sub, label) in [("pos", Label::Positive), ("neg", Label::Negative)] {
        let dir = root.join(sub);
        if !dir.is_dir() {
            return Err(CorpusError::MissingSubdir(dir));
        }
        let entries = fs::read_dir(&dir).map_err(|source| CorpusError::Io {
            path: dir.clone(),
            source,
        })?;
        let mut files = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|source| CorpusError::Io {
                path: dir.clone(),
                source,
            })?;
            let path = entry.path();
            if path.is_file() && path.extension().is_some_and(|e| e == "txt") {
                files.push(path);
            }
        }
        if files.is_empty() {
            return Err(CorpusError::EmptySubdir(dir));
        }
        files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
        for file in files {
            let text = fs::read_to_string(&file).map_err(|source| CorpusError::Io {
                path: file.clone(),
                source,
            })?;
            if text.trim().is_empty() {
                return Err(CorpusError::EmptyFile(file));
            }
            records.push((label, text));
        }
    }
    Corpus::from_labeled(stem_name(root), records)
}

fn stem_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".to_string())
}

/// Shape of a corpus after vectorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub num_reviews: usize,
    pub num_features: usize,
    pub num_positive: usize,
    pub num_negative: usize,
}

pub fn corpus_summary(corpus: &Corpus, vocab: &crate::preprocess::Vocabulary) -> CorpusStats {
    CorpusStats {
        num_reviews: corpus.len(),
        num_features: vocab.len(),
        num_positive: corpus.count(Label::Positive),
        num_negative: corpus.count(Label::Negative),
    }
}

/// A train/test partition of document ids. Both id lists are sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train_ids: Vec<usize>,
    pub test_ids: Vec<usize>,
    pub seed: u64,
    pub ratio: f64,
}

/// Number of test documents taken from a class of `size` documents:
/// `ratio * size` rounded half-up.
pub fn test_share(size: usize, ratio: f64) -> usize {
    (ratio * size as f64 + 0.5).floor() as usize
}

/// Stratified split: each class is shuffled with a ChaCha8 generator seeded
/// by `seed` (positives first, then negatives, on the same stream) and its
/// first `round(ratio * class_size)` members become test documents.
pub fn stratified_split(corpus: &Corpus, ratio: f64, seed: u64) -> Result<SplitIndices, CorpusError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(CorpusError::InvalidRatio(ratio));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_ids = Vec::with_capacity(corpus.len());
    let mut test_ids = Vec::new();
    for label in [Label::Positive, Label::Negative] {
        let mut ids: Vec<usize> = corpus
            .documents()
            .iter()
            .filter(|d| d.label == label)
            .map(|d| d.id)
            .collect();
        let n_test = test_share(ids.len(), ratio);
        if n_test == 0 || n_test >= ids.len() {
            return Err(CorpusError::ClassTooSmall {
                label,
                size: ids.len(),
                ratio,
            });
        }
        ids.shuffle(&mut rng);
        test_ids.extend_from_slice(&ids[..n_test]);
        train_ids.extend_from_slice(&ids[n_test..]);
    }
    train_ids.sort_unstable();
    test_ids.sort_unstable();
    Ok(SplitIndices {
        train_ids,
        test_ids,
        seed,
        ratio,
    })
}
