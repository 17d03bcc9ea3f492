//! Text → binary unigram term-presence matrix.
//!
//! The pipeline order is fixed: tokenize, drop stop words, lemmatize, then
//! record presence (not frequency) of each vocabulary term per document.

mod lemma;
mod tokenize;

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::{Corpus, Label};
use crate::matrix::DenseMatrix;

pub use lemma::{lemmatize, Lemmatizer, LemmatizerSpec};
pub use tokenize::tokenize;

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("cannot read {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: expected `surface\\tlemma`")]
    MalformedDictionary { path: PathBuf, line: usize },
    #[error("vocabulary is empty: every token was removed by preprocessing")]
    EmptyVocabulary,
}

/// Stop words, stored already normalized (lowercased).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopList {
    words: HashSet<String>,
    language_tag: String,
}

impl StopList {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new<I, S>(language_tag: impl Into<String>, words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        StopList {
            words: words
                .into_iter()
                .flat_map(|w| tokenize(w.as_ref()))
                .collect(),
            language_tag: language_tag.into(),
        }
    }

    /// One token per line; `#` starts a comment. The language tag is the
    /// file stem.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, PreprocessError> {
        let path = path.as_ref();
        let content = fs::read_to_string(path).map_err(|source| PreprocessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let words = content
            .lines()
            .map(|line| line.split('#').next().unwrap_or("").trim())
            .filter(|w| !w.is_empty());
        let tag = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Ok(StopList::new(tag, words))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn language_tag(&self) -> &str {
        &self.language_tag
    }
}

pub fn remove_stopwords(tokens: Vec<String>, stop: &StopList) -> Vec<String> {
    if stop.is_empty() {
        return tokens;
    }
    tokens.into_iter().filter(|t| !stop.contains(t)).collect()
}

/// Tokenize → stop-word removal → lemmatization for one text.
pub fn process_text(text: &str, stop: &StopList, lemmatizer: &Lemmatizer) -> Vec<String> {
    lemmatize(remove_stopwords(tokenize(text), stop), lemmatizer)
}

fn process_corpus(corpus: &Corpus, stop: &StopList, lemmatizer: &Lemmatizer) -> Vec<Vec<String>> {
    corpus
        .documents()
        .par_iter()
        .map(|d| process_text(&d.raw_text, stop, lemmatizer))
        .collect()
}

/// Unique processed unigrams in first-occurrence order (document id, then
/// token position).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn from_terms<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Vocabulary {
            terms: Vec::new(),
            index: HashMap::new(),
        };
        for term in terms {
            vocab.insert(term.into());
        }
        vocab
    }

    fn insert(&mut self, term: String) {
        if !self.index.contains_key(&term) {
            self.index.insert(term.clone(), self.terms.len());
            self.terms.push(term);
        }
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn term(&self, id: usize) -> &str {
        &self.terms[id]
    }

    pub fn id(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

pub fn build_vocabulary(
    corpus: &Corpus,
    stop: &StopList,
    lemmatizer: &Lemmatizer,
) -> Result<Vocabulary, PreprocessError> {
    vocabulary_from_tokens(&process_corpus(corpus, stop, lemmatizer))
}

fn vocabulary_from_tokens(docs: &[Vec<String>]) -> Result<Vocabulary, PreprocessError> {
    let vocab = Vocabulary::from_terms(docs.iter().flatten().cloned());
    if vocab.is_empty() {
        return Err(PreprocessError::EmptyVocabulary);
    }
    Ok(vocab)
}

/// Binary document × feature presence matrix, bit-packed per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PresenceMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    bits: Vec<u64>,
    labels: Vec<Label>,
}

impl PresenceMatrix {
    /// An all-zero matrix with one row per label.
    pub fn zeros(cols: usize, labels: Vec<Label>) -> Self {
        let words_per_row = cols.div_ceil(64);
        PresenceMatrix {
            rows: labels.len(),
            cols,
            words_per_row,
            bits: vec![0; labels.len() * words_per_row],
            labels,
        }
    }

    /// Builds from 0/1 rows (any non-zero value counts as present).
    ///
    /// # Panics
    /// If rows are ragged or `labels.len()` differs from the row count.
    pub fn from_dense<R: AsRef<[u8]>>(rows: &[R], labels: Vec<Label>) -> Self {
        assert_eq!(rows.len(), labels.len(), "one label per row");
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut m = PresenceMatrix::zeros(cols, labels);
        for (r, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            assert_eq!(row.len(), cols, "ragged rows");
            for (c, &v) in row.iter().enumerate() {
                if v != 0 {
                    m.set(r, c);
                }
            }
        }
        m
    }

    pub fn set(&mut self, r: usize, c: usize) {
        assert!(c < self.cols);
        self.bits[r * self.words_per_row + c / 64] |= 1u64 << (c % 64);
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.bits[r * self.words_per_row + c / 64] & (1u64 << (c % 64)) != 0
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    fn row_words(&self, r: usize) -> &[u64] {
        &self.bits[r * self.words_per_row..(r + 1) * self.words_per_row]
    }

    /// Column indices of the 1-cells in row `r`, ascending.
    pub fn row_features(&self, r: usize) -> impl Iterator<Item = usize> + '_ {
        self.row_words(r).iter().enumerate().flat_map(|(w, &word)| {
            let mut rest = word;
            std::iter::from_fn(move || {
                if rest == 0 {
                    None
                } else {
                    let bit = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    Some(w * 64 + bit)
                }
            })
        })
    }

    pub fn column_sums(&self) -> Vec<usize> {
        let mut sums = vec![0; self.cols];
        for r in 0..self.rows {
            for c in self.row_features(r) {
                sums[c] += 1;
            }
        }
        sums
    }

    /// Keeps the listed columns, in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> PresenceMatrix {
        let mut out = PresenceMatrix::zeros(columns.len(), self.labels.clone());
        for r in 0..self.rows {
            for (new_c, &old_c) in columns.iter().enumerate() {
                if self.get(r, old_c) {
                    out.set(r, new_c);
                }
            }
        }
        out
    }

    pub fn select_rows(&self, ids: &[usize]) -> PresenceMatrix {
        let mut bits = Vec::with_capacity(ids.len() * self.words_per_row);
        for &id in ids {
            bits.extend_from_slice(self.row_words(id));
        }
        PresenceMatrix {
            rows: ids.len(),
            cols: self.cols,
            words_per_row: self.words_per_row,
            bits,
            labels: ids.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for c in self.row_features(r) {
                m.set(r, c, 1.0);
            }
        }
        m
    }
}

/// Presence of each vocabulary term in each processed document. Terms not in
/// `vocab` are ignored, so unseen documents can be vectorized too.
pub fn vectorize(
    corpus: &Corpus,
    vocab: &Vocabulary,
    stop: &StopList,
    lemmatizer: &Lemmatizer,
) -> PresenceMatrix {
    presence_from_tokens(&process_corpus(corpus, stop, lemmatizer), vocab, corpus.labels())
}

fn presence_from_tokens(docs: &[Vec<String>], vocab: &Vocabulary, labels: Vec<Label>) -> PresenceMatrix {
    let mut matrix = PresenceMatrix::zeros(vocab.len(), labels);
    for (r, tokens) in docs.iter().enumerate() {
        for token in tokens {
            if let Some(c) = vocab.id(token) {
                matrix.set(r, c);
            }
        }
    }
    matrix
}

/// Preprocessing configuration applied consistently to vocabulary building
/// and vectorization.
#[derive(Debug, Clone, Default)]
pub struct Preprocessor {
    pub stop: StopList,
    pub lemmatizer: Lemmatizer,
}

impl Preprocessor {
    pub fn new(stop: StopList, lemmatizer: Lemmatizer) -> Self {
        Preprocessor { stop, lemmatizer }
    }

    /// Builds the vocabulary and presence matrix in one pass over the corpus.
    pub fn fit_transform(&self, corpus: &Corpus) -> Result<(Vocabulary, PresenceMatrix), PreprocessError> {
        let docs = process_corpus(corpus, &self.stop, &self.lemmatizer);
        let vocab = vocabulary_from_tokens(&docs)?;
        let matrix = presence_from_tokens(&docs, &vocab, corpus.labels());
        Ok((vocab, matrix))
    }
}
