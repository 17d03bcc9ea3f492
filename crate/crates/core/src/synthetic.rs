//! Planted-feature corpora with a known separator.
//!
//! Half of the planted terms lean positive and half lean negative. A planted
//! term occurs in exactly `round(high · n)` documents of the class it favours
//! and `round(low · n)` of the other, `n` being the class size; which
//! documents get it is drawn at random. Each noise term occurs in every
//! document independently with probability `noise_rate`, regardless of class.
//! Documents list their terms in vocabulary order, so the text has no
//! positional signal. A document that ends up with no term at all gets the
//! single term [`FILLER_TERM`] so the corpus stays loadable.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, CorpusError, Label};

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedSpec {
    pub docs_per_class: usize,
    pub planted_terms: usize,
    pub noise_terms: usize,
    pub high: f64,
    pub low: f64,
    pub noise_rate: f64,
    pub seed: u64,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        PlantedSpec {
            docs_per_class: 200,
            planted_terms: 20,
            noise_terms: 480,
            high: 0.9,
            low: 0.1,
            noise_rate: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    pub corpus: Corpus,
    pub planted: Vec<String>,
    pub noise: Vec<String>,
}

impl PlantedCorpus {
    pub fn is_planted(&self, term: &str) -> bool {
        self.planted.iter().any(|t| t == term)
    }
}

pub const FILLER_TERM: &str = "filler";

pub fn planted_term(i: usize) -> String {
    format!("planted{i:03}")
}

pub fn noise_term(i: usize) -> String {
    format!("noise{i:03}")
}

fn share(n: usize, p: f64) -> usize {
    (p * n as f64 + 0.5).floor() as usize
}

pub fn planted_corpus(spec: &PlantedSpec) -> Result<PlantedCorpus, CorpusError> {
    let n = spec.docs_per_class;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    // documents 0..n are positive, n..2n negative
    let mut present = vec![Vec::<String>::new(); 2 * n];
    let planted: Vec<String> = (0..spec.planted_terms).map(planted_term).collect();
    let noise: Vec<String> = (0..spec.noise_terms).map(noise_term).collect();

    for (i, term) in planted.iter().enumerate() {
        let favours_positive = i % 2 == 0;
        let (pos_count, neg_count) = if favours_positive {
            (share(n, spec.high), share(n, spec.low))
        } else {
            (share(n, spec.low), share(n, spec.high))
        };
        for d in index::sample(&mut rng, n, pos_count.min(n)) {
            present[d].push(term.clone());
        }
        for d in index::sample(&mut rng, n, neg_count.min(n)) {
            present[n + d].push(term.clone());
        }
    }
    for doc in present.iter_mut() {
        for term in &noise {
            if rng.gen_bool(spec.noise_rate) {
                doc.push(term.clone());
            }
        }
    }
    for doc in present.iter_mut() {
        if doc.is_empty() {
            doc.push(FILLER_TERM.to_string());
        }
        doc.sort();
    }
    let records = present.into_iter().enumerate().map(|(d, terms)| {
        let label = if d < n { Label::Positive } else { Label::Negative };
        (label, terms.join(" "))
    });
    Ok(PlantedCorpus {
        corpus: Corpus::from_labeled("planted", records)?,
        planted,
        noise,
    })
}
