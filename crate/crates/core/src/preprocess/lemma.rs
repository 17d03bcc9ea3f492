//! Pluggable lemmatizers.
//!
//! `EnglishSuffixRules` applies the first matching rule of this ordered table
//! (a "stem" is the token with the suffix removed, lengths count characters):
//!
//! | # | suffix | action                    | condition                          |
//! |---|--------|---------------------------|------------------------------------|
//! | 1 | `sses` | replace with `ss`         | always                             |
//! | 2 | `ies`  | replace with `y`          | stem has at least 4 characters     |
//! | 3 | `ied`  | replace with `y`          | stem has at least 4 characters     |
//! | 4 | `ing`  | remove, then undouble     | stem has ≥ 3 characters and a vowel |
//! | 5 | `ed`   | remove, then undouble     | stem has ≥ 3 characters and a vowel |
//! | 6 | `s`    | remove                    | token does not end in `ss`, `us` or `is`; stem has ≥ 3 characters |
//!
//! "Undouble" drops the last character when the stem ends in a doubled
//! consonant other than `l`, `s` or `z` (`running` → `run`, `selling` →
//! `sell`). Vowels are `a e i o u`.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::PreprocessError;

/// Which lemmatizer to use; `DictionaryFile` is resolved by [`Lemmatizer::load`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum LemmatizerSpec {
    #[default]
    Identity,
    DictionaryFile(PathBuf),
    EnglishSuffixRules,
}

impl FromStr for LemmatizerSpec {
    type Err = String;

    /// Parses `identity`, `en-rules` or `dict:<path>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "identity" => Ok(LemmatizerSpec::Identity),
            "en-rules" => Ok(LemmatizerSpec::EnglishSuffixRules),
            other => match other.strip_prefix("dict:") {
                Some(path) if !path.is_empty() => Ok(LemmatizerSpec::DictionaryFile(path.into())),
                _ => Err(format!(
                    "unknown lemmatizer `{other}` (expected identity, en-rules or dict:<path>)"
                )),
            },
        }
    }
}

impl fmt::Display for LemmatizerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LemmatizerSpec::Identity => f.write_str("identity"),
            LemmatizerSpec::EnglishSuffixRules => f.write_str("en-rules"),
            LemmatizerSpec::DictionaryFile(p) => write!(f, "dict:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Lemmatizer {
    #[default]
    Identity,
    Dictionary(HashMap<String, String>),
    EnglishSuffixRules,
}

impl Lemmatizer {
    pub fn load(spec: &LemmatizerSpec) -> Result<Self, PreprocessError> {
        match spec {
            LemmatizerSpec::Identity => Ok(Lemmatizer::Identity),
            LemmatizerSpec::EnglishSuffixRules => Ok(Lemmatizer::EnglishSuffixRules),
            LemmatizerSpec::DictionaryFile(path) => Self::from_dictionary_file(path),
        }
    }

    /// Reads a two-column `surface\tlemma` file. Blank lines are skipped.
    pub fn from_dictionary_file(path: &Path) -> Result<Self, PreprocessError> {
        let content = fs::read_to_string(path).map_err(|source| PreprocessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut map = HashMap::new();
        for (idx, line) in content.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let (surface, lemma) =
                line.split_once('\t')
                    .ok_or_else(|| PreprocessError::MalformedDictionary {
                        path: path.to_path_buf(),
                        line: idx + 1,
                    })?;
            map.insert(surface.to_string(), lemma.trim().to_string());
        }
        Ok(Lemmatizer::Dictionary(map))
    }

    pub fn lemma(&self, token: &str) -> String {
        match self {
            Lemmatizer::Identity => token.to_string(),
            Lemmatizer::Dictionary(map) => map.get(token).cloned().unwrap_or_else(|| token.to_string()),
            Lemmatizer::EnglishSuffixRules => english_suffix_lemma(token),
        }
    }
}

/// Maps every token independently.
pub fn lemmatize(tokens: Vec<String>, lemmatizer: &Lemmatizer) -> Vec<String> {
    match lemmatizer {
        Lemmatizer::Identity => tokens,
        _ => tokens.iter().map(|t| lemmatizer.lemma(t)).collect(),
    }
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}

fn char_len(s: &str) -> usize {
    s.chars().count()
}

fn undouble(stem: &str) -> String {
    let mut chars: Vec<char> = stem.chars().collect();
    let n = chars.len();
    if n >= 2 {
        let last = chars[n - 1];
        if last == chars[n - 2] && last.is_alphabetic() && !is_vowel(last) && !matches!(last, 'l' | 's' | 'z') {
            chars.pop();
        }
    }
    chars.into_iter().collect()
}

fn english_suffix_lemma(token: &str) -> String {
    if let Some(stem) = token.strip_suffix("sses") {
        return format!("{stem}ss");
    }
    for suffix in ["ies", "ied"] {
        if let Some(stem) = token.strip_suffix(suffix) {
            if char_len(stem) >= 4 {
                return format!("{stem}y");
            }
        }
    }
    for suffix in ["ing", "ed"] {
        if let Some(stem) = token.strip_suffix(suffix) {
            if char_len(stem) >= 3 && stem.chars().any(is_vowel) {
                return undouble(stem);
            }
        }
    }
    if let Some(stem) = token.strip_suffix('s') {
        let protected = token.ends_with("ss") || token.ends_with("us") || token.ends_with("is");
        if !protected && char_len(stem) >= 3 {
            return stem.to_string();
        }
    }
    token.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn identity_is_noop() {
        let input = toks(&["ran", "movies", "زبردست"]);
        assert_eq!(lemmatize(input.clone(), &Lemmatizer::Identity), input);
    }

    #[test]
    fn dictionary_lookup() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lemmas.tsv");
        fs::write(&path, "ran\trun\n\nbetter\tgood\r\n").unwrap();
        let lem = Lemmatizer::load(&LemmatizerSpec::DictionaryFile(path)).unwrap();
        assert_eq!(lemmatize(toks(&["ran", "fast"]), &lem), toks(&["run", "fast"]));
        assert_eq!(lem.lemma("better"), "good");
    }

    #[test]
    fn dictionary_unreadable() {
        let spec = LemmatizerSpec::DictionaryFile("/no/such/lemmas.tsv".into());
        assert!(matches!(Lemmatizer::load(&spec), Err(PreprocessError::Io { .. })));
    }

    #[test]
    fn english_rules_table() {
        let lem = Lemmatizer::EnglishSuffixRules;
        let cases = [
            ("movies", "movie"),
            ("glasses", "glass"),
            ("stories", "story"),
            ("studied", "study"),
            ("running", "run"),
            ("selling", "sell"),
            ("acting", "act"),
            ("thing", "thing"),
            ("needed", "need"),
            ("red", "red"),
            ("films", "film"),
            ("this", "this"),
            ("bonus", "bonus"),
            ("class", "class"),
            ("was", "was"),
        ];
        for (input, expected) in cases {
            assert_eq!(lem.lemma(input), expected, "{input}");
        }
    }

    #[test]
    fn spec_parsing() {
        assert_eq!("identity".parse::<LemmatizerSpec>().unwrap(), LemmatizerSpec::Identity);
        assert_eq!(
            "en-rules".parse::<LemmatizerSpec>().unwrap(),
            LemmatizerSpec::EnglishSuffixRules
        );
        assert_eq!(
            "dict:/tmp/x.tsv".parse::<LemmatizerSpec>().unwrap(),
            LemmatizerSpec::DictionaryFile("/tmp/x.tsv".into())
        );
        assert!("porter".parse::<LemmatizerSpec>().is_err());
        assert!("dict:".parse::<LemmatizerSpec>().is_err());
    }
}
