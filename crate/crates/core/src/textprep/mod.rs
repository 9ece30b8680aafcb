//! Text normalization shared by documents and queries.
//!
//! The pipeline runs in a fixed order:
//!
//! 1. Greek letters are replaced by their English names (`β` → `beta`).
//! 2. Lowercasing.
//! 3. Splitting on anything outside `[a-z0-9]`.
//! 4. Stopword removal.
//! 5. Porter stemming.
//! 6. Truncation to [`MAX_TOKEN_LEN`] characters.
//! 7. Pure digit runs become [`NUMBER_TOKEN`].

mod porter;

use std::collections::HashSet;
use std::io::BufRead;
use std::sync::OnceLock;

pub use porter::stem;

use crate::error::Result;

pub const MAX_TOKEN_LEN: usize = 20;
pub const NUMBER_TOKEN: &str = "_number_";

const BUNDLED_STOPWORDS: &str = include_str!("../../data/stopwords.txt");

/// A normalized token together with the lowercased surface form it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub term: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Analyzer {
    stopwords: HashSet<String>,
}

impl Default for Analyzer {
    fn default() -> Self {
        Analyzer::new(default_stopwords().clone())
    }
}

impl Analyzer {
    pub fn new(stopwords: HashSet<String>) -> Self {
        Analyzer { stopwords }
    }

    pub fn stopwords(&self) -> &HashSet<String> {
        &self.stopwords
    }

    pub fn normalize(&self, text: &str) -> Vec<String> {
        self.analyze(text).into_iter().map(|t| t.term).collect()
    }

    /// Like [`Analyzer::normalize`] but keeps each token's pre-stemming form.
    pub fn analyze(&self, text: &str) -> Vec<Token> {
        let text = replace_greek(text).to_lowercase();
        text.split(|c: char| !(c.is_ascii_lowercase() || c.is_ascii_digit()))
            .filter(|w| !w.is_empty() && !self.stopwords.contains(*w))
            .map(|w| Token {
                surface: w.to_string(),
                term: finish_term(w),
            })
            .collect()
    }
}

/// Normalize `text` with an explicit stopword set.
pub fn normalize(text: &str, stopwords: &HashSet<String>) -> Vec<String> {
    let text = replace_greek(text).to_lowercase();
    text.split(|c: char| !(c.is_ascii_lowercase() || c.is_ascii_digit()))
        .filter(|w| !w.is_empty() && !stopwords.contains(*w))
        .map(finish_term)
        .collect()
}

fn finish_term(word: &str) -> String {
    let mut term = stem(word);
    // Stems are ASCII, so byte truncation is character truncation.
    term.truncate(MAX_TOKEN_LEN);
    if term.bytes().all(|b| b.is_ascii_digit()) {
        return NUMBER_TOKEN.to_string();
    }
    term
}

/// The bundled English stopword list plus query boilerplate common in
/// dataset-search topics ("find", "data", "across", ...).
pub fn default_stopwords() -> &'static HashSet<String> {
    static STOPWORDS: OnceLock<HashSet<String>> = OnceLock::new();
    STOPWORDS.get_or_init(|| {
        parse_stopwords(BUNDLED_STOPWORDS.as_bytes()).expect("bundled stopword list is valid UTF-8")
    })
}

/// Read a stopword list: one term per line, `#` starts a comment line.
pub fn parse_stopwords<R: BufRead>(reader: R) -> Result<HashSet<String>> {
    let mut set = HashSet::new();
    for line in reader.lines() {
        let line = line?;
        let word = line.trim();
        if word.is_empty() || word.starts_with('#') {
            continue;
        }
        set.insert(word.to_lowercase());
    }
    Ok(set)
}

const GREEK: [(char, char, &str); 24] = [
    ('Α', 'α', "alpha"),
    ('Β', 'β', "beta"),
    ('Γ', 'γ', "gamma"),
    ('Δ', 'δ', "delta"),
    ('Ε', 'ε', "epsilon"),
    ('Ζ', 'ζ', "zeta"),
    ('Η', 'η', "eta"),
    ('Θ', 'θ', "theta"),
    ('Ι', 'ι', "iota"),
    ('Κ', 'κ', "kappa"),
    ('Λ', 'λ', "lambda"),
    ('Μ', 'μ', "mu"),
    ('Ν', 'ν', "nu"),
    ('Ξ', 'ξ', "xi"),
    ('Ο', 'ο', "omicron"),
    ('Π', 'π', "pi"),
    ('Ρ', 'ρ', "rho"),
    ('Σ', 'σ', "sigma"),
    ('Τ', 'τ', "tau"),
    ('Υ', 'υ', "upsilon"),
    ('Φ', 'φ', "phi"),
    ('Χ', 'χ', "chi"),
    ('Ψ', 'ψ', "psi"),
    ('Ω', 'ω', "omega"),
];

fn greek_name(c: char) -> Option<&'static str> {
    if c == 'ς' {
        return Some("sigma");
    }
    GREEK
        .iter()
        .find(|(upper, lower, _)| *upper == c || *lower == c)
        .map(|(_, _, name)| *name)
}

/// Replace Greek letters by their English names.
pub fn replace_greek(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match greek_name(c) {
            Some(name) => out.push_str(name),
            None => out.push(c),
        }
    }
    out
}
