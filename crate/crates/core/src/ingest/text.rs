//! Source-text preprocessing and vector-space features (tf-idf and LSI).

use std::collections::{BTreeMap, BTreeSet, HashSet};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

const BUNDLED_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");
const BUNDLED_RESERVED: &str = include_str!("../../data/java_reserved.txt");

/// Tokens shorter than this are discarded.
const MIN_TOKEN_LEN: usize = 2;

/// Parses a one-word-per-line list; blank lines and `#` comments are ignored.
pub fn parse_word_list(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

fn sorted(set: &HashSet<String>) -> Vec<&str> {
    let mut words: Vec<&str> = set.iter().map(String::as_str).collect();
    words.sort_unstable();
    words
}

/// Turns raw source text into a sequence of normalized, stemmed terms.
#[derive(Debug, Clone)]
pub struct Preprocessor {
    stopwords: HashSet<String>,
    reserved: HashSet<String>,
}

impl Default for Preprocessor {
    fn default() -> Self {
        Preprocessor {
            stopwords: parse_word_list(BUNDLED_STOPWORDS),
            reserved: parse_word_list(BUNDLED_RESERVED),
        }
    }
}

impl Preprocessor {
    pub fn new(stopwords: HashSet<String>, reserved: HashSet<String>) -> Self {
        Preprocessor { stopwords, reserved }
    }

    pub fn with_stopwords(mut self, stopwords: HashSet<String>) -> Self {
        self.stopwords = stopwords;
        self
    }

    pub fn with_reserved(mut self, reserved: HashSet<String>) -> Self {
        self.reserved = reserved;
        self
    }

    /// Stop words, sorted.
    pub fn stopwords(&self) -> Vec<&str> {
        sorted(&self.stopwords)
    }

    /// Reserved words, sorted.
    pub fn reserved(&self) -> Vec<&str> {
        sorted(&self.reserved)
    }

    /// Terms of `text` in reading order.
    pub fn tokens(&self, text: &str) -> Vec<String> {
        text.split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
            .flat_map(split_identifier)
            .map(|w| w.to_lowercase())
            .filter(|w| !self.stopwords.contains(w) && !self.reserved.contains(w))
            .filter(|w| w.chars().count() >= MIN_TOKEN_LEN)
            .map(|w| porter_stemmer::stem(&w))
            .collect()
    }

    /// Term multiset of `text`.
    pub fn term_counts(&self, text: &str) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for t in self.tokens(text) {
            *counts.entry(t).or_insert(0) += 1;
        }
        counts
    }
}

/// Splits an alphanumeric run at camel-case humps, acronym ends and
/// letter/digit boundaries: `parseXMLFile2D` → `parse XML File 2 D`.
pub fn split_identifier(word: &str) -> Vec<&str> {
    let chars: Vec<(usize, char)> = word.char_indices().collect();
    let mut parts = Vec::new();
    let mut start = 0;
    for k in 1..chars.len() {
        let (_, prev) = chars[k - 1];
        let (pos, cur) = chars[k];
        let next = chars.get(k + 1).map(|&(_, c)| c);
        let boundary = (prev.is_lowercase() && cur.is_uppercase())
            || (prev.is_uppercase() && cur.is_uppercase() && next.is_some_and(char::is_lowercase))
            || (prev.is_alphabetic() && cur.is_numeric())
            || (prev.is_numeric() && cur.is_alphabetic());
        if boundary {
            parts.push(&word[start..pos]);
            start = pos;
        }
    }
    parts.push(&word[start..]);
    parts
}

/// Term-frequency × inverse-document-frequency weighting fitted on a corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct TfIdf {
    /// Sorted vocabulary; column order of `matrix`.
    pub vocabulary: Vec<String>,
    /// `ln(n / df)` per vocabulary term.
    pub idf: Vec<f64>,
    /// `n × m` document-term weights.
    pub matrix: DMatrix<f64>,
}

impl TfIdf {
    pub fn fit(docs: &[Vec<String>]) -> Result<TfIdf> {
        let n = docs.len();
        if n < 2 {
            return Err(Error::Insufficient(format!(
                "tf-idf needs at least 2 documents, got {n}"
            )));
        }
        let vocabulary: Vec<String> = docs
            .iter()
            .flatten()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if vocabulary.is_empty() {
            return Err(Error::Insufficient("empty vocabulary".into()));
        }
        let column: std::collections::HashMap<&str, usize> =
            vocabulary.iter().enumerate().map(|(j, t)| (t.as_str(), j)).collect();
        let m = vocabulary.len();
        let mut tf = DMatrix::zeros(n, m);
        for (i, doc) in docs.iter().enumerate() {
            for t in doc {
                tf[(i, column[t.as_str()])] += 1.0;
            }
        }
        let idf: Vec<f64> = (0..m)
            .map(|j| {
                let df = tf.column(j).iter().filter(|&&c| c > 0.0).count();
                if df == n {
                    0.0
                } else {
                    (n as f64 / df as f64).ln()
                }
            })
            .collect();
        let mut matrix = tf;
        for (j, w) in idf.iter().enumerate() {
            matrix.column_mut(j).scale_mut(*w);
        }
        Ok(TfIdf {
            vocabulary,
            idf,
            matrix,
        })
    }

    /// Weights an out-of-sample token list with the training idf. Terms
    /// outside the vocabulary are dropped; `None` if nothing survives.
    pub fn transform(&self, tokens: &[String]) -> Option<DVector<f64>> {
        let mut v = DVector::zeros(self.vocabulary.len());
        let mut any = false;
        for t in tokens {
            if let Ok(j) = self.vocabulary.binary_search(t) {
                v[j] += self.idf[j];
                any = true;
            }
        }
        any.then_some(v)
    }
}

/// Target LSI width for `m` words and `n` documents: `(m·n)^0.2` rounded to
/// nearest, clamped to `[2, min(m, n) − 1]`.
pub fn lsi_rank(m: usize, n: usize) -> usize {
    let raw = ((m as f64) * (n as f64)).powf(0.2).round() as usize;
    let upper = m.min(n).saturating_sub(1).max(1);
    raw.max(2).min(upper)
}

/// Truncated-SVD projection of a tf-idf matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Lsi {
    pub rank: usize,
    /// `n × r` document coordinates (left singular vectors scaled by the
    /// singular values).
    pub coords: DMatrix<f64>,
    /// `m × r` right singular vectors; `tfidf_row · basis` folds a document in.
    pub basis: DMatrix<f64>,
    pub singular_values: Vec<f64>,
}

impl Lsi {
    pub fn fit(tfidf: &DMatrix<f64>) -> Result<Lsi> {
        Lsi::fit_with_rank(tfidf, lsi_rank(tfidf.ncols(), tfidf.nrows()))
    }

    pub fn fit_with_rank(tfidf: &DMatrix<f64>, requested: usize) -> Result<Lsi> {
        linalg::ensure_finite(tfidf, "tf-idf matrix")?;
        if requested == 0 {
            return Err(Error::invalid("LSI rank must be positive"));
        }
        let svd = tfidf.clone().svd(true, true);
        let (u, vt) = match (svd.u, svd.v_t) {
            (Some(u), Some(vt)) => (u, vt),
            _ => return Err(Error::invalid("SVD did not converge")),
        };
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| {
            svd.singular_values[b]
                .partial_cmp(&svd.singular_values[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let top = order.first().map(|&i| svd.singular_values[i]).unwrap_or(0.0);
        if top <= 0.0 {
            return Err(Error::Insufficient("tf-idf matrix is all zeros".into()));
        }
        let tol = top * 1e-10 * (tfidf.nrows().max(tfidf.ncols()) as f64);
        let numeric_rank = order.iter().filter(|&&i| svd.singular_values[i] > tol).count();
        let mut rank = requested;
        if numeric_rank < requested {
            log::info!("LSI rank reduced from {requested} to numerical rank {numeric_rank}");
            rank = numeric_rank;
        }
        let n = tfidf.nrows();
        let m = tfidf.ncols();
        let mut left = DMatrix::zeros(n, rank);
        let mut basis = DMatrix::zeros(m, rank);
        let mut singular_values = Vec::with_capacity(rank);
        for (k, &src) in order.iter().take(rank).enumerate() {
            left.set_column(k, &u.column(src));
            basis.set_column(k, &vt.row(src).transpose());
            singular_values.push(svd.singular_values[src]);
        }
        for k in 0..rank {
            let col = left.column(k);
            let mut best = 0.0f64;
            let mut sign = 1.0;
            for v in col.iter() {
                if v.abs() > best * (1.0 + 1e-12) {
                    best = v.abs();
                    sign = v.signum();
                }
            }
            if sign < 0.0 {
                left.column_mut(k).neg_mut();
                basis.column_mut(k).neg_mut();
            }
        }
        let mut coords = left;
        for (k, s) in singular_values.iter().enumerate() {
            coords.column_mut(k).scale_mut(*s);
        }
        Ok(Lsi {
            rank,
            coords,
            basis,
            singular_values,
        })
    }

    /// Folds a tf-idf row vector into LSI coordinates.
    pub fn project(&self, tfidf_row: &DVector<f64>) -> DVector<f64> {
        self.basis.transpose() * tfidf_row
    }
}
