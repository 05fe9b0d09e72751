use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ItemKind, ItemMatrix};
use crate::error::{Error, Result};

pub const DEFAULT_TOPICS: usize = 7;
const TOLERANCE: f64 = 1e-6;
const GUARD: f64 = 1e-300;

/// Nonnegative factorization `X ≈ W·H` of a document-term matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    /// Document-topic weights (`n × t`).
    pub w: DMatrix<f64>,
    /// Topic-term weights (`t × m`).
    pub h: DMatrix<f64>,
    /// Frobenius reconstruction error after each iteration.
    pub errors: Vec<f64>,
}

impl TopicModel {
    pub fn topics(&self) -> usize {
        self.w.ncols()
    }

    pub fn error(&self) -> f64 {
        self.errors.last().copied().unwrap_or(f64::NAN)
    }

    /// The `count` heaviest terms of a topic, ties by vocabulary order.
    pub fn top_terms<'a>(&self, topic: usize, vocabulary: &'a [String], count: usize) -> Vec<&'a str> {
        let row = self.h.row(topic);
        let mut idx: Vec<usize> = (0..row.len()).collect();
        idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
        idx.into_iter().take(count).map(|j| vocabulary[j].as_str()).collect()
    }
}

/// Multiplicative-update NMF minimizing the Frobenius error.
pub fn nmf_topics(x: &DMatrix<f64>, topics: usize, iters: usize, seed: u64) -> Result<TopicModel> {
    let (n, m) = x.shape();
    if topics == 0 || topics > n.min(m) {
        return Err(Error::invalid(format!(
            "topic count must lie in 1..={}, got {topics}",
            n.min(m)
        )));
    }
    if x.iter().any(|&v| !v.is_finite() || v < 0.0) {
        return Err(Error::invalid("NMF input must be finite and nonnegative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = (x.mean() / topics as f64).sqrt().max(1e-3);
    let mut w = DMatrix::from_fn(n, topics, |_, _| scale * (0.1 + rng.random::<f64>()));
    let mut h = DMatrix::from_fn(topics, m, |_, _| scale * (0.1 + rng.random::<f64>()));
    let mut errors = Vec::new();
    let mut previous = (x - &w * &h).norm();
    for _ in 0..iters {
        let wt = w.transpose();
        let num = &wt * x;
        let den = &wt * &w * &h;
        h.zip_zip_apply(&num, &den, |hv, a, b| *hv *= a / b.max(GUARD));
        let ht = h.transpose();
        let num = x * &ht;
        let den = &w * (&h * &ht);
        w.zip_zip_apply(&num, &den, |wv, a, b| *wv *= a / b.max(GUARD));
        let err = (x - &w * &h).norm();
        errors.push(err);
        let change = (previous - err).abs() / previous.max(GUARD);
        previous = err;
        if change < TOLERANCE {
            break;
        }
    }
    Ok(TopicModel { w, h, errors })
}

/// Topic membership: a document joins every topic whose weight reaches
/// `theta` times its strongest topic weight.
pub fn binarize_topics(model: &TopicModel, theta: f64, descriptions: Vec<String>) -> Result<ItemMatrix> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::invalid(format!("theta must lie in (0, 1], got {theta}")));
    }
    let (n, t) = model.w.shape();
    let mut cells = DMatrix::zeros(n, t);
    for i in 0..n {
        let row = model.w.row(i);
        let top = row.max();
        if top <= 0.0 {
            continue;
        }
        for j in 0..t {
            if row[j] >= theta * top {
                cells[(i, j)] = 1.0;
            }
        }
    }
    let ids = (0..t).map(|j| format!("topic{}", j + 1)).collect();
    let matrix = ItemMatrix::new(ItemKind::Topic, cells, ids)?;
    Ok(if descriptions.len() == t {
        matrix.with_descriptions(descriptions)
    } else {
        matrix
    })
}
