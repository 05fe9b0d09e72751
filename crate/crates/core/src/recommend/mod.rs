//! Neighbourhood-based link recommendation over binary unit-item matrices,
//! its evaluation, and NMF topics for the lexical view.

mod cv;
mod metrics;
mod nmf;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::ingest::{CallGraph, TransactionLog};

pub use cv::{
    evaluate_fold, inner_selection, nested_cv, outer_folds, CvConfig, EvalReport, FoldResult, Selection, K_GRID,
};
pub use metrics::{max_f1, pr_auc, rank_order};
pub use nmf::{binarize_topics, nmf_topics, TopicModel, DEFAULT_TOPICS};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ItemKind {
    /// Items are the units themselves (call targets); the diagonal is ignored.
    Callee,
    Transaction,
    Topic,
}

impl FromStr for ItemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "call" => Ok(ItemKind::Callee),
            "change" => Ok(ItemKind::Transaction),
            "topic" => Ok(ItemKind::Topic),
            other => Err(Error::Unknown {
                kind: "target",
                name: other.to_string(),
            }),
        }
    }
}

impl fmt::Display for ItemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ItemKind::Callee => "call",
            ItemKind::Transaction => "change",
            ItemKind::Topic => "topic",
        })
    }
}

/// Binary unit × item membership.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemMatrix {
    pub kind: ItemKind,
    pub cells: DMatrix<f64>,
    /// Short item identifiers.
    pub items: Vec<String>,
    /// Item wording used in rendered recommendations.
    pub descriptions: Vec<String>,
}

impl ItemMatrix {
    pub fn new(kind: ItemKind, cells: DMatrix<f64>, items: Vec<String>) -> Result<Self> {
        if items.len() != cells.ncols() {
            return Err(Error::invalid(format!(
                "{} item names for {} columns",
                items.len(),
                cells.ncols()
            )));
        }
        if kind == ItemKind::Callee && cells.nrows() != cells.ncols() {
            return Err(Error::invalid("callee item matrix must be square"));
        }
        if cells.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::invalid("item matrix entries must be 0 or 1"));
        }
        Ok(ItemMatrix {
            kind,
            cells,
            descriptions: items.clone(),
            items,
        })
    }

    pub fn with_descriptions(mut self, descriptions: Vec<String>) -> Self {
        assert_eq!(descriptions.len(), self.items.len());
        self.descriptions = descriptions;
        self
    }

    pub fn from_call_graph(graph: &CallGraph) -> Self {
        let names = graph.units.names().to_vec();
        let mut cells = graph.binary();
        cells.fill_diagonal(0.0);
        ItemMatrix::new(ItemKind::Callee, cells, names).expect("adjacency is square and binary")
    }

    pub fn from_transactions(log: &TransactionLog) -> Self {
        let ids = log.transactions.iter().map(|(id, _)| id.clone()).collect();
        let descriptions = log
            .transactions
            .iter()
            .map(|(_, members)| {
                members
                    .iter()
                    .map(|&u| log.units.name(u).to_string())
                    .collect::<Vec<_>>()
                    .join(" and ")
            })
            .collect();
        ItemMatrix::new(ItemKind::Transaction, log.incidence.clone(), ids)
            .expect("incidence is binary")
            .with_descriptions(descriptions)
    }

    pub fn n(&self) -> usize {
        self.cells.nrows()
    }

    pub fn t(&self) -> usize {
        self.cells.ncols()
    }

    /// Cells that take part in training and evaluation.
    pub fn is_eligible(&self, unit: usize, item: usize) -> bool {
        !(self.kind == ItemKind::Callee && unit == item)
    }

    pub fn get(&self, unit: usize, item: usize) -> bool {
        self.cells[(unit, item)] == 1.0
    }

    /// Eligible cells equal to `value`, in row-major order.
    pub fn cells_with(&self, value: bool) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n() {
            for j in 0..self.t() {
                if self.is_eligible(i, j) && self.get(i, j) == value {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Copy with the given cells cleared.
    pub fn masked(&self, cells: &[(usize, usize)]) -> ItemMatrix {
        let mut out = self.clone();
        for &(i, j) in cells {
            out.cells[(i, j)] = 0.0;
        }
        out
    }
}

/// Other units ordered by descending similarity to `m0`, ties by index.
pub fn neighbor_order(sim: &DMatrix<f64>, m0: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..sim.ncols()).filter(|&j| j != m0).collect();
    order.sort_by(|&a, &b| sim[(m0, b)].total_cmp(&sim[(m0, a)]).then(a.cmp(&b)));
    order
}

fn check_shapes(sim: &DMatrix<f64>, w: &ItemMatrix) -> Result<()> {
    if !sim.is_square() || sim.nrows() != w.n() {
        return Err(Error::UnitMismatch(format!(
            "similarity is {}×{}, item matrix has {} units",
            sim.nrows(),
            sim.ncols(),
            w.n()
        )));
    }
    Ok(())
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k + 1 > n {
        return Err(Error::invalid(format!(
            "k must lie in 1..={}, got {k}",
            n.saturating_sub(1)
        )));
    }
    Ok(())
}

/// Scores of one cell for every `k` in the ascending list `ks`, summing over
/// neighbours in rank order.
fn scores_for_ks(sim: &DMatrix<f64>, w: &ItemMatrix, m0: usize, i0: usize, order: &[usize], ks: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(ks.len());
    let (mut num, mut den) = (0.0, 0.0);
    let mut taken = 0;
    for &k in ks {
        while taken < k {
            let j = order[taken];
            let s = sim[(m0, j)];
            den += s;
            num += s * w.cells[(j, i0)];
            taken += 1;
        }
        out.push(if den > 0.0 { num / den } else { 0.0 });
    }
    out
}

/// Weighted vote of the `k` most similar units on whether `m0` has `i0`.
pub fn knn_predict(sim: &DMatrix<f64>, w: &ItemMatrix, m0: usize, i0: usize, k: usize) -> Result<f64> {
    check_shapes(sim, w)?;
    if m0 >= w.n() {
        return Err(Error::invalid(format!("unit {m0} out of range")));
    }
    if i0 >= w.t() {
        return Err(Error::invalid(format!("item {i0} out of range")));
    }
    check_k(k, w.n())?;
    let order = neighbor_order(sim, m0);
    Ok(scores_for_ks(sim, w, m0, i0, &order, &[k])[0])
}

/// Scores of `cells` for every `k` in `ks` (ascending), against `w` as given.
/// Result is indexed `[k position][cell position]`.
pub(crate) fn score_cells(sim: &DMatrix<f64>, w: &ItemMatrix, cells: &[(usize, usize)], ks: &[usize]) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; cells.len()]; ks.len()];
    let mut by_row: Vec<Vec<usize>> = vec![Vec::new(); w.n()];
    for (c, &(i, _)) in cells.iter().enumerate() {
        by_row[i].push(c);
    }
    for (m0, list) in by_row.iter().enumerate() {
        if list.is_empty() {
            continue;
        }
        let order = neighbor_order(sim, m0);
        for &c in list {
            for (kp, s) in scores_for_ks(sim, w, m0, cells[c].1, &order, ks)
                .into_iter()
                .enumerate()
            {
                out[kp][c] = s;
            }
        }
    }
    out
}

/// Scores for the masked cells, predicted with those cells hidden.
pub fn predict_all(sim: &DMatrix<f64>, w: &ItemMatrix, k: usize, mask: &[(usize, usize)]) -> Result<Vec<f64>> {
    check_shapes(sim, w)?;
    if mask.is_empty() {
        return Ok(Vec::new());
    }
    check_k(k, w.n())?;
    if let Some(&(i, j)) = mask.iter().find(|&&(i, j)| i >= w.n() || j >= w.t()) {
        return Err(Error::invalid(format!("cell ({i}, {j}) out of range")));
    }
    let hidden = w.masked(mask);
    Ok(score_cells(sim, &hidden, mask, &[k]).remove(0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recommendation {
    pub unit: usize,
    pub item: usize,
    pub score: f64,
}

/// Absent eligible cells whose score reaches `threshold`, best first.
pub fn recommend_links(sim: &DMatrix<f64>, w: &ItemMatrix, k: usize, threshold: f64) -> Result<Vec<Recommendation>> {
    check_shapes(sim, w)?;
    let candidates = w.cells_with(false);
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    check_k(k, w.n())?;
    let scores = score_cells(sim, w, &candidates, &[k]).remove(0);
    let mut recs: Vec<Recommendation> = candidates
        .into_iter()
        .zip(scores)
        .filter(|&(_, s)| s >= threshold)
        .map(|((unit, item), score)| Recommendation { unit, item, score })
        .collect();
    recs.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.unit.cmp(&b.unit))
            .then(a.item.cmp(&b.item))
    });
    Ok(recs)
}

/// Human-readable sentence for one recommendation.
pub fn render_recommendation(rec: &Recommendation, units: &[String], w: &ItemMatrix) -> String {
    let unit = &units[rec.unit];
    let item = &w.descriptions[rec.item];
    match w.kind {
        ItemKind::Callee => format!("{unit} should make a call to {item}"),
        ItemKind::Transaction => format!("{unit} should be committed with {item}"),
        ItemKind::Topic => format!("{unit} should cover more of {item}"),
    }
}

/// Tab-separated `unit, item, score, kind` lines with a header.
pub fn recommendations_tsv(recs: &[Recommendation], units: &[String], w: &ItemMatrix) -> String {
    let mut out = String::from("unit\titem\tscore\tkind\n");
    for r in recs {
        out.push_str(&format!(
            "{}\t{}\t{:.6}\t{}\n",
            units[r.unit], w.items[r.item], r.score, w.kind
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn items(t: usize) -> Vec<String> {
        (0..t).map(|j| format!("i{j}")).collect()
    }

    #[test]
    fn eq2_hand_cases() {
        let sim = DMatrix::from_row_slice(3, 3, &[1.0, 0.6, 0.4, 0.6, 1.0, 0.0, 0.4, 0.0, 1.0]);
        let w = ItemMatrix::new(
            ItemKind::Transaction,
            DMatrix::from_row_slice(3, 1, &[0.0, 1.0, 0.0]),
            items(1),
        )
        .unwrap();
        assert!((knn_predict(&sim, &w, 0, 0, 2).unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(knn_predict(&sim, &w, 0, 0, 1).unwrap(), 1.0);
        assert_eq!(knn_predict(&sim, &w, 2, 0, 1).unwrap(), 0.0);
        let zero = DMatrix::zeros(3, 3);
        assert_eq!(knn_predict(&zero, &w, 0, 0, 2).unwrap(), 0.0);
        assert!(knn_predict(&sim, &w, 0, 0, 3).is_err());
        assert!(knn_predict(&sim, &w, 0, 5, 1).is_err());
    }

    fn planted() -> (DMatrix<f64>, ItemMatrix) {
        let block = |i: usize| i / 2;
        let sim = DMatrix::from_fn(4, 4, |i, j| if block(i) == block(j) { 1.0 } else { 0.1 });
        let cells = DMatrix::from_fn(4, 4, |i, j| if block(i) == block(j) { 1.0 } else { 0.0 });
        (sim, ItemMatrix::new(ItemKind::Transaction, cells, items(4)).unwrap())
    }

    #[test]
    fn planted_block_links() {
        let (sim, w) = planted();
        let w = w.masked(&[(0, 1)]);
        let recs = recommend_links(&sim, &w, 2, 0.5).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!((recs[0].unit, recs[0].item), (0, 1));
        assert!((recs[0].score - 1.0 / 1.1).abs() < 1e-15);
        let units: Vec<String> = (0..4).map(|i| format!("U{i}")).collect();
        assert_eq!(
            render_recommendation(&recs[0], &units, &w),
            "U0 should be committed with i1"
        );
        let cross = knn_predict(&sim, &w, 0, 2, 2).unwrap();
        assert!((cross - 0.1 / 1.1).abs() < 1e-15);
    }

    #[test]
    fn callee_diagonal_is_ignored() {
        let cells = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let w = ItemMatrix::new(ItemKind::Callee, cells, items(3)).unwrap();
        assert_eq!(w.cells_with(false), vec![(0, 2), (1, 2), (2, 0), (2, 1)]);
        assert_eq!(w.cells_with(true), vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn threshold_is_inclusive_and_full_matrix_is_silent() {
        let sim = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.5, 0.5, 1.0, 0.5, 0.5, 0.5, 1.0]);
        let w = ItemMatrix::new(
            ItemKind::Topic,
            DMatrix::from_row_slice(3, 1, &[0.0, 1.0, 0.0]),
            items(1),
        )
        .unwrap();
        let recs = recommend_links(&sim, &w, 2, 0.5).unwrap();
        assert_eq!(recs.len(), 2);
        assert!(recs.iter().all(|r| r.score == 0.5));
        let full = ItemMatrix::new(ItemKind::Topic, DMatrix::from_element(3, 2, 1.0), items(2)).unwrap();
        assert!(recommend_links(&sim, &full, 2, 0.5).unwrap().is_empty());
    }

    #[test]
    fn predict_all_matches_single_cell() {
        let (sim, w) = planted();
        assert!(predict_all(&sim, &w, 2, &[]).unwrap().is_empty());
        let got = predict_all(&sim, &w, 2, &[(2, 3)]).unwrap();
        let expect = knn_predict(&sim, &w.masked(&[(2, 3)]), 2, 3, 2).unwrap();
        assert_eq!(got, vec![expect]);
    }

    #[test]
    fn masking_only_touches_its_row_and_column() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let sim = DMatrix::from_fn(5, 5, |_, _| rng.random::<f64>());
            let sim = (&sim + sim.transpose()) * 0.5;
            let cells = DMatrix::from_fn(5, 5, |_, _| if rng.random::<bool>() { 1.0 } else { 0.0 });
            let w = ItemMatrix::new(ItemKind::Transaction, cells, items(5)).unwrap();
            let all: Vec<(usize, usize)> = (0..5).flat_map(|i| (0..5).map(move |j| (i, j))).collect();
            let base = score_cells(&sim, &w, &all, &[2]).remove(0);
            for &(a, b) in &all {
                let hidden = w.masked(&[(a, b)]);
                let after = score_cells(&sim, &hidden, &all, &[2]).remove(0);
                for (c, &(i, j)) in all.iter().enumerate() {
                    if i != a && j != b {
                        assert_eq!(base[c], after[c]);
                    }
                }
            }
        }
    }
}
