use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::metrics::{max_f1, pr_auc};
use super::{score_cells, ItemMatrix};
use crate::error::{Error, Result};
use crate::kernels::KernelMatrix;

/// Neighbour counts searched during model selection.
pub const K_GRID: [usize; 10] = [10, 20, 30, 40, 50, 60, 70, 80, 90, 100];

#[derive(Debug, Clone, PartialEq)]
pub struct CvConfig {
    pub outer: usize,
    pub inner: usize,
    pub k_grid: Vec<usize>,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            outer: 10,
            inner: 9,
            k_grid: K_GRID.to_vec(),
            seed: 0,
        }
    }
}

/// Configuration chosen by the inner loop.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub kernel: usize,
    pub k: usize,
    /// Mean inner PRAUC of the chosen configuration.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub fold: usize,
    pub kernel: String,
    pub k: usize,
    pub inner_prauc: f64,
    pub pr_auc: f64,
    pub max_f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub folds: Vec<FoldResult>,
    pub mean_pr_auc: f64,
    pub mean_max_f1: f64,
}

impl EvalReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fold,kernel,k,metric,value\n");
        for f in &self.folds {
            for (metric, v) in [("prauc", f.pr_auc), ("maxf1", f.max_f1)] {
                let _ = writeln!(out, "{},{},{},{metric},{v:.6}", f.fold, f.kernel, f.k);
            }
        }
        let _ = writeln!(out, "# mean prauc {:.6}", self.mean_pr_auc);
        let _ = writeln!(out, "# mean maxf1 {:.6}", self.mean_max_f1);
        out
    }
}

/// Smallest positive count that leaves every outer fold and every inner
/// training split non-empty.
fn required_positives(outer: usize, inner: usize) -> usize {
    (outer.max(1)..)
        .find(|&p| p - p.div_ceil(outer) >= inner)
        .expect("bounded search")
}

fn usable_ks(grid: &[usize], n: usize) -> Result<Vec<usize>> {
    let mut ks: Vec<usize> = grid.iter().copied().filter(|&k| k >= 1 && k < n).collect();
    ks.sort_unstable();
    ks.dedup();
    if ks.is_empty() {
        if n < 2 {
            return Err(Error::Insufficient("need at least 2 units for neighbour voting".into()));
        }
        log::warn!("no neighbour count in the grid fits {n} units; using k = {}", n - 1);
        ks.push(n - 1);
    }
    Ok(ks)
}

/// Positive cells in seeded shuffled order.
fn shuffled_positives(w: &ItemMatrix, seed: u64) -> Vec<(usize, usize)> {
    let mut cells = w.cells_with(true);
    cells.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    cells
}

/// Partition of the positive cells into `outer` folds.
pub fn outer_folds(w: &ItemMatrix, outer: usize, seed: u64) -> Vec<Vec<(usize, usize)>> {
    let mut folds = vec![Vec::new(); outer];
    for (r, cell) in shuffled_positives(w, seed).into_iter().enumerate() {
        folds[r % outer].push(cell);
    }
    folds
}

/// PRAUC and max-F1 of `heldout` positives against the eligible zero cells
/// of `truth`, with the held-out cells hidden from `w_train`.
fn score_split(
    sim: &KernelMatrix,
    w_train: &ItemMatrix,
    heldout: &[(usize, usize)],
    negatives: &[(usize, usize)],
    ks: &[usize],
) -> Result<Vec<(f64, f64)>> {
    let hidden = w_train.masked(heldout);
    // Row-major order so that score ties never depend on the labels.
    let mut labelled: Vec<((usize, usize), bool)> = heldout
        .iter()
        .map(|&c| (c, true))
        .chain(negatives.iter().map(|&c| (c, false)))
        .collect();
    labelled.sort_unstable();
    let (cells, labels): (Vec<_>, Vec<_>) = labelled.into_iter().unzip();
    score_cells(&sim.values, &hidden, &cells, ks)
        .into_iter()
        .map(|scores| Ok((pr_auc(&scores, &labels)?, max_f1(&scores, &labels)?)))
        .collect()
}

/// Evaluates one configuration on one held-out set of positives.
pub fn evaluate_fold(sim: &KernelMatrix, w: &ItemMatrix, heldout: &[(usize, usize)], k: usize) -> Result<(f64, f64)> {
    let negatives = w.cells_with(false);
    Ok(score_split(sim, w, heldout, &negatives, &[k])?[0])
}

/// Inner model selection. Reads nothing but `w_train`, whose positives are
/// split into `inner` folds following a seeded shuffle.
pub fn inner_selection(
    kernels: &[KernelMatrix],
    w_train: &ItemMatrix,
    inner: usize,
    k_grid: &[usize],
    seed: u64,
) -> Result<Selection> {
    let ks = usable_ks(k_grid, w_train.n())?;
    let folds = outer_folds(w_train, inner, seed);
    if folds.iter().any(|f| f.is_empty()) {
        return Err(Error::Insufficient(format!(
            "inner cross-validation needs at least {inner} training positives"
        )));
    }
    let negatives = w_train.cells_with(false);
    if negatives.is_empty() {
        return Err(Error::Insufficient("no negative cells to evaluate against".into()));
    }
    let per_kernel: Vec<Vec<f64>> = kernels
        .par_iter()
        .map(|kern| {
            let mut sums = vec![0.0; ks.len()];
            for fold in &folds {
                for (s, (auc, _)) in sums.iter_mut().zip(score_split(kern, w_train, fold, &negatives, &ks)?) {
                    *s += auc;
                }
            }
            Ok(sums.into_iter().map(|s| s / folds.len() as f64).collect())
        })
        .collect::<Result<_>>()?;
    let mut best: Option<Selection> = None;
    for (kernel, means) in per_kernel.iter().enumerate() {
        for (kp, &score) in means.iter().enumerate() {
            if best.as_ref().is_none_or(|b| score > b.score) {
                best = Some(Selection {
                    kernel,
                    k: ks[kp],
                    score,
                });
            }
        }
    }
    best.ok_or_else(|| Error::invalid("empty kernel grid"))
}

/// Nested cross-validation over positive cells: the inner loop picks the
/// kernel and neighbour count, the outer loop scores that choice on unseen
/// positives against every zero cell.
pub fn nested_cv(kernels: &[KernelMatrix], w: &ItemMatrix, cfg: &CvConfig) -> Result<EvalReport> {
    if kernels.is_empty() {
        return Err(Error::invalid("empty kernel grid"));
    }
    if cfg.outer < 2 || cfg.inner < 2 {
        return Err(Error::invalid("fold counts must be at least 2"));
    }
    for k in kernels {
        if k.n() != w.n() {
            return Err(Error::UnitMismatch(format!(
                "kernel {} has {} units, item matrix {}",
                k.tag,
                k.n(),
                w.n()
            )));
        }
    }
    let positives = w.cells_with(true).len();
    let need = required_positives(cfg.outer, cfg.inner);
    if positives < need {
        return Err(Error::Insufficient(format!(
            "{positives} positive cells, need at least {need} for {}×{} folds",
            cfg.outer, cfg.inner
        )));
    }
    let negatives = w.cells_with(false);
    if negatives.is_empty() {
        return Err(Error::Insufficient("no negative cells to evaluate against".into()));
    }
    let folds = outer_folds(w, cfg.outer, cfg.seed);
    let results: Vec<FoldResult> = folds
        .par_iter()
        .enumerate()
        .map(|(f, heldout)| {
            let w_train = w.masked(heldout);
            let inner_seed = cfg.seed.wrapping_add(1 + f as u64);
            let sel = inner_selection(kernels, &w_train, cfg.inner, &cfg.k_grid, inner_seed)?;
            let kern = &kernels[sel.kernel];
            let (auc, f1) = score_split(kern, &w_train, heldout, &negatives, &[sel.k])?[0];
            Ok(FoldResult {
                fold: f,
                kernel: kern.tag.clone(),
                k: sel.k,
                inner_prauc: sel.score,
                pr_auc: auc,
                max_f1: f1,
            })
        })
        .collect::<Result<_>>()?;
    let count = results.len() as f64;
    let mean_pr_auc = results.iter().map(|r| r.pr_auc).sum::<f64>() / count;
    let mean_max_f1 = results.iter().map(|r| r.max_f1).sum::<f64>() / count;
    Ok(EvalReport {
        folds: results,
        mean_pr_auc,
        mean_max_f1,
    })
}
