//! Co-trained spectral embedding: each view's spectral embedding is pulled
//! towards the others by projecting its affinity onto their leading
//! eigenspaces, iteration after iteration.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{self, KernelMatrix};
use crate::linalg::{self, SymEigen};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CotrainConfig {
    /// Eigenvectors kept per view.
    pub width: usize,
    pub iters: usize,
    /// Stop once the largest per-view drift falls below this.
    pub tol: f64,
}

impl CotrainConfig {
    pub fn new(width: usize) -> Self {
        CotrainConfig {
            width,
            iters: 50,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEmbedding {
    /// Row-normalized `n × c` embedding of each view.
    pub views: Vec<DMatrix<f64>>,
    /// Column concatenation of `views`.
    pub fused: DMatrix<f64>,
    pub width: usize,
    /// Largest per-view subspace drift after each iteration.
    pub drift: Vec<f64>,
    /// Iteration at which the drift first dropped below the tolerance.
    pub converged_at: Option<usize>,
}

impl SpectralEmbedding {
    /// Inner products of fused rows, used as the fused similarity.
    pub fn similarity(&self, tag: &str) -> KernelMatrix {
        KernelMatrix::new(
            linalg::symmetrize(&(&self.fused * self.fused.transpose())),
            format!("cotrain({tag})"),
        )
    }
}

/// `D^{-1/2} K D^{-1/2}` with `D` the row sums of `K`. Non-positive degrees
/// are floored to keep the scaling finite.
pub fn normalized_affinity(k: &DMatrix<f64>) -> DMatrix<f64> {
    let n = k.nrows();
    let degrees: Vec<f64> = (0..n).map(|i| k.row(i).sum()).collect();
    let floor = 1e-12 * degrees.iter().fold(0.0f64, |a, d| a.max(d.abs())).max(1e-300);
    let inv_sqrt: Vec<f64> = degrees.iter().map(|&d| 1.0 / d.max(floor).sqrt()).collect();
    let scaled = DMatrix::from_fn(n, n, |i, j| k[(i, j)] * inv_sqrt[i] * inv_sqrt[j]);
    linalg::symmetrize(&scaled)
}

/// Top-`c` eigenvectors (largest eigenvalues) as columns.
fn leading_eigenvectors(s: &DMatrix<f64>, c: usize) -> DMatrix<f64> {
    let eig = SymEigen::new(s);
    eig.vectors.columns(0, c).into_owned()
}

/// Single-view spectral embedding: leading eigenvectors of the normalized
/// affinity of `k`, before row normalization.
pub fn spectral_embedding(k: &DMatrix<f64>, c: usize) -> DMatrix<f64> {
    leading_eigenvectors(&normalized_affinity(k), c)
}

fn normalize_rows(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for mut row in out.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    out
}

pub fn cotrain(kernels: &[KernelMatrix], cfg: CotrainConfig) -> Result<SpectralEmbedding> {
    if kernels.len() < 2 {
        return Err(Error::invalid("co-training needs at least 2 views"));
    }
    let n = kernels::common_size(kernels)?;
    if cfg.width < 2 {
        return Err(Error::invalid("embedding width must be at least 2"));
    }
    if cfg.width >= n {
        return Err(Error::invalid(format!(
            "embedding width {} must be smaller than the number of units {n}",
            cfg.width
        )));
    }
    for k in kernels {
        linalg::ensure_finite(&k.values, &k.tag)?;
    }
    let c = cfg.width;
    let views = kernels.len();
    let original: Vec<DMatrix<f64>> = kernels.par_iter().map(|k| normalized_affinity(&k.values)).collect();
    let mut bases: Vec<DMatrix<f64>> = original.par_iter().map(|s| leading_eigenvectors(s, c)).collect();

    let mut drift = Vec::new();
    let mut converged_at = None;
    for iteration in 1..=cfg.iters {
        let next: Vec<DMatrix<f64>> = (0..views)
            .into_par_iter()
            .map(|v| {
                let mut projected = DMatrix::zeros(n, n);
                for (w, basis) in bases.iter().enumerate() {
                    if w != v {
                        projected += basis * (basis.transpose() * &original[v]);
                    }
                }
                projected /= (views - 1) as f64;
                leading_eigenvectors(&linalg::symmetrize(&projected), c)
            })
            .collect();
        let change = next
            .iter()
            .zip(&bases)
            .map(|(a, b)| linalg::subspace_distance(a, b))
            .fold(0.0f64, f64::max);
        bases = next;
        drift.push(change);
        if change < cfg.tol {
            converged_at = Some(iteration);
            break;
        }
    }
    if converged_at.is_none() && cfg.iters > 0 {
        log::info!(
            "co-training did not converge in {} iterations (final drift {:e})",
            cfg.iters,
            drift.last().copied().unwrap_or(f64::NAN)
        );
    }

    let views: Vec<DMatrix<f64>> = bases.iter().map(normalize_rows).collect();
    let mut fused = DMatrix::zeros(n, c * views.len());
    for (v, block) in views.iter().enumerate() {
        fused.columns_mut(v * c, c).copy_from(block);
    }
    Ok(SpectralEmbedding {
        views,
        fused,
        width: c,
        drift,
        converged_at,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block_kernel() -> KernelMatrix {
        let mut k = DMatrix::from_element(4, 4, 0.01);
        for (a, b) in [(0, 1), (2, 3)] {
            k[(a, a)] = 1.0;
            k[(b, b)] = 1.0;
            k[(a, b)] = 1.0;
            k[(b, a)] = 1.0;
        }
        KernelMatrix::new(k, "blocks")
    }

    #[test]
    fn identical_views_are_stationary() {
        let k = KernelMatrix::new(
            DMatrix::from_row_slice(
                4,
                4,
                &[
                    1.0, 0.8, 0.1, 0.2, 0.8, 1.0, 0.3, 0.1, 0.1, 0.3, 1.0, 0.7, 0.2, 0.1, 0.7, 1.0,
                ],
            ),
            "k",
        );
        let emb = cotrain(&[k.clone(), k.clone()], CotrainConfig::new(2)).unwrap();
        assert_eq!(emb.converged_at, Some(1));
        assert!(emb.drift[0] < 1e-6);
        let single = normalize_rows(&spectral_embedding(&k.values, 2));
        let diff = (&emb.views[0] - &single).abs().max();
        assert!(diff < 1e-8, "{diff}");
    }

    #[test]
    fn zero_iterations_returns_raw_embeddings() {
        let k = block_kernel();
        let mut cfg = CotrainConfig::new(2);
        cfg.iters = 0;
        let emb = cotrain(&[k.clone(), k], cfg).unwrap();
        assert!(emb.drift.is_empty());
        assert_eq!(emb.fused.ncols(), 4);
    }

    #[test]
    fn width_checks() {
        let k = block_kernel();
        assert!(cotrain(&[k.clone(), k.clone()], CotrainConfig::new(4)).is_err());
        assert!(cotrain(&[k.clone(), k.clone()], CotrainConfig::new(1)).is_err());
        assert!(cotrain(&[k], CotrainConfig::new(2)).is_err());
    }
}
