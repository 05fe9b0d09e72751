//! Canonical correlation analysis over two or more views, and its kernel
//! variant (kernel PCA per view followed by regularized CCA).
//!
//! All views are solved together as one block generalized eigenproblem:
//! off-diagonal cross-covariances on the left, regularized per-view
//! covariances on the right. With two views this is exactly the classical
//! formulation and the eigenvalues are the canonical correlations.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{self, KernelMatrix};
use crate::linalg::{self, SymEigen};
use crate::matrix_io;

/// Relative eigenvalue cut-off for retained kernel principal components.
const COMPONENT_CUTOFF: f64 = 1e-9;
/// Ridge for linear CCA, relative to the mean covariance diagonal.
const LINEAR_RIDGE: f64 = 1e-8;

#[derive(Debug, Clone)]
struct Solution {
    /// Per-view `p_v × d` projections.
    projections: Vec<DMatrix<f64>>,
    correlations: Vec<f64>,
}

/// Solves the block problem for centred data blocks. `ridge[v]` is added to
/// the diagonal of view `v`'s covariance.
fn solve(blocks: &[DMatrix<f64>], ridge: &[f64], d: usize) -> Result<Solution> {
    let n = blocks[0].nrows();
    let denom = (n - 1) as f64;
    let dims: Vec<usize> = blocks.iter().map(|b| b.ncols()).collect();
    let offsets: Vec<usize> = dims
        .iter()
        .scan(0, |acc, &p| {
            let o = *acc;
            *acc += p;
            Some(o)
        })
        .collect();
    let total: usize = dims.iter().sum();

    let mut whiteners = Vec::with_capacity(blocks.len());
    for (v, b) in blocks.iter().enumerate() {
        let mut cov = b.transpose() * b / denom;
        for i in 0..dims[v] {
            cov[(i, i)] += ridge[v];
        }
        whiteners.push(linalg::inv_sqrt_spd(&cov)?);
    }
    let mut m = DMatrix::zeros(total, total);
    for v in 0..blocks.len() {
        for w in (v + 1)..blocks.len() {
            let cross = blocks[v].transpose() * &blocks[w] / denom;
            let white = &whiteners[v] * cross * &whiteners[w];
            m.view_mut((offsets[v], offsets[w]), (dims[v], dims[w]))
                .copy_from(&white);
            m.view_mut((offsets[w], offsets[v]), (dims[w], dims[v]))
                .copy_from(&white.transpose());
        }
    }
    let eig = SymEigen::new(&m);
    let scale = (blocks.len() - 1) as f64;
    let correlations: Vec<f64> = (0..d).map(|k| eig.values[k] / scale).collect();
    let mut projections = Vec::with_capacity(blocks.len());
    for v in 0..blocks.len() {
        let z = eig.vectors.view((offsets[v], 0), (dims[v], d)).into_owned();
        let mut w = &whiteners[v] * &z;
        // Unit variance of every canonical coordinate (under the ridge).
        for (mut col, zc) in w.column_iter_mut().zip(z.column_iter()) {
            let norm = zc.norm();
            if norm > 0.0 {
                col /= norm;
            }
        }
        projections.push(w);
    }
    Ok(Solution {
        projections,
        correlations,
    })
}

/// Linear CCA between feature matrices of the same units.
#[derive(Debug, Clone)]
pub struct LinearCca {
    /// Column means of each view, subtracted before projecting.
    pub means: Vec<DVector<f64>>,
    /// `p_v × d` canonical directions per view.
    pub projections: Vec<DMatrix<f64>>,
    /// Canonical correlations, descending.
    pub correlations: Vec<f64>,
    /// `n × d` canonical coordinates of the training rows per view.
    pub coords: Vec<DMatrix<f64>>,
}

pub fn cca(x1: &DMatrix<f64>, x2: &DMatrix<f64>, d: usize) -> Result<LinearCca> {
    multiset_cca(&[x1.clone(), x2.clone()], d)
}

/// CCA for any number of views (two or more).
pub fn multiset_cca(views: &[DMatrix<f64>], d: usize) -> Result<LinearCca> {
    if views.len() < 2 {
        return Err(Error::invalid("CCA needs at least 2 views"));
    }
    let n = views[0].nrows();
    if views.iter().any(|v| v.nrows() != n) {
        return Err(Error::UnitMismatch("views have different row counts".into()));
    }
    if n < 3 {
        return Err(Error::Insufficient(format!("CCA needs at least 3 samples, got {n}")));
    }
    if d == 0 {
        return Err(Error::invalid("subspace dimension must be positive"));
    }
    for v in views {
        linalg::ensure_finite(v, "CCA input")?;
    }
    let attainable = views.iter().map(|v| v.ncols()).min().unwrap_or(0);
    let d = clamp_dims(d, attainable);
    let centred: Vec<DMatrix<f64>> = views.iter().map(linalg::center_columns).collect();
    let means: Vec<DVector<f64>> = views
        .iter()
        .map(|v| DVector::from_iterator(v.ncols(), v.column_iter().map(|c| c.mean())))
        .collect();
    let ridge: Vec<f64> = centred.iter().map(|b| LINEAR_RIDGE * mean_variance(b)).collect();
    let sol = solve(&centred, &ridge, d)?;
    let coords = centred.iter().zip(&sol.projections).map(|(b, w)| b * w).collect();
    Ok(LinearCca {
        means,
        projections: sol.projections,
        correlations: sol.correlations,
        coords,
    })
}

fn clamp_dims(d: usize, attainable: usize) -> usize {
    if d > attainable {
        log::warn!("requested {d} canonical pairs, only {attainable} attainable");
        attainable
    } else {
        d
    }
}

fn mean_variance(centred: &DMatrix<f64>) -> f64 {
    let n = centred.nrows();
    let p = centred.ncols().max(1);
    centred.column_iter().map(|c| c.norm_squared()).sum::<f64>() / ((n - 1) as f64 * p as f64)
}

/// Kernel-PCA coordinates of one view within a fitted KCCA model.
#[derive(Debug, Clone, PartialEq)]
pub struct CcaView {
    pub tag: String,
    /// Column means of the uncentred training kernel.
    pub kernel_means: DVector<f64>,
    /// Retained eigenvectors of the centred kernel (`n × r`).
    pub eigvecs: DMatrix<f64>,
    /// Square roots of the retained eigenvalues.
    pub scales: DVector<f64>,
    /// `r × d` canonical projection.
    pub projection: DMatrix<f64>,
    /// `n × d` canonical coordinates of the training units.
    pub coords: DMatrix<f64>,
}

impl CcaView {
    /// Principal-component coordinates `U·S` of the training units.
    pub fn components(&self) -> DMatrix<f64> {
        let mut pc = self.eigvecs.clone();
        for (j, s) in self.scales.iter().enumerate() {
            pc.column_mut(j).scale_mut(*s);
        }
        pc
    }

    /// Maps a kernel row `k(q, x_i)` against the training units into this
    /// view's canonical coordinates. With `center` the row is centred
    /// consistently with the training kernel.
    pub fn project_kernel_row(&self, row: &DVector<f64>, center: bool) -> Result<DVector<f64>> {
        if row.len() != self.kernel_means.len() {
            return Err(Error::invalid(format!(
                "kernel row has {} entries, model has {} units",
                row.len(),
                self.kernel_means.len()
            )));
        }
        let k = if center {
            let diff = row - &self.kernel_means;
            let mean = diff.mean();
            diff.add_scalar(-mean)
        } else {
            row.clone()
        };
        let mut pc = self.eigvecs.transpose() * k;
        for (j, s) in self.scales.iter().enumerate() {
            pc[j] /= *s;
        }
        Ok(self.projection.transpose() * pc)
    }
}

/// Fitted (kernel) CCA across views with the overlaid shared subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct CcaModel {
    pub views: Vec<CcaView>,
    pub correlations: Vec<f64>,
    pub dims: usize,
    pub kappa: f64,
    /// Average of the per-view canonical coordinates (`n × d`).
    pub shared: DMatrix<f64>,
}

pub fn kcca(kernels: &[KernelMatrix], d: usize, kappa: f64) -> Result<CcaModel> {
    if kernels.len() < 2 {
        return Err(Error::invalid("kernel CCA needs at least 2 views"));
    }
    if d == 0 {
        return Err(Error::invalid("subspace dimension must be positive"));
    }
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(Error::invalid(format!("kappa must be non-negative, got {kappa}")));
    }
    let n = kernels::common_size(kernels)?;
    if n < 3 {
        return Err(Error::Insufficient(format!(
            "kernel CCA needs at least 3 units, got {n}"
        )));
    }
    let mut partial = Vec::with_capacity(kernels.len());
    for k in kernels {
        linalg::ensure_finite(&k.values, &k.tag)?;
        let kernel_means = DVector::from_iterator(n, k.values.column_iter().map(|c| c.mean()));
        let centred = kernels::center_kernel(k)?.values;
        let eig = SymEigen::new(&centred);
        let top = eig.max();
        let keep: Vec<usize> = (0..n)
            .filter(|&i| top > 0.0 && eig.values[i] > COMPONENT_CUTOFF * top)
            .collect();
        if keep.is_empty() {
            return Err(Error::Insufficient(format!(
                "kernel {} has no variance after centring",
                k.tag
            )));
        }
        let eigvecs = DMatrix::from_fn(n, keep.len(), |i, j| eig.vectors[(i, keep[j])]);
        let scales = DVector::from_iterator(keep.len(), keep.iter().map(|&i| eig.values[i].sqrt()));
        partial.push((k.tag.clone(), kernel_means, eigvecs, scales));
    }
    let attainable = partial.iter().map(|p| p.2.ncols()).min().unwrap_or(0);
    let d = clamp_dims(d, attainable);
    let blocks: Vec<DMatrix<f64>> = partial
        .iter()
        .map(|(_, _, u, s)| {
            let mut pc = u.clone();
            for (j, sv) in s.iter().enumerate() {
                pc.column_mut(j).scale_mut(*sv);
            }
            pc
        })
        .collect();
    let ridge: Vec<f64> = blocks.iter().map(|b| kappa * mean_variance(b)).collect();
    let sol = solve(&blocks, &ridge, d)?;
    let mut views = Vec::with_capacity(blocks.len());
    let mut shared = DMatrix::zeros(n, d);
    for ((tag, kernel_means, eigvecs, scales), (block, projection)) in
        partial.into_iter().zip(blocks.iter().zip(sol.projections))
    {
        let coords = block * &projection;
        shared += &coords;
        views.push(CcaView {
            tag,
            kernel_means,
            eigvecs,
            scales,
            projection,
            coords,
        });
    }
    shared /= views.len() as f64;
    Ok(CcaModel {
        views,
        correlations: sol.correlations,
        dims: d,
        kappa,
        shared,
    })
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    dims: usize,
    kappa: f64,
    correlations: Vec<String>,
    views: Vec<String>,
}

impl CcaModel {
    /// Cosine similarity of shared-subspace coordinates.
    pub fn similarity(&self) -> KernelMatrix {
        let mut rows = self.shared.clone();
        for mut r in rows.row_iter_mut() {
            let norm = r.norm();
            if norm > 0.0 {
                r /= norm;
            }
        }
        let tags: Vec<&str> = self.views.iter().map(|v| v.tag.as_str()).collect();
        KernelMatrix::new(
            linalg::symmetrize(&(&rows * rows.transpose())),
            format!("kcca({})", tags.join("+")),
        )
    }

    /// Writes the model as a directory of CSV files plus `manifest.json`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (i, v) in self.views.iter().enumerate() {
            let note = vec![format!("view {i}: {}", v.tag)];
            let means = DMatrix::from_column_slice(v.kernel_means.len(), 1, v.kernel_means.as_slice());
            let scales = DMatrix::from_column_slice(v.scales.len(), 1, v.scales.as_slice());
            matrix_io::write_matrix(&dir.join(format!("view{i}_means.csv")), &note, None, &means)?;
            matrix_io::write_matrix(&dir.join(format!("view{i}_U.csv")), &note, None, &v.eigvecs)?;
            matrix_io::write_matrix(&dir.join(format!("view{i}_S.csv")), &note, None, &scales)?;
            matrix_io::write_matrix(&dir.join(format!("view{i}_W.csv")), &note, None, &v.projection)?;
            matrix_io::write_matrix(&dir.join(format!("view{i}_coords.csv")), &note, None, &v.coords)?;
        }
        matrix_io::write_matrix(&dir.join("shared.csv"), &["shared subspace".into()], None, &self.shared)?;
        let manifest = Manifest {
            dims: self.dims,
            kappa: self.kappa,
            correlations: self.correlations.iter().map(|&c| matrix_io::format_value(c)).collect(),
            views: self.views.iter().map(|v| v.tag.clone()).collect(),
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        let path = dir.join("manifest.json");
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<CcaModel> {
        let path = dir.join("manifest.json");
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::format(&path, e.to_string()))?;
        let read = |name: String| matrix_io::read_matrix(&dir.join(name), false).map(|m| m.values);
        let column = |m: DMatrix<f64>| DVector::from_column_slice(m.as_slice());
        let mut views = Vec::new();
        for (i, tag) in manifest.views.iter().enumerate() {
            views.push(CcaView {
                tag: tag.clone(),
                kernel_means: column(read(format!("view{i}_means.csv"))?),
                eigvecs: read(format!("view{i}_U.csv"))?,
                scales: column(read(format!("view{i}_S.csv"))?),
                projection: read(format!("view{i}_W.csv"))?,
                coords: read(format!("view{i}_coords.csv"))?,
            });
        }
        let correlations = manifest
            .correlations
            .iter()
            .map(|c| c.parse::<f64>().map_err(|_| Error::format(&path, "bad correlation")))
            .collect::<Result<Vec<_>>>()?;
        Ok(CcaModel {
            views,
            correlations,
            dims: manifest.dims,
            kappa: manifest.kappa,
            shared: read("shared.csv".into())?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, p, |_, _| rng.random::<f64>() - 0.5)
    }

    #[test]
    fn identical_views_fully_correlated() {
        let x = random(50, 3, 1);
        let model = cca(&x, &x, 2).unwrap();
        assert!((model.correlations[0] - 1.0).abs() < 1e-6);
        let neg = cca(&x, &(-&x), 1).unwrap();
        assert!((neg.correlations[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn coordinates_are_uncorrelated_with_unit_variance() {
        let x1 = random(80, 4, 2);
        let x2 = &x1.columns(0, 2).into_owned() * DMatrix::from_row_slice(2, 3, &[1.0, 0.5, 0.0, 0.0, 1.0, 2.0])
            + random(80, 3, 3) * 0.5;
        let model = cca(&x1, &x2, 3).unwrap();
        for coords in &model.coords {
            let cov = coords.transpose() * coords / 79.0;
            for i in 0..3 {
                assert!((cov[(i, i)] - 1.0).abs() < 1e-6);
                for j in 0..3 {
                    if i != j {
                        assert!(cov[(i, j)].abs() < 1e-6);
                    }
                }
            }
        }
        assert!(model.correlations.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn dims_are_clamped_and_small_n_rejected() {
        let x1 = random(20, 2, 4);
        let x2 = random(20, 5, 5);
        assert_eq!(cca(&x1, &x2, 4).unwrap().correlations.len(), 2);
        assert!(cca(&random(2, 2, 6), &random(2, 2, 7), 1).is_err());
    }

    #[test]
    fn kcca_identical_and_heavily_regularized() {
        let x = random(30, 3, 8);
        let k = KernelMatrix::new(&x * x.transpose(), "lin");
        let model = kcca(&[k.clone(), k.clone()], 2, 1e-6).unwrap();
        assert!(model.correlations[0] > 0.999);
        let damped = kcca(&[k.clone(), k], 2, 1e6).unwrap();
        assert!(damped.correlations[0] < 1e-5);
    }

    #[test]
    fn training_rows_project_onto_stored_coords() {
        let x1 = random(25, 3, 9);
        let x2 = random(25, 4, 10);
        let k1 = KernelMatrix::new(&x1 * x1.transpose(), "a");
        let k2 = KernelMatrix::new((&x2 * x2.transpose()).map(|v| (v + 1.0).powi(2)), "b");
        let model = kcca(&[k1.clone(), k2.clone()], 2, 0.1).unwrap();
        for (view, k) in model.views.iter().zip([&k1, &k2]) {
            for i in 0..25 {
                let q = view.project_kernel_row(&k.values.row(i).transpose(), true).unwrap();
                for j in 0..2 {
                    assert!((q[j] - view.coords[(i, j)]).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn model_persists() {
        let x1 = random(12, 2, 11);
        let x2 = random(12, 3, 12);
        let model = kcca(
            &[
                KernelMatrix::new(&x1 * x1.transpose(), "a"),
                KernelMatrix::new(&x2 * x2.transpose(), "b"),
            ],
            2,
            0.1,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        model.save(dir.path()).unwrap();
        let back = CcaModel::load(dir.path()).unwrap();
        assert_eq!(back, model);
    }
}
