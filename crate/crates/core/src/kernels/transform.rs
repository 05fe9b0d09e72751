use nalgebra::DMatrix;

use super::KernelMatrix;
use crate::error::{Error, Result};
use crate::linalg;

/// Pairwise squared distances induced by a kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    pub squared: DMatrix<f64>,
}

impl DistanceMatrix {
    pub fn n(&self) -> usize {
        self.squared.nrows()
    }

    /// Plain (non-squared) distances.
    pub fn distances(&self) -> DMatrix<f64> {
        self.squared.map(f64::sqrt)
    }
}

/// `D²[i][j] = K[i][i] + K[j][j] − 2K[i][j]`, clamped at zero.
pub fn kernel_to_distance(k: &KernelMatrix) -> Result<DistanceMatrix> {
    linalg::ensure_square(&k.values, "kernel")?;
    linalg::ensure_finite(&k.values, "kernel")?;
    let asym = linalg::asymmetry(&k.values);
    if asym > k.symmetry_tolerance() {
        return Err(Error::Asymmetric(asym));
    }
    let n = k.n();
    let kv = &k.values;
    let mut squared = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let off = 0.5 * (kv[(i, j)] + kv[(j, i)]);
            let d = (kv[(i, i)] + kv[(j, j)] - 2.0 * off).max(0.0);
            squared[(i, j)] = d;
            squared[(j, i)] = d;
        }
    }
    Ok(DistanceMatrix { squared })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// `K[i][j] / √(K[i][i]·K[j][j])`.
    Cosine,
    /// `K · n / trace(K)`.
    Trace,
}

pub fn normalize_kernel(k: &KernelMatrix, mode: Normalization) -> Result<KernelMatrix> {
    let n = k.n();
    let values = match mode {
        Normalization::Cosine => {
            let diag: Vec<f64> = (0..n).map(|i| k.values[(i, i)]).collect();
            if let Some(i) = diag.iter().position(|&d| d <= 0.0) {
                return Err(Error::invalid(format!(
                    "cosine normalization needs a positive diagonal (entry {i} is {})",
                    diag[i]
                )));
            }
            let mut v = DMatrix::from_fn(n, n, |i, j| k.values[(i, j)] / (diag[i] * diag[j]).sqrt());
            for i in 0..n {
                v[(i, i)] = 1.0;
            }
            v
        }
        Normalization::Trace => {
            let trace = k.values.trace();
            if trace <= 0.0 {
                return Err(Error::invalid(format!(
                    "trace normalization needs a positive trace, got {trace}"
                )));
            }
            &k.values * (n as f64 / trace)
        }
    };
    Ok(KernelMatrix {
        values,
        tag: k.tag.clone(),
        units: k.units.clone(),
    })
}

/// Double centring `(I − 1ₙ) K (I − 1ₙ)`.
pub fn center_kernel(k: &KernelMatrix) -> Result<KernelMatrix> {
    linalg::ensure_square(&k.values, "kernel")?;
    Ok(KernelMatrix {
        values: center_matrix(&k.values),
        tag: k.tag.clone(),
        units: k.units.clone(),
    })
}

pub(crate) fn center_matrix(k: &DMatrix<f64>) -> DMatrix<f64> {
    let n = k.nrows();
    if n == 0 {
        return k.clone();
    }
    let nf = n as f64;
    let row_means: Vec<f64> = (0..n).map(|i| k.row(i).sum() / nf).collect();
    let col_means: Vec<f64> = (0..n).map(|j| k.column(j).sum() / nf).collect();
    let grand = row_means.iter().sum::<f64>() / nf;
    let centred = DMatrix::from_fn(n, n, |i, j| k[(i, j)] - row_means[i] - col_means[j] + grand);
    linalg::symmetrize(&centred)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn km(rows: usize, data: &[f64]) -> KernelMatrix {
        KernelMatrix::new(DMatrix::from_row_slice(rows, rows, data), "test")
    }

    #[test]
    fn identity_distances() {
        let d = kernel_to_distance(&km(2, &[1.0, 0.0, 0.0, 1.0])).unwrap();
        assert_eq!(d.squared, DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 2.0, 0.0]));
    }

    #[test]
    fn linear_kernel_gives_euclidean() {
        let x = DMatrix::from_row_slice(2, 1, &[0.0, 3.0]);
        let k = KernelMatrix::new(&x * x.transpose(), "lin");
        assert_eq!(kernel_to_distance(&k).unwrap().squared[(0, 1)], 9.0);
    }

    #[test]
    fn asymmetric_kernel_rejected() {
        assert!(kernel_to_distance(&km(2, &[1.0, 0.5, 0.0, 1.0])).is_err());
    }

    #[test]
    fn normalizations() {
        let k = km(2, &[4.0, 2.0, 2.0, 9.0]);
        let c = normalize_kernel(&k, Normalization::Cosine).unwrap();
        assert_eq!(c.values[(0, 0)], 1.0);
        assert!((c.values[(0, 1)] - 2.0 / 6.0).abs() < 1e-15);
        let doubled = KernelMatrix::new(&k.values * 2.0, "k2");
        let c2 = normalize_kernel(&doubled, Normalization::Cosine).unwrap();
        assert!((c2.values - &c.values).norm() < 1e-15);
        let t = normalize_kernel(&k, Normalization::Trace).unwrap();
        assert!((t.values.trace() - 2.0).abs() < 1e-15);
        assert!(normalize_kernel(&km(2, &[0.0, 0.0, 0.0, 1.0]), Normalization::Cosine).is_err());
        assert!(normalize_kernel(&km(1, &[0.0]), Normalization::Trace).is_err());
    }

    #[test]
    fn centring() {
        let ones = km(3, &[1.0; 9]);
        assert!(center_kernel(&ones).unwrap().values.norm() < 1e-15);
        let k = km(3, &[2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0]);
        let c = center_kernel(&k).unwrap();
        for i in 0..3 {
            assert!(c.values.row(i).sum().abs() < 1e-12);
            assert!(c.values.column(i).sum().abs() < 1e-12);
        }
        let cc = center_kernel(&c).unwrap();
        assert!((cc.values - c.values).norm() < 1e-12);
    }
}
