use nalgebra::{DMatrix, DVector};

use super::{KernelMatrix, KernelSpec, VectorKernel};
use crate::error::{Error, Result};
use crate::linalg;

/// `K[i][j] = (⟨x_i, x_j⟩ + offset)^degree` over the rows of `x`.
pub fn poly_kernel(x: &DMatrix<f64>, degree: u32, offset: f64) -> Result<KernelMatrix> {
    if degree == 0 {
        return Err(Error::invalid("polynomial degree must be at least 1"));
    }
    linalg::ensure_finite(x, "feature matrix")?;
    let gram = x * x.transpose();
    let values = linalg::symmetrize(&gram.map(|g| (g + offset).powi(degree as i32)));
    Ok(KernelMatrix::new(
        values,
        KernelSpec::Vector(VectorKernel::Poly { degree, offset }).to_string(),
    ))
}

/// Gaussian kernel `exp(−gamma ‖x_i − x_j‖²)`; the diagonal is exactly 1.
pub fn rbf_kernel(x: &DMatrix<f64>, gamma: f64) -> Result<KernelMatrix> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::invalid(format!("gamma must be positive, got {gamma}")));
    }
    linalg::ensure_finite(x, "feature matrix")?;
    let n = x.nrows();
    let mut values = DMatrix::identity(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d2 = (x.row(i) - x.row(j)).norm_squared();
            let v = (-gamma * d2).exp();
            values[(i, j)] = v;
            values[(j, i)] = v;
        }
    }
    Ok(KernelMatrix::new(
        values,
        KernelSpec::Vector(VectorKernel::Rbf { gamma }).to_string(),
    ))
}

/// Cosine similarity of rows. An all-zero row is similar only to itself.
pub fn bow_kernel(x: &DMatrix<f64>) -> Result<KernelMatrix> {
    linalg::ensure_finite(x, "feature matrix")?;
    let n = x.nrows();
    let norms: Vec<f64> = x.row_iter().map(|r| r.norm()).collect();
    let zero_rows = norms.iter().filter(|&&v| v == 0.0).count();
    if zero_rows > 0 {
        log::warn!("bag-of-words kernel: {zero_rows} all-zero rows");
    }
    let gram = x * x.transpose();
    let mut values = DMatrix::zeros(n, n);
    for i in 0..n {
        values[(i, i)] = 1.0;
        for j in (i + 1)..n {
            let v = if norms[i] == 0.0 || norms[j] == 0.0 {
                0.0
            } else {
                0.5 * (gram[(i, j)] + gram[(j, i)]) / (norms[i] * norms[j])
            };
            values[(i, j)] = v;
            values[(j, i)] = v;
        }
    }
    Ok(KernelMatrix::new(
        values,
        KernelSpec::Vector(VectorKernel::Bow).to_string(),
    ))
}

/// Kernel matrix of `kind` over the rows of `x`.
pub fn vector_kernel(x: &DMatrix<f64>, kind: VectorKernel) -> Result<KernelMatrix> {
    match kind {
        VectorKernel::Poly { degree, offset } => poly_kernel(x, degree, offset),
        VectorKernel::Rbf { gamma } => rbf_kernel(x, gamma),
        VectorKernel::Bow => bow_kernel(x),
    }
}

/// Kernel values between an out-of-sample vector `q` and every row of `x`,
/// consistent with [`vector_kernel`].
pub fn vector_kernel_row(x: &DMatrix<f64>, q: &DVector<f64>, kind: VectorKernel) -> Result<DVector<f64>> {
    if q.len() != x.ncols() {
        return Err(Error::invalid(format!(
            "query has {} features, training rows have {}",
            q.len(),
            x.ncols()
        )));
    }
    if q.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("query vector".into()));
    }
    let dots = x * q;
    Ok(match kind {
        VectorKernel::Poly { degree, offset } => dots.map(|g| (g + offset).powi(degree as i32)),
        VectorKernel::Rbf { gamma } => DVector::from_iterator(
            x.nrows(),
            x.row_iter()
                .map(|r| (-gamma * (r.transpose() - q).norm_squared()).exp()),
        ),
        VectorKernel::Bow => {
            let qn = q.norm();
            DVector::from_iterator(
                x.nrows(),
                x.row_iter().zip(dots.iter()).map(|(r, &g)| {
                    let rn = r.norm();
                    if qn == 0.0 || rn == 0.0 {
                        0.0
                    } else {
                        g / (rn * qn)
                    }
                }),
            )
        }
    })
}
