use nalgebra::DMatrix;

use super::{GraphKernel, KernelMatrix, KernelSpec};
use crate::error::{Error, Result};
use crate::linalg::{self, SymEigen};

/// Exponents above this would overflow `f64::exp`; the kernel is then
/// rescaled by `exp(−alpha·λ_max)`, which only changes its overall scale.
const MAX_EXPONENT: f64 = 600.0;

/// `sym(A) = (A + Aᵀ) / 2`.
pub fn symmetrized_adjacency(adjacency: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    linalg::ensure_square(adjacency, "adjacency matrix")?;
    linalg::ensure_finite(adjacency, "adjacency matrix")?;
    Ok(linalg::symmetrize(adjacency))
}

/// `L = Deg(S) − S` for a symmetric weight matrix `S`.
pub fn laplacian(s: &DMatrix<f64>) -> DMatrix<f64> {
    let mut l = -s.clone();
    for i in 0..s.nrows() {
        l[(i, i)] += s.row(i).sum();
    }
    l
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("alpha must be positive, got {alpha}")))
    }
}

/// `exp(alpha · sym(A))` via symmetric eigendecomposition.
pub fn exp_diffusion(adjacency: &DMatrix<f64>, alpha: f64) -> Result<KernelMatrix> {
    check_alpha(alpha)?;
    let s = symmetrized_adjacency(adjacency)?;
    let eig = SymEigen::new(&s);
    let top = alpha * eig.max();
    let mut tag = KernelSpec::Graph(GraphKernel::ExpDiffusion(alpha)).to_string();
    let values = if top > MAX_EXPONENT {
        log::warn!("{tag}: rescaling by exp(-{top}) to stay finite");
        tag.push_str(&format!("[scaled exp(-{top})]"));
        eig.map(|v| (alpha * v - top).exp())
    } else {
        eig.map(|v| (alpha * v).exp())
    };
    Ok(KernelMatrix::new(values, tag))
}

/// `exp(−alpha · L)` with `L` the Laplacian of `sym(A)`. Rows sum to one.
pub fn laplacian_diffusion(adjacency: &DMatrix<f64>, alpha: f64) -> Result<KernelMatrix> {
    check_alpha(alpha)?;
    let s = symmetrized_adjacency(adjacency)?;
    let eig = SymEigen::new(&laplacian(&s));
    let values = eig.map(|v| (-alpha * v).exp());
    Ok(KernelMatrix::new(
        values,
        KernelSpec::Graph(GraphKernel::LaplacianDiffusion(alpha)).to_string(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn single_directed_edge() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let k = exp_diffusion(&a, 1.0).unwrap().values;
        assert!(close(k[(0, 1)], 0.5f64.sinh(), 1e-12));
        assert!(close(k[(0, 0)], 0.5f64.cosh(), 1e-12));
    }

    #[test]
    fn undirected_edge() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let k = exp_diffusion(&a, 1.0).unwrap().values;
        assert!(close(k[(0, 0)], 1f64.cosh(), 1e-12));
        assert!(close(k[(0, 1)], 1f64.sinh(), 1e-12));
        let l = laplacian_diffusion(&a, 1.0).unwrap().values;
        let e2 = (-2f64).exp();
        assert!(close(l[(0, 0)], (1.0 + e2) / 2.0, 1e-12));
        assert!(close(l[(0, 1)], (1.0 - e2) / 2.0, 1e-12));
    }

    #[test]
    fn vanishing_rate_is_identity() {
        let a = DMatrix::from_row_slice(3, 3, &[0.0, 2.0, 0.0, 1.0, 0.0, 3.0, 0.0, 0.0, 0.0]);
        for k in [
            exp_diffusion(&a, 1e-12).unwrap(),
            laplacian_diffusion(&a, 1e-12).unwrap(),
        ] {
            assert!((k.values - DMatrix::identity(3, 3)).norm() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_alpha() {
        let a = DMatrix::zeros(2, 2);
        assert!(exp_diffusion(&a, 0.0).is_err());
        assert!(laplacian_diffusion(&a, f64::NAN).is_err());
    }

    #[test]
    fn huge_rates_are_rescaled() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 50.0, 50.0, 0.0]);
        let k = exp_diffusion(&a, 100.0).unwrap();
        assert!(k.values.iter().all(|v| v.is_finite()));
        assert!(k.tag.contains("scaled"));
        assert!(close(k.values[(0, 0)], 0.5, 1e-12));
    }
}
