//! Similarity kernels over vector, string and graph inputs, plus the
//! normalization, centring and kernel-to-distance conversions used by the
//! downstream tasks.

mod graph;
mod spec;
mod string;
mod transform;
mod vector;

use nalgebra::DMatrix;

pub use graph::{exp_diffusion, laplacian, laplacian_diffusion, symmetrized_adjacency};
pub use spec::{
    GraphKernel, KernelSpec, StringKernelConfig, StringVariant, VectorKernel, View, DEGREE_GRID, RATE_GRID,
    SUBSTRING_GRID,
};
pub use string::{string_kernel, string_kernel_pair, SuffixAutomaton};
pub use transform::{center_kernel, kernel_to_distance, normalize_kernel, DistanceMatrix, Normalization};
pub use vector::{bow_kernel, poly_kernel, rbf_kernel, vector_kernel, vector_kernel_row};

use crate::error::{Error, Result};
use crate::ingest::UnitIndex;
use crate::linalg::{self, SymEigen};

/// Symmetric positive semi-definite similarity over units.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub values: DMatrix<f64>,
    /// Human-readable provenance, e.g. `ed(alpha=1)`.
    pub tag: String,
    pub units: Option<UnitIndex>,
}

/// Outcome of [`KernelMatrix::spectrum_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdReport {
    pub asymmetry: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

impl PsdReport {
    pub fn is_psd(&self) -> bool {
        self.min_eigenvalue >= -1e-8 * self.max_eigenvalue.max(1.0)
    }
}

impl KernelMatrix {
    pub fn new(values: DMatrix<f64>, tag: impl Into<String>) -> Self {
        KernelMatrix {
            values,
            tag: tag.into(),
            units: None,
        }
    }

    pub fn with_units(mut self, units: UnitIndex) -> Self {
        self.units = Some(units);
        self
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    /// Symmetry tolerance relative to the largest entry.
    pub fn symmetry_tolerance(&self) -> f64 {
        1e-10 * linalg::max_abs(&self.values).max(1.0)
    }

    pub fn spectrum_check(&self) -> PsdReport {
        let eig = SymEigen::new(&self.values);
        PsdReport {
            asymmetry: linalg::asymmetry(&self.values),
            min_eigenvalue: eig.min(),
            max_eigenvalue: eig.max(),
        }
    }

    /// Verifies the kernel invariants: finite, symmetric, PSD up to round-off.
    pub fn validate(&self) -> Result<PsdReport> {
        linalg::ensure_square(&self.values, "kernel")?;
        linalg::ensure_finite(&self.values, &format!("kernel {}", self.tag))?;
        let report = self.spectrum_check();
        if report.asymmetry > self.symmetry_tolerance() {
            return Err(Error::Asymmetric(report.asymmetry));
        }
        if !report.is_psd() {
            return Err(Error::invalid(format!(
                "kernel {} is not PSD (min eigenvalue {:e}, max {:e})",
                self.tag, report.min_eigenvalue, report.max_eigenvalue
            )));
        }
        Ok(report)
    }

    /// Fails unless `self` and `other` are indexed by the same units.
    pub fn check_compatible(&self, other: &KernelMatrix) -> Result<()> {
        if self.n() != other.n() {
            return Err(Error::UnitMismatch(format!(
                "kernel {} has {} units, {} has {}",
                self.tag,
                self.n(),
                other.tag,
                other.n()
            )));
        }
        if let (Some(a), Some(b)) = (&self.units, &other.units) {
            if a != b {
                return Err(Error::UnitMismatch(format!(
                    "kernels {} and {} use different unit orders",
                    self.tag, other.tag
                )));
            }
        }
        Ok(())
    }
}

/// Checks a batch of kernels share one unit order and returns its size.
pub fn common_size(kernels: &[KernelMatrix]) -> Result<usize> {
    let first = kernels.first().ok_or_else(|| Error::invalid("no kernels given"))?;
    for k in &kernels[1..] {
        first.check_compatible(k)?;
    }
    Ok(first.n())
}
