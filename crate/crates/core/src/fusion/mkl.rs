use crate::error::{Error, Result};
use crate::kernels::{self, normalize_kernel, KernelMatrix, Normalization};

/// Kernel addition: each kernel is normalized per `mode` and the results are
/// summed entrywise. Equivalent to concatenating the feature spaces.
pub fn mkl_add(kernels: &[KernelMatrix], mode: Normalization) -> Result<KernelMatrix> {
    if kernels.len() < 2 {
        return Err(Error::invalid(format!(
            "kernel addition needs at least 2 kernels, got {}",
            kernels.len()
        )));
    }
    kernels::common_size(kernels)?;
    let mut normalized = kernels.iter().map(|k| normalize_kernel(k, mode));
    let mut sum = normalized.next().expect("non-empty")?.values;
    for k in normalized {
        sum += k?.values;
    }
    let tags: Vec<&str> = kernels.iter().map(|k| k.tag.as_str()).collect();
    let units = kernels.iter().find_map(|k| k.units.clone());
    Ok(KernelMatrix {
        values: sum,
        tag: format!("mkl({})", tags.join("+")),
        units,
    })
}
