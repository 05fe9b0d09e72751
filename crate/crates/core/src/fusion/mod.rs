//! Fusion of per-view kernels into one similarity or one shared subspace.

mod cca;
mod cotrain;
mod mkl;

pub use cca::{cca, kcca, multiset_cca, CcaModel, CcaView, LinearCca};
pub use cotrain::{cotrain, normalized_affinity, spectral_embedding, CotrainConfig, SpectralEmbedding};
pub use mkl::mkl_add;
