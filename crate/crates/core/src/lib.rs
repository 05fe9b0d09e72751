//! Kernel-based multi-view analysis of software systems.
//!
//! A system is seen through three views over one shared set of units: its
//! call graph (structure), its version history (evolution) and its source
//! text (lexicon). Each view yields kernel matrices; the kernels are fused by
//! kernel addition, co-trained spectral embedding or kernel CCA, and the
//! result drives three tasks:
//!
//! * hierarchical modularization, scored against the package tree
//!   ([`clustering`]);
//! * k-nearest-neighbour link recommendation ([`recommend`]);
//! * cross-modal code search in a shared subspace ([`retrieval`]).

pub mod cli;
pub mod clustering;
pub mod error;
pub mod fusion;
pub mod ingest;
pub mod kernels;
pub mod linalg;
pub mod matrix_io;
pub mod recommend;
pub mod retrieval;
pub mod synth;
pub mod system;
pub mod tree;

pub use error::{Error, Result};
