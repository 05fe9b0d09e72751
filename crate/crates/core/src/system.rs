//! A software system loaded into its three aligned views.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::ingest::{
    build_package_tree, intersect_views, CallEdge, CallGraph, Corpus, PackageTree, Preprocessor, RawTransaction,
    TransactionLog, UnitIndex,
};
use crate::kernels::{
    exp_diffusion, laplacian_diffusion, string_kernel, vector_kernel, GraphKernel, KernelMatrix, KernelSpec, View,
};
use crate::synth::SynthSystem;
use crate::tree::Tree;

#[derive(Debug, Clone)]
pub struct System {
    pub units: UnitIndex,
    pub calls: CallGraph,
    pub changes: TransactionLog,
    pub corpus: Corpus,
}

impl System {
    /// Aligns the views on the units present in all three.
    pub fn assemble(
        edges: &[CallEdge],
        transactions: &[RawTransaction],
        documents: &BTreeMap<String, String>,
        pre: &Preprocessor,
        max_files: usize,
    ) -> Result<System> {
        let struct_names = CallGraph::names(edges);
        let evol_names = TransactionLog::names(transactions, max_files);
        let lex_names: BTreeSet<String> = documents.keys().cloned().collect();
        let units = intersect_views(&[("struct", &struct_names), ("evol", &evol_names), ("lex", &lex_names)])?;
        Ok(System {
            calls: CallGraph::from_edges(edges, &units)?,
            changes: TransactionLog::from_raw(transactions, &units, max_files)?,
            corpus: Corpus::build(documents, &units, pre)?,
            units,
        })
    }

    pub fn from_synth(s: &SynthSystem, pre: &Preprocessor) -> Result<System> {
        let edges: Vec<CallEdge> = s
            .calls
            .iter()
            .map(|(a, b)| CallEdge {
                caller: a.clone(),
                callee: b.clone(),
                weight: 1.0,
            })
            .collect();
        let raw: Vec<RawTransaction> = s
            .transactions
            .iter()
            .map(|(id, units)| RawTransaction {
                id: id.clone(),
                units: units.clone(),
            })
            .collect();
        System::assemble(&edges, &raw, &s.documents, pre, crate::ingest::DEFAULT_MAX_FILES)
    }

    pub fn n(&self) -> usize {
        self.units.len()
    }

    /// Computes a kernel of `view`; the kernel family must suit the view.
    pub fn kernel(&self, view: View, spec: &KernelSpec) -> Result<KernelMatrix> {
        if !view.accepts(spec) {
            return Err(Error::invalid(format!(
                "kernel `{spec}` does not apply to the {view} view"
            )));
        }
        let k = match (view, spec) {
            (View::Struct, KernelSpec::Graph(GraphKernel::ExpDiffusion(a))) => {
                exp_diffusion(&self.calls.adjacency, *a)?
            }
            (View::Struct, KernelSpec::Graph(GraphKernel::LaplacianDiffusion(a))) => {
                laplacian_diffusion(&self.calls.adjacency, *a)?
            }
            (View::Evol, KernelSpec::Vector(v)) => vector_kernel(&self.changes.incidence, *v)?,
            (View::Lex, KernelSpec::Vector(v)) => vector_kernel(&self.corpus.lsi.coords, *v)?,
            (View::Lex, KernelSpec::String(cfg)) => string_kernel(&self.corpus.documents(), *cfg)?,
            _ => unreachable!("compatibility checked above"),
        };
        Ok(k.with_units(self.units.clone()))
    }

    pub fn oracle(&self, min_size: usize) -> PackageTree {
        build_package_tree(&self.units, min_size)
    }
}

/// Children of the first branching node of a package tree: the number of
/// top-level packages.
pub fn top_level_packages(tree: &Tree) -> usize {
    let mut node = tree.root();
    loop {
        let kids = &tree.node(node).children;
        if kids.len() == 1 && !tree.is_leaf(kids[0]) {
            node = kids[0];
        } else {
            return kids.len();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::VectorKernel;
    use crate::synth::{generate, SynthConfig};

    #[test]
    fn synthetic_system_loads() {
        let s = generate(&SynthConfig::default()).unwrap();
        let sys = System::from_synth(&s, &Preprocessor::default()).unwrap();
        assert_eq!(sys.n(), 40);
        let oracle = sys.oracle(4);
        assert_eq!(top_level_packages(&oracle), 4);
        assert!(sys
            .kernel(View::Evol, &KernelSpec::parse("spec", Some(2.0)).unwrap())
            .is_err());
        let k = sys.kernel(View::Lex, &KernelSpec::Vector(VectorKernel::Bow)).unwrap();
        assert_eq!(k.n(), 40);
    }

    #[test]
    fn top_level_skips_single_chains() {
        let t = Tree::from_newick("((((a,b)x.y,(c,d)x.z)x));").unwrap();
        assert_eq!(top_level_packages(&t), 2);
    }
}
