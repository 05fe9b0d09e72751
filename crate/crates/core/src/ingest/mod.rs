//! Loading and aligning the structural, evolutionary and lexical views.

mod callgraph;
mod packages;
mod text;
mod transactions;
mod units;

use std::collections::BTreeMap;
use std::path::Path;

pub use callgraph::{load_call_graph, parse_call_edges, read_call_edges, CallEdge, CallGraph};
pub use packages::{build_package_tree, oversized_packages, PackageTree, DEFAULT_MIN_PACKAGE_SIZE, OVERSIZED_PACKAGE};
pub use text::{lsi_rank, parse_word_list, split_identifier, Lsi, Preprocessor, TfIdf};
pub use transactions::{
    load_transactions, parse_transactions, read_transactions, RawTransaction, TransactionLog, DEFAULT_MAX_FILES,
};
pub use units::{intersect_views, UnitIndex};

use crate::error::{Error, Result};

/// Maps a transaction entry to a unit name. Entries containing a path
/// separator are treated as file paths: the extension is stripped and
/// separators become dots. Anything else is taken verbatim.
pub fn unit_name_from_entry(entry: &str) -> String {
    if entry.contains('/') || entry.contains('\\') {
        unit_name_from_path(entry)
    } else {
        entry.to_string()
    }
}

/// `org/x/Foo.java` → `org.x.Foo`.
pub fn unit_name_from_path(path: &str) -> String {
    let parts: Vec<&str> = path.split(['/', '\\']).filter(|p| !p.is_empty() && *p != ".").collect();
    let Some((last, dirs)) = parts.split_last() else {
        return String::new();
    };
    let stem = match last.rfind('.') {
        Some(i) if i > 0 => &last[..i],
        _ => last,
    };
    let mut segments: Vec<&str> = dirs.to_vec();
    segments.push(stem);
    segments.join(".")
}

/// Reads every regular file under `dir` as one document; the unit name is
/// the relative path with separators turned into dots and the extension
/// removed. Files are read as lossy UTF-8.
pub fn read_corpus_dir(dir: &Path) -> Result<BTreeMap<String, String>> {
    let mut docs = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(current) = stack.pop() {
        let entries = std::fs::read_dir(&current).map_err(|e| Error::io(&current, e))?;
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(&current, e))?;
            let path = entry.path();
            let ty = entry.file_type().map_err(|e| Error::io(&path, e))?;
            if ty.is_dir() {
                stack.push(path);
            } else if ty.is_file() {
                let rel = path
                    .strip_prefix(dir)
                    .map_err(|_| Error::format(&path, "outside corpus root"))?;
                let name = unit_name_from_path(&rel.to_string_lossy());
                let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
                let text = String::from_utf8_lossy(&bytes).into_owned();
                if docs.insert(name.clone(), text).is_some() {
                    return Err(Error::format(&path, format!("two corpus files map to unit `{name}`")));
                }
            }
        }
    }
    if docs.is_empty() {
        return Err(Error::EmptyView("corpus".into()));
    }
    Ok(docs)
}

/// Preprocessed source text of every unit, with its vector-space features.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub units: UnitIndex,
    /// Term sequence per unit, in unit order.
    pub tokens: Vec<Vec<String>>,
    pub tfidf: TfIdf,
    pub lsi: Lsi,
}

impl Corpus {
    /// Builds features for the units of `index`; every unit must have a
    /// document in `raw`.
    pub fn build(raw: &BTreeMap<String, String>, index: &UnitIndex, pre: &Preprocessor) -> Result<Corpus> {
        let tokens: Vec<Vec<String>> = index
            .names()
            .iter()
            .map(|u| {
                raw.get(u).map(|text| pre.tokens(text)).ok_or_else(|| Error::Unknown {
                    kind: "corpus document",
                    name: u.clone(),
                })
            })
            .collect::<Result<_>>()?;
        Corpus::from_tokens(index, tokens)
    }

    /// Builds features from already preprocessed term sequences.
    pub fn from_tokens(index: &UnitIndex, tokens: Vec<Vec<String>>) -> Result<Corpus> {
        if tokens.len() != index.len() {
            return Err(Error::UnitMismatch(format!(
                "{} token lists for {} units",
                tokens.len(),
                index.len()
            )));
        }
        let tfidf = TfIdf::fit(&tokens)?;
        let lsi = Lsi::fit(&tfidf.matrix)?;
        Ok(Corpus {
            units: index.clone(),
            tokens,
            tfidf,
            lsi,
        })
    }

    /// Space-joined term sequences, the input of the string kernels.
    pub fn documents(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.join(" ")).collect()
    }
}
