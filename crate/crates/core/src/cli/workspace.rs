//! On-disk layout of an analysis workspace.
//!
//! ```text
//! manifest.json          artifact -> producing command and seed
//! units.txt              shared unit order
//! views/                 aligned view data and the package oracle
//! kernels/<view>_<slug>.csv
//! models/                fitted topic and retrieval models
//! reports/               clustering, recommendation and evaluation output
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{File, OpenOptions};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{
    parse_call_edges, parse_transactions, parse_word_list, CallGraph, Corpus, Preprocessor, TransactionLog, UnitIndex,
};
use crate::kernels::{KernelMatrix, KernelSpec, View};
use crate::matrix_io;
use crate::system::System;
use crate::tree::Tree;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub command: Vec<String>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<String>>,
}

/// Exclusive handle on a workspace directory; the lock file is removed on drop.
pub struct Workspace {
    pub root: PathBuf,
    lock: PathBuf,
    _file: File,
}

impl Drop for Workspace {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.lock);
    }
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

impl Workspace {
    /// Creates `root` if needed and takes the lock.
    pub fn open(root: &Path) -> Result<Workspace> {
        std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        let lock = root.join(".lock");
        let file = OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&lock)
            .map_err(|e| {
                if e.kind() == std::io::ErrorKind::AlreadyExists {
                    Error::invalid(format!(
                        "workspace {} is in use (remove {} if no other run is active)",
                        root.display(),
                        lock.display()
                    ))
                } else {
                    Error::io(&lock, e)
                }
            })?;
        Ok(Workspace {
            root: root.to_path_buf(),
            lock,
            _file: file,
        })
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    fn manifest_path(&self) -> PathBuf {
        self.path("manifest.json")
    }

    pub fn manifest(&self) -> Result<BTreeMap<String, ManifestEntry>> {
        let path = self.manifest_path();
        if !path.exists() {
            return Ok(BTreeMap::new());
        }
        serde_json::from_str(&read_file(&path)?).map_err(|e| Error::format(&path, e.to_string()))
    }

    /// Records the producer of each artifact (paths relative to the root).
    pub fn record(&self, artifacts: &[String], entry: &ManifestEntry) -> Result<()> {
        let mut manifest = self.manifest()?;
        for a in artifacts {
            manifest.insert(a.clone(), entry.clone());
        }
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        write_file(&self.manifest_path(), &(text + "\n"))
    }

    pub fn write(&self, rel: &str, text: &str) -> Result<String> {
        write_file(&self.path(rel), text)?;
        Ok(rel.to_string())
    }

    /// Persists the aligned views of `system` plus the word lists used.
    pub fn save_system(&self, system: &System, pre: &Preprocessor, oracle: &Tree) -> Result<Vec<String>> {
        let names = system.units.names();
        let mut written = Vec::new();
        written.push(self.write("units.txt", &lines(names))?);

        let mut calls = String::new();
        let adj = &system.calls.adjacency;
        for i in 0..adj.nrows() {
            for j in 0..adj.ncols() {
                if adj[(i, j)] > 0.0 {
                    let _ = writeln!(calls, "{}\t{}\t{}", names[i], names[j], adj[(i, j)]);
                }
            }
        }
        written.push(self.write("views/calls.tsv", &calls)?);

        let mut trans = String::new();
        for (id, members) in &system.changes.transactions {
            let members: Vec<&str> = members.iter().map(|&m| names[m].as_str()).collect();
            let _ = writeln!(trans, "{id}\t{}", members.join(","));
        }
        written.push(self.write("views/trans.tsv", &trans)?);

        let mut tokens = String::new();
        for (name, toks) in names.iter().zip(&system.corpus.tokens) {
            let _ = writeln!(tokens, "{name}\t{}", toks.join(" "));
        }
        written.push(self.write("views/tokens.tsv", &tokens)?);
        written.push(self.write("views/stopwords.txt", &lines(&pre.stopwords()))?);
        written.push(self.write("views/reserved.txt", &lines(&pre.reserved()))?);
        written.push(self.write("views/oracle.nwk", &(oracle.to_newick() + "\n"))?);
        Ok(written)
    }

    pub fn units(&self) -> Result<UnitIndex> {
        let path = self.path("units.txt");
        if !path.exists() {
            return Err(Error::invalid(format!(
                "{} is not an ingested workspace (run `ingest` first)",
                self.root.display()
            )));
        }
        let units = UnitIndex::new(read_file(&path)?.lines().filter(|l| !l.is_empty()));
        if units.is_empty() {
            return Err(Error::format(&path, "no units"));
        }
        Ok(units)
    }

    pub fn preprocessor(&self) -> Result<Preprocessor> {
        Ok(Preprocessor::new(
            parse_word_list(&read_file(&self.path("views/stopwords.txt"))?),
            parse_word_list(&read_file(&self.path("views/reserved.txt"))?),
        ))
    }

    pub fn oracle(&self) -> Result<Tree> {
        Tree::from_newick(read_file(&self.path("views/oracle.nwk"))?.trim())
    }

    /// Reloads the aligned views written by [`Workspace::save_system`].
    pub fn load_system(&self) -> Result<System> {
        let units = self.units()?;
        let path = self.path("views/calls.tsv");
        let calls = CallGraph::from_edges(&parse_call_edges(&read_file(&path)?, &path)?, &units)?;
        let path = self.path("views/trans.tsv");
        let raw = parse_transactions(&read_file(&path)?, &path)?;
        let changes = TransactionLog::from_raw(&raw, &units, usize::MAX)?;
        let path = self.path("views/tokens.tsv");
        let mut by_unit = BTreeMap::new();
        for (lineno, line) in read_file(&path)?.lines().enumerate() {
            let (name, toks) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(&path, lineno + 1, "expected `unit<TAB>tokens`"))?;
            by_unit.insert(
                name.to_string(),
                toks.split_whitespace().map(str::to_string).collect::<Vec<_>>(),
            );
        }
        let tokens = units
            .names()
            .iter()
            .map(|u| {
                by_unit.remove(u).ok_or_else(|| Error::Unknown {
                    kind: "token list for unit",
                    name: u.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(System {
            corpus: Corpus::from_tokens(&units, tokens)?,
            calls,
            changes,
            units,
        })
    }

    pub fn kernel_rel(view: View, spec: &KernelSpec) -> String {
        let raw = match spec {
            KernelSpec::String(c) if !c.normalize => "_raw",
            _ => "",
        };
        format!("kernels/{view}_{}{raw}.csv", spec.slug())
    }

    pub fn save_kernel(&self, rel: &str, view: View, spec: &KernelSpec, k: &KernelMatrix) -> Result<String> {
        let names = self.units()?;
        let comments = vec![format!("kernel {spec}"), format!("view {view}")];
        matrix_io::write_matrix(&self.path(rel), &comments, Some(names.names()), &k.values)?;
        Ok(rel.to_string())
    }

    /// Reads a kernel file and checks its header against the unit order.
    pub fn load_kernel(&self, path: &Path) -> Result<KernelMatrix> {
        let units = self.units()?;
        let m = matrix_io::read_matrix(path, true)?;
        let header = m.header.unwrap_or_default();
        if header != units.names() {
            return Err(Error::UnitMismatch(format!(
                "{} is not indexed by the workspace units",
                path.display()
            )));
        }
        if m.values.nrows() != units.len() || m.values.ncols() != units.len() {
            return Err(Error::format(path, "kernel is not n × n"));
        }
        let tag = m
            .comments
            .iter()
            .find_map(|c| c.strip_prefix("kernel "))
            .map(str::to_string)
            .unwrap_or_else(|| path.display().to_string());
        Ok(KernelMatrix::new(m.values, tag).with_units(units))
    }
}

fn lines<S: AsRef<str>>(items: &[S]) -> String {
    let mut out = String::new();
    for s in items {
        out.push_str(s.as_ref());
        out.push('\n');
    }
    out
}

/// Splits a kernel reference `<view>_<name>[_<param>]`.
pub fn parse_kernel_ref(r: &str) -> Result<(View, KernelSpec)> {
    let bad = || Error::invalid(format!("kernel reference `{r}` is not `<view>_<kernel>[_<param>]`"));
    let mut parts = r.splitn(3, '_');
    let view: View = parts.next().ok_or_else(bad)?.parse()?;
    let name = parts.next().ok_or_else(bad)?;
    let param = match parts.next() {
        None => None,
        Some(p) => Some(p.parse::<f64>().map_err(|_| bad())?),
    };
    let spec = KernelSpec::parse(name, param)?;
    if !view.accepts(&spec) {
        return Err(Error::invalid(format!(
            "kernel `{spec}` does not apply to the {view} view"
        )));
    }
    Ok((view, spec))
}
