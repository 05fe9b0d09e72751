//! Synthetic systems with a planted package structure, for fixtures and
//! experiments.
//!
//! Two noise models are available. Under [`NoiseModel::Relocate`] each view
//! sees its own copy of the package assignment in which a unit moves to a
//! random other package with the view's noise probability; members of one
//! package are then interchangeable within the view (they call each other,
//! change together and share one vocabulary). Under [`NoiseModel::Scatter`]
//! every call, transaction member and word independently strays to another
//! package with the view's noise probability.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseModel {
    #[default]
    Relocate,
    Scatter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub model: NoiseModel,
    pub packages: usize,
    pub units_per_package: usize,
    /// Transactions committed per package in the evolutionary view.
    pub transactions_per_package: usize,
    pub words_per_package: usize,
    /// Scatter model only: calls made by each unit.
    pub calls_per_unit: usize,
    /// Scatter model only: words per document.
    pub words_per_document: usize,
    /// Noise probability of the structural view.
    pub call_noise: f64,
    /// Noise probability of the evolutionary view.
    pub change_noise: f64,
    /// Noise probability of the lexical view.
    pub text_noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            model: NoiseModel::Relocate,
            packages: 4,
            units_per_package: 10,
            transactions_per_package: 3,
            words_per_package: 12,
            calls_per_unit: 3,
            words_per_document: 30,
            call_noise: 0.2,
            change_noise: 0.2,
            text_noise: 0.2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSystem {
    /// Unit names `pkgP.UnitUU`, grouped by package.
    pub units: Vec<String>,
    pub package_of: Vec<usize>,
    /// Package assignment seen by the structural, evolutionary and lexical
    /// views (the true assignment under the scatter model).
    pub view_packages: [Vec<usize>; 3],
    pub calls: Vec<(String, String)>,
    pub transactions: Vec<(String, Vec<String>)>,
    pub documents: BTreeMap<String, String>,
    /// Topic words of each package.
    pub vocabulary: Vec<Vec<String>>,
}

fn word(rng: &mut ChaCha8Rng) -> String {
    const ONSETS: [&str; 12] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "t", "v"];
    const VOWELS: [&str; 4] = ["a", "o", "u", "i"];
    const CODAS: [&str; 5] = ["k", "p", "b", "g", "z"];
    let mut w = String::new();
    for _ in 0..3 {
        w.push_str(ONSETS.choose(rng).expect("non-empty"));
        w.push_str(VOWELS.choose(rng).expect("non-empty"));
    }
    w.push_str(CODAS.choose(rng).expect("non-empty"));
    w
}

fn relocate(rng: &mut ChaCha8Rng, truth: &[usize], packages: usize, noise: f64) -> Vec<usize> {
    truth
        .iter()
        .map(|&p| {
            if rng.random::<f64>() < noise {
                let q = rng.random_range(0..packages - 1);
                if q >= p {
                    q + 1
                } else {
                    q
                }
            } else {
                p
            }
        })
        .collect()
}

fn members(assignment: &[usize], p: usize) -> Vec<usize> {
    (0..assignment.len()).filter(|&u| assignment[u] == p).collect()
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthSystem> {
    if cfg.packages < 2 || cfg.units_per_package < 2 {
        return Err(Error::invalid("need at least 2 packages of at least 2 units"));
    }
    if cfg.transactions_per_package == 0 || cfg.words_per_package == 0 {
        return Err(Error::invalid("transactions and words per package must be positive"));
    }
    for p in [cfg.call_noise, cfg.change_noise, cfg.text_noise] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("noise level {p} outside [0, 1]")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (pk, m) = (cfg.packages, cfg.units_per_package);
    let units: Vec<String> = (0..pk)
        .flat_map(|p| (0..m).map(move |u| format!("pkg{p}.Unit{u:02}")))
        .collect();
    let package_of: Vec<usize> = (0..pk * m).map(|i| i / m).collect();
    let mut vocabulary: Vec<Vec<String>> = Vec::with_capacity(pk);
    let mut seen = std::collections::HashSet::new();
    for _ in 0..pk {
        let mut words = Vec::new();
        while words.len() < cfg.words_per_package {
            let w = word(&mut rng);
            if seen.insert(w.clone()) {
                words.push(w);
            }
        }
        vocabulary.push(words);
    }
    let (view_packages, calls, transactions, documents) = match cfg.model {
        NoiseModel::Relocate => relocated(cfg, &mut rng, &package_of, &vocabulary),
        NoiseModel::Scatter => scattered(cfg, &mut rng, &package_of, &vocabulary),
    };
    let name = |u: usize| units[u].clone();
    Ok(SynthSystem {
        calls: calls.into_iter().map(|(a, b)| (name(a), name(b))).collect(),
        transactions: transactions
            .into_iter()
            .enumerate()
            .map(|(t, members)| (format!("tx{t:04}"), members.into_iter().map(name).collect()))
            .collect(),
        documents: documents
            .into_iter()
            .enumerate()
            .map(|(u, doc)| (name(u), doc))
            .collect(),
        units,
        package_of,
        view_packages,
        vocabulary,
    })
}

type Views = ([Vec<usize>; 3], Vec<(usize, usize)>, Vec<Vec<usize>>, Vec<String>);

fn relocated(cfg: &SynthConfig, rng: &mut ChaCha8Rng, truth: &[usize], vocabulary: &[Vec<String>]) -> Views {
    let pk = cfg.packages;
    let view_packages = [
        relocate(rng, truth, pk, cfg.call_noise),
        relocate(rng, truth, pk, cfg.change_noise),
        relocate(rng, truth, pk, cfg.text_noise),
    ];
    // A unit alone in its structural package calls into its true package so
    // that it still appears in the call graph.
    let mut calls = Vec::new();
    for u in 0..truth.len() {
        let mut group = members(&view_packages[0], view_packages[0][u]);
        if group.len() < 2 {
            group = members(truth, truth[u]);
        }
        calls.extend(group.into_iter().filter(|&v| v != u).map(|v| (u, v)));
    }
    let mut transactions = Vec::new();
    for p in 0..pk {
        let group = members(&view_packages[1], p);
        if !group.is_empty() {
            for _ in 0..cfg.transactions_per_package {
                transactions.push(group.clone());
            }
        }
    }
    let documents = (0..truth.len())
        .map(|u| vocabulary[view_packages[2][u]].join(" "))
        .collect();
    (view_packages, calls, transactions, documents)
}

fn scattered(cfg: &SynthConfig, rng: &mut ChaCha8Rng, truth: &[usize], vocabulary: &[Vec<String>]) -> Views {
    let (pk, m) = (cfg.packages, cfg.units_per_package);
    let n = truth.len();
    let stray = |rng: &mut ChaCha8Rng, own: usize, noise: f64| {
        if rng.random::<f64>() < noise {
            let q = rng.random_range(0..pk - 1);
            if q >= own {
                q + 1
            } else {
                q
            }
        } else {
            own
        }
    };
    let mut calls = Vec::new();
    for (u, &home) in truth.iter().enumerate() {
        let mut targets: Vec<usize> = Vec::new();
        while targets.len() < cfg.calls_per_unit.min(n - 1) {
            let v = stray(rng, home, cfg.call_noise) * m + rng.random_range(0..m);
            if v != u && !targets.contains(&v) {
                targets.push(v);
            }
        }
        calls.extend(targets.into_iter().map(|v| (u, v)));
    }
    let mut transactions: Vec<Vec<usize>> = Vec::new();
    let mut uncovered: Vec<usize> = (0..n).collect();
    uncovered.shuffle(rng);
    for p in 0..pk {
        for _ in 0..cfg.transactions_per_package {
            let size = rng.random_range(2..=5usize).min(n);
            let mut tx: Vec<usize> = Vec::new();
            if let Some(pos) = uncovered.iter().position(|&u| truth[u] == p) {
                tx.push(uncovered.remove(pos));
            }
            while tx.len() < size {
                let u = stray(rng, p, cfg.change_noise) * m + rng.random_range(0..m);
                if !tx.contains(&u) {
                    tx.push(u);
                }
            }
            tx.sort_unstable();
            transactions.push(tx);
        }
    }
    for u in uncovered {
        let t = truth[u] * cfg.transactions_per_package + rng.random_range(0..cfg.transactions_per_package);
        transactions[t].push(u);
        transactions[t].sort_unstable();
    }
    let documents = (0..n)
        .map(|u| {
            (0..cfg.words_per_document)
                .map(|_| {
                    let p = stray(rng, truth[u], cfg.text_noise);
                    vocabulary[p].choose(rng).expect("non-empty").as_str()
                })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    let truth = truth.to_vec();
    ([truth.clone(), truth.clone(), truth], calls, transactions, documents)
}

impl SynthSystem {
    pub fn calls_tsv(&self) -> String {
        let mut out = String::new();
        for (a, b) in &self.calls {
            let _ = writeln!(out, "{a}\t{b}");
        }
        out
    }

    /// Transactions list file paths (`pkg0/Unit00.java`).
    pub fn transactions_tsv(&self) -> String {
        let mut out = String::new();
        for (id, members) in &self.transactions {
            let files: Vec<String> = members
                .iter()
                .map(|u| format!("{}.java", u.replace('.', "/")))
                .collect();
            let _ = writeln!(out, "{id}\t{}", files.join(","));
        }
        out
    }

    /// Writes `calls.tsv`, `trans.tsv` and `corpus/` under `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let write = |path: &Path, text: &str| -> Result<()> {
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            std::fs::write(path, text).map_err(|e| Error::io(path, e))
        };
        write(&dir.join("calls.tsv"), &self.calls_tsv())?;
        write(&dir.join("trans.tsv"), &self.transactions_tsv())?;
        for (unit, text) in &self.documents {
            let rel = format!("{}.java", unit.replace('.', "/"));
            write(&dir.join("corpus").join(rel), &format!("{text}\n"))?;
        }
        Ok(())
    }
}
