use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use nalgebra::DMatrix;

use super::unit_name_from_entry;
use super::units::UnitIndex;
use crate::error::{Error, Result};

/// Transactions larger than this (in distinct files, before intersection)
/// are treated as noise and dropped.
pub const DEFAULT_MAX_FILES: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct RawTransaction {
    pub id: String,
    /// Distinct unit names, in first-seen order.
    pub units: Vec<String>,
}

/// Co-change history restricted to the shared unit index.
#[derive(Debug, Clone)]
pub struct TransactionLog {
    pub units: UnitIndex,
    /// Retained transactions; each member list is sorted by unit position.
    pub transactions: Vec<(String, Vec<usize>)>,
    /// Binary `n × t` unit-by-transaction incidence.
    pub incidence: DMatrix<f64>,
}

impl TransactionLog {
    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    pub fn from_raw(raw: &[RawTransaction], units: &UnitIndex, max_files: usize) -> Result<Self> {
        let mut transactions = Vec::new();
        for tx in raw {
            if tx.units.len() > max_files {
                continue;
            }
            let mut members: Vec<usize> = tx.units.iter().filter_map(|u| units.position(u)).collect();
            members.sort_unstable();
            members.dedup();
            if !members.is_empty() {
                transactions.push((tx.id.clone(), members));
            }
        }
        if transactions.is_empty() {
            return Err(Error::EmptyView("transactions".into()));
        }
        let mut incidence = DMatrix::zeros(units.len(), transactions.len());
        for (col, (_, members)) in transactions.iter().enumerate() {
            for &row in members {
                incidence[(row, col)] = 1.0;
            }
        }
        Ok(TransactionLog {
            units: units.clone(),
            transactions,
            incidence,
        })
    }

    /// Units named by transactions that survive the size filter.
    pub fn names(raw: &[RawTransaction], max_files: usize) -> BTreeSet<String> {
        raw.iter()
            .filter(|tx| tx.units.len() <= max_files)
            .flat_map(|tx| tx.units.iter().cloned())
            .collect()
    }
}

/// Parses `txid<TAB>file1,file2,...` lines.
pub fn parse_transactions(text: &str, source: &Path) -> Result<Vec<RawTransaction>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let Some((id, files)) = line.split_once('\t') else {
            return Err(Error::parse(source, lineno + 1, "expected `txid<TAB>files`"));
        };
        let id = id.trim();
        if id.is_empty() {
            return Err(Error::parse(source, lineno + 1, "empty transaction id"));
        }
        if !seen.insert(id.to_string()) {
            return Err(Error::parse(
                source,
                lineno + 1,
                format!("duplicate transaction id `{id}`"),
            ));
        }
        let mut units = Vec::new();
        let mut local = HashSet::new();
        for entry in files.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let name = unit_name_from_entry(entry);
            if local.insert(name.clone()) {
                units.push(name);
            }
        }
        out.push(RawTransaction {
            id: id.to_string(),
            units,
        });
    }
    Ok(out)
}

pub fn read_transactions(path: &Path) -> Result<Vec<RawTransaction>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_transactions(&text, path)
}

pub fn load_transactions(path: &Path, units: &UnitIndex, max_files: usize) -> Result<TransactionLog> {
    TransactionLog::from_raw(&read_transactions(path)?, units, max_files)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tx_line(id: &str, count: usize) -> String {
        let files: Vec<String> = (0..count).map(|i| format!("u{i:02}")).collect();
        format!("{id}\t{}\n", files.join(","))
    }

    fn units(count: usize) -> UnitIndex {
        UnitIndex::new((0..count).map(|i| format!("u{i:02}")))
    }

    #[test]
    fn thirty_one_files_dropped_thirty_kept() {
        let text = format!("{}{}", tx_line("big", 31), tx_line("edge", 30));
        let raw = parse_transactions(&text, Path::new("t")).unwrap();
        let log = TransactionLog::from_raw(&raw, &units(40), DEFAULT_MAX_FILES).unwrap();
        assert_eq!(log.len(), 1);
        assert_eq!(log.transactions[0].0, "edge");
        assert_eq!(log.incidence.column(0).sum(), 30.0);
    }

    #[test]
    fn intersection_trims_members() {
        let raw = parse_transactions("t1\tA,X\n", Path::new("t")).unwrap();
        let log = TransactionLog::from_raw(&raw, &UnitIndex::new(["A", "B"]), 30).unwrap();
        assert_eq!(log.incidence, DMatrix::from_row_slice(2, 1, &[1.0, 0.0]));
    }

    #[test]
    fn empty_after_intersection_is_dropped() {
        let raw = parse_transactions("t1\tX,Y\nt2\tA\n", Path::new("t")).unwrap();
        let log = TransactionLog::from_raw(&raw, &UnitIndex::new(["A"]), 30).unwrap();
        assert_eq!(log.len(), 1);
        let raw = parse_transactions("t1\tX,Y\n", Path::new("t")).unwrap();
        assert!(matches!(
            TransactionLog::from_raw(&raw, &UnitIndex::new(["A"]), 30),
            Err(Error::EmptyView(_))
        ));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = parse_transactions("t1\tA\nt1\tB\n", Path::new("t")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn file_paths_map_to_unit_names() {
        let raw = parse_transactions("t1\tsrc/org/x/Foo.java,org.x.Bar\n", Path::new("t")).unwrap();
        assert_eq!(raw[0].units, vec!["src.org.x.Foo", "org.x.Bar"]);
    }
}
