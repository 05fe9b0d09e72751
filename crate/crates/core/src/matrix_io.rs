//! Plain-text persistence for dense matrices: optional `#` comment lines, an
//! optional header row of names, then comma-separated values written with 17
//! significant digits so they read back bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

fn quote(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn split_fields(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match (c, quoted) {
            ('"', true) if chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            ('"', _) => quoted = !quoted,
            (',', false) => out.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    out.push(cur);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledMatrix {
    pub comments: Vec<String>,
    pub header: Option<Vec<String>>,
    pub values: DMatrix<f64>,
}

pub fn render(comments: &[String], header: Option<&[String]>, m: &DMatrix<f64>) -> String {
    let mut s = String::new();
    for c in comments {
        let _ = writeln!(s, "# {c}");
    }
    if let Some(h) = header {
        let fields: Vec<String> = h.iter().map(|f| quote(f)).collect();
        let _ = writeln!(s, "{}", fields.join(","));
    }
    for row in m.row_iter() {
        let fields: Vec<String> = row.iter().map(|&v| format_value(v)).collect();
        let _ = writeln!(s, "{}", fields.join(","));
    }
    s
}

pub fn write_matrix(path: &Path, comments: &[String], header: Option<&[String]>, m: &DMatrix<f64>) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, render(comments, header, m)).map_err(|e| Error::io(path, e))
}

pub fn parse(text: &str, has_header: bool, source: &Path) -> Result<LabeledMatrix> {
    let mut comments = Vec::new();
    let mut header = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if let Some(c) = line.strip_prefix('#') {
            comments.push(c.trim_start().to_string());
            continue;
        }
        if line.is_empty() {
            continue;
        }
        if has_header && header.is_none() {
            header = Some(split_fields(line));
            continue;
        }
        let row = line
            .split(',')
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::parse(source, lineno + 1, format!("bad number `{f}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::parse(source, lineno + 1, "ragged row"));
            }
        }
        rows.push(row);
    }
    let ncols = rows
        .first()
        .map(Vec::len)
        .or_else(|| header.as_ref().map(Vec::len))
        .unwrap_or(0);
    let values = DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]);
    Ok(LabeledMatrix {
        comments,
        header,
        values,
    })
}

pub fn read_matrix(path: &Path, has_header: bool) -> Result<LabeledMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text, has_header, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(data in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::ZERO, 6)) {
            let m = DMatrix::from_row_slice(2, 3, &data);
            let header = vec!["a,b".to_string(), "c\"d".to_string(), "e".to_string()];
            let text = render(&["note".to_string()], Some(&header), &m);
            let back = parse(&text, true, Path::new("m.csv")).unwrap();
            prop_assert_eq!(back.values, m);
            prop_assert_eq!(back.header, Some(header));
            prop_assert_eq!(back.comments, vec!["note".to_string()]);
        }
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(parse("1,2\n3\n", false, Path::new("m")).is_err());
        assert!(parse("1,x\n", false, Path::new("m")).is_err());
    }
}
