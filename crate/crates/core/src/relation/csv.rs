//! Plain comma-separated files: first row is the header, no quoting.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{Dictionary, Relation, Value};
use crate::error::{Error, Result};

/// Loads `path` into a relation whose columns follow `schema`.
///
/// The header must name the same attributes as `schema` (in any order);
/// columns are permuted to `schema` order before sorting. The relation is
/// named after the file stem.
pub fn load_csv<S: AsRef<str>>(path: &Path, schema: &[S], dict: &mut Dictionary) -> Result<Relation> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());

    let expected: Vec<String> = schema.iter().map(|s| s.as_ref().to_string()).collect();
    let header: Vec<String> = match lines.next() {
        Some((_, l)) => split(l).map(str::to_string).collect(),
        None => Vec::new(),
    };
    let mut sorted_header = header.clone();
    sorted_header.sort();
    let mut sorted_expected = expected.clone();
    sorted_expected.sort();
    if sorted_header != sorted_expected || header.len() != expected.len() {
        return Err(Error::HeaderMismatch { expected, found: header });
    }
    // file column feeding each schema position
    let source: Vec<usize> = expected
        .iter()
        .map(|a| header.iter().position(|h| h == a).expect("header checked"))
        .collect();

    let arity = expected.len();
    let mut data: Vec<Value> = Vec::new();
    let mut row = vec![0; arity];
    for (lineno, line) in lines {
        let fields: Vec<&str> = split(line).collect();
        if fields.len() != arity {
            return Err(Error::Csv {
                path: path.to_path_buf(),
                line: lineno + 1,
                msg: format!("expected {arity} fields, found {}", fields.len()),
            });
        }
        for (slot, &src) in row.iter_mut().zip(&source) {
            *slot = dict.encode(fields[src]);
        }
        data.extend_from_slice(&row);
    }

    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("R").to_string();
    if arity == 0 {
        return Ok(Relation::empty(name, expected));
    }
    Relation::from_flat(name, expected, data)
}

fn split(line: &str) -> impl Iterator<Item = &str> {
    line.trim_end_matches('\r').split(',').map(str::trim)
}

/// Writes the relation as CSV in sorted order, decoding interned strings.
pub fn write_csv(rel: &Relation, path: &Path, dict: Option<&Dictionary>) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "{}", rel.schema().join(",")).expect("write to vec");
    for row in rel.rows() {
        let fields: Vec<String> = row
            .iter()
            .map(|&v| match dict {
                Some(d) => d.decode(v),
                None => v.to_string(),
            })
            .collect();
        writeln!(out, "{}", fields.join(",")).expect("write to vec");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
