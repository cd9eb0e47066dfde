//! Immutable relation storage.
//!
//! A [`Relation`] is a duplicate-free set of fixed-arity tuples kept in
//! lexicographic order of its schema. Tuples live in one flat row-major
//! buffer; every access path (prefix selection, column views, galloping
//! intersection) is a range over that buffer.

mod csv;
mod ops;
mod view;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

pub use self::csv::{load_csv, write_csv};
pub use self::ops::{degree, hash_join, partition_by_degree, project, semijoin, Threshold};
pub use self::view::{gallop, intersect_iter, ColumnView, Intersect, PrefixView};
pub(crate) use self::ops::{hash_join_counted, semijoin_counted};

use crate::error::{Error, Result};

/// Dictionary-encoded attribute value.
pub type Value = u64;

/// Interned strings receive keys from this offset upwards; decimal integers
/// below it encode as themselves.
pub const STRING_KEY_BASE: Value = 1 << 63;

/// Maps external string values to [`Value`] keys.
#[derive(Clone, Debug, Default)]
pub struct Dictionary {
    keys: HashMap<String, Value>,
    strings: Vec<String>,
}

impl Dictionary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Encodes a field: decimal integers below [`STRING_KEY_BASE`] map to
    /// themselves, anything else is interned in first-seen order.
    pub fn encode(&mut self, field: &str) -> Value {
        if let Ok(v) = field.parse::<u64>() {
            if v < STRING_KEY_BASE {
                return v;
            }
        }
        if let Some(&k) = self.keys.get(field) {
            return k;
        }
        let k = STRING_KEY_BASE + self.strings.len() as Value;
        self.strings.push(field.to_string());
        self.keys.insert(field.to_string(), k);
        k
    }

    pub fn decode(&self, v: Value) -> String {
        if v >= STRING_KEY_BASE {
            if let Some(s) = self.strings.get((v - STRING_KEY_BASE) as usize) {
                return s.clone();
            }
        }
        v.to_string()
    }

    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct Relation {
    name: String,
    schema: Vec<String>,
    data: Vec<Value>,
    len: usize,
}

impl Relation {
    /// Builds a relation from rows in any order; duplicates are removed.
    pub fn from_rows<I>(name: impl Into<String>, schema: Vec<String>, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = Vec<Value>>,
    {
        let arity = schema.len();
        let mut data = Vec::new();
        let mut count = 0usize;
        for row in rows {
            if row.len() != arity {
                return Err(Error::Invalid(format!(
                    "tuple of arity {} in relation of arity {arity}",
                    row.len()
                )));
            }
            data.extend_from_slice(&row);
            count += 1;
        }
        Self::build(name.into(), schema, data, count)
    }

    /// Builds a relation from a row-major buffer. An arity-0 schema yields
    /// the empty relation.
    pub fn from_flat(name: impl Into<String>, schema: Vec<String>, data: Vec<Value>) -> Result<Self> {
        let arity = schema.len();
        if arity == 0 {
            return Self::build(name.into(), schema, Vec::new(), 0);
        }
        if !data.len().is_multiple_of(arity) {
            return Err(Error::Invalid(format!(
                "buffer of {} values is not a multiple of arity {arity}",
                data.len()
            )));
        }
        let rows = data.len() / arity;
        Self::build(name.into(), schema, data, rows)
    }

    /// The relation over the empty schema holding the empty tuple.
    pub fn unit(name: impl Into<String>) -> Self {
        Relation { name: name.into(), schema: Vec::new(), data: Vec::new(), len: 1 }
    }

    pub fn empty(name: impl Into<String>, schema: Vec<String>) -> Self {
        Relation { name: name.into(), schema, data: Vec::new(), len: 0 }
    }

    fn build(name: String, schema: Vec<String>, data: Vec<Value>, rows: usize) -> Result<Self> {
        check_schema(&schema)?;
        let arity = schema.len();
        if arity == 0 {
            return Ok(Relation { name, schema, data: Vec::new(), len: rows.min(1) });
        }
        let data = sort_dedup(data, arity);
        let len = data.len() / arity;
        Ok(Relation { name, schema, data, len })
    }

    /// Wraps data already sorted and duplicate-free.
    pub(crate) fn from_sorted_unchecked(name: String, schema: Vec<String>, data: Vec<Value>) -> Self {
        let arity = schema.len();
        let len = data.len().checked_div(arity).unwrap_or(0);
        let r = Relation { name, schema, data, len };
        debug_assert!(r.is_sorted_set());
        r
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn schema(&self) -> &[String] {
        &self.schema
    }

    pub fn arity(&self) -> usize {
        self.schema.len()
    }

    /// Number of stored tuples.
    pub fn cardinality(&self) -> usize {
        self.len
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn row(&self, i: usize) -> &[Value] {
        let a = self.arity();
        &self.data[i * a..(i + 1) * a]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[Value]> + '_ {
        (0..self.len).map(move |i| self.row(i))
    }

    pub(crate) fn data(&self) -> &[Value] {
        &self.data
    }

    pub fn column_index(&self, attr: &str) -> Option<usize> {
        self.schema.iter().position(|a| a == attr)
    }

    pub(crate) fn column_indices<S: AsRef<str>>(&self, attrs: &[S]) -> Result<Vec<usize>> {
        attrs
            .iter()
            .map(|a| {
                self.column_index(a.as_ref())
                    .ok_or_else(|| Error::UnknownAttribute(a.as_ref().to_string()))
            })
            .collect()
    }

    pub fn contains(&self, tuple: &[Value]) -> bool {
        if tuple.len() != self.arity() {
            return false;
        }
        if self.arity() == 0 {
            return self.len == 1;
        }
        let (lo, hi) = self.prefix_range(tuple);
        lo < hi
    }

    /// Row range `[lo, hi)` whose leading columns equal `prefix`.
    pub fn prefix_range(&self, prefix: &[Value]) -> (usize, usize) {
        self.prefix_range_within(0, self.len, prefix)
    }

    pub(crate) fn prefix_range_within(&self, lo: usize, hi: usize, prefix: &[Value]) -> (usize, usize) {
        debug_assert!(prefix.len() <= self.arity());
        if prefix.is_empty() {
            return (lo, hi);
        }
        let k = prefix.len();
        let key = |i: usize| &self.row(i)[..k];
        let start = lo + partition_point(hi - lo, |j| key(lo + j) < prefix);
        let end = start + partition_point(hi - start, |j| key(start + j) <= prefix);
        (start, end)
    }

    /// Same tuples under a new name.
    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Renames attributes positionally. Sort order is unaffected.
    pub fn renamed(&self, schema: Vec<String>) -> Result<Self> {
        if schema.len() != self.arity() {
            return Err(Error::Invalid(format!(
                "cannot rename arity-{} relation to {:?}",
                self.arity(),
                schema
            )));
        }
        check_schema(&schema)?;
        Ok(Relation { name: self.name.clone(), schema, data: self.data.clone(), len: self.len })
    }

    /// Permutes columns into `order` (a permutation of the schema) and
    /// re-sorts.
    pub fn reordered<S: AsRef<str>>(&self, order: &[S]) -> Result<Self> {
        if order.len() != self.arity() {
            return Err(Error::HeaderMismatch {
                expected: order.iter().map(|s| s.as_ref().to_string()).collect(),
                found: self.schema.clone(),
            });
        }
        let cols = self.column_indices(order)?;
        if cols.iter().enumerate().all(|(i, &c)| i == c) {
            return Ok(self.clone());
        }
        let mut data = Vec::with_capacity(self.data.len());
        for row in self.rows() {
            data.extend(cols.iter().map(|&c| row[c]));
        }
        let schema = order.iter().map(|s| s.as_ref().to_string()).collect();
        Self::build(self.name.clone(), schema, data, self.len)
    }

    /// Full-scan check of the storage invariant: strictly increasing rows.
    pub fn is_sorted_set(&self) -> bool {
        if self.arity() == 0 {
            return self.len <= 1;
        }
        (1..self.len).all(|i| self.row(i - 1) < self.row(i))
    }

    /// Tuples as owned vectors, in sorted order.
    pub fn to_vecs(&self) -> Vec<Vec<Value>> {
        self.rows().map(|r| r.to_vec()).collect()
    }
}

impl fmt::Debug for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}) [{} tuples]", self.name, self.schema.join(","), self.len)?;
        if self.len <= 16 {
            f.debug_list().entries(self.rows()).finish()?;
        }
        Ok(())
    }
}

fn check_schema(schema: &[String]) -> Result<()> {
    for (i, a) in schema.iter().enumerate() {
        if a.is_empty() {
            return Err(Error::Invalid("empty attribute name".into()));
        }
        if schema[..i].contains(a) {
            return Err(Error::Invalid(format!("duplicate attribute `{a}`")));
        }
    }
    Ok(())
}

/// First index in `0..n` where `pred` turns false.
fn partition_point(n: usize, mut pred: impl FnMut(usize) -> bool) -> usize {
    let (mut lo, mut hi) = (0, n);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

fn sort_dedup(data: Vec<Value>, arity: usize) -> Vec<Value> {
    match arity {
        1 => sort_dedup_fixed::<1>(data),
        2 => sort_dedup_fixed::<2>(data),
        3 => sort_dedup_fixed::<3>(data),
        4 => sort_dedup_fixed::<4>(data),
        _ => sort_dedup_generic(data, arity),
    }
}

fn sort_dedup_fixed<const K: usize>(data: Vec<Value>) -> Vec<Value> {
    let mut rows: Vec<[Value; K]> = data
        .chunks_exact(K)
        .map(|c| c.try_into().expect("chunk of arity K"))
        .collect();
    if !rows.windows(2).all(|w| w[0] < w[1]) {
        rows.sort_unstable();
        rows.dedup();
    }
    rows.into_iter().flatten().collect()
}

fn sort_dedup_generic(data: Vec<Value>, arity: usize) -> Vec<Value> {
    let rows = data.len() / arity;
    let row = |i: usize| &data[i * arity..(i + 1) * arity];
    let mut perm: Vec<usize> = (0..rows).collect();
    perm.sort_unstable_by(|&a, &b| row(a).cmp(row(b)));
    perm.dedup_by(|a, b| row(*a) == row(*b));
    let mut out = Vec::with_capacity(perm.len() * arity);
    for i in perm {
        out.extend_from_slice(row(i));
    }
    out
}

/// Named relations making up a database instance.
#[derive(Clone, Debug, Default)]
pub struct Database {
    relations: BTreeMap<String, Relation>,
}

impl Database {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, rel: Relation) {
        self.relations.insert(rel.name().to_string(), rel);
    }

    pub fn get(&self, name: &str) -> Result<&Relation> {
        self.relations.get(name).ok_or_else(|| Error::MissingRelation(name.to_string()))
    }

    pub fn relations(&self) -> impl Iterator<Item = &Relation> {
        self.relations.values()
    }

    /// Total tuple count, `|D|`.
    pub fn size(&self) -> usize {
        self.relations.values().map(Relation::len).sum()
    }
}

impl FromIterator<Relation> for Database {
    fn from_iter<I: IntoIterator<Item = Relation>>(iter: I) -> Self {
        let mut db = Database::new();
        for r in iter {
            db.insert(r);
        }
        db
    }
}

/// Convenience for tests and generators: attribute names from `&str`s.
pub fn schema_of(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}
