//! Relational operators over sorted relations.

use std::collections::{HashMap, HashSet};

use num::{Signed, ToPrimitive, Zero};

use super::{Relation, Value};
use crate::counters::Counters;
use crate::error::{Error, Result};
use crate::lp::Rational;

/// Duplicate-free projection onto `attrs`, in the given attribute order.
pub fn project<S: AsRef<str>>(rel: &Relation, attrs: &[S]) -> Result<Relation> {
    let cols = rel.column_indices(attrs)?;
    let schema: Vec<String> = attrs.iter().map(|s| s.as_ref().to_string()).collect();
    if cols.is_empty() {
        return Ok(if rel.is_empty() {
            Relation::empty(rel.name(), schema)
        } else {
            Relation::unit(rel.name())
        });
    }
    let is_prefix = cols.iter().enumerate().all(|(i, &c)| i == c);
    let mut data = Vec::with_capacity(rel.len() * cols.len());
    if is_prefix {
        // already sorted: drop consecutive repeats
        let k = cols.len();
        let mut last: Option<&[Value]> = None;
        for row in rel.rows() {
            let key = &row[..k];
            if last != Some(key) {
                data.extend_from_slice(key);
                last = Some(key);
            }
        }
        return Ok(Relation::from_sorted_unchecked(rel.name().to_string(), schema, data));
    }
    for row in rel.rows() {
        data.extend(cols.iter().map(|&c| row[c]));
    }
    Relation::from_flat(rel.name(), schema, data)
}

/// `deg(Y | X)`: the largest number of distinct `Y`-projections sharing one
/// `X`-binding. `degree(∅, Y) = |π_Y rel|`.
pub fn degree<S: AsRef<str>>(rel: &Relation, x: &[S], y: &[S]) -> Result<u64> {
    let xs: Vec<&str> = x.iter().map(AsRef::as_ref).collect();
    let ys: Vec<&str> = y.iter().map(AsRef::as_ref).collect();
    if !xs.iter().all(|a| ys.contains(a)) {
        return Err(Error::NotSubset {
            x: xs.iter().map(|s| s.to_string()).collect(),
            y: ys.iter().map(|s| s.to_string()).collect(),
        });
    }
    let mut order: Vec<&str> = xs.clone();
    order.extend(ys.iter().filter(|a| !xs.contains(a)));
    let p = project(rel, &order)?;
    if xs.is_empty() {
        return Ok(p.len() as u64);
    }
    let k = xs.len();
    let mut best = 0u64;
    let mut i = 0;
    while i < p.len() {
        let key = &p.row(i)[..k];
        let mut j = i + 1;
        while j < p.len() && &p.row(j)[..k] == key {
            j += 1;
        }
        best = best.max((j - i) as u64);
        i = j;
    }
    Ok(best)
}

fn shared_attrs(a: &Relation, b: &Relation) -> Vec<String> {
    a.schema().iter().filter(|x| b.column_index(x).is_some()).cloned().collect()
}

/// Tuples of `rel` whose projection onto the shared attributes occurs in
/// `other`.
pub fn semijoin(rel: &Relation, other: &Relation) -> Result<Relation> {
    semijoin_counted(rel, other, &mut Counters::new())
}

pub(crate) fn semijoin_counted(rel: &Relation, other: &Relation, counters: &mut Counters) -> Result<Relation> {
    let shared = shared_attrs(rel, other);
    if shared.is_empty() {
        return Err(Error::DisjointSchemas(rel.schema().to_vec(), other.schema().to_vec()));
    }
    let rc = rel.column_indices(&shared)?;
    let oc = other.column_indices(&shared)?;
    let keys: HashSet<Vec<Value>> = other.rows().map(|r| oc.iter().map(|&c| r[c]).collect()).collect();
    let mut data = Vec::new();
    let mut key = Vec::with_capacity(rc.len());
    for row in rel.rows() {
        key.clear();
        key.extend(rc.iter().map(|&c| row[c]));
        counters.probes += 1;
        if keys.contains(&key) {
            data.extend_from_slice(row);
        }
    }
    Ok(Relation::from_sorted_unchecked(rel.name().to_string(), rel.schema().to_vec(), data))
}

/// Natural join. The output schema is `left`'s followed by the attributes
/// only `right` has; disjoint schemas give the cartesian product.
pub fn hash_join(left: &Relation, right: &Relation) -> Relation {
    hash_join_counted(left, right, &mut Counters::new())
}

pub(crate) fn hash_join_counted(left: &Relation, right: &Relation, counters: &mut Counters) -> Relation {
    let shared = shared_attrs(left, right);
    let lc = left.column_indices(&shared).expect("shared attribute");
    let rc = right.column_indices(&shared).expect("shared attribute");
    let extra: Vec<usize> = (0..right.arity()).filter(|c| !rc.contains(c)).collect();
    let mut schema = left.schema().to_vec();
    schema.extend(extra.iter().map(|&c| right.schema()[c].clone()));
    let name = format!("{}*{}", left.name(), right.name());

    if schema.is_empty() {
        return if left.is_empty() || right.is_empty() { Relation::empty(name, schema) } else { Relation::unit(name) };
    }

    let mut index: HashMap<Vec<Value>, Vec<usize>> = HashMap::new();
    for (i, row) in right.rows().enumerate() {
        index.entry(rc.iter().map(|&c| row[c]).collect()).or_default().push(i);
    }
    let mut data = Vec::new();
    let mut key = Vec::with_capacity(lc.len());
    for lrow in left.rows() {
        key.clear();
        key.extend(lc.iter().map(|&c| lrow[c]));
        counters.probes += 1;
        if let Some(matches) = index.get(&key) {
            for &i in matches {
                let rrow = right.row(i);
                data.extend_from_slice(lrow);
                data.extend(extra.iter().map(|&c| rrow[c]));
                counters.emitted += 1;
            }
        }
    }
    Relation::from_flat(name, schema, data).expect("well-formed join output")
}

/// A degree threshold `θ > 0`, stored exactly as `θ²` so that thresholds of
/// the form `√q` compare without rounding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Threshold {
    square: Rational,
}

impl Threshold {
    /// `θ = value`.
    pub fn new(value: Rational) -> Result<Self> {
        if !value.is_positive() {
            return Err(Error::InvalidThreshold);
        }
        Ok(Threshold { square: &value * &value })
    }

    /// `θ = √q`.
    pub fn sqrt_of(q: Rational) -> Result<Self> {
        if !q.is_positive() {
            return Err(Error::InvalidThreshold);
        }
        Ok(Threshold { square: q })
    }

    pub fn from_integer(v: u64) -> Result<Self> {
        Self::new(Rational::from_integer(v.into()))
    }

    pub fn square(&self) -> &Rational {
        &self.square
    }

    /// `count > θ`.
    pub fn exceeded_by(&self, count: u64) -> bool {
        let c = Rational::from_integer(count.into());
        &c * &c > self.square
    }

    pub fn to_f64(&self) -> f64 {
        self.square.to_f64().unwrap_or(f64::INFINITY).sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.square.is_zero()
    }
}

/// Splits `rel` by the size of each tuple's `x`-group: groups with more than
/// `θ` tuples are heavy, the rest light.
pub fn partition_by_degree<S: AsRef<str>>(
    rel: &Relation,
    x: &[S],
    theta: &Threshold,
) -> Result<(Relation, Relation)> {
    let cols = rel.column_indices(x)?;
    let mut sizes: HashMap<Vec<Value>, u64> = HashMap::new();
    for row in rel.rows() {
        *sizes.entry(cols.iter().map(|&c| row[c]).collect()).or_default() += 1;
    }
    let heavy_keys: HashSet<Vec<Value>> =
        sizes.into_iter().filter(|(_, n)| theta.exceeded_by(*n)).map(|(k, _)| k).collect();
    let (mut heavy, mut light) = (Vec::new(), Vec::new());
    let mut key = Vec::with_capacity(cols.len());
    for row in rel.rows() {
        key.clear();
        key.extend(cols.iter().map(|&c| row[c]));
        if heavy_keys.contains(&key) {
            heavy.extend_from_slice(row);
        } else {
            light.extend_from_slice(row);
        }
    }
    let schema = rel.schema().to_vec();
    Ok((
        Relation::from_sorted_unchecked(format!("{}_heavy", rel.name()), schema.clone(), heavy),
        Relation::from_sorted_unchecked(format!("{}_light", rel.name()), schema, light),
    ))
}
