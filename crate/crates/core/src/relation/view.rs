//! Zero-copy views over sorted relations and the galloping intersection.

use super::{Relation, Value};
use crate::counters::Counters;
use crate::error::{Error, Result};

/// Tuples of a relation that extend a bound prefix.
#[derive(Clone, Copy, Debug)]
pub struct PrefixView<'a> {
    rel: &'a Relation,
    lo: usize,
    hi: usize,
    depth: usize,
}

impl<'a> PrefixView<'a> {
    pub fn len(&self) -> usize {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.lo == self.hi
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn residual(&self) -> &'a [String] {
        &self.rel.schema()[self.depth..]
    }

    pub fn range(&self) -> (usize, usize) {
        (self.lo, self.hi)
    }

    pub fn rows(&self) -> impl Iterator<Item = &'a [Value]> + 'a {
        let rel = self.rel;
        (self.lo..self.hi).map(move |i| rel.row(i))
    }

    /// The distinct values of the first residual attribute.
    pub fn column(&self) -> Option<ColumnView<'a>> {
        (self.depth < self.rel.arity()).then(|| ColumnView::of_relation(self.rel, self.depth, self.lo, self.hi))
    }
}

impl Relation {
    /// Selects the tuples whose leading attributes equal `binding`.
    ///
    /// The binding must name a prefix of the schema, in schema order. Costs
    /// two binary searches.
    pub fn prefix_select(&self, binding: &[(&str, Value)]) -> Result<PrefixView<'_>> {
        let names_ok = binding.len() <= self.arity()
            && binding.iter().zip(self.schema()).all(|((a, _), s)| a == s);
        if !names_ok {
            return Err(Error::NotAPrefix {
                binding: binding.iter().map(|(a, _)| a.to_string()).collect(),
                schema: self.schema().to_vec(),
            });
        }
        let values: Vec<Value> = binding.iter().map(|&(_, v)| v).collect();
        Ok(self.prefix_view(&values))
    }

    /// Unchecked positional form of [`Relation::prefix_select`].
    pub fn prefix_view(&self, prefix: &[Value]) -> PrefixView<'_> {
        let (lo, hi) = self.prefix_range(prefix);
        PrefixView { rel: self, lo, hi, depth: prefix.len() }
    }
}

/// One column over a row range in which all earlier columns are constant,
/// so the column is sorted (with repeats when later columns vary).
#[derive(Clone, Copy, Debug)]
pub struct ColumnView<'a> {
    data: &'a [Value],
    stride: usize,
    col: usize,
    lo: usize,
    hi: usize,
}

impl<'a> ColumnView<'a> {
    /// A strictly increasing list of values.
    pub fn of_sorted(values: &'a [Value]) -> Self {
        debug_assert!(values.windows(2).all(|w| w[0] < w[1]));
        ColumnView { data: values, stride: 1, col: 0, lo: 0, hi: values.len() }
    }

    pub(crate) fn of_relation(rel: &'a Relation, col: usize, lo: usize, hi: usize) -> Self {
        assert!(col < rel.arity());
        ColumnView { data: rel.data(), stride: rel.arity(), col, lo, hi }
    }

    /// Number of rows covered, an upper bound on the distinct values.
    pub fn len(&self) -> usize {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.lo == self.hi
    }

    #[inline]
    fn value(&self, i: usize) -> Value {
        self.data[i * self.stride + self.col]
    }
}

/// First position in `[from, view.hi)` whose value is `>= target`, by
/// exponential then binary search. Counts one comparison per element read.
pub fn gallop(view: &ColumnView<'_>, from: usize, target: Value, counters: &mut Counters) -> usize {
    let hi = view.hi;
    if from >= hi {
        return hi;
    }
    counters.comparisons += 1;
    if view.value(from) >= target {
        return from;
    }
    // invariant: value(base) < target
    let mut base = from;
    let mut step = 1;
    while base + step < hi {
        counters.comparisons += 1;
        if view.value(base + step) < target {
            base += step;
            step <<= 1;
        } else {
            break;
        }
    }
    // answer lies in (base, min(base + step, hi)]
    let mut lo = base + 1;
    let mut end = (base + step).min(hi);
    while lo < end {
        let mid = lo + (end - lo) / 2;
        counters.comparisons += 1;
        if view.value(mid) < target {
            lo = mid + 1;
        } else {
            end = mid;
        }
    }
    lo
}

/// Sorted intersection of the distinct values of several column views.
///
/// The view with the fewest rows leads; every other view gallops forward to
/// the lead's current value and a mismatch makes the lead jump ahead. Each
/// round consumes at least one distinct lead value and performs at most one
/// seek per view, so `probes <= k * |lead|`.
pub struct Intersect<'a, 'c> {
    views: Vec<ColumnView<'a>>,
    pos: Vec<usize>,
    lead: usize,
    done: bool,
    counters: &'c mut Counters,
}

/// Starts an intersection; `views` must be nonempty.
pub fn intersect_iter<'a, 'c>(views: Vec<ColumnView<'a>>, counters: &'c mut Counters) -> Intersect<'a, 'c> {
    assert!(!views.is_empty(), "intersection of zero views");
    let lead = (0..views.len()).min_by_key(|&i| views[i].len()).expect("nonempty");
    let pos = views.iter().map(|v| v.lo).collect();
    let done = views.iter().any(ColumnView::is_empty);
    Intersect { views, pos, lead, done, counters }
}

impl Iterator for Intersect<'_, '_> {
    type Item = Value;

    fn next(&mut self) -> Option<Value> {
        if self.done {
            return None;
        }
        let lead = self.lead;
        'round: loop {
            let p = self.pos[lead];
            if p >= self.views[lead].hi {
                self.done = true;
                return None;
            }
            let x = self.views[lead].value(p);
            for j in 0..self.views.len() {
                if j == lead {
                    continue;
                }
                self.counters.probes += 1;
                let q = gallop(&self.views[j], self.pos[j], x, self.counters);
                self.pos[j] = q;
                if q >= self.views[j].hi {
                    self.done = true;
                    return None;
                }
                let y = self.views[j].value(q);
                self.counters.comparisons += 1;
                if y > x {
                    self.counters.probes += 1;
                    self.pos[lead] = gallop(&self.views[lead], p, y, self.counters);
                    continue 'round;
                }
            }
            self.counters.probes += 1;
            self.pos[lead] = match x.checked_add(1) {
                Some(next) => gallop(&self.views[lead], p, next, self.counters),
                None => self.views[lead].hi,
            };
            return Some(x);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relation::schema_of;

    fn run(lists: &[&[Value]]) -> (Vec<Value>, Counters) {
        let mut c = Counters::new();
        let views = lists.iter().map(|l| ColumnView::of_sorted(l)).collect();
        let out = intersect_iter(views, &mut c).collect();
        (out, c)
    }

    #[test]
    fn basic_intersection() {
        assert_eq!(run(&[&[1, 3, 5], &[3, 4, 5]]).0, vec![3, 5]);
        assert_eq!(run(&[&[1, 3, 5], &[]]).0, Vec::<Value>::new());
        assert_eq!(run(&[&[7]]).0, vec![7]);
    }

    #[test]
    fn probe_bound_on_skewed_sizes() {
        let big: Vec<Value> = (1..=1000).collect();
        let (out, c) = run(&[&big, &[500]]);
        assert_eq!(out, vec![500]);
        // smallest (1) x views (2) x (1 + ceil(log2 1000) = 11)
        assert!(c.probes <= 22, "probes = {}", c.probes);
    }

    #[test]
    fn gallop_finds_lower_bound() {
        let v: Vec<Value> = (0..100).map(|x| x * 2).collect();
        let view = ColumnView::of_sorted(&v);
        let mut c = Counters::new();
        for t in 0..=200 {
            let expect = v.partition_point(|&x| x < t);
            for from in [0, 3, expect.saturating_sub(1)] {
                let from = from.min(expect);
                assert_eq!(gallop(&view, from, t, &mut c), expect);
            }
        }
    }

    #[test]
    fn column_views_skip_repeats() {
        let r = Relation::from_rows(
            "R",
            schema_of(&["A", "B", "C"]),
            vec![vec![1, 1, 1], vec![1, 1, 2], vec![1, 2, 1], vec![1, 4, 4], vec![2, 1, 1]],
        )
        .unwrap();
        let s = Relation::from_rows("S", schema_of(&["B"]), vec![vec![1], vec![3], vec![4]]).unwrap();
        let v1 = r.prefix_view(&[1]).column().unwrap();
        let v2 = s.prefix_view(&[]).column().unwrap();
        let mut c = Counters::new();
        let out: Vec<Value> = intersect_iter(vec![v1, v2], &mut c).collect();
        assert_eq!(out, vec![1, 4]);
    }

    #[test]
    fn prefix_select_checks_names() {
        let r = Relation::from_rows("R", schema_of(&["A", "B"]), vec![vec![1, 2], vec![1, 3], vec![2, 1]])
            .unwrap();
        let v = r.prefix_select(&[("A", 1)]).unwrap();
        assert_eq!(v.rows().collect::<Vec<_>>(), vec![&[1, 2][..], &[1, 3][..]]);
        assert_eq!(v.residual(), &["B"]);
        assert!(r.prefix_select(&[("A", 9)]).unwrap().is_empty());
        assert_eq!(r.prefix_select(&[]).unwrap().len(), 3);
        assert!(matches!(r.prefix_select(&[("B", 1)]), Err(Error::NotAPrefix { .. })));
    }
}
