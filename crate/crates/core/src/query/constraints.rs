use std::path::Path;

use serde::Serialize;

use super::Query;
use crate::error::{Error, Result};
use crate::relation::{degree, Database};
use crate::varset::VarSet;

/// `(X, Y, N)`: for every binding of `X`, at most `N` distinct `Y`-bindings.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DegreeConstraint {
    pub x: VarSet,
    pub y: VarSet,
    pub n: u64,
    pub guard: Option<String>,
}

impl DegreeConstraint {
    pub fn new(x: VarSet, y: VarSet, n: u64, guard: Option<&str>) -> Result<Self> {
        if !x.is_proper_subset(y) {
            return Err(Error::Invalid(format!("constraint needs X ⊊ Y, got {x:?} and {y:?}")));
        }
        if n == 0 {
            return Err(Error::Invalid("degree bound must be positive".into()));
        }
        Ok(DegreeConstraint { x, y, n, guard: guard.map(str::to_string) })
    }

    pub fn cardinality(y: VarSet, n: u64, guard: Option<&str>) -> Result<Self> {
        Self::new(VarSet::EMPTY, y, n, guard)
    }

    pub fn is_cardinality(&self) -> bool {
        self.x.is_empty()
    }

    /// `A → B` with bound 1.
    pub fn is_simple_fd(&self) -> bool {
        self.n == 1 && self.x.len() == 1 && self.y.len() == 2
    }

    /// `Y|X` rendered with variable names, e.g. `ACD|AC`.
    pub fn label<S: AsRef<str>>(&self, names: &[S]) -> String {
        let y: String = self.y.names(names).concat();
        if self.x.is_empty() {
            y
        } else {
            format!("{y}|{}", self.x.names(names).concat())
        }
    }
}

/// A set of degree constraints over named variables `0..n`. At most one
/// constraint per `(X, Y)`; duplicates keep the smallest bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintSet {
    vars: Vec<String>,
    constraints: Vec<DegreeConstraint>,
}

impl ConstraintSet {
    pub fn new(vars: Vec<String>) -> Self {
        ConstraintSet { vars, constraints: Vec::new() }
    }

    pub fn for_query(q: &Query) -> Self {
        Self::new(q.var_names().to_vec())
    }

    pub fn n(&self) -> usize {
        self.vars.len()
    }

    pub fn var_names(&self) -> &[String] {
        &self.vars
    }

    pub fn constraints(&self) -> &[DegreeConstraint] {
        &self.constraints
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, DegreeConstraint> {
        self.constraints.iter()
    }

    pub fn is_cardinality_only(&self) -> bool {
        self.constraints.iter().all(DegreeConstraint::is_cardinality)
    }

    pub fn find(&self, x: VarSet, y: VarSet) -> Option<&DegreeConstraint> {
        self.constraints.iter().find(|c| c.x == x && c.y == y)
    }

    /// Adds a constraint, collapsing onto an existing `(X, Y)` by minimum.
    pub fn push(&mut self, c: DegreeConstraint) {
        assert!(c.y.is_subset(VarSet::full(self.n())), "constraint outside variable range");
        match self.constraints.iter_mut().find(|d| d.x == c.x && d.y == c.y) {
            Some(d) if c.n < d.n => *d = c,
            Some(_) => {}
            None => self.constraints.push(c),
        }
    }

    /// Copy without constraint `i`.
    pub fn without(&self, i: usize) -> Self {
        let mut out = Self::new(self.vars.clone());
        for (j, c) in self.constraints.iter().enumerate() {
            if j != i {
                out.push(c.clone());
            }
        }
        out
    }

    /// Parses the constraint text format against a query:
    /// `card R 1000` and `deg W A,C -> A,C,D 50`. `#` starts a comment.
    pub fn parse(text: &str, query: &Query) -> Result<Self> {
        let mut out = Self::for_query(query);
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let c = parse_line(line, query).map_err(|msg| Error::Parse { line: ln + 1, msg })?;
            out.push(c);
        }
        Ok(out)
    }

    pub fn from_file(path: &Path, query: &Query) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, query)
    }

    /// Emits the text format. Unguarded constraints use `_` as the guard.
    pub fn to_text(&self, query: &Query) -> String {
        let mut out = String::new();
        for c in &self.constraints {
            let guard = c.guard.as_deref().unwrap_or("_");
            let whole_atom = query.atoms().iter().find(|a| a.relation == guard).map(|a| a.var_set());
            if c.x.is_empty() && whole_atom == Some(c.y) {
                out.push_str(&format!("card {guard} {}\n", c.n));
            } else {
                out.push_str(&format!(
                    "deg {guard} {} -> {} {}\n",
                    c.x.names(&self.vars).join(","),
                    c.y.names(&self.vars).join(","),
                    c.n
                ));
            }
        }
        out
    }
}

impl<'a> IntoIterator for &'a ConstraintSet {
    type Item = &'a DegreeConstraint;
    type IntoIter = std::slice::Iter<'a, DegreeConstraint>;

    fn into_iter(self) -> Self::IntoIter {
        self.constraints.iter()
    }
}

fn parse_line(line: &str, query: &Query) -> std::result::Result<DegreeConstraint, String> {
    let mut words = line.split_whitespace();
    let kind = words.next().unwrap_or_default();
    let guard = words.next().ok_or("missing guard relation")?;
    let rest: Vec<&str> = words.collect();
    let count = |s: Option<&&str>| -> std::result::Result<u64, String> {
        let s = s.ok_or("missing bound")?;
        s.parse::<u64>().map_err(|_| format!("bad bound `{s}`"))
    };
    let resolve = |list: &str| -> std::result::Result<VarSet, String> {
        let names: Vec<&str> = list.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
        query.var_set(&names).map_err(|e| e.to_string())
    };
    let guard_opt = (guard != "_").then_some(guard);
    let (x, y, n) = match kind {
        "card" => {
            if rest.len() != 1 {
                return Err("expected `card R N`".into());
            }
            let atom =
                query.atoms().iter().find(|a| a.relation == guard).ok_or(format!("no atom over `{guard}`"))?;
            (VarSet::EMPTY, atom.var_set(), count(rest.first())?)
        }
        "deg" => {
            let joined = rest.join(" ");
            let (lhs, rhs) = joined.split_once("->").ok_or("expected `->`")?;
            let rhs: Vec<&str> = rhs.split_whitespace().collect();
            if rhs.len() != 2 {
                return Err("expected `deg R X -> Y N`".into());
            }
            (resolve(lhs)?, resolve(rhs[0])?, count(rhs.get(1))?)
        }
        other => return Err(format!("unknown constraint kind `{other}`")),
    };
    let c = DegreeConstraint::new(x, y, n, guard_opt).map_err(|e| e.to_string())?;
    if let Some(g) = guard_opt {
        query.guard_atom(g, y).map_err(|e| e.to_string())?;
    }
    Ok(c)
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct ConstraintCheck {
    pub constraint: String,
    pub guard: Option<String>,
    pub declared: u64,
    /// `None` when the constraint has no guard to measure.
    pub actual: Option<u64>,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct ValidationReport {
    pub checks: Vec<ConstraintCheck>,
    pub ok: bool,
}

/// Measures every guarded constraint on its guard relation (`D ⊨ DC`).
pub fn validate_db(query: &Query, dc: &ConstraintSet, db: &Database) -> Result<ValidationReport> {
    let names = query.var_names();
    let mut checks = Vec::new();
    for c in dc {
        let actual = match &c.guard {
            None => None,
            Some(g) => {
                let atom = query.guard_atom(g, c.y)?;
                let rel = db.get(g)?.renamed(query.atom_schema(atom))?;
                Some(degree(&rel, &c.x.names(names), &c.y.names(names))?)
            }
        };
        checks.push(ConstraintCheck {
            constraint: c.label(names),
            guard: c.guard.clone(),
            declared: c.n,
            actual,
            ok: actual.is_none_or(|a| a <= c.n),
        });
    }
    let ok = checks.iter().all(|c| c.ok);
    Ok(ValidationReport { checks, ok })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relation::{schema_of, Relation};

    fn grid(name: &str, m: u64) -> Relation {
        let rows = (1..=m).flat_map(|a| (1..=m).map(move |b| vec![a, b]));
        Relation::from_rows(name, schema_of(&["x", "y"]), rows).unwrap()
    }

    #[test]
    fn comments_are_skipped() {
        let q = Query::parse("Q(A,B) :- R(A,B).").unwrap();
        let dc = ConstraintSet::parse("# sizes\ncard R 8   # rows\n\n", &q).unwrap();
        assert_eq!(dc.len(), 1);
    }

    fn triangle() -> Query {
        Query::parse("Q(A,B,C) :- R(A,B), S(B,C), T(A,C).").unwrap()
    }

    #[test]
    fn parses_card_and_deg() {
        let q = Query::parse("Q(A,B,C,D) :- R(A), S(A,B), T(B,C), W(C,A,D).").unwrap();
        let text = "# the cyclic example\ncard R 16\ndeg S A -> A,B 4\ndeg T B -> B,C 4\ndeg W C -> A,C,D 8\n";
        let dc = ConstraintSet::parse(text, &q).unwrap();
        assert_eq!(dc.len(), 4);
        assert_eq!(dc.constraints()[3].label(q.var_names()), "ACD|C");
        assert_eq!(dc.to_text(&q), text.lines().skip(1).map(|l| format!("{l}\n")).collect::<String>());
    }

    #[test]
    fn duplicates_keep_minimum() {
        let q = triangle();
        let dc = ConstraintSet::parse("card R 10\ncard R 5\ncard R 7\n", &q).unwrap();
        assert_eq!(dc.len(), 1);
        assert_eq!(dc.constraints()[0].n, 5);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let q = triangle();
        let err = ConstraintSet::parse("card R 10\n\ncard X 5\n", &q).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = ConstraintSet::parse("deg R A -> A 3", &q).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = ConstraintSet::parse("deg R A -> A,C 3", &q).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "guard R does not cover C");
        let err = ConstraintSet::parse("card R ten", &q).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn validate_grid_cardinalities() {
        let q = triangle();
        let db: Database = [grid("R", 100), grid("S", 100), grid("T", 100)].into_iter().collect();
        let ok = ConstraintSet::parse("card R 10000\ncard S 10000\ncard T 10000", &q).unwrap();
        assert!(validate_db(&q, &ok, &db).unwrap().ok);
        let tight = ConstraintSet::parse("card R 9999\ncard S 9999\ncard T 9999", &q).unwrap();
        let report = validate_db(&q, &tight, &db).unwrap();
        assert!(!report.ok);
        assert!(report.checks.iter().all(|c| !c.ok && c.actual == Some(10000)));
    }

    #[test]
    fn validate_fd_on_non_key() {
        let q = Query::parse("Q(A,B) :- R(A,B).").unwrap();
        let r = Relation::from_rows("R", schema_of(&["A", "B"]), vec![vec![1, 2], vec![1, 3], vec![2, 1]]).unwrap();
        let db: Database = [r].into_iter().collect();
        let dc = ConstraintSet::parse("deg R A -> A,B 1", &q).unwrap();
        let report = validate_db(&q, &dc, &db).unwrap();
        assert!(!report.ok);
        assert_eq!(report.checks[0].actual, Some(2));
    }

    #[test]
    fn validate_missing_guard() {
        let q = triangle();
        let db: Database = [grid("R", 2)].into_iter().collect();
        let dc = ConstraintSet::parse("card S 4", &q).unwrap();
        assert!(matches!(validate_db(&q, &dc, &db), Err(Error::MissingRelation(_))));
    }
}
