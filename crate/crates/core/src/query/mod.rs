//! Full conjunctive queries, degree constraints and their dependency graphs.

mod constraints;
mod graph;

use std::collections::BTreeSet;
use std::path::Path;

pub use self::constraints::{validate_db, ConstraintCheck, ConstraintSet, DegreeConstraint, ValidationReport};
pub use self::graph::{
    acyclicize, bound_closure, dependency_graph, simplify_fd, topological_order, DependencyGraph,
};
pub(crate) use self::graph::{chase, require_bounded};

use crate::error::{Error, Result};
use crate::relation::{Database, Relation};
use crate::varset::{VarSet, MAX_VARS};

/// Multi-hypergraph over variables `0..n`. Edges may repeat.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hypergraph {
    vertices: Vec<String>,
    edges: Vec<VarSet>,
}

impl Hypergraph {
    pub fn new(vertices: Vec<String>, edges: Vec<VarSet>) -> Result<Self> {
        if vertices.len() > MAX_VARS {
            return Err(Error::SizeLimit { what: "hypergraph", n: vertices.len(), max: MAX_VARS });
        }
        let full = VarSet::full(vertices.len());
        let mut covered = VarSet::EMPTY;
        for e in &edges {
            if e.is_empty() || !e.is_subset(full) {
                return Err(Error::Invalid(format!("bad edge {e:?}")));
            }
            covered = covered | *e;
        }
        if covered != full {
            let missing = (full - covered).names(&vertices);
            return Err(Error::Invalid(format!("vertices {missing:?} lie in no edge")));
        }
        Ok(Hypergraph { vertices, edges })
    }

    pub fn n(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[VarSet] {
        &self.edges
    }
}

/// One body atom `R(A, C)`: a relation name and the variables bound to its
/// columns, positionally.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Atom {
    pub relation: String,
    pub vars: Vec<usize>,
}

impl Atom {
    pub fn var_set(&self) -> VarSet {
        self.vars.iter().copied().collect()
    }
}

/// `Q(A,B,C) :- R(A,B), S(B,C), T(A,C).` Variables are indexed in head order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Query {
    name: String,
    vars: Vec<String>,
    atoms: Vec<Atom>,
}

impl Query {
    /// Builds a query from a head and `(relation, variables)` atoms.
    pub fn new<S: AsRef<str>>(name: &str, head: &[S], atoms: &[(&str, &[S])]) -> Result<Self> {
        let vars: Vec<String> = head.iter().map(|s| s.as_ref().to_string()).collect();
        let mut out = Vec::new();
        for (rel, args) in atoms {
            let mut ix = Vec::new();
            for a in args.iter() {
                let a = a.as_ref();
                let i = vars
                    .iter()
                    .position(|v| v == a)
                    .ok_or_else(|| Error::Parse { line: 1, msg: format!("variable {a} not in head") })?;
                if ix.contains(&i) {
                    return Err(Error::Parse { line: 1, msg: format!("variable {a} repeated in atom {rel}") });
                }
                ix.push(i);
            }
            out.push(Atom { relation: rel.to_string(), vars: ix });
        }
        Self::checked(name.to_string(), vars, out)
    }

    fn checked(name: String, vars: Vec<String>, atoms: Vec<Atom>) -> Result<Self> {
        let perr = |msg: String| Error::Parse { line: 1, msg };
        let unique: BTreeSet<&String> = vars.iter().collect();
        if unique.len() != vars.len() {
            return Err(perr("repeated head variable".into()));
        }
        if vars.len() > MAX_VARS {
            return Err(Error::SizeLimit { what: "query", n: vars.len(), max: MAX_VARS });
        }
        if atoms.is_empty() {
            return Err(perr("query has no atoms".into()));
        }
        let covered = atoms.iter().fold(VarSet::EMPTY, |acc, a| acc | a.var_set());
        if covered != VarSet::full(vars.len()) {
            let missing = (VarSet::full(vars.len()) - covered).names(&vars);
            return Err(perr(format!("head variables {missing:?} occur in no atom")));
        }
        Ok(Query { name, vars, atoms })
    }

    /// Parses the one-line datalog form. Only full queries are accepted.
    pub fn parse(text: &str) -> Result<Self> {
        let perr = |msg: &str| Error::Parse { line: 1, msg: msg.to_string() };
        let text: String = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect::<Vec<_>>()
            .join(" ");
        let body = text.trim().strip_suffix('.').ok_or_else(|| perr("missing trailing period"))?;
        let (head, body) = body.split_once(":-").ok_or_else(|| perr("missing `:-`"))?;
        let (name, head_vars) = parse_atom(head).map_err(|m| perr(&m))?;
        let mut atoms = Vec::new();
        let mut rest = body.trim();
        while !rest.is_empty() {
            let close = rest.find(')').ok_or_else(|| perr("unclosed atom"))?;
            let (rel, args) = parse_atom(&rest[..=close]).map_err(|m| perr(&m))?;
            atoms.push((rel, args));
            rest = rest[close + 1..].trim_start();
            if let Some(r) = rest.strip_prefix(',') {
                rest = r.trim_start();
                if rest.is_empty() {
                    return Err(perr("trailing comma"));
                }
            } else if !rest.is_empty() {
                return Err(perr("expected `,` between atoms"));
            }
        }
        let refs: Vec<(&str, &[String])> = atoms.iter().map(|(r, a)| (r.as_str(), a.as_slice())).collect();
        Self::new(&name, &head_vars, &refs)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.vars.len()
    }

    pub fn var_names(&self) -> &[String] {
        &self.vars
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    /// Resolves comma- or space-separated names into a set.
    pub fn var_set<S: AsRef<str>>(&self, names: &[S]) -> Result<VarSet> {
        names
            .iter()
            .map(|n| self.var_index(n.as_ref()).ok_or_else(|| Error::UnknownAttribute(n.as_ref().to_string())))
            .collect()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn hypergraph(&self) -> Hypergraph {
        Hypergraph { vertices: self.vars.clone(), edges: self.atoms.iter().map(Atom::var_set).collect() }
    }

    /// Variable names of atom `i`, in argument order.
    pub fn atom_schema(&self, i: usize) -> Vec<String> {
        self.atoms[i].vars.iter().map(|&v| self.vars[v].clone()).collect()
    }

    /// First atom over `relation` whose variables include `y`.
    pub fn guard_atom(&self, relation: &str, y: VarSet) -> Result<usize> {
        let mut seen = false;
        for (i, a) in self.atoms.iter().enumerate() {
            if a.relation == relation {
                seen = true;
                if y.is_subset(a.var_set()) {
                    return Ok(i);
                }
            }
        }
        if seen {
            Err(Error::GuardMismatch { guard: relation.to_string(), y: y.names(&self.vars) })
        } else {
            Err(Error::MissingRelation(relation.to_string()))
        }
    }

    /// The relation behind each atom, renamed positionally to the atom's
    /// variables. Self-joins get independent copies.
    pub fn bind(&self, db: &Database) -> Result<Vec<Relation>> {
        (0..self.atoms.len())
            .map(|i| {
                let a = &self.atoms[i];
                let rel = db.get(&a.relation)?;
                if rel.arity() != a.vars.len() {
                    return Err(Error::Invalid(format!(
                        "atom {} has {} arguments but relation has arity {}",
                        a.relation,
                        a.vars.len(),
                        rel.arity()
                    )));
                }
                rel.renamed(self.atom_schema(i))
            })
            .collect()
    }
}

impl std::fmt::Display for Query {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}({}) :- ", self.name, self.vars.join(","))?;
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            let args: Vec<&str> = a.vars.iter().map(|&v| self.vars[v].as_str()).collect();
            write!(f, "{}({})", a.relation, args.join(","))?;
        }
        write!(f, ".")
    }
}

fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_atom(s: &str) -> std::result::Result<(String, Vec<String>), String> {
    let s = s.trim();
    let open = s.find('(').ok_or_else(|| format!("expected `(` in `{s}`"))?;
    let inner = s[open + 1..].strip_suffix(')').ok_or_else(|| format!("expected `)` in `{s}`"))?;
    let name = s[..open].trim();
    if !is_ident(name) {
        return Err(format!("bad relation name `{name}`"));
    }
    let args: Vec<String> = inner.split(',').map(|a| a.trim().to_string()).collect();
    if let Some(bad) = args.iter().find(|a| !is_ident(a)) {
        return Err(format!("bad variable `{bad}` in `{s}`"));
    }
    Ok((name.to_string(), args))
}
