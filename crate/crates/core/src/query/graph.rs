use std::collections::HashSet;

use super::{ConstraintSet, DegreeConstraint};
use crate::bounds::polymatroid_bound;
use crate::error::{Error, Result};
use crate::lp::Rational;
use crate::varset::VarSet;

/// Edge `x → y` for every constraint `(X, Y, N)` with `x ∈ X`, `y ∈ Y − X`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DependencyGraph {
    succ: Vec<VarSet>,
}

impl DependencyGraph {
    pub fn n(&self) -> usize {
        self.succ.len()
    }

    pub fn successors(&self, v: usize) -> VarSet {
        self.succ[v]
    }

    pub fn has_edge(&self, x: usize, y: usize) -> bool {
        self.succ[x].contains(y)
    }

    /// Edges in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.n()).flat_map(|x| self.succ[x].iter().map(move |y| (x, y))).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.succ.iter().all(|s| s.is_empty())
    }

    /// Vertices reachable from `v` by a path of length at least one.
    fn reach(&self) -> Vec<VarSet> {
        let mut reach = self.succ.clone();
        loop {
            let mut changed = false;
            for v in 0..self.n() {
                let mut r = reach[v];
                for w in reach[v].iter() {
                    r = r | reach[w];
                }
                if r != reach[v] {
                    reach[v] = r;
                    changed = true;
                }
            }
            if !changed {
                return reach;
            }
        }
    }

    /// Strongly connected component of every vertex.
    pub fn components(&self) -> Vec<VarSet> {
        let reach = self.reach();
        (0..self.n())
            .map(|v| reach[v].iter().filter(|&w| reach[w].contains(v)).collect::<VarSet>().with(v))
            .collect()
    }

    /// Independent check via reachability: no vertex reaches itself.
    pub fn is_acyclic(&self) -> bool {
        self.reach().iter().enumerate().all(|(v, r)| !r.contains(v))
    }

    /// Whether edge `x → y` lies on some directed cycle.
    pub fn on_cycle(&self, x: usize, y: usize) -> bool {
        self.has_edge(x, y) && (x == y || self.reach()[y].contains(x))
    }
}

pub fn dependency_graph(dc: &ConstraintSet) -> DependencyGraph {
    let mut succ = vec![VarSet::EMPTY; dc.n()];
    for c in dc {
        for x in c.x.iter() {
            succ[x] = succ[x] | (c.y - c.x);
        }
    }
    DependencyGraph { succ }
}

/// Kahn's algorithm, always taking the smallest ready vertex. On a cycle
/// returns [`Error::Cyclic`] with one witness cycle, starting and ending at
/// its smallest vertex.
pub fn topological_order(dc: &ConstraintSet) -> Result<Vec<usize>> {
    let g = dependency_graph(dc);
    let n = g.n();
    let mut indeg = vec![0usize; n];
    for (_, y) in g.edges() {
        indeg[y] += 1;
    }
    let mut done = VarSet::EMPTY;
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let Some(v) = (0..n).find(|&v| !done.contains(v) && indeg[v] == 0) else {
            return Err(Error::Cyclic { witness: witness_cycle(&g, done, dc.var_names()) });
        };
        done = done.with(v);
        order.push(v);
        for w in g.successors(v).iter() {
            indeg[w] -= 1;
        }
    }
    Ok(order)
}

/// Every vertex outside `done` has a predecessor outside `done`, so walking
/// predecessors must revisit a vertex.
fn witness_cycle(g: &DependencyGraph, done: VarSet, names: &[String]) -> Vec<String> {
    let n = g.n();
    let remaining = VarSet::full(n) - done;
    let pred = |v: usize| (0..n).find(|&u| remaining.contains(u) && g.has_edge(u, v));
    let mut walk = vec![remaining.iter().next().expect("cycle exists")];
    loop {
        let u = pred(*walk.last().unwrap()).expect("remaining vertices have predecessors");
        if let Some(pos) = walk.iter().position(|&w| w == u) {
            let mut cycle: Vec<usize> = walk[pos..].to_vec();
            cycle.reverse();
            let min_at = cycle.iter().enumerate().min_by_key(|(_, v)| **v).map(|(i, _)| i).unwrap();
            cycle.rotate_left(min_at);
            cycle.push(cycle[0]);
            return cycle.into_iter().map(|v| names[v].clone()).collect();
        }
        walk.push(u);
    }
}

/// Least fixpoint of "X bound ⇒ Y bound", together with the constraints
/// that fired, in firing order.
pub(crate) fn chase(dc: &ConstraintSet) -> (VarSet, Vec<usize>) {
    let mut bound = VarSet::EMPTY;
    let mut fired = Vec::new();
    let mut used = vec![false; dc.len()];
    loop {
        let next = dc
            .iter()
            .enumerate()
            .find(|(i, c)| !used[*i] && c.x.is_subset(bound) && !c.y.is_subset(bound));
        match next {
            Some((i, c)) => {
                used[i] = true;
                bound = bound | c.y;
                fired.push(i);
            }
            None => return (bound, fired),
        }
    }
}

pub fn bound_closure(dc: &ConstraintSet) -> VarSet {
    chase(dc).0
}

pub(crate) fn require_bounded(dc: &ConstraintSet) -> Result<()> {
    let closure = bound_closure(dc);
    let full = VarSet::full(dc.n());
    if closure == full {
        Ok(())
    } else {
        Err(Error::Unbounded { unbound: (full - closure).names(dc.var_names()) })
    }
}

const ACYCLICIZE_MAX_VARS: usize = 8;
const ACYCLICIZE_MAX_CONSTRAINTS: usize = 12;

/// Searches all constraint sets reachable by single-variable removals
/// `(X, Y, N) → (X, Y − {y}, N)`, where `y` is the head of a dependency edge
/// lying on a cycle and every variable stays bound. Returns the acyclic
/// set with the smallest `objective`; ties go to the first one found.
///
/// Exhaustive and exponential; limited to 8 variables and 12 constraints.
pub fn acyclicize<F>(dc: &ConstraintSet, objective: F) -> Result<ConstraintSet>
where
    F: Fn(&ConstraintSet) -> Result<Rational>,
{
    require_bounded(dc)?;
    if dc.n() > ACYCLICIZE_MAX_VARS {
        return Err(Error::SizeLimit { what: "acyclicize", n: dc.n(), max: ACYCLICIZE_MAX_VARS });
    }
    if dc.len() > ACYCLICIZE_MAX_CONSTRAINTS {
        return Err(Error::SizeLimit { what: "acyclicize", n: dc.len(), max: ACYCLICIZE_MAX_CONSTRAINTS });
    }
    if dependency_graph(dc).is_acyclic() {
        return Ok(dc.clone());
    }
    let mut seen = HashSet::new();
    let mut best: Option<(Rational, ConstraintSet)> = None;
    let mut stack = vec![dc.clone()];
    while let Some(cur) = stack.pop() {
        if !seen.insert(state_key(&cur)) {
            continue;
        }
        let g = dependency_graph(&cur);
        if g.is_acyclic() {
            let value = objective(&cur)?;
            if best.as_ref().is_none_or(|(b, _)| value < *b) {
                best = Some((value, cur));
            }
            continue;
        }
        let comps = g.components();
        let mut next = Vec::new();
        for (i, c) in cur.iter().enumerate() {
            for y in (c.y - c.x).iter() {
                if (comps[y] & c.x).is_empty() {
                    continue;
                }
                let cand = replace(&cur, i, c, y);
                if bound_closure(&cand) == VarSet::full(cur.n()) {
                    next.push(cand);
                }
            }
        }
        // reversed so the first move is explored first
        stack.extend(next.into_iter().rev());
    }
    Ok(best.expect("Claim 2 guarantees a bounded acyclic set").1)
}

fn replace(dc: &ConstraintSet, i: usize, c: &DegreeConstraint, y: usize) -> ConstraintSet {
    let mut out = ConstraintSet::new(dc.var_names().to_vec());
    for (j, d) in dc.iter().enumerate() {
        if j != i {
            out.push(d.clone());
            continue;
        }
        let y2 = c.y.without(y);
        if y2 != c.x {
            out.push(DegreeConstraint { x: c.x, y: y2, n: c.n, guard: c.guard.clone() });
        }
    }
    out
}

fn state_key(dc: &ConstraintSet) -> Vec<(u32, u32, u64, Option<String>)> {
    let mut key: Vec<_> = dc.iter().map(|c| (c.x.bits(), c.y.bits(), c.n, c.guard.clone())).collect();
    key.sort();
    key
}

/// Breaks cycles among simple FDs by dropping FD edges that lie on a cycle,
/// one at a time, keeping a drop only when the polymatroid bound is
/// unchanged (exact rational equality). Later FDs are tried first.
pub fn simplify_fd(dc: &ConstraintSet) -> Result<ConstraintSet> {
    if let Some(bad) = dc.iter().find(|c| !c.is_cardinality() && !c.is_simple_fd()) {
        return Err(Error::Invalid(format!(
            "{} is neither a cardinality constraint nor a simple FD",
            bad.label(dc.var_names())
        )));
    }
    let target = polymatroid_bound(dc)?.log2;
    let mut cur = dc.clone();
    'outer: loop {
        let g = dependency_graph(&cur);
        if g.is_acyclic() {
            return Ok(cur);
        }
        for (i, c) in cur.iter().enumerate().rev() {
            if c.is_cardinality() {
                continue;
            }
            let x = c.x.iter().next().unwrap();
            let y = (c.y - c.x).iter().next().unwrap();
            if !g.on_cycle(x, y) {
                continue;
            }
            let trial = cur.without(i);
            if matches!(polymatroid_bound(&trial), Ok(b) if b.log2 == target) {
                cur = trial;
                continue 'outer;
            }
        }
        return Err(Error::Invalid("no FD on a cycle can be dropped without changing the bound".into()));
    }
}
