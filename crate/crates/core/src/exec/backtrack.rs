use super::{guard_atom_for, semijoin_all};
use crate::counters::Counters;
use crate::error::{Error, Result};
use crate::query::{require_bounded, ConstraintSet, Query};
use crate::relation::{intersect_iter, project, Database, Relation, Value};

/// Result of [`backtrack_join`].
#[derive(Clone, Debug)]
pub struct BacktrackOutput {
    pub relation: Relation,
    pub counters: Counters,
    /// Probes spent choosing the variable at each depth of `order`.
    pub probes_by_depth: Vec<u64>,
}

/// Backtracking search over a variable order compatible with an acyclic
/// constraint set.
///
/// Each constraint `(X, Y, N)` is materialised once as `π_Y(guard)` sorted
/// with its variables in `order`, so `X` forms a prefix. The candidates for
/// variable `i` are the intersection, over constraints with `i ∈ Y − X`, of
/// the `i`-column under the bound prefix. The result is finally
/// semijoin-reduced against every atom.
pub fn backtrack_join(query: &Query, dc: &ConstraintSet, order: &[usize], db: &Database) -> Result<BacktrackOutput> {
    let n = query.n();
    if dc.var_names() != query.var_names() {
        return Err(Error::Invalid("constraint set and query disagree on variables".into()));
    }
    let mut seen = vec![false; n];
    if order.len() != n || order.iter().any(|&v| v >= n || std::mem::replace(&mut seen[v], true)) {
        return Err(Error::OrderIncompatible(format!("{order:?} is not a permutation of the {n} variables")));
    }
    require_bounded(dc)?;
    let names = query.var_names();
    let mut rank = vec![0; n];
    for (k, &v) in order.iter().enumerate() {
        rank[v] = k;
    }
    for c in dc {
        let free = c.y - c.x;
        if let (Some(x), Some(y)) = (c.x.iter().map(|v| rank[v]).max(), free.iter().map(|v| rank[v]).min()) {
            if x > y {
                return Err(Error::OrderIncompatible(format!(
                    "constraint {} binds {} before {}",
                    c.label(names),
                    names[order[y]],
                    names[order[x]]
                )));
            }
        }
    }

    let atoms = query.bind(db)?;
    // (index relation, column of the chosen variable) per depth
    let mut at_depth: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut indexes = Vec::with_capacity(dc.len());
    let mut prefix_vars: Vec<Vec<usize>> = Vec::with_capacity(dc.len());
    for (k, c) in dc.iter().enumerate() {
        let a = guard_atom_for(query, c)?;
        let mut vars: Vec<usize> = c.y.iter().collect();
        vars.sort_by_key(|&v| rank[v]);
        let attrs: Vec<&str> = vars.iter().map(|&v| names[v].as_str()).collect();
        indexes.push(project(&atoms[a], &attrs)?);
        for (col, &v) in vars.iter().enumerate() {
            if !c.x.contains(v) {
                at_depth[rank[v]].push((k, col));
            }
        }
        prefix_vars.push(vars);
    }
    if let Some(d) = at_depth.iter().position(Vec::is_empty) {
        return Err(Error::Unbounded { unbound: vec![names[order[d]].clone()] });
    }

    let mut counters = Counters::new();
    let mut probes_by_depth = vec![0u64; n];
    let mut binding: Vec<Value> = vec![0; n];
    let mut out: Vec<Value> = Vec::new();

    let candidates = |d: usize, binding: &[Value], counters: &mut Counters, probes: &mut [u64]| -> Vec<Value> {
        let before = counters.probes;
        let mut views = Vec::with_capacity(at_depth[d].len());
        let mut prefix = Vec::new();
        for &(k, col) in &at_depth[d] {
            prefix.clear();
            prefix.extend(prefix_vars[k][..col].iter().map(|&v| binding[v]));
            counters.probes += 1;
            let view = indexes[k].prefix_view(&prefix);
            match view.column() {
                Some(c) if !view.is_empty() => views.push(c),
                _ => {
                    probes[d] += counters.probes - before;
                    return Vec::new();
                }
            }
        }
        let vals: Vec<Value> = intersect_iter(views, counters).collect();
        probes[d] += counters.probes - before;
        vals
    };

    // explicit frame stack: candidate list and cursor per depth
    let mut frames: Vec<(Vec<Value>, usize)> = Vec::with_capacity(n);
    frames.push((candidates(0, &binding, &mut counters, &mut probes_by_depth), 0));
    while !frames.is_empty() {
        let d = frames.len() - 1;
        let (vals, pos) = &mut frames[d];
        if *pos == vals.len() {
            frames.pop();
            continue;
        }
        binding[order[d]] = vals[*pos];
        *pos += 1;
        if d + 1 == n {
            out.extend(order.iter().map(|&v| binding[v]));
            counters.emitted += 1;
        } else {
            let next = candidates(d + 1, &binding, &mut counters, &mut probes_by_depth);
            frames.push((next, 0));
        }
    }

    let schema: Vec<String> = order.iter().map(|&v| names[v].clone()).collect();
    let found = Relation::from_flat(query.name(), schema, out)?.reordered(names)?;
    let relation = semijoin_all(found, &atoms, &mut counters)?;
    Ok(BacktrackOutput { relation, counters, probes_by_depth })
}
