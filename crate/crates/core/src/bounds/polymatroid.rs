use num::{One, Signed, Zero};
use serde::Serialize;

use super::agm::lp_error;
use super::{LogStatistic, SetFunctionVector};
use crate::error::{Error, Result};
use crate::lp::{Cmp, LinearProgram, Rational, Sense};
use crate::query::{chase, require_bounded, ConstraintSet};
use crate::varset::VarSet;

pub const MAX_POLYMATROID_VARS: usize = 10;
/// Largest `n` solved with every elemental inequality up front.
const FULL_LP_MAX_VARS: usize = 6;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PolymatroidBound {
    #[serde(serialize_with = "crate::lp::text::serialize")]
    pub log2: Rational,
    pub h: SetFunctionVector,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolymatroidMethod {
    /// Every elemental inequality in one LP.
    Full,
    /// Monotonicity towards `[n]` plus a box, adding violated elemental
    /// submodularity rows until none remain.
    ConstraintGeneration,
}

/// `max h([n])` over polymatroids satisfying `h(Y) − h(X) <= log2 N_{Y|X}`.
pub fn polymatroid_bound(dc: &ConstraintSet) -> Result<PolymatroidBound> {
    let method = if dc.n() <= FULL_LP_MAX_VARS {
        PolymatroidMethod::Full
    } else {
        PolymatroidMethod::ConstraintGeneration
    };
    polymatroid_bound_by(dc, method)
}

pub fn polymatroid_bound_by(dc: &ConstraintSet, method: PolymatroidMethod) -> Result<PolymatroidBound> {
    let n = dc.n();
    if n > MAX_POLYMATROID_VARS {
        return Err(Error::SizeLimit { what: "polymatroid bound", n, max: MAX_POLYMATROID_VARS });
    }
    require_bounded(dc)?;
    let stats: Vec<Rational> =
        dc.iter().map(|c| LogStatistic::new(c.n).map(|s| s.log2().clone())).collect::<Result<_>>()?;
    let full = VarSet::full(n);
    let var = |s: VarSet| s.bits() as usize - 1;

    let mut lp = LinearProgram::new((1 << n) - 1, Sense::Maximize);
    lp.set_objective(var(full), Rational::one());
    for (c, stat) in dc.iter().zip(&stats) {
        let mut row = vec![(var(c.y), Rational::one())];
        if !c.x.is_empty() {
            row.push((var(c.x), -Rational::one()));
        }
        lp.add_constraint(row, Cmp::Le, stat.clone());
    }
    for i in 0..n {
        let rest = full.without(i);
        if !rest.is_empty() {
            lp.add_constraint(vec![(var(full), Rational::one()), (var(rest), -Rational::one())], Cmp::Ge, Rational::zero());
        }
    }

    let submodular = elemental_pairs(n);
    let sol = match method {
        PolymatroidMethod::Full => {
            for &(s, i, j) in &submodular {
                lp.add_constraint(submodular_row(s, i, j), Cmp::Ge, Rational::zero());
            }
            lp.solve().map_err(|e| lp_error(e, dc.var_names()))?
        }
        PolymatroidMethod::ConstraintGeneration => {
            // the chase gives h([n]) <= Σ of the fired statistics
            let cap: Rational = chase(dc).1.iter().map(|&i| stats[i].clone()).sum();
            lp.add_constraint(vec![(var(full), Rational::one())], Cmp::Le, cap);
            for s in VarSet::all(n).filter(|s| !s.is_empty() && *s != full) {
                lp.add_constraint(vec![(var(s), Rational::one()), (var(full), -Rational::one())], Cmp::Le, Rational::zero());
            }
            let mut added = vec![false; submodular.len()];
            let batch = 8 * n;
            loop {
                let sol = lp.solve().map_err(|e| lp_error(e, dc.var_names()))?;
                let h = |s: VarSet| if s.is_empty() { Rational::zero() } else { sol.primal[var(s)].clone() };
                let mut violated: Vec<(Rational, usize)> = submodular
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| !added[*k])
                    .filter_map(|(k, &(s, i, j))| {
                        let slack = h(s.with(i)) + h(s.with(j)) - h(s.with(i).with(j)) - h(s);
                        slack.is_negative().then_some((slack, k))
                    })
                    .collect();
                if violated.is_empty() {
                    break sol;
                }
                violated.sort();
                for &(_, k) in violated.iter().take(batch) {
                    let (s, i, j) = submodular[k];
                    added[k] = true;
                    lp.add_constraint(submodular_row(s, i, j), Cmp::Ge, Rational::zero());
                }
            }
        }
    };
    let h = SetFunctionVector::from_fn(n, |s| if s.is_empty() { Rational::zero() } else { sol.primal[var(s)].clone() });
    Ok(PolymatroidBound { log2: sol.value, h })
}

/// `(S, i, j)` with `i < j` and `S ⊆ [n] − {i, j}`.
fn elemental_pairs(n: usize) -> Vec<(VarSet, usize, usize)> {
    let full = VarSet::full(n);
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for s in full.without(i).without(j).subsets() {
                out.push((s, i, j));
            }
        }
    }
    out
}

/// `h(S+i) + h(S+j) − h(S+i+j) − h(S) >= 0`, with `h(∅)` dropped.
fn submodular_row(s: VarSet, i: usize, j: usize) -> Vec<(usize, Rational)> {
    let var = |s: VarSet| s.bits() as usize - 1;
    let mut row = vec![
        (var(s.with(i)), Rational::one()),
        (var(s.with(j)), Rational::one()),
        (var(s.with(i).with(j)), -Rational::one()),
    ];
    if !s.is_empty() {
        row.push((var(s), -Rational::one()));
    }
    row
}

/// Elemental inequalities of Γ_n as rows over `h(S)`, `S ≠ ∅` (variable
/// `bits(S) − 1`). Shared with the Shannon-flow cross-check.
pub(crate) fn gamma_rows(n: usize) -> Vec<Vec<(usize, Rational)>> {
    let full = VarSet::full(n);
    let var = |s: VarSet| s.bits() as usize - 1;
    let mut rows = Vec::new();
    for i in 0..n {
        let rest = full.without(i);
        if !rest.is_empty() {
            rows.push(vec![(var(full), Rational::one()), (var(rest), -Rational::one())]);
        }
    }
    for (s, i, j) in elemental_pairs(n) {
        rows.push(submodular_row(s, i, j));
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::check_polymatroid;
    use crate::lp::int;
    use crate::query::Query;

    #[test]
    fn triangle_matches_agm() {
        let q = Query::parse("Q(A,B,C) :- R(A,B), S(B,C), T(A,C).").unwrap();
        let dc = ConstraintSet::parse("card R 1048576\ncard S 1048576\ncard T 1048576", &q).unwrap();
        let b = polymatroid_bound(&dc).unwrap();
        assert_eq!(b.log2, int(30));
        assert_eq!(check_polymatroid(&b.h), Ok(()));
        assert_eq!(b.h.get(VarSet::full(3)), &int(30));
    }

    #[test]
    fn methods_agree() {
        let q = Query::parse("Q(A,B,C,D) :- R(A,B), S(B,C), T(C,D), W(A,C,D), V(A,B,D).").unwrap();
        let dc = ConstraintSet::parse(
            "card R 1048576\ncard S 1024\ncard T 1048576\ndeg W A,C -> A,C,D 1024\ndeg V B,D -> A,B,D 1024",
            &q,
        )
        .unwrap();
        let full = polymatroid_bound_by(&dc, PolymatroidMethod::Full).unwrap();
        let cg = polymatroid_bound_by(&dc, PolymatroidMethod::ConstraintGeneration).unwrap();
        assert_eq!(full.log2, cg.log2);
        assert_eq!(check_polymatroid(&cg.h), Ok(()));
    }

    #[test]
    fn unbounded_and_size_limit() {
        let q = Query::parse("Q(A,B) :- R(A,B).").unwrap();
        let dc = ConstraintSet::parse("deg R A -> A,B 4", &q).unwrap();
        assert!(matches!(polymatroid_bound(&dc), Err(Error::Unbounded { .. })));
        let names: Vec<String> = (0..11).map(|i| format!("V{i}")).collect();
        let head = names.join(",");
        let q = Query::parse(&format!("Q({head}) :- R({head}).")).unwrap();
        let dc = ConstraintSet::parse("card R 8", &q).unwrap();
        assert!(matches!(polymatroid_bound(&dc), Err(Error::SizeLimit { .. })));
    }
}
