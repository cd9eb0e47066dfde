use num::{One, Zero};
use serde::Serialize;

use super::LogStatistic;
use crate::error::{Error, Result};
use crate::lp::{Cmp, LinearProgram, LpError, Rational, Sense};
use crate::query::require_bounded;
use crate::query::{dependency_graph, ConstraintSet, Hypergraph, Query};
use crate::varset::VarSet;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AgmBound {
    #[serde(serialize_with = "crate::lp::text::serialize")]
    pub log2: Rational,
    /// Weight per edge; zero for edges without a cardinality.
    #[serde(serialize_with = "crate::lp::text::vec::serialize")]
    pub cover: Vec<Rational>,
}

/// Minimum of `Σ δ_F log2 N_F` over fractional edge covers. Edges without a
/// statistic cannot be used.
pub fn agm_bound(hg: &Hypergraph, cards: &[Option<LogStatistic>]) -> Result<AgmBound> {
    assert_eq!(cards.len(), hg.edges().len(), "one statistic slot per edge");
    let n = hg.n();
    let usable: VarSet =
        hg.edges().iter().zip(cards).filter(|(_, c)| c.is_some()).fold(VarSet::EMPTY, |acc, (e, _)| acc | *e);
    if usable != VarSet::full(n) {
        return Err(Error::Unbounded { unbound: (VarSet::full(n) - usable).names(hg.vertices()) });
    }
    let m = hg.edges().len();
    let mut lp = LinearProgram::new(m, Sense::Minimize);
    for (f, c) in cards.iter().enumerate() {
        if let Some(c) = c {
            lp.set_objective(f, c.log2().clone());
        }
    }
    for v in 0..n {
        let row = hg
            .edges()
            .iter()
            .enumerate()
            .filter(|(f, e)| e.contains(v) && cards[*f].is_some())
            .map(|(f, _)| (f, Rational::one()))
            .collect();
        lp.add_constraint(row, Cmp::Ge, Rational::one());
    }
    // edges without a statistic are pinned to zero
    for (f, c) in cards.iter().enumerate() {
        if c.is_none() {
            lp.add_constraint(vec![(f, Rational::one())], Cmp::Le, Rational::zero());
        }
    }
    let sol = lp.solve().map_err(|e| lp_error(e, hg.vertices()))?;
    Ok(AgmBound { log2: sol.value, cover: sol.primal })
}

/// Per atom, the smallest cardinality constraint whose `Y` is exactly the
/// atom's variables.
pub fn cardinalities(query: &Query, dc: &ConstraintSet) -> Vec<Option<LogStatistic>> {
    query
        .atoms()
        .iter()
        .map(|a| {
            dc.iter()
                .filter(|c| c.x.is_empty() && c.y == a.var_set())
                .map(|c| c.n)
                .min()
                .map(|n| LogStatistic::new(n).expect("constraint bounds are positive"))
        })
        .collect()
}

pub fn agm_bound_for_query(query: &Query, dc: &ConstraintSet) -> Result<AgmBound> {
    agm_bound(&query.hypergraph(), &cardinalities(query, dc))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ModularBound {
    #[serde(serialize_with = "crate::lp::text::serialize")]
    pub log2: Rational,
    /// Optimal `v_i` per variable.
    #[serde(serialize_with = "crate::lp::text::vec::serialize")]
    pub v: Vec<Rational>,
    /// Optimal dual weight per constraint, in constraint order.
    #[serde(serialize_with = "crate::lp::text::vec::serialize")]
    pub delta: Vec<Rational>,
    /// When false the constraints are cyclic and the value is only a lower
    /// bound on the polymatroid bound.
    pub acyclic: bool,
}

/// `max Σ v_i` subject to `Σ_{i ∈ Y−X} v_i <= log2 N_{Y|X}`, `v >= 0`.
pub fn modular_bound(dc: &ConstraintSet) -> Result<ModularBound> {
    require_bounded(dc)?;
    let n = dc.n();
    let mut lp = LinearProgram::new(n, Sense::Maximize);
    for i in 0..n {
        lp.set_objective(i, Rational::one());
    }
    for c in dc {
        let row = (c.y - c.x).iter().map(|i| (i, Rational::one())).collect();
        lp.add_constraint(row, Cmp::Le, LogStatistic::new(c.n)?.log2().clone());
    }
    let sol = lp.solve().map_err(|e| lp_error(e, dc.var_names()))?;
    Ok(ModularBound {
        log2: sol.value,
        v: sol.primal,
        delta: sol.dual,
        acyclic: dependency_graph(dc).is_acyclic(),
    })
}

pub(crate) fn lp_error(e: LpError, names: &[String]) -> Error {
    match e {
        LpError::Unbounded => Error::Unbounded { unbound: names.to_vec() },
        LpError::Infeasible => Error::Infeasible,
    }
}
