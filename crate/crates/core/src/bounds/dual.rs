use std::collections::BTreeMap;

use num::{One, Signed, Zero};
use serde::Serialize;
use serde_json::{json, Value as Json};

use super::agm::lp_error;
use super::polymatroid::gamma_rows;
use super::LogStatistic;
use crate::error::{Error, Result};
use crate::lp::{rational_text, Cmp, LinearProgram, LpError, Rational, Sense};
use crate::query::{require_bounded, ConstraintSet};
use crate::varset::VarSet;

/// The dual LP ranges over all `(X, Y)` with `X ⊊ Y`; 3^n − 2^n rows.
pub const MAX_DUAL_VARS: usize = 6;

/// Weight on the conditional term `h(Y|X)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PairWeight {
    pub x: VarSet,
    pub y: VarSet,
    #[serde(serialize_with = "crate::lp::text::serialize")]
    pub weight: Rational,
}

/// Weight on the submodularity `h(I ∪ J | J) <= h(I | I ∩ J)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct XiWeight {
    pub i: VarSet,
    pub j: VarSet,
    #[serde(serialize_with = "crate::lp::text::serialize")]
    pub weight: Rational,
}

/// A feasible point `(δ, ξ, α)` of the Shannon-flow dual. Only non-zero
/// entries are stored.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DualCertificate {
    pub vars: Vec<String>,
    /// `⟨δ, n⟩` when the certificate came from statistics.
    #[serde(serialize_with = "crate::lp::text::option::serialize")]
    pub value: Option<Rational>,
    pub delta: Vec<PairWeight>,
    pub xi: Vec<XiWeight>,
    pub alpha: Vec<PairWeight>,
}

impl DualCertificate {
    pub fn n(&self) -> usize {
        self.vars.len()
    }

    pub fn delta_weight(&self, x: VarSet, y: VarSet) -> Rational {
        self.delta.iter().filter(|d| d.x == x && d.y == y).map(|d| d.weight.clone()).sum()
    }

    /// Net weight flowing into `h(Y|X)`.
    pub fn inflow(&self, x: VarSet, y: VarSet) -> Rational {
        let mut f = self.delta_weight(x, y);
        for xi in &self.xi {
            if xi.j == x && (xi.i | xi.j) == y {
                f += &xi.weight;
            }
            if xi.i == y && (xi.i & xi.j) == x {
                f -= &xi.weight;
            }
        }
        for a in &self.alpha {
            if a.x == x && a.y == y {
                f += &a.weight;
            }
            if x.is_empty() {
                if a.y == y {
                    f -= &a.weight;
                }
                if a.x == y {
                    f += &a.weight;
                }
            }
        }
        f
    }

    /// Exact check of every dual constraint.
    pub fn is_feasible(&self) -> bool {
        let n = self.n();
        if self.delta.iter().any(|d| d.weight.is_negative()) || self.xi.iter().any(|x| x.weight.is_negative()) {
            return false;
        }
        let full = VarSet::full(n);
        pairs(n).into_iter().all(|(x, y)| {
            let need = if x.is_empty() && y == full { Rational::one() } else { Rational::zero() };
            self.inflow(x, y) >= need
        })
    }

    /// `value_log2`, `delta`, `xi`, `alpha` with rationals as `p/q` strings.
    pub fn to_json(&self) -> Json {
        let names = |s: VarSet| s.names(&self.vars);
        let pair = |p: &PairWeight| json!({"X": names(p.x), "Y": names(p.y), "weight": rational_text(&p.weight)});
        json!({
            "value_log2": self.value.as_ref().map(rational_text),
            "delta": self.delta.iter().map(pair).collect::<Vec<_>>(),
            "xi": self.xi.iter().map(|x| json!({"I": names(x.i), "J": names(x.j), "weight": rational_text(&x.weight)})).collect::<Vec<_>>(),
            "alpha": self.alpha.iter().map(pair).collect::<Vec<_>>(),
        })
    }
}

/// All `(X, Y)` with `X ⊊ Y ⊆ [n]`, grouped by `Y`.
fn pairs(n: usize) -> Vec<(VarSet, VarSet)> {
    let mut out = Vec::new();
    for y in VarSet::all(n).filter(|y| !y.is_empty()) {
        for x in y.subsets().filter(|x| *x != y) {
            out.push((x, y));
        }
    }
    out
}

/// Row layout over `P` and the flow columns `ξ, α⁺, α⁻`.
struct FlowSpace {
    n: usize,
    row_of: Vec<usize>,
    pairs: Vec<(VarSet, VarSet)>,
    xi: Vec<(VarSet, VarSet)>,
    alpha: Vec<(VarSet, VarSet)>,
}

impl FlowSpace {
    fn new(n: usize) -> Self {
        let pairs = pairs(n);
        let mut row_of = vec![usize::MAX; 1 << (2 * n)];
        for (r, (x, y)) in pairs.iter().enumerate() {
            row_of[((x.bits() as usize) << n) | y.bits() as usize] = r;
        }
        let nonempty: Vec<VarSet> = VarSet::all(n).filter(|s| !s.is_empty()).collect();
        let mut xi = Vec::new();
        for &i in &nonempty {
            for &j in &nonempty {
                if i.incomparable(j) {
                    xi.push((i, j));
                }
            }
        }
        let alpha = pairs.iter().copied().filter(|(x, _)| !x.is_empty()).collect();
        FlowSpace { n, row_of, pairs, xi, alpha }
    }

    fn row(&self, x: VarSet, y: VarSet) -> usize {
        self.row_of[((x.bits() as usize) << self.n) | y.bits() as usize]
    }

    fn num_flow_columns(&self) -> usize {
        self.xi.len() + 2 * self.alpha.len()
    }

    /// Per-row coefficient lists of the flow columns, offset by `base`.
    fn flow_rows(&self, base: usize) -> Vec<Vec<(usize, Rational)>> {
        let mut rows = vec![Vec::new(); self.pairs.len()];
        let one = Rational::one;
        for (k, &(i, j)) in self.xi.iter().enumerate() {
            rows[self.row(j, i | j)].push((base + k, one()));
            rows[self.row(i & j, i)].push((base + k, -one()));
        }
        let plus = base + self.xi.len();
        let minus = plus + self.alpha.len();
        for (k, &(x, y)) in self.alpha.iter().enumerate() {
            for (r, c) in [(self.row(x, y), one()), (self.row(VarSet::EMPTY, x), one()), (self.row(VarSet::EMPTY, y), -one())] {
                rows[r].push((plus + k, c.clone()));
                rows[r].push((minus + k, -c));
            }
        }
        rows
    }

    fn target(&self, r: usize) -> Rational {
        let (x, y) = self.pairs[r];
        if x.is_empty() && y == VarSet::full(self.n) {
            Rational::one()
        } else {
            Rational::zero()
        }
    }

    /// Reads `ξ` and `α = α⁺ − α⁻` from a primal vector.
    fn read_flow(&self, primal: &[Rational], base: usize) -> (Vec<XiWeight>, Vec<PairWeight>) {
        let xi = self
            .xi
            .iter()
            .enumerate()
            .filter(|(k, _)| !primal[base + k].is_zero())
            .map(|(k, &(i, j))| XiWeight { i, j, weight: primal[base + k].clone() })
            .collect();
        let plus = base + self.xi.len();
        let minus = plus + self.alpha.len();
        let alpha = self
            .alpha
            .iter()
            .enumerate()
            .filter_map(|(k, &(x, y))| {
                let w = &primal[plus + k] - &primal[minus + k];
                (!w.is_zero()).then_some(PairWeight { x, y, weight: w })
            })
            .collect();
        (xi, alpha)
    }
}

fn check_size(n: usize) -> Result<()> {
    if n > MAX_DUAL_VARS {
        return Err(Error::SizeLimit { what: "Shannon-flow dual", n, max: MAX_DUAL_VARS });
    }
    Ok(())
}

/// Solves the dual LP: minimize `⟨δ, n⟩` subject to the inflow constraints.
/// A second pass fixes the optimum and minimizes `Σ ξ + Σ |α|`, so the
/// certificate carries no spurious flow.
pub fn shannon_flow_dual(dc: &ConstraintSet) -> Result<(Rational, DualCertificate)> {
    check_size(dc.n())?;
    require_bounded(dc)?;
    let space = FlowSpace::new(dc.n());
    let m = dc.len();
    let stats: Vec<Rational> =
        dc.iter().map(|c| LogStatistic::new(c.n).map(|s| s.log2().clone())).collect::<Result<_>>()?;
    let mut rows = space.flow_rows(m);
    for (k, c) in dc.iter().enumerate() {
        rows[space.row(c.x, c.y)].push((k, Rational::one()));
    }
    let num_vars = m + space.num_flow_columns();
    let build = |sense: Sense| {
        let mut lp = LinearProgram::new(num_vars, sense);
        for (r, row) in rows.iter().enumerate() {
            lp.add_constraint(row.clone(), Cmp::Ge, space.target(r));
        }
        lp
    };

    let mut first = build(Sense::Minimize);
    for (k, s) in stats.iter().enumerate() {
        first.set_objective(k, s.clone());
    }
    let value = first.solve().map_err(|e| lp_error(e, dc.var_names()))?.value;

    let mut second = build(Sense::Minimize);
    for v in m..num_vars {
        second.set_objective(v, Rational::one());
    }
    second.add_constraint(stats.iter().cloned().enumerate().collect(), Cmp::Eq, value.clone());
    let sol = second.solve().map_err(|e| lp_error(e, dc.var_names()))?;

    let mut delta: BTreeMap<(VarSet, VarSet), Rational> = BTreeMap::new();
    for (k, c) in dc.iter().enumerate() {
        if !sol.primal[k].is_zero() {
            *delta.entry((c.x, c.y)).or_insert_with(Rational::zero) += &sol.primal[k];
        }
    }
    let (xi, alpha) = space.read_flow(&sol.primal, m);
    let cert = DualCertificate {
        vars: dc.var_names().to_vec(),
        value: Some(value.clone()),
        delta: delta.into_iter().map(|((x, y), weight)| PairWeight { x, y, weight }).collect(),
        xi,
        alpha,
    };
    debug_assert!(cert.is_feasible());
    Ok((value, cert))
}

/// Completes `δ` with `(ξ, α)` if `h([n]) <= ⟨δ, h⟩` is a Shannon-flow
/// inequality, choosing the completion of least total flow.
pub fn shannon_flow_completion(delta: &[PairWeight], vars: &[String]) -> Result<Option<DualCertificate>> {
    let n = vars.len();
    check_size(n)?;
    if delta.iter().any(|d| d.weight.is_negative()) {
        return Err(Error::NegativeWeight);
    }
    let mut merged: BTreeMap<(VarSet, VarSet), Rational> = BTreeMap::new();
    for d in delta {
        if !d.x.is_proper_subset(d.y) || !d.y.is_subset(VarSet::full(n)) {
            return Err(Error::Invalid(format!("({:?}, {:?}) is not a conditional term", d.x, d.y)));
        }
        *merged.entry((d.x, d.y)).or_insert_with(Rational::zero) += &d.weight;
    }
    merged.retain(|_, w| !w.is_zero());
    let space = FlowSpace::new(n);
    let rows = space.flow_rows(0);
    let mut lp = LinearProgram::new(space.num_flow_columns(), Sense::Minimize);
    for v in 0..space.num_flow_columns() {
        lp.set_objective(v, Rational::one());
    }
    for (r, row) in rows.into_iter().enumerate() {
        let (x, y) = space.pairs[r];
        let have = merged.get(&(x, y)).cloned().unwrap_or_else(Rational::zero);
        lp.add_constraint(row, Cmp::Ge, space.target(r) - have);
    }
    match lp.solve() {
        Ok(sol) => {
            let (xi, alpha) = space.read_flow(&sol.primal, 0);
            Ok(Some(DualCertificate {
                vars: vars.to_vec(),
                value: None,
                delta: merged.into_iter().map(|((x, y), weight)| PairWeight { x, y, weight }).collect(),
                xi,
                alpha,
            }))
        }
        Err(LpError::Infeasible) => Ok(None),
        Err(LpError::Unbounded) => unreachable!("flow objective is bounded below by zero"),
    }
}

/// Whether `h([n]) <= Σ δ_{Y|X} h(Y|X)` holds for every polymatroid,
/// decided by searching for a dual completion.
pub fn check_shannon_flow(delta: &[PairWeight], n: usize) -> Result<bool> {
    let vars: Vec<String> = (0..n).map(|i| format!("V{i}")).collect();
    Ok(shannon_flow_completion(delta, &vars)?.is_some())
}

/// The same question from the primal side: `max h([n])` over Γ_n with
/// `⟨δ, h⟩ <= 1` is at most one.
pub fn shannon_flow_primal_check(delta: &[PairWeight], n: usize) -> Result<bool> {
    if n > super::polymatroid::MAX_POLYMATROID_VARS {
        return Err(Error::SizeLimit { what: "Shannon-flow check", n, max: super::polymatroid::MAX_POLYMATROID_VARS });
    }
    let var = |s: VarSet| s.bits() as usize - 1;
    let mut lp = LinearProgram::new((1 << n) - 1, Sense::Maximize);
    lp.set_objective(var(VarSet::full(n)), Rational::one());
    for row in gamma_rows(n) {
        lp.add_constraint(row, Cmp::Ge, Rational::zero());
    }
    let mut row = Vec::new();
    for d in delta {
        row.push((var(d.y), d.weight.clone()));
        if !d.x.is_empty() {
            row.push((var(d.x), -d.weight.clone()));
        }
    }
    lp.add_constraint(row, Cmp::Le, Rational::one());
    match lp.solve() {
        Ok(sol) => Ok(sol.value <= Rational::one()),
        Err(LpError::Unbounded) => Ok(false),
        Err(LpError::Infeasible) => unreachable!("h = 0 is feasible"),
    }
}
