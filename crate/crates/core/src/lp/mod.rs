//! Exact linear programming over arbitrary-precision rationals.
//!
//! A two-phase tableau simplex with Bland's rule. Tableau rows are stored
//! sparsely, which keeps the structured LPs built by [`crate::bounds`]
//! cheap despite bignum arithmetic. Every solution carries
//! a dual vector; [`LpSolution::certify`] checks primal/dual feasibility and
//! equal objectives exactly.

use num::{One, Signed, Zero};
use thiserror::Error;

pub type Rational = num::BigRational;

/// Shorthand for the rational `p / q`.
pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(p.into(), q.into())
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(v.into())
}

/// Canonical `p/q` text for exact values (`3` renders as `3/1`).
pub fn rational_text(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `p/q` or a plain integer.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let q: num::BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                return None;
            }
            Some(Rational::new(p.trim().parse().ok()?, q))
        }
        None => Some(Rational::from_integer(s.parse().ok()?)),
    }
}

/// Serde adapters writing rationals as `p/q` strings.
pub mod text {
    use super::{rational_text, Rational};
    use serde::Serializer;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&rational_text(r))
    }

    pub mod vec {
        use super::*;
        use serde::ser::SerializeSeq;

        pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for r in v {
                seq.serialize_element(&rational_text(r))?;
            }
            seq.end()
        }
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(v: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
            match v {
                Some(r) => s.serialize_some(&rational_text(r)),
                None => s.serialize_none(),
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<(usize, Rational)>,
    pub cmp: Cmp,
    pub rhs: Rational,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LpError {
    #[error("objective is unbounded")]
    Unbounded,
    #[error("constraints are infeasible")]
    Infeasible,
}

/// `max` or `min` of `c·x` subject to linear rows, with `x >= 0`.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    num_vars: usize,
    sense: Sense,
    objective: Vec<Rational>,
    constraints: Vec<Constraint>,
}

/// Optimal primal point, value and shadow prices.
///
/// `dual[i]` is the rate of change of the optimal value per unit increase of
/// row `i`'s right-hand side, in both senses.
#[derive(Clone, Debug)]
pub struct LpSolution {
    pub value: Rational,
    pub primal: Vec<Rational>,
    pub dual: Vec<Rational>,
}

impl LinearProgram {
    pub fn new(num_vars: usize, sense: Sense) -> Self {
        LinearProgram { num_vars, sense, objective: vec![Rational::zero(); num_vars], constraints: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn set_objective(&mut self, var: usize, coef: Rational) {
        self.objective[var] = coef;
    }

    /// Adds a row and returns its index. Repeated variables are summed.
    pub fn add_constraint(&mut self, coeffs: Vec<(usize, Rational)>, cmp: Cmp, rhs: Rational) -> usize {
        let mut merged: Vec<(usize, Rational)> = Vec::with_capacity(coeffs.len());
        let mut sorted = coeffs;
        sorted.sort_by_key(|(v, _)| *v);
        for (v, c) in sorted {
            assert!(v < self.num_vars, "variable {v} out of range");
            match merged.last_mut() {
                Some((lv, lc)) if *lv == v => *lc += c,
                _ => merged.push((v, c)),
            }
        }
        merged.retain(|(_, c)| !c.is_zero());
        self.constraints.push(Constraint { coeffs: merged, cmp, rhs });
        self.constraints.len() - 1
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        let sol = Tableau::new(self).run()?;
        debug_assert_eq!(sol.certify(self), Ok(()));
        Ok(sol)
    }

    /// Exact optimality check of a claimed solution.
    fn check(&self, sol: &LpSolution) -> Result<(), String> {
        if sol.primal.len() != self.num_vars || sol.dual.len() != self.constraints.len() {
            return Err("dimension mismatch".into());
        }
        if sol.primal.iter().any(Signed::is_negative) {
            return Err("negative primal variable".into());
        }
        let mut col_dot = vec![Rational::zero(); self.num_vars];
        let mut dual_value = Rational::zero();
        let max = self.sense == Sense::Maximize;
        for (i, (row, y)) in self.constraints.iter().zip(&sol.dual).enumerate() {
            let lhs: Rational = row.coeffs.iter().map(|(v, c)| c * &sol.primal[*v]).sum();
            let ok = match row.cmp {
                Cmp::Le => lhs <= row.rhs,
                Cmp::Ge => lhs >= row.rhs,
                Cmp::Eq => lhs == row.rhs,
            };
            if !ok {
                return Err(format!("row {i} violated"));
            }
            // shadow-price sign: relaxing a <= row helps a max problem
            let sign_ok = match (row.cmp, max) {
                (Cmp::Eq, _) => true,
                (Cmp::Le, true) | (Cmp::Ge, false) => !y.is_negative(),
                (Cmp::Ge, true) | (Cmp::Le, false) => !y.is_positive(),
            };
            if !sign_ok {
                return Err(format!("dual {i} has the wrong sign"));
            }
            for (v, c) in &row.coeffs {
                col_dot[*v] += c * y;
            }
            dual_value += &row.rhs * y;
        }
        for (j, (dot, c)) in col_dot.iter().zip(&self.objective).enumerate() {
            let ok = if max { dot >= c } else { dot <= c };
            if !ok {
                return Err(format!("reduced cost of variable {j} violated"));
            }
        }
        let primal_value: Rational = self.objective.iter().zip(&sol.primal).map(|(c, x)| c * x).sum();
        if primal_value != sol.value || dual_value != sol.value {
            return Err("objective values differ".into());
        }
        Ok(())
    }
}

impl LpSolution {
    /// Verifies primal feasibility, dual feasibility and strong duality.
    pub fn certify(&self, lp: &LinearProgram) -> Result<(), String> {
        lp.check(self)
    }
}

/// Sparse row: sorted column indices with their non-zero coefficients.
#[derive(Clone, Default)]
struct Row {
    idx: Vec<usize>,
    val: Vec<Rational>,
}

impl Row {
    fn get(&self, j: usize) -> Option<&Rational> {
        self.idx.binary_search(&j).ok().map(|p| &self.val[p])
    }

    /// `self -= f * other`
    fn sub_scaled(&mut self, f: &Rational, other: &Row) {
        let mut idx = Vec::with_capacity(self.idx.len() + other.idx.len());
        let mut val = Vec::with_capacity(idx.capacity());
        let (mut a, mut b) = (0, 0);
        let old_idx = std::mem::take(&mut self.idx);
        let mut old_val = std::mem::take(&mut self.val).into_iter();
        let mut cur = old_val.next();
        while a < old_idx.len() || b < other.idx.len() {
            let ja = old_idx.get(a).copied().unwrap_or(usize::MAX);
            let jb = other.idx.get(b).copied().unwrap_or(usize::MAX);
            if ja < jb {
                idx.push(ja);
                val.push(cur.take().unwrap());
                cur = old_val.next();
                a += 1;
            } else if jb < ja {
                idx.push(jb);
                val.push(-(f * &other.val[b]));
                b += 1;
            } else {
                let v = cur.take().unwrap() - f * &other.val[b];
                cur = old_val.next();
                if !v.is_zero() {
                    idx.push(ja);
                    val.push(v);
                }
                a += 1;
                b += 1;
            }
        }
        self.idx = idx;
        self.val = val;
    }
}

struct Tableau {
    rows: Vec<Row>,
    rhs: Vec<Rational>,
    /// Reduced costs, dense; `obj_value` is the current objective.
    obj: Vec<Rational>,
    obj_value: Rational,
    basis: Vec<usize>,
    /// Column holding the initial identity entry of each row.
    unit_col: Vec<usize>,
    flipped: Vec<bool>,
    num_orig: usize,
    first_artificial: usize,
    ncols: usize,
    sense: Sense,
    cost: Vec<Rational>,
}

impl Tableau {
    fn new(lp: &LinearProgram) -> Self {
        let m = lp.constraints.len();
        let n = lp.num_vars;
        let mut flipped = vec![false; m];
        let mut cmps = Vec::with_capacity(m);
        for (i, c) in lp.constraints.iter().enumerate() {
            // `a·x >= 0` becomes `-a·x <= 0` so its slack can start basic
            let flip = c.rhs.is_negative() || (c.rhs.is_zero() && c.cmp == Cmp::Ge);
            flipped[i] = flip;
            cmps.push(match (c.cmp, flip) {
                (Cmp::Le, false) | (Cmp::Ge, true) => Cmp::Le,
                (Cmp::Ge, false) | (Cmp::Le, true) => Cmp::Ge,
                (Cmp::Eq, _) => Cmp::Eq,
            });
        }
        let num_slack = cmps.iter().filter(|c| **c != Cmp::Eq).count();
        let num_art = cmps.iter().filter(|c| **c != Cmp::Le).count();
        let first_artificial = n + num_slack;
        let ncols = first_artificial + num_art;

        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut unit_col = Vec::with_capacity(m);
        let (mut next_slack, mut next_art) = (n, first_artificial);
        for (i, c) in lp.constraints.iter().enumerate() {
            let mut row = Row::default();
            let neg = flipped[i];
            for (v, a) in &c.coeffs {
                row.idx.push(*v);
                row.val.push(if neg { -a } else { a.clone() });
            }
            rhs.push(if neg { -&c.rhs } else { c.rhs.clone() });
            match cmps[i] {
                Cmp::Le => {
                    row.idx.push(next_slack);
                    row.val.push(Rational::one());
                    basis.push(next_slack);
                    unit_col.push(next_slack);
                    next_slack += 1;
                }
                Cmp::Ge => {
                    row.idx.push(next_slack);
                    row.val.push(-Rational::one());
                    next_slack += 1;
                    row.idx.push(next_art);
                    row.val.push(Rational::one());
                    basis.push(next_art);
                    unit_col.push(next_art);
                    next_art += 1;
                }
                Cmp::Eq => {
                    row.idx.push(next_art);
                    row.val.push(Rational::one());
                    basis.push(next_art);
                    unit_col.push(next_art);
                    next_art += 1;
                }
            }
            rows.push(row);
        }
        let cost = match lp.sense {
            Sense::Maximize => lp.objective.clone(),
            Sense::Minimize => lp.objective.iter().map(|c| -c).collect(),
        };
        Tableau {
            rows,
            rhs,
            obj: vec![Rational::zero(); ncols],
            obj_value: Rational::zero(),
            basis,
            unit_col,
            flipped,
            num_orig: n,
            first_artificial,
            ncols,
            sense: lp.sense,
            cost,
        }
    }

    /// Rebuilds the reduced-cost row for maximizing `c` (indexed by column).
    fn load_objective(&mut self, c: &[Rational]) {
        let mut obj: Vec<Rational> =
            (0..self.ncols).map(|j| if j < c.len() { -&c[j] } else { Rational::zero() }).collect();
        let mut z = Rational::zero();
        for ((row, b), &bv) in self.rows.iter().zip(&self.rhs).zip(&self.basis) {
            if bv < c.len() && !c[bv].is_zero() {
                let cb = &c[bv];
                for (j, a) in row.idx.iter().zip(&row.val) {
                    obj[*j] += cb * a;
                }
                z += cb * b;
            }
        }
        self.obj = obj;
        self.obj_value = z;
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let inv = self.rows[r].get(q).expect("pivot on zero").recip();
        for v in &mut self.rows[r].val {
            *v *= &inv;
        }
        self.rhs[r] *= &inv;
        let prow = std::mem::take(&mut self.rows[r]);
        let prhs = self.rhs[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            if let Some(f) = row.get(q).cloned() {
                row.sub_scaled(&f, &prow);
                self.rhs[i] -= &f * &prhs;
            }
        }
        if !self.obj[q].is_zero() {
            let f = self.obj[q].clone();
            for (j, a) in prow.idx.iter().zip(&prow.val) {
                self.obj[*j] -= &f * a;
            }
            self.obj_value -= &f * &prhs;
        }
        self.rows[r] = prow;
        self.basis[r] = q;
    }

    /// Bland's-rule simplex over columns `< col_limit`.
    fn optimize(&mut self, col_limit: usize) -> Result<(), LpError> {
        loop {
            let Some(q) = (0..col_limit).find(|&j| self.obj[j].is_negative()) else {
                return Ok(());
            };
            let mut best: Option<(usize, Rational)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let Some(a) = row.get(q) else { continue };
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / a;
                let better = match &best {
                    None => true,
                    Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, q),
                None => return Err(LpError::Unbounded),
            }
        }
    }

    fn run(mut self) -> Result<LpSolution, LpError> {
        if self.first_artificial < self.ncols {
            let mut phase1 = vec![Rational::zero(); self.ncols];
            for c in phase1.iter_mut().skip(self.first_artificial) {
                *c = -Rational::one();
            }
            self.load_objective(&phase1);
            self.optimize(self.ncols).expect("phase one is bounded");
            if self.obj_value.is_negative() {
                return Err(LpError::Infeasible);
            }
            // drive zero-level artificials out where possible
            for r in 0..self.rows.len() {
                if self.basis[r] >= self.first_artificial {
                    let q = self.rows[r].idx.first().copied().filter(|&j| j < self.first_artificial);
                    if let Some(q) = q {
                        self.pivot(r, q);
                    }
                }
            }
        }
        let cost = self.cost.clone();
        self.load_objective(&cost);
        self.optimize(self.first_artificial)?;

        let mut primal = vec![Rational::zero(); self.num_orig];
        for (b, &bv) in self.rhs.iter().zip(&self.basis) {
            if bv < self.num_orig {
                primal[bv] = b.clone();
            }
        }
        let minimize = self.sense == Sense::Minimize;
        let dual = self
            .unit_col
            .iter()
            .zip(&self.flipped)
            .map(|(&u, &flip)| {
                let y = self.obj[u].clone();
                let y = if flip { -y } else { y };
                if minimize {
                    -y
                } else {
                    y
                }
            })
            .collect();
        let z = self.obj_value.clone();
        let value = if minimize { -z } else { z };
        Ok(LpSolution { value, primal, dual })
    }
}
