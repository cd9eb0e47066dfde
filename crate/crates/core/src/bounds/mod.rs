//! Output-size bounds as exact linear programs, and the inequality checkers
//! used to test them.
//!
//! All bounds are reported in log2 scale as exact rationals.

mod agm;
mod dual;
mod friedgut;
mod polymatroid;

use std::fmt;

use num::{ToPrimitive, Zero};
use serde::Serialize;

pub use self::agm::{agm_bound, agm_bound_for_query, cardinalities, modular_bound, AgmBound, ModularBound};
pub use self::dual::{
    check_shannon_flow, shannon_flow_completion, shannon_flow_dual, shannon_flow_primal_check, DualCertificate,
    PairWeight, XiWeight,
};
pub use self::friedgut::{check_friedgut, FriedgutCheck, WeightFunction, FRIEDGUT_SLACK_LOG2};
pub use self::polymatroid::{polymatroid_bound, polymatroid_bound_by, PolymatroidBound, PolymatroidMethod};

use crate::error::{Error, Result};
use crate::lp::Rational;
use crate::varset::VarSet;

/// Denominator of the upper approximation used when `N` is not a power of two.
pub const LOG_DENOMINATOR_BITS: u32 = 32;

/// `log2 N` as an exact rational: exact for powers of two, otherwise the
/// smallest multiple of `2^-32` strictly above it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogStatistic {
    raw: u64,
    log2: Rational,
}

impl LogStatistic {
    pub fn new(raw: u64) -> Result<Self> {
        if raw == 0 {
            return Err(Error::Invalid("statistics must be positive".into()));
        }
        let log2 = if raw.is_power_of_two() {
            Rational::from_integer(raw.trailing_zeros().into())
        } else {
            // f64 error on log2 (< 64) scaled by 2^32 stays far below one unit
            let scaled = ((raw as f64).log2() * f64::from(1u32 << 31) * 2.0).floor() as u64 + 1;
            Rational::new(scaled.into(), (1u64 << LOG_DENOMINATOR_BITS).into())
        };
        Ok(LogStatistic { raw, log2 })
    }

    pub fn raw(&self) -> u64 {
        self.raw
    }

    pub fn log2(&self) -> &Rational {
        &self.log2
    }

    pub fn is_exact(&self) -> bool {
        self.raw.is_power_of_two()
    }
}

/// `2^x` as a real with 12 significant digits.
pub fn pow2_display(x: &Rational) -> String {
    let v = x.to_f64().map(f64::exp2).unwrap_or(f64::INFINITY);
    format!("{v:.11e}")
}

/// A value for every subset of `{0..n-1}`, indexed by bitmask.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SetFunctionVector {
    n: usize,
    #[serde(serialize_with = "crate::lp::text::vec::serialize")]
    values: Vec<Rational>,
}

impl SetFunctionVector {
    pub fn zeros(n: usize) -> Self {
        SetFunctionVector { n, values: vec![Rational::zero(); 1 << n] }
    }

    pub fn from_fn(n: usize, f: impl Fn(VarSet) -> Rational) -> Self {
        SetFunctionVector { n, values: VarSet::all(n).map(f).collect() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, s: VarSet) -> &Rational {
        &self.values[s.bits() as usize]
    }

    pub fn set(&mut self, s: VarSet, v: Rational) {
        self.values[s.bits() as usize] = v;
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }
}

/// First failing polymatroid axiom, in the order they are checked.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    EmptyNonzero,
    /// `h([n] − {i}) > h([n])`
    Monotonicity { i: usize },
    /// `h(S+i) + h(S+j) < h(S+i+j) + h(S)`
    Submodularity { s: VarSet, i: usize, j: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyNonzero => write!(f, "h(∅) ≠ 0"),
            Violation::Monotonicity { i } => write!(f, "monotonicity fails when dropping variable {i}"),
            Violation::Submodularity { s, i, j } => write!(f, "submodularity fails at S={s:?}, i={i}, j={j}"),
        }
    }
}

/// Walks the elemental inequalities of Γ_n. `le(a, b)` decides `a <= b`
/// for sums of values.
fn first_violation<T, F>(n: usize, get: impl Fn(VarSet) -> T, le: F) -> Option<Violation>
where
    T: Clone + std::ops::Add<Output = T>,
    F: Fn(&T, &T) -> bool,
{
    let full = VarSet::full(n);
    for i in 0..n {
        if !le(&get(full.without(i)), &get(full)) {
            return Some(Violation::Monotonicity { i });
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let rest = full.without(i).without(j);
            for s in rest.subsets() {
                let lhs = get(s.with(i).with(j)) + get(s);
                let rhs = get(s.with(i)) + get(s.with(j));
                if !le(&lhs, &rhs) {
                    return Some(Violation::Submodularity { s, i, j });
                }
            }
        }
    }
    None
}

/// Exact check of `h ∈ Γ_n` through the elemental inequalities.
pub fn check_polymatroid(h: &SetFunctionVector) -> std::result::Result<(), Violation> {
    if !h.get(VarSet::EMPTY).is_zero() {
        return Err(Violation::EmptyNonzero);
    }
    match first_violation(h.n, |s| h.get(s).clone(), |a, b| a <= b) {
        Some(v) => Err(v),
        None => Ok(()),
    }
}

/// Floating-point variant for measured entropies: each inequality may be
/// off by at most `tol`.
pub fn check_polymatroid_approx(values: &[f64], n: usize, tol: f64) -> std::result::Result<(), Violation> {
    assert_eq!(values.len(), 1 << n);
    if values[0].abs() > tol {
        return Err(Violation::EmptyNonzero);
    }
    match first_violation(n, |s| values[s.bits() as usize], |a, b| *a <= *b + tol) {
        Some(v) => Err(v),
        None => Ok(()),
    }
}
