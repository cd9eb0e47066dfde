use std::collections::HashMap;

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use num::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::bruteforce_join;
use crate::lp::Rational;
use crate::par;
use crate::query::Query;
use crate::relation::{Database, Value};

const PRECISION: usize = 128;
const RM: RoundingMode = RoundingMode::ToEven;
/// Declared slack on the log-domain comparison.
pub const FRIEDGUT_SLACK_LOG2: i64 = -60;

/// One weight map per atom, keyed by the atom's tuple in argument order.
/// Tuples without an entry weigh zero.
#[derive(Clone, Debug, Default)]
pub struct WeightFunction {
    pub per_atom: Vec<HashMap<Vec<Value>, Rational>>,
}

impl WeightFunction {
    /// Weight one on every tuple of every atom relation.
    pub fn ones(query: &Query, db: &Database) -> Result<Self> {
        let per_atom = query
            .bind(db)?
            .iter()
            .map(|r| r.rows().map(|t| (t.to_vec(), Rational::from_integer(1.into()))).collect())
            .collect();
        Ok(WeightFunction { per_atom })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FriedgutCheck {
    /// Both sides rounded to f64 for reporting; the decision uses 128 bits.
    pub lhs: f64,
    pub rhs: f64,
    pub output_size: usize,
    pub holds: bool,
}

/// Evaluates both sides of `Σ_{a∈Q} Π_F w_F(a_F)^{δ_F} <= Π_F (Σ_t w_F(t))^{δ_F}`
/// in the log domain. `0^0` is taken as `0`.
pub fn check_friedgut(query: &Query, db: &Database, weights: &WeightFunction, cover: &[Rational]) -> Result<FriedgutCheck> {
    let atoms = query.atoms();
    if weights.per_atom.len() != atoms.len() || cover.len() != atoms.len() {
        return Err(Error::Invalid("need one weight function and one cover weight per atom".into()));
    }
    if weights.per_atom.iter().flat_map(|m| m.values()).any(Signed::is_negative) {
        return Err(Error::NegativeWeight);
    }
    if cover.iter().any(Signed::is_negative) {
        return Err(Error::Invalid("cover weights must be non-negative".into()));
    }
    for v in 0..query.n() {
        let s: Rational = atoms.iter().zip(cover).filter(|(a, _)| a.vars.contains(&v)).map(|(_, d)| d.clone()).sum();
        if s < Rational::from_integer(1.into()) {
            return Err(Error::Invalid(format!("cover leaves {} under-covered", query.var_names()[v])));
        }
    }
    let bound = query.bind(db)?;
    let output = bruteforce_join(query, db)?;

    // per-atom sums restricted to tuples of R_F
    let sums: Vec<Rational> = bound
        .iter()
        .zip(&weights.per_atom)
        .map(|(rel, w)| rel.rows().filter_map(|t| w.get(t)).sum())
        .collect();

    let mut cc = Consts::new().expect("constant cache");
    let exps: Vec<BigFloat> = cover.iter().map(|d| to_big(d, &mut cc)).collect();

    // ln rhs, or None when some factor is zero
    let mut ln_rhs = Some(BigFloat::from_u64(0, PRECISION));
    for (s, e) in sums.iter().zip(&exps) {
        if s.is_zero() {
            ln_rhs = None;
            break;
        }
        if !e.is_zero() {
            let term = to_big(s, &mut cc).ln(PRECISION, RM, &mut cc).mul(e, PRECISION, RM);
            ln_rhs = ln_rhs.map(|acc| acc.add(&term, PRECISION, RM));
        }
    }

    // each output tuple contributes exp(Σ δ_F ln w_F(a_F))
    let rows: Vec<Vec<Value>> = output.to_vecs();
    let chunks: Vec<&[Vec<Value>]> = rows.chunks(512).collect();
    let partial = par::map(&chunks, |chunk| {
        let mut cc = Consts::new().expect("constant cache");
        let mut acc = BigFloat::from_u64(0, PRECISION);
        let mut key = Vec::new();
        'tuple: for row in chunk.iter() {
            let mut ln = BigFloat::from_u64(0, PRECISION);
            for ((atom, w), e) in atoms.iter().zip(&weights.per_atom).zip(&exps) {
                key.clear();
                key.extend(atom.vars.iter().map(|&v| row[v]));
                let wt = match w.get(&key) {
                    Some(wt) if !wt.is_zero() => wt,
                    _ => continue 'tuple,
                };
                if !e.is_zero() {
                    let t = to_big(wt, &mut cc).ln(PRECISION, RM, &mut cc).mul(e, PRECISION, RM);
                    ln = ln.add(&t, PRECISION, RM);
                }
            }
            acc = acc.add(&ln.exp(PRECISION, RM, &mut cc), PRECISION, RM);
        }
        acc
    });
    let lhs = partial.iter().fold(BigFloat::from_u64(0, PRECISION), |a, b| a.add(b, PRECISION, RM));

    let holds = if lhs.is_zero() {
        true
    } else {
        match &ln_rhs {
            None => false,
            Some(lr) => {
                let ln_lhs = lhs.ln(PRECISION, RM, &mut cc);
                let slack = BigFloat::from_f64(2f64.powi(FRIEDGUT_SLACK_LOG2 as i32), PRECISION);
                ln_lhs.cmp(&lr.add(&slack, PRECISION, RM)).is_some_and(|c| c <= 0)
            }
        }
    };
    let rhs = match &ln_rhs {
        None => BigFloat::from_u64(0, PRECISION),
        Some(lr) => lr.exp(PRECISION, RM, &mut cc),
    };
    Ok(FriedgutCheck { lhs: to_f64(&lhs, &mut cc), rhs: to_f64(&rhs, &mut cc), output_size: rows.len(), holds })
}

fn to_big(r: &Rational, cc: &mut Consts) -> BigFloat {
    let p = BigFloat::parse(&r.numer().to_string(), Radix::Dec, PRECISION, RM, cc);
    let q = BigFloat::parse(&r.denom().to_string(), Radix::Dec, PRECISION, RM, cc);
    p.div(&q, PRECISION, RM)
}

fn to_f64(x: &BigFloat, cc: &mut Consts) -> f64 {
    x.format(Radix::Dec, RM, cc).ok().and_then(|s| s.parse().ok()).unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{int, ratio};
    use crate::relation::{schema_of, Relation};

    fn grid(name: &str, m: u64) -> Relation {
        let rows = (0..m).flat_map(|a| (0..m).map(move |b| vec![a, b]));
        Relation::from_rows(name, schema_of(&["x", "y"]), rows).unwrap()
    }

    fn triangle() -> Query {
        Query::parse("Q(A,B,C) :- R(A,B), S(B,C), T(A,C).").unwrap()
    }

    #[test]
    fn unit_weights_give_agm() {
        let q = triangle();
        let db: Database = [grid("R", 4), grid("S", 4), grid("T", 4)].into_iter().collect();
        let w = WeightFunction::ones(&q, &db).unwrap();
        let c = check_friedgut(&q, &db, &w, &[ratio(1, 2), ratio(1, 2), ratio(1, 2)]).unwrap();
        assert!(c.holds);
        assert_eq!(c.output_size, 64);
        assert!((c.lhs - 64.0).abs() < 1e-9, "{}", c.lhs);
        assert!((c.rhs - 64.0).abs() < 1e-9, "{}", c.rhs);
    }

    #[test]
    fn empty_output() {
        let q = triangle();
        let t = Relation::empty("T", schema_of(&["x", "y"]));
        let db: Database = [grid("R", 3), grid("S", 3), t].into_iter().collect();
        let w = WeightFunction::ones(&q, &db).unwrap();
        let c = check_friedgut(&q, &db, &w, &[int(1), int(1), int(0)]).unwrap();
        assert!(c.holds);
        assert_eq!(c.lhs, 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let q = triangle();
        let db: Database = [grid("R", 2), grid("S", 2), grid("T", 2)].into_iter().collect();
        let mut w = WeightFunction::ones(&q, &db).unwrap();
        assert!(check_friedgut(&q, &db, &w, &[int(1), int(0), int(0)]).is_err());
        w.per_atom[0].insert(vec![0, 0], int(-1));
        assert!(matches!(check_friedgut(&q, &db, &w, &[int(1), int(1), int(1)]), Err(Error::NegativeWeight)));
    }
}
