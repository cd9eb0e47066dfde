//! Reference queries, constraint sets and proof sequences shared by the
//! tests, benches and the command-line tool.

use crate::bounds::PairWeight;
use crate::error::Result;
use crate::exec::{balance_theta, AnnotatedStep};
use crate::lp::ratio;
use crate::proof::ProofSequence;
use crate::query::{ConstraintSet, Query};

pub const TRIANGLE_QUERY: &str = "Q(A,B,C) :- R(A,B), S(B,C), T(A,C).";

/// Partition `R` on `A`, join heavy `R` with `S`, light `R` with `T`.
pub const TRIANGLE_SEQUENCE: &str = "\
dec Y={A,B} X={A} w=1/2
sub I={A,B} J={A,C} w=1/2
comp Y={A,B,C} X={A,C} w=1/2
sub I={A} J={B,C} w=1/2
comp Y={A,B,C} X={B,C} w=1/2
";

pub const FOUR_CYCLE_QUERY: &str = "Q(A,B,C,D) :- R(A,B), S(B,C), T(C,D), U(D,A).";

pub const FIVE_ATOM_QUERY: &str = "Q(A,B,C,D) :- R(A,B), S(B,C), T(C,D), W(A,C,D), V(A,B,D).";

/// Partition `S` on `B`; the heavy side joins through `T` and `V`, the
/// light side through `R` and `W`.
pub const FIVE_ATOM_SEQUENCE: &str = "\
dec Y={B,C} X={B} w=1/2
sub I={C,D} J={B} w=1/2
comp Y={B,C,D} X={B} w=1/2
sub I={A,B,D} J={B,C,D} w=1/2
comp Y={A,B,C,D} X={B,C,D} w=1/2
sub I={B,C} J={A,B} w=1/2
comp Y={A,B,C} X={A,B} w=1/2
sub I={A,C,D} J={A,B,C} w=1/2
comp Y={A,B,C,D} X={A,B,C} w=1/2
";

/// `R(A)`, `S(A,B)`, `T(B,C)`, `W(C,A,D)`: its natural constraints form
/// the cycle `A → B → C → A`.
pub const CYCLIC_QUERY: &str = "Q(A,B,C,D) :- R(A), S(A,B), T(B,C), W(C,A,D).";

pub fn triangle_query() -> Query {
    Query::parse(TRIANGLE_QUERY).expect("fixture parses")
}

pub fn five_atom_query() -> Query {
    Query::parse(FIVE_ATOM_QUERY).expect("fixture parses")
}

pub fn cyclic_query() -> Query {
    Query::parse(CYCLIC_QUERY).expect("fixture parses")
}

pub fn triangle_constraints(r: u64, s: u64, t: u64) -> ConstraintSet {
    ConstraintSet::parse(&format!("card R {r}\ncard S {s}\ncard T {t}"), &triangle_query()).expect("fixture parses")
}

/// `N_AB, N_BC, N_CD, N_ACD|AC, N_ABD|BD` in that order.
pub fn five_atom_constraints(stats: [u64; 5]) -> ConstraintSet {
    let [ab, bc, cd, acd, abd] = stats;
    let text = format!("card R {ab}\ncard S {bc}\ncard T {cd}\ndeg W A,C -> A,C,D {acd}\ndeg V B,D -> A,B,D {abd}");
    ConstraintSet::parse(&text, &five_atom_query()).expect("fixture parses")
}

/// `{A|∅, AB|A, BC|B, ACD|C}` with every statistic `n`.
pub fn cyclic_constraints(n: u64) -> ConstraintSet {
    let text = format!("card R {n}\ndeg S A -> A,B {n}\ndeg T B -> B,C {n}\ndeg W C -> A,C,D {n}");
    ConstraintSet::parse(&text, &cyclic_query()).expect("fixture parses")
}

/// Weight ½ on every constraint term.
pub fn half_delta(dc: &ConstraintSet) -> Vec<PairWeight> {
    dc.iter().map(|c| PairWeight { x: c.x, y: c.y, weight: ratio(1, 2) }).collect()
}

pub fn triangle_sequence() -> ProofSequence {
    ProofSequence::parse(TRIANGLE_SEQUENCE, triangle_query().var_names()).expect("fixture parses")
}

pub fn five_atom_sequence() -> ProofSequence {
    ProofSequence::parse(FIVE_ATOM_SEQUENCE, five_atom_query().var_names()).expect("fixture parses")
}

/// Triangle sequence with `θ = √(|R||S|/|T|)`.
pub fn triangle_steps(r: u64, s: u64, t: u64) -> Result<Vec<AnnotatedStep>> {
    AnnotatedStep::annotate(&triangle_sequence(), &[balance_theta(r, &[s], &[t])?])
}

/// The five-atom sequence with `θ = √(N_BC N_CD N_ABD|BD / (N_AB N_ACD|AC))`.
pub fn five_atom_steps(stats: [u64; 5]) -> Result<Vec<AnnotatedStep>> {
    let [ab, bc, cd, acd, abd] = stats;
    AnnotatedStep::annotate(&five_atom_sequence(), &[balance_theta(bc, &[cd, abd], &[ab, acd])?])
}
