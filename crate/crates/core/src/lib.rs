//! Worst-case optimal join evaluation and output-size bounds for full
//! conjunctive queries under degree constraints.
//!
//! The crate is organised bottom-up:
//!
//! - [`relation`]: immutable sorted relations, prefix views, galloping
//!   intersection, semijoin/join and degree statistics.
//! - [`query`]: query hypergraphs, degree constraints, constraint dependency
//!   graphs and acyclicization.
//! - [`lp`]: an exact rational simplex solver.
//! - [`bounds`]: AGM, modular and polymatroid bounds, Shannon-flow dual
//!   certificates and the Friedgut / polymatroid checkers.
//! - [`proof`]: proof sequences over conditional polymatroid terms.
//! - [`exec`]: backtracking search, heavy/light triangle join, the
//!   proof-sequence interpreter and a brute-force oracle.
//! - [`workbench`]: instance generators, empirical entropy and batch sweeps.

pub mod bounds;
pub mod counters;
pub mod error;
pub mod exec;
pub mod lp;
pub mod par;
pub mod proof;
pub mod query;
pub mod relation;
pub mod varset;
pub mod workbench;

pub use counters::Counters;
pub use error::{Error, Result};
pub use lp::Rational;
pub use varset::VarSet;
