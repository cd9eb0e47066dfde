use crate::error::Result;
use crate::query::Query;
use crate::relation::{hash_join, Database, Relation};

/// Left-deep pairwise hash joins in atom order, reordered to the head.
pub fn bruteforce_join(query: &Query, db: &Database) -> Result<Relation> {
    let atoms = query.bind(db)?;
    let mut acc = atoms[0].clone();
    for r in &atoms[1..] {
        acc = hash_join(&acc, r);
    }
    Ok(acc.reordered(query.var_names())?.with_name(query.name()))
}
