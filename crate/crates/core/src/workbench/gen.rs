use std::collections::{BTreeMap, HashSet};

use num::ToPrimitive;
use rand_core::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::bounds::modular_bound;
use crate::error::{Error, Result};
use crate::par;
use crate::query::{ConstraintSet, DegreeConstraint, Query};
use crate::relation::{schema_of, Database, Relation, Value};

/// `R(A,B)`, `S(B,C)`, `T(A,C)`, each the full grid `[m] × [m]`.
pub fn gen_grid_triangle(m: u64) -> Result<Database> {
    if m == 0 {
        return Err(Error::Unachievable("grid side must be at least 1".into()));
    }
    let grid = |name: &str, a: &str, b: &str| {
        let data: Vec<Value> = (0..m).flat_map(|x| (0..m).flat_map(move |y| [x, y])).collect();
        Relation::from_flat(name, schema_of(&[a, b]), data)
    };
    Ok([grid("R", "A", "B")?, grid("S", "B", "C")?, grid("T", "A", "C")?].into_iter().collect())
}

/// One relation per distinct name, named columns after its first atom.
/// Repeated names must agree with `same` on their payload.
fn per_relation<T: Clone>(query: &Query, payload: impl Fn(usize) -> T, same: impl Fn(&T, &T) -> bool) -> Result<Vec<(usize, T)>> {
    let mut first: BTreeMap<&str, (usize, T)> = BTreeMap::new();
    let mut order = Vec::new();
    for (i, a) in query.atoms().iter().enumerate() {
        let p = payload(i);
        match first.get(a.relation.as_str()) {
            Some((_, q)) if !same(q, &p) => {
                return Err(Error::Unachievable(format!("atoms over `{}` need different instances", a.relation)));
            }
            Some(_) => {}
            None => {
                first.insert(&a.relation, (i, p.clone()));
                order.push((i, p));
            }
        }
    }
    Ok(order)
}

/// Cross product of `[d_0] × ... × [d_k]`.
fn product(name: &str, schema: Vec<String>, dims: &[u64]) -> Result<Relation> {
    let total: u64 = dims.iter().product();
    let mut data = Vec::with_capacity(total as usize * dims.len());
    let mut row = vec![0; dims.len()];
    for _ in 0..total {
        data.extend_from_slice(&row);
        for k in (0..dims.len()).rev() {
            row[k] += 1;
            if row[k] < dims[k] {
                break;
            }
            row[k] = 0;
        }
    }
    Relation::from_flat(name, schema, data)
}

/// Product instance at the optimum of the vertex-packing LP
/// `max Σ v_i, Σ_{i ∈ F} v_i <= log2 N`. Variable `i` ranges over
/// `[2^⌊v_i⌋]` and every atom is the full product of its domains, so
/// `|R_F| <= N` and `|Q| >= N^ρ* / 2^n`.
pub fn gen_agm_tight(query: &Query, n: u64) -> Result<Database> {
    if !n.is_power_of_two() {
        return Err(Error::Unachievable(format!("N = {n} is not a power of two")));
    }
    let hg = query.hypergraph();
    let covered = hg.edges().iter().fold(crate::VarSet::EMPTY, |a, &e| a | e);
    if let Some(v) = (0..query.n()).find(|&v| !covered.contains(v)) {
        return Err(Error::Unachievable(format!("variable {} is not covered by any atom", query.var_names()[v])));
    }
    let mut dc = ConstraintSet::for_query(query);
    for a in query.atoms() {
        dc.push(DegreeConstraint::cardinality(a.var_set(), n, Some(&a.relation))?);
    }
    let lp = modular_bound(&dc)?;
    let bits: Vec<u32> = lp.v.iter().map(|v| v.floor().to_integer().to_u32().unwrap_or(0)).collect();
    let dims = |i: usize| -> Vec<u64> { query.atoms()[i].vars.iter().map(|&v| 1u64 << bits[v]).collect() };
    let rels = per_relation(query, dims, |a, b| a == b)?;
    rels.into_iter().map(|(i, d)| product(&query.atoms()[i].relation, query.atom_schema(i), &d)).collect()
}

/// `max(16, ⌈2 · size^(1/arity)⌉)`, computed as the least `d` with
/// `d^arity >= 2^arity · size`.
pub fn default_domain(size: u64, arity: usize) -> u64 {
    if arity == 0 {
        return 16;
    }
    let target = (size as u128) << arity;
    let fits = |d: u64| (d as u128).checked_pow(arity as u32).is_none_or(|p| p >= target);
    let mut d = (2.0 * (size as f64).powf(1.0 / arity as f64)).ceil() as u64;
    while d > 0 && fits(d - 1) {
        d -= 1;
    }
    while !fits(d) {
        d += 1;
    }
    d.max(16)
}

/// Uniform draw from `[0, bound)` by rejection, so the stream is the same
/// on every platform.
pub fn uniform_below(rng: &mut SplitMix64, bound: u128) -> u128 {
    assert!(bound > 0);
    if bound <= 1 << 64 {
        let b = bound as u64;
        if b == 0 || b.is_power_of_two() {
            return (rng.next_u64() & b.wrapping_sub(1)) as u128;
        }
        let zone = u64::MAX - (u64::MAX % b) - 1;
        loop {
            let x = rng.next_u64();
            if x <= zone {
                return (x % b) as u128;
            }
        }
    }
    let zone = u128::MAX - (u128::MAX % bound) - 1;
    loop {
        let x = ((rng.next_u64() as u128) << 64) | rng.next_u64() as u128;
        if x <= zone {
            return x % bound;
        }
    }
}

/// `k` distinct values of `[0, total)`, by Floyd's algorithm, in draw order.
fn floyd(rng: &mut SplitMix64, total: u128, k: u64) -> Vec<u128> {
    let mut seen = HashSet::with_capacity(k as usize);
    let mut out = Vec::with_capacity(k as usize);
    for j in total - k as u128..total {
        let t = uniform_below(rng, j + 1);
        let pick = if seen.contains(&t) { j } else { t };
        seen.insert(pick);
        out.push(pick);
    }
    out
}

/// Uniform random relation of exactly `size` distinct tuples over
/// `[domain]^arity`.
pub fn random_relation(name: &str, schema: Vec<String>, size: u64, domain: u64, seed: u64) -> Result<Relation> {
    let arity = schema.len();
    let total = (domain as u128).checked_pow(arity as u32).unwrap_or(u128::MAX);
    if size as u128 > total {
        return Err(Error::Unachievable(format!(
            "{name}: {size} tuples requested but [{domain}]^{arity} has only {total}"
        )));
    }
    if arity == 0 {
        return Ok(if size == 0 { Relation::empty(name, schema) } else { Relation::unit(name) });
    }
    let mut rng = SplitMix64::seed_from_u64(seed);
    let mut data = Vec::with_capacity(size as usize * arity);
    for mut code in floyd(&mut rng, total, size) {
        let start = data.len();
        for _ in 0..arity {
            data.push((code % domain as u128) as Value);
            code /= domain as u128;
        }
        data[start..].reverse();
    }
    Relation::from_flat(name, schema, data)
}

/// Random instance with `sizes[i]` tuples for atom `i`. Every relation
/// draws from its own SplitMix64 stream, seeded by the `k`-th output of a
/// stream seeded with `seed` (`k` = position among distinct relations).
/// `domain` overrides [`default_domain`].
pub fn gen_random(query: &Query, sizes: &[u64], seed: u64, domain: Option<u64>) -> Result<Database> {
    if sizes.len() != query.atoms().len() {
        return Err(Error::Invalid(format!("{} sizes for {} atoms", sizes.len(), query.atoms().len())));
    }
    if domain == Some(0) {
        return Err(Error::Unachievable("domain must be non-empty".into()));
    }
    let rels = per_relation(query, |i| sizes[i], |a, b| a == b)?;
    let mut master = SplitMix64::seed_from_u64(seed);
    let jobs: Vec<(usize, u64, u64)> = rels.into_iter().map(|(i, size)| (i, size, master.next_u64())).collect();
    let built = par::map(&jobs, |&(i, size, sub)| {
        let schema = query.atom_schema(i);
        let d = domain.unwrap_or_else(|| default_domain(size, schema.len()));
        random_relation(&query.atoms()[i].relation, schema, size, d, sub)
    });
    built.into_iter().collect()
}
