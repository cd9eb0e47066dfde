use crate::counters::Counters;
use crate::error::{Error, Result};
use crate::lp::Rational;
use crate::relation::{hash_join_counted, partition_by_degree, Relation, Threshold};

use super::semijoin_all;

/// Result of [`triangle_heavy_light`].
#[derive(Clone, Debug)]
pub struct HeavyLightOutput {
    pub relation: Relation,
    pub counters: Counters,
    /// `θ = √(|R||S|/|T|)`; `None` when some input is empty.
    pub theta: Option<Threshold>,
    /// `|R^heavy ⋈ S|`
    pub heavy_intermediate: usize,
    /// `|R^light ⋈ T|`
    pub light_intermediate: usize,
}

impl HeavyLightOutput {
    /// `⌈√(|R||S||T|)⌉`, the budget both intermediates stay within.
    pub fn budget(r: usize, s: usize, t: usize) -> u64 {
        let p = (r as u128) * (s as u128) * (t as u128);
        let mut x = (p as f64).sqrt() as u128;
        while x * x > p {
            x -= 1;
        }
        while x * x < p {
            x += 1;
        }
        x as u64
    }
}

/// Attribute names `(A, B, C)` for `R(A,B)`, `S(B,C)`, `T(A,C)` in any
/// column order.
fn triangle_attrs(r: &Relation, s: &Relation, t: &Relation) -> Result<[String; 3]> {
    let shared = |p: &Relation, q: &Relation| -> Vec<String> {
        p.schema().iter().filter(|a| q.column_index(a).is_some()).cloned().collect()
    };
    let bad = || {
        Error::Invalid(format!(
            "expected schemas (A,B), (B,C), (A,C); got {:?}, {:?}, {:?}",
            r.schema(),
            s.schema(),
            t.schema()
        ))
    };
    if r.arity() != 2 || s.arity() != 2 || t.arity() != 2 {
        return Err(bad());
    }
    let (a, b, c) = (shared(r, t), shared(r, s), shared(s, t));
    if a.len() != 1 || b.len() != 1 || c.len() != 1 || a == b || b == c || a == c {
        return Err(bad());
    }
    Ok([a[0].clone(), b[0].clone(), c[0].clone()])
}

/// The triangle join by a heavy/light split of `R` on `A`:
/// `[(R^heavy ⋈ S) ⋉ T] ∪ [(R^light ⋈ T) ⋉ S]` with `θ = √(|R||S|/|T|)`.
pub fn triangle_heavy_light(r: &Relation, s: &Relation, t: &Relation) -> Result<HeavyLightOutput> {
    let [a, b, c] = triangle_attrs(r, s, t)?;
    let schema = vec![a.clone(), b, c];
    let mut counters = Counters::new();
    if r.is_empty() || s.is_empty() || t.is_empty() {
        return Ok(HeavyLightOutput {
            relation: Relation::empty("Q", schema),
            counters,
            theta: None,
            heavy_intermediate: 0,
            light_intermediate: 0,
        });
    }
    let q = Rational::new((r.len() as u64 * s.len() as u64).into(), (t.len() as u64).into());
    let theta = Threshold::sqrt_of(q)?;
    let (heavy, light) = partition_by_degree(r, &[a.as_str()], &theta)?;
    counters.probes += r.len() as u64;

    let hs = hash_join_counted(&heavy, s, &mut counters);
    let lt = hash_join_counted(&light, t, &mut counters);
    let (heavy_intermediate, light_intermediate) = (hs.len(), lt.len());
    let hs = semijoin_all(hs, std::slice::from_ref(t), &mut counters)?;
    let lt = semijoin_all(lt, std::slice::from_ref(s), &mut counters)?;

    let mut data = Vec::with_capacity(3 * (hs.len() + lt.len()));
    for part in [hs.reordered(&schema)?, lt.reordered(&schema)?] {
        for row in part.rows() {
            data.extend_from_slice(row);
        }
    }
    let relation = Relation::from_flat("Q", schema, data)?;
    counters.emitted += relation.len() as u64;
    Ok(HeavyLightOutput { relation, counters, theta: Some(theta), heavy_intermediate, light_intermediate })
}
