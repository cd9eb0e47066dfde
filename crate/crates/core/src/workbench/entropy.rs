use std::collections::BTreeMap;

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::relation::{Relation, Value};
use crate::varset::VarSet;

const SUM_TOLERANCE: f64 = 1e-12;

/// Probability table over tuples of `n` variables. Outcomes with zero
/// probability may be listed; they do not count towards the support.
#[derive(Clone, Debug)]
pub struct JointDistribution {
    n: usize,
    outcomes: Vec<(Vec<Value>, f64)>,
}

impl JointDistribution {
    pub fn new(n: usize, outcomes: Vec<(Vec<Value>, f64)>) -> Result<Self> {
        if let Some((t, _)) = outcomes.iter().find(|(t, _)| t.len() != n) {
            return Err(Error::InvalidDistribution(format!("outcome {t:?} does not have {n} values")));
        }
        if let Some((_, p)) = outcomes.iter().find(|(_, p)| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidDistribution(format!("probability {p} is negative or not finite")));
        }
        let total: f64 = outcomes.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {total}")));
        }
        Ok(JointDistribution { n, outcomes })
    }

    /// Uniform over the tuples of `rel`, variables in schema order.
    pub fn uniform_over(rel: &Relation) -> Result<Self> {
        if rel.is_empty() {
            return Err(Error::InvalidDistribution("relation is empty".into()));
        }
        let p = 1.0 / rel.len() as f64;
        Self::new(rel.arity(), rel.rows().map(|r| (r.to_vec(), p)).collect())
    }

    /// Random distribution over `{0,1}^n` with i.i.d. uniform weights,
    /// normalised; every third outcome (by draw) is zeroed to vary the
    /// support.
    pub fn random_binary(n: usize, seed: u64) -> Self {
        let mut rng = SplitMix64::seed_from_u64(seed);
        let mut weights: Vec<f64> = (0..1usize << n)
            .map(|_| {
                let w = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
                if rng.next_u64() % 3 == 0 { 0.0 } else { w }
            })
            .collect();
        if weights.iter().all(|&w| w == 0.0) {
            weights[0] = 1.0;
        }
        let total: f64 = weights.iter().sum();
        let outcomes = weights
            .into_iter()
            .enumerate()
            .map(|(k, w)| ((0..n).map(|i| ((k >> i) & 1) as Value).collect(), w / total))
            .collect();
        JointDistribution { n, outcomes }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Marginal on `s`, keyed by the projected tuple (variables ascending).
    pub fn marginal(&self, s: VarSet) -> BTreeMap<Vec<Value>, f64> {
        let mut out: BTreeMap<Vec<Value>, f64> = BTreeMap::new();
        for (t, p) in &self.outcomes {
            if *p > 0.0 {
                *out.entry(s.iter().map(|i| t[i]).collect()).or_default() += p;
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Entropy {
    pub bits: f64,
    /// `log2` of the marginal's support size.
    pub log2_support: f64,
}

/// `H[A_S] = Σ P log2 1/P` over the marginal on `s`.
pub fn empirical_entropy(joint: &JointDistribution, s: VarSet) -> Result<Entropy> {
    if s.iter().any(|i| i >= joint.n) {
        return Err(Error::InvalidDistribution(format!("subset {s:?} exceeds {} variables", joint.n)));
    }
    let m = joint.marginal(s);
    let bits = m.values().map(|&p| -p * p.log2()).sum::<f64>().max(0.0);
    Ok(Entropy { bits, log2_support: (m.len() as f64).log2() })
}

/// Entropies of every subset, indexed by subset bits.
pub fn entropy_vector(joint: &JointDistribution) -> Vec<f64> {
    VarSet::all(joint.n).map(|s| empirical_entropy(joint, s).map(|e| e.bits).unwrap_or(0.0)).collect()
}
