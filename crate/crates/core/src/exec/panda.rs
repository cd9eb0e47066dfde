use std::collections::BTreeMap;
use std::rc::Rc;

use num::{Signed, Zero};
use serde::Serialize;

use super::{bruteforce_join, guard_atom_for, semijoin_all};
use crate::bounds::PairWeight;
use crate::counters::Counters;
use crate::error::{Error, Result};
use crate::lp::Rational;
use crate::proof::{CondTerm, ProofSequence, ProofStep, Rule};
use crate::query::{ConstraintSet, Query};
use crate::relation::{hash_join_counted, partition_by_degree, project, Database, Relation, Threshold};
use crate::varset::VarSet;

/// A proof step plus the degree threshold used when it is a decomposition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnotatedStep {
    pub step: ProofStep,
    pub theta: Option<Threshold>,
}

impl AnnotatedStep {
    /// Pairs the decomposition steps of `seq`, in order, with `thetas`.
    pub fn annotate(seq: &ProofSequence, thetas: &[Threshold]) -> Result<Vec<AnnotatedStep>> {
        let mut it = thetas.iter();
        let out = seq
            .steps
            .iter()
            .map(|s| AnnotatedStep {
                step: s.clone(),
                theta: matches!(s.rule, Rule::Decomposition { .. }).then(|| it.next().cloned()).flatten(),
            })
            .collect();
        if it.next().is_some() {
            return Err(Error::Invalid("more thresholds than decomposition steps".into()));
        }
        Ok(out)
    }
}

/// `θ = √(N · Π heavy / Π light)`, which equalises the heavy branch cost
/// `(N/θ) · Π heavy` with the light branch cost `θ · Π light`.
pub fn balance_theta(n: u64, heavy: &[u64], light: &[u64]) -> Result<Threshold> {
    let prod = |xs: &[u64]| xs.iter().fold(Rational::from_integer(1.into()), |a, &x| a * Rational::from_integer(x.into()));
    let den = prod(light);
    if den.is_zero() {
        return Err(Error::InvalidThreshold);
    }
    Threshold::sqrt_of(Rational::from_integer(n.into()) * prod(heavy) / den)
}

/// `θ = √N_Y` for each decomposition `h(Y) → h(Y|X) + h(X)`, with `N_Y`
/// the smallest cardinality statistic over a superset of `Y`. Falls back to
/// `θ = 1` when no cardinality constraint covers `Y`.
pub fn default_thetas(seq: &ProofSequence, dc: &ConstraintSet) -> Result<Vec<Threshold>> {
    seq.steps
        .iter()
        .filter_map(|s| match s.rule {
            Rule::Decomposition { y, .. } => Some(y),
            _ => None,
        })
        .map(|y| {
            let n = dc.iter().filter(|c| c.x.is_empty() && y.is_subset(c.y)).map(|c| c.n).min().unwrap_or(1);
            Threshold::sqrt_of(Rational::from_integer(n.into()))
        })
        .collect()
}

/// One line of the interpretation trace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceLine {
    pub step: usize,
    /// `H`/`L` choices taken so far.
    pub branch: String,
    pub action: String,
}

#[derive(Clone, Debug)]
pub struct PandaOutput {
    pub relation: Relation,
    pub counters: Counters,
    /// Branches that reached the end, pruned empty ones excluded.
    pub branches: usize,
    /// Branches that ended without a materialised `h([n])` and were answered
    /// by the brute-force join restricted to their partition pieces.
    pub fallbacks: usize,
    /// Size of every join performed, before filtering.
    pub join_sizes: Vec<usize>,
    pub trace: Vec<TraceLine>,
}

impl PandaOutput {
    pub fn max_intermediate(&self) -> usize {
        self.join_sizes.iter().copied().max().unwrap_or(0)
    }
}

/// Weight on a term together with the relation carrying it. `rel` is
/// `None` when the term lost its size budget in this branch (the unbudgeted
/// side of a partition, and anything derived from it); such terms are not
/// materialised.
#[derive(Clone, Debug)]
struct Entry {
    weight: Rational,
    rel: Option<Rc<Relation>>,
}

#[derive(Clone, Debug)]
struct Branch {
    label: String,
    terms: BTreeMap<CondTerm, Vec<Entry>>,
    pieces: Vec<Rc<Relation>>,
}

impl Branch {
    fn push(&mut self, t: CondTerm, weight: Rational, rel: Option<Rc<Relation>>) {
        let list = self.terms.entry(t).or_default();
        list.push(Entry { weight, rel });
        // materialised entries are consumed first
        list.sort_by_key(|e| e.rel.is_none());
    }

    /// Consumes `w` from `t`. The relation is returned only if every unit of
    /// consumed weight was materialised.
    fn take(&mut self, t: &CondTerm, w: &Rational) -> Option<Rc<Relation>> {
        let list = self.terms.get_mut(t).expect("validated sequence");
        let mut need = w.clone();
        let mut rel = None;
        let mut alive = true;
        let mut first = true;
        while need.is_positive() {
            let e = &mut list[0];
            let part = e.weight.clone().min(need.clone());
            if first {
                rel = e.rel.clone();
                first = false;
            }
            alive &= e.rel.is_some();
            e.weight -= &part;
            need -= part;
            if e.weight.is_zero() {
                list.remove(0);
            }
        }
        if alive {
            rel
        } else {
            None
        }
    }

    fn finished(&self, full: CondTerm) -> Option<Rc<Relation>> {
        self.terms.get(&full)?.iter().find_map(|e| e.rel.clone())
    }
}

/// Interprets a proof sequence as a query plan: decompositions partition
/// by degree, compositions join, submodularity moves the affiliation.
///
/// `delta` is the inequality the sequence proves; each of its terms must
/// match a constraint of `dc`, whose guard becomes the term's relation.
/// Every branch of the partition tree ends at its first materialised
/// `h([n])`; the union of branch outputs is semijoin-reduced against every
/// atom.
pub fn panda_interpret(
    query: &Query,
    db: &Database,
    dc: &ConstraintSet,
    delta: &[PairWeight],
    steps: &[AnnotatedStep],
) -> Result<PandaOutput> {
    let names = query.var_names();
    let attrs = |s: VarSet| s.names(names);
    let label = |t: &CondTerm| t.label(names);
    let seq = ProofSequence::new(names.to_vec(), steps.iter().map(|a| a.step.clone()).collect());
    let check = seq.validate(delta);
    if !check.valid {
        return Err(Error::InvalidSequence {
            step: check.failed_at.unwrap_or(0),
            reason: check.reason.unwrap_or_default(),
        });
    }
    if let Some(k) = steps.iter().position(|a| matches!(a.step.rule, Rule::Decomposition { .. }) && a.theta.is_none()) {
        return Err(Error::MissingTheta(k));
    }

    let atoms = query.bind(db)?;
    let mut counters = Counters::new();
    let mut root = Branch { label: String::new(), terms: BTreeMap::new(), pieces: Vec::new() };
    for d in delta.iter().filter(|d| d.weight.is_positive()) {
        let term = CondTerm { y: d.y, x: d.x };
        let c = dc.find(d.x, d.y).ok_or_else(|| Error::Unaffiliated(label(&term)))?;
        let a = guard_atom_for(query, c)?;
        let rel = project(&atoms[a], &attrs(d.y))?;
        root.push(term, d.weight.clone(), Some(Rc::new(rel)));
    }

    let full = CondTerm::unconditional(VarSet::full(query.n()));
    let mut trace = Vec::new();
    let mut join_sizes = Vec::new();
    let mut outputs: Vec<Relation> = Vec::new();
    let (mut branches, mut fallbacks, mut joins) = (0usize, 0usize, 0usize);
    let mut stack = vec![(root, 0usize)];

    'branch: while let Some((mut br, mut k)) = stack.pop() {
        loop {
            if let Some(rel) = br.finished(full) {
                outputs.push(project(&rel, names)?);
                branches += 1;
                continue 'branch;
            }
            if k == steps.len() {
                let mut out = bruteforce_join(query, db)?;
                for p in &br.pieces {
                    out = semijoin_all(out, std::slice::from_ref(p), &mut counters)?;
                }
                trace.push(TraceLine { step: k, branch: br.label.clone(), action: "fallback to brute-force join".into() });
                outputs.push(out);
                branches += 1;
                fallbacks += 1;
                continue 'branch;
            }
            let AnnotatedStep { step, theta } = &steps[k];
            let w = &step.weight;
            let mut note = |br: &Branch, action: String| trace.push(TraceLine { step: k, branch: br.label.clone(), action });
            match step.rule {
                Rule::Submodularity { i, j } => {
                    let src = CondTerm { y: i, x: i & j };
                    let dst = CondTerm { y: i | j, x: j };
                    let rel = br.take(&src, w);
                    if let Some(r) = &rel {
                        note(&br, format!("{} now affiliated with {}", r.name(), label(&dst)));
                    }
                    br.push(dst, w.clone(), rel);
                }
                Rule::Composition { y, x } => {
                    let cond = br.take(&CondTerm { y, x }, w);
                    let base = br.take(&CondTerm::unconditional(x), w);
                    let joined = match (cond, base) {
                        (Some(r1), Some(r2)) => {
                            let j = hash_join_counted(&r2, &r1, &mut counters);
                            join_sizes.push(j.len());
                            joins += 1;
                            let mut out = project(&j, &attrs(y))?.with_name(format!("I{joins}"));
                            // filters that every output tuple of this branch passes
                            let keep: Vec<Relation> = atoms
                                .iter()
                                .zip(query.atoms())
                                .filter(|(_, a)| a.var_set().is_subset(y))
                                .map(|(r, _)| r.clone())
                                .chain(
                                    br.pieces
                                        .iter()
                                        .filter(|p| p.schema().iter().all(|s| out.column_index(s).is_some()))
                                        .map(|p| (**p).clone()),
                                )
                                .collect();
                            out = semijoin_all(out, &keep, &mut counters)?;
                            counters.emitted += j.len() as u64;
                            note(&br, format!("{}({}) <- {} ⋈ {}", out.name(), attrs(y).join(","), r2.name(), r1.name()));
                            Some(Rc::new(out))
                        }
                        _ => None,
                    };
                    br.push(CondTerm::unconditional(y), w.clone(), joined);
                }
                Rule::Decomposition { y, x } => {
                    let theta = theta.as_ref().expect("checked above");
                    let cond = CondTerm { y, x };
                    let base = CondTerm::unconditional(x);
                    match br.take(&CondTerm::unconditional(y), w) {
                        None => {
                            br.push(cond, w.clone(), None);
                            br.push(base, w.clone(), None);
                        }
                        Some(r) => {
                            let (heavy, light) = partition_by_degree(&r, &attrs(x), theta)?;
                            counters.probes += r.len() as u64;
                            note(&br, format!("partition {} -> {} ∪ {}", r.name(), heavy.name(), light.name()));
                            let heavy = Rc::new(heavy);
                            let light = Rc::new(light);
                            let mut h = br.clone();
                            h.label.push('H');
                            h.push(cond, w.clone(), None);
                            h.push(base, w.clone(), Some(Rc::new(project(&heavy, &attrs(x))?)));
                            h.pieces.push(heavy.clone());
                            let mut l = br;
                            l.label.push('L');
                            l.push(cond, w.clone(), Some(light.clone()));
                            l.push(base, w.clone(), None);
                            l.pieces.push(light.clone());
                            // an empty piece holds no output tuple
                            if !light.is_empty() {
                                stack.push((l, k + 1));
                            }
                            if !heavy.is_empty() {
                                stack.push((h, k + 1));
                            }
                            continue 'branch;
                        }
                    }
                }
            }
            k += 1;
        }
    }

    let mut data = Vec::new();
    for o in &outputs {
        for row in o.rows() {
            data.extend_from_slice(row);
        }
    }
    let union = Relation::from_flat(query.name(), names.to_vec(), data)?;
    let relation = semijoin_all(union, &atoms, &mut counters)?.with_name(query.name());
    counters.emitted += relation.len() as u64;
    Ok(PandaOutput { relation, counters, branches, fallbacks, join_sizes, trace })
}
