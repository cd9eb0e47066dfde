//! Proof sequences for Shannon-flow inequalities.
//!
//! A sequence rewrites weighted conditional terms `h(Y|X)` with three rules
//! until `h([n])` carries weight at least one:
//!
//! - submodularity `h(I | I∩J) -> h(I∪J | J)`
//! - decomposition `h(Y) -> h(Y|X) + h(X)`
//! - composition `h(Y|X) + h(X) -> h(Y)`
//!
//! Weights may never go negative.

use std::collections::BTreeMap;
use std::fmt;

use num::{Signed, Zero};
use serde::Serialize;

use crate::bounds::{DualCertificate, PairWeight};
use crate::error::{Error, Result};
use crate::lp::{parse_rational, Rational};
use crate::varset::VarSet;

/// `h(Y|X)` with `X ⊊ Y`. `h(Y|∅)` and `h(Y)` are the same term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CondTerm {
    pub y: VarSet,
    pub x: VarSet,
}

impl CondTerm {
    pub fn new(x: VarSet, y: VarSet) -> Result<Self> {
        if !x.is_proper_subset(y) {
            return Err(Error::Invalid(format!("h({y:?}|{x:?}) needs X ⊊ Y")));
        }
        Ok(CondTerm { y, x })
    }

    pub fn unconditional(y: VarSet) -> Self {
        CondTerm { y, x: VarSet::EMPTY }
    }

    /// `h(ABC|AB)`; names longer than one character are comma separated.
    pub fn label<S: AsRef<str>>(&self, names: &[S]) -> String {
        let sep = if names.iter().all(|s| s.as_ref().chars().count() == 1) { "" } else { "," };
        let part = |s: VarSet| s.names(names).join(sep);
        if self.x.is_empty() {
            format!("h({})", part(self.y))
        } else {
            format!("h({}|{})", part(self.y), part(self.x))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Rule {
    Submodularity { i: VarSet, j: VarSet },
    Decomposition { y: VarSet, x: VarSet },
    Composition { y: VarSet, x: VarSet },
}

impl Rule {
    /// Terms whose weight the rule consumes.
    pub fn sources(&self) -> Vec<CondTerm> {
        match *self {
            Rule::Submodularity { i, j } => vec![CondTerm { y: i, x: i & j }],
            Rule::Decomposition { y, .. } => vec![CondTerm::unconditional(y)],
            Rule::Composition { y, x } => vec![CondTerm { y, x }, CondTerm::unconditional(x)],
        }
    }

    /// Terms whose weight the rule produces.
    pub fn targets(&self) -> Vec<CondTerm> {
        match *self {
            Rule::Submodularity { i, j } => vec![CondTerm { y: i | j, x: j }],
            Rule::Decomposition { y, x } => vec![CondTerm { y, x }, CondTerm::unconditional(x)],
            Rule::Composition { y, .. } => vec![CondTerm::unconditional(y)],
        }
    }

    fn check(&self) -> std::result::Result<(), String> {
        match *self {
            Rule::Submodularity { i, j } if !i.incomparable(j) => {
                Err(format!("submodularity needs incomparable sets, got {i:?} and {j:?}"))
            }
            Rule::Decomposition { y, x } | Rule::Composition { y, x } if x.is_empty() || !x.is_proper_subset(y) => {
                Err(format!("rule needs ∅ ⊊ X ⊊ Y, got X={x:?} Y={y:?}"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProofStep {
    pub rule: Rule,
    #[serde(serialize_with = "crate::lp::text::serialize")]
    pub weight: Rational,
}

impl ProofStep {
    pub fn new(rule: Rule, weight: Rational) -> Result<Self> {
        rule.check().map_err(Error::Invalid)?;
        if !weight.is_positive() {
            return Err(Error::Invalid("step weight must be positive".into()));
        }
        Ok(ProofStep { rule, weight })
    }

    /// One line of the text format, e.g. `sub I={A,B} J={A,C} w=1/2`.
    pub fn to_text<S: AsRef<str>>(&self, names: &[S]) -> String {
        let s = |v: VarSet| v.display(names);
        let w = &self.weight;
        match self.rule {
            Rule::Submodularity { i, j } => format!("sub I={} J={} w={w}", s(i), s(j)),
            Rule::Decomposition { y, x } => format!("dec Y={} X={} w={w}", s(y), s(x)),
            Rule::Composition { y, x } => format!("comp Y={} X={} w={w}", s(y), s(x)),
        }
    }

    /// Change in total ledger weight: 0 for submodularity, `+w` for decomposition,
    /// `-w` for composition.
    pub fn mass_change(&self) -> Rational {
        match self.rule {
            Rule::Submodularity { .. } => Rational::zero(),
            Rule::Decomposition { .. } => self.weight.clone(),
            Rule::Composition { .. } => -self.weight.clone(),
        }
    }
}

/// Current non-negative weight of every term. Zero entries are dropped.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TermLedger {
    weights: BTreeMap<CondTerm, Rational>,
}

impl TermLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// The initial ledger `δ`.
    pub fn from_delta(delta: &[PairWeight]) -> Result<Self> {
        let mut l = TermLedger::new();
        for d in delta {
            if d.weight.is_negative() {
                return Err(Error::NegativeWeight);
            }
            l.add(CondTerm::new(d.x, d.y)?, &d.weight);
        }
        Ok(l)
    }

    pub fn get(&self, t: &CondTerm) -> Rational {
        self.weights.get(t).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn add(&mut self, t: CondTerm, w: &Rational) {
        let e = self.weights.entry(t).or_insert_with(Rational::zero);
        *e += w;
        if e.is_zero() {
            self.weights.remove(&t);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CondTerm, &Rational)> {
        self.weights.iter()
    }

    /// Sum of all weights.
    pub fn mass(&self) -> Rational {
        self.weights.values().sum()
    }
}

/// Applies one rule. `names` only feeds error messages.
pub fn apply_step<S: AsRef<str>>(ledger: &TermLedger, step: &ProofStep, names: &[S]) -> Result<TermLedger> {
    let mut next = ledger.clone();
    for t in step.rule.sources() {
        if ledger.get(&t) < step.weight {
            return Err(Error::InsufficientWeight { term: t.label(names) });
        }
        next.add(t, &-step.weight.clone());
    }
    for t in step.rule.targets() {
        next.add(t, &step.weight);
    }
    Ok(next)
}

/// A list of steps over named variables.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProofSequence {
    pub vars: Vec<String>,
    pub steps: Vec<ProofStep>,
}

/// Outcome of replaying a sequence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Validation {
    pub valid: bool,
    /// Index of the first failing step; `steps.len()` when every step
    /// applied but the target weight stayed below one.
    pub failed_at: Option<usize>,
    pub reason: Option<String>,
    #[serde(serialize_with = "crate::lp::text::serialize")]
    pub target_weight: Rational,
}

impl ProofSequence {
    pub fn new(vars: Vec<String>, steps: Vec<ProofStep>) -> Self {
        ProofSequence { vars, steps }
    }

    pub fn n(&self) -> usize {
        self.vars.len()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Every intermediate ledger, starting with `δ`.
    pub fn replay(&self, delta: &[PairWeight]) -> Result<Vec<TermLedger>> {
        let mut out = vec![TermLedger::from_delta(delta)?];
        for (k, step) in self.steps.iter().enumerate() {
            let next = apply_step(out.last().unwrap(), step, &self.vars)
                .map_err(|e| Error::InvalidSequence { step: k, reason: e.to_string() })?;
            out.push(next);
        }
        Ok(out)
    }

    /// Replays from `δ` and checks that `h([n])` ends with weight at least one.
    pub fn validate(&self, delta: &[PairWeight]) -> Validation {
        let target = CondTerm::unconditional(VarSet::full(self.n()));
        let mut ledger = match TermLedger::from_delta(delta) {
            Ok(l) => l,
            Err(e) => {
                return Validation {
                    valid: false,
                    failed_at: Some(0),
                    reason: Some(e.to_string()),
                    target_weight: Rational::zero(),
                }
            }
        };
        for (k, step) in self.steps.iter().enumerate() {
            match apply_step(&ledger, step, &self.vars) {
                Ok(next) => ledger = next,
                Err(e) => {
                    return Validation {
                        valid: false,
                        failed_at: Some(k),
                        reason: Some(e.to_string()),
                        target_weight: ledger.get(&target),
                    }
                }
            }
        }
        let w = ledger.get(&target);
        let ok = w >= Rational::from_integer(1.into());
        Validation {
            valid: ok,
            failed_at: (!ok).then_some(self.steps.len()),
            reason: (!ok).then(|| format!("{} ends with weight {w}", target.label(&self.vars))),
            target_weight: w,
        }
    }

    /// Parses one step per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str, vars: &[String]) -> Result<Self> {
        let mut steps = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let perr = |msg: String| Error::Parse { line: ln + 1, msg };
            steps.push(parse_step(line, vars).map_err(perr)?);
        }
        Ok(ProofSequence { vars: vars.to_vec(), steps })
    }

    pub fn to_text(&self) -> String {
        self.steps.iter().map(|s| s.to_text(&self.vars) + "\n").collect()
    }
}

impl fmt::Display for ProofSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn parse_step(line: &str, vars: &[String]) -> std::result::Result<ProofStep, String> {
    let mut words = line.split_whitespace();
    let kind = words.next().ok_or("empty step")?;
    let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
    for w in words {
        let (k, v) = w.split_once('=').ok_or_else(|| format!("expected key=value, got `{w}`"))?;
        if fields.insert(k, v).is_some() {
            return Err(format!("repeated field `{k}`"));
        }
    }
    let mut take = |k: &str| fields.remove(k).ok_or_else(|| format!("missing field `{k}`"));
    let set = |s: &str| parse_set(s, vars);
    let rule = match kind {
        "sub" => Rule::Submodularity { i: set(take("I")?)?, j: set(take("J")?)? },
        "dec" => Rule::Decomposition { y: set(take("Y")?)?, x: set(take("X")?)? },
        "comp" => Rule::Composition { y: set(take("Y")?)?, x: set(take("X")?)? },
        other => return Err(format!("unknown rule `{other}`")),
    };
    let w = take("w")?;
    let weight = parse_rational(w).ok_or_else(|| format!("bad weight `{w}`"))?;
    if let Some(k) = fields.keys().next() {
        return Err(format!("unexpected field `{k}`"));
    }
    ProofStep::new(rule, weight).map_err(|e| e.to_string())
}

fn parse_set(s: &str, vars: &[String]) -> std::result::Result<VarSet, String> {
    let inner = s
        .strip_prefix('{')
        .and_then(|s| s.strip_suffix('}'))
        .ok_or_else(|| format!("expected {{...}}, got `{s}`"))?;
    let mut out = VarSet::EMPTY;
    for name in inner.split(',').map(str::trim).filter(|n| !n.is_empty()) {
        let i = vars.iter().position(|v| v == name).ok_or_else(|| format!("unknown variable `{name}`"))?;
        out = out.with(i);
    }
    Ok(out)
}

/// Serialises a dual certificate into a proof sequence.
///
/// `ξ_{I,J} > 0` becomes submodularity, `α_{X,Y} > 0` decomposition and
/// `α_{X,Y} < 0` composition. Rules are applied greedily, each with as much
/// weight as both its remaining quantity and its source terms allow, with
/// depth-first backtracking over the rule order. The search gives up after
/// `10 ×` the number of non-zero certificate entries step applications.
pub fn derive(cert: &DualCertificate) -> Result<ProofSequence> {
    if !cert.is_feasible() {
        return Err(Error::Invalid("certificate is not dual feasible".into()));
    }
    let mut rules: Vec<(Rule, Rational)> = Vec::new();
    for a in &cert.alpha {
        if a.weight.is_negative() {
            rules.push((Rule::Composition { y: a.y, x: a.x }, -a.weight.clone()));
        }
    }
    for xi in &cert.xi {
        if xi.weight.is_positive() {
            rules.push((Rule::Submodularity { i: xi.i, j: xi.j }, xi.weight.clone()));
        }
    }
    for a in &cert.alpha {
        if a.weight.is_positive() {
            rules.push((Rule::Decomposition { y: a.y, x: a.x }, a.weight.clone()));
        }
    }
    let entries = cert.delta.len() + cert.xi.len() + cert.alpha.len();
    let mut search = Search {
        rules,
        target: CondTerm::unconditional(VarSet::full(cert.n())),
        budget: 10 * entries.max(1),
        steps: Vec::new(),
    };
    let ledger = TermLedger::from_delta(&cert.delta)?;
    let remaining: Vec<Rational> = search.rules.iter().map(|(_, q)| q.clone()).collect();
    if search.run(&ledger, &remaining)? {
        let seq = ProofSequence::new(cert.vars.clone(), search.steps);
        debug_assert!(seq.validate(&cert.delta).valid);
        Ok(seq)
    } else {
        Err(Error::DeriveIncomplete)
    }
}

struct Search {
    rules: Vec<(Rule, Rational)>,
    target: CondTerm,
    budget: usize,
    steps: Vec<ProofStep>,
}

impl Search {
    fn run(&mut self, ledger: &TermLedger, remaining: &[Rational]) -> Result<bool> {
        if ledger.get(&self.target) >= Rational::from_integer(1.into()) {
            return Ok(true);
        }
        for k in 0..self.rules.len() {
            if !remaining[k].is_positive() {
                continue;
            }
            let rule = self.rules[k].0;
            let w = rule.sources().iter().map(|t| ledger.get(t)).fold(remaining[k].clone(), |a, b| a.min(b));
            if !w.is_positive() {
                continue;
            }
            if self.budget == 0 {
                return Err(Error::DeriveIncomplete);
            }
            self.budget -= 1;
            let step = ProofStep { rule, weight: w.clone() };
            let next = apply_step(ledger, &step, &[] as &[&str]).expect("weight checked");
            let mut rem = remaining.to_vec();
            rem[k] -= &w;
            self.steps.push(step);
            if self.run(&next, &rem)? {
                return Ok(true);
            }
            self.steps.pop();
        }
        Ok(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{check_shannon_flow, shannon_flow_dual};
    use crate::lp::{int, ratio};
    use crate::query::{ConstraintSet, Query};

    fn names(s: &str) -> Vec<String> {
        s.chars().map(|c| c.to_string()).collect()
    }

    fn set(vars: &[String], s: &str) -> VarSet {
        s.chars().map(|c| vars.iter().position(|v| *v == c.to_string()).unwrap()).collect()
    }

    #[test]
    fn rule_examples() {
        let v = names("ABC");
        let mut l = TermLedger::new();
        l.add(CondTerm { y: set(&v, "AB"), x: set(&v, "A") }, &ratio(1, 2));
        let step = ProofStep::new(Rule::Submodularity { i: set(&v, "AB"), j: set(&v, "AC") }, ratio(1, 2)).unwrap();
        let out = apply_step(&l, &step, &v).unwrap();
        let only: Vec<_> = out.iter().collect();
        assert_eq!(only, vec![(&CondTerm { y: set(&v, "ABC"), x: set(&v, "AC") }, &ratio(1, 2))]);

        let v = names("ABCD");
        let mut l = TermLedger::new();
        l.add(CondTerm::unconditional(set(&v, "BC")), &int(1));
        let step = ProofStep::new(Rule::Decomposition { y: set(&v, "BC"), x: set(&v, "B") }, int(1)).unwrap();
        let out = apply_step(&l, &step, &v).unwrap();
        assert_eq!(out.get(&CondTerm { y: set(&v, "BC"), x: set(&v, "B") }), int(1));
        assert_eq!(out.get(&CondTerm::unconditional(set(&v, "B"))), int(1));
        assert_eq!(out.iter().count(), 2);

        let mut l = TermLedger::new();
        l.add(CondTerm { y: set(&v, "BC"), x: set(&v, "B") }, &int(1));
        let step = ProofStep::new(Rule::Composition { y: set(&v, "BC"), x: set(&v, "B") }, int(1)).unwrap();
        match apply_step(&l, &step, &v) {
            Err(Error::InsufficientWeight { term }) => assert_eq!(term, "h(B)"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn step_invariants() {
        let v = names("ABC");
        assert!(ProofStep::new(Rule::Submodularity { i: set(&v, "A"), j: set(&v, "AB") }, int(1)).is_err());
        assert!(ProofStep::new(Rule::Decomposition { y: set(&v, "AB"), x: VarSet::EMPTY }, int(1)).is_err());
        assert!(ProofStep::new(Rule::Composition { y: set(&v, "AB"), x: set(&v, "AB") }, int(1)).is_err());
        assert!(ProofStep::new(Rule::Composition { y: set(&v, "AB"), x: set(&v, "A") }, int(0)).is_err());
    }

    #[test]
    fn text_round_trip() {
        let v = names("ABCD");
        let text = "sub I={A,B} J={A,C} w=1/2\ndec Y={B,C} X={B} w=1/2\ncomp Y={B,C,D} X={B} w=3\n";
        let seq = ProofSequence::parse(text, &v).unwrap();
        assert_eq!(seq.len(), 3);
        assert_eq!(seq.to_text(), text);
        assert!(matches!(ProofSequence::parse("sub I={A} w=1", &v), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(ProofSequence::parse("\nfoo Y={A} X={} w=1", &v), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(ProofSequence::parse("dec Y={A,Z} X={A} w=1", &v), Err(Error::Parse { .. })));
    }

    fn triangle_delta(v: &[String]) -> Vec<PairWeight> {
        ["AB", "BC", "AC"]
            .iter()
            .map(|s| PairWeight { x: VarSet::EMPTY, y: set(v, s), weight: ratio(1, 2) })
            .collect()
    }

    const TRIANGLE: &str = "\
dec Y={A,B} X={A} w=1/2
sub I={A,B} J={A,C} w=1/2
comp Y={A,B,C} X={A,C} w=1/2
sub I={A} J={B,C} w=1/2
comp Y={A,B,C} X={B,C} w=1/2
";

    #[test]
    fn triangle_sequence_validates() {
        let v = names("ABC");
        let seq = ProofSequence::parse(TRIANGLE, &v).unwrap();
        let delta = triangle_delta(&v);
        let r = seq.validate(&delta);
        assert!(r.valid, "{r:?}");
        assert_eq!(r.target_weight, int(1));
        // replaying tracks mass exactly
        let ledgers = seq.replay(&delta).unwrap();
        for (k, step) in seq.steps.iter().enumerate() {
            assert_eq!(ledgers[k + 1].mass() - ledgers[k].mass(), step.mass_change());
        }
        assert!(check_shannon_flow(&delta, 3).unwrap());
    }

    #[test]
    fn corrupted_weight_fails_at_that_step() {
        let v = names("ABC");
        let text = TRIANGLE.replace("sub I={A} J={B,C} w=1/2", "sub I={A} J={B,C} w=3/4");
        let r = ProofSequence::parse(&text, &v).unwrap().validate(&triangle_delta(&v));
        assert!(!r.valid);
        assert_eq!(r.failed_at, Some(3));
        let short = ProofSequence::parse(&TRIANGLE.lines().take(3).collect::<Vec<_>>().join("\n"), &v).unwrap();
        let r = short.validate(&triangle_delta(&v));
        assert_eq!((r.valid, r.failed_at), (false, Some(3)));
    }

    #[test]
    fn empty_sequence() {
        let v = names("AB");
        let seq = ProofSequence::new(v.clone(), Vec::new());
        let r = seq.validate(&[PairWeight { x: VarSet::EMPTY, y: set(&v, "A"), weight: int(1) }]);
        assert_eq!((r.valid, r.failed_at), (false, Some(0)));
        assert!(seq.validate(&[PairWeight { x: VarSet::EMPTY, y: set(&v, "AB"), weight: int(1) }]).valid);
    }

    #[test]
    fn derives_triangle() {
        let q = Query::parse("Q(A,B,C) :- R(A,B), S(B,C), T(A,C).").unwrap();
        let dc = ConstraintSet::parse("card R 1024\ncard S 1024\ncard T 1024", &q).unwrap();
        let (_, cert) = shannon_flow_dual(&dc).unwrap();
        let seq = derive(&cert).unwrap();
        assert!(seq.validate(&cert.delta).valid, "{seq}");
    }

    #[test]
    fn single_constraint_needs_no_steps() {
        let q = Query::parse("Q(A,B) :- R(A,B).").unwrap();
        let dc = ConstraintSet::parse("card R 16", &q).unwrap();
        let (_, cert) = shannon_flow_dual(&dc).unwrap();
        assert!(derive(&cert).unwrap().is_empty());
    }
}
