//! Combination of per-triple reachability bounds into bounds on violating
//! and satisfying the specification from each starting proposition.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::automaton::{Decomposition, Dfa, ReachTriple};
use crate::barrier::BarrierCertificate;
use crate::ltl::Proposition;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TripleStatus {
    Verified,
    AssumedOne,
}

impl TripleStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            TripleStatus::Verified => "verified",
            TripleStatus::AssumedOne => "assumed_one",
        }
    }
}

/// A reach triple together with the source and target proposition sets it
/// is checked for. The first triple of a run uses the starting proposition
/// alone as its source.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TripleKey {
    pub triple: ReachTriple,
    pub source: BTreeSet<Proposition>,
    pub target: BTreeSet<Proposition>,
}

impl TripleKey {
    pub fn new(dfa: &Dfa, triple: ReachTriple) -> Self {
        TripleKey { triple, source: triple.source_labels(dfa), target: triple.target_labels(dfa) }
    }

    /// Key for position `index` of a run that starts from `p`.
    pub fn in_run(dfa: &Dfa, triple: ReachTriple, index: usize, p: &Proposition) -> Self {
        let mut key = Self::new(dfa, triple);
        if index == 0 {
            key.source = BTreeSet::from([p.clone()]);
        }
        key
    }

    /// Triple name, with the source set appended when it is narrower than
    /// the letters of the entering edge.
    pub fn name(&self, dfa: &Dfa) -> String {
        let base = self.triple.name(dfa);
        if self.source == self.triple.source_labels(dfa) {
            base
        } else {
            let props: Vec<String> = self.source.iter().map(ToString::to_string).collect();
            format!("{base}[{}]", props.join("|"))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripleBound {
    pub triple: String,
    pub source: Vec<String>,
    pub target: Vec<String>,
    pub gamma: f64,
    pub c: f64,
    pub horizon: f64,
    pub bound: f64,
    pub status: TripleStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub failure: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub certificate: Option<BarrierCertificate>,
}

fn names(props: &BTreeSet<Proposition>) -> Vec<String> {
    props.iter().map(ToString::to_string).collect()
}

impl TripleBound {
    /// Bound `min(1, gamma + c T)`.
    pub fn new(key: &TripleKey, dfa: &Dfa, gamma: f64, c: f64, horizon: f64) -> Self {
        Self::with_bound(key, dfa, gamma, c, horizon, gamma + c * horizon)
    }

    /// Bound given explicitly (clamped to `[0, 1]`), e.g. from a published table.
    pub fn with_bound(key: &TripleKey, dfa: &Dfa, gamma: f64, c: f64, horizon: f64, bound: f64) -> Self {
        TripleBound {
            triple: key.name(dfa),
            source: names(&key.source),
            target: names(&key.target),
            gamma,
            c,
            horizon,
            bound: bound.clamp(0.0, 1.0),
            status: TripleStatus::Verified,
            failure: None,
            certificate: None,
        }
    }

    pub fn from_certificate(key: &TripleKey, dfa: &Dfa, cert: BarrierCertificate) -> Self {
        let (gamma, c) = match &cert.verification {
            Some(v) => (v.gamma_effective, v.c_effective),
            None => (cert.gamma, cert.c),
        };
        let mut out = Self::with_bound(key, dfa, gamma, c, cert.horizon, cert.bound());
        out.certificate = Some(cert);
        out
    }

    /// Pessimistic bound 1 for a triple without a certificate.
    pub fn assumed_one(key: &TripleKey, dfa: &Dfa, horizon: f64, failure: Option<String>) -> Self {
        TripleBound {
            triple: key.name(dfa),
            source: names(&key.source),
            target: names(&key.target),
            gamma: 1.0,
            c: 0.0,
            horizon,
            bound: 1.0,
            status: TripleStatus::AssumedOne,
            failure,
            certificate: None,
        }
    }
}

pub type TripleTable = BTreeMap<TripleKey, TripleBound>;

/// Product of bounds along one run; the empty product is 1.
pub fn run_product(bounds: impl IntoIterator<Item = f64>) -> f64 {
    bounds.into_iter().product()
}

/// Sum of run products, clamped to `[0, 1]`.
pub fn assemble_upper(run_products: impl IntoIterator<Item = f64>) -> f64 {
    run_products.into_iter().sum::<f64>().clamp(0.0, 1.0)
}

pub fn assemble_lower(upper: f64) -> f64 {
    (1.0 - upper).clamp(0.0, 1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunBreakdown {
    pub run: String,
    pub triples: Vec<String>,
    pub product: f64,
    /// At least one triple of the run has a bound below 1.
    pub nontrivial: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssembledBound {
    pub proposition: String,
    pub upper_violation: f64,
    pub lower_satisfaction: f64,
    pub runs: Vec<RunBreakdown>,
}

/// Keys of every triple needed for the bound from `p`, in run order.
pub fn keys_for(decomp: &Decomposition, p: &Proposition) -> Vec<TripleKey> {
    let mut out = Vec::new();
    for entry in decomp.by_prop.get(p).into_iter().flatten() {
        for (i, t) in entry.triples.iter().enumerate() {
            let k = TripleKey::in_run(&decomp.dfa, *t, i, p);
            if !out.contains(&k) {
                out.push(k);
            }
        }
    }
    out
}

/// Bounds for proposition `p`; triples missing from `table` count as 1.
pub fn assemble(decomp: &Decomposition, p: &Proposition, table: &TripleTable) -> AssembledBound {
    let dfa = &decomp.dfa;
    let mut runs = Vec::new();
    for entry in decomp.by_prop.get(p).into_iter().flatten() {
        let bounds: Vec<(String, f64)> = entry
            .triples
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let k = TripleKey::in_run(dfa, *t, i, p);
                (k.name(dfa), table.get(&k).map_or(1.0, |b| b.bound))
            })
            .collect();
        runs.push(RunBreakdown {
            run: entry.run.display(dfa).to_string(),
            triples: bounds.iter().map(|(n, _)| n.clone()).collect(),
            product: run_product(bounds.iter().map(|(_, b)| *b)),
            nontrivial: bounds.iter().any(|(_, b)| *b < 1.0),
        });
    }
    let upper = assemble_upper(runs.iter().map(|r| r.product));
    AssembledBound { proposition: p.to_string(), upper_violation: upper, lower_satisfaction: assemble_lower(upper), runs }
}

/// One row of a Monte Carlo cross-check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McCheckRow {
    pub prop: String,
    pub policy: String,
    pub n: usize,
    pub k: usize,
    pub phat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub formula: String,
    pub negated_formula: String,
    pub horizon: f64,
    pub settings: BTreeMap<String, serde_json::Value>,
    pub decomposition: String,
    pub triples: Vec<TripleBound>,
    pub propositions: Vec<AssembledBound>,
    #[serde(default)]
    pub mc_checks: Vec<McCheckRow>,
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn proposition(&self, p: &str) -> Option<&AssembledBound> {
        self.propositions.iter().find(|a| a.proposition == p)
    }

    pub fn lower_bound(&self, p: &str) -> Option<f64> {
        self.proposition(p).map(|a| a.lower_satisfaction)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("triple,gamma,c,bound,status\n");
        for t in &self.triples {
            let _ = writeln!(s, "\"{}\",{},{},{},{}", t.triple, t.gamma, t.c, t.bound, t.status.as_str());
        }
        s
    }

    /// Aligned text table of the triples followed by per-proposition bounds.
    pub fn to_text(&self) -> String {
        let width = self.triples.iter().map(|t| t.triple.len()).max().unwrap_or(6).max(6);
        let mut s = format!("formula: {}\nnegation: {}\nhorizon: {}\n\n", self.formula, self.negated_formula, self.horizon);
        let _ = writeln!(s, "{:<width$}  {:>12}  {:>12}  {:>12}  status", "triple", "c", "gamma", "gamma+cT");
        for t in &self.triples {
            let _ = writeln!(
                s,
                "{:<width$}  {:>12.6e}  {:>12.6}  {:>12.6}  {}",
                t.triple,
                t.c,
                t.gamma,
                t.bound,
                t.status.as_str()
            );
        }
        s.push('\n');
        for a in &self.propositions {
            let _ = writeln!(
                s,
                "{}: P(violation) <= {:.7}, P(satisfaction) >= {:.7}",
                a.proposition, a.upper_violation, a.lower_satisfaction
            );
            for r in &a.runs {
                if !r.nontrivial {
                    let _ = writeln!(s, "  run {} has no certificate below 1", r.run);
                }
            }
        }
        if !self.mc_checks.is_empty() {
            s.push('\n');
            s.push_str(&mc_csv(&self.mc_checks));
        }
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        s
    }
}

pub fn mc_csv(rows: &[McCheckRow]) -> String {
    let mut s = String::from("prop,policy,n,k,phat,ci_lo,ci_hi,bound,pass\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{:.6},{:.6},{:.6},{:.6},{}",
            r.prop, r.policy, r.n, r.k, r.phat, r.ci_lo, r.ci_hi, r.bound, r.pass
        );
    }
    s
}

/// Report over every proposition of the DFA alphabet. Rows appear in the
/// order their triples are first used.
pub fn build_report(
    formula: String,
    negated_formula: String,
    horizon: f64,
    decomp: &Decomposition,
    table: &TripleTable,
) -> VerificationReport {
    let mut triples = Vec::new();
    let mut propositions = Vec::new();
    let mut seen = BTreeSet::new();
    for p in decomp.dfa.alphabet() {
        for k in keys_for(decomp, p) {
            if seen.insert(k.clone()) {
                triples.push(
                    table
                        .get(&k)
                        .cloned()
                        .unwrap_or_else(|| TripleBound::assumed_one(&k, &decomp.dfa, horizon, None)),
                );
            }
        }
        propositions.push(assemble(decomp, p, table));
    }
    VerificationReport {
        formula,
        negated_formula,
        horizon,
        settings: BTreeMap::new(),
        decomposition: decomp.render(),
        triples,
        propositions,
        mc_checks: Vec::new(),
        notes: Vec::new(),
    }
}
