//! End-to-end analysis: negate the formula, translate and decompose, bound
//! every reach triple with a barrier certificate, and assemble the report.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde_json::json;

use crate::assembly::{build_report, keys_for, TripleBound, TripleKey, TripleTable, VerificationReport};
use crate::automaton::{translate, Decomposition, Dfa};
use crate::barrier::{smtlib_text, CegisConfig, CertificateKind, FailureReason, ReachSpec, SynthesisError, SynthesisProblem};
use crate::generator::BasisSet;
use crate::system::SwitchedSystem;
use crate::Error;

/// Automaton of the negated formula over the system's propositions, with
/// initial states that have incoming edges split off.
pub fn negated_dfa(sys: &SwitchedSystem) -> Result<Dfa, Error> {
    let negated = sys.formula().negate_to_pnf();
    Ok(translate(&negated, &sys.propositions())?.separate_initial())
}

pub fn decompose(sys: &SwitchedSystem, dfa: Option<&Dfa>, allow_revisits: usize) -> Result<Decomposition, Error> {
    let dfa = match dfa {
        Some(d) => d.clone(),
        None => negated_dfa(sys)?,
    };
    Ok(Decomposition::build(&dfa, allow_revisits))
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub degree: u32,
    /// Per-mode certificates coupled through the rates, when the system has rates.
    pub multiple: bool,
    pub cegis: CegisConfig,
    pub allow_revisits: usize,
    pub dfa: Option<Dfa>,
    pub emit_smtlib: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            degree: 4,
            multiple: false,
            cegis: CegisConfig::default(),
            allow_revisits: 0,
            dfa: None,
            emit_smtlib: false,
        }
    }
}

pub struct VerifyOutput {
    pub report: VerificationReport,
    pub decomposition: Decomposition,
    /// `(triple name, SMT-LIB text)` for every certified triple, when requested.
    pub smtlib: Vec<(String, String)>,
}

fn bound_triple(
    sys: &SwitchedSystem,
    dfa: &Dfa,
    key: &TripleKey,
    basis: &BasisSet,
    kind: CertificateKind,
    opts: &VerifyOptions,
) -> Result<(TripleBound, Option<String>), Error> {
    let spec = ReachSpec {
        source: sys.region_of(&key.source)?,
        target: sys.region_of(&key.target)?,
        state_space: sys.state_space().clone(),
        horizon: sys.horizon(),
    };
    let problem = SynthesisProblem::new(&spec, sys, basis, kind, opts.cegis.clone())?;
    match problem.minimize_bound() {
        Ok(cert) => {
            let smt = opts.emit_smtlib.then(|| smtlib_text(&cert, &problem));
            Ok((TripleBound::from_certificate(key, dfa, cert), smt))
        }
        Err(SynthesisError::Failure(reason)) => {
            let why = match reason {
                FailureReason::Degenerate => "source and target overlap".to_string(),
                other => other.to_string(),
            };
            Ok((TripleBound::assumed_one(key, dfa, sys.horizon(), Some(why)), None))
        }
        Err(e) => Err(e.into()),
    }
}

pub fn verify(sys: &SwitchedSystem, opts: &VerifyOptions) -> Result<VerifyOutput, Error> {
    let decomp = decompose(sys, opts.dfa.as_ref(), opts.allow_revisits)?;
    let dfa = &decomp.dfa;
    let kind = if opts.multiple && sys.rates().is_some() { CertificateKind::Multiple } else { CertificateKind::Common };
    let basis = BasisSet::monomials(sys.state_space(), opts.degree);

    let mut keys: Vec<TripleKey> = Vec::new();
    for p in dfa.alphabet() {
        for k in keys_for(&decomp, p) {
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
    }
    let results: Vec<(TripleBound, Option<String>)> = keys
        .par_iter()
        .map(|k| bound_triple(sys, dfa, k, &basis, kind, opts))
        .collect::<Result<_, _>>()?;

    let mut table = TripleTable::new();
    let mut smtlib = Vec::new();
    for (k, (tb, smt)) in keys.iter().zip(results) {
        if let Some(text) = smt {
            smtlib.push((tb.triple.clone(), text));
        }
        table.insert(k.clone(), tb);
    }
    let mut report = build_report(
        sys.formula().to_string(),
        sys.formula().negate_to_pnf().to_string(),
        sys.horizon(),
        &decomp,
        &table,
    );
    let mut settings = BTreeMap::new();
    settings.insert("degree".into(), json!(opts.degree));
    settings.insert(
        "certificate".into(),
        json!(match kind {
            CertificateKind::Common => "common",
            CertificateKind::Multiple => "multiple",
        }),
    );
    settings.insert("epsilon".into(), json!(opts.cegis.epsilon));
    settings.insert("allow_revisits".into(), json!(opts.allow_revisits));
    report.settings = settings;
    report.notes = vec![
        "barrier conditions are imposed on the compact state space only (process stopped on exit)".into(),
        format!(
            "certificates are verified by interval subdivision; violations up to {} are absorbed into the reported gamma and c",
            opts.cegis.epsilon
        ),
        "triples without a certificate contribute the pessimistic bound 1".into(),
    ];
    if opts.multiple && kind == CertificateKind::Common {
        report.notes.push("no transition rates given; common certificates used".into());
    }
    Ok(VerifyOutput { report, decomposition: decomp, smtlib })
}
