use std::collections::BTreeSet;
use std::path::PathBuf;

use stoverify_core::barrier::{
    cegis, cegis_multiple, minimize_bound, reach_spec, verify_barrier, BarrierCertificate, CegisConfig,
    CertificateKind, Family, FailureReason, ReachSpec, Sample, SynthesisError, SynthesisProblem, Verification,
};
use stoverify_core::generator::{BasisSet, CandidateBarrier};
use stoverify_core::ltl::Proposition;
use stoverify_core::system::{Predicate, SwitchedSystem};

fn fixture(name: &str) -> SwitchedSystem {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    SwitchedSystem::load(path).unwrap()
}

fn props(names: &[&str]) -> BTreeSet<Proposition> {
    names.iter().map(|n| Proposition::new(n).unwrap()).collect()
}

fn spec_of(sys: &SwitchedSystem) -> ReachSpec {
    reach_spec(sys, &props(&["p0"]), &props(&["p1"])).unwrap()
}

/// Coefficients of `x^2 / 0.81` in the normalized quadratic basis on [-1, 1]
/// (centre 0, scale 1, so the basis is 1, x, x^2).
fn scaled_square(basis: &BasisSet, k: f64) -> CandidateBarrier {
    let mut a = vec![0.0; basis.len()];
    let idx = basis.exponents().iter().position(|m| m.exponents() == [2]).unwrap();
    a[idx] = k;
    CandidateBarrier::common(a)
}

fn cert_from(problem: &SynthesisProblem<'_>, cand: CandidateBarrier, gamma: f64, c: f64) -> BarrierCertificate {
    BarrierCertificate {
        kind: CertificateKind::Common,
        basis: stoverify_core::barrier::BasisRecord {
            degree: problem.basis.degree(),
            center: problem.basis.center().to_vec(),
            scale: problem.basis.scale().to_vec(),
            exponents: problem.basis.exponents().iter().map(|m| m.exponents().to_vec()).collect(),
        },
        coefficients: cand.coefficients,
        gamma,
        c,
        horizon: problem.spec.horizon,
        verification: None,
    }
}

#[test]
fn hand_certificate_is_feasible_on_samples() {
    let sys = fixture("deterministic_1d.json");
    let spec = spec_of(&sys);
    let basis = BasisSet::monomials(sys.state_space(), 2);
    let problem = SynthesisProblem::new(&spec, &sys, &basis, CertificateKind::Common, CegisConfig::quick()).unwrap();
    let samples = problem.initial_samples();
    let cand = problem.feasibility_solve(&samples, 0.05, 0.0).unwrap();
    assert_eq!(cand.coefficients.len(), 1);
    // x^2 / 0.81 satisfies every sampled row, so the LP cannot report infeasible
    let hand = scaled_square(&basis, 1.0 / 0.81);
    assert!(problem.find_counterexample(&hand, 0.05, 0.0).is_none());
}

#[test]
fn shared_source_and_target_is_infeasible() {
    let sys = fixture("deterministic_1d.json");
    let mut spec = spec_of(&sys);
    spec.target = spec.source.clone();
    let basis = BasisSet::monomials(sys.state_space(), 2);
    let problem = SynthesisProblem::new(&spec, &sys, &basis, CertificateKind::Common, CegisConfig::quick()).unwrap();
    assert!(problem.is_degenerate());
    let samples = problem.initial_samples();
    assert_eq!(
        problem.feasibility_solve(&samples, 0.5, 0.0),
        Err(SynthesisError::Failure(FailureReason::Infeasible))
    );
    assert_eq!(
        cegis(&spec, &sys, &basis, 0.5, 0.0, &CegisConfig::quick()),
        Err(SynthesisError::Failure(FailureReason::Infeasible))
    );
    assert_eq!(
        minimize_bound(&spec, &sys, &basis, CertificateKind::Common, &CegisConfig::quick()),
        Err(SynthesisError::Failure(FailureReason::Degenerate))
    );
}

#[test]
fn empty_sample_set_is_vacuous() {
    let sys = fixture("deterministic_1d.json");
    let spec = spec_of(&sys);
    let basis = BasisSet::monomials(sys.state_space(), 2);
    let problem = SynthesisProblem::new(&spec, &sys, &basis, CertificateKind::Common, CegisConfig::quick()).unwrap();
    let cand = problem.feasibility_solve(&[], 0.05, 0.0).unwrap();
    assert_eq!(cand.coefficients[0].len(), basis.len());
}

#[test]
fn zero_candidate_violates_target() {
    let sys = fixture("deterministic_1d.json");
    let spec = spec_of(&sys);
    let basis = BasisSet::monomials(sys.state_space(), 2);
    let problem = SynthesisProblem::new(&spec, &sys, &basis, CertificateKind::Common, CegisConfig::quick()).unwrap();
    let zero = CandidateBarrier::common(vec![0.0; basis.len()]);
    let cx = problem.find_counterexample(&zero, 0.05, 0.0).unwrap();
    assert_eq!(cx.family, Family::Target);
    assert!(spec.target.contains(&cx.x));
    match verify_barrier(&cert_from(&problem, zero, 0.05, 0.0), &problem) {
        Verification::CounterexampleFound(cx) => assert_eq!(cx.family, Family::Target),
        other => panic!("expected counterexample, got {other:?}"),
    }
}

#[test]
fn square_on_brownian_motion_violates_generator() {
    let sys = fixture("brownian_1d.json");
    let spec = spec_of(&sys);
    let basis = BasisSet::monomials(sys.state_space(), 2);
    let problem = SynthesisProblem::new(&spec, &sys, &basis, CertificateKind::Common, CegisConfig::quick()).unwrap();
    // basis on [-2, 2] uses u = x / 2, so x^2 = 4 u^2 and DB = 1
    let cand = scaled_square(&basis, 4.0);
    let cx = problem.find_counterexample(&cand, 1.0, 0.0).unwrap();
    assert_eq!(cx.family, Family::Generator);
    assert!((cx.violation - 1.0).abs() < 1e-9);
}

#[test]
fn deterministic_hand_certificate_verifies() {
    let sys = fixture("deterministic_1d.json");
    let spec = spec_of(&sys);
    let basis = BasisSet::monomials(sys.state_space(), 2);
    let problem = SynthesisProblem::new(&spec, &sys, &basis, CertificateKind::Common, CegisConfig::quick()).unwrap();
    let cert = cert_from(&problem, scaled_square(&basis, 1.0 / 0.81), 0.0124, 0.0);
    let Verification::Verified(v) = verify_barrier(&cert, &problem) else { panic!("hand certificate rejected") };
    let rec = v.verification.as_ref().unwrap();
    assert!(rec.delta_source < 1e-9);
    assert!(v.bound() <= 0.0124 + 1e-6);

    // understating gamma by 1e-3 must be caught on the source set
    let tight = cert_from(&problem, scaled_square(&basis, 1.0 / 0.81), 0.0124 - 0.0010, 0.0);
    match verify_barrier(&tight, &problem) {
        Verification::CounterexampleFound(cx) => assert_eq!(cx.family, Family::Source),
        other => panic!("expected counterexample, got {other:?}"),
    }
}

#[test]
fn cegis_deterministic_certificate() {
    let sys = fixture("deterministic_1d.json");
    let spec = spec_of(&sys);
    let basis = BasisSet::monomials(sys.state_space(), 2);
    let cert = cegis(&spec, &sys, &basis, 0.05, 0.0, &CegisConfig::quick()).unwrap();
    assert!(cert.is_verified());
    assert!(cert.bound() <= 0.05 + 1e-3);
    assert_eq!(cert.c, 0.0);
}

#[test]
fn cegis_brownian_certificate() {
    let sys = fixture("brownian_1d.json");
    let spec = spec_of(&sys);
    let basis = BasisSet::monomials(sys.state_space(), 2);
    let cert = cegis(&spec, &sys, &basis, 0.05, 0.25, &CegisConfig::quick()).unwrap();
    assert!(cert.is_verified());
    assert!(cert.bound() <= 0.3 + 1e-3, "bound {}", cert.bound());
}

#[test]
fn minimize_deterministic_reaches_analytic_gamma() {
    let sys = fixture("deterministic_1d.json");
    let spec = spec_of(&sys);
    let basis = BasisSet::monomials(sys.state_space(), 2);
    let cert = minimize_bound(&spec, &sys, &basis, CertificateKind::Common, &CegisConfig::default()).unwrap();
    assert!(cert.is_verified());
    assert_eq!(cert.c, 0.0);
    assert!((0.0123..=0.0126).contains(&cert.bound()), "bound {}", cert.bound());
}

#[test]
fn minimize_brownian_is_nontrivial() {
    let sys = fixture("brownian_1d.json");
    let spec = spec_of(&sys);
    let basis = BasisSet::monomials(sys.state_space(), 4);
    let cert = minimize_bound(&spec, &sys, &basis, CertificateKind::Common, &CegisConfig::quick()).unwrap();
    assert!(cert.is_verified());
    assert!(cert.bound() < 1.0);
}

#[test]
fn two_mode_multiple_certificate() {
    let sys = fixture("two_mode_1d.json");
    let spec = spec_of(&sys);
    let basis = BasisSet::monomials(sys.state_space(), 2);
    let cert = cegis_multiple(&spec, &sys, &basis, 0.05, 0.25, &CegisConfig::quick()).unwrap();
    assert_eq!(cert.kind, CertificateKind::Multiple);
    assert_eq!(cert.coefficients.len(), 2);
    assert!(cert.is_verified());
}

#[test]
fn multiple_requires_rates() {
    let sys = fixture("brownian_1d.json");
    let spec = spec_of(&sys);
    let basis = BasisSet::monomials(sys.state_space(), 2);
    assert_eq!(
        cegis_multiple(&spec, &sys, &basis, 0.05, 0.25, &CegisConfig::quick()),
        Err(SynthesisError::MissingRates)
    );
}

#[test]
fn point_source_set() {
    let sys = fixture("brownian_1d.json");
    let mut spec = spec_of(&sys);
    spec.source = Predicate::parse_basic(&["x1^2"], 1).unwrap();
    let basis = BasisSet::monomials(sys.state_space(), 2);
    let cert = cegis(&spec, &sys, &basis, 0.05, 0.25, &CegisConfig::quick()).unwrap();
    assert!(cert.is_verified());
}

#[test]
fn certificate_json_round_trip() {
    let sys = fixture("deterministic_1d.json");
    let spec = spec_of(&sys);
    let basis = BasisSet::monomials(sys.state_space(), 2);
    let cert = cegis(&spec, &sys, &basis, 0.05, 0.0, &CegisConfig::quick()).unwrap();
    let back = BarrierCertificate::from_json(&cert.to_json()).unwrap();
    assert_eq!(back, cert);
    let _ = Sample { x: vec![0.0], source: true, target: false };
}
