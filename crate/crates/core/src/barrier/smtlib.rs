//! SMT-LIB v2 text for external checking of a fixed candidate, plus the
//! feasibility template over unknown coefficients.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use num_bigint::BigInt;
use num_traits::{One, Signed};

use super::{BarrierCertificate, CertificateKind, SynthesisProblem};
use crate::generator::{apply_generator, apply_generator_multi, rational_from_f64};
use crate::system::{Predicate, SetMember};
use crate::{RatPoly, Rational};

fn int(v: &BigInt) -> String {
    if v.is_negative() {
        format!("(- {})", -v)
    } else {
        v.to_string()
    }
}

fn rat(r: &Rational) -> String {
    if r.denom().is_one() {
        int(r.numer())
    } else {
        let body = format!("(/ {} {})", r.numer().abs(), r.denom());
        if r.is_negative() {
            format!("(- {body})")
        } else {
            body
        }
    }
}

fn expr(p: &RatPoly) -> String {
    let terms: Vec<String> = p
        .terms()
        .map(|(m, c)| {
            let mut factors = Vec::new();
            if !c.is_one() || m.is_constant() {
                factors.push(rat(c));
            }
            for (i, &e) in m.exponents().iter().enumerate() {
                for _ in 0..e {
                    factors.push(format!("x{}", i + 1));
                }
            }
            if factors.len() == 1 {
                factors.pop().unwrap()
            } else {
                format!("(* {})", factors.join(" "))
            }
        })
        .collect();
    match terms.len() {
        0 => "0".into(),
        1 => terms.into_iter().next().unwrap(),
        _ => format!("(+ {})", terms.join(" ")),
    }
}

fn member(m: &SetMember) -> String {
    let conj = |b: &crate::system::BasicSet| {
        let parts: Vec<String> = b.inequalities().iter().map(|h| format!("(<= {} 0)", expr(h))).collect();
        match parts.len() {
            0 => "true".to_string(),
            1 => parts.into_iter().next().unwrap(),
            _ => format!("(and {})", parts.join(" ")),
        }
    };
    match m {
        SetMember::Basic(b) => conj(b),
        SetMember::Complement(others) => {
            let parts: Vec<String> = others.iter().map(conj).collect();
            format!("(not (or false {}))", parts.join(" "))
        }
    }
}

fn predicate(p: &Predicate) -> String {
    let parts: Vec<String> = p.members().iter().map(member).collect();
    match parts.len() {
        0 => "false".into(),
        1 => parts.into_iter().next().unwrap(),
        _ => format!("(or {})", parts.join(" ")),
    }
}

fn write_domains(out: &mut String, problem: &SynthesisProblem<'_>, vars: &str, args: &str) {
    let sb = &problem.spec.state_space;
    let bounds: Vec<String> = (0..sb.dim())
        .map(|i| {
            let lo = rat(&rational_from_f64(sb.lower[i]));
            let hi = rat(&rational_from_f64(sb.upper[i]));
            format!("(<= {lo} x{n}) (<= x{n} {hi})", n = i + 1)
        })
        .collect();
    let _ = writeln!(out, "(define-fun inX ({vars}) Bool (and {}))", bounds.join(" "));
    let _ = writeln!(out, "(define-fun inX0 ({vars}) Bool (and (inX {args}) {}))", predicate(&problem.spec.source));
    let _ = writeln!(out, "(define-fun inX1 ({vars}) Bool (and (inX {args}) {}))", predicate(&problem.spec.target));
}

/// Text of the counterexample query for `cert` followed by the template
/// query over unknown coefficients.
pub fn smtlib_text(cert: &BarrierCertificate, problem: &SynthesisProblem<'_>) -> String {
    let n = problem.sys.dimension();
    let xs: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    let vars: String = xs.iter().map(|x| format!("({x} Real)")).collect::<Vec<_>>().join(" ");
    let args = xs.join(" ");
    let bs = cert.polys();
    let gamma = rat(&rational_from_f64(cert.gamma));
    let c = rat(&rational_from_f64(cert.c));
    let modes = problem.sys.modes();
    let mut out = String::new();

    let _ = writeln!(out, "; counterexample query for a fixed candidate: each group is sat iff violated");
    let _ = writeln!(out, "(set-logic QF_NRA)");
    for x in &xs {
        let _ = writeln!(out, "(declare-fun {x} () Real)");
    }
    write_domains(&mut out, problem, &vars, &args);
    for (m, b) in bs.iter().enumerate() {
        let _ = writeln!(out, "(define-fun B{m} ({vars}) Real {})", expr(b));
    }
    for (m, mode) in modes.iter().enumerate() {
        let d = match cert.kind {
            CertificateKind::Common => apply_generator(&bs[0], mode),
            CertificateKind::Multiple => apply_generator_multi(&bs, m, modes, problem.sys.rates().unwrap_or(&[])),
        };
        if let Ok(d) = d {
            let _ = writeln!(out, "(define-fun DB{m} ({vars}) Real {})", expr(&d));
        }
    }
    let groups: [(&str, Box<dyn Fn(usize) -> String>); 3] = [
        ("B >= 0 on X", Box::new(|m| format!("(and (inX {args}) (< (B{m} {args}) 0))"))),
        ("B <= gamma on X0", Box::new(|m| format!("(and (inX0 {args}) (> (B{m} {args}) {gamma}))"))),
        ("B >= 1 on X1", Box::new(|m| format!("(and (inX1 {args}) (< (B{m} {args}) 1))"))),
    ];
    for (title, body) in &groups {
        let _ = writeln!(out, "; {title}");
        for m in 0..bs.len() {
            let _ = writeln!(out, "(push 1)\n(assert {})\n(check-sat)\n(pop 1)", body(m));
        }
    }
    let _ = writeln!(out, "; DB <= c on X");
    for m in 0..modes.len() {
        let _ = writeln!(out, "(push 1)\n(assert (and (inX {args}) (> (DB{m} {args}) {c})))\n(check-sat)\n(pop 1)");
    }

    let _ = writeln!(out, "\n; feasibility template over the coefficients");
    let _ = writeln!(out, "(reset)\n(set-logic NRA)");
    let basis = cert.basis.basis();
    let k = basis.len();
    let copies = bs.len();
    for m in 0..copies {
        for i in 0..k {
            let _ = writeln!(out, "(declare-fun a{m}_{i} () Real)");
        }
    }
    write_domains(&mut out, problem, &vars, &args);
    let combo = |m: usize, polys: &[String]| {
        let parts: Vec<String> = polys.iter().enumerate().map(|(i, p)| format!("(* a{m}_{i} {p})")).collect();
        format!("(+ 0 {})", parts.join(" "))
    };
    let basis_exprs: Vec<String> = basis.polys().iter().map(expr).collect();
    for m in 0..copies {
        let _ = writeln!(out, "(define-fun B{m} ({vars}) Real {})", combo(m, &basis_exprs));
    }
    let zero = RatPoly::zero(n);
    for (m, mode) in modes.iter().enumerate() {
        let own = if copies == 1 { 0 } else { m };
        let gens: Vec<String> =
            basis.polys().iter().map(|b| apply_generator(b, mode).map(|p| expr(&p)).unwrap_or_else(|_| expr(&zero))).collect();
        let mut sum = combo(own, &gens);
        if copies > 1 {
            if let Some(rates) = problem.sys.rates() {
                for (m2, lam) in rates[m].iter().enumerate() {
                    if !lam.is_zero() {
                        sum = format!("(+ {sum} (* {} (B{m2} {args})))", expr(lam));
                    }
                }
            }
        }
        let _ = writeln!(out, "(define-fun DB{m} ({vars}) Real {sum})");
    }
    let mut conj = Vec::new();
    for m in 0..copies {
        conj.push(format!("(=> (inX {args}) (>= (B{m} {args}) 0))"));
        conj.push(format!("(=> (inX0 {args}) (<= (B{m} {args}) {gamma}))"));
        conj.push(format!("(=> (inX1 {args}) (>= (B{m} {args}) 1))"));
    }
    for m in 0..modes.len() {
        conj.push(format!("(=> (inX {args}) (<= (DB{m} {args}) {c}))"));
    }
    let _ = writeln!(out, "(assert (forall ({vars}) (and {})))", conj.join(" "));
    let _ = writeln!(out, "(check-sat)\n(get-model)");
    out
}

pub fn export_smtlib(cert: &BarrierCertificate, problem: &SynthesisProblem<'_>, path: impl AsRef<Path>) -> io::Result<()> {
    std::fs::write(path, smtlib_text(cert, problem))
}
