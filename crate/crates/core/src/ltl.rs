//! Safe-LTL formulas over finite traces: syntax, parsing, negation into
//! positive normal form, and the finite-trace semantics.
//!
//! Concrete grammar (loosest binding last):
//!
//! ```text
//! formula := or
//! or      := and ('|' and)*
//! and     := until ('&' until)*
//! until   := unary ('U' until)?          right associative
//! unary   := '!' unary | 'G' unary | 'F' unary | atom
//! atom    := 'true' | ident | '(' formula ')'
//! ```
//!
//! `X` (next) is recognised and rejected.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FormulaError {
    #[error("syntax error at column {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unsupported operator '{op}' at column {pos}: next is excluded from the safe fragment")]
    UnsupportedOperator { op: String, pos: usize },
    #[error("unknown proposition '{0}'")]
    UnknownProposition(String),
    #[error("finite words must be non-empty")]
    EmptyWord,
    #[error("invalid proposition name '{0}'")]
    InvalidProposition(String),
}

/// Atomic proposition, identified by name.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Proposition(Arc<str>);

impl Proposition {
    pub fn new(name: &str) -> Result<Self, FormulaError> {
        let mut chars = name.chars();
        let ok = match chars.next() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
            }
            _ => false,
        };
        if !ok || is_keyword(name) {
            return Err(FormulaError::InvalidProposition(name.to_string()));
        }
        Ok(Proposition(Arc::from(name)))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Proposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Proposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn is_keyword(s: &str) -> bool {
    matches!(s, "G" | "F" | "U" | "X" | "true")
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    Atom(Proposition),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Always(Box<Formula>),
    Eventually(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn atom(name: &str) -> Result<Self, FormulaError> {
        Ok(Formula::Atom(Proposition::new(name)?))
    }

    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn always(f: Formula) -> Self {
        Formula::Always(Box::new(f))
    }

    pub fn eventually(f: Formula) -> Self {
        Formula::Eventually(Box::new(f))
    }

    pub fn until(a: Formula, b: Formula) -> Self {
        Formula::Until(Box::new(a), Box::new(b))
    }

    pub fn parse(text: &str) -> Result<Self, FormulaError> {
        let tokens = lex(text)?;
        let mut p = Parser { tokens, pos: 0, len: text.len() };
        let f = p.or()?;
        if let Some(t) = p.tokens.get(p.pos) {
            return Err(FormulaError::Syntax { pos: t.pos, message: "unexpected trailing input".into() });
        }
        Ok(f)
    }

    /// Propositions mentioned in the formula.
    pub fn atoms(&self) -> BTreeSet<Proposition> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<Proposition>) {
        match self {
            Formula::True => {}
            Formula::Atom(p) => {
                out.insert(p.clone());
            }
            Formula::Not(a) | Formula::Always(a) | Formula::Eventually(a) => a.collect_atoms(out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    /// True iff negation appears only directly above atoms (or `true`) and
    /// the only temporal operator is Always.
    pub fn is_safe_fragment(&self) -> bool {
        match self {
            Formula::True | Formula::Atom(_) => true,
            Formula::Not(a) => matches!(**a, Formula::Atom(_) | Formula::True),
            Formula::And(a, b) | Formula::Or(a, b) => a.is_safe_fragment() && b.is_safe_fragment(),
            Formula::Always(a) => a.is_safe_fragment(),
            Formula::Eventually(_) | Formula::Until(..) => false,
        }
    }

    /// Whether the formula is in positive normal form (negation only on atoms or `true`).
    pub fn is_pnf(&self) -> bool {
        match self {
            Formula::True | Formula::Atom(_) => true,
            Formula::Not(a) => matches!(**a, Formula::Atom(_) | Formula::True),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(a, b) => a.is_pnf() && b.is_pnf(),
            Formula::Always(a) | Formula::Eventually(a) => a.is_pnf(),
        }
    }

    /// The negation of `self`, pushed into positive normal form.
    pub fn negate_to_pnf(&self) -> Formula {
        push_negation(self, true)
    }

    /// `self` rewritten into positive normal form without negating it.
    pub fn to_pnf(&self) -> Formula {
        push_negation(self, false)
    }

    /// Finite-trace satisfaction at position 0.
    pub fn evaluate(&self, word: &FiniteWord) -> bool {
        self.holds_at(word.letters(), 0)
    }

    /// As [`evaluate`](Self::evaluate), rejecting letters or atoms outside `alphabet`.
    pub fn evaluate_checked(
        &self,
        word: &FiniteWord,
        alphabet: &BTreeSet<Proposition>,
    ) -> Result<bool, FormulaError> {
        if let Some(p) = word.letters().iter().find(|p| !alphabet.contains(*p)) {
            return Err(FormulaError::UnknownProposition(p.to_string()));
        }
        if let Some(p) = self.atoms().into_iter().find(|p| !alphabet.contains(p)) {
            return Err(FormulaError::UnknownProposition(p.to_string()));
        }
        Ok(self.evaluate(word))
    }

    fn holds_at(&self, w: &[Proposition], i: usize) -> bool {
        let n = w.len();
        match self {
            Formula::True => true,
            Formula::Atom(p) => w[i] == *p,
            Formula::Not(a) => !a.holds_at(w, i),
            Formula::And(a, b) => a.holds_at(w, i) && b.holds_at(w, i),
            Formula::Or(a, b) => a.holds_at(w, i) || b.holds_at(w, i),
            Formula::Always(a) => (i..n).all(|j| a.holds_at(w, j)),
            Formula::Eventually(a) => (i..n).any(|j| a.holds_at(w, j)),
            Formula::Until(a, b) => {
                for j in i..n {
                    if b.holds_at(w, j) {
                        return true;
                    }
                    if !a.holds_at(w, j) {
                        return false;
                    }
                }
                false
            }
        }
    }
}

fn push_negation(f: &Formula, negate: bool) -> Formula {
    use Formula::*;
    match (f, negate) {
        (True, false) => True,
        (True, true) => Formula::not(True),
        (Atom(p), false) => Atom(p.clone()),
        (Atom(p), true) => Formula::not(Atom(p.clone())),
        (Not(a), neg) => push_negation(a, !neg),
        (And(a, b), false) => Formula::and(push_negation(a, false), push_negation(b, false)),
        (And(a, b), true) => Formula::or(push_negation(a, true), push_negation(b, true)),
        (Or(a, b), false) => Formula::or(push_negation(a, false), push_negation(b, false)),
        (Or(a, b), true) => Formula::and(push_negation(a, true), push_negation(b, true)),
        (Always(a), false) => Formula::always(push_negation(a, false)),
        (Always(a), true) => Formula::eventually(push_negation(a, true)),
        (Eventually(a), false) => Formula::eventually(push_negation(a, false)),
        (Eventually(a), true) => Formula::always(push_negation(a, true)),
        (Until(a, b), false) => Formula::until(push_negation(a, false), push_negation(b, false)),
        // !(a U b) == G !b | (!b U (!a & !b)) on finite traces
        (Until(a, b), true) => {
            let na = push_negation(a, true);
            let nb = push_negation(b, true);
            Formula::or(
                Formula::always(nb.clone()),
                Formula::until(nb.clone(), Formula::and(na, nb)),
            )
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::Atom(p) => write!(f, "{p}"),
            Formula::Not(a) => write!(f, "!{a}"),
            Formula::Always(a) => write!(f, "G {a}"),
            Formula::Eventually(a) => write!(f, "F {a}"),
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Or(a, b) => write!(f, "({a} | {b})"),
            Formula::Until(a, b) => write!(f, "({a} U {b})"),
        }
    }
}

/// Non-empty sequence of single-proposition letters.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FiniteWord(Vec<Proposition>);

impl FiniteWord {
    pub fn new(letters: Vec<Proposition>) -> Result<Self, FormulaError> {
        if letters.is_empty() {
            return Err(FormulaError::EmptyWord);
        }
        Ok(FiniteWord(letters))
    }

    pub fn from_names(names: &[&str]) -> Result<Self, FormulaError> {
        let letters = names.iter().map(|n| Proposition::new(n)).collect::<Result<Vec<_>, _>>()?;
        Self::new(letters)
    }

    pub fn letters(&self) -> &[Proposition] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl fmt::Display for FiniteWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str(")")
    }
}

/// All words over `alphabet` with length in `1..=max_len`, shortest first.
pub fn enumerate_words(alphabet: &[Proposition], max_len: usize) -> Vec<FiniteWord> {
    let mut out = Vec::new();
    let mut layer: Vec<Vec<Proposition>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(layer.len() * alphabet.len());
        for w in &layer {
            for p in alphabet {
                let mut v = w.clone();
                v.push(p.clone());
                next.push(v);
            }
        }
        out.extend(next.iter().cloned().map(FiniteWord));
        layer = next;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LParen,
    RParen,
    Not,
    And,
    Or,
    Always,
    Eventually,
    Until,
    Next,
    True,
    Ident(String),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    pos: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, FormulaError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let pos = i + 1;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let single = match c {
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b'!' => Some(Tok::Not),
            b'&' => Some(Tok::And),
            b'|' => Some(Tok::Or),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Token { tok, pos });
            i += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &text[start..i];
            let tok = match word {
                "G" => Tok::Always,
                "F" => Tok::Eventually,
                "U" => Tok::Until,
                "X" => Tok::Next,
                "true" => Tok::True,
                _ => Tok::Ident(word.to_string()),
            };
            out.push(Token { tok, pos });
            continue;
        }
        return Err(FormulaError::Syntax { pos, message: format!("unexpected character '{}'", c as char) });
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn here(&self) -> usize {
        self.tokens.get(self.pos).map(|t| t.pos).unwrap_or(self.len + 1)
    }

    fn or(&mut self) -> Result<Formula, FormulaError> {
        let mut acc = self.and()?;
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            acc = Formula::or(acc, self.and()?);
        }
        Ok(acc)
    }

    fn and(&mut self) -> Result<Formula, FormulaError> {
        let mut acc = self.until()?;
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            acc = Formula::and(acc, self.until()?);
        }
        Ok(acc)
    }

    fn until(&mut self) -> Result<Formula, FormulaError> {
        let lhs = self.unary()?;
        if self.peek() == Some(&Tok::Until) {
            self.pos += 1;
            let rhs = self.until()?;
            return Ok(Formula::until(lhs, rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, FormulaError> {
        let pos = self.here();
        match self.peek().cloned() {
            Some(Tok::Not) => {
                self.pos += 1;
                Ok(Formula::not(self.unary()?))
            }
            Some(Tok::Always) => {
                self.pos += 1;
                Ok(Formula::always(self.unary()?))
            }
            Some(Tok::Eventually) => {
                self.pos += 1;
                Ok(Formula::eventually(self.unary()?))
            }
            Some(Tok::Next) => Err(FormulaError::UnsupportedOperator { op: "X".into(), pos }),
            Some(Tok::True) => {
                self.pos += 1;
                Ok(Formula::True)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                Formula::atom(&name)
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let f = self.or()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(FormulaError::Syntax { pos: self.here(), message: "expected ')'".into() });
                }
                self.pos += 1;
                Ok(f)
            }
            Some(t) => Err(FormulaError::Syntax { pos, message: format!("unexpected token {t:?}") }),
            None => Err(FormulaError::Syntax { pos, message: "unexpected end of input".into() }),
        }
    }
}
