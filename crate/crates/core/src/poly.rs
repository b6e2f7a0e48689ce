//! Sparse multivariate polynomials, generic over the coefficient ring.
//!
//! Symbolic work (parsing, differentiation, generator application) runs on
//! [`RatPoly`](crate::RatPoly) with exact rational coefficients; hot evaluation
//! loops use [`CompiledPoly`] over a float type.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FromPrimitive, Num, Signed, ToPrimitive};
use thiserror::Error;

use crate::interval::Interval;

/// Coefficient ring of a [`Poly`].
pub trait Coefficient:
    Clone + fmt::Debug + fmt::Display + PartialEq + Num + Signed + FromPrimitive + ToPrimitive + Send + Sync
{
}

impl<T> Coefficient for T where
    T: Clone + fmt::Debug + fmt::Display + PartialEq + Num + Signed + FromPrimitive + ToPrimitive + Send + Sync
{
}

/// Exponent vector. Ordered graded-lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Monomial(e)
    }

    pub fn from_exponents(exps: Vec<u32>) -> Self {
        Monomial(exps)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    fn product(&self, other: &Self) -> Self {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, &e) in self.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                f.write_str("*")?;
            }
            first = false;
            write!(f, "x{}", i + 1)?;
            if e > 1 {
                write!(f, "^{e}")?;
            }
        }
        if first {
            f.write_str("1")?;
        }
        Ok(())
    }
}

/// Polynomial in `nvars` variables `x1..xn`. Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly<C> {
    nvars: usize,
    terms: BTreeMap<Monomial, C>,
}

impl<C: Coefficient> Poly<C> {
    pub fn zero(nvars: usize) -> Self {
        Poly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: C) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(Monomial::one(nvars), c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, C::one())
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        assert!(i < nvars, "variable index {i} out of range for {nvars} variables");
        let mut p = Self::zero(nvars);
        p.add_term(Monomial::var(nvars, i), C::one());
        p
    }

    pub fn from_terms<I>(nvars: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (Vec<u32>, C)>,
    {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            assert_eq!(e.len(), nvars, "exponent vector length");
            p.add_term(Monomial(e), c);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Total degree; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Terms in ascending graded-lex order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &C)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, exps: &[u32]) -> C {
        self.terms
            .get(&Monomial(exps.to_vec()))
            .cloned()
            .unwrap_or_else(C::zero)
    }

    pub fn constant_term(&self) -> C {
        self.coefficient(&vec![0; self.nvars])
    }

    fn add_term(&mut self, m: Monomial, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(v) => {
                *v = v.clone() + c;
                if v.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn scale(&self, c: &C) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        Poly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(m, v)| (m.clone(), v.clone() * c.clone()))
                .filter(|(_, v)| !v.is_zero())
                .collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one(self.nvars);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Exact partial derivative with respect to variable `i` (0-based).
    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (m, c) in &self.terms {
            let e = m.0[i];
            if e == 0 {
                continue;
            }
            let mut dm = m.clone();
            dm.0[i] -= 1;
            let k = C::from_u32(e).expect("exponent representable in coefficient ring");
            out.add_term(dm, c.clone() * k);
        }
        out
    }

    /// Evaluation in the coefficient ring itself (exact for rationals).
    pub fn eval_exact(&self, x: &[C]) -> C {
        assert_eq!(x.len(), self.nvars);
        let mut acc = C::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (xi, &e) in x.iter().zip(&m.0) {
                for _ in 0..e {
                    t = t * xi.clone();
                }
            }
            acc = acc + t;
        }
        acc
    }

    pub fn eval<T: Float>(&self, x: &[T]) -> T {
        assert_eq!(x.len(), self.nvars);
        let mut acc = T::zero();
        for (m, c) in &self.terms {
            let mut t = T::from(c.clone()).expect("coefficient representable as float");
            for (xi, &e) in x.iter().zip(&m.0) {
                if e > 0 {
                    t = t * xi.powi(e as i32);
                }
            }
            acc = acc + t;
        }
        acc
    }

    /// Natural interval extension over the box `x`.
    pub fn eval_interval<T: Float>(&self, x: &[Interval<T>]) -> Interval<T> {
        assert_eq!(x.len(), self.nvars);
        let mut acc = Interval::point(T::zero());
        for (m, c) in &self.terms {
            let mut t = Interval::point(T::one());
            for (xi, &e) in x.iter().zip(&m.0) {
                if e > 0 {
                    t = t * xi.powi(e);
                }
            }
            acc = acc + t.scale(T::from(c.clone()).expect("coefficient representable as float"));
        }
        acc
    }

    pub fn map_coeffs<D: Coefficient>(&self, f: impl Fn(&C) -> D) -> Poly<D> {
        let mut out = Poly::zero(self.nvars);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), f(c));
        }
        out
    }

    pub fn to_float<T: Float + Coefficient>(&self) -> Poly<T> {
        self.map_coeffs(|c| T::from(c.clone()).expect("coefficient representable as float"))
    }

    pub fn compile<T: Float>(&self) -> CompiledPoly<T> {
        CompiledPoly::new(self)
    }
}

impl<C: Coefficient> Add for &Poly<C> {
    type Output = Poly<C>;
    fn add(self, rhs: &Poly<C>) -> Poly<C> {
        assert_eq!(self.nvars, rhs.nvars, "variable count mismatch");
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl<C: Coefficient> Sub for &Poly<C> {
    type Output = Poly<C>;
    fn sub(self, rhs: &Poly<C>) -> Poly<C> {
        assert_eq!(self.nvars, rhs.nvars, "variable count mismatch");
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl<C: Coefficient> Mul for &Poly<C> {
    type Output = Poly<C>;
    fn mul(self, rhs: &Poly<C>) -> Poly<C> {
        assert_eq!(self.nvars, rhs.nvars, "variable count mismatch");
        let mut out = Poly::zero(self.nvars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.product(mb), ca.clone() * cb.clone());
            }
        }
        out
    }
}

impl<C: Coefficient> Neg for &Poly<C> {
    type Output = Poly<C>;
    fn neg(self) -> Poly<C> {
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl<C: Coefficient> $tr for Poly<C> {
            type Output = Poly<C>;
            fn $method(self, rhs: Poly<C>) -> Poly<C> {
                (&self).$method(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl<C: Coefficient> Neg for Poly<C> {
    type Output = Poly<C>;
    fn neg(self) -> Poly<C> {
        -(&self)
    }
}

impl<C: Coefficient> fmt::Display for Poly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            match (i, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let a = c.abs();
            if m.is_constant() {
                write!(f, "{a}")?;
            } else if a.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{a}*{m}")?;
            }
        }
        Ok(())
    }
}

/// Cached integer powers of a point, shared across many polynomial evaluations.
#[derive(Clone, Debug)]
pub struct PowerTable<T> {
    pows: Vec<Vec<T>>,
}

impl<T: Float> PowerTable<T> {
    pub fn new(x: &[T], max_degree: u32) -> Self {
        let pows = x
            .iter()
            .map(|&xi| {
                let mut row = Vec::with_capacity(max_degree as usize + 1);
                let mut acc = T::one();
                row.push(acc);
                for _ in 0..max_degree {
                    acc = acc * xi;
                    row.push(acc);
                }
                row
            })
            .collect();
        PowerTable { pows }
    }

    #[inline]
    fn get(&self, var: usize, e: u32) -> T {
        self.pows[var][e as usize]
    }
}

/// Flattened float copy of a polynomial for fast repeated evaluation.
#[derive(Clone, Debug)]
pub struct CompiledPoly<T> {
    nvars: usize,
    degree: u32,
    terms: Vec<(T, Vec<(usize, u32)>)>,
}

impl<T: Float> CompiledPoly<T> {
    pub fn new<C: Coefficient>(p: &Poly<C>) -> Self {
        let terms = p
            .terms()
            .map(|(m, c)| {
                let vars = m
                    .exponents()
                    .iter()
                    .enumerate()
                    .filter(|(_, &e)| e > 0)
                    .map(|(i, &e)| (i, e))
                    .collect();
                (T::from(c.clone()).expect("coefficient representable as float"), vars)
            })
            .collect();
        CompiledPoly { nvars: p.nvars(), degree: p.degree(), terms }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, x: &[T]) -> T {
        self.eval_with(&PowerTable::new(x, self.degree))
    }

    /// Evaluate using a table built with at least this polynomial's degree.
    pub fn eval_with(&self, table: &PowerTable<T>) -> T {
        let mut acc = T::zero();
        for (c, vars) in &self.terms {
            let mut t = *c;
            for &(i, e) in vars {
                t = t * table.get(i, e);
            }
            acc = acc + t;
        }
        acc
    }

    /// Sum of absolute term magnitudes at `x`; scales floating-point error estimates.
    pub fn abs_mass_with(&self, table: &PowerTable<T>) -> T {
        let mut acc = T::zero();
        for (c, vars) in &self.terms {
            let mut t = c.abs();
            for &(i, e) in vars {
                t = t * table.get(i, e).abs();
            }
            acc = acc + t;
        }
        acc
    }

    pub fn eval_interval(&self, x: &[Interval<T>]) -> Interval<T> {
        let mut acc = Interval::point(T::zero());
        for (c, vars) in &self.terms {
            let mut t = Interval::point(T::one());
            for &(i, e) in vars {
                t = t * x[i].powi(e);
            }
            acc = acc + t.scale(*c);
        }
        acc
    }
}

/// Range enclosure of a polynomial over boxes: the natural interval
/// extension intersected with the mean-value form around the box centre.
#[derive(Clone, Debug)]
pub struct RangeBound<T> {
    poly: CompiledPoly<T>,
    gradient: Vec<CompiledPoly<T>>,
}

impl<T: Float> RangeBound<T> {
    pub fn new<C: Coefficient>(p: &Poly<C>) -> Self {
        RangeBound {
            poly: CompiledPoly::new(p),
            gradient: (0..p.nvars()).map(|i| CompiledPoly::new(&p.derivative(i))).collect(),
        }
    }

    pub fn poly(&self) -> &CompiledPoly<T> {
        &self.poly
    }

    pub fn eval(&self, x: &[T]) -> T {
        self.poly.eval(x)
    }

    pub fn grad_at(&self, x: &[T]) -> Vec<T> {
        self.gradient.iter().map(|g| g.eval(x)).collect()
    }

    pub fn natural(&self, cell: &[Interval<T>]) -> Interval<T> {
        self.poly.eval_interval(cell)
    }

    pub fn grad_ranges(&self, cell: &[Interval<T>]) -> Vec<Interval<T>> {
        self.gradient
            .iter()
            .map(|g| if g.is_zero() { Interval::point(T::zero()) } else { g.eval_interval(cell) })
            .collect()
    }

    pub fn range(&self, cell: &[Interval<T>]) -> Interval<T> {
        let natural = self.natural(cell);
        let centre: Vec<T> = cell.iter().map(Interval::mid).collect();
        let half = T::from(0.5).unwrap();
        let spread = self
            .grad_ranges(cell)
            .iter()
            .zip(cell)
            .fold(T::zero(), |acc, (g, iv)| acc + g.mag() * half * iv.width());
        let mv = Interval::around(self.poly.eval(&centre), spread);
        Interval::new(natural.lo.max(mv.lo), natural.hi.min(mv.hi))
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
#[error("polynomial syntax error at column {pos}: {message}")]
pub struct PolyParseError {
    pub pos: usize,
    pub message: String,
}

impl Poly<BigRational> {
    /// Parse `+ - * / ^` expressions over decimal or integer literals and
    /// variables `x1..xn`. Division is only allowed by constants.
    pub fn parse(text: &str, nvars: usize) -> Result<Self, PolyParseError> {
        let mut p = PolyParser { src: text.as_bytes(), pos: 0, nvars };
        let out = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(out)
    }
}

struct PolyParser<'a> {
    src: &'a [u8],
    pos: usize,
    nvars: usize,
}

type RP = Poly<BigRational>;

impl PolyParser<'_> {
    fn err(&self, msg: &str) -> PolyParseError {
        PolyParseError { pos: self.pos + 1, message: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<RP, PolyParseError> {
        let mut acc = self.term()?;
        while let Some(c) = self.peek() {
            match c {
                b'+' => {
                    self.pos += 1;
                    acc = &acc + &self.term()?;
                }
                b'-' => {
                    self.pos += 1;
                    acc = &acc - &self.term()?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<RP, PolyParseError> {
        let mut acc = self.unary()?;
        while let Some(c) = self.peek() {
            match c {
                b'*' => {
                    self.pos += 1;
                    acc = &acc * &self.unary()?;
                }
                b'/' => {
                    self.pos += 1;
                    let at = self.pos;
                    let d = self.unary()?;
                    if d.degree() > 0 || d.is_zero() {
                        return Err(PolyParseError {
                            pos: at + 1,
                            message: "division only by a nonzero constant".into(),
                        });
                    }
                    let inv = d.constant_term().recip();
                    acc = acc.scale(&inv);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<RP, PolyParseError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<RP, PolyParseError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(self.err("expected non-negative integer exponent"));
            }
            let k: u32 = std::str::from_utf8(&self.src[start..self.pos])
                .unwrap()
                .parse()
                .map_err(|_| self.err("exponent too large"))?;
            return Ok(base.pow(k));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<RP, PolyParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(b'x') => {
                self.pos += 1;
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let idx: usize = std::str::from_utf8(&self.src[start..self.pos])
                    .unwrap()
                    .parse()
                    .map_err(|_| self.err("expected variable index after 'x'"))?;
                if idx == 0 || idx > self.nvars {
                    self.pos = start - 1;
                    return Err(self.err(&format!(
                        "variable x{idx} out of range (x1..x{})",
                        self.nvars
                    )));
                }
                Ok(RP::var(self.nvars, idx - 1))
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let v = self.number()?;
                Ok(RP::constant(self.nvars, v))
            }
            Some(_) => Err(self.err("unexpected character")),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<BigRational, PolyParseError> {
        let start = self.pos;
        let mut digits = String::new();
        let mut frac_len = 0u32;
        let mut seen_dot = false;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            if c.is_ascii_digit() {
                digits.push(c as char);
                if seen_dot {
                    frac_len += 1;
                }
            } else if c == b'.' && !seen_dot {
                seen_dot = true;
            } else {
                break;
            }
            self.pos += 1;
        }
        if digits.is_empty() {
            self.pos = start;
            return Err(self.err("malformed number"));
        }
        let mut exp10: i64 = -(frac_len as i64);
        if self.pos < self.src.len() && (self.src[self.pos] == b'e' || self.src[self.pos] == b'E') {
            self.pos += 1;
            let mut neg = false;
            if self.pos < self.src.len() && (self.src[self.pos] == b'-' || self.src[self.pos] == b'+') {
                neg = self.src[self.pos] == b'-';
                self.pos += 1;
            }
            let s = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            let e: i64 = std::str::from_utf8(&self.src[s..self.pos])
                .unwrap()
                .parse()
                .map_err(|_| self.err("malformed exponent"))?;
            exp10 += if neg { -e } else { e };
        }
        let mantissa: BigInt = digits.parse().expect("digits");
        let ten = BigInt::from(10);
        let scale = num_traits::pow(ten, exp10.unsigned_abs() as usize);
        Ok(if exp10 >= 0 {
            BigRational::from_integer(mantissa * scale)
        } else {
            BigRational::new(mantissa, scale)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::RatPoly;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn parses_disk_inequality() {
        let p = RatPoly::parse("(x1+5)^2 + x2^2 - 2.5", 2).unwrap();
        // x1^2 + 10 x1 + x2^2 + 22.5
        assert_eq!(p.coefficient(&[2, 0]), q(1, 1));
        assert_eq!(p.coefficient(&[1, 0]), q(10, 1));
        assert_eq!(p.coefficient(&[0, 2]), q(1, 1));
        assert_eq!(p.constant_term(), q(45, 2));
        assert_eq!(p.num_terms(), 4);
    }

    #[test]
    fn decimal_and_rational_literals_are_exact() {
        let p = RatPoly::parse("-0.1*x2^2", 2).unwrap();
        assert_eq!(p.coefficient(&[0, 2]), q(-1, 10));
        let r = RatPoly::parse("1/3*x1 + 2.5e-1", 1).unwrap();
        assert_eq!(r.coefficient(&[1]), q(1, 3));
        assert_eq!(r.constant_term(), q(1, 4));
    }

    #[test]
    fn display_is_canonical_and_reparses() {
        let p = RatPoly::parse("x2*x1 - 0.1*x2^2 + 3 - x1^2", 2).unwrap();
        let s = p.to_string();
        assert_eq!(s, "-x1^2 + x1*x2 - 1/10*x2^2 + 3");
        assert_eq!(RatPoly::parse(&s, 2).unwrap(), p);
        assert_eq!(RatPoly::zero(2).to_string(), "0");
    }

    #[test]
    fn parse_errors_carry_position() {
        let e = RatPoly::parse("x1 + x3", 2).unwrap_err();
        assert_eq!(e.pos, 6);
        assert!(RatPoly::parse("x1 / x2", 2).is_err());
        assert!(RatPoly::parse("x1 +", 2).is_err());
        assert!(RatPoly::parse("x1^", 2).is_err());
        assert!(RatPoly::parse("(x1", 2).is_err());
    }

    #[test]
    fn derivative_power_rule() {
        let p = RatPoly::parse("x1^3*x2 + 4*x2", 2).unwrap();
        assert_eq!(p.derivative(0), RatPoly::parse("3*x1^2*x2", 2).unwrap());
        assert_eq!(p.derivative(1), RatPoly::parse("x1^3 + 4", 2).unwrap());
        assert!(RatPoly::one(2).derivative(0).is_zero());
    }

    #[test]
    fn compiled_matches_direct_evaluation() {
        let p = RatPoly::parse("(x1 - 0.5)^4 - 3*x1*x2^3 + 7", 2).unwrap();
        let c: CompiledPoly<f64> = p.compile();
        for x in [[0.0, 0.0], [1.5, -2.0], [-3.25, 0.75]] {
            let a = p.eval(&x);
            let b = c.eval(&x);
            assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn interval_extension_encloses_samples() {
        let p = RatPoly::parse("x1^2 - x1*x2 + x2^3", 2).unwrap();
        let bx = [Interval::new(-1.0, 0.5), Interval::new(0.25, 2.0)];
        let r = p.eval_interval(&bx);
        for i in 0..=10 {
            for j in 0..=10 {
                let x = [-1.0 + 1.5 * i as f64 / 10.0, 0.25 + 1.75 * j as f64 / 10.0];
                assert!(r.contains(p.eval(&x)));
            }
        }
    }

    #[test]
    fn float_coefficient_ring() {
        let p: Poly<f64> = Poly::from_terms(1, vec![(vec![2], 1.5), (vec![0], -1.0)]);
        assert_eq!(p.derivative(0), Poly::from_terms(1, vec![(vec![1], 3.0)]));
        assert_eq!(p.eval(&[2.0]), 5.0);
    }
}
