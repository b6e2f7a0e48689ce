//! Exact infinitesimal generator of polynomial functions along a mode's
//! diffusion, and the polynomial template used for barrier candidates.

use num_rational::BigRational;
use num_traits::{FromPrimitive, One};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::{Coefficient, Monomial, Poly};
use crate::system::{Mode, StateBox};
use crate::RatPoly;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GeneratorError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("expected one function per mode ({expected}), got {got}")]
    MissingMode { expected: usize, got: usize },
}

pub fn gradient<C: Coefficient>(b: &Poly<C>) -> Vec<Poly<C>> {
    (0..b.nvars()).map(|i| b.derivative(i)).collect()
}

pub fn hessian<C: Coefficient>(b: &Poly<C>) -> Vec<Vec<Poly<C>>> {
    let g = gradient(b);
    g.iter().map(|gi| (0..b.nvars()).map(|j| gi.derivative(j)).collect()).collect()
}

/// `grad B . f + 1/2 Tr(g^T H g)` for drift `f` (length n) and diffusion `g` (n x r).
pub fn generator<C: Coefficient>(
    b: &Poly<C>,
    drift: &[Poly<C>],
    diffusion: &[Vec<Poly<C>>],
) -> Result<Poly<C>, GeneratorError> {
    let n = b.nvars();
    if drift.len() != n || diffusion.len() != n {
        return Err(GeneratorError::DimensionMismatch(format!(
            "function has {n} variables, drift {} entries, diffusion {} rows",
            drift.len(),
            diffusion.len()
        )));
    }
    if drift.iter().chain(diffusion.iter().flatten()).any(|p| p.nvars() != n) {
        return Err(GeneratorError::DimensionMismatch("polynomials over different variable counts".into()));
    }
    let r = diffusion.first().map_or(0, Vec::len);
    if diffusion.iter().any(|row| row.len() != r) {
        return Err(GeneratorError::DimensionMismatch("ragged diffusion matrix".into()));
    }
    let grad = gradient(b);
    let mut out = Poly::zero(n);
    for (gi, fi) in grad.iter().zip(drift) {
        if !gi.is_zero() && !fi.is_zero() {
            out = &out + &(gi * fi);
        }
    }
    // Tr(g^T H g) = sum_k sum_{i,j} g_ik H_ij g_jk
    let hess: Vec<Vec<Poly<C>>> = grad.iter().map(|gi| (0..n).map(|j| gi.derivative(j)).collect()).collect();
    let mut trace = Poly::zero(n);
    for k in 0..r {
        for i in 0..n {
            if diffusion[i][k].is_zero() {
                continue;
            }
            for j in 0..n {
                if hess[i][j].is_zero() || diffusion[j][k].is_zero() {
                    continue;
                }
                trace = &trace + &(&(&diffusion[i][k] * &hess[i][j]) * &diffusion[j][k]);
            }
        }
    }
    let half = C::one() / (C::one() + C::one());
    Ok(&out + &trace.scale(&half))
}

/// Generator of `b` along mode `m`.
pub fn apply_generator(b: &RatPoly, m: &Mode) -> Result<RatPoly, GeneratorError> {
    generator(b, &m.drift, &m.diffusion)
}

/// Generator of the per-mode family `bs` for mode index `m`, including the
/// rate coupling `sum_m' lambda_mm' B_m'`.
pub fn apply_generator_multi(
    bs: &[RatPoly],
    m: usize,
    modes: &[Mode],
    rates: &[Vec<RatPoly>],
) -> Result<RatPoly, GeneratorError> {
    if bs.len() != modes.len() {
        return Err(GeneratorError::MissingMode { expected: modes.len(), got: bs.len() });
    }
    if rates.len() != modes.len() || rates.iter().any(|row| row.len() != modes.len()) {
        return Err(GeneratorError::DimensionMismatch("rate matrix does not match the mode count".into()));
    }
    let mut out = apply_generator(&bs[m], &modes[m])?;
    for (lam, b) in rates[m].iter().zip(bs) {
        if !lam.is_zero() && !b.is_zero() {
            out = &out + &(lam * b);
        }
    }
    Ok(out)
}

/// Exact rational equal to a finite double.
pub fn rational_from_f64(v: f64) -> BigRational {
    BigRational::from_f64(v).expect("finite value")
}

/// Monomials up to a total degree in the coordinates `u_i = (x_i - c_i) / h_i`
/// that map the state box onto `[-1, 1]^n`, expanded exactly in `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisSet {
    degree: u32,
    center: Vec<f64>,
    scale: Vec<f64>,
    exponents: Vec<Monomial>,
    polys: Vec<RatPoly>,
}

impl BasisSet {
    pub fn monomials(state_space: &StateBox, degree: u32) -> Self {
        Self::with_normalization(state_space.center(), state_space.half_widths(), degree)
    }

    /// Plain monomials in `x` (no normalization).
    pub fn raw_monomials(nvars: usize, degree: u32) -> Self {
        Self::with_normalization(vec![0.0; nvars], vec![1.0; nvars], degree)
    }

    pub fn with_normalization(center: Vec<f64>, scale: Vec<f64>, degree: u32) -> Self {
        let n = center.len();
        assert_eq!(n, scale.len());
        assert!(scale.iter().all(|&s| s > 0.0), "scales must be positive");
        let exponents = monomials_up_to(n, degree);
        let us: Vec<RatPoly> = (0..n)
            .map(|i| {
                let shift = RatPoly::constant(n, rational_from_f64(center[i]));
                let inv = BigRational::one() / rational_from_f64(scale[i]);
                (&RatPoly::var(n, i) - &shift).scale(&inv)
            })
            .collect();
        let polys = exponents
            .iter()
            .map(|m| {
                m.exponents()
                    .iter()
                    .enumerate()
                    .fold(RatPoly::one(n), |acc, (i, &e)| if e == 0 { acc } else { &acc * &us[i].pow(e) })
            })
            .collect();
        BasisSet { degree, center, scale, exponents, polys }
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    pub fn nvars(&self) -> usize {
        self.center.len()
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn polys(&self) -> &[RatPoly] {
        &self.polys
    }

    pub fn exponents(&self) -> &[Monomial] {
        &self.exponents
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    /// `sum_i a_i b_i(x)` as an exact polynomial.
    pub fn combine(&self, coeffs: &[f64]) -> RatPoly {
        assert_eq!(coeffs.len(), self.len(), "coefficient count must match basis size");
        let mut out = RatPoly::zero(self.nvars());
        for (a, b) in coeffs.iter().zip(&self.polys) {
            if *a != 0.0 {
                out = &out + &b.scale(&rational_from_f64(*a));
            }
        }
        out
    }
}

/// All exponent vectors of total degree `<= degree`, in monomial order.
pub fn monomials_up_to(nvars: usize, degree: u32) -> Vec<Monomial> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; nvars];
    fn rec(i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Monomial>) {
        if i == cur.len() {
            out.push(Monomial::from_exponents(cur.clone()));
            return;
        }
        for e in 0..=left {
            cur[i] = e;
            rec(i + 1, left - e, cur, out);
        }
        cur[i] = 0;
    }
    rec(0, degree, &mut cur, &mut out);
    out.sort();
    out
}

/// Barrier template with fixed coefficients; one coefficient vector per mode
/// for multiple certificates, a single vector for a common one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateBarrier {
    pub coefficients: Vec<Vec<f64>>,
}

impl CandidateBarrier {
    pub fn common(coeffs: Vec<f64>) -> Self {
        CandidateBarrier { coefficients: vec![coeffs] }
    }

    pub fn is_common(&self) -> bool {
        self.coefficients.len() == 1
    }

    /// Exact polynomial for mode `m` (the shared one for a common certificate).
    pub fn poly(&self, basis: &BasisSet, m: usize) -> RatPoly {
        let k = if self.is_common() { 0 } else { m };
        basis.combine(&self.coefficients[k])
    }

    pub fn polys(&self, basis: &BasisSet) -> Vec<RatPoly> {
        self.coefficients.iter().map(|c| basis.combine(c)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rp(s: &str, n: usize) -> RatPoly {
        RatPoly::parse(s, n).unwrap()
    }

    fn mode(drift: &[&str], diffusion: &[&[&str]]) -> Mode {
        let n = drift.len();
        Mode {
            id: "m".into(),
            drift: drift.iter().map(|s| rp(s, n)).collect(),
            diffusion: diffusion.iter().map(|row| row.iter().map(|s| rp(s, n)).collect()).collect(),
        }
    }

    #[test]
    fn gradients() {
        assert_eq!(gradient(&rp("x1^2", 2)), vec![rp("2*x1", 2), rp("0", 2)]);
        assert_eq!(gradient(&rp("x1*x2", 2)), vec![rp("x2", 2), rp("x1", 2)]);
        assert_eq!(gradient(&rp("1", 2)), vec![rp("0", 2), rp("0", 2)]);
    }

    #[test]
    fn hessians() {
        let h = hessian(&rp("x1^2 + x2^2", 2));
        assert_eq!(h, vec![vec![rp("2", 2), rp("0", 2)], vec![rp("0", 2), rp("2", 2)]]);
        let h = hessian(&rp("x1*x2", 2));
        assert_eq!(h[0][1], rp("1", 2));
        assert_eq!(h[1][0], rp("1", 2));
        assert!(hessian(&rp("3*x1 - x2 + 7", 2)).iter().flatten().all(Poly::is_zero));
    }

    #[test]
    fn generator_examples() {
        let ou = mode(&["-x1", "-x2"], &[&["1", "0"], &["0", "1"]]);
        assert_eq!(apply_generator(&rp("x1^2 + x2^2", 2), &ou).unwrap(), rp("-2*x1^2 - 2*x2^2 + 2", 2));
        let any = mode(&["x1*x2 - 3", "x2^3"], &[&["x1", "1"], &["0", "x2"]]);
        assert_eq!(apply_generator(&rp("x1", 2), &any).unwrap(), rp("x1*x2 - 3", 2));
        let bm = mode(&["0", "0"], &[&["1", "0"], &["0", "1"]]);
        assert_eq!(apply_generator(&rp("x1^2", 2), &bm).unwrap(), rp("1", 2));
    }

    #[test]
    fn generator_dimension_mismatch() {
        let m = mode(&["0"], &[&["1"]]);
        assert!(matches!(apply_generator(&rp("x1*x2", 2), &m), Err(GeneratorError::DimensionMismatch(_))));
    }

    #[test]
    fn multi_mode_coupling() {
        let m1 = mode(&["0"], &[&["0"]]);
        let m2 = mode(&["0"], &[&["1"]]);
        let rates = vec![vec![rp("-1", 1), rp("1", 1)], vec![rp("1", 1), rp("-1", 1)]];
        let bs = vec![rp("x1^2", 1), rp("0", 1)];
        let modes = vec![m1.clone(), m2.clone()];
        assert_eq!(apply_generator_multi(&bs, 0, &modes, &rates).unwrap(), rp("-x1^2", 1));
        let zero = vec![vec![rp("0", 1); 2]; 2];
        assert_eq!(
            apply_generator_multi(&bs, 1, &modes, &zero).unwrap(),
            apply_generator(&bs[1], &modes[1]).unwrap()
        );
        let same = vec![rp("x1^2 + 1", 1); 2];
        assert_eq!(
            apply_generator_multi(&same, 1, &modes, &rates).unwrap(),
            apply_generator(&same[1], &modes[1]).unwrap()
        );
        assert_eq!(
            apply_generator_multi(&bs[..1], 0, &modes, &rates),
            Err(GeneratorError::MissingMode { expected: 2, got: 1 })
        );
    }

    #[test]
    fn basis_counts_and_normalization() {
        let sb = StateBox::new(vec![-8.0, -8.0], vec![8.0, 8.0]);
        assert_eq!(BasisSet::monomials(&sb, 5).len(), 21);
        let b = BasisSet::monomials(&sb, 4);
        assert_eq!(b.len(), 15);
        assert_eq!(b.polys()[0], rp("1", 2));
        // u1 = x1 / 8
        assert_eq!(b.polys()[1], rp("x2/8", 2));
        let shifted = BasisSet::monomials(&StateBox::new(vec![0.0], vec![4.0]), 2);
        assert_eq!(shifted.polys()[2], rp("(x1 - 2)^2/4", 1));
        assert_eq!(shifted.combine(&[1.0, 0.0, 4.0]), rp("x1^2 - 4*x1 + 5", 1));
    }

    #[test]
    fn monomial_enumeration() {
        let ms = monomials_up_to(2, 2);
        let shown: Vec<String> = ms.iter().map(ToString::to_string).collect();
        assert_eq!(shown, ["1", "x2", "x1", "x2^2", "x1*x2", "x1^2"]);
    }

    #[test]
    fn float_coefficients_share_the_generator() {
        let b: Poly<f64> = rp("x1^2 + x2^2", 2).to_float();
        let f: Vec<Poly<f64>> = vec![rp("-x1", 2).to_float(), rp("-x2", 2).to_float()];
        let one = Poly::<f64>::one(2);
        let zero = Poly::<f64>::zero(2);
        let g = vec![vec![one.clone(), zero.clone()], vec![zero, one]];
        let d = generator(&b, &f, &g).unwrap();
        assert_eq!(d.eval(&[1.0, 2.0]), -2.0 - 8.0 + 2.0);
    }
}
