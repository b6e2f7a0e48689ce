//! Closed real intervals for range bounding of polynomials over boxes.
//!
//! Arithmetic is performed in round-to-nearest; callers that need a rigorous
//! enclosure pad the result (see `barrier::verify`).

use std::ops::{Add, Mul, Neg, Sub};

use num_traits::Float;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Float> Interval<T> {
    pub fn new(lo: T, hi: T) -> Self {
        debug_assert!(lo <= hi, "inverted interval");
        Self { lo, hi }
    }

    pub fn point(v: T) -> Self {
        Self { lo: v, hi: v }
    }

    /// Interval centred on `mid` with half-width `radius`.
    pub fn around(mid: T, radius: T) -> Self {
        Self::new(mid - radius, mid + radius)
    }

    pub fn contains(&self, v: T) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn width(&self) -> T {
        self.hi - self.lo
    }

    pub fn mid(&self) -> T {
        (self.lo + self.hi) / (T::one() + T::one())
    }

    /// Largest absolute value attained on the interval.
    pub fn mag(&self) -> T {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn scale(&self, c: T) -> Self {
        if c >= T::zero() {
            Self::new(self.lo * c, self.hi * c)
        } else {
            Self::new(self.hi * c, self.lo * c)
        }
    }

    pub fn powi(&self, k: u32) -> Self {
        if k == 0 {
            return Self::point(T::one());
        }
        let e = k as i32;
        if k % 2 == 1 {
            return Self::new(self.lo.powi(e), self.hi.powi(e));
        }
        if self.lo >= T::zero() {
            Self::new(self.lo.powi(e), self.hi.powi(e))
        } else if self.hi <= T::zero() {
            Self::new(self.hi.powi(e), self.lo.powi(e))
        } else {
            Self::new(T::zero(), self.mag().powi(e))
        }
    }

    pub fn hull(&self, other: &Self) -> Self {
        Self::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }
}

impl<T: Float> Add for Interval<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.lo + rhs.lo, self.hi + rhs.hi)
    }
}

impl<T: Float> Sub for Interval<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.lo - rhs.hi, self.hi - rhs.lo)
    }
}

impl<T: Float> Neg for Interval<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.hi, -self.lo)
    }
}

impl<T: Float> Mul for Interval<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let a = self.lo * rhs.lo;
        let b = self.lo * rhs.hi;
        let c = self.hi * rhs.lo;
        let d = self.hi * rhs.hi;
        Self::new(a.min(b).min(c.min(d)), a.max(b).max(c.max(d)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn even_power_straddling_zero() {
        let i = Interval::new(-2.0, 1.0);
        assert_eq!(i.powi(2), Interval::new(0.0, 4.0));
        assert_eq!(i.powi(3), Interval::new(-8.0, 1.0));
        assert_eq!(Interval::new(-3.0, -1.0).powi(2), Interval::new(1.0, 9.0));
    }

    #[test]
    fn product_sign_cases() {
        let a = Interval::new(-1.0f32, 2.0);
        let b = Interval::new(-3.0f32, -1.0);
        assert_eq!(a * b, Interval::new(-6.0, 3.0));
        assert_eq!(a - b, Interval::new(0.0, 5.0));
        assert_eq!(a.scale(-2.0), Interval::new(-4.0, 2.0));
    }
}
