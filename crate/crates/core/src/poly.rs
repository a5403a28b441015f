//! Dense complex polynomials in one variable, coefficients in ascending
//! degree. This is the exact-arithmetic backbone for the operator
//! truncations: applying a Volterra operator to a polynomial stays inside
//! this representation.

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::scalar::{flt, Real};

/// Trailing-zero-trimmed coefficient list; the zero polynomial is `[]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<T: Real> {
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> Polynomial<T> {
    pub fn new(mut coeffs: Vec<Complex<T>>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: Complex<T>) -> Self {
        Self::new(vec![c])
    }

    pub fn identity() -> Self {
        Self::new(vec![Complex::zero(), Complex::one()])
    }

    pub fn monomial(n: usize) -> Self {
        let mut coeffs = vec![Complex::zero(); n + 1];
        coeffs[n] = Complex::one();
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree of the zero polynomial is reported as 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, z: Complex<T>) -> Complex<T> {
        let mut acc = Complex::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![Complex::zero(); n];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i] = out[i] + c;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            out[i] = out[i] + c;
        }
        Self::new(out)
    }

    pub fn scale(&self, k: Complex<T>) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![Complex::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] = out[i + j] + a * b;
            }
        }
        Self::new(out)
    }

    /// Composition `self ∘ inner` by Horner over polynomial arithmetic.
    pub fn compose(&self, inner: &Self) -> Self {
        let mut acc = Self::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(inner).add(&Self::constant(*c));
        }
        acc
    }

    pub fn powi(&self, n: usize) -> Self {
        let mut acc = Self::constant(Complex::one());
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        let out = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c * Complex::new(flt::<T>(i as f64), T::zero()))
            .collect();
        Self::new(out)
    }

    /// Antiderivative vanishing at the origin.
    pub fn antiderivative(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut out = vec![Complex::zero(); self.coeffs.len() + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i + 1] = c / Complex::new(flt::<T>((i + 1) as f64), T::zero());
        }
        Self::new(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type P = Polynomial<f64>;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn eval_and_arith() {
        // (1 + 2z)(3 + z) = 3 + 7z + 2z^2
        let p = P::new(vec![c(1.0, 0.0), c(2.0, 0.0)]);
        let q = P::new(vec![c(3.0, 0.0), c(1.0, 0.0)]);
        let r = p.mul(&q);
        assert_eq!(r.coeffs(), &[c(3.0, 0.0), c(7.0, 0.0), c(2.0, 0.0)]);
        assert_eq!(r.eval(c(0.5, 0.0)), c(7.0, 0.0));
    }

    #[test]
    fn compose_horner() {
        // p(z) = z^2 + 1, inner = 2z  ->  4z^2 + 1
        let p = P::new(vec![c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let inner = P::new(vec![c(0.0, 0.0), c(2.0, 0.0)]);
        let r = p.compose(&inner);
        assert_eq!(r.coeffs(), &[c(1.0, 0.0), c(0.0, 0.0), c(4.0, 0.0)]);
    }

    #[test]
    fn derivative_antiderivative_roundtrip() {
        let p = P::new(vec![c(1.0, -1.0), c(0.0, 2.0), c(3.0, 0.5)]);
        let round = p.antiderivative().derivative();
        assert_eq!(round, p);
    }

    #[test]
    fn trailing_zeros_trimmed() {
        let p = P::new(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(p.degree(), 0);
        assert!(P::new(vec![c(0.0, 0.0)]).is_zero());
    }
}
