//! Expression-tree representation of analytic functions.
//!
//! Primitives are polynomials (exact complex coefficient arithmetic) and
//! kernel powers `z ↦ (1 - c̄ z)^{-p}` with `|c| < 1`, `p > 0`, closed under
//! sum, product, scalar multiple, composition with a polynomial, symbolic
//! derivative, and antiderivative from zero. Polynomial combinations fold
//! eagerly, so operator images of polynomials stay coefficient-exact.
//!
//! Kernel powers evaluate through the principal branch, which is safe on
//! the disk: `Re(1 - c̄ z) ≥ 1 - |c||z| > 0`.

use std::sync::Arc;

use num_complex::Complex;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::poly::Polynomial;
use crate::quad::{gauss_legendre, QuadError};
use crate::scalar::{as_f64, flt, Real};
use crate::weights::{RadialWeight, WeightError};

/// Nodes of the radial path-integration rule used by antiderivatives of
/// non-polynomial integrands.
const PATH_RULE_NODES: usize = 128;

#[derive(Debug, Error)]
pub enum AnalyticError {
    #[error("evaluation point outside the open unit disk (|z| = {0})")]
    OutsideDomain(f64),
    #[error("kernel power needs |c| < 1 and p > 0 (got |c| = {c_abs}, p = {p})")]
    BadKernelParam { c_abs: f64, p: f64 },
    #[error("kernel exponent alpha must exceed -1, got {0}")]
    BadAlpha(f64),
    #[error("self-map certification failed: sampled max |φ| = {0} exceeds 1 + 1e-9")]
    NotSelfMap(f64),
    #[error("operation requires a polynomial operand")]
    NotPolynomial,
    #[error("integrand not evaluable: {0}")]
    Evaluation(String),
    #[error("weight is not integrable on [0, 1)")]
    NonIntegrableWeight,
    #[error("truncated integrals keep growing; integral diverges")]
    DivergentIntegral,
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    Quad(#[from] QuadError),
}

#[derive(Debug)]
enum Expr<T: Real> {
    Poly(Polynomial<T>),
    /// `(1 - c̄ z)^{-p}`
    KernelPower { c: Complex<T>, p: T },
    Sum(AnalyticFunction<T>, AnalyticFunction<T>),
    Product(AnalyticFunction<T>, AnalyticFunction<T>),
    Scale(Complex<T>, AnalyticFunction<T>),
    /// `outer ∘ inner`; `inner` must map the disk into itself
    Compose {
        outer: AnalyticFunction<T>,
        inner: AnalyticFunction<T>,
    },
    /// `z ↦ ∫_0^z inner(t) dt` along the radial segment
    Antiderivative {
        inner: AnalyticFunction<T>,
        rule_x: Arc<Vec<T>>,
        rule_w: Arc<Vec<T>>,
    },
}

/// Immutable analytic function on the unit disk; cloning is cheap and
/// concurrent evaluation at distinct points needs no synchronization.
#[derive(Clone, Debug)]
pub struct AnalyticFunction<T: Real> {
    expr: Arc<Expr<T>>,
}

impl<T: Real> AnalyticFunction<T> {
    fn from_expr(expr: Expr<T>) -> Self {
        Self {
            expr: Arc::new(expr),
        }
    }

    pub fn polynomial(coeffs: Vec<Complex<T>>) -> Self {
        Self::from_expr(Expr::Poly(Polynomial::new(coeffs)))
    }

    pub fn constant(c: Complex<T>) -> Self {
        Self::from_expr(Expr::Poly(Polynomial::constant(c)))
    }

    pub fn zero() -> Self {
        Self::from_expr(Expr::Poly(Polynomial::zero()))
    }

    /// The identity `z`.
    pub fn identity() -> Self {
        Self::from_expr(Expr::Poly(Polynomial::identity()))
    }

    pub fn monomial(n: usize) -> Self {
        Self::from_expr(Expr::Poly(Polynomial::monomial(n)))
    }

    /// `z ↦ (1 - c̄ z)^{-p}`.
    pub fn kernel_power(c: Complex<T>, p: T) -> Result<Self, AnalyticError> {
        if !(c.norm() < T::one()) || !(p > T::zero()) || !p.is_finite() {
            return Err(AnalyticError::BadKernelParam {
                c_abs: as_f64(c.norm()),
                p: as_f64(p),
            });
        }
        Ok(Self::from_expr(Expr::KernelPower { c, p }))
    }

    pub fn as_polynomial(&self) -> Option<&Polynomial<T>> {
        match &*self.expr {
            Expr::Poly(p) => Some(p),
            _ => None,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        match (&*self.expr, &*other.expr) {
            (Expr::Poly(a), Expr::Poly(b)) => Self::from_expr(Expr::Poly(a.add(b))),
            _ => Self::from_expr(Expr::Sum(self.clone(), other.clone())),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        match (&*self.expr, &*other.expr) {
            (Expr::Poly(a), Expr::Poly(b)) => Self::from_expr(Expr::Poly(a.mul(b))),
            _ => Self::from_expr(Expr::Product(self.clone(), other.clone())),
        }
    }

    pub fn scale(&self, k: Complex<T>) -> Self {
        match &*self.expr {
            Expr::Poly(p) => Self::from_expr(Expr::Poly(p.scale(k))),
            _ => Self::from_expr(Expr::Scale(k, self.clone())),
        }
    }

    /// `self ∘ inner`; `inner` must be a polynomial.
    pub fn compose_poly(&self, inner: &Self) -> Result<Self, AnalyticError> {
        if inner.as_polynomial().is_none() {
            return Err(AnalyticError::NotPolynomial);
        }
        Ok(self.compose_unchecked(inner))
    }

    /// General composition; the caller guarantees `inner` maps the disk
    /// into itself (operator application composes with a certified φ).
    pub(crate) fn compose_unchecked(&self, inner: &Self) -> Self {
        match (&*self.expr, &*inner.expr) {
            (Expr::Poly(p), Expr::Poly(q)) => Self::from_expr(Expr::Poly(p.compose(q))),
            _ => Self::from_expr(Expr::Compose {
                outer: self.clone(),
                inner: inner.clone(),
            }),
        }
    }

    /// Symbolic derivative. `(1-c̄z)^{-p}` maps to `p c̄ (1-c̄z)^{-(p+1)}`;
    /// antiderivative nodes unwind to their integrand.
    pub fn differentiate(&self) -> Self {
        match &*self.expr {
            Expr::Poly(p) => Self::from_expr(Expr::Poly(p.derivative())),
            Expr::KernelPower { c, p } => {
                let next = Self::from_expr(Expr::KernelPower {
                    c: *c,
                    p: *p + T::one(),
                });
                next.scale(c.conj() * Complex::new(*p, T::zero()))
            }
            Expr::Sum(a, b) => a.differentiate().add(&b.differentiate()),
            Expr::Product(a, b) => {
                let left = a.differentiate().mul(b);
                let right = a.mul(&b.differentiate());
                left.add(&right)
            }
            Expr::Scale(k, f) => f.differentiate().scale(*k),
            Expr::Compose { outer, inner } => outer
                .differentiate()
                .compose_unchecked(inner)
                .mul(&inner.differentiate()),
            Expr::Antiderivative { inner, .. } => inner.clone(),
        }
    }

    /// `z ↦ ∫_0^z self(t) dt`: exact on polynomials, radial Gauss path
    /// integration otherwise.
    pub fn antiderivative(&self) -> Self {
        match &*self.expr {
            Expr::Poly(p) => Self::from_expr(Expr::Poly(p.antiderivative())),
            _ => {
                let (x, w) = gauss_legendre::<T>(PATH_RULE_NODES)
                    .expect("fixed-size Legendre rule must build");
                let half = flt::<T>(0.5);
                let x01: Vec<T> = x.iter().map(|&t| (t + T::one()) * half).collect();
                let w01: Vec<T> = w.iter().map(|&t| t * half).collect();
                Self::from_expr(Expr::Antiderivative {
                    inner: self.clone(),
                    rule_x: Arc::new(x01),
                    rule_w: Arc::new(w01),
                })
            }
        }
    }

    /// Evaluate at `|z| < 1`.
    pub fn evaluate(&self, z: Complex<T>) -> Result<Complex<T>, AnalyticError> {
        if !(z.norm_sqr() < T::one()) {
            return Err(AnalyticError::OutsideDomain(as_f64(z.norm())));
        }
        Ok(self.eval_unchecked(z))
    }

    /// Evaluate without the domain check; callers guarantee `|z| < 1`.
    pub fn eval_unchecked(&self, z: Complex<T>) -> Complex<T> {
        match &*self.expr {
            Expr::Poly(p) => p.eval(z),
            Expr::KernelPower { c, p } => {
                let w = Complex::<T>::one() - c.conj() * z;
                w.powf(-*p)
            }
            Expr::Sum(a, b) => a.eval_unchecked(z) + b.eval_unchecked(z),
            Expr::Product(a, b) => a.eval_unchecked(z) * b.eval_unchecked(z),
            Expr::Scale(k, f) => f.eval_unchecked(z) * k,
            Expr::Compose { outer, inner } => outer.eval_unchecked(inner.eval_unchecked(z)),
            Expr::Antiderivative {
                inner,
                rule_x,
                rule_w,
            } => {
                let mut acc = Complex::<T>::zero();
                for (&x, &w) in rule_x.iter().zip(rule_w.iter()) {
                    acc += inner.eval_unchecked(z * x) * Complex::new(w, T::zero());
                }
                acc * z
            }
        }
    }

    /// Max of `|f|` sampled at `n` uniform angles on `|z| = r`.
    pub fn max_abs_on_circle(&self, r: T, n: usize) -> T {
        let two_pi = T::PI() * flt::<T>(2.0);
        let mut best = T::neg_infinity();
        for j in 0..n {
            let th = two_pi * flt::<T>(j as f64) / flt::<T>(n as f64);
            let z = Complex::new(r * th.cos(), r * th.sin());
            best = best.max(self.eval_unchecked(z).norm());
        }
        best
    }
}

/// Analytic self-map of the disk with a sampled certification record
/// (max of `|φ|` on `|z| = 0.999` at 4096 angles must not exceed 1 + 1e-9).
#[derive(Clone, Debug)]
pub struct SelfMap<T: Real> {
    func: AnalyticFunction<T>,
    sampled_max: T,
}

impl<T: Real> SelfMap<T> {
    pub fn certify(func: AnalyticFunction<T>) -> Result<Self, AnalyticError> {
        let sampled_max = func.max_abs_on_circle(flt(0.999), 4096);
        if sampled_max > T::one() + flt(1e-9) {
            return Err(AnalyticError::NotSelfMap(as_f64(sampled_max)));
        }
        Ok(Self { func, sampled_max })
    }

    pub fn identity() -> Self {
        Self::certify(AnalyticFunction::identity()).expect("identity is a self-map")
    }

    pub fn zero() -> Self {
        Self::certify(AnalyticFunction::zero()).expect("zero is a self-map")
    }

    pub fn func(&self) -> &AnalyticFunction<T> {
        &self.func
    }

    pub fn sampled_max(&self) -> T {
        self.sampled_max
    }

    pub fn eval_unchecked(&self, z: Complex<T>) -> Complex<T> {
        self.func.eval_unchecked(z)
    }
}

/// Kernel `K_ζ(z) = (α+1)/(1-ζz)^{α+2}` for the `α`-weighted pairing; the
/// conjugation is placed so that `(f, K_ζ) = f(ζ)` holds under
/// [`crate::analytic::pairing`], which conjugates its second argument.
pub fn bergman_kernel<T: Real>(
    zeta: Complex<T>,
    alpha: T,
) -> Result<AnalyticFunction<T>, AnalyticError> {
    if !(alpha > -T::one()) {
        return Err(AnalyticError::BadAlpha(as_f64(alpha)));
    }
    let two = flt::<T>(2.0);
    let k = AnalyticFunction::kernel_power(zeta.conj(), alpha + two)?;
    Ok(k.scale(Complex::new(alpha + T::one(), T::zero())))
}

/// Extremal test function
/// `f_ζ(z) = (1-|φ(ζ)|²)^{β+1} / (ν(φ(ζ)) (1 - conj(φ(ζ)) z)^{β+1})`,
/// normalized so `f_ζ(φ(ζ)) = 1/ν(φ(ζ))` up to rounding.
pub fn test_function<T: Real>(
    zeta: Complex<T>,
    phi: &SelfMap<T>,
    nu: &RadialWeight<T>,
    beta: T,
) -> Result<AnalyticFunction<T>, AnalyticError> {
    if !(zeta.norm_sqr() < T::one()) {
        return Err(AnalyticError::OutsideDomain(as_f64(zeta.norm())));
    }
    let w = phi.eval_unchecked(zeta);
    let r = w.norm();
    if !(r < T::one()) {
        return Err(AnalyticError::OutsideDomain(as_f64(r)));
    }
    let p = beta + T::one();
    // scale = (1-|w|²)^{β+1} / ν(|w|), assembled in log space
    let log_one_minus = (-r).ln_1p() + r.ln_1p();
    let scale = (p * log_one_minus - nu.log_eval(r)?).exp();
    let k = AnalyticFunction::kernel_power(w, p)?;
    Ok(k.scale(Complex::new(scale, T::zero())))
}
