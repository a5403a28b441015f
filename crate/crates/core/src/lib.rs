//! Numerical laboratory for Volterra composition operators
//! `T_g^φ f = ∫_0^z f(φ(ζ)) g'(ζ) dζ` and `S_g^φ f = ∫_0^z f'(φ(ζ)) g(ζ) dζ`
//! acting between weighted Banach and Bloch spaces of analytic functions on
//! the unit disk.
//!
//! The crate evaluates the boundedness and nuclearity criteria for these
//! operators over normal radial weights, and cross-checks every criterion
//! against independent operator-level evidence: witness lower bounds,
//! exact matrix truncations on the monomial basis, explicit discretized
//! nuclear decompositions, and absolutely-summing / compactness probes.
//!
//! Everything is generic over the scalar type through [`scalar::Real`]
//! (`f32` or `f64`); the `*64` aliases at the crate root fix `f64`, which
//! is what the CLI and the stated tolerances assume.

pub mod analytic;
pub mod criteria;
pub mod oplab;
pub(crate) mod poly;
pub mod quad;
pub mod scalar;
pub mod weights;

pub use scalar::Real;

/// Complex number over the working scalar.
pub type Cplx<T> = num_complex::Complex<T>;

pub type Complex64 = num_complex::Complex<f64>;
pub type Weight64 = weights::RadialWeight<f64>;
pub type NormalPair64 = weights::NormalPair<f64>;
pub type Function64 = analytic::AnalyticFunction<f64>;
pub type SelfMap64 = analytic::SelfMap<f64>;
pub type DiskQuadrature64 = quad::DiskQuadrature<f64>;
pub type SupConfig64 = quad::SupSolverConfig<f64>;
pub type CriterionReport64 = criteria::CriterionReport<f64>;
