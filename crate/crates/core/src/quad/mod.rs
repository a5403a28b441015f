//! Quadrature over truncated disks and the global supremum solver.
//!
//! The disk rule lives in the squared-radius variable `s = r²`: with the
//! normalized area measure, `∫_{|ζ|≤ρ} F dA = (1/2π) ∫_0^{ρ²} ∫_0^{2π}
//! F(√s e^{iθ}) dθ ds`, so a Gauss–Legendre rule in `s` is exact on radial
//! polynomials `s^k` and the node weights sum to `ρ²`, the normalized area.
//! Summation order is fixed (radial-major, compensated), so repeated runs
//! are bit-stable; node evaluation may run in parallel, the combine is
//! always the same ordered reduction.

mod rules;
mod sup;

pub use rules::{gauss_jacobi, gauss_jacobi_unit, gauss_legendre, gauss_legendre_on};
pub(crate) use sup::refine_polar;
pub use sup::{sup_over_disk, SupFlag, SupOutcome, SupSolverConfig, SCAN_RADIUS_CAP_EXP};

use num_complex::Complex;
use rayon::prelude::*;
use thiserror::Error;

use crate::scalar::{as_f64, flt, Real};

#[derive(Debug, Error)]
pub enum QuadError {
    #[error("quadrature rule size must be >= 1, got {0}")]
    InvalidRuleSize(usize),
    #[error("disk rule needs n_r >= 8, n_theta >= 16, 0 < rho < 1 (got n_r={n_r}, n_theta={n_theta}, rho={rho})")]
    InvalidDiskRule { n_r: usize, n_theta: usize, rho: f64 },
    #[error("sup solver config needs counts >= 16 and tolerance > 0")]
    InvalidSupConfig,
    #[error("tridiagonal eigensolver failed to converge")]
    EigenFailed,
    #[error("non-finite integrand value at node {index} (z = {re} + {im}i)")]
    NonFinite { index: usize, re: f64, im: f64 },
}

/// Compensated (Kahan) accumulator.
#[derive(Clone, Copy, Debug)]
pub(crate) struct KahanSum<T: Real> {
    sum: T,
    comp: T,
}

impl<T: Real> KahanSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            comp: T::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, value: T) {
        let y = value - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum
    }
}

/// Truncated polar rule over `{|ζ| ≤ ρ}` with optional dyadic clustering of
/// the radial panels toward the rim.
#[derive(Clone, Debug)]
pub struct DiskQuadrature<T: Real> {
    radial_s: Vec<T>,
    radial_w: Vec<T>,
    directions: Vec<Complex<T>>,
    rho: T,
    n_theta: usize,
}

impl<T: Real> DiskQuadrature<T> {
    /// Plain rule: `n_r`-point Gauss–Legendre in `s` on `[0, ρ²]`.
    pub fn build(n_r: usize, n_theta: usize, rho: T) -> Result<Self, QuadError> {
        Self::build_clustered(n_r, n_theta, rho, 1)
    }

    /// Composite rule with `panels` dyadic radial panels accumulating
    /// toward `s = ρ²`, `n_r` Gauss–Legendre nodes each.
    pub fn build_clustered(
        n_r: usize,
        n_theta: usize,
        rho: T,
        panels: usize,
    ) -> Result<Self, QuadError> {
        if n_r < 8 || n_theta < 16 || !(rho > T::zero()) || !(rho < T::one()) || panels == 0 {
            return Err(QuadError::InvalidDiskRule {
                n_r,
                n_theta,
                rho: as_f64(rho),
            });
        }
        let s_max = rho * rho;
        let mut radial_s = Vec::with_capacity(n_r * panels);
        let mut radial_w = Vec::with_capacity(n_r * panels);
        let mut lo = T::zero();
        for p in 0..panels {
            let hi = if p + 1 == panels {
                s_max
            } else {
                // 1 - 2^{-(p+1)} of the way to s_max
                s_max * (T::one() - flt::<T>(2f64.powi(-(p as i32 + 1))))
            };
            let (s, w) = gauss_legendre_on(n_r, lo, hi)?;
            radial_s.extend(s);
            radial_w.extend(w);
            lo = hi;
        }
        let two_pi = T::PI() * flt::<T>(2.0);
        let directions = (0..n_theta)
            .map(|j| {
                let th = two_pi * flt::<T>(j as f64) / flt::<T>(n_theta as f64);
                Complex::new(th.cos(), th.sin())
            })
            .collect();
        Ok(Self {
            radial_s,
            radial_w,
            directions,
            rho,
            n_theta,
        })
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    pub fn radial_count(&self) -> usize {
        self.radial_s.len()
    }

    pub fn angular_count(&self) -> usize {
        self.n_theta
    }

    pub fn node_count(&self) -> usize {
        self.radial_s.len() * self.n_theta
    }

    /// Radial `s`-nodes and weights (weights sum to `ρ²`).
    pub fn radial(&self) -> (&[T], &[T]) {
        (&self.radial_s, &self.radial_w)
    }

    /// Nodes with weights, radial-major. Weight of node `(i, j)` is
    /// `radial_w[i] / n_theta`.
    pub fn nodes(&self) -> impl Iterator<Item = (Complex<T>, T)> + '_ {
        let m = flt::<T>(self.n_theta as f64);
        self.radial_s.iter().zip(&self.radial_w).flat_map(move |(&s, &w)| {
            let r = s.sqrt();
            let wn = w / m;
            self.directions.iter().map(move |&d| (d * r, wn))
        })
    }

    /// `∫ F dA` over the truncated disk. Rings are evaluated in parallel;
    /// the reduction is radial-major compensated summation in fixed order.
    pub fn integrate_complex<F>(&self, f: F) -> Result<Complex<T>, QuadError>
    where
        F: Fn(Complex<T>) -> Complex<T> + Sync,
    {
        let m = flt::<T>(self.n_theta as f64);
        let ring_sums: Vec<Result<(T, T), QuadError>> = self
            .radial_s
            .par_iter()
            .zip(self.radial_w.par_iter())
            .enumerate()
            .map(|(i, (&s, &w))| {
                let r = s.sqrt();
                let wn = w / m;
                let mut re = KahanSum::new();
                let mut im = KahanSum::new();
                for (j, &d) in self.directions.iter().enumerate() {
                    let z = d * r;
                    let v = f(z);
                    if !v.re.is_finite() || !v.im.is_finite() {
                        return Err(QuadError::NonFinite {
                            index: i * self.n_theta + j,
                            re: as_f64(z.re),
                            im: as_f64(z.im),
                        });
                    }
                    re.add(wn * v.re);
                    im.add(wn * v.im);
                }
                Ok((re.value(), im.value()))
            })
            .collect();
        let mut re = KahanSum::new();
        let mut im = KahanSum::new();
        for ring in ring_sums {
            let (r, i) = ring?;
            re.add(r);
            im.add(i);
        }
        Ok(Complex::new(re.value(), im.value()))
    }

    pub fn integrate_real<F>(&self, f: F) -> Result<T, QuadError>
    where
        F: Fn(Complex<T>) -> T + Sync,
    {
        self.integrate_complex(|z| Complex::new(f(z), T::zero()))
            .map(|v| v.re)
    }
}

/// `build_quadrature` from the operation list; alias for
/// [`DiskQuadrature::build`].
pub fn build_quadrature<T: Real>(
    n_r: usize,
    n_theta: usize,
    rho: T,
) -> Result<DiskQuadrature<T>, QuadError> {
    DiskQuadrature::build(n_r, n_theta, rho)
}

/// Dyadic radii `1 - 2^{-k}` for `k = k_lo..=k_hi`, the schedule used by
/// truncation studies and membership probes.
pub fn dyadic_radii<T: Real>(k_lo: i32, k_hi: i32) -> Vec<T> {
    (k_lo..=k_hi)
        .map(|k| T::one() - flt::<T>(2f64.powi(-k)))
        .collect()
}
