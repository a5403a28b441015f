//! Heuristic global supremum over the unit disk: coarse polar grid scan,
//! coordinate-wise golden-section refinement around the best cell, and a
//! dyadic near-boundary growth probe. No global certification is attempted;
//! the criteria that rely on this solver are exercised on integrands whose
//! argmax structure is known.

use num_complex::Complex;
use rayon::prelude::*;

use crate::quad::QuadError;
use crate::scalar::{as_f64, flt, Real};

/// The scan stops at `r = 1 - 2^{-SCAN_RADIUS_CAP_EXP}`; values still
/// growing there are flagged [`SupFlag::Unbounded`].
pub const SCAN_RADIUS_CAP_EXP: i32 = 12;

/// Per-dyadic-step growth beyond which the sup is considered unbounded.
const GROWTH_TOL: f64 = 1e-3;

#[derive(Clone, Copy, Debug)]
pub struct SupSolverConfig<T: Real> {
    /// Coarse radial grid count (>= 16).
    pub n_r: usize,
    /// Coarse angular grid count (>= 16).
    pub n_theta: usize,
    /// Golden-section iterations per refinement pass.
    pub refine_iters: usize,
    /// Relative convergence tolerance.
    pub tol: T,
}

impl<T: Real> Default for SupSolverConfig<T> {
    fn default() -> Self {
        Self {
            n_r: 128,
            n_theta: 256,
            refine_iters: 40,
            tol: flt(1e-10),
        }
    }
}

impl<T: Real> SupSolverConfig<T> {
    pub fn with_grid(n_r: usize, n_theta: usize) -> Self {
        Self {
            n_r,
            n_theta,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), QuadError> {
        if self.n_r < 16 || self.n_theta < 16 || !(self.tol > T::zero()) {
            return Err(QuadError::InvalidSupConfig);
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SupFlag {
    /// Argmax strictly inside the scanned disk.
    Attained,
    /// Argmax within the last dyadic shells; the sup may only be
    /// approached at the boundary.
    NearBoundary,
    /// Values still growing at the radius cap.
    Unbounded,
}

#[derive(Clone, Copy, Debug)]
pub struct SupOutcome<T: Real> {
    pub value: T,
    pub argmax: Complex<T>,
    pub flag: SupFlag,
}

impl<T: Real> SupOutcome<T> {
    pub fn is_unbounded(&self) -> bool {
        self.flag == SupFlag::Unbounded
    }
}

#[inline]
fn polar<T: Real>(r: T, theta: T) -> Complex<T> {
    Complex::new(r * theta.cos(), r * theta.sin())
}

/// Golden-section maximization on `[a, b]`, seeded with a best-so-far point.
/// Non-finite values are never selected. Ties keep the seed, so constant
/// sections do not drift the argmax.
pub(crate) fn golden_max<T: Real, F: Fn(T) -> T>(
    f: &F,
    mut a: T,
    mut b: T,
    iters: usize,
    tol: T,
    seed: (T, T),
) -> (T, T) {
    let inv_phi = flt::<T>(0.618_033_988_749_894_9);
    let (mut best_x, mut best_f) = seed;
    let consider = |x: T, fx: T, best_x: &mut T, best_f: &mut T| {
        if fx.is_finite() && fx > *best_f {
            *best_x = x;
            *best_f = fx;
        }
    };
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    consider(x1, f1, &mut best_x, &mut best_f);
    consider(x2, f2, &mut best_x, &mut best_f);
    for _ in 0..iters {
        let keep_left = match (f1.is_finite(), f2.is_finite()) {
            (true, true) => f1 >= f2,
            (true, false) => true,
            (false, true) => false,
            (false, false) => true,
        };
        if keep_left {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
            consider(x1, f1, &mut best_x, &mut best_f);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
            consider(x2, f2, &mut best_x, &mut best_f);
        }
        if b - a < tol * (a.abs() + b.abs() + T::one()) {
            break;
        }
    }
    (best_x, best_f)
}

/// Alternating (r, θ) golden refinement around a polar point. Returns
/// `(value, r, theta)`.
pub(crate) fn refine_polar<T: Real, F: Fn(Complex<T>) -> T + ?Sized>(
    f: &F,
    r0: T,
    dr: T,
    theta0: T,
    dtheta: T,
    iters: usize,
    tol: T,
    seed_value: T,
) -> (T, T, T) {
    let r_cap = T::one() - flt::<T>(2f64.powi(-SCAN_RADIUS_CAP_EXP));
    let mut r = r0;
    let mut theta = theta0;
    let mut value = seed_value;
    // alternate until a full (r, θ) sweep stops improving; tilted ridges
    // need several passes before the joint max is resolved
    for _sweep in 0..8 {
        let before = value;
        let lo = (r - dr).max(T::zero());
        let hi = (r + dr).min(r_cap);
        let (rb, vb) = golden_max(&|x: T| f(polar(x, theta)), lo, hi, iters, tol, (r, value));
        r = rb;
        value = vb;
        if r > T::zero() {
            let (tb, vb) = golden_max(
                &|x: T| f(polar(r, x)),
                theta - dtheta,
                theta + dtheta,
                iters,
                tol,
                (theta, value),
            );
            theta = tb;
            value = vb;
        }
        if value - before <= tol * value.abs() {
            break;
        }
    }
    (value, r, theta)
}

struct GridBest<T: Real> {
    value: T,
    i: usize,
    j: usize,
}

/// Supremum of a real field over the (capped) unit disk.
///
/// Ties are broken toward the smallest `|z|`, then the smallest
/// non-negative argument. Radially symmetric fields (detected by angular
/// probing) short-circuit to a 1-D radial search.
pub fn sup_over_disk<T, F>(f: F, cfg: &SupSolverConfig<T>) -> Result<SupOutcome<T>, QuadError>
where
    T: Real,
    F: Fn(Complex<T>) -> T + Sync,
{
    cfg.validate()?;
    let r_cap = T::one() - flt::<T>(2f64.powi(-SCAN_RADIUS_CAP_EXP));

    if looks_radial(&f) {
        return Ok(radial_sup(&f, cfg, r_cap));
    }

    let n_r = cfg.n_r;
    let n_t = cfg.n_theta;
    let two_pi = T::PI() * flt::<T>(2.0);
    let radii: Vec<T> = (0..n_r)
        .map(|i| r_cap * flt::<T>(i as f64) / flt::<T>((n_r - 1) as f64))
        .collect();
    let thetas: Vec<T> = (0..n_t)
        .map(|j| two_pi * flt::<T>(j as f64) / flt::<T>(n_t as f64))
        .collect();

    // parallel ring evaluation, sequential ordered argmax
    let rows: Vec<Result<Vec<T>, QuadError>> = radii
        .par_iter()
        .enumerate()
        .map(|(i, &r)| {
            let mut row = Vec::with_capacity(n_t);
            for &th in &thetas {
                let v = f(polar(r, th));
                if !v.is_finite() {
                    return Err(QuadError::NonFinite {
                        index: i * n_t,
                        re: as_f64(r * th.cos()),
                        im: as_f64(r * th.sin()),
                    });
                }
                row.push(v);
            }
            Ok(row)
        })
        .collect();

    let mut best = GridBest {
        value: T::neg_infinity(),
        i: 0,
        j: 0,
    };
    for (i, row) in rows.into_iter().enumerate() {
        let row = row?;
        for (j, v) in row.into_iter().enumerate() {
            if v > best.value {
                best = GridBest { value: v, i, j };
            }
        }
    }

    let dr = r_cap / flt::<T>((n_r - 1) as f64);
    let dth = two_pi / flt::<T>(n_t as f64);
    let (mut value, mut r, mut theta) = refine_polar(
        &f,
        radii[best.i],
        dr,
        thetas[best.j],
        dth,
        cfg.refine_iters,
        cfg.tol,
        best.value,
    );

    // dyadic boundary probe
    let mut m = [T::zero(); 4];
    let mut m_theta = [T::zero(); 4];
    for (k_idx, k) in (9..=SCAN_RADIUS_CAP_EXP).enumerate() {
        let rk = T::one() - flt::<T>(2f64.powi(-k));
        let mut best_v = T::neg_infinity();
        let mut best_th = T::zero();
        for &th in &thetas {
            let v = f(polar(rk, th));
            if v.is_finite() && v > best_v {
                best_v = v;
                best_th = th;
            }
        }
        m[k_idx] = best_v;
        m_theta[k_idx] = best_th;
    }
    let growth = T::one() + flt::<T>(GROWTH_TOL);
    let unbounded = m[3] > m[2] * growth && m[2] > m[1] * growth;

    if m[3] > value {
        let rk = T::one() - flt::<T>(2f64.powi(-SCAN_RADIUS_CAP_EXP));
        let (v2, r2, th2) = refine_polar(
            &f,
            rk,
            rk - (T::one() - flt::<T>(2f64.powi(-9))),
            m_theta[3],
            dth,
            cfg.refine_iters,
            cfg.tol,
            m[3],
        );
        if v2 > value {
            value = v2;
            r = r2;
            theta = th2;
        }
    }

    let near = T::one() - flt::<T>(2f64.powi(-10));
    let flag = if unbounded {
        SupFlag::Unbounded
    } else if r >= near {
        SupFlag::NearBoundary
    } else {
        SupFlag::Attained
    };

    Ok(SupOutcome {
        value,
        argmax: canonical_polar(r, theta),
        flag,
    })
}

/// Angular probing on a few radii; relative variation below 1e-13 on all of
/// them is treated as radial symmetry.
fn looks_radial<T: Real, F: Fn(Complex<T>) -> T>(f: &F) -> bool {
    let two_pi = T::PI() * flt::<T>(2.0);
    for &r in &[0.23, 0.52, 0.81, 0.97] {
        let r = flt::<T>(r);
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for j in 0..32 {
            let th = two_pi * flt::<T>(j as f64 / 32.0);
            let v = f(polar(r, th));
            if !v.is_finite() {
                return false;
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let scale = hi.abs().max(T::one());
        if hi - lo > flt::<T>(1e-13) * scale {
            return false;
        }
    }
    true
}

fn radial_sup<T, F>(f: &F, cfg: &SupSolverConfig<T>, r_cap: T) -> SupOutcome<T>
where
    T: Real,
    F: Fn(Complex<T>) -> T,
{
    let n = (cfg.n_r * 4).max(512);
    let g = |r: T| f(Complex::new(r, T::zero()));
    let mut best_i = 0usize;
    let mut best_v = T::neg_infinity();
    for i in 0..n {
        let r = r_cap * flt::<T>(i as f64) / flt::<T>((n - 1) as f64);
        let v = g(r);
        if v.is_finite() && v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    let dr = r_cap / flt::<T>((n - 1) as f64);
    let r0 = r_cap * flt::<T>(best_i as f64) / flt::<T>((n - 1) as f64);
    let lo = (r0 - dr).max(T::zero());
    let hi = (r0 + dr).min(r_cap);
    let (mut r, mut value) = golden_max(&g, lo, hi, cfg.refine_iters * 2, cfg.tol, (r0, best_v));

    // dyadic growth probe along the ray
    let mut m = [T::zero(); 4];
    for (k_idx, k) in (9..=SCAN_RADIUS_CAP_EXP).enumerate() {
        m[k_idx] = g(T::one() - flt::<T>(2f64.powi(-k)));
    }
    let growth = T::one() + flt::<T>(GROWTH_TOL);
    let unbounded = m[3] > m[2] * growth && m[2] > m[1] * growth;
    if m[3] > value {
        value = m[3];
        r = T::one() - flt::<T>(2f64.powi(-SCAN_RADIUS_CAP_EXP));
    }

    let near = T::one() - flt::<T>(2f64.powi(-10));
    let flag = if unbounded {
        SupFlag::Unbounded
    } else if r >= near {
        SupFlag::NearBoundary
    } else {
        SupFlag::Attained
    };
    SupOutcome {
        value,
        argmax: canonical_polar(r, T::zero()),
        flag,
    }
}

fn canonical_polar<T: Real>(r: T, theta: T) -> Complex<T> {
    if r <= flt::<T>(1e-14) {
        return Complex::new(T::zero(), T::zero());
    }
    let two_pi = T::PI() * flt::<T>(2.0);
    let mut th = theta % two_pi;
    if th < T::zero() {
        th += two_pi;
    }
    if th.abs() <= flt::<T>(1e-12) || (two_pi - th).abs() <= flt::<T>(1e-12) {
        th = T::zero();
    }
    polar(r, th)
}
