//! Norms and pairings on the weighted spaces.
//!
//! The duality pairing is `(f, g) = ∫ f(z) g(z̄) (1-|z|²)^α dA(z)` with the
//! normalized area measure. The radial direction absorbs the `(1-|z|²)^α`
//! factor into a Gauss–Jacobi rule over the full interval, so polynomial
//! pairings are exact up to rounding and kernel pairings converge
//! geometrically; the supplied disk rule contributes its resolution only.

use num_complex::Complex;
use rayon::prelude::*;

use crate::analytic::expr::{AnalyticError, AnalyticFunction};
use crate::quad::{
    gauss_legendre_on, gauss_jacobi_unit, sup_over_disk, DiskQuadrature, KahanSum, SupOutcome,
    SupSolverConfig, SCAN_RADIUS_CAP_EXP,
};
use crate::scalar::{as_f64, flt, Real};
use crate::weights::RadialWeight;

/// Duality pairing `(f, g) ↦ ∫ f(z) g(z̄) (1-|z|²)^α dA(z)`, `α > -1`.
pub fn pairing<T: Real>(
    f: &AnalyticFunction<T>,
    g: &AnalyticFunction<T>,
    alpha: T,
    quad: &DiskQuadrature<T>,
) -> Result<Complex<T>, AnalyticError> {
    if !(alpha > -T::one()) {
        return Err(AnalyticError::BadAlpha(as_f64(alpha)));
    }
    let (s_nodes, s_weights) = gauss_jacobi_unit(quad.radial_count(), alpha)?;
    let m = quad.angular_count();
    let mt = flt::<T>(m as f64);
    let two_pi = T::PI() * flt::<T>(2.0);
    let dirs: Vec<Complex<T>> = (0..m)
        .map(|j| {
            let th = two_pi * flt::<T>(j as f64) / mt;
            Complex::new(th.cos(), th.sin())
        })
        .collect();

    let rings: Vec<Result<(T, T), AnalyticError>> = s_nodes
        .par_iter()
        .zip(s_weights.par_iter())
        .map(|(&s, &w)| {
            let r = s.sqrt();
            let wn = w / mt;
            let mut re = KahanSum::new();
            let mut im = KahanSum::new();
            for &d in &dirs {
                let z = d * r;
                let v = f.eval_unchecked(z) * g.eval_unchecked(z.conj());
                if !v.re.is_finite() || !v.im.is_finite() {
                    return Err(AnalyticError::Evaluation(format!(
                        "non-finite pairing integrand at z = {} + {}i",
                        as_f64(z.re),
                        as_f64(z.im)
                    )));
                }
                re.add(wn * v.re);
                im.add(wn * v.im);
            }
            Ok((re.value(), im.value()))
        })
        .collect();

    let mut re = KahanSum::new();
    let mut im = KahanSum::new();
    for ring in rings {
        let (a, b) = ring?;
        re.add(a);
        im.add(b);
    }
    Ok(Complex::new(re.value(), im.value()))
}

/// `‖f‖_{A¹_ω} = ∫ |f| ω dA`: truncated-disk quadrature plus dyadic tail
/// shells (halving `1-r` down to `2^{-20}`) with geometric extrapolation of
/// the remainder. Non-integrable weights (detected by truncated-integral
/// growth) and divergent combined integrands error out.
pub fn a1_norm<T: Real>(
    f: &AnalyticFunction<T>,
    omega: &RadialWeight<T>,
    quad: &DiskQuadrature<T>,
) -> Result<T, AnalyticError> {
    let deepest = T::one() - flt::<T>(2f64.powi(-20));
    let tail_end = deepest.min(omega.max_radius() * flt(0.999_999)).max(quad.rho());
    omega.log_eval(tail_end)?;

    // radial integrability probe over dyadic shells of ω alone
    let mut shell_vals = Vec::new();
    let mut lo_r = T::zero();
    for k in 1..=20 {
        let hi_r = T::one() - flt::<T>(2f64.powi(-k));
        if hi_r > tail_end {
            break;
        }
        let (s, w) = gauss_legendre_on(8, lo_r * lo_r, hi_r * hi_r)?;
        let mut acc = KahanSum::new();
        for (&si, &wi) in s.iter().zip(&w) {
            let log_w = omega.log_eval_unchecked(si.sqrt());
            if log_w > flt(700.0) {
                return Err(AnalyticError::NonIntegrableWeight);
            }
            acc.add(wi * log_w.exp());
        }
        shell_vals.push(acc.value());
        lo_r = hi_r;
    }
    let n = shell_vals.len();
    if n >= 3
        && shell_vals[n - 1] > shell_vals[n - 2] * flt(1.02)
        && shell_vals[n - 2] > shell_vals[n - 3] * flt(1.02)
    {
        return Err(AnalyticError::NonIntegrableWeight);
    }

    let base = quad.integrate_real(|z| {
        f.eval_unchecked(z).norm() * omega.log_eval_unchecked(z.norm()).exp()
    })?;

    // tail shells continuing past the rule's truncation radius
    let m = quad.angular_count().min(128);
    let mt = flt::<T>(m as f64);
    let two_pi = T::PI() * flt::<T>(2.0);
    let mut tail = KahanSum::new();
    let mut shells: Vec<T> = Vec::new();
    let mut lo = quad.rho();
    while lo < tail_end {
        let hi = (T::one() - (T::one() - lo) * flt(0.5)).min(tail_end);
        let (s, w) = gauss_legendre_on(8, lo * lo, hi * hi)?;
        let mut acc = KahanSum::new();
        for (&si, &wi) in s.iter().zip(&w) {
            let r = si.sqrt();
            let lw = omega.log_eval_unchecked(r);
            let mut ring = KahanSum::new();
            for j in 0..m {
                let th = two_pi * flt::<T>(j as f64) / mt;
                let z = Complex::new(r * th.cos(), r * th.sin());
                ring.add(f.eval_unchecked(z).norm());
            }
            let val = wi * lw.exp() * ring.value() / mt;
            if !val.is_finite() {
                return Err(AnalyticError::DivergentIntegral);
            }
            acc.add(val);
        }
        shells.push(acc.value());
        tail.add(acc.value());
        lo = hi;
    }
    if shells.len() >= 3 {
        let n = shells.len();
        if shells[n - 1] > shells[n - 2] * flt(1.02) && shells[n - 2] > shells[n - 3] * flt(1.02)
        {
            return Err(AnalyticError::DivergentIntegral);
        }
    }
    // geometric extrapolation of the remainder beyond the last shell
    let mut extra = T::zero();
    if shells.len() >= 2 {
        let last = shells[shells.len() - 1];
        let prev = shells[shells.len() - 2];
        if prev > T::zero() && last > T::zero() {
            let q = last / prev;
            if q < flt(0.98) {
                extra = last * q / (T::one() - q);
            }
        }
    }
    Ok(base + tail.value() + extra)
}

/// `‖f‖_{H^∞_ν} = sup ν(z)|f(z)|` with argmax; growth past the scan cap is
/// flagged on the outcome.
pub fn weighted_sup_norm<T: Real>(
    f: &AnalyticFunction<T>,
    nu: &RadialWeight<T>,
    cfg: &SupSolverConfig<T>,
) -> Result<SupOutcome<T>, AnalyticError> {
    let r_cap = T::one() - flt::<T>(2f64.powi(-SCAN_RADIUS_CAP_EXP));
    nu.log_eval(r_cap)?;
    let out = sup_over_disk(
        |z| nu.log_eval_unchecked(z.norm()).exp() * f.eval_unchecked(z).norm(),
        cfg,
    )?;
    Ok(out)
}

/// Result of [`bloch_norm`]: `|f(0)|` plus the weighted sup of `|f'|`.
#[derive(Clone, Copy, Debug)]
pub struct BlochNorm<T: Real> {
    pub value: T,
    pub derivative_sup: SupOutcome<T>,
}

/// `‖f‖_{B_ν} = |f(0)| + sup ν(z)|f'(z)|`.
pub fn bloch_norm<T: Real>(
    f: &AnalyticFunction<T>,
    nu: &RadialWeight<T>,
    cfg: &SupSolverConfig<T>,
) -> Result<BlochNorm<T>, AnalyticError> {
    let derivative_sup = weighted_sup_norm(&f.differentiate(), nu, cfg)?;
    let at_zero = f.eval_unchecked(Complex::new(T::zero(), T::zero())).norm();
    Ok(BlochNorm {
        value: at_zero + derivative_sup.value,
        derivative_sup,
    })
}

/// Which boundary-vanishing condition to test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LittleMode {
    /// `ν(z)|f(z)| → 0` (membership in H⁰_ν).
    H0,
    /// `ν(z)|f'(z)| → 0` (membership in B⁰_ν).
    Bloch0,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MembershipVerdict<T: Real> {
    Member,
    NonMember { limit: T },
    Inconclusive,
}

/// Little-space membership from the boundary profile
/// `m(ρ) = max_{|z|=ρ} ν(z)|f(z)|` (or `|f'|`) along an increasing radii
/// schedule.
///
/// Member when the profile has collapsed below `10⁻⁶ m(ρ₀)`, when its
/// geometric extrapolation lands below `10⁻³ m(ρ₀)`, or when it is still
/// strictly decaying after losing half its peak; NonMember when the profile
/// settles above the `10⁻³ m(ρ₀)` floor; Inconclusive otherwise.
pub fn little_membership<T: Real>(
    f: &AnalyticFunction<T>,
    nu: &RadialWeight<T>,
    mode: LittleMode,
    schedule: &[T],
) -> Result<MembershipVerdict<T>, AnalyticError> {
    if schedule.len() < 4 {
        return Err(AnalyticError::Evaluation(
            "membership schedule needs at least 4 radii".into(),
        ));
    }
    for w in schedule.windows(2) {
        if !(w[0] < w[1]) || !(w[1] < T::one()) {
            return Err(AnalyticError::Evaluation(
                "membership schedule must increase strictly toward 1".into(),
            ));
        }
    }
    let h = match mode {
        LittleMode::H0 => f.clone(),
        LittleMode::Bloch0 => f.differentiate(),
    };
    nu.log_eval(*schedule.last().unwrap())?;

    let angles = 512usize;
    let two_pi = T::PI() * flt::<T>(2.0);
    let profile: Vec<T> = schedule
        .par_iter()
        .map(|&rho| {
            let w = nu.log_eval_unchecked(rho).exp();
            let mut best = T::zero();
            for j in 0..angles {
                let th = two_pi * flt::<T>(j as f64) / flt::<T>(angles as f64);
                let z = Complex::new(rho * th.cos(), rho * th.sin());
                best = best.max(h.eval_unchecked(z).norm());
            }
            w * best
        })
        .collect();

    let n = profile.len();
    let m0 = profile[0];
    let m_last = profile[n - 1];
    let m_max = profile.iter().copied().fold(T::zero(), T::max);
    if m_max == T::zero() || m_last <= flt::<T>(1e-6) * m0 {
        return Ok(MembershipVerdict::Member);
    }

    let d_last = profile[n - 1] - profile[n - 2];
    let d_prev = profile[n - 2] - profile[n - 3];
    // fully settled profile
    if d_last.abs() <= flt::<T>(1e-9) * m_max && d_prev.abs() <= flt::<T>(1e-9) * m_max {
        return Ok(if m_last <= flt::<T>(1e-6) * m0 {
            MembershipVerdict::Member
        } else {
            MembershipVerdict::NonMember { limit: m_last }
        });
    }
    // geometric extrapolation of the last three points
    if d_prev.abs() > T::zero() {
        let q = d_last / d_prev;
        if q >= T::zero() && q < flt(0.95) {
            let limit = (m_last + d_last * q / (T::one() - q)).max(T::zero());
            if limit <= flt::<T>(1e-3) * m0 {
                return Ok(MembershipVerdict::Member);
            }
            if d_last.abs() <= flt::<T>(0.05) * m_max {
                return Ok(MembershipVerdict::NonMember { limit });
            }
        }
    }
    // monotone slow decay: already lost half the peak and still falling
    if n >= 4 {
        let tail = &profile[n - 4..];
        let decreasing = tail.windows(2).all(|w| w[1] < w[0]);
        if decreasing && m_last <= flt::<T>(0.5) * m_max {
            return Ok(MembershipVerdict::Member);
        }
    }
    Ok(MembershipVerdict::Inconclusive)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::expr::bergman_kernel;
    use crate::quad::dyadic_radii;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use num_complex::Complex;

    type AF = AnalyticFunction<f64>;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn quad() -> DiskQuadrature<f64> {
        DiskQuadrature::build(96, 384, 1.0 - 2f64.powi(-12)).unwrap()
    }

    #[test]
    fn monomial_pairing_beta_identity() {
        // (z^m, z^n)_α = δ_mn B(m+1, α+1)
        fn beta_int(k: usize, a: f64) -> f64 {
            let mut v = 1.0;
            for j in 1..=k {
                v *= j as f64;
            }
            for j in 0..=k {
                v /= a + 1.0 + j as f64;
            }
            v
        }
        let q = quad();
        for &alpha in &[0.5, 1.0, 2.0] {
            for m in 0..=8usize {
                for n in 0..=8usize {
                    let got = pairing(&AF::monomial(m), &AF::monomial(n), alpha, &q).unwrap();
                    let expect = if m == n { beta_int(m, alpha) } else { 0.0 };
                    assert_abs_diff_eq!(got.re, expect, epsilon = 1e-8);
                    assert_abs_diff_eq!(got.im, 0.0, epsilon = 1e-8);
                }
            }
        }
        // (z, z)_1 = B(2, 2) = 1/6
        let got = pairing(&AF::monomial(1), &AF::monomial(1), 1.0, &quad()).unwrap();
        assert_abs_diff_eq!(got.re, 1.0 / 6.0, epsilon = 1e-10);
    }

    #[test]
    fn reproducing_identity_at_complex_points() {
        let q = quad();
        let f = AF::polynomial(vec![c(0.3, 0.1), c(1.0, 0.0), c(0.0, -0.4), c(0.5, 0.2)]);
        for &alpha in &[0.5, 1.0, 2.0] {
            for &(re, im) in &[(0.3, 0.0), (0.0, 0.55), (-0.4, 0.3), (0.6, -0.5)] {
                let zeta = c(re, im);
                let k = bergman_kernel(zeta, alpha).unwrap();
                let got = pairing(&f, &k, alpha, &q).unwrap();
                let expect = f.evaluate(zeta).unwrap();
                let err = (got - expect).norm();
                assert!(
                    err <= 1e-8 * (1.0 + expect.norm()),
                    "alpha={alpha} zeta={zeta}: err={err:.3e}"
                );
            }
        }
    }

    #[test]
    fn pairing_second_form_consistency() {
        // ∫ f(z) g(z̄) = ∫ f(z̄) g(z): test by swapping conjugation
        let q = quad();
        let f = AF::polynomial(vec![c(0.1, 0.2), c(0.7, -0.3), c(0.0, 0.5)]);
        let g = AF::kernel_power(c(0.4, 0.2), 3.0).unwrap();
        let first = pairing(&f, &g, 1.0, &q).unwrap();
        let second = pairing(&g, &f, 1.0, &q).unwrap();
        assert_abs_diff_eq!(first.re, second.re, epsilon = 1e-10);
        assert_abs_diff_eq!(first.im, second.im, epsilon = 1e-10);
    }

    #[test]
    fn derivative_reproducing_formula_alpha_one() {
        // f'(z) = 2 ∫ (1-|w|²)(1-z w̄)^{-3} f'(w) dA(w) for |z| <= 0.7
        let q = quad();
        let f = AF::polynomial(vec![
            c(0.0, 0.0),
            c(1.0, 0.5),
            c(-0.3, 0.0),
            c(0.2, -0.1),
            c(0.0, 0.3),
            c(0.15, 0.0),
            c(0.0, -0.2),
        ]);
        let df = f.differentiate();
        for &(re, im) in &[(0.0, 0.0), (0.5, 0.0), (0.0, 0.7), (-0.3, 0.35)] {
            let z = c(re, im);
            let kernel = AF::kernel_power(z.conj(), 3.0).unwrap().scale(c(2.0, 0.0));
            let got = pairing(&df, &kernel, 1.0, &q).unwrap();
            let expect = df.evaluate(z).unwrap();
            assert!((got - expect).norm() < 1e-6);
        }
    }

    #[test]
    fn a1_norm_examples() {
        let q = quad();
        // ∫ (1-|z|²) dA = 1/2
        let omega = RadialWeight::standard(1.0).unwrap();
        let one = AF::constant(c(1.0, 0.0));
        assert_relative_eq!(a1_norm(&one, &omega, &q).unwrap(), 0.5, max_relative = 1e-6);
        // zero function
        assert_abs_diff_eq!(
            a1_norm(&AF::zero(), &omega, &q).unwrap(),
            0.0,
            epsilon = 1e-300
        );
        // ∫ |z| dA = 2/3
        let flat = RadialWeight::constant();
        assert_relative_eq!(
            a1_norm(&AF::identity(), &flat, &q).unwrap(),
            2.0 / 3.0,
            max_relative = 1e-5
        );
    }

    #[test]
    fn a1_norm_singular_pair_complement() {
        // ω = (1-r²)^{-1/2} (pair complement of standard:1 at α = 1/2):
        // ∫ ω dA = ∫_0^1 (1-s)^{-1/2} ds = 2, recovered through the tail
        // extrapolation.
        let pair =
            crate::weights::make_normal_pair(RadialWeight::standard(1.0).unwrap(), 0.5).unwrap();
        let got = a1_norm(&AF::constant(c(1.0, 0.0)), pair.omega(), &quad()).unwrap();
        assert_relative_eq!(got, 2.0, max_relative = 2e-3);
    }

    #[test]
    fn weighted_sup_norm_examples() {
        let cfg = SupSolverConfig::default();
        let nu = RadialWeight::standard(1.0).unwrap();
        let out = weighted_sup_norm(&AF::constant(c(1.0, 0.0)), &nu, &cfg).unwrap();
        assert_abs_diff_eq!(out.value, 1.0, epsilon = 1e-12);
        assert_eq!(out.argmax, c(0.0, 0.0));

        // sup (1-r²) r = 2/(3√3) at r = 1/√3
        let out = weighted_sup_norm(&AF::identity(), &nu, &cfg).unwrap();
        assert_relative_eq!(out.value, 2.0 / (3.0 * 3.0f64.sqrt()), max_relative = 1e-10);
        assert_relative_eq!(out.argmax.norm(), 1.0 / 3.0f64.sqrt(), max_relative = 1e-4);

        // sup (1-r²)/(1-r/2) = 4(2-√3) at z = 2-√3
        let k = AF::kernel_power(c(0.5, 0.0), 1.0).unwrap();
        let out = weighted_sup_norm(&k, &nu, &cfg).unwrap();
        assert_relative_eq!(out.value, 4.0 * (2.0 - 3.0f64.sqrt()), max_relative = 1e-9);
        assert_relative_eq!(out.argmax.re, 2.0 - 3.0f64.sqrt(), max_relative = 1e-4);
    }

    #[test]
    fn sup_norm_is_homogeneous() {
        let cfg = SupSolverConfig::default();
        let nu = RadialWeight::standard(1.0).unwrap();
        let f = AF::polynomial(vec![c(0.3, 0.0), c(1.0, -0.5), c(0.0, 0.8)]);
        let base = weighted_sup_norm(&f, &nu, &cfg).unwrap().value;
        let k = c(3.0, 4.0); // |k| = 5
        let scaled = weighted_sup_norm(&f.scale(k), &nu, &cfg).unwrap().value;
        assert_relative_eq!(scaled, 5.0 * base, max_relative = 1e-12);
    }

    #[test]
    fn bloch_norm_examples() {
        let cfg = SupSolverConfig::default();
        let nu = RadialWeight::standard(1.0).unwrap();
        assert_abs_diff_eq!(
            bloch_norm(&AF::identity(), &nu, &cfg).unwrap().value,
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            bloch_norm(&AF::constant(c(-2.5, 6.0)), &nu, &cfg).unwrap().value,
            6.5,
            epsilon = 1e-12
        );
        // sup 2r(1-r²) = 4/(3√3)
        assert_relative_eq!(
            bloch_norm(&AF::monomial(2), &nu, &cfg).unwrap().value,
            4.0 / (3.0 * 3.0f64.sqrt()),
            max_relative = 1e-10
        );
    }

    #[test]
    fn membership_examples() {
        let schedule: Vec<f64> = dyadic_radii(2, 12);
        let nu = RadialWeight::standard(1.0).unwrap();
        let flat = RadialWeight::constant();

        let v = little_membership(&AF::constant(c(1.0, 0.0)), &nu, LittleMode::H0, &schedule)
            .unwrap();
        assert_eq!(v, MembershipVerdict::Member);

        // slow decay near the boundary still classified Member
        let k = AF::kernel_power(c(0.999, 0.0), 1.0).unwrap();
        let v = little_membership(&k, &nu, LittleMode::H0, &schedule).unwrap();
        assert_eq!(v, MembershipVerdict::Member);

        // |1+z| -> 2 under the flat weight: limit 2 at z -> 1
        let f = AF::polynomial(vec![c(1.0, 0.0), c(1.0, 0.0)]);
        match little_membership(&f, &flat, LittleMode::H0, &schedule).unwrap() {
            MembershipVerdict::NonMember { limit } => {
                assert_relative_eq!(limit, 2.0, max_relative = 1e-3)
            }
            other => panic!("expected NonMember, got {other:?}"),
        }

        // Bloch mode: f = z² has ν|f'| = 2r(1-r²) -> 0
        let v = little_membership(&AF::monomial(2), &nu, LittleMode::Bloch0, &schedule).unwrap();
        assert_eq!(v, MembershipVerdict::Member);
    }
}
