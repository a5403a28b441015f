//! Radial weights on the unit disk and the Shields–Williams normality
//! machinery.
//!
//! A radial weight is a positive, non-increasing, continuous function of
//! `r = |z|` on `[0, 1)`. Normality is decided algorithmically at the dyadic
//! radii `1 - 2^{-n}`:
//!
//! * condition I holds when `inf_n ν(1-2^{-(n+1)})/ν(1-2^{-n}) > 0`, and the
//!   associated exponent `β` is the smallest one for which
//!   `ν(r)/(1-r²)^β` passes a sampled almost-increasing test;
//! * condition II holds when some lag `k` gives
//!   `limsup_n ν(1-2^{-(n+k)})/ν(1-2^{-n}) < 1`, with `γ` the largest
//!   exponent passing the sampled almost-decreasing test.
//!
//! All evaluation happens in log space: weights like `exp(-c/(1-r))`
//! underflow `f64` long before the deepest dyadic radius is reached.

use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::scalar::{as_f64, flt, Real};

/// Largest exponent probed by the β/γ bisections.
const EXPONENT_CAP: f64 = 8.0;

#[derive(Debug, Error)]
pub enum WeightError {
    #[error("weight parameter must be positive, got {0}")]
    NonPositiveParameter(f64),
    #[error("radius {0} outside the weight domain [0, 1)")]
    OutOfDomain(f64),
    #[error("weight not evaluable at r = {radius} (table ends at {max_radius})")]
    Resolution { radius: f64, max_radius: f64 },
    #[error("tabulated weight needs at least 4 samples, got {0}")]
    TableTooSmall(usize),
    #[error("tabulated radii must be strictly increasing within [0, 1)")]
    TableNotIncreasing,
    #[error("tabulated weight must be positive and non-increasing (violated near r = {0})")]
    TableNotMonotone(f64),
    #[error("unknown weight spec `{0}` (expected standard:<alpha>, exp:<c>, const, table:<path>)")]
    BadSpec(String),
    #[error("failed to read weight table {path}: {message}")]
    TableIo { path: String, message: String },
    #[error("check_normality requires n_max >= 4 and k_max >= 1")]
    BadNormalityArgs,
    #[error("weight is not normal (verdict {0:?}); cannot form a normal pair")]
    NotNormal(NormalityVerdict),
    #[error("alpha = {alpha} violates alpha > beta - 1 = {limit}")]
    AlphaTooSmall { alpha: f64, limit: f64 },
}

#[derive(Clone, Debug)]
enum Kind<T: Real> {
    /// `ν(r) = (1 - r²)^{α₀}`, `α₀ > 0`.
    Standard { alpha0: T },
    /// `ν(r) = exp(-c / (1 - r))`, `c > 0`.
    Exponential { c: T },
    /// `ν ≡ 1`.
    Constant,
    /// Samples `(r_i, ν(r_i))` with monotone piecewise-cubic interpolation
    /// of `log ν`; evaluable only up to the last sampled radius.
    Tabulated {
        radii: Vec<T>,
        log_values: Vec<T>,
        slopes: Vec<T>,
    },
    /// `ω(r) = (1 - r²)^α / ν(r)` for a normal pair `{ν, ω}`. Exempt from
    /// the non-increasing requirement (it typically increases).
    PairComplement { alpha: T, nu: Box<RadialWeight<T>> },
}

/// Evaluable radial weight with normality metadata available on demand.
#[derive(Clone, Debug)]
pub struct RadialWeight<T: Real> {
    kind: Kind<T>,
}

impl<T: Real> RadialWeight<T> {
    pub fn standard(alpha0: T) -> Result<Self, WeightError> {
        if !(alpha0 > T::zero()) || !alpha0.is_finite() {
            return Err(WeightError::NonPositiveParameter(as_f64(alpha0)));
        }
        Ok(Self {
            kind: Kind::Standard { alpha0 },
        })
    }

    pub fn exponential(c: T) -> Result<Self, WeightError> {
        if !(c > T::zero()) || !c.is_finite() {
            return Err(WeightError::NonPositiveParameter(as_f64(c)));
        }
        Ok(Self {
            kind: Kind::Exponential { c },
        })
    }

    pub fn constant() -> Self {
        Self {
            kind: Kind::Constant,
        }
    }

    /// Build from `(r, ν(r))` samples. The samples must be strictly
    /// increasing in `r`, positive, and non-increasing in value; both
    /// invariants are re-checked on a 10^4-point grid of the interpolant.
    pub fn tabulated(samples: &[(T, T)]) -> Result<Self, WeightError> {
        if samples.len() < 4 {
            return Err(WeightError::TableTooSmall(samples.len()));
        }
        let mut radii = Vec::with_capacity(samples.len());
        let mut log_values = Vec::with_capacity(samples.len());
        for &(r, v) in samples {
            if !(r >= T::zero()) || !(r < T::one()) {
                return Err(WeightError::OutOfDomain(as_f64(r)));
            }
            if !(v > T::zero()) || !v.is_finite() {
                return Err(WeightError::TableNotMonotone(as_f64(r)));
            }
            if let Some(&prev) = radii.last() {
                if !(r > prev) {
                    return Err(WeightError::TableNotIncreasing);
                }
            }
            radii.push(r);
            log_values.push(v.ln());
        }
        let slopes = fritsch_carlson_slopes(&radii, &log_values);
        let weight = Self {
            kind: Kind::Tabulated {
                radii,
                log_values,
                slopes,
            },
        };
        weight.check_sampled_invariants()?;
        Ok(weight)
    }

    /// Parse the CLI weight grammar: `standard:<alpha>`, `exp:<c>`, `const`,
    /// `table:<path>` (two-column text: r and ν(r)). Relative table paths
    /// resolve against `base_dir`.
    pub fn from_spec(spec: &str, base_dir: Option<&Path>) -> Result<Self, WeightError> {
        let spec = spec.trim();
        if spec == "const" {
            return Ok(Self::constant());
        }
        if let Some(arg) = spec.strip_prefix("standard:") {
            let alpha0: f64 = arg
                .trim()
                .parse()
                .map_err(|_| WeightError::BadSpec(spec.to_string()))?;
            return Self::standard(flt(alpha0));
        }
        if let Some(arg) = spec.strip_prefix("exp:") {
            let c: f64 = arg
                .trim()
                .parse()
                .map_err(|_| WeightError::BadSpec(spec.to_string()))?;
            return Self::exponential(flt(c));
        }
        if let Some(arg) = spec.strip_prefix("table:") {
            let path = arg.trim();
            let full = match base_dir {
                Some(dir) if !Path::new(path).is_absolute() => dir.join(path),
                _ => Path::new(path).to_path_buf(),
            };
            let text = std::fs::read_to_string(&full).map_err(|e| WeightError::TableIo {
                path: full.display().to_string(),
                message: e.to_string(),
            })?;
            let mut samples = Vec::new();
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let mut it = line.split_whitespace();
                let (Some(r), Some(v)) = (it.next(), it.next()) else {
                    return Err(WeightError::TableIo {
                        path: full.display().to_string(),
                        message: format!("line {}: expected two columns", lineno + 1),
                    });
                };
                let r: f64 = r.parse().map_err(|_| WeightError::TableIo {
                    path: full.display().to_string(),
                    message: format!("line {}: bad radius", lineno + 1),
                })?;
                let v: f64 = v.parse().map_err(|_| WeightError::TableIo {
                    path: full.display().to_string(),
                    message: format!("line {}: bad value", lineno + 1),
                })?;
                samples.push((flt(r), flt(v)));
            }
            return Self::tabulated(&samples);
        }
        Err(WeightError::BadSpec(spec.to_string()))
    }

    /// Canonical spec string (inverse of [`Self::from_spec`] for the three
    /// closed-form kinds).
    pub fn spec_string(&self) -> String {
        match &self.kind {
            Kind::Standard { alpha0 } => format!("standard:{}", alpha0),
            Kind::Exponential { c } => format!("exp:{}", c),
            Kind::Constant => "const".to_string(),
            Kind::Tabulated { radii, .. } => format!("table:<{} samples>", radii.len()),
            Kind::PairComplement { alpha, .. } => format!("pair-complement:{}", alpha),
        }
    }

    pub fn is_tabulated(&self) -> bool {
        matches!(self.kind, Kind::Tabulated { .. })
    }

    /// Largest radius at which the weight can be evaluated (1 for the
    /// closed-form kinds, the last sample for tabulated data).
    pub fn max_radius(&self) -> T {
        match &self.kind {
            Kind::Tabulated { radii, .. } => *radii.last().expect("non-empty table"),
            Kind::PairComplement { nu, .. } => nu.max_radius(),
            _ => T::one(),
        }
    }

    /// `log ν(r)`; errors outside `[0, 1)` or past the table end.
    pub fn log_eval(&self, r: T) -> Result<T, WeightError> {
        if !(r >= T::zero()) || !(r < T::one()) {
            return Err(WeightError::OutOfDomain(as_f64(r)));
        }
        match &self.kind {
            Kind::Tabulated { radii, .. } => {
                let max = *radii.last().unwrap();
                if r > max {
                    return Err(WeightError::Resolution {
                        radius: as_f64(r),
                        max_radius: as_f64(max),
                    });
                }
            }
            Kind::PairComplement { nu, .. } => {
                nu.log_eval(r)?;
            }
            _ => {}
        }
        Ok(self.log_eval_unchecked(r))
    }

    /// `log ν(r)` without domain checks; callers must pre-validate via
    /// [`Self::log_eval`] or [`Self::max_radius`].
    pub fn log_eval_unchecked(&self, r: T) -> T {
        match &self.kind {
            // log(1-r²) = log1p(-r) + log1p(r) stays accurate as r -> 1.
            Kind::Standard { alpha0 } => *alpha0 * ((-r).ln_1p() + r.ln_1p()),
            Kind::Exponential { c } => -*c / (T::one() - r),
            Kind::Constant => T::zero(),
            Kind::Tabulated {
                radii,
                log_values,
                slopes,
            } => hermite_eval(radii, log_values, slopes, r),
            Kind::PairComplement { alpha, nu } => {
                *alpha * ((-r).ln_1p() + r.ln_1p()) - nu.log_eval_unchecked(r)
            }
        }
    }

    /// `ν(r)`; may underflow to 0 for extreme log values (use
    /// [`Self::log_eval`] when that matters).
    pub fn eval(&self, r: T) -> Result<T, WeightError> {
        Ok(self.log_eval(r)?.exp())
    }

    pub fn eval_unchecked(&self, r: T) -> T {
        self.log_eval_unchecked(r).exp()
    }

    fn check_sampled_invariants(&self) -> Result<(), WeightError> {
        let n = 10_000usize;
        let max_r = self.max_radius();
        let tol = flt::<T>(1e-12);
        let mut prev = T::infinity();
        for i in 0..n {
            let r = max_r * flt::<T>(i as f64 / n as f64);
            let v = self.eval_unchecked(r);
            if !(v > T::zero()) {
                return Err(WeightError::TableNotMonotone(as_f64(r)));
            }
            if v > prev + tol {
                return Err(WeightError::TableNotMonotone(as_f64(r)));
            }
            prev = v;
        }
        Ok(())
    }

    /// Dyadic normality check; see the module docs. `tol` guards every
    /// strict inequality (default 1e-6 in callers).
    pub fn check_normality(
        &self,
        n_max: usize,
        k_max: usize,
        tol: T,
    ) -> Result<NormalityReport<T>, WeightError> {
        if n_max < 4 || k_max < 1 {
            return Err(WeightError::BadNormalityArgs);
        }
        // log ν at r_n = 1 - 2^{-n}, n = 1..=n_max (errors if the weight
        // cannot resolve the deepest radius).
        let mut log_nu = Vec::with_capacity(n_max);
        for n in 1..=n_max {
            let r = T::one() - flt::<T>(2f64.powi(-(n as i32)));
            log_nu.push(self.log_eval(r)?);
        }

        let log_ratios: Vec<T> = (0..n_max - 1).map(|i| log_nu[i + 1] - log_nu[i]).collect();
        let ratios: Vec<T> = log_ratios.iter().map(|&l| l.exp()).collect();
        let inf_log = log_ratios
            .iter()
            .copied()
            .fold(T::infinity(), |a, b| a.min(b));
        let condition_i_inf = inf_log.exp();
        let condition_i = condition_i_inf > tol;

        // Smallest lag k whose tail-ratio maximum sits below 1 - tol. The
        // limsup proxy maximises over the upper half of the sampled range.
        let mut condition_ii_k = None;
        for k in 1..=k_max {
            if k >= n_max {
                break;
            }
            let start = (n_max / 2).max(1);
            let mut worst = T::neg_infinity();
            let mut any = false;
            for n in start..=(n_max - k) {
                let l = log_nu[n + k - 1] - log_nu[n - 1];
                worst = worst.max(l);
                any = true;
            }
            if any && worst < (T::one() - tol).ln() {
                condition_ii_k = Some(k);
                break;
            }
        }

        let dyadic_log_one_minus_r2: Vec<T> = (1..=n_max)
            .map(|n| {
                let r = T::one() - flt::<T>(2f64.powi(-(n as i32)));
                (-r).ln_1p() + r.ln_1p()
            })
            .collect();

        // Almost-increasing test for ν(r)/(1-r²)^β at the dyadic radii:
        // a_n/a_m >= 1 - tol for all m < n.
        let almost_increasing = |beta: T| -> bool {
            let a: Vec<T> = log_nu
                .iter()
                .zip(&dyadic_log_one_minus_r2)
                .map(|(&lv, &lw)| lv - beta * lw)
                .collect();
            let floor = (T::one() - tol).ln();
            let mut running_max = T::neg_infinity();
            for &v in &a {
                if running_max.is_finite() && v < running_max + floor {
                    return false;
                }
                running_max = running_max.max(v);
            }
            true
        };
        // Almost-decreasing test for ν(r)/(1-r²)^γ: a_n/a_m <= 1 + tol.
        let almost_decreasing = |gamma: T| -> bool {
            let a: Vec<T> = log_nu
                .iter()
                .zip(&dyadic_log_one_minus_r2)
                .map(|(&lv, &lw)| lv - gamma * lw)
                .collect();
            let ceil = (T::one() + tol).ln();
            let mut running_min = T::infinity();
            for &v in &a {
                if running_min.is_finite() && v > running_min + ceil {
                    return false;
                }
                running_min = running_min.min(v);
            }
            true
        };

        let cap = flt::<T>(EXPONENT_CAP);
        // test passes for all β >= β*; bisect for the smallest.
        let beta_estimate = if almost_increasing(cap) {
            let mut lo = T::zero();
            let mut hi = cap;
            for _ in 0..60 {
                let mid = (lo + hi) * flt(0.5);
                if almost_increasing(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Some(hi)
        } else {
            None
        };
        // test passes for all γ <= γ*; bisect for the largest.
        let gamma_estimate = if almost_decreasing(T::zero() + T::epsilon()) {
            if almost_decreasing(cap) {
                Some(cap)
            } else {
                let mut lo = T::epsilon();
                let mut hi = cap;
                for _ in 0..60 {
                    let mid = (lo + hi) * flt(0.5);
                    if almost_decreasing(mid) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Some(lo)
            }
        } else {
            None
        };

        let verdict = if !condition_i {
            NormalityVerdict::FailsI
        } else if condition_ii_k.is_none() {
            NormalityVerdict::FailsII
        } else {
            NormalityVerdict::Normal
        };

        Ok(NormalityReport {
            condition_i_ratios: ratios,
            condition_i_inf,
            beta_estimate,
            condition_ii_k,
            gamma_estimate,
            verdict,
            sampled: self.is_tabulated(),
        })
    }
}

/// Outcome of the dyadic normality check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormalityVerdict {
    Normal,
    FailsI,
    FailsII,
}

impl fmt::Display for NormalityVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormalityVerdict::Normal => write!(f, "Normal"),
            NormalityVerdict::FailsI => write!(f, "FailsI"),
            NormalityVerdict::FailsII => write!(f, "FailsII"),
        }
    }
}

/// Diagnostics from [`RadialWeight::check_normality`].
///
/// `sampled` marks verdicts obtained from interpolated (tabulated) weights;
/// those are not certified.
#[derive(Clone, Debug)]
pub struct NormalityReport<T: Real> {
    /// `ν(1-2^{-(n+1)})/ν(1-2^{-n})` for `n = 1..n_max` (may underflow to 0;
    /// the verdict is computed from log ratios).
    pub condition_i_ratios: Vec<T>,
    pub condition_i_inf: T,
    /// Smallest exponent passing the sampled almost-increasing test.
    pub beta_estimate: Option<T>,
    /// Smallest lag passing the condition-II tail test.
    pub condition_ii_k: Option<usize>,
    /// Largest exponent passing the sampled almost-decreasing test.
    pub gamma_estimate: Option<T>,
    pub verdict: NormalityVerdict,
    pub sampled: bool,
}

/// Weights `{ν, ω}` with `ν(r)·ω(r) = (1-r²)^α` and `α > β - 1`.
#[derive(Clone, Debug)]
pub struct NormalPair<T: Real> {
    nu: RadialWeight<T>,
    omega: RadialWeight<T>,
    alpha: T,
    beta_estimate: T,
}

impl<T: Real> NormalPair<T> {
    /// Checks normality of `ν` (n_max = 20, k_max = 8, tol = 1e-6) and the
    /// exponent constraint, then forms `ω`.
    pub fn new(nu: RadialWeight<T>, alpha: T) -> Result<Self, WeightError> {
        let report = nu.check_normality(20, 8, flt(1e-6))?;
        Self::from_report(nu, alpha, &report)
    }

    /// Same as [`Self::new`] with a caller-supplied normality report.
    pub fn from_report(
        nu: RadialWeight<T>,
        alpha: T,
        report: &NormalityReport<T>,
    ) -> Result<Self, WeightError> {
        if report.verdict != NormalityVerdict::Normal {
            return Err(WeightError::NotNormal(report.verdict));
        }
        let beta = report
            .beta_estimate
            .ok_or(WeightError::NotNormal(report.verdict))?;
        if !(alpha > beta - T::one()) {
            return Err(WeightError::AlphaTooSmall {
                alpha: as_f64(alpha),
                limit: as_f64(beta - T::one()),
            });
        }
        let omega = RadialWeight {
            kind: Kind::PairComplement {
                alpha,
                nu: Box::new(nu.clone()),
            },
        };
        Ok(Self {
            nu,
            omega,
            alpha,
            beta_estimate: beta,
        })
    }

    pub fn nu(&self) -> &RadialWeight<T> {
        &self.nu
    }

    pub fn omega(&self) -> &RadialWeight<T> {
        &self.omega
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn beta_estimate(&self) -> T {
        self.beta_estimate
    }
}

/// Construct the pair `{ν, ω}`; see [`NormalPair::new`].
pub fn make_normal_pair<T: Real>(
    nu: RadialWeight<T>,
    alpha: T,
) -> Result<NormalPair<T>, WeightError> {
    NormalPair::new(nu, alpha)
}

/// Fritsch–Carlson monotone cubic slopes for Hermite interpolation.
fn fritsch_carlson_slopes<T: Real>(xs: &[T], ys: &[T]) -> Vec<T> {
    let n = xs.len();
    let mut d = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        d.push((ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]));
    }
    let mut m = vec![T::zero(); n];
    m[0] = d[0];
    m[n - 1] = d[n - 2];
    for i in 1..n - 1 {
        if d[i - 1] * d[i] <= T::zero() {
            m[i] = T::zero();
        } else {
            // harmonic mean keeps the interpolant monotone
            let w1 = flt::<T>(2.0) * (xs[i + 1] - xs[i]) + (xs[i] - xs[i - 1]);
            let w2 = (xs[i + 1] - xs[i]) + flt::<T>(2.0) * (xs[i] - xs[i - 1]);
            m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
        }
    }
    m
}

fn hermite_eval<T: Real>(xs: &[T], ys: &[T], ms: &[T], x: T) -> T {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0] + ms[0] * (x - xs[0]);
    }
    if x >= xs[n - 1] {
        return ys[n - 1] + ms[n - 1] * (x - xs[n - 1]);
    }
    let mut lo = 0usize;
    let mut hi = n - 1;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if xs[mid] <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let h = xs[lo + 1] - xs[lo];
    let t = (x - xs[lo]) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let two = flt::<T>(2.0);
    let three = flt::<T>(3.0);
    let h00 = two * t3 - three * t2 + T::one();
    let h10 = t3 - two * t2 + t;
    let h01 = -two * t3 + three * t2;
    let h11 = t3 - t2;
    h00 * ys[lo] + h10 * h * ms[lo] + h01 * ys[lo + 1] + h11 * h * ms[lo + 1]
}
