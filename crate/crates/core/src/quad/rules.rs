//! Gaussian quadrature rules via Golub–Welsch: eigenvalues of the Jacobi
//! matrix give the nodes, squared first eigenvector components the weights.
//! Covers Gauss–Legendre and Gauss–Jacobi with weight `(1-x)^a` (the radial
//! rules this crate needs; `b = 0` keeps the zeroth moment elementary).

use crate::quad::QuadError;
use crate::scalar::{flt, Real};

/// Eigenvalues and first eigenvector components of a symmetric tridiagonal
/// matrix, by the implicit QL algorithm. `offdiag.len() == diag.len() - 1`.
fn symmetric_tridiagonal_eigen<T: Real>(
    diag: &[T],
    offdiag: &[T],
) -> Result<(Vec<T>, Vec<T>), QuadError> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![T::zero(); n];
    e[..n - 1].copy_from_slice(offdiag);
    let mut z = vec![T::zero(); n];
    z[0] = T::one();
    let two = flt::<T>(2.0);

    for l in 0..n {
        let mut iter = 0usize;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= T::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 80 {
                return Err(QuadError::EigenFailed);
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            let sign_r = if g >= T::zero() { r } else { -r };
            g = d[m] - d[l] + e[l] / (g + sign_r);
            let mut s = T::one();
            let mut c = T::one();
            let mut p = T::zero();
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r.is_zero() {
                    d[i + 1] = d[i + 1] - p;
                    e[m] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            if underflow {
                continue;
            }
            d[l] = d[l] - p;
            e[l] = g;
            e[m] = T::zero();
        }
    }

    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).expect("finite eigenvalues"));
    let nodes = idx.iter().map(|&i| d[i]).collect();
    let firsts = idx.iter().map(|&i| z[i]).collect();
    Ok((nodes, firsts))
}

/// Gauss rule for `∫_{-1}^{1} f(x) (1-x)^a dx`, `a > -1` (`a = 0` is
/// Gauss–Legendre). Returns `(nodes, weights)` with ascending nodes.
pub fn gauss_jacobi<T: Real>(n: usize, a: T) -> Result<(Vec<T>, Vec<T>), QuadError> {
    if n == 0 {
        return Err(QuadError::InvalidRuleSize(0));
    }
    let one = T::one();
    let two = flt::<T>(2.0);
    let four = flt::<T>(4.0);
    // monic Jacobi (a, 0) recurrence on [-1, 1]
    let mut diag = Vec::with_capacity(n);
    let mut off = Vec::with_capacity(n.saturating_sub(1));
    for k in 0..n {
        let kt = flt::<T>(k as f64);
        if k == 0 {
            diag.push(-a / (a + two));
        } else {
            let den = (two * kt + a) * (two * kt + a + two);
            diag.push(-(a * a) / den);
        }
    }
    for k in 1..n {
        let kt = flt::<T>(k as f64);
        let num = four * kt * kt * (kt + a) * (kt + a);
        let den =
            (two * kt + a) * (two * kt + a) * (two * kt + a + one) * (two * kt + a - one);
        off.push((num / den).sqrt());
    }
    let (nodes, firsts) = symmetric_tridiagonal_eigen(&diag, &off)?;
    // zeroth moment ∫(1-x)^a dx = 2^{a+1}/(a+1)
    let mu0 = two.powf(a + one) / (a + one);
    let weights = firsts.iter().map(|&f| mu0 * f * f).collect();
    Ok((nodes, weights))
}

/// Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre<T: Real>(n: usize) -> Result<(Vec<T>, Vec<T>), QuadError> {
    gauss_jacobi(n, T::zero())
}

/// Gauss–Legendre rule mapped to `[lo, hi]`.
pub fn gauss_legendre_on<T: Real>(
    n: usize,
    lo: T,
    hi: T,
) -> Result<(Vec<T>, Vec<T>), QuadError> {
    let (xs, ws) = gauss_legendre(n)?;
    let half = flt::<T>(0.5);
    let mid = (lo + hi) * half;
    let rad = (hi - lo) * half;
    Ok((
        xs.iter().map(|&x| mid + rad * x).collect(),
        ws.iter().map(|&w| w * rad).collect(),
    ))
}

/// Rule for `∫_0^1 h(s) (1-s)^a ds` (used by the duality pairing, where the
/// `(1-|z|²)^α` factor must be part of the quadrature weight to reach
/// full-disk accuracy).
pub fn gauss_jacobi_unit<T: Real>(n: usize, a: T) -> Result<(Vec<T>, Vec<T>), QuadError> {
    let (xs, ws) = gauss_jacobi(n, a)?;
    let half = flt::<T>(0.5);
    let scale = (flt::<T>(2.0)).powf(-(a + T::one()));
    Ok((
        xs.iter().map(|&x| (x + T::one()) * half).collect(),
        ws.iter().map(|&w| w * scale).collect(),
    ))
}
