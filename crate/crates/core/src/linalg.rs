//! Dense symmetric eigenvalues: Householder reduction to tridiagonal form
//! followed by implicit-shift QL. Eigenvalues only.

use crate::error::{Error, Result};
use crate::graph::SymmetricMatrix;
use crate::scalar::{lit, Real};

/// Maximum QL sweeps spent on a single eigenvalue.
const MAX_SWEEPS: usize = 60;

/// Tridiagonal matrix: `diag[i]` and `off[i]` coupling rows `i` and `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal<T> {
    pub diag: Vec<T>,
    pub off: Vec<T>,
}

/// All eigenvalues of a symmetric matrix in non-increasing order.
pub fn symmetric_eigenvalues<T: Real>(m: SymmetricMatrix<T>) -> Result<Vec<T>> {
    let tri = tridiagonalize(m);
    let mut values = tridiagonal_eigenvalues(tri)?;
    values.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    Ok(values)
}

/// Householder reduction `Qᵀ A Q = T`, working on full row-major storage so
/// that every inner loop walks a contiguous row.
pub fn tridiagonalize<T: Real>(m: SymmetricMatrix<T>) -> Tridiagonal<T> {
    let (n, mut a) = m.into_raw();
    let mut diag = vec![T::zero(); n];
    let mut off = vec![T::zero(); n.saturating_sub(1)];
    if n == 0 {
        return Tridiagonal { diag, off };
    }
    let mut v = vec![T::zero(); n];
    let mut p = vec![T::zero(); n];
    let two = lit::<T>(2.0);
    let half = lit::<T>(0.5);

    for k in 0..n.saturating_sub(2) {
        diag[k] = a[k * n + k];
        // column k below the diagonal == row k right of the diagonal
        let x = &a[k * n + k + 1..k * n + n];
        let x0 = x[0];
        let sigma: T = x[1..].iter().map(|&t| t * t).sum();
        if sigma == T::zero() {
            off[k] = x0;
            continue;
        }
        let mu = (x0 * x0 + sigma).sqrt();
        let v0 = if x0 <= T::zero() { x0 - mu } else { -sigma / (x0 + mu) };
        let beta = two * v0 * v0 / (sigma + v0 * v0);
        let m_len = n - k - 1;
        v[0] = T::one();
        for i in 1..m_len {
            v[i] = x[i] / v0;
        }
        off[k] = mu;

        // p = beta * S v over the trailing block S = A[k+1.., k+1..]
        let base = k + 1;
        for i in 0..m_len {
            let row = &a[(base + i) * n + base..(base + i) * n + n];
            let s: T = row.iter().zip(&v[..m_len]).map(|(&r, &vi)| r * vi).sum();
            p[i] = beta * s;
        }
        let pv: T = p[..m_len].iter().zip(&v[..m_len]).map(|(&pi, &vi)| pi * vi).sum();
        let coef = half * beta * pv;
        for i in 0..m_len {
            p[i] = p[i] - coef * v[i];
        }
        // S -= v wᵀ + w vᵀ with w stored in p
        for i in 0..m_len {
            let (vi, wi) = (v[i], p[i]);
            let row = &mut a[(base + i) * n + base..(base + i) * n + n];
            for ((r, &vj), &wj) in row.iter_mut().zip(&v[..m_len]).zip(&p[..m_len]) {
                *r = *r - vi * wj - wi * vj;
            }
        }
    }
    if n >= 2 {
        diag[n - 2] = a[(n - 2) * n + n - 2];
        off[n - 2] = a[(n - 1) * n + n - 2];
    }
    diag[n - 1] = a[(n - 1) * n + n - 1];
    Tridiagonal { diag, off }
}

/// Eigenvalues of a symmetric tridiagonal matrix by implicit QL with
/// Wilkinson-style shifts (unsorted).
pub fn tridiagonal_eigenvalues<T: Real>(tri: Tridiagonal<T>) -> Result<Vec<T>> {
    let Tridiagonal { diag: mut d, off } = tri;
    let n = d.len();
    let mut e = off;
    e.push(T::zero());
    let two = lit::<T>(2.0);
    let eps = T::eps();
    // absolute floor: near-zero eigenvalue clusters (trees, stars) make the
    // relative test unattainable
    let norm = (0..n).map(|i| d[i].abs() + e[i].abs()).fold(T::zero(), |a, b| a.max(b));
    let floor = eps * norm;

    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd || e[m].abs() <= floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_SWEEPS {
                return Err(Error::ConvergenceFailure { index: l, iterations: MAX_SWEEPS });
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + r.abs().copysign(g));
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
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
            }
            if underflow {
                continue;
            }
            d[l] = d[l] - p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    Ok(d)
}
