//! Derivative-free one-dimensional minimization and grid scans.

use serde::Serialize;

use crate::scalar::{lit, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GoldenResult<T> {
    pub x: T,
    pub f: T,
    /// Final bracket, no wider than the tolerance.
    pub bracket: (T, T),
    pub evaluations: usize,
}

/// Golden-section search for a minimum of `f` on `[a, b]`, stopping once
/// the bracket is narrower than `tol`. Assumes `f` is unimodal on `[a, b]`.
pub fn golden_section<T: Real>(mut f: impl FnMut(T) -> T, a: T, b: T, tol: T) -> GoldenResult<T> {
    let inv_phi = lit::<T>(0.618_033_988_749_894_8);
    let (mut a, mut b) = if a <= b { (a, b) } else { (b, a) };
    let mut c = b - (b - a) * inv_phi;
    let mut d = a + (b - a) * inv_phi;
    let (mut fc, mut fd) = (f(c), f(d));
    let mut evaluations = 2;
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * inv_phi;
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * inv_phi;
            fd = f(d);
        }
        evaluations += 1;
        // the interior points collapse once the bracket reaches rounding level
        if !(c < d) && b - a > tol {
            break;
        }
    }
    let (x, fx) = if fc <= fd { (c, fc) } else { (d, fd) };
    GoldenResult { x, f: fx, bracket: (a, b), evaluations }
}

/// `lo, lo + step, …` up to `hi` (inclusive within rounding). Points are
/// computed as `lo + k·step`, so halving the step yields a superset.
pub fn grid_points(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let count = ((hi - lo) / step * (1.0 + 1e-12) + 1e-9).floor() as usize;
    (0..=count).map(|k| lo + step * k as f64).collect()
}

/// Index of the first minimal finite value.
pub fn argmin_first<T: Real>(values: &[T]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, v) in values.iter().enumerate() {
        if !v.is_finite() {
            continue;
        }
        match best {
            Some(b) if values[b] <= *v => {}
            _ => best = Some(k),
        }
    }
    best
}

/// Local minima of a sampled profile. Plateaus count once (at their first
/// point); non-finite values act as barriers.
pub fn local_minima<T: Real>(values: &[T]) -> Vec<usize> {
    let n = values.len();
    let mut out = Vec::new();
    let mut k = 0;
    while k < n {
        if !values[k].is_finite() {
            k += 1;
            continue;
        }
        let mut end = k;
        while end + 1 < n && values[end + 1] == values[k] {
            end += 1;
        }
        let left_ok = k == 0 || !values[k - 1].is_finite() || values[k - 1] > values[k];
        let right_ok = end + 1 == n || !values[end + 1].is_finite() || values[end + 1] > values[k];
        if left_ok && right_ok {
            out.push(k);
        }
        k = end + 1;
    }
    out
}

/// Minima of `values` sampled at `xs` that are pairwise farther apart than
/// `separation`; two or more mean the profile is not unimodal.
pub fn separated_minima(xs: &[f64], values: &[f64], separation: f64) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for k in local_minima(values) {
        if kept.iter().all(|&j| (xs[j] - xs[k]).abs() > separation) {
            kept.push(k);
        }
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_quadratic_minimum() {
        let r = golden_section(|t: f64| (t - 0.3) * (t - 0.3), 0.0, 1.0, 1e-8);
        assert!((r.x - 0.3).abs() < 1e-6);
        assert!(r.bracket.1 - r.bracket.0 <= 1e-8);
        assert!(r.bracket.0 <= 0.3 && 0.3 <= r.bracket.1);
        let r32 = golden_section(|t: f32| (t - 0.25).abs(), 0.0, 1.0, 1e-5);
        assert!((r32.x - 0.25).abs() < 1e-4);
    }

    #[test]
    fn grid_refinement_contains_coarse_points() {
        let coarse = grid_points(0.0, 1.0, 0.01);
        let fine = grid_points(0.0, 1.0, 0.005);
        assert_eq!(coarse.len(), 101);
        assert_eq!(fine.len(), 201);
        for (k, x) in coarse.iter().enumerate() {
            assert_eq!(*x, fine[2 * k]);
        }
        assert_eq!(grid_points(1.0, 4.0, 0.01).len(), 301);
    }

    #[test]
    fn minima_detection() {
        let v = [3.0, 1.0, 2.0, 0.5, 0.5, 4.0, f64::INFINITY, 1.0];
        assert_eq!(local_minima(&v), vec![1, 3, 7]);
        assert_eq!(argmin_first(&v), Some(3));
        let xs = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7];
        assert_eq!(separated_minima(&xs, &v, 0.25), vec![1, 7]);
        assert_eq!(local_minima(&[1.0, 1.0, 1.0]), vec![0]);
    }

    #[test]
    fn golden_agrees_with_grid_on_unimodal_profiles() {
        for (c, w) in [(0.123, 1.0), (0.77, 3.0), (0.5, 0.2)] {
            let f = |t: f64| w * (t - c).abs().powf(1.5) + 0.1;
            let xs = grid_points(0.0, 1.0, 0.001);
            let vals: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
            let g = xs[argmin_first(&vals).unwrap()];
            let r = golden_section(f, 0.0, 1.0, 1e-8);
            assert!((r.x - g).abs() <= 0.001);
        }
    }
}
