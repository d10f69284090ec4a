//! Divergences between eigenvalue distributions.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laws::LawCdf;
use crate::numeric::{gauss_integrate, gauss_legendre_16, gauss_legendre_64, trapezoid};
use crate::scalar::{from_usize, lit, to_f64, Real};
use crate::spectrum::{DensityCurve, EmpiricalCdf, Grid};

/// Floor applied to the model density inside the Kullback-Leibler log.
pub const DEFAULT_KL_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Divergence {
    KullbackLeibler,
    L1Density,
    L1Cdf,
}

impl Divergence {
    /// Report order: KL, ℓ1 on densities, ℓ1 on distribution functions.
    pub const ALL: [Divergence; 3] = [Divergence::KullbackLeibler, Divergence::L1Density, Divergence::L1Cdf];

    pub fn name(self) -> &'static str {
        match self {
            Divergence::KullbackLeibler => "kl",
            Divergence::L1Density => "l1-density",
            Divergence::L1Cdf => "l1-cdf",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "kl" | "kullback-leibler" => Ok(Divergence::KullbackLeibler),
            "l1-density" | "l1" | "density" => Ok(Divergence::L1Density),
            "l1-cdf" | "cdf" => Ok(Divergence::L1Cdf),
            other => Err(Error::InvalidParameter(format!("unknown divergence {other:?} (kl, l1-density, l1-cdf)"))),
        }
    }

    /// True when the divergence compares densities rather than distribution
    /// functions.
    pub fn uses_density(self) -> bool {
        !matches!(self, Divergence::L1Cdf)
    }
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Grid spanning both curves with the finer spacing of the two.
pub fn common_grid<T: Real>(a: &DensityCurve<T>, b: &DensityCurve<T>) -> Grid<T> {
    if a.grid() == b.grid() {
        *a.grid()
    } else {
        a.grid().union(b.grid())
    }
}

/// `∫ |a - b|` by the trapezoid rule after resampling onto the common grid.
pub fn l1_density<T: Real>(a: &DensityCurve<T>, b: &DensityCurve<T>) -> T {
    let grid = common_grid(a, b);
    let (va, vb) = (a.resample(&grid), b.resample(&grid));
    let diff: Vec<T> = va.iter().zip(&vb).map(|(x, y)| (*x - *y).abs()).collect();
    trapezoid(&diff, grid.step())
}

/// Shared mass `∫ min(a, b)`; values below one half mean the curves barely
/// overlap and the ℓ1 distance is close to its maximum of two.
pub fn overlap<T: Real>(a: &DensityCurve<T>, b: &DensityCurve<T>) -> T {
    let grid = common_grid(a, b);
    let (va, vb) = (a.resample(&grid), b.resample(&grid));
    let m: Vec<T> = va.iter().zip(&vb).map(|(x, y)| x.min(*y)).collect();
    trapezoid(&m, grid.step())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlOutcome<T> {
    pub value: T,
    /// Mass of `a` sitting where `b` fell below the floor.
    pub floored_fraction: T,
}

/// `∫ a log(a / max(b, floor))` over the points where `a > 0`.
pub fn kl_divergence<T: Real>(a: &DensityCurve<T>, b: &DensityCurve<T>, floor: T) -> T {
    kl_divergence_detail(a, b, floor).value
}

pub fn kl_divergence_detail<T: Real>(a: &DensityCurve<T>, b: &DensityCurve<T>, floor: T) -> KlOutcome<T> {
    let grid = common_grid(a, b);
    let (va, vb) = (a.resample(&grid), b.resample(&grid));
    let mut integrand = Vec::with_capacity(va.len());
    let mut floored = Vec::with_capacity(va.len());
    for (&x, &y) in va.iter().zip(&vb) {
        if x > T::zero() {
            integrand.push(x * (x / y.max(floor)).ln());
            floored.push(if y < floor { x } else { T::zero() });
        } else {
            integrand.push(T::zero());
            floored.push(T::zero());
        }
    }
    let h = grid.step();
    let total = trapezoid(&va, h);
    let ff = if total > T::zero() { trapezoid(&floored, h) / total } else { T::zero() };
    KlOutcome { value: trapezoid(&integrand, h), floored_fraction: ff }
}

/// Continuous distribution function with compact support.
pub trait SmoothCdf<T> {
    fn support(&self) -> (T, T);
    fn cdf(&self, x: T) -> T;
}

impl<T: Real> SmoothCdf<T> for LawCdf {
    fn support(&self) -> (T, T) {
        let (a, b) = LawCdf::support(self);
        (lit(a), lit(b))
    }

    fn cdf(&self, x: T) -> T {
        lit(self.eval(to_f64(x)))
    }
}

/// Either kind of distribution function accepted by [`l1_cdf`].
#[derive(Clone, Copy)]
pub enum CdfRef<'a, T> {
    Step(&'a EmpiricalCdf<T>),
    Smooth(&'a dyn SmoothCdf<T>),
}

/// `∫ |F_a - F_b|` (the Wasserstein-1 distance).
///
/// Two step functions are integrated exactly. Against a continuous `F` the
/// step value is constant between jumps, the single crossing in each gap is
/// located by bisection and both sides use 64-point Gauss-Legendre panels.
pub fn l1_cdf<T: Real>(a: CdfRef<'_, T>, b: CdfRef<'_, T>) -> T {
    match (a, b) {
        (CdfRef::Step(x), CdfRef::Step(y)) => l1_step_step(x, y),
        (CdfRef::Step(x), CdfRef::Smooth(g)) | (CdfRef::Smooth(g), CdfRef::Step(x)) => l1_step_smooth(x, g),
        (CdfRef::Smooth(f), CdfRef::Smooth(g)) => l1_smooth_smooth(f, g),
    }
}

fn l1_step_step<T: Real>(a: &EmpiricalCdf<T>, b: &EmpiricalCdf<T>) -> T {
    let (sa, sb) = (a.sample(), b.sample());
    let (na, nb): (T, T) = (from_usize(sa.len()), from_usize(sb.len()));
    let (mut i, mut j) = (0usize, 0usize);
    let mut prev = sa[0].min(sb[0]);
    let mut total = T::zero();
    while i < sa.len() || j < sb.len() {
        let x = match (sa.get(i), sb.get(j)) {
            (Some(&u), Some(&v)) => u.min(v),
            (Some(&u), None) => u,
            (None, Some(&v)) => v,
            (None, None) => unreachable!(),
        };
        let gap = (from_usize::<T>(i) / na - from_usize::<T>(j) / nb).abs();
        total = total + gap * (x - prev);
        while i < sa.len() && sa[i] == x {
            i += 1;
        }
        while j < sb.len() && sb[j] == x {
            j += 1;
        }
        prev = x;
    }
    total
}

fn l1_step_smooth<T: Real>(a: &EmpiricalCdf<T>, g: &dyn SmoothCdf<T>) -> T {
    let (lo, hi) = g.support();
    let steps = a.steps();
    // breakpoints: every jump of the step function plus the smooth support
    let mut knots: Vec<T> = steps.iter().map(|s| s.0).chain([lo, hi]).collect();
    knots.sort_by(|x, y| x.partial_cmp(y).expect("NaN knot"));
    knots.dedup();
    let max_panel = (hi - lo) / lit(32.0);
    let mut total = T::zero();
    let mut k = 0usize;
    let mut level = T::zero();
    for w in knots.windows(2) {
        let (u, v) = (w[0], w[1]);
        while k < steps.len() && steps[k].0 <= u {
            level = steps[k].1;
            k += 1;
        }
        total = total + abs_gap_integral(g, level, u, v, max_panel);
    }
    total
}

/// `∫_u^v |c - G|` for monotone `G`.
fn abs_gap_integral<T: Real>(g: &dyn SmoothCdf<T>, c: T, u: T, v: T, max_panel: T) -> T {
    let (gu, gv) = (g.cdf(u), g.cdf(v));
    if c <= gu {
        return signed_integral(g, c, u, v, max_panel);
    }
    if c >= gv {
        return -signed_integral(g, c, u, v, max_panel);
    }
    let (mut a, mut b) = (u, v);
    for _ in 0..200 {
        let m = (a + b) * lit(0.5);
        if m <= a || m >= b {
            break;
        }
        if g.cdf(m) < c {
            a = m;
        } else {
            b = m;
        }
    }
    let x = (a + b) * lit(0.5);
    -signed_integral(g, c, u, x, max_panel) + signed_integral(g, c, x, v, max_panel)
}

/// `∫_u^v (G - c)` with panels no wider than `max_panel`.
fn signed_integral<T: Real>(g: &dyn SmoothCdf<T>, c: T, u: T, v: T, max_panel: T) -> T {
    if !(v > u) {
        return T::zero();
    }
    let (lo, hi) = g.support();
    if v <= lo {
        return -c * (v - u);
    }
    if u >= hi {
        return (T::one() - c) * (v - u);
    }
    let panels = if max_panel > T::zero() { ((v - u) / max_panel).ceil().to_usize().unwrap_or(1).max(1) } else { 1 };
    let h = (v - u) / from_usize(panels);
    (0..panels)
        .map(|p| {
            let a = u + h * from_usize(p);
            let b = if p + 1 == panels { v } else { a + h };
            gauss_integrate(gauss_legendre_64(), a, b, |x| g.cdf(x) - c)
        })
        .sum()
}

fn l1_smooth_smooth<T: Real>(f: &dyn SmoothCdf<T>, g: &dyn SmoothCdf<T>) -> T {
    let (fa, fb) = f.support();
    let (ga, gb) = g.support();
    let (lo, hi) = (fa.min(ga), fb.max(gb));
    let panels = 1024usize;
    let h = (hi - lo) / from_usize(panels);
    (0..panels)
        .map(|p| {
            let a = lo + h * from_usize(p);
            gauss_integrate(gauss_legendre_16(), a, a + h, |x| (f.cdf(x) - g.cdf(x)).abs())
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::AnalyticLaw;
    use crate::spectrum::kernel_density_of;
    use proptest::prelude::*;

    fn unit_box(lo: f64, hi: f64, grid: Grid<f64>) -> DensityCurve<f64> {
        let mut c = DensityCurve::from_fn(grid, 0.0, |x| if x >= lo && x <= hi { 1.0 } else { 0.0 });
        c.normalize();
        c
    }

    #[test]
    fn l1_density_examples() {
        let grid = Grid::new(-3.0, 3.0, 2049).unwrap();
        let a = unit_box(-2.5, -1.0, grid);
        let b = unit_box(1.0, 2.5, grid);
        assert_eq!(l1_density(&a, &a), 0.0);
        assert!((l1_density(&a, &b) - 2.0).abs() < 1e-6);
        assert!(overlap(&a, &b) < 1e-12);
    }

    #[test]
    fn semicircles_against_a_fine_grid() {
        let sc = AnalyticLaw::SemicircleUnit;
        let sp = AnalyticLaw::SemicircleP { p: 0.5 };
        let coarse = Grid::new(-2.2, 2.2, 2048).unwrap();
        let v = l1_density(&sc.curve(coarse), &sp.curve(coarse));
        // independent oracle: midpoint rule with 2^20 cells
        let cells = 1usize << 20;
        let h = 4.4 / cells as f64;
        let oracle: f64 = (0..cells)
            .map(|k| {
                let x = -2.2 + h * (k as f64 + 0.5);
                (sc.density(x) - sp.density(x)).abs() * h
            })
            .sum();
        assert!((v - oracle).abs() < 1e-3, "{v} vs {oracle}");
    }

    #[test]
    fn l1_cdf_examples() {
        let p0 = EmpiricalCdf::from_sample(vec![0.0f64]);
        let p1 = EmpiricalCdf::from_sample(vec![1.0f64]);
        assert_eq!(l1_cdf(CdfRef::Step(&p0), CdfRef::Step(&p1)), 1.0);
        assert_eq!(l1_cdf(CdfRef::Step(&p0), CdfRef::Step(&p0)), 0.0);
        let k3 = EmpiricalCdf::from_sample(vec![2.0f64, -1.0, -1.0]);
        assert_eq!(l1_cdf(CdfRef::Step(&k3), CdfRef::Step(&k3.shifted(1.0))), 1.0);
    }

    #[test]
    fn step_against_smooth() {
        // point mass at 0 against the semicircle: E|X| = 8/(3π)
        let table = LawCdf::new(AnalyticLaw::SemicircleUnit);
        let p0 = EmpiricalCdf::from_sample(vec![0.0f64]);
        let v = l1_cdf(CdfRef::Step(&p0), CdfRef::Smooth(&table));
        assert!((v - 8.0 / (3.0 * std::f64::consts::PI)).abs() < 1e-10);
        // point mass at 5: E|X - 5| = 5
        let p5 = EmpiricalCdf::from_sample(vec![5.0f64]);
        assert!((l1_cdf(CdfRef::Smooth(&table), CdfRef::Step(&p5)) - 5.0).abs() < 1e-10);
        let same = l1_cdf::<f64>(CdfRef::Smooth(&table), CdfRef::Smooth(&table));
        assert_eq!(same, 0.0);
        let wide = LawCdf::new(AnalyticLaw::KestenMcKayScaled { d: 3 });
        let w = l1_cdf::<f64>(CdfRef::Smooth(&table), CdfRef::Smooth(&wide));
        assert!(w > 0.0 && w < 0.5);
    }

    #[test]
    fn kl_examples() {
        let grid = Grid::new(-8.0, 8.5, 4096).unwrap();
        let a = kernel_density_of(&[0.0f64], 1.0, grid).unwrap();
        let b = kernel_density_of(&[0.5f64], 1.0, grid).unwrap();
        assert!(kl_divergence(&a, &a, DEFAULT_KL_FLOOR).abs() < 1e-10);
        assert!((kl_divergence(&a, &b, DEFAULT_KL_FLOOR) - 0.125).abs() < 2e-3);

        let g2 = Grid::new(-2.0, 2.0, 2048).unwrap();
        let sc = AnalyticLaw::SemicircleUnit.curve(g2);
        let uniform = unit_box(-2.0, 2.0, g2);
        assert!(kl_divergence(&sc, &uniform, DEFAULT_KL_FLOOR) > 0.0);
        let detail = kl_divergence_detail(&uniform, &sc, DEFAULT_KL_FLOOR);
        assert!(detail.floored_fraction > 0.0 && detail.floored_fraction < 1e-3);
    }

    fn curve_from(points: &[f64], sigma: f64) -> DensityCurve<f64> {
        kernel_density_of(points, sigma, Grid::new(-6.0, 6.0, 1024).unwrap()).unwrap()
    }

    proptest! {
        #[test]
        fn density_metric_axioms(
            xs in prop::collection::vec(-3.0f64..3.0, 1..6),
            ys in prop::collection::vec(-3.0f64..3.0, 1..6),
            zs in prop::collection::vec(-3.0f64..3.0, 1..6),
            s in 0.3f64..0.8,
        ) {
            let (a, b, c) = (curve_from(&xs, s), curve_from(&ys, s), curve_from(&zs, s));
            prop_assert!((l1_density(&a, &b) - l1_density(&b, &a)).abs() <= 1e-9);
            prop_assert!(l1_density(&a, &c) <= l1_density(&a, &b) + l1_density(&b, &c) + 1e-9);
            prop_assert!(l1_density(&a, &b) <= 2.0 + 1e-9);
            prop_assert!(kl_divergence(&a, &b, DEFAULT_KL_FLOOR) >= -1e-9);
        }

        #[test]
        fn cdf_metric_axioms(
            xs in prop::collection::vec(-3.0f64..3.0, 1..12),
            ys in prop::collection::vec(-3.0f64..3.0, 1..12),
            zs in prop::collection::vec(-3.0f64..3.0, 1..12),
        ) {
            let (a, b, c) = (EmpiricalCdf::from_sample(xs), EmpiricalCdf::from_sample(ys), EmpiricalCdf::from_sample(zs));
            let d = |x: &EmpiricalCdf<f64>, y: &EmpiricalCdf<f64>| l1_cdf(CdfRef::Step(x), CdfRef::Step(y));
            prop_assert!((d(&a, &b) - d(&b, &a)).abs() <= 1e-9);
            prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-9);
            prop_assert_eq!(d(&a, &a), 0.0);
        }
    }
}
