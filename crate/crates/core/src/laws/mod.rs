//! Limiting spectral laws: closed-form densities and their distribution
//! functions, plus the block-model law obtained from a Stieltjes-transform
//! fixed point.

mod stieltjes;

pub use stieltjes::{
    bm_density, bm_stieltjes, bm_stieltjes_from, bm_zeta, BlockLaw, BmDensity, SolverOptions, StieltjesSolution,
    DEFAULT_ETA,
};

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{adaptive_simpson, gauss_integrate, gauss_legendre_16, normal_cdf};
use crate::scalar::{lit, to_f64, Real};
use crate::spectrum::{DensityCurve, Grid};

/// Closed-form limiting densities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum AnalyticLaw {
    /// `sqrt(4 - x²) / 2π` on `[-2, 2]`.
    SemicircleUnit,
    /// `sqrt(4p(1-p) - x²) / (2π p(1-p))`, the ER limit under `A/sqrt(n)`.
    SemicircleP { p: f64 },
    /// `d sqrt(4(d-1) - x²) / (2π (d² - x²))`, the d-regular limit of `A`.
    KestenMcKay { d: usize },
    /// Kesten-McKay law of `A / sqrt(d-1)`, supported on `[-2, 2]`.
    KestenMcKayScaled { d: usize },
}

impl AnalyticLaw {
    pub fn semicircle_p(p: f64) -> Result<Self> {
        if p > 0.0 && p < 1.0 {
            Ok(AnalyticLaw::SemicircleP { p })
        } else {
            Err(Error::InvalidParameter(format!("semicircle parameter p={p} must lie in (0, 1)")))
        }
    }

    pub fn kesten_mckay(d: usize) -> Result<Self> {
        check_degree(d)?;
        Ok(AnalyticLaw::KestenMcKay { d })
    }

    pub fn kesten_mckay_scaled(d: usize) -> Result<Self> {
        check_degree(d)?;
        Ok(AnalyticLaw::KestenMcKayScaled { d })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            AnalyticLaw::SemicircleUnit => Ok(()),
            AnalyticLaw::SemicircleP { p } => Self::semicircle_p(p).map(|_| ()),
            AnalyticLaw::KestenMcKay { d } | AnalyticLaw::KestenMcKayScaled { d } => check_degree(d),
        }
    }

    /// Half-width `R` of the support `[-R, R]`.
    pub fn radius(&self) -> f64 {
        match *self {
            AnalyticLaw::SemicircleUnit | AnalyticLaw::KestenMcKayScaled { .. } => 2.0,
            AnalyticLaw::SemicircleP { p } => 2.0 * (p * (1.0 - p)).sqrt(),
            AnalyticLaw::KestenMcKay { d } => 2.0 * (d as f64 - 1.0).sqrt(),
        }
    }

    pub fn support(&self) -> (f64, f64) {
        let r = self.radius();
        (-r, r)
    }

    pub fn label(&self) -> String {
        match *self {
            AnalyticLaw::SemicircleUnit => "semicircle".into(),
            AnalyticLaw::SemicircleP { p } => format!("semicircle(p={p})"),
            AnalyticLaw::KestenMcKay { d } => format!("kesten-mckay(d={d})"),
            AnalyticLaw::KestenMcKayScaled { d } => format!("kesten-mckay-scaled(d={d})"),
        }
    }

    /// Density at `x`, zero off the support.
    pub fn density<T: Real>(&self, x: T) -> T {
        let x2 = x * x;
        let two_pi = lit::<T>(2.0 * PI);
        let root = |r2: T| (r2 - x2).max(T::zero()).sqrt();
        if x.abs() > lit(self.radius()) {
            return T::zero();
        }
        match *self {
            AnalyticLaw::SemicircleUnit => root(lit(4.0)) / two_pi,
            AnalyticLaw::SemicircleP { p } => {
                let v = lit::<T>(p * (1.0 - p));
                root(lit::<T>(4.0) * v) / (two_pi * v)
            }
            AnalyticLaw::KestenMcKay { d } => {
                let d: T = lit(d as f64);
                d * root(lit::<T>(4.0) * (d - T::one())) / (two_pi * (d * d - x2))
            }
            AnalyticLaw::KestenMcKayScaled { d } => {
                let d: T = lit(d as f64);
                let factor = T::one() + (d - T::one()).recip() - x2 / d;
                root(lit(4.0)) / (two_pi * factor)
            }
        }
    }

    /// `dF/dt` under the substitution `x = R sin t`, which removes the
    /// square-root edge behaviour of every law here.
    fn density_t(&self, t: f64) -> f64 {
        let r = self.radius();
        self.density(r * t.sin()) * r * t.cos()
    }

    /// Distribution function by adaptive quadrature from the lower edge.
    pub fn cdf<T: Real>(&self, x: T) -> T {
        let r = self.radius();
        let xf = to_f64(x);
        if xf <= -r {
            return T::zero();
        }
        if xf >= r {
            return T::one();
        }
        let t = (xf / r).asin();
        // integrate the shorter side and use the total mass of one
        let v = if t <= 0.0 {
            adaptive_simpson(&|s| self.density_t(s), -FRAC_PI_2, t, 1e-13)
        } else {
            1.0 - adaptive_simpson(&|s| self.density_t(s), t, FRAC_PI_2, 1e-13)
        };
        lit(v.clamp(0.0, 1.0))
    }

    /// Total mass by quadrature; one up to the quadrature error.
    pub fn total_mass(&self) -> f64 {
        adaptive_simpson(&|s| self.density_t(s), -FRAC_PI_2, FRAC_PI_2, 1e-13)
    }

    /// Law sampled on `grid` (bandwidth recorded as zero).
    pub fn curve<T: Real>(&self, grid: Grid<T>) -> DensityCurve<T> {
        DensityCurve::from_fn(grid, T::zero(), |x| self.density(x))
    }

    /// Law convolved with a Gaussian kernel of bandwidth `sigma`, i.e. the
    /// density of `X + σZ`, on `grid`.
    pub fn smoothed_curve<T: Real>(&self, sigma: T, grid: Grid<T>) -> Result<DensityCurve<T>> {
        if !(sigma > T::zero()) {
            return Err(Error::InvalidParameter(format!("bandwidth must be positive, got {sigma}")));
        }
        let table = LawCdf::new(*self);
        smooth_masses(&table, to_f64(sigma), grid)
    }
}

fn check_degree(d: usize) -> Result<()> {
    if d >= 3 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("Kesten-McKay law needs d >= 3, got d={d}")))
    }
}

/// Cells of the tabulated distribution function.
const CDF_CELLS: usize = 2048;

/// Tabulated distribution function of an [`AnalyticLaw`].
///
/// `F` is stored on a uniform grid in `t` (`x = R sin t`) from cumulative
/// Gauss-Legendre cell integrals and evaluated by cubic Hermite
/// interpolation, which is accurate to ~1e-13 and much cheaper than
/// [`AnalyticLaw::cdf`].
#[derive(Debug, Clone)]
pub struct LawCdf {
    law: AnalyticLaw,
    radius: f64,
    cum: Vec<f64>,
    slope: Vec<f64>,
}

impl LawCdf {
    pub fn new(law: AnalyticLaw) -> Self {
        let h = PI / CDF_CELLS as f64;
        let t = |k: usize| -FRAC_PI_2 + h * k as f64;
        let mut cum = Vec::with_capacity(CDF_CELLS + 1);
        let mut acc = 0.0;
        cum.push(0.0);
        for k in 0..CDF_CELLS {
            acc += gauss_integrate(gauss_legendre_16(), t(k), t(k + 1), |s| law.density_t(s));
            cum.push(acc);
        }
        // the quadrature total differs from one by rounding only
        for v in &mut cum {
            *v /= acc;
        }
        let slope = (0..=CDF_CELLS).map(|k| law.density_t(t(k)) / acc).collect();
        LawCdf { law, radius: law.radius(), cum, slope }
    }

    pub fn law(&self) -> AnalyticLaw {
        self.law
    }

    pub fn support(&self) -> (f64, f64) {
        (-self.radius, self.radius)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let r = self.radius;
        if x <= -r {
            return 0.0;
        }
        if x >= r {
            return 1.0;
        }
        let h = PI / CDF_CELLS as f64;
        let t = (x / r).asin();
        let pos = (t + FRAC_PI_2) / h;
        let k = (pos.floor() as usize).min(CDF_CELLS - 1);
        let u = pos - k as f64;
        let (u2, u3) = (u * u, u * u * u);
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        let v = h00 * self.cum[k] + h10 * h * self.slope[k] + h01 * self.cum[k + 1] + h11 * h * self.slope[k + 1];
        v.clamp(0.0, 1.0)
    }
}

/// Gaussian smoothing of a law given through its distribution function:
/// the law's mass in each cell of a fine sub-grid is placed at the cell
/// centre and spread with the kernel.
fn smooth_masses<T: Real>(table: &LawCdf, sigma: f64, grid: Grid<T>) -> Result<DensityCurve<T>> {
    let (lo, hi) = (to_f64(grid.lo), to_f64(grid.hi));
    let (a, b) = table.support();
    let excluded = normal_cdf((lo - a) / sigma) + normal_cdf((b - hi) / sigma);
    if excluded > 1e-3 {
        return Err(Error::GridTooNarrow { lo, hi, excluded });
    }
    // law masses on a sub-grid fine enough for the kernel
    let cells = (((b - a) / (sigma / 8.0)).ceil() as usize).clamp(256, 16_384);
    let w = (b - a) / cells as f64;
    let mut prev = 0.0;
    let masses: Vec<(f64, f64)> = (0..cells)
        .map(|j| {
            let right = if j + 1 == cells { 1.0 } else { table.eval(a + w * (j + 1) as f64) };
            let m = right - prev;
            prev = right;
            (a + w * (j as f64 + 0.5), m)
        })
        .filter(|&(_, m)| m > 0.0)
        .collect();
    let h = to_f64(grid.step());
    let cutoff = 9.0 * sigma;
    let norm = 1.0 / (sigma * (2.0 * PI).sqrt());
    let mut values = vec![0.0f64; grid.points];
    let last = grid.points as isize - 1;
    for &(c, m) in &masses {
        let k_lo = (((c - cutoff - lo) / h).ceil() as isize).clamp(0, last) as usize;
        let k_hi = (((c + cutoff - lo) / h).floor() as isize).clamp(-1, last);
        for k in k_lo as isize..=k_hi {
            let z = (lo + h * k as f64 - c) / sigma;
            values[k as usize] += m * norm * (-0.5 * z * z).exp();
        }
    }
    DensityCurve::new(grid, values.into_iter().map(lit).collect(), lit(sigma))
}

#[cfg(test)]
mod tests {
    use super::*;

    const LAWS: [AnalyticLaw; 6] = [
        AnalyticLaw::SemicircleUnit,
        AnalyticLaw::SemicircleP { p: 0.5 },
        AnalyticLaw::SemicircleP { p: 0.03 },
        AnalyticLaw::KestenMcKay { d: 3 },
        AnalyticLaw::KestenMcKay { d: 40 },
        AnalyticLaw::KestenMcKayScaled { d: 3 },
    ];

    #[test]
    fn closed_form_values() {
        assert!((AnalyticLaw::SemicircleUnit.density(0.0f64) - 1.0 / PI).abs() < 1e-15);
        let sp = AnalyticLaw::semicircle_p(0.5).unwrap();
        assert!((sp.density(0.0f64) - 2.0 / PI).abs() < 1e-15);
        assert_eq!(sp.support(), (-1.0, 1.0));
        assert_eq!(sp.density(1.0001f64), 0.0);
        let km = AnalyticLaw::kesten_mckay(3).unwrap();
        assert!((km.density(0.0f64) - 3.0 * 8f64.sqrt() / (18.0 * PI)).abs() < 1e-15);
        assert!((km.density(0.0f64) - 0.150_05).abs() < 5e-6);
        assert!((km.radius() - 2.0 * 2f64.sqrt()).abs() < 1e-15);
        assert!(AnalyticLaw::kesten_mckay(2).is_err());
        assert!(AnalyticLaw::semicircle_p(1.0).is_err());
    }

    #[test]
    fn scaled_kesten_mckay_is_a_change_of_variables() {
        for d in [3usize, 5, 12] {
            let km = AnalyticLaw::KestenMcKay { d };
            let sc = AnalyticLaw::KestenMcKayScaled { d };
            let s = (d as f64 - 1.0).sqrt();
            for k in 0..50 {
                let y = -1.99 + 0.08 * k as f64;
                assert!((sc.density(y) - s * km.density(s * y)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn laws_are_even_and_normalized() {
        for law in LAWS {
            assert!((law.total_mass() - 1.0).abs() < 1e-6, "{law:?}");
            for k in 0..40 {
                let x = law.radius() * (k as f64 / 37.0);
                assert_eq!(law.density(x), law.density(-x));
            }
            assert!((law.cdf(0.0f64) - 0.5).abs() < 1e-8);
            assert_eq!(law.cdf(-law.radius() - 0.1), 0.0);
            assert!((law.cdf(law.radius()) - 1.0f64).abs() < 1e-6);
        }
    }

    #[test]
    fn semicircle_cdf_closed_form() {
        // F(x) = 1/2 + (x sqrt(4 - x²))/(4π) + asin(x/2)/π
        let exact = |x: f64| 0.5 + x * (4.0 - x * x).sqrt() / (4.0 * PI) + (x / 2.0).asin() / PI;
        let table = LawCdf::new(AnalyticLaw::SemicircleUnit);
        for k in 0..=400 {
            let x = -2.0 + 0.01 * k as f64;
            assert!((AnalyticLaw::SemicircleUnit.cdf(x) - exact(x)).abs() < 1e-10);
            assert!((table.eval(x) - exact(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn table_tracks_quadrature() {
        for law in LAWS {
            let table = LawCdf::new(law);
            let r = law.radius();
            let mut prev = 0.0;
            for k in 0..=300 {
                let x = -1.05 * r + 2.1 * r * k as f64 / 300.0;
                let v = table.eval(x);
                assert!(v >= prev);
                prev = v;
                assert!((v - law.cdf(x)).abs() < 1e-9, "{law:?} at {x}");
            }
        }
    }

    #[test]
    fn smoothing_conserves_mass_and_converges() {
        let law = AnalyticLaw::SemicircleUnit;
        let grid = Grid::new(-3.0f64, 3.0, 2048).unwrap();
        let c = law.smoothed_curve(0.1, grid).unwrap();
        assert!((c.mass() - 1.0).abs() < 1e-6);
        // a narrow kernel leaves the interior unchanged
        let fine = law.smoothed_curve(0.01, grid).unwrap();
        assert!((fine.at(0.0) - 1.0 / PI).abs() < 1e-3);
        assert!(law.smoothed_curve(0.5, grid).is_err());
    }
}
