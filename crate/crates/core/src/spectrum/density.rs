use serde::{Deserialize, Serialize};

use super::Spectrum;
use crate::error::{Error, Result};
use crate::numeric::{mean_sd, normal_cdf, normal_pdf, quantile_sorted, trapezoid};
use crate::scalar::{from_usize, lit, to_f64, Real};

/// Grid size used for density curves unless configured otherwise.
pub const DEFAULT_GRID_POINTS: usize = 2048;
/// Default grids extend this many bandwidths beyond the extreme eigenvalues.
pub const GRID_MARGIN_SIGMAS: f64 = 4.0;
/// Kernel mass a grid may drop before [`kernel_density`] refuses it.
const MAX_EXCLUDED_MASS: f64 = 1e-3;
/// Kernel contributions beyond this many bandwidths are skipped.
const KERNEL_CUTOFF_SIGMAS: f64 = 9.0;

/// Uniform grid `lo = x_0 < … < x_{points-1} = hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid<T> {
    pub lo: T,
    pub hi: T,
    pub points: usize,
}

impl<T: Real> Grid<T> {
    pub fn new(lo: T, hi: T, points: usize) -> Result<Self> {
        if !(lo < hi) || points < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid needs lo < hi and at least 2 points (got [{lo}, {hi}] with {points})"
            )));
        }
        Ok(Grid { lo, hi, points })
    }

    /// Grid spanning `[lo - margin, hi + margin]`; a zero-width span is widened.
    pub fn covering(lo: T, hi: T, margin: T, points: usize) -> Self {
        let (mut a, mut b) = (lo - margin, hi + margin);
        if !(a < b) {
            a = a - T::one();
            b = b + T::one();
        }
        Grid { lo: a, hi: b, points: points.max(2) }
    }

    #[inline]
    pub fn step(&self) -> T {
        (self.hi - self.lo) / from_usize(self.points - 1)
    }

    #[inline]
    pub fn x(&self, k: usize) -> T {
        if k + 1 == self.points {
            self.hi
        } else {
            self.lo + self.step() * from_usize(k)
        }
    }

    pub fn xs(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.points).map(move |k| self.x(k))
    }

    /// Smallest grid containing both spans, with the finer point density.
    pub fn union(&self, other: &Grid<T>) -> Grid<T> {
        let lo = self.lo.min(other.lo);
        let hi = self.hi.max(other.hi);
        let h = self.step().min(other.step());
        let points = ((hi - lo) / h).ceil().to_usize().unwrap_or(self.points).max(self.points.max(other.points)) + 1;
        Grid { lo, hi, points }
    }
}

/// Density sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityCurve<T> {
    grid: Grid<T>,
    values: Vec<T>,
    /// Kernel bandwidth, zero for analytic curves.
    bandwidth: T,
}

impl<T: Real> DensityCurve<T> {
    pub fn new(grid: Grid<T>, values: Vec<T>, bandwidth: T) -> Result<Self> {
        if values.len() != grid.points {
            return Err(Error::InvalidParameter(format!(
                "{} values for a {}-point grid",
                values.len(),
                grid.points
            )));
        }
        Ok(DensityCurve { grid, values, bandwidth })
    }

    /// Samples `f` on `grid` (negative values are clipped to zero).
    pub fn from_fn(grid: Grid<T>, bandwidth: T, f: impl Fn(T) -> T) -> Self {
        let values = grid.xs().map(|x| f(x).max(T::zero())).collect();
        DensityCurve { grid, values, bandwidth }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn bandwidth(&self) -> T {
        self.bandwidth
    }

    pub fn xs(&self) -> impl Iterator<Item = T> + '_ {
        self.grid.xs()
    }

    /// Trapezoidal mass.
    pub fn mass(&self) -> T {
        trapezoid(&self.values, self.grid.step())
    }

    /// Linear interpolation, zero outside the grid.
    pub fn at(&self, x: T) -> T {
        let g = &self.grid;
        if x < g.lo || x > g.hi {
            return T::zero();
        }
        let pos = (x - g.lo) / g.step();
        let k = pos.floor().to_usize().unwrap_or(0).min(g.points - 2);
        let frac = pos - from_usize(k);
        self.values[k] + (self.values[k + 1] - self.values[k]) * frac
    }

    /// Linear-interpolation resample onto another grid (extension by zero).
    pub fn resample(&self, grid: &Grid<T>) -> Vec<T> {
        if grid == &self.grid {
            return self.values.clone();
        }
        grid.xs().map(|x| self.at(x)).collect()
    }

    /// Rescales values so the trapezoidal mass is one; returns the old mass.
    pub fn normalize(&mut self) -> T {
        let m = self.mass();
        if m > T::zero() {
            for v in &mut self.values {
                *v = *v / m;
            }
        }
        m
    }

    /// Pointwise mean of curves that share a grid.
    pub fn average(curves: &[DensityCurve<T>]) -> Result<Self> {
        let first = curves.first().ok_or_else(|| Error::InvalidParameter("no curves to average".into()))?;
        if curves.iter().any(|c| c.grid != first.grid) {
            return Err(Error::InvalidParameter("averaged curves must share a grid".into()));
        }
        let k: T = from_usize(curves.len());
        let mut values = vec![T::zero(); first.grid.points];
        for c in curves {
            for (acc, &v) in values.iter_mut().zip(&c.values) {
                *acc = *acc + v;
            }
        }
        for v in &mut values {
            *v = *v / k;
        }
        let bandwidth = curves.iter().map(|c| c.bandwidth).sum::<T>() / k;
        Ok(DensityCurve { grid: first.grid, values, bandwidth })
    }
}

/// Rule-of-thumb bandwidth `0.9 · min(sd, IQR/1.34) · n^(-1/5)`.
///
/// When the IQR vanishes but the standard deviation does not, `sd` is used
/// alone.
pub fn silverman_bandwidth<T: Real>(values: &[T]) -> Result<T> {
    let n = values.len();
    if n < 2 {
        return Err(Error::DegenerateSpectrum);
    }
    // spreads at roundoff level count as zero: trees have clusters of
    // eigenvalues that are zero only up to solver precision
    let scale = values.iter().fold(T::zero(), |a, &b| a.max(b.abs()));
    let noise = T::eps().sqrt() * scale;
    let (_, sd) = mean_sd(values);
    if !(sd > noise) {
        return Err(Error::DegenerateSpectrum);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("NaN in spectrum"));
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let robust = iqr / lit(1.34);
    let spread = if robust > noise { sd.min(robust) } else { sd };
    Ok(lit::<T>(0.9) * spread * from_usize::<T>(n).powf(lit(-0.2)))
}

/// Gaussian kernel estimate `(1/(nσ)) Σ φ((x - λ_i)/σ)` on `grid`.
pub fn kernel_density<T: Real>(s: &Spectrum<T>, sigma: T, grid: Grid<T>) -> Result<DensityCurve<T>> {
    kernel_density_of(s.values(), sigma, grid)
}

/// [`kernel_density`] for a bare sample.
pub fn kernel_density_of<T: Real>(sample: &[T], sigma: T, grid: Grid<T>) -> Result<DensityCurve<T>> {
    if !(sigma > T::zero()) {
        return Err(Error::InvalidParameter(format!("bandwidth must be positive, got {sigma}")));
    }
    if sample.is_empty() {
        return Err(Error::InvalidParameter("kernel density of an empty sample".into()));
    }
    let sig = to_f64(sigma);
    let (lo, hi) = (to_f64(grid.lo), to_f64(grid.hi));
    let excluded = sample
        .iter()
        .map(|&l| {
            let l = to_f64(l);
            normal_cdf((lo - l) / sig) + normal_cdf((l - hi) / sig)
        })
        .sum::<f64>()
        / sample.len() as f64;
    if excluded > MAX_EXCLUDED_MASS {
        return Err(Error::GridTooNarrow { lo, hi, excluded });
    }

    let mut values = vec![T::zero(); grid.points];
    let h = grid.step();
    let cutoff = sigma * lit(KERNEL_CUTOFF_SIGMAS);
    let last = (grid.points - 1) as isize;
    for &l in sample {
        let k_lo = ((l - cutoff - grid.lo) / h).ceil().to_isize().unwrap_or(0).clamp(0, last) as usize;
        let k_hi = ((l + cutoff - grid.lo) / h).floor().to_isize().unwrap_or(last).clamp(-1, last);
        if k_hi < k_lo as isize {
            continue;
        }
        for (k, v) in values.iter_mut().enumerate().take(k_hi as usize + 1).skip(k_lo) {
            *v = *v + normal_pdf((grid.x(k) - l) / sigma);
        }
    }
    let scale = (from_usize::<T>(sample.len()) * sigma).recip();
    for v in &mut values {
        *v = *v * scale;
    }
    Ok(DensityCurve { grid, values, bandwidth: sigma })
}

impl<T: Real> Spectrum<T> {
    /// Kernel density on the default grid (`±4σ` around the spectrum).
    pub fn kernel_density_auto(&self, sigma: T, points: usize) -> Result<DensityCurve<T>> {
        let grid = Grid::covering(self.min(), self.max(), sigma * lit(GRID_MARGIN_SIGMAS), points);
        kernel_density(self, sigma, grid)
    }

    pub fn silverman(&self) -> Result<T> {
        silverman_bandwidth(&self.values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::ScalingMode;
    use proptest::prelude::*;

    fn spec(v: Vec<f64>) -> Spectrum<f64> {
        Spectrum::from_values(v, ScalingMode::Raw)
    }

    #[test]
    fn silverman_examples() {
        assert_eq!(silverman_bandwidth(&[1.0, 1.0, 1.0]), Err(Error::DegenerateSpectrum));
        // sd = 1, IQR = 1: 0.9 · (1/1.34) · 3^(-1/5)
        let bw = silverman_bandwidth(&[-1.0, 0.0, 1.0]).unwrap();
        let expected = 0.9 * (1.0 / 1.34) * 3f64.powf(-0.2);
        assert!((bw - expected).abs() < 1e-12);
        assert!((bw - 0.5392).abs() < 1e-4);
        // star K_{1,4}: ±2 and three zeros carrying solver noise; IQR falls back to sd
        let star = [2.0, 1e-17, -3e-17, 2e-17, -2.0];
        let (_, sd) = mean_sd(&star);
        let bw = silverman_bandwidth(&star).unwrap();
        assert!((bw - 0.9 * sd * 5f64.powf(-0.2)).abs() < 1e-12);
    }

    #[test]
    fn single_kernel_is_standard_normal() {
        let s = spec(vec![0.0]);
        let grid = Grid::new(-5.0, 5.0, 1001).unwrap();
        let c = kernel_density(&s, 1.0, grid).unwrap();
        assert!((c.values()[500] - 0.398_942_280_401_432_7).abs() < 1e-12);
        assert!((c.at(1.0) - 0.241_970_724_519_143_37).abs() < 1e-12);
    }

    #[test]
    fn symmetric_input_symmetric_curve() {
        let s = spec(vec![-0.7, 0.7]);
        let c = kernel_density(&s, 0.3, Grid::new(-3.0, 3.0, 601).unwrap()).unwrap();
        let v = c.values();
        for k in 0..v.len() {
            assert!((v[k] - v[v.len() - 1 - k]).abs() < 1e-12);
        }
    }

    #[test]
    fn triangle_mass() {
        let s = spec(vec![2.0, -1.0, -1.0]);
        let c = kernel_density(&s, 0.5, Grid::new(-3.5, 4.5, 2048).unwrap()).unwrap();
        let m = c.mass();
        assert!((0.99..=1.01).contains(&m), "{m}");
    }

    #[test]
    fn narrow_grid_rejected() {
        let s = spec(vec![0.0]);
        assert!(matches!(
            kernel_density(&s, 1.0, Grid::new(-2.0, 2.0, 100).unwrap()),
            Err(Error::GridTooNarrow { .. })
        ));
        assert!(kernel_density(&s, 0.0, Grid::new(-2.0, 2.0, 100).unwrap()).is_err());
    }

    #[test]
    fn resample_and_average() {
        let g = Grid::new(0.0, 1.0, 3).unwrap();
        let a = DensityCurve::new(g, vec![0.0, 2.0, 0.0], 0.0).unwrap();
        let b = DensityCurve::new(g, vec![2.0, 0.0, 2.0], 0.0).unwrap();
        assert_eq!(a.at(0.25), 1.0);
        assert_eq!(a.at(1.5), 0.0);
        let avg = DensityCurve::average(&[a.clone(), b]).unwrap();
        assert_eq!(avg.values(), &[1.0, 1.0, 1.0]);
        let fine = Grid::new(-1.0, 1.0, 9).unwrap();
        assert_eq!(a.resample(&fine)[0], 0.0);
    }

    proptest! {
        #[test]
        fn silverman_is_homogeneous(xs in prop::collection::vec(-3.0f64..3.0, 3..30), c in 0.1f64..10.0) {
            if let Ok(bw) = silverman_bandwidth(&xs) {
                let scaled: Vec<f64> = xs.iter().map(|x| x * c).collect();
                let bw2 = silverman_bandwidth(&scaled).unwrap();
                prop_assert!((bw2 - c * bw).abs() <= 1e-9 * bw2.max(1.0));
            }
        }

        #[test]
        fn kernel_mass_near_one(xs in prop::collection::vec(-3.0f64..3.0, 1..30), sigma in 0.05f64..1.0) {
            let s = spec(xs);
            let c = s.kernel_density_auto(sigma, DEFAULT_GRID_POINTS).unwrap();
            let m = c.mass();
            prop_assert!((0.99..=1.01).contains(&m), "mass {}", m);
        }
    }
}
