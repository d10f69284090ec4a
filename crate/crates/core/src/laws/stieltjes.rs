//! Block-model limiting law through the fixed-point system
//!
//! `c_m(z) = -w_m / (z + Σ_l ζ_ml c_l(z))`, `s(z) = Σ_m c_m(z)`,
//!
//! where `w_m` is the fraction of vertices in block `m` and `ζ_ml` the
//! variance of an `(m, l)` entry relative to `p*(1 - p*)`. With equal blocks
//! and a single off-block probability this is the classical system with
//! `w_m = 1/M`, `ζ_mm = ζ_m` and `ζ_ml = ζ_0`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::generators::BlockParams;
use crate::spectrum::{DensityCurve, Grid};

/// Default distance of the inversion contour from the real axis.
pub const DEFAULT_ETA: f64 = 1e-3;

/// Variance profile of a block model, normalized by `p*(1 - p*)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockLaw {
    /// Symmetric `M×M` matrix `ζ_ml`.
    pub coupling: Vec<Vec<f64>>,
    /// Block weights `w_m`, summing to one.
    pub weights: Vec<f64>,
    /// `max_m p_m`, or `None` when built from ζ directly.
    pub p_star: Option<f64>,
    /// False for unequal blocks or block-dependent off-block probabilities,
    /// which lie outside the hypotheses of the classical limit theorem.
    pub canonical: bool,
}

impl BlockLaw {
    /// Classical form from `(ζ_0, ζ_1, …, ζ_M)` with equal block weights.
    pub fn from_zeta(zeta: &[f64]) -> Result<Self> {
        if zeta.len() < 2 {
            return Err(Error::InvalidParameter("need ζ_0 and at least one block ζ".into()));
        }
        if let Some(z) = zeta.iter().find(|z| !(z.is_finite() && **z > 0.0)) {
            return Err(Error::InvalidParameter(format!("ζ values must be positive, got {z}")));
        }
        let m = zeta.len() - 1;
        let coupling =
            (0..m).map(|a| (0..m).map(|b| if a == b { zeta[a + 1] } else { zeta[0] }).collect()).collect();
        Ok(BlockLaw { coupling, weights: vec![1.0 / m as f64; m], p_star: None, canonical: true })
    }

    pub fn blocks(&self) -> usize {
        self.weights.len()
    }

    /// `(ζ_0, ζ_1, …, ζ_M)` when the off-block variance is shared.
    pub fn zeta_vector(&self) -> Option<Vec<f64>> {
        let m = self.blocks();
        let off = if m > 1 { self.coupling[0][1] } else { self.coupling[0][0] };
        let shared = (0..m).all(|a| (0..m).all(|b| a == b || self.coupling[a][b] == off));
        shared.then(|| std::iter::once(off).chain((0..m).map(|a| self.coupling[a][a])).collect())
    }

    /// Upper bound on the support radius: `2 sqrt(max_m Σ_l w_l ζ_ml)`.
    pub fn edge_bound(&self) -> f64 {
        let row = |a: usize| self.coupling[a].iter().zip(&self.weights).map(|(z, w)| z * w).sum::<f64>();
        2.0 * (0..self.blocks()).map(row).fold(0.0, f64::max).sqrt()
    }

    /// `G(c)_m = -w_m / (z + Σ_l ζ_ml c_l)`.
    fn map(&self, z: Complex64, c: &[Complex64], out: &mut [Complex64]) {
        for (m, o) in out.iter_mut().enumerate() {
            let mut denom = z;
            for (zeta, cl) in self.coupling[m].iter().zip(c) {
                denom += cl * zeta;
            }
            *o = -self.weights[m] / denom;
        }
    }
}

/// Plug-in `ζ_l = p_l(1 - p_l) / (p*(1 - p*))` with `p* = max_m p_m`.
pub fn bm_zeta(params: &BlockParams) -> Result<BlockLaw> {
    params.validate()?;
    let m = params.blocks();
    let p_star = params.p_within.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for a in 0..m {
        for b in 0..m {
            let p = params.prob(a, b);
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::InvalidParameter(format!("block probabilities must lie in (0, 1), got {p}")));
            }
        }
    }
    let v_star = p_star * (1.0 - p_star);
    let coupling =
        (0..m).map(|a| (0..m).map(|b| params.prob(a, b) * (1.0 - params.prob(a, b)) / v_star).collect()).collect();
    let n = params.n() as f64;
    let weights = params.block_sizes.iter().map(|&s| s as f64 / n).collect();
    Ok(BlockLaw { coupling, weights, p_star: Some(p_star), canonical: params.is_canonical() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Weight kept on the previous iterate: `c ← (1-α) G(c) + α c`.
    pub damping: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-10, max_iter: 500_000, damping: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StieltjesSolution {
    pub z: Complex64,
    pub c: Vec<Complex64>,
    pub s: Complex64,
    pub iterations: usize,
    /// `max_m |G(c)_m - c_m|` at the returned point.
    pub residual: f64,
}

/// Solves the fixed-point system at `z` (`Im z > 0`) from the large-`|z|`
/// starting point `c_m = -w_m / z`.
pub fn bm_stieltjes(law: &BlockLaw, z: Complex64, opts: SolverOptions) -> Result<StieltjesSolution> {
    let start: Vec<Complex64> = law.weights.iter().map(|w| -w / z).collect();
    bm_stieltjes_from(law, z, opts, &start)
}

/// [`bm_stieltjes`] warm-started from `start`.
pub fn bm_stieltjes_from(
    law: &BlockLaw,
    z: Complex64,
    opts: SolverOptions,
    start: &[Complex64],
) -> Result<StieltjesSolution> {
    if !(z.im > 0.0) {
        return Err(Error::InvalidParameter(format!("Stieltjes transform needs Im z > 0, got {z}")));
    }
    if !(opts.tol > 0.0) || !(0.0..1.0).contains(&opts.damping) {
        return Err(Error::InvalidParameter("solver needs tol > 0 and damping in [0, 1)".into()));
    }
    let m = law.blocks();
    if start.len() != m {
        return Err(Error::InvalidParameter(format!("{} starting values for {m} blocks", start.len())));
    }
    let mut c = start.to_vec();
    // the upper half-plane is invariant under G, so start inside it
    for v in &mut c {
        if v.im <= 0.0 {
            *v = Complex64::new(v.re, f64::MIN_POSITIVE.max(1e-300));
        }
    }
    let mut g = vec![Complex64::default(); m];
    let mut residual = f64::INFINITY;
    for it in 0..=opts.max_iter {
        law.map(z, &c, &mut g);
        residual = c.iter().zip(&g).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        if !residual.is_finite() {
            break;
        }
        if residual <= opts.tol {
            if let Some(block) = c.iter().position(|v| !(v.im > 0.0)) {
                return Err(Error::BranchViolation { block });
            }
            let s = c.iter().sum();
            return Ok(StieltjesSolution { z, c, s, iterations: it, residual });
        }
        for (cv, gv) in c.iter_mut().zip(&g) {
            *cv = gv * (1.0 - opts.damping) + *cv * opts.damping;
        }
    }
    Err(Error::NoConvergence { max_iter: opts.max_iter, re: z.re, im: z.im, residual })
}

/// Block-model density recovered on a grid by Stieltjes inversion.
#[derive(Debug, Clone)]
pub struct BmDensity {
    /// Renormalized to unit trapezoid mass.
    pub curve: DensityCurve<f64>,
    /// Trapezoid mass before renormalization.
    pub raw_mass: f64,
    pub eta: f64,
    pub max_iterations: usize,
    pub max_residual: f64,
}

/// `(1/π) Im s(x + iη)` on `grid`, clipped at zero and renormalized.
///
/// Points are solved left to right, each warm-started from its neighbour.
/// A point that fails to converge is retried from a cold start with
/// stronger damping before the error is returned.
pub fn bm_density(law: &BlockLaw, grid: Grid<f64>, eta: f64, opts: SolverOptions) -> Result<BmDensity> {
    if !(eta > 0.0) {
        return Err(Error::InvalidParameter(format!("inversion offset eta must be positive, got {eta}")));
    }
    if grid.step() > eta / 2.0 {
        log::debug!("grid step {} is coarser than eta/2 = {}", grid.step(), eta / 2.0);
    }
    let mut values = Vec::with_capacity(grid.points);
    let mut prev: Option<Vec<Complex64>> = None;
    let (mut max_iterations, mut max_residual) = (0, 0.0f64);
    for x in grid.xs() {
        let z = Complex64::new(x, eta);
        let attempt = match &prev {
            Some(start) => bm_stieltjes_from(law, z, opts, start),
            None => bm_stieltjes(law, z, opts),
        };
        let sol = match attempt {
            Err(Error::NoConvergence { .. }) => retry(law, z, opts)?,
            other => other?,
        };
        max_iterations = max_iterations.max(sol.iterations);
        max_residual = max_residual.max(sol.residual);
        values.push((sol.s.im / std::f64::consts::PI).max(0.0));
        prev = Some(sol.c);
    }
    let mut curve = DensityCurve::new(grid, values, 0.0)?;
    let raw_mass = curve.normalize();
    Ok(BmDensity { curve, raw_mass, eta, max_iterations, max_residual })
}

fn retry(law: &BlockLaw, z: Complex64, opts: SolverOptions) -> Result<StieltjesSolution> {
    let mut last = None;
    for damping in [0.5 + opts.damping / 2.0, 0.9] {
        match bm_stieltjes(law, z, SolverOptions { damping, max_iter: opts.max_iter * 2, ..opts }) {
            Ok(s) => return Ok(s),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one retry"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::OffBlock;
    use crate::laws::AnalyticLaw;

    #[test]
    fn zeta_of_first_scenario() {
        let law = bm_zeta(&BlockParams::equal(3, 300, 0.2, vec![0.8, 0.5, 0.6])).unwrap();
        let zeta = law.zeta_vector().unwrap();
        let expect = [1.0, 1.0, 1.5625, 1.5];
        for (a, b) in zeta.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(law.p_star, Some(0.8));
        assert!(law.canonical);

        let flat = bm_zeta(&BlockParams::equal(4, 10, 0.3, vec![0.3; 4])).unwrap();
        assert!(flat.zeta_vector().unwrap().iter().all(|&z| (z - 1.0).abs() < 1e-15));
        let single = bm_zeta(&BlockParams::equal(1, 10, 0.5, vec![0.17])).unwrap();
        assert_eq!(single.zeta_vector().unwrap()[1], 1.0);
    }

    #[test]
    fn pairwise_blocks_are_flagged() {
        let mut p = BlockParams::equal(3, 100, 0.0, vec![0.8, 0.5, 0.6]);
        p.off_block = OffBlock::Pairwise(vec![vec![0.0, 0.1, 0.2], vec![0.1, 0.0, 0.05], vec![0.2, 0.05, 0.0]]);
        let law = bm_zeta(&p).unwrap();
        assert!(!law.canonical);
        assert!(law.zeta_vector().is_none());
        assert!((law.coupling[1][2] - 0.05 * 0.95 / 0.16).abs() < 1e-15);
    }

    #[test]
    fn single_block_at_i() {
        let law = BlockLaw::from_zeta(&[1.0, 1.0]).unwrap();
        let sol = bm_stieltjes(&law, Complex64::new(0.0, 1.0), SolverOptions::default()).unwrap();
        assert!((sol.s.im - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-9);
        assert!(sol.s.re.abs() < 1e-9);
        assert!(sol.residual <= 1e-10);
    }

    #[test]
    fn symmetric_blocks_agree() {
        let opts = SolverOptions::default();
        let law = BlockLaw::from_zeta(&[1.3, 1.3, 1.3, 1.3]).unwrap();
        for z in [Complex64::new(0.3, 0.5), Complex64::new(-1.7, 0.01), Complex64::new(2.5, 1e-3)] {
            let sol = bm_stieltjes(&law, z, opts).unwrap();
            for a in &sol.c {
                for b in &sol.c {
                    assert!((a - b).norm() <= 10.0 * opts.tol);
                }
            }
        }
    }

    #[test]
    fn residual_and_branch_hold() {
        let law = BlockLaw::from_zeta(&[1.0, 1.0, 1.5625, 1.5]).unwrap();
        let opts = SolverOptions::default();
        let mut g = vec![Complex64::default(); 3];
        for k in 0..30 {
            let z = Complex64::new(-3.0 + 0.2 * k as f64, 0.01);
            let sol = bm_stieltjes(&law, z, opts).unwrap();
            law.map(z, &sol.c, &mut g);
            let res = sol.c.iter().zip(&g).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(res <= opts.tol);
            assert!(sol.c.iter().all(|c| c.im > 0.0));
        }
        assert!(bm_stieltjes(&law, Complex64::new(0.0, 0.0), opts).is_err());
    }

    #[test]
    fn iteration_budget_is_reported() {
        let law = BlockLaw::from_zeta(&[1.0, 1.0]).unwrap();
        let opts = SolverOptions { max_iter: 3, ..SolverOptions::default() };
        let err = bm_stieltjes(&law, Complex64::new(1.9, 1e-3), opts).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { max_iter: 3, .. }));
    }

    #[test]
    fn one_block_is_the_semicircle() {
        let law = BlockLaw::from_zeta(&[1.0, 1.0]).unwrap();
        let grid = Grid::new(-2.5, 2.5, 2048).unwrap();
        let bm = bm_density(&law, grid, DEFAULT_ETA, SolverOptions::default()).unwrap();
        let sup = bm
            .curve
            .xs()
            .zip(bm.curve.values())
            .map(|(x, v)| (v - AnalyticLaw::SemicircleUnit.density(x)).abs())
            .fold(0.0, f64::max);
        assert!(sup < 0.01, "sup-norm {sup}");
        assert!((bm.raw_mass - 1.0).abs() < 0.01);
    }

    #[test]
    fn density_is_even() {
        let law = BlockLaw::from_zeta(&[1.0, 1.0, 1.5625, 1.5]).unwrap();
        let grid = Grid::new(-3.5, 3.5, 1001).unwrap();
        let bm = bm_density(&law, grid, DEFAULT_ETA, SolverOptions::default()).unwrap();
        let v = bm.curve.values();
        for k in 0..v.len() {
            assert!((v[k] - v[v.len() - 1 - k]).abs() < 1e-6);
        }
        assert!(law.edge_bound() < 3.5);
    }
}
