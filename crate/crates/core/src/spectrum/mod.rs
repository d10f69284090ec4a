//! Adjacency spectra under the scaling conventions of the different models,
//! empirical distribution functions and Gaussian kernel density estimates.

mod density;
mod ecdf;
mod io;

pub use density::{kernel_density, kernel_density_of, silverman_bandwidth, DensityCurve, Grid, DEFAULT_GRID_POINTS, GRID_MARGIN_SIGMAS};
pub use ecdf::EmpiricalCdf;
pub use io::{read_curve_csv, CurveCsv};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::BlockParams;
use crate::graph::Graph;
use crate::linalg::symmetric_eigenvalues;
use crate::scalar::{from_usize, lit, Real};

/// Matrix transformation applied before the eigendecomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ScalingMode {
    /// `A / sqrt(n)`.
    SqrtN,
    /// `A` itself.
    Raw,
    /// `A / sqrt(n p (1 - p))`.
    ErVariance { p: f64 },
    /// `A / sqrt(d - 1)`.
    DrScaled { d: usize },
    /// `(A - E[A]) / sqrt(n p* (1 - p*))` with `p* = max_m p_m`.
    BmCentered { block: BlockParams },
    /// `A / sqrt(n p* (1 - p*))` without centering.
    BmUncentered { p_star: f64 },
    /// `[d/n (1 - 1/n)]^{-1/2} (A - d/n J) / sqrt(n)`.
    DrCentered { d: usize },
}

impl ScalingMode {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |name: &str, p: f64| {
            if p > 0.0 && p < 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name}={p} must lie in (0, 1)")))
            }
        };
        match self {
            ScalingMode::SqrtN | ScalingMode::Raw => Ok(()),
            ScalingMode::ErVariance { p } => open_unit("p", *p),
            ScalingMode::BmUncentered { p_star } => open_unit("p*", *p_star),
            ScalingMode::BmCentered { block } => {
                block.validate()?;
                open_unit("p*", block_p_star(block))
            }
            ScalingMode::DrScaled { d } | ScalingMode::DrCentered { d } => {
                if *d >= 2 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("degree d={d} must be at least 2")))
                }
            }
        }
    }

    /// Short label used in reports and CSV headers.
    pub fn label(&self) -> String {
        match self {
            ScalingMode::SqrtN => "sqrt-n".into(),
            ScalingMode::Raw => "raw".into(),
            ScalingMode::ErVariance { p } => format!("er-variance(p={p})"),
            ScalingMode::DrScaled { d } => format!("dr-scaled(d={d})"),
            ScalingMode::BmCentered { block } => format!("bm-centered(p*={})", block_p_star(block)),
            ScalingMode::BmUncentered { p_star } => format!("bm-uncentered(p*={p_star})"),
            ScalingMode::DrCentered { d } => format!("dr-centered(d={d})"),
        }
    }
}

/// Largest within-block probability.
pub fn block_p_star(block: &BlockParams) -> f64 {
    block.p_within.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Eigenvalues in non-increasing order together with the scaling that
/// produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T> {
    values: Vec<T>,
    mode: ScalingMode,
}

impl<T: Real> Spectrum<T> {
    /// Wraps precomputed values; they are sorted non-increasingly.
    pub fn from_values(mut values: Vec<T>, mode: ScalingMode) -> Self {
        values.sort_by(|a, b| b.partial_cmp(a).expect("NaN eigenvalue"));
        Spectrum { values, mode }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn mode(&self) -> &ScalingMode {
        &self.mode
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> T {
        self.values[0]
    }

    pub fn min(&self) -> T {
        self.values[self.values.len() - 1]
    }

    /// Values in ascending order.
    pub fn ascending(&self) -> Vec<T> {
        self.values.iter().rev().copied().collect()
    }

    pub fn ecdf(&self) -> EmpiricalCdf<T> {
        EmpiricalCdf::from_sample(self.values.clone())
    }
}

/// Full spectrum of the adjacency matrix of `g` transformed according to
/// `mode`.
pub fn eigenvalues<T: Real>(g: &Graph, mode: &ScalingMode) -> Result<Spectrum<T>> {
    mode.validate()?;
    let n = g.n();
    let nf: T = from_usize(n);
    let mut a = g.adjacency_dense::<T>()?;
    let warn_irregular = |d: usize| {
        if g.regular_degree() != Some(d) {
            log::warn!("scaling for {d}-regular graphs applied to a graph that is not {d}-regular");
        }
    };
    // scale applied to the eigenvalues after decomposition
    let post: T = match mode {
        ScalingMode::Raw => T::one(),
        ScalingMode::SqrtN => nf.sqrt().recip(),
        ScalingMode::ErVariance { p } => (nf * lit(p * (1.0 - p))).sqrt().recip(),
        ScalingMode::DrScaled { d } => {
            warn_irregular(*d);
            lit::<T>((*d as f64 - 1.0).sqrt()).recip()
        }
        ScalingMode::BmUncentered { p_star } => (nf * lit(p_star * (1.0 - p_star))).sqrt().recip(),
        ScalingMode::BmCentered { block } => {
            if block.n() != n {
                return Err(Error::InvalidParameter(format!(
                    "block sizes sum to {} but the graph has {n} vertices",
                    block.n()
                )));
            }
            let member = block.membership();
            let m = block.blocks();
            let probs: Vec<T> = (0..m * m).map(|k| lit(block.prob(k / m, k % m))).collect();
            a.map_inplace(|i, j, v| if i == j { v } else { v - probs[member[i] * m + member[j]] });
            let ps = block_p_star(block);
            (nf * lit(ps * (1.0 - ps))).sqrt().recip()
        }
        ScalingMode::DrCentered { d } => {
            warn_irregular(*d);
            let dn = lit::<T>(*d as f64) / nf;
            a.map_inplace(|_, _, v| v - dn);
            let norm = (dn * (T::one() - nf.recip())).sqrt().recip();
            norm / nf.sqrt()
        }
    };
    let mut values = symmetric_eigenvalues(a)?;
    if post != T::one() {
        for v in &mut values {
            *v = *v * post;
        }
    }
    Ok(Spectrum { values, mode: mode.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_raw() {
        let s = eigenvalues::<f64>(&Graph::complete(3), &ScalingMode::Raw).unwrap();
        let expect = [2.0, -1.0, -1.0];
        for (a, b) in s.values().iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn single_edge_sqrt_n() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let s = eigenvalues::<f64>(&g, &ScalingMode::SqrtN).unwrap();
        assert!((s.values()[0] - 0.707_106_781_186_547_5).abs() < 1e-12);
        assert!((s.values()[1] + 0.707_106_781_186_547_5).abs() < 1e-12);
    }

    #[test]
    fn scaling_relations() {
        let g = crate::generators::generate_er(60, 0.3, crate::graph::Seed(1));
        let sq = eigenvalues::<f64>(&g, &ScalingMode::SqrtN).unwrap();
        let er = eigenvalues::<f64>(&g, &ScalingMode::ErVariance { p: 0.3 }).unwrap();
        let raw = eigenvalues::<f64>(&g, &ScalingMode::Raw).unwrap();
        let f = (0.3f64 * 0.7).sqrt();
        for i in 0..60 {
            assert!((er.values()[i] - sq.values()[i] / f).abs() < 1e-12);
            assert!((raw.values()[i] / 60f64.sqrt() - sq.values()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn bm_centered_scale_factor() {
        // the normalization for p* = 0.8 and n = 900 is sqrt(900 · 0.16) = 12
        let block = BlockParams::equal(3, 300, 0.2, vec![0.8, 0.5, 0.6]);
        let g = crate::generators::generate_bm(&block, crate::graph::Seed(2)).unwrap();
        let c = eigenvalues::<f64>(&g, &ScalingMode::BmCentered { block: block.clone() }).unwrap();
        let u = eigenvalues::<f64>(&g, &ScalingMode::BmUncentered { p_star: 0.8 }).unwrap();
        let raw_max = eigenvalues::<f64>(&g, &ScalingMode::Raw).unwrap().max();
        assert!((u.max() - raw_max / 12.0).abs() < 1e-9);
        // centering removes the rank-3 signal: the bulk edge stays near 2·sqrt(max ζ)
        assert!(c.max() < 3.0 && u.max() > 20.0);
    }

    #[test]
    fn dr_centered_removes_perron_value() {
        let g = crate::generators::generate_dr(200, 6, crate::graph::Seed(3)).unwrap();
        let s = eigenvalues::<f64>(&g, &ScalingMode::DrCentered { d: 6 }).unwrap();
        // A - d/n J sends the all-ones eigenvalue d to 0; the rest scale by 1/sqrt(d (1 - 1/n))
        assert!(s.max() < 2.5);
    }

    #[test]
    fn invalid_modes() {
        let g = Graph::complete(3);
        assert!(eigenvalues::<f64>(&g, &ScalingMode::ErVariance { p: 0.0 }).is_err());
        assert!(eigenvalues::<f64>(&g, &ScalingMode::DrScaled { d: 1 }).is_err());
    }
}
