//! Monte-Carlo estimates of model spectra: kernel densities averaged over
//! sampled graphs and the pooled distribution function of their eigenvalues.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::generators::{generate, ModelParams};
use crate::graph::Seed;
use crate::numeric::quantile_sorted;
use crate::spectrum::{eigenvalues, kernel_density_of, silverman_bandwidth, DensityCurve, EmpiricalCdf, Grid, ScalingMode, GRID_MARGIN_SIGMAS};

/// Bandwidth choice for the replicate kernel densities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum SigmaPolicy {
    /// Silverman's rule per replicate. Replicates with a degenerate spectrum
    /// borrow the median bandwidth of the others, or `fallback` when every
    /// replicate is degenerate.
    Silverman { fallback: Option<f64> },
    Fixed { sigma: f64 },
}

/// Eigenvalues of the sampled replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct McSpectra {
    pub seeds: Vec<u64>,
    /// One non-increasing spectrum per replicate.
    pub spectra: Vec<Vec<f64>>,
}

/// Samples `m` graphs from `params` on `n` vertices with seeds
/// `seed.derive(0..m)` and returns their spectra under `scaling`.
pub fn mc_spectra(params: &ModelParams, n: usize, m: usize, scaling: &ScalingMode, seed: Seed) -> Result<McSpectra> {
    if m == 0 {
        return Err(Error::InvalidParameter("Monte-Carlo sample count must be at least 1".into()));
    }
    params.validate(n)?;
    let seeds: Vec<u64> = (0..m as u64).map(|r| seed.derive(r).0).collect();
    let spectra = seeds
        .par_iter()
        .enumerate()
        .map(|(r, &s)| {
            let g = generate(params, n, Seed(s)).map_err(|e| Error::Replicate { replicate: r, source: Box::new(e) })?;
            let sp = eigenvalues::<f64>(&g, scaling).map_err(|e| Error::Replicate { replicate: r, source: Box::new(e) })?;
            Ok(sp.values().to_vec())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(McSpectra { seeds, spectra })
}

/// Averaged model curve.
#[derive(Debug, Clone)]
pub struct McCurve {
    /// Mean of the replicate kernel densities on a shared grid.
    pub density: DensityCurve<f64>,
    /// ECDF of all pooled eigenvalues.
    pub ecdf: EmpiricalCdf<f64>,
    pub bandwidths: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Replicates whose bandwidth was borrowed.
    pub degenerate: usize,
    /// True when the bandwidth came from the policy's fallback.
    pub used_fallback: bool,
}

/// Builds the averaged curve from replicate spectra.
pub fn mc_curve(spectra: &McSpectra, sigma: SigmaPolicy, grid_points: usize) -> Result<McCurve> {
    let own: Vec<Option<f64>> = match sigma {
        SigmaPolicy::Fixed { sigma } => {
            if !(sigma > 0.0) {
                return Err(Error::InvalidParameter(format!("bandwidth must be positive, got {sigma}")));
            }
            vec![Some(sigma); spectra.spectra.len()]
        }
        SigmaPolicy::Silverman { .. } => spectra
            .spectra
            .iter()
            .map(|s| match silverman_bandwidth(s) {
                Ok(b) => Ok(Some(b)),
                Err(Error::DegenerateSpectrum) => Ok(None),
                Err(e) => Err(e),
            })
            .collect::<Result<_>>()?,
    };
    let mut good: Vec<f64> = own.iter().flatten().copied().collect();
    let degenerate = own.len() - good.len();
    let mut used_fallback = false;
    let borrowed = if good.is_empty() {
        used_fallback = true;
        match sigma {
            SigmaPolicy::Silverman { fallback: Some(f) } if f > 0.0 => f,
            _ => return Err(Error::DegenerateSpectrum),
        }
    } else {
        good.sort_by(|a, b| a.partial_cmp(b).expect("NaN bandwidth"));
        quantile_sorted(&good, 0.5)
    };
    let bandwidths: Vec<f64> = own.iter().map(|b| b.unwrap_or(borrowed)).collect();

    let lo = spectra.spectra.iter().filter_map(|s| s.last()).copied().fold(f64::INFINITY, f64::min);
    let hi = spectra.spectra.iter().filter_map(|s| s.first()).copied().fold(f64::NEG_INFINITY, f64::max);
    let widest = bandwidths.iter().copied().fold(0.0, f64::max);
    let grid = Grid::covering(lo, hi, GRID_MARGIN_SIGMAS * widest, grid_points);
    let curves = spectra
        .spectra
        .iter()
        .zip(&bandwidths)
        .map(|(s, &b)| kernel_density_of(s, b, grid))
        .collect::<Result<Vec<_>>>()?;
    let density = DensityCurve::average(&curves)?;
    let ecdf = EmpiricalCdf::pooled(spectra.spectra.iter().map(|s| s.as_slice()));
    Ok(McCurve { density, ecdf, bandwidths, seeds: spectra.seeds.clone(), degenerate, used_fallback })
}

/// Monte-Carlo model curve in one call.
pub fn mc_average_esd(
    params: &ModelParams,
    n: usize,
    m: usize,
    sigma: SigmaPolicy,
    scaling: &ScalingMode,
    seed: Seed,
    grid_points: usize,
) -> Result<McCurve> {
    mc_curve(&mc_spectra(params, n, m, scaling, seed)?, sigma, grid_points)
}

/// Memo of model curves keyed by everything that determines them except
/// the fallback bandwidth, which only matters for fully degenerate samples
/// (those keep their spectra cached instead).
#[derive(Debug, Default)]
pub struct McCache {
    curves: Mutex<HashMap<String, Arc<McCurve>>>,
    degenerate: Mutex<HashMap<String, Arc<McSpectra>>>,
}

impl McCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.curves.lock().expect("cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[allow(clippy::too_many_arguments)]
    pub fn get_or_compute(
        &self,
        params: &ModelParams,
        n: usize,
        m: usize,
        sigma: SigmaPolicy,
        scaling: &ScalingMode,
        seed: Seed,
        grid_points: usize,
    ) -> Result<Arc<McCurve>> {
        let policy_key = match sigma {
            SigmaPolicy::Silverman { .. } => "silverman".to_string(),
            SigmaPolicy::Fixed { sigma } => format!("fixed:{:x}", sigma.to_bits()),
        };
        let key = format!(
            "{}|{n}|{m}|{}|{}|{grid_points}|{policy_key}",
            serde_json::to_string(params).expect("params serialize"),
            scaling.label(),
            seed.0
        );
        if let Some(c) = self.curves.lock().expect("cache poisoned").get(&key) {
            return Ok(Arc::clone(c));
        }
        let cached = self.degenerate.lock().expect("cache poisoned").get(&key).cloned();
        let spectra = match cached {
            Some(s) => s,
            None => Arc::new(mc_spectra(params, n, m, scaling, seed)?),
        };
        let curve = Arc::new(mc_curve(&spectra, sigma, grid_points)?);
        if curve.used_fallback {
            self.degenerate.lock().expect("cache poisoned").insert(key, spectra);
        } else {
            self.curves.lock().expect("cache poisoned").insert(key, Arc::clone(&curve));
        }
        Ok(curve)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_replicate_is_a_plain_kernel_density() {
        let params = ModelParams::Er { p: 0.2 };
        let spectra = mc_spectra(&params, 40, 1, &ScalingMode::SqrtN, Seed(5)).unwrap();
        let mc = mc_curve(&spectra, SigmaPolicy::Silverman { fallback: None }, 512).unwrap();
        let s = &spectra.spectra[0];
        let direct = kernel_density_of(s, silverman_bandwidth(s).unwrap(), *mc.density.grid()).unwrap();
        assert_eq!(mc.density.values(), direct.values());
        assert_eq!(mc.ecdf.len(), 40);
    }

    #[test]
    fn empty_graphs_give_one_bump() {
        let params = ModelParams::Er { p: 0.0 };
        let fixed = mc_average_esd(&params, 30, 3, SigmaPolicy::Fixed { sigma: 0.1 }, &ScalingMode::SqrtN, Seed(1), 257)
            .unwrap();
        let peak = fixed.density.at(0.0);
        assert!((peak - 1.0 / (0.1 * (2.0 * std::f64::consts::PI).sqrt())).abs() < 1e-9);
        let silver = SigmaPolicy::Silverman { fallback: None };
        assert_eq!(
            mc_average_esd(&params, 30, 3, silver, &ScalingMode::SqrtN, Seed(1), 257).unwrap_err(),
            Error::DegenerateSpectrum
        );
        let fb = SigmaPolicy::Silverman { fallback: Some(0.2) };
        let c = mc_average_esd(&params, 30, 3, fb, &ScalingMode::SqrtN, Seed(1), 257).unwrap();
        assert!(c.used_fallback && c.degenerate == 3);
    }

    #[test]
    fn curves_have_unit_mass_and_are_cached() {
        let cache = McCache::new();
        let params = ModelParams::Ws { p_r: 0.3, k: 4 };
        let pol = SigmaPolicy::Silverman { fallback: None };
        let a = cache.get_or_compute(&params, 80, 5, pol, &ScalingMode::SqrtN, Seed(9), 1024).unwrap();
        assert!((a.density.mass() - 1.0).abs() < 0.01);
        let b = cache.get_or_compute(&params, 80, 5, pol, &ScalingMode::SqrtN, Seed(9), 1024).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(cache.len(), 1);
    }

    #[test]
    fn replicate_failures_carry_the_index() {
        let err = mc_spectra(&ModelParams::Dr { d: 3 }, 5, 2, &ScalingMode::Raw, Seed(0)).unwrap_err();
        assert!(matches!(err, Error::InfeasibleDegree(_)));
    }
}
