//! Simulation harnesses: confusion matrices for model selection, estimator
//! sweeps over graph sizes, and block-model spectra against their limit.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{CandidateSpec, ExperimentConfig, ExperimentKind};
use super::{select_observed, Candidate, FitConfig, McCache, Observed, SearchSpace};
use crate::error::{Error, Result};
use crate::generators::{generate, generate_bm, BlockParams, ModelFamily, ModelParams, OffBlock};
use crate::graph::Seed;
use crate::laws::{bm_density, bm_zeta, BmDensity, SolverOptions};
use crate::metrics::{l1_density, Divergence};
use crate::numeric::mean_sd;
use crate::spectrum::{block_p_star, eigenvalues, kernel_density_of, silverman_bandwidth, DensityCurve, Grid, ScalingMode, GRID_MARGIN_SIGMAS};

/// The five models of the selection tables at level `beta`: ER `p = β`,
/// GRG `r = β`, DR `d = round(10β)`, WS `p_r = β`, BA `p_s = 1 + β`.
pub fn beta_models(beta: f64, cfg: &FitConfig) -> Vec<ModelParams> {
    vec![
        ModelParams::Er { p: beta },
        ModelParams::Grg { r: beta },
        ModelParams::Dr { d: (10.0 * beta).round() as usize },
        ModelParams::Ws { p_r: beta, k: cfg.ws_k },
        ModelParams::Ba { p_s: 1.0 + beta, m: cfg.ba_m },
    ]
}

/// Parameter vector the fitting code estimates for `params`.
pub fn theta_of(params: &ModelParams) -> Result<Vec<f64>> {
    Ok(match params {
        ModelParams::Er { p } => vec![*p],
        ModelParams::Dr { d } => vec![*d as f64],
        ModelParams::Grg { r } => vec![*r],
        ModelParams::Ws { p_r, .. } => vec![*p_r],
        ModelParams::Ba { p_s, .. } => vec![*p_s],
        ModelParams::Bm(b) => match &b.off_block {
            OffBlock::Uniform(p0) if b.p_within.windows(2).all(|w| w[0] == w[1]) => vec![*p0, b.p_within[0]],
            _ => {
                return Err(Error::InvalidParameter(
                    "block-model estimation needs one off-block and one within-block probability".into(),
                ))
            }
        },
    })
}

/// `params` on `n` vertices; block models are re-split into equal blocks.
pub fn params_for_n(params: &ModelParams, n: usize) -> ModelParams {
    match params {
        ModelParams::Bm(b) => {
            let m = b.blocks().min(n).max(1);
            let sizes = (0..m).map(|k| n / m + usize::from(k < n % m)).collect();
            ModelParams::Bm(BlockParams { block_sizes: sizes, ..b.clone() })
        }
        other => other.clone(),
    }
}

fn observed_seed(base: Seed, tag: &str, family: ModelFamily, n: usize, rep: usize) -> Seed {
    base.derive_label(tag).derive_label(family.name()).derive(n as u64).derive(rep as u64)
}

/// Tallies for one graph size and divergence. Rows are true models, columns
/// the selected candidate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfusionMatrix {
    pub n: usize,
    pub divergence: Divergence,
    pub truths: Vec<ModelFamily>,
    pub candidates: Vec<ModelFamily>,
    pub counts: Vec<Vec<usize>>,
    /// Replicates per row where selection failed or no candidate succeeded.
    pub failures: Vec<usize>,
    pub ties: usize,
}

impl ConfusionMatrix {
    /// Tallies on the diagonal (selected family equals the true family).
    pub fn hits(&self) -> usize {
        (0..self.truths.len()).map(|i| self.row_hits(i)).sum()
    }

    pub fn row_hits(&self, row: usize) -> usize {
        self.candidates.iter().position(|&c| c == self.truths[row]).map_or(0, |j| self.counts[row][j])
    }

    pub fn row_total(&self, row: usize) -> usize {
        self.counts[row].iter().sum::<usize>() + self.failures[row]
    }

    pub fn total(&self) -> usize {
        (0..self.truths.len()).map(|i| self.row_total(i)).sum()
    }

    pub fn hit_rate(&self) -> f64 {
        self.hits() as f64 / self.total().max(1) as f64
    }
}

/// Alias kept for the per-cell view of a matrix.
pub type ConfusionCell = (ModelFamily, ModelFamily, usize);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfusionReport {
    pub truths: Vec<ModelParams>,
    pub n_list: Vec<usize>,
    pub reps: usize,
    /// Ordered by `n`, then by divergence in the order requested.
    pub matrices: Vec<ConfusionMatrix>,
}

impl ConfusionReport {
    pub fn matrix(&self, n: usize, divergence: Divergence) -> Option<&ConfusionMatrix> {
        self.matrices.iter().find(|m| m.n == n && m.divergence == divergence)
    }

    /// Non-zero cells of one matrix.
    pub fn cells(m: &ConfusionMatrix) -> Vec<ConfusionCell> {
        let mut out = Vec::new();
        for (i, row) in m.counts.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                if c > 0 {
                    out.push((m.truths[i], m.candidates[j], c));
                }
            }
        }
        out
    }

    /// One row per (n, divergence, true model); the divergences of an `n`
    /// appear side by side in the order requested.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let Some(first) = self.matrices.first() else { return out };
        out.push_str("n,divergence,true_model");
        for c in &first.candidates {
            let _ = write!(out, ",{}", c.name());
        }
        out.push_str(",failures,ties\n");
        for m in &self.matrices {
            for (i, t) in m.truths.iter().enumerate() {
                let _ = write!(out, "{},{},{}", m.n, m.divergence.name(), t.name());
                for c in &m.counts[i] {
                    let _ = write!(out, ",{c}");
                }
                let _ = writeln!(out, ",{},{}", m.failures[i], if i == 0 { m.ties } else { 0 });
            }
        }
        out
    }
}

/// Generates `reps` graphs per true model and size, runs selection under
/// every divergence on the same graph and tallies the winners.
pub fn confusion_experiment(
    truths: &[ModelParams],
    candidates: &[CandidateSpec],
    n_list: &[usize],
    reps: usize,
    divergences: &[Divergence],
    cfg: &FitConfig,
) -> Result<ConfusionReport> {
    cfg.validate()?;
    if truths.is_empty() || candidates.is_empty() || n_list.is_empty() || divergences.is_empty() {
        return Err(Error::Config("confusion experiment needs models, candidates, sizes and divergences".into()));
    }
    if reps == 0 {
        return Err(Error::Config("reps must be at least 1".into()));
    }
    let families: Vec<ModelFamily> = candidates.iter().map(|c| c.family).collect();
    let mut matrices = Vec::new();
    for &n in n_list {
        let cands: Vec<Candidate> = candidates.iter().map(|c| c.resolve(n, cfg)).collect();
        let cache = McCache::new();
        let mut counts = vec![vec![vec![0usize; families.len()]; truths.len()]; divergences.len()];
        let mut failures = vec![vec![0usize; truths.len()]; divergences.len()];
        let mut ties = vec![0usize; divergences.len()];
        for (i, truth) in truths.iter().enumerate() {
            let params = params_for_n(truth, n);
            log::info!("confusion: n={n}, true model {}, {reps} replicates", truth.family());
            let winners: Vec<Vec<Option<(usize, bool)>>> = (0..reps)
                .into_par_iter()
                .map(|r| {
                    let seed = observed_seed(cfg.seed, "observed", truth.family(), n, r);
                    let observed = generate(&params, n, seed)
                        .and_then(|g| Observed::for_families(&g, &families, cfg));
                    divergences
                        .iter()
                        .map(|&d| {
                            let obs = match &observed {
                                Ok(o) => o,
                                Err(e) => {
                                    log::warn!("replicate {r} of {}: {e}", truth.family());
                                    return None;
                                }
                            };
                            let dcfg = FitConfig { divergence: d, ..cfg.clone() };
                            match select_observed(obs, &cands, &dcfg, &cache) {
                                Ok(rep) => rep.winner.map(|w| {
                                    (families.iter().position(|&f| f == w).expect("winner is a candidate"), rep.tie)
                                }),
                                Err(e) => {
                                    log::warn!("selection failed on replicate {r}: {e}");
                                    None
                                }
                            }
                        })
                        .collect()
                })
                .collect();
            for per_div in winners {
                for (k, w) in per_div.into_iter().enumerate() {
                    match w {
                        Some((j, tie)) => {
                            counts[k][i][j] += 1;
                            ties[k] += usize::from(tie);
                        }
                        None => failures[k][i] += 1,
                    }
                }
            }
        }
        for (k, &d) in divergences.iter().enumerate() {
            matrices.push(ConfusionMatrix {
                n,
                divergence: d,
                truths: truths.iter().map(|t| t.family()).collect(),
                candidates: families.clone(),
                counts: std::mem::take(&mut counts[k]),
                failures: std::mem::take(&mut failures[k]),
                ties: ties[k],
            });
        }
    }
    Ok(ConfusionReport { truths: truths.to_vec(), n_list: n_list.to_vec(), reps, matrices })
}

/// Mean estimate with a 95% normal-approximation interval, per parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimationRow {
    pub model: ModelFamily,
    pub n: usize,
    pub divergence: Divergence,
    pub truth: Vec<f64>,
    pub estimates: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    pub mean_abs_error: Vec<f64>,
    pub failures: usize,
}

impl EstimationRow {
    fn summarize(
        model: ModelFamily,
        n: usize,
        divergence: Divergence,
        truth: Vec<f64>,
        estimates: Vec<Vec<f64>>,
        failures: usize,
    ) -> Self {
        let dim = truth.len();
        let k = estimates.len() as f64;
        let mut row = EstimationRow {
            model,
            n,
            divergence,
            truth,
            estimates,
            mean: vec![f64::NAN; dim],
            ci_low: vec![f64::NAN; dim],
            ci_high: vec![f64::NAN; dim],
            mean_abs_error: vec![f64::NAN; dim],
            failures,
        };
        if row.estimates.is_empty() {
            return row;
        }
        for j in 0..dim {
            let xs: Vec<f64> = row.estimates.iter().map(|e| e[j]).collect();
            let (mean, sd) = mean_sd(&xs);
            let half = 1.96 * sd / k.sqrt();
            row.mean[j] = mean;
            row.ci_low[j] = mean - half;
            row.ci_high[j] = mean + half;
            row.mean_abs_error[j] = xs.iter().map(|x| (x - row.truth[j]).abs()).sum::<f64>() / k;
        }
        row
    }
}

pub fn estimation_csv(rows: &[EstimationRow]) -> String {
    let mut out = String::from("model,n,divergence,param,truth,mean,ci_low,ci_high,mean_abs_error,reps,failures\n");
    for r in rows {
        for j in 0..r.truth.len() {
            let _ = writeln!(
                out,
                "{},{},{},{j},{},{},{},{},{},{},{}",
                r.model.name(),
                r.n,
                r.divergence.name(),
                r.truth[j],
                r.mean[j],
                r.ci_low[j],
                r.ci_high[j],
                r.mean_abs_error[j],
                r.estimates.len(),
                r.failures
            );
        }
    }
    out
}

/// Fits `truth`'s family to `reps` graphs sampled from it at every size.
/// Each graph is fitted once per divergence.
pub fn estimation_sweep(
    truth: &ModelParams,
    space: Option<&SearchSpace>,
    n_list: &[usize],
    reps: usize,
    divergences: &[Divergence],
    cfg: &FitConfig,
) -> Result<Vec<EstimationRow>> {
    cfg.validate()?;
    if reps == 0 || n_list.is_empty() || divergences.is_empty() {
        return Err(Error::Config("estimation sweep needs reps >= 1, sizes and divergences".into()));
    }
    let family = truth.family();
    let theta = theta_of(truth)?;
    let mut rows = Vec::new();
    for &n in n_list {
        let spec = CandidateSpec { family, space: space.cloned() };
        let cand = spec.resolve(n, cfg);
        let params = params_for_n(truth, n);
        let cache = McCache::new();
        log::info!("estimation: {family} n={n}, {reps} replicates");
        let fits: Vec<Vec<Option<Vec<f64>>>> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let seed = observed_seed(cfg.seed, "estimation", family, n, r);
                let observed = generate(&params, n, seed).and_then(|g| Observed::for_families(&g, &[family], cfg));
                divergences
                    .iter()
                    .map(|&d| {
                        let obs = observed.as_ref().ok()?;
                        let dcfg = FitConfig { divergence: d, ..cfg.clone() };
                        match super::fit_observed(obs, family, &cand.space, &dcfg, &cache) {
                            Ok(rep) => Some(rep.theta),
                            Err(e) => {
                                log::warn!("fit failed on replicate {r}: {e}");
                                None
                            }
                        }
                    })
                    .collect()
            })
            .collect();
        for (k, &d) in divergences.iter().enumerate() {
            let got: Vec<Vec<f64>> = fits.iter().filter_map(|f| f[k].clone()).collect();
            let failures = reps - got.len();
            rows.push(EstimationRow::summarize(family, n, d, theta.clone(), got, failures));
        }
    }
    Ok(rows)
}

/// Sampled block-model spectra (centered and uncentered) against the limit.
#[derive(Debug, Clone, Serialize)]
pub struct BmScenario {
    pub params: BlockParams,
    pub seed: u64,
    /// Equal blocks with one off-block probability.
    pub canonical: bool,
    pub p_star: f64,
    /// `sqrt(n p* (1 - p*))`, the divisor of both matrices.
    pub scale: f64,
    pub eta: f64,
    pub l1_centered: f64,
    pub l1_uncentered: f64,
    pub l1_between: f64,
    pub raw_mass: f64,
    #[serde(skip)]
    pub centered: DensityCurve<f64>,
    #[serde(skip)]
    pub uncentered: DensityCurve<f64>,
    #[serde(skip)]
    pub theory: BmDensity,
}

impl BmScenario {
    /// `(name, csv)` for the three curves.
    pub fn curve_csvs(&self, prefix: &str) -> Vec<(String, String)> {
        let meta = |kind: &str| vec![("curve", kind.to_string()), ("seed", self.seed.to_string())];
        vec![
            (format!("{prefix}_centered.csv"), self.centered.to_csv(&meta("centered"))),
            (format!("{prefix}_uncentered.csv"), self.uncentered.to_csv(&meta("uncentered"))),
            (format!("{prefix}_theory.csv"), self.theory.curve.to_csv(&meta("theory"))),
        ]
    }
}

/// Samples one block-model graph, computes the kernel densities of
/// `(A - E[A])/γ` and `A/γ` and the limiting density, and their ℓ1 distances.
pub fn bm_scenario(params: &BlockParams, seed: Seed, eta: f64, grid_points: usize, opts: SolverOptions) -> Result<BmScenario> {
    params.validate()?;
    let g = generate_bm(params, seed)?;
    let p_star = block_p_star(params);
    let centered_s = eigenvalues::<f64>(&g, &ScalingMode::BmCentered { block: params.clone() })?;
    let uncentered_s = eigenvalues::<f64>(&g, &ScalingMode::BmUncentered { p_star })?;
    let kde = |s: &[f64]| -> Result<DensityCurve<f64>> {
        let sigma = silverman_bandwidth(s)?;
        let (lo, hi) = (s[s.len() - 1], s[0]);
        kernel_density_of(s, sigma, Grid::covering(lo, hi, GRID_MARGIN_SIGMAS * sigma, grid_points))
    };
    let centered = kde(centered_s.values())?;
    let uncentered = kde(uncentered_s.values())?;

    let law = bm_zeta(params)?;
    let r = law.edge_bound().max(centered_s.max().abs()).max(centered_s.min().abs()) * 1.05;
    let theory = bm_density(&law, Grid::new(-r, r, grid_points)?, eta, opts)?;
    let n = params.n() as f64;
    Ok(BmScenario {
        params: params.clone(),
        seed: seed.0,
        canonical: law.canonical,
        p_star,
        scale: (n * p_star * (1.0 - p_star)).sqrt(),
        eta,
        l1_centered: l1_density(&centered, &theory.curve),
        l1_uncentered: l1_density(&uncentered, &theory.curve),
        l1_between: l1_density(&centered, &uncentered),
        raw_mass: theory.raw_mass,
        centered,
        uncentered,
        theory,
    })
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExperimentOutput {
    Confusion(ConfusionReport),
    Estimation { rows: Vec<EstimationRow> },
    BmScenario { scenarios: Vec<BmScenario> },
}

impl ExperimentOutput {
    /// CSV artifacts as `(file name, contents)`.
    pub fn csv_files(&self) -> Vec<(String, String)> {
        match self {
            ExperimentOutput::Confusion(r) => vec![("confusion.csv".into(), r.to_csv())],
            ExperimentOutput::Estimation { rows } => vec![("estimates.csv".into(), estimation_csv(rows))],
            ExperimentOutput::BmScenario { scenarios } => scenarios
                .iter()
                .enumerate()
                .flat_map(|(k, s)| s.curve_csvs(&format!("scenario{}_seed{}", k + 1, s.seed)))
                .collect(),
        }
    }
}

/// Runs the experiment a parsed configuration describes.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let truths: Vec<ModelParams> = cfg.models.iter().map(|m| m.params.clone()).collect();
    match cfg.kind {
        ExperimentKind::Confusion => Ok(ExperimentOutput::Confusion(confusion_experiment(
            &truths,
            &cfg.resolved_candidates(),
            &cfg.n_list,
            cfg.reps,
            &cfg.divergences,
            &cfg.fit,
        )?)),
        ExperimentKind::Estimation => {
            let mut rows = Vec::new();
            for m in &cfg.models {
                rows.extend(estimation_sweep(&m.params, m.space.as_ref(), &cfg.n_list, cfg.reps, &cfg.divergences, &cfg.fit)?);
            }
            Ok(ExperimentOutput::Estimation { rows })
        }
        ExperimentKind::BmScenario => {
            let mut scenarios = Vec::new();
            for (k, m) in cfg.models.iter().enumerate() {
                let ModelParams::Bm(b) = &m.params else {
                    return Err(Error::Config(format!("model block {} is not a block model", k + 1)));
                };
                for r in 0..cfg.reps {
                    let seed = cfg.fit.seed.derive_label("scenario").derive(k as u64).derive(r as u64);
                    scenarios.push(bm_scenario(b, seed, cfg.eta, cfg.fit.grid_points, SolverOptions::default())?);
                }
            }
            Ok(ExperimentOutput::BmScenario { scenarios })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> FitConfig {
        FitConfig { mc_samples: 3, grid_points: 256, ..FitConfig::default() }
    }

    #[test]
    fn single_model_single_rep_is_one_tally() {
        let cfg = quick();
        let truths = [ModelParams::Er { p: 0.2 }];
        let cands = [CandidateSpec { family: ModelFamily::Er, space: Some(SearchSpace::grid(0.0, 0.5, 0.05)) }];
        let r = confusion_experiment(&truths, &cands, &[40], 1, &[Divergence::L1Cdf], &cfg).unwrap();
        assert_eq!(r.matrices.len(), 1);
        assert_eq!(r.matrices[0].counts, vec![vec![1]]);
        assert_eq!(r.matrices[0].hits(), 1);
    }

    #[test]
    fn three_divergence_layout() {
        let cfg = quick();
        let truths = [ModelParams::Er { p: 0.3 }, ModelParams::Dr { d: 4 }];
        let cands = [
            CandidateSpec { family: ModelFamily::Er, space: Some(SearchSpace::grid(0.0, 0.5, 0.05)) },
            CandidateSpec { family: ModelFamily::Dr, space: Some(SearchSpace::grid(1.0, 10.0, 1.0)) },
        ];
        let r = confusion_experiment(&truths, &cands, &[30, 40], 2, &Divergence::ALL, &cfg).unwrap();
        let order: Vec<(usize, Divergence)> = r.matrices.iter().map(|m| (m.n, m.divergence)).collect();
        assert_eq!(order[..3], [(30, Divergence::KullbackLeibler), (30, Divergence::L1Density), (30, Divergence::L1Cdf)]);
        for m in &r.matrices {
            assert_eq!(m.total(), 4);
        }
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 1 + 6 * 2);
        assert!(csv.starts_with("n,divergence,true_model,er,dr,failures,ties"));
    }

    #[test]
    fn estimation_interval_brackets_the_mean() {
        let cfg = quick();
        let rows = estimation_sweep(
            &ModelParams::Er { p: 0.3 },
            Some(&SearchSpace::grid_then_golden(0.0, 0.5, 0.05)),
            &[60],
            4,
            &[Divergence::L1Cdf],
            &cfg,
        )
        .unwrap();
        let r = &rows[0];
        assert_eq!(r.estimates.len(), 4);
        assert!(r.ci_low[0] <= r.mean[0] && r.mean[0] <= r.ci_high[0]);
        assert!(r.mean_abs_error[0] < 0.1);
    }

    #[test]
    fn block_models_rescale_evenly() {
        let b = ModelParams::Bm(BlockParams::equal(3, 300, 0.2, vec![0.8, 0.5, 0.6]));
        match params_for_n(&b, 100) {
            ModelParams::Bm(p) => assert_eq!(p.block_sizes, vec![34, 33, 33]),
            _ => unreachable!(),
        }
        assert!(theta_of(&b).is_err());
        let eq = ModelParams::Bm(BlockParams::equal(2, 10, 0.2, vec![0.7, 0.7]));
        assert_eq!(theta_of(&eq).unwrap(), vec![0.2, 0.7]);
    }

    #[test]
    fn small_scenario_runs() {
        let b = BlockParams::equal(2, 60, 0.1, vec![0.6, 0.6]);
        let s = bm_scenario(&b, Seed(3), 1e-3, 512, SolverOptions::default()).unwrap();
        assert!(s.canonical);
        assert!((s.scale - (120.0f64 * 0.6 * 0.4).sqrt()).abs() < 1e-12);
        assert!(s.l1_centered < 0.6, "{}", s.l1_centered);
        assert_eq!(s.curve_csvs("x").len(), 3);
    }
}
