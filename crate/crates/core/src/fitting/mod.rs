//! Parameter estimation and model selection by minimizing a divergence
//! between the observed eigenvalue distribution and a model's.
//!
//! The model side is a closed-form law when one is available (ER under
//! `A/sqrt(n)`, d-regular under the raw adjacency matrix) and a Monte-Carlo
//! average over sampled graphs otherwise. Replicate seeds depend only on the
//! master seed and the family, never on the parameter, so profiles over a
//! grid use common random numbers and repeated fits share cached curves.

mod config;
mod experiment;
mod montecarlo;

pub use config::{parse_experiment, CandidateSpec, ExperimentConfig, ExperimentKind, ModelSpec};
pub use experiment::{
    beta_models, bm_scenario, confusion_experiment, estimation_csv, estimation_sweep, params_for_n, run_experiment,
    theta_of, BmScenario, ConfusionCell, ConfusionMatrix, ConfusionReport, EstimationRow, ExperimentOutput,
};
pub use montecarlo::{mc_average_esd, mc_curve, mc_spectra, McCache, McCurve, McSpectra, SigmaPolicy};

use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::{BlockParams, ModelFamily, ModelParams, DEFAULT_BA_M, DEFAULT_WS_K};
use crate::graph::{Graph, Seed};
use crate::laws::{AnalyticLaw, LawCdf};
use crate::metrics::{kl_divergence, kl_divergence_detail, l1_cdf, l1_density, overlap, CdfRef, Divergence, DEFAULT_KL_FLOOR};
use crate::optimize::{argmin_first, golden_section, grid_points, separated_minima};
use crate::spectrum::{
    eigenvalues, kernel_density_of, silverman_bandwidth, DensityCurve, EmpiricalCdf, Grid, ScalingMode,
    DEFAULT_GRID_POINTS, GRID_MARGIN_SIGMAS,
};

pub const DEFAULT_MC_SAMPLES: usize = 30;
pub const DEFAULT_GOLDEN_TOL: f64 = 1e-8;
/// Pre-scan step used before golden-section refinement.
pub const DEFAULT_PRESCAN_STEP: f64 = 0.01;
/// Equal-sized blocks assumed when fitting the block model.
pub const DEFAULT_BM_BLOCKS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    Grid,
    /// One-dimensional golden-section search over the bounds.
    GoldenSection,
    /// Grid pre-scan, then golden section around the best grid point.
    GridThenGolden,
}

impl SearchMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "grid" => Ok(SearchMode::Grid),
            "golden" | "golden-section" => Ok(SearchMode::GoldenSection),
            "grid-golden" | "grid-then-golden" => Ok(SearchMode::GridThenGolden),
            other => Err(Error::InvalidParameter(format!("unknown search mode {other:?} (grid, golden, grid-golden)"))),
        }
    }
}

/// Box of candidate parameters with per-axis grid steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub bounds: Vec<(f64, f64)>,
    pub steps: Vec<f64>,
    pub mode: SearchMode,
}

impl SearchSpace {
    pub fn grid(lo: f64, hi: f64, step: f64) -> Self {
        SearchSpace { bounds: vec![(lo, hi)], steps: vec![step], mode: SearchMode::Grid }
    }

    pub fn golden(lo: f64, hi: f64) -> Self {
        SearchSpace { bounds: vec![(lo, hi)], steps: vec![hi - lo], mode: SearchMode::GoldenSection }
    }

    pub fn grid_then_golden(lo: f64, hi: f64, step: f64) -> Self {
        SearchSpace { bounds: vec![(lo, hi)], steps: vec![step], mode: SearchMode::GridThenGolden }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    /// Same box with every grid step replaced.
    pub fn with_step(mut self, step: f64) -> Self {
        for s in &mut self.steps {
            *s = step;
        }
        self
    }

    /// Defaults per family: `[0, 1]` with step 0.001 for GRG, WS and
    /// Monte-Carlo ER; `[0, 0.5]` pre-scanned at 0.01 then refined by golden
    /// section for analytic ER; `[1, 4]` with step 0.01 for BA; integers in
    /// `[1, n-1]` for DR; `[0.1, 0.3] × [0.6, 0.8]` with step 0.001 for
    /// `(p0, p_in)` of the block model.
    pub fn default_for(family: ModelFamily, n: usize, cfg: &FitConfig) -> Self {
        match family {
            ModelFamily::Er if cfg.analytic_available(family) => {
                SearchSpace::grid_then_golden(0.0, 0.5, DEFAULT_PRESCAN_STEP)
            }
            ModelFamily::Er | ModelFamily::Grg | ModelFamily::Ws => SearchSpace::grid(0.0, 1.0, 0.001),
            ModelFamily::Ba => SearchSpace::grid(1.0, 4.0, 0.01),
            ModelFamily::Dr => SearchSpace::grid(1.0, n.saturating_sub(1).max(1) as f64, 1.0),
            ModelFamily::Bm => SearchSpace {
                bounds: vec![(0.1, 0.3), (0.6, 0.8)],
                steps: vec![0.001, 0.001],
                mode: SearchMode::Grid,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InfeasibleSpace(m));
        if self.bounds.is_empty() || self.bounds.len() != self.steps.len() {
            return bad("need one step per bounded axis".into());
        }
        for (&(lo, hi), &step) in self.bounds.iter().zip(&self.steps) {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return bad(format!("bounds [{lo}, {hi}] need lower < upper"));
            }
            if !(step > 0.0 && step.is_finite()) {
                return bad(format!("grid step {step} must be positive"));
            }
        }
        if self.mode != SearchMode::Grid && self.dim() != 1 {
            return bad("golden-section search is one-dimensional".into());
        }
        Ok(())
    }

    fn check_family(&self, family: ModelFamily) -> Result<()> {
        self.validate()?;
        let want = if family == ModelFamily::Bm { 2 } else { 1 };
        if self.dim() != want {
            return Err(Error::InfeasibleSpace(format!("{family} takes {want} parameter(s), space has {}", self.dim())));
        }
        if family == ModelFamily::Dr {
            let (lo, hi) = self.bounds[0];
            if self.mode != SearchMode::Grid || self.steps[0].fract() != 0.0 || lo.fract() != 0.0 || lo < 0.0 {
                return Err(Error::InfeasibleSpace(format!(
                    "DR degrees need an integer grid with lower bound >= 0 (got [{lo}, {hi}] step {})",
                    self.steps[0]
                )));
            }
        }
        Ok(())
    }

    /// Grid points along every axis.
    pub fn axes(&self) -> Vec<Vec<f64>> {
        self.bounds.iter().zip(&self.steps).map(|(&(lo, hi), &s)| grid_points(lo, hi, s)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingChoice {
    SqrtN,
    Raw,
}

impl ScalingChoice {
    pub fn mode(self) -> ScalingMode {
        match self {
            ScalingChoice::SqrtN => ScalingMode::SqrtN,
            ScalingChoice::Raw => ScalingMode::Raw,
        }
    }
}

/// Eigenvalue scaling per family: `A/sqrt(n)` everywhere except the raw
/// adjacency matrix for d-regular graphs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingPolicy {
    pub er: ScalingChoice,
    pub dr: ScalingChoice,
    pub grg: ScalingChoice,
    pub ws: ScalingChoice,
    pub ba: ScalingChoice,
    pub bm: ScalingChoice,
}

impl Default for ScalingPolicy {
    fn default() -> Self {
        use ScalingChoice::*;
        ScalingPolicy { er: SqrtN, dr: Raw, grg: SqrtN, ws: SqrtN, ba: SqrtN, bm: SqrtN }
    }
}

impl ScalingPolicy {
    pub fn for_family(&self, f: ModelFamily) -> ScalingChoice {
        match f {
            ModelFamily::Er => self.er,
            ModelFamily::Dr => self.dr,
            ModelFamily::Grg => self.grg,
            ModelFamily::Ws => self.ws,
            ModelFamily::Ba => self.ba,
            ModelFamily::Bm => self.bm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub divergence: Divergence,
    /// Graphs sampled per Monte-Carlo model curve.
    pub mc_samples: usize,
    pub seed: Seed,
    /// Golden-section bracket tolerance.
    pub tolerance: f64,
    /// Compare with closed-form laws where they exist (ER, DR).
    pub use_analytic_law: bool,
    /// Convolve closed-form laws with the observed kernel before density
    /// divergences, so both sides carry the same smoothing.
    pub smooth_law: bool,
    pub grid_points: usize,
    pub kl_floor: f64,
    pub scaling: ScalingPolicy,
    pub ws_k: usize,
    pub ba_m: usize,
    pub bm_blocks: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            divergence: Divergence::L1Density,
            mc_samples: DEFAULT_MC_SAMPLES,
            seed: Seed(0),
            tolerance: DEFAULT_GOLDEN_TOL,
            use_analytic_law: true,
            smooth_law: true,
            grid_points: DEFAULT_GRID_POINTS,
            kl_floor: DEFAULT_KL_FLOOR,
            scaling: ScalingPolicy::default(),
            ws_k: DEFAULT_WS_K,
            ba_m: DEFAULT_BA_M,
            bm_blocks: DEFAULT_BM_BLOCKS,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mc_samples == 0 {
            return Err(Error::InvalidParameter("Monte-Carlo sample count must be at least 1".into()));
        }
        if !(self.tolerance > 0.0) || !(self.kl_floor > 0.0) || self.grid_points < 16 {
            return Err(Error::InvalidParameter("tolerance and KL floor must be positive, grid >= 16 points".into()));
        }
        if self.bm_blocks == 0 {
            return Err(Error::InvalidParameter("block model needs at least one block".into()));
        }
        Ok(())
    }

    /// Whether `family` is compared with a closed-form law (for DR only
    /// degrees `d >= 3` have one).
    pub fn analytic_available(&self, family: ModelFamily) -> bool {
        self.use_analytic_law
            && match family {
                ModelFamily::Er => self.scaling.er == ScalingChoice::SqrtN,
                ModelFamily::Dr => self.scaling.dr == ScalingChoice::Raw,
                _ => false,
            }
    }

    /// Seed of the Monte-Carlo replicates for `family`.
    pub fn family_seed(&self, family: ModelFamily) -> Seed {
        self.seed.derive_label(family.name())
    }

    /// Model parameters at `theta` for graphs on `n` vertices.
    pub fn params_at(&self, family: ModelFamily, theta: &[f64], n: usize) -> ModelParams {
        match family {
            ModelFamily::Er => ModelParams::Er { p: theta[0] },
            ModelFamily::Dr => ModelParams::Dr { d: theta[0].round().max(0.0) as usize },
            ModelFamily::Grg => ModelParams::Grg { r: theta[0] },
            ModelFamily::Ws => ModelParams::Ws { p_r: theta[0], k: self.ws_k },
            ModelFamily::Ba => ModelParams::Ba { p_s: theta[0], m: self.ba_m },
            ModelFamily::Bm => {
                let m = self.bm_blocks.min(n).max(1);
                let sizes = (0..m).map(|b| n / m + usize::from(b < n % m)).collect();
                ModelParams::Bm(BlockParams {
                    block_sizes: sizes,
                    off_block: crate::generators::OffBlock::Uniform(theta[0]),
                    p_within: vec![theta[1]; m],
                })
            }
        }
    }
}

/// Observed spectrum under one scaling with its kernel density and ECDF.
#[derive(Debug, Clone)]
pub struct ObservedCurve {
    pub scaling: ScalingChoice,
    /// Non-increasing eigenvalues.
    pub spectrum: Vec<f64>,
    pub bandwidth: f64,
    pub density: DensityCurve<f64>,
    pub ecdf: EmpiricalCdf<f64>,
}

impl ObservedCurve {
    pub fn new(g: &Graph, scaling: ScalingChoice, grid_points: usize) -> Result<Self> {
        let s = eigenvalues::<f64>(g, &scaling.mode())?;
        let bandwidth = silverman_bandwidth(s.values())?;
        let grid = Grid::covering(s.min(), s.max(), GRID_MARGIN_SIGMAS * bandwidth, grid_points);
        let density = kernel_density_of(s.values(), bandwidth, grid)?;
        Ok(ObservedCurve { scaling, spectrum: s.values().to_vec(), bandwidth, density, ecdf: s.ecdf() })
    }
}

/// Size and connectivity of the observed graph, carried into reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub n: usize,
    pub edges: usize,
    pub components: usize,
    pub isolated: usize,
    pub regular_degree: Option<usize>,
}

impl GraphSummary {
    pub fn of(g: &Graph) -> Self {
        GraphSummary {
            n: g.n(),
            edges: g.edge_count(),
            components: g.component_count(),
            isolated: g.isolated_count(),
            regular_degree: g.regular_degree(),
        }
    }
}

/// Observed curves, computed once per scaling and shared by all candidates.
#[derive(Debug, Clone)]
pub struct Observed {
    pub summary: GraphSummary,
    curves: Vec<ObservedCurve>,
}

impl Observed {
    pub fn new(g: &Graph, scalings: &[ScalingChoice], grid_points: usize) -> Result<Self> {
        let mut curves: Vec<ObservedCurve> = Vec::new();
        for &s in scalings {
            if curves.iter().all(|c| c.scaling != s) {
                curves.push(ObservedCurve::new(g, s, grid_points)?);
            }
        }
        Ok(Observed { summary: GraphSummary::of(g), curves })
    }

    /// Curves for every scaling the given families need.
    pub fn for_families(g: &Graph, families: &[ModelFamily], cfg: &FitConfig) -> Result<Self> {
        let scalings: Vec<ScalingChoice> = families.iter().map(|&f| cfg.scaling.for_family(f)).collect();
        Self::new(g, &scalings, cfg.grid_points)
    }

    pub fn curve(&self, s: ScalingChoice) -> Option<&ObservedCurve> {
        self.curves.iter().find(|c| c.scaling == s)
    }
}

/// Where the model curve at the estimate came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CurveProvenance {
    Analytic { law: String, smoothed: bool },
    MonteCarlo { replicates: usize, family_seed: u64, replicate_seeds: Vec<u64> },
}

/// Defaults in force during a fit, recorded so the run can be reproduced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDefaults {
    pub ws_k: usize,
    pub ba_m: usize,
    pub bm_blocks: usize,
    pub mc_samples: usize,
    pub grid_points: usize,
    pub grid_margin_sigmas: f64,
    pub kernel: String,
    pub bandwidth_rule: String,
    pub kl_floor: f64,
    pub golden_tolerance: f64,
    pub smooth_law: bool,
}

impl FitDefaults {
    fn of(cfg: &FitConfig) -> Self {
        FitDefaults {
            ws_k: cfg.ws_k,
            ba_m: cfg.ba_m,
            bm_blocks: cfg.bm_blocks,
            mc_samples: cfg.mc_samples,
            grid_points: cfg.grid_points,
            grid_margin_sigmas: GRID_MARGIN_SIGMAS,
            kernel: "gaussian".into(),
            bandwidth_rule: "0.9 min(sd, IQR/1.34) n^(-1/5)".into(),
            kl_floor: cfg.kl_floor,
            golden_tolerance: cfg.tolerance,
            smooth_law: cfg.smooth_law,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: ModelFamily,
    pub theta: Vec<f64>,
    pub params: ModelParams,
    pub divergence: Divergence,
    pub value: f64,
    pub scaling: ScalingMode,
    pub curve: CurveProvenance,
    pub space: SearchSpace,
    pub evaluations: usize,
    /// Final golden-section bracket, when one was run.
    pub bracket: Option<(f64, f64)>,
    pub observed_bandwidth: f64,
    /// Shared mass of the observed and model densities at the estimate.
    pub overlap: Option<f64>,
    pub kl_floored_fraction: Option<f64>,
    pub warnings: Vec<String>,
    pub defaults: FitDefaults,
}

/// One candidate family with its search space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub family: ModelFamily,
    pub space: SearchSpace,
}

impl Candidate {
    pub fn default_for(family: ModelFamily, n: usize, cfg: &FitConfig) -> Self {
        Candidate { family, space: SearchSpace::default_for(family, n, cfg) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateOutcome {
    pub family: ModelFamily,
    pub report: Option<FitReport>,
    /// Set when the candidate failed; it is then excluded from the ranking.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub family: ModelFamily,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub graph: GraphSummary,
    pub divergence: Divergence,
    pub candidates: Vec<CandidateOutcome>,
    /// Successful candidates by increasing divergence (stable in input order).
    pub ranking: Vec<RankEntry>,
    pub winner: Option<ModelFamily>,
    /// Another candidate reached exactly the winning value.
    pub tie: bool,
    pub caveats: Vec<String>,
}

enum ModelSource {
    Analytic(AnalyticLaw),
    MonteCarlo(ModelParams),
    Infeasible,
}

/// Objective `θ ↦ D(observed, model(θ))` for one family.
struct Objective<'a> {
    family: ModelFamily,
    obs: &'a ObservedCurve,
    n: usize,
    cfg: &'a FitConfig,
    cache: &'a McCache,
}

impl Objective<'_> {
    fn source(&self, theta: &[f64]) -> ModelSource {
        let params = self.cfg.params_at(self.family, theta, self.n);
        if params.validate(self.n).is_err() {
            return ModelSource::Infeasible;
        }
        if self.cfg.analytic_available(self.family) {
            match params {
                ModelParams::Er { p } => {
                    return AnalyticLaw::semicircle_p(p).map_or(ModelSource::Infeasible, ModelSource::Analytic)
                }
                ModelParams::Dr { d } if d >= 3 => return ModelSource::Analytic(AnalyticLaw::KestenMcKay { d }),
                _ => {}
            }
        }
        ModelSource::MonteCarlo(params)
    }

    fn sigma_policy(&self) -> SigmaPolicy {
        SigmaPolicy::Silverman { fallback: Some(self.obs.bandwidth) }
    }

    fn mc(&self, params: &ModelParams) -> Result<std::sync::Arc<McCurve>> {
        self.cache.get_or_compute(
            params,
            self.n,
            self.cfg.mc_samples,
            self.sigma_policy(),
            &self.obs.scaling.mode(),
            self.cfg.family_seed(self.family),
            self.cfg.grid_points,
        )
    }

    fn law_density(&self, law: &AnalyticLaw) -> Result<DensityCurve<f64>> {
        let (lo, hi) = law.support();
        if self.cfg.smooth_law {
            let sigma = self.obs.bandwidth;
            law.smoothed_curve(sigma, Grid::covering(lo, hi, GRID_MARGIN_SIGMAS * sigma, self.cfg.grid_points))
        } else {
            Ok(law.curve(Grid::covering(lo, hi, 0.0, self.cfg.grid_points)))
        }
    }

    /// Model density at `theta` (for density divergences and diagnostics).
    fn model_density(&self, theta: &[f64]) -> Result<Option<DensityCurve<f64>>> {
        Ok(match self.source(theta) {
            ModelSource::Analytic(law) => Some(self.law_density(&law)?),
            ModelSource::MonteCarlo(p) => Some(self.mc(&p)?.density.clone()),
            ModelSource::Infeasible => None,
        })
    }

    fn eval(&self, theta: &[f64]) -> Result<f64> {
        let obs = self.obs;
        let value = match (self.source(theta), self.cfg.divergence) {
            (ModelSource::Infeasible, _) => return Ok(f64::INFINITY),
            (ModelSource::Analytic(law), Divergence::L1Cdf) => {
                let table = LawCdf::new(law);
                l1_cdf(CdfRef::Step(&obs.ecdf), CdfRef::Smooth(&table))
            }
            (ModelSource::Analytic(law), d) => {
                let model = self.law_density(&law)?;
                density_divergence(d, &obs.density, &model, self.cfg.kl_floor)
            }
            (ModelSource::MonteCarlo(p), Divergence::L1Cdf) => {
                let mc = self.mc(&p)?;
                l1_cdf(CdfRef::Step(&obs.ecdf), CdfRef::Step(&mc.ecdf))
            }
            (ModelSource::MonteCarlo(p), d) => {
                let mc = self.mc(&p)?;
                density_divergence(d, &obs.density, &mc.density, self.cfg.kl_floor)
            }
        };
        Ok(if value.is_nan() { f64::INFINITY } else { value })
    }

    fn provenance(&self, theta: &[f64]) -> CurveProvenance {
        match self.source(theta) {
            ModelSource::Analytic(law) => CurveProvenance::Analytic {
                law: law.label(),
                smoothed: self.cfg.smooth_law && self.cfg.divergence.uses_density(),
            },
            _ => {
                let fs = self.cfg.family_seed(self.family);
                CurveProvenance::MonteCarlo {
                    replicates: self.cfg.mc_samples,
                    family_seed: fs.0,
                    replicate_seeds: (0..self.cfg.mc_samples as u64).map(|r| fs.derive(r).0).collect(),
                }
            }
        }
    }
}

fn density_divergence(d: Divergence, obs: &DensityCurve<f64>, model: &DensityCurve<f64>, floor: f64) -> f64 {
    match d {
        Divergence::KullbackLeibler => kl_divergence(obs, model, floor),
        _ => l1_density(obs, model),
    }
}

struct SearchOutcome {
    theta: Vec<f64>,
    value: f64,
    evaluations: usize,
    bracket: Option<(f64, f64)>,
    warnings: Vec<String>,
}

fn eval_points(obj: &Objective<'_>, points: &[Vec<f64>]) -> Result<Vec<f64>> {
    points.par_iter().map(|t| obj.eval(t)).collect()
}

fn golden_on(obj: &Objective<'_>, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64, (f64, f64), usize)> {
    let failure: Mutex<Option<Error>> = Mutex::new(None);
    let r = golden_section(
        |t| match obj.eval(&[t]) {
            Ok(v) => v,
            Err(e) => {
                failure.lock().expect("poisoned").get_or_insert(e);
                f64::INFINITY
            }
        },
        lo,
        hi,
        tol,
    );
    if let Some(e) = failure.into_inner().expect("poisoned") {
        return Err(e);
    }
    Ok((r.x, r.f, r.bracket, r.evaluations))
}

fn search(obj: &Objective<'_>, space: &SearchSpace) -> Result<SearchOutcome> {
    let no_feasible = || Error::InfeasibleSpace("no feasible parameter value in the search space".into());
    match space.mode {
        SearchMode::Grid => {
            let axes = space.axes();
            let points: Vec<Vec<f64>> = match axes.as_slice() {
                [a] => a.iter().map(|&x| vec![x]).collect(),
                [a, b] => a.iter().flat_map(|&x| b.iter().map(move |&y| vec![x, y])).collect(),
                _ => return Err(Error::InfeasibleSpace("at most two parameters are supported".into())),
            };
            let values = eval_points(obj, &points)?;
            let k = argmin_first(&values).ok_or_else(no_feasible)?;
            Ok(SearchOutcome {
                theta: points[k].clone(),
                value: values[k],
                evaluations: points.len(),
                bracket: None,
                warnings: Vec::new(),
            })
        }
        SearchMode::GoldenSection => {
            let (lo, hi) = space.bounds[0];
            let (x, f, bracket, evaluations) = golden_on(obj, lo, hi, obj.cfg.tolerance)?;
            if !f.is_finite() {
                return Err(no_feasible());
            }
            Ok(SearchOutcome { theta: vec![x], value: f, evaluations, bracket: Some(bracket), warnings: Vec::new() })
        }
        SearchMode::GridThenGolden => {
            let xs = space.axes().remove(0);
            let points: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
            let values = eval_points(obj, &points)?;
            let k = argmin_first(&values).ok_or_else(no_feasible)?;
            let mut warnings = Vec::new();
            let minima = separated_minima(&xs, &values, 5.0 * obj.cfg.tolerance);
            if minima.len() >= 2 {
                warnings.push(format!(
                    "NonUnimodalWarning: the pre-scan profile has {} separated local minima; golden section refined the lowest",
                    minima.len()
                ));
            }
            let lo = xs[k.saturating_sub(1)];
            let hi = xs[(k + 1).min(xs.len() - 1)];
            let mut out = SearchOutcome {
                theta: vec![xs[k]],
                value: values[k],
                evaluations: xs.len(),
                bracket: None,
                warnings,
            };
            if lo < hi {
                let (x, f, bracket, ev) = golden_on(obj, lo, hi, obj.cfg.tolerance)?;
                out.evaluations += ev;
                out.bracket = Some(bracket);
                if f <= out.value {
                    out.theta = vec![x];
                    out.value = f;
                }
            }
            Ok(out)
        }
    }
}

/// Estimates the parameter of `family` for `g` (one model, one divergence).
pub fn fit_parameter(g: &Graph, family: ModelFamily, space: &SearchSpace, cfg: &FitConfig) -> Result<FitReport> {
    cfg.validate()?;
    space.check_family(family)?;
    let observed = Observed::for_families(g, &[family], cfg)?;
    fit_observed(&observed, family, space, cfg, &McCache::new())
}

/// [`fit_parameter`] against precomputed observed curves and a shared
/// Monte-Carlo cache.
pub fn fit_observed(
    observed: &Observed,
    family: ModelFamily,
    space: &SearchSpace,
    cfg: &FitConfig,
    cache: &McCache,
) -> Result<FitReport> {
    space.check_family(family)?;
    let choice = cfg.scaling.for_family(family);
    let obs = observed
        .curve(choice)
        .ok_or_else(|| Error::InvalidParameter(format!("no observed curve under {choice:?} scaling")))?;
    let obj = Objective { family, obs, n: observed.summary.n, cfg, cache };
    let found = search(&obj, space)?;

    let mut warnings = found.warnings;
    if family == ModelFamily::Dr && observed.summary.regular_degree.is_none() {
        warnings.push("observed graph is not regular; it is compared with d-regular spectra".into());
    }
    let (mut ov, mut floored) = (None, None);
    if cfg.divergence.uses_density() {
        if let Some(model) = obj.model_density(&found.theta)? {
            let o = overlap(&obs.density, &model);
            if o < 0.5 {
                warnings.push(format!("DisjointSupport: observed and model densities share only {o:.3} of their mass"));
            }
            ov = Some(o);
            if cfg.divergence == Divergence::KullbackLeibler {
                floored = Some(kl_divergence_detail(&obs.density, &model, cfg.kl_floor).floored_fraction);
            }
        }
    }
    let theta = if family == ModelFamily::Dr { vec![found.theta[0].round()] } else { found.theta };
    Ok(FitReport {
        model: family,
        params: cfg.params_at(family, &theta, observed.summary.n),
        curve: obj.provenance(&theta),
        theta,
        divergence: cfg.divergence,
        value: found.value,
        scaling: choice.mode(),
        space: space.clone(),
        evaluations: found.evaluations,
        bracket: found.bracket,
        observed_bandwidth: obs.bandwidth,
        overlap: ov,
        kl_floored_fraction: floored,
        warnings,
        defaults: FitDefaults::of(cfg),
    })
}

/// Fits every candidate against the same observed curves and picks the
/// smallest divergence; ties go to the earlier candidate and set `tie`.
pub fn select_model(g: &Graph, candidates: &[Candidate], cfg: &FitConfig) -> Result<SelectionReport> {
    cfg.validate()?;
    if candidates.len() < 2 {
        return Err(Error::InvalidParameter("model selection needs at least two candidates".into()));
    }
    let families: Vec<ModelFamily> = candidates.iter().map(|c| c.family).collect();
    let observed = Observed::for_families(g, &families, cfg)?;
    select_observed(&observed, candidates, cfg, &McCache::new())
}

pub fn select_observed(
    observed: &Observed,
    candidates: &[Candidate],
    cfg: &FitConfig,
    cache: &McCache,
) -> Result<SelectionReport> {
    let results: Vec<Result<FitReport>> =
        candidates.par_iter().map(|c| fit_observed(observed, c.family, &c.space, cfg, cache)).collect();
    let mut outcomes = Vec::with_capacity(candidates.len());
    for (c, r) in candidates.iter().zip(results) {
        match r {
            Ok(rep) => outcomes.push(CandidateOutcome { family: c.family, report: Some(rep), error: None }),
            Err(e) => {
                log::warn!("candidate {} failed: {e}", c.family);
                outcomes.push(CandidateOutcome { family: c.family, report: None, error: Some(e.to_string()) })
            }
        }
    }
    let mut ranking: Vec<RankEntry> = outcomes
        .iter()
        .filter_map(|o| o.report.as_ref().map(|r| RankEntry { family: o.family, value: r.value }))
        .collect();
    ranking.sort_by(|a, b| a.value.total_cmp(&b.value));
    let winner = ranking.first().map(|r| r.family);
    let tie = ranking.len() >= 2 && ranking[1].value == ranking[0].value;

    let mut caveats = Vec::new();
    let mut scalings: Vec<ScalingChoice> = candidates.iter().map(|c| cfg.scaling.for_family(c.family)).collect();
    scalings.dedup();
    if scalings.len() > 1 {
        caveats.push(
            "candidates use different eigenvalue scalings (raw for DR, sqrt(n) otherwise); divergences are compared as plain objective values"
                .into(),
        );
    }
    if observed.summary.isolated > 0 {
        caveats.push(format!(
            "{} isolated vertices are kept and contribute zero eigenvalues",
            observed.summary.isolated
        ));
    }
    if outcomes.iter().any(|o| o.error.is_some()) {
        caveats.push("some candidates failed and are excluded from the ranking".into());
    }
    Ok(SelectionReport {
        graph: observed.summary.clone(),
        divergence: cfg.divergence,
        candidates: outcomes,
        ranking,
        winner,
        tie,
        caveats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{generate_er, generate_ws};

    fn quick_cfg(divergence: Divergence) -> FitConfig {
        FitConfig { divergence, mc_samples: 4, grid_points: 512, ..FitConfig::default() }
    }

    #[test]
    fn space_validation() {
        assert!(SearchSpace::grid(0.0, 1.0, 0.1).validate().is_ok());
        assert!(SearchSpace::grid(1.0, 1.0, 0.1).validate().is_err());
        assert!(SearchSpace::grid(0.0, 1.0, 0.0).validate().is_err());
        let two = SearchSpace { bounds: vec![(0.0, 1.0); 2], steps: vec![0.1; 2], mode: SearchMode::GoldenSection };
        assert!(two.validate().is_err());
        assert!(SearchSpace::grid(1.5, 5.0, 1.0).check_family(ModelFamily::Dr).is_err());
        assert!(SearchSpace::grid(0.0, 500.0, 1.0).check_family(ModelFamily::Dr).is_ok());
        assert!(SearchSpace::grid(0.0, 1.0, 0.1).check_family(ModelFamily::Bm).is_err());
    }

    #[test]
    fn analytic_er_fit_recovers_p() {
        let g = generate_er(400, 0.3, Seed(11));
        let cfg = quick_cfg(Divergence::L1Cdf);
        let r = fit_parameter(&g, ModelFamily::Er, &SearchSpace::default_for(ModelFamily::Er, 400, &cfg), &cfg).unwrap();
        assert!((r.theta[0] - 0.3).abs() < 0.05, "{:?}", r.theta);
        assert!(matches!(r.curve, CurveProvenance::Analytic { .. }));
        assert!(r.bracket.is_some());
    }

    #[test]
    fn finer_grids_never_do_worse() {
        let g = generate_ws(60, 4, 0.3, Seed(3));
        let cfg = quick_cfg(Divergence::L1Cdf);
        let cache = McCache::new();
        let obs = Observed::for_families(&g, &[ModelFamily::Ws], &cfg).unwrap();
        let coarse = fit_observed(&obs, ModelFamily::Ws, &SearchSpace::grid(0.0, 1.0, 0.1), &cfg, &cache).unwrap();
        let fine = fit_observed(&obs, ModelFamily::Ws, &SearchSpace::grid(0.0, 1.0, 0.05), &cfg, &cache).unwrap();
        assert!(fine.value <= coarse.value);
    }

    #[test]
    fn identical_candidates_tie_to_the_first() {
        let g = generate_er(80, 0.2, Seed(1));
        let cfg = quick_cfg(Divergence::L1Density);
        let c = Candidate { family: ModelFamily::Er, space: SearchSpace::grid_then_golden(0.0, 0.5, 0.05) };
        let rep = select_model(&g, &[c.clone(), c], &cfg).unwrap();
        assert!(rep.tie);
        assert_eq!(rep.winner, Some(ModelFamily::Er));
        assert_eq!(rep.ranking.len(), 2);
    }

    #[test]
    fn failing_candidates_are_flagged() {
        let g = generate_er(30, 0.2, Seed(1));
        let cfg = quick_cfg(Divergence::L1Cdf);
        let bad = Candidate { family: ModelFamily::Er, space: SearchSpace::grid(0.0, 1.0, 0.5).with_step(0.5) };
        let good = Candidate::default_for(ModelFamily::Er, 30, &cfg);
        let broken = Candidate { family: ModelFamily::Dr, space: SearchSpace::grid(0.0, 1.0, 0.5) };
        let rep = select_model(&g, &[bad, broken, good], &cfg).unwrap();
        assert!(rep.candidates[1].error.is_some());
        assert_eq!(rep.ranking.len(), 2);
        assert!(!rep.caveats.is_empty());
    }

    #[test]
    fn dr_fit_warns_on_irregular_graphs() {
        let g = generate_er(40, 0.2, Seed(2));
        let cfg = quick_cfg(Divergence::L1Cdf);
        let r = fit_parameter(&g, ModelFamily::Dr, &SearchSpace::grid(1.0, 10.0, 1.0), &cfg).unwrap();
        assert!(r.warnings.iter().any(|w| w.contains("not regular")));
        assert_eq!(r.theta[0].fract(), 0.0);
    }

    #[test]
    fn block_model_parameters_split_evenly() {
        let cfg = FitConfig { bm_blocks: 3, ..FitConfig::default() };
        match cfg.params_at(ModelFamily::Bm, &[0.1, 0.7], 10) {
            ModelParams::Bm(b) => {
                assert_eq!(b.block_sizes, vec![4, 3, 3]);
                assert_eq!(b.p_within, vec![0.7; 3]);
            }
            other => panic!("{other:?}"),
        }
    }
}
