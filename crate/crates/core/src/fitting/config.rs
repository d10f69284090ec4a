//! Line-oriented experiment configuration.
//!
//! ```text
//! kind = confusion          # confusion | estimation | bm-scenario
//! n_list = 50, 100
//! reps = 50
//! divergence = kl, l1-density, l1-cdf
//! mc = 30
//! seed = 7
//! beta = 0.1                # the five standard models when no [model] is given
//!
//! [model]
//! family = bm
//! sizes = 300, 300, 300
//! p0 = 0.2
//! pin = 0.8, 0.5, 0.6
//! ```

use serde::Serialize;

use super::{Candidate, FitConfig, SearchMode, SearchSpace};
use crate::error::{Error, Result};
use crate::generators::{BlockParams, ModelFamily, ModelParams, OffBlock};
use crate::graph::Seed;
use crate::laws::DEFAULT_ETA;
use crate::metrics::Divergence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Confusion,
    Estimation,
    BmScenario,
}

/// A candidate family with an optional search space (default per size).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateSpec {
    pub family: ModelFamily,
    pub space: Option<SearchSpace>,
}

impl CandidateSpec {
    pub fn resolve(&self, n: usize, cfg: &FitConfig) -> Candidate {
        match &self.space {
            Some(s) => Candidate { family: self.family, space: s.clone() },
            None => Candidate::default_for(self.family, n, cfg),
        }
    }
}

/// One `[model]` block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSpec {
    pub params: ModelParams,
    pub space: Option<SearchSpace>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub n_list: Vec<usize>,
    pub reps: usize,
    pub divergences: Vec<Divergence>,
    pub fit: FitConfig,
    pub models: Vec<ModelSpec>,
    /// Candidate families for selection; defaults to the model families.
    pub candidates: Option<Vec<ModelFamily>>,
    pub beta: Option<f64>,
    pub eta: f64,
    pub jobs: Option<usize>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.models.is_empty() {
            return bad("no models configured (add [model] blocks or a beta level)");
        }
        if self.reps == 0 {
            return bad("reps must be at least 1");
        }
        if self.kind != ExperimentKind::BmScenario && (self.n_list.is_empty() || self.n_list.contains(&0)) {
            return bad("n_list needs at least one positive size");
        }
        if self.divergences.is_empty() {
            return bad("at least one divergence is required");
        }
        if !(self.eta > 0.0) {
            return bad("eta must be positive");
        }
        self.fit.validate().map_err(|e| Error::Config(e.to_string()))?;
        for m in &self.models {
            if let Some(s) = &m.space {
                s.validate()?;
            }
        }
        Ok(())
    }

    /// Candidates with the search space of the matching `[model]` block, if any.
    pub fn resolved_candidates(&self) -> Vec<CandidateSpec> {
        let mut families: Vec<ModelFamily> = match &self.candidates {
            Some(c) => c.clone(),
            None => self.models.iter().map(|m| m.params.family()).collect(),
        };
        let mut seen = Vec::new();
        families.retain(|f| {
            let fresh = !seen.contains(f);
            seen.push(*f);
            fresh
        });
        families
            .into_iter()
            .map(|family| CandidateSpec {
                family,
                space: self.models.iter().find(|m| m.params.family() == family).and_then(|m| m.space.clone()),
            })
            .collect()
    }
}

fn err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("line {line}: {msg}"))
}

fn num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| err(line, format!("{key}: cannot parse {v:?}")))
}

fn list<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| num(line, key, s)).collect()
}

fn parse_space(line: usize, v: &str) -> Result<Vec<(f64, f64)>> {
    v.split(',')
        .map(|part| {
            let (lo, hi) = part.split_once(':').ok_or_else(|| err(line, format!("space {part:?} is not lo:hi")))?;
            Ok((num(line, "space", lo)?, num(line, "space", hi)?))
        })
        .collect()
}

#[derive(Default)]
struct ModelBlock {
    line: usize,
    values: Vec<(usize, String, String)>,
}

impl ModelBlock {
    fn get(&self, keys: &[&str]) -> Option<(usize, &str)> {
        self.values.iter().rev().find(|(_, k, _)| keys.contains(&k.as_str())).map(|(l, _, v)| (*l, v.as_str()))
    }

    fn req<T: std::str::FromStr>(&self, keys: &[&str]) -> Result<T> {
        let (l, v) = self.get(keys).ok_or_else(|| err(self.line, format!("[model] needs {}", keys[0])))?;
        num(l, keys[0], v)
    }

    fn opt<T: std::str::FromStr>(&self, keys: &[&str], default: T) -> Result<T> {
        match self.get(keys) {
            Some((l, v)) => num(l, keys[0], v),
            None => Ok(default),
        }
    }

    fn build(&self, fit: &FitConfig) -> Result<ModelSpec> {
        const KNOWN: [&str; 16] = [
            "family", "p", "d", "r", "p_r", "pr", "k", "p_s", "ps", "m", "sizes", "p0", "p0_matrix", "pin", "space",
            "step",
        ];
        for (l, k, _) in &self.values {
            if !KNOWN.contains(&k.as_str()) && k != "search" {
                return Err(err(*l, format!("unknown model key {k:?}")));
            }
        }
        let (fl, fam) = self.get(&["family"]).ok_or_else(|| err(self.line, "[model] needs family"))?;
        let family = ModelFamily::parse(fam).map_err(|e| err(fl, e))?;
        let params = match family {
            ModelFamily::Er => ModelParams::Er { p: self.req(&["p"])? },
            ModelFamily::Dr => ModelParams::Dr { d: self.req(&["d"])? },
            ModelFamily::Grg => ModelParams::Grg { r: self.req(&["r"])? },
            ModelFamily::Ws => ModelParams::Ws { p_r: self.req(&["p_r", "pr"])?, k: self.opt(&["k"], fit.ws_k)? },
            ModelFamily::Ba => ModelParams::Ba { p_s: self.req(&["p_s", "ps"])?, m: self.opt(&["m"], fit.ba_m)? },
            ModelFamily::Bm => {
                let (sl, sizes) = self.get(&["sizes"]).ok_or_else(|| err(self.line, "block model needs sizes"))?;
                let (pl, pin) = self.get(&["pin"]).ok_or_else(|| err(self.line, "block model needs pin"))?;
                let off_block = match (self.get(&["p0"]), self.get(&["p0_matrix"])) {
                    (Some((l, v)), None) => OffBlock::Uniform(num(l, "p0", v)?),
                    (None, Some((l, v))) => {
                        OffBlock::Pairwise(v.split(';').map(|row| list(l, "p0_matrix", row)).collect::<Result<_>>()?)
                    }
                    _ => return Err(err(self.line, "block model needs exactly one of p0 and p0_matrix")),
                };
                let b = BlockParams {
                    block_sizes: list(sl, "sizes", sizes)?,
                    off_block,
                    p_within: list(pl, "pin", pin)?,
                };
                b.validate().map_err(|e| err(self.line, e))?;
                ModelParams::Bm(b)
            }
        };
        let space = match self.get(&["space"]) {
            None => {
                if self.get(&["step"]).is_some() || self.get(&["search"]).is_some() {
                    return Err(err(self.line, "step and search need a space"));
                }
                None
            }
            Some((l, v)) => {
                let bounds = parse_space(l, v)?;
                let step: f64 = self.opt(&["step"], if family == ModelFamily::Dr { 1.0 } else { 0.001 })?;
                let mode = match self.get(&["search"]) {
                    Some((l, v)) => SearchMode::parse(v).map_err(|e| err(l, e))?,
                    None => SearchMode::Grid,
                };
                let s = SearchSpace { steps: vec![step; bounds.len()], bounds, mode };
                s.validate().map_err(|e| err(l, e))?;
                Some(s)
            }
        };
        Ok(ModelSpec { params, space })
    }
}

/// Parses an experiment configuration. Unknown keys are errors.
pub fn parse_experiment(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig {
        kind: ExperimentKind::Confusion,
        n_list: vec![100],
        reps: 10,
        divergences: Divergence::ALL.to_vec(),
        fit: FitConfig::default(),
        models: Vec::new(),
        candidates: None,
        beta: None,
        eta: DEFAULT_ETA,
        jobs: None,
    };
    let mut blocks: Vec<ModelBlock> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if content.eq_ignore_ascii_case("[model]") {
            blocks.push(ModelBlock { line, values: Vec::new() });
            continue;
        }
        if content.starts_with('[') {
            return Err(err(line, format!("unknown section {content}")));
        }
        let (key, value) = content.split_once('=').ok_or_else(|| err(line, "expected key = value"))?;
        let (key, value) = (key.trim().to_ascii_lowercase(), value.trim());
        if let Some(b) = blocks.last_mut() {
            b.values.push((line, key, value.to_string()));
            continue;
        }
        match key.as_str() {
            "kind" => {
                cfg.kind = match value.to_ascii_lowercase().as_str() {
                    "confusion" => ExperimentKind::Confusion,
                    "estimation" => ExperimentKind::Estimation,
                    "bm-scenario" | "scenario" => ExperimentKind::BmScenario,
                    other => return Err(err(line, format!("unknown kind {other:?}"))),
                }
            }
            "n_list" | "n" => cfg.n_list = list(line, &key, value)?,
            "reps" => cfg.reps = num(line, &key, value)?,
            "divergence" | "divergences" => {
                cfg.divergences =
                    value.split(',').map(|s| Divergence::parse(s).map_err(|e| err(line, e))).collect::<Result<_>>()?
            }
            "mc" | "mc_samples" => cfg.fit.mc_samples = num(line, &key, value)?,
            "seed" => cfg.fit.seed = Seed(num(line, &key, value)?),
            "jobs" => cfg.jobs = Some(num(line, &key, value)?),
            "candidates" => {
                cfg.candidates = Some(
                    value.split(',').map(|s| ModelFamily::parse(s).map_err(|e| err(line, e))).collect::<Result<_>>()?,
                )
            }
            "eta" => cfg.eta = num(line, &key, value)?,
            "grid_points" => cfg.fit.grid_points = num(line, &key, value)?,
            "analytic" => cfg.fit.use_analytic_law = num(line, &key, value)?,
            "smooth_law" => cfg.fit.smooth_law = num(line, &key, value)?,
            "tolerance" => cfg.fit.tolerance = num(line, &key, value)?,
            "ws_k" => cfg.fit.ws_k = num(line, &key, value)?,
            "ba_m" => cfg.fit.ba_m = num(line, &key, value)?,
            "bm_blocks" => cfg.fit.bm_blocks = num(line, &key, value)?,
            "beta" => cfg.beta = Some(num(line, &key, value)?),
            other => return Err(err(line, format!("unknown key {other:?}"))),
        }
    }
    for b in &blocks {
        cfg.models.push(b.build(&cfg.fit)?);
    }
    if cfg.models.is_empty() {
        if let Some(beta) = cfg.beta {
            cfg.models = super::experiment::beta_models(beta, &cfg.fit)
                .into_iter()
                .map(|params| ModelSpec { params, space: None })
                .collect();
        }
    }
    cfg.validate()?;
    Ok(cfg)
}
