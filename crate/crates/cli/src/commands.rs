use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use graphspec::fitting::{self, CandidateSpec, FitConfig, SearchMode, SearchSpace};
use graphspec::generators::{generate, BlockParams, ModelFamily, ModelParams, OffBlock};
use graphspec::graph::{load_edge_list_with, EdgeListOptions, Graph, Seed};
use graphspec::laws::{bm_density, bm_zeta, AnalyticLaw, LawCdf, SolverOptions};
use graphspec::metrics::Divergence;
use graphspec::spectrum::{
    eigenvalues, kernel_density_of, silverman_bandwidth, Grid, ScalingMode, GRID_MARGIN_SIGMAS,
};
use serde_json::{json, Value};

use crate::args::*;

/// Invalid flag combination detected after parsing.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(UsageError(msg.into()).into())
}

fn family(f: Family) -> ModelFamily {
    match f {
        Family::Er => ModelFamily::Er,
        Family::Dr => ModelFamily::Dr,
        Family::Grg => ModelFamily::Grg,
        Family::Ws => ModelFamily::Ws,
        Family::Ba => ModelFamily::Ba,
        Family::Bm => ModelFamily::Bm,
    }
}

fn need<T: Copy>(v: Option<T>, flag: &str, what: &str) -> Result<T> {
    match v {
        Some(x) => Ok(x),
        None => usage(format!("{what} needs --{flag}")),
    }
}

fn block_params(f: &ModelFlags) -> Result<BlockParams> {
    if f.sizes.is_empty() || f.pin.is_empty() {
        return usage("block model needs --sizes and --pin");
    }
    let off_block = match (f.p0, &f.p0_matrix) {
        (Some(p), None) => OffBlock::Uniform(p),
        (None, Some(m)) => {
            let rows: std::result::Result<Vec<Vec<f64>>, _> = m
                .split(';')
                .map(|row| row.split(',').map(|v| v.trim().parse::<f64>()).collect())
                .collect();
            OffBlock::Pairwise(rows.map_err(|_| UsageError(format!("cannot parse --p0-matrix {m:?}")))?)
        }
        _ => return usage("block model needs exactly one of --p0 and --p0-matrix"),
    };
    let b = BlockParams { block_sizes: f.sizes.clone(), off_block, p_within: f.pin.clone() };
    b.validate()?;
    Ok(b)
}

fn model_params(fam: Family, f: &ModelFlags) -> Result<ModelParams> {
    Ok(match fam {
        Family::Er => ModelParams::Er { p: need(f.p, "p", "ER")? },
        Family::Dr => ModelParams::Dr { d: need(f.d, "d", "DR")? },
        Family::Grg => ModelParams::Grg { r: need(f.r, "r", "GRG")? },
        Family::Ws => ModelParams::Ws {
            p_r: need(f.p_r, "pr", "WS")?,
            k: f.k.unwrap_or(graphspec::generators::DEFAULT_WS_K),
        },
        Family::Ba => ModelParams::Ba {
            p_s: need(f.p_s, "ps", "BA")?,
            m: f.m.unwrap_or(graphspec::generators::DEFAULT_BA_M),
        },
        Family::Bm => ModelParams::Bm(block_params(f)?),
    })
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn read_graph(path: &Path, one_based: bool) -> Result<Graph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let loaded = load_edge_list_with(&text, EdgeListOptions { one_based })
        .with_context(|| format!("parsing {}", path.display()))?;
    if loaded.duplicates + loaded.self_loops > 0 {
        log::warn!("dropped {} duplicate edges and {} self-loops", loaded.duplicates, loaded.self_loops);
    }
    Ok(loaded.graph)
}

/// Report wrapper recording the tool version and the resolved invocation.
fn envelope(command: &str, config: Value, report: Value) -> String {
    let v = json!({
        "tool": "graphspec",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config,
        "report": report,
    });
    serde_json::to_string_pretty(&v).expect("report serializes") + "\n"
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::Law(a) => cmd_law(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Select(a) => cmd_select(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::BmDensity(a) => cmd_bm_density(a),
    }
}

fn cmd_generate(a: GenerateArgs) -> Result<()> {
    let params = model_params(a.model, &a.params)?;
    let n = match (&params, a.n) {
        (ModelParams::Bm(b), None) => b.n(),
        (_, Some(n)) => n,
        (_, None) => return usage("generate needs --n"),
    };
    let g = generate(&params, n, Seed(a.seed))?;
    let mut text = format!("# model: {}\n# seed: {}\n", serde_json::to_string(&params)?, a.seed);
    text.push_str(&format!("n={}\n", g.n()));
    text.push_str(&g.to_edge_list());
    write_out(a.out.as_deref(), &text)?;
    eprintln!("|V| = {}, |E| = {}, seed = {}", g.n(), g.edge_count(), a.seed);
    Ok(())
}

fn scaling_mode(a: &SpectrumArgs, g: &Graph) -> Result<ScalingMode> {
    let flag = if a.raw { ScalingFlag::Raw } else { a.scaling };
    let mode = match flag {
        ScalingFlag::SqrtN => ScalingMode::SqrtN,
        ScalingFlag::Raw => ScalingMode::Raw,
        ScalingFlag::ErVariance => ScalingMode::ErVariance { p: need(a.params.p, "p", "er-variance scaling")? },
        ScalingFlag::DrScaled => ScalingMode::DrScaled { d: need(a.params.d, "d", "dr-scaled scaling")? },
        ScalingFlag::DrCentered => ScalingMode::DrCentered { d: need(a.params.d, "d", "dr-centered scaling")? },
        ScalingFlag::BmCentered => ScalingMode::BmCentered { block: block_params(&a.params)? },
        ScalingFlag::BmUncentered => {
            let p_star = match a.p_star {
                Some(p) => p,
                None => graphspec::spectrum::block_p_star(&block_params(&a.params)?),
            };
            ScalingMode::BmUncentered { p_star }
        }
    };
    mode.validate()?;
    if let ScalingMode::BmCentered { block } = &mode {
        if block.n() != g.n() {
            return usage(format!("block sizes sum to {} but the graph has {} vertices", block.n(), g.n()));
        }
    }
    Ok(mode)
}

fn cmd_spectrum(a: SpectrumArgs) -> Result<()> {
    let g = read_graph(&a.input, a.one_based)?;
    let mode = scaling_mode(&a, &g)?;
    let sigma_flag: Option<f64> = match a.sigma.as_str() {
        "auto" => None,
        s => match s.parse::<f64>() {
            Ok(v) if v > 0.0 => Some(v),
            _ => return usage(format!("--sigma must be `auto` or a positive number, got {s:?}")),
        },
    };
    let s = eigenvalues::<f64>(&g, &mode)?;
    let mut meta = vec![("scaling", mode.label()), ("vertices", g.n().to_string())];
    let text = if a.cdf {
        s.ecdf().to_csv(&meta)
    } else {
        let sigma = match sigma_flag {
            Some(v) => v,
            None => silverman_bandwidth(s.values())?,
        };
        let grid = Grid::covering(s.min(), s.max(), GRID_MARGIN_SIGMAS * sigma, a.grid_points);
        meta.push(("bandwidth_rule", if sigma_flag.is_some() { "fixed".into() } else { "silverman".into() }));
        meta.push(("grid", format!("[{}, {}] x {}", grid.lo, grid.hi, grid.points)));
        kernel_density_of(s.values(), sigma, grid)?.to_csv(&meta)
    };
    write_out(a.out.as_deref(), &text)
}

fn cmd_law(a: LawArgs) -> Result<()> {
    let law = match a.law {
        LawKind::Semicircle => AnalyticLaw::SemicircleUnit,
        LawKind::SemicircleP => AnalyticLaw::semicircle_p(need(a.p, "p", "semicircle-p")?)?,
        LawKind::KestenMckay => AnalyticLaw::kesten_mckay(need(a.d, "d", "kesten-mckay")?)?,
        LawKind::KestenMckayScaled => AnalyticLaw::kesten_mckay_scaled(need(a.d, "d", "kesten-mckay-scaled")?)?,
    };
    let (lo, hi) = law.support();
    let meta = vec![("law", law.label())];
    let text = if a.cdf {
        let table = LawCdf::new(law);
        let grid = Grid::new(lo, hi, a.grid_points)?;
        let mut out = String::new();
        for (k, v) in meta.iter() {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        out.push_str("x,value\n");
        for x in grid.xs() {
            out.push_str(&format!("{:e},{:e}\n", x, table.eval(x)));
        }
        out
    } else if let Some(sigma) = a.sigma {
        let grid = Grid::covering(lo, hi, GRID_MARGIN_SIGMAS * sigma, a.grid_points);
        law.smoothed_curve(sigma, grid)?.to_csv(&meta)
    } else {
        law.curve(Grid::new(lo, hi, a.grid_points)?).to_csv(&meta)
    };
    write_out(a.out.as_deref(), &text)
}

fn fit_config(f: &FitFlags) -> Result<FitConfig> {
    let cfg = FitConfig {
        divergence: Divergence::parse(&f.divergence)?,
        mc_samples: f.mc,
        seed: Seed(f.seed),
        tolerance: f.tolerance,
        use_analytic_law: !f.no_analytic,
        smooth_law: !f.no_smooth_law,
        grid_points: f.grid_points,
        ws_k: f.ws_k,
        ba_m: f.ba_m,
        bm_blocks: f.bm_blocks,
        ..FitConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn parse_space(text: &str) -> Result<Vec<(f64, f64)>> {
    text.split(',')
        .map(|part| {
            let parsed = part.split_once(':').and_then(|(lo, hi)| Some((lo.trim().parse().ok()?, hi.trim().parse().ok()?)));
            match parsed {
                Some(b) => Ok(b),
                None => usage(format!("--space expects lo:hi, got {part:?}")),
            }
        })
        .collect()
}

fn cmd_fit(a: FitArgs) -> Result<()> {
    let cfg = fit_config(&a.fit)?;
    let fam = family(a.model);
    let g = read_graph(&a.input, a.fit.one_based)?;
    let mut space = SearchSpace::default_for(fam, g.n(), &cfg);
    if let Some(text) = &a.space {
        let bounds = parse_space(text)?;
        // a custom ER interval keeps the pre-scan plus golden refinement
        let mode = if space.mode == SearchMode::GridThenGolden && bounds.len() == 1 {
            SearchMode::GridThenGolden
        } else {
            SearchMode::Grid
        };
        space = SearchSpace { steps: vec![space.steps[0]; bounds.len()], bounds, mode };
    }
    if let Some(step) = a.step {
        space = space.with_step(step);
    }
    if let Some(s) = a.search {
        space.mode = match s {
            SearchFlag::Grid => SearchMode::Grid,
            SearchFlag::Golden => SearchMode::GoldenSection,
            SearchFlag::GridGolden => SearchMode::GridThenGolden,
        };
    }
    let report = fitting::fit_parameter(&g, fam, &space, &cfg)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    let config = json!({ "input": a.input, "model": fam, "space": space, "fit": cfg });
    write_out(a.out.as_deref(), &envelope("fit", config, serde_json::to_value(&report)?))
}

fn cmd_select(a: SelectArgs) -> Result<()> {
    let cfg = fit_config(&a.fit)?;
    if a.candidates.len() < 2 {
        return usage("select needs at least two candidates");
    }
    let g = read_graph(&a.input, a.fit.one_based)?;
    let candidates: Vec<fitting::Candidate> = a
        .candidates
        .iter()
        .map(|&f| {
            let mut c = fitting::Candidate::default_for(family(f), g.n(), &cfg);
            if let (Some(factor), false) = (a.grid_step, c.family == ModelFamily::Dr) {
                c.space = c.space.clone().with_step(c.space.steps[0] * factor);
            }
            c
        })
        .collect();
    let report = fitting::select_model(&g, &candidates, &cfg)?;
    let mut table = format!("{:<6} {:>14}\n", "model", cfg.divergence.name());
    for r in &report.ranking {
        table.push_str(&format!("{:<6} {:>14.6}\n", r.family.to_string(), r.value));
    }
    for c in report.candidates.iter().filter(|c| c.error.is_some()) {
        table.push_str(&format!("{:<6} {:>14}  ({})\n", c.family.to_string(), "failed", c.error.as_deref().unwrap_or("")));
    }
    if report.tie {
        table.push_str("tie: the first listed candidate wins\n");
    }
    eprint!("{table}");
    let config = json!({ "input": a.input, "candidates": candidates, "fit": cfg });
    write_out(a.out.as_deref(), &envelope("select", config, serde_json::to_value(&report)?))
}

fn cmd_experiment(a: ExperimentArgs) -> Result<()> {
    let text = fs::read_to_string(&a.config).with_context(|| format!("reading {}", a.config.display()))?;
    let cfg = fitting::parse_experiment(&text)?;
    if let Some(jobs) = cfg.jobs {
        log::info!("config requests {jobs} jobs; the --jobs flag sizes the pool");
    }
    let output = fitting::run_experiment(&cfg)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut written: Vec<PathBuf> = Vec::new();
    for (name, contents) in output.csv_files() {
        let p = a.out.join(name);
        fs::write(&p, contents).with_context(|| format!("writing {}", p.display()))?;
        written.push(p);
    }
    let report_path = a.out.join("report.json");
    let config = json!({ "file": a.config, "resolved": cfg, "candidates": cfg.resolved_candidates().iter().map(|c: &CandidateSpec| c.family).collect::<Vec<_>>() });
    fs::write(&report_path, envelope("experiment", config, serde_json::to_value(&output)?))?;
    written.push(report_path);
    if let fitting::ExperimentOutput::Confusion(r) = &output {
        for m in &r.matrices {
            eprintln!("n={} {}: {}/{} correct", m.n, m.divergence.name(), m.hits(), m.total());
        }
    }
    for p in written {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn cmd_bm_density(a: BmDensityArgs) -> Result<()> {
    let b = block_params(&a.params)?;
    if !(a.eta > 0.0) {
        return usage("--eta must be positive");
    }
    let law = bm_zeta(&b)?;
    if !law.canonical {
        log::warn!("unequal blocks or pairwise off-block probabilities lie outside the classical limit theorem");
    }
    let half = a.half_width.unwrap_or(1.1 * law.edge_bound());
    let points = match (a.grid_points, a.grid_step) {
        (Some(p), _) => p,
        (None, step) => {
            let step = step.unwrap_or(a.eta / 2.0);
            if !(step > 0.0) {
                return usage("--grid-step must be positive");
            }
            ((2.0 * half / step).ceil() as usize + 1).max(2)
        }
    };
    let grid = Grid::new(-half, half, points)?;
    let d = bm_density(&law, grid, a.eta, SolverOptions::default())?;
    let meta = vec![
        ("eta", a.eta.to_string()),
        ("raw_mass", d.raw_mass.to_string()),
        ("canonical", law.canonical.to_string()),
        ("max_iterations", d.max_iterations.to_string()),
    ];
    write_out(a.out.as_deref(), &d.curve.to_csv(&meta))
}
