//! Random-graph model fitting and selection from adjacency spectra.
//!
//! An observed graph is summarized by the distribution of its (scaled)
//! adjacency eigenvalues. Candidate models are compared against it through
//! closed-form limiting laws where they exist, a Stieltjes-transform solver
//! for block models, or Monte-Carlo averages of sampled spectra, and the
//! parameter (and model) minimizing an ℓ1 or Kullback-Leibler divergence is
//! reported.
//!
//! Numerical kernels are generic over [`Real`] (`f32` or `f64`); the
//! fitting layer works in `f64` through the aliases below.

pub mod error;
pub mod fitting;
pub mod generators;
pub mod graph;
pub mod laws;
pub mod linalg;
pub mod metrics;
pub mod numeric;
pub mod optimize;
pub mod scalar;
pub mod spectrum;

pub use error::{Error, Result};
pub use fitting::{fit_parameter, select_model, Candidate, FitConfig, FitReport, SearchMode, SearchSpace, SelectionReport};
pub use generators::{BlockParams, ModelFamily, ModelParams, OffBlock};
pub use graph::{load_edge_list, Graph, Seed};
pub use laws::{AnalyticLaw, BlockLaw};
pub use metrics::Divergence;
pub use scalar::Real;
pub use spectrum::{eigenvalues, ScalingMode};

pub type Spectrum64 = spectrum::Spectrum<f64>;
pub type Spectrum32 = spectrum::Spectrum<f32>;
pub type DensityCurve64 = spectrum::DensityCurve<f64>;
pub type DensityCurve32 = spectrum::DensityCurve<f32>;
pub type EmpiricalCdf64 = spectrum::EmpiricalCdf<f64>;
pub type Grid64 = spectrum::Grid<f64>;
