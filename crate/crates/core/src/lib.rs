//! Evidential analysis of normal linear fixed-effects models.
//!
//! The crate fits nested model pairs, maps the comparison F statistic to the
//! Delta-SIC evidence scale, designs evidence thresholds and sample sizes
//! from misleading-evidence budgets via noncentral-F numerics, and
//! quantifies post-data uncertainty analytically and by bootstrap.
//!
//! Modules:
//! - [`ncf`]: noncentral F density, distribution, quantile, mean, sampling.
//! - [`linear_model`]: least-squares fits, nested comparisons, noncentrality,
//!   and multivariate-normal KL divergences.
//! - [`evidence`]: threshold design, classification, error tables,
//!   sample-size search, post-data probabilities and critical effect sizes.
//! - [`bootstrap`]: parametric / residual / stratified bootstraps of the
//!   evidence function and the cell-size simulation study.

pub mod bootstrap;
pub mod error;
pub mod evidence;
pub mod linear_model;
pub mod ncf;
pub mod rng;
pub mod special;

pub use error::{Error, Result};

pub use bootstrap::{
    parametric_bootstrap, residual_bootstrap, sample_size_curve, stratified_bootstrap, summarize,
    BootstrapMethod, BootstrapResult, BootstrapSummary, CellLayout, SampleSizeRow,
};
pub use evidence::{
    classify, critical_delta, delta_k_hat, delta_sic_from_f, design_thresholds, f_from_delta_sic,
    misleading_probs, post_data_p, sample_size, trichotomy_probs, EffectSpec, ErrorTable,
    EvidenceDesign, EvidenceVerdict, FavoredModel, ThresholdSide,
};
pub use linear_model::{
    build_two_way_design, compare, fit, kl_mvn, kl_nested, noncentrality, ComparisonResult,
    ComparisonSpec, DesignMatrix, FitResult, MvnModel, ResponseVector,
};
pub use ncf::NcfParams;
