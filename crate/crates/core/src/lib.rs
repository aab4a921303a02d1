#![allow(clippy::neg_cmp_op_on_partial_ord)] // !(x > 0.0) deliberately rejects NaN

//! Premiums of aggregate (collective) insurance risks.
//!
//! The library evaluates law-invariant risk functionals on exact n-fold
//! lattice convolutions and on estimated normal approximations, exposes the
//! asymptotic confidence intervals shared by both estimators, and provides
//! distance and rate diagnostics together with a reproducible Monte-Carlo
//! study harness. Everything is pure computation; file I/O belongs to the
//! command-line front end.

pub mod convolve;
pub mod diagnostics;
pub mod error;
mod kahan;
pub mod lattice;
pub mod normal;
pub mod risk;
pub mod estimate;
pub mod study;

pub use convolve::{compound_binomial, convolve_direct, convolve_n, ConvolutionResult};
pub use diagnostics::{
    berry_esseen_factor, convergence_curve, nonuniform_kolmogorov, rate_regression, RateReport,
};
pub use error::{Error, Result};
pub use estimate::{
    confidence_interval, normal_approx_premium, plugin_premium, sample_moments, EstimatorMethod,
    PremiumReport,
};
pub use lattice::{
    abs_central_moment, cdf, discretize_mixture, empirical_measure, from_pmf, mean,
    quantile_left, standardize, variance, ClaimSample, LatticeDistribution, MixtureSpec,
};
pub use normal::{
    risk_of_std_normal, std_normal_cdf, std_normal_pdf, std_normal_quantile, std_normal_sf,
    EvaluationMethod, NormalRiskConstant,
};
pub use risk::{
    evaluate, holder_exponent_probe, induced_distortion, induced_distortion_probe_grid,
    DistortionFunction, RiskMeasureSpec,
};
pub use study::{
    coverage_study, exact_reference_premium, fig1_panel, fig2_curve, mc_reference_premium,
    mz_check, path_rng, sample_mixture, CoverageRow, ExperimentConfig, Fig1Panel, Fig2Row, MzRow,
    PathEstimates, ReferenceMode,
};
