//! Seeded Monte-Carlo study harness: mixture sampling, the figure-style
//! estimator-vs-reference curves, confidence-interval coverage, and the
//! almost-sure rate check along a single nested sample path.
//!
//! All functions here are deterministic given the configuration: one
//! counter-based generator substream per Monte-Carlo path (stream id = path
//! index), and all reductions run in path order regardless of thread count.
//! No function in this module touches the filesystem.

use std::path::PathBuf;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::convolve::convolve_n;
use crate::error::{Error, Result};
use crate::estimate::{normal_approx_premium, plugin_premium, PremiumReport};
use crate::lattice::{self, discretize_mixture, ClaimSample, MixtureSpec};
use crate::normal::std_normal_pdf;
use crate::risk::{evaluate, RiskMeasureSpec};

/// Stream ids at or above this offset are reserved for the optional
/// Monte-Carlo reference mode, keeping them disjoint from path streams.
const REFERENCE_STREAM_BASE: u64 = 1 << 32;

/// How the reference premium is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceMode {
    /// Exact recursion on the discretized mixture (no Monte-Carlo noise).
    Exact,
    /// Empirical functional over `mc_paths_reference` simulated aggregate
    /// claims, as in the original study.
    MonteCarlo,
}

/// Full experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub mixture: MixtureSpec,
    pub measure: RiskMeasureSpec,
    pub n_grid: Vec<u32>,
    pub mc_paths: u32,
    /// Paths for the optional Monte-Carlo reference mode.
    pub mc_paths_reference: u32,
    /// Sample-size coupling `u_n = ceil(c * n)`.
    pub ratio_c: f64,
    pub seed: u64,
    pub ci_level: f64,
    pub reference: ReferenceMode,
    pub trunc_eps: f64,
    pub tail_eps: f64,
    /// Destination directory; carried for the caller, never used here.
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() {
            return Err(Error::DomainError("n grid must be nonempty".into()));
        }
        for w in self.n_grid.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::DomainError(format!(
                    "n grid must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if self.n_grid[0] == 0 {
            return Err(Error::DomainError("collective sizes must be positive".into()));
        }
        if self.mc_paths == 0 {
            return Err(Error::DomainError("mc_paths must be at least 1".into()));
        }
        if !(self.ratio_c > 0.0) {
            return Err(Error::DomainError(format!("ratio_c must be positive, got {}", self.ratio_c)));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(Error::DomainError(format!(
                "ci level must lie in (0,1), got {}",
                self.ci_level
            )));
        }
        self.measure.validate()
    }

    pub fn u_of(&self, n: u32) -> u32 {
        ((self.ratio_c * n as f64).ceil() as u32).max(1)
    }
}

/// Seeded generator for one Monte-Carlo path: same seed for every path,
/// one independent substream per path index.
pub fn path_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draw one claim from the discretized mixture: zero with probability 1-p,
/// otherwise the Pareto inverse transform rounded up to the next grid point
/// (the same upper-cell rule the lattice discretization uses).
fn draw_claim(spec: &MixtureSpec, rng: &mut impl Rng) -> f64 {
    let toss: f64 = rng.random();
    if toss >= spec.p {
        return 0.0;
    }
    let v: f64 = rng.sample(rand::distr::Open01);
    let x = spec.b * (v.powf(-1.0 / spec.a) - 1.0);
    let k = (x / spec.step - 1e-12).ceil().max(1.0);
    k * spec.step
}

/// Draw `count` claims from the mixture as a grid-valued sample.
pub fn sample_mixture(
    spec: &MixtureSpec,
    count: u32,
    rng: &mut impl Rng,
) -> Result<ClaimSample> {
    if count == 0 {
        return Err(Error::DomainError("sample size must be at least 1".into()));
    }
    let values = (0..count).map(|_| draw_claim(spec, rng)).collect();
    ClaimSample::new(values, spec.step)
}

/// Exact reference premium `R_rho(mu^{*n}) / n` for the discretized mixture.
pub fn exact_reference_premium(config: &ExperimentConfig, n: u32) -> Result<f64> {
    let claim = discretize_mixture(&config.mixture, config.tail_eps)?;
    let aggregate = convolve_n(&claim, n, config.trunc_eps)?;
    Ok(evaluate(&config.measure, &aggregate.dist)? / n as f64)
}

/// Monte-Carlo reference: evaluate the measure on the empirical law of
/// `mc_paths_reference` simulated aggregate claims.
pub fn mc_reference_premium(config: &ExperimentConfig, n: u32, runs: u32) -> Result<f64> {
    if runs == 0 {
        return Err(Error::DomainError("reference runs must be at least 1".into()));
    }
    let mut rng = path_rng(config.seed, REFERENCE_STREAM_BASE + n as u64);
    let sums: Vec<f64> = (0..runs)
        .map(|_| (0..n).map(|_| draw_claim(&config.mixture, &mut rng)).sum())
        .collect();
    let sample = ClaimSample::new(sums, config.mixture.step)?;
    let law = lattice::empirical_measure(&sample);
    Ok(evaluate(&config.measure, &law)? / n as f64)
}

fn reference_premium(config: &ExperimentConfig, n: u32) -> Result<f64> {
    match config.reference {
        ReferenceMode::Exact => exact_reference_premium(config, n),
        ReferenceMode::MonteCarlo => mc_reference_premium(config, n, config.mc_paths_reference),
    }
}

/// One path's pair of estimates at a given n, computed from the same sample.
#[derive(Debug, Clone)]
pub struct PathEstimates {
    pub normal: PremiumReport,
    pub plugin: PremiumReport,
}

fn path_estimates(
    config: &ExperimentConfig,
    rng: &mut ChaCha8Rng,
    n: u32,
) -> Result<PathEstimates> {
    let sample = sample_mixture(&config.mixture, config.u_of(n), rng)?;
    let normal = normal_approx_premium(&sample, n, &config.measure)?;
    let plugin = plugin_premium(&sample, n, &config.measure, config.trunc_eps)?;
    Ok(PathEstimates { normal, plugin })
}

/// Run every path through the whole n grid in order; path index = stream id.
/// Paths execute in parallel; results come back indexed so the reduction
/// order never depends on scheduling.
fn all_path_estimates(config: &ExperimentConfig) -> Result<Vec<Vec<PathEstimates>>> {
    (0..config.mc_paths as u64)
        .into_par_iter()
        .map(|stream| {
            let mut rng = path_rng(config.seed, stream);
            config
                .n_grid
                .iter()
                .map(|&n| path_estimates(config, &mut rng, n))
                .collect::<Result<Vec<_>>>()
        })
        .collect()
}

/// One panel of the aggregate-law figure: the exact n-fold convolution of
/// the discretized mixture next to the moment-matched normal density.
#[derive(Debug, Clone)]
pub struct Fig1Panel {
    pub a: f64,
    pub b: f64,
    pub n: u32,
    /// `(x, exact pmf, normal density)` rows on the aggregate grid.
    pub rows: Vec<(f64, f64, f64)>,
}

/// Exact aggregate PMF together with the density of `N(n m, n s^2)` sampled
/// on the same grid, where `m` and `s^2` are the discretized claim moments.
pub fn fig1_panel(
    mixture: &MixtureSpec,
    n: u32,
    tail_eps: f64,
    trunc_eps: f64,
) -> Result<Fig1Panel> {
    let claim = discretize_mixture(mixture, tail_eps)?;
    let (m, s2) = (lattice::mean(&claim), lattice::variance(&claim));
    let aggregate = convolve_n(&claim, n, trunc_eps)?;
    let sd = (n as f64 * s2).sqrt();
    let center = n as f64 * m;
    let rows = aggregate
        .dist
        .support()
        .map(|(x, q)| (x, q, std_normal_pdf((x - center) / sd) / sd))
        .collect();
    Ok(Fig1Panel { a: mixture.a, b: mixture.b, n, rows })
}

/// One n of the estimator-comparison curve.
#[derive(Debug, Clone)]
pub struct Fig2Row {
    pub n: u32,
    pub reference: f64,
    pub normal_avg: f64,
    pub plugin_avg: f64,
    pub normal_bias: f64,
    pub plugin_bias: f64,
    /// Mean absolute errors against the reference (not emitted in the CSV,
    /// used by the rate studies).
    pub normal_mae: f64,
    pub plugin_mae: f64,
}

/// Average both estimators over the Monte-Carlo paths against the reference.
pub fn fig2_curve(config: &ExperimentConfig) -> Result<Vec<Fig2Row>> {
    config.validate()?;
    let per_path = all_path_estimates(config)?;
    let paths = config.mc_paths as f64;
    config
        .n_grid
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let reference = reference_premium(config, n)?;
            let mut normal_sum = 0.0;
            let mut plugin_sum = 0.0;
            let mut normal_abs = 0.0;
            let mut plugin_abs = 0.0;
            for path in &per_path {
                let est = &path[i];
                normal_sum += est.normal.premium_per_risk;
                plugin_sum += est.plugin.premium_per_risk;
                normal_abs += (est.normal.premium_per_risk - reference).abs();
                plugin_abs += (est.plugin.premium_per_risk - reference).abs();
            }
            Ok(Fig2Row {
                n,
                reference,
                normal_avg: normal_sum / paths,
                plugin_avg: plugin_sum / paths,
                normal_bias: normal_sum / paths - reference,
                plugin_bias: plugin_sum / paths - reference,
                normal_mae: normal_abs / paths,
                plugin_mae: plugin_abs / paths,
            })
        })
        .collect()
}

/// Empirical coverage of the asymptotic confidence interval.
#[derive(Debug, Clone)]
pub struct CoverageRow {
    pub n: u32,
    pub method: &'static str,
    pub coverage: f64,
}

/// Fraction of paths whose interval contains the exact reference premium,
/// for both estimators.
pub fn coverage_study(config: &ExperimentConfig) -> Result<Vec<CoverageRow>> {
    config.validate()?;
    let per_path = all_path_estimates(config)?;
    let paths = config.mc_paths as f64;
    let mut rows = Vec::with_capacity(2 * config.n_grid.len());
    for (i, &n) in config.n_grid.iter().enumerate() {
        let reference = reference_premium(config, n)?;
        let mut hits_normal = 0u32;
        let mut hits_plugin = 0u32;
        for path in &per_path {
            let est = &path[i];
            let (lo, hi) =
                crate::estimate::confidence_interval(&est.normal, config.ci_level)?;
            if (lo..=hi).contains(&reference) {
                hits_normal += 1;
            }
            let (lo, hi) =
                crate::estimate::confidence_interval(&est.plugin, config.ci_level)?;
            if (lo..=hi).contains(&reference) {
                hits_plugin += 1;
            }
        }
        rows.push(CoverageRow { n, method: "normal", coverage: hits_normal as f64 / paths });
        rows.push(CoverageRow { n, method: "plugin", coverage: hits_plugin as f64 / paths });
    }
    Ok(rows)
}

/// One n of the Marcinkiewicz-Zygmund-style single-path check.
#[derive(Debug, Clone)]
pub struct MzRow {
    pub n: u32,
    /// `n^r * |normal-approximation premium - reference|`.
    pub normal_scaled_err: f64,
    /// `n^r * |plug-in premium - reference|`.
    pub plugin_scaled_err: f64,
}

/// Scaled errors `n^r |premium - reference|` along ONE seeded path with the
/// nested-sample prefix property: the sample for each n is the first
/// `u_n` draws of a single long stream.
pub fn mz_check(config: &ExperimentConfig, r: f64) -> Result<Vec<MzRow>> {
    config.validate()?;
    let max_u = config.u_of(*config.n_grid.last().expect("grid nonempty"));
    let mut rng = path_rng(config.seed, 0);
    let draws: Vec<f64> =
        (0..max_u).map(|_| draw_claim(&config.mixture, &mut rng)).collect();
    config
        .n_grid
        .iter()
        .map(|&n| {
            let u = config.u_of(n) as usize;
            let sample = ClaimSample::new(draws[..u].to_vec(), config.mixture.step)?;
            let reference = reference_premium(config, n)?;
            let normal = normal_approx_premium(&sample, n, &config.measure)?;
            let plugin = plugin_premium(&sample, n, &config.measure, config.trunc_eps)?;
            let scale = (n as f64).powf(r);
            Ok(MzRow {
                n,
                normal_scaled_err: scale * (normal.premium_per_risk - reference).abs(),
                plugin_scaled_err: scale * (plugin.premium_per_risk - reference).abs(),
            })
        })
        .collect()
}
