//! `collrisk`: premiums of aggregate insurance risks on the command line.
//!
//! Subcommands: `convolve`, `premium`, `simulate fig1`, `simulate fig2`,
//! `study rates`, `study coverage`, `study mz`. Outputs are headed CSV files
//! plus a `manifest.txt` reproducibility record in the output directory.

mod config;
mod io;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use collrisk_core::{
    confidence_interval, convergence_curve, convolve_n, coverage_study, fig1_panel, fig2_curve,
    mz_check, ExperimentConfig, MixtureSpec, ReferenceMode, RiskMeasureSpec,
};
use config::{parse_n_grid, parse_pairs, resolve, resolve_opt, ConfigFile};
use io::Manifest;

#[derive(Parser)]
#[command(name = "collrisk", version, about = "Aggregate-risk premiums on exact lattice convolutions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact n-fold convolution of a PMF file.
    Convolve(ConvolveArgs),
    /// Premium of a claim sample by either estimator.
    Premium(PremiumArgs),
    /// Monte-Carlo reproductions of the aggregate-law and estimator figures.
    #[command(subcommand)]
    Simulate(SimulateCommand),
    /// Convergence-rate, coverage and almost-sure-rate studies.
    #[command(subcommand)]
    Study(StudyCommand),
}

#[derive(Subcommand)]
enum SimulateCommand {
    /// Exact aggregate PMFs next to their normal approximations.
    Fig1(Fig1Args),
    /// Estimator averages against the exact reference premium.
    Fig2(Fig2Args),
}

#[derive(Subcommand)]
enum StudyCommand {
    /// Weighted-distance convergence of the standardized aggregate law.
    Rates(RatesArgs),
    /// Confidence-interval coverage of both estimators.
    Coverage(CoverageArgs),
    /// Single-path scaled errors in the spirit of the strong law.
    Mz(MzArgs),
}

/// Flags shared by the experiment commands; every one of them can also come
/// from `--config FILE` (flags win).
#[derive(Args, Clone, Default)]
struct CommonArgs {
    /// Flat key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Claim probability p of the mixture.
    #[arg(long)]
    p: Option<f64>,
    /// Pareto shape a.
    #[arg(long)]
    a: Option<f64>,
    /// Pareto scale b.
    #[arg(long)]
    b: Option<f64>,
    /// Grid step h.
    #[arg(long)]
    h: Option<f64>,
    /// Risk measure, e.g. var:0.99, avar:0.95, osm:0.5,2, expectile:0.9,
    /// distortion:knots.csv.
    #[arg(long)]
    measure: Option<String>,
    /// Collective sizes, comma separated.
    #[arg(long, value_name = "LIST")]
    n_grid: Option<String>,
    /// Monte-Carlo paths.
    #[arg(long, value_name = "K")]
    paths: Option<u32>,
    /// Sample-size coupling u_n = ceil(c n).
    #[arg(long, value_name = "R")]
    ratio_c: Option<f64>,
    /// Seed for the counter-based generator.
    #[arg(long)]
    seed: Option<u64>,
    /// Confidence-interval level.
    #[arg(long)]
    ci: Option<f64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    /// Tail truncation of the discretized claim law.
    #[arg(long)]
    tail_eps: Option<f64>,
    /// Early-stop mass tolerance of the convolution recursion.
    #[arg(long)]
    trunc_eps: Option<f64>,
    /// Worker threads (default: all cores). Outputs do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct ConvolveArgs {
    /// Input PMF CSV (header x,prob).
    #[arg(long)]
    pmf: PathBuf,
    /// Number of convolution factors.
    #[arg(long)]
    n: u32,
    #[arg(long)]
    trunc_eps: Option<f64>,
    /// Output PMF CSV.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct PremiumArgs {
    /// Claims CSV (header claim).
    #[arg(long)]
    claims: PathBuf,
    /// Collective size.
    #[arg(long)]
    n: u32,
    /// Risk measure specification.
    #[arg(long)]
    measure: Option<String>,
    /// Estimator: plugin or normal.
    #[arg(long)]
    method: Option<String>,
    /// Grid step of the claims (inferred from the data when omitted).
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    trunc_eps: Option<f64>,
    /// Confidence-interval level.
    #[arg(long)]
    ci: Option<f64>,
    /// Output report CSV.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct Fig1Args {
    #[command(flatten)]
    common: CommonArgs,
    /// Mixture parameter pairs a:b, comma separated.
    #[arg(long, value_name = "PAIRS")]
    pairs: Option<String>,
}

#[derive(Args)]
struct Fig2Args {
    #[command(flatten)]
    common: CommonArgs,
    /// Reference premium: `exact` or `mc:RUNS`.
    #[arg(long)]
    reference: Option<String>,
}

#[derive(Args)]
struct RatesArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Weight exponent of the nonuniform Kolmogorov distance.
    #[arg(long)]
    lambda: Option<f64>,
    /// Interior evaluation points per inter-jump interval.
    #[arg(long)]
    refine: Option<u32>,
    /// Output CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CoverageArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct MzArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Scaling exponent of n^r |premium - reference|.
    #[arg(long)]
    r: Option<f64>,
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("collrisk: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Convolve(args) => run_convolve(args),
        Command::Premium(args) => run_premium(args),
        Command::Simulate(SimulateCommand::Fig1(args)) => run_fig1(args),
        Command::Simulate(SimulateCommand::Fig2(args)) => run_fig2(args),
        Command::Study(StudyCommand::Rates(args)) => run_rates(args),
        Command::Study(StudyCommand::Coverage(args)) => run_coverage(args),
        Command::Study(StudyCommand::Mz(args)) => run_mz(args),
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<ConfigFile> {
    match path {
        Some(p) => ConfigFile::load(p),
        None => Ok(ConfigFile::default()),
    }
}

/// Parse `var:0.99 | avar:0.99 | osm:a,p | expectile:0.9 | distortion:file.csv`.
fn parse_measure(raw: &str) -> Result<RiskMeasureSpec> {
    let (kind, params) = raw
        .split_once(':')
        .with_context(|| format!("measure {raw:?} must look like kind:params"))?;
    let measure = match kind.trim() {
        "var" => RiskMeasureSpec::var(params.trim().parse()?)?,
        "avar" => RiskMeasureSpec::avar(params.trim().parse()?)?,
        "osm" => {
            let (a, p) = params
                .split_once(',')
                .with_context(|| format!("osm needs a,p, got {params:?}"))?;
            RiskMeasureSpec::one_sided_moment(a.trim().parse()?, p.trim().parse()?)?
        }
        "expectile" => RiskMeasureSpec::expectile(params.trim().parse()?)?,
        "distortion" => {
            let g = io::read_distortion(Path::new(params.trim()))?;
            RiskMeasureSpec::distortion(g)?
        }
        other => bail!("unknown measure kind {other:?}"),
    };
    Ok(measure)
}

fn configure_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure the thread pool")?;
    }
    Ok(())
}

struct ResolvedExperiment {
    config: ExperimentConfig,
    out_dir: PathBuf,
}

/// Resolve the mixture-experiment parameters common to simulate/study runs.
fn resolve_experiment(
    common: &CommonArgs,
    default_n_grid: &str,
    default_paths: u32,
    manifest: &mut Manifest,
) -> Result<ResolvedExperiment> {
    let file = load_config(&common.config)?;
    let p = resolve(common.p, &file, "p", 0.1)?;
    let a = resolve(common.a, &file, "a", 3.0)?;
    let b = resolve(common.b, &file, "b", 20.0)?;
    let h = resolve(common.h, &file, "h", 10.0)?;
    let measure_text =
        resolve(common.measure.clone(), &file, "measure", "var:0.99".to_string())?;
    let n_grid_text = resolve(
        common.n_grid.clone(),
        &file,
        "n_grid",
        default_n_grid.to_string(),
    )?;
    let paths = resolve(common.paths, &file, "paths", default_paths)?;
    let ratio_c = resolve(common.ratio_c, &file, "ratio_c", 1.0)?;
    let seed = resolve(common.seed, &file, "seed", 42)?;
    let ci = resolve(common.ci, &file, "ci", 0.95)?;
    let tail_eps = resolve(common.tail_eps, &file, "tail_eps", 1e-9)?;
    let trunc_eps = resolve(common.trunc_eps, &file, "trunc_eps", 1e-12)?;
    let out_dir = resolve(common.out_dir.clone(), &file, "out_dir", PathBuf::from("."))?;
    let threads = resolve_opt(common.threads, &file, "threads")?;
    configure_threads(threads)?;

    for (key, value) in [
        ("p", p.to_string()),
        ("a", a.to_string()),
        ("b", b.to_string()),
        ("h", h.to_string()),
        ("measure", measure_text.clone()),
        ("n_grid", n_grid_text.clone()),
        ("paths", paths.to_string()),
        ("ratio_c", ratio_c.to_string()),
        ("seed", seed.to_string()),
        ("ci", ci.to_string()),
        ("tail_eps", format!("{tail_eps:e}")),
        ("trunc_eps", format!("{trunc_eps:e}")),
        ("out_dir", out_dir.display().to_string()),
    ] {
        manifest.record(key, value);
    }

    let config = ExperimentConfig {
        mixture: MixtureSpec::new(p, a, b, h)?,
        measure: parse_measure(&measure_text)?,
        n_grid: parse_n_grid(&n_grid_text)?,
        mc_paths: paths,
        mc_paths_reference: 100_000,
        ratio_c,
        seed,
        ci_level: ci,
        reference: ReferenceMode::Exact,
        trunc_eps,
        tail_eps,
        output_dir: out_dir.clone(),
    };
    Ok(ResolvedExperiment { config, out_dir })
}

fn run_convolve(args: ConvolveArgs) -> Result<()> {
    let file = load_config(&args.config)?;
    let trunc_eps = resolve(args.trunc_eps, &file, "trunc_eps", 1e-12)?;
    let mut manifest = Manifest::new("convolve");
    manifest.record("pmf", args.pmf.display());
    manifest.record("n", args.n);
    manifest.record("trunc_eps", format!("{trunc_eps:e}"));
    manifest.record("out", args.out.display());

    let d = io::read_pmf(&args.pmf)?;
    let result = convolve_n(&d, args.n, trunc_eps)?;
    io::write_pmf(&result.dist, &args.out, &mut manifest)?;
    manifest.record("truncated_mass", format!("{:e}", result.truncated_mass));
    manifest.record("log_scale_used", result.log_scale_used);
    manifest.write(args.out.parent().unwrap_or(Path::new(".")))?;
    Ok(())
}

fn run_premium(args: PremiumArgs) -> Result<()> {
    let file = load_config(&args.config)?;
    let measure_text = resolve(args.measure, &file, "measure", "var:0.99".to_string())?;
    let method = resolve(args.method, &file, "method", "plugin".to_string())?;
    let ci = resolve(args.ci, &file, "ci", 0.95)?;
    let trunc_eps = resolve(args.trunc_eps, &file, "trunc_eps", 1e-12)?;
    let step = resolve_opt(args.h, &file, "h")?;

    let mut manifest = Manifest::new("premium");
    manifest.record("claims", args.claims.display());
    manifest.record("n", args.n);
    manifest.record("measure", &measure_text);
    manifest.record("method", &method);
    manifest.record("ci", ci);
    manifest.record("trunc_eps", format!("{trunc_eps:e}"));

    let measure = parse_measure(&measure_text)?;
    let sample = io::read_claims(&args.claims, step)?;
    let mut report = match method.as_str() {
        "plugin" => collrisk_core::plugin_premium(&sample, args.n, &measure, trunc_eps)?,
        "normal" => collrisk_core::normal_approx_premium(&sample, args.n, &measure)?,
        other => bail!("method must be plugin or normal, got {other:?}"),
    };
    let (low, high) = confidence_interval(&report, ci)?;
    report.ci_low = low;
    report.ci_high = high;
    report.ci_level = ci;

    let mut out = String::from("method,n,u,premium,m_hat,s_hat,ci_low,ci_high\n");
    writeln!(
        out,
        "{},{},{},{},{},{},{},{}",
        report.method.as_str(),
        report.n,
        report.u,
        report.premium_per_risk,
        report.m_hat,
        report.s_hat,
        report.ci_low,
        report.ci_high
    )
    .expect("string write");
    io::write_file(&args.out, &out, 1, &mut manifest)?;
    manifest.write(args.out.parent().unwrap_or(Path::new(".")))?;
    Ok(())
}

fn run_fig1(args: Fig1Args) -> Result<()> {
    let mut manifest = Manifest::new("simulate fig1");
    let resolved = resolve_experiment(&args.common, "100,150,200", 1, &mut manifest)?;
    let file = load_config(&args.common.config)?;
    let pairs_text = resolve(
        args.pairs,
        &file,
        "pairs",
        match (args.common.a, args.common.b) {
            // explicit a/b narrow the run to that single pair
            (Some(a), Some(b)) => format!("{a}:{b}"),
            _ => "2.1:11,3:20,6:50,10:90".to_string(),
        },
    )?;
    manifest.record("pairs", &pairs_text);
    let pairs = parse_pairs(&pairs_text)?;
    let config = &resolved.config;

    for &(a, b) in &pairs {
        let mixture = MixtureSpec::new(config.mixture.p, a, b, config.mixture.step)?;
        for &n in &config.n_grid {
            let panel = fig1_panel(&mixture, n, config.tail_eps, config.trunc_eps)?;
            let mut out = String::from("x,pmf,normal_density\n");
            for (x, pmf, density) in &panel.rows {
                writeln!(out, "{x},{pmf},{density}").expect("string write");
            }
            let path = resolved.out_dir.join(format!("fig1_a{a}_b{b}_n{n}.csv"));
            io::write_file(&path, &out, panel.rows.len(), &mut manifest)?;
        }
    }
    manifest.write(&resolved.out_dir)?;
    Ok(())
}

fn parse_reference(raw: &str) -> Result<(ReferenceMode, Option<u32>)> {
    if raw == "exact" {
        return Ok((ReferenceMode::Exact, None));
    }
    if raw == "mc" {
        return Ok((ReferenceMode::MonteCarlo, None));
    }
    if let Some(runs) = raw.strip_prefix("mc:") {
        return Ok((ReferenceMode::MonteCarlo, Some(runs.parse()?)));
    }
    bail!("reference must be `exact` or `mc:RUNS`, got {raw:?}")
}

fn run_fig2(args: Fig2Args) -> Result<()> {
    let mut manifest = Manifest::new("simulate fig2");
    let mut resolved = resolve_experiment(
        &args.common,
        "20,40,60,80,100,120,140,160,180,200",
        100,
        &mut manifest,
    )?;
    let file = load_config(&args.common.config)?;
    let reference_text = resolve(args.reference, &file, "reference", "exact".to_string())?;
    manifest.record("reference", &reference_text);
    let (mode, runs) = parse_reference(&reference_text)?;
    resolved.config.reference = mode;
    if let Some(runs) = runs {
        resolved.config.mc_paths_reference = runs;
    }

    let rows = fig2_curve(&resolved.config)?;
    let mut out = String::from("n,reference,normal_avg,plugin_avg,normal_bias,plugin_bias\n");
    for row in &rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            row.n, row.reference, row.normal_avg, row.plugin_avg, row.normal_bias, row.plugin_bias
        )
        .expect("string write");
    }
    let path = resolved.out_dir.join(format!(
        "fig2_a{}_b{}.csv",
        resolved.config.mixture.a, resolved.config.mixture.b
    ));
    io::write_file(&path, &out, rows.len(), &mut manifest)?;
    manifest.write(&resolved.out_dir)?;
    Ok(())
}

fn run_rates(args: RatesArgs) -> Result<()> {
    let mut manifest = Manifest::new("study rates");
    let resolved = resolve_experiment(&args.common, "25,50,100,200", 1, &mut manifest)?;
    let file = load_config(&args.common.config)?;
    let lambda = resolve(args.lambda, &file, "lambda", 3.0)?;
    let refine = resolve(args.refine, &file, "refine", 8)?;
    manifest.record("lambda", lambda);
    manifest.record("refine", refine);
    manifest.record("out", args.out.display());

    let config = &resolved.config;
    let report = convergence_curve(
        &config.mixture,
        lambda,
        &config.n_grid,
        config.tail_eps,
        config.trunc_eps,
        refine,
    )?;
    let mut out = String::from("n,distance,gamma,f,slope\n");
    for (n, distance) in &report.points {
        writeln!(out, "{n},{distance},{},{},{}", report.gamma, report.f_factor, report.slope_est)
            .expect("string write");
    }
    io::write_file(&args.out, &out, report.points.len(), &mut manifest)?;
    manifest.record("slope_stderr", report.slope_stderr);
    manifest.write(args.out.parent().unwrap_or(Path::new(".")))?;
    Ok(())
}

fn run_coverage(args: CoverageArgs) -> Result<()> {
    let mut manifest = Manifest::new("study coverage");
    let resolved = resolve_experiment(&args.common, "100,200,400", 500, &mut manifest)?;
    let rows = coverage_study(&resolved.config)?;
    let mut out = String::from("n,method,coverage\n");
    for row in &rows {
        writeln!(out, "{},{},{}", row.n, row.method, row.coverage).expect("string write");
    }
    let path = resolved.out_dir.join(format!(
        "coverage_a{}_b{}.csv",
        resolved.config.mixture.a, resolved.config.mixture.b
    ));
    io::write_file(&path, &out, rows.len(), &mut manifest)?;
    manifest.write(&resolved.out_dir)?;
    Ok(())
}

fn run_mz(args: MzArgs) -> Result<()> {
    let mut manifest = Manifest::new("study mz");
    let resolved =
        resolve_experiment(&args.common, "100,200,400,800,1600", 1, &mut manifest)?;
    let file = load_config(&args.common.config)?;
    let r = resolve(args.r, &file, "r", 0.4)?;
    manifest.record("r", r);

    let rows = mz_check(&resolved.config, r)?;
    let mut out = String::from("n,normal_scaled_err,plugin_scaled_err\n");
    for row in &rows {
        writeln!(out, "{},{},{}", row.n, row.normal_scaled_err, row.plugin_scaled_err)
            .expect("string write");
    }
    let path = resolved.out_dir.join(format!(
        "mz_a{}_b{}.csv",
        resolved.config.mixture.a, resolved.config.mixture.b
    ));
    io::write_file(&path, &out, rows.len(), &mut manifest)?;
    manifest.write(&resolved.out_dir)?;
    Ok(())
}
