//! The two premium estimators for `R_rho(mu^{*n}) / n` — the estimated normal
//! approximation and the empirical plug-in — with their shared asymptotic
//! confidence interval.

use crate::convolve::convolve_n;
use crate::error::{Error, Result};
use crate::kahan::compensated_sum;
use crate::lattice::{empirical_measure, ClaimSample};
use crate::normal::{risk_of_std_normal, std_normal_quantile};
use crate::risk::{evaluate, RiskMeasureSpec};

/// Which estimator produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorMethod {
    NormalApprox,
    Plugin,
}

impl EstimatorMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::NormalApprox => "normal",
            Self::Plugin => "plugin",
        }
    }
}

/// Per-risk premium estimate with its decomposition and confidence interval.
#[derive(Debug, Clone)]
pub struct PremiumReport {
    pub method: EstimatorMethod,
    pub n: u32,
    /// Sample size u_n behind the estimate.
    pub u: u32,
    /// Estimate of `R_rho(mu^{*n}) / n`.
    pub premium_per_risk: f64,
    pub m_hat: f64,
    pub s_hat: f64,
    /// `R_rho(N(0,1))` for the measure.
    pub normal_constant: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub ci_level: f64,
}

const DEFAULT_CI_LEVEL: f64 = 0.95;

/// Empirical mean and the 1/u-normalized standard deviation (population
/// convention, not 1/(u-1)).
pub fn sample_moments(sample: &ClaimSample) -> (f64, f64) {
    let u = sample.len() as f64;
    let m = compensated_sum(sample.values().iter().copied()) / u;
    let var = compensated_sum(sample.values().iter().map(|&y| (y - m) * (y - m))) / u;
    (m, var.max(0.0).sqrt())
}

fn finish_report(
    method: EstimatorMethod,
    n: u32,
    u: u32,
    premium: f64,
    m_hat: f64,
    s_hat: f64,
    normal_constant: f64,
) -> Result<PremiumReport> {
    let mut report = PremiumReport {
        method,
        n,
        u,
        premium_per_risk: premium,
        m_hat,
        s_hat,
        normal_constant,
        ci_low: premium,
        ci_high: premium,
        ci_level: DEFAULT_CI_LEVEL,
    };
    let (low, high) = confidence_interval(&report, DEFAULT_CI_LEVEL)?;
    report.ci_low = low;
    report.ci_high = high;
    Ok(report)
}

/// Estimated normal approximation:
/// `premium = m_hat + s_hat * R_rho(N(0,1)) / sqrt(n)`, exactly this form.
pub fn normal_approx_premium(
    sample: &ClaimSample,
    n: u32,
    measure: &RiskMeasureSpec,
) -> Result<PremiumReport> {
    if n == 0 {
        return Err(Error::DomainError("collective size n must be at least 1".into()));
    }
    let (m_hat, s_hat) = sample_moments(sample);
    let constant = risk_of_std_normal(measure)?.value;
    let premium = m_hat + s_hat * constant / (n as f64).sqrt();
    finish_report(EstimatorMethod::NormalApprox, n, sample.len() as u32, premium, m_hat, s_hat, constant)
}

/// Empirical plug-in estimator: risk of the n-fold convolution of the
/// empirical measure, divided by n.
pub fn plugin_premium(
    sample: &ClaimSample,
    n: u32,
    measure: &RiskMeasureSpec,
    trunc_eps: f64,
) -> Result<PremiumReport> {
    if n == 0 {
        return Err(Error::DomainError("collective size n must be at least 1".into()));
    }
    let (m_hat, s_hat) = sample_moments(sample);
    let mu_hat = empirical_measure(sample);
    let aggregate = convolve_n(&mu_hat, n, trunc_eps)?;
    let value = evaluate(measure, &aggregate.dist)?;
    let constant = risk_of_std_normal(measure)?.value;
    finish_report(
        EstimatorMethod::Plugin,
        n,
        sample.len() as u32,
        value / n as f64,
        m_hat,
        s_hat,
        constant,
    )
}

/// Asymptotic confidence interval at `level`:
/// `[premium - (s_hat/sqrt(n)) z_{1-alpha/2}, premium - (s_hat/sqrt(n)) z_{alpha/2}]`
/// with `alpha = 1 - level`. The same interval applies to both estimators.
pub fn confidence_interval(report: &PremiumReport, level: f64) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::DomainError(format!("level must lie in (0,1), got {level}")));
    }
    let alpha = 1.0 - level;
    let scale = report.s_hat / (report.n as f64).sqrt();
    let z_high = std_normal_quantile(1.0 - alpha / 2.0)?;
    let z_low = std_normal_quantile(alpha / 2.0)?;
    Ok((report.premium_per_risk - scale * z_high, report.premium_per_risk - scale * z_low))
}
