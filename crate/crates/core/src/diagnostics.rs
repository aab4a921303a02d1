//! Distance and rate diagnostics: the nonuniform Kolmogorov metric
//! `d_{phi_lambda}` against N(0,1), the Berry-Esseen factor and exponent of
//! the nonuniform inequality, and log-log rate regressions.

use crate::convolve::convolve_n;
use crate::error::{Error, Result};
use crate::lattice::{self, discretize_mixture, LatticeDistribution, MixtureSpec};
use crate::normal::{std_normal_cdf, std_normal_sf};

/// Rate study summary for one mixture and weight exponent.
#[derive(Debug, Clone)]
pub struct RateReport {
    pub lambda: f64,
    /// `min(1, lambda - 2) / 2`.
    pub gamma: f64,
    /// Berry-Esseen moment factor of the single-claim law.
    pub f_factor: f64,
    pub slope_est: f64,
    pub slope_stderr: f64,
    /// `(n, d_{phi_lambda}(m_n, N(0,1)))` pairs.
    pub points: Vec<(u32, f64)>,
}

fn weight(x: f64, lambda: f64) -> f64 {
    1.0 + x.abs().powf(lambda)
}

/// Largest value of `Phi(x) (1 + |x|^lambda)` on `(-inf, hi)`: coarse scan
/// refined by golden-section search around the best bracket.
fn left_tail_supremum(hi: f64, lambda: f64) -> f64 {
    tail_supremum((-38.0f64).max(hi - 76.0), hi.min(38.0), |x| {
        std_normal_cdf(x) * weight(x, lambda)
    })
}

/// Largest value of `(1 - Phi(x)) (1 + |x|^lambda)` on `(lo, inf)`.
fn right_tail_supremum(lo: f64, lambda: f64) -> f64 {
    tail_supremum(lo.max(-38.0), 38.0f64.min(lo + 76.0), |x| {
        std_normal_sf(x) * weight(x, lambda)
    })
}

fn tail_supremum(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    if !(hi > lo) {
        return 0.0;
    }
    const SCAN: usize = 256;
    let mut best = f64::NEG_INFINITY;
    let mut best_i = 0;
    for i in 0..=SCAN {
        let x = lo + (hi - lo) * i as f64 / SCAN as f64;
        let v = f(x);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    // golden-section refinement inside the two scan cells around the best point
    let mut a = lo + (hi - lo) * best_i.saturating_sub(1) as f64 / SCAN as f64;
    let mut b = lo + (hi - lo) * (best_i + 1).min(SCAN) as f64 / SCAN as f64;
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        }
    }
    best.max(f1).max(f2)
}

/// Nonuniform Kolmogorov distance `sup_x |F_d(x) - Phi(x)| (1 + |x|^lambda)`
/// of a standardized lattice law against N(0,1).
///
/// The supremum is approximated from below by evaluating at every jump point
/// from both sides, at `refine` equally spaced interior points per
/// inter-jump interval, and by a one-dimensional search over each Gaussian
/// tail beyond the support; it converges to the supremum as `refine` grows.
pub fn nonuniform_kolmogorov(
    d: &LatticeDistribution,
    lambda: f64,
    refine: u32,
) -> Result<f64> {
    if lambda < 0.0 {
        return Err(Error::DomainError(format!("lambda must be >= 0, got {lambda}")));
    }
    if refine == 0 {
        return Err(Error::DomainError("refine must be at least 1".into()));
    }
    let mean = lattice::mean(d);
    let var = lattice::variance(d);
    if mean.abs() > 1e-6 || (var - 1.0).abs() > 1e-6 {
        return Err(Error::NotStandardized { mean, variance: var });
    }

    let masses = d.masses();
    let mut best: f64 = 0.0;
    let mut cum_prev = 0.0; // F just left of the current jump
    let mut cum = crate::kahan::CompensatedSum::new();
    for (k, &q) in masses.iter().enumerate() {
        let x = d.point(k);
        cum.add(q);
        let f_right = cum.total().min(1.0);
        let phi = std_normal_cdf(x);
        let w = weight(x, lambda);
        best = best.max((f_right - phi).abs() * w).max((cum_prev - phi).abs() * w);
        if k + 1 < masses.len() {
            let x_next = d.point(k + 1);
            for i in 1..=refine {
                let t = x + (x_next - x) * i as f64 / (refine + 1) as f64;
                best = best.max((f_right - std_normal_cdf(t)).abs() * weight(t, lambda));
            }
        }
        cum_prev = f_right;
    }
    best = best.max(left_tail_supremum(d.offset(), lambda));
    best = best.max(right_tail_supremum(d.max_point(), lambda));
    Ok(best)
}

/// Berry-Esseen data of a single-claim law: the factor
/// `f = E|X-m|^lambda / s^lambda` for `2 < lambda <= 3` and
/// `f = max(E|X-m|^3 / s^3, E|X-m|^lambda / s^lambda)` for `lambda > 3`,
/// together with the exponent `gamma = min(1, lambda - 2) / 2`.
pub fn berry_esseen_factor(d: &LatticeDistribution, lambda: f64) -> Result<(f64, f64)> {
    if !(lambda > 2.0) {
        return Err(Error::DomainError(format!("lambda must exceed 2, got {lambda}")));
    }
    let var = lattice::variance(d);
    if var <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let s = var.sqrt();
    let ratio_lambda = lattice::abs_central_moment(d, lambda)? / s.powf(lambda);
    let f = if lambda <= 3.0 {
        ratio_lambda
    } else {
        let ratio_three = lattice::abs_central_moment(d, 3.0)? / s.powi(3);
        ratio_three.max(ratio_lambda)
    };
    let gamma = (lambda - 2.0).min(1.0) / 2.0;
    Ok((f, gamma))
}

/// Ordinary least squares of `log(err)` on `log(n)`: slope and its standard
/// error.
pub fn rate_regression(points: &[(u32, f64)]) -> Result<(f64, f64)> {
    if points.len() < 4 {
        return Err(Error::InsufficientPoints { needed: 4, got: points.len() });
    }
    for w in points.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(Error::DomainError(format!(
                "n values must be strictly increasing, got {} then {}",
                w[0].0, w[1].0
            )));
        }
    }
    if let Some(&(_, bad)) = points.iter().find(|&&(_, e)| !(e > 0.0)) {
        return Err(Error::NonPositiveError(bad));
    }
    let logs: Vec<(f64, f64)> =
        points.iter().map(|&(n, e)| ((n as f64).ln(), e.ln())).collect();
    let k = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ssr: f64 = logs.iter().map(|p| {
        let r = p.1 - intercept - slope * p.0;
        r * r
    }).sum();
    let stderr = (ssr / (k - 2.0) / sxx).sqrt();
    Ok((slope, stderr))
}

/// Exact (Monte-Carlo-free) convergence curve: for each `n`, the distance
/// `d_{phi_lambda}(standardize(mu^{*n}), N(0,1))` of the discretized mixture,
/// fitted by the log-log regression.
pub fn convergence_curve(
    spec: &MixtureSpec,
    lambda: f64,
    n_grid: &[u32],
    tail_eps: f64,
    trunc_eps: f64,
    refine: u32,
) -> Result<RateReport> {
    if n_grid.is_empty() {
        return Err(Error::InsufficientPoints { needed: 1, got: 0 });
    }
    let claim = discretize_mixture(spec, tail_eps)?;
    let (f_factor, gamma) = berry_esseen_factor(&claim, lambda)?;
    let mut points = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let aggregate = convolve_n(&claim, n, trunc_eps)?;
        let standardized = lattice::standardize(&aggregate.dist)?;
        let dist = nonuniform_kolmogorov(&standardized, lambda, refine)?;
        points.push((n, dist));
    }
    let (slope_est, slope_stderr) = if points.len() >= 4 {
        rate_regression(&points)?
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(RateReport { lambda, gamma, f_factor, slope_est, slope_stderr, points })
}
