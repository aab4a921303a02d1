//! Law-invariant risk functionals on lattice distributions: Value at Risk,
//! convex distortion measures (Average Value at Risk as the tail special
//! case), the one-sided p-th moment measure and expectiles, together with the
//! induced-distortion probe for the Hölder condition near t = 1.

use crate::error::{Error, Result};
use crate::kahan::{compensated_sum, CompensatedSum};
use crate::lattice::{self, LatticeDistribution};
use crate::normal::bisect;

/// Convex distortion function `g: [0,1] -> [0,1]`, either one of the known
/// closed forms or a piecewise-linear knot table.
#[derive(Debug, Clone, PartialEq)]
pub enum DistortionFunction {
    /// `g(t) = max(t - alpha, 0) / (1 - alpha)`; yields Average Value at Risk.
    AvarTail { alpha: f64 },
    /// `g(t) = t^beta` for `beta >= 1`.
    Power { beta: f64 },
    /// Distortion induced by the one-sided p-th moment measure,
    /// `g(t) = t - a t (1-t)^(1/p)`.
    OneSidedMomentTail { a: f64, p: f64 },
    /// Distortion induced by the expectile measure,
    /// `g(t) = (1-alpha) t / (1-alpha + (1-t)(2 alpha - 1))`.
    ExpectileTail { alpha: f64 },
    /// Linear interpolation of `(t, g(t))` knots; the table must start at
    /// `(0, 0)` and end at `(1, 1)`.
    PiecewiseLinear { knots: Vec<(f64, f64)> },
}

impl DistortionFunction {
    pub fn avar_tail(alpha: f64) -> Result<Self> {
        let g = Self::AvarTail { alpha };
        g.validate()?;
        Ok(g)
    }

    pub fn power(beta: f64) -> Result<Self> {
        let g = Self::Power { beta };
        g.validate()?;
        Ok(g)
    }

    pub fn piecewise_linear(knots: Vec<(f64, f64)>) -> Result<Self> {
        let g = Self::PiecewiseLinear { knots };
        g.validate()?;
        Ok(g)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match self {
            Self::AvarTail { alpha } => ((t - alpha) / (1.0 - alpha)).max(0.0),
            Self::Power { beta } => t.powf(*beta),
            Self::OneSidedMomentTail { a, p } => t - a * t * (1.0 - t).powf(1.0 / p),
            Self::ExpectileTail { alpha } => {
                if t >= 1.0 {
                    1.0
                } else {
                    (1.0 - alpha) * t / (1.0 - alpha + (1.0 - t) * (2.0 * alpha - 1.0))
                }
            }
            Self::PiecewiseLinear { knots } => {
                if t >= 1.0 {
                    return knots.last().map_or(1.0, |&(_, g)| g);
                }
                match knots.binary_search_by(|&(k, _)| k.total_cmp(&t)) {
                    Ok(i) => knots[i].1,
                    Err(i) => {
                        // i >= 1 because knots start at t = 0
                        let (t0, g0) = knots[i - 1];
                        let (t1, g1) = knots[i];
                        g0 + (g1 - g0) * (t - t0) / (t1 - t0)
                    }
                }
            }
        }
    }

    /// Check `g(0) = 0`, `g(1) = 1`, monotonicity and convexity on the knot
    /// set or a thousand-point grid, with 1e-9 slack.
    pub fn validate(&self) -> Result<()> {
        const SLACK: f64 = 1e-9;
        match self {
            Self::AvarTail { alpha } => {
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return Err(Error::InvalidDistortion(format!(
                        "avar level must lie in (0,1), got {alpha}"
                    )));
                }
            }
            Self::Power { beta } => {
                if !(*beta >= 1.0) {
                    return Err(Error::InvalidDistortion(format!(
                        "power exponent must be >= 1 for convexity, got {beta}"
                    )));
                }
            }
            Self::OneSidedMomentTail { a, p } => {
                if !(*a > 0.0 && *a <= 1.0 && *p >= 1.0) {
                    return Err(Error::InvalidDistortion(format!(
                        "one-sided moment parameters out of range: a={a}, p={p}"
                    )));
                }
            }
            Self::ExpectileTail { alpha } => {
                if !(*alpha >= 0.5 && *alpha < 1.0) {
                    return Err(Error::InvalidDistortion(format!(
                        "expectile level must lie in [1/2, 1), got {alpha}"
                    )));
                }
            }
            Self::PiecewiseLinear { knots } => {
                if knots.len() < 2 {
                    return Err(Error::InvalidDistortion("need at least two knots".into()));
                }
                for w in knots.windows(2) {
                    if !(w[1].0 > w[0].0) {
                        return Err(Error::InvalidDistortion(format!(
                            "knot abscissae must be strictly increasing, got {} then {}",
                            w[0].0, w[1].0
                        )));
                    }
                }
                if knots[0].0 != 0.0 || knots.last().unwrap().0 != 1.0 {
                    return Err(Error::InvalidDistortion(
                        "knots must span [0, 1] with explicit endpoints".into(),
                    ));
                }
            }
        }
        let grid: Vec<f64> = match self {
            Self::PiecewiseLinear { knots } => knots.iter().map(|&(t, _)| t).collect(),
            _ => (0..=1000).map(|i| i as f64 / 1000.0).collect(),
        };
        let values: Vec<f64> = grid.iter().map(|&t| self.eval(t)).collect();
        let first = *values.first().unwrap();
        let last = *values.last().unwrap();
        if first.abs() > SLACK {
            return Err(Error::InvalidDistortion(format!("g(0) = {first}, expected 0")));
        }
        if (last - 1.0).abs() > SLACK {
            return Err(Error::InvalidDistortion(format!("g(1) = {last}, expected 1")));
        }
        for (w, t) in values.windows(2).zip(grid.windows(2)) {
            if w[1] < w[0] - SLACK {
                return Err(Error::InvalidDistortion(format!(
                    "g decreases between t={} and t={}",
                    t[0], t[1]
                )));
            }
        }
        for i in 1..values.len() - 1 {
            let (t0, t1, t2) = (grid[i - 1], grid[i], grid[i + 1]);
            let chord = values[i - 1] + (values[i + 1] - values[i - 1]) * (t1 - t0) / (t2 - t0);
            if values[i] > chord + SLACK {
                return Err(Error::InvalidDistortion(format!("g is not convex near t={t1}")));
            }
        }
        Ok(())
    }
}

/// Tagged description of a law-invariant risk measure.
#[derive(Debug, Clone, PartialEq)]
pub enum RiskMeasureSpec {
    ValueAtRisk { alpha: f64 },
    AverageValueAtRisk { alpha: f64 },
    Distortion { g: DistortionFunction },
    OneSidedMoment { a: f64, p: f64 },
    Expectile { alpha: f64 },
}

impl RiskMeasureSpec {
    pub fn var(alpha: f64) -> Result<Self> {
        let m = Self::ValueAtRisk { alpha };
        m.validate()?;
        Ok(m)
    }

    pub fn avar(alpha: f64) -> Result<Self> {
        let m = Self::AverageValueAtRisk { alpha };
        m.validate()?;
        Ok(m)
    }

    pub fn distortion(g: DistortionFunction) -> Result<Self> {
        let m = Self::Distortion { g };
        m.validate()?;
        Ok(m)
    }

    pub fn one_sided_moment(a: f64, p: f64) -> Result<Self> {
        let m = Self::OneSidedMoment { a, p };
        m.validate()?;
        Ok(m)
    }

    pub fn expectile(alpha: f64) -> Result<Self> {
        let m = Self::Expectile { alpha };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::ValueAtRisk { alpha } | Self::AverageValueAtRisk { alpha } => {
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return Err(Error::DomainError(format!(
                        "level must lie in (0,1), got {alpha}"
                    )));
                }
            }
            Self::Distortion { g } => g.validate()?,
            Self::OneSidedMoment { a, p } => {
                if !(*a > 0.0 && *a <= 1.0) {
                    return Err(Error::DomainError(format!("a must lie in (0,1], got {a}")));
                }
                if !(*p >= 1.0) {
                    return Err(Error::DomainError(format!("p must be >= 1, got {p}")));
                }
            }
            Self::Expectile { alpha } => {
                if !(*alpha >= 0.5 && *alpha < 1.0) {
                    return Err(Error::DomainError(format!(
                        "expectile level must lie in [1/2, 1), got {alpha}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Exact distortion value on a step distribution function:
/// `-int_-inf^0 g(F) dx + int_0^inf (1 - g(F)) dx` collapses to finite cell
/// sums, split at zero using the offset. Beyond the top grid point F = 1 and
/// g(1) = 1 kills the integrand.
fn distortion_on_lattice(g: &DistortionFunction, d: &LatticeDistribution) -> f64 {
    let mut total = CompensatedSum::new();
    let first = d.offset();
    let last = d.max_point();
    if first > 0.0 {
        // F = 0 below the support, so 1 - g(0) = 1 on [0, first)
        total.add(first);
    }
    if last < 0.0 {
        // F = 1 on [last, 0) contributes -g(1) (length 0 - last)
        total.add(last);
    }
    let mut cum = CompensatedSum::new();
    let masses = d.masses();
    for (k, &mass) in masses.iter().enumerate().take(masses.len().saturating_sub(1)) {
        cum.add(mass);
        let f = cum.total().min(1.0);
        let a = d.point(k);
        let b = d.point(k + 1);
        let neg_len = b.min(0.0) - a.min(0.0);
        let pos_len = b.max(0.0) - a.max(0.0);
        let gf = g.eval(f);
        if neg_len > 0.0 {
            total.add(-gf * neg_len);
        }
        if pos_len > 0.0 {
            total.add((1.0 - gf) * pos_len);
        }
    }
    total.total()
}

fn expectile_on_lattice(alpha: f64, d: &LatticeDistribution) -> Result<f64> {
    let lo = d.offset();
    let hi = d.max_point();
    if lo == hi {
        return Ok(lo);
    }
    // strictly decreasing in m with a sign change on [lo, hi]
    let foc = |m: f64| {
        let upper = compensated_sum(d.support().map(|(x, q)| q * (x - m).max(0.0)));
        let lower = compensated_sum(d.support().map(|(x, q)| q * (m - x).max(0.0)));
        alpha * upper - (1.0 - alpha) * lower
    };
    let tol = 1e-10 * (1.0 + (hi - lo).abs());
    bisect(foc, lo, hi, tol)
}

/// Evaluate `measure` on the lattice law `d`.
pub fn evaluate(measure: &RiskMeasureSpec, d: &LatticeDistribution) -> Result<f64> {
    measure.validate()?;
    match measure {
        RiskMeasureSpec::ValueAtRisk { alpha } => lattice::quantile_left(d, *alpha),
        RiskMeasureSpec::AverageValueAtRisk { alpha } => {
            Ok(distortion_on_lattice(&DistortionFunction::AvarTail { alpha: *alpha }, d))
        }
        RiskMeasureSpec::Distortion { g } => Ok(distortion_on_lattice(g, d)),
        RiskMeasureSpec::OneSidedMoment { a, p } => {
            let m = lattice::mean(d);
            let upper = compensated_sum(d.support().map(|(x, q)| q * (x - m).max(0.0).powf(*p)));
            Ok(m + a * upper.powf(1.0 / p))
        }
        RiskMeasureSpec::Expectile { alpha } => expectile_on_lattice(*alpha, d),
    }
}

/// Distortion induced by `measure` on Bernoulli laws:
/// `g_rho(t) = 1 - rho(B_{1-t})` where `B_{1-t}` has expectation `1 - t`.
pub fn induced_distortion(measure: &RiskMeasureSpec, t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::DomainError(format!("t must lie in [0,1], got {t}")));
    }
    let bernoulli = LatticeDistribution::new(0.0, 1.0, vec![t, 1.0 - t])?;
    Ok(1.0 - evaluate(measure, &bernoulli)?)
}

/// Estimate the Hölder data `(beta, L)` of `1 - g(t) <= L (1-t)^beta` from
/// sampled values of `g` on a grid approaching one: least-squares slope of
/// `log(1 - g)` against `log(1 - t)` over the finest twenty points, then the
/// smallest admissible constant on the whole grid.
pub fn holder_exponent_probe(g_values: &[(f64, f64)]) -> Result<(f64, f64)> {
    let mut points: Vec<(f64, f64)> = g_values
        .iter()
        .filter(|&&(t, g)| t < 1.0 && 1.0 - g > 0.0)
        .map(|&(t, g)| (t, g))
        .collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    if points.len() < 20 {
        return Err(Error::DegenerateData(format!(
            "only {} usable grid points with g(t) < 1 near t = 1",
            points.len()
        )));
    }
    let finest = &points[points.len() - 20..];
    let logs: Vec<(f64, f64)> =
        finest.iter().map(|&(t, g)| ((1.0 - t).ln(), (1.0 - g).ln())).collect();
    let n = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateData("grid does not approach t = 1".into()));
    }
    let beta = sxy / sxx;
    let l_est = points
        .iter()
        .map(|&(t, g)| (1.0 - g) / (1.0 - t).powf(beta))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((beta, l_est))
}

/// The probe grid `t = 1 - 2^-k`, `k = 1..=40`, from the induced distortion.
pub fn induced_distortion_probe_grid(measure: &RiskMeasureSpec) -> Result<Vec<(f64, f64)>> {
    (1..=40)
        .map(|k| {
            let t = 1.0 - 0.5f64.powi(k);
            Ok((t, induced_distortion(measure, t)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::from_pmf;

    #[test]
    fn var_uses_left_quantile() {
        let d = from_pmf(&[(0.0, 0.5), (10.0, 0.3), (20.0, 0.2)]).unwrap();
        let v = evaluate(&RiskMeasureSpec::var(0.8).unwrap(), &d).unwrap();
        assert_eq!(v, 10.0);
    }

    #[test]
    fn degenerate_law_returns_its_atom_for_every_variant() {
        let c = 7.0;
        let d = LatticeDistribution::point_mass(c);
        let measures = [
            RiskMeasureSpec::var(0.9).unwrap(),
            RiskMeasureSpec::avar(0.9).unwrap(),
            RiskMeasureSpec::distortion(DistortionFunction::power(2.0).unwrap()).unwrap(),
            RiskMeasureSpec::one_sided_moment(0.5, 2.0).unwrap(),
            RiskMeasureSpec::expectile(0.8).unwrap(),
        ];
        for m in &measures {
            let v = evaluate(m, &d).unwrap();
            assert!((v - c).abs() < 1e-12, "{m:?} on point mass gave {v}, expected {c}");
        }
    }

    #[test]
    fn negative_atom_flows_through_the_split_at_zero() {
        let d = LatticeDistribution::point_mass(-4.0);
        let v = evaluate(&RiskMeasureSpec::avar(0.5).unwrap(), &d).unwrap();
        assert!((v - (-4.0)).abs() < 1e-12);
    }

    #[test]
    fn avar_of_symmetric_two_point_law_at_half() {
        // tail expectation above the median: both integrals enumerate to 10
        let d = from_pmf(&[(0.0, 0.5), (10.0, 0.5)]).unwrap();
        let v = evaluate(&RiskMeasureSpec::avar(0.5).unwrap(), &d).unwrap();
        assert!((v - 10.0).abs() < 1e-12);
    }

    #[test]
    fn expectile_at_half_is_the_mean() {
        let d = from_pmf(&[(0.0, 0.25), (10.0, 0.5), (30.0, 0.15), (20.0, 0.1)]).unwrap();
        let v = evaluate(&RiskMeasureSpec::expectile(0.5).unwrap(), &d).unwrap();
        assert!((v - lattice::mean(&d)).abs() < 1e-9);
    }

    #[test]
    fn identity_distortion_is_the_mean() {
        let d = from_pmf(&[(0.0, 0.2), (10.0, 0.5), (20.0, 0.3)]).unwrap();
        let g = DistortionFunction::power(1.0).unwrap();
        let v = evaluate(&RiskMeasureSpec::distortion(g).unwrap(), &d).unwrap();
        assert!((v - lattice::mean(&d)).abs() < 1e-12);
    }

    #[test]
    fn piecewise_linear_table_reproduces_avar() {
        let alpha = 0.9;
        let knots: Vec<(f64, f64)> = (0..=1000)
            .map(|i| {
                let t = i as f64 / 1000.0;
                (t, ((t - alpha) / (1.0 - alpha)).max(0.0))
            })
            .collect();
        let table = DistortionFunction::piecewise_linear(knots).unwrap();
        let d = from_pmf(&[(0.0, 0.5), (10.0, 0.3), (20.0, 0.2)]).unwrap();
        let via_table = evaluate(&RiskMeasureSpec::distortion(table).unwrap(), &d).unwrap();
        let direct = evaluate(&RiskMeasureSpec::avar(alpha).unwrap(), &d).unwrap();
        assert!((via_table - direct).abs() < 1e-12);
    }

    #[test]
    fn distortion_validation_rejects_concave_tables() {
        let err = DistortionFunction::piecewise_linear(vec![(0.0, 0.0), (0.5, 0.9), (1.0, 1.0)])
            .unwrap_err();
        assert!(matches!(err, Error::InvalidDistortion(_)));
    }

    #[test]
    fn distortion_validation_rejects_wrong_endpoints() {
        let err = DistortionFunction::piecewise_linear(vec![(0.0, 0.1), (1.0, 1.0)]).unwrap_err();
        assert!(matches!(err, Error::InvalidDistortion(_)));
        let err =
            DistortionFunction::piecewise_linear(vec![(0.0, 0.0), (0.9, 1.0)]).unwrap_err();
        assert!(matches!(err, Error::InvalidDistortion(_)));
    }

    #[test]
    fn induced_distortion_matches_one_sided_moment_closed_form() {
        let (a, p) = (0.7, 2.0);
        let m = RiskMeasureSpec::one_sided_moment(a, p).unwrap();
        for i in 0..=100 {
            let t = i as f64 / 100.0;
            let got = induced_distortion(&m, t).unwrap();
            let want = t - a * t * (1.0 - t).powf(1.0 / p);
            assert!((got - want).abs() < 1e-9, "t={t}: got {got}, want {want}");
        }
    }

    #[test]
    fn induced_distortion_matches_expectile_closed_form() {
        let alpha = 0.8;
        let m = RiskMeasureSpec::expectile(alpha).unwrap();
        for i in 0..=100 {
            let t = i as f64 / 100.0;
            let got = induced_distortion(&m, t).unwrap();
            let want = if t >= 1.0 {
                1.0
            } else {
                (1.0 - alpha) * t / (1.0 - alpha + (1.0 - t) * (2.0 * alpha - 1.0))
            };
            assert!((got - want).abs() < 1e-9, "t={t}: got {got}, want {want}");
        }
    }

    #[test]
    fn induced_distortion_endpoints() {
        for m in [
            RiskMeasureSpec::avar(0.95).unwrap(),
            RiskMeasureSpec::one_sided_moment(1.0, 3.0).unwrap(),
            RiskMeasureSpec::expectile(0.9).unwrap(),
        ] {
            assert!(induced_distortion(&m, 0.0).unwrap().abs() < 1e-9);
            assert!((induced_distortion(&m, 1.0).unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn holder_probe_recovers_avar_exponent() {
        let grid = induced_distortion_probe_grid(&RiskMeasureSpec::avar(0.9).unwrap()).unwrap();
        let (beta, l) = holder_exponent_probe(&grid).unwrap();
        assert!((beta - 1.0).abs() < 0.01, "beta for avar should be 1, got {beta}");
        assert!(l > 0.0);
    }

    #[test]
    fn holder_probe_recovers_one_sided_moment_exponent() {
        let grid =
            induced_distortion_probe_grid(&RiskMeasureSpec::one_sided_moment(1.0, 2.0).unwrap())
                .unwrap();
        let (beta, _) = holder_exponent_probe(&grid).unwrap();
        assert!((beta - 0.5).abs() < 0.01, "beta for p=2 should be 1/2, got {beta}");
    }

    #[test]
    fn holder_probe_recovers_expectile_exponent() {
        let grid =
            induced_distortion_probe_grid(&RiskMeasureSpec::expectile(0.8).unwrap()).unwrap();
        let (beta, _) = holder_exponent_probe(&grid).unwrap();
        assert!((beta - 1.0).abs() < 0.01, "beta for expectile should be 1, got {beta}");
    }

    #[test]
    fn holder_probe_rejects_saturated_data() {
        let grid: Vec<(f64, f64)> = (1..=40).map(|k| (1.0 - 0.5f64.powi(k), 1.0)).collect();
        let err = holder_exponent_probe(&grid).unwrap_err();
        assert!(matches!(err, Error::DegenerateData(_)));
    }

    #[test]
    fn monotone_distortion_ordering() {
        // pointwise smaller distortion gives the larger (more conservative) value
        let d = from_pmf(&[(0.0, 0.4), (10.0, 0.4), (20.0, 0.2)]).unwrap();
        let tighter = evaluate(&RiskMeasureSpec::avar(0.95).unwrap(), &d).unwrap();
        let looser = evaluate(&RiskMeasureSpec::avar(0.9).unwrap(), &d).unwrap();
        assert!(tighter >= looser - 1e-12);
    }
}
