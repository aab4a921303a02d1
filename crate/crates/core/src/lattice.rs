//! Probability distributions supported on an equidistant grid
//! `offset + step * {0, 1, ..., J}`, together with claim samples and the
//! discretized Pareto claim mixture used throughout the experiments.

use crate::error::{Error, Result};
use crate::kahan::{compensated_sum, CompensatedSum};

/// Tolerance accepted on input normalization (CSV round trips lose digits).
pub const INPUT_MASS_TOL: f64 = 1e-9;
/// Tolerance maintained internally after renormalization.
pub const INTERNAL_MASS_TOL: f64 = 1e-12;
/// Grid-membership tolerance for claim values, relative to the step.
pub const GRID_TOL: f64 = 1e-9;

/// A probability mass function on the grid `offset + step * j`, `j = 0..=J`.
///
/// Invariants held by every constructed value: all masses nonnegative,
/// total mass within `1e-12` of one, `step > 0`, at least one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeDistribution {
    offset: f64,
    step: f64,
    masses: Vec<f64>,
}

impl LatticeDistribution {
    /// Construct from raw parts, renormalizing when the total is within
    /// `INPUT_MASS_TOL` of one and rejecting otherwise.
    pub fn new(offset: f64, step: f64, masses: Vec<f64>) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::BadSpec(format!("step must be positive, got {step}")));
        }
        if masses.is_empty() {
            return Err(Error::EmptySupport);
        }
        if !offset.is_finite() {
            return Err(Error::BadSpec(format!("offset must be finite, got {offset}")));
        }
        let mut masses = masses;
        for q in &mut masses {
            if !q.is_finite() || *q < -INTERNAL_MASS_TOL {
                return Err(Error::BadMass(format!("negative or non-finite mass {q}")));
            }
            // tiny negatives are floating-point noise from upstream arithmetic
            if *q < 0.0 {
                *q = 0.0;
            }
        }
        let total = compensated_sum(masses.iter().copied());
        if (total - 1.0).abs() > INPUT_MASS_TOL {
            return Err(Error::BadMass(format!(
                "total mass {total} differs from 1 by more than {INPUT_MASS_TOL:e}"
            )));
        }
        if total != 1.0 {
            for q in &mut masses {
                *q /= total;
            }
        }
        Ok(Self { offset, step, masses })
    }

    /// Point mass at `x`.
    pub fn point_mass(x: f64) -> Self {
        Self { offset: x, step: 1.0, masses: vec![1.0] }
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Number of grid points (J + 1).
    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: at least one point
    }

    /// Grid point for index `j`.
    pub fn point(&self, j: usize) -> f64 {
        self.offset + j as f64 * self.step
    }

    /// Largest grid point.
    pub fn max_point(&self) -> f64 {
        self.point(self.masses.len() - 1)
    }

    pub fn total_mass(&self) -> f64 {
        compensated_sum(self.masses.iter().copied())
    }

    /// Iterator over `(grid point, mass)` pairs.
    pub fn support(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.masses.iter().enumerate().map(|(j, &q)| (self.point(j), q))
    }
}

/// Build a distribution from `(point, mass)` pairs. Points must form an
/// arithmetic progression after sorting; masses must be nonnegative and sum
/// to one within `1e-9`.
pub fn from_pmf(points_and_masses: &[(f64, f64)]) -> Result<LatticeDistribution> {
    if points_and_masses.is_empty() {
        return Err(Error::EmptySupport);
    }
    let mut pairs = points_and_masses.to_vec();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    for &(x, q) in &pairs {
        if !x.is_finite() {
            return Err(Error::NonGridInput(format!("non-finite point {x}")));
        }
        if q < 0.0 || !q.is_finite() {
            return Err(Error::BadMass(format!("negative or non-finite mass {q} at {x}")));
        }
    }
    let offset = pairs[0].0;
    if pairs.len() == 1 {
        // degenerate grid, J = 0; the step is immaterial
        return LatticeDistribution::new(offset, 1.0, vec![pairs[0].1]);
    }
    let step = pairs[1].0 - pairs[0].0;
    if !(step > 0.0) {
        return Err(Error::NonGridInput(format!("duplicate point {}", pairs[0].0)));
    }
    for (k, &(x, _)) in pairs.iter().enumerate() {
        let expected = offset + k as f64 * step;
        if (x - expected).abs() > GRID_TOL * step {
            return Err(Error::NonGridInput(format!(
                "point {x} deviates from the progression value {expected}"
            )));
        }
    }
    let masses = pairs.iter().map(|&(_, q)| q).collect();
    LatticeDistribution::new(offset, step, masses)
}

/// An ordered sample of nonnegative claims, each an integer multiple of the
/// declared grid step.
#[derive(Debug, Clone, PartialEq)]
pub struct ClaimSample {
    values: Vec<f64>,
    step: f64,
}

impl ClaimSample {
    pub fn new(values: Vec<f64>, step: f64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::BadSpec(format!("step must be positive, got {step}")));
        }
        if values.is_empty() {
            return Err(Error::BadSpec("claim sample must contain at least one value".into()));
        }
        for &v in &values {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::BadSpec(format!("claims must be finite and >= 0, got {v}")));
            }
            let ratio = v / step;
            if (ratio - ratio.round()).abs() > GRID_TOL {
                return Err(Error::NonGridInput(format!(
                    "claim {v} is not a multiple of the grid step {step}"
                )));
            }
        }
        Ok(Self { values, step })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Sample size u.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: u >= 1
    }
}

/// Claim-size law `(1-p) delta_0 + p Pareto(a, b)` on the grid `step * N_0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureSpec {
    /// Probability of a strictly positive claim.
    pub p: f64,
    /// Pareto shape; `a > 2` keeps the second moment finite.
    pub a: f64,
    /// Pareto scale.
    pub b: f64,
    /// Grid step h.
    pub step: f64,
}

impl MixtureSpec {
    pub fn new(p: f64, a: f64, b: f64, step: f64) -> Result<Self> {
        let spec = Self { p, a, b, step };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::BadSpec(format!("p must lie in (0,1), got {}", self.p)));
        }
        if !(self.a > 2.0) {
            return Err(Error::BadSpec(format!("a must exceed 2, got {}", self.a)));
        }
        if !(self.b > 0.0) {
            return Err(Error::BadSpec(format!("b must be positive, got {}", self.b)));
        }
        if !(self.step > 0.0) {
            return Err(Error::BadSpec(format!("step must be positive, got {}", self.step)));
        }
        Ok(())
    }

    /// Pareto distribution function `F(x) = 1 - (x/b + 1)^(-a)` for `x >= 0`.
    pub fn pareto_cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            1.0 - self.pareto_sf(x)
        }
    }

    /// Pareto survival function `(x/b + 1)^(-a)`.
    pub fn pareto_sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            1.0
        } else {
            (x / self.b + 1.0).powf(-self.a)
        }
    }

    /// Mean of the continuous mixture, `p b / (a - 1)`.
    pub fn continuous_mean(&self) -> f64 {
        self.p * self.b / (self.a - 1.0)
    }

    /// Variance of the continuous mixture,
    /// `2 b^2 p / ((a-1)(a-2)) - b^2 p^2 / (a-1)^2`.
    pub fn continuous_variance(&self) -> f64 {
        let (a, b, p) = (self.a, self.b, self.p);
        2.0 * b * b * p / ((a - 1.0) * (a - 2.0)) - b * b * p * p / ((a - 1.0) * (a - 1.0))
    }
}

/// Empirical measure of a claim sample: mass `#{Y_i = x} / u` at each grid
/// point `x`, with support spanning `0..=max(Y_i)` (interior zeros kept).
pub fn empirical_measure(sample: &ClaimSample) -> LatticeDistribution {
    let h = sample.step();
    let max_index = sample
        .values()
        .iter()
        .map(|&v| (v / h).round() as usize)
        .max()
        .expect("sample is nonempty");
    let mut counts = vec![0u64; max_index + 1];
    for &v in sample.values() {
        counts[(v / h).round() as usize] += 1;
    }
    let u = sample.len() as f64;
    let masses = counts.iter().map(|&c| c as f64 / u).collect();
    LatticeDistribution::new(0.0, h, masses).expect("counts normalize exactly")
}

/// Discretize the claim mixture on `step * N_0` with upper-cell assignment:
/// mass `1-p` stays exactly at zero and the Pareto mass on `((k-1)h, kh]`
/// goes to `kh`. The support is truncated at the first `K` with
/// `p * (1 - F(K h)) <= tail_eps`; the residual is folded into the last cell.
pub fn discretize_mixture(spec: &MixtureSpec, tail_eps: f64) -> Result<LatticeDistribution> {
    spec.validate()?;
    if !(tail_eps > 0.0 && tail_eps <= 1e-6) {
        return Err(Error::BadSpec(format!("tail_eps must lie in (0, 1e-6], got {tail_eps}")));
    }
    let h = spec.step;
    let mut masses = vec![1.0 - spec.p];
    let mut prev_sf = 1.0; // Pareto survival at (k-1) h
    loop {
        let k = masses.len();
        let sf = spec.pareto_sf(k as f64 * h);
        if spec.p * sf <= tail_eps {
            // fold the residual tail into this final cell:
            // p (S((k-1)h) - S(kh)) + p S(kh) = p S((k-1)h)
            masses.push(spec.p * prev_sf);
            break;
        }
        masses.push(spec.p * (prev_sf - sf));
        prev_sf = sf;
    }
    LatticeDistribution::new(0.0, h, masses)
}

/// Mean as an exact finite sum over the support.
pub fn mean(d: &LatticeDistribution) -> f64 {
    compensated_sum(d.support().map(|(x, q)| q * x))
}

/// Variance as an exact finite sum (two-pass).
pub fn variance(d: &LatticeDistribution) -> f64 {
    let m = mean(d);
    compensated_sum(d.support().map(|(x, q)| q * (x - m) * (x - m)))
}

/// Absolute central moment `E|X - m|^order` for `order >= 1`.
pub fn abs_central_moment(d: &LatticeDistribution, order: f64) -> Result<f64> {
    if !(order >= 1.0) {
        return Err(Error::DomainError(format!("moment order must be >= 1, got {order}")));
    }
    let m = mean(d);
    Ok(compensated_sum(d.support().map(|(x, q)| q * (x - m).abs().powf(order))))
}

/// Right-continuous distribution function at `x`.
pub fn cdf(d: &LatticeDistribution, x: f64) -> f64 {
    if x < d.offset() {
        return 0.0;
    }
    // index of the largest grid point <= x, with slack for points that sit
    // on the grid up to rounding
    let idx = ((x - d.offset()) / d.step() + GRID_TOL).floor() as usize;
    if idx >= d.len() - 1 {
        return 1.0;
    }
    let c = compensated_sum(d.masses()[..=idx].iter().copied());
    c.min(1.0)
}

/// Left-continuous generalized inverse: the smallest grid point `x` with
/// `F(x) >= alpha`.
pub fn quantile_left(d: &LatticeDistribution, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::DomainError(format!("quantile level must lie in (0,1), got {alpha}")));
    }
    let mut acc = CompensatedSum::new();
    for (j, &q) in d.masses().iter().enumerate() {
        acc.add(q);
        if acc.total() >= alpha {
            return Ok(d.point(j));
        }
    }
    // total mass is 1 within 1e-12; alpha < 1 can still exceed the
    // accumulated value by rounding, in which case the answer is the top point
    Ok(d.max_point())
}

/// Affine image with mean zero and unit variance: offset `(offset - m)/s`,
/// step `step/s`, identical masses.
pub fn standardize(d: &LatticeDistribution) -> Result<LatticeDistribution> {
    let var = variance(d);
    if var <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let m = mean(d);
    let s = var.sqrt();
    LatticeDistribution::new((d.offset() - m) / s, d.step() / s, d.masses().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point() -> LatticeDistribution {
        from_pmf(&[(0.0, 0.5), (10.0, 0.5)]).unwrap()
    }

    #[test]
    fn from_pmf_two_point() {
        let d = two_point();
        assert_eq!(d.offset(), 0.0);
        assert_eq!(d.step(), 10.0);
        assert_eq!(d.masses(), &[0.5, 0.5]);
    }

    #[test]
    fn from_pmf_degenerate_point_mass() {
        let d = from_pmf(&[(0.0, 1.0)]).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.offset(), 0.0);
        assert_eq!(d.masses(), &[1.0]);
    }

    #[test]
    fn from_pmf_rejects_excess_mass() {
        let err = from_pmf(&[(0.0, 0.3), (10.0, 0.3), (20.0, 0.5)]).unwrap_err();
        assert!(matches!(err, Error::BadMass(_)), "expected BadMass, got {err:?}");
    }

    #[test]
    fn from_pmf_rejects_non_equidistant_points() {
        let err = from_pmf(&[(0.0, 0.3), (10.0, 0.3), (25.0, 0.4)]).unwrap_err();
        assert!(matches!(err, Error::NonGridInput(_)));
    }

    #[test]
    fn from_pmf_renormalizes_within_tolerance() {
        let d = from_pmf(&[(0.0, 0.5 + 4e-10), (10.0, 0.5)]).unwrap();
        assert!((d.total_mass() - 1.0).abs() <= INTERNAL_MASS_TOL);
    }

    #[test]
    fn from_pmf_sorts_points() {
        let d = from_pmf(&[(10.0, 0.25), (0.0, 0.5), (20.0, 0.25)]).unwrap();
        assert_eq!(d.offset(), 0.0);
        assert_eq!(d.masses(), &[0.5, 0.25, 0.25]);
    }

    #[test]
    fn empirical_measure_counts() {
        let s = ClaimSample::new(vec![0.0, 0.0, 10.0], 10.0).unwrap();
        let d = empirical_measure(&s);
        assert_eq!(d.masses(), &[2.0 / 3.0, 1.0 / 3.0]);
    }

    #[test]
    fn empirical_measure_single_zero_claim() {
        let s = ClaimSample::new(vec![0.0], 10.0).unwrap();
        let d = empirical_measure(&s);
        assert_eq!(d.masses(), &[1.0]);
        assert_eq!(d.offset(), 0.0);
    }

    #[test]
    fn empirical_measure_keeps_zero_mass_at_origin() {
        let s = ClaimSample::new(vec![10.0, 10.0, 10.0, 20.0], 10.0).unwrap();
        let d = empirical_measure(&s);
        assert_eq!(d.masses(), &[0.0, 0.75, 0.25]);
    }

    #[test]
    fn empirical_measure_mean_is_sample_average() {
        let s = ClaimSample::new(vec![0.0, 10.0, 10.0, 40.0, 30.0], 10.0).unwrap();
        let avg = s.values().iter().sum::<f64>() / s.len() as f64;
        assert!((mean(&empirical_measure(&s)) - avg).abs() <= 1e-12 * avg.abs());
    }

    #[test]
    fn claim_sample_rejects_off_grid_values() {
        let err = ClaimSample::new(vec![0.0, 10.5], 10.0).unwrap_err();
        assert!(matches!(err, Error::NonGridInput(_)));
    }

    #[test]
    fn discretized_mixture_mass_at_zero_is_exact() {
        let spec = MixtureSpec::new(0.1, 3.0, 20.0, 10.0).unwrap();
        let d = discretize_mixture(&spec, 1e-12).unwrap();
        assert_eq!(d.masses()[0], 0.9);
    }

    #[test]
    fn discretized_mixture_first_cell_closed_form() {
        // p * (1 - (10/20 + 1)^-3) = 0.1 * (1 - 1/3.375)
        let spec = MixtureSpec::new(0.1, 3.0, 20.0, 10.0).unwrap();
        let d = discretize_mixture(&spec, 1e-12).unwrap();
        let expected = 0.1 * (1.0 - 1.0 / 3.375);
        assert!((d.masses()[1] - expected).abs() < 1e-15);
    }

    #[test]
    fn discretized_mixture_normalizes() {
        for (a, b) in [(2.1, 11.0), (3.0, 20.0), (6.0, 50.0), (10.0, 90.0)] {
            let spec = MixtureSpec::new(0.1, a, b, 10.0).unwrap();
            let d = discretize_mixture(&spec, 1e-12).unwrap();
            assert!(
                (d.total_mass() - 1.0).abs() <= 1e-12,
                "a={a}: total mass {} off by more than 1e-12",
                d.total_mass()
            );
        }
    }

    #[test]
    fn discretized_mixture_dominates_continuous_cdf() {
        let spec = MixtureSpec::new(0.1, 3.0, 20.0, 10.0).unwrap();
        let d = discretize_mixture(&spec, 1e-12).unwrap();
        for i in 0..400 {
            let x = i as f64 * 2.5;
            let continuous = (1.0 - spec.p) + spec.p * spec.pareto_cdf(x);
            assert!(
                cdf(&d, x) <= continuous + 1e-12,
                "upper-cell rule must not put mass below the continuous law at x={x}"
            );
        }
    }

    #[test]
    fn moments_of_point_mass() {
        let d = LatticeDistribution::point_mass(0.0);
        assert_eq!(mean(&d), 0.0);
        assert_eq!(variance(&d), 0.0);
    }

    #[test]
    fn moments_of_two_point_law() {
        let d = two_point();
        assert_eq!(mean(&d), 5.0);
        assert_eq!(variance(&d), 25.0);
    }

    #[test]
    fn mixture_moments_reach_formula_values_as_h_shrinks() {
        // continuous-mixture values for p=0.1, a=3, b=20: m = 1, s^2 = 39
        let spec = MixtureSpec::new(0.1, 3.0, 20.0, 10.0).unwrap();
        assert!((spec.continuous_mean() - 1.0).abs() < 1e-14);
        assert!((spec.continuous_variance() - 39.0).abs() < 1e-12);
        // the upper-cell rule converges to the formula values as h -> 0
        let fine = MixtureSpec::new(0.1, 3.0, 20.0, 0.01).unwrap();
        let d = discretize_mixture(&fine, 1e-12).unwrap();
        assert!((mean(&d) - 1.0).abs() < 5e-3, "mean {} at h=0.01", mean(&d));
        assert!((variance(&d) - 39.0).abs() / 39.0 < 5e-3, "variance {} at h=0.01", variance(&d));
        // at h = 10 the rule provably inflates the mean by about p*h*(1/2 + ...);
        // the shift is the price of the exact point-mass identity at zero
        let coarse = discretize_mixture(&spec, 1e-12).unwrap();
        let inflated = mean(&coarse);
        assert!(inflated > 1.0 && inflated < 1.0 + spec.p * spec.step, "mean {inflated} at h=10");
    }

    #[test]
    fn cdf_is_a_right_continuous_step_function() {
        let d = two_point();
        assert_eq!(cdf(&d, -1.0), 0.0);
        assert_eq!(cdf(&d, 0.0), 0.5);
        assert_eq!(cdf(&d, 5.0), 0.5);
        assert_eq!(cdf(&d, 10.0), 1.0);
        assert_eq!(cdf(&d, 11.0), 1.0);
    }

    #[test]
    fn quantile_left_picks_smallest_qualifying_point() {
        let d = from_pmf(&[(0.0, 0.5), (10.0, 0.3), (20.0, 0.2)]).unwrap();
        assert_eq!(quantile_left(&d, 0.8).unwrap(), 10.0);
        assert_eq!(quantile_left(&d, 0.80001).unwrap(), 20.0);
        assert_eq!(quantile_left(&d, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn quantile_of_point_mass_is_its_atom() {
        let d = LatticeDistribution::point_mass(7.0);
        for alpha in [0.01, 0.5, 0.99] {
            assert_eq!(quantile_left(&d, alpha).unwrap(), 7.0);
        }
    }

    #[test]
    fn standardize_two_point_law() {
        let d = standardize(&two_point()).unwrap();
        assert!((d.offset() - (-1.0)).abs() < 1e-14);
        assert!((d.step() - 2.0).abs() < 1e-14);
        assert_eq!(d.masses(), &[0.5, 0.5]);
        assert!(mean(&d).abs() < 1e-10);
        assert!((variance(&d) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn standardize_is_idempotent() {
        let d = from_pmf(&[(0.0, 0.2), (10.0, 0.5), (20.0, 0.3)]).unwrap();
        let once = standardize(&d).unwrap();
        let twice = standardize(&once).unwrap();
        assert!((once.offset() - twice.offset()).abs() < 1e-10);
        assert!((once.step() - twice.step()).abs() < 1e-10);
    }

    #[test]
    fn standardize_rejects_point_mass() {
        let err = standardize(&LatticeDistribution::point_mass(0.0)).unwrap_err();
        assert_eq!(err, Error::ZeroVariance);
    }

    #[test]
    fn standardize_preserves_pmf_argmax() {
        let d = from_pmf(&[(0.0, 0.2), (10.0, 0.5), (20.0, 0.3)]).unwrap();
        let z = standardize(&d).unwrap();
        let argmax = |v: &[f64]| {
            v.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap()
        };
        assert_eq!(argmax(d.masses()), argmax(z.masses()));
    }
}
