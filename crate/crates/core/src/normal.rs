#![allow(clippy::excessive_precision)]

//! Standard normal primitives and the constant `R_rho(N(0,1))` that every
//! estimator reduces to for cash-additive, positively homogeneous measures.

use crate::error::{Error, Result};
use crate::risk::{DistortionFunction, RiskMeasureSpec};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Cody-style rational approximation of erf on |x| <= 0.46875.
const ERF_A: [f64; 5] = [
    3.16112374387056560e0,
    1.13864154151050156e2,
    3.77485237685302021e2,
    3.20937758913846947e3,
    1.85777706184603153e-1,
];
const ERF_B: [f64; 4] = [
    2.36012909523441209e1,
    2.44024637934444173e2,
    1.28261652607737228e3,
    2.84423683343917062e3,
];
/// erfc on 0.46875 < |x| <= 4.
const ERF_C: [f64; 9] = [
    5.64188496988670089e-1,
    8.88314979438837594e0,
    6.61191906371416295e1,
    2.98635138197400131e2,
    8.81952221241769090e2,
    1.71204761263407058e3,
    2.05107837782607147e3,
    1.23033935479799725e3,
    2.15311535474403846e-8,
];
const ERF_D: [f64; 8] = [
    1.57449261107098347e1,
    1.17693950891312499e2,
    5.37181101862009858e2,
    1.62138957456669019e3,
    3.29079923573345963e3,
    4.36261909014324716e3,
    3.43936767414372164e3,
    1.23033935480374942e3,
];
/// erfc on |x| > 4.
const ERF_P: [f64; 6] = [
    3.05326634961232344e-1,
    3.60344899949804439e-1,
    1.25781726111229246e-1,
    1.60837851487422766e-2,
    6.58749161529837803e-4,
    1.63153871373020978e-2,
];
const ERF_Q: [f64; 5] = [
    2.56852019228982242e0,
    1.87295284992346047e0,
    5.27905102951428412e-1,
    6.05183413124413191e-2,
    2.33520497626869185e-3,
];
const ONE_OVER_SQRT_PI: f64 = 5.641_895_835_477_563e-1;

fn erf_small(x: f64) -> f64 {
    let z = x * x;
    let mut num = ERF_A[4] * z;
    let mut den = z;
    for i in 0..3 {
        num = (num + ERF_A[i]) * z;
        den = (den + ERF_B[i]) * z;
    }
    x * (num + ERF_A[3]) / (den + ERF_B[3])
}

/// Split exp(-y^2) as exp(-ysq^2) * exp(-del) with ysq a 1/16 multiple;
/// this recovers the low bits the squared argument would otherwise lose.
fn exp_neg_sq(y: f64) -> f64 {
    let ysq = (y * 16.0).trunc() / 16.0;
    let del = (y - ysq) * (y + ysq);
    (-ysq * ysq).exp() * (-del).exp()
}

fn erfc_mid(y: f64) -> f64 {
    let mut num = ERF_C[8] * y;
    let mut den = y;
    for i in 0..7 {
        num = (num + ERF_C[i]) * y;
        den = (den + ERF_D[i]) * y;
    }
    exp_neg_sq(y) * (num + ERF_C[7]) / (den + ERF_D[7])
}

fn erfc_tail(y: f64) -> f64 {
    if y >= 26.6 {
        return 0.0;
    }
    let z = 1.0 / (y * y);
    let mut num = ERF_P[5] * z;
    let mut den = z;
    for i in 0..4 {
        num = (num + ERF_P[i]) * z;
        den = (den + ERF_Q[i]) * z;
    }
    let r = z * (num + ERF_P[4]) / (den + ERF_Q[4]);
    exp_neg_sq(y) * (ONE_OVER_SQRT_PI - r) / y
}

/// Complementary error function, relative accuracy close to machine epsilon.
pub fn erfc(x: f64) -> f64 {
    let y = x.abs();
    if y <= 0.46875 {
        // erf_small is odd, so this covers both signs
        return 1.0 - erf_small(x);
    }
    let r = if y <= 4.0 { erfc_mid(y) } else { erfc_tail(y) };
    if x < 0.0 {
        2.0 - r
    } else {
        r
    }
}

/// Standard normal distribution function, absolute error below 1e-14.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal survival function `1 - Phi(x)`, accurate in the far tail.
pub fn std_normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// Standard normal density.
pub fn std_normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Acklam's rational initial approximation for the normal quantile.
fn quantile_initial(p: f64) -> f64 {
    const A: [f64; 6] = [
        -39.6968302866538,
        220.946098424521,
        -275.928510446969,
        138.357751867269,
        -30.6647980661472,
        2.50662827745924,
    ];
    const B: [f64; 5] = [
        -54.4760987982241,
        161.585836858041,
        -155.698979859887,
        66.8013118877197,
        -13.2806815528857,
    ];
    const C: [f64; 6] = [
        -7.78489400243029e-3,
        -0.322396458041136,
        -2.40075827716184,
        -2.54973253934373,
        4.37466414146497,
        2.93816398269878,
    ];
    const D: [f64; 4] = [7.78469570904146e-3, 0.32246712907004, 2.445134137143, 3.75440866190742];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Standard normal quantile: rational initial value polished by one Newton
/// step against the high-accuracy distribution function.
pub fn std_normal_quantile(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::DomainError(format!("quantile level must lie in (0,1), got {alpha}")));
    }
    let x = quantile_initial(alpha);
    // residual in the smaller tail avoids cancellation near alpha -> 1
    let residual = if alpha > 0.5 { std_normal_sf(x) - (1.0 - alpha) } else { std_normal_cdf(x) - alpha };
    let sign = if alpha > 0.5 { 1.0 } else { -1.0 };
    Ok(x + sign * residual / std_normal_pdf(x))
}

/// How `risk_of_std_normal` obtained its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvaluationMethod {
    ClosedForm,
    Quadrature,
    RootFind,
}

/// The constant `R_rho(N(0,1))` with its provenance and error bound.
#[derive(Debug, Clone)]
pub struct NormalRiskConstant {
    pub measure: RiskMeasureSpec,
    pub value: f64,
    pub method: EvaluationMethod,
    pub abs_err_bound: f64,
}

/// Gaussian tails beyond |x| = 12 are below 1e-32 and contribute nothing at
/// the 1e-8 quadrature tolerance.
const QUAD_BOUND: f64 = 12.0;
const QUAD_TOL: f64 = 1e-9;

fn simpson(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
}

fn adaptive_step(
    f: &impl Fn(f64) -> f64,
    ends: ((f64, f64), (f64, f64)),
    mid: (f64, f64),
    whole: f64,
    tol: f64,
    depth: u32,
) -> (f64, f64) {
    let ((a, fa), (b, fb)) = ends;
    let (m, fm) = mid;
    let (left, lm, flm) = simpson(f, a, fa, m, fm);
    let (right, rm, frm) = simpson(f, m, fm, b, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        (left + right + delta / 15.0, delta.abs() / 15.0)
    } else {
        let (lv, le) =
            adaptive_step(f, ((a, fa), (m, fm)), (lm, flm), left, 0.5 * tol, depth - 1);
        let (rv, re) =
            adaptive_step(f, ((m, fm), (b, fb)), (rm, frm), right, 0.5 * tol, depth - 1);
        (lv + rv, le + re)
    }
}

/// Adaptive Simpson quadrature with an absolute-error budget.
fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<(f64, f64)> {
    let (fa, fb) = (f(a), f(b));
    let (whole, m, fm) = simpson(&f, a, fa, b, fb);
    let (value, err) = adaptive_step(&f, ((a, fa), (b, fb)), (m, fm), whole, tol, 40);
    if err > tol * 10.0 {
        return Err(Error::QuadratureFailure { requested: tol, achieved: err });
    }
    Ok((value, err))
}

/// Distortion risk measure of N(0,1) by quadrature of
/// `-int_-inf^0 g(Phi) dx + int_0^inf (1 - g(Phi)) dx` truncated at |x| = 12.
fn distortion_of_std_normal(g: &DistortionFunction) -> Result<(f64, f64)> {
    let (neg, err_neg) =
        integrate(|x| g.eval(std_normal_cdf(x)), -QUAD_BOUND, 0.0, QUAD_TOL)?;
    let (pos, err_pos) =
        integrate(|x| 1.0 - g.eval(std_normal_cdf(x)), 0.0, QUAD_BOUND, QUAD_TOL)?;
    Ok((pos - neg, err_neg + err_pos + 1e-12))
}

/// Positive part of the Gaussian expectile first-order condition:
/// `E[(Z - m)^+] = phi(m) - m (1 - Phi(m))`.
fn gauss_upper_mean(m: f64) -> f64 {
    std_normal_pdf(m) - m * std_normal_sf(m)
}

/// `E[(m - Z)^+] = m Phi(m) + phi(m)`.
fn gauss_lower_mean(m: f64) -> f64 {
    m * std_normal_cdf(m) + std_normal_pdf(m)
}

/// Evaluate a risk measure at the standard normal distribution.
pub fn risk_of_std_normal(measure: &RiskMeasureSpec) -> Result<NormalRiskConstant> {
    measure.validate()?;
    let (value, method, abs_err_bound) = match measure {
        RiskMeasureSpec::ValueAtRisk { alpha } => {
            (std_normal_quantile(*alpha)?, EvaluationMethod::ClosedForm, 1e-13)
        }
        RiskMeasureSpec::AverageValueAtRisk { alpha } => {
            let q = std_normal_quantile(*alpha)?;
            (std_normal_pdf(q) / (1.0 - alpha), EvaluationMethod::ClosedForm, 1e-12)
        }
        RiskMeasureSpec::Distortion { g } => {
            let (value, err) = distortion_of_std_normal(g)?;
            (value, EvaluationMethod::Quadrature, err.max(1e-10))
        }
        RiskMeasureSpec::OneSidedMoment { a, p } => {
            let (upper_p, err) =
                integrate(|x| x.powf(*p) * std_normal_pdf(x), 0.0, QUAD_BOUND, QUAD_TOL)?;
            // mean of N(0,1) is zero, so only the loading term remains
            (a * upper_p.powf(1.0 / p), EvaluationMethod::Quadrature, err.max(1e-10))
        }
        RiskMeasureSpec::Expectile { alpha } => {
            if (alpha - 0.5).abs() < 1e-15 {
                (0.0, EvaluationMethod::RootFind, 0.0)
            } else {
                let foc = |m: f64| alpha * gauss_upper_mean(m) - (1.0 - alpha) * gauss_lower_mean(m);
                let value = bisect(foc, -15.0, 15.0, 1e-12)?;
                (value, EvaluationMethod::RootFind, 1e-10)
            }
        }
    };
    if abs_err_bound > 1e-7 {
        return Err(Error::QuadratureFailure { requested: 1e-7, achieved: abs_err_bound });
    }
    Ok(NormalRiskConstant { measure: measure.clone(), value, method, abs_err_bound })
}

/// Bracketing root-find on a monotone function with a sign change in [a, b]:
/// bisection down to `tol`, then one secant step inside the final bracket.
/// For piecewise-linear objectives whose final bracket is knot-free the
/// secant step lands on the root exactly.
pub(crate) fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NonConvergence(format!(
            "no sign change on [{a}, {b}] (f(a)={fa}, f(b)={fb})"
        )));
    }
    let decreasing = fa > 0.0;
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if (fm > 0.0) == decreasing {
            a = m;
            fa = fm;
        } else {
            b = m;
            fb = fm;
        }
    }
    if fb != fa {
        let secant = a - fa * (b - a) / (fb - fa);
        if secant.is_finite() && secant >= a && secant <= b {
            return Ok(secant);
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::risk::RiskMeasureSpec;

    /// Independent oracle: erf by its Maclaurin series, trustworthy to ~1e-13
    /// for |x| <= 3 where the alternating terms stay tame.
    fn erf_series(x: f64) -> f64 {
        let mut term = x;
        let mut sum = x;
        for n in 1..200 {
            let n = n as f64;
            term *= -x * x / n;
            let contribution = term / (2.0 * n + 1.0);
            sum += contribution;
            if contribution.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum * 2.0 * ONE_OVER_SQRT_PI
    }

    fn cdf_series(x: f64) -> f64 {
        0.5 * (1.0 + erf_series(x / SQRT_2))
    }

    #[test]
    fn cdf_matches_series_oracle() {
        for i in 0..=600 {
            let x = -3.0 + i as f64 * 0.01;
            let got = std_normal_cdf(x);
            let want = cdf_series(x);
            assert!((got - want).abs() < 1e-12, "cdf({x}) = {got}, series oracle {want}");
        }
    }

    #[test]
    fn cdf_known_points() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        // reference values to 15 digits
        assert!((std_normal_cdf(1.0) - 0.841344746068543).abs() < 1e-13);
        assert!((std_normal_cdf(2.0) - 0.977249868051821).abs() < 1e-13);
        assert!((std_normal_sf(5.0) - 2.866515718791939e-7).abs() < 1e-17);
        assert!((std_normal_cdf(-1.0) - 0.158655253931457).abs() < 1e-13);
    }

    #[test]
    fn cdf_tail_brackets() {
        // phi(x) (1/x - 1/x^3) < 1 - Phi(x) < phi(x)/x for x > 0
        for x in [4.0, 5.0, 8.0, 10.0] {
            let sf = std_normal_sf(x);
            let pdf = std_normal_pdf(x);
            assert!(sf < pdf / x, "upper tail bound violated at {x}");
            assert!(sf > pdf * (1.0 / x - 1.0 / (x * x * x)), "lower tail bound violated at {x}");
        }
    }

    #[test]
    fn quantile_by_series_bisection() {
        // independent route: bisect the series-based cdf
        let mut lo = 2.0;
        let mut hi = 3.0;
        for _ in 0..60 {
            let m = 0.5 * (lo + hi);
            if cdf_series(m) < 0.99 {
                lo = m;
            } else {
                hi = m;
            }
        }
        let oracle = 0.5 * (lo + hi);
        let got = std_normal_quantile(0.99).unwrap();
        assert!((got - oracle).abs() < 1e-10, "quantile(0.99) = {got}, oracle {oracle}");
        assert!((got - 2.3263479).abs() < 1e-6);
    }

    #[test]
    fn quantile_symmetry_and_midpoint() {
        assert_eq!(std_normal_quantile(0.5).unwrap(), 0.0);
        for alpha in [0.01, 0.1, 0.25, 0.4] {
            let lower = std_normal_quantile(alpha).unwrap();
            let upper = std_normal_quantile(1.0 - alpha).unwrap();
            assert!((lower + upper).abs() < 1e-12, "asymmetric quantiles at {alpha}");
        }
    }

    #[test]
    fn quantile_round_trip() {
        for i in 1..100 {
            let alpha = i as f64 / 100.0;
            let q = std_normal_quantile(alpha).unwrap();
            assert!(
                (std_normal_cdf(q) - alpha).abs() <= 1e-10,
                "round trip off at alpha={alpha}"
            );
        }
    }

    #[test]
    fn quantile_rejects_bad_levels() {
        assert!(std_normal_quantile(0.0).is_err());
        assert!(std_normal_quantile(1.0).is_err());
        assert!(std_normal_quantile(-0.3).is_err());
    }

    #[test]
    fn var_constant_is_the_quantile() {
        let c = risk_of_std_normal(&RiskMeasureSpec::var(0.99).unwrap()).unwrap();
        assert!((c.value - 2.3263479).abs() < 1e-6);
        assert_eq!(c.method, EvaluationMethod::ClosedForm);
    }

    #[test]
    fn avar_closed_form_vs_distortion_quadrature() {
        for alpha in [0.9, 0.95, 0.99, 0.995] {
            let closed = risk_of_std_normal(&RiskMeasureSpec::avar(alpha).unwrap()).unwrap();
            let g = DistortionFunction::avar_tail(alpha).unwrap();
            let quad =
                risk_of_std_normal(&RiskMeasureSpec::Distortion { g }).unwrap();
            assert!(
                (closed.value - quad.value).abs() < 1e-7,
                "alpha={alpha}: closed {} vs quadrature {}",
                closed.value,
                quad.value
            );
        }
        let c = risk_of_std_normal(&RiskMeasureSpec::avar(0.99).unwrap()).unwrap();
        assert!((c.value - 2.6652142).abs() < 1e-6);
    }

    #[test]
    fn expectile_at_half_is_zero() {
        let c = risk_of_std_normal(&RiskMeasureSpec::expectile(0.5).unwrap()).unwrap();
        assert_eq!(c.value, 0.0);
    }

    #[test]
    fn one_sided_second_moment_closed_value() {
        // E[(Z^+)^2] = 1/2 by symmetry, so the constant is 1/sqrt(2)
        let c = risk_of_std_normal(&RiskMeasureSpec::one_sided_moment(1.0, 2.0).unwrap()).unwrap();
        assert!((c.value - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-8);
    }

    #[test]
    fn var_monotone_in_alpha_and_dominated_by_avar() {
        let mut last = f64::NEG_INFINITY;
        for i in 1..=50 {
            let alpha = i as f64 / 51.0;
            let var = risk_of_std_normal(&RiskMeasureSpec::var(alpha).unwrap()).unwrap().value;
            let avar = risk_of_std_normal(&RiskMeasureSpec::avar(alpha).unwrap()).unwrap().value;
            assert!(var > last, "VaR must be strictly increasing in alpha");
            assert!(avar >= var, "AVaR must dominate VaR at alpha={alpha}");
            last = var;
        }
    }

    #[test]
    fn expectile_constant_solves_its_equation() {
        for alpha in [0.6, 0.8, 0.95] {
            let c = risk_of_std_normal(&RiskMeasureSpec::expectile(alpha).unwrap()).unwrap();
            let m = c.value;
            let lhs = alpha * gauss_upper_mean(m);
            let rhs = (1.0 - alpha) * gauss_lower_mean(m);
            assert!((lhs - rhs).abs() < 1e-10, "first-order condition violated at {alpha}");
        }
    }
}
