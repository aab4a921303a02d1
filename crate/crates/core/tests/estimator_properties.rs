//! Behavioral properties of the two premium estimators: equivariance under
//! claim rescaling and on-grid shifts, consistency of the plug-in estimator,
//! and the faster-than-root-n agreement between the two estimators.

use collrisk_core::{
    convolve_n, evaluate, lattice, normal_approx_premium, path_rng, plugin_premium,
    rate_regression, sample_mixture, ClaimSample, LatticeDistribution, MixtureSpec,
    RiskMeasureSpec,
};
use rand::Rng;

fn all_variants() -> Vec<RiskMeasureSpec> {
    vec![
        RiskMeasureSpec::var(0.95).unwrap(),
        RiskMeasureSpec::avar(0.9).unwrap(),
        RiskMeasureSpec::distortion(collrisk_core::DistortionFunction::power(2.0).unwrap())
            .unwrap(),
        RiskMeasureSpec::one_sided_moment(1.0, 2.0).unwrap(),
        RiskMeasureSpec::expectile(0.8).unwrap(),
    ]
}

fn base_sample() -> ClaimSample {
    ClaimSample::new(vec![0.0, 0.0, 10.0, 20.0, 0.0, 50.0, 10.0, 0.0], 10.0).unwrap()
}

#[test]
fn scaling_equivariance() {
    let sample = base_sample();
    for lambda in [0.5, 2.0, 10.0] {
        let rescaled = ClaimSample::new(
            sample.values().iter().map(|&v| v * lambda).collect(),
            sample.step() * lambda,
        )
        .unwrap();
        for measure in all_variants() {
            let a = normal_approx_premium(&sample, 25, &measure).unwrap().premium_per_risk;
            let b = normal_approx_premium(&rescaled, 25, &measure).unwrap().premium_per_risk;
            assert!(
                (b - lambda * a).abs() <= 1e-9 * (1.0 + (lambda * a).abs()),
                "normal approx not homogeneous for {measure:?}"
            );
            let a = plugin_premium(&sample, 25, &measure, 0.0).unwrap().premium_per_risk;
            let b = plugin_premium(&rescaled, 25, &measure, 0.0).unwrap().premium_per_risk;
            assert!(
                (b - lambda * a).abs() <= 1e-9 * (1.0 + (lambda * a).abs()),
                "plug-in not homogeneous for {measure:?}"
            );
        }
    }
}

#[test]
fn shift_equivariance_on_grid() {
    let sample = base_sample();
    let kappa = 30.0;
    let moved = ClaimSample::new(
        sample.values().iter().map(|&v| v + kappa).collect(),
        sample.step(),
    )
    .unwrap();
    for measure in all_variants() {
        let a = normal_approx_premium(&sample, 25, &measure).unwrap().premium_per_risk;
        let b = normal_approx_premium(&moved, 25, &measure).unwrap().premium_per_risk;
        assert!((b - (a + kappa)).abs() <= 1e-9 * (1.0 + a.abs()), "{measure:?}");
        let a = plugin_premium(&sample, 25, &measure, 0.0).unwrap().premium_per_risk;
        let b = plugin_premium(&moved, 25, &measure, 0.0).unwrap().premium_per_risk;
        assert!((b - (a + kappa)).abs() <= 1e-9 * (1.0 + a.abs()), "{measure:?}");
    }
}

/// Draw i.i.d. values from a fixed lattice law by inverting its cdf.
fn draw_from_lattice(d: &LatticeDistribution, count: u32, rng: &mut impl Rng) -> ClaimSample {
    let values = (0..count)
        .map(|_| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut chosen = d.max_point();
            for (x, q) in d.support() {
                acc += q;
                if u <= acc {
                    chosen = x;
                    break;
                }
            }
            chosen
        })
        .collect();
    ClaimSample::new(values, d.step()).unwrap()
}

#[test]
fn plugin_estimator_is_consistent() {
    // median absolute error over 100 seeded paths must fall along
    // n = 100 -> 400 -> 1600 with u = n
    let mu = LatticeDistribution::new(0.0, 10.0, vec![0.5, 0.3, 0.2]).unwrap();
    let measure = RiskMeasureSpec::avar(0.9).unwrap();
    let mut medians = Vec::new();
    for n in [100u32, 400, 1600] {
        let reference =
            evaluate(&measure, &convolve_n(&mu, n, 1e-12).unwrap().dist).unwrap() / n as f64;
        let mut errors: Vec<f64> = (0..100u64)
            .map(|path| {
                let mut rng = path_rng(20_24, path);
                let sample = draw_from_lattice(&mu, n, &mut rng);
                let premium =
                    plugin_premium(&sample, n, &measure, 1e-12).unwrap().premium_per_risk;
                (premium - reference).abs()
            })
            .collect();
        errors.sort_by(f64::total_cmp);
        medians.push(0.5 * (errors[49] + errors[50]));
    }
    assert!(
        medians[0] > medians[1] && medians[1] > medians[2],
        "median absolute error must decrease: {medians:?}"
    );
}

#[test]
fn estimators_agree_faster_than_root_n() {
    // |plugin - normal approx| per path is O(n^(-1/2 - gamma beta)); for the
    // light-tail mixture with VaR (beta = 1, gamma = 1/2) that is O(1/n).
    // The fitted decay over a dyadic n grid must stay clearly below -1/2.
    let mixture = MixtureSpec::new(0.1, 10.0, 90.0, 10.0).unwrap();
    let measure = RiskMeasureSpec::var(0.99).unwrap();
    let n_grid = [50u32, 100, 200, 400, 800];
    let paths = 50u64;
    let mut points = Vec::new();
    for (i, &n) in n_grid.iter().enumerate() {
        let mut total = 0.0;
        for path in 0..paths {
            let mut rng = path_rng(7, path * 16 + i as u64);
            let sample = sample_mixture(&mixture, n, &mut rng).unwrap();
            let a = plugin_premium(&sample, n, &measure, 1e-12).unwrap().premium_per_risk;
            let b = normal_approx_premium(&sample, n, &measure).unwrap().premium_per_risk;
            total += (a - b).abs();
        }
        points.push((n, total / paths as f64));
    }
    let (slope, _) = rate_regression(&points).unwrap();
    assert!(slope <= -0.6, "mean |plugin - normal| decays with slope {slope}, points {points:?}");
}

#[test]
fn premium_report_carries_sample_and_measure_data() {
    let sample = base_sample();
    let measure = RiskMeasureSpec::var(0.99).unwrap();
    let r = plugin_premium(&sample, 40, &measure, 1e-12).unwrap();
    assert_eq!(r.n, 40);
    assert_eq!(r.u, sample.len() as u32);
    let (m, s) = collrisk_core::sample_moments(&sample);
    assert_eq!(r.m_hat, m);
    assert_eq!(r.s_hat, s);
    assert!(r.ci_low <= r.ci_high);
    assert!((lattice::mean(&collrisk_core::empirical_measure(&sample)) - m).abs() < 1e-12);
}
