use fracdiff_core::mlf::{mlf_e_alpha_1, mlf_eval, Branch, MittagLeffler, MlfParams};
use fracdiff_core::Error;
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}

fn params(alpha: f64, beta: f64) -> MlfParams {
    MlfParams::new(alpha, beta).unwrap()
}

/// Rows `alpha,beta,z,value` produced by `tests/data/mlf_reference.py`.
fn reference_rows() -> Vec<(f64, f64, f64, f64)> {
    include_str!("data/mlf_reference.csv")
        .lines()
        .skip(1)
        .map(|line| {
            let f: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
            (f[0], f[1], f[2], f[3])
        })
        .collect()
}

#[test]
fn matches_high_precision_reference_table() {
    let mut worst = (0.0, 0.0, 0.0, 0.0);
    for (alpha, beta, z, expected) in reference_rows() {
        let got = mlf_eval(params(alpha, beta), z)
            .unwrap_or_else(|e| panic!("alpha={alpha} beta={beta} z={z}: {e}"));
        let err = rel(got, expected);
        if err > worst.0 {
            worst = (err, alpha, beta, z);
        }
    }
    assert!(worst.0 <= 1e-12, "worst relative error {worst:?}");
}

#[test]
fn frozen_examples() {
    assert_eq!(mlf_eval(params(0.5, 1.0), 0.0).unwrap(), 1.0);
    assert!(
        rel(
            mlf_eval(params(1.0, 1.0), 1.0).unwrap(),
            std::f64::consts::E
        ) < 1e-15
    );
    assert!(
        rel(
            mlf_eval(params(0.5, 1.0), -1.0).unwrap(),
            0.42758357615580705
        ) < 1e-13
    );
    // 1/sqrt(pi) - 4 e^16 erfc(4)
    assert!(
        rel(
            mlf_eval(params(0.5, 0.5), -4.0).unwrap(),
            0.016191753047510727
        ) < 1e-13
    );
    assert_eq!(mlf_e_alpha_1(0.5, 0.0).unwrap(), 1.0);
    let far = mlf_e_alpha_1(0.75, 1e6).unwrap();
    assert!(far > 0.0 && far <= 1e-5);
    // leading asymptotic term x^{-1}/Γ(1-α)
    let lead = 1e-6 / statrs::function::gamma::gamma(0.25);
    assert!(rel(far, lead) < 1e-3);
}

#[test]
fn exponential_consistency() {
    let p = params(1.0, 1.0);
    for i in 0..=3500 {
        let z = -30.0 + i as f64 * 0.01;
        let v = mlf_eval(p, z).unwrap();
        assert!((v - z.exp()).abs() <= 1e-12 * z.abs().exp(), "z={z}");
    }
}

#[test]
fn half_order_matches_scaled_erfc() {
    let m = MittagLeffler::new(params(0.5, 1.0));
    for i in 0..=1000 {
        let x = i as f64 * 0.01;
        let expected = (x * x).exp() * libm::erfc(x);
        let got = m.eval(-x).unwrap();
        assert!(rel(got, expected) <= 1e-10, "x={x}: {got} vs {expected}");
    }
}

#[test]
fn normalization_at_zero() {
    for &alpha in &[0.05, 0.3, 0.5, 0.77, 1.0] {
        for &beta in &[0.1, 0.5, 1.0, 1.7, 3.0, 7.5] {
            let g = statrs::function::gamma::gamma(beta);
            let v = mlf_eval(params(alpha, beta), 0.0).unwrap();
            assert!((v * g - 1.0).abs() <= 1e-14, "alpha={alpha} beta={beta}");
        }
    }
}

#[test]
fn decay_factor_is_positive_and_nonincreasing() {
    for &alpha in &[0.1, 0.25, 0.5, 0.75, 0.9, 0.99] {
        let m = MittagLeffler::new(params(alpha, 1.0));
        let mut prev = 1.0;
        for i in 0..=1200 {
            // logarithmic sampling of [1e-6, 1e6]
            let x = 10f64.powf(-6.0 + i as f64 * 0.01);
            let v = m.eval(-x).unwrap();
            assert!(
                v > 0.0 && v <= prev,
                "alpha={alpha} x={x}: {v} after {prev}"
            );
            prev = v;
        }
    }
}

#[test]
fn series_and_asymptotic_agree_on_overlap_band() {
    for &alpha in &[0.1, 0.25, 0.5, 0.75, 0.9] {
        for &beta in &[alpha, 1.0, 2.0] {
            let m = MittagLeffler::new(params(alpha, beta));
            // band just above the branch switch at y = 30
            for i in 0..=32 {
                let y = 30.0 + i as f64 * 0.25;
                let z = -y.powf(alpha);
                let s = m.series(z);
                let a = m.asymptotic(z);
                assert!(
                    rel(s.value, a.value) <= 1e-10,
                    "alpha={alpha} beta={beta} y={y}: {} vs {}",
                    s.value,
                    a.value
                );
            }
        }
    }
}

#[test]
fn branch_selection_reports_estimates() {
    let m = MittagLeffler::new(params(0.5, 1.0));
    let near = m.evaluate(-0.5).unwrap();
    assert_eq!(near.branch, Branch::Series);
    let far = m.evaluate(-100.0).unwrap();
    assert_eq!(far.branch, Branch::Asymptotic);
    assert!(near.error_estimate <= 1e-12 && far.error_estimate <= 1e-12);
    let e = m.extended_series(-6.0);
    assert!(rel(e.value, m.series(-6.0).value) < 1e-14);
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(matches!(MlfParams::new(1.5, 1.0), Err(Error::Parameter(_))));
    assert!(matches!(
        MlfParams::new(0.5, -1.0),
        Err(Error::Parameter(_))
    ));
    assert!(matches!(
        mlf_eval(params(0.5, 1.0), f64::INFINITY),
        Err(Error::Parameter(_))
    ));
    assert!(matches!(
        mlf_eval(params(0.5, 1.0), 100.0),
        Err(Error::OutOfRange(_))
    ));
}

fn derivative_case(alpha: f64, mu: f64, t: f64) {
    let e1 = MittagLeffler::new(params(alpha, 1.0));
    let ea = MittagLeffler::new(params(alpha, alpha));
    let f = |s: f64| e1.eval(-mu * s.powf(alpha)).unwrap();
    let h = 1e-4 * t;
    // fourth-order central difference
    let fd = (f(t - 2.0 * h) - 8.0 * f(t - h) + 8.0 * f(t + h) - f(t + 2.0 * h)) / (12.0 * h);
    let exact = -mu * t.powf(alpha - 1.0) * ea.eval(-mu * t.powf(alpha)).unwrap();
    assert!(
        rel(fd, exact) <= 1e-6,
        "alpha={alpha} mu={mu} t={t}: {fd} vs {exact}"
    );
}

#[test]
fn derivative_identity_on_grid() {
    for &alpha in &[0.25, 0.5, 0.75] {
        for &mu in &[0.5, 10.0, 400.0] {
            for &t in &[0.01, 0.3, 1.0, 5.0] {
                derivative_case(alpha, mu, t);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn derivative_identity_random(alpha_idx in 0usize..3, mu in 0.1f64..200.0, t in 0.02f64..3.0) {
        derivative_case([0.3, 0.6, 0.85][alpha_idx], mu, t);
    }

    #[test]
    fn decay_factor_bounds(alpha_idx in 0usize..4, x in 0.0f64..1e6) {
        let alpha = [0.2, 0.45, 0.7, 0.95][alpha_idx];
        let v = mlf_e_alpha_1(alpha, x).unwrap();
        prop_assert!(v > 0.0 && v <= 1.0);
        let w = mlf_e_alpha_1(alpha, x * 1.01 + 1e-9).unwrap();
        prop_assert!(w <= v);
    }
}
