use mlspec_core::theory::{asymptotic_error, nu_basis, McConfig};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

/// `P(μ + f + e_i ≥ 0, i < K)` by composite Simpson quadrature over `f`.
fn orthant_quadrature(mu: f64, k: usize) -> f64 {
    let z = Normal::standard();
    let (a, b, m) = (-12.0, 12.0, 20_000);
    let h = (b - a) / m as f64;
    let f = |x: f64| z.pdf(x) * z.cdf(mu + x).powi(k as i32 - 1);
    let mut s = f(a) + f(b);
    for i in 1..m {
        let x = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

#[test]
fn quadrature_oracle_at_threshold() {
    assert!((orthant_quadrature(0.0, 3) - 1.0 / 3.0).abs() < 1e-10);
    assert!((orthant_quadrature(0.0, 2) - 0.5).abs() < 1e-10);
}

#[test]
fn monte_carlo_matches_quadrature() {
    let mc = McConfig {
        samples: 1_000_000,
        seed: 11,
    };
    // Just above the threshold the orthant probability is 1/3.
    let at = asymptotic_error(3.0 + 1e-12, 3, &mc).unwrap();
    assert!(
        (at.value - 2.0 / 3.0).abs() <= 4.0 * at.std_error.max(1e-4),
        "{at:?}"
    );
    for (tau, k) in [(4.0, 3), (6.0, 3), (9.0, 4), (12.0, 5)] {
        let e = asymptotic_error(tau, k, &mc).unwrap();
        let oracle = 1.0 - orthant_quadrature((tau - k as f64).sqrt(), k);
        assert!(
            (e.value - oracle).abs() <= 4.0 * e.std_error,
            "tau {tau} K {k}: {e:?} vs {oracle}"
        );
    }
}

#[test]
fn error_decreases_in_tau() {
    let mc = McConfig {
        samples: 50_000,
        seed: 2,
    };
    for k in [2usize, 3, 4] {
        let mut last = f64::INFINITY;
        for i in 0..40 {
            let tau = 0.5 * i as f64;
            let e = asymptotic_error(tau, k, &mc).unwrap().value;
            assert!(e <= last, "K {k} tau {tau}");
            assert!(e <= 1.0 - 1.0 / k as f64);
            last = e;
        }
    }
}

#[test]
fn nu_basis_is_orthonormal_and_centered() {
    for k in 2..=8 {
        let nu = nu_basis(k).unwrap();
        for a in 0..k - 1 {
            let col = nu.column(a);
            assert!(col.iter().sum::<f64>().abs() < 1e-12);
            for b in 0..k - 1 {
                let d: f64 = col.iter().zip(nu.column(b)).map(|(x, y)| x * y).sum();
                assert!((d - if a == b { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }
}
