//! Cross-validation of the kernel quadrature against the tabulated closed
//! forms, plus exact asymptotic limits of the defining integrals derived
//! independently through Hankel/Laplace transform identities.

use tst_core::env::{
    classify_regime, f_closed_form_gated, f_quadrature, phi_closed_form, phi_quadrature,
    CausalFlag, EnvironmentSpec, RegimeGate,
};

const PI: f64 = std::f64::consts::PI;
const TOL: f64 = 1e-8;

fn env(s: f64, beta: f64, delta: f64, v: f64, lam: f64, w0: f64) -> EnvironmentSpec {
    EnvironmentSpec::new(s, beta, delta, v, lam, w0, 1e-3).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// `F(delta; 0; 0)` row: quadrature within 5% of the closed forms at three
/// cutoff margins per spectral class.
#[test]
fn f_zero_temperature_row_agreement() {
    for s in [0.5, 0.0, -0.5] {
        for lam in [1e3, 3e3, 1e4] {
            let e = env(s, 0.0, 1.0, 1.0, lam, 1.0);
            let closed = f_closed_form_gated(&e, 0.0, false, &RegimeGate::default())
                .unwrap()
                .value;
            let quad = f_quadrature(&e, 0.0, false, TOL).unwrap();
            assert!(
                rel(quad.value, closed) < 0.05,
                "s={s} lam={lam}: {} vs {closed}",
                quad.value
            );
            assert!(quad.est_error <= TOL);
        }
    }
}

/// Thermal on-site row at 10x-margin temperature ratios.
#[test]
fn f_thermal_onsite_row_agreement() {
    for s in [0.5, 0.0, -0.5] {
        for bt in [0.01, 0.005, 0.002] {
            let e = env(s, bt, 1.0, 1.0, 100.0 / bt, 1.0);
            let closed = f_closed_form_gated(&e, 0.0, true, &RegimeGate::default())
                .unwrap()
                .value;
            let quad = f_quadrature(&e, 0.0, true, TOL).unwrap();
            assert!(
                rel(quad.value, closed) < 0.05,
                "s={s} beta={bt}: {} vs {closed}",
                quad.value
            );
        }
    }
}

/// Thermal finite-separation row, inside and outside the light cone.
#[test]
fn f_thermal_separated_row_agreement() {
    let bt = 0.005;
    for s in [0.5, 0.0, -0.5] {
        for b in [0.1, 0.3, 3.0] {
            let e = env(s, bt, 1.0, 1.0, 1e4, 1.0);
            let closed = f_closed_form_gated(&e, b, true, &RegimeGate::default())
                .unwrap()
                .value;
            let quad = f_quadrature(&e, b, true, TOL).unwrap();
            assert!(
                rel(quad.value, closed) < 0.05,
                "s={s} r={b}: {} vs {closed}",
                quad.value
            );
        }
    }
}

/// Inside the light cone the magnitude of the phase kernel matches the
/// tabulated form for the s = +1/2 column once the cutoff term is negligible.
#[test]
fn phi_super_ohmic_magnitude_agreement() {
    for b in [0.3, 0.5] {
        let e = env(0.5, 0.0, 1.0, 1.0, 1e4, 1.0);
        let closed = phi_closed_form(&e, b).unwrap().value;
        let quad = phi_quadrature(&e, b, TOL).unwrap();
        assert!(
            rel(quad.value.abs(), closed) < 0.05,
            "r={b}: |{}| vs {closed}",
            quad.value
        );
    }
}

/// Light-cone gating: the tabulated phase kernel is exactly zero outside for
/// the power-law columns, and the integral itself decays to a negligible
/// remnant there.
#[test]
fn phi_light_cone_gating() {
    let inside_scale = phi_closed_form(&env(0.5, 0.0, 1.0, 1.0, 1e4, 1.0), 0.5)
        .unwrap()
        .value;
    for s in [0.5, -0.5] {
        let e = env(s, 0.0, 1.0, 1.0, 1e3, 1.0);
        for b in [1.5, 2.0, 10.0] {
            assert_eq!(phi_closed_form(&e, b).unwrap().value, 0.0);
            let quad = phi_quadrature(&e, b, TOL).unwrap();
            assert!(
                quad.value.abs() < 0.01 * inside_scale,
                "s={s} r={b}: {}",
                quad.value
            );
            assert_eq!(
                classify_regime(&e, b).causal_flag,
                CausalFlag::Spacelike
            );
        }
    }
    // the s = 0 column has no hard gate, only an arcsin branch
    let e = env(0.0, 0.0, 1.0, 1.0, 1e4, 1.0);
    assert!((phi_closed_form(&e, 2.0).unwrap().value - (0.5f64).asin() / PI).abs() < 1e-12);
}

/// Exact limits of the phase integral, derived independently:
///
/// * s = +1/2: `-(1/pi) / sqrt(1 - b^2)` inside the cone,
/// * s =  0:   `(1/pi) (1/b - pi/2)` inside, `(1/pi)(1/b - asin(1/b))` outside,
/// * s = -1/2: `(1/pi) (acosh(1/b) - sqrt(1 - b^2))` inside, 0 outside,
///
/// at unit `v = delta = omega0` (all in units of the light-cone radius).
#[test]
fn phi_quadrature_matches_derived_limits() {
    let check = |s: f64, b: f64, want: f64, tol: f64| {
        let e = env(s, 0.0, 1.0, 1.0, 1e4, 1.0);
        let got = phi_quadrature(&e, b, TOL).unwrap().value;
        assert!(
            (got - want).abs() <= tol * want.abs().max(0.02),
            "s={s} b={b}: {got} vs {want}"
        );
    };
    for b in [0.3, 0.6] {
        let u = (1.0 - b * b as f64).sqrt();
        check(0.5, b, -1.0 / (PI * u), 0.02);
        check(0.0, b, (1.0 / b - PI / 2.0) / PI, 0.02);
        check(-0.5, b, ((1.0 / b + u / b).ln() - u) / PI, 0.02);
    }
    let b = 2.0;
    check(0.0, b, (1.0 / b - (1.0 / b as f64).asin()) / PI, 0.05);
}

/// Shrinking the evolution window kills both kernels.
#[test]
fn window_to_zero_limit() {
    let unit_f = f_quadrature(&env(0.0, 0.0, 1.0, 1.0, 1e3, 1.0), 0.5, false, TOL)
        .unwrap()
        .value;
    let unit_phi = phi_quadrature(&env(0.0, 0.0, 1.0, 1.0, 1e3, 1.0), 0.5, TOL)
        .unwrap()
        .value;
    let tiny = env(0.0, 0.0, 1e-12, 1.0, 1e3, 1.0);
    let f = f_quadrature(&tiny, 0.5, false, 1e-10).unwrap().value;
    let phi = phi_quadrature(&tiny, 0.5, 1e-10).unwrap().value;
    assert!(f.abs() < 1e-6 * unit_f.abs(), "{f} vs {unit_f}");
    assert!(phi.abs() < 1e-6 * unit_phi.abs(), "{phi} vs {unit_phi}");
}

/// Tabulated special cells quoted directly.
#[test]
fn quadrature_special_cells() {
    // sub-Ohmic on-site at beta = 0 with delta = 2: exactly delta/(2 w0) = 1
    let e = env(-0.5, 0.0, 2.0, 1.0, 1e4, 1.0);
    let v = f_quadrature(&e, 0.0, false, TOL).unwrap().value;
    assert!((v - 1.0).abs() < 1e-3, "{v}");
    // ... and insensitive to a small temperature
    let e = env(-0.5, 0.02, 2.0, 1.0, 1e3, 1.0);
    let v2 = f_quadrature(&e, 0.0, true, TOL).unwrap().value;
    assert!((v2 - 1.0).abs() < 0.05, "{v2}");

    // super-Ohmic cutoff cell: v Lambda / (pi w0^3) = 1/pi at v = Lambda = w0 = 1
    // (window long enough that the cutoff dominates)
    let e = env(0.5, 0.0, 1e3, 1.0, 1.0, 1.0);
    let v3 = f_quadrature(&e, 0.0, false, TOL).unwrap().value;
    assert!((v3 - 1.0 / PI).abs() < 1e-3, "{v3}");
}

/// Thermal suppression and positivity of the on-site kernel.
#[test]
fn f_monotone_in_beta_and_positive() {
    for s in [0.5, 0.0, -0.5] {
        let mut prev = f64::INFINITY;
        for bt in [0.0, 0.01, 0.05, 0.2, 1.0] {
            let e = env(s, bt, 1.0, 1.0, 1e3, 1.0);
            let v = f_quadrature(&e, 0.0, true, TOL).unwrap().value;
            assert!(v >= 0.0);
            assert!(v <= prev * (1.0 + 1e-9), "s={s} beta={bt}: {v} > {prev}");
            prev = v;
        }
        // phase kernel is nonnegative on-site as well
        let e = env(s, 0.0, 1.0, 1.0, 1e2, 1.0);
        if s < 0.0 {
            assert!(phi_quadrature(&e, 0.0, TOL).unwrap().value >= 0.0);
        }
    }
}

/// Divergent requests are refused rather than regularized.
#[test]
fn divergent_requests_refused() {
    let e = EnvironmentSpec::new(0.5, 0.0, 1.0, 1.0, f64::INFINITY, 1.0, 1e-3).unwrap();
    assert!(f_quadrature(&e, 0.0, false, TOL).is_err());
    assert!(phi_quadrature(&e, 0.0, TOL).is_err());
    assert!(phi_quadrature(&e, 0.5, TOL).is_err());
    // sub-Ohmic at finite separation converges without a cutoff
    let e = EnvironmentSpec::new(-0.5, 0.0, 1.0, 1.0, f64::INFINITY, 1.0, 1e-3).unwrap();
    assert!(phi_quadrature(&e, 0.5, 1e-7).is_ok());
}
