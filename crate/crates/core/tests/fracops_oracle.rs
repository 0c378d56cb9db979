//! Oracle tests for the singular-integral engine.
//!
//! The sharpest anchor is the closed-form identity for the bubble profile
//! U(x) = (1 + |x|^2)^(-(n-2s)/2):
//!     (-Delta)^s U = S(n,s) (1 + |x|^2)^(-(n+2s)/2),
//!     S(n,s) = 2^(2s) Gamma(n/2 + s) / Gamma(n/2 - s),
//! which exercises the normalization constant and every quadrature zone at
//! once. Its inverse pins the Riesz constant the same way.

use fraclab::fields::AnalyticField;
use fraclab::fracops::{
    self, brute, engine, frac_laplacian, frac_laplacian_radial, frac_laplacian_radial_diag,
    gamma, riesz_potential, FracParams, QuadratureSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bubble_constant(n: f64, s: f64) -> f64 {
    4f64.powf(s) * gamma(n / 2.0 + s) / gamma(n / 2.0 - s)
}

#[test]
fn bubble_identity_pins_forward_constant() {
    // (-D)^s (1+r^2)^(-(3-2s)/2) = S (1+r^2)^(-(3+2s)/2), n = 3
    let quad = QuadratureSpec::default();
    for &s in &[0.2, 0.3, 0.45] {
        let params = FracParams::new(3, s).unwrap();
        let u = AnalyticField::inverse_power(3.0 - 2.0 * s, 3).unwrap();
        let s_const = bubble_constant(3.0, s);
        for &r in &[0.7, 2.0, 5.0, 11.0] {
            let got = frac_laplacian_radial(&u, &params, r, &quad).unwrap();
            let want = s_const * (1.0 + r * r).powf(-(3.0 + 2.0 * s) / 2.0);
            let rel = (got - want).abs() / want;
            assert!(
                rel < 2e-5,
                "s={s} r={r}: got {got}, want {want} (rel {rel:.2e})"
            );
        }
    }
}

#[test]
fn bubble_identity_pins_riesz_constant() {
    // (-D)^-s (1+r^2)^(-(3+2s)/2) = (1/S) (1+r^2)^(-(3-2s)/2)
    let quad = QuadratureSpec::default();
    for &s in &[0.25, 0.3] {
        let params = FracParams::new(3, s).unwrap();
        let f = AnalyticField::inverse_power(3.0 + 2.0 * s, 3).unwrap();
        let s_const = bubble_constant(3.0, s);
        for &r in &[0.9, 3.0, 8.0, 20.0] {
            let got = riesz_potential(&f, &params, r, &quad).unwrap();
            let want = (1.0 + r * r).powf(-(3.0 - 2.0 * s) / 2.0) / s_const;
            let rel = (got - want).abs() / want;
            assert!(
                rel < 2e-5,
                "s={s} r={r}: got {got}, want {want} (rel {rel:.2e})"
            );
        }
    }
}

#[test]
fn radial_reduction_agrees_with_brute_force_3d() {
    // guardrail: closed-form angular reduction vs independent 3-D quadrature
    // on 10 seeded (u, s, r) tuples, 1e-4 relative
    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    let quad = QuadratureSpec::default();
    for k in 0..10 {
        let sigma = rng.gen_range(0.6..4.0);
        let s = rng.gen_range(0.15..0.75);
        let r = rng.gen_range(2.0..24.0);
        let u = AnalyticField::inverse_power(sigma, 3).unwrap();
        let params = FracParams::new(3, s).unwrap();
        let fast = frac_laplacian_radial(&u, &params, r, &quad).unwrap();
        let slow = frac_laplacian(&u, &params, &[r, 0.0, 0.0], &quad).unwrap();
        let tol = 1e-4 * fast.abs().max(1.0_f64.min(fast.abs().max(slow.abs())));
        assert!(
            (fast - slow).abs() <= 1e-4 * fast.abs().max(slow.abs()),
            "tuple {k} (sigma={sigma:.3}, s={s:.3}, r={r:.3}): radial {fast} vs brute {slow}, tol {tol}"
        );
    }
}

#[test]
fn brute_force_translation_covariance() {
    // radial inputs: the value depends only on |x| across directions
    let u = AnalyticField::inverse_power(1.5, 3).unwrap();
    let params = FracParams::new(3, 0.3).unwrap();
    let quad = QuadratureSpec::default();
    let r = 6.0;
    let v1 = frac_laplacian(&u, &params, &[r, 0.0, 0.0], &quad).unwrap();
    let v2 = frac_laplacian(&u, &params, &[0.0, r, 0.0], &quad).unwrap();
    let v3 = frac_laplacian(&u, &params, &[0.0, 0.0, -r], &quad).unwrap();
    for v in [v2, v3] {
        assert!(
            (v - v1).abs() <= 1e-6 * v1.abs(),
            "direction dependence: {v1} vs {v}"
        );
    }
}

#[test]
fn fundamental_solution_is_harmonic_away_from_origin() {
    // (-D)^s of c_(n,-s) |y|^(2s-3) (capped inside a tiny core) nearly
    // cancels relative to the absolute-integrand scale
    let s = 0.3;
    let params = FracParams::new(3, s).unwrap();
    let r_cap = 1e-7;
    let phi = |b: f64| params.c_n_minus_s * b.max(r_cap).powf(2.0 * s - 3.0);
    let ax = engine::Axial {
        h0: engine::Component::new(&phi, 3.0 - 2.0 * s),
        h1: None,
        h2: None,
    };
    let quad = QuadratureSpec { mid_nodes: 256, ..Default::default() };
    let d = engine::pv_kernel_integral(&ax, s, 8.0, &quad).unwrap();
    assert!(
        d.value.abs() <= 1e-3 * d.abs_scale,
        "harmonicity defect {} vs scale {}",
        d.value,
        d.abs_scale
    );
}

#[test]
fn inverse_identity_on_compactly_supported_bump() {
    // (-D)^s applied to the Riesz potential of a bump reproduces the bump at
    // interior points within 2 percent (double quadrature, both constants)
    let s = 0.3;
    let params = FracParams::new(3, s).unwrap();
    let quad = QuadratureSpec { mid_nodes: 192, ..Default::default() };
    let bump = |r: f64| if r < 1.0 { (1.0 - r * r).powi(4) } else { 0.0 };

    // tabulate G = (-D)^-s bump on a wide log grid
    let comp = engine::Component::new(&bump, 8.0);
    let mut radii = vec![];
    let (lo, hi, count) = (1e-3_f64, 80.0_f64, 400);
    for i in 0..=count {
        radii.push(lo * (hi / lo).powf(i as f64 / count as f64));
    }
    let values: Vec<f64> = radii
        .iter()
        .map(|&r| {
            params.c_n_minus_s * engine::riesz_kernel_integral(&comp, s, r, &quad).unwrap().value
        })
        .collect();
    // fitted tail: G ~ c r^(2s-3)
    let m = radii.len();
    let sigma_fit = (values[m - 30] / values[m - 1]).abs().ln()
        / (radii[m - 1] / radii[m - 30]).ln();
    assert!(
        (sigma_fit - (3.0 - 2.0 * s)).abs() < 0.05,
        "G tail exponent {sigma_fit} vs {}",
        3.0 - 2.0 * s
    );
    let g_field = AnalyticField::custom_radial_table(
        radii,
        values,
        3,
        Some(fraclab::fields::DecayProfile::decay(3.0 - 2.0 * s, 0.9, 1.0, 1.0).unwrap()),
    )
    .unwrap();

    for &r in &[0.2, 0.35, 0.5, 0.65, 0.8] {
        let got = frac_laplacian_radial(&g_field, &params, r, &quad).unwrap();
        let want = bump(r);
        assert!(
            (got - want).abs() <= 0.02 * want.abs(),
            "inverse identity at r={r}: {got} vs {want}"
        );
    }
}

#[test]
fn linearity_within_quadrature_tolerance() {
    let quad = QuadratureSpec::default();
    let params = FracParams::new(3, 0.25).unwrap();
    let u1 = AnalyticField::inverse_power(1.0, 3).unwrap();
    let u2 = AnalyticField::inverse_power(2.5, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let r = rng.gen_range(3.0..30.0);
        let (a, b) = (2.0, -0.5);
        // a u1 + b u2 through the raw engine (combination is not a library field)
        let f = |t: f64| {
            a * u1.radial_value(t).unwrap() + b * u2.radial_value(t).unwrap()
        };
        let ax = engine::Axial {
            h0: engine::Component::new(&f, 1.0),
            h1: None,
            h2: None,
        };
        let combo = params.c_ns * engine::pv_kernel_integral(&ax, params.s, r, &quad).unwrap().value;
        let d1 = frac_laplacian_radial_diag(&u1, &params, r, &quad).unwrap();
        let d2 = frac_laplacian_radial_diag(&u2, &params, r, &quad).unwrap();
        let sum = a * d1.value + b * d2.value;
        let tol = 10.0
            * (a.abs() * d1.error_estimate() + b.abs() * d2.error_estimate())
            + 1e-12;
        assert!(
            (combo - sum).abs() <= tol,
            "linearity at r={r}: {combo} vs {sum} (tol {tol})"
        );
    }
}

#[test]
fn refinement_convergence_within_error_estimate() {
    // doubling mid_nodes moves the value by less than the reported estimate
    let params = FracParams::new(3, 0.2).unwrap();
    let base = QuadratureSpec::default();
    let fine = QuadratureSpec { mid_nodes: base.mid_nodes * 2, ..base.clone() };
    for sigma in [0.8, 1.5, 3.0, 4.5] {
        let u = AnalyticField::inverse_power(sigma, 3).unwrap();
        for &r in &[4.0, 16.0, 64.0] {
            let d = frac_laplacian_radial_diag(&u, &params, r, &base).unwrap();
            let v2 = frac_laplacian_radial(&u, &params, r, &fine).unwrap();
            assert!(
                (d.value - v2).abs() <= d.error_estimate().max(1e-14),
                "sigma={sigma} r={r}: refine moved {} vs estimate {}",
                (d.value - v2).abs(),
                d.error_estimate()
            );
        }
    }
}

#[test]
fn bilinear_symmetry_is_exact() {
    let params = FracParams::new(3, 0.2).unwrap();
    let quad = QuadratureSpec::default();
    let u1 = AnalyticField::inverse_power(1.0, 3).unwrap();
    let u2 = AnalyticField::inverse_power(2.0, 3).unwrap();
    let a = fracops::bilinear_remainder(&u1, &u2, &params, 8.0, &quad).unwrap();
    let b = fracops::bilinear_remainder(&u2, &u1, &params, 8.0, &quad).unwrap();
    assert_eq!(a, b);
    assert!(a.abs() > 0.0);
}

#[test]
fn bilinear_radial_agrees_with_brute_force() {
    let params = FracParams::new(3, 0.2).unwrap();
    let quad = QuadratureSpec::default();
    let u1 = AnalyticField::inverse_power(1.0, 3).unwrap();
    let u2 = AnalyticField::inverse_power(1.5, 3).unwrap();
    let f1 = |y: &[f64; 3]| u1.eval(y).unwrap();
    let f2 = |y: &[f64; 3]| u2.eval(y).unwrap();
    for &r in &[4.0, 10.0] {
        let fast = fracops::bilinear_remainder(&u1, &u2, &params, r, &quad).unwrap();
        let slow =
            brute::bilinear_3d(&f1, &f2, 1.0, 1.5, params.s, &[r, 0.0, 0.0], &quad).unwrap();
        assert!(
            (fast - slow).abs() <= 2e-4 * fast.abs(),
            "r={r}: radial {fast} vs brute {slow}"
        );
    }
}

#[test]
fn product_rule_examples() {
    let quad = QuadratureSpec::default();
    // constants: identity exact
    let c = AnalyticField::constant(2.0, 3).unwrap();
    let g = AnalyticField::inverse_power(2.0, 3).unwrap();
    let params = FracParams::new(3, 0.2).unwrap();
    let check = fracops::product_rule_residual(&c, &g, &params, 4.0, &quad).unwrap();
    assert!(
        check.residual.abs() <= 1e-10 * check.reference.max(1e-10),
        "constant case residual {}",
        check.residual
    );

    // decaying pair
    let check = fracops::product_rule_residual(&g, &g, &params, 4.0, &quad).unwrap();
    assert!(
        check.residual.abs() <= 1e-3 * check.reference,
        "ip2 pair: residual {} vs reference {}",
        check.residual,
        check.reference
    );

    // decaying times slowly growing, conditionally convergent pieces
    let u1 = AnalyticField::inverse_power(1.0, 3).unwrap();
    let u2 = AnalyticField::growth_power(0.3, 3).unwrap();
    let params_small = FracParams::new(3, 0.1).unwrap();
    let check = fracops::product_rule_residual(&u1, &u2, &params_small, 8.0, &quad).unwrap();
    assert!(
        check.residual.abs() <= 1e-3 * check.reference,
        "growth pair: residual {} vs reference {}",
        check.residual,
        check.reference
    );
}

#[test]
fn quadrature_spec_serde_roundtrip() {
    let spec = QuadratureSpec { mid_nodes: 128, tail_radius: Some(96.0), ..Default::default() };
    let json = serde_json::to_string(&spec).unwrap();
    let back: QuadratureSpec = serde_json::from_str(&json).unwrap();
    assert_eq!(back.mid_nodes, 128);
    assert_eq!(back.tail_radius, Some(96.0));
    // unknown keys rejected
    assert!(serde_json::from_str::<QuadratureSpec>(r#"{"mid_nodes": 32, "bogus": 1}"#).is_err());
}
