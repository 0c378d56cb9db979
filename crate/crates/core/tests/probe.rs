use fraclab::fields::AnalyticField;
use fraclab::fracops::{
    frac_laplacian, frac_laplacian_radial_diag, gamma, FracParams, QuadratureSpec,
};

#[test]
#[ignore]
fn probe_bubble_high_s() {
    let s = 0.7481109525375182_f64;
    let r = 15.130894718975954_f64;
    let sigma = 3.0 - 2.0 * s;
    let u = AnalyticField::inverse_power(sigma, 3).unwrap();
    let params = FracParams::new(3, s).unwrap();
    let want = 4f64.powf(s) * gamma(1.5 + s) / gamma(1.5 - s)
        * (1.0 + r * r).powf(-(3.0 + 2.0 * s) / 2.0);
    for mid in [96, 384] {
        let quad = QuadratureSpec { mid_nodes: mid, ..Default::default() };
        let d = frac_laplacian_radial_diag(&u, &params, r, &quad).unwrap();
        println!(
            "radial mid={mid}: rel_err={:.3e} (near={:.6e} mid={:.6e} tail={:.6e})",
            (d.value - want) / want,
            d.near,
            d.mid,
            d.tail
        );
    }
    for ang in [48, 96] {
        let quad = QuadratureSpec { angular_nodes: ang, ..Default::default() };
        let v = frac_laplacian(&u, &params, &[r, 0.0, 0.0], &quad).unwrap();
        println!("brute ang={ang}: rel_err={:.3e}", (v - want) / want);
    }
}

#[test]
#[ignore]
fn probe_brute_zones() {
    use fraclab::quad::{gk15, log_edges};
    use std::f64::consts::PI;
    let s = 0.7481109525375182_f64;
    let r = 15.130894718975954_f64;
    let sigma = 3.0 - 2.0 * s;
    let u = AnalyticField::inverse_power(sigma, 3).unwrap();
    let params = FracParams::new(3, s).unwrap();
    let want = 4f64.powf(s) * gamma(1.5 + s) / gamma(1.5 - s)
        * (1.0 + r * r).powf(-(3.0 + 2.0 * s) / 2.0);
    // radial reference for each zone via 1-D exact angular reduction is the
    // engine itself; here probe the brute's far-tail split by b_outer
    let x = [r, 0.0, 0.0];
    let ux = u.eval(&x).unwrap();
    for span in [1e2_f64, 1e3, 1e4, 1e5] {
        let b_outer = span * r;
        // adaptive far integral with dense angular handled by radial symmetry:
        // angular average of u over the shell |z| = rho has the exact form
        // (2 pi /(2 a rho)) Int_{|a-rho|..a+rho} u(m) m dm -- use that as truth
        let avg_u = |rho: f64| {
            let lo = (r - rho).abs();
            let hi = r + rho;
            let (v, _) = gk15(lo, hi, &mut |m: f64| u.radial_value(m).unwrap() * m);
            // refine by splitting: a few panels
            let mut tot = 0.0;
            let edges = log_edges(lo.max(1e-12), hi, 40);
            for w in edges.windows(2) {
                let (vv, _) = gk15(w[0], w[1], &mut |m: f64| u.radial_value(m).unwrap() * m);
                tot += vv;
            }
            let _ = v;
            2.0 * PI * tot / (2.0 * r * rho) * 2.0
        };
        let mut far = 0.0;
        let edges = log_edges(1.0, b_outer, 600);
        for w in edges.windows(2) {
            let (vv, _) = gk15(w[0], w[1], &mut |rho: f64| {
                rho.powf(-1.0 - 2.0 * s) * (4.0 * PI * ux - avg_u(rho))
            });
            far += vv;
        }
        let c_model = u.radial_value(b_outer).unwrap() * b_outer.powf(sigma);
        let remainder = 4.0 * PI
            * (ux * b_outer.powf(-2.0 * s) / (2.0 * s)
                - c_model * b_outer.powf(-2.0 * s - sigma) / (2.0 * s + sigma));
        println!(
            "span={span:.0e}: far+rem={:.9e} (rem={:.3e})",
            far + remainder,
            remainder
        );
    }
    println!("want/c_ns - near_contrib unknown; want full = {want:.9e}");
}


#[test]
#[ignore]
fn probe_brute_parts() {
    use fraclab::fracops::brute;
    let s = 0.7481109525375182_f64;
    let r = 15.130894718975954_f64;
    let sigma = 3.0 - 2.0 * s;
    let u = AnalyticField::inverse_power(sigma, 3).unwrap();
    let f = |y: &[f64; 3]| u.eval(y).unwrap();
    for ang in [48, 96, 192] {
        let quad = QuadratureSpec { angular_nodes: ang, ..Default::default() };
        let (near, far, rem) = brute::pv_frac_3d_parts(&f, sigma, s, &[r, 0.0, 0.0], &quad).unwrap();
        println!("ang={ang}: near={near:.9e} far+rem={:.9e} (rem={rem:.3e})", far + rem);
    }
}

#[test]
#[ignore]
fn probe_tuple() {
    let sigma = 1.9137255863382534_f64;
    let s = 0.7481109525375182_f64;
    let r = 15.130894718975954_f64;
    let u = AnalyticField::inverse_power(sigma, 3).unwrap();
    let params = FracParams::new(3, s).unwrap();
    for mid in [96, 192, 384, 768] {
        let quad = QuadratureSpec { mid_nodes: mid, ..Default::default() };
        let d = frac_laplacian_radial_diag(&u, &params, r, &quad).unwrap();
        println!(
            "radial mid={mid}: value={:.15e} near={:.3e} mid={:.3e} tail={:.3e} err={:.2e}",
            d.value, d.near, d.mid, d.tail,
            d.error_estimate()
        );
    }
    for ang in [48, 96, 144] {
        let quad = QuadratureSpec { angular_nodes: ang, ..Default::default() };
        let v = frac_laplacian(&u, &params, &[r, 0.0, 0.0], &quad).unwrap();
        println!("brute ang={ang}: value={v:.15e}");
    }
}
