//! Nonlocal bootstrap replay: the four-term right-hand side F with
//! (-Delta)^s applied to the linearized equation for w, its Riesz potential
//! H, and the doubling schedule eps -> 2 eps -> ... -> eps_1 in (1/2, 1).
//!
//! All tensor contractions use the radial two-profile reduction: a radial
//! symmetric-matrix field M(y) = m_t(b) I + (m_r(b) - m_t(b)) yhat yhat' and
//! a fixed tensor at x contract into an axial scalar integrand with a cos^2
//! term. The reduction is validated against the full 3-D tensor sum in the
//! oracle test suite.

use std::cell::Cell;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decaylab::{fit_decay_exponent, DecayFit};
use crate::fields::{AnalyticField, DecayProfile};
use crate::fracops::{
    engine, frac_laplacian_radial, riesz_potential, Axial, BilinearTerm, Component, FracParams,
    QuadratureSpec,
};

use super::{RadialSolution, SolveError};

/// Single-entry cache for (w'', w'/r): the axial closures query the same
/// radius several times in a row.
struct PqCache<'a> {
    sol: &'a RadialSolution,
    cell: Cell<(f64, f64, f64)>,
}

impl<'a> PqCache<'a> {
    fn new(sol: &'a RadialSolution) -> Self {
        PqCache { sol, cell: Cell::new((f64::NAN, 0.0, 0.0)) }
    }

    fn pq(&self, r: f64) -> (f64, f64) {
        let c = self.cell.get();
        if c.0 == r {
            return (c.1, c.2);
        }
        let v = self.sol.pq(r);
        self.cell.set((r, v.0, v.1));
        v
    }

    // linearized-coefficient eigenvalues minus identity, n = 3 closed forms
    fn coeffs_m1(&self, r: f64) -> (f64, f64) {
        let (p, q) = self.pq(r);
        let ar = q + q * q / 3.0;
        let at = 0.5 * (p + q) + p * q / 3.0;
        (ar, at)
    }
}

/// The bootstrap right-hand side at radius r:
///   F = (-D)^s f - d_ij w (-D)^s a_ij - (a_ij - delta_ij) (-D)^s d_ij w
///       + c_(n,s) Sum_ij I[a_ij, d_ij w] ,
/// evaluated through the radial two-profile reduction (n = 3).
pub fn bootstrap_rhs_f(
    sol: &RadialSolution,
    params: &FracParams,
    r: f64,
    quad: &QuadratureSpec,
) -> Result<f64, SolveError> {
    if sol.n != 3 || params.n != 3 {
        return Err(SolveError::BadDimension(sol.n));
    }
    let s = params.s;
    if !(0.0 < s && s < 0.45) {
        return Err(SolveError::Bootstrap(format!(
            "F needs s in (0, alpha/2) with alpha < 0.9; got s = {s}"
        )));
    }
    let cache = PqCache::new(sol);
    let r_ref = quad.effective_tail_radius(r);

    // fixed tensors at x
    let (p_a, q_a) = sol.pq(r);
    let gamma_w = p_a - q_a;
    let (ar_a, at_a) = (sol.coeff_radial_minus_1(r), sol.coeff_tangential_minus_1(r));
    let gamma_e = ar_a - at_a;

    // radial profiles
    let phi = |b: f64| sol.f.radial_value(b).unwrap_or(f64::NAN) - 1.0;
    let q_of = |b: f64| cache.pq(b).1;
    let gw_of = |b: f64| {
        let (p, q) = cache.pq(b);
        p - q
    };
    let et_of = |b: f64| cache.coeffs_m1(b).1;
    let ge_of = |b: f64| {
        let (ar, at) = cache.coeffs_m1(b);
        ar - at
    };

    let tail = |g: &dyn Fn(f64) -> f64| sol.fit_tail_exponent(g, r_ref);

    // T1 = (-D)^s f = (-D)^s (f - 1)
    let t1 = {
        let ax = Axial { h0: Component::new(&phi, tail(&phi)), h1: None, h2: None };
        engine::pv_kernel_integral(&ax, s, r, quad)?.value
    };

    // T2 = d_ij w(x) (-D)^s a_ij(x): contract D^2 w(x) with (a - I)(y)
    let t2 = {
        let h0 = |b: f64| (3.0 * q_a + gamma_w) * et_of(b) + q_a * ge_of(b);
        let h2 = |b: f64| gamma_w * ge_of(b);
        let ax = Axial {
            h0: Component::new(&h0, tail(&h0)),
            h1: None,
            h2: Some(Component::new(&h2, tail(&h2))),
        };
        engine::pv_kernel_integral(&ax, s, r, quad)?.value
    };

    // T3 = (a_ij - delta_ij)(x) (-D)^s d_ij w(x): contract (a - I)(x) with D^2 w(y)
    let t3 = {
        let h0 = |b: f64| (3.0 * at_a + gamma_e) * q_of(b) + at_a * gw_of(b);
        let h2 = |b: f64| gamma_e * gw_of(b);
        let ax = Axial {
            h0: Component::new(&h0, tail(&h0)),
            h1: None,
            h2: Some(Component::new(&h2, tail(&h2))),
        };
        engine::pv_kernel_integral(&ax, s, r, quad)?.value
    };

    // T4 = Sum_ij I[a_ij, d_ij w]: tr[(E(x)-E(y))(W(x)-W(y))] as separable terms
    let t4 = {
        let t_xx = 3.0 * at_a * q_a + at_a * gamma_w + gamma_e * q_a + gamma_e * gamma_w;
        let one = |_: f64| 1.0;
        let ew_x0 = |b: f64| (3.0 * at_a + gamma_e) * q_of(b) + at_a * gw_of(b);
        let ew_x2 = |b: f64| gamma_e * gw_of(b);
        let ey_w0 = |b: f64| (3.0 * q_a + gamma_w) * et_of(b) + q_a * ge_of(b);
        let ey_w2 = |b: f64| gamma_w * ge_of(b);
        let yy = |b: f64| {
            let (et, ge) = {
                let (ar, at) = cache.coeffs_m1(b);
                (at, ar - at)
            };
            let (p, q) = cache.pq(b);
            let gw = p - q;
            3.0 * et * q + et * gw + ge * q + ge * gw
        };
        let terms = [
            BilinearTerm { coeff: t_xx, g: &one, power: 0, tail_sigma: 0.0 },
            BilinearTerm { coeff: -1.0, g: &ew_x0, power: 0, tail_sigma: tail(&ew_x0) },
            BilinearTerm { coeff: -1.0, g: &ew_x2, power: 2, tail_sigma: tail(&ew_x2) },
            BilinearTerm { coeff: -1.0, g: &ey_w0, power: 0, tail_sigma: tail(&ey_w0) },
            BilinearTerm { coeff: -1.0, g: &ey_w2, power: 2, tail_sigma: tail(&ey_w2) },
            BilinearTerm { coeff: 1.0, g: &yy, power: 0, tail_sigma: tail(&yy) },
        ];
        engine::bilinear_kernel_integral(&terms, s, r, quad)?.value
    };

    Ok(params.c_ns * (t1 - t2 - t3 + t4))
}

/// Riesz potential of a tabulated F profile: H with (-Delta)^s H = F.
pub fn bootstrap_potential_h(
    f_table: &AnalyticField,
    params: &FracParams,
    r: f64,
    quad: &QuadratureSpec,
) -> Result<f64, SolveError> {
    Ok(riesz_potential(f_table, params, r, quad)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BootstrapStage {
    pub eps: f64,
    pub dw_claim: f64,
    pub dw_pass: bool,
    pub f_claim: f64,
    pub f_pass: bool,
    pub h_claim: f64,
    pub h_pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub s: f64,
    /// decay rate measured on |a - I|
    pub eps0_measured: f64,
    /// seed exponent actually used: min(measured, cap), keeping 2 eps < 1
    pub eps0: f64,
    pub eps0_cap: f64,
    pub m0: u32,
    pub eps1: f64,
    pub stages: Vec<BootstrapStage>,
    pub f_fit: DecayFit,
    pub h_fit: DecayFit,
    pub dw_fit: DecayFit,
    /// rows (r, (-D)^s H, F, relative mismatch)
    pub identity_rows: Vec<(f64, f64, f64, f64)>,
    pub identity_max_rel: f64,
    /// auxiliary tail exponent nu = min(n - 2s - 2, beta - 2, 4 eps1 - 2)
    pub nu: f64,
    pub nu_components: [f64; 3],
    /// whether |x|^(-2-nu) decays slower than the main |x|^(2-min(beta,n))
    /// term (never, for n = 3 and beta <= 4: removal iterations are a no-op)
    pub nu_dominates: bool,
    pub margin: f64,
}

const EPS0_CAP: f64 = 0.45;

/// Replay the doubling schedule on a radial solution with right-hand side
/// 1 + kappa (1+r^2)^(-beta/2). `eps0` overrides the measured seed exponent;
/// it must satisfy 2 eps0 < 1.
pub fn run_bootstrap_schedule(
    sol: &RadialSolution,
    beta: f64,
    eps0_supplied: Option<f64>,
    s: f64,
    quad: &QuadratureSpec,
    radii: &[f64],
    margin: f64,
) -> Result<BootstrapReport, SolveError> {
    if radii.len() < 4 {
        return Err(SolveError::Underdetermined(format!(
            "need at least 4 radii, got {}",
            radii.len()
        )));
    }
    let params = FracParams::new(3, s)?;

    // measured seed: decay of |a - I|
    let a_dev: Vec<f64> = radii
        .iter()
        .map(|&r| {
            sol.coeff_radial_minus_1(r)
                .abs()
                .max(sol.coeff_tangential_minus_1(r).abs())
        })
        .collect();
    let a_fit = fit_decay_exponent(radii, &a_dev)?;
    let eps0_measured = -a_fit.exponent;
    let eps0 = match eps0_supplied {
        Some(e) => {
            if !(0.0 < e && 2.0 * e < 1.0) {
                return Err(SolveError::Bootstrap(format!(
                    "bootstrap seed needs 2 eps0 < 1, got eps0 = {e}"
                )));
            }
            e
        }
        None => eps0_measured.min(EPS0_CAP).max(1e-3),
    };
    // 2^m0 eps0 < 1 < 2^(m0+1) eps0; nudge off the measure-zero exact case
    let eps0 = if (1.0 / eps0).log2().fract() == 0.0 { eps0 * (1.0 - 1e-9) } else { eps0 };
    let m0 = (1.0 / eps0).log2().floor() as u32;
    let eps1 = 2f64.powi(m0 as i32) * eps0;

    // fits of Delta w, F, H over the radii
    let dw: Vec<f64> = radii.iter().map(|&r| sol.delta_w(r)).collect();
    let dw_fit = fit_decay_exponent(radii, &dw)?;

    let f_vals: Vec<f64> = radii
        .par_iter()
        .map(|&r| bootstrap_rhs_f(sol, &params, r, quad))
        .collect::<Result<_, _>>()?;
    let f_fit = fit_decay_exponent(radii, &f_vals)?;

    // tabulate F on a log grid wide enough for the Riesz quadrature
    let r_hi = quad.effective_tail_radius(*radii.last().unwrap()) * 2.0;
    let f_table = build_f_table(sol, &params, quad, 0.05, r_hi)?;

    let h_vals: Vec<f64> = radii
        .par_iter()
        .map(|&r| bootstrap_potential_h(&f_table, &params, r, quad))
        .collect::<Result<_, _>>()?;
    let h_fit = fit_decay_exponent(radii, &h_vals)?;

    // identity (-D)^s H = F at the three innermost radii
    let h_table = build_h_table(&f_table, &params, quad, 0.05, r_hi)?;
    let mut identity_rows = Vec::new();
    let mut identity_max_rel: f64 = 0.0;
    for &r in radii.iter().take(3) {
        let lhs = frac_laplacian_radial(&h_table, &params, r, quad)?;
        let rhs = f_table.radial_value(r)?;
        let rel = (lhs - rhs).abs() / rhs.abs().max(1e-300);
        identity_max_rel = identity_max_rel.max(rel);
        identity_rows.push((r, lhs, rhs, rel));
    }

    // stages j = 0..m0 with exponent eps_j = 2^j eps0
    let mut stages = Vec::new();
    for j in 0..=m0 {
        let eps = 2f64.powi(j as i32) * eps0;
        let dw_claim = -2.0 * eps;
        let f_claim = -(2.0 * s + 2.0 * eps);
        let h_claim = -2.0 * eps;
        stages.push(BootstrapStage {
            eps,
            dw_claim,
            dw_pass: dw_fit.exponent <= dw_claim + margin,
            f_claim,
            f_pass: f_fit.exponent <= f_claim + margin,
            h_claim,
            h_pass: h_fit.exponent <= h_claim + margin,
        });
    }

    let nu_components = [3.0 - 2.0 * s - 2.0, beta - 2.0, 4.0 * eps1 - 2.0];
    let nu = nu_components.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    let nu_dominates = -2.0 - nu > 2.0 - beta.min(3.0);

    Ok(BootstrapReport {
        s,
        eps0_measured,
        eps0,
        eps0_cap: EPS0_CAP,
        m0,
        eps1,
        stages,
        f_fit,
        h_fit,
        dw_fit,
        identity_rows,
        identity_max_rel,
        nu,
        nu_components,
        nu_dominates,
        margin,
    })
}

fn build_f_table(
    sol: &RadialSolution,
    params: &FracParams,
    quad: &QuadratureSpec,
    r_lo: f64,
    r_hi: f64,
) -> Result<AnalyticField, SolveError> {
    let per_decade = 22usize;
    let decades = (r_hi / r_lo).log10();
    let count = (per_decade as f64 * decades).ceil() as usize + 1;
    let radii: Vec<f64> = (0..count)
        .map(|i| r_lo * (r_hi / r_lo).powf(i as f64 / (count - 1) as f64))
        .collect();
    let values: Vec<f64> = radii
        .par_iter()
        .map(|&r| bootstrap_rhs_f(sol, params, r, quad))
        .collect::<Result<_, _>>()?;
    table_field(radii, values)
}

fn build_h_table(
    f_table: &AnalyticField,
    params: &FracParams,
    quad: &QuadratureSpec,
    r_lo: f64,
    r_hi: f64,
) -> Result<AnalyticField, SolveError> {
    let per_decade = 28usize;
    let decades = (r_hi / r_lo).log10();
    let count = (per_decade as f64 * decades).ceil() as usize + 1;
    let radii: Vec<f64> = (0..count)
        .map(|i| r_lo * (r_hi / r_lo).powf(i as f64 / (count - 1) as f64))
        .collect();
    let values: Vec<f64> = radii
        .par_iter()
        .map(|&r| riesz_potential(f_table, params, r, quad))
        .collect::<Result<_, _>>()?;
    table_field(radii, values)
}

fn table_field(radii: Vec<f64>, values: Vec<f64>) -> Result<AnalyticField, SolveError> {
    // effective tail exponent from the outer decade
    let m = radii.len();
    let (r1, r2) = (radii[m - 1] / 2.0, radii[m - 1]);
    let v2 = values[m - 1];
    let i1 = radii.iter().position(|&r| r >= r1).unwrap_or(m - 2);
    let v1 = values[i1];
    let sigma = if v1.abs() > 1e-300 && v2.abs() > 1e-300 && v1 * v2 > 0.0 {
        ((v1 / v2).abs().ln() / (r2 / radii[i1]).ln()).max(0.1)
    } else {
        6.0
    };
    let c_prime = v2.abs().max(1e-300) * r2.powf(sigma) * 2.0;
    let decay = DecayProfile::decay(sigma, 0.5, c_prime.max(1e-12), 1.0)?;
    Ok(AnalyticField::custom_radial_table(radii, values, 3, Some(decay))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::AnalyticField;
    use crate::masolver::solve_radial;

    #[test]
    fn trivial_density_gives_zero_f() {
        let f = AnalyticField::constant(1.0, 3).unwrap();
        let sol = solve_radial(f, 3, 64.0, 512).unwrap();
        let params = FracParams::new(3, 0.2).unwrap();
        let quad = QuadratureSpec::default();
        let v = bootstrap_rhs_f(&sol, &params, 8.0, &quad).unwrap();
        assert!(v.abs() < 1e-10, "F = {v}");
    }

    #[test]
    fn schedule_arithmetic() {
        // eps0 = 0.3 -> m0 = 1, eps1 = 0.6; eps0 = 0.2 -> m0 = 2, eps1 = 0.8
        let f = AnalyticField::perturbed_one(0.5, 2.5, 3).unwrap();
        let sol = solve_radial(f, 3, 512.0, 512).unwrap();
        let quad = QuadratureSpec { mid_nodes: 48, angular_nodes: 24, ..Default::default() };
        let radii = [8.0, 16.0, 32.0, 64.0];
        for (eps0, want_m0, want_eps1) in [(0.3, 1, 0.6), (0.2, 2, 0.8)] {
            let rep = run_bootstrap_schedule(
                &sol,
                2.5,
                Some(eps0),
                0.2,
                &quad,
                &radii,
                0.1,
            )
            .unwrap();
            assert_eq!(rep.m0, want_m0, "m0 for eps0 = {eps0}");
            assert!((rep.eps1 - want_eps1).abs() < 1e-12);
            assert!(rep.eps1 > 0.5 && rep.eps1 < 1.0);
            assert_eq!(rep.stages.len() as u32, rep.m0 + 1);
        }
    }

    #[test]
    fn seed_gate() {
        let f = AnalyticField::perturbed_one(0.5, 2.5, 3).unwrap();
        let sol = solve_radial(f, 3, 512.0, 512).unwrap();
        let quad = QuadratureSpec::default();
        let radii = [8.0, 16.0, 32.0, 64.0];
        assert!(matches!(
            run_bootstrap_schedule(&sol, 2.5, Some(0.6), 0.2, &quad, &radii, 0.1),
            Err(SolveError::Bootstrap(_))
        ));
    }
}
