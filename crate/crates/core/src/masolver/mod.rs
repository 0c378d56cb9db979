//! Exact radial solutions of det(D^2 v) = f as ground truth for the far-field
//! expansion and bootstrap suites.
//!
//! For radial convex v the equation reduces to v''(r) (v'(r)/r)^(n-1) = f(r),
//! i.e. d/dr (v')^n = n f r^(n-1). With the gauge v(0) = v'(0) = 0 the
//! solution is v'(r) = M(r)^(1/n) with M(r) = n Int_0^r f t^(n-1) dt.
//!
//! Every derived quantity of w = v - |x|^2/2 is computed from the moment
//! *defect* D(r) = n Int_0^r (f - 1) t^(n-1) dt, never by subtracting nearly
//! equal large numbers:
//!   w'(r)  = D / sum_k M^(k/n) r^(n-1-k)
//!   w''(r) = r^(n-1) (phi - E) / M^((n-1)/n),  E = (1 + D/r^n)^((n-1)/n) - 1
//! with phi = f - 1, and E evaluated through expm1/ln1p.

mod bootstrap;
mod expansion;

pub use bootstrap::{bootstrap_potential_h, bootstrap_rhs_f, run_bootstrap_schedule, BootstrapReport, BootstrapStage};
pub use expansion::{extract_expansion_points, extract_expansion_radial, ExpansionFit};

use thiserror::Error;

use crate::fields::{AnalyticField, FieldError};
use crate::fracops::{engine, Component, FracError, QuadratureSpec};
use crate::linalg::Mat;
use crate::quad::{adaptive_gk, gk15};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("density must be strictly positive; min sampled value {0}")]
    NonPositiveDensity(f64),
    #[error("r_max must be at least 16 for decay fits, got {0}")]
    RMaxTooSmall(f64),
    #[error("grid_nodes must be at least 512, got {0}")]
    GridTooCoarse(usize),
    #[error("radius {0} outside the solved range [0, {1}]")]
    OutOfRange(f64, f64),
    #[error("dimension must be >= 3, got {0}")]
    BadDimension(usize),
    #[error("underdetermined sampling: {0}")]
    Underdetermined(String),
    #[error("bootstrap hypothesis violated: {0}")]
    Bootstrap(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Frac(#[from] FracError),
    #[error(transparent)]
    Fit(#[from] crate::decaylab::DecayLabError),
}

/// Exact radial solution with cumulative moment-defect and w tables on a
/// grid extended far beyond r_max for limit extraction.
#[derive(Debug, Clone)]
pub struct RadialSolution {
    pub f: AnalyticField,
    pub n: usize,
    pub r_max: f64,
    grid: Vec<f64>,
    /// cumulative defect D(r_k) = n Int_0^(r_k) (f-1) t^(n-1) dt
    defect_cum: Vec<f64>,
    /// cumulative w(r_k) = Int_0^(r_k) w'
    w_cum: Vec<f64>,
    /// index of r_max within `grid` (the solution proper; beyond is the
    /// extension used for the limit)
    r_max_idx: usize,
    limit_c: f64,
}

const EXTENSION_RADIUS: f64 = 1e7;

/// Solve det(D^2 v) = f for radial positive f on [0, r_max]. The grid is
/// linear on [0, 1] and log-spaced beyond; moments use adaptive
/// Gauss-Kronrod panels with relative tolerance 1e-11.
pub fn solve_radial(
    f: AnalyticField,
    n: usize,
    r_max: f64,
    grid_nodes: usize,
) -> Result<RadialSolution, SolveError> {
    if n < 3 {
        return Err(SolveError::BadDimension(n));
    }
    if r_max < 16.0 {
        return Err(SolveError::RMaxTooSmall(r_max));
    }
    if grid_nodes < 512 {
        return Err(SolveError::GridTooCoarse(grid_nodes));
    }

    // grid: linear to 1, log to r_max, coarser log extension to 1e7
    let n_lin = (grid_nodes / 8).max(48);
    let n_log = grid_nodes - n_lin;
    let mut grid = Vec::with_capacity(grid_nodes + 512);
    for i in 0..n_lin {
        grid.push(i as f64 / n_lin as f64);
    }
    for i in 0..=n_log {
        grid.push((r_max.ln() * i as f64 / n_log as f64).exp());
    }
    let r_max_idx = grid.len() - 1;
    let r_ext = EXTENSION_RADIUS.max(10.0 * r_max);
    let n_ext = (64.0 * (r_ext / r_max).log10()).ceil() as usize;
    for i in 1..=n_ext {
        grid.push(r_max * (r_ext / r_max).powf(i as f64 / n_ext as f64));
    }

    // positivity check on a dense sample
    let mut fmin = f64::INFINITY;
    for k in 0..2048 {
        let r = r_max * k as f64 / 2047.0;
        fmin = fmin.min(f.radial_value(r)?);
    }
    if fmin <= 0.0 {
        return Err(SolveError::NonPositiveDensity(fmin));
    }

    let nf = n as f64;
    let phi = |t: f64| f.radial_value(t).unwrap_or(f64::NAN) - 1.0;
    let mut defect_cum = Vec::with_capacity(grid.len());
    defect_cum.push(0.0);
    for win in grid.windows(2) {
        let inc = adaptive_gk(win[0], win[1], 1e-11, &mut |t: f64| {
            nf * phi(t) * t.powf(nf - 1.0)
        });
        defect_cum.push(defect_cum.last().unwrap() + inc);
    }

    let mut sol = RadialSolution {
        f,
        n,
        r_max,
        grid,
        defect_cum,
        w_cum: Vec::new(),
        r_max_idx,
        limit_c: 0.0,
    };

    // cumulative w = Int w' on the same grid
    let mut w_cum = Vec::with_capacity(sol.grid.len());
    w_cum.push(0.0);
    for i in 1..sol.grid.len() {
        let (a, b) = (sol.grid[i - 1], sol.grid[i]);
        let (inc, _) = gk15(a, b, &mut |t: f64| sol.w_prime_from(t, i - 1));
        w_cum.push(w_cum.last().unwrap() + inc);
    }
    sol.w_cum = w_cum;

    // limit c = w(r_ext) + power-fitted tail of w'
    let r_end = *sol.grid.last().unwrap();
    let w_end = sol.w_cum[sol.grid.len() - 1];
    let wp_end = sol.w_prime(r_end);
    let wp_half = sol.w_prime(0.5 * r_end);
    let mut tail = 0.0;
    if wp_end.abs() > 1e-300 && wp_half.abs() > 1e-300 && wp_end * wp_half > 0.0 {
        let gamma = (wp_half / wp_end).abs().ln() / 2f64.ln();
        if gamma > 1.05 {
            tail = wp_end * r_end / (gamma - 1.0);
        }
    }
    sol.limit_c = w_end + tail;
    Ok(sol)
}

impl RadialSolution {
    fn segment(&self, r: f64) -> usize {
        match self.grid.binary_search_by(|v| v.total_cmp(&r)) {
            Ok(i) => i.min(self.grid.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.grid.len() - 2),
        }
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid[..=self.r_max_idx]
    }

    /// Moment defect D(r), exact up to the panel tolerance.
    pub fn defect(&self, r: f64) -> f64 {
        let i = self.segment(r);
        let nf = self.n as f64;
        let (inc, _) = gk15(self.grid[i], r, &mut |t: f64| {
            nf * (self.f.radial_value(t).unwrap_or(f64::NAN) - 1.0) * t.powf(nf - 1.0)
        });
        self.defect_cum[i] + inc
    }

    /// M(r) = r^n + D(r) = n Int_0^r f t^(n-1) dt.
    pub fn moment(&self, r: f64) -> f64 {
        r.powf(self.n as f64) + self.defect(r)
    }

    pub fn v_prime(&self, r: f64) -> f64 {
        self.moment(r).powf(1.0 / self.n as f64)
    }

    pub fn v_second(&self, r: f64) -> f64 {
        1.0 + self.w_second(r)
    }

    pub fn v(&self, r: f64) -> f64 {
        self.w(r) + 0.5 * r * r
    }

    fn w_prime_from(&self, r: f64, seg_hint: usize) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let nf = self.n as f64;
        let (inc, _) = gk15(self.grid[seg_hint], r, &mut |t: f64| {
            nf * (self.f.radial_value(t).unwrap_or(f64::NAN) - 1.0) * t.powf(nf - 1.0)
        });
        let d = self.defect_cum[seg_hint] + inc;
        let m = r.powf(nf) + d;
        let mut s = 0.0;
        for k in 0..self.n {
            s += m.powf(k as f64 / nf) * r.powf(nf - 1.0 - k as f64);
        }
        d / s
    }

    /// w'(r) = Dw in the radial direction; cancellation-free.
    pub fn w_prime(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        self.w_prime_from(r, self.segment(r))
    }

    /// w''(r), cancellation-free.
    pub fn w_second(&self, r: f64) -> f64 {
        let nf = self.n as f64;
        if r < 1e-12 {
            // limit: v''(0) - 1 = f(0)^(1/n) - 1
            return self.f.radial_value(0.0).unwrap_or(1.0).powf(1.0 / nf) - 1.0;
        }
        let d = self.defect(r);
        let phi = self.f.radial_value(r).unwrap_or(f64::NAN) - 1.0;
        let e = (((nf - 1.0) / nf) * (d / r.powf(nf)).ln_1p()).exp_m1();
        let m = r.powf(nf) + d;
        r.powf(nf - 1.0) * (phi - e) / m.powf((nf - 1.0) / nf)
    }

    /// q(r) = w'(r)/r, the tangential Hessian eigenvalue of w.
    pub fn w_prime_over_r(&self, r: f64) -> f64 {
        if r < 1e-12 {
            return self.w_second(0.0);
        }
        self.w_prime(r) / r
    }

    /// (w''(r), w'(r)/r) from a single defect evaluation; the hot path for
    /// the bootstrap integrands.
    pub fn pq(&self, r: f64) -> (f64, f64) {
        let nf = self.n as f64;
        if r < 1e-12 {
            let p0 = self.f.radial_value(0.0).unwrap_or(1.0).powf(1.0 / nf) - 1.0;
            return (p0, p0);
        }
        let d = self.defect(r);
        let phi = self.f.radial_value(r).unwrap_or(f64::NAN) - 1.0;
        let e = (((nf - 1.0) / nf) * (d / r.powf(nf)).ln_1p()).exp_m1();
        let m = r.powf(nf) + d;
        let p = r.powf(nf - 1.0) * (phi - e) / m.powf((nf - 1.0) / nf);
        let mut s = 0.0;
        for k in 0..self.n {
            s += m.powf(k as f64 / nf) * r.powf(nf - 1.0 - k as f64);
        }
        let q = d / (s * r);
        (p, q)
    }

    pub fn w(&self, r: f64) -> f64 {
        let i = self.segment(r);
        let (inc, _) = gk15(self.grid[i], r, &mut |t: f64| self.w_prime_from(t, i));
        self.w_cum[i] + inc
    }

    /// Laplacian of w: w'' + (n-1) w'/r.
    pub fn delta_w(&self, r: f64) -> f64 {
        self.w_second(r) + (self.n as f64 - 1.0) * self.w_prime_over_r(r)
    }

    /// The limit c = lim w(r), from integration to 1e7 plus a power-fitted
    /// tail of w'.
    pub fn limit_c(&self) -> f64 {
        self.limit_c
    }

    /// D^2 v at a point: v'' on the radial direction, v'/r on the tangent
    /// space; at the origin the smooth limit f(0)^(1/n) I.
    pub fn hessian(&self, x: &[f64]) -> Result<Mat, SolveError> {
        if x.len() != self.n {
            return Err(SolveError::BadDimension(x.len()));
        }
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r > *self.grid.last().unwrap() {
            return Err(SolveError::OutOfRange(r, self.r_max));
        }
        let nf = self.n as f64;
        let mut h = Mat::zeros(self.n);
        if r < 1e-12 {
            let v0 = self.f.radial_value(0.0)?.powf(1.0 / nf);
            for i in 0..self.n {
                h[(i, i)] = v0;
            }
            return Ok(h);
        }
        let vpp = self.v_second(r);
        let vor = self.v_prime(r) / r;
        for i in 0..self.n {
            for j in 0..self.n {
                let proj = x[i] * x[j] / (r * r);
                h[(i, j)] = vpp * proj + vor * (if i == j { 1.0 } else { 0.0 } - proj);
            }
        }
        Ok(h)
    }

    /// Hessian of w (Hessian of v minus the identity).
    pub fn hessian_w(&self, x: &[f64]) -> Result<Mat, SolveError> {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let p = self.w_second(r);
        let q = self.w_prime_over_r(r);
        let mut h = Mat::zeros(self.n);
        if r < 1e-12 {
            for i in 0..self.n {
                h[(i, i)] = p;
            }
            return Ok(h);
        }
        for i in 0..self.n {
            for j in 0..self.n {
                let proj = x[i] * x[j] / (r * r);
                h[(i, j)] = p * proj + q * (if i == j { 1.0 } else { 0.0 } - proj);
            }
        }
        Ok(h)
    }

    /// Closed-form linearized coefficients for n = 3: the radial eigenvalue
    /// of a(x) - I is q + q^2/3 and the tangential one (p+q)/2 + pq/3.
    pub fn coeff_radial_minus_1(&self, r: f64) -> f64 {
        let q = self.w_prime_over_r(r);
        q + q * q / 3.0
    }

    pub fn coeff_tangential_minus_1(&self, r: f64) -> f64 {
        let p = self.w_second(r);
        let q = self.w_prime_over_r(r);
        0.5 * (p + q) + p * q / 3.0
    }

    /// Fit the effective tail exponent of a profile from its own values on
    /// the last decade before `r_ref` (two-point log-log slope).
    pub fn fit_tail_exponent(&self, g: &dyn Fn(f64) -> f64, r_ref: f64) -> f64 {
        let v1 = g(r_ref / 2.0);
        let v2 = g(r_ref);
        if v1.abs() < 1e-300 || v2.abs() < 1e-300 || v1 * v2 <= 0.0 {
            return 6.0; // effectively-zero tail: treat as fast decay
        }
        (v1 / v2).abs().ln() / 2f64.ln()
    }

    /// CSV export: r, v, v', v'', w, delta_w over the solution grid.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,v,v_prime,v_second,w,delta_w\n");
        for &r in self.grid() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r,
                self.v(r),
                self.v_prime(r),
                self.v_second(r),
                self.w(r),
                self.delta_w(r)
            ));
        }
        out
    }
}

/// Entrywise Gauss quadrature of cof(I + t D^2 w(x)) over t in [0,1]; the
/// integrand is polynomial in t of degree n-1, so t_nodes >= n/2 is exact.
pub fn linearized_coefficients(
    sol: &RadialSolution,
    x: &[f64],
    t_nodes: usize,
) -> Result<Mat, SolveError> {
    if t_nodes < 8 {
        return Err(SolveError::GridTooCoarse(t_nodes));
    }
    let hw = sol.hessian_w(x)?;
    let n = sol.n;
    let rule = crate::quad::GaussRule::new(t_nodes);
    let mut acc = Mat::zeros(n);
    for (node, wgt) in rule.nodes.iter().zip(&rule.weights) {
        let t = 0.5 * (node + 1.0);
        let w = 0.5 * wgt;
        let mut m = Mat::identity(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] += t * hw[(i, j)];
            }
        }
        let cof = m.cofactor_matrix();
        for i in 0..n {
            for j in 0..n {
                acc[(i, j)] += w * cof[(i, j)];
            }
        }
    }
    Ok(acc)
}

/// Newton potential with inner cutoff:
///   H2(x) = -(1/(4 pi)) Int_(|y| >= r_inner) F2(y) / |x - y| dy , n = 3,
/// satisfying Laplacian(H2) = F2 for |x| > r_inner.
pub fn newton_potential(
    f2: &AnalyticField,
    r: f64,
    r_inner: f64,
    quad: &QuadratureSpec,
) -> Result<f64, SolveError> {
    if f2.dimension() != 3 {
        return Err(SolveError::BadDimension(f2.dimension()));
    }
    let sigma = f2
        .decay()
        .map(|d| d.sigma)
        .ok_or_else(|| FracError::MissingDecayProfile("Newton potential needs decay".into()))?;
    let g = |b: f64| f2.radial_value(b).unwrap_or(f64::NAN);
    let comp = Component::new(&g, sigma);
    let v = engine::newton_kernel_integral(&comp, r, r_inner, quad)?;
    Ok(-v / (4.0 * std::f64::consts::PI))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::AnalyticField;

    #[test]
    fn liouville_case_is_exact() {
        let f = AnalyticField::constant(1.0, 3).unwrap();
        let sol = solve_radial(f, 3, 512.0, 512).unwrap();
        for &r in &[0.5, 1.0, 8.0, 100.0, 512.0] {
            assert!(sol.w(r).abs() < 1e-10, "w({r}) = {}", sol.w(r));
            assert!((sol.v_prime(r) - r).abs() < 1e-10 * r.max(1.0));
            assert!((sol.v(r) - 0.5 * r * r).abs() < 1e-8 * (r * r).max(1.0));
        }
        assert!(sol.limit_c().abs() < 1e-10);
    }

    #[test]
    fn defect_identity_all_nodes() {
        // v''(v'/r)^(n-1) = f at every grid node
        let f = AnalyticField::perturbed_one(0.5, 2.5, 3).unwrap();
        let sol = solve_radial(f.clone(), 3, 64.0, 512).unwrap();
        for &r in sol.grid().iter().skip(1) {
            let lhs = sol.v_second(r) * (sol.v_prime(r) / r).powi(2);
            let want = f.radial_value(r).unwrap();
            assert!(
                (lhs - want).abs() < 1e-8 * want,
                "defect at r = {r}: {lhs} vs {want}"
            );
        }
    }

    #[test]
    fn convexity_for_positive_density() {
        let f = AnalyticField::perturbed_one(-0.8, 3.0, 3).unwrap();
        let sol = solve_radial(f, 3, 64.0, 512).unwrap();
        for &r in sol.grid().iter().skip(1) {
            assert!(sol.v_second(r) > 0.0, "v'' at {r}");
            assert!(sol.v_prime(r) > 0.0, "v' at {r}");
        }
    }

    #[test]
    fn moment_asymptotics_beta_below_n() {
        // w - c ~ -4 kappa r^(-1/2) for beta = 2.5, kappa = 0.5, n = 3
        let kappa = 0.5;
        let f = AnalyticField::perturbed_one(kappa, 2.5, 3).unwrap();
        let sol = solve_radial(f, 3, 1024.0, 1024).unwrap();
        let c = sol.limit_c();
        let r = 256.0_f64;
        let want = -4.0 * kappa * r.powf(-0.5);
        let got = sol.w(r) - c;
        assert!(
            (got - want).abs() < 0.05 * want.abs(),
            "w-c at {r}: {got} vs asymptotic {want}"
        );
    }

    #[test]
    fn hessian_eigenstructure() {
        let f = AnalyticField::perturbed_one(0.5, 2.5, 3).unwrap();
        let sol = solve_radial(f.clone(), 3, 64.0, 512).unwrap();
        let x = [3.0, -4.0, 12.0];
        let r = 13.0;
        let h = sol.hessian(&x).unwrap();
        // radial eigenvector
        let xv: Vec<f64> = x.iter().map(|v| v / r).collect();
        let hx = h.mul_vec(&xv);
        let vpp = sol.v_second(r);
        for (a, b) in hx.iter().zip(&xv) {
            assert!((a - vpp * b).abs() < 1e-10, "radial eigenpair");
        }
        // tangent eigenvector
        let tv = [4.0 / 5.0, 3.0 / 5.0, 0.0];
        let ht = h.mul_vec(&tv);
        let vor = sol.v_prime(r) / r;
        for (a, b) in ht.iter().zip(&tv) {
            assert!((a - vor * b).abs() < 1e-10, "tangent eigenpair");
        }
        // determinant identity
        assert!((h.det() - f.radial_value(r).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn hessian_at_origin_is_smooth_limit() {
        let f = AnalyticField::perturbed_one(0.5, 2.5, 3).unwrap();
        let sol = solve_radial(f.clone(), 3, 64.0, 512).unwrap();
        let h = sol.hessian(&[0.0, 0.0, 0.0]).unwrap();
        let want = f.radial_value(0.0).unwrap().powf(1.0 / 3.0);
        for i in 0..3 {
            assert!((h[(i, i)] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn linearized_identity_and_closed_form() {
        let f = AnalyticField::perturbed_one(0.5, 2.5, 3).unwrap();
        let sol = solve_radial(f.clone(), 3, 512.0, 512).unwrap();
        for &r in &[2.0, 5.0, 11.0, 31.0, 64.0, 128.0, 200.0, 256.0, 400.0, 500.0] {
            let x = [r, 0.0, 0.0];
            let a = linearized_coefficients(&sol, &x, 16).unwrap();
            let hw = sol.hessian_w(&x).unwrap();
            // contraction identity a_ij d_ij w = f - 1
            let lhs = a.contract(&hw);
            let want = f.radial_value(r).unwrap() - 1.0;
            assert!(
                (lhs - want).abs() <= 1e-6 * want.abs().max(1e-12),
                "identity at {r}: {lhs} vs {want}"
            );
            // closed-form eigenvalues
            let ar = 1.0 + sol.coeff_radial_minus_1(r);
            let at = 1.0 + sol.coeff_tangential_minus_1(r);
            assert!((a[(0, 0)] - ar).abs() < 1e-10);
            assert!((a[(1, 1)] - at).abs() < 1e-10);
            assert!(a[(0, 1)].abs() < 1e-12);
        }
    }

    #[test]
    fn linearized_identity_trivial_case() {
        let f = AnalyticField::constant(1.0, 3).unwrap();
        let sol = solve_radial(f, 3, 64.0, 512).unwrap();
        let a = linearized_coefficients(&sol, &[5.0, 1.0, -2.0], 16).unwrap();
        let diff = a.sub(&Mat::identity(3));
        assert!(diff.max_abs() < 1e-12, "cofactor of identity");
    }

    #[test]
    fn solver_gates() {
        let f = AnalyticField::perturbed_one(0.5, 2.5, 3).unwrap();
        assert!(matches!(
            solve_radial(f.clone(), 3, 8.0, 512),
            Err(SolveError::RMaxTooSmall(_))
        ));
        assert!(matches!(
            solve_radial(f.clone(), 3, 64.0, 100),
            Err(SolveError::GridTooCoarse(_))
        ));
        let neg = AnalyticField::constant(-1.0, 3).unwrap();
        assert!(matches!(
            solve_radial(neg, 3, 64.0, 512),
            Err(SolveError::NonPositiveDensity(_))
        ));
    }

    #[test]
    fn newton_potential_laplacian_consistency() {
        // Laplacian of H2 equals F2 beyond the cutoff, via central differences
        let f2 = AnalyticField::inverse_power(4.0, 3).unwrap();
        let quad = QuadratureSpec { mid_nodes: 192, ..Default::default() };
        let r1 = 1.0;
        for &r in &[4.0_f64, 8.0, 16.0] {
            let h = 0.01 * r;
            let g = |rr: f64| newton_potential(&f2, rr, r1, &quad).unwrap();
            let g0 = g(r);
            let lap = (g(r + h) - 2.0 * g0 + g(r - h)) / (h * h)
                + (2.0 / r) * (g(r + h) - g(r - h)) / (2.0 * h);
            let want = f2.radial_value(r).unwrap();
            assert!(
                (lap - want).abs() < 0.01 * want.abs(),
                "Laplacian at {r}: {lap} vs {want}"
            );
        }
    }

    #[test]
    fn newton_potential_decay_gate() {
        let slow = AnalyticField::inverse_power(1.5, 3).unwrap();
        let quad = QuadratureSpec::default();
        assert!(newton_potential(&slow, 8.0, 1.0, &quad).is_err());
    }
}
