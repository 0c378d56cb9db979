//! Radial singular-integral engine, dimension 3.
//!
//! Every integrand this toolkit meets is axially symmetric about the
//! evaluation point's direction: with a = |x|, b = |y| and t = cos of the
//! angle between x and y, it has the form
//!
//!     H(y) = h0(b) + h1(b) t + h2(b) t^2 .
//!
//! Scalar radial fields are the h0-only case; gradient components evaluated
//! on their axis contribute t; contracted Hessian/coefficient tensors
//! contribute t^2. For a kernel |x - y|^(-p) the integral over the shell
//! |y| = b reduces to closed-form moments of m = |x - y|^2 on
//! [(a-b)^2, (a+b)^2], so the whole operator evaluation is one-dimensional.
//!
//! The principal value is isolated in a near ball |x - y| <= delta handled by
//! the symmetrized second difference; the shells' angular moments are capped
//! at m >= delta^2, which partitions R^3 exactly between the two zones.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::quad::{
    graded_edges_toward, lin_edges, log_edges, panels_integrate, power_moment, GaussRule,
};

use super::FracError;

/// Tail treatment beyond the truncation radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TailKind {
    #[default]
    PowerLaw,
    None,
}

/// Resolution and truncation parameters of the singular-integral engine.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSpec {
    /// Half-width of the symmetrized principal-value zone; the effective
    /// near radius at an evaluation radius a is min(near_radius, a/4).
    pub near_radius: f64,
    /// Radial resolution between the near zone and the truncation radius;
    /// panel counts in every section scale linearly with this.
    pub mid_nodes: usize,
    /// Truncation radius for direct quadrature; `None` means 8 max(|x|, 1).
    pub tail_radius: Option<f64>,
    pub tail_model: TailKind,
    /// Angular nodes for the 3-D brute-force path (t-Gauss; the azimuthal
    /// grid doubles this). The near zone uses half of it.
    pub angular_nodes: usize,
    /// Gauss nodes on [0,1] for the linearized-coefficient integral.
    pub t_nodes: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            near_radius: 1.0,
            mid_nodes: 96,
            tail_radius: None,
            tail_model: TailKind::PowerLaw,
            angular_nodes: 48,
            t_nodes: 16,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<(), FracError> {
        if !(self.near_radius > 0.0) {
            return Err(FracError::BadSpec("near_radius must be positive".into()));
        }
        if self.mid_nodes < 16 {
            return Err(FracError::BadSpec("mid_nodes must be at least 16".into()));
        }
        if self.angular_nodes < 8 || self.t_nodes < 4 {
            return Err(FracError::BadSpec(
                "angular_nodes >= 8 and t_nodes >= 4 required".into(),
            ));
        }
        if let Some(rt) = self.tail_radius {
            if rt <= self.near_radius {
                return Err(FracError::BadSpec(
                    "tail_radius must exceed near_radius".into(),
                ));
            }
        }
        Ok(())
    }

    pub(crate) fn effective_delta(&self, a: f64) -> f64 {
        self.near_radius.min(a / 4.0)
    }

    pub(crate) fn effective_tail_radius(&self, a: f64) -> f64 {
        self.tail_radius.unwrap_or(8.0 * a.max(1.0)).max(2.5 * a)
    }
}

/// One radial component of an axial integrand, with the power-law exponent
/// used to extend it beyond the truncation radius (anchored at the truncation
/// value, so the extension is continuous). `tail_sigma` may be negative for
/// admissible growth.
pub struct Component<'a> {
    pub eval: &'a dyn Fn(f64) -> f64,
    pub tail_sigma: f64,
}

impl<'a> Component<'a> {
    pub fn new(eval: &'a dyn Fn(f64) -> f64, tail_sigma: f64) -> Self {
        Component { eval, tail_sigma }
    }
}

/// Axial integrand h0(b) + h1(b) t + h2(b) t^2.
pub struct Axial<'a> {
    pub h0: Component<'a>,
    pub h1: Option<Component<'a>>,
    pub h2: Option<Component<'a>>,
}

/// Value plus a zone breakdown and error estimates. `abs_scale` accumulates
/// the same quadrature applied to |integrand| — the natural magnitude against
/// which near-cancellations (e.g. harmonicity of the fundamental solution)
/// are judged.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct EngineDiag {
    pub value: f64,
    pub near: f64,
    pub mid: f64,
    pub tail: f64,
    pub err_near: f64,
    pub err_mid: f64,
    pub err_tail: f64,
    pub abs_scale: f64,
}

/// Closed-form angular moments on the shell |y| = b for the kernel
/// |x-y|^(-p): j0 = 2 pi Int t^0 (...) dt and the differences against t^1,
/// t^2 weights (the differences carry the vanishing factors explicitly,
/// which keeps near-diagonal assembly cancellation-free).
pub(crate) struct Moments {
    pub j0: f64,
    pub j1_m_j0: f64,
    pub j2_m_j0: f64,
}

pub(crate) fn sphere_moments(a: f64, b: f64, p: f64, cap_m: f64) -> Option<Moments> {
    debug_assert!(a > 0.0 && b > 0.0);
    let l_true = (a - b) * (a - b);
    let u = (a + b) * (a + b);
    if u <= cap_m {
        return None;
    }
    let capped = cap_m > l_true;
    let l = if capped { cap_m } else { l_true };
    let diff = if capped { u - cap_m } else { 4.0 * a * b };
    let ratio_m1 = diff / l;
    let e0 = 1.0 - 0.5 * p;
    let m0 = power_moment(l, e0, ratio_m1);
    let m1 = power_moment(l, e0 + 1.0, ratio_m1);
    let m2 = power_moment(l, e0 + 2.0, ratio_m1);
    let j0 = PI / (a * b) * m0;
    // Int (m - L) m^(-p/2) over [l, u]; L is the true lower endpoint even
    // when the near ball caps the integration range.
    let im_l = m1 - l_true * m0;
    let j1_m_j0 = -(PI / (2.0 * a * a * b * b)) * im_l;
    // Int (L - m)(U - m) m^(-p/2): both factors vanish at the endpoints.
    let ilu = l_true * u * m0 - (l_true + u) * m1 + m2;
    let j2_m_j0 = PI / (4.0 * a.powi(3) * b.powi(3)) * ilu;
    Some(Moments { j0, j1_m_j0, j2_m_j0 })
}

// Geometry of y = x + z for x on the axis: |x| = a, |z| = rho, cos(z,x) = t.
#[inline]
fn displaced(a: f64, rho: f64, t: f64) -> (f64, f64) {
    let b = (a * a + 2.0 * a * rho * t + rho * rho).sqrt();
    let tau = (a + rho * t) / b;
    (b, tau)
}

fn axial_value(ax: &Axial, b: f64, tau: f64) -> f64 {
    let mut v = (ax.h0.eval)(b);
    if let Some(h1) = &ax.h1 {
        v += (h1.eval)(b) * tau;
    }
    if let Some(h2) = &ax.h2 {
        v += (h2.eval)(b) * tau * tau;
    }
    v
}

struct PanelPlan {
    graded: usize,
    logp: usize,
    band: usize,
    tail: usize,
    near: usize,
}

fn plan(spec: &QuadratureSpec) -> PanelPlan {
    let m = spec.mid_nodes;
    PanelPlan {
        graded: (m / 16).max(6),
        logp: (m / 8).max(8),
        band: (m / 16).clamp(4, 24),
        tail: (m / 8).max(9),
        near: (m / 4).max(20),
    }
}

/// Mid-zone panel edges: [b_min, a-delta], the capped band [a-delta, a+delta],
/// [a+delta, 2a], and [2a, r_tail].
fn mid_edges(a: f64, delta: f64, r_tail: f64, pl: &PanelPlan) -> Vec<Vec<f64>> {
    let b_min = a * 1e-9;
    let mut sections = Vec::new();
    // [b_min, a/2] in log b, then [a/2, a-delta] graded toward the band
    if a / 2.0 > b_min {
        sections.push(log_edges(b_min, a / 2.0, pl.logp));
    }
    if a - delta > a / 2.0 {
        sections.push(graded_edges_toward(a, delta, a / 2.0, pl.graded, false));
    }
    sections.push(lin_edges(a - delta, a + delta, pl.band));
    if 2.0 * a > a + delta {
        sections.push(graded_edges_toward(a, delta, a, pl.graded, true));
    }
    if r_tail > 2.0 * a {
        sections.push(log_edges(2.0 * a, r_tail, pl.logp));
    }
    sections
}

// The symmetrized second difference loses eps |u| to roundoff; that noise is
// amplified by rho^(-2s) toward the inner edge, so the near zone stops at
// 1e-4 delta and completes the rest analytically (the completion's own error
// is O(rho_min^2) relative, far below the noise a smaller edge would admit).
const NEAR_RHO_MIN_FACTOR: f64 = 1e-4;
const TAIL_SPAN: f64 = 1e3;

/// Shared near-zone driver: integrates rho^(-1-2s) W(rho) over (0, delta],
/// where W is supplied by the caller (symmetrized difference for the
/// principal value, plain angular average for bilinear remainders). Returns
/// (value, error, abs_scale); the small disk below rho_min is completed
/// analytically assuming the leading rho^(1-2s) behaviour.
fn near_zone<W: FnMut(f64) -> (f64, f64)>(
    s: f64,
    delta: f64,
    panels: usize,
    mut w: W,
) -> (f64, f64, f64) {
    let rho_min = delta * NEAR_RHO_MIN_FACTOR;
    let edges = log_edges(rho_min, delta, panels);
    let rule = GaussRule::new(8);
    let half = GaussRule::new(4);
    let mut abs_acc = 0.0;
    let mut f = |rho: f64| {
        let (wv, wabs) = w(rho);
        abs_acc += wabs.abs();
        rho.powf(-1.0 - 2.0 * s) * wv
    };
    let (mut value, err) = panels_integrate(
        &edges
            .iter()
            .copied()
            .collect::<Vec<_>>(),
        &rule,
        &half,
        &mut f,
    );
    // completion below rho_min: integrand ~ C rho^(1-2s)
    let (w_min, _) = w(rho_min);
    let g_min = rho_min.powf(-1.0 - 2.0 * s) * w_min;
    value += g_min * rho_min / (2.0 - 2.0 * s);
    (value, err, abs_acc)
}

/// Principal-value kernel integral
///   P.V. Int (H(x) - H(y)) / |x-y|^(3+2s) dy
/// for an axial integrand H at |x| = a (without the normalization constant).
pub fn pv_kernel_integral(
    ax: &Axial,
    s: f64,
    a: f64,
    spec: &QuadratureSpec,
) -> Result<EngineDiag, FracError> {
    spec.validate()?;
    if !(0.0 < s && s < 1.0) {
        return Err(FracError::BadOrder { n: 3, s });
    }
    if a <= 0.0 {
        return Err(FracError::Hypothesis("evaluation radius must be positive".into()));
    }
    let p = 3.0 + 2.0 * s;
    let delta = spec.effective_delta(a);
    let r_tail = spec.effective_tail_radius(a);
    if spec.tail_model == TailKind::None && r_tail < 4.0 * a {
        return Err(FracError::InsufficientTailRadius { have: r_tail, need: 4.0 * a });
    }
    let pl = plan(spec);
    let nt = (spec.angular_nodes / 2).max(12);
    let t_rule = GaussRule::new(nt);
    let h_at_x = axial_value(ax, a, 1.0);

    // near zone: -1/2 * Int rho^(-1-2s) * 2 pi Int_t [H(x+z)+H(x-z)-2H(x)]
    let mut sym = |rho: f64| {
        let mut acc = 0.0;
        let mut acc_abs = 0.0;
        for (t, wt) in t_rule.nodes.iter().zip(&t_rule.weights) {
            let (bp, taup) = displaced(a, rho, *t);
            let (bm, taum) = displaced(a, rho, -*t);
            let d = axial_value(ax, bp, taup) + axial_value(ax, bm, taum) - 2.0 * h_at_x;
            acc += wt * d;
            acc_abs += wt * d.abs();
        }
        (2.0 * PI * acc, 2.0 * PI * acc_abs)
    };
    let (near_raw, err_near, near_abs) = near_zone(s, delta, pl.near, &mut sym);
    let near = -0.5 * near_raw;

    // mid zone: shells with moments capped at m >= delta^2
    let cap = delta * delta;
    let rule = GaussRule::new(8);
    let half = GaussRule::new(4);
    let eval_h = |b: f64| -> (f64, f64, f64) {
        let h0 = (ax.h0.eval)(b);
        let h1 = ax.h1.as_ref().map(|c| (c.eval)(b)).unwrap_or(0.0);
        let h2 = ax.h2.as_ref().map(|c| (c.eval)(b)).unwrap_or(0.0);
        (h0, h1, h2)
    };
    let mut abs_mid = 0.0;
    let mut shell = |b: f64| -> f64 {
        match sphere_moments(a, b, p, cap) {
            None => 0.0,
            Some(m) => {
                let (h0, h1, h2) = eval_h(b);
                // H(x) J0 - (h0 J0 + h1 J1 + h2 J2), assembled so that the
                // on-ray difference multiplies the large moment
                let on_ray = h_at_x - (h0 + h1 + h2);
                let v = on_ray * m.j0 - h1 * m.j1_m_j0 - h2 * m.j2_m_j0;
                abs_mid += b * b
                    * (on_ray.abs() * m.j0.abs()
                        + h1.abs() * m.j1_m_j0.abs()
                        + h2.abs() * m.j2_m_j0.abs());
                b * b * v
            }
        }
    };
    let mut mid = 0.0;
    let mut err_mid = 0.0;
    for edges in mid_edges(a, delta, r_tail, &pl) {
        let (v, e) = panels_integrate(&edges, &rule, &half, &mut shell);
        mid += v;
        err_mid += e;
    }

    // tail zone: anchored power-law models on [r_tail, TAIL_SPAN r_tail],
    // then the leading-kernel analytic remainder
    let mut tail = 0.0;
    let mut err_tail = 0.0;
    if spec.tail_model == TailKind::PowerLaw {
        let anchor = eval_h(r_tail);
        let sig = (
            ax.h0.tail_sigma,
            ax.h1.as_ref().map(|c| c.tail_sigma).unwrap_or(0.0),
            ax.h2.as_ref().map(|c| c.tail_sigma).unwrap_or(0.0),
        );
        // convergence of every tail piece: exponent 2 - p - sigma < -1
        for (hk, sk) in [(anchor.0, sig.0), (anchor.1, sig.1), (anchor.2, sig.2)] {
            if hk != 0.0 && 2.0 * s + sk <= 1e-3 {
                return Err(FracError::NotIntegrable(format!(
                    "tail component with exponent {sk} is too slow for s = {s}"
                )));
            }
        }
        let model = |b: f64| -> (f64, f64, f64) {
            (
                anchor.0 * (b / r_tail).powf(-sig.0),
                anchor.1 * (b / r_tail).powf(-sig.1),
                anchor.2 * (b / r_tail).powf(-sig.2),
            )
        };
        let b_outer = TAIL_SPAN * r_tail;
        let mut shell_tail = |b: f64| -> f64 {
            match sphere_moments(a, b, p, cap) {
                None => 0.0,
                Some(m) => {
                    let (h0, h1, h2) = model(b);
                    let on_ray = h_at_x - (h0 + h1 + h2);
                    b * b * (on_ray * m.j0 - h1 * m.j1_m_j0 - h2 * m.j2_m_j0)
                }
            }
        };
        let edges = log_edges(r_tail, b_outer, pl.tail);
        let (v, e) = panels_integrate(&edges, &rule, &half, &mut shell_tail);
        tail += v;
        err_tail += e;
        // remainder beyond b_outer: J0 -> 4 pi b^-p, J1 -> (4 pi p a / 3) b^(-p-1),
        // J2 -> (4 pi / 3) b^-p
        let bo = b_outer;
        let rem_value = h_at_x * 4.0 * PI * bo.powf(-2.0 * s) / (2.0 * s);
        let (c0, c1, c2) = (
            anchor.0 * r_tail.powf(sig.0),
            anchor.1 * r_tail.powf(sig.1),
            anchor.2 * r_tail.powf(sig.2),
        );
        let rem_h = 4.0 * PI * c0 * bo.powf(-2.0 * s - sig.0) / (2.0 * s + sig.0)
            + (4.0 * PI * p * a / 3.0) * c1 * bo.powf(-1.0 - 2.0 * s - sig.1)
                / (1.0 + 2.0 * s + sig.1)
            + (4.0 * PI / 3.0) * c2 * bo.powf(-2.0 * s - sig.2) / (2.0 * s + sig.2);
        let remainder = rem_value - rem_h;
        tail += remainder;
        err_tail += remainder.abs() * (a / bo).powi(2) * 10.0;
        // model-mismatch proxy at r_tail / 2
        let true_mid = eval_h(r_tail / 2.0);
        let model_mid = model(r_tail / 2.0);
        let scale = true_mid.0.abs() + true_mid.1.abs() + true_mid.2.abs();
        if scale > 0.0 {
            let mis = ((true_mid.0 - model_mid.0).abs()
                + (true_mid.1 - model_mid.1).abs()
                + (true_mid.2 - model_mid.2).abs())
                / scale;
            err_tail += mis * tail.abs();
        }
    } else {
        // truncated: report the (un-modelled) omitted magnitude as tail error
        err_tail = h_at_x.abs() * 4.0 * PI * r_tail.powf(-2.0 * s) / (2.0 * s);
    }

    Ok(EngineDiag {
        value: near + mid + tail,
        near,
        mid,
        tail,
        err_near,
        err_mid,
        err_tail,
        abs_scale: 0.5 * near_abs + abs_mid.abs() + tail.abs(),
    })
}

/// Weakly singular kernel integral Int g(b-shell) / |x-y|^(3-2s) dy of a
/// radial profile (the Riesz potential without its constant).
pub fn riesz_kernel_integral(
    g: &Component,
    s: f64,
    a: f64,
    spec: &QuadratureSpec,
) -> Result<EngineDiag, FracError> {
    spec.validate()?;
    if !(0.0 < s && s < 1.0) {
        return Err(FracError::BadOrder { n: 3, s });
    }
    if a <= 0.0 {
        return Err(FracError::Hypothesis("evaluation radius must be positive".into()));
    }
    if g.tail_sigma <= 2.0 * s + 1e-9 {
        return Err(FracError::NotIntegrable(format!(
            "Riesz potential needs decay sigma > 2s (sigma = {}, s = {s})",
            g.tail_sigma
        )));
    }
    let p = 3.0 - 2.0 * s;
    let pl = plan(spec);
    let r_tail = spec.effective_tail_radius(a);
    let rule = GaussRule::new(8);
    let half = GaussRule::new(4);
    let rho_sing = a * 1e-9;
    let b_min = a * 1e-9;

    let mut abs_acc = 0.0;
    let mut shell = |b: f64| -> f64 {
        match sphere_moments(a, b, p, 0.0) {
            None => 0.0,
            Some(m) => {
                let v = b * b * (g.eval)(b) * m.j0;
                abs_acc += v.abs();
                v
            }
        }
    };
    let mut sections: Vec<Vec<f64>> = Vec::new();
    if a / 2.0 > b_min {
        sections.push(log_edges(b_min, a / 2.0, pl.logp));
    }
    sections.push(graded_edges_toward(a, rho_sing, a / 2.0, pl.graded + pl.band, false));
    sections.push(graded_edges_toward(a, rho_sing, a, pl.graded + pl.band, true));
    if r_tail > 2.0 * a {
        sections.push(log_edges(2.0 * a, r_tail, pl.logp));
    }
    let mut mid = 0.0;
    let mut err_mid = 0.0;
    for edges in &sections {
        let (v, e) = panels_integrate(edges, &rule, &half, &mut shell);
        mid += v;
        err_mid += e;
    }
    // completion across the skipped sliver |b - a| < rho_sing, where
    // J0 ~ (2 pi / (a b (1-2s))) |a-b|^(2s-1)
    if (1.0 - 2.0 * s).abs() > 1e-6 {
        let f_a = (g.eval)(a);
        mid += f_a * a * a * (2.0 * PI / (a * a * (1.0 - 2.0 * s)))
            * (2.0 * rho_sing.powf(2.0 * s) / (2.0 * s));
    }

    // tail: anchored power model then analytic remainder
    let mut tail = 0.0;
    let mut err_tail = 0.0;
    match spec.tail_model {
        TailKind::PowerLaw => {
            let anchor = (g.eval)(r_tail);
            let b_outer = TAIL_SPAN * r_tail;
            let mut shell_tail = |b: f64| -> f64 {
                match sphere_moments(a, b, p, 0.0) {
                    None => 0.0,
                    Some(m) => b * b * anchor * (b / r_tail).powf(-g.tail_sigma) * m.j0,
                }
            };
            let edges = log_edges(r_tail, b_outer, pl.tail);
            let (v, e) = panels_integrate(&edges, &rule, &half, &mut shell_tail);
            tail += v;
            err_tail += e;
            let c = anchor * r_tail.powf(g.tail_sigma);
            let remainder =
                4.0 * PI * c * b_outer.powf(2.0 * s - g.tail_sigma) / (g.tail_sigma - 2.0 * s);
            tail += remainder;
            err_tail += remainder.abs() * (a / b_outer).powi(2) * 10.0;
        }
        TailKind::None => {
            if r_tail < 4.0 * a {
                return Err(FracError::InsufficientTailRadius { have: r_tail, need: 4.0 * a });
            }
            let anchor = (g.eval)(r_tail).abs();
            err_tail = 4.0 * PI * anchor * r_tail.powf(2.0 * s) / (g.tail_sigma - 2.0 * s);
        }
    }

    Ok(EngineDiag {
        value: mid + tail,
        near: 0.0,
        mid,
        tail,
        err_near: 0.0,
        err_mid,
        err_tail,
        abs_scale: abs_acc + tail.abs(),
    })
}

/// One separable term of a bilinear-remainder integrand:
/// coeff * g(b) * t^power with the tail exponent of g.
pub struct BilinearTerm<'a> {
    pub coeff: f64,
    pub g: &'a dyn Fn(f64) -> f64,
    pub power: usize,
    pub tail_sigma: f64,
}

/// Absolutely convergent product-difference integral
///   Int num(y) / |x-y|^(3+2s) dy,    num(y) = sum_j coeff_j g_j(b) t^k_j,
/// where num vanishes quadratically at y = x (no principal value needed).
pub fn bilinear_kernel_integral(
    terms: &[BilinearTerm],
    s: f64,
    a: f64,
    spec: &QuadratureSpec,
) -> Result<EngineDiag, FracError> {
    spec.validate()?;
    if !(0.0 < s && s < 1.0) {
        return Err(FracError::BadOrder { n: 3, s });
    }
    if a <= 0.0 {
        return Err(FracError::Hypothesis("evaluation radius must be positive".into()));
    }
    let p = 3.0 + 2.0 * s;
    let delta = spec.effective_delta(a);
    let r_tail = spec.effective_tail_radius(a);
    let pl = plan(spec);
    let nt = (spec.angular_nodes / 2).max(12);
    let t_rule = GaussRule::new(nt);

    let num = |b: f64, tau: f64| -> f64 {
        terms
            .iter()
            .map(|tm| tm.coeff * (tm.g)(b) * tau.powi(tm.power as i32))
            .sum()
    };

    // near ball: direct 2-D quadrature, integrand rho^(1-2s)-integrable
    let mut angular = |rho: f64| {
        let mut acc = 0.0;
        let mut acc_abs = 0.0;
        for (t, wt) in t_rule.nodes.iter().zip(&t_rule.weights) {
            let (b, tau) = displaced(a, rho, *t);
            let v = num(b, tau);
            acc += wt * v;
            acc_abs += wt * v.abs();
        }
        (2.0 * PI * acc, 2.0 * PI * acc_abs)
    };
    let (near, err_near, near_abs) = near_zone(s, delta, pl.near, &mut angular);

    // shells with capped moments; stabilized so that num(b, 1) (which
    // vanishes as b -> a) multiplies the large moment
    let cap = delta * delta;
    let rule = GaussRule::new(8);
    let half = GaussRule::new(4);
    let grouped = |b: f64| -> (f64, f64, f64) {
        let mut g0 = 0.0;
        let mut g1 = 0.0;
        let mut g2 = 0.0;
        for tm in terms {
            let v = tm.coeff * (tm.g)(b);
            match tm.power {
                0 => g0 += v,
                1 => g1 += v,
                _ => g2 += v,
            }
        }
        (g0, g1, g2)
    };
    let mut abs_mid = 0.0;
    let mut shell = |b: f64| -> f64 {
        match sphere_moments(a, b, p, cap) {
            None => 0.0,
            Some(m) => {
                let (g0, g1, g2) = grouped(b);
                let on_ray = g0 + g1 + g2;
                let v = on_ray * m.j0 + g1 * m.j1_m_j0 + g2 * m.j2_m_j0;
                abs_mid += b * b * (on_ray.abs() * m.j0.abs() + g1.abs() * m.j1_m_j0.abs()
                    + g2.abs() * m.j2_m_j0.abs());
                b * b * v
            }
        }
    };
    let mut mid = 0.0;
    let mut err_mid = 0.0;
    for edges in mid_edges(a, delta, r_tail, &pl) {
        let (v, e) = panels_integrate(&edges, &rule, &half, &mut shell);
        mid += v;
        err_mid += e;
    }

    // tail: per-term anchored models + analytic remainder
    let mut tail = 0.0;
    let mut err_tail = 0.0;
    if spec.tail_model == TailKind::PowerLaw {
        let anchors: Vec<f64> = terms.iter().map(|tm| tm.coeff * (tm.g)(r_tail)).collect();
        for (tm, anc) in terms.iter().zip(&anchors) {
            if *anc != 0.0 && 2.0 * s + tm.tail_sigma <= 1e-3 {
                return Err(FracError::NotIntegrable(format!(
                    "bilinear tail term with exponent {} too slow for s = {s}",
                    tm.tail_sigma
                )));
            }
        }
        let b_outer = TAIL_SPAN * r_tail;
        let mut shell_tail = |b: f64| -> f64 {
            match sphere_moments(a, b, p, cap) {
                None => 0.0,
                Some(m) => {
                    let mut g0 = 0.0;
                    let mut g1 = 0.0;
                    let mut g2 = 0.0;
                    for (tm, anc) in terms.iter().zip(&anchors) {
                        let v = anc * (b / r_tail).powf(-tm.tail_sigma);
                        match tm.power {
                            0 => g0 += v,
                            1 => g1 += v,
                            _ => g2 += v,
                        }
                    }
                    let on_ray = g0 + g1 + g2;
                    b * b * (on_ray * m.j0 + g1 * m.j1_m_j0 + g2 * m.j2_m_j0)
                }
            }
        };
        let edges = log_edges(r_tail, b_outer, pl.tail);
        let (v, e) = panels_integrate(&edges, &rule, &half, &mut shell_tail);
        tail += v;
        err_tail += e;
        for (tm, anc) in terms.iter().zip(&anchors) {
            let c = anc * r_tail.powf(tm.tail_sigma);
            let rem = match tm.power {
                0 => 4.0 * PI * c * b_outer.powf(-2.0 * s - tm.tail_sigma)
                    / (2.0 * s + tm.tail_sigma),
                1 => (4.0 * PI * p * a / 3.0) * c
                    * b_outer.powf(-1.0 - 2.0 * s - tm.tail_sigma)
                    / (1.0 + 2.0 * s + tm.tail_sigma),
                _ => (4.0 * PI / 3.0) * c * b_outer.powf(-2.0 * s - tm.tail_sigma)
                    / (2.0 * s + tm.tail_sigma),
            };
            tail += rem;
            err_tail += rem.abs() * (a / b_outer).powi(2) * 10.0;
        }
    } else {
        let omitted: f64 = terms
            .iter()
            .map(|tm| (tm.coeff * (tm.g)(r_tail)).abs())
            .sum();
        err_tail = omitted * 4.0 * PI * r_tail.powf(-2.0 * s) / (2.0 * s);
    }

    Ok(EngineDiag {
        value: near + mid + tail,
        near,
        mid,
        tail,
        err_near,
        err_mid,
        err_tail,
        abs_scale: near_abs + abs_mid + tail.abs(),
    })
}

/// Newton-kernel integral Int_(b >= r_inner) g(b) / |x-y| dy. The angular
/// reduction of the kernel is exactly 4 pi / max(a, b).
pub fn newton_kernel_integral(
    g: &Component,
    a: f64,
    r_inner: f64,
    spec: &QuadratureSpec,
) -> Result<f64, FracError> {
    spec.validate()?;
    if a <= 0.0 || r_inner < 0.0 {
        return Err(FracError::Hypothesis("need a > 0 and r_inner >= 0".into()));
    }
    if g.tail_sigma <= 2.0 + 1e-9 {
        return Err(FracError::NotIntegrable(format!(
            "Newton potential needs decay sigma > 2, got {}",
            g.tail_sigma
        )));
    }
    let pl = plan(spec);
    let r_tail = spec.effective_tail_radius(a).max(4.0 * r_inner.max(1.0));
    let rule = GaussRule::new(8);
    let half = GaussRule::new(4);
    let mut total = 0.0;
    let mut inner = |b: f64| (g.eval)(b) * b * b * 4.0 * PI / a;
    let mut outer = |b: f64| (g.eval)(b) * b * 4.0 * PI;
    if a > r_inner {
        let lo = r_inner.max(a * 1e-9);
        if a > lo {
            let (v, _) = panels_integrate(&log_edges(lo, a, pl.logp * 2), &rule, &half, &mut inner);
            total += v;
        }
        let (v, _) =
            panels_integrate(&log_edges(a, r_tail, pl.logp * 2), &rule, &half, &mut outer);
        total += v;
    } else {
        let (v, _) = panels_integrate(
            &log_edges(r_inner.max(1e-12), r_tail, pl.logp * 2),
            &rule,
            &half,
            &mut outer,
        );
        total += v;
    }
    // power tail beyond r_tail
    let c = (g.eval)(r_tail) * r_tail.powf(g.tail_sigma);
    total += 4.0 * PI * c * r_tail.powf(2.0 - g.tail_sigma) / (g.tail_sigma - 2.0);
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::GaussRule;

    // closed-form moments vs direct Gauss quadrature in t; the cap removes
    // t > t_cap, so integrate the smooth integrand over the exact range
    fn direct_moment(a: f64, b: f64, p: f64, k: usize, cap: f64) -> f64 {
        let rule = GaussRule::new(400);
        let t_cap = ((a * a + b * b - cap) / (2.0 * a * b)).clamp(-1.0, 1.0);
        rule.integrate(-1.0, t_cap, |t| {
            let m = a * a + b * b - 2.0 * a * b * t;
            t.powi(k as i32) * m.powf(-p / 2.0)
        }) * 2.0
            * PI
    }

    #[test]
    fn moments_match_direct_quadrature() {
        for &(a, b, p) in &[
            (8.0_f64, 3.0_f64, 3.4_f64),
            (8.0, 12.5, 3.4),
            (2.0, 30.0, 2.4),
            (5.0, 5.9, 1.0),
            (1.0, 0.2, 4.4),
        ] {
            let m = sphere_moments(a, b, p, 0.0).unwrap();
            let d0 = direct_moment(a, b, p, 0, 0.0);
            let d1 = direct_moment(a, b, p, 1, 0.0);
            let d2 = direct_moment(a, b, p, 2, 0.0);
            assert!((m.j0 - d0).abs() < 1e-8 * d0.abs(), "j0 a={a} b={b} p={p}");
            assert!(
                ((m.j0 + m.j1_m_j0) - d1).abs() < 1e-7 * d0.abs(),
                "j1 a={a} b={b} p={p}: {} vs {d1}",
                m.j0 + m.j1_m_j0
            );
            assert!(
                ((m.j0 + m.j2_m_j0) - d2).abs() < 1e-7 * d0.abs(),
                "j2 a={a} b={b} p={p}: {} vs {d2}",
                m.j0 + m.j2_m_j0
            );
        }
    }

    #[test]
    fn capped_moments_match_direct() {
        // shell crossing the near ball: cap at delta^2
        let (a, p) = (8.0, 3.6);
        let delta: f64 = 1.0;
        for &b in &[7.2_f64, 7.9, 8.0, 8.05, 8.8] {
            let m = sphere_moments(a, b, p, delta * delta).unwrap();
            let d0 = direct_moment(a, b, p, 0, delta * delta);
            assert!(
                (m.j0 - d0).abs() < 1e-6 * d0.abs().max(1e-300),
                "b={b}: {} vs {d0}",
                m.j0
            );
        }
    }

    #[test]
    fn newton_kernel_constant_density() {
        // g = 1 on [1, R]: Int = 4 pi [ (1/a) Int_1^a b^2 db + Int_a^R b db ]
        // checked against the closed form with a fast-decaying tail beyond
        let g = |_: f64| 1.0;
        let spec = QuadratureSpec { tail_radius: Some(50.0), ..Default::default() };
        let comp = Component::new(&g, 6.0);
        let a = 5.0;
        let v = newton_kernel_integral(&comp, a, 1.0, &spec).unwrap();
        let exact_inside = 4.0 * PI * ((a.powi(3) - 1.0) / 3.0) / a;
        let r_t = 50.0f64;
        let exact_outside = 4.0 * PI * (r_t * r_t - a * a) / 2.0;
        let tail = 4.0 * PI * r_t.powf(6.0) * r_t.powf(2.0 - 6.0) / 4.0;
        let want = exact_inside + exact_outside + tail;
        assert!((v - want).abs() < 1e-6 * want, "{v} vs {want}");
    }

    #[test]
    fn constant_field_annihilated() {
        let one = |_: f64| 1.0;
        let ax = Axial {
            h0: Component::new(&one, 0.0),
            h1: None,
            h2: None,
        };
        let spec = QuadratureSpec::default();
        let d = pv_kernel_integral(&ax, 0.3, 8.0, &spec).unwrap();
        assert!(d.value.abs() < 1e-10, "constant not annihilated: {}", d.value);
    }
}
