//! Principal-value fractional Laplacian, Riesz potential, bilinear remainder
//! and the fractional product rule, evaluated by singular-integral quadrature
//! with analytic tail models.

pub mod brute;
pub mod engine;
mod gamma;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::{AnalyticField, DecayDirection, FieldError};

pub use engine::{Axial, BilinearTerm, Component, EngineDiag, QuadratureSpec, TailKind};
pub use gamma::gamma;

#[derive(Debug, Error)]
pub enum FracError {
    #[error("the radial reduction and brute-force paths need dimension 3, got {0}")]
    UnsupportedDimension(usize),
    #[error("fractional order out of range: need s in (0,1) and n > 2s (n = {n}, s = {s})")]
    BadOrder { n: usize, s: f64 },
    #[error("lemma hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("missing decay profile: {0}")]
    MissingDecayProfile(String),
    #[error("tail model 'none' needs tail_radius >= 4|x| (have {have}, need {need})")]
    InsufficientTailRadius { have: f64, need: f64 },
    #[error("integral does not converge: {0}")]
    NotIntegrable(String),
    #[error("invalid quadrature spec: {0}")]
    BadSpec(String),
    #[error("fundamental solution is singular at the origin")]
    OriginSingular,
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Normalization constants of (-Delta)^s and (-Delta)^(-s):
///   c_{n,s}  = 4^s Gamma(n/2 + s) / (pi^(n/2) |Gamma(-s)|)
///   c_{n,-s} = Gamma(n/2 - s) / (4^s pi^(n/2) Gamma(s))
/// These are validated operationally by the inverse-identity checks in the
/// test suite rather than trusted blindly.
pub fn normalization_constant(n: usize, s: f64) -> Result<(f64, f64), FracError> {
    if n < 1 || !(0.0 < s && s < 1.0) || (n as f64) <= 2.0 * s {
        return Err(FracError::BadOrder { n, s });
    }
    let nf = n as f64;
    let c_ns = 4f64.powf(s) * gamma(nf / 2.0 + s) / (PI.powf(nf / 2.0) * gamma(-s).abs());
    let c_nms = gamma(nf / 2.0 - s) / (4f64.powf(s) * PI.powf(nf / 2.0) * gamma(s));
    Ok((c_ns, c_nms))
}

/// Order and normalization bundle for the fractional operators.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FracParams {
    pub n: usize,
    pub s: f64,
    pub c_ns: f64,
    pub c_n_minus_s: f64,
}

impl FracParams {
    pub fn new(n: usize, s: f64) -> Result<Self, FracError> {
        let (c_ns, c_nms) = normalization_constant(n, s)?;
        Ok(FracParams { n, s, c_ns, c_n_minus_s: c_nms })
    }
}

/// Fundamental solution c_{n,-s} |x|^(2s-n), annihilated by (-Delta)^s away
/// from the origin.
pub fn fundamental_solution(params: &FracParams, r: f64) -> Result<f64, FracError> {
    if r <= 0.0 {
        return Err(FracError::OriginSingular);
    }
    Ok(params.c_n_minus_s * r.powf(2.0 * s_of(params) - params.n as f64))
}

#[inline]
fn s_of(p: &FracParams) -> f64 {
    p.s
}

fn require_dim3(params: &FracParams, field_dim: usize) -> Result<(), FracError> {
    if params.n != 3 {
        return Err(FracError::UnsupportedDimension(params.n));
    }
    if field_dim != 3 {
        return Err(FracError::UnsupportedDimension(field_dim));
    }
    Ok(())
}

/// Signed tail exponent of a field: +sigma for decay, -sigma for growth.
fn signed_tail(u: &AnalyticField) -> Result<f64, FracError> {
    match u.decay() {
        Some(d) => Ok(match d.direction {
            DecayDirection::Decay => d.sigma,
            DecayDirection::Growth => -d.sigma,
        }),
        None => Err(FracError::MissingDecayProfile(
            "field carries no decay profile for the tail model".into(),
        )),
    }
}

fn ls_gate(u: &AnalyticField, s: f64) -> Result<(), FracError> {
    if let Some(d) = u.decay() {
        if d.direction == DecayDirection::Growth && d.sigma >= 2.0 * s {
            return Err(FracError::NotIntegrable(format!(
                "growth exponent {} >= 2s = {} makes the L_s norm infinite",
                d.sigma,
                2.0 * s
            )));
        }
    }
    Ok(())
}

/// Diagnostic row for the operator evaluations: zone contributions carry the
/// normalization constant already.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FracDiag {
    pub value: f64,
    pub near: f64,
    pub mid: f64,
    pub tail: f64,
    pub err_near: f64,
    pub err_mid: f64,
    pub err_tail: f64,
    /// magnitude of the same quadrature applied to |integrand|
    pub abs_scale: f64,
}

impl FracDiag {
    fn from_engine(d: &EngineDiag, c: f64) -> Self {
        FracDiag {
            value: c * d.value,
            near: c * d.near,
            mid: c * d.mid,
            tail: c * d.tail,
            err_near: c.abs() * d.err_near,
            err_mid: c.abs() * d.err_mid,
            err_tail: c.abs() * d.err_tail,
            abs_scale: c.abs() * d.abs_scale,
        }
    }

    pub fn error_estimate(&self) -> f64 {
        self.err_near + self.err_mid + self.err_tail
    }

    /// CSV header matching `csv_row`.
    pub fn csv_header() -> &'static str {
        "x,value,err_near,err_mid,err_tail"
    }

    pub fn csv_row(&self, x: f64) -> String {
        format!(
            "{},{},{},{},{}",
            x, self.value, self.err_near, self.err_mid, self.err_tail
        )
    }
}

/// (-Delta)^s u at radius r for a radial field, via the exact angular
/// reduction in dimension 3. Diagnostic variant.
pub fn frac_laplacian_radial_diag(
    u: &AnalyticField,
    params: &FracParams,
    r: f64,
    quad: &QuadratureSpec,
) -> Result<FracDiag, FracError> {
    require_dim3(params, u.dimension())?;
    if u.is_constant() {
        return Ok(FracDiag {
            value: 0.0,
            near: 0.0,
            mid: 0.0,
            tail: 0.0,
            err_near: 0.0,
            err_mid: 0.0,
            err_tail: 0.0,
            abs_scale: 0.0,
        });
    }
    ls_gate(u, params.s)?;
    let tail_sigma = if quad.tail_model == TailKind::PowerLaw {
        signed_tail(u)?
    } else {
        signed_tail(u).unwrap_or(0.0)
    };
    let f = |b: f64| u.radial_value(b).unwrap_or(f64::NAN);
    let ax = Axial {
        h0: Component::new(&f, tail_sigma),
        h1: None,
        h2: None,
    };
    let d = engine::pv_kernel_integral(&ax, params.s, r, quad)?;
    Ok(FracDiag::from_engine(&d, params.c_ns))
}

/// (-Delta)^s u at radius r for a radial field (value only).
pub fn frac_laplacian_radial(
    u: &AnalyticField,
    params: &FracParams,
    r: f64,
    quad: &QuadratureSpec,
) -> Result<f64, FracError> {
    Ok(frac_laplacian_radial_diag(u, params, r, quad)?.value)
}

/// (-Delta)^s u at a point of R^3 by brute-force 3-D quadrature. Independent
/// of the radial reduction; the guardrail tests compare the two.
pub fn frac_laplacian(
    u: &AnalyticField,
    params: &FracParams,
    x: &[f64],
    quad: &QuadratureSpec,
) -> Result<f64, FracError> {
    require_dim3(params, u.dimension())?;
    if x.len() != 3 {
        return Err(FracError::UnsupportedDimension(x.len()));
    }
    if u.is_constant() {
        return Ok(0.0);
    }
    ls_gate(u, params.s)?;
    let tail_sigma = signed_tail(u)?;
    let xp = [x[0], x[1], x[2]];
    let f = |y: &[f64; 3]| u.eval(y).unwrap_or(f64::NAN);
    let v = brute::pv_frac_3d(&f, tail_sigma, params.s, &xp, quad)?;
    Ok(params.c_ns * v)
}

/// Riesz potential (-Delta)^(-s) u at radius r for a radial field.
pub fn riesz_potential_diag(
    u: &AnalyticField,
    params: &FracParams,
    r: f64,
    quad: &QuadratureSpec,
) -> Result<FracDiag, FracError> {
    require_dim3(params, u.dimension())?;
    let sigma = match u.decay() {
        Some(d) if d.direction == DecayDirection::Decay => d.sigma,
        Some(_) => {
            return Err(FracError::Hypothesis(
                "Riesz potential needs a decaying field".into(),
            ))
        }
        None => {
            return Err(FracError::MissingDecayProfile(
                "Riesz potential needs the decay exponent".into(),
            ))
        }
    };
    if sigma <= 2.0 * params.s {
        return Err(FracError::Hypothesis(format!(
            "Riesz decay hypothesis sigma > 2s violated: sigma = {sigma}, 2s = {}",
            2.0 * params.s
        )));
    }
    let f = |b: f64| u.radial_value(b).unwrap_or(f64::NAN);
    let comp = Component::new(&f, sigma);
    let d = engine::riesz_kernel_integral(&comp, params.s, r, quad)?;
    Ok(FracDiag::from_engine(&d, params.c_n_minus_s))
}

pub fn riesz_potential(
    u: &AnalyticField,
    params: &FracParams,
    r: f64,
    quad: &QuadratureSpec,
) -> Result<f64, FracError> {
    Ok(riesz_potential_diag(u, params, r, quad)?.value)
}

fn holder_orders(u1: &AnalyticField, u2: &AnalyticField) -> Result<(f64, f64), FracError> {
    let a1 = u1
        .decay()
        .map(|d| d.alpha)
        .ok_or_else(|| FracError::MissingDecayProfile("u1 has no Holder order".into()))?;
    let a2 = u2
        .decay()
        .map(|d| d.alpha)
        .ok_or_else(|| FracError::MissingDecayProfile("u2 has no Holder order".into()))?;
    Ok((a1, a2))
}

/// Bilinear remainder of the fractional product rule:
///   I(x) = Int (u1(x)-u1(y))(u2(x)-u2(y)) / |x-y|^(n+2s) dy
/// (without the normalization constant), at radius r for radial fields.
pub fn bilinear_remainder(
    u1: &AnalyticField,
    u2: &AnalyticField,
    params: &FracParams,
    r: f64,
    quad: &QuadratureSpec,
) -> Result<f64, FracError> {
    require_dim3(params, u1.dimension())?;
    require_dim3(params, u2.dimension())?;
    if u1.is_constant() || u2.is_constant() {
        return Ok(0.0);
    }
    let (a1, a2) = holder_orders(u1, u2)?;
    if params.s >= a1.min(a2) / 2.0 {
        return Err(FracError::Hypothesis(format!(
            "bilinear remainder needs s < min(alpha)/2: s = {}, alphas = ({a1}, {a2})",
            params.s
        )));
    }
    let s1 = signed_tail(u1)?;
    let s2 = signed_tail(u2)?;
    let v1 = u1.radial_value(r)?;
    let v2 = u2.radial_value(r)?;
    let one = |_: f64| 1.0;
    let f1 = |b: f64| u1.radial_value(b).unwrap_or(f64::NAN);
    let f2 = |b: f64| u2.radial_value(b).unwrap_or(f64::NAN);
    let f12 = |b: f64| {
        u1.radial_value(b).unwrap_or(f64::NAN) * u2.radial_value(b).unwrap_or(f64::NAN)
    };
    // (u1(x)-u1(y))(u2(x)-u2(y)) = v1 v2 - v1 u2(y) - v2 u1(y) + (u1 u2)(y)
    let terms = [
        BilinearTerm { coeff: v1 * v2, g: &one, power: 0, tail_sigma: 0.0 },
        BilinearTerm { coeff: -v1, g: &f2, power: 0, tail_sigma: s2 },
        BilinearTerm { coeff: -v2, g: &f1, power: 0, tail_sigma: s1 },
        BilinearTerm { coeff: 1.0, g: &f12, power: 0, tail_sigma: s1 + s2 },
    ];
    let d = engine::bilinear_kernel_integral(&terms, params.s, r, quad)?;
    Ok(d.value)
}

/// Fractional product-rule identity residual at radius r:
///   (-Delta)^s(u1 u2) - u1 (-Delta)^s u2 - u2 (-Delta)^s u1 + c_{n,s} I .
/// All four terms are evaluated over the same truncated domain (tail model
/// off, common truncation radius), so the pointwise integrand identity
/// governs the cancellation even when the individual integrals only converge
/// conditionally.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProductRuleCheck {
    pub residual: f64,
    /// |(-Delta)^s (u1 u2)| at the same point: the natural reference scale.
    pub reference: f64,
}

pub fn product_rule_residual(
    u1: &AnalyticField,
    u2: &AnalyticField,
    params: &FracParams,
    r: f64,
    quad: &QuadratureSpec,
) -> Result<ProductRuleCheck, FracError> {
    require_dim3(params, u1.dimension())?;
    require_dim3(params, u2.dimension())?;
    let s = params.s;
    if !u1.is_constant() && !u2.is_constant() {
        let (a1, a2) = holder_orders(u1, u2)?;
        if s >= a1.min(a2) / 2.0 {
            return Err(FracError::Hypothesis(format!(
                "product rule needs s < min(alpha)/2: s = {s}, alphas = ({a1}, {a2})"
            )));
        }
    }
    let common = QuadratureSpec {
        tail_model: TailKind::None,
        tail_radius: Some(
            quad.effective_tail_radius(r).max(64.0 * r.max(1.0)),
        ),
        ..quad.clone()
    };
    let v1 = u1.radial_value(r)?;
    let v2 = u2.radial_value(r)?;
    let f1 = |b: f64| u1.radial_value(b).unwrap_or(f64::NAN);
    let f2 = |b: f64| u2.radial_value(b).unwrap_or(f64::NAN);
    let f12 = |b: f64| {
        u1.radial_value(b).unwrap_or(f64::NAN) * u2.radial_value(b).unwrap_or(f64::NAN)
    };
    let pv = |f: &dyn Fn(f64) -> f64| -> Result<f64, FracError> {
        let ax = Axial { h0: Component::new(f, 0.0), h1: None, h2: None };
        Ok(engine::pv_kernel_integral(&ax, s, r, &common)?.value)
    };
    let t_prod = pv(&f12)?;
    let t1 = pv(&f1)?;
    let t2 = pv(&f2)?;
    let one = |_: f64| 1.0;
    let terms = [
        BilinearTerm { coeff: v1 * v2, g: &one, power: 0, tail_sigma: 0.0 },
        BilinearTerm { coeff: -v1, g: &f2, power: 0, tail_sigma: 0.0 },
        BilinearTerm { coeff: -v2, g: &f1, power: 0, tail_sigma: 0.0 },
        BilinearTerm { coeff: 1.0, g: &f12, power: 0, tail_sigma: 0.0 },
    ];
    let bil = engine::bilinear_kernel_integral(&terms, s, r, &common)?.value;
    let residual = params.c_ns * (t_prod - v1 * t2 - v2 * t1 + bil);
    Ok(ProductRuleCheck {
        residual,
        reference: (params.c_ns * t_prod).abs(),
    })
}

/// ||u||_{L_s} = Int |u(y)| / (1 + |y|^(n+2s)) dy, or the infinite flag when
/// the tail exponent makes the integral diverge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LsNorm {
    Finite(f64),
    Infinite,
}

pub fn ls_norm(
    u: &AnalyticField,
    params: &FracParams,
    quad: &QuadratureSpec,
) -> Result<LsNorm, FracError> {
    require_dim3(params, u.dimension())?;
    let s = params.s;
    let tail_sigma = signed_tail(u).unwrap_or(0.0);
    // tail integrand ~ 4 pi |u(b)| b^(-1-2s): integrable iff 2s + sigma > 0
    if 2.0 * s + tail_sigma <= 0.0 {
        return Ok(LsNorm::Infinite);
    }
    let r_t = quad.effective_tail_radius(1.0).max(64.0);
    let rule = crate::quad::GaussRule::new(8);
    let half = crate::quad::GaussRule::new(4);
    let mut f = |b: f64| {
        let v = u.radial_value(b).unwrap_or(f64::NAN).abs();
        4.0 * PI * v * b * b / (1.0 + b.powf(3.0 + 2.0 * s))
    };
    let edges = crate::quad::log_edges(1e-8, r_t, (quad.mid_nodes / 4).max(24));
    let (mut total, _) = crate::quad::panels_integrate(&edges, &rule, &half, &mut f);
    total += f(1e-8) * 1e-8 / 3.0; // inner completion, integrand ~ b^2
    let anchor = u.radial_value(r_t).unwrap_or(0.0).abs();
    let c = anchor * r_t.powf(tail_sigma);
    let eps = 2.0 * s + tail_sigma;
    total += 4.0 * PI * c * r_t.powf(-eps) / eps;
    Ok(LsNorm::Finite(total))
}

/// The four-region decomposition of R^n used by the decay estimates:
/// A1 = {|y| <= |x|/2}, A2 = {|x-y| <= |x|/2}, and the remainder split into
/// A3+ = {|x-y| >= |y|} and A3-.
#[derive(Debug, Clone)]
pub struct RegionSplit {
    pub x: Vec<f64>,
    pub half: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    A1,
    A2,
    A3Plus,
    A3Minus,
}

impl RegionSplit {
    pub fn new(x: &[f64]) -> Self {
        let half = x.iter().map(|v| v * v).sum::<f64>().sqrt() / 2.0;
        RegionSplit { x: x.to_vec(), half }
    }

    fn dist(&self, y: &[f64]) -> (f64, f64) {
        let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let dxy = self
            .x
            .iter()
            .zip(y)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        (ny, dxy)
    }

    pub fn classify(&self, y: &[f64]) -> Region {
        let (ny, dxy) = self.dist(y);
        if ny <= self.half {
            Region::A1
        } else if dxy <= self.half {
            Region::A2
        } else if dxy >= ny {
            Region::A3Plus
        } else {
            Region::A3Minus
        }
    }

    /// Independent indicator functions of the four regions; they sum to one
    /// away from the measure-zero overlap of the closed sets.
    pub fn indicators(&self, y: &[f64]) -> [u8; 4] {
        let (ny, dxy) = self.dist(y);
        let a1 = ny <= self.half;
        let a2 = !a1 && dxy <= self.half;
        let a3p = !a1 && dxy > self.half && dxy >= ny;
        let a3m = !a1 && dxy > self.half && dxy < ny;
        [a1 as u8, a2 as u8, a3p as u8, a3m as u8]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::AnalyticField;
    use rand::{Rng, SeedableRng};

    #[test]
    fn normalization_examples() {
        // c_{3, 1/2} = 1/pi^2 via Gamma(-1/2) = -2 sqrt(pi)
        let (c, _) = normalization_constant(3, 0.5).unwrap();
        assert!((c - 1.0 / (PI * PI)).abs() < 1e-13, "{c}");
        // s -> 0+: prefactor vanishes
        let (c0, _) = normalization_constant(3, 1e-6).unwrap();
        assert!(c0 < 1e-5);
        assert!(normalization_constant(1, 0.7).is_err()); // n <= 2s
    }

    #[test]
    fn fundamental_solution_values() {
        let p = FracParams::new(3, 0.5).unwrap();
        let v1 = fundamental_solution(&p, 1.0).unwrap();
        assert!((v1 - p.c_n_minus_s).abs() < 1e-15);
        // homogeneity
        let v2 = fundamental_solution(&p, 2.0).unwrap();
        assert!((v2 - p.c_n_minus_s * 2f64.powf(-2.0)).abs() < 1e-15);
        assert!(fundamental_solution(&p, 0.0).is_err());
    }

    #[test]
    fn constants_annihilated_by_ops() {
        let u = AnalyticField::constant(4.0, 3).unwrap();
        let p = FracParams::new(3, 0.3).unwrap();
        let q = QuadratureSpec::default();
        assert_eq!(frac_laplacian_radial(&u, &p, 8.0, &q).unwrap(), 0.0);
        let other = AnalyticField::inverse_power(1.0, 3).unwrap();
        assert_eq!(bilinear_remainder(&u, &other, &p, 8.0, &q).unwrap(), 0.0);
    }

    #[test]
    fn growth_gates() {
        let u = AnalyticField::growth_power(2.0, 3).unwrap();
        let p = FracParams::new(3, 0.3).unwrap();
        let q = QuadratureSpec::default();
        assert!(matches!(
            frac_laplacian_radial(&u, &p, 8.0, &q),
            Err(FracError::NotIntegrable(_))
        ));
        assert_eq!(ls_norm(&u, &p, &q).unwrap(), LsNorm::Infinite);
        let bounded = AnalyticField::constant(1.0, 3).unwrap();
        match ls_norm(&bounded, &p, &q).unwrap() {
            LsNorm::Finite(v) => assert!(v > 0.0),
            LsNorm::Infinite => panic!("constant has finite L_s norm"),
        }
    }

    #[test]
    fn riesz_hypothesis_gate() {
        let u = AnalyticField::inverse_power(0.5, 3).unwrap();
        let p = FracParams::new(3, 0.3).unwrap();
        let q = QuadratureSpec::default();
        assert!(matches!(
            riesz_potential(&u, &p, 8.0, &q),
            Err(FracError::Hypothesis(_))
        ));
    }

    #[test]
    fn region_partition_at_random_points() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let x = [5.0, -1.0, 2.0];
        let split = RegionSplit::new(&x);
        for _ in 0..10_000 {
            let y: Vec<f64> = (0..3).map(|_| rng.gen_range(-20.0..20.0)).collect();
            let ind = split.indicators(&y);
            assert_eq!(ind.iter().map(|&v| v as u32).sum::<u32>(), 1, "y = {y:?}");
            // classify agrees with the indicator that fired
            let idx = ind.iter().position(|&v| v == 1).unwrap();
            let want = [Region::A1, Region::A2, Region::A3Plus, Region::A3Minus][idx];
            assert_eq!(split.classify(&y), want);
        }
    }

    #[test]
    fn ls_norm_of_bounded_field_matches_independent_quadrature() {
        // u = 1: integral of 4 pi b^2 / (1 + b^(3+2s)) via a blunt Simpson
        // oracle over a wide range plus an analytic tail
        let u = AnalyticField::constant(1.0, 3).unwrap();
        let p = FracParams::new(3, 0.3).unwrap();
        let q = QuadratureSpec::default();
        let got = match ls_norm(&u, &p, &q).unwrap() {
            LsNorm::Finite(v) => v,
            _ => panic!(),
        };
        let mut simpson = 0.0;
        let big = 8000.0;
        let m = 800_000;
        let h = big / m as f64;
        let f = |b: f64| 4.0 * PI * b * b / (1.0 + b.powf(3.6));
        for i in 0..m {
            let a = i as f64 * h;
            simpson += h / 6.0 * (f(a) + 4.0 * f(a + h / 2.0) + f(a + h));
        }
        simpson += 4.0 * PI * big.powf(-0.6) / 0.6;
        assert!(
            (got - simpson).abs() < 5e-3 * simpson,
            "got {got}, oracle {simpson}"
        );
    }
}
