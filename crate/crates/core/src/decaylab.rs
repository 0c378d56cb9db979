//! Decay-exponent fitting on dyadic radii and the checker suite for the
//! quantitative decay, growth, commutation and limit claims the toolkit
//! verifies against its quadrature operators.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::{AnalyticField, DecayDirection};
use crate::fracops::{
    self, bilinear_remainder, frac_laplacian_radial, riesz_potential, Axial, Component,
    FracError, FracParams, QuadratureSpec,
};

#[derive(Debug, Error)]
pub enum DecayLabError {
    #[error("need at least {need} radii, got {got}")]
    TooFewRadii { need: usize, got: usize },
    #[error("radii must be strictly increasing and at least 2 R' = {0}")]
    BadRadii(f64),
    #[error("non-finite operator value encountered")]
    NonFinite,
    #[error("lemma hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("claimed exponent {claimed} is not verifiable at margin {margin}")]
    UnverifiableClaim { claimed: f64, margin: f64 },
    #[error(transparent)]
    Frac(#[from] FracError),
    #[error(transparent)]
    Field(#[from] crate::fields::FieldError),
}

/// Values with |v| at or below this are treated as exactly zero.
const ZERO_FLOOR: f64 = 1e-13;
/// log-corrected model passes when max/min of the fitted constant stays
/// within this ratio over the radius range.
const LOG_RATIO_TOL: f64 = 3.0;
/// fits below this r^2 are inconclusive, never silently accepted
const R2_CONCLUSIVE: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// Least-squares reading of |g(r)| ~ C r^exponent (or C r^exponent ln r when
/// log-corrected) on the given radii.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayFit {
    pub exponent: f64,
    pub constant: f64,
    pub log_corrected: bool,
    pub r_squared: f64,
    pub radii_used: Vec<f64>,
}

/// Outcome of one claimed-bound check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundCheck {
    pub lemma_id: String,
    pub claimed_exponent: f64,
    pub fitted: DecayFit,
    pub margin: f64,
    pub verdict: Verdict,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    /// max/min of the log-model constant, for borderline cases
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl BoundCheck {
    pub fn pass(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// CSV rows (r, |value|, bound r^claimed) with the bound constant tight
    /// at the worst radius.
    pub fn to_csv(&self) -> String {
        let c_bound = self
            .radii
            .iter()
            .zip(&self.values)
            .map(|(r, v)| v.abs() / r.powf(self.claimed_exponent))
            .fold(0.0_f64, f64::max);
        let mut out = String::from("r,value,bound\n");
        for (r, v) in self.radii.iter().zip(&self.values) {
            out.push_str(&format!(
                "{},{},{}\n",
                r,
                v.abs(),
                c_bound * r.powf(self.claimed_exponent)
            ));
        }
        out
    }
}

fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    // slope, intercept, r^2
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    let slope = if denom.abs() < 1e-30 { 0.0 } else { (n * sxy - sx * sy) / denom };
    let intercept = (sy - slope * sx) / n;
    let y_mean = sy / n;
    let ss_tot: f64 = ys.iter().map(|y| (y - y_mean).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - (slope * x + intercept)).powi(2))
        .sum();
    let r2 = if ss_tot < 1e-30 {
        if ss_res < 1e-30 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / ss_tot
    };
    (slope, intercept, r2)
}

/// Pure power-law fit of log|values| against log radii.
pub fn fit_decay_exponent(radii: &[f64], values: &[f64]) -> Result<DecayFit, DecayLabError> {
    if radii.len() < 4 || radii.len() != values.len() {
        return Err(DecayLabError::TooFewRadii { need: 4, got: radii.len() });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(DecayLabError::NonFinite);
    }
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.abs().max(1e-300).ln()).collect();
    let (slope, intercept, r2) = ols(&xs, &ys);
    Ok(DecayFit {
        exponent: slope,
        constant: intercept.exp(),
        log_corrected: false,
        r_squared: r2,
        radii_used: radii.to_vec(),
    })
}

/// Borderline model |g| = C r^(-p) ln r with p fixed: returns the fit (with
/// the geometric-mean constant) and the max/min ratio of the per-radius
/// constants, which is what boundedness means on a finite range.
pub fn fit_log_corrected(
    radii: &[f64],
    values: &[f64],
    p: f64,
) -> Result<(DecayFit, f64), DecayLabError> {
    if radii.len() < 4 || radii.len() != values.len() {
        return Err(DecayLabError::TooFewRadii { need: 4, got: radii.len() });
    }
    let consts: Vec<f64> = radii
        .iter()
        .zip(values)
        .map(|(r, v)| v.abs() * r.powf(p) / r.ln())
        .collect();
    if consts.iter().any(|c| !c.is_finite() || *c <= 0.0) {
        return Err(DecayLabError::NonFinite);
    }
    let log_mean = consts.iter().map(|c| c.ln()).sum::<f64>() / consts.len() as f64;
    let c_bar = log_mean.exp();
    let ratio = consts.iter().cloned().fold(f64::MIN, f64::max)
        / consts.iter().cloned().fold(f64::MAX, f64::min);
    // r^2 of ln|v| against the fixed model ln(C r^-p ln r)
    let ys: Vec<f64> = values.iter().map(|v| v.abs().ln()).collect();
    let fitted: Vec<f64> = radii
        .iter()
        .map(|r| (c_bar * r.powf(-p) * r.ln()).ln())
        .collect();
    let y_mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_tot: f64 = ys.iter().map(|y| (y - y_mean).powi(2)).sum();
    let ss_res: f64 = ys.iter().zip(&fitted).map(|(y, f)| (y - f).powi(2)).sum();
    let r2 = if ss_tot < 1e-30 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok((
        DecayFit {
            exponent: -p,
            constant: c_bar,
            log_corrected: true,
            r_squared: r2,
            radii_used: radii.to_vec(),
        },
        ratio,
    ))
}

fn all_zero(values: &[f64]) -> bool {
    values.iter().all(|v| v.abs() <= ZERO_FLOOR)
}

fn noise_inconclusive(values: &[f64]) -> bool {
    let mixed = values.iter().any(|v| *v > 0.0) && values.iter().any(|v| *v < 0.0);
    let max = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    mixed && max < 1e-10
}

fn judge(
    lemma_id: &str,
    claimed: f64,
    log_case: bool,
    radii: &[f64],
    values: &[f64],
    margin: f64,
) -> Result<BoundCheck, DecayLabError> {
    if all_zero(values) {
        return Ok(BoundCheck {
            lemma_id: lemma_id.into(),
            claimed_exponent: claimed,
            fitted: DecayFit {
                exponent: claimed,
                constant: 0.0,
                log_corrected: log_case,
                r_squared: 1.0,
                radii_used: radii.to_vec(),
            },
            margin,
            verdict: Verdict::Pass,
            radii: radii.to_vec(),
            values: values.to_vec(),
            log_ratio: None,
            note: Some("exact-zero shortcut".into()),
        });
    }
    if noise_inconclusive(values) {
        let fitted = fit_decay_exponent(radii, values)?;
        return Ok(BoundCheck {
            lemma_id: lemma_id.into(),
            claimed_exponent: claimed,
            fitted,
            margin,
            verdict: Verdict::Inconclusive,
            radii: radii.to_vec(),
            values: values.to_vec(),
            log_ratio: None,
            note: Some("mixed-sign values at quadrature noise level".into()),
        });
    }
    if log_case {
        let (fitted, ratio) = fit_log_corrected(radii, values, -claimed)?;
        let verdict = if ratio <= LOG_RATIO_TOL { Verdict::Pass } else { Verdict::Fail };
        return Ok(BoundCheck {
            lemma_id: lemma_id.into(),
            claimed_exponent: claimed,
            fitted,
            margin,
            verdict,
            radii: radii.to_vec(),
            values: values.to_vec(),
            log_ratio: Some(ratio),
            note: None,
        });
    }
    let fitted = fit_decay_exponent(radii, values)?;
    let verdict = if fitted.r_squared < R2_CONCLUSIVE {
        Verdict::Inconclusive
    } else if fitted.exponent <= claimed + margin {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(BoundCheck {
        lemma_id: lemma_id.into(),
        claimed_exponent: claimed,
        fitted,
        margin,
        verdict,
        radii: radii.to_vec(),
        values: values.to_vec(),
        log_ratio: None,
        note: None,
    })
}

fn validate_radii(radii: &[f64], r_prime: f64, need: usize) -> Result<(), DecayLabError> {
    if radii.len() < need {
        return Err(DecayLabError::TooFewRadii { need, got: radii.len() });
    }
    let increasing = radii.windows(2).all(|w| w[1] > w[0]);
    if !increasing || radii.iter().any(|&r| r < 2.0 * r_prime) {
        return Err(DecayLabError::BadRadii(r_prime));
    }
    Ok(())
}

fn is_borderline(x: f64, target: f64) -> bool {
    (x - target).abs() < 1e-9
}

/// Decay of (-Delta)^s u for a Holder field decaying like |x|^(-sigma):
/// claimed exponent -(min(sigma, n) + 2s), log-corrected model at sigma = n.
pub fn check_fraclap_decay(
    u: &AnalyticField,
    s: f64,
    radii: &[f64],
    quad: &QuadratureSpec,
    margin: f64,
) -> Result<BoundCheck, DecayLabError> {
    let d = u.decay().ok_or_else(|| {
        DecayLabError::Hypothesis("field carries no decay profile".into())
    })?;
    if d.direction != DecayDirection::Decay {
        return Err(DecayLabError::Hypothesis("decay lemma needs a decaying field".into()));
    }
    if s <= 0.0 || s >= d.alpha / 2.0 {
        return Err(DecayLabError::Hypothesis(format!(
            "decay lemma needs 0 < s < alpha/2 (s = {s}, alpha = {})",
            d.alpha
        )));
    }
    validate_radii(radii, d.r_prime, 4)?;
    let n = u.dimension() as f64;
    let sigma = d.sigma;
    let params = FracParams::new(u.dimension(), s)?;
    let values: Vec<f64> = radii
        .par_iter()
        .map(|&r| frac_laplacian_radial(u, &params, r, quad))
        .collect::<Result<_, _>>()?;
    let claimed = -(sigma.min(n) + 2.0 * s);
    judge("fraclap-decay", claimed, is_borderline(sigma, n), radii, &values, margin)
}

/// Growth case: u grows at most like |x|^sigma with sigma in [0, 2s);
/// claimed exponent sigma - 2s. A claim that is non-negative after the
/// margin cannot be checked by a finite fit and is rejected up front.
pub fn check_growth_case(
    u: &AnalyticField,
    s: f64,
    radii: &[f64],
    quad: &QuadratureSpec,
    margin: f64,
) -> Result<BoundCheck, DecayLabError> {
    let d = u.decay().ok_or_else(|| {
        DecayLabError::Hypothesis("field carries no growth profile".into())
    })?;
    let sigma = match d.direction {
        DecayDirection::Growth => d.sigma,
        DecayDirection::Decay => 0.0, // a decaying field is in particular bounded
    };
    if sigma >= 2.0 * s {
        return Err(DecayLabError::Hypothesis(format!(
            "growth lemma needs sigma in [0, 2s): sigma = {sigma}, 2s = {}",
            2.0 * s
        )));
    }
    let claimed = sigma - 2.0 * s;
    if claimed + margin >= 0.0 {
        return Err(DecayLabError::UnverifiableClaim { claimed, margin });
    }
    validate_radii(radii, d.r_prime, 4)?;
    let params = FracParams::new(u.dimension(), s)?;
    let values: Vec<f64> = radii
        .par_iter()
        .map(|&r| frac_laplacian_radial(u, &params, r, quad))
        .collect::<Result<_, _>>()?;
    judge("fraclap-growth", claimed, false, radii, &values, margin)
}

/// Riesz potential decay: claimed exponent 2s - min(sigma, n), log model at
/// sigma = n; hypothesis sigma > 2s.
pub fn check_riesz_decay(
    u: &AnalyticField,
    s: f64,
    radii: &[f64],
    quad: &QuadratureSpec,
    margin: f64,
) -> Result<BoundCheck, DecayLabError> {
    let d = u.decay().ok_or_else(|| {
        DecayLabError::Hypothesis("field carries no decay profile".into())
    })?;
    if d.direction != DecayDirection::Decay || d.sigma <= 2.0 * s {
        return Err(DecayLabError::Hypothesis(format!(
            "Riesz corollary needs decay sigma > 2s (sigma = {}, 2s = {})",
            d.sigma,
            2.0 * s
        )));
    }
    validate_radii(radii, d.r_prime, 4)?;
    let n = u.dimension() as f64;
    let params = FracParams::new(u.dimension(), s)?;
    let values: Vec<f64> = radii
        .par_iter()
        .map(|&r| riesz_potential(u, &params, r, quad))
        .collect::<Result<_, _>>()?;
    let claimed = 2.0 * s - d.sigma.min(n);
    judge("riesz-decay", claimed, is_borderline(d.sigma, n), radii, &values, margin)
}

/// Bilinear remainder decay: claimed -(min(sigma1+sigma2, n) + 2s), log at
/// sigma1 + sigma2 = n; hypothesis s < (alpha1 + alpha2)/2.
pub fn check_bilinear_decay(
    u1: &AnalyticField,
    u2: &AnalyticField,
    s: f64,
    radii: &[f64],
    quad: &QuadratureSpec,
    margin: f64,
) -> Result<BoundCheck, DecayLabError> {
    let d1 = u1.decay().ok_or_else(|| {
        DecayLabError::Hypothesis("u1 carries no decay profile".into())
    })?;
    let d2 = u2.decay().ok_or_else(|| {
        DecayLabError::Hypothesis("u2 carries no decay profile".into())
    })?;
    if s >= (d1.alpha + d2.alpha) / 2.0 {
        return Err(DecayLabError::Hypothesis(format!(
            "bilinear corollary needs s < (alpha1+alpha2)/2 = {}",
            (d1.alpha + d2.alpha) / 2.0
        )));
    }
    validate_radii(radii, d1.r_prime.max(d2.r_prime), 4)?;
    let n = u1.dimension() as f64;
    let params = FracParams::new(u1.dimension(), s)?;
    let values: Vec<f64> = radii
        .par_iter()
        .map(|&r| bilinear_remainder(u1, u2, &params, r, quad))
        .collect::<Result<_, _>>()?;
    let sig = d1.sigma + d2.sigma;
    let claimed = -(sig.min(n) + 2.0 * s);
    judge("bilinear-decay", claimed, is_borderline(sig, n), radii, &values, margin)
}

/// Holder continuity of the bilinear remainder x -> I(x): sampled seminorm of
/// order min(alpha1, alpha2) - 2s over radial pairs, checked against
/// margin * ||u1||_(C^alpha1) ||u2||_(C^alpha2).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HolderRemainderCheck {
    pub order: f64,
    pub seminorm: f64,
    pub norm_product_bound: f64,
    pub margin: f64,
    pub pass: bool,
    pub pairs: usize,
}

pub fn check_holder_of_remainder(
    u1: &AnalyticField,
    u2: &AnalyticField,
    s: f64,
    pairs: usize,
    margin: f64,
    quad: &QuadratureSpec,
) -> Result<HolderRemainderCheck, DecayLabError> {
    let (a1, a2) = match (u1.decay(), u2.decay()) {
        (Some(d1), Some(d2)) => (d1.alpha, d2.alpha),
        _ => {
            return Err(DecayLabError::Hypothesis(
                "both fields need declared Holder orders".into(),
            ))
        }
    };
    if s >= a1.min(a2) / 2.0 {
        return Err(DecayLabError::Hypothesis(format!(
            "Holder lemma needs s < min(alpha)/2 = {}",
            a1.min(a2) / 2.0
        )));
    }
    let order = a1.min(a2) - 2.0 * s;
    if u1.is_constant() || u2.is_constant() {
        return Ok(HolderRemainderCheck {
            order,
            seminorm: 0.0,
            norm_product_bound: 0.0,
            margin,
            pass: true,
            pairs: 0,
        });
    }
    let norms = u1
        .holder_norm_bound(a1)
        .zip(u2.holder_norm_bound(a2))
        .ok_or_else(|| {
            DecayLabError::Hypothesis("fields must have finite C^alpha norms".into())
        })?;
    let params = FracParams::new(u1.dimension(), s)?;
    // I is radial for radial inputs: stratified radial pairs r1 < r2
    let reval = |r: f64| bilinear_remainder(u1, u2, &params, r, quad);
    let mut seminorm = 0.0_f64;
    let strata = pairs.max(8);
    let evals: Vec<(f64, f64)> = (0..strata)
        .into_par_iter()
        .map(|i| -> Result<(f64, f64), DecayLabError> {
            let frac = i as f64 / strata as f64;
            let d = 1e-3 * (10.0_f64 / 1e-3).powf(frac);
            let r1 = 1.0 + 9.0 * ((i * 7919) % strata) as f64 / strata as f64;
            let r2 = r1 + d;
            Ok((reval(r1)?, reval(r2)?))
        })
        .collect::<Result<_, _>>()?;
    for (i, (v1, v2)) in evals.iter().enumerate() {
        let frac = i as f64 / strata as f64;
        let d = 1e-3 * (10.0_f64 / 1e-3).powf(frac);
        seminorm = seminorm.max((v1 - v2).abs() / d.powf(order));
    }
    let bound = norms.0 * norms.1;
    Ok(HolderRemainderCheck {
        order,
        seminorm,
        norm_product_bound: bound,
        margin,
        pass: seminorm <= margin * bound,
        pairs: strata,
    })
}

/// Commutation of (-Delta)^s with a partial derivative: central finite
/// difference of x -> (-Delta)^s u against (-Delta)^s (d_k u) with the
/// derivative supplied analytically, on points along the k-th axis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CommutationCheck {
    /// 1 for the C^(1,alpha), 2s < alpha case; 2 for C^(2,alpha), 2s < 1+alpha
    pub case: u8,
    pub h: f64,
    pub rows: Vec<CommutationRow>,
    pub max_rel_residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CommutationRow {
    pub r: f64,
    pub fd_derivative: f64,
    pub analytic: f64,
    pub rel_residual: f64,
}

pub fn check_commutation(
    u: &AnalyticField,
    s: f64,
    radii: &[f64],
    h: f64,
    quad: &QuadratureSpec,
) -> Result<CommutationCheck, DecayLabError> {
    let alpha = u
        .decay()
        .map(|d| d.alpha)
        .ok_or_else(|| DecayLabError::Hypothesis("field needs a Holder order".into()))?;
    let case = if 2.0 * s < alpha {
        1
    } else if 2.0 * s < 1.0 + alpha {
        2 // all analytic families here are C^(2,alpha)
    } else {
        return Err(DecayLabError::Hypothesis(format!(
            "commutation needs 2s < 1 + alpha (s = {s}, alpha = {alpha})"
        )));
    };
    if h <= 0.0 {
        return Err(DecayLabError::Hypothesis("step h must be positive".into()));
    }
    let params = FracParams::new(u.dimension(), s)?;
    let tail = match u.decay() {
        Some(d) => match d.direction {
            DecayDirection::Decay => d.sigma,
            DecayDirection::Growth => -d.sigma,
        },
        None => 0.0,
    };
    let rows: Vec<CommutationRow> = radii
        .par_iter()
        .map(|&r| -> Result<CommutationRow, DecayLabError> {
            let g = |rr: f64| frac_laplacian_radial(u, &params, rr, quad);
            // five-point central difference, O(h^4)
            let fd = (8.0 * (g(r + h)? - g(r - h)?) - (g(r + 2.0 * h)? - g(r - 2.0 * h)?))
                / (12.0 * h);
            // (-Delta)^s (d_k u) on the k-axis: d_k u(y) = u'(|y|) cos(angle)
            let du = |b: f64| u.radial_deriv(b).unwrap_or(f64::NAN);
            let zero = |_: f64| 0.0;
            let ax = Axial {
                h0: Component::new(&zero, 0.0),
                h1: Some(Component::new(&du, tail + 1.0)),
                h2: None,
            };
            let analytic =
                params.c_ns * fracops::engine::pv_kernel_integral(&ax, s, r, quad)?.value;
            let scale = fd.abs().max(analytic.abs()).max(1e-300);
            Ok(CommutationRow {
                r,
                fd_derivative: fd,
                analytic,
                rel_residual: (fd - analytic).abs() / scale,
            })
        })
        .collect::<Result<_, _>>()?;
    let max_rel = rows.iter().fold(0.0_f64, |m, row| m.max(row.rel_residual));
    Ok(CommutationCheck { case, h, rows, max_rel_residual: max_rel })
}

/// Limit extraction from samples u(r) = u0 + C r^(-sigma): Richardson-style
/// two-point elimination on the outermost samples, then a bound check of
/// |u - u0| against the claimed exponent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LimitExtraction {
    pub u0: f64,
    pub fit: DecayFit,
    pub verdict: Verdict,
}

pub fn extract_limit(
    samples: &[(f64, f64)],
    sigma: f64,
) -> Result<LimitExtraction, DecayLabError> {
    if samples.len() < 6 {
        return Err(DecayLabError::TooFewRadii { need: 6, got: samples.len() });
    }
    if sigma <= 0.0 {
        return Err(DecayLabError::Hypothesis(format!("sigma must be positive, got {sigma}")));
    }
    let mut pts = samples.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let m = pts.len();
    let (r1, v1) = pts[m - 2];
    let (r2, v2) = pts[m - 1];
    let (w1, w2) = (r1.powf(-sigma), r2.powf(-sigma));
    let u0 = if (w1 - w2).abs() < 1e-300 {
        v2
    } else {
        let c = (v1 - v2) / (w1 - w2);
        v2 - c * w2
    };
    // residual fit excludes the two points the extrapolation interpolates
    let rs: Vec<f64> = pts[..m - 2].iter().map(|p| p.0).collect();
    let resid: Vec<f64> = pts[..m - 2].iter().map(|p| p.1 - u0).collect();
    if all_zero(&resid) {
        return Ok(LimitExtraction {
            u0,
            fit: DecayFit {
                exponent: -sigma,
                constant: 0.0,
                log_corrected: false,
                r_squared: 1.0,
                radii_used: rs,
            },
            verdict: Verdict::Pass,
        });
    }
    let fit = fit_decay_exponent(&rs, &resid)?;
    let verdict = if fit.r_squared < R2_CONCLUSIVE {
        Verdict::Inconclusive
    } else if fit.exponent <= -sigma + 0.1 {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(LimitExtraction { u0, fit, verdict })
}

/// One entry of the claim-traceability index: which quantitative statement a
/// lemma id verifies, and under which hypothesis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LemmaEntry {
    pub id: &'static str,
    pub claim: &'static str,
    pub hypothesis: &'static str,
}

pub fn lemma_index() -> Vec<LemmaEntry> {
    vec![
        LemmaEntry {
            id: "fraclap-decay",
            claim: "|(-D)^s u(x)| <= C |x|^-(min(sigma,n)+2s) for |x| > 2R'; extra ln|x| factor at sigma = n",
            hypothesis: "0 < s < alpha/2; |u| <= c'|x|^-sigma and [u]_(C^alpha over B_(|x|/2)(x)) <= c'|x|^-(sigma+alpha) beyond R'",
        },
        LemmaEntry {
            id: "fraclap-growth",
            claim: "|(-D)^s u(x)| <= C |x|^(sigma-2s) for |x| > 2R'",
            hypothesis: "0 < s < alpha/2; |u| <= c'|x|^sigma with sigma in [0, 2s)",
        },
        LemmaEntry {
            id: "riesz-decay",
            claim: "|(-D)^-s u(x)| <= C |x|^(2s-min(sigma,n)); extra ln|x| factor at sigma = n",
            hypothesis: "|u| <= c'|x|^-sigma with sigma > 2s beyond R'",
        },
        LemmaEntry {
            id: "bilinear-decay",
            claim: "|I(x)| <= C |x|^-(min(sigma1+sigma2,n)+2s); extra ln|x| at sigma1+sigma2 = n",
            hypothesis: "s < (alpha1+alpha2)/2; each u_i decays like |x|^-sigma_i with Holder control",
        },
        LemmaEntry {
            id: "holder-remainder",
            claim: "x -> I(x) lies in C^(min(alpha1,alpha2)-2s) with norm <= C ||u1||_(C^a1) ||u2||_(C^a2)",
            hypothesis: "s < min(alpha1, alpha2)/2",
        },
        LemmaEntry {
            id: "commutation",
            claim: "(-D)^s (d_k u) = d_k ((-D)^s u)",
            hypothesis: "(i) u in C^(1,alpha), 2s < alpha; or (ii) u in C^(2,alpha), 2s < 1+alpha",
        },
        LemmaEntry {
            id: "limit-extraction",
            claim: "|Du| <= M |x|^-(1+sigma) forces u -> u0 with |u - u0| <= C |x|^-sigma",
            hypothesis: "u in C^1 beyond R', sigma > 0",
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_is_recovered() {
        let radii = [8.0_f64, 16.0, 32.0, 64.0];
        let values: Vec<f64> = radii.iter().map(|r| r.powf(-2.0)).collect();
        let fit = fit_decay_exponent(&radii, &values).unwrap();
        assert!((fit.exponent + 2.0).abs() < 1e-12, "{}", fit.exponent);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!((fit.constant - 1.0).abs() < 1e-10);
    }

    #[test]
    fn log_model_matches_generator() {
        let radii = [8.0_f64, 16.0, 32.0, 64.0, 128.0];
        let values: Vec<f64> = radii.iter().map(|r| 2.5 * r.powf(-3.0) * r.ln()).collect();
        let (fit, ratio) = fit_log_corrected(&radii, &values, 3.0).unwrap();
        assert!((fit.constant - 2.5).abs() < 1e-10);
        assert!((ratio - 1.0).abs() < 1e-10);
        assert!(fit.log_corrected);
    }

    #[test]
    fn too_few_radii_rejected() {
        assert!(matches!(
            fit_decay_exponent(&[8.0, 16.0], &[1.0, 0.5]),
            Err(DecayLabError::TooFewRadii { .. })
        ));
    }

    #[test]
    fn margin_tightening_only_flips_pass_to_fail() {
        // same fitted exponent, two margins
        let radii = [8.0_f64, 16.0, 32.0, 64.0];
        let values: Vec<f64> = radii.iter().map(|r| r.powf(-1.92)).collect();
        for claimed in [-2.0, -1.5, -1.97] {
            let loose = judge("t", claimed, false, &radii, &values, 0.15).unwrap();
            let tight = judge("t", claimed, false, &radii, &values, 0.05).unwrap();
            if tight.verdict == Verdict::Pass {
                assert_eq!(loose.verdict, Verdict::Pass);
            }
        }
    }

    #[test]
    fn extract_limit_exact_model() {
        let samples: Vec<(f64, f64)> =
            (3..=10).map(|k| (2f64.powi(k), 5.0 + 2f64.powi(-k))).collect();
        let out = extract_limit(&samples, 1.0).unwrap();
        assert!((out.u0 - 5.0).abs() < 1e-12, "{}", out.u0);
        assert!((out.fit.exponent + 1.0).abs() < 1e-9);
        assert_eq!(out.verdict, Verdict::Pass);
    }

    #[test]
    fn extract_limit_constant_samples() {
        let samples: Vec<(f64, f64)> = (3..=9).map(|k| (2f64.powi(k), 7.25)).collect();
        let out = extract_limit(&samples, 1.5).unwrap();
        assert_eq!(out.u0, 7.25);
        assert_eq!(out.verdict, Verdict::Pass);
    }

    #[test]
    fn extract_limit_oscillation_inconclusive() {
        let samples: Vec<(f64, f64)> = (3..=10)
            .map(|k| {
                let r = 2f64.powi(k);
                (r, (1.3 * r).sin())
            })
            .collect();
        let out = extract_limit(&samples, 1.0).unwrap();
        assert_ne!(out.verdict, Verdict::Pass);
    }

    #[test]
    fn lemma_index_is_populated() {
        let idx = lemma_index();
        assert!(idx.len() >= 7);
        assert!(idx.iter().any(|e| e.id == "fraclap-decay"));
    }
}
