//! Closed-form scalar fields on R^n with decay metadata, sampled Holder
//! seminorms over balls, and the far-field hypothesis check used by the
//! perturbation suites.
//!
//! All families are radial (or constant plus a radial perturbation), which is
//! what the rest of the toolkit needs; evaluation is pure and deterministic.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interp::Pchip;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("point dimension {got} does not match field dimension {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("evaluation at r = {0} outside table range and no decay profile attached")]
    OutOfTableRange(f64),
    #[error("invalid field parameter: {0}")]
    InvalidParam(String),
    #[error("alpha must lie in (0,1), got {0}")]
    AlphaOutOfRange(f64),
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("perturbation rate beta must exceed 2, got {0}")]
    BetaTooSmall(f64),
    #[error("radii must be dyadic (ratio 2) and at least 2 R' = {0}")]
    BadRadii(f64),
}

/// Direction of the power law attached to a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayDirection {
    Decay,
    Growth,
}

/// Power-law envelope metadata: |u(x)| <= c' |x|^(-sigma) (decay) or
/// |u(x)| <= c' |x|^(sigma) (growth) for |x| > R', with a Holder order alpha
/// declared for the seminorm clauses of the decay hypotheses.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayProfile {
    pub sigma: f64,
    pub alpha: f64,
    pub c_prime: f64,
    pub r_prime: f64,
    pub direction: DecayDirection,
}

impl DecayProfile {
    pub fn decay(sigma: f64, alpha: f64, c_prime: f64, r_prime: f64) -> Result<Self, FieldError> {
        Self::new(sigma, alpha, c_prime, r_prime, DecayDirection::Decay)
    }

    pub fn growth(sigma: f64, alpha: f64, c_prime: f64, r_prime: f64) -> Result<Self, FieldError> {
        Self::new(sigma, alpha, c_prime, r_prime, DecayDirection::Growth)
    }

    fn new(
        sigma: f64,
        alpha: f64,
        c_prime: f64,
        r_prime: f64,
        direction: DecayDirection,
    ) -> Result<Self, FieldError> {
        if !(0.0 < alpha && alpha < 1.0) {
            return Err(FieldError::AlphaOutOfRange(alpha));
        }
        if c_prime <= 0.0 || r_prime < 1.0 || sigma < 0.0 {
            return Err(FieldError::InvalidParam(format!(
                "decay profile needs c' > 0, R' >= 1, sigma >= 0 (got {c_prime}, {r_prime}, {sigma})"
            )));
        }
        Ok(DecayProfile { sigma, alpha, c_prime, r_prime, direction })
    }

    /// Envelope value at radius r (only meaningful for r > R').
    pub fn envelope(&self, r: f64) -> f64 {
        match self.direction {
            DecayDirection::Decay => self.c_prime * r.powf(-self.sigma),
            DecayDirection::Growth => self.c_prime * r.powf(self.sigma),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Constant,
    InversePower,
    GrowthPower,
    ExpOscillation,
    PerturbedOne,
    CustomRadialTable,
}

/// Closed-form scalar field descriptor. `params` meaning by kind:
/// constant: [c]; inverse_power/growth_power: [sigma];
/// perturbed_one: [kappa, beta]; exp_oscillation / custom_radial_table: [].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalyticField {
    pub kind: FieldKind,
    pub params: Vec<f64>,
    pub n: usize,
    pub decay: Option<DecayProfile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Pchip>,
}

fn check_dim(n: usize) -> Result<(), FieldError> {
    if n < 3 {
        Err(FieldError::InvalidParam(format!("dimension must be >= 3, got {n}")))
    } else {
        Ok(())
    }
}

impl AnalyticField {
    pub fn constant(c: f64, n: usize) -> Result<Self, FieldError> {
        check_dim(n)?;
        Ok(AnalyticField {
            kind: FieldKind::Constant,
            params: vec![c],
            n,
            decay: DecayProfile::growth(0.0, 0.9, c.abs().max(1.0), 1.0).ok(),
            table: None,
        })
    }

    /// (1 + |x|^2)^(-sigma/2); smooth, decays like |x|^(-sigma).
    pub fn inverse_power(sigma: f64, n: usize) -> Result<Self, FieldError> {
        Self::inverse_power_scaled(sigma, 1.0, n)
    }

    /// amp (1 + |x|^2)^(-sigma/2); the amplitude rides along in params[1].
    pub fn inverse_power_scaled(sigma: f64, amp: f64, n: usize) -> Result<Self, FieldError> {
        check_dim(n)?;
        if sigma < 0.0 {
            return Err(FieldError::InvalidParam(format!("sigma must be >= 0, got {sigma}")));
        }
        Ok(AnalyticField {
            kind: FieldKind::InversePower,
            params: vec![sigma, amp],
            n,
            decay: Some(DecayProfile::decay(sigma, 0.9, amp.abs().max(1e-12), 1.0)?),
            table: None,
        })
    }

    /// (1 + |x|^2)^(sigma/2); grows like |x|^sigma.
    pub fn growth_power(sigma: f64, n: usize) -> Result<Self, FieldError> {
        check_dim(n)?;
        if sigma < 0.0 {
            return Err(FieldError::InvalidParam(format!("sigma must be >= 0, got {sigma}")));
        }
        Ok(AnalyticField {
            kind: FieldKind::GrowthPower,
            params: vec![sigma],
            n,
            decay: Some(DecayProfile::growth(sigma, 0.9, 2f64.powf(sigma / 2.0), 1.0)?),
            table: None,
        })
    }

    /// 1 + e^(-|x|) sin(e^|x|): bounded, Holder continuous, but its gradient
    /// has no limit at infinity.
    pub fn exp_oscillation(n: usize) -> Result<Self, FieldError> {
        check_dim(n)?;
        Ok(AnalyticField {
            kind: FieldKind::ExpOscillation,
            params: vec![],
            n,
            decay: DecayProfile::growth(0.0, 0.5, 2.0, 1.0).ok(),
            table: None,
        })
    }

    /// 1 + kappa (1 + |x|^2)^(-beta/2); positive everywhere for |kappa| < 1.
    pub fn perturbed_one(kappa: f64, beta: f64, n: usize) -> Result<Self, FieldError> {
        check_dim(n)?;
        if kappa.abs() >= 1.0 {
            return Err(FieldError::InvalidParam(format!(
                "|kappa| must be < 1 to keep the field positive, got {kappa}"
            )));
        }
        if beta <= 0.0 {
            return Err(FieldError::InvalidParam(format!("beta must be positive, got {beta}")));
        }
        Ok(AnalyticField {
            kind: FieldKind::PerturbedOne,
            params: vec![kappa, beta],
            n,
            decay: DecayProfile::growth(0.0, 0.9, 1.0 + kappa.abs(), 1.0).ok(),
            table: None,
        })
    }

    /// Tabulated radial values with monotone-cubic interpolation.
    pub fn custom_radial_table(
        radii: Vec<f64>,
        values: Vec<f64>,
        n: usize,
        decay: Option<DecayProfile>,
    ) -> Result<Self, FieldError> {
        check_dim(n)?;
        let table = Pchip::new(radii, values)
            .map_err(|e| FieldError::InvalidParam(format!("bad radial table: {e}")))?;
        Ok(AnalyticField {
            kind: FieldKind::CustomRadialTable,
            params: vec![],
            n,
            decay,
            table: Some(table),
        })
    }

    pub fn with_decay(mut self, decay: DecayProfile) -> Self {
        self.decay = Some(decay);
        self
    }

    pub fn is_constant(&self) -> bool {
        self.kind == FieldKind::Constant
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn decay(&self) -> Option<&DecayProfile> {
        self.decay.as_ref()
    }

    /// Value at a point of R^n.
    pub fn eval(&self, x: &[f64]) -> Result<f64, FieldError> {
        if x.len() != self.n {
            return Err(FieldError::DimensionMismatch { got: x.len(), want: self.n });
        }
        self.radial_value(norm(x))
    }

    /// Value at radius r >= 0. Errors only for out-of-range table lookups
    /// without a decay profile.
    pub fn radial_value(&self, r: f64) -> Result<f64, FieldError> {
        match self.kind {
            FieldKind::Constant => Ok(self.params[0]),
            FieldKind::InversePower => {
                let amp = self.params.get(1).copied().unwrap_or(1.0);
                Ok(amp * (1.0 + r * r).powf(-self.params[0] / 2.0))
            }
            FieldKind::GrowthPower => Ok((1.0 + r * r).powf(self.params[0] / 2.0)),
            FieldKind::ExpOscillation => Ok(1.0 + (-r).exp() * r.exp().sin()),
            FieldKind::PerturbedOne => {
                Ok(1.0 + self.params[0] * (1.0 + r * r).powf(-self.params[1] / 2.0))
            }
            FieldKind::CustomRadialTable => {
                let table = self.table.as_ref().expect("table kind always has a table");
                let (lo, hi) = table.range();
                if r >= lo && r <= hi {
                    Ok(table.eval(r).expect("in range"))
                } else if r > hi {
                    match &self.decay {
                        Some(d) => {
                            let vh = table.eval(hi).expect("in range");
                            Ok(vh * (r / hi).powf(-d.sigma))
                        }
                        None => Err(FieldError::OutOfTableRange(r)),
                    }
                } else {
                    // below the table: hold the first value (tables start at
                    // or very near 0 in practice)
                    Ok(table.eval(lo).expect("in range"))
                }
            }
        }
    }

    /// Radial derivative du/dr, closed form per family.
    pub fn radial_deriv(&self, r: f64) -> Result<f64, FieldError> {
        match self.kind {
            FieldKind::Constant => Ok(0.0),
            FieldKind::InversePower => {
                let s = self.params[0];
                let amp = self.params.get(1).copied().unwrap_or(1.0);
                Ok(-amp * s * r * (1.0 + r * r).powf(-s / 2.0 - 1.0))
            }
            FieldKind::GrowthPower => {
                let s = self.params[0];
                Ok(s * r * (1.0 + r * r).powf(s / 2.0 - 1.0))
            }
            FieldKind::ExpOscillation => Ok(-(-r).exp() * r.exp().sin() + r.exp().cos()),
            FieldKind::PerturbedOne => {
                let (k, b) = (self.params[0], self.params[1]);
                Ok(-k * b * r * (1.0 + r * r).powf(-b / 2.0 - 1.0))
            }
            FieldKind::CustomRadialTable => {
                let table = self.table.as_ref().unwrap();
                let (lo, hi) = table.range();
                if r >= lo && r <= hi {
                    Ok(table.deriv(r).expect("in range"))
                } else if r > hi {
                    match &self.decay {
                        Some(d) => {
                            let vh = table.eval(hi).expect("in range");
                            Ok(-d.sigma * vh * (r / hi).powf(-d.sigma) / r)
                        }
                        None => Err(FieldError::OutOfTableRange(r)),
                    }
                } else {
                    Ok(0.0)
                }
            }
        }
    }

    /// Upper bound on sup |u| over R^n, where finite.
    pub fn sup_abs(&self) -> Option<f64> {
        match self.kind {
            FieldKind::Constant => Some(self.params[0].abs()),
            FieldKind::InversePower => Some(self.params.get(1).copied().unwrap_or(1.0).abs()),
            FieldKind::GrowthPower => None,
            FieldKind::ExpOscillation => Some(2.0),
            FieldKind::PerturbedOne => Some(1.0 + self.params[0].abs()),
            FieldKind::CustomRadialTable => None,
        }
    }

    /// Upper bound on sup |du/dr|, where finite.
    pub fn sup_abs_deriv(&self) -> Option<f64> {
        // for (1+r^2)^(±p/2) the derivative magnitude p r (1+r^2)^(±p/2-1)
        // peaks at r^2 = 1/(p∓...); a safe closed bound is p/2 at r=1 scaled:
        // use the exact maximizer r*^2 = 1/(p+1) of r(1+r^2)^(-p/2-1).
        let peak = |p: f64| {
            let r2 = 1.0 / (p + 1.0);
            p * r2.sqrt() * (1.0 + r2).powf(-p / 2.0 - 1.0)
        };
        match self.kind {
            FieldKind::Constant => Some(0.0),
            FieldKind::InversePower => {
                Some(self.params.get(1).copied().unwrap_or(1.0).abs() * peak(self.params[0]))
            }
            FieldKind::GrowthPower => None,
            FieldKind::ExpOscillation => Some(2.0),
            FieldKind::PerturbedOne => Some(self.params[0].abs() * peak(self.params[1])),
            FieldKind::CustomRadialTable => None,
        }
    }

    /// Upper bound on the global C^alpha norm ||u||_C + [u]_C^alpha, via the
    /// interpolation bound [u] <= L^alpha (2 sup|u|)^(1-alpha).
    pub fn holder_norm_bound(&self, alpha: f64) -> Option<f64> {
        let sup = self.sup_abs()?;
        let lip = self.sup_abs_deriv()?;
        Some(sup + lip.powf(alpha) * (2.0 * sup).powf(1.0 - alpha))
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Sampled lower bound of a Holder seminorm over a ball.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HolderEstimate {
    pub alpha: f64,
    pub seminorm: f64,
    pub region_center: Vec<f64>,
    pub region_radius: f64,
    pub pair_count: usize,
}

// Box-Muller pair: two standard normals from two uniforms; fixed draw count
// keeps the sample stream a pure function of (seed, index).
fn normal_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    let r = (-2.0 * u1.ln()).sqrt();
    let t = 2.0 * std::f64::consts::PI * u2;
    (r * t.cos(), r * t.sin())
}

fn unit_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(n + 1);
    while v.len() < n {
        let (a, b) = normal_pair(rng);
        v.push(a);
        v.push(b);
    }
    v.truncate(n);
    let nrm = norm(&v).max(1e-300);
    v.iter_mut().for_each(|c| *c /= nrm);
    v
}

fn point_in_unit_ball(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let dir = unit_vector(rng, n);
    let u: f64 = rng.gen_range(0.0..1.0);
    let rad = u.powf(1.0 / n as f64);
    dir.into_iter().map(|c| c * rad).collect()
}

const DISTANCE_STRATA: usize = 24;

/// The i-th sampled pair in the closed ball B_radius(center): three out of
/// four pairs are stratified over log-spaced distances in
/// [radius 1e-4, 2 radius], the rest are fully random. Pure in (seed, i),
/// so estimates over nested index prefixes are monotone.
fn sample_pair(
    rng: &mut ChaCha8Rng,
    i: usize,
    center: &[f64],
    radius: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = center.len();
    if i % 4 == 3 {
        let p1 = point_in_unit_ball(rng, n);
        let p2 = point_in_unit_ball(rng, n);
        let z1 = center.iter().zip(&p1).map(|(c, p)| c + radius * p).collect();
        let z2 = center.iter().zip(&p2).map(|(c, p)| c + radius * p).collect();
        (z1, z2)
    } else {
        let stratum = i % DISTANCE_STRATA;
        let d_min = radius * 1e-4;
        let d_max = 2.0 * radius;
        let jitter: f64 = rng.gen_range(0.0..1.0);
        let frac = (stratum as f64 + jitter) / DISTANCE_STRATA as f64;
        let d = d_min * (d_max / d_min).powf(frac);
        // midpoint construction keeps both endpoints inside the ball
        let m = point_in_unit_ball(rng, n);
        let u = unit_vector(rng, n);
        let m_rad = (radius - d / 2.0).max(0.0);
        let mid: Vec<f64> = center.iter().zip(&m).map(|(c, p)| c + m_rad * p).collect();
        let z1 = mid.iter().zip(&u).map(|(c, p)| c + 0.5 * d * p).collect();
        let z2 = mid.iter().zip(&u).map(|(c, p)| c - 0.5 * d * p).collect();
        (z1, z2)
    }
}

/// Sampled Holder seminorm: max over pairs of |u(z1)-u(z2)| / |z1-z2|^alpha.
/// A lower bound of the true seminorm, monotone in `pairs` for a fixed seed.
pub fn holder_seminorm(
    field: &AnalyticField,
    alpha: f64,
    center: &[f64],
    radius: f64,
    pairs: usize,
    rng_seed: u64,
) -> Result<HolderEstimate, FieldError> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(FieldError::AlphaOutOfRange(alpha));
    }
    if radius <= 0.0 {
        return Err(FieldError::NonPositiveRadius(radius));
    }
    if center.len() != field.n {
        return Err(FieldError::DimensionMismatch { got: center.len(), want: field.n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut best = 0.0_f64;
    for i in 0..pairs.max(1) {
        let (z1, z2) = sample_pair(&mut rng, i, center, radius);
        let d = norm(&z1.iter().zip(&z2).map(|(a, b)| a - b).collect::<Vec<_>>());
        if d < 1e-300 {
            continue;
        }
        let v1 = field.eval(&z1)?;
        let v2 = field.eval(&z2)?;
        best = best.max((v1 - v2).abs() / d.powf(alpha));
    }
    Ok(HolderEstimate {
        alpha,
        seminorm: best,
        region_center: center.to_vec(),
        region_radius: radius,
        pair_count: pairs,
    })
}

/// One radius row of the far-field hypothesis check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisHRow {
    pub r: f64,
    /// r^beta |f(x) - 1| at |x| = r.
    pub scaled_deficit: f64,
    /// r^(beta+alpha) [f]_(C^alpha) over B_(r/2)(x), sampled.
    pub scaled_seminorm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisHReport {
    pub alpha: f64,
    pub beta: f64,
    pub rows: Vec<HypothesisHRow>,
    pub deficit_slope: f64,
    pub seminorm_slope: f64,
    pub deficit_bounded: bool,
    pub seminorm_bounded: bool,
    pub pass: bool,
    pub pairs: usize,
    pub seed: u64,
    pub slope_tolerance: f64,
}

fn loglog_slope(rs: &[f64], vs: &[f64]) -> f64 {
    // OLS slope of ln v against ln r over strictly positive values
    let pts: Vec<(f64, f64)> = rs
        .iter()
        .zip(vs)
        .filter(|(_, v)| **v > 0.0)
        .map(|(r, v)| (r.ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        0.0
    } else {
        (n * sxy - sx * sy) / denom
    }
}

/// Verify the far-field hypothesis on `f`: both scaled sequences
/// r^beta |f - 1| and r^(beta+alpha) [f]_(C^alpha(B_(r/2))) stay bounded on a
/// dyadic range of radii (max recorded, trend slope <= tolerance).
pub fn verify_hypothesis_h(
    f: &AnalyticField,
    alpha: f64,
    beta: f64,
    radii: &[f64],
    pairs: usize,
    seed: u64,
) -> Result<HypothesisHReport, FieldError> {
    if beta <= 2.0 {
        return Err(FieldError::BetaTooSmall(beta));
    }
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(FieldError::AlphaOutOfRange(alpha));
    }
    let r_prime = f.decay().map(|d| d.r_prime).unwrap_or(1.0);
    let min_r = 2.0 * r_prime;
    let dyadic = radii.windows(2).all(|w| (w[1] / w[0] - 2.0).abs() < 1e-9);
    if radii.len() < 2 || !dyadic || radii.iter().any(|&r| r < min_r) {
        return Err(FieldError::BadRadii(r_prime));
    }

    let zero_tol = 1e-13;
    let slope_tolerance = 0.1;
    let mut rows = Vec::with_capacity(radii.len());
    for (i, &r) in radii.iter().enumerate() {
        let mut x = vec![0.0; f.n];
        x[0] = r;
        let deficit = (f.eval(&x)? - 1.0).abs();
        let est = holder_seminorm(f, alpha, &x, r / 2.0, pairs, seed.wrapping_add(i as u64))?;
        rows.push(HypothesisHRow {
            r,
            scaled_deficit: r.powf(beta) * deficit,
            scaled_seminorm: r.powf(beta + alpha) * est.seminorm,
        });
    }
    let rs: Vec<f64> = rows.iter().map(|r| r.r).collect();
    let defs: Vec<f64> = rows.iter().map(|r| r.scaled_deficit).collect();
    let semis: Vec<f64> = rows.iter().map(|r| r.scaled_seminorm).collect();
    let bounded = |vals: &[f64], slope: f64| {
        vals.iter().all(|v| v.abs() <= zero_tol) || slope <= slope_tolerance
    };
    let deficit_slope = loglog_slope(&rs, &defs);
    let seminorm_slope = loglog_slope(&rs, &semis);
    let deficit_bounded = bounded(&defs, deficit_slope);
    let seminorm_bounded = bounded(&semis, seminorm_slope);
    Ok(HypothesisHReport {
        alpha,
        beta,
        rows,
        deficit_slope,
        seminorm_slope,
        deficit_bounded,
        seminorm_bounded,
        pass: deficit_bounded && seminorm_bounded,
        pairs,
        seed,
        slope_tolerance,
    })
}

impl HypothesisHReport {
    /// CSV rows: r, value (max of the two scaled statistics), bound
    /// (their running max over all radii), pass.
    pub fn to_csv(&self) -> String {
        let bound = self
            .rows
            .iter()
            .map(|r| r.scaled_deficit.max(r.scaled_seminorm))
            .fold(0.0_f64, f64::max);
        let mut out = String::from("r,value,bound,pass\n");
        for row in &self.rows {
            let v = row.scaled_deficit.max(row.scaled_seminorm);
            out.push_str(&format!("{},{},{},{}\n", row.r, v, bound, self.pass));
        }
        out
    }
}
