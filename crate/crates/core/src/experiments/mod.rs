//! Reproducible lemma- and theorem-verification runs: a JSON-configured
//! experiment catalog binding fields, fracops, decaylab and masolver, with
//! deterministic reports and plot-ready CSV tables.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::decaylab::{self, BoundCheck, Verdict};
use crate::fields::{self, AnalyticField};
use crate::fracops::{self, FracParams, QuadratureSpec};
use crate::masolver;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("unknown experiment id '{0}'")]
    UnknownExperiment(String),
    #[error("config invalid: {0}")]
    BadConfig(String),
    #[error("hypothesis violation in config: {0}")]
    ConfigHypothesis(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("diff error: {0}")]
    Diff(String),
    #[error(transparent)]
    Field(#[from] fields::FieldError),
    #[error(transparent)]
    Frac(#[from] fracops::FracError),
    #[error(transparent)]
    Decay(#[from] decaylab::DecayLabError),
    #[error(transparent)]
    Solve(#[from] masolver::SolveError),
}

/// One experiment run, fully serializable; unknown keys are rejected so that
/// misspelled knobs cannot silently corrupt an exponent study.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub n: usize,
    pub s: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub kappa: Option<f64>,
    /// (sigma, s) pairs for the decay/growth/riesz suites
    pub sigma_s_pairs: Option<Vec<(f64, f64)>>,
    pub radii: Option<Vec<f64>>,
    pub quadrature: QuadratureSpec,
    pub margin: f64,
    pub strict: bool,
    pub seed: u64,
    pub pairs: usize,
    pub r_max: Option<f64>,
    pub grid_nodes: Option<usize>,
    pub threads: Option<usize>,
    pub output_dir: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: "full-suite".into(),
            n: 3,
            s: None,
            alpha: None,
            beta: None,
            kappa: None,
            sigma_s_pairs: None,
            radii: None,
            quadrature: QuadratureSpec::default(),
            margin: 0.1,
            strict: false,
            seed: 20240501,
            pairs: 200,
            r_max: None,
            grid_nodes: None,
            threads: None,
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn for_experiment(id: &str) -> Result<Self, ExperimentError> {
        if !catalog().iter().any(|e| e.id == id) {
            return Err(ExperimentError::UnknownExperiment(id.to_string()));
        }
        Ok(ExperimentConfig { experiment: id.to_string(), ..Default::default() })
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub id: String,
    pub lemma_id: String,
    pub claim: String,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub claimed_exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitted_exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_squared: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    pub details: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv_file: Option<String>,
}

/// Deterministic run result. The config hash and toolkit version are
/// embedded here and in every CSV; wall time lives in the separate run
/// metadata file so that identical configs give byte-identical reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub experiment: String,
    pub config_hash: String,
    pub strict: bool,
    pub checks: Vec<CheckOutcome>,
    pub passed: usize,
    pub failed: usize,
    pub inconclusive: usize,
}

impl RunReport {
    /// Exit status: 0 iff no failed checks; strict mode promotes
    /// inconclusive results to failures.
    pub fn exit_failure(&self) -> bool {
        self.failed > 0 || (self.strict && self.inconclusive > 0)
    }
}

type CheckWithCsv = (CheckOutcome, Option<(String, String)>);

#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntry {
    pub id: &'static str,
    pub title: &'static str,
    /// the quantitative claim this experiment verifies
    pub claim: &'static str,
}

pub fn catalog() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            id: "lemma-decay",
            title: "fractional Laplacian decay of Holder-decaying fields",
            claim: "|(-D)^s u| <= C |x|^-(min(sigma,n)+2s) beyond 2R'; ln|x| factor at sigma = n",
        },
        CatalogEntry {
            id: "lemma-growth",
            title: "fractional Laplacian of slowly growing fields",
            claim: "|(-D)^s u| <= C |x|^(sigma-2s) for growth sigma in [0, 2s)",
        },
        CatalogEntry {
            id: "riesz",
            title: "Riesz potential decay",
            claim: "|(-D)^-s u| <= C |x|^(2s-min(sigma,n)) for decay sigma > 2s; ln|x| at sigma = n",
        },
        CatalogEntry {
            id: "bilinear",
            title: "bilinear remainder decay",
            claim: "|I(x)| <= C |x|^-(min(sigma1+sigma2,n)+2s); ln|x| at sigma1+sigma2 = n",
        },
        CatalogEntry {
            id: "holder",
            title: "Holder continuity of the bilinear remainder",
            claim: "[I]_(C^(min(alpha)-2s)) <= C ||u1||_(C^alpha1) ||u2||_(C^alpha2)",
        },
        CatalogEntry {
            id: "commute",
            title: "derivative commutation with the fractional Laplacian",
            claim: "(-D)^s d_k u = d_k (-D)^s u under 2s < alpha or 2s < 1 + alpha",
        },
        CatalogEntry {
            id: "product-rule",
            title: "fractional product-rule identity",
            claim: "(-D)^s(u1 u2) = u1 (-D)^s u2 + u2 (-D)^s u1 - c_(n,s) I",
        },
        CatalogEntry {
            id: "hypothesis-H",
            title: "far-field perturbation hypothesis",
            claim: "r^beta |f-1| and r^(beta+alpha) [f]_(C^alpha(B_(r/2))) stay bounded, beta > 2",
        },
        CatalogEntry {
            id: "ma-radial",
            title: "radial Monge-Ampere ground truth",
            claim: "det(D^2 v) = f reduces to v''(v'/r)^(n-1) = f; f = 1 forces w = v - r^2/2 = 0",
        },
        CatalogEntry {
            id: "bootstrap",
            title: "nonlocal bootstrap replay",
            claim: "|F| <= C |x|^-(2s+2e), |H| <= C |x|^-2e, (-D)^s H = F, schedule ends at e1 in (1/2,1)",
        },
        CatalogEntry {
            id: "expansion",
            title: "far-field quadratic expansion rates",
            claim: "residual of order k decays like |x|^-(min(n,beta)+k-2); (ln|x|)^... factor at beta = n",
        },
        CatalogEntry {
            id: "full-suite",
            title: "all verification suites with default parameters",
            claim: "every suite above passes or is inconclusive; zero failures",
        },
    ]
}

fn outcome_from_bound(id: &str, claim: &str, bc: &BoundCheck) -> CheckWithCsv {
    let mut details = BTreeMap::new();
    details.insert("constant".into(), bc.fitted.constant);
    if let Some(ratio) = bc.log_ratio {
        details.insert("log_ratio".into(), ratio);
    }
    let csv_name = format!("{id}.csv");
    (
        CheckOutcome {
            id: id.to_string(),
            lemma_id: bc.lemma_id.clone(),
            claim: claim.to_string(),
            verdict: bc.verdict,
            claimed_exponent: Some(bc.claimed_exponent),
            fitted_exponent: Some(bc.fitted.exponent),
            r_squared: Some(bc.fitted.r_squared),
            margin: Some(bc.margin),
            details,
            csv_file: Some(csv_name.clone()),
        },
        Some((csv_name, bc.to_csv())),
    )
}

fn simple_outcome(id: &str, lemma: &str, claim: &str, pass: bool) -> CheckWithCsv {
    (
        CheckOutcome {
            id: id.into(),
            lemma_id: lemma.into(),
            claim: claim.into(),
            verdict: if pass { Verdict::Pass } else { Verdict::Fail },
            claimed_exponent: None,
            fitted_exponent: None,
            r_squared: None,
            margin: None,
            details: BTreeMap::new(),
            csv_file: None,
        },
        None,
    )
}

fn with_details(mut out: CheckWithCsv, kv: &[(&str, f64)]) -> CheckWithCsv {
    for (k, v) in kv {
        out.0.details.insert((*k).to_string(), *v);
    }
    out
}

fn default_radii() -> Vec<f64> {
    vec![8.0, 16.0, 32.0, 64.0, 128.0, 256.0]
}

// ---------------------------------------------------------------------------
// experiment drivers
// ---------------------------------------------------------------------------

fn run_lemma_decay(cfg: &ExperimentConfig) -> Result<Vec<CheckWithCsv>, ExperimentError> {
    let pairs = cfg
        .sigma_s_pairs
        .clone()
        .unwrap_or_else(|| vec![(1.0, 0.2), (5.0, 0.2), (3.0, 0.2)]);
    let radii = cfg.radii.clone().unwrap_or_else(default_radii);
    let mut out = Vec::new();
    for (sigma, s) in pairs {
        let u = AnalyticField::inverse_power(sigma, cfg.n)?;
        let bc = decaylab::check_fraclap_decay(&u, s, &radii, &cfg.quadrature, cfg.margin)?;
        let id = format!("fraclap-decay-sigma{sigma}-s{s}");
        out.push(outcome_from_bound(
            &id,
            "|(-D)^s u| <= C |x|^-(min(sigma,n)+2s)",
            &bc,
        ));
    }
    Ok(out)
}

fn run_lemma_growth(cfg: &ExperimentConfig) -> Result<Vec<CheckWithCsv>, ExperimentError> {
    let radii = cfg.radii.clone().unwrap_or_else(default_radii);
    let mut out = Vec::new();

    // gate demonstration: claimed exponent -0.1 at margin 0.1 is unverifiable
    let u_gate = AnalyticField::growth_power(0.3, cfg.n)?;
    let gate =
        decaylab::check_growth_case(&u_gate, 0.2, &radii, &cfg.quadrature, cfg.margin);
    out.push(simple_outcome(
        "growth-hypothesis-gate",
        "fraclap-growth",
        "(sigma, s) = (0.3, 0.2) is rejected by the hypothesis gate",
        gate.is_err(),
    ));

    let u = AnalyticField::growth_power(0.3, cfg.n)?;
    let bc = decaylab::check_growth_case(&u, 0.25, &radii, &cfg.quadrature, cfg.margin)?;
    out.push(outcome_from_bound(
        "fraclap-growth-sigma0.3-s0.25",
        "|(-D)^s u| <= C |x|^(sigma-2s)",
        &bc,
    ));
    Ok(out)
}

fn run_riesz(cfg: &ExperimentConfig) -> Result<Vec<CheckWithCsv>, ExperimentError> {
    let pairs = cfg
        .sigma_s_pairs
        .clone()
        .unwrap_or_else(|| vec![(4.0, 0.3), (2.5, 0.3), (3.0, 0.3)]);
    let radii = cfg.radii.clone().unwrap_or_else(default_radii);
    let mut out = Vec::new();
    for (sigma, s) in pairs {
        let u = AnalyticField::inverse_power(sigma, cfg.n)?;
        let bc = decaylab::check_riesz_decay(&u, s, &radii, &cfg.quadrature, cfg.margin)?;
        let id = format!("riesz-decay-sigma{sigma}-s{s}");
        out.push(outcome_from_bound(
            &id,
            "|(-D)^-s u| <= C |x|^(2s-min(sigma,n))",
            &bc,
        ));
    }
    Ok(out)
}

fn run_bilinear(cfg: &ExperimentConfig) -> Result<Vec<CheckWithCsv>, ExperimentError> {
    let radii = cfg
        .radii
        .clone()
        .unwrap_or_else(|| vec![8.0, 16.0, 32.0, 64.0, 128.0]);
    let mut out = Vec::new();
    for (s1, s2, s) in [(1.0, 1.0, 0.2), (2.0, 2.0, 0.2)] {
        let u1 = AnalyticField::inverse_power(s1, cfg.n)?;
        let u2 = AnalyticField::inverse_power(s2, cfg.n)?;
        let bc =
            decaylab::check_bilinear_decay(&u1, &u2, s, &radii, &cfg.quadrature, cfg.margin)?;
        let id = format!("bilinear-decay-{s1}-{s2}-s{s}");
        out.push(outcome_from_bound(
            &id,
            "|I(x)| <= C |x|^-(min(sigma1+sigma2,n)+2s)",
            &bc,
        ));
    }
    Ok(out)
}

fn run_holder(cfg: &ExperimentConfig) -> Result<Vec<CheckWithCsv>, ExperimentError> {
    let u1 = AnalyticField::inverse_power(1.0, cfg.n)?;
    let u2 = AnalyticField::inverse_power(1.0, cfg.n)?;
    let s = cfg.s.unwrap_or(0.2);
    let check = decaylab::check_holder_of_remainder(&u1, &u2, s, 40, 10.0, &cfg.quadrature)?;
    let mut out = Vec::new();
    out.push(with_details(
        simple_outcome(
            "holder-remainder",
            "holder-remainder",
            "sampled seminorm of I within 10x the product of Holder norms",
            check.pass && check.seminorm > 0.0,
        ),
        &[
            ("seminorm", check.seminorm),
            ("norm_product_bound", check.norm_product_bound),
            ("order", check.order),
        ],
    ));

    // bilinearity: doubling u1 doubles I exactly (power-of-two scaling)
    let params = FracParams::new(cfg.n, s)?;
    let u1x2 = AnalyticField::inverse_power_scaled(1.0, 2.0, cfg.n)?;
    let base = fracops::bilinear_remainder(&u1, &u2, &params, 8.0, &cfg.quadrature)?;
    let doubled = fracops::bilinear_remainder(&u1x2, &u2, &params, 8.0, &cfg.quadrature)?;
    out.push(with_details(
        simple_outcome(
            "holder-scaling",
            "holder-remainder",
            "I is exactly linear in each argument on the same quadrature",
            doubled == 2.0 * base,
        ),
        &[("base", base), ("doubled", doubled)],
    ));
    Ok(out)
}

fn run_commute(cfg: &ExperimentConfig) -> Result<Vec<CheckWithCsv>, ExperimentError> {
    let u = AnalyticField::inverse_power(2.0, cfg.n)?;
    let radii = vec![4.0, 8.0];
    let mut out = Vec::new();
    for (s, case_name) in [(0.2, "case-i"), (0.7, "case-ii")] {
        let h = 1e-3;
        let check = decaylab::check_commutation(&u, s, &radii, h, &cfg.quadrature)?;
        out.push(with_details(
            simple_outcome(
                &format!("commutation-{case_name}"),
                "commutation",
                "finite-difference derivative of (-D)^s u matches (-D)^s d_k u",
                check.max_rel_residual <= 1e-3,
            ),
            &[
                ("max_rel_residual", check.max_rel_residual),
                ("case", check.case as f64),
                ("h", check.h),
            ],
        ));
    }
    Ok(out)
}

fn run_product_rule(cfg: &ExperimentConfig) -> Result<Vec<CheckWithCsv>, ExperimentError> {
    let ip1 = AnalyticField::inverse_power(1.0, cfg.n)?;
    let ip2 = AnalyticField::inverse_power(2.0, cfg.n)?;
    let growth = AnalyticField::growth_power(0.3, cfg.n)?;
    let cases: [(&AnalyticField, &AnalyticField, f64, f64, &str); 3] = [
        (&ip2, &ip2, 0.2, 4.0, "ip2-ip2"),
        (&ip1, &growth, 0.1, 8.0, "ip1-growth"),
        (&ip1, &ip2, 0.15, 6.0, "ip1-ip2"),
    ];
    let mut out = Vec::new();
    for (u1, u2, s, r, name) in cases {
        let params = FracParams::new(cfg.n, s)?;
        let check = fracops::product_rule_residual(u1, u2, &params, r, &cfg.quadrature)?;
        let rel = check.residual.abs() / check.reference.max(1e-300);
        out.push(with_details(
            simple_outcome(
                &format!("product-rule-{name}"),
                "product-rule",
                "four-term product-rule residual below 1e-3 of the product term",
                rel <= 1e-3,
            ),
            &[
                ("residual", check.residual),
                ("reference", check.reference),
                ("relative", rel),
            ],
        ));
    }
    Ok(out)
}

fn run_hypothesis_h(cfg: &ExperimentConfig) -> Result<Vec<CheckWithCsv>, ExperimentError> {
    let radii: Vec<f64> = (2..=10).map(|k| 2f64.powi(k)).collect();
    let alpha = cfg.alpha.unwrap_or(0.5);
    let mut out = Vec::new();

    let cases: [(AnalyticField, f64, bool, &str); 4] = [
        (AnalyticField::constant(1.0, cfg.n)?, 2.5, true, "constant"),
        (AnalyticField::perturbed_one(0.5, 2.5, cfg.n)?, 2.5, true, "perturbed-2.5"),
        (AnalyticField::perturbed_one(0.5, 1.5, cfg.n)?, 2.5, false, "underdecayed"),
        (AnalyticField::exp_oscillation(cfg.n)?, 3.0, true, "oscillation"),
    ];
    for (f, beta, expect_pass, name) in cases {
        let rep = fields::verify_hypothesis_h(&f, alpha, beta, &radii, cfg.pairs, cfg.seed)?;
        let ok = rep.pass == expect_pass;
        let id = format!("hypothesis-H-{name}");
        let csv_name = format!("{id}.csv");
        let claim = if expect_pass {
            "both scaled far-field sequences stay bounded"
        } else {
            "negative control: an under-decayed field must fail the claimed rate"
        };
        let mut oc = simple_outcome(&id, "hypothesis-H", claim, ok);
        oc.0.details.insert("deficit_slope".into(), rep.deficit_slope);
        oc.0.details.insert("seminorm_slope".into(), rep.seminorm_slope);
        oc.0.csv_file = Some(csv_name.clone());
        oc.1 = Some((csv_name, rep.to_csv()));
        out.push(oc);
    }
    Ok(out)
}

fn run_ma_radial(cfg: &ExperimentConfig) -> Result<Vec<CheckWithCsv>, ExperimentError> {
    let r_max = cfg.r_max.unwrap_or(512.0);
    let nodes = cfg.grid_nodes.unwrap_or(512);
    let f = AnalyticField::constant(1.0, cfg.n)?;
    let sol = masolver::solve_radial(f, cfg.n, r_max, nodes)?;
    let max_w = sol
        .grid()
        .iter()
        .map(|&r| sol.w(r).abs())
        .fold(0.0_f64, f64::max);
    let mut out = Vec::new();
    out.push(with_details(
        simple_outcome(
            "liouville-w-zero",
            "ma-radial",
            "f = 1 forces w = v - r^2/2 to vanish identically",
            max_w <= 1e-8,
        ),
        &[("max_abs_w", max_w)],
    ));

    let radii: Vec<f64> = (4..=9).map(|k| 2f64.powi(k)).collect();
    let fit = masolver::extract_expansion_radial(&sol, &radii, false)?;
    let a_dev = fit
        .a_matrix
        .iter()
        .enumerate()
        .flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(move |(j, v)| (v - if i == j { 1.0 } else { 0.0 }).abs())
        })
        .fold(0.0_f64, f64::max);
    let b_dev = fit.b.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    out.push(with_details(
        simple_outcome(
            "liouville-expansion",
            "ma-radial",
            "expansion returns A = I, b = 0, c = 0 for f = 1",
            a_dev <= 1e-6 && b_dev <= 1e-6 && fit.c.abs() <= 1e-6,
        ),
        &[("a_dev", a_dev), ("b_dev", b_dev), ("c", fit.c)],
    ));

    // defect identity on a perturbed run, with the radial table exported
    let beta = cfg.beta.unwrap_or(2.5);
    let kappa = cfg.kappa.unwrap_or(0.5);
    let fp = AnalyticField::perturbed_one(kappa, beta, cfg.n)?;
    let solp = masolver::solve_radial(fp.clone(), cfg.n, r_max, nodes)?;
    let mut max_defect = 0.0_f64;
    for &r in solp.grid().iter().skip(1) {
        let lhs = solp.v_second(r) * (solp.v_prime(r) / r).powf(cfg.n as f64 - 1.0);
        let want = fp.radial_value(r)?;
        max_defect = max_defect.max((lhs - want).abs() / want.abs());
    }
    let mut oc = with_details(
        simple_outcome(
            "ma-defect-identity",
            "ma-radial",
            "v'' (v'/r)^(n-1) = f at every grid node within 1e-8",
            max_defect <= 1e-8,
        ),
        &[("max_rel_defect", max_defect)],
    );
    oc.0.csv_file = Some("ma-radial-solution.csv".into());
    oc.1 = Some(("ma-radial-solution.csv".into(), solp.to_csv()));
    out.push(oc);
    Ok(out)
}

fn run_bootstrap(cfg: &ExperimentConfig) -> Result<Vec<CheckWithCsv>, ExperimentError> {
    let beta = cfg.beta.unwrap_or(2.5);
    let kappa = cfg.kappa.unwrap_or(0.5);
    let s = cfg.s.unwrap_or(0.2);
    let radii = cfg
        .radii
        .clone()
        .unwrap_or_else(|| vec![8.0, 16.0, 32.0, 64.0]);
    let f = AnalyticField::perturbed_one(kappa, beta, cfg.n)?;
    let sol = masolver::solve_radial(f, cfg.n, 1024.0, cfg.grid_nodes.unwrap_or(1024))?;
    let rep = masolver::run_bootstrap_schedule(
        &sol,
        beta,
        None,
        s,
        &cfg.quadrature,
        &radii,
        cfg.margin,
    )?;

    let mut out = Vec::new();
    out.push(with_details(
        simple_outcome(
            "bootstrap-f-decay",
            "bootstrap",
            "|F| decays at least like |x|^-(2s+2 eps0)",
            rep.f_fit.exponent <= -(2.0 * s + 2.0 * rep.eps0) + cfg.margin,
        ),
        &[
            ("fitted", rep.f_fit.exponent),
            ("claimed", -(2.0 * s + 2.0 * rep.eps0)),
            ("eps0", rep.eps0),
            ("eps0_measured", rep.eps0_measured),
        ],
    ));
    out.push(with_details(
        simple_outcome(
            "bootstrap-h-decay",
            "bootstrap",
            "|H| decays at least like |x|^-2 eps0",
            rep.h_fit.exponent <= -2.0 * rep.eps0 + cfg.margin,
        ),
        &[("fitted", rep.h_fit.exponent), ("claimed", -2.0 * rep.eps0)],
    ));
    out.push(with_details(
        simple_outcome(
            "bootstrap-identity",
            "bootstrap",
            "(-D)^s H reproduces F within 2 percent at three radii",
            rep.identity_max_rel <= 0.02,
        ),
        &[("max_rel", rep.identity_max_rel)],
    ));
    out.push(with_details(
        simple_outcome(
            "bootstrap-schedule",
            "bootstrap",
            "doubling schedule terminates with eps1 in (1/2, 1); all stages pass",
            rep.eps1 > 0.5
                && rep.eps1 < 1.0
                && rep.stages.iter().all(|st| st.dw_pass && st.f_pass && st.h_pass),
        ),
        &[
            ("eps1", rep.eps1),
            ("m0", rep.m0 as f64),
            ("nu", rep.nu),
            ("nu_dominates", rep.nu_dominates as u8 as f64),
        ],
    ));

    // per-stage rows as CSV
    let mut csv = String::from("stage,eps,dw_claim,dw_pass,f_claim,f_pass,h_claim,h_pass\n");
    for (j, st) in rep.stages.iter().enumerate() {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            j, st.eps, st.dw_claim, st.dw_pass, st.f_claim, st.f_pass, st.h_claim, st.h_pass
        ));
    }
    if let Some(last) = out.last_mut() {
        last.0.csv_file = Some("bootstrap-stages.csv".into());
        last.1 = Some(("bootstrap-stages.csv".into(), csv));
    }
    Ok(out)
}

fn run_expansion(cfg: &ExperimentConfig) -> Result<Vec<CheckWithCsv>, ExperimentError> {
    let kappa = cfg.kappa.unwrap_or(0.5);
    let n = cfg.n;
    let mut out = Vec::new();

    // beta < n branch: sharp rates (2-beta, 1-beta, -beta)
    {
        let beta = 2.5;
        let f = AnalyticField::perturbed_one(kappa, beta, n)?;
        let sol = masolver::solve_radial(f, n, 1024.0, cfg.grid_nodes.unwrap_or(768))?;
        let radii: Vec<f64> = (4..=8).map(|k| 2f64.powi(k)).collect();
        let fit = masolver::extract_expansion_radial(&sol, &radii, false)?;
        let want = [2.0 - beta, 1.0 - beta, -beta];
        let mut ok = true;
        let mut kv = Vec::new();
        for (k, w) in want.iter().enumerate() {
            let e = fit.residual_exponents[k].unwrap_or(f64::NAN);
            ok &= (e - w).abs() <= 0.1;
            kv.push((["e0", "e1", "e2"][k], e));
        }
        out.push(with_details(
            simple_outcome(
                "expansion-rates-beta2.5",
                "expansion",
                "residual exponents for k = 0,1,2 equal (2-beta, 1-beta, -beta) within 0.1",
                ok,
            ),
            &kv,
        ));
    }

    // beta > n branch: k = 0 rate is 2 - n
    {
        let beta = 4.0;
        let f = AnalyticField::perturbed_one(kappa, beta, n)?;
        let sol = masolver::solve_radial(f, n, 1024.0, cfg.grid_nodes.unwrap_or(768))?;
        let radii: Vec<f64> = (4..=9).map(|k| 2f64.powi(k)).collect();
        let fit = masolver::extract_expansion_radial(&sol, &radii, false)?;
        let e0 = fit.residual_exponents[0].unwrap_or(f64::NAN);
        out.push(with_details(
            simple_outcome(
                "expansion-rates-beta4",
                "expansion",
                "k = 0 residual exponent equals 2 - n within 0.1",
                (e0 - (2.0 - n as f64)).abs() <= 0.1,
            ),
            &[("e0", e0)],
        ));
    }

    // borderline beta = n: log-corrected constant bounded, power fit drifts
    {
        let beta = n as f64;
        let f = AnalyticField::perturbed_one(kappa, beta, n)?;
        let sol = masolver::solve_radial(f, n, 4096.0, cfg.grid_nodes.unwrap_or(1024))?;
        let radii: Vec<f64> = (4..=10).map(|k| 2f64.powi(k)).collect();
        let fit = masolver::extract_expansion_radial(&sol, &radii, true)?;
        let ratio = fit.log_ratio.unwrap_or(f64::INFINITY);
        let drift = fit.power_drift.unwrap_or(0.0);
        out.push(with_details(
            simple_outcome(
                "expansion-log-branch",
                "expansion",
                "|w-c| r^(n-2)/ln r bounded (ratio <= 3) while the pure power fit drifts",
                ratio <= 3.0 && drift >= 0.02,
            ),
            &[("log_ratio", ratio), ("power_drift", drift)],
        ));
    }
    Ok(out)
}

fn experiment_checks(cfg: &ExperimentConfig) -> Result<Vec<CheckWithCsv>, ExperimentError> {
    match cfg.experiment.as_str() {
        "lemma-decay" => run_lemma_decay(cfg),
        "lemma-growth" => run_lemma_growth(cfg),
        "riesz" => run_riesz(cfg),
        "bilinear" => run_bilinear(cfg),
        "holder" => run_holder(cfg),
        "commute" => run_commute(cfg),
        "product-rule" => run_product_rule(cfg),
        "hypothesis-H" => run_hypothesis_h(cfg),
        "ma-radial" => run_ma_radial(cfg),
        "bootstrap" => run_bootstrap(cfg),
        "expansion" => run_expansion(cfg),
        "full-suite" => {
            let mut all = Vec::new();
            for id in [
                "lemma-decay",
                "lemma-growth",
                "riesz",
                "bilinear",
                "holder",
                "commute",
                "product-rule",
                "hypothesis-H",
                "ma-radial",
                "bootstrap",
                "expansion",
            ] {
                let sub = ExperimentConfig { experiment: id.into(), ..cfg.clone() };
                all.extend(experiment_checks(&sub)?);
            }
            Ok(all)
        }
        other => Err(ExperimentError::UnknownExperiment(other.to_string())),
    }
}

/// Execute an experiment. When `out_dir` is given, writes `report.json`, one
/// CSV per check, and `run_meta.json` (wall time; kept out of the report so
/// identical configs produce byte-identical reports).
pub fn run(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<RunReport, ExperimentError> {
    cfg.quadrature.validate()?;
    if cfg.n != 3 {
        return Err(ExperimentError::BadConfig(format!(
            "experiments are wired for n = 3 (radial reduction); got {}",
            cfg.n
        )));
    }
    if cfg.margin <= 0.0 || cfg.margin > 1.0 {
        return Err(ExperimentError::BadConfig(format!(
            "margin must lie in (0, 1], got {}",
            cfg.margin
        )));
    }
    let start = std::time::Instant::now();
    let hash = cfg.hash();

    let checks_with_csv = match cfg.threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| ExperimentError::BadConfig(e.to_string()))?;
            pool.install(|| experiment_checks(cfg))?
        }
        None => experiment_checks(cfg)?,
    };

    let mut checks = Vec::new();
    let mut csvs = Vec::new();
    for (outcome, csv) in checks_with_csv {
        if let Some((name, content)) = csv {
            csvs.push((name, content));
        }
        checks.push(outcome);
    }
    let passed = checks.iter().filter(|c| c.verdict == Verdict::Pass).count();
    let failed = checks.iter().filter(|c| c.verdict == Verdict::Fail).count();
    let inconclusive = checks
        .iter()
        .filter(|c| c.verdict == Verdict::Inconclusive)
        .count();
    let report = RunReport {
        version: crate::VERSION.to_string(),
        experiment: cfg.experiment.clone(),
        config_hash: hash.clone(),
        strict: cfg.strict,
        checks,
        passed,
        failed,
        inconclusive,
    };

    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.json"), serde_json::to_string_pretty(&report)?)?;
        for (name, content) in &csvs {
            let stamped = format!("# config_hash={hash} version={}\n{content}", crate::VERSION);
            fs::write(dir.join(name), stamped)?;
        }
        let meta = serde_json::json!({
            "wall_time_secs": start.elapsed().as_secs_f64(),
            "config_hash": hash,
            "version": crate::VERSION,
        });
        fs::write(dir.join("run_meta.json"), serde_json::to_string_pretty(&meta)?)?;
        fs::write(dir.join("config.json"), serde_json::to_string_pretty(cfg)?)?;
    }
    Ok(report)
}

/// Structured field-by-field diff of two reports sharing an experiment id.
#[derive(Debug, Clone, Serialize)]
pub struct DiffEntry {
    pub path: String,
    pub a: serde_json::Value,
    pub b: serde_json::Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportDiff {
    pub experiment: String,
    pub identical: bool,
    pub entries: Vec<DiffEntry>,
    /// check ids whose verdicts differ between the two runs
    pub flipped: Vec<String>,
}

pub fn diff_reports(a: &RunReport, b: &RunReport) -> Result<ReportDiff, ExperimentError> {
    if a.experiment != b.experiment {
        return Err(ExperimentError::Diff(format!(
            "mismatched experiment ids: '{}' vs '{}'",
            a.experiment, b.experiment
        )));
    }
    let va = serde_json::to_value(a)?;
    let vb = serde_json::to_value(b)?;
    let mut entries = Vec::new();
    walk_diff("", &va, &vb, &mut entries);
    let mut flipped = Vec::new();
    for (ca, cb) in a.checks.iter().zip(&b.checks) {
        if ca.id == cb.id && ca.verdict != cb.verdict {
            flipped.push(ca.id.clone());
        }
    }
    Ok(ReportDiff {
        experiment: a.experiment.clone(),
        identical: entries.is_empty(),
        entries,
        flipped,
    })
}

fn walk_diff(path: &str, a: &serde_json::Value, b: &serde_json::Value, out: &mut Vec<DiffEntry>) {
    use serde_json::Value;
    match (a, b) {
        (Value::Object(ma), Value::Object(mb)) => {
            let keys: std::collections::BTreeSet<_> = ma.keys().chain(mb.keys()).collect();
            for k in keys {
                let sub = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                match (ma.get(k), mb.get(k)) {
                    (Some(x), Some(y)) => walk_diff(&sub, x, y, out),
                    (x, y) => out.push(DiffEntry {
                        path: sub,
                        a: x.cloned().unwrap_or(Value::Null),
                        b: y.cloned().unwrap_or(Value::Null),
                    }),
                }
            }
        }
        (Value::Array(xa), Value::Array(xb)) => {
            let len = xa.len().max(xb.len());
            for i in 0..len {
                let sub = format!("{path}[{i}]");
                match (xa.get(i), xb.get(i)) {
                    (Some(x), Some(y)) => walk_diff(&sub, x, y, out),
                    (x, y) => out.push(DiffEntry {
                        path: sub,
                        a: x.cloned().unwrap_or(Value::Null),
                        b: y.cloned().unwrap_or(Value::Null),
                    }),
                }
            }
        }
        _ => {
            if a != b {
                out.push(DiffEntry {
                    path: path.to_string(),
                    a: a.clone(),
                    b: b.clone(),
                });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_has_all_experiments() {
        let cat = catalog();
        assert!(cat.len() >= 11, "catalog too small: {}", cat.len());
        assert!(cat.iter().any(|e| e.id == "expansion"
            && e.claim.contains("min(n,beta)+k-2")
            || e.id == "expansion" && e.claim.contains("min(n,beta)")));
        for e in &cat {
            assert!(!e.claim.is_empty());
        }
    }

    #[test]
    fn config_roundtrip_and_unknown_keys() {
        let cfg = ExperimentConfig::for_experiment("lemma-decay").unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back.experiment, "lemma-decay");
        assert_eq!(back.hash(), cfg.hash());

        let bad = r#"{"experiment": "lemma-decay", "nonsense_key": 3}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(bad).is_err());
    }

    #[test]
    fn unknown_experiment_rejected() {
        assert!(ExperimentConfig::for_experiment("no-such-thing").is_err());
        let cfg = ExperimentConfig { experiment: "no-such-thing".into(), ..Default::default() };
        assert!(matches!(
            run(&cfg, None),
            Err(ExperimentError::UnknownExperiment(_))
        ));
    }

    #[test]
    fn diff_of_identical_reports_is_empty() {
        let report = RunReport {
            version: "0.1.0".into(),
            experiment: "lemma-decay".into(),
            config_hash: "abc".into(),
            strict: false,
            checks: vec![],
            passed: 0,
            failed: 0,
            inconclusive: 0,
        };
        let d = diff_reports(&report, &report.clone()).unwrap();
        assert!(d.identical);
        let mut other = report.clone();
        other.experiment = "riesz".into();
        assert!(diff_reports(&report, &other).is_err());
    }
}
