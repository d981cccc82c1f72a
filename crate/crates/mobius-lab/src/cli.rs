//! Batch front end: a JSON run configuration, four commands, and
//! deterministic CSV/JSON reports.
//!
//! Every report starts with its provenance: CSV files carry `#` metadata
//! lines with the tool version and the SHA-256 of the effective
//! configuration; JSON reports carry the same fields under `meta`. Nothing
//! time- or host-dependent is written, so identical configurations give
//! byte-identical output.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::diagnostics::{
    calculus_norm_sweep, default_a_grid, diff_boundedness_classify, homogeneous_similarity_scan, mobius_bound_consistency,
    mobius_lower_bound_sweep, mobius_necessary_conditions, quasi_homogeneous_verdict, shields_growth_check, similarity_norm_ratio,
    tilde_phi_lower_bound,
};
use crate::error::{Error, Result};
use crate::jet::{jet_kernel_nnd, jet_norm_inequality_probe, run_identity_suite};
use crate::kernels::{boundary_scaling, default_r_grid, CoefficientSequence, DiagonalKernel};
use crate::mobius::MobiusMap;
use crate::operators::{Fb2Block, NORM_SEED};
use crate::par;
use crate::series::PowerSeries;

pub const TOOL_NAME: &str = "mobius-lab";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exit status: success, identity-verification failure, configuration or
/// precondition error.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    IdentityFailure = 1,
    ConfigError = 2,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Kernel,
    Diagnose,
    JetVerify,
    Sweep,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    #[default]
    LowerBound,
    TildePhi,
    Boundary,
    CalculusNorm,
}

impl std::str::FromStr for SweepKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(Value::String(s.to_string()))
            .map_err(|_| Error::Config(format!("unknown sweep kind {s:?} (lower-bound, tilde-phi, boundary, calculus-norm)")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MobiusConfig {
    #[serde(default)]
    pub theta: f64,
    /// a as [re, im].
    #[serde(default = "default_mobius_a")]
    pub a: [f64; 2],
}

impl Default for MobiusConfig {
    fn default() -> Self {
        Self { theta: 0.0, a: default_mobius_a() }
    }
}

fn default_mobius_a() -> [f64; 2] {
    [0.5, 0.0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fb2Config {
    pub lambda0: f64,
    pub lambda1: f64,
    /// Scalar coupling m₀,₁ as [re, im].
    #[serde(default = "one_c")]
    pub m01: [f64; 2],
}

fn one_c() -> [f64; 2] {
    [1.0, 0.0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DifferentialConfig {
    pub lambda: f64,
    pub mu: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormProbeConfig {
    /// Coefficients [[re, im], …].
    pub psi1: Vec<[f64; 2]>,
    pub psi2: Vec<[f64; 2]>,
    pub n: usize,
    pub k1: Value,
    pub k2: Value,
    pub truncation: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JetConfig {
    #[serde(default = "default_cases")]
    pub cases: usize,
    #[serde(default = "default_jet_n_max")]
    pub n_max: usize,
    #[serde(default = "default_deg_max")]
    pub deg_max: usize,
    #[serde(default)]
    pub perturb: bool,
    /// Kernels whose pairs (K_i, K_j), i ≤ j, get a jet NND check.
    #[serde(default = "default_nnd_kernels")]
    pub nnd_kernels: Vec<Value>,
    #[serde(default = "default_nnd_order")]
    pub nnd_order: usize,
    #[serde(default = "default_nnd_points")]
    pub nnd_points: usize,
    #[serde(default)]
    pub norm_probe: Option<NormProbeConfig>,
}

impl Default for JetConfig {
    fn default() -> Self {
        Self {
            cases: default_cases(),
            n_max: default_jet_n_max(),
            deg_max: default_deg_max(),
            perturb: false,
            nnd_kernels: default_nnd_kernels(),
            nnd_order: default_nnd_order(),
            nnd_points: default_nnd_points(),
            norm_probe: None,
        }
    }
}

fn default_cases() -> usize {
    50
}
fn default_jet_n_max() -> usize {
    4
}
fn default_deg_max() -> usize {
    6
}
fn default_nnd_order() -> usize {
    2
}
fn default_nnd_points() -> usize {
    8
}
fn default_nnd_kernels() -> Vec<Value> {
    (1..=3).map(|l| json!({"family": "power", "lambda": l as f64})).collect()
}

/// The run configuration file. Every field is optional; see the README for
/// the schema.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_kernel")]
    pub kernel: Value,
    /// Second kernel for the similarity test in `diagnose`.
    #[serde(default)]
    pub compare: Option<Value>,
    #[serde(default = "default_truncation")]
    pub truncation: usize,
    /// Rows of the `kernel` table.
    #[serde(default = "default_rows")]
    pub rows: usize,
    #[serde(default)]
    pub mobius: MobiusConfig,
    #[serde(default)]
    pub a_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub r_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub gamma_grid: Option<Vec<f64>>,
    /// Constant c for the lower-bound sweep; defaults to 1 + sup n·b_n.
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Hex seed, e.g. "0x5EED".
    #[serde(default = "default_seed")]
    pub seed: String,
    #[serde(default)]
    pub exact: bool,
    #[serde(default)]
    pub sweep: SweepKind,
    #[serde(default)]
    pub jet: JetConfig,
    #[serde(default)]
    pub fb2: Option<Fb2Config>,
    #[serde(default)]
    pub differential: Option<DifferentialConfig>,
    /// n_max for the Shields growth check in `diagnose`.
    #[serde(default = "default_shields_n")]
    pub shields_n_max: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_value(json!({})).expect("empty config uses defaults")
    }
}

fn default_kernel() -> Value {
    json!({"family": "dirichlet"})
}
fn default_truncation() -> usize {
    256
}
fn default_rows() -> usize {
    16
}
fn default_tol() -> f64 {
    1e-10
}
fn default_seed() -> String {
    format!("{NORM_SEED:#X}")
}
fn default_shields_n() -> usize {
    1000
}

/// Command-line overrides applied on top of the configuration file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub trunc: Option<usize>,
    pub seed: Option<String>,
    pub exact: bool,
    pub perturb: bool,
    pub sweep: Option<SweepKind>,
}

pub fn parse_seed(s: &str) -> Result<u64> {
    let t = s.trim();
    let digits = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")).unwrap_or(t);
    u64::from_str_radix(digits, 16).map_err(|_| Error::Config(format!("seed {s:?} is not a hexadecimal u64")))
}

impl RunConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn apply(mut self, o: &Overrides) -> Self {
        if let Some(n) = o.trunc {
            self.truncation = n;
        }
        if let Some(s) = &o.seed {
            self.seed = s.clone();
        }
        self.exact |= o.exact;
        self.jet.perturb |= o.perturb;
        if let Some(k) = o.sweep {
            self.sweep = k;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.truncation < 16 {
            return cfg(format!("truncation N must be at least 16, got {}", self.truncation));
        }
        if !(self.tol > 0.0) {
            return cfg(format!("tolerance must be positive, got {}", self.tol));
        }
        for (name, g) in [("a_grid", &self.a_grid), ("r_grid", &self.r_grid), ("gamma_grid", &self.gamma_grid)] {
            if matches!(g, Some(v) if v.is_empty()) {
                return cfg(format!("{name} must be nonempty"));
            }
        }
        if self.jet.nnd_kernels.is_empty() {
            return cfg("jet.nnd_kernels must be nonempty".into());
        }
        parse_seed(&self.seed)?;
        Ok(())
    }

    pub fn seed_u64(&self) -> Result<u64> {
        parse_seed(&self.seed)
    }

    fn kernel(&self) -> Result<DiagonalKernel> {
        DiagonalKernel::from_json(&self.kernel)
    }

    fn mobius(&self) -> Result<MobiusMap> {
        MobiusMap::new(self.mobius.theta, Complex64::new(self.mobius.a[0], self.mobius.a[1]))
    }

    /// SHA-256 of the canonical JSON of (command, effective configuration).
    pub fn hash(&self, command: Command) -> String {
        let v = json!({"command": command, "config": self});
        hex::encode(Sha256::digest(serde_json::to_string(&v).expect("config serializes").as_bytes()))
    }
}

/// A finished report and the exit status it implies.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub body: String,
    pub status: ExitStatus,
}

/// Exit status for an error raised while running a command.
pub fn error_status(_e: &Error) -> ExitStatus {
    ExitStatus::ConfigError
}

pub fn run(command: Command, config: &RunConfig) -> Result<Report> {
    config.validate()?;
    match command {
        Command::Kernel => cmd_kernel(config),
        Command::Diagnose => cmd_diagnose(config),
        Command::JetVerify => cmd_jet_verify(config),
        Command::Sweep => cmd_sweep(config),
    }
}

fn meta(config: &RunConfig, command: Command) -> Value {
    json!({"tool": TOOL_NAME, "version": TOOL_VERSION, "config_sha256": config.hash(command)})
}

fn csv_header(config: &RunConfig, command: Command, extra: &[String]) -> String {
    let mut s = format!("# {TOOL_NAME} {TOOL_VERSION}\n# config_sha256={}\n", config.hash(command));
    for line in extra {
        let _ = writeln!(s, "# {line}");
    }
    s
}

fn csv_body(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn f(x: f64) -> String {
    format!("{x}")
}

fn flag(b: bool) -> String {
    u8::from(b).to_string()
}

/// n, b_n, ‖zⁿ‖², w_n = √(b_n/b_{n+1}). With `exact`, b_n and ‖zⁿ‖² are
/// exact rationals.
pub fn cmd_kernel(config: &RunConfig) -> Result<Report> {
    let k = config.kernel()?;
    let b = k.coefficients(config.rows + 1);
    let rows = (0..config.rows)
        .map(|n| {
            let w = (b[n] / b[n + 1]).sqrt();
            if config.exact {
                let q = k
                    .coefficient_exact(n)
                    .ok_or_else(|| Error::Config(format!("exact coefficients are not available for {}", k.label())))?;
                Ok(vec![n.to_string(), q.to_string(), q.recip().to_string(), f(w)])
            } else {
                Ok(vec![n.to_string(), f(b[n]), f(1.0 / b[n]), f(w)])
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut body = csv_header(config, Command::Kernel, &[format!("kernel={}", k.label())]);
    body += &csv_body(&["n", "b_n", "norm_sq", "shift_weight"], &rows)?;
    Ok(Report { body, status: ExitStatus::Success })
}

fn half_step_gammas() -> Vec<f64> {
    (0..=8).map(|k| k as f64 * 0.5).collect()
}

/// Verdict bundle for the configured kernel, plus the optional similarity,
/// FB₂ and differential checks.
pub fn cmd_diagnose(config: &RunConfig) -> Result<Report> {
    let k = config.kernel()?;
    let n = config.truncation;
    let mut verdicts = vec![mobius_necessary_conditions(&k, n.max(1000))?.to_json()];
    let mut skipped = Vec::new();
    match k.first_increase(config.shields_n_max + 66) {
        None => verdicts.push(shields_growth_check(&k, config.shields_n_max, 64)?.to_json()),
        Some(i) => skipped.push(json!({"check": "shields_growth", "reason": format!("coefficients increase at n = {i}")})),
    }
    let gammas = config.gamma_grid.clone().unwrap_or_else(half_step_gammas);
    let scan = homogeneous_similarity_scan(&k, config.r_grid.as_deref(), &gammas)?;
    verdicts.push(scan.verdict.to_json());
    let a_grid = config.a_grid.clone().unwrap_or_else(|| vec![0.5, 0.9, 0.99]);
    verdicts.push(mobius_bound_consistency(&k, &a_grid, n)?.to_json());
    if let Some(c) = &config.compare {
        let k2 = DiagonalKernel::from_json(c)?;
        verdicts.push(similarity_norm_ratio(&k, &k2, n.max(1000))?.to_json());
    }
    if let Some(fb) = &config.fb2 {
        let blk = Fb2Block::quasi_homogeneous(fb.lambda0, fb.lambda1, Complex64::new(fb.m01[0], fb.m01[1]))?;
        verdicts.push(quasi_homogeneous_verdict(&blk)?.to_json());
    }
    if let Some(d) = &config.differential {
        verdicts.push(diff_boundedness_classify(d.lambda, d.mu, n.max(1000))?.to_json());
    }
    let report = json!({
        "meta": meta(config, Command::Diagnose),
        "kernel": k.to_json(),
        "verdicts": verdicts,
        "skipped": skipped,
    });
    Ok(Report { body: pretty(&report), status: ExitStatus::Success })
}

fn series_from(c: &[[f64; 2]]) -> Result<PowerSeries<Complex64>> {
    PowerSeries::new(c.iter().map(|z| Complex64::new(z[0], z[1])).collect())
}

/// Deterministic point set in |z| ≤ 0.7, drawn from the run seed.
fn nnd_points(seed: u64, count: usize) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xD15C);
    (0..count)
        .map(|_| Complex64::from_polar(0.7 * rng.gen::<f64>().sqrt(), rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)))
        .collect()
}

/// Exact jet-symbol identity suite, jet NND checks and an optional norm probe.
/// Any identity failure gives exit status 1.
pub fn cmd_jet_verify(config: &RunConfig) -> Result<Report> {
    let seed = config.seed_u64()?;
    let jc = &config.jet;
    let checks = run_identity_suite(jc.cases, seed, jc.n_max, jc.deg_max, jc.perturb)?;
    let failures = checks.iter().filter(|c| !c.passed).count();

    let kernels = jc.nnd_kernels.iter().map(DiagonalKernel::from_json).collect::<Result<Vec<_>>>()?;
    let points = nnd_points(seed, jc.nnd_points);
    let mut jobs = Vec::new();
    for i in 0..kernels.len() {
        for j in i..kernels.len() {
            for n in 0..=jc.nnd_order {
                jobs.push((i, j, n));
            }
        }
    }
    let nnd = par::map_slice(&jobs, |&(i, j, n)| {
        jet_kernel_nnd(&kernels[i], &kernels[j], n, &points, 1e-9)
            .map(|v| json!({"k1": kernels[i].label(), "k2": kernels[j].label(), "n": n, "verdict": v.to_json()}))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let probe = match &jc.norm_probe {
        None => Value::Null,
        Some(p) => {
            let r = jet_norm_inequality_probe(
                &series_from(&p.psi1)?,
                &series_from(&p.psi2)?,
                &config.mobius()?,
                p.n,
                &DiagonalKernel::from_json(&p.k1)?,
                &DiagonalKernel::from_json(&p.k2)?,
                p.truncation,
            )?;
            serde_json::to_value(r)?
        }
    };

    let report = json!({
        "meta": meta(config, Command::JetVerify),
        "identity_checks": checks,
        "nnd_checks": nnd,
        "norm_probe": probe,
        "summary": {"cases": checks.len(), "failures": failures, "passed": failures == 0, "seed": config.seed},
    });
    let status = if failures == 0 { ExitStatus::Success } else { ExitStatus::IdentityFailure };
    Ok(Report { body: pretty(&report), status })
}

/// CSV sweep with columns (a or r, value, N_used, converged).
pub fn cmd_sweep(config: &RunConfig) -> Result<Report> {
    let k = config.kernel()?;
    let n = config.truncation;
    let a_grid = config.a_grid.clone().unwrap_or_else(default_a_grid);
    let mut extra = vec![format!("kernel={}", k.label()), format!("sweep={}", sweep_name(config.sweep))];
    let (header, rows): (Vec<&str>, Vec<Vec<String>>) = match config.sweep {
        SweepKind::LowerBound => {
            let s = mobius_lower_bound_sweep(&k, config.c, &a_grid, n)?;
            extra.push(format!("c={} trend={} exponent={} log_power={}", s.c, s.trend, s.exponent, s.log_power));
            let rows = s.points.iter().zip(&s.converged).map(|((a, v), c)| vec![f(*a), f(*v), n.to_string(), flag(*c)]).collect();
            (vec!["a", "value", "N_used", "converged"], rows)
        }
        SweepKind::TildePhi => {
            let vals = par::map_slice(&a_grid, |a| tilde_phi_lower_bound(&k, *a, n)).into_iter().collect::<Result<Vec<_>>>()?;
            let rows = vals.iter().map(|t| vec![f(t.a), f(t.value), t.terms.to_string(), flag(t.converged)]).collect();
            (vec!["a", "value", "N_used", "converged"], rows)
        }
        SweepKind::Boundary => {
            let r_grid = config.r_grid.clone().unwrap_or_else(|| default_r_grid(&k));
            let gammas = config.gamma_grid.clone().unwrap_or_else(half_step_gammas);
            let scans = par::map_slice(&gammas, |g| boundary_scaling(&k, *g, &r_grid)).into_iter().collect::<Result<Vec<_>>>()?;
            let mut rows = Vec::new();
            for s in &scans {
                extra.push(format!(
                    "gamma={} trend={} exponent={} log_power={}",
                    s.gamma,
                    s.fit.trend.as_str(),
                    s.fit.exponent,
                    s.fit.log_power
                ));
                for p in &s.points {
                    rows.push(vec![
                        f(s.gamma),
                        f(p.r),
                        f(p.value),
                        p.terms.to_string(),
                        flag(p.converged),
                        s.fit.trend.as_str().to_string(),
                    ]);
                }
            }
            (vec!["gamma", "r", "value", "N_used", "converged", "trend"], rows)
        }
        SweepKind::CalculusNorm => {
            let pts = calculus_norm_sweep(&k, &a_grid, n, config.tol)?;
            let rows = pts.iter().map(|p| vec![f(p.a), f(p.estimate.value), n.to_string(), flag(p.estimate.converged)]).collect();
            (vec!["a", "value", "N_used", "converged"], rows)
        }
    };
    let mut body = csv_header(config, Command::Sweep, &extra);
    body += &csv_body(&header, &rows)?;
    Ok(Report { body, status: ExitStatus::Success })
}

fn sweep_name(k: SweepKind) -> String {
    serde_json::to_value(k).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}
