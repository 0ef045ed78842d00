//! Scenario files for the `oddlift` command line tool.
//!
//! A scenario is a JSON object
//!
//! ```json
//! {"spec_version": "1", "command": "verify-identity",
//!  "params": {"identity": "sphere", "alpha": 1, "beta": 1, "r": 1, "gamma": 1},
//!  "quadrature": {"split_radius": 0.5}, "output": {"path": "out.json", "format": "json"}}
//! ```
//!
//! Unknown fields are rejected at every level. Parameters are validated before
//! any computation starts.

pub mod catalog;
pub mod report;

use std::path::{Path, PathBuf};

use oddlift::harnack::{local_boundedness_report, quotient_report, weak_harnack_report};
use oddlift::lift::{lift_field, mollifier_convergence_report, weighted_norm_as, weighted_norm_ls, WeightedMeasureSpec};
use oddlift::operators::{bochner_report, cylindrical_identity_residual, odd_identity_report, sphere_kernel_identity, weak_pairing_report};
use oddlift::symbols::symbol_table;
use oddlift::{
    annulus_flap_lower_bound, fractional_kernel, gaussian_kernel, lift_kernel, manufacture_solution, table_kernel,
    unlift_kernel, BoxDomain, CompactSetSpec, Error, KernelFamily, KernelSpec, OperatorSpec, QuadratureSpec,
    SchroedingerProblem,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const SPEC_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Symbol,
    LiftCheck,
    VerifyIdentity,
    Harnack,
    WeakHarnack,
    LocalBoundedness,
    Mollifier,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub spec_version: String,
    pub command: Command,
    #[serde(default)]
    pub params: Value,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Malformed or invalid input; exit code 2.
    Input(String),
    /// A computation failed; exit code 1.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Numerical(m) => write!(f, "computation failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_)
            | Error::UnsupportedOrder(_)
            | Error::DivergentKernel(_)
            | Error::NegativeKernel { .. }
            | Error::InsufficientSmoothness { .. }
            | Error::SymmetryMismatch(_)
            | Error::MissingNormalDerivative
            | Error::PositivityFailure { .. }
            | Error::EmptyK0 => CliError::Input(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn input<T>(field: &str, message: impl std::fmt::Display) -> CliResult<T> {
    Err(CliError::Input(format!("{field}: {message}")))
}

/// A completed run.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Value,
    pub pass: bool,
    /// (x, u(x)/x₁) samples for `harnack`.
    pub samples: Option<Vec<(Vec<f64>, f64)>>,
    pub output: OutputSpec,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }

    pub fn render(&self, format: Format) -> CliResult<String> {
        match format {
            Format::Json => Ok(report::to_json(&self.report)),
            Format::Csv => report::to_csv(&self.report).map_err(|e| CliError::Numerical(e.to_string())),
        }
    }

    /// `x_1,…,x_n,quotient` lines.
    pub fn samples_csv(&self) -> Option<String> {
        let samples = self.samples.as_ref()?;
        let n = samples.first().map(|s| s.0.len()).unwrap_or(0);
        let mut out: Vec<String> = vec![(1..=n).map(|i| format!("x{i}")).chain(["quotient".to_string()]).collect::<Vec<_>>().join(",")];
        for (x, q) in samples {
            out.push(x.iter().chain([q]).map(|v| format!("{v:.16e}")).collect::<Vec<_>>().join(","));
        }
        Some(out.join("\n") + "\n")
    }
}

pub fn parse_scenario(text: &str) -> CliResult<Scenario> {
    let scenario: Scenario = serde_json::from_str(text).or_else(|e| input("scenario", e))?;
    if scenario.spec_version != SPEC_VERSION {
        return input("spec_version", format!("unsupported version {:?}, expected {SPEC_VERSION:?}", scenario.spec_version));
    }
    scenario.quadrature.validate().or_else(|e| input("quadrature", e))?;
    Ok(scenario)
}

pub fn run_path(path: &Path, tolerance_scale: f64) -> CliResult<Outcome> {
    let text = std::fs::read_to_string(path).or_else(|e| input("scenario", format!("{}: {e}", path.display())))?;
    run_scenario(&parse_scenario(&text)?, tolerance_scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub from: f64,
    pub to: f64,
    pub count: usize,
}

impl Range {
    pub fn points(&self) -> CliResult<Vec<f64>> {
        if self.count < 2 || !(self.from < self.to) {
            return input("range", format!("need from < to and count >= 2, got {self:?}"));
        }
        let h = (self.to - self.from) / (self.count - 1) as f64;
        Ok((0..self.count).map(|i| self.from + i as f64 * h).collect())
    }
}

/// The operator of a scenario, by kernel family.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum OperatorParam {
    Fractional { s: f64 },
    Gaussian,
    Table { samples: Vec<[f64; 2]> },
}

impl Default for OperatorParam {
    fn default() -> Self {
        OperatorParam::Fractional { s: 0.5 }
    }
}

impl OperatorParam {
    fn build(&self, n: usize) -> CliResult<OperatorSpec> {
        Ok(match self {
            OperatorParam::Fractional { s } => {
                fractional_kernel(n, *s)?;
                OperatorSpec::Fractional(*s)
            }
            OperatorParam::Gaussian => OperatorSpec::Kernel(gaussian_kernel(n)?),
            OperatorParam::Table { samples } => OperatorSpec::Kernel(table_kernel(n, samples)?),
        })
    }
}

fn one() -> usize {
    1
}

fn default_taus() -> Range {
    Range { from: 0.25, to: 8.0, count: 16 }
}

fn default_xi() -> Range {
    Range { from: -4.0, to: 4.0, count: 33 }
}

fn default_radii() -> Vec<f64> {
    vec![0.1, 1.0, 10.0]
}

fn default_eps() -> Vec<f64> {
    vec![0.2, 0.1, 0.05, 0.025]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SymbolParams {
    kernel: KernelSpec,
    #[serde(default = "default_taus")]
    tau: Range,
    #[serde(default = "SymbolParams::tol")]
    tol: f64,
}

impl SymbolParams {
    fn tol() -> f64 {
        1e-6
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LiftCheckParams {
    kernel: KernelSpec,
    #[serde(default = "default_radii")]
    radii: Vec<f64>,
    #[serde(default = "LiftCheckParams::tol")]
    tol: f64,
}

impl LiftCheckParams {
    fn tol() -> f64 {
        1e-12
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "identity", rename_all = "lowercase", deny_unknown_fields)]
enum IdentityParams {
    Sphere {
        alpha: f64,
        beta: f64,
        r: f64,
        gamma: f64,
        #[serde(default)]
        tol: Option<f64>,
    },
    Bochner {
        profile: String,
        #[serde(default = "default_xi")]
        xi: Range,
        #[serde(default)]
        tol: Option<f64>,
    },
    Odd {
        #[serde(default = "one")]
        n: usize,
        #[serde(default)]
        operator: OperatorParam,
        field: String,
        points: Vec<Vec<f64>>,
        #[serde(default)]
        tol: Option<f64>,
    },
    Pairing {
        #[serde(default = "one")]
        n: usize,
        #[serde(default)]
        operator: OperatorParam,
        u: String,
        g: String,
        #[serde(default)]
        tol: Option<f64>,
    },
    Cylindrical {
        k: usize,
        lambda: f64,
        field: String,
        points: Vec<Vec<f64>>,
        #[serde(default)]
        tol: Option<f64>,
    },
    Norm {
        #[serde(default = "one")]
        n: usize,
        s: f64,
        field: String,
        #[serde(default)]
        tol: Option<f64>,
    },
    Annulus {
        n: usize,
        s: f64,
        rho: f64,
        x: Vec<f64>,
    },
}

/// The manufactured problem shared by `harnack`, `weak-harnack` and `local-boundedness`.
#[derive(Debug, Clone)]
struct ProblemParams {
    vtilde: String,
    n: usize,
    operator: OperatorParam,
    omega: Option<BoxDomain>,
    /// Multiplies u (and ṽ) after manufacturing.
    scale: Option<f64>,
}

impl ProblemParams {
    fn build(&self, quadrature: &QuadratureSpec) -> CliResult<SchroedingerProblem> {
        if !(1..=3).contains(&self.n) {
            return input("n", format!("dimension {} outside 1..=3", self.n));
        }
        let Some(v) = catalog::lifted(&self.vtilde, self.n + 2) else {
            return input("vtilde", format!("unknown profile {:?}, expected one of {:?}", self.vtilde, catalog::LIFTED));
        };
        let omega = match &self.omega {
            Some(b) => BoxDomain::new(b.lower.clone(), b.upper.clone()).or_else(|e| input("omega", e))?,
            None => BoxDomain::cube(self.n, 1.0)?,
        };
        if omega.dim() != self.n {
            return input("omega", format!("box in R^{} for n = {}", omega.dim(), self.n));
        }
        let op = self.operator.build(self.n)?;
        let p = manufacture_solution(&v, &op, &omega, quadrature)?;
        Ok(match self.scale {
            Some(l) if l > 0.0 => p.scaled(l),
            Some(l) => return input("scale", format!("must be positive, got {l}")),
            None => p,
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct HarnackParams {
    vtilde: String,
    #[serde(default = "one")]
    n: usize,
    #[serde(default)]
    operator: OperatorParam,
    #[serde(default)]
    omega: Option<BoxDomain>,
    #[serde(default)]
    scale: Option<f64>,
    #[serde(default)]
    k: Option<CompactSetSpec>,
    #[serde(rename = "C_budget")]
    c_budget: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReportParams {
    vtilde: String,
    #[serde(default = "one")]
    n: usize,
    #[serde(default)]
    operator: OperatorParam,
    #[serde(default)]
    omega: Option<BoxDomain>,
    #[serde(default)]
    scale: Option<f64>,
    #[serde(rename = "M", default)]
    m: f64,
    #[serde(default = "ReportParams::rho")]
    rho: f64,
    #[serde(default = "ReportParams::s")]
    s: f64,
}

impl ReportParams {
    fn rho() -> f64 {
        1.0
    }

    fn s() -> f64 {
        0.5
    }

    fn problem(&self) -> ProblemParams {
        ProblemParams {
            vtilde: self.vtilde.clone(),
            n: self.n,
            operator: self.operator.clone(),
            omega: self.omega.clone(),
            scale: self.scale,
        }
    }
}

impl HarnackParams {
    fn problem(&self) -> ProblemParams {
        ProblemParams {
            vtilde: self.vtilde.clone(),
            n: self.n,
            operator: self.operator.clone(),
            omega: self.omega.clone(),
            scale: self.scale,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MollifierParams {
    #[serde(default = "MollifierParams::radius")]
    radius: f64,
    #[serde(default = "MollifierParams::alpha")]
    alpha: f64,
    #[serde(default = "default_eps")]
    eps: Vec<f64>,
    /// Required ratio of the last to the first weighted norm.
    #[serde(default = "MollifierParams::final_ratio")]
    final_ratio: f64,
}

impl MollifierParams {
    fn radius() -> f64 {
        1.0
    }

    fn alpha() -> f64 {
        4.0
    }

    fn final_ratio() -> f64 {
        0.15
    }
}

fn params<T: serde::de::DeserializeOwned>(value: &Value) -> CliResult<T> {
    serde_json::from_value(value.clone()).or_else(|e| input("params", e))
}

fn to_value<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).unwrap_or(Value::Null)
}

fn antisymmetric(name: &str, n: usize) -> CliResult<oddlift::Field> {
    catalog::antisymmetric(name, n)
        .ok_or_else(|| CliError::Input(format!("field: unknown antisymmetric field {name:?}, expected one of {:?}", catalog::ANTISYMMETRIC)))
}

fn kernel_reference(spec: &KernelSpec) -> CliResult<Option<oddlift::RadialKernel>> {
    let k = spec.build()?;
    Ok(match k.family() {
        KernelFamily::Fractional(f) => Some(fractional_kernel(f.dimension + 2, f.order)?),
        KernelFamily::Gaussian => Some(gaussian_kernel(spec.n + 2)?),
        _ => None,
    })
}

/// Runs a parsed scenario. Tolerances are multiplied by `tolerance_scale`.
pub fn run_scenario(scenario: &Scenario, tolerance_scale: f64) -> CliResult<Outcome> {
    if !(tolerance_scale > 0.0) {
        return input("tolerance-scale", format!("must be positive, got {tolerance_scale}"));
    }
    let q = &scenario.quadrature;
    let scale = |tol: f64| tol * tolerance_scale;
    let mut samples = None;
    let (pass, result) = match scenario.command {
        Command::Symbol => {
            let p: SymbolParams = params(&scenario.params)?;
            let k = p.kernel.build()?;
            let lifted = lift_kernel(&k)?;
            let rows = symbol_table(&k, &lifted, &p.tau.points()?)?;
            let residual = rows.iter().fold(0.0f64, |m, r| m.max(r.residual));
            let rows: Vec<Value> = rows
                .iter()
                .map(|r| json!({"tau": r.tau, "psi_n": r.psi_n, "psi_lifted": r.psi_lifted, "residual": r.residual}))
                .collect();
            (residual <= scale(p.tol), json!({"kernel": to_value(&p.kernel), "rows": rows, "residual": residual, "tol": scale(p.tol)}))
        }
        Command::LiftCheck => {
            let p: LiftCheckParams = params(&scenario.params)?;
            let k = p.kernel.build()?;
            let lifted = lift_kernel(&k)?;
            let reference = kernel_reference(&p.kernel)?;
            let back = unlift_kernel(&lifted)?;
            let mut worst = 0.0f64;
            let mut rows = Vec::new();
            for &r in &p.radii {
                if !(r > 0.0) {
                    return input("radii", format!("radius {r} must be positive"));
                }
                let value = lifted.profile(r);
                // Without a closed form, the lift is checked by undoing it.
                let (expected, got) = match &reference {
                    Some(k2) => (k2.profile(r), value),
                    None => (k.profile(r), back.profile(r)),
                };
                let rel = (got - expected).abs() / expected.abs().max(f64::MIN_POSITIVE);
                worst = worst.max(rel);
                rows.push(json!({"r": r, "lifted": value, "reference": expected, "relative_error": rel}));
            }
            (worst <= scale(p.tol), json!({"kernel": to_value(&p.kernel), "rows": rows, "residual": worst, "tol": scale(p.tol)}))
        }
        Command::VerifyIdentity => run_identity(params(&scenario.params)?, q, &scale)?,
        Command::Harnack => {
            let p: HarnackParams = params(&scenario.params)?;
            let problem = p.problem().build(q)?;
            let k = match p.k {
                Some(k) => {
                    let shape = BoxDomain::new(k.shape.lower.clone(), k.shape.upper.clone()).or_else(|e| input("k", e))?;
                    CompactSetSpec { shape, ..k }
                }
                None => CompactSetSpec::new(BoxDomain::cube(p.n, 0.5)?),
            };
            let inside = k.shape.lower.iter().zip(&k.shape.upper).zip(problem.domain.lower.iter().zip(&problem.domain.upper));
            for ((a, b), (lo, hi)) in inside {
                if !(a > lo && b < hi) {
                    return input("k", "K must lie inside Omega at positive distance from its boundary");
                }
            }
            let r = quotient_report(&problem, &k)?;
            let pass = r.ratio <= p.c_budget && r.residual_max <= problem.residual_tol * tolerance_scale;
            samples = Some(r.samples.clone());
            (
                pass,
                json!({
                    "sup": r.sup_quotient,
                    "inf": r.inf_quotient,
                    "ratio": r.ratio,
                    "lifted_sup": r.lifted_sup,
                    "lifted_inf": r.lifted_inf,
                    "residual_max": r.residual_max,
                    "residual_tol": problem.residual_tol,
                    "potential_sup": problem.potential_sup,
                    "C_budget": p.c_budget,
                    "pass": pass,
                }),
            )
        }
        Command::WeakHarnack => {
            let p: ReportParams = params(&scenario.params)?;
            let problem = p.problem().build(q)?;
            let r = weak_harnack_report(&problem, p.m, p.rho, p.s)?;
            (r.ratio.is_finite(), json!({"norm_As": r.norm_as, "inf_quotient": r.inf_quotient, "ratio": r.ratio, "M": p.m, "rho": p.rho, "s": p.s}))
        }
        Command::LocalBoundedness => {
            let p: ReportParams = params(&scenario.params)?;
            let problem = p.problem().build(q)?;
            let r = local_boundedness_report(&problem, p.m, p.rho, p.s)?;
            (r.ratio.is_finite(), json!({"sup_quotient": r.sup_quotient, "norm_As": r.norm_as, "ratio": r.ratio, "M": p.m, "rho": p.rho, "s": p.s}))
        }
        Command::Mollifier => {
            let p: MollifierParams = params(&scenario.params)?;
            if !(p.radius > 0.0) {
                return input("radius", "must be positive");
            }
            if p.eps.is_empty() || p.eps.windows(2).any(|w| !(w[1] < w[0])) {
                return input("eps", "the schedule must be non-empty and strictly decreasing");
            }
            let v = catalog::truncated_gaussian(p.radius);
            let spec = WeightedMeasureSpec::new(3, p.alpha)?;
            let norms = mollifier_convergence_report(&v, &spec, &p.eps)?;
            let decreasing = norms.windows(2).all(|w| w[1] < w[0]);
            let last = norms[norms.len() - 1];
            let contracted = last <= p.final_ratio * tolerance_scale * norms[0];
            let rows: Vec<Value> = p.eps.iter().zip(&norms).map(|(e, v)| json!({"eps": e, "norm": v})).collect();
            (decreasing && contracted, json!({"rows": rows, "decreasing": decreasing, "final_ratio": last / norms[0], "alpha": p.alpha}))
        }
    };
    let report = json!({
        "spec_version": SPEC_VERSION,
        "command": to_value(&scenario.command),
        "quadrature": to_value(q),
        "tolerance_scale": tolerance_scale,
        "pass": pass,
        "result": result,
    });
    Ok(Outcome { report, pass, samples, output: scenario.output.clone() })
}

fn run_identity(p: IdentityParams, q: &QuadratureSpec, scale: &dyn Fn(f64) -> f64) -> CliResult<(bool, Value)> {
    Ok(match p {
        IdentityParams::Sphere { alpha, beta, r, gamma, tol } => {
            let (lhs, rhs) = sphere_kernel_identity(alpha, beta, r, gamma)?;
            let gap = (lhs - rhs).abs() / rhs.abs();
            let tol = scale(tol.unwrap_or(1e-8));
            (gap <= tol, json!({"identity": "sphere", "lhs": lhs, "rhs": rhs, "relative_gap": gap, "tol": tol}))
        }
        IdentityParams::Bochner { profile, xi, tol } => {
            let Some(f) = catalog::profile(&profile) else {
                return input("profile", format!("unknown profile {profile:?}, expected one of {:?}", catalog::PROFILES));
            };
            let r = bochner_report(&f, &xi.points()?)?;
            let tol = scale(tol.unwrap_or(1e-6));
            let mut v = to_value(&r);
            v["identity"] = json!("bochner");
            v["tol"] = json!(tol);
            (r.residual <= tol, v)
        }
        IdentityParams::Odd { n, operator, field, points, tol } => {
            let u = antisymmetric(&field, n)?;
            if points.iter().any(|x| x.len() != n || x[0] == 0.0) {
                return input("points", format!("points must lie in R^{n} off the hyperplane x1 = 0"));
            }
            let rows = odd_identity_report(&operator.build(n)?, &u, &points, q)?;
            let residual = rows.iter().fold(0.0f64, |m, r| m.max(r.residual));
            let tol = scale(tol.unwrap_or(1e-4));
            (residual <= tol, json!({"identity": "odd", "rows": to_value(&rows), "residual": residual, "tol": tol}))
        }
        IdentityParams::Pairing { n, operator, u, g, tol } => {
            let uf = antisymmetric(&u, n)?;
            let Some(gf) = catalog::test_function(&g, n) else {
                return input("g", format!("unknown test function {g:?}, expected x1_bump or bump"));
            };
            let r = weak_pairing_report(&uf, &gf, &operator.build(n)?, q)?;
            let tol = scale(tol.unwrap_or(1e-4));
            let mut v = to_value(&r);
            v["identity"] = json!("pairing");
            v["tol"] = json!(tol);
            (r.residual <= tol, v)
        }
        IdentityParams::Cylindrical { k, lambda, field, points, tol } => {
            let m = points.first().map(|p| p.len().saturating_sub(1)).unwrap_or(0);
            let Some(u) = catalog::cylindrical(&field, m) else {
                return input("field", format!("unknown cylindrical field {field:?} for m = {m}"));
            };
            let residual = cylindrical_identity_residual(k, lambda, &u, &points)?;
            let tol = scale(tol.unwrap_or(if k == 3 && lambda == -1.0 { 1e-5 } else { 1e-4 }));
            (residual <= tol, json!({"identity": "cylindrical", "k": k, "lambda": lambda, "residual": residual, "tol": tol}))
        }
        IdentityParams::Norm { n, s, field, tol } => {
            let u = antisymmetric(&field, n)?;
            let a = weighted_norm_as(&u, s)?;
            let l = weighted_norm_ls(&lift_field(&u)?, s)?;
            let gap = if a == 0.0 && l == 0.0 { 0.0 } else { (a - l).abs() / a.abs().max(l.abs()) };
            let tol = scale(tol.unwrap_or(1e-6));
            (gap <= tol, json!({"identity": "norm", "norm_As": a, "norm_Ls": l, "relative_gap": gap, "tol": tol}))
        }
        IdentityParams::Annulus { n, s, rho, x } => {
            let r = annulus_flap_lower_bound(n, s, rho, &x)?;
            let bound = -r.c_star * rho.powf(-2.0 * s);
            (r.value >= bound, json!({"identity": "annulus", "value": r.value, "c_star": r.c_star, "bound": bound}))
        }
    })
}
