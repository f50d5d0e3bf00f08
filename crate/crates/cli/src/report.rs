//! Route execution and the comparison report.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use ruin_core::asymptotics::{gs_asymptote, ruin_asymptote, AsymptoteReport, AsymptoticForm};
use ruin_core::gerber_shiu::{assemble, phi, GerberShiuSolution, RouteChoice};
use ruin_core::greens::{sylvester_max_residual, WronskianTable};
use ruin_core::model::{ModelSpec, Penalty, RiskModel};
use ruin_core::montecarlo::{estimate_penalty, estimate_ruin, SimConfig, SimEstimate};
use ruin_core::numerics::grid::default_nodes;
use ruin_core::operator::build_operator;
use ruin_core::operator::fundamental::fundamental_system;

/// The route names accepted by `--routes`, in report order.
pub const ROUTES: [&str; 4] = ["closed_form", "greens", "asymptotic", "monte_carlo"];

/// Ratio checkpoints reported for the asymptotic route, as fractions of u_max.
const CHECKPOINTS: [f64; 3] = [0.5, 0.75, 0.9];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Ruin,
    Penalty,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub u_grid: Vec<f64>,
    pub routes: Vec<String>,
    pub paths: usize,
    pub seed: u64,
    /// Relative tolerance for pairwise agreement of deterministic routes.
    pub tol: f64,
    /// Largest |z| accepted against the Monte Carlo route.
    pub z_max: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RouteResult {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_errors: Option<Vec<f64>>,
    /// Why the route produced no values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refusal: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio_checkpoints: Option<AsymptoteReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<Vec<SimEstimate>>,
    pub seconds: f64,
}

impl RouteResult {
    fn refused(reason: String, seconds: f64) -> Self {
        Self {
            refusal: Some(reason),
            seconds,
            ..Self::default()
        }
    }

    pub fn ok(&self) -> bool {
        self.refusal.is_none()
    }
}

/// Symmetric pairwise comparison over the routes in `routes`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub routes: Vec<String>,
    /// Largest relative deviation over the grid.
    pub max_rel_dev: Vec<Vec<Option<f64>>>,
    /// Largest |z| against the Monte Carlo standard errors.
    pub max_abs_z: Vec<Vec<Option<f64>>>,
    /// Whether every compared pair of exact routes agrees. The asymptotic
    /// route is reported but not held to the tolerance.
    pub consistent: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunDiagnostics {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator_residual: Option<f64>,
    /// `|Gg(lo)| / sup |g|`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sylvester_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub censored_paths: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: Command,
    pub model: ModelSpec,
    pub settings: Settings,
    pub routes: BTreeMap<String, RouteResult>,
    pub agreement: Agreement,
    pub diagnostics: RunDiagnostics,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn failed_routes(&self) -> Vec<&str> {
        self.routes.iter().filter(|(_, r)| !r.ok()).map(|(k, _)| k.as_str()).collect()
    }
}

fn finite(values: Vec<f64>, what: &str) -> Result<Vec<f64>, String> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(format!("{what} is not finite at grid point {i}")),
        None => Ok(values),
    }
}

fn solution_route(model: &RiskModel<f64>, grid: &[f64], choice: RouteChoice) -> (RouteResult, Option<GerberShiuSolution<f64>>) {
    let t = Instant::now();
    match phi(model, choice) {
        Ok(sol) => {
            let values = grid.iter().map(|&u| sol.eval(u)).collect();
            match finite(values, "Φ") {
                Ok(v) => {
                    let r = RouteResult {
                        values: Some(v),
                        warnings: sol.diagnostics.warnings.clone(),
                        seconds: t.elapsed().as_secs_f64(),
                        ..RouteResult::default()
                    };
                    (r, Some(sol))
                }
                Err(e) => (RouteResult::refused(e, t.elapsed().as_secs_f64()), None),
            }
        }
        Err(e) => (RouteResult::refused(e.to_string(), t.elapsed().as_secs_f64()), None),
    }
}

fn asymptotic_route(model: &RiskModel<f64>, grid: &[f64], command: Command) -> RouteResult {
    let t = Instant::now();
    let built: ruin_core::Result<(AsymptoticForm<f64>, usize)> = match command {
        Command::Ruin => ruin_asymptote(model).map(|a| (a, 0)),
        Command::Penalty => gs_asymptote(model).map(|a| {
            let term = a.terms.len().saturating_sub(1);
            (a, term)
        }),
    };
    match built {
        Ok((form, term)) => match finite(grid.iter().map(|&u| form.eval(u)).collect(), "asymptote") {
            Ok(values) => RouteResult {
                values: Some(values),
                warnings: form.notes.clone(),
                ratio_checkpoints: Some(form.report(term, &CHECKPOINTS)),
                seconds: t.elapsed().as_secs_f64(),
                ..RouteResult::default()
            },
            Err(e) => RouteResult::refused(e, t.elapsed().as_secs_f64()),
        },
        Err(e) => RouteResult::refused(e.to_string(), t.elapsed().as_secs_f64()),
    }
}

fn monte_carlo_route(model: &RiskModel<f64>, grid: &[f64], cfg: &SimConfig, command: Command) -> RouteResult {
    let t = Instant::now();
    let est: ruin_core::Result<Vec<SimEstimate>> = grid
        .iter()
        .map(|&u| match command {
            Command::Ruin => estimate_ruin(model, u, cfg),
            Command::Penalty => estimate_penalty(model, u, cfg),
        })
        .collect();
    match est {
        Ok(est) => {
            let mut warnings = Vec::new();
            if est.iter().any(|e| e.biased) {
                warnings.push("censored paths present; the bias direction is unknown".into());
            }
            RouteResult {
                values: Some(est.iter().map(|e| e.mean).collect()),
                std_errors: Some(est.iter().map(|e| e.std_error).collect()),
                warnings,
                monte_carlo: Some(est),
                seconds: t.elapsed().as_secs_f64(),
                ..RouteResult::default()
            }
        }
        Err(e) => RouteResult::refused(e.to_string(), t.elapsed().as_secs_f64()),
    }
}

fn greens_diagnostics(model: &RiskModel<f64>, sol: &GerberShiuSolution<f64>, d: &mut RunDiagnostics) {
    d.operator_residual = sol.diagnostics.residual;
    let Ok(ode) = build_operator(model) else { return };
    let Ok(fs) = fundamental_system(&ode, model) else { return };
    if let Ok(a) = assemble(model, &fs) {
        let gn = a.g.sup_norm();
        let b = a.gg.eval(fs.lo).abs();
        d.boundary_residual = Some(if gn > 0.0 { b / gn } else { b });
    }
    let nodes = Arc::new(default_nodes(fs.lo, fs.hi, 256));
    if let Ok(t) = WronskianTable::build(&fs, nodes) {
        d.sylvester_residual = sylvester_max_residual(&t).ok().filter(|r| r.is_finite());
    }
}

fn agreement(routes: &BTreeMap<String, RouteResult>, order: &[String], tol: f64, z_max: f64) -> Agreement {
    let n = order.len();
    let mut rel = vec![vec![None; n]; n];
    let mut zs = vec![vec![None; n]; n];
    let mut consistent = true;
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (&routes[&order[i]], &routes[&order[j]]);
            let (Some(va), Some(vb)) = (&a.values, &b.values) else { continue };
            let d = va
                .iter()
                .zip(vb)
                .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max);
            rel[i][j] = Some(d);
            // z against whichever side carries standard errors
            let se = a.std_errors.as_ref().or(b.std_errors.as_ref());
            let z = se.map(|se| {
                va.iter()
                    .zip(vb)
                    .zip(se)
                    .map(|((x, y), s)| if *s > 0.0 { (x - y).abs() / s } else if x == y { 0.0 } else { f64::INFINITY })
                    .fold(0.0, f64::max)
            });
            zs[i][j] = z.filter(|z| z.is_finite());
            let exact = order[i] != "asymptotic" && order[j] != "asymptotic";
            if i < j && exact {
                let ok = match z {
                    Some(z) => z <= z_max || d <= tol,
                    None => d <= tol,
                };
                consistent &= ok;
            }
        }
    }
    Agreement {
        routes: order.to_vec(),
        max_rel_dev: rel,
        max_abs_z: zs,
        consistent,
    }
}

/// Runs the requested routes on a validated model.
pub fn run(command: Command, model: &RiskModel<f64>, settings: Settings) -> RunReport {
    let cfg = SimConfig::default().with_paths(settings.paths).with_seed(settings.seed);
    let grid = &settings.u_grid;
    let mut routes = BTreeMap::new();
    let mut diagnostics = RunDiagnostics::default();
    for name in &settings.routes {
        let result = match name.as_str() {
            "closed_form" => solution_route(model, grid, RouteChoice::ClosedForm).0,
            "greens" => {
                let (r, sol) = solution_route(model, grid, RouteChoice::Greens);
                if let Some(sol) = sol {
                    greens_diagnostics(model, &sol, &mut diagnostics);
                }
                r
            }
            "asymptotic" => asymptotic_route(model, grid, command),
            "monte_carlo" => {
                let r = monte_carlo_route(model, grid, &cfg, command);
                if let Some(est) = &r.monte_carlo {
                    diagnostics.censored_paths = Some(est.iter().map(|e| e.n_censored).sum());
                }
                r
            }
            other => RouteResult::refused(format!("unknown route `{other}`"), 0.0),
        };
        routes.insert(name.clone(), result);
    }
    let agreement = agreement(&routes, &settings.routes, settings.tol, settings.z_max);
    RunReport {
        command,
        model: ModelSpec::from_model(model).expect("models from files use built-in families"),
        settings,
        routes,
        agreement,
        diagnostics,
    }
}

/// The model a command works on: `ruin` forces `δ = 0` and `w ≡ 1`.
pub fn command_model(command: Command, model: RiskModel<f64>, delta: Option<f64>) -> RiskModel<f64> {
    match command {
        Command::Ruin => model.with_delta(0.0).with_penalty(Penalty::RuinIndicator),
        Command::Penalty => match delta {
            Some(d) => model.with_delta(d),
            None => model,
        },
    }
}

/// `u,value[,std_error]` rows for one route.
pub fn csv(grid: &[f64], r: &RouteResult) -> Option<String> {
    let values = r.values.as_ref()?;
    let mut out = String::from(if r.std_errors.is_some() { "u,value,std_error\n" } else { "u,value\n" });
    for (i, (u, v)) in grid.iter().zip(values).enumerate() {
        match &r.std_errors {
            Some(se) => out.push_str(&format!("{u},{v},{}\n", se[i])),
            None => out.push_str(&format!("{u},{v}\n")),
        }
    }
    Some(out)
}
