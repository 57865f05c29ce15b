//! Command-line front end.
//!
//! Exit codes: 0 success, 1 domain error, 2 usage error. Without `--out` a
//! short `key=value` summary goes to standard output; with `--out` the full
//! report is written there, as CSV when the path ends in `.csv` and as the
//! JSON envelope otherwise.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use crate::asymptotics::{
    build_family, expansion_csv, local_rate_csv, local_rate_sweep, second_order_check, second_order_limit,
    verify_expansion,
};
use crate::error::Error;
use crate::io::{fmt17, json_f64, json_f64s, load_ceiling, load_shift};
use crate::montecarlo::{estimate_deviation_prob, estimate_survival, fit_escape_rate, SimulationConfig};
use crate::open::{
    escape_rate_cristadoro, escape_rate_flow, escape_rate_refined, hole_quantities, survival_curve_flow, Hole,
};
use crate::pressure::{gibbs_potential, induced_pressure_truncated, induced_pressure_via_root, WordCollection};
use crate::shift::{parse_word, CylinderFunction, MarkovShift};
use crate::suspension::build_suspension;
use crate::zeta::zeta_op_factorized;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Validate,
    EscapeRate,
    Survival,
    ZetaCheck,
    Asymptotics,
    LocalRate,
    InducedPressure,
    Simulate,
    Deviation,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::EscapeRate => "escape-rate",
            Command::Survival => "survival",
            Command::ZetaCheck => "zeta-check",
            Command::Asymptotics => "asymptotics",
            Command::LocalRate => "local-rate",
            Command::InducedPressure => "induced-pressure",
            Command::Simulate => "simulate",
            Command::Deviation => "deviation",
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Params {
    /// Transition matrix JSON.
    #[arg(long)]
    pub model: PathBuf,
    /// Ceiling JSON; the constant 1 when omitted.
    #[arg(long)]
    pub ceiling: Option<PathBuf>,
    /// Hole word, or the periodic base word for `asymptotics` and `local-rate`.
    #[arg(long)]
    pub hole: Option<String>,
    #[arg(long)]
    pub nu_min: Option<usize>,
    #[arg(long)]
    pub nu_max: Option<usize>,
    #[arg(long)]
    pub order_k: Option<usize>,
    #[arg(long)]
    pub t_max: Option<usize>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Parser)]
#[command(name = "suspension-escape", version, about = "Escape rates of suspension flows through cylinder holes")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Check a model, ceiling and hole.
    Validate(Params),
    /// Escape rate through a cylinder hole.
    EscapeRate(Params),
    /// Exact survival curve on lattice times.
    Survival(Params),
    /// Factorization of the open zeta function.
    ZetaCheck(Params),
    /// Expansion of the leading zero for shrinking periodic holes.
    Asymptotics(Params),
    /// Ratio of escape rate to hole measure for shrinking periodic holes.
    LocalRate(Params),
    /// Induced pressure of the hole-avoiding words.
    InducedPressure(Params),
    /// Monte Carlo survival estimate.
    Simulate(Params),
    /// Monte Carlo estimate of the deviation probability.
    Deviation(Params),
}

impl Sub {
    fn split(self) -> (Command, Params) {
        match self {
            Sub::Validate(p) => (Command::Validate, p),
            Sub::EscapeRate(p) => (Command::EscapeRate, p),
            Sub::Survival(p) => (Command::Survival, p),
            Sub::ZetaCheck(p) => (Command::ZetaCheck, p),
            Sub::Asymptotics(p) => (Command::Asymptotics, p),
            Sub::LocalRate(p) => (Command::LocalRate, p),
            Sub::InducedPressure(p) => (Command::InducedPressure, p),
            Sub::Simulate(p) => (Command::Simulate, p),
            Sub::Deviation(p) => (Command::Deviation, p),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunSpec {
    pub command: Command,
    pub params: Params,
}

/// A finished run: the JSON envelope, an optional CSV table and summary lines.
#[derive(Debug, Clone)]
pub struct Report {
    pub envelope: Value,
    pub csv: Option<String>,
    pub summary: Vec<(String, String)>,
}

/// Failure of a run, split by exit code.
#[derive(Debug)]
pub enum RunError {
    Usage(String),
    Domain(Error),
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Domain(e)
    }
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) => 2,
            RunError::Domain(_) => 1,
        }
    }
}

pub const DEFAULT_NU_MAX: usize = 10;
pub const DEFAULT_ORDER_K: usize = 2;
pub const DEFAULT_T_MAX: usize = 50;
pub const DEFAULT_SAMPLES: usize = 100_000;
pub const DEFAULT_EPSILON: f64 = 0.25;

/// Parse `argv` (program name first), run, and return the exit code.
pub fn parse_and_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (command, params) = cli.command.split();
    let spec = RunSpec { command, params };
    match run_report(&spec) {
        Ok(report) => match emit(&spec, &report) {
            Ok(()) => 0,
            Err(msg) => {
                eprintln!("error: {msg}");
                2
            }
        },
        Err(e) => {
            match &e {
                RunError::Usage(msg) => eprintln!("usage error: {msg}"),
                RunError::Domain(err) => {
                    let doc = json!({
                        "command": spec.command.name(),
                        "inputs": inputs(&spec.params),
                        "error": {"code": err.code(), "message": err.to_string()},
                    });
                    eprintln!("error [{}]: {err}", err.code());
                    eprintln!("{doc}");
                }
            }
            e.exit_code()
        }
    }
}

fn emit(spec: &RunSpec, report: &Report) -> std::result::Result<(), String> {
    match &spec.params.out {
        Some(path) => {
            let is_csv = path.extension().is_some_and(|e| e == "csv");
            let text = match (&report.csv, is_csv) {
                (Some(c), true) => c.clone(),
                (None, true) => return Err(format!("{} has no CSV form", spec.command.name())),
                _ => serde_json::to_string_pretty(&report.envelope).map_err(|e| e.to_string())? + "\n",
            };
            std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
        }
        None => {
            for (k, v) in &report.summary {
                println!("{k}={v}");
            }
            Ok(())
        }
    }
}

fn inputs(p: &Params) -> Value {
    let mut m = Map::new();
    m.insert("model".into(), json!(p.model.display().to_string()));
    if let Some(c) = &p.ceiling {
        m.insert("ceiling".into(), json!(c.display().to_string()));
    }
    if let Some(h) = &p.hole {
        m.insert("hole".into(), json!(h));
    }
    for (k, v) in [
        ("nu_min", p.nu_min),
        ("nu_max", p.nu_max),
        ("order_k", p.order_k),
        ("t_max", p.t_max),
        ("samples", p.samples),
    ] {
        if let Some(v) = v {
            m.insert(k.into(), json!(v));
        }
    }
    for (k, v) in [("eta", p.eta), ("epsilon", p.epsilon)] {
        if let Some(v) = v {
            m.insert(k.into(), json_f64(v));
        }
    }
    Value::Object(m)
}

fn existing(path: &Path) -> std::result::Result<&Path, RunError> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(RunError::Usage(format!("file not found: {}", path.display())))
    }
}

fn load_model(p: &Params) -> std::result::Result<(MarkovShift, CylinderFunction), RunError> {
    let shift = load_shift(existing(&p.model)?)?;
    let ceiling = match &p.ceiling {
        Some(path) => load_ceiling(existing(path)?, &shift)?,
        None => CylinderFunction::ones(&shift),
    };
    Ok((shift, ceiling))
}

fn word(shift: &MarkovShift, p: &Params) -> std::result::Result<Vec<usize>, RunError> {
    let text = p.hole.as_deref().ok_or_else(|| RunError::Usage("--hole is required".into()))?;
    parse_word(shift.labels(), text)
        .map(|w| w.symbols().to_vec())
        .map_err(RunError::Usage)
}

fn hole(shift: &MarkovShift, p: &Params) -> std::result::Result<Hole, RunError> {
    let w = word(shift, p)?;
    Ok(Hole::from_symbols(shift, &w)?)
}

fn seed(p: &Params) -> std::result::Result<u64, RunError> {
    p.seed.ok_or_else(|| RunError::Usage("--seed is required for randomized commands".into()))
}

fn s(x: f64) -> String {
    fmt17(x)
}

/// Run a validated spec and build its report.
pub fn run_report(spec: &RunSpec) -> std::result::Result<Report, RunError> {
    let p = &spec.params;
    let (shift, ceiling) = load_model(p)?;
    let mut summary: Vec<(String, String)> = Vec::new();
    let mut csv = None;
    let mut seed_used = None;

    let results = match spec.command {
        Command::Validate => {
            let mut r = Map::new();
            r.insert("alphabet_size".into(), json!(shift.alphabet_size()));
            r.insert("stationary".into(), json_f64s(shift.stationary()));
            r.insert("ceiling_order".into(), json!(ceiling.order()));
            r.insert("ceiling_mean".into(), json_f64(ceiling.integral(&shift)));
            summary.push(("alphabet_size".into(), shift.alphabet_size().to_string()));
            if let Some(l) = ceiling.lattice() {
                let sys = build_suspension(&shift, &ceiling)?;
                r.insert("lattice".into(), json_f64(l));
                r.insert("blocks".into(), json!(sys.blocks().len()));
                summary.push(("blocks".into(), sys.blocks().len().to_string()));
            } else {
                r.insert("lattice".into(), Value::Null);
            }
            if p.hole.is_some() {
                let h = hole(&shift, p)?;
                let reduced = shift.is_reduced(h.word())?;
                r.insert("hole_reduced".into(), json!(reduced));
                r.insert("hole_measure".into(), json_f64(shift.cylinder_measure(h.word())?));
                summary.push(("hole_reduced".into(), reduced.to_string()));
            }
            summary.push(("valid".into(), "true".into()));
            Value::Object(r)
        }
        Command::EscapeRate => {
            let h = hole(&shift, p)?;
            let mut r = Map::new();
            if ceiling.lattice().is_some() {
                let sys = build_suspension(&shift, &ceiling)?;
                let rho = escape_rate_flow(&sys, &h)?.upper;
                let refined = escape_rate_refined(&sys, &h)?.upper;
                r.insert("rho".into(), json_f64(rho));
                r.insert("rho_refined".into(), json_f64(refined));
                summary.push(("rho".into(), s(rho)));
                summary.push(("rho_refined".into(), s(refined)));
                if let Ok(c) = escape_rate_cristadoro(&sys, &h) {
                    r.insert("rho_reduced".into(), json_f64(c.upper));
                    summary.push(("rho_reduced".into(), s(c.upper)));
                }
                r.insert("method".into(), json!("open-matrix"));
            } else {
                let pot = gibbs_potential(&shift)?;
                let beta = induced_pressure_via_root(&pot, &ceiling, &WordCollection::new(h))?;
                r.insert("rho".into(), json_f64(-beta));
                r.insert("method".into(), json!("pressure-root"));
                summary.push(("rho".into(), s(-beta)));
            }
            Value::Object(r)
        }
        Command::Survival => {
            let h = hole(&shift, p)?;
            let sys = build_suspension(&shift, &ceiling)?;
            let t_max = p.t_max.unwrap_or(DEFAULT_T_MAX);
            let curve = survival_curve_flow(&sys, &h, t_max)?;
            let table = crate::montecarlo::SurvivalTable::exact(curve.clone(), sys.lattice_scale());
            csv = Some(table.to_csv());
            summary.push(("t_max".into(), t_max.to_string()));
            summary.push(("survival_at_t_max".into(), s(curve[t_max])));
            json!({"lattice_scale": json_f64(sys.lattice_scale()), "survival": json_f64s(&curve)})
        }
        Command::ZetaCheck => {
            let h = hole(&shift, p)?;
            let sys = build_suspension(&shift, &ceiling)?;
            let b = zeta_op_factorized(&sys, &h)?;
            let z = b.leading_zero()?;
            let rho = z.ln() / sys.lattice_scale();
            let gap = b.cofactor_gap(&sys);
            let q = hole_quantities(&sys, &h)?;
            summary.push(("max_deviation".into(), s(b.deviation)));
            summary.push(("cofactor_gap".into(), s(gap)));
            summary.push(("leading_zero".into(), s(z)));
            summary.push(("rho".into(), s(rho)));
            json!({
                "max_deviation": json_f64(b.deviation),
                "cofactor_gap": json_f64(gap),
                "leading_zero": json_f64(z),
                "rho": json_f64(rho),
                "alpha": json_f64(q.alpha),
                "k0": q.k0,
                "zeta_op": json_f64s(b.zeta_op.coefficients()),
                "zeta_op_direct": json_f64s(b.zeta_op_direct.coefficients()),
                "correlation": json_f64s(b.corr_poly.coefficients()),
            })
        }
        Command::Asymptotics => {
            let x = word(&shift, p)?;
            let fam = build_family(&shift, &ceiling, &x)?;
            let nu_min = p.nu_min.unwrap_or(fam.nu_min).max(fam.nu_min);
            let nu_max = p.nu_max.unwrap_or(DEFAULT_NU_MAX);
            if nu_max < nu_min {
                return Err(RunError::Usage(format!("--nu-max {nu_max} is below --nu-min {nu_min}")));
            }
            let k = p.order_k.unwrap_or(DEFAULT_ORDER_K);
            if k == 0 {
                return Err(RunError::Usage("--order-k must be positive".into()));
            }
            let rows = verify_expansion(&fam, nu_min..=nu_max, k)?;
            let second = second_order_check(&fam, nu_min..=nu_max)?;
            csv = Some(expansion_csv(&rows));
            let last = rows.last().expect("non-empty range");
            summary.push(("local_rate".into(), s(fam.local_rate())));
            summary.push(("final_residual".into(), s(last.residual_over_mu_k)));
            summary.push(("second_order_limit".into(), s(second_order_limit(&fam))));
            json!({
                "local_rate": json_f64(fam.local_rate()),
                "second_order_limit": json_f64(second_order_limit(&fam)),
                "rows": rows.iter().map(|r| json!({
                    "nu": r.nu,
                    "mu_nu": json_f64(r.mu_nu),
                    "z_nu": json_f64(r.z_nu),
                    "s1": json_f64(r.s1),
                    "s2": json_f64(r.s2),
                    "partial_sum": json_f64(r.partial_sum),
                    "residual_over_mu_k": json_f64(r.residual_over_mu_k),
                })).collect::<Vec<_>>(),
                "second_order": second.iter().map(|r| json!({
                    "nu": r.nu,
                    "rho": json_f64(r.rho),
                    "value": json_f64(r.value),
                })).collect::<Vec<_>>(),
            })
        }
        Command::LocalRate => {
            let x = word(&shift, p)?;
            let fam = build_family(&shift, &ceiling, &x)?;
            let nu_min = p.nu_min.unwrap_or(fam.nu_min).max(fam.nu_min);
            let nu_max = p.nu_max.unwrap_or(DEFAULT_NU_MAX);
            if nu_max < nu_min {
                return Err(RunError::Usage(format!("--nu-max {nu_max} is below --nu-min {nu_min}")));
            }
            let rows = local_rate_sweep(&shift, &ceiling, &x, nu_min..=nu_max)?;
            csv = Some(local_rate_csv(&rows));
            summary.push(("predicted".into(), s(fam.local_rate())));
            summary.push(("final_ratio".into(), s(rows.last().expect("non-empty").ratio)));
            json!({
                "predicted": json_f64(fam.local_rate()),
                "rows": rows.iter().map(|r| json!({
                    "nu": r.nu,
                    "mu_nu": json_f64(r.mu_nu),
                    "ratio": json_f64(r.ratio),
                    "ratio_unit": json_f64(r.ratio_unit),
                })).collect::<Vec<_>>(),
            })
        }
        Command::InducedPressure => {
            let h = hole(&shift, p)?;
            let pot = gibbs_potential(&shift)?;
            let coll = WordCollection::new(h.clone());
            let beta_root = induced_pressure_via_root(&pot, &ceiling, &coll)?;
            let mut r = Map::new();
            r.insert("beta_root".into(), json_f64(beta_root));
            r.insert("gibbs_constant".into(), json_f64(pot.gibbs_constant));
            summary.push(("beta_root".into(), s(beta_root)));
            let mut rows = vec![("root", beta_root)];
            if let Some(lambda) = ceiling.lattice() {
                let sys = build_suspension(&shift, &ceiling)?;
                let rho = escape_rate_flow(&sys, &h)?.upper;
                let t = p.t_max.map(|t| t as f64).unwrap_or(crate::pressure::DEFAULT_T);
                let t = (t / lambda).round() * lambda;
                let eta = p.eta.unwrap_or(ceiling.sup() + lambda);
                let beta_trunc = induced_pressure_truncated(&pot, &ceiling, &coll, t, eta)?;
                rows.push(("truncated", beta_trunc));
                r.insert("beta_truncated".into(), json_f64(beta_trunc));
                r.insert("rho".into(), json_f64(rho));
                r.insert("t".into(), json_f64(t));
                r.insert("eta".into(), json_f64(eta));
                summary.push(("beta_truncated".into(), s(beta_trunc)));
                summary.push(("rho".into(), s(rho)));
                csv = Some(crate::io::csv(
                    &["method", "beta", "rho", "abs_gap"],
                    rows.iter()
                        .map(|(m, b)| vec![m.to_string(), s(*b), s(rho), s((b + rho).abs())]),
                ));
            }
            Value::Object(r)
        }
        Command::Simulate => {
            let h = hole(&shift, p)?;
            let sys = build_suspension(&shift, &ceiling)?;
            let seed = seed(p)?;
            seed_used = Some(seed);
            let cfg = SimulationConfig::new(seed, p.samples.unwrap_or(DEFAULT_SAMPLES), p.t_max.unwrap_or(DEFAULT_T_MAX))?;
            let table = estimate_survival(&sys, &h, &cfg)?;
            csv = Some(table.to_csv());
            let mut r = Map::new();
            r.insert("estimate".into(), json_f64s(&table.estimate));
            r.insert("stderr".into(), json_f64s(&table.stderr));
            summary.push(("survival_at_t_max".into(), s(table.estimate[cfg.t_max])));
            if cfg.t_max >= 2 * crate::montecarlo::MIN_FIT_POINTS {
                match fit_escape_rate(&table, cfg.t_max / 2..=cfg.t_max) {
                    Ok(fit) => {
                        r.insert(
                            "fit".into(),
                            json!({"lower": json_f64(fit.lower), "upper": json_f64(fit.upper), "converged": fit.converged}),
                        );
                        summary.push(("rho_lower".into(), s(fit.lower)));
                        summary.push(("rho_upper".into(), s(fit.upper)));
                    }
                    Err(e) => {
                        r.insert("fit".into(), json!({"error": e.code()}));
                    }
                }
            }
            Value::Object(r)
        }
        Command::Deviation => {
            let seed = seed(p)?;
            seed_used = Some(seed);
            let k_max = p.order_k.unwrap_or(20);
            if k_max == 0 {
                return Err(RunError::Usage("--order-k must be positive".into()));
            }
            let ks: Vec<usize> = (1..=k_max).collect();
            let cfg = SimulationConfig::new(seed, p.samples.unwrap_or(DEFAULT_SAMPLES), 0)?;
            let eps = p.epsilon.unwrap_or(DEFAULT_EPSILON);
            let est = estimate_deviation_prob(&shift, &ceiling, eps, &ks, &cfg)?;
            csv = Some(est.to_csv());
            summary.push(("l_max".into(), est.l_max.to_string()));
            summary.push((
                "zeta_hat".into(),
                est.zeta_hat.map(s).unwrap_or_else(|| "none".into()),
            ));
            json!({
                "epsilon": json_f64(eps),
                "mean": json_f64(est.mean),
                "l_max": est.l_max,
                "zeta_hat": est.zeta_hat.map(json_f64),
                "rows": est.rows.iter().map(|r| json!({
                    "k": r.k,
                    "p_hat": json_f64(r.p_hat),
                    "stderr": json_f64(r.stderr),
                })).collect::<Vec<_>>(),
            })
        }
    };

    let envelope = json!({
        "command": spec.command.name(),
        "inputs": inputs(p),
        "results": results,
        "versions": {env!("CARGO_PKG_NAME"): env!("CARGO_PKG_VERSION")},
        "seed": seed_used,
    });
    Ok(Report { envelope, csv, summary })
}
