use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use synsafe_core::failures::{approximation_error, probabilistic_model};
use synsafe_core::model::{compose, validate, ComposeOptions, Flavor, Severity, SystemModel, TimeStep};
use synsafe_core::qualitative::{dcca, Occurrence};
use synsafe_core::quantitative::{
    fta_bound, hazard_curve, hazard_probability, horizon_probabilities, max_hazard_probability, monte_carlo_hazard,
    DemandBounds,
};
use synsafe_core::{lang, StateSpace64};

use crate::report::{g17, to_json, Num, SCHEMA};
use crate::{Cli, Command, Format, HorizonArgs, OccurrenceArg};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Model(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    ResourceLimit(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Model(_) => 1,
            CliError::Io { .. } => 2,
            CliError::ResourceLimit(_) => 3,
        }
    }
}

impl From<synsafe_core::Error> for CliError {
    fn from(e: synsafe_core::Error) -> Self {
        if e.is_resource_limit() {
            CliError::ResourceLimit(e.to_string())
        } else {
            CliError::Model(e.to_string())
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(path: &Path) -> Result<SystemModel> {
    let text = read(path)?;
    lang::load(&text).map_err(|diags| {
        let lines: Vec<String> = diags.iter().map(|d| format!("{}:{d}", path.display())).collect();
        CliError::Model(lines.join("\n"))
    })
}

fn steps(model: &SystemModel, h: &HorizonArgs) -> Result<u64> {
    match (h.steps, h.time) {
        (Some(k), _) => Ok(k),
        (None, Some(seconds)) => Ok(model.time_step.steps_for(seconds)?),
        (None, None) => model
            .horizon
            .ok_or_else(|| CliError::Model("no horizon: pass -k or --time, or declare 'horizon' in the model".into())),
    }
}

fn format(cli: &Cli, allowed: &[Format], default: Format) -> Result<Format> {
    let f = cli.format.unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        Err(CliError::Model(
            format!("format {f:?} is not available for this command").to_lowercase(),
        ))
    }
}

fn runtime(cli: &Cli, start: Instant) -> Option<Num> {
    cli.timing.then(|| Num(start.elapsed().as_secs_f64() * 1e3))
}

pub fn run(cli: &Cli) -> Result<()> {
    let workers = cli.workers.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Model(format!("thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Validate { model } => cmd_validate(cli, model),
        Command::Dcca { model, occurrence } => cmd_dcca(cli, model, *occurrence),
        Command::Hazard {
            model,
            horizon,
            max,
            curve,
            curve_file,
        } => cmd_hazard(cli, model, horizon, *max, curve.zip(curve_file.as_deref())),
        Command::FtaBound {
            model,
            horizon,
            demands,
            demand_default,
            model_check,
        } => {
            let bounds = DemandBounds {
                explicit: demands.iter().cloned().collect(),
                default_to_probability: *demand_default,
            };
            cmd_fta_bound(cli, model, horizon, &bounds, *model_check)
        }
        Command::ApproxError {
            rate,
            dt,
            at,
            from,
            to,
            step,
        } => cmd_approx_error(cli, *rate, *dt, at, (*from, *to, *step)),
        Command::Simulate {
            model,
            horizon,
            samples,
            seed,
        } => cmd_simulate(cli, model, horizon, *samples, *seed),
    })
}

#[derive(Serialize)]
struct DiagnosticJson {
    severity: &'static str,
    message: String,
}

#[derive(Serialize)]
struct ValidateReport {
    schema: u32,
    model: String,
    ok: bool,
    diagnostics: Vec<DiagnosticJson>,
}

fn cmd_validate(cli: &Cli, path: &Path) -> Result<()> {
    let fmt = format(cli, &[Format::Json, Format::Text], Format::Text)?;
    let text = read(path)?;
    let diags: Vec<(Severity, String)> = match lang::load(&text) {
        Err(diags) => diags
            .iter()
            .map(|d| (d.severity, format!("{}:{d}", path.display())))
            .collect(),
        Ok(model) => validate(&model)?
            .iter()
            .map(|d| (d.severity, format!("{}: {d}", path.display())))
            .collect(),
    };
    for (_, line) in &diags {
        eprintln!("{line}");
    }
    let errors = diags.iter().filter(|d| d.0 == Severity::Error).count();
    let out = match fmt {
        Format::Json => to_json(&ValidateReport {
            schema: SCHEMA,
            model: path.display().to_string(),
            ok: errors == 0,
            diagnostics: diags
                .iter()
                .map(|(s, m)| DiagnosticJson {
                    severity: if *s == Severity::Error { "error" } else { "warning" },
                    message: m.clone(),
                })
                .collect(),
        }),
        _ if errors == 0 => format!("{}: ok\n", path.display()),
        _ => String::new(),
    };
    write(cli.output.as_deref(), &out)?;
    if errors > 0 {
        return Err(CliError::Model(format!("{errors} error(s)")));
    }
    Ok(())
}

#[derive(Serialize)]
struct DccaStatsJson {
    states: usize,
    checks: usize,
    pruned: usize,
}

#[derive(Serialize)]
struct DccaReport {
    schema: u32,
    hazard: String,
    occurrence: &'static str,
    functional_violation: bool,
    minimal_critical_sets: Vec<Vec<String>>,
    /// One path per set, as rendered global states.
    witnesses: Vec<Vec<String>>,
    stats: DccaStatsJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    runtime_ms: Option<Num>,
}

fn cmd_dcca(cli: &Cli, path: &Path, occurrence: OccurrenceArg) -> Result<()> {
    let fmt = format(cli, &[Format::Json, Format::Text], Format::Json)?;
    let model = load(path)?;
    let start = Instant::now();
    let (occ, occ_name) = match occurrence {
        OccurrenceArg::Current => (Occurrence::Current, "current"),
        OccurrenceArg::Ever => (Occurrence::Ever, "ever"),
    };
    let (r, space) = dcca(&model, occ, cli.state_cap)?;
    let report = DccaReport {
        schema: SCHEMA,
        hazard: r.hazard.clone(),
        occurrence: occ_name,
        functional_violation: r.functional_violation,
        minimal_critical_sets: r.minimal_critical_sets.iter().map(|c| c.failures.clone()).collect(),
        witnesses: r
            .minimal_critical_sets
            .iter()
            .map(|c| c.witness.iter().map(|&s| space.render_state(s)).collect())
            .collect(),
        stats: DccaStatsJson {
            states: r.stats.states,
            checks: r.stats.checks,
            pruned: r.stats.pruned,
        },
        runtime_ms: runtime(cli, start),
    };
    let out = match fmt {
        Format::Json => to_json(&report),
        _ => {
            let mut s = String::new();
            if report.functional_violation {
                s.push_str("hazard reachable without failures\n");
            }
            for set in &report.minimal_critical_sets {
                let _ = writeln!(s, "{{{}}}", set.join(", "));
            }
            s
        }
    };
    write(cli.output.as_deref(), &out)
}

fn dtmc_space(cli: &Cli, model: &SystemModel, flavor: Flavor) -> Result<StateSpace64> {
    let p = probabilistic_model(model)?;
    compose(&p, flavor, &ComposeOptions::with_cap(cli.state_cap)).map_err(|e| match e {
        synsafe_core::Error::Nondeterminism { .. } if flavor == Flavor::Dtmc => {
            CliError::Model(format!("{e}\n(use --max to analyse the model as an MDP)"))
        }
        e => e.into(),
    })
}

#[derive(Serialize)]
struct HazardReport {
    schema: u32,
    hazard: String,
    semantics: &'static str,
    k: u64,
    t_seconds: Num,
    probability: Num,
    states: usize,
    transitions: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    runtime_ms: Option<Num>,
}

fn cmd_hazard(cli: &Cli, path: &Path, h: &HorizonArgs, max: bool, curve: Option<(u64, &Path)>) -> Result<()> {
    let fmt = format(cli, &[Format::Json, Format::Text], Format::Json)?;
    let model = load(path)?;
    let k = steps(&model, h)?;
    let start = Instant::now();
    let flavor = if max { Flavor::Mdp } else { Flavor::Dtmc };
    let space = dtmc_space(cli, &model, flavor)?;
    let probability = match curve {
        Some((stride, file)) => {
            if max {
                return Err(CliError::Model("--curve is only available for DTMC models".into()));
            }
            let c = hazard_curve(&space, k, stride, model.time_step)?;
            let mut csv = String::from("k,t_seconds,probability\n");
            for p in &c.points {
                let _ = writeln!(csv, "{},{},{}", p.k, g17(p.t_seconds), g17(p.probability));
            }
            write(Some(file), &csv)?;
            c.points.last().expect("curve ends at k").probability
        }
        None if max => max_hazard_probability(&space, k)?,
        None => hazard_probability(&space, k)?,
    };
    let report = HazardReport {
        schema: SCHEMA,
        hazard: model.hazard_name.clone(),
        semantics: if max { "mdp-max" } else { "dtmc" },
        k,
        t_seconds: Num(k as f64 * model.time_step.seconds()),
        probability: Num(probability),
        states: space.len(),
        transitions: space.edge_count(),
        runtime_ms: runtime(cli, start),
    };
    let out = match fmt {
        Format::Json => to_json(&report),
        _ => format!("P[true U<={k} {}] = {}\n", report.hazard, g17(probability)),
    };
    write(cli.output.as_deref(), &out)
}

#[derive(Serialize)]
struct TermJson {
    failures: Vec<String>,
    product: Num,
}

#[derive(Serialize)]
struct FtaReport {
    schema: u32,
    k: u64,
    t_seconds: Num,
    horizon_probabilities: std::collections::BTreeMap<String, Num>,
    terms: Vec<TermJson>,
    bound: Num,
    #[serde(skip_serializing_if = "Option::is_none")]
    model_checked: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    violated: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    runtime_ms: Option<Num>,
}

fn cmd_fta_bound(cli: &Cli, path: &Path, h: &HorizonArgs, bounds: &DemandBounds, check: bool) -> Result<()> {
    let fmt = format(cli, &[Format::Json, Format::Text], Format::Json)?;
    let model = load(path)?;
    let k = steps(&model, h)?;
    let start = Instant::now();
    let (r, _) = dcca(&model, Occurrence::Current, cli.state_cap)?;
    let mcs: Vec<Vec<String>> = r.minimal_critical_sets.iter().map(|c| c.failures.clone()).collect();
    let probs = horizon_probabilities(&model, k, bounds)?;
    let mut report = fta_bound(&mcs, &probs).map_err(|e| match e {
        synsafe_core::Error::MissingProbability(name) => CliError::Model(format!(
            "no horizon probability for per-demand failure mode '{name}': \
             pass --demand {name}=P or --demand-default"
        )),
        e => e.into(),
    })?;
    if check {
        let space = dtmc_space(cli, &model, Flavor::Dtmc)?;
        report = report.with_model_checked(hazard_probability(&space, k)?);
    }
    let json = FtaReport {
        schema: SCHEMA,
        k,
        t_seconds: Num(k as f64 * model.time_step.seconds()),
        horizon_probabilities: probs.iter().map(|(n, &p)| (n.clone(), Num(p))).collect(),
        terms: report
            .terms
            .iter()
            .map(|t| TermJson {
                failures: t.failures.clone(),
                product: Num(t.product),
            })
            .collect(),
        bound: Num(report.bound),
        model_checked: report.model_checked.map(Num),
        violated: report.model_checked.map(|_| report.violated()),
        runtime_ms: runtime(cli, start),
    };
    let out = match fmt {
        Format::Json => to_json(&json),
        _ => {
            let mut s = format!("bound = {}\n", g17(report.bound));
            if let Some(p) = report.model_checked {
                let _ = writeln!(s, "model checked = {}", g17(p));
            }
            s
        }
    };
    write(cli.output.as_deref(), &out)
}

#[derive(Serialize)]
struct ApproxRow {
    t_hours: Num,
    exp_cdf: Num,
    geom_cdf: Num,
    abs_err: Num,
    rel_err: Option<Num>,
}

#[derive(Serialize)]
struct ApproxReport {
    schema: u32,
    rate_per_hour: Num,
    dt_seconds: Num,
    rows: Vec<ApproxRow>,
}

fn cmd_approx_error(cli: &Cli, rate: f64, dt: f64, at: &[f64], sweep: (f64, f64, f64)) -> Result<()> {
    let fmt = format(cli, &[Format::Csv, Format::Json], Format::Csv)?;
    let dt_step = TimeStep::from_seconds(dt)?;
    let times: Vec<f64> = if at.is_empty() {
        let (from, to, step) = sweep;
        if !(step > 0.0 && from <= to) {
            return Err(CliError::Model("sweep needs --step > 0 and --from <= --to".into()));
        }
        let n = ((to - from) / step + 1e-9).floor() as u64;
        (0..=n).map(|i| from + i as f64 * step).collect()
    } else {
        at.to_vec()
    };
    let mut rows = Vec::new();
    for t in times {
        let e = approximation_error(rate, dt_step, t)?;
        rows.push(ApproxRow {
            t_hours: Num(e.t_hours),
            exp_cdf: Num(e.exp_cdf),
            geom_cdf: Num(e.geom_cdf),
            abs_err: Num(e.absolute),
            rel_err: e.relative.map(Num),
        });
    }
    let out = match fmt {
        Format::Json => to_json(&ApproxReport {
            schema: SCHEMA,
            rate_per_hour: Num(rate),
            dt_seconds: Num(dt),
            rows,
        }),
        _ => {
            let mut s = String::from("t_hours,exp_cdf,geom_cdf,abs_err,rel_err\n");
            for r in &rows {
                let rel = r.rel_err.map(|x| g17(x.0)).unwrap_or_default();
                let _ = writeln!(
                    s,
                    "{},{},{},{},{rel}",
                    g17(r.t_hours.0),
                    g17(r.exp_cdf.0),
                    g17(r.geom_cdf.0),
                    g17(r.abs_err.0)
                );
            }
            s
        }
    };
    write(cli.output.as_deref(), &out)
}

#[derive(Serialize)]
struct SimulateReport {
    schema: u32,
    hazard: String,
    k: u64,
    t_seconds: Num,
    samples: u64,
    seed: u64,
    hits: u64,
    estimate: Num,
    sigma: Num,
    half_width: Num,
    #[serde(skip_serializing_if = "Option::is_none")]
    runtime_ms: Option<Num>,
}

fn cmd_simulate(cli: &Cli, path: &Path, h: &HorizonArgs, samples: u64, seed: u64) -> Result<()> {
    let fmt = format(cli, &[Format::Json, Format::Text], Format::Json)?;
    let model = load(path)?;
    let k = steps(&model, h)?;
    let start = Instant::now();
    let space = dtmc_space(cli, &model, Flavor::Dtmc)?;
    let est = monte_carlo_hazard(&space, k, samples, seed)?;
    let report = SimulateReport {
        schema: SCHEMA,
        hazard: model.hazard_name.clone(),
        k,
        t_seconds: Num(k as f64 * model.time_step.seconds()),
        samples: est.samples,
        seed,
        hits: est.hits,
        estimate: Num(est.estimate),
        sigma: Num(est.sigma()),
        half_width: Num(est.half_width),
        runtime_ms: runtime(cli, start),
    };
    let out = match fmt {
        Format::Json => to_json(&report),
        _ => format!(
            "{} +- {} ({} of {samples})\n",
            g17(est.estimate),
            g17(est.half_width),
            est.hits
        ),
    };
    write(cli.output.as_deref(), &out)
}
