//! The `mdpx` command line: argument parsing, dispatch to the solver
//! crates and the JSON report.
//!
//! Exit codes: 0 success, 1 usage error, 2 unreadable or invalid input,
//! 3 infinite (or undefined) value, 4 resource guard.

mod exact_ce;
mod report;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mdp_approx::{approx_ce_with, approx_pe_with, ApproxError, ApproxOptions};
use mdp_bounds::{compute_bounds, BoundsError};
use mdp_exact::ExactError;
use mdp_format::{parse_mdp_with, rational_json, serialize_mdp, ParseOptions};
use mdp_model::{parse_rational, Mdp, Rational};
use mdp_oracle::{oracle_pe, simulate, OracleError};
use mdp_preprocess::{
    classify_finiteness, collapse_to_fail, posmin_transform, prepare, spider_transform, FinitenessReason,
    FinitenessVerdict, PreprocessError, TransformTrace, Witness,
};
use num_traits::Zero;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

pub use exact_ce::{exact_ce, table_scheduler, ExactCe, ExactCeError};
pub use report::Report;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INFINITE: i32 = 3;
pub const EXIT_RESOURCE: i32 = 4;

/// Largest exact table (`exact`) or oracle window (`oracle`), in cells.
pub const EXACT_CELL_LIMIT: u64 = 2_000_000;
pub const ORACLE_CELL_LIMIT: u64 = 50_000;

#[derive(Parser, Debug)]
#[command(name = "mdpx", version, about = "Partial and conditional expectations in MDPs with integer weights")]
struct Cli {
    /// print the report as JSON instead of `key: value` lines
    #[arg(long, global = true)]
    json: bool,
    /// decimal digits of rational values
    #[arg(long, global = true, default_value_t = 10)]
    digits: usize,
    /// leave timings out so that repeated runs print the same bytes
    #[arg(long, global = true)]
    deterministic: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Pe,
    Ce,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide whether the maximal PE and CE are finite
    Check { file: PathBuf },
    /// Exact optimum for models without negative weights
    Exact {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Pe)]
        mode: Mode,
        #[arg(long, value_parser = rational, allow_hyphen_values = true)]
        bias: Option<Rational>,
    },
    /// Certified ε-approximation with a witnessing scheduler
    Approx {
        file: PathBuf,
        #[arg(long, value_parser = rational, allow_hyphen_values = true)]
        epsilon: Rational,
        #[arg(long, value_enum, default_value_t = Mode::Pe)]
        mode: Mode,
        #[arg(long, value_parser = rational, allow_hyphen_values = true)]
        bias: Option<Rational>,
        /// write the scheduler as JSON
        #[arg(long)]
        emit_scheduler: Option<PathBuf>,
        /// list every step of the conditional expectation search
        #[arg(long)]
        trace: bool,
    },
    /// Super-potentials, tail constants, upper bounds and the weight window
    Bounds {
        file: PathBuf,
        #[arg(long, value_parser = rational, default_value = "1/1000", allow_hyphen_values = true)]
        epsilon: Rational,
    },
    /// Apply one model transformation and write the result
    Transform {
        file: PathBuf,
        #[command(flatten)]
        kind: TransformFlags,
        #[arg(long)]
        out: PathBuf,
    },
    /// Best window scheduler by exact policy iteration, optionally simulated
    Oracle {
        file: PathBuf,
        #[arg(long)]
        window: i64,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long, default_value_t = 10_000)]
        horizon: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct TransformFlags {
    /// merge the states that cannot reach goal into one fail state
    #[arg(long)]
    collapse: bool,
    /// flatten end components of mean payoff 0
    #[arg(long)]
    spider: bool,
    /// make the minimal goal probability positive
    #[arg(long)]
    posmin: bool,
}

fn rational(s: &str) -> Result<Rational, String> {
    parse_rational(s).ok_or_else(|| format!("`{s}` is not a rational (INT or INT/INT)"))
}

/// An error on its way to an exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
    /// printed before exiting, for failures that still have something to say
    report: Option<Box<Report>>,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Failure {
        Failure { code, message: message.into(), report: None }
    }
}

fn preprocess_code(e: &PreprocessError) -> i32 {
    match e {
        PreprocessError::Overflow => EXIT_RESOURCE,
        _ => EXIT_INFINITE,
    }
}

impl From<PreprocessError> for Failure {
    fn from(e: PreprocessError) -> Failure {
        Failure::new(preprocess_code(&e), e.to_string())
    }
}

impl From<BoundsError> for Failure {
    fn from(e: BoundsError) -> Failure {
        let code = match e {
            BoundsError::NonPositiveEpsilon => EXIT_USAGE,
            BoundsError::Overflow => EXIT_RESOURCE,
            BoundsError::NonNegativeGain(_) => EXIT_INFINITE,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<ApproxError> for Failure {
    fn from(e: ApproxError) -> Failure {
        let code = match &e {
            ApproxError::NonPositiveEpsilon => EXIT_USAGE,
            ApproxError::InfinitePe(_) | ApproxError::InfiniteCe(_) => EXIT_INFINITE,
            ApproxError::ResourceLimit { .. } | ApproxError::Overflow | ApproxError::Precision(_) => EXIT_RESOURCE,
            ApproxError::Bounds(b) => return b.clone().into(),
            ApproxError::Preprocess(p) => preprocess_code(p),
        };
        Failure::new(code, e.to_string())
    }
}

impl From<ExactError> for Failure {
    fn from(e: ExactError) -> Failure {
        let code = match e {
            ExactError::NegativeWeight => EXIT_INPUT,
            ExactError::EndComponent(_) => EXIT_INFINITE,
            ExactError::Overflow => EXIT_RESOURCE,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<ExactCeError> for Failure {
    fn from(e: ExactCeError) -> Failure {
        match e {
            ExactCeError::Preprocess(p) => p.into(),
            ExactCeError::Exact(x) => x.into(),
            ExactCeError::TooLarge { .. } => Failure::new(EXIT_RESOURCE, e.to_string()),
            ExactCeError::Stalled => Failure::new(EXIT_RESOURCE, e.to_string()),
        }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Failure {
        let code = match &e {
            OracleError::Infinite(_) => EXIT_INFINITE,
            OracleError::Window(_) => EXIT_USAGE,
            OracleError::TooMany { .. } | OracleError::Improper | OracleError::NoAction(..) => EXIT_RESOURCE,
            OracleError::Preprocess(p) => preprocess_code(p),
        };
        Failure::new(code, e.to_string())
    }
}

/// Parses `argv` (program name first), runs the subcommand and writes the
/// report to `out` and diagnostics to `err`. Returns the exit code.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    let start = Instant::now();
    let result = dispatch(&cli);
    let seconds = start.elapsed().as_secs_f64();
    let emit = |mut report: Report, out: &mut dyn Write| {
        if !cli.deterministic {
            report.timings = Some(seconds);
        }
        let text = if cli.json { report.render_json() } else { report.render_text() };
        let _ = out.write_all(text.as_bytes());
    };
    match result {
        Ok(report) => {
            emit(report, out);
            EXIT_OK
        }
        Err(f) => {
            if let Some(report) = f.report {
                emit(*report, out);
            }
            let _ = writeln!(err, "mdpx: {}", f.message);
            f.code
        }
    }
}

/// [`run_with`] on the process's standard streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// The model plus the `input` block of the report.
fn load(path: &Path) -> Result<(Mdp, Value), Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::new(EXIT_INPUT, format!("cannot read {}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| Failure::new(EXIT_INPUT, format!("{}: not valid UTF-8", path.display())))?;
    let model = parse_mdp_with(&text, ParseOptions { internal: true })
        .map_err(|e| Failure::new(EXIT_INPUT, format!("{}:{e}", path.display())))?;
    let digest: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
    let input = json!({
        "path": path.display().to_string(),
        "sha256": digest,
        "states": model.num_states(),
        "actions": model.num_actions(),
        "maxAbsWeight": model.max_abs_weight(),
        "negativeWeights": model.has_negative_weight(),
    });
    Ok((model, input))
}

fn dispatch(cli: &Cli) -> Result<Report, Failure> {
    let digits = cli.digits;
    match &cli.command {
        Command::Check { file } => {
            let (model, input) = load(file)?;
            let mut report = Report::new("check", input);
            report.verdicts = verdict_json(&classify_finiteness(&model));
            Ok(report)
        }
        Command::Exact { file, mode, bias } => exact(file, *mode, bias.as_ref(), digits),
        Command::Approx { file, epsilon, mode, bias, emit_scheduler, trace } => {
            let opts = ApproxArgs { epsilon, mode: *mode, bias: bias.as_ref(), emit: emit_scheduler.as_deref(), trace: *trace };
            approx(file, &opts, digits)
        }
        Command::Bounds { file, epsilon } => bounds(file, epsilon, digits),
        Command::Transform { file, kind, out } => transform(file, kind, out),
        Command::Oracle { file, window, samples, horizon, seed } => oracle(file, *window, *samples, *horizon, *seed, digits),
    }
}

fn verdict_json(v: &FinitenessVerdict) -> Value {
    let witness = match &v.witness {
        None => Value::Null,
        Some(Witness::EndComponent(states)) => json!({ "endComponent": states }),
        Some(Witness::Cycle(steps)) => json!({ "cycle": steps.iter().map(|(s, a)| json!([s, a])).collect::<Vec<_>>() }),
    };
    json!({ "peFinite": v.pe_finite, "ceFinite": v.ce_finite, "reason": v.reason.name(), "witness": witness })
}

/// Stops with exit code 3, still printing the verdicts, when the value
/// asked for is not finite.
fn require_finite(report: &mut Report, model: &Mdp, mode: Mode) -> Result<FinitenessVerdict, Failure> {
    let v = classify_finiteness(model);
    report.verdicts = verdict_json(&v);
    let ok = match mode {
        Mode::Pe => v.pe_finite,
        Mode::Ce => v.ce_finite,
    };
    if ok {
        return Ok(v);
    }
    let what = match mode {
        Mode::Pe => "partial",
        Mode::Ce => "conditional",
    };
    let message = if v.reason == FinitenessReason::GoalUnreachable {
        format!("the maximal {what} expectation is undefined: goal is unreachable")
    } else {
        format!("the maximal {what} expectation is infinite ({})", v.reason)
    };
    Err(Failure { code: EXIT_INFINITE, message, report: Some(Box::new(report.clone())) })
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Pe => "pe",
        Mode::Ce => "ce",
    }
}

fn exact(file: &Path, mode: Mode, bias: Option<&Rational>, digits: usize) -> Result<Report, Failure> {
    let (model, input) = load(file)?;
    let mut report = Report::new("exact", input);
    let zero = Rational::zero();
    report.parameters = json!({
        "mode": mode_name(mode),
        "bias": (mode == Mode::Pe).then(|| rational_json(bias.unwrap_or(&zero), digits)),
    });
    if mode == Mode::Ce && bias.is_some() {
        return Err(Failure::new(EXIT_USAGE, "--bias only applies to --mode pe"));
    }
    if model.has_negative_weight() {
        return Err(Failure::new(
            EXIT_INPUT,
            "the model has negative weights, where the optimum can be irrational; use `mdpx approx` instead",
        ));
    }
    let verdict = require_finite(&mut report, &model, mode)?;
    match mode {
        Mode::Pe => {
            let bias = bias.unwrap_or(&zero);
            if verdict.reason == FinitenessReason::GoalUnreachable {
                report.values = json!({ "pe": rational_json(&zero, digits), "windowTop": 0, "saturation": rational_json(&zero, digits) });
                return Ok(report);
            }
            let prepared = prepare(&model)?.model;
            let cells = exact_ce::table_cells(&prepared, bias)?;
            if cells > EXACT_CELL_LIMIT as u128 {
                return Err(Failure::new(EXIT_RESOURCE, format!("the exact table needs {cells} cells, the limit is {EXACT_CELL_LIMIT}")));
            }
            let table = mdp_exact::nonneg_solve_exact(&prepared, bias)?;
            report.values = json!({
                "pe": rational_json(table.value(prepared.initial, 0), digits),
                "windowTop": table.window_top,
                "saturation": rational_json(&table.saturation, digits),
            });
        }
        Mode::Ce => {
            let r = exact_ce(&model, EXACT_CELL_LIMIT)?;
            report.values = json!({
                "ce": rational_json(&r.value, digits),
                "iterations": r.iterations,
                "windowTop": r.scheduler.hi,
            });
        }
    }
    Ok(report)
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::new(EXIT_INPUT, format!("cannot write {}: {e}", path.display())))
}

struct ApproxArgs<'a> {
    epsilon: &'a Rational,
    mode: Mode,
    bias: Option<&'a Rational>,
    emit: Option<&'a Path>,
    trace: bool,
}

fn approx(file: &Path, args: &ApproxArgs, digits: usize) -> Result<Report, Failure> {
    let ApproxArgs { epsilon, mode, bias, emit, trace } = *args;
    let (model, input) = load(file)?;
    let mut report = Report::new("approx", input);
    let zero = Rational::zero();
    report.parameters = json!({
        "mode": mode_name(mode),
        "epsilon": rational_json(epsilon, digits),
        "bias": (mode == Mode::Pe).then(|| rational_json(bias.unwrap_or(&zero), digits)),
    });
    if mode == Mode::Ce && bias.is_some() {
        return Err(Failure::new(EXIT_USAGE, "--bias only applies to --mode pe"));
    }
    if !num_traits::Signed::is_positive(epsilon) {
        return Err(Failure::new(EXIT_USAGE, "epsilon must be positive"));
    }
    require_finite(&mut report, &model, mode)?;
    let opts = ApproxOptions::default();
    let scheduler = match mode {
        Mode::Pe => {
            let r = approx_pe_with(&model, epsilon, bias.unwrap_or(&zero), &opts)?;
            let t = &r.trace;
            report.values = json!({
                "lower": rational_json(&r.lower, digits),
                "upper": rational_json(&r.upper, digits),
                "width": rational_json(&(&r.upper - &r.lower), digits),
                "window": [t.window.0, t.window.1],
                "cells": t.cells,
                "iterations": t.iterations,
                "refinements": t.refinements,
                "truncation": rational_json(&t.truncation, digits),
                "certificationGap": rational_json(&t.certification_gap, digits),
                "rPlus": t.r_plus,
                "rMinus": t.r_minus,
            });
            Some((r.scheduler, r.model))
        }
        Mode::Ce => {
            let r = approx_ce_with(&model, epsilon, &opts)?;
            let t = &r.trace;
            let slack = Rational::from_integer(3.into()) * epsilon;
            let last = t.steps.last();
            report.values = json!({
                "value": rational_json(&r.value, digits),
                "lower": rational_json(&(&r.value - &slack), digits),
                "upper": rational_json(&(&r.value + &slack), digits),
                "minGoalProbability": rational_json(&t.p, digits),
                "a0": rational_json(&t.a0, digits),
                "b0": rational_json(&t.b0, digits),
                "bracket": last.map(|s| json!([rational_json(&s.a, digits), rational_json(&s.b, digits)])),
                "steps": t.steps.len(),
                "iterationBound": t.iteration_bound,
            });
            if trace {
                let steps: Vec<Value> = t
                    .steps
                    .iter()
                    .map(|s| {
                        json!({
                            "a": rational_json(&s.a, digits),
                            "b": rational_json(&s.b, digits),
                            "theta": rational_json(&s.theta, digits),
                            "lower": rational_json(&s.lower, digits),
                            "upper": rational_json(&s.upper, digits),
                            "decision": format!("{:?}", s.decision).to_lowercase(),
                        })
                    })
                    .collect();
                report.values["search"] = Value::Array(steps);
            }
            r.scheduler.map(|s| (s, r.model))
        }
    };
    if let Some(path) = emit {
        let Some((sched, m)) = scheduler else {
            return Err(Failure::new(EXIT_INPUT, "the search made no probe, so there is no scheduler to write"));
        };
        write_file(path, &sched.to_doc(&m).to_json())?;
        if let Value::Object(values) = &mut report.values {
            values.insert("scheduler".into(), json!({ "path": path.display().to_string(), "window": [sched.lo, sched.hi] }));
        }
    }
    Ok(report)
}

fn bounds(file: &Path, epsilon: &Rational, digits: usize) -> Result<Report, Failure> {
    let (model, input) = load(file)?;
    let mut report = Report::new("bounds", input);
    report.parameters = json!({ "epsilon": rational_json(epsilon, digits) });
    let verdict = require_finite(&mut report, &model, Mode::Pe)?;
    if verdict.reason == FinitenessReason::GoalUnreachable {
        return Err(Failure::new(EXIT_INFINITE, "goal is unreachable; there is nothing to bound"));
    }
    let m = prepare(&model)?.model;
    let b = compute_bounds(&m, epsilon)?;
    let r = |x: &Rational| rational_json(x, digits);
    let mecs: Vec<Value> = b
        .per_mec
        .iter()
        .map(|mb| {
            let p = &mb.potential;
            let u: Map<String, Value> = p.states.iter().zip(&p.u).map(|(&s, x)| (m.states[s].clone(), r(x))).collect();
            json!({
                "index": mb.index,
                "states": p.states.iter().map(|&s| m.states[s].clone()).collect::<Vec<_>>(),
                "gain": r(&p.gain),
                "u": u,
                "spread": r(&p.spread),
                "c": r(&mb.tail.c),
                "lambda": r(&mb.tail.lambda),
            })
        })
        .collect();
    let q_per_state: Map<String, Value> =
        b.q_per_state.iter().enumerate().map(|(s, q)| (m.states[s].clone(), q.as_ref().map_or(Value::Null, r))).collect();
    report.values = json!({
        "model": "prepared",
        "w": b.w,
        "delta": r(&b.delta),
        "stateCount": b.state_count,
        "mecs": mecs,
        "cM": r(&b.c_m),
        "lambdaM": r(&b.lambda_m),
        "peUb": r(&b.pe_ub),
        "ceUb": b.ce_ub.as_ref().map_or(Value::Null, r),
        "qPerState": q_per_state,
        "q": r(&b.q),
        "d": r(&b.d),
        "k": b.k,
        "rPlus": b.r_plus,
        "rMinus": b.r_minus,
    });
    Ok(report)
}

fn transform(file: &Path, kind: &TransformFlags, out: &Path) -> Result<Report, Failure> {
    let (model, input) = load(file)?;
    let mut report = Report::new("transform", input);
    let (name, (result, trace)): (&str, (Mdp, TransformTrace)) = if kind.collapse {
        ("collapse", collapse_to_fail(&model))
    } else if kind.spider {
        ("spider", spider_transform(&model)?)
    } else {
        ("posmin", posmin_transform(&model)?)
    };
    report.parameters = json!({ "transform": name, "out": out.display().to_string() });
    write_file(out, &serialize_mdp(&result))?;
    let mapping: Map<String, Value> =
        model.states.iter().zip(&trace.mapping).map(|(s, t)| (s.clone(), t.clone().map_or(Value::Null, Value::String))).collect();
    report.values = json!({
        "states": result.num_states(),
        "actions": result.num_actions(),
        "goalUnreachable": trace.goal_unreachable,
        "mapping": mapping,
    });
    Ok(report)
}

fn oracle(file: &Path, window: i64, samples: Option<u64>, horizon: u64, seed: u64, digits: usize) -> Result<Report, Failure> {
    let (model, input) = load(file)?;
    let mut report = Report::new("oracle", input);
    report.parameters = json!({ "window": window, "samples": samples, "horizon": horizon, "seed": seed });
    if window < 0 {
        return Err(Failure::new(EXIT_USAGE, format!("negative window {window}")));
    }
    require_finite(&mut report, &model, Mode::Pe)?;
    let cells = (2 * window as u128 + 1) * model.num_states() as u128;
    if cells > ORACLE_CELL_LIMIT as u128 {
        return Err(Failure::new(EXIT_RESOURCE, format!("the window needs {cells} cells, the oracle limit is {ORACLE_CELL_LIMIT}")));
    }
    let r = oracle_pe(&model, window, &Rational::zero())?;
    let mut values = json!({ "best": rational_json(&r.best, digits), "policies": r.enumerated });
    if let Some(n) = samples {
        let est = simulate(&r.model, &r.arg_best, n, horizon, seed);
        values["simulation"] = json!({ "mean": est.mean, "stderr": est.stderr, "reached": est.reached });
    }
    report.values = values;
    Ok(report)
}
