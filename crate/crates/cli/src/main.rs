use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use nclp::dilation::{convex_n_dilation, TensorOptions};
use nclp::gallery::{builtin_cases, case_by_name, run_cases, CaseReport, RunOptions};
use nclp::io::{matrix_to_desc, ElementDesc, ElementsFile, OperatorDesc, OperatorFile, SCHEMA_VERSION};
use nclp::maximal::{maximal_ergodic_report, maximal_norm_pos, ErgodicOptions, MaximalNormResult, Method, SolverOptions};
use nclp::{decompose, DecomposeOptions, FiniteVNA, LampertiAnalysis};
use serde::Deserialize;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "nclp", version, about = "Lamperti operators, dilations and maximal norms on finite von Neumann algebras")]
struct Cli {
    /// Tolerance for pass/fail decisions; each command has its own default.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Iteration cap for the maximal-norm solver.
    #[arg(long, global = true)]
    max_iter: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Built-in example cases.
    Gallery {
        #[command(subcommand)]
        action: GalleryAction,
    },
    /// Decide whether an operator is Lamperti and certify the answer.
    Analyze {
        /// Operator file: `{"algebra": …, "operator": …}`.
        input: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Build and verify the tensor dilation of a convex combination.
    Dilate {
        /// `{"algebra", "operators", "lambda", "n", "p", "lift"?}`.
        input: PathBuf,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Maximal norm of a sequence of positive elements.
    Maxnorm {
        /// Elements file: `{"algebra": …, "elements": […]}`.
        input: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, value_enum, default_value_t = MethodArg::Barrier)]
        method: MethodArg,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Maximal norm of the ergodic averages of an operator.
    Ergodic {
        /// `{"algebra", "operator", "x", "n", "p", "two_sided"?}`.
        input: PathBuf,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum GalleryAction {
    /// Names and descriptions of the built-in cases.
    List,
    /// Run one case, or all of them when no name is given.
    Run {
        name: Option<String>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum MethodArg {
    Barrier,
    ProjectedGradient,
}

#[derive(Deserialize)]
struct DilateInput {
    algebra: FiniteVNA,
    operators: Vec<OperatorDesc>,
    lambda: Vec<f64>,
    n: usize,
    p: f64,
    #[serde(default = "yes")]
    lift: bool,
}

#[derive(Deserialize)]
struct ErgodicInput {
    algebra: FiniteVNA,
    operator: OperatorDesc,
    x: ElementDesc,
    n: usize,
    p: f64,
    #[serde(default)]
    two_sided: bool,
}

fn yes() -> bool {
    true
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Returns whether every check passed.
fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Gallery { action: GalleryAction::List } => {
            for case in builtin_cases() {
                println!("{:<30} {}", case.name, case.description);
            }
            Ok(true)
        }
        Command::Gallery { action: GalleryAction::Run { name, json } } => gallery_run(cli, name.as_deref(), json.as_deref()),
        Command::Analyze { input, p, json } => analyze(cli, input, *p, json.as_deref()),
        Command::Dilate { input, json } => dilate(cli, input, json.as_deref()),
        Command::Maxnorm { input, p, method, json } => maxnorm(cli, input, *p, *method, json.as_deref()),
        Command::Ergodic { input, json } => ergodic(cli, input, json.as_deref()),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(report: Value, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(&report)?;
    match out {
        Some(path) => std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn solver(cli: &Cli, method: Method) -> SolverOptions {
    let mut s = SolverOptions { method, ..SolverOptions::default() };
    if let Some(n) = cli.max_iter {
        s.max_iter = n;
    }
    s
}

fn decompose_opts(cli: &Cli) -> DecomposeOptions {
    let mut d = DecomposeOptions { seed: cli.seed, ..DecomposeOptions::default() };
    if let Some(t) = cli.tol {
        d.tol = t;
    }
    d
}

fn gallery_run(cli: &Cli, name: Option<&str>, out: Option<&Path>) -> Result<bool> {
    let cases = match name {
        Some(n) => vec![case_by_name(n).with_context(|| format!("no gallery case named {n:?}; see `nclp gallery list`"))?],
        None => builtin_cases(),
    };
    let opts = RunOptions {
        seed: cli.seed,
        tol: cli.tol,
        solver: solver(cli, Method::Barrier),
    };
    let reports: Vec<CaseReport> = run_cases(&cases, &opts);
    for r in &reports {
        println!("{} {}", if r.passed { "PASS" } else { "FAIL" }, r.name);
        for c in r.checks.iter().filter(|c| !c.passed) {
            println!("    {}: {}", c.name, c.detail);
        }
    }
    let passed = reports.iter().all(|r| r.passed);
    if let Some(path) = out {
        emit(json!({ "schema_version": SCHEMA_VERSION, "passed": passed, "cases": reports }), Some(path))?;
    }
    Ok(passed)
}

fn analyze(cli: &Cli, input: &Path, p: f64, out: Option<&Path>) -> Result<bool> {
    let (_, t) = OperatorFile::parse(&read(input)?)?;
    let analysis = decompose(&t, p, &decompose_opts(cli))?;
    let mut report = json!({ "schema_version": SCHEMA_VERSION, "status": analysis.status(), "p": p });
    let decomposition = match &analysis {
        LampertiAnalysis::Lamperti(d) => Some(d.as_ref()),
        LampertiAnalysis::Indeterminate { partial, reason } => {
            report["reason"] = json!(reason);
            partial.as_deref()
        }
        LampertiAnalysis::NotLamperti(w) => {
            report["witness"] = json!({ "e": w.e, "f": w.f, "violation": w.violation });
            None
        }
    };
    if let Some(d) = decomposition {
        report["classification"] = json!(d.classification);
        report["residuals"] = json!(d.residuals);
        report["decomposition"] = json!({
            "w": d.w,
            "b": d.b,
            "j": matrix_to_desc(d.j.matrix()),
            "density": d.density,
        });
    }
    emit(report, out)?;
    Ok(!matches!(analysis, LampertiAnalysis::Indeterminate { .. }))
}

fn dilate(cli: &Cli, input: &Path, out: Option<&Path>) -> Result<bool> {
    let inp: DilateInput = serde_json::from_str(&read(input)?).context("parsing dilation input")?;
    let ops = inp
        .operators
        .iter()
        .map(|o| o.to_operator(&inp.algebra))
        .collect::<nclp::Result<Vec<_>>>()?;
    let opts = TensorOptions {
        lift: inp.lift,
        decompose: decompose_opts(cli),
        ..TensorOptions::default()
    };
    let sys = convex_n_dilation(&inp.lambda, &ops, inp.n, inp.p, &opts)?;
    let r = sys.verify(16, cli.seed)?;
    let tol = cli.tol.unwrap_or(1e-8);
    let passed = r.residuals.iter().all(|&v| v <= tol)
        && r.qj_residual <= tol
        && r.j_isometry_deviation <= tol
        && r.q_contraction_excess <= tol
        && r.isometry_deviation <= tol;
    let residuals: Vec<Value> = r
        .residuals
        .iter()
        .enumerate()
        .map(|(i, v)| json!({ "m": i, "value": v }))
        .collect();
    emit(
        json!({
            "schema_version": SCHEMA_VERSION,
            "passed": passed,
            "residuals": residuals,
            "qj_residual": r.qj_residual,
            "isometry_deviation": r.isometry_deviation,
            "j_isometry_deviation": r.j_isometry_deviation,
            "q_contraction_excess": r.q_contraction_excess,
            "positivity_min_eig": r.positivity_min_eig,
            "lifted": r.lifted,
            "dimensions": r.dimensions,
        }),
        out,
    )?;
    Ok(passed)
}

fn maximal_json(r: &MaximalNormResult) -> Value {
    json!({
        "upper": r.upper,
        "lower": r.lower,
        "gap": r.gap(),
        "a_star": r.a_star,
        "dual": r.dual,
        "feasibility_slack": r.feasibility_slack,
        "iterations": r.iterations,
        "converged": r.converged,
        "method": r.method,
    })
}

fn maxnorm(cli: &Cli, input: &Path, p: f64, method: MethodArg, out: Option<&Path>) -> Result<bool> {
    let (m, xs) = ElementsFile::parse(&read(input)?)?;
    if xs.is_empty() {
        bail!("the element list is empty");
    }
    let method = match method {
        MethodArg::Barrier => Method::Barrier,
        MethodArg::ProjectedGradient => Method::ProjectedGradient,
    };
    let mut opts = solver(cli, method);
    if let Some(t) = cli.tol {
        opts.gap_tol = t;
    }
    let r = maximal_norm_pos(&m, &xs, p, &opts)?;
    let mut report = maximal_json(&r);
    report["schema_version"] = json!(SCHEMA_VERSION);
    report["p"] = json!(p);
    emit(report, out)?;
    Ok(r.converged)
}

fn ergodic(cli: &Cli, input: &Path, out: Option<&Path>) -> Result<bool> {
    let inp: ErgodicInput = serde_json::from_str(&read(input)?).context("parsing ergodic input")?;
    let t = inp.operator.to_operator(&inp.algebra)?;
    let x = inp.x.to_element(&inp.algebra)?;
    let opts = ErgodicOptions {
        solver: solver(cli, Method::Barrier),
        two_sided: inp.two_sided,
        seed: cli.seed,
        ..ErgodicOptions::default()
    };
    let r = maximal_ergodic_report(&t, &x, inp.n, inp.p, &opts)?;
    emit(
        json!({
            "schema_version": SCHEMA_VERSION,
            "n": inp.n,
            "p": inp.p,
            "two_sided": r.two_sided,
            "ratio": r.ratio,
            "maximal": maximal_json(&r.maximal),
            "projection_distance": r.projection_distance,
            "profile": r.profile,
            "profile_monotone": r.profile_monotone,
            "min_average_eig": r.min_average_eig,
            "averages": r.averages,
        }),
        out,
    )?;
    Ok(r.maximal.converged && r.profile_monotone)
}
