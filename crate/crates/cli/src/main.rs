use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use affsched::algebra::{IntMatrix, Rational};
use affsched::comm::{comm_report, CommReport};
use affsched::nest::{load_nest, LoopNest};
use affsched::procedure::{run_procedure, ProcedureConfig, ProcedureError, TransformPlan};
use affsched::solver::Strategy;
use affsched::validator::{default_params, validate, ValidationReport, ValidatorError};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "affsched",
    version,
    about = "Affine scheduling and data allocation for loop nests"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Bnb,
    Exhaustive,
}

#[derive(Subcommand)]
enum Command {
    /// Compute schedules and allocations for a nest.
    Solve {
        #[arg(long)]
        input: PathBuf,
        #[arg(long = "spatial-dims", default_value_t = 1)]
        spatial_dims: usize,
        /// Coefficient bound B of the search box [-B, B].
        #[arg(long, default_value_t = 2)]
        bound: i64,
        /// Plan output path; without it the plan JSON goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "comm-report")]
        comm_report: Option<PathBuf>,
        /// Objective weight override, e.g. `space=3` or `dependence=1/2`.
        #[arg(long = "weight", value_name = "NAME=VALUE")]
        weights: Vec<String>,
        #[arg(long = "guard-indep-drop")]
        guard_indep_drop: bool,
        #[arg(long = "last-index-contiguous", default_value_t = true, action = clap::ArgAction::Set)]
        last_index_contiguous: bool,
        #[arg(long, value_enum, default_value = "bnb")]
        strategy: StrategyArg,
        /// Per-recursion solver time limit in seconds.
        #[arg(long = "time-limit")]
        time_limit: Option<f64>,
    },
    /// Check a plan by enumeration.
    Validate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        /// Parameter values, e.g. `N=5`; defaults to minima + 2 and minima + 4.
        #[arg(long = "params", value_name = "NAME=VALUE")]
        params: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print communication requirements and broadcast findings.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

fn input_err(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| input_err(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text)
        .map_err(|e| input_err(format!("cannot write {}: {e}", path.display())))
}

fn nest_and_plan(input: &Path, plan: &Path) -> Result<(LoopNest, TransformPlan), Failure> {
    let nest = load_nest(input).map_err(|e| input_err(format!("{}: {e}", input.display())))?;
    let plan = TransformPlan::from_json(&read(plan)?, &nest)
        .map_err(|e| input_err(format!("{}: {e}", plan.display())))?;
    Ok((nest, plan))
}

fn matrix(m: &IntMatrix) -> String {
    if m.rows() == 0 {
        return "[]".into();
    }
    let rows: Vec<String> = m
        .to_rows()
        .iter()
        .map(|r| {
            r.iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    format!("[{}]", rows.join("; "))
}

fn plan_summary(plan: &TransformPlan) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "spatial dimensions: {}", plan.r_space);
    for st in &plan.statements {
        let _ = writeln!(
            s,
            "statement {}: T = {}  B = {}  a = {}",
            st.id,
            matrix(&st.t),
            matrix(&st.b),
            st.a
        );
    }
    for a in &plan.arrays {
        let _ = writeln!(
            s,
            "array {}: H = {}  Z = {}  y = {}",
            a.id,
            matrix(&a.h),
            matrix(&a.z),
            a.y
        );
    }
    for r in &plan.diagnostics.recursions {
        let _ = write!(s, "recursion {}: objective {}", r.xi, r.objective);
        if !r.dropped.is_empty() {
            let _ = write!(s, ", retired {}", r.dropped.join(", "));
        }
        s.push('\n');
    }
    for l in &plan.diagnostics.locality {
        match l.depth {
            Some(d) => {
                let _ = writeln!(s, "row locality {}: reached at depth {d}", l.access);
            }
            None => {
                let _ = writeln!(s, "row locality {}: not reached", l.access);
            }
        }
    }
    for w in &plan.diagnostics.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    s
}

fn comm_summary(report: &CommReport) -> String {
    let mut s = String::new();
    if report.communication_free() {
        s.push_str("communication-free: every read is local to its consumer\n");
    }
    for e in &report.exchanges {
        let reason: Vec<&str> = e
            .reason
            .iter()
            .map(|r| match r {
                affsched::comm::SlackFamily::F => "F",
                affsched::comm::SlackFamily::G => "G",
                affsched::comm::SlackFamily::Const => "f",
            })
            .collect();
        let _ = writeln!(
            s,
            "exchange {}: misaligned in {}, consumer rows {}, {}",
            e.access,
            reason.join("/"),
            matrix(&e.consumer_rows),
            e.classification
        );
    }
    for b in &report.broadcasts {
        let kernel: Vec<String> = b.kernel_basis.iter().map(|u| u.to_string()).collect();
        if b.eligible {
            let case = match b.case {
                Some(affsched::comm::BroadcastCase::FlowProduced) => "flow-produced",
                _ => "read-only",
            };
            let _ = writeln!(
                s,
                "broadcast {}: eligible ({case}), kernel {}",
                b.access,
                kernel.join(" ")
            );
        } else if let Some(fc) = b.failed_condition {
            let label = serde_json::to_value(fc)
                .ok()
                .and_then(|v| v.as_str().map(String::from))
                .unwrap_or_default();
            let _ = writeln!(s, "broadcast {}: ineligible ({label})", b.access);
        }
    }
    s
}

fn validation_summary(r: &ValidationReport) -> String {
    let mut s = String::new();
    let params: Vec<String> = r.params.iter().map(|v| v.to_string()).collect();
    let _ = writeln!(
        s,
        "params ({}): {}",
        params.join(", "),
        if r.pass() { "pass" } else { "FAIL" }
    );
    let _ = writeln!(s, "  legality violations: {}", r.legality.len());
    for v in r.legality.iter().take(20) {
        let _ = writeln!(s, "    {}: {:?} -> {:?}", v.dependence, v.source, v.target);
    }
    let _ = writeln!(s, "  lex-equal pairs: {}", r.lex_equal_warnings.len());
    let _ = writeln!(s, "  transfers: {}", r.comm_count);
    for (k, v) in &r.comm_by_access {
        if *v > 0 {
            let _ = writeln!(s, "    {k}: {v}");
        }
    }
    for l in &r.row_locality {
        let _ = writeln!(
            s,
            "  row locality {} at depth {}: {} row(s)",
            l.access, l.depth, l.metric
        );
    }
    for b in &r.broadcast_checks {
        let _ = writeln!(
            s,
            "  broadcast {}: {}",
            b.access,
            if b.pass { "confirmed" } else { "FAILED" }
        );
        for p in &b.problems {
            let _ = writeln!(s, "    {p}");
        }
    }
    for f in &r.rank_failures {
        let _ = writeln!(
            s,
            "  statement {}: rank {} < depth {}",
            f.statement, f.rank, f.depth
        );
    }
    s
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn threads() -> Result<Option<usize>, Failure> {
    match std::env::var("AFFSCHED_THREADS") {
        Ok(v) => v
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| {
                input_err(format!(
                    "AFFSCHED_THREADS must be a positive integer, got `{v}`"
                ))
            }),
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve {
            input,
            spatial_dims,
            bound,
            out,
            comm_report: comm_path,
            weights,
            guard_indep_drop,
            last_index_contiguous,
            strategy,
            time_limit,
        } => {
            let nest =
                load_nest(&input).map_err(|e| input_err(format!("{}: {e}", input.display())))?;
            let mut cfg = ProcedureConfig {
                r_space: spatial_dims,
                guard_indep_drop,
                last_index_contiguous,
                ..Default::default()
            };
            for w in &weights {
                let (k, v) = w
                    .split_once('=')
                    .ok_or_else(|| input_err(format!("weight `{w}` is not NAME=VALUE")))?;
                let v: Rational = v
                    .trim()
                    .parse()
                    .map_err(|e| input_err(format!("weight `{w}`: {e}")))?;
                cfg.weights.set(k.trim(), v).map_err(input_err)?;
            }
            if bound < 1 {
                return Err(input_err(format!(
                    "--bound must be at least 1, got {bound}"
                )));
            }
            cfg.solver.coeff_bound = bound;
            cfg.solver.strategy = match strategy {
                StrategyArg::Bnb => Strategy::BranchAndBound,
                StrategyArg::Exhaustive => Strategy::Exhaustive,
            };
            cfg.solver.time_limit = match time_limit {
                Some(t) if t.is_finite() && t > 0.0 => Some(Duration::from_secs_f64(t)),
                Some(t) => {
                    return Err(input_err(format!("--time-limit must be positive, got {t}")))
                }
                None => None,
            };
            cfg.solver.threads = threads()?;
            let plan = run_procedure(&nest, &cfg).map_err(|e| match e {
                ProcedureError::BadSpatialDims { .. } => input_err(e.to_string()),
                other => Failure {
                    code: 1,
                    message: other.to_string(),
                },
            })?;
            let report = comm_report(&plan, &nest).map_err(|e| Failure {
                code: 1,
                message: e.to_string(),
            })?;
            match &out {
                Some(p) => {
                    write(p, &to_json(&plan))?;
                    print!("{}", plan_summary(&plan));
                    print!("{}", comm_summary(&report));
                }
                None => print!("{}", to_json(&plan)),
            }
            if let Some(p) = comm_path {
                write(&p, &to_json(&report))?;
            }
            Ok(())
        }
        Command::Validate {
            input,
            plan,
            params,
            out,
        } => {
            let (nest, plan) = nest_and_plan(&input, &plan)?;
            let settings: Vec<Vec<i64>> = if params.is_empty() {
                default_params(&nest).to_vec()
            } else {
                let mut vals: Vec<Option<i64>> = vec![None; nest.params.len()];
                for p in &params {
                    for item in p.split(',') {
                        let (k, v) = item.split_once('=').ok_or_else(|| {
                            input_err(format!("parameter `{item}` is not NAME=VALUE"))
                        })?;
                        let idx = nest.params.index_of(k.trim()).ok_or_else(|| {
                            input_err(format!("unknown parameter `{}`", k.trim()))
                        })?;
                        vals[idx] = Some(v.trim().parse().map_err(|_| {
                            input_err(format!("parameter `{item}`: not an integer"))
                        })?);
                    }
                }
                let vals = vals
                    .iter()
                    .enumerate()
                    .map(|(i, v)| {
                        v.ok_or_else(|| {
                            input_err(format!(
                                "missing value for parameter `{}`",
                                nest.params.names[i]
                            ))
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                vec![vals]
            };
            let mut reports = Vec::new();
            for s in &settings {
                let r = validate(&nest, &plan, s).map_err(|e| match e {
                    ValidatorError::Algebra(_) => Failure {
                        code: 1,
                        message: e.to_string(),
                    },
                    other => input_err(other.to_string()),
                })?;
                print!("{}", validation_summary(&r));
                reports.push(r);
            }
            if let Some(p) = out {
                write(&p, &to_json(&reports))?;
            }
            if reports.iter().all(|r| r.pass()) {
                Ok(())
            } else {
                Err(Failure {
                    code: 1,
                    message: "validation failed".into(),
                })
            }
        }
        Command::Report { input, plan, out } => {
            let (nest, plan) = nest_and_plan(&input, &plan)?;
            let report = comm_report(&plan, &nest).map_err(|e| input_err(e.to_string()))?;
            print!("{}", comm_summary(&report));
            if let Some(p) = out {
                write(&p, &to_json(&report))?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
