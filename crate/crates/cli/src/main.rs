use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use ies_dispatch::report::{schedule_csv, scenario_csv, solution_json, sweep_csv};
use ies_dispatch::study::{run_scenarios, sweep, SweepParam};
use ies_dispatch::{
    build_model, load_case, to_json, validate_case, verify_solution, CaseData, CaseError,
    DispatchError, ScenarioSpec,
};
use ies_milp::{
    read_lp, solve_milp, write_lp, EmbeddedBackend, ExternalBackend, MilpStatus, SolveOptions,
    SolverBackend,
};

// Output errors (usually a closed pipe) are ignored.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = write!(std::io::stdout().lock(), $($arg)*);
    }};
}

macro_rules! outln {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

/// Case-directory fallback for `--case NAME`.
const CASE_DIR_ENV: &str = "IES_CASE_DIR";

#[derive(Parser)]
#[command(name = "ies", version, about = "Low-carbon dispatch of an electricity-gas-heat energy hub")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a case file and print errors and warnings.
    Validate(CaseArgs),
    /// Solve one scenario and write its solution and schedule.
    Solve {
        #[command(flatten)]
        case: CaseArgs,
        #[arg(long, default_value = "S5")]
        scenario: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Solve S1..S5 and write the comparison table.
    Scenarios {
        #[command(flatten)]
        case: CaseArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Re-solve a scenario over a grid of carbon price or tier width.
    Sweep {
        #[command(flatten)]
        case: CaseArgs,
        #[arg(long, default_value = "S3")]
        scenario: String,
        #[arg(long, value_enum)]
        param: ParamArg,
        /// `start:stop:step`, inclusive of `stop`.
        #[arg(long)]
        grid: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Write a scenario's model in LP format.
    ExportLp {
        #[command(flatten)]
        case: CaseArgs,
        #[arg(long, default_value = "S5")]
        scenario: String,
        #[arg(long)]
        reduced: bool,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve an LP-format model with the embedded solver.
    SolveLp {
        file: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        gap: f64,
    },
}

#[derive(Args)]
struct CaseArgs {
    /// `default`, a path, or a name looked up in $IES_CASE_DIR.
    #[arg(long, default_value = "default")]
    case: String,
}

#[derive(Args)]
struct RunArgs {
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Relative optimality gap.
    #[arg(long, default_value_t = 1e-4)]
    gap: f64,
    #[arg(long)]
    node_limit: Option<usize>,
    /// Seconds per solve.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Half the periods and four PWL segments.
    #[arg(long)]
    reduced: bool,
    /// External solver program speaking the LP-file protocol.
    #[arg(long)]
    solver_cmd: Option<PathBuf>,
    /// Extra leading argument for the external solver (repeatable).
    #[arg(long = "solver-arg")]
    solver_args: Vec<String>,
    /// Concurrent solves for `scenarios` and `sweep`.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ParamArg {
    Lambda,
    D,
}

impl From<ParamArg> for SweepParam {
    fn from(p: ParamArg) -> Self {
        match p {
            ParamArg::Lambda => SweepParam::Lambda,
            ParamArg::D => SweepParam::D,
        }
    }
}

mod exit {
    pub const USAGE: u8 = 1;
    pub const INVALID: u8 = 2;
    pub const INFEASIBLE: u8 = 3;
    pub const LIMIT: u8 = 4;
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let first = e.to_string();
            let first = first.lines().next().unwrap_or("invalid arguments");
            eprintln!("{first}");
            eprintln!("hint: run `ies --help` for usage");
            return ExitCode::from(exit::USAGE);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(code_for(&e))
        }
    }
}

fn code_for(e: &anyhow::Error) -> u8 {
    if let Some(ce) = e.downcast_ref::<CaseError>() {
        return match ce {
            CaseError::Io { .. } => exit::USAGE,
            _ => exit::INVALID,
        };
    }
    match e.downcast_ref::<DispatchError>() {
        Some(DispatchError::Case(CaseError::Io { .. })) => exit::USAGE,
        Some(DispatchError::Case(_)) => exit::INVALID,
        Some(DispatchError::Infeasible { .. }) => exit::INFEASIBLE,
        Some(DispatchError::NoSolution { .. }) => exit::LIMIT,
        _ => exit::USAGE,
    }
}

fn resolve_case(spec: &str) -> Result<(CaseData, String)> {
    if spec == "default" {
        return Ok((CaseData::default_case(), "bundled:default".into()));
    }
    let direct = Path::new(spec);
    if direct.exists() {
        return Ok((load_case(direct)?, direct.display().to_string()));
    }
    if let Ok(dir) = std::env::var(CASE_DIR_ENV) {
        for name in [spec.to_string(), format!("{spec}.json")] {
            let p = Path::new(&dir).join(name);
            if p.exists() {
                return Ok((load_case(&p)?, p.display().to_string()));
            }
        }
    }
    Err(CaseError::Io {
        path: spec.into(),
        source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such case"),
    })
    .context(format!("looked for `{spec}` as a path and in ${CASE_DIR_ENV}"))
}

fn prepare_case(spec: &str, reduced: bool) -> Result<(CaseData, String)> {
    let (case, source) = resolve_case(spec)?;
    if reduced {
        Ok((case.reduced()?, source))
    } else {
        Ok((case, source))
    }
}

impl RunArgs {
    fn options(&self) -> Result<SolveOptions> {
        if !(self.gap >= 0.0) {
            bail!("--gap must be non-negative");
        }
        Ok(SolveOptions {
            gap_tol: self.gap,
            node_limit: self.node_limit,
            time_limit: self.time_limit.map(Duration::from_secs_f64),
        })
    }

    fn backend(&self) -> Box<dyn SolverBackend> {
        match &self.solver_cmd {
            Some(cmd) => Box::new(ExternalBackend::new(
                cmd.display().to_string(),
                cmd.clone(),
                self.solver_args.clone(),
            )),
            None => Box::new(EmbeddedBackend),
        }
    }
}

#[derive(Serialize)]
struct Meta<'a> {
    command: &'a str,
    case_source: &'a str,
    case_sha256: String,
    scenario: Option<&'a str>,
    reduced: bool,
    solver: SolverMeta<'a>,
    version: &'static str,
}

#[derive(Serialize)]
struct SolverMeta<'a> {
    backend: &'a str,
    gap_tol: f64,
    node_limit: Option<usize>,
    time_limit_s: Option<f64>,
}

fn write_meta(
    run: &RunArgs,
    command: &str,
    case: &CaseData,
    source: &str,
    scenario: Option<&str>,
    backend: &dyn SolverBackend,
) -> Result<()> {
    let meta = Meta {
        command,
        case_source: source,
        case_sha256: hex::encode(Sha256::digest(to_json(case).as_bytes())),
        scenario,
        reduced: run.reduced,
        solver: SolverMeta {
            backend: backend.name(),
            gap_tol: run.gap,
            node_limit: run.node_limit,
            time_limit_s: run.time_limit,
        },
        version: env!("CARGO_PKG_VERSION"),
    };
    let mut text = serde_json::to_string_pretty(&meta)?;
    text.push('\n');
    write_file(&run.out.join("meta.json"), &text)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Parses `start:stop:step`, including `stop` up to rounding.
fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        bail!("grid must look like start:stop:step, got `{text}`");
    }
    let num = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .with_context(|| format!("bad number `{s}` in grid"))
    };
    let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
    if !(step > 0.0) || stop < start {
        bail!("grid needs step > 0 and stop >= start");
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|i| {
            let v = start + i as f64 * step;
            // Trim binary noise such as 0.15000000000000002.
            (v * 1e9).round() / 1e9
        })
        .collect())
}

fn status_code(status: MilpStatus, gap: f64, requested: f64) -> u8 {
    match status {
        MilpStatus::Optimal => 0,
        MilpStatus::Feasible if gap <= requested => 0,
        _ => exit::LIMIT,
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Validate(args) => {
            let (case, source) = match resolve_case(&args.case) {
                Ok(c) => c,
                Err(e) => {
                    if let Some(CaseError::Invalid(report)) = e.downcast_ref::<CaseError>() {
                        out!("{report}");
                        outln!("INVALID ({} errors)", report.errors.len());
                        return Ok(exit::INVALID);
                    }
                    return Err(e);
                }
            };
            let report = validate_case(&case);
            out!("{report}");
            outln!(
                "{source}: {} errors, {} warnings",
                report.errors.len(),
                report.warnings.len()
            );
            Ok(if report.is_ok() { 0 } else { exit::INVALID })
        }
        Command::Solve {
            case,
            scenario,
            run,
        } => {
            let (case, source) = prepare_case(&case.case, run.reduced)?;
            let spec = ScenarioSpec::parse(&scenario, &case)?;
            let opts = run.options()?;
            let backend = run.backend();
            let sol = ies_dispatch::run_scenario(&case, &spec, backend.as_ref(), &opts)?;
            let report = verify_solution(&case, &spec, &sol);
            write_file(&run.out.join(format!("solution_{}.json", spec.id)), &solution_json(&sol))?;
            write_file(&run.out.join(format!("schedule_{}.csv", spec.id)), &schedule_csv(&sol))?;
            write_meta(&run, "solve", &case, &source, Some(&spec.id), backend.as_ref())?;
            outln!(
                "{}: status {} objective {:.6} total cost {:.6} emissions {:.6} kg gap {:.2e} nodes {} time {:.2}s",
                spec.id,
                sol.solver.status,
                sol.solver.objective,
                sol.costs.total,
                sol.emissions.actual.total,
                sol.solver.gap,
                sol.solver.nodes,
                sol.solver.wall_time.as_secs_f64()
            );
            outln!(
                "verification {} ({} checks)",
                if report.pass { "PASS" } else { "FAIL" },
                report.checks.len()
            );
            Ok(status_code(sol.solver.status, sol.solver.gap, opts.gap_tol))
        }
        Command::Scenarios { case, run } => {
            let (case, source) = prepare_case(&case.case, run.reduced)?;
            let opts = run.options()?;
            let backend = run.backend();
            let report = run_scenarios(&case, &ScenarioSpec::all(), backend.as_ref(), &opts, run.jobs);
            let csv = scenario_csv(&report.rows);
            write_file(&run.out.join("scenarios.csv"), &csv)?;
            write_meta(&run, "scenarios", &case, &source, None, backend.as_ref())?;
            out!("{csv}");
            if let Some(c) = report.comparison {
                outln!(
                    "{} vs {}: total cost down {:.2}%, emissions down {:.2}%",
                    c.to, c.from, c.cost_reduction_pct, c.emission_reduction_pct
                );
            }
            let mut code = 0;
            for (row, result) in report.rows.iter().zip(&report.solutions) {
                match result {
                    Err(e) => {
                        eprintln!("{}: {e}", row.scenario);
                        code = code.max(match e {
                            DispatchError::Infeasible { .. } => exit::INFEASIBLE,
                            DispatchError::NoSolution { .. } => exit::LIMIT,
                            _ => exit::USAGE,
                        });
                    }
                    Ok(sol) => {
                        code = code.max(status_code(sol.solver.status, sol.solver.gap, opts.gap_tol))
                    }
                }
            }
            Ok(code)
        }
        Command::Sweep {
            case,
            scenario,
            param,
            grid,
            run,
        } => {
            let (case, source) = prepare_case(&case.case, run.reduced)?;
            let spec = ScenarioSpec::parse(&scenario, &case)?;
            let grid = parse_grid(&grid)?;
            let opts = run.options()?;
            let backend = run.backend();
            let param = SweepParam::from(param);
            let points = sweep(&case, &spec, param, &grid, backend.as_ref(), &opts, run.jobs)?;
            let csv = sweep_csv(param, &points);
            write_file(&run.out.join(format!("sweep_{}.csv", param.as_str())), &csv)?;
            write_meta(&run, "sweep", &case, &source, Some(&spec.id), backend.as_ref())?;
            out!("{csv}");
            for p in points.iter().filter(|p| !p.is_ok()) {
                eprintln!("{} = {}: {}", param.as_str(), p.value, p.error.as_deref().unwrap_or(""));
            }
            Ok(if points.iter().all(|p| p.is_ok()) { 0 } else { exit::LIMIT })
        }
        Command::ExportLp {
            case,
            scenario,
            reduced,
            out,
        } => {
            let (case, _) = prepare_case(&case.case, reduced)?;
            let spec = ScenarioSpec::parse(&scenario, &case)?;
            let (model, _) = build_model(&case, &spec)?;
            let text = write_lp(&model);
            match out {
                Some(path) => write_file(&path, &text)?,
                None => out!("{text}"),
            }
            Ok(0)
        }
        Command::SolveLp { file, gap } => {
            let text =
                std::fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
            let model = read_lp(&text).map_err(|e| anyhow::anyhow!("{}: {e}", file.display()))?;
            let opts = SolveOptions {
                gap_tol: gap,
                ..SolveOptions::default()
            };
            let sol = solve_milp(&model, &opts)?;
            outln!("status={}", sol.status);
            if sol.status.has_incumbent() {
                outln!("objective={:?}", sol.objective);
                outln!("bound={:?}", sol.bound);
                outln!("nodes={}", sol.nodes);
                for (v, x) in model.variables().iter().zip(&sol.values) {
                    outln!("var:{}={:?}", v.name, x);
                }
            }
            Ok(match sol.status {
                MilpStatus::Optimal => 0,
                MilpStatus::Infeasible => exit::INFEASIBLE,
                MilpStatus::Unbounded => exit::USAGE,
                _ => exit::LIMIT,
            })
        }
    }
}
