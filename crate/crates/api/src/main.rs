use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use polypareto::{pareto_front_oracle, Molp, ObjectiveMode, Polynomial, Region, ShapeMode};
use polypareto_api::http::{serve, AppState};
use polypareto_api::{
    evaluate_surface, ApiError, ApproximationRequest, ApproximationResult, DirStore, GridSpec,
    JobStatus, Pipeline, Task,
};
use serde::de::DeserializeOwned;

#[derive(Parser)]
#[command(
    name = "approx",
    version,
    about = "Polynomial approximations of Pareto fronts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inner approximation by a polynomial decision rule.
    Inner(JobArgs),
    /// Affine outer approximation over a box.
    Outer(JobArgs),
    /// Certify that the graph of --bound over the region is dominated.
    Certify(JobArgs),
    /// Evaluate a stored result on a grid.
    Eval {
        #[arg(long)]
        result: PathBuf,
        #[arg(long)]
        grid: String,
        /// Add the ε-constraint front at each grid point.
        #[arg(long)]
        oracle: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// ε-constraint front on a grid.
    Oracle {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        grid: String,
        /// Needed when --grid is a per-axis count.
        #[arg(long)]
        region: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the HTTP job service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
        /// Directory of stored results.
        #[arg(long, default_value = "runs")]
        store: PathBuf,
        /// Directory that problem references resolve against.
        #[arg(long)]
        problems: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        workers: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Shape {
    None,
    Mono,
    Convex,
    Both,
}

impl From<Shape> for ShapeMode {
    fn from(s: Shape) -> Self {
        match s {
            Shape::None => ShapeMode::None,
            Shape::Mono => ShapeMode::Nonincreasing,
            Shape::Convex => ShapeMode::Convex,
            Shape::Both => ShapeMode::Both,
        }
    }
}

fn parse_objective(s: &str) -> Result<ObjectiveMode, String> {
    if s == "closed" {
        return Ok(ObjectiveMode::ClosedForm);
    }
    let parts: Vec<&str> = s.split(':').collect();
    match parts[..] {
        ["sampled", n, seed] => Ok(ObjectiveMode::Sampled {
            count: n.parse().map_err(|_| format!("bad sample count {n:?}"))?,
            seed: seed.parse().map_err(|_| format!("bad seed {seed:?}"))?,
        }),
        _ => Err(format!("expected closed or sampled:N:SEED, got {s:?}")),
    }
}

#[derive(Args)]
struct JobArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long)]
    region: PathBuf,
    #[arg(long, default_value_t = 1)]
    degree: usize,
    #[arg(long, value_enum, default_value = "none")]
    shape: Shape,
    #[arg(long, default_value = "closed", value_parser = parse_objective)]
    objective: ObjectiveMode,
    /// Polynomial JSON `t(u)` for certify.
    #[arg(long)]
    bound: Option<PathBuf>,
    /// Seed of the soundness samples.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Points per axis of an oracle-gap grid.
    #[arg(long)]
    oracle_grid: Option<usize>,
    /// Write the conic program in SDPA sparse format.
    #[arg(long)]
    export_sdpa: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, ApiError> {
    let text = fs::read_to_string(path)
        .map_err(|e| ApiError::Invalid(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| ApiError::Invalid(format!("{}: {e}", path.display())))
}

fn write_out(out: Option<&Path>, text: &str) -> Result<(), ApiError> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| ApiError::Store(format!("{}: {e}", p.display()))),
        None => match writeln!(std::io::stdout().lock(), "{text}") {
            // A closed pipe (`approx ... | head`) is not an error.
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                Err(ApiError::Store(format!("stdout: {e}")))
            }
            _ => Ok(()),
        },
    }
}

fn run_job(task: Task, a: JobArgs) -> Result<ExitCode, ApiError> {
    let molp: Molp = read_json(&a.problem)?;
    let region: Region = read_json(&a.region)?;
    let mut req = ApproximationRequest::new(task, molp, region, a.degree);
    req.shape = a.shape.into();
    req.objective = a.objective;
    req.seed = a.seed;
    req.samples = a.samples;
    req.oracle_grid = a.oracle_grid;
    if let Some(b) = &a.bound {
        req.bound = Some(read_json::<Polynomial>(b)?);
    }
    let pipeline = Pipeline::default();
    let req = pipeline.accept(req)?;
    if let Some(path) = &a.export_sdpa {
        let prepared = pipeline.prepare(&req)?;
        let text = polypareto_conic::export_sdpa(prepared.program())
            .map_err(|e| ApiError::Invalid(e.to_string()))?;
        fs::write(path, text).map_err(|e| ApiError::Store(format!("{}: {e}", path.display())))?;
    }
    let result = pipeline.run(req)?;
    summarize(&result);
    write_out(a.out.as_deref(), &serde_json::to_string_pretty(&result)?)?;
    Ok(if result.status == JobStatus::Success {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn summarize(r: &ApproximationResult) {
    let objective = r
        .objective
        .map_or_else(|| "-".to_string(), |v| format!("{v:.8}"));
    eprintln!(
        "{:?} via {:?}: status {:?}, objective {objective}, solve {:.1} ms",
        r.request.task, r.plan.method, r.status, r.timings.solve_ms
    );
    for note in &r.diagnostics.notes {
        eprintln!("note: {note}");
    }
}

fn run(cli: Cli) -> Result<ExitCode, ApiError> {
    match cli.command {
        Command::Inner(a) => run_job(Task::Inner, a),
        Command::Outer(a) => run_job(Task::Outer, a),
        Command::Certify(a) => run_job(Task::Certificate, a),
        Command::Eval {
            result,
            grid,
            oracle,
            out,
        } => {
            let result: ApproximationResult = read_json(&result)?;
            let mesh = evaluate_surface(&result, &grid.parse::<GridSpec>()?, oracle)?;
            write_out(out.as_deref(), &serde_json::to_string_pretty(&mesh)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle {
            problem,
            grid,
            region,
            out,
        } => {
            let molp: Molp = read_json(&problem)?;
            let spec: GridSpec = grid.parse()?;
            let g = match region {
                Some(r) => spec.points(&read_json::<Region>(&r)?)?,
                None => spec.points_free()?,
            };
            let front = pareto_front_oracle(&molp, &g.points)?;
            write_out(out.as_deref(), &serde_json::to_string_pretty(&front)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Serve {
            addr,
            store,
            problems,
            workers,
        } => {
            let pipeline = Pipeline {
                problem_dir: problems,
                ..Pipeline::default()
            };
            let state = AppState::new(pipeline, Arc::new(DirStore::open(store)?), workers);
            let rt = tokio::runtime::Runtime::new()?;
            eprintln!("listening on {addr}");
            rt.block_on(serve(&addr, state))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
