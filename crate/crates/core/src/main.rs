use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use krein_flow::error::{KreinError, Result};
use krein_flow::instances::{draw_spec, from_spec, preset, Instance, InstanceSpec, RandomSpec};
use krein_flow::runner::{
    exit_code, run, to_json_string, verify, write_trajectory, BatchItem, RunConfig, EXIT_INVALID, EXIT_PASS,
};
use krein_flow::spectral::{regularity_ranks, Interval};

#[derive(Parser)]
#[command(name = "krein-flow", version, about = "Eigenvalue flows of A + tC in finite-dimensional Krein spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write an instance file from a preset or the random generator.
    Gen(GenArgs),
    /// Track one instance and verify the variation bound.
    Flow(FlowArgs),
    /// Run a batch of instances and aggregate the results.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, default_value_t = 4)]
    n: usize,
    /// Number of positive signature entries (defaults to n).
    #[arg(long)]
    plus: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Prescribed eigenvalues of C as `value:sign` (sign `+` or `-`).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    gammas: Vec<String>,
    /// Prescribed eigenvalues of A as `value:sign`, one per dimension.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    eigenvalues: Vec<String>,
    /// Number of nonzero eigenvalues of C for random draws.
    #[arg(long)]
    rank: Option<usize>,
    #[arg(short = 'o', long = "out")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    /// Interval `a,b` not containing 0.
    #[arg(long, allow_hyphen_values = true)]
    interval: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    /// Number of grid points on [0, 1].
    #[arg(long, default_value_t = 201)]
    steps: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 1e-10)]
    matching_tol: f64,
    /// Interior split points of the interval.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    split: Vec<f64>,
}

#[derive(Args)]
struct FlowArgs {
    #[arg(long, conflicts_with_all = ["instance", "spec"])]
    preset: Option<String>,
    #[arg(long, conflicts_with = "spec")]
    instance: Option<PathBuf>,
    /// JSON generator spec (explicit spectra and seed).
    #[arg(long)]
    spec: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long)]
    out_traj: Option<PathBuf>,
    #[arg(long)]
    out_report: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    instance: Vec<PathBuf>,
    #[arg(long)]
    preset: Vec<String>,
    /// Number of random instances.
    #[arg(long, default_value_t = 0)]
    count: usize,
    /// Seed of the first random instance.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long)]
    plus: Option<usize>,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long)]
    out_report: Option<PathBuf>,
}

const RANDOM_INTERVAL: (f64, f64) = (0.1, 5.0);

fn invalid(msg: impl Into<String>) -> KreinError {
    KreinError::InvalidConfig(msg.into())
}

fn parse_interval(text: &str) -> Result<Interval> {
    let parts: Vec<&str> = text.split(',').collect();
    let [a, b] = parts.as_slice() else {
        return Err(invalid(format!("interval must be `a,b`, got `{text}`")));
    };
    let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| invalid(format!("interval endpoint `{s}`: {e}")));
    Interval::new(parse(a)?, parse(b)?)
}

fn parse_signed(text: &str) -> Result<(f64, i8)> {
    let (v, s) = text
        .split_once(':')
        .ok_or_else(|| invalid(format!("expected `value:sign`, got `{text}`")))?;
    let value = v.trim().parse::<f64>().map_err(|e| invalid(format!("value `{v}`: {e}")))?;
    let sign = match s.trim() {
        "+" | "+1" | "1" => 1,
        "-" | "-1" => -1,
        other => return Err(invalid(format!("sign must be + or -, got `{other}`"))),
    };
    Ok((value, sign))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &[u8]) -> Result<()> {
    fs::write(path, text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn config(args: &PipelineArgs, default_interval: Option<Interval>) -> Result<RunConfig> {
    let interval = match (&args.interval, default_interval) {
        (Some(text), _) => parse_interval(text)?,
        (None, Some(i)) => i,
        (None, None) => return Err(invalid("--interval is required for this instance source")),
    };
    let cfg = RunConfig {
        tol: args.tol,
        matching_tol: args.matching_tol,
        split: args.split.clone(),
        ..RunConfig::new(interval, args.p, args.steps)
    };
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_gen(args: &GenArgs) -> Result<i32> {
    let instance = if let Some(name) = &args.preset {
        preset(name)?.instance
    } else {
        let plus = args.plus.unwrap_or(args.n);
        let mut random = RandomSpec::new(args.n, plus);
        random.rank = args.rank;
        let mut spec: InstanceSpec = draw_spec(args.seed, &random)?;
        if !args.gammas.is_empty() {
            spec.gammas = args.gammas.iter().map(|g| parse_signed(g)).collect::<Result<_>>()?;
        }
        if !args.eigenvalues.is_empty() {
            spec.eigenvalues = args.eigenvalues.iter().map(|g| parse_signed(g)).collect::<Result<_>>()?;
        }
        let mut inst = from_spec(&spec)?;
        inst.meta.seed = Some(args.seed);
        inst
    };
    instance.validate(krein_flow::krein::DEFAULT_TOL)?;
    let (rank_c, rank_c2) = regularity_ranks(&instance.c, krein_flow::krein::DEFAULT_TOL);
    let text = to_json_string(&instance.to_json_value());
    match &args.out {
        Some(path) => write(path, text.as_bytes())?,
        None => print!("{text}"),
    }
    eprintln!(
        "valid instance: n = {}, signature (+{}, -{}), A and C non-negative, rank C = rank C^2 = {rank_c}{}",
        instance.space.dim(),
        instance.space.plus_count(),
        instance.space.minus_count(),
        if rank_c == rank_c2 { "" } else { " (mismatch)" },
    );
    Ok(EXIT_PASS)
}

fn load_instance(args: &FlowArgs) -> Result<(Instance, Option<Interval>)> {
    match (&args.preset, &args.instance, &args.spec) {
        (Some(name), _, _) => {
            let p = preset(name)?;
            Ok((p.instance, Some(p.interval)))
        }
        (_, Some(path), _) => Ok((Instance::from_json_str(&read(path)?)?, None)),
        (_, _, Some(path)) => {
            let spec: InstanceSpec =
                serde_json::from_str(&read(path)?).map_err(|e| invalid(format!("spec file: {e}")))?;
            Ok((from_spec(&spec)?, None))
        }
        _ => Err(invalid("one of --preset, --instance or --spec is required")),
    }
}

fn cmd_flow(args: &FlowArgs) -> Result<i32> {
    let (instance, default_interval) = load_instance(args)?;
    let cfg = config(&args.pipeline, default_interval)?;
    let outcome = run(&instance, &cfg)?;
    let report = &outcome.report;
    if let Some(path) = &args.out_traj {
        let mut buf = Vec::new();
        write_trajectory(&outcome.trajectory, &mut buf).map_err(|e| invalid(e.to_string()))?;
        write(path, &buf)?;
    }
    let text = to_json_string(report);
    match &args.out_report {
        Some(path) => write(path, text.as_bytes())?,
        None => print!("{text}"),
    }
    eprintln!(
        "delta = {:e}, lp_sum = {:e}, bound_rhs = {:e}, margin = {:e}, {}",
        report.delta,
        report.lp_sum,
        report.bound_rhs,
        report.margin,
        if report.passed { "all checks passed" } else { "CHECK FAILED" }
    );
    Ok(report.exit_status)
}

fn cmd_verify(args: &VerifyArgs) -> Result<i32> {
    let mut items = Vec::new();
    for path in &args.instance {
        let label = path.display().to_string();
        let instance = Instance::from_json_str(&read(path)?);
        match instance.and_then(|inst| Ok((inst, config(&args.pipeline, None)?))) {
            Ok((inst, config)) => items.push(BatchItem::Instance {
                label,
                instance: Box::new(inst),
                config,
            }),
            Err(e) => {
                eprintln!("{label}: {e}");
                return Ok(exit_code(&e));
            }
        }
    }
    for name in &args.preset {
        let p = preset(name)?;
        items.push(BatchItem::Instance {
            label: name.clone(),
            config: config(&args.pipeline, Some(p.interval))?,
            instance: Box::new(p.instance),
        });
    }
    if args.count > 0 {
        let random_cfg = config(&args.pipeline, Some(Interval::new(RANDOM_INTERVAL.0, RANDOM_INTERVAL.1)?))?;
        let spec = RandomSpec::new(args.n, args.plus.unwrap_or(args.n.div_ceil(2)));
        for k in 0..args.count as u64 {
            items.push(BatchItem::Random {
                seed: args.seed + k,
                spec: spec.clone(),
                config: random_cfg.clone(),
            });
        }
    }
    let report = verify(&items);
    let text = to_json_string(&report);
    match &args.out_report {
        Some(path) => write(path, text.as_bytes())?,
        None => print!("{text}"),
    }
    for e in report.entries.iter().filter(|e| !e.passed) {
        let why = e.error.clone().unwrap_or_else(|| format!("failed checks: {}", e.failed_checks.join(", ")));
        eprintln!("FAILED {} (exit {}): {why}", e.label, e.exit_code);
    }
    eprintln!(
        "{} instances, {} passed, {} failed, min margin {}",
        report.count,
        report.passed,
        report.failed,
        report.min_margin.map_or("n/a".to_string(), |m| format!("{m:e}"))
    );
    Ok(report.exit_code)
}

fn init_threads() {
    if let Some(n) = std::env::var("KREIN_FLOW_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_PASS };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    init_threads();
    let result = match &cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Flow(args) => cmd_flow(args),
        Command::Verify(args) => cmd_verify(args),
    };
    let code = result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        exit_code(&e)
    });
    ExitCode::from(code as u8)
}
