//! `kmu`: analyze contact metric manifold models from the command line.
//!
//! Exit codes: 0 when every check passes, 1 when the model loads but at
//! least one mathematical check fails, 2 when the model (or invocation)
//! itself is unusable.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

use kmu_core::fixtures;
use kmu_core::model::{load_model, make_kmu_model, ManifoldModel};
use kmu_core::{run_analysis, AnalyzeOptions, DEFAULT_SEED, DEFAULT_TOL};

#[derive(Parser)]
#[command(
    name = "kmu",
    version,
    about = "Numerical analyzer for contact metric manifolds and their nullity structure"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every structural, curvature, foliation, and connection check on one model
    Analyze(AnalyzeArgs),
    /// List the built-in models
    Fixtures,
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["model", "fixture", "kmu"])))]
struct AnalyzeArgs {
    /// Path to a model description in JSON
    #[arg(long, value_name = "PATH")]
    model: Option<PathBuf>,

    /// Name of a built-in model (see `kmu fixtures`)
    #[arg(long, value_name = "NAME")]
    fixture: Option<String>,

    /// Build the generator model with these nullity constants, e.g. --kmu 0.75,1
    #[arg(long, value_name = "KAPPA,MU")]
    kmu: Option<String>,

    /// Tolerance applied to every identity check
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tolerance: f64,

    /// Also verify a D-homothetic deformation by this factor; repeatable
    #[arg(long, value_name = "A")]
    deform: Vec<f64>,

    /// Write the full JSON report to this path
    #[arg(long, value_name = "PATH")]
    report: Option<PathBuf>,

    /// Output format on stdout
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Seed recorded in the report (sample-point generation uses it)
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Fixtures => {
            print_fixtures();
            ExitCode::SUCCESS
        }
        Command::Analyze(args) => match analyze(args) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(1),
            Err(err) => {
                eprintln!("error: {err:#}");
                ExitCode::from(2)
            }
        },
    }
}

fn print_fixtures() {
    for info in fixtures::catalog() {
        if info.parametric {
            println!("{:<28} {} (requires --kmu KAPPA,MU)", info.name, info.summary);
        } else {
            println!("{:<28} {}", info.name, info.summary);
        }
    }
}

/// Ok(true): all checks passed. Ok(false): report produced, failures inside.
fn analyze(args: AnalyzeArgs) -> anyhow::Result<bool> {
    let model = resolve_model(&args)?;
    for &a in &args.deform {
        if !(a.is_finite() && a > 0.0) {
            bail!("deformation factor must be a positive number, got {a}");
        }
    }
    if !(args.tolerance.is_finite() && args.tolerance > 0.0) {
        bail!("tolerance must be a positive number, got {}", args.tolerance);
    }

    let opts = AnalyzeOptions {
        tolerance: args.tolerance,
        deform: args.deform.clone(),
        seed: args.seed,
    };
    let report = run_analysis(&model, &opts)?;

    if let Some(path) = &args.report {
        std::fs::write(path, report.to_json())
            .with_context(|| format!("writing report to {}", path.display()))?;
    }
    match args.format {
        Format::Text => print!("{}", report.render_text()),
        Format::Json => println!("{}", report.to_json()),
    }
    Ok(report.all_passed())
}

fn resolve_model(args: &AnalyzeArgs) -> anyhow::Result<ManifoldModel> {
    if let Some(path) = &args.model {
        return load_model(path)
            .with_context(|| format!("loading model from {}", path.display()));
    }
    if let Some(name) = &args.fixture {
        return match fixtures::by_name(name) {
            Some(model) => Ok(model?),
            None => {
                if fixtures::catalog().iter().any(|f| f.name == name && f.parametric) {
                    bail!("fixture `{name}` is parametric; pass --kmu KAPPA,MU instead");
                }
                bail!("unknown fixture `{name}`; run `kmu fixtures` for the list");
            }
        };
    }
    let text = args.kmu.as_ref().expect("clap enforces exactly one source");
    let (kappa, mu) = parse_kmu(text)?;
    Ok(make_kmu_model(kappa, mu)?)
}

fn parse_kmu(text: &str) -> anyhow::Result<(f64, f64)> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        bail!("--kmu takes two comma-separated numbers, e.g. --kmu 0.75,1");
    }
    let kappa: f64 = parts[0]
        .trim()
        .parse()
        .with_context(|| format!("invalid kappa `{}`", parts[0].trim()))?;
    let mu: f64 = parts[1]
        .trim()
        .parse()
        .with_context(|| format!("invalid mu `{}`", parts[1].trim()))?;
    Ok((kappa, mu))
}
