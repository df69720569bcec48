use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dicke_phase_lab::echo::QuenchObservables;
use dicke_phase_lab::error::{Error, Result};
use dicke_phase_lab::extract::extract;
use dicke_phase_lab::io::{write_atomic, EchoFile};
use dicke_phase_lab::model::{classify_phase, effective_frequencies, region_kinds, ModelParams};
use dicke_phase_lab::sim::InitialSpin;
use dicke_phase_lab::sweep::{preset, run_echo, run_sweep, Engine, PointRequest, SweepConfig};

#[derive(Parser)]
#[command(name = "dicke-phase-lab", version, about = "Phases and quench echoes of the anisotropic Dicke model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a coupling point and print Ω1, Ω2 and the oscillator kinds.
    #[command(allow_negative_numbers = true)]
    Classify {
        g1: f64,
        g2: f64,
        #[arg(default_value_t = 1.0)]
        omega: f64,
    },
    /// Compute L(t) and D(t) at one point and write them as CSV.
    Echo(EchoArgs),
    /// Evaluate λ and f over a grid described by a TOML config.
    Sweep {
        config: PathBuf,
        /// Overrides `workers` from the config.
        #[arg(long)]
        workers: Option<usize>,
        /// Overrides `output` from the config; `-` writes to stdout.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Extract λ and f from an echo CSV.
    Extract { input: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Analytic,
    Effective,
    Finite,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpinArg {
    Down,
    Up,
}

#[derive(clap::Args)]
struct EchoArgs {
    /// Preset name (a, b, c, d). Overridden by --g1/--g2.
    point: Option<String>,
    #[arg(long)]
    g1: Option<f64>,
    #[arg(long)]
    g2: Option<f64>,
    #[arg(long, value_enum, default_value = "analytic")]
    engine: EngineArg,
    #[arg(long, default_value_t = 20.0)]
    horizon: f64,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    #[arg(long)]
    n_atoms: Option<usize>,
    #[arg(long)]
    n_max: Option<usize>,
    /// Bound the validity window by rerunning with doubled n_max (and N).
    #[arg(long)]
    convergence_check: bool,
    #[arg(long, value_enum, default_value = "down")]
    spin: SpinArg,
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::OnBoundary(_) => 3,
        Error::DegenerateForm(_)
        | Error::NonConvergence { .. }
        | Error::NormDrift { .. }
        | Error::NonPositiveEcho { .. }
        | Error::WindowTooShort(_) => 4,
        Error::InvalidParams(_)
        | Error::UnsupportedParams { .. }
        | Error::CutoffTooSmall(_)
        | Error::BasisMismatch(_)
        | Error::MalformedCsv(_)
        | Error::Config(_)
        | Error::Io(_) => 2,
    }
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) if p != Path::new("-") => write_atomic(p, text.as_bytes()),
        _ => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(out.flush()?)
        }
    }
}

fn classify(g1: f64, g2: f64, omega: f64) -> Result<()> {
    let params = ModelParams::resonant(omega, g1, g2, 1)?;
    let region = classify_phase(&params)?;
    if let Some(line) = region.boundary_detail() {
        return Err(Error::OnBoundary(line));
    }
    let (o1, o2) = effective_frequencies(&params)?;
    let (k1, k2) = region_kinds(region).expect("regions off the boundary have kinds");
    println!(
        "{}  Ω1={o1:.6} Ω2={o2:.6} kinds={},{}",
        region.tag(),
        k1.label(),
        k2.label()
    );
    Ok(())
}

fn echo(args: &EchoArgs) -> Result<()> {
    let named = match &args.point {
        Some(name) => Some(preset(name).ok_or_else(|| {
            Error::InvalidParams(format!("unknown preset {name:?} (expected a, b, c or d)"))
        })?),
        None => None,
    };
    let g1 = args.g1.or(named.map(|p| p.0));
    let g2 = args.g2.or(named.map(|p| p.1));
    let (Some(g1), Some(g2)) = (g1, g2) else {
        return Err(Error::InvalidParams(
            "give a preset name or both --g1 and --g2".into(),
        ));
    };
    let engine = match args.engine {
        EngineArg::Analytic => Engine::Analytic,
        EngineArg::Effective => Engine::Effective,
        EngineArg::Finite => Engine::Finite,
    };
    let mut request = PointRequest::new(g1, g2, engine);
    request.horizon = args.horizon;
    request.dt = args.dt;
    request.n_atoms = args.n_atoms;
    request.n_max = args.n_max;
    request.convergence_check = args.convergence_check;
    request.spin = match args.spin {
        SpinArg::Down => InitialSpin::Down,
        SpinArg::Up => InitialSpin::Up,
    };
    let run = run_echo(&request)?;
    if let Some(report) = &run.report {
        eprintln!("validity horizon T* = {}", report.t_star);
    }
    emit(args.output.as_deref(), &run.to_csv()?)
}

fn sweep(config: &Path, workers: Option<usize>, output: Option<&Path>) -> Result<()> {
    let mut config = SweepConfig::load(config)?;
    if let Some(w) = workers {
        config.workers = w;
    }
    if let Some(o) = output {
        config.output = Some(o.to_path_buf());
    }
    let result = run_sweep(&config)?;
    let failed = result.rows.iter().filter(|r| r.status != "ok").count();
    if failed > 0 {
        eprintln!("{failed} of {} points did not produce observables", result.rows.len());
    }
    emit(config.output.as_deref(), &result.to_csv()?)
}

fn format_optional(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into())
}

fn extract_file(input: &Path) -> Result<()> {
    let file = EchoFile::read(input)?;
    let e = extract(&file.series)?;
    let QuenchObservables { lambda, f, f1, f2, .. } = e.observables;
    println!(
        "lambda={lambda:.6} f={f:.6} f1={} f2={} class={} window={:.4}",
        format_optional(f1),
        format_optional(f2),
        e.class().label(),
        e.window
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Classify { g1, g2, omega } => classify(*g1, *g2, *omega),
        Command::Echo(args) => echo(args),
        Command::Sweep {
            config,
            workers,
            output,
        } => sweep(config, *workers, output.as_deref()),
        Command::Extract { input } => extract_file(input),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
