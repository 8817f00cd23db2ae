//! `pocketk`: run the screening study stage by stage.

mod artifacts;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use pocketk::config::RunConfig;
use pocketk::model::TrainProfile;

#[derive(Debug, Parser)]
#[command(name = "pocketk", version, about = "Single-lead ECG hyperkalemia screening study")]
struct Cli {
    /// TOML run configuration; defaults apply to anything it omits.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides every seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output (run) directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Directory holding the `internal/` and `external/` cohorts.
    #[arg(long, global = true, env = "POCKETK_DATA_DIR")]
    data_dir: Option<PathBuf>,
    /// Print the default configuration as TOML and exit.
    #[arg(long)]
    print_defaults: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate the synthetic internal and external cohorts.
    Synth(SynthArgs),
    /// Pair each ECG with its nearest potassium result.
    Pair(PairArgs),
    /// Chronological and patient-level partitioning, STARD and baseline tables.
    Split(SplitArgs),
    /// Train the classifier and freeze the threshold.
    Train(TrainArgs),
    /// Score the evaluation sets and bootstrap the metrics.
    Eval(EvalArgs),
    /// Group-mean waveforms and the reference-negative phenotype table.
    Explain,
    /// Per-patient potassium and risk trajectories.
    Track(TrackArgs),
    /// Score one PKECG1 recording as the handheld device would.
    Device(DeviceArgs),
    /// Assemble every artifact into report.json.
    Report,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Internal cohort size.
    #[arg(long)]
    patients: Option<usize>,
    /// External cohort size; 0 skips the external site.
    #[arg(long)]
    external_patients: Option<usize>,
}

#[derive(Debug, Args)]
struct PairArgs {
    #[arg(long)]
    window_minutes: Option<f64>,
}

#[derive(Debug, Args)]
struct SplitArgs {
    /// RFC 3339 instant starting the temporal validation era.
    #[arg(long)]
    cutoff: Option<String>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// `paper` or `compact`.
    #[arg(long)]
    profile: Option<String>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    bootstrap_resamples: Option<usize>,
}

#[derive(Debug, Args)]
struct TrackArgs {
    /// Also write the trajectory of this patient.
    #[arg(long)]
    patient: Vec<String>,
}

#[derive(Debug, Args)]
struct DeviceArgs {
    /// PKECG1 recording.
    recording: PathBuf,
    /// Weights file; defaults to `<out>/model/weights.json`.
    #[arg(long)]
    weights: Option<PathBuf>,
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.reseed(seed);
    }
    if let Some(d) = &cli.data_dir {
        cfg.data_dir = d.clone();
    }
    if let Some(o) = &cli.out {
        cfg.out_dir = o.clone();
    }
    match &cli.command {
        Some(Command::Synth(a)) => {
            if let Some(n) = a.patients {
                cfg.synth.internal.n_patients = n;
            }
            if let Some(n) = a.external_patients.filter(|&n| n > 0) {
                cfg.synth.external.n_patients = n;
            }
        }
        Some(Command::Pair(a)) => {
            if let Some(w) = a.window_minutes {
                cfg.pairing.window_minutes = w;
            }
        }
        Some(Command::Split(a)) => {
            if let Some(c) = &a.cutoff {
                cfg.split.cutoff = c.clone();
            }
        }
        Some(Command::Train(a)) => {
            if let Some(p) = &a.profile {
                cfg.train.profile = TrainProfile::parse(p)
                    .with_context(|| format!("unknown profile {p:?}; expected `paper` or `compact`"))?;
            }
        }
        Some(Command::Eval(a)) => {
            if let Some(b) = a.bootstrap_resamples {
                cfg.eval.bootstrap.resamples = b;
            }
        }
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<u8> {
    if cli.print_defaults {
        print!("{}", RunConfig::print_defaults());
        return Ok(0);
    }
    let cfg = load_config(&cli)?;
    let Some(command) = cli.command else {
        bail!("no subcommand given; see `pocketk --help`");
    };
    let ctx = stages::Ctx::new(cfg);
    match command {
        Command::Synth(a) => stages::synth(&ctx, a.external_patients == Some(0))?,
        Command::Pair(_) => stages::pair(&ctx)?,
        Command::Split(_) => stages::split(&ctx)?,
        Command::Train(_) => stages::train(&ctx)?,
        Command::Eval(_) => stages::eval(&ctx)?,
        Command::Explain => stages::explain(&ctx)?,
        Command::Track(a) => stages::track(&ctx, &a.patient)?,
        Command::Device(a) => return stages::device(&ctx, &a.recording, a.weights.as_deref()),
        Command::Report => stages::report(&ctx)?,
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
