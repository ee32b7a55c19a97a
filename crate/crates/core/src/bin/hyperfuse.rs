use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hyperfuse::config::{Overrides, ResolvedConfig};
use hyperfuse::{pipeline, ErrorKind};

#[derive(Parser)]
#[command(
    name = "hyperfuse",
    version,
    about = "Hyperspectral + PAN fusion via NMF unmixing and per-superpixel FCM"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the high-resolution reference, low-resolution cube and PAN image.
    Simulate(Common),
    /// Factor the low-resolution cube into signatures and abundances.
    Unmix(Common),
    /// Segment the PAN image per superpixel and assign endmembers to subpixels.
    Fuse(Common),
    /// Compare a fused cube against the reference.
    Evaluate(Common),
    /// Run simulate, unmix, fuse and evaluate in order.
    Pipeline(Common),
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    scale: Option<usize>,
    #[arg(long)]
    endmembers: Option<usize>,
    #[arg(long)]
    snr_db: Option<f64>,
    #[arg(long)]
    abundance_threshold: Option<f64>,
    #[arg(long)]
    distinct_delta: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    library: Option<PathBuf>,
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long)]
    estimate: Option<PathBuf>,
    /// Label map; pixels labelled 0 are excluded from SAE.
    #[arg(long)]
    mask: Option<PathBuf>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            threads: self.threads,
            scale: self.scale,
            endmembers: self.endmembers,
            snr_db: self.snr_db,
            abundance_threshold: self.abundance_threshold,
            distinct_delta: self.distinct_delta,
            out: self.out.clone(),
            labels: self.labels.clone(),
            library: self.library.clone(),
            reference: self.reference.clone(),
            estimate: self.estimate.clone(),
            mask: self.mask.clone(),
        }
    }
}

fn exit_code(kind: ErrorKind) -> ExitCode {
    match kind {
        ErrorKind::Input => ExitCode::from(2),
        ErrorKind::Domain => ExitCode::from(3),
    }
}

fn run(command: &Command) -> hyperfuse::Result<()> {
    let common = match command {
        Command::Simulate(c) | Command::Unmix(c) | Command::Fuse(c) | Command::Evaluate(c) | Command::Pipeline(c) => c,
    };
    let cfg = ResolvedConfig::load(common.config.as_deref(), &common.overrides())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.config.threads)
        .build()
        .map_err(|e| hyperfuse::Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| match command {
        Command::Simulate(_) => pipeline::run_simulate(&cfg).map(drop),
        Command::Unmix(_) => pipeline::run_unmix(&cfg).map(drop),
        Command::Fuse(_) => pipeline::run_fuse(&cfg).map(drop),
        Command::Evaluate(_) => pipeline::run_evaluate(&cfg).map(drop),
        Command::Pipeline(_) => pipeline::run_pipeline(&cfg).map(drop),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("HYPERFUSE_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(e.kind())
        }
    }
}
