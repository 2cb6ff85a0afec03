use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::warn;
use modbo::acquisition::{AcquisitionKind, DEFAULT_LCB_WEIGHT};
use modbo::metrics::MetricKind;
use modbo::samplers::{ChainConfig, ChainProfile};
use modbo::surrogates::{SurrogateKind, DEFAULT_LATENT_DIM};
use modbo_cli::dump::{posterior_grid, read_dataset, write_grid, DumpRequest};
use modbo_cli::run::cmd_run;
use modbo_cli::summarize::cmd_summarize;
use modbo_cli::{list_benchmarks, CliError, CliResult, ExperimentConfig};

#[derive(Parser)]
#[command(name = "modbo", version, about = "Bayesian optimization with modulated GP surrogates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    Gap,
    Regret,
}

#[derive(Clone, Copy, ValueEnum)]
enum Acq {
    Ei,
    Lcb,
}

#[derive(Clone, Copy, ValueEnum)]
enum Profile {
    Desk,
    Paper,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (surrogate, repetition) pair of an experiment config.
    Run {
        config: PathBuf,
        /// Permit the long "paper" chain profile.
        #[arg(long)]
        allow_paper_profile: bool,
    },
    /// Tabulate the traces in a run directory.
    Summarize {
        dir: PathBuf,
        #[arg(long, value_enum, default_value = "gap")]
        metric: Metric,
    },
    /// Posterior moments and acquisition on a grid over a 1-D benchmark.
    PosteriorDump {
        benchmark: String,
        /// CSV with header `x,f`.
        data: PathBuf,
        #[arg(long)]
        surrogate: SurrogateKind,
        #[arg(long, default_value_t = 0.0)]
        sigma_h: f64,
        #[arg(long, default_value_t = 200)]
        grid: usize,
        #[arg(long, value_enum, default_value = "ei")]
        acquisition: Acq,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "desk")]
        profile: Profile,
        #[arg(long)]
        allow_paper_profile: bool,
        /// Output file (stdout when omitted).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the benchmark catalog.
    ListBenchmarks,
}

fn profile(p: Profile, allow: bool) -> CliResult<ChainProfile> {
    match p {
        Profile::Desk => Ok(ChainProfile::Desk),
        Profile::Paper if allow => {
            warn!("paper chain profile: each chain runs 35000 MCMC steps");
            Ok(ChainProfile::Paper)
        }
        Profile::Paper => Err(CliError::Usage("--profile paper requires --allow-paper-profile".into())),
    }
}

fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run {
            config,
            allow_paper_profile,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let outcome = cmd_run(&cfg, allow_paper_profile)?;
            for p in &outcome.written {
                println!("{}", p.display());
            }
            if !outcome.aborted.is_empty() {
                return Err(CliError::Runtime(format!("aborted runs: {}", outcome.aborted.join(", "))));
            }
        }
        Command::Summarize { dir, metric } => {
            let metric = match metric {
                Metric::Gap => MetricKind::Gap,
                Metric::Regret => MetricKind::Regret,
            };
            print!("{}", cmd_summarize(&dir, metric)?);
        }
        Command::PosteriorDump {
            benchmark,
            data,
            surrogate,
            sigma_h,
            grid,
            acquisition,
            seed,
            profile: p,
            allow_paper_profile,
            output,
        } => {
            let bench = modbo::benchmarks::benchmark(&benchmark).map_err(|e| CliError::Usage(e.to_string()))?;
            if bench.dim() != 1 {
                return Err(CliError::Usage(format!("{} is not 1-D", bench.name)));
            }
            if !(sigma_h.is_finite() && sigma_h >= 0.0) {
                return Err(CliError::Usage(format!("--sigma-h must be >= 0, got {sigma_h}")));
            }
            let dataset = read_dataset(&data, &bench)?;
            let req = DumpRequest {
                benchmark,
                surrogate,
                sigma_h,
                grid,
                acquisition: match acquisition {
                    Acq::Ei => AcquisitionKind::Ei,
                    Acq::Lcb => AcquisitionKind::Lcb {
                        exploration_weight: DEFAULT_LCB_WEIGHT,
                    },
                },
                chain: ChainConfig::profile(profile(p, allow_paper_profile)?, seed),
                latent_dim: DEFAULT_LATENT_DIM,
            };
            let rows = posterior_grid(&req, &dataset)?;
            match output {
                Some(path) => write_grid(std::fs::File::create(path)?, &rows)?,
                None => write_grid(std::io::stdout().lock(), &rows)?,
            }
        }
        Command::ListBenchmarks => {
            for line in list_benchmarks() {
                println!("{line}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("modbo: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
