//! `csps` — Bayesian multinomial-probit classification with class-specific
//! predictor selection: simulate | fit | predict | cv | diagnose | screen.

mod artifacts;
mod commands;
mod config;

use clap::{Args, Parser, Subcommand};

/// Exit codes: 0 success, 1 validation error, 2 runtime/numerical error.
#[derive(Debug)]
pub struct CliError {
    pub message: String,
    pub code: i32,
}

impl CliError {
    pub fn validation(message: String) -> Self {
        Self { message, code: 1 }
    }

    pub fn runtime(message: String) -> Self {
        Self { message, code: 2 }
    }

    pub fn io(e: std::io::Error) -> Self {
        Self {
            message: e.to_string(),
            code: 2,
        }
    }
}

impl From<csps::Error> for CliError {
    fn from(e: csps::Error) -> Self {
        let code = match &e {
            csps::Error::Config(_) | csps::Error::Data(_) | csps::Error::Shape(_)
            | csps::Error::Csv { .. } => 1,
            csps::Error::Numerical(_) | csps::Error::Io(_) => 2,
        };
        Self {
            message: e.to_string(),
            code,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "csps",
    about = "Bayesian multinomial-probit regression with class-specific predictor selection",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flag overrides applied on top of the config file.
#[derive(Args, Clone, Default)]
struct Overrides {
    /// Output directory (overrides output.dir).
    #[arg(long)]
    out_dir: Option<String>,
    /// Indicator coupling rho in [0,1] (overrides model.rho).
    #[arg(long)]
    rho: Option<f64>,
    /// Prior spread tau^2 (overrides model.tau2).
    #[arg(long)]
    tau2: Option<f64>,
    /// Total MCMC iterations per chain.
    #[arg(long)]
    iterations: Option<usize>,
    /// Burn-in iterations.
    #[arg(long)]
    burn_in: Option<usize>,
    /// Thinning stride.
    #[arg(long)]
    thin: Option<usize>,
    /// Chain seeds, comma separated (overrides sampler.seeds).
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Chain starts, comma separated: empty|full|random.
    #[arg(long, value_delimiter = ',')]
    starts: Option<Vec<String>>,
    /// Worker threads (0 = available parallelism).
    #[arg(long)]
    workers: Option<usize>,
    /// Input CSV path (overrides data.input).
    #[arg(long)]
    input: Option<String>,
    /// Label column name (overrides data.label_column).
    #[arg(long)]
    label_column: Option<String>,
}

impl Overrides {
    fn apply(&self, cfg: &mut config::RunConfig) {
        if let Some(v) = &self.out_dir {
            cfg.output.dir = v.clone();
        }
        if let Some(v) = self.rho {
            cfg.model.rho = v;
        }
        if let Some(v) = self.tau2 {
            cfg.model.tau2 = v;
        }
        if let Some(v) = self.iterations {
            cfg.sampler.iterations = v;
        }
        if let Some(v) = self.burn_in {
            cfg.sampler.burn_in = v;
        }
        if let Some(v) = self.thin {
            cfg.sampler.thin = v;
        }
        if let Some(v) = &self.seeds {
            cfg.sampler.seeds = v.clone();
        }
        if let Some(v) = &self.starts {
            cfg.sampler.starts = v.clone();
        }
        if let Some(v) = self.workers {
            cfg.sampler.workers = v;
        }
        if let Some(v) = &self.input {
            cfg.data.input = Some(v.clone());
        }
        if let Some(v) = &self.label_column {
            cfg.data.label_column = Some(v.clone());
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic benchmark dataset and its true coefficients.
    Simulate {
        /// Scenario number: 1 (class-specific staircase) or 2 (column-constant magnitudes).
        #[arg(long)]
        scenario: u32,
        /// Generator seed.
        #[arg(long)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out_dir: String,
    },
    /// Run MCMC chains and emit posterior artifacts.
    Fit {
        /// TOML run configuration.
        #[arg(long)]
        config: String,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Classify new data from fitted artifacts (model averaging).
    Predict {
        /// Artifact directory produced by `fit`.
        #[arg(long)]
        artifacts: String,
        /// CSV of new units (same covariate columns as the training data).
        #[arg(long)]
        data: String,
        /// Output CSV path.
        #[arg(long)]
        out: String,
        /// The data file carries a label column to echo into the output.
        #[arg(long, default_value_t = false)]
        with_labels: bool,
    },
    /// Cross-validate the full pipeline: split, fit, predict, score.
    Cv {
        /// TOML run configuration (cv block selects the mode).
        #[arg(long)]
        config: String,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Emit mixing diagnostics from fitted artifacts.
    Diagnose {
        /// Artifact directory produced by `fit`.
        #[arg(long)]
        artifacts: String,
    },
    /// Univariate per-predictor screening fits.
    Screen {
        /// TOML run configuration (screen block sets the threshold).
        #[arg(long)]
        config: String,
        #[command(flatten)]
        overrides: Overrides,
    },
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate {
            scenario,
            seed,
            out_dir,
        } => commands::simulate::run(scenario, seed, &out_dir),
        Command::Fit { config, overrides } => {
            let mut cfg = config::RunConfig::load(&config)?;
            overrides.apply(&mut cfg);
            commands::fit::run(&cfg).map(|_| ())
        }
        Command::Predict {
            artifacts,
            data,
            out,
            with_labels,
        } => commands::predict::run(&artifacts, &data, &out, with_labels),
        Command::Cv { config, overrides } => {
            let mut cfg = config::RunConfig::load(&config)?;
            overrides.apply(&mut cfg);
            commands::cv::run(&cfg)
        }
        Command::Diagnose { artifacts } => commands::diagnose::run(&artifacts),
        Command::Screen { config, overrides } => {
            let mut cfg = config::RunConfig::load(&config)?;
            overrides.apply(&mut cfg);
            commands::screen::run(&cfg)
        }
    }
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {}", e.message);
        std::process::exit(e.code);
    }
}
