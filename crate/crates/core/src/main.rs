use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mdal::cli::{cmd_compare, cmd_generate, cmd_run, ExperimentConfig, SynthConfig};

#[derive(Parser)]
#[command(name = "mdal", version, about = "Active learning experiments for entity mention detection")]
struct Cli {
    /// Log progress (-v) or training details (-vv) to stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic corpus.
    Generate {
        /// `synth.*` key = value file; defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output corpus file.
        #[arg(long)]
        out: PathBuf,
        /// Overrides `synth.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run an experiment for every configured seed and write curve CSVs.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `run.seeds`.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
    /// Words needed to reach a target F, relative to the first curve.
    Compare {
        /// Curve CSVs; the first is the baseline.
        #[arg(required = true, num_args = 2..)]
        curves: Vec<PathBuf>,
        /// Defaults to 95% of the baseline's final value.
        #[arg(long)]
        target_f: Option<f64>,
        /// Curve column to compare, e.g. f, named_f, cat_PERSON_f.
        #[arg(long, default_value = "f")]
        column: String,
    },
}

fn run(cli: Cli) -> mdal::Result<()> {
    match cli.command {
        Command::Generate { config, out, seed } => {
            let mut cfg = match config {
                Some(p) => SynthConfig::load(p)?,
                None => SynthConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cmd_generate(&cfg, &out)?;
        }
        Command::Run { config, out, seeds } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(out) = out {
                cfg.output_dir = out;
            }
            if let Some(seeds) = seeds {
                cfg.seeds = seeds;
            }
            cfg.validate()?;
            let output = cmd_run(&cfg)?;
            for p in output.seed_files.iter().chain([&output.average_file]) {
                println!("{}", p.display());
            }
        }
        Command::Compare {
            curves,
            target_f,
            column,
        } => {
            print!("{}", cmd_compare(&curves, target_f, &column)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
