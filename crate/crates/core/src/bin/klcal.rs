use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use klcal::harness::{emit_report, run_experiment, sweep_and_fit_rate, OutputFormat, RunRecord, Settings};

#[derive(Parser)]
#[command(name = "klcal", about = "Run and sweep pseudo KL-calibration experiments")]
struct Cli {
    /// TOML file with the same keys as the flags (t, k, forecaster, ...).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One run: writes transcript.jsonl and report.<format> under --out.
    Run(Common),
    /// Runs every (T, seed) pair and fits the log-log slope of --metric.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Horizons, e.g. `2^10..2^17` or `1024,4096,16384`.
        #[arg(long)]
        t_grid: Option<String>,
        /// Number of consecutive seeds starting at --seed.
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long)]
        metric: Option<String>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// bm or dualgame.
    #[arg(long)]
    forecaster: Option<String>,
    /// fixed, iid, drift, anti-mode or file.
    #[arg(long)]
    adversary: Option<String>,
    #[arg(long)]
    adversary_param: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated, e.g. `squared,log,tsallis:1.5`.
    #[arg(long)]
    losses: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// jsonl or csv.
    #[arg(long)]
    format: Option<String>,
}

impl Common {
    fn settings(self) -> Settings {
        Settings {
            t: self.t,
            k: self.k,
            forecaster: self.forecaster,
            adversary: self.adversary,
            adversary_param: self.adversary_param,
            seed: self.seed,
            losses: self.losses,
            out: self.out,
            format: self.format,
            ..Settings::default()
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("klcal: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> klcal::Result<()> {
    let file = match &cli.config {
        Some(path) => Settings::from_toml_file(path)?,
        None => Settings::default(),
    };
    match cli.command {
        Command::Run(common) => {
            let settings = file.overlay(common.settings());
            let config = settings.run_config()?;
            let (_, report) = run_experiment(&config)?;
            if config.output.is_none() {
                println!("{}", serde_json::to_string(&RunRecord { seed: config.seed, report })?);
            }
        }
        Command::Sweep {
            common,
            t_grid,
            seeds,
            metric,
        } => {
            let flags = Settings {
                t_grid,
                seeds,
                metric,
                ..common.settings()
            };
            let mut settings = file.overlay(flags);
            let horizons = settings.horizons()?;
            // The base horizon only sizes drift segments; runs rescale them.
            settings.t = settings.t.or(horizons.first().copied());
            let base = settings.run_config()?;
            let metric = settings.metric.as_deref().unwrap_or("pklcal");
            let sweep = sweep_and_fit_rate(&base, &horizons, &settings.seed_list(), metric)?;
            for (t, mean) in &sweep.means {
                println!("T = {t:>8}  mean {metric} = {mean:.6}");
            }
            println!(
                "slope = {:.4}  intercept = {:.4}",
                sweep.fit.slope, sweep.fit.intercept
            );
            if let Some(dir) = &base.output {
                let format = settings
                    .format
                    .as_deref()
                    .map(str::parse)
                    .transpose()?
                    .unwrap_or(OutputFormat::Jsonl);
                emit_report(&sweep.runs, format, &dir.join(format!("sweep.{}", format.extension())))?;
                let fit = dir.join("fit.json");
                let text = serde_json::to_string_pretty(&serde_json::json!({
                    "metric": metric,
                    "means": sweep.means,
                    "slope": sweep.fit.slope,
                    "intercept": sweep.fit.intercept,
                }))?;
                std::fs::write(&fit, text).map_err(|e| klcal::Error::io(&fit, e))?;
            }
        }
    }
    Ok(())
}
