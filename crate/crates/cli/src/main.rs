use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Result;
use cfdcast::synthetic::SyntheticConfig;
use cfdcast::{AreaId, Horizon};
use cfdcast_cli::commands::{self, Overrides};
use cfdcast_cli::workspace::write_atomic;
use cfdcast_cli::{api, error_code, Workspace};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "cfdcast",
    version,
    about = "Forecast area price differentials for areas without a CfD market"
)]
struct Cli {
    /// Data directory holding inputs and results.
    #[arg(long, global = true, env = "CFD_DATA_DIR", default_value = ".")]
    data: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Read the CSV inputs and store an aligned panel.
    Ingest {
        /// Directory with the CSV files, if not the data directory.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Fit the regression posteriors and print the coefficient table.
    Fit {
        /// Comma separated horizons; defaults to the job settings.
        #[arg(long, value_delimiter = ',')]
        horizons: Option<Vec<Horizon>>,
    },
    /// Ask the similarity questions for an area without CfD quotes.
    Elicit {
        #[arg(long)]
        area: AreaId,
        /// Build the profile from a saved TOML transcript instead.
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Write the daily predictive band of the mean CfD.
    Forecast {
        #[arg(long)]
        area: AreaId,
        #[arg(long)]
        horizon: Horizon,
        #[command(flatten)]
        run: RunArgs,
        /// Output file; `-` for stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare CfD plus forward quotes with realised spot averages.
    Backtest {
        #[arg(long)]
        area: AreaId,
        #[arg(long)]
        horizon: Horizon,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Start the HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
    /// Generate a synthetic market into the data directory.
    Synth {
        #[arg(long, default_value_t = 2011)]
        seed: u64,
        #[arg(long, default_value_t = 731)]
        days: usize,
        /// Confidence of the generated profiles.
        #[arg(long, default_value_t = 12.0)]
        months: f64,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Monte Carlo iterations.
    #[arg(long = "n")]
    n_draws: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<f64>>,
    #[arg(long)]
    days_per_month: Option<f64>,
    /// Add observation noise to the predicted mean.
    #[arg(long)]
    noise: bool,
    #[arg(long)]
    threads: Option<usize>,
}

impl From<RunArgs> for Overrides {
    fn from(a: RunArgs) -> Self {
        Overrides {
            n_draws: a.n_draws,
            seed: a.seed,
            levels: a.levels,
            days_per_month: a.days_per_month,
            noise: a.noise,
            threads: a.threads,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let detail = e.to_string();
            let first = detail.lines().next().unwrap_or("invalid arguments");
            eprintln!("error: cli.usage: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {}: {msg}", error_code(&e));
            ExitCode::FAILURE
        }
    }
}

/// Write `text` to `out`, stdout for `-`, or `default`. Returns whether
/// stdout was used.
fn emit(out: Option<PathBuf>, default: PathBuf, text: &str) -> Result<bool> {
    match out {
        Some(p) if p.as_os_str() == "-" => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(true)
        }
        p => {
            write_atomic(&p.unwrap_or(default), text.as_bytes())?;
            Ok(false)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let ws = Workspace::new(&cli.data);
    match cli.command {
        Command::Ingest { input } => {
            let (summary, report) = commands::ingest(&ws, input.as_deref())?;
            println!(
                "panel: {} days {}..{}, {} epoch(s)",
                summary.n_dates,
                summary.first_date.map_or("-".into(), |d| d.to_string()),
                summary.last_date.map_or("-".into(), |d| d.to_string()),
                summary.epochs.len()
            );
            println!(
                "ignored rows: {} outside window, {} off calendar, {} cfd without forward",
                report.outside_window, report.off_calendar, report.cfd_without_forward
            );
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
        }
        Command::Fit { horizons } => {
            let outcome = commands::fit(&ws, horizons)?;
            print!("{}", outcome.table.to_text());
            for s in &outcome.skipped {
                eprintln!("skipped: {s}");
            }
        }
        Command::Elicit { area, transcript } => {
            let profile = match transcript {
                Some(path) => commands::elicit_from_file(&ws, &path)?,
                None => commands::elicit(&ws, &area, io::stdin().lock(), io::stderr())?,
            };
            if profile.target != area {
                anyhow::bail!(cfdcast_cli::CliError::Config(format!(
                    "transcript is for {}, not {area}",
                    profile.target
                )));
            }
            print!("{}", profile.to_toml());
        }
        Command::Forecast {
            area,
            horizon,
            run,
            out,
        } => {
            let result = commands::forecast(&ws, &area, horizon, &run.into())?;
            emit(out, ws.forecast_path(&area, horizon), &result.to_csv())?;
        }
        Command::Backtest {
            area,
            horizon,
            run,
            out,
        } => {
            let output = commands::backtest(&ws, &area, horizon, &run.into())?;
            let quiet = emit(out, ws.backtest_path(&area, horizon), &output.to_csv())?;
            if let (false, Some(m)) = (quiet, output.mean_difference()) {
                println!("{} periods, mean difference {m:.4}", output.records.len());
            }
        }
        Command::Serve { addr } => {
            let state = Arc::new(api::AppState::load(ws)?);
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind(addr).await?;
                eprintln!("listening on http://{}", listener.local_addr()?);
                axum::serve(listener, api::router(state))
                    .with_graceful_shutdown(async {
                        let _ = tokio::signal::ctrl_c().await;
                    })
                    .await?;
                anyhow::Ok(())
            })?;
        }
        Command::Synth { seed, days, months } => {
            let cfg = SyntheticConfig {
                seed,
                days,
                ..Default::default()
            };
            commands::synth(ws.root(), cfg, months)?;
            println!("synthetic market written to {}", ws.root().display());
        }
    }
    Ok(())
}
