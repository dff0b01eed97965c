use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use multiscale_is::experiment::{
    emit_plot_data, preset, read_csv, run_experiment, write_csv, write_csv_to, write_plot_data,
    ExperimentSpec, Workers,
};
use multiscale_is::{parse_config, serialize_config, Error};

/// Rare-event estimation for multiscale Langevin diffusions.
#[derive(Debug, Parser)]
#[command(name = "msis", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalOpts {
    /// Master seed; overrides the config file and MSIS_SEED.
    #[arg(long, global = true, env = "MSIS_SEED")]
    seed: Option<u64>,
    /// Worker threads: a positive integer or `auto`.
    #[arg(long, global = true, value_parser = parse_workers)]
    workers: Option<Workers>,
    /// CSV output path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write a long-format table for plotting.
    #[arg(long, global = true)]
    plot_data: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run one row of a preset table.
    Preset {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        table: u8,
        #[arg(long)]
        row: usize,
        /// Multiplies the preset's 10⁷ paths.
        #[arg(long, default_value_t = 1.0)]
        scale_n: f64,
        /// Print the resulting config instead of running it.
        #[arg(long)]
        print_config: bool,
    },
    /// Merge result CSVs into one plotting table.
    Plot {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
}

fn parse_workers(s: &str) -> Result<Workers, String> {
    Workers::parse(s).ok_or_else(|| format!("expected `auto` or a positive integer, got {s:?}"))
}

fn apply_overrides(spec: &mut ExperimentSpec, opts: &GlobalOpts) {
    if let Some(seed) = opts.seed {
        spec.master_seed = seed;
    }
    if let Some(w) = opts.workers {
        spec.workers = w;
    }
    if let Some(out) = &opts.out {
        spec.output = Some(out.clone());
    }
}

fn run(spec: &ExperimentSpec, plot_data: Option<&Path>) -> anyhow::Result<()> {
    let result = run_experiment(spec)?;
    print!("{}", result.summary_text());
    let rows = result.csv_rows();
    match &spec.output {
        Some(path) => {
            write_csv(path, &rows)?;
            eprintln!("wrote {}", path.display());
            if let Some(field) = &result.field {
                let field_path = path.with_extension("field.txt");
                std::fs::write(&field_path, field.to_record())
                    .with_context(|| format!("writing {}", field_path.display()))?;
            }
        }
        None => write_csv_to(std::io::stdout().lock(), &rows)?,
    }
    if let Some(path) = plot_data {
        write_plot_data(path, &emit_plot_data(&rows)?)?;
    }
    Ok(())
}

fn main_inner(cli: Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Run { config } => {
            let text = std::fs::read_to_string(config)
                .with_context(|| format!("reading config {}", config.display()))?;
            let mut spec =
                parse_config(&text).with_context(|| format!("parsing {}", config.display()))?;
            apply_overrides(&mut spec, &cli.global);
            run(&spec, cli.global.plot_data.as_deref())
        }
        Command::Preset {
            table,
            row,
            scale_n,
            print_config,
        } => {
            let mut spec = preset(*table, *row, *scale_n)?;
            apply_overrides(&mut spec, &cli.global);
            if *print_config {
                print!("{}", serialize_config(&spec));
                return Ok(());
            }
            run(&spec, cli.global.plot_data.as_deref())
        }
        Command::Plot { inputs } => {
            let mut rows = Vec::new();
            for path in inputs {
                rows.extend(read_csv(path)?);
            }
            let records = emit_plot_data(&rows)?;
            let Some(out) = cli.global.plot_data.as_ref().or(cli.global.out.as_ref()) else {
                bail!("plot needs --plot-data or --out");
            };
            write_plot_data(out, &records)?;
            eprintln!("wrote {} records to {}", records.len(), out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if matches!(
                err.downcast_ref::<Error>(),
                Some(Error::BudgetExceeded { .. })
            ) {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
