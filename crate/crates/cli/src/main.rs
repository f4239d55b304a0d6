use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use onsager_lab::fieldlab::io::write_field;
use onsager_lab::study::{self, ExperimentConfig, StudyReport};
use onsager_lab::LabError;

/// Environment override for `workers` in the config.
const WORKERS_ENV: &str = "ONSAGER_LAB_WORKERS";

const EXIT_FAIL: u8 = 2;
const EXIT_USAGE: u8 = 1;

#[derive(Parser)]
#[command(name = "onsager-lab", version, about = "Energy-conservation studies for compressible flow with vacuum")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a study and write report.json plus CSV and .dat series.
    Run {
        config: PathBuf,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Consolidate one or more study outputs into a summary table.
    Report {
        /// Output directories or report.json files.
        dirs: Vec<PathBuf>,
        /// Print the summary as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Write a generated field to disk (`.csv` as CSV, anything else binary).
    ExportField {
        field: FieldName,
        path: PathBuf,
        /// Config whose generators produce the field.
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FieldName {
    Density,
    Velocity,
}

enum Failure {
    Usage(String),
    Assertions(Vec<String>),
}

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::from_toml(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        cfg.workers = v
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("{WORKERS_ENV} must be a non-negative integer, got {v:?}")))?;
    }
    Ok(cfg)
}

fn run(config: &Path, out: Option<PathBuf>) -> Result<(), Failure> {
    let cfg = load_config(config)?;
    let dir = out
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out").join(cfg.study.name()));
    let report = study::run_study(&cfg)?;
    study::write_outputs(&report, &dir)?;
    for q in &report.quantities {
        println!("{:<36} {:>14.6e}  {:?}", q.name, q.measured, q.verdict);
    }
    println!("wrote {}", dir.display());
    if report.pass {
        Ok(())
    } else {
        Err(Failure::Assertions(report.failures))
    }
}

fn report(dirs: &[PathBuf], json: bool) -> Result<(), Failure> {
    if dirs.is_empty() {
        return Err(Failure::Usage("report needs at least one study output".into()));
    }
    let reports = dirs.iter().map(|d| study::read_report(d)).collect::<Result<Vec<StudyReport>, _>>()?;
    let summary = study::summarize(&reports)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&summary).map_err(LabError::from)?);
    } else {
        print!("{}", summary.render());
    }
    if summary.pass {
        Ok(())
    } else {
        let failed = reports
            .iter()
            .flat_map(|r| r.failures.iter().map(move |f| format!("{}:{f}", r.study.name())))
            .collect();
        Err(Failure::Assertions(failed))
    }
}

fn export_field(field: FieldName, path: &Path, config: &Path) -> Result<(), Failure> {
    let cfg = load_config(config)?;
    let (rho, u) = study::generate_fields(&cfg)?;
    let f = match field {
        FieldName::Density => rho,
        FieldName::Velocity => u.ok_or_else(|| Failure::Usage("this config generates no velocity".into()))?,
    };
    write_field(&f, path)?;
    println!("wrote {} ({} nodes, {} components)", path.display(), f.grid().node_count(), f.components());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run { config, out } => run(&config, out),
        Command::Report { dirs, json } => report(&dirs, json),
        Command::ExportField { field, path, config } => export_field(field, &path, &config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Assertions(names)) => {
            // Machine-readable failure list on stderr.
            eprintln!("{}", serde_json::json!({ "failures": names }));
            ExitCode::from(EXIT_FAIL)
        }
    }
}
