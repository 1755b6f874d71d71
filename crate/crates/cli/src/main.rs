//! `qsarbench` command line.

mod selfcheck;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qsarbench::harness::{write_report, Harness, HarnessError, RunConfig};
use qsarbench::metrics::read_metrics_csv;
use qsarbench::report::{Format, TaskGroups};

#[derive(Parser, Debug)]
#[command(name = "qsarbench", version, about = "Structure-separated cross-validation benchmark for molecular property prediction")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    /// Only errors.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the global seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, env = "QSARBENCH_OUT")]
    out: Option<PathBuf>,
    /// Worker cap (0 = all cores).
    #[arg(long, env = "QSARBENCH_JOBS")]
    jobs: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct ReportArgs {
    /// JSON run configuration; optional when only fixtures are reported.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "QSARBENCH_OUT")]
    out: Option<PathBuf>,
    #[arg(long, env = "QSARBENCH_JOBS")]
    jobs: Option<usize>,
    /// Metrics CSV of published values (with `task_groups.csv` beside it),
    /// or a directory holding `reference_tables.csv` and `task_groups.csv`.
    #[arg(long)]
    fixtures: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "markdown")]
    format: FormatArg,
}

#[derive(clap::ValueEnum, Debug, Clone, Copy)]
enum FormatArg {
    Csv,
    Markdown,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Markdown => Format::Markdown,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Ingest datasets and write structure-separated fold assignments.
    Split(RunArgs),
    /// Compute and cache feature matrices.
    Featurize(RunArgs),
    /// Fit every (task, model, fold) cell and write held-out predictions.
    Train(RunArgs),
    /// Score predictions into metrics.csv.
    Evaluate(RunArgs),
    /// Induce SAR rules per train fold and export the rule tables.
    SarInduce(RunArgs),
    /// Aggregate metrics into the report tables.
    Report(ReportArgs),
    /// split, featurize, train, evaluate, sar-induce and report in order.
    RunAll {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value = "markdown")]
        format: FormatArg,
    },
    /// Check metrics, canonicalization and learners against brute-force oracles.
    Selfcheck,
}

fn load_config(path: &Path, seed: Option<u64>, out: Option<&Path>, jobs: Option<usize>) -> Result<RunConfig, HarnessError> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = out {
        // command-line paths are relative to the working directory
        cfg.out = std::env::current_dir()
            .map(|d| d.join(o))
            .unwrap_or_else(|_| o.to_path_buf());
    }
    if let Some(j) = jobs {
        cfg.jobs = j;
    }
    Ok(cfg)
}

fn harness(a: &RunArgs) -> Result<Harness, HarnessError> {
    Harness::new(load_config(&a.config, a.seed, a.out.as_deref(), a.jobs)?)
}

fn read_fixtures(path: &Path) -> Result<(Vec<qsarbench::metrics::MetricRecord>, TaskGroups), HarnessError> {
    let (table, groups) = if path.is_dir() {
        (path.join("reference_tables.csv"), path.join("task_groups.csv"))
    } else {
        let dir = path.parent().unwrap_or(Path::new("."));
        (path.to_path_buf(), dir.join("task_groups.csv"))
    };
    let file = std::fs::File::open(&table)
        .map_err(|e| HarnessError::Data(format!("cannot open fixtures {}: {e}", table.display())))?;
    let records = read_metrics_csv(file).map_err(|e| HarnessError::Data(format!("{}: {e}", table.display())))?;
    let groups = TaskGroups::read_csv(&groups).map_err(|e| HarnessError::Data(format!("{}: {e}", groups.display())))?;
    Ok((records, groups))
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Split(a) => {
            let folds = harness(&a)?.split()?;
            for fa in folds {
                println!("{}: {} molecules, fold sizes {:?}", fa.task, fa.folds.len(), fa.sizes);
            }
        }
        Command::Featurize(a) => harness(&a)?.featurize()?,
        Command::Train(a) => {
            let cells = harness(&a)?.train()?;
            let failed = cells.iter().filter(|c| c.status != qsarbench::harness::CellStatus::Done).count();
            println!("{} cells, {} not done", cells.len(), failed);
        }
        Command::Evaluate(a) => {
            let mut h = harness(&a)?;
            let n = h.evaluate()?.len();
            let digest = qsarbench::harness::sha256_hex(&std::fs::read(h.out_dir().join("metrics.csv")).unwrap_or_default());
            println!("{n} metric records, metrics.csv sha256 {digest}");
        }
        Command::SarInduce(a) => {
            for p in harness(&a)?.sar_induce()? {
                println!("{}", p.display());
            }
        }
        Command::Report(a) => {
            let extra = a.fixtures.as_deref().map(read_fixtures).transpose()?;
            let format = Format::from(a.format);
            let report = match &a.config {
                Some(c) => {
                    let mut h = Harness::new(load_config(c, a.seed, a.out.as_deref(), a.jobs)?)?;
                    h.report(format, extra)?
                }
                None => {
                    let (records, groups) = extra.ok_or_else(|| {
                        HarnessError::Config("report needs --config, --fixtures, or both".into())
                    })?;
                    let out = a.out.clone().unwrap_or_else(|| PathBuf::from("."));
                    write_report(&out.join("report"), &records, &groups, format, Vec::new())?
                }
            };
            for row in &report.winners {
                println!(
                    "{} | {} | n={} | {} | {}",
                    row.group,
                    qsarbench::report::metric_label(row.metric),
                    row.columns,
                    row.wins.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(" / "),
                    row.leading
                );
            }
        }
        Command::RunAll { run, format } => {
            let mut h = harness(&run)?;
            h.run_all(format.into())?;
            let digest = qsarbench::harness::sha256_hex(
                &std::fs::read(h.out_dir().join("metrics.csv")).map_err(|e| HarnessError::Internal(e.to_string()))?,
            );
            println!("run written to {}", h.out_dir().display());
            println!("metrics.csv sha256 {digest}");
        }
        Command::Selfcheck => {
            let results = selfcheck::run_all();
            let mut ok = true;
            for (name, passed, detail) in &results {
                println!("{} {name}: {detail}", if *passed { "PASS" } else { "FAIL" });
                ok &= passed;
            }
            if !ok {
                return Err(HarnessError::Internal("selfcheck failed".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            let err = serde_json::json!({"error": "usage", "message": e.kind().to_string(), "exit_code": 2});
            eprintln!("{err}");
            return ExitCode::from(2);
        }
    };
    let level = if cli.quiet {
        "error"
    } else {
        match cli.verbose {
            0 => "warn",
            1 => "info",
            _ => "debug",
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = e.exit_code();
            let err = serde_json::json!({"error": e.kind(), "message": e.to_string(), "exit_code": code});
            eprintln!("{err}");
            ExitCode::from(code as u8)
        }
    }
}
