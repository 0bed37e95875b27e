use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use simcare_core::engine::RunOptions;
use simcare_core::experiment::{run_replications_traced, ExperimentConfig};
use simcare_core::generate::{
    apply_whatif, assemble_scenario, read_physicians, retired_by, GeneratorParams, Transform,
};
use simcare_core::metrics::{compare_reports, read_csv_report, Report};
use simcare_core::scenario::{from_scenario_file, load_scenario, save_scenario};

#[derive(Parser)]
#[command(name = "simcare", version, about = "Agent-based simulation of a regional primary care system")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ReportFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CompareFormat {
    Table,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario repeatedly and report indicator means with 95% confidence intervals.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 20)]
        runs: u32,
        /// Seed of the first run; run i uses seed + i.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        warmup_years: Option<f64>,
        #[arg(long)]
        horizon_years: Option<f64>,
        /// Worker threads; defaults to the number of logical cores.
        #[arg(long)]
        threads: Option<usize>,
        /// Report file; standard output if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
        format: ReportFormat,
        /// Also write per-year indicator values next to the report.
        #[arg(long)]
        per_year: bool,
        /// Write the event trace of the first run to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Put reports side by side with relative changes against the first.
    Compare {
        #[arg(required = true, num_args = 2..)]
        reports: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = CompareFormat::Table)]
        format: CompareFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a scenario file from population cells, physicians and parameters.
    Generate {
        #[arg(long)]
        cells: PathBuf,
        #[arg(long)]
        municipalities: PathBuf,
        #[arg(long)]
        physicians: PathBuf,
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Derive a variant of a scenario.
    Whatif {
        #[arg(long)]
        scenario: PathBuf,
        /// Physician ids to remove.
        #[arg(long, value_delimiter = ',')]
        remove: Vec<String>,
        /// Remove every physician whose retirement year is this year or earlier.
        #[arg(long)]
        retired_by: Option<u32>,
        /// New age class distribution, e.g. `16-24=0.1051,25-65=0.6283,65+=0.2666`.
        #[arg(long, value_parser = parse_shares)]
        age_distribution: Option<BTreeMap<String, f64>>,
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_shares(text: &str) -> Result<BTreeMap<String, f64>, String> {
    text.split(',')
        .map(|pair| {
            let (id, share) = pair.split_once('=').ok_or_else(|| format!("expected id=share, got {pair:?}"))?;
            let share: f64 = share.trim().parse().map_err(|e| format!("{pair:?}: {e}"))?;
            Ok((id.trim().to_string(), share))
        })
        .collect()
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn per_year_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.per_year.csv"))
}

#[allow(clippy::too_many_arguments)]
fn run(
    scenario: &Path,
    runs: u32,
    seed: u64,
    warmup_years: Option<f64>,
    horizon_years: Option<f64>,
    threads: Option<usize>,
    out: Option<&Path>,
    format: ReportFormat,
    per_year: bool,
    trace: Option<&Path>,
) -> Result<()> {
    if runs == 0 {
        bail!("--runs must be at least 1");
    }
    if threads == Some(0) {
        bail!("--threads must be at least 1");
    }
    if per_year && out.is_none() {
        bail!("--per-year needs --out to name the report file");
    }
    let scenario = load_scenario(scenario)?;
    let warmup_years = warmup_years.unwrap_or(scenario.run_config.warmup_years);
    let horizon_years = horizon_years.unwrap_or(scenario.run_config.horizon_years);
    if !(warmup_years >= 0.0 && warmup_years.is_finite()) || !(horizon_years > 0.0 && horizon_years.is_finite()) {
        bail!("warm-up must be non-negative and the horizon positive");
    }
    let mut options = RunOptions::new(warmup_years, horizon_years);
    options.per_year = per_year;
    let config = ExperimentConfig {
        runs,
        base_seed: seed,
        options,
        threads,
    };
    let trace_out: Option<Box<dyn Write + Send>> = match trace {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            Some(Box::new(BufWriter::new(file)))
        }
        None => None,
    };
    let kpis = run_replications_traced(&scenario, &config, trace_out)?;
    let report = Report::from_runs(&scenario.name, warmup_years, horizon_years, &kpis);
    let text = match format {
        ReportFormat::Csv => report.to_csv(),
        ReportFormat::Json => report.to_json(),
    };
    write_output(out, &text)?;
    if let (true, Some(out)) = (per_year, out) {
        let path = per_year_path(out);
        std::fs::write(&path, report.per_year_csv()).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn compare(paths: &[PathBuf], format: CompareFormat, out: Option<&Path>) -> Result<()> {
    let reports = paths
        .iter()
        .map(|p| {
            let label = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| p.display().to_string());
            read_csv_report(p).map(|r| (label, r)).map_err(anyhow::Error::msg)
        })
        .collect::<Result<Vec<_>>>()?;
    let comparison = compare_reports(&reports).map_err(anyhow::Error::msg)?;
    let text = match format {
        CompareFormat::Table => comparison.to_table(),
        CompareFormat::Csv => comparison.to_csv(),
    };
    write_output(out, &text)
}

fn generate(
    cells: &Path,
    municipalities: &Path,
    physicians: &Path,
    params: &Path,
    seed: Option<u64>,
    out: &Path,
) -> Result<()> {
    let text = std::fs::read_to_string(params).with_context(|| format!("reading {}", params.display()))?;
    let params: GeneratorParams =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", params.display()))?;
    let physicians = read_physicians(physicians, &params.strategies)?;
    let out_dir = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let seed = seed.unwrap_or(params.meta.seed);
    let file = assemble_scenario(&params, physicians, cells, municipalities, seed, &out_dir);
    // Load once to validate and to make sure the population can be synthesized.
    let base = std::path::absolute(&out_dir)?;
    from_scenario_file(&file, &base, &out.display().to_string())?;
    let mut text = serde_json::to_string_pretty(&file)?;
    text.push('\n');
    std::fs::write(out, text).with_context(|| format!("writing {}", out.display()))
}

fn whatif(
    scenario_path: &Path,
    remove: &[String],
    retired: Option<u32>,
    ages: Option<&BTreeMap<String, f64>>,
    name: Option<&str>,
    out: &Path,
) -> Result<()> {
    let scenario = load_scenario(scenario_path)?;
    let mut ids = remove.to_vec();
    if let Some(year) = retired {
        ids.extend(retired_by(&scenario, year).into_iter().filter(|id| !remove.contains(id)));
    }
    let mut transforms = Vec::new();
    if !ids.is_empty() {
        transforms.push(Transform::RemovePhysicians(ids));
    }
    if let Some(shares) = ages {
        transforms.push(Transform::Reage(shares.clone()));
    }
    let mut variant = apply_whatif(&scenario, &transforms)?;
    if let Some(name) = name {
        variant.name = name.to_string();
    }
    save_scenario(&variant, out, false)?;
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            scenario,
            runs,
            seed,
            warmup_years,
            horizon_years,
            threads,
            out,
            format,
            per_year,
            trace,
        } => run(
            &scenario,
            runs,
            seed,
            warmup_years,
            horizon_years,
            threads,
            out.as_deref(),
            format,
            per_year,
            trace.as_deref(),
        ),
        Command::Compare { reports, format, out } => compare(&reports, format, out.as_deref()),
        Command::Generate {
            cells,
            municipalities,
            physicians,
            params,
            seed,
            out,
        } => generate(&cells, &municipalities, &physicians, &params, seed, &out),
        Command::Whatif {
            scenario,
            remove,
            retired_by,
            age_distribution,
            name,
            out,
        } => whatif(&scenario, &remove, retired_by, age_distribution.as_ref(), name.as_deref(), &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
