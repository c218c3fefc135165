//! Command-line front end: run scenarios, sweep parameters, ingest traces.

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use ipsim::config::RunConfig;
use ipsim::ingest::{self, ColumnMap};
use ipsim::scenario::{self, SweepAxis};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;
const EXIT_BAD_TRACE: u8 = 4;

#[derive(Parser)]
#[command(name = "ipsim", about = "IP pool allocation policy simulator", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one simulation run and write its statistics.
    Run(RunArgs),
    /// Run one simulation per value of a config axis and summarize.
    Sweep(SweepArgs),
    /// Normalize an external allocation trace for replay.
    Ingest(IngestArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output path prefix; writes <out>.json and <out>.csv.
    #[arg(long)]
    out: PathBuf,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Config axis to vary: ar_max, alpha or tenant_budget.
    #[arg(long)]
    axis: SweepAxis,
    /// Comma-separated axis values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    /// Worker threads; results are identical for any value.
    #[arg(long, default_value_t = 1)]
    parallel: usize,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct IngestArgs {
    /// Input trace(s); `.gz` inputs are decompressed transparently. With
    /// several inputs, tenants are namespaced per file (cluster label).
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    /// Output path for the normalized trace CSV.
    #[arg(long)]
    out: PathBuf,
    /// Column layout `user=I,start=J,end=K` for external job datasets;
    /// defaults to the normalized three-column layout.
    #[arg(long)]
    columns: Option<String>,
    /// Divide raw timestamps by this factor to reach seconds.
    #[arg(long, default_value_t = 1)]
    time_divisor: u64,
    /// Drop jobs running past this horizon (only with --columns).
    #[arg(long)]
    horizon_days: Option<u64>,
    /// Reject the input when more than this fraction of lines is malformed.
    #[arg(long, default_value_t = 0.01)]
    max_error_rate: f64,
    /// Where to write per-line errors; defaults to <out>.errors.
    #[arg(long)]
    report: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Ingest(args) => cmd_ingest(args),
    }
}

fn load_config(path: &Path, seed_override: Option<u64>) -> Result<RunConfig, ExitCode> {
    match RunConfig::from_json_file(path) {
        Ok(mut cfg) => {
            if let Some(seed) = seed_override {
                cfg.seed = seed;
            }
            Ok(cfg)
        }
        Err(e) => {
            eprintln!("ipsim: config error: {e}");
            Err(ExitCode::from(EXIT_CONFIG))
        }
    }
}

/// `--out` is a prefix: extensions are appended, never substituted, so
/// dotted path stems stay intact.
fn append_extension(path: &Path, ext: &str) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn provenance(cfg: &RunConfig) -> Vec<String> {
    vec![
        format!("ipsim {}", env!("CARGO_PKG_VERSION")),
        format!("scenario={}", cfg.scenario),
        format!("policy={}", cfg.policy),
        format!("seed={}", cfg.seed),
        format!(
            "config={}",
            serde_json::to_string(cfg).expect("config serializes")
        ),
    ]
}

fn cmd_run(args: RunArgs) -> ExitCode {
    let cfg = match load_config(&args.config, args.seed) {
        Ok(cfg) => cfg,
        Err(code) => return code,
    };
    let stats = match scenario::run_scenario(&cfg) {
        Ok(stats) => stats,
        Err(e @ scenario::ScenarioError::Sim(_)) => {
            eprintln!("ipsim: runtime error: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
        Err(e) => {
            eprintln!("ipsim: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };

    let artifact = serde_json::json!({
        "config": cfg,
        "summary": {
            "unique_ip_yield": stats.unique_ip_yield(),
            "lc_yield": stats.lc_yield(),
            "ar_max_observed": stats.ar_max_observed,
            "total_allocations": stats.total_allocations,
            "adversary_allocations": stats.adversary_allocations,
            "pool_exhausted": stats.pool_exhausted,
        },
        "stats": stats,
    });
    let json_path = append_extension(&args.out, "json");
    let csv_path = append_extension(&args.out, "csv");
    let written = std::fs::write(
        &json_path,
        serde_json::to_string_pretty(&artifact).expect("stats serialize"),
    )
    .and_then(|_| std::fs::write(&csv_path, stats.series_csv(&provenance(&cfg))));
    if let Err(e) = written {
        eprintln!("ipsim: failed to write outputs: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }

    println!(
        "run complete: {} simulated seconds, {} allocations, ar_max {:.4}",
        stats.simulated_seconds, stats.total_allocations, stats.ar_max_observed
    );
    if let Some(y) = stats.unique_ip_yield() {
        println!(
            "adversary: {} allocations, unique-IP yield {:.4}, lc yield {:.4}",
            stats.adversary_allocations,
            y,
            stats.lc_yield().unwrap_or(0.0)
        );
    }
    println!("wrote {} and {}", json_path.display(), csv_path.display());
    ExitCode::SUCCESS
}

fn cmd_sweep(args: SweepArgs) -> ExitCode {
    let cfg = match load_config(&args.config, args.seed) {
        Ok(cfg) => cfg,
        Err(code) => return code,
    };
    if args.values.is_empty() {
        eprintln!("ipsim: sweep needs at least one value");
        return ExitCode::from(EXIT_CONFIG);
    }
    let points = scenario::run_sweep(&cfg, args.axis, &args.values, args.parallel);
    let mut header = provenance(&cfg);
    header.push(format!("axis={}", args.axis.name()));
    let csv = scenario::sweep_csv(args.axis, &points, &header);
    if let Err(e) = std::fs::write(&args.out, csv) {
        eprintln!("ipsim: failed to write {}: {e}", args.out.display());
        return ExitCode::from(EXIT_CONFIG);
    }
    let failed = points.iter().filter(|p| p.result.is_err()).count();
    println!(
        "sweep complete: {} points, {} failed, wrote {}",
        points.len(),
        failed,
        args.out.display()
    );
    ExitCode::SUCCESS
}

fn parse_column_spec(spec: &str, time_divisor: u64) -> anyhow::Result<ColumnMap> {
    let mut map = ColumnMap {
        time_divisor,
        ..ColumnMap::default()
    };
    for part in spec.split(',') {
        let (key, value) = part
            .split_once('=')
            .with_context(|| format!("bad column spec item {part:?}"))?;
        let idx: usize = value
            .trim()
            .parse()
            .with_context(|| format!("bad column index {value:?}"))?;
        match key.trim() {
            "user" => map.user = idx,
            "start" => map.start = idx,
            "end" => map.end = idx,
            other => anyhow::bail!("unknown column key {other:?}"),
        }
    }
    Ok(map)
}

fn file_label(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn cmd_ingest(args: IngestArgs) -> ExitCode {
    let mut readers = Vec::new();
    for path in &args.input {
        match ingest::open_trace_reader(path) {
            Ok(r) => readers.push((file_label(path), r)),
            Err(e) => {
                eprintln!("ipsim: {e}");
                return ExitCode::from(EXIT_CONFIG);
            }
        }
    }
    let multi = readers.len() > 1;

    let parsed = if let Some(spec) = &args.columns {
        let map = match parse_column_spec(spec, args.time_divisor) {
            Ok(map) => map,
            Err(e) => {
                eprintln!("ipsim: {e}");
                return ExitCode::from(EXIT_CONFIG);
            }
        };
        let horizon = args
            .horizon_days
            .unwrap_or(u64::MAX / ipsim::time::DAY_SECONDS);
        let mut all_records = Vec::new();
        let mut all_errors = Vec::new();
        let mut all_lines = 0u64;
        let mut failed = None;
        for (label, reader) in readers {
            match ingest::parse_jobs_csv(reader, map, 1.0) {
                Ok((mut records, errors, lines)) => {
                    if multi {
                        for r in &mut records {
                            r.user = format!("{label}/{}", r.user);
                        }
                    }
                    all_records.extend(records);
                    all_errors.extend(errors);
                    all_lines += lines;
                }
                Err(e) => {
                    failed = Some(e);
                    break;
                }
            }
        }
        match failed {
            Some(e) => Err(e),
            None => {
                // The error budget applies across all inputs together.
                if !all_errors.is_empty()
                    && all_errors.len() as f64 / all_lines as f64 > args.max_error_rate
                {
                    Err(ingest::IngestError::TooManyErrors {
                        bad: all_errors.len() as u64,
                        total: all_lines,
                        rate: all_errors.len() as f64 / all_lines as f64 * 100.0,
                        limit: args.max_error_rate * 100.0,
                        first_line: all_errors[0].line,
                        first_message: all_errors[0].message.clone(),
                    })
                } else {
                    let mut parsed = ingest::jobs_to_allocations(all_records, horizon);
                    parsed.line_errors = all_errors;
                    parsed.lines_read = all_lines;
                    Ok(parsed)
                }
            }
        }
    } else {
        ingest::parse_many_allocation_csv(readers, args.max_error_rate)
    };

    let parsed = match parsed {
        Ok(p) => p,
        Err(e @ ingest::IngestError::TooManyErrors { .. }) => {
            eprintln!("ipsim: {e}");
            return ExitCode::from(EXIT_BAD_TRACE);
        }
        Err(e) => {
            eprintln!("ipsim: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };

    let mut out = Vec::new();
    if let Err(e) = ingest::write_trace_csv(&parsed.events, &mut out)
        .and_then(|_| std::fs::write(&args.out, &out))
    {
        eprintln!("ipsim: failed to write {}: {e}", args.out.display());
        return ExitCode::from(EXIT_CONFIG);
    }

    let report_path = args
        .report
        .unwrap_or_else(|| append_extension(&args.out, "errors"));
    if !parsed.line_errors.is_empty() {
        let mut report = String::new();
        for e in &parsed.line_errors {
            report.push_str(&format!("line {}: {}\n", e.line, e.message));
        }
        if let Err(e) = std::fs::write(&report_path, report) {
            eprintln!("ipsim: failed to write {}: {e}", report_path.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    }

    println!(
        "ingested {} events from {} tenants (max concurrency {}); {} lines malformed, {} records dropped",
        parsed.events.len(),
        parsed.tenant_count,
        parsed.max_concurrency(),
        parsed.line_errors.len(),
        parsed.records_dropped,
    );
    println!("wrote {}", args.out.display());
    ExitCode::SUCCESS
}
