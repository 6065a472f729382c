//! Command-line front end: trace generation, session ingestion, single
//! runs, grid sweeps, and scatter export.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::bench::{self, SweepConfig};
use crate::cache::{CacheConfig, CacheEngine, ObjectId, Outcome, Policy};
use crate::metrics::{self, MetadataStats};
use crate::workload::{self, Trace, ZipfSpec};
use crate::Real;

#[derive(Debug, Parser)]
#[command(
    name = "cachesim",
    about = "Trace-driven cache management simulator and benchmark harness",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a seeded Zipf-distributed request trace
    Generate(GenerateArgs),
    /// Convert a viewing-session CSV into a request trace
    Ingest(IngestArgs),
    /// Replay a trace through one policy and report hit statistics
    Run(RunArgs),
    /// Run the (object count x cache rate) benchmark grid
    Sweep(SweepArgs),
    /// Export rank-order hit/miss scatter data for a trace replay
    Scatter(ScatterArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Number of distinct objects (Zipf ranks)
    #[arg(long)]
    n: usize,
    /// Zipf exponent
    #[arg(long, default_value_t = 1.1)]
    alpha: Real,
    /// Trace length
    #[arg(long)]
    requests: usize,
    /// PRNG seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output trace file (one object id per line)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Session CSV with header `start,end,content_id`
    #[arg(long)]
    input: PathBuf,
    /// Minimum session duration in seconds
    #[arg(long, default_value_t = 60)]
    min_duration: i64,
    /// Observation window start (epoch seconds; default: unbounded)
    #[arg(long)]
    window_start: Option<i64>,
    /// Observation window end (epoch seconds; default: unbounded)
    #[arg(long)]
    window_end: Option<i64>,
    /// Output trace file
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PolicyRunArgs {
    /// Input trace file
    #[arg(long)]
    trace: PathBuf,
    /// Cache policy: lfu, plfu, or plfua
    #[arg(long)]
    policy: Policy,
    /// Cache size as a fraction of the trace's distinct object count
    #[arg(long, conflicts_with = "capacity")]
    rate: Option<Real>,
    /// Cache size as an object count
    #[arg(long)]
    capacity: Option<usize>,
    /// File with one hot object id per line (plfua only); defaults to a
    /// frequency pre-pass over the trace itself
    #[arg(long)]
    hotset_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    common: PolicyRunArgs,
    /// Output report JSON
    #[arg(long)]
    report: PathBuf,
    /// Optional per-request event CSV
    #[arg(long)]
    events: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScatterArgs {
    #[command(flatten)]
    common: PolicyRunArgs,
    /// Output scatter CSV (`rank,occurrence_index,outcome`)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Output directory for grid CSVs and the manifest
    #[arg(long)]
    outdir: PathBuf,
    /// Sweep config JSON; defaults to the full 60-case grid
    #[arg(long)]
    config: Option<PathBuf>,
    /// Drop grid rows with more objects than this
    #[arg(long)]
    max_n: Option<usize>,
    /// Comma-separated policy list, e.g. `lfu,plfu,plfua`
    #[arg(long, value_delimiter = ',')]
    policies: Option<Vec<Policy>>,
    /// Samples per grid cell
    #[arg(long)]
    samples: Option<usize>,
    /// Requests per sample
    #[arg(long)]
    requests: Option<usize>,
    /// Base seed for per-cell trace derivation
    #[arg(long)]
    base_seed: Option<u64>,
    /// Worker threads for sweep cells; 1 keeps all timing on one thread
    #[arg(long, default_value_t = 1)]
    parallel: usize,
}

/// Parse `args` and execute. Returns an error for any failure; the
/// binary maps that to a nonzero exit code.
pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args)?.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Ingest(a) => cmd_ingest(a),
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Scatter(a) => cmd_scatter(a),
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let spec = ZipfSpec {
        n_objects: args.n,
        alpha: args.alpha,
        n_requests: args.requests,
        seed: args.seed,
    };
    let trace = workload::generate(&spec)?;
    write_out(&args.out, |w| trace.write_to(w))?;
    println!(
        "wrote {} requests over {} objects (zipf alpha={}, seed={}) to {}",
        trace.len(),
        spec.n_objects,
        spec.alpha,
        spec.seed,
        args.out.display()
    );
    Ok(())
}

fn cmd_ingest(args: IngestArgs) -> Result<()> {
    let file = File::open(&args.input)
        .with_context(|| format!("cannot open {}", args.input.display()))?;
    let records = workload::read_session_csv(BufReader::new(file))?;
    let window = (
        args.window_start.unwrap_or(i64::MIN),
        args.window_end.unwrap_or(i64::MAX),
    );
    let trace = workload::ingest_sessions(
        &records,
        args.min_duration,
        window,
        &args.input.display().to_string(),
    )?;
    write_out(&args.out, |w| trace.write_to(w))?;
    println!(
        "kept {} of {} sessions -> {}",
        trace.len(),
        records.len(),
        args.out.display()
    );
    Ok(())
}

/// Resolve trace, capacity, and (for plfua) the hot set shared by `run`
/// and `scatter`.
fn prepare(common: &PolicyRunArgs) -> Result<(Trace, CacheEngine)> {
    let trace = Trace::read_from_path(&common.trace)?;
    let capacity = match (common.rate, common.capacity) {
        (Some(rate), None) => {
            if !(0.0 < rate && rate < 1.0) {
                bail!("--rate must lie in (0, 1)");
            }
            bench::capacity_for(rate, trace.distinct_count())
        }
        (None, Some(capacity)) => capacity,
        _ => bail!("exactly one of --rate or --capacity is required"),
    };
    let hot_set = match (&common.policy, &common.hotset_file) {
        (Policy::Plfua, Some(path)) => Some(read_hot_set(path)?),
        (Policy::Plfua, None) => Some(workload::hot_set(&trace, capacity)?),
        (_, Some(_)) => bail!("--hotset-file only applies to --policy plfua"),
        (_, None) => None,
    };
    let engine = CacheEngine::new(CacheConfig {
        capacity,
        policy: common.policy,
        hot_set,
    })?;
    Ok((trace, engine))
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let (trace, mut engine) = prepare(&args.common)?;
    if trace.is_empty() {
        bail!("trace {} is empty", args.common.trace.display());
    }
    let events = engine.replay(&trace);
    let (peak_resident, peak_parked) = engine.metadata_peaks();
    let (final_resident, final_parked) = engine.metadata_size();
    let report = metrics::summarize(
        &events,
        MetadataStats { peak_resident, peak_parked, final_resident, final_parked },
    )?;
    write_out(&args.report, |w| {
        serde_json::to_writer_pretty(&mut *w, &report)?;
        w.write_all(b"\n")
    })?;
    if let Some(path) = &args.events {
        write_out(path, |w| {
            writeln!(w, "seq,object,outcome,evicted")?;
            for e in &events {
                let evicted = e.evicted.map(|v| v.to_string()).unwrap_or_default();
                writeln!(w, "{},{},{},{}", e.seq, e.object, outcome_str(e.outcome), evicted)?;
            }
            Ok(())
        })?;
    }
    println!(
        "{} C={} chr={:.4} ({} hits / {} requests)",
        engine.policy(),
        engine.capacity(),
        report.chr,
        report.hits,
        report.hits + report.misses
    );
    Ok(())
}

fn cmd_scatter(args: ScatterArgs) -> Result<()> {
    let (trace, mut engine) = prepare(&args.common)?;
    let events = engine.replay(&trace);
    let ranks = metrics::popularity_ranks(&trace);
    let points = metrics::scatter(&events, &ranks)?;
    write_out(&args.out, |w| {
        writeln!(w, "rank,occurrence_index,outcome")?;
        for p in &points {
            writeln!(w, "{},{},{}", p.rank, p.occurrence_index, outcome_str(p.outcome))?;
        }
        Ok(())
    })?;
    println!("wrote {} scatter points to {}", points.len(), args.out.display());
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => {
            let file = File::open(path)
                .with_context(|| format!("cannot open {}", path.display()))?;
            serde_json::from_reader::<_, SweepConfig>(BufReader::new(file))
                .with_context(|| format!("invalid sweep config {}", path.display()))?
        }
        None => bench::default_grid(),
    };
    if let Some(max_n) = args.max_n {
        config.object_counts.retain(|&n| n <= max_n);
    }
    if let Some(policies) = args.policies {
        config.policies = policies;
    }
    if let Some(samples) = args.samples {
        config.samples_per_case = samples;
    }
    if let Some(requests) = args.requests {
        config.requests_per_sample = requests;
    }
    if let Some(base_seed) = args.base_seed {
        config.base_seed = base_seed;
    }

    std::fs::create_dir_all(&args.outdir)
        .with_context(|| format!("cannot create {}", args.outdir.display()))?;
    let result = bench::run_sweep(&config, args.parallel)?;

    for (policy, grids) in &result.per_policy {
        for grid in [&grids.chr, &grids.cpu_seconds, &grids.peak_metadata] {
            let stem = format!("{policy}_{}", grid.metric.stem());
            write_out(&args.outdir.join(format!("{stem}.csv")), |w| grid.write_csv(w))?;
            write_out(&args.outdir.join(format!("{stem}.stddev.csv")), |w| {
                grid.write_stddev_csv(w)
            })?;
        }
    }
    write_out(&args.outdir.join("manifest.json"), |w| {
        serde_json::to_writer_pretty(&mut *w, &result.manifest())?;
        w.write_all(b"\n")
    })?;
    println!(
        "swept {} cases x {} policies into {}",
        config.object_counts.len() * config.rates.len(),
        config.policies.len(),
        args.outdir.display()
    );
    Ok(())
}

fn outcome_str(outcome: Outcome) -> &'static str {
    match outcome {
        Outcome::Hit => "hit",
        Outcome::Miss => "miss",
    }
}

fn read_hot_set(path: &Path) -> Result<HashSet<ObjectId>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut set = HashSet::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let id: u64 = trimmed
            .parse()
            .with_context(|| format!("{}:{}: `{trimmed}` is not an object id", path.display(), idx + 1))?;
        set.insert(ObjectId(id));
    }
    Ok(set)
}

fn write_out<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut writer = BufWriter::new(file);
    body(&mut writer).with_context(|| format!("cannot write {}", path.display()))?;
    writer.flush()?;
    Ok(())
}
