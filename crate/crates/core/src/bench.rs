//! Sweep harness: runs the (object count x cache rate) grid, timing the
//! management loop of each policy on shared traces.
//!
//! Timing covers only the access loop. Trace generation, engine
//! construction, and report assembly happen outside the timed region,
//! and the timed loop performs no allocation of its own beyond what the
//! engine's tables require. CPU time is read from the per-thread clock
//! where available, falling back to the process clock.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cache::{CacheConfig, CacheEngine, ConfigError, ObjectId, Outcome, Policy};
use crate::metrics::RunReport;
use crate::stats::{log_spaced, mean, stddev};
use crate::workload::{generate, Trace, WorkloadError, ZipfSpec};
use crate::Real;

/// Grid definition for [`run_sweep`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub object_counts: Vec<usize>,
    pub rates: Vec<Real>,
    pub policies: Vec<Policy>,
    pub samples_per_case: usize,
    pub requests_per_sample: usize,
    pub alpha: Real,
    pub base_seed: u64,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.object_counts.is_empty() || self.rates.is_empty() || self.policies.is_empty() {
            return Err(BenchError::Config(
                "object_counts, rates, and policies must be non-empty".into(),
            ));
        }
        if self.samples_per_case == 0 || self.requests_per_sample == 0 {
            return Err(BenchError::Config(
                "samples_per_case and requests_per_sample must be at least 1".into(),
            ));
        }
        if !(self.alpha > 0.0) {
            return Err(BenchError::Config("alpha must be positive".into()));
        }
        if !self.object_counts.windows(2).all(|w| w[0] < w[1]) {
            return Err(BenchError::Config(
                "object_counts must be strictly increasing".into(),
            ));
        }
        if !self.rates.windows(2).all(|w| w[0] < w[1]) {
            return Err(BenchError::Config("rates must be strictly increasing".into()));
        }
        for &rate in &self.rates {
            if !(0.0 < rate && rate < 1.0) {
                return Err(BenchError::Config(format!(
                    "rate {rate} is outside (0, 1)"
                )));
            }
            for &n in &self.object_counts {
                if (rate * n as Real).floor() < 1.0 {
                    return Err(BenchError::Config(format!(
                        "rate {rate} with {n} objects yields an empty cache"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Cache size for a (rate, object count) case: `floor(rate * n)`,
/// clamped to at least 1.
pub fn capacity_for(rate: Real, n_objects: usize) -> usize {
    ((rate * n_objects as Real).floor() as usize).max(1)
}

/// The 60-case grid: 10 object counts log-spaced over `[100, 100000]`,
/// 6 rates log-spaced over `[0.02, 0.25]`, 12 samples of 100,000
/// Zipf(1.1) requests per case, all three policies.
pub fn default_grid() -> SweepConfig {
    let object_counts = log_spaced(100.0_f64, 100_000.0, 10)
        .into_iter()
        .map(|x| x.round() as usize)
        .collect();
    SweepConfig {
        object_counts,
        rates: log_spaced(0.02, 0.25, 6),
        policies: Policy::ALL.to_vec(),
        samples_per_case: 12,
        requests_per_sample: 100_000,
        alpha: 1.1,
        base_seed: 0x5eed_cafe,
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("invalid sweep config: {0}")]
    Config(String),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Cache(#[from] ConfigError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("in case (n_objects={n_objects}, rate={rate}): {source}")]
    InCase {
        n_objects: usize,
        rate: Real,
        #[source]
        source: Box<BenchError>,
    },
}

// ---------------------------------------------------------------------
// CPU-time measurement

/// Which clock produced a measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimerSource {
    ThreadCpu,
    ProcessCpu,
}

fn read_clock(clock: libc::clockid_t) -> Option<Real> {
    let mut ts = libc::timespec { tv_sec: 0, tv_nsec: 0 };
    let rc = unsafe { libc::clock_gettime(clock, &mut ts) };
    (rc == 0).then(|| ts.tv_sec as Real + ts.tv_nsec as Real * 1e-9)
}

/// Current CPU time of this thread (preferred) or process.
pub fn cpu_now() -> Option<(Real, TimerSource)> {
    if let Some(t) = read_clock(libc::CLOCK_THREAD_CPUTIME_ID) {
        return Some((t, TimerSource::ThreadCpu));
    }
    read_clock(libc::CLOCK_PROCESS_CPUTIME_ID).map(|t| (t, TimerSource::ProcessCpu))
}

/// Resolution of the given clock in seconds.
pub fn clock_resolution(source: TimerSource) -> Option<Real> {
    let clock = match source {
        TimerSource::ThreadCpu => libc::CLOCK_THREAD_CPUTIME_ID,
        TimerSource::ProcessCpu => libc::CLOCK_PROCESS_CPUTIME_ID,
    };
    let mut ts = libc::timespec { tv_sec: 0, tv_nsec: 0 };
    let rc = unsafe { libc::clock_getres(clock, &mut ts) };
    (rc == 0).then(|| ts.tv_sec as Real + ts.tv_nsec as Real * 1e-9)
}

/// Result of one timed replay.
#[derive(Debug, Clone, Copy)]
pub struct TimedRun {
    pub report: RunReport,
    pub cpu_seconds: Real,
    pub timer: TimerSource,
    /// True when the measured interval exceeds the clock resolution by at
    /// least three orders of magnitude.
    pub resolution_ok: bool,
}

/// Replay `trace` through a fresh engine, measuring CPU time of the
/// access loop alone.
pub fn timed_run(
    policy: Policy,
    trace: &Trace,
    capacity: usize,
    hot_set: Option<&HashSet<ObjectId>>,
) -> Result<TimedRun, BenchError> {
    let config = CacheConfig {
        capacity,
        policy,
        hot_set: hot_set.cloned(),
    };
    let mut engine = CacheEngine::new(config)?;

    let (start, timer) = cpu_now().ok_or(BenchError::Config("no CPU clock available".into()))?;
    let mut hits = 0u64;
    for &id in &trace.requests {
        if engine.access(id).outcome == Outcome::Hit {
            hits += 1;
        }
    }
    let (end, _) = cpu_now().expect("clock read succeeded once already");
    let cpu_seconds = (end - start).max(0.0);

    let (peak_resident, peak_parked) = engine.metadata_peaks();
    let (final_resident, final_parked) = engine.metadata_size();
    let total = trace.len() as u64;
    let report = RunReport {
        hits,
        misses: total - hits,
        chr: hits as Real / total.max(1) as Real,
        peak_resident,
        peak_parked,
        final_resident,
        final_parked,
    };
    let resolution_ok = match clock_resolution(timer) {
        Some(res) => cpu_seconds >= 1000.0 * res,
        None => false,
    };
    Ok(TimedRun {
        report,
        cpu_seconds,
        timer,
        resolution_ok,
    })
}

// ---------------------------------------------------------------------
// Seed derivation

/// SplitMix64 finalizer.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Trace seed for one sweep sample: a pure hash of `(base_seed,
/// n_objects, rate in parts per million, sample index)`, so any cell is
/// reproducible in isolation.
pub fn derive_seed(base_seed: u64, n_objects: usize, rate: Real, sample: usize) -> u64 {
    let rate_ppm = (rate * 1e6).round() as u64;
    let mut h = splitmix64(base_seed);
    h = splitmix64(h ^ n_objects as u64);
    h = splitmix64(h ^ rate_ppm);
    splitmix64(h ^ sample as u64)
}

pub const SEED_RULE: &str = "seed = splitmix64-chain(base_seed, n_objects, round(rate*1e6), sample_index)";

// ---------------------------------------------------------------------
// Sweep execution

/// Which aggregate a [`SweepGrid`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    MeanChr,
    MeanCpuSeconds,
    MeanPeakMetadata,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::MeanChr, Metric::MeanCpuSeconds, Metric::MeanPeakMetadata];

    /// File stem used by the CSV exporter.
    pub fn stem(self) -> &'static str {
        match self {
            Metric::MeanChr => "mean_chr",
            Metric::MeanCpuSeconds => "mean_cpu_seconds",
            Metric::MeanPeakMetadata => "mean_peak_metadata",
        }
    }
}

/// Mean-value matrix over the sweep grid, rows indexed by object count
/// and columns by rate, with the per-cell sample standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub metric: Metric,
    pub rows: Vec<usize>,
    pub cols: Vec<Real>,
    pub values: Vec<Vec<Real>>,
    pub stddev: Vec<Vec<Real>>,
}

impl SweepGrid {
    pub fn cell(&self, row: usize, col: usize) -> Real {
        self.values[row][col]
    }

    /// Write the grid as CSV: header row of rates, then one row per
    /// object count.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        self.write_matrix(&mut w, &self.values)
    }

    /// Same layout as [`SweepGrid::write_csv`], holding the per-cell
    /// standard deviations.
    pub fn write_stddev_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        self.write_matrix(&mut w, &self.stddev)
    }

    fn write_matrix<W: Write>(&self, w: &mut W, matrix: &[Vec<Real>]) -> std::io::Result<()> {
        write!(w, "n_objects")?;
        for rate in &self.cols {
            write!(w, ",{rate}")?;
        }
        writeln!(w)?;
        for (n, row) in self.rows.iter().zip(matrix) {
            write!(w, "{n}")?;
            for v in row {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// The three per-policy grids produced by a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyGrids {
    pub chr: SweepGrid,
    pub cpu_seconds: SweepGrid,
    pub peak_metadata: SweepGrid,
}

/// Full sweep output.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub per_policy: BTreeMap<Policy, PolicyGrids>,
    pub timer: TimerSource,
}

#[derive(Debug, Clone, Default)]
struct CellSamples {
    chr: Vec<Real>,
    cpu: Vec<Real>,
    peak_metadata: Vec<Real>,
}

/// One grid cell for every configured policy, on shared traces.
fn run_case(
    config: &SweepConfig,
    n_objects: usize,
    rate: Real,
) -> Result<(BTreeMap<Policy, CellSamples>, TimerSource), BenchError> {
    let capacity = capacity_for(rate, n_objects);
    let wants_hot_set = config.policies.contains(&Policy::Plfua);
    let mut samples: BTreeMap<Policy, CellSamples> = config
        .policies
        .iter()
        .map(|&p| (p, CellSamples::default()))
        .collect();
    let mut timer = TimerSource::ThreadCpu;
    for sample in 0..config.samples_per_case {
        let spec = ZipfSpec {
            n_objects,
            alpha: config.alpha,
            n_requests: config.requests_per_sample,
            seed: derive_seed(config.base_seed, n_objects, rate, sample),
        };
        let trace = generate(&spec)?;
        let hot_set = if wants_hot_set {
            Some(crate::workload::hot_set(&trace, capacity)?)
        } else {
            None
        };
        for &policy in &config.policies {
            let hot = if policy == Policy::Plfua { hot_set.as_ref() } else { None };
            let run = timed_run(policy, &trace, capacity, hot)?;
            timer = run.timer;
            let cell = samples.get_mut(&policy).expect("policy present");
            cell.chr.push(run.report.chr);
            cell.cpu.push(run.cpu_seconds);
            cell.peak_metadata
                .push((run.report.peak_resident + run.report.peak_parked) as Real);
        }
    }
    Ok((samples, timer))
}

fn assemble_grids(
    config: &SweepConfig,
    cells: Vec<BTreeMap<Policy, CellSamples>>,
) -> BTreeMap<Policy, PolicyGrids> {
    let rows = config.object_counts.clone();
    let cols = config.rates.clone();
    let n_cols = cols.len();
    let mut out = BTreeMap::new();
    for &policy in &config.policies {
        let mut grids: Vec<(Vec<Vec<Real>>, Vec<Vec<Real>>)> =
            vec![(Vec::new(), Vec::new()); 3];
        for (i, _) in rows.iter().enumerate() {
            for g in grids.iter_mut() {
                g.0.push(Vec::with_capacity(n_cols));
                g.1.push(Vec::with_capacity(n_cols));
            }
            for (j, _) in cols.iter().enumerate() {
                let cell = &cells[i * n_cols + j][&policy];
                for (g, values) in grids
                    .iter_mut()
                    .zip([&cell.chr, &cell.cpu, &cell.peak_metadata])
                {
                    g.0[i].push(mean(values));
                    g.1[i].push(stddev(values));
                }
            }
        }
        let mut grids = grids.into_iter();
        let make = |metric: Metric, (values, sd): (Vec<Vec<Real>>, Vec<Vec<Real>>)| SweepGrid {
            metric,
            rows: rows.clone(),
            cols: cols.clone(),
            values,
            stddev: sd,
        };
        out.insert(
            policy,
            PolicyGrids {
                chr: make(Metric::MeanChr, grids.next().unwrap()),
                cpu_seconds: make(Metric::MeanCpuSeconds, grids.next().unwrap()),
                peak_metadata: make(Metric::MeanPeakMetadata, grids.next().unwrap()),
            },
        );
    }
    out
}

/// Run the whole grid. `threads <= 1` runs cells sequentially on the
/// calling thread (highest timing fidelity); larger values distribute
/// cells over a thread pool, each timed run still executing on a single
/// thread.
pub fn run_sweep(config: &SweepConfig, threads: usize) -> Result<SweepResult, BenchError> {
    config.validate()?;
    let cases: Vec<(usize, Real)> = config
        .object_counts
        .iter()
        .flat_map(|&n| config.rates.iter().map(move |&r| (n, r)))
        .collect();

    let attach = |(n, rate): (usize, Real), e: BenchError| BenchError::InCase {
        n_objects: n,
        rate,
        source: Box::new(e),
    };

    let results: Result<Vec<_>, BenchError> = if threads > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| BenchError::Config(e.to_string()))?;
        pool.install(|| {
            cases
                .par_iter()
                .map(|&(n, rate)| run_case(config, n, rate).map_err(|e| attach((n, rate), e)))
                .collect()
        })
    } else {
        cases
            .iter()
            .map(|&(n, rate)| run_case(config, n, rate).map_err(|e| attach((n, rate), e)))
            .collect()
    };
    let results = results?;
    let timer = results
        .iter()
        .map(|(_, t)| *t)
        .find(|&t| t == TimerSource::ProcessCpu)
        .unwrap_or(TimerSource::ThreadCpu);
    let cells = results.into_iter().map(|(c, _)| c).collect();
    Ok(SweepResult {
        config: config.clone(),
        per_policy: assemble_grids(config, cells),
        timer,
    })
}

// ---------------------------------------------------------------------
// Provenance manifest

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HostInfo {
    pub cpu_model: String,
    pub logical_cores: usize,
}

/// Recorded next to the grid CSVs so timing numbers carry their host
/// context.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepManifest {
    pub config: SweepConfig,
    pub seed_rule: String,
    pub timer: TimerSource,
    pub host: HostInfo,
}

pub fn host_info() -> HostInfo {
    let cpu_model = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|text| {
            text.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split(':').nth(1))
                .map(|s| s.trim().to_string())
        })
        .unwrap_or_else(|| "unknown".to_string());
    HostInfo {
        cpu_model,
        logical_cores: std::thread::available_parallelism().map_or(1, |n| n.get()),
    }
}

impl SweepResult {
    pub fn manifest(&self) -> SweepManifest {
        SweepManifest {
            config: self.config.clone(),
            seed_rule: SEED_RULE.to_string(),
            timer: self.timer,
            host: host_info(),
        }
    }
}
