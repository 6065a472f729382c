//! Workload construction: seeded Zipf traces, session-log ingestion, and
//! hot-set derivation for admission-gated runs.
//!
//! Synthetic object ids equal Zipf popularity ranks (id 1 is the most
//! popular object), so rank-order plotting and hot-set construction need
//! no extra mapping.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use num_traits::Float;
use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::cache::ObjectId;
use crate::Real;

/// Parameters of a synthetic Zipf-distributed trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZipfSpec {
    pub n_objects: usize,
    pub alpha: Real,
    pub n_requests: usize,
    pub seed: u64,
}

impl ZipfSpec {
    fn validate(&self) -> Result<(), WorkloadError> {
        if self.n_objects == 0 {
            return Err(WorkloadError::InvalidParameter(
                "n_objects must be at least 1".into(),
            ));
        }
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(WorkloadError::InvalidParameter(
                "alpha must be a positive finite real".into(),
            ));
        }
        if self.n_requests == 0 {
            return Err(WorkloadError::InvalidParameter(
                "n_requests must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Where a trace came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    Synthetic(ZipfSpec),
    Ingested(String),
}

/// An ordered sequence of object requests.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub requests: Vec<ObjectId>,
    pub provenance: Provenance,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }

    /// Number of distinct objects appearing in the trace.
    pub fn distinct_count(&self) -> usize {
        self.requests.iter().collect::<HashSet<_>>().len()
    }

    /// Per-object request counts.
    pub fn frequencies(&self) -> HashMap<ObjectId, u64> {
        let mut counts = HashMap::new();
        for &id in &self.requests {
            *counts.entry(id).or_insert(0u64) += 1;
        }
        counts
    }

    /// Write as plain text, one decimal object id per line.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut buf = String::new();
        for id in &self.requests {
            buf.clear();
            buf.push_str(&id.0.to_string());
            buf.push('\n');
            w.write_all(buf.as_bytes())?;
        }
        Ok(())
    }

    /// Read a one-id-per-line trace file. The result carries `Ingested`
    /// provenance named after `source`.
    pub fn read_from<R: Read>(r: R, source: &str) -> Result<Self, WorkloadError> {
        let mut requests = Vec::new();
        for (idx, line) in BufReader::new(r).lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let id: u64 = trimmed.parse().map_err(|_| WorkloadError::MalformedRecord {
                line: idx + 1,
                reason: format!("`{trimmed}` is not a non-negative integer id"),
            })?;
            requests.push(ObjectId(id));
        }
        Ok(Trace {
            requests,
            provenance: Provenance::Ingested(source.to_string()),
        })
    }

    pub fn read_from_path(path: &Path) -> Result<Self, WorkloadError> {
        let file = std::fs::File::open(path)?;
        Trace::read_from(file, &path.display().to_string())
    }
}

/// One viewing session: `[start, end]` in epoch seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub start: i64,
    pub end: i64,
    pub content: ObjectId,
}

#[derive(Debug, thiserror::Error)]
pub enum WorkloadError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("hot set needs {required} distinct objects but only {available} are available")]
    InsufficientObjects { required: usize, available: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Zipf probability mass function over ranks `1..=n_objects`:
/// `p_i = i^(-alpha) / sum_k k^(-alpha)`.
pub fn zipf_pmf<F: Float>(n_objects: usize, alpha: F) -> Result<Vec<F>, WorkloadError> {
    if n_objects == 0 {
        return Err(WorkloadError::InvalidParameter(
            "n_objects must be at least 1".into(),
        ));
    }
    if !(alpha > F::zero()) || !alpha.is_finite() {
        return Err(WorkloadError::InvalidParameter(
            "alpha must be a positive finite real".into(),
        ));
    }
    let mut weights: Vec<F> = (1..=n_objects)
        .map(|i| F::from(i).unwrap().powf(-alpha))
        .collect();
    // Sum smallest-first to limit rounding error in the normalizer.
    let norm = weights.iter().rev().fold(F::zero(), |a, &b| a + b);
    for w in weights.iter_mut() {
        *w = *w / norm;
    }
    Ok(weights)
}

/// Cumulative distribution over ranks, for inverse-CDF sampling.
fn zipf_cdf(n_objects: usize, alpha: Real) -> Result<Vec<Real>, WorkloadError> {
    let mut cdf = zipf_pmf::<Real>(n_objects, alpha)?;
    let mut acc = 0.0;
    for c in cdf.iter_mut() {
        acc += *c;
        *c = acc;
    }
    // Guard the top of the table against rounding: a uniform draw below
    // 1.0 must always land inside the table.
    if let Some(last) = cdf.last_mut() {
        *last = 1.0;
    }
    Ok(cdf)
}

/// Uniform draw in `[0, 1)` with 53 random bits.
fn unit_f64(rng: &mut ChaCha12Rng) -> Real {
    (rng.next_u64() >> 11) as Real * (1.0 / (1u64 << 53) as Real)
}

/// Generate a synthetic trace: `n_requests` i.i.d. draws from the Zipf
/// PMF via binary search on the precomputed CDF.
///
/// The PRNG is ChaCha12 seeded with `spec.seed`; identical specs yield
/// identical traces.
pub fn generate(spec: &ZipfSpec) -> Result<Trace, WorkloadError> {
    spec.validate()?;
    let cdf = zipf_cdf(spec.n_objects, spec.alpha)?;
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let requests = (0..spec.n_requests)
        .map(|_| {
            let u = unit_f64(&mut rng);
            ObjectId((cdf.partition_point(|&c| c <= u) + 1) as u64)
        })
        .collect();
    Ok(Trace {
        requests,
        provenance: Provenance::Synthetic(*spec),
    })
}

/// Filter sessions and emit one request per qualifying session.
///
/// A session qualifies when it lasted at least `min_duration` seconds and
/// started inside `window` (inclusive bounds). Requests are ordered by
/// session start, ties broken by content id.
pub fn ingest_sessions(
    records: &[SessionRecord],
    min_duration: i64,
    window: (i64, i64),
    source: &str,
) -> Result<Trace, WorkloadError> {
    for (idx, rec) in records.iter().enumerate() {
        if rec.end < rec.start {
            return Err(WorkloadError::MalformedRecord {
                line: idx + 1,
                reason: format!("session ends ({}) before it starts ({})", rec.end, rec.start),
            });
        }
    }
    let mut qualifying: Vec<&SessionRecord> = records
        .iter()
        .filter(|r| r.end - r.start >= min_duration)
        .filter(|r| r.start >= window.0 && r.start <= window.1)
        .collect();
    qualifying.sort_by_key(|r| (r.start, r.content));
    Ok(Trace {
        requests: qualifying.iter().map(|r| r.content).collect(),
        provenance: Provenance::Ingested(source.to_string()),
    })
}

/// Parse a `start,end,content_id` CSV session file (integer epoch
/// seconds). Rows with missing or non-numeric fields are rejected with
/// their line number.
pub fn read_session_csv<R: Read>(r: R) -> Result<Vec<SessionRecord>, WorkloadError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    {
        let headers = reader.headers().map_err(|e| WorkloadError::MalformedRecord {
            line: 1,
            reason: e.to_string(),
        })?;
        let expected = ["start", "end", "content_id"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(WorkloadError::MalformedRecord {
                line: 1,
                reason: format!("expected header `start,end,content_id`, got `{}`", headers.iter().collect::<Vec<_>>().join(",")),
            });
        }
    }
    let mut records = Vec::new();
    for (idx, row) in reader.records().enumerate() {
        let line = idx + 2; // header occupies line 1
        let row = row.map_err(|e| WorkloadError::MalformedRecord {
            line,
            reason: e.to_string(),
        })?;
        if row.len() != 3 {
            return Err(WorkloadError::MalformedRecord {
                line,
                reason: format!("expected 3 fields, got {}", row.len()),
            });
        }
        let field = |i: usize, name: &str| -> Result<i64, WorkloadError> {
            row.get(i)
                .unwrap()
                .trim()
                .parse()
                .map_err(|_| WorkloadError::MalformedRecord {
                    line,
                    reason: format!("{name} `{}` is not an integer", row.get(i).unwrap()),
                })
        };
        records.push(SessionRecord {
            start: field(0, "start")?,
            end: field(1, "end")?,
            content: ObjectId(field(2, "content_id")? as u64),
        });
    }
    Ok(records)
}

/// Derive the PLFUA admission hot set: the `2 * capacity` most popular
/// objects.
///
/// Synthetic traces use the true Zipf ranks (`ids 1..=2C`); ingested
/// traces use a full counting pre-pass, ties broken by smaller id.
pub fn hot_set(trace: &Trace, capacity: usize) -> Result<HashSet<ObjectId>, WorkloadError> {
    let wanted = 2 * capacity;
    match &trace.provenance {
        Provenance::Synthetic(spec) => {
            if wanted > spec.n_objects {
                return Err(WorkloadError::InsufficientObjects {
                    required: wanted,
                    available: spec.n_objects,
                });
            }
            Ok((1..=wanted as u64).map(ObjectId).collect())
        }
        Provenance::Ingested(_) => {
            let counts = trace.frequencies();
            if counts.len() < wanted {
                return Err(WorkloadError::InsufficientObjects {
                    required: wanted,
                    available: counts.len(),
                });
            }
            let mut by_popularity: Vec<(ObjectId, u64)> = counts.into_iter().collect();
            by_popularity.sort_by_key(|&(id, count)| (std::cmp::Reverse(count), id));
            Ok(by_popularity.into_iter().take(wanted).map(|(id, _)| id).collect())
        }
    }
}
