//! Trace-driven simulation and benchmarking of frequency-based cache
//! management policies.
//!
//! The crate models caches as pure metadata machines: no content is stored
//! or moved, only frequency tables are maintained. Three policies are
//! implemented in [`cache`]:
//!
//! * **LFU** — evict the least frequently used resident; an evicted
//!   object's frequency is discarded, so it restarts at 1 on readmission.
//! * **PLFU** — LFU plus a parked-list that preserves the frequencies of
//!   evicted objects, so readmission resumes where eviction left off.
//! * **PLFUA** — PLFU restricted by an admission gate: only objects in a
//!   designated hot set (twice the cache capacity) may enter the cache.
//!
//! [`workload`] produces seeded Zipf request traces and ingests viewing
//! session logs, [`metrics`] turns access events into hit-ratio reports
//! and rank-order scatter data, and [`bench`] runs parameter sweeps over
//! (object count, cache rate) grids with per-thread CPU-time measurement
//! of the management loop.

pub mod bench;
pub mod cache;
pub mod cli;
pub mod metrics;
pub mod stats;
pub mod workload;

/// Scalar type used for probabilities, ratios, and timings.
///
/// The numeric kernels ([`workload::zipf_pmf`], [`stats`]) are generic
/// over [`num_traits::Float`]; this alias fixes the precision used by the
/// simulator and the CLI.
pub type Real = f64;
