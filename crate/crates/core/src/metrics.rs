//! Run summaries and rank-order scatter data derived from access events.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::cache::{AccessEvent, ObjectId, Outcome};
use crate::workload::{Provenance, Trace};
use crate::Real;

/// Metadata extremes observed during a run, fed into [`summarize`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MetadataStats {
    pub peak_resident: usize,
    pub peak_parked: usize,
    pub final_resident: usize,
    pub final_parked: usize,
}

/// Aggregate outcome of one simulation run.
///
/// `chr` counts compulsory misses: the first request for any object is
/// always a miss and is part of the denominator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub hits: u64,
    pub misses: u64,
    pub chr: Real,
    pub peak_resident: usize,
    pub peak_parked: usize,
    pub final_resident: usize,
    pub final_parked: usize,
}

/// One dot of the rank-order hit/miss scatter.
///
/// `occurrence_index` is the 1-based position of the event among the
/// requests for the same object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub rank: u64,
    pub occurrence_index: u64,
    pub outcome: Outcome,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("cannot summarize an empty event sequence")]
    EmptyEvents,
    #[error("no popularity rank known for object {0}")]
    UnknownObject(ObjectId),
}

/// Fold an event stream into a [`RunReport`].
pub fn summarize(events: &[AccessEvent], metadata: MetadataStats) -> Result<RunReport, MetricsError> {
    if events.is_empty() {
        return Err(MetricsError::EmptyEvents);
    }
    let hits = events.iter().filter(|e| e.outcome == Outcome::Hit).count() as u64;
    let misses = events.len() as u64 - hits;
    Ok(RunReport {
        hits,
        misses,
        chr: hits as Real / events.len() as Real,
        peak_resident: metadata.peak_resident,
        peak_parked: metadata.peak_parked,
        final_resident: metadata.final_resident,
        final_parked: metadata.final_parked,
    })
}

/// Popularity ranks (1-based) for the objects of a trace.
///
/// Synthetic traces are ranked by construction (rank = id). Ingested
/// traces are ranked by descending request count, ties broken by smaller
/// id.
pub fn popularity_ranks(trace: &Trace) -> HashMap<ObjectId, u64> {
    match &trace.provenance {
        Provenance::Synthetic(_) => trace
            .requests
            .iter()
            .map(|&id| (id, id.0))
            .collect(),
        Provenance::Ingested(_) => {
            let mut by_popularity: Vec<(ObjectId, u64)> =
                trace.frequencies().into_iter().collect();
            by_popularity.sort_by_key(|&(id, count)| (std::cmp::Reverse(count), id));
            by_popularity
                .into_iter()
                .enumerate()
                .map(|(idx, (id, _))| (id, idx as u64 + 1))
                .collect()
        }
    }
}

/// Expand events into scatter points, ordered by `(rank,
/// occurrence_index)` — one point per event.
pub fn scatter(
    events: &[AccessEvent],
    ranks: &HashMap<ObjectId, u64>,
) -> Result<Vec<ScatterPoint>, MetricsError> {
    let mut occurrence: HashMap<ObjectId, u64> = HashMap::new();
    let mut points = Vec::with_capacity(events.len());
    for event in events {
        let rank = *ranks
            .get(&event.object)
            .ok_or(MetricsError::UnknownObject(event.object))?;
        let idx = occurrence.entry(event.object).or_insert(0);
        *idx += 1;
        points.push(ScatterPoint {
            rank,
            occurrence_index: *idx,
            outcome: event.outcome,
        });
    }
    points.sort_by_key(|p| (p.rank, p.occurrence_index));
    Ok(points)
}

/// Count objects with rank at most `max_rank` whose per-object miss ratio
/// exceeds `threshold` — the operational "red column" detector.
pub fn starvation_count(
    events: &[AccessEvent],
    ranks: &HashMap<ObjectId, u64>,
    max_rank: u64,
    threshold: Real,
) -> usize {
    let mut totals: HashMap<ObjectId, (u64, u64)> = HashMap::new(); // (misses, requests)
    for event in events {
        let entry = totals.entry(event.object).or_insert((0, 0));
        entry.1 += 1;
        if event.outcome == Outcome::Miss {
            entry.0 += 1;
        }
    }
    totals
        .iter()
        .filter(|(id, _)| ranks.get(id).is_some_and(|&r| r <= max_rank))
        .filter(|(_, &(misses, requests))| misses as Real / requests as Real > threshold)
        .count()
}
