//! Shared test support: a deliberately naive reference engine and the
//! desk-scale experiment data used by several acceptance criteria.
//!
//! The reference engine keeps flat vectors and finds the eviction victim
//! by a linear scan; it shares no code with the production engine beyond
//! the event types, so agreement between the two is meaningful.

// Each test binary uses a different subset of this module.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::{Mutex, MutexGuard, OnceLock};

use cachesim::bench::{derive_seed, timed_run};
use cachesim::cache::{AccessEvent, ObjectId, Outcome, Policy};
use cachesim::workload::{generate, ZipfSpec};

pub const DESK_NS: [usize; 3] = [100, 1000, 4642];
pub const DESK_SAMPLES: usize = 12;
pub const DESK_REQUESTS: usize = 100_000;
pub const DESK_BASE_SEED: u64 = 0xACCE_0001;

/// The 6 grid rates shared with the full sweep.
pub fn desk_rates() -> Vec<f64> {
    cachesim::bench::default_grid().rates
}

/// Serializes acceptance tests so CPU-time measurements never share the
/// machine with sibling tests.
pub fn exclusive() -> MutexGuard<'static, ()> {
    static LOCK: Mutex<()> = Mutex::new(());
    LOCK.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

// ---------------------------------------------------------------------
// Naive reference engine

pub struct NaiveEngine {
    capacity: usize,
    policy: Policy,
    hot: Option<Vec<ObjectId>>,
    resident: Vec<(ObjectId, u64, u64)>, // (id, freq, last_seq)
    parked: Vec<(ObjectId, u64)>,
    seq: u64,
}

impl NaiveEngine {
    pub fn new(capacity: usize, policy: Policy, hot: Option<Vec<ObjectId>>) -> Self {
        assert!(capacity >= 1);
        assert_eq!(policy == Policy::Plfua, hot.is_some());
        NaiveEngine {
            capacity,
            policy,
            hot,
            resident: Vec::new(),
            parked: Vec::new(),
            seq: 0,
        }
    }

    pub fn access(&mut self, object: ObjectId) -> AccessEvent {
        let seq = self.seq;
        self.seq += 1;

        if let Some(slot) = self.resident.iter_mut().find(|(id, _, _)| *id == object) {
            slot.1 += 1;
            slot.2 = seq;
            return AccessEvent { seq, object, outcome: Outcome::Hit, evicted: None };
        }

        if let Some(hot) = &self.hot {
            if !hot.contains(&object) {
                return AccessEvent { seq, object, outcome: Outcome::Miss, evicted: None };
            }
        }

        let mut evicted = None;
        if self.resident.len() == self.capacity {
            // linear scan: least frequency, then least recent request
            let mut victim_idx = 0;
            for (idx, cand) in self.resident.iter().enumerate() {
                let best = &self.resident[victim_idx];
                if (cand.1, cand.2) < (best.1, best.2) {
                    victim_idx = idx;
                }
            }
            let (vid, vfreq, _) = self.resident.swap_remove(victim_idx);
            if self.policy != Policy::Lfu {
                self.parked.push((vid, vfreq));
            }
            evicted = Some(vid);
        }

        let mut freq = 1;
        if let Some(pos) = self.parked.iter().position(|(id, _)| *id == object) {
            let (_, parked_freq) = self.parked.swap_remove(pos);
            if self.policy != Policy::Lfu {
                freq = parked_freq + 1;
            }
        }
        self.resident.push((object, freq, seq));
        AccessEvent { seq, object, outcome: Outcome::Miss, evicted }
    }

    pub fn metadata_size(&self) -> (usize, usize) {
        (self.resident.len(), self.parked.len())
    }

    pub fn resident_frequency(&self, object: ObjectId) -> Option<u64> {
        self.resident
            .iter()
            .find(|(id, _, _)| *id == object)
            .map(|&(_, f, _)| f)
    }
}

// ---------------------------------------------------------------------
// Desk-scale experiment grid (shared by several criteria)

pub struct PolicyCell {
    pub chr: Vec<f64>,
    pub peak_metadata: Vec<u64>,
}

pub struct DeskCell {
    pub capacity: usize,
    pub per_policy: BTreeMap<Policy, PolicyCell>,
}

pub struct DeskData {
    /// `cells[i][j]` is object count `DESK_NS[i]` at rate `DESK_RATES[j]`.
    pub cells: Vec<Vec<DeskCell>>,
}

impl DeskData {
    pub fn mean_chr(&self, i: usize, j: usize, policy: Policy) -> f64 {
        mean(&self.cells[i][j].per_policy[&policy].chr)
    }

    pub fn mean_peak_metadata(&self, i: usize, j: usize, policy: Policy) -> f64 {
        let peaks = &self.cells[i][j].per_policy[&policy].peak_metadata;
        mean(&peaks.iter().map(|&p| p as f64).collect::<Vec<_>>())
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Runs the untimed desk grid once per test binary.
pub fn desk_data() -> &'static DeskData {
    static DATA: OnceLock<DeskData> = OnceLock::new();
    DATA.get_or_init(|| {
        let mut cells = Vec::new();
        for &n in &DESK_NS {
            let mut row = Vec::new();
            for &rate in &desk_rates() {
                let capacity = cachesim::bench::capacity_for(rate, n);
                let mut per_policy: BTreeMap<Policy, PolicyCell> = Policy::ALL
                    .iter()
                    .map(|&p| (p, PolicyCell { chr: Vec::new(), peak_metadata: Vec::new() }))
                    .collect();
                for sample in 0..DESK_SAMPLES {
                    let spec = ZipfSpec {
                        n_objects: n,
                        alpha: 1.1,
                        n_requests: DESK_REQUESTS,
                        seed: derive_seed(DESK_BASE_SEED, n, rate, sample),
                    };
                    let trace = generate(&spec).expect("desk trace");
                    let hot = cachesim::workload::hot_set(&trace, capacity).expect("desk hot set");
                    for &policy in &Policy::ALL {
                        let hot_ref = (policy == Policy::Plfua).then_some(&hot);
                        let run = timed_run(policy, &trace, capacity, hot_ref).expect("desk run");
                        let cell = per_policy.get_mut(&policy).unwrap();
                        cell.chr.push(run.report.chr);
                        cell.peak_metadata
                            .push((run.report.peak_resident + run.report.peak_parked) as u64);
                    }
                }
                row.push(DeskCell { capacity, per_policy });
            }
            cells.push(row);
        }
        DeskData { cells }
    })
}
