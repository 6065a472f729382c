//! Cache-management state machines: LFU, PLFU, and PLFUA.
//!
//! An engine never stores content. It keeps a `resident` frequency table
//! (the objects "in cache"), an optional `parked` table of frequencies of
//! evicted objects, and for PLFUA an admission hot set. Every request is
//! fed through [`CacheEngine::access`], which returns the per-request
//! [`AccessEvent`] record.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::workload::Trace;

/// Opaque identity of a cacheable object (channel / content id).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectId(pub u64);

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// The three supported management policies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    Lfu,
    Plfu,
    Plfua,
}

impl Policy {
    pub const ALL: [Policy; 3] = [Policy::Lfu, Policy::Plfu, Policy::Plfua];

    /// True for the policies that maintain a parked-list.
    pub fn keeps_parked(self) -> bool {
        !matches!(self, Policy::Lfu)
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Policy::Lfu => "lfu",
            Policy::Plfu => "plfu",
            Policy::Plfua => "plfua",
        };
        f.write_str(s)
    }
}

impl FromStr for Policy {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s.to_ascii_lowercase().as_str() {
            "lfu" => Ok(Policy::Lfu),
            "plfu" => Ok(Policy::Plfu),
            "plfua" => Ok(Policy::Plfua),
            _ => Err(ConfigError::UnknownPolicy(s.to_string())),
        }
    }
}

/// Engine construction parameters.
///
/// `hot_set` is required for [`Policy::Plfua`] and must be absent for the
/// other policies. By construction elsewhere in this crate the hot set
/// holds twice as many objects as the cache capacity.
#[derive(Debug, Clone)]
pub struct CacheConfig {
    pub capacity: usize,
    pub policy: Policy,
    pub hot_set: Option<HashSet<ObjectId>>,
}

impl CacheConfig {
    pub fn new(capacity: usize, policy: Policy) -> Self {
        CacheConfig {
            capacity,
            policy,
            hot_set: None,
        }
    }

    pub fn with_hot_set(capacity: usize, hot_set: HashSet<ObjectId>) -> Self {
        CacheConfig {
            capacity,
            policy: Policy::Plfua,
            hot_set: Some(hot_set),
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.capacity == 0 {
            return Err(ConfigError::ZeroCapacity);
        }
        match (self.policy, &self.hot_set) {
            (Policy::Plfua, None) => Err(ConfigError::MissingHotSet),
            (Policy::Plfua, Some(h)) if h.is_empty() => Err(ConfigError::MissingHotSet),
            (Policy::Plfua, Some(_)) => Ok(()),
            (_, Some(_)) => Err(ConfigError::UnexpectedHotSet(self.policy)),
            (_, None) => Ok(()),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("cache capacity must be at least 1")]
    ZeroCapacity,
    #[error("plfua requires a non-empty hot set")]
    MissingHotSet,
    #[error("policy {0} does not take a hot set")]
    UnexpectedHotSet(Policy),
    #[error("unknown policy `{0}` (expected lfu, plfu, or plfua)")]
    UnknownPolicy(String),
}

/// Request outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Hit,
    Miss,
}

/// Per-request record emitted by [`CacheEngine::access`].
///
/// `seq` values are contiguous from 0 within one engine lifetime.
/// `evicted` is set only when the miss displaced a resident object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessEvent {
    pub seq: u64,
    pub object: ObjectId,
    pub outcome: Outcome,
    pub evicted: Option<ObjectId>,
}

#[derive(Debug, Clone, Copy)]
struct Slot {
    freq: u64,
    last_seq: u64,
}

/// A single-threaded cache-management engine.
///
/// Victim selection uses an ordered index over `(frequency, last access
/// sequence, id)`, so eviction is O(log capacity): the minimum entry is
/// the least frequent resident, ties broken by least recent request.
#[derive(Debug)]
pub struct CacheEngine {
    capacity: usize,
    policy: Policy,
    hot_set: Option<HashSet<ObjectId>>,
    resident: HashMap<ObjectId, Slot>,
    victims: BTreeSet<(u64, u64, ObjectId)>,
    parked: HashMap<ObjectId, u64>,
    seq: u64,
    peak_resident: usize,
    peak_parked: usize,
}

impl CacheEngine {
    pub fn new(config: CacheConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        Ok(CacheEngine {
            resident: HashMap::with_capacity(config.capacity + 1),
            victims: BTreeSet::new(),
            parked: HashMap::new(),
            seq: 0,
            peak_resident: 0,
            peak_parked: 0,
            capacity: config.capacity,
            policy: config.policy,
            hot_set: config.hot_set,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    /// Number of requests processed so far.
    pub fn request_count(&self) -> u64 {
        self.seq
    }

    /// Feed one request through the policy state machine.
    pub fn access(&mut self, object: ObjectId) -> AccessEvent {
        let seq = self.seq;
        self.seq += 1;

        if let Some(slot) = self.resident.get_mut(&object) {
            let stale = (slot.freq, slot.last_seq, object);
            slot.freq += 1;
            slot.last_seq = seq;
            let fresh = (slot.freq, slot.last_seq, object);
            self.victims.remove(&stale);
            self.victims.insert(fresh);
            return AccessEvent {
                seq,
                object,
                outcome: Outcome::Hit,
                evicted: None,
            };
        }

        // Admission gate: non-hot objects miss without leaving any trace
        // in the metadata.
        if let Some(hot) = &self.hot_set {
            if !hot.contains(&object) {
                return AccessEvent {
                    seq,
                    object,
                    outcome: Outcome::Miss,
                    evicted: None,
                };
            }
        }

        let mut evicted = None;
        if self.resident.len() == self.capacity {
            let victim = *self
                .victims
                .iter()
                .next()
                .expect("victim index tracks a full resident table");
            self.victims.remove(&victim);
            let (freq, _, id) = victim;
            self.resident.remove(&id);
            if self.policy.keeps_parked() {
                self.parked.insert(id, freq);
            }
            evicted = Some(id);
        }

        let freq = match self.parked.remove(&object) {
            Some(parked_freq) if self.policy.keeps_parked() => parked_freq + 1,
            _ => 1,
        };
        self.resident.insert(
            object,
            Slot {
                freq,
                last_seq: seq,
            },
        );
        self.victims.insert((freq, seq, object));
        // Peaks are sampled at access boundaries, after the tables settle.
        if self.resident.len() > self.peak_resident {
            self.peak_resident = self.resident.len();
        }
        if self.parked.len() > self.peak_parked {
            self.peak_parked = self.parked.len();
        }

        AccessEvent {
            seq,
            object,
            outcome: Outcome::Miss,
            evicted,
        }
    }

    /// Current cardinalities of the two metadata tables:
    /// `(resident_count, parked_count)`.
    pub fn metadata_size(&self) -> (usize, usize) {
        (self.resident.len(), self.parked.len())
    }

    /// Largest table cardinalities observed so far:
    /// `(peak_resident, peak_parked)`.
    pub fn metadata_peaks(&self) -> (usize, usize) {
        (self.peak_resident, self.peak_parked)
    }

    /// In-cache frequency of `object`, if resident.
    pub fn resident_frequency(&self, object: ObjectId) -> Option<u64> {
        self.resident.get(&object).map(|s| s.freq)
    }

    /// Parked frequency of `object`, if present in the parked-list.
    pub fn parked_frequency(&self, object: ObjectId) -> Option<u64> {
        self.parked.get(&object).copied()
    }

    pub fn is_resident(&self, object: ObjectId) -> bool {
        self.resident.contains_key(&object)
    }

    /// Run a whole trace through the engine, collecting every event.
    ///
    /// Convenience for reporting paths; the benchmark module drives the
    /// engine directly so that the timed loop allocates nothing.
    pub fn replay(&mut self, trace: &Trace) -> Vec<AccessEvent> {
        trace.requests.iter().map(|&id| self.access(id)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u64]) -> Vec<ObjectId> {
        v.iter().copied().map(ObjectId).collect()
    }

    fn outcomes(engine: &mut CacheEngine, trace: &[u64]) -> Vec<Outcome> {
        ids(trace)
            .into_iter()
            .map(|o| engine.access(o).outcome)
            .collect()
    }

    #[test]
    fn fresh_engine_is_empty() {
        let e = CacheEngine::new(CacheConfig::new(50, Policy::Lfu)).unwrap();
        assert_eq!(e.metadata_size(), (0, 0));
        assert_eq!(e.request_count(), 0);
    }

    #[test]
    fn zero_capacity_rejected() {
        let err = CacheEngine::new(CacheConfig::new(0, Policy::Lfu)).unwrap_err();
        assert_eq!(err, ConfigError::ZeroCapacity);
    }

    #[test]
    fn plfua_requires_hot_set() {
        let err = CacheEngine::new(CacheConfig::new(1, Policy::Plfua)).unwrap_err();
        assert_eq!(err, ConfigError::MissingHotSet);
        let err =
            CacheEngine::new(CacheConfig::with_hot_set(1, HashSet::new())).unwrap_err();
        assert_eq!(err, ConfigError::MissingHotSet);
    }

    #[test]
    fn hot_set_rejected_for_other_policies() {
        let mut cfg = CacheConfig::new(2, Policy::Lfu);
        cfg.hot_set = Some([ObjectId(1)].into_iter().collect());
        assert_eq!(
            CacheEngine::new(cfg).unwrap_err(),
            ConfigError::UnexpectedHotSet(Policy::Lfu)
        );
    }

    #[test]
    fn plfua_accepts_configured_hot_set() {
        let hot: HashSet<ObjectId> = (1..=100).map(ObjectId).collect();
        let e = CacheEngine::new(CacheConfig::with_hot_set(50, hot.clone())).unwrap();
        assert_eq!(e.hot_set.as_ref().unwrap().len(), 100);
        assert_eq!(e.hot_set, Some(hot));
    }

    #[test]
    fn first_request_is_always_a_miss() {
        let mut e = CacheEngine::new(CacheConfig::new(4, Policy::Plfu)).unwrap();
        assert_eq!(e.access(ObjectId(9)).outcome, Outcome::Miss);
    }

    #[test]
    fn lfu_hand_trace() {
        // C=2, trace A,B,A,C,A,B -> M,M,H,M,H,M; final resident {A:3, B:1}
        let mut e = CacheEngine::new(CacheConfig::new(2, Policy::Lfu)).unwrap();
        let got = outcomes(&mut e, &[1, 2, 1, 3, 1, 2]);
        use Outcome::{Hit, Miss};
        assert_eq!(got, vec![Miss, Miss, Hit, Miss, Hit, Miss]);
        assert_eq!(e.resident_frequency(ObjectId(1)), Some(3));
        assert_eq!(e.resident_frequency(ObjectId(2)), Some(1));
        assert!(!e.is_resident(ObjectId(3)));
        // LFU keeps no parked entries
        assert_eq!(e.metadata_size(), (2, 0));
    }

    #[test]
    fn lfu_reset_on_readmission() {
        // B evicted with frequency 2, readmitted at 1
        let mut e = CacheEngine::new(CacheConfig::new(1, Policy::Lfu)).unwrap();
        outcomes(&mut e, &[2, 2, 1, 2]);
        assert_eq!(e.resident_frequency(ObjectId(2)), Some(1));
    }

    #[test]
    fn plfu_parks_and_resumes() {
        // C=1, trace A,B,A -> all misses; resident {A:2}, parked {B:1}
        let mut e = CacheEngine::new(CacheConfig::new(1, Policy::Plfu)).unwrap();
        let got = outcomes(&mut e, &[1, 2, 1]);
        assert!(got.iter().all(|&o| o == Outcome::Miss));
        assert_eq!(e.resident_frequency(ObjectId(1)), Some(2));
        assert_eq!(e.parked_frequency(ObjectId(2)), Some(1));
        assert_eq!(e.metadata_size(), (1, 1));
    }

    #[test]
    fn plfua_gate_blocks_cold_objects() {
        // C=1, hot={A,B}, trace A,C,A,C,A -> M,M,H,M,H; C never recorded
        let hot: HashSet<ObjectId> = [ObjectId(1), ObjectId(2)].into_iter().collect();
        let mut e = CacheEngine::new(CacheConfig::with_hot_set(1, hot)).unwrap();
        let got = outcomes(&mut e, &[1, 3, 1, 3, 1]);
        use Outcome::{Hit, Miss};
        assert_eq!(got, vec![Miss, Miss, Hit, Miss, Hit]);
        assert!(!e.is_resident(ObjectId(3)));
        assert_eq!(e.parked_frequency(ObjectId(3)), None);
        assert_eq!(e.metadata_size(), (1, 0));
        assert_eq!(e.request_count(), 5);
    }

    #[test]
    fn eviction_tie_break_is_least_recently_requested() {
        // A and B both at frequency 1; A requested earlier, so A is evicted.
        let mut e = CacheEngine::new(CacheConfig::new(2, Policy::Lfu)).unwrap();
        let events = [1, 2, 3]
            .iter()
            .map(|&i| e.access(ObjectId(i)))
            .collect::<Vec<_>>();
        assert_eq!(events[2].evicted, Some(ObjectId(1)));
        assert!(e.is_resident(ObjectId(2)));
        assert!(e.is_resident(ObjectId(3)));
    }

    #[test]
    fn evicted_field_only_set_on_displacement() {
        let mut e = CacheEngine::new(CacheConfig::new(2, Policy::Plfu)).unwrap();
        assert_eq!(e.access(ObjectId(1)).evicted, None);
        assert_eq!(e.access(ObjectId(2)).evicted, None);
        assert_eq!(e.access(ObjectId(1)).evicted, None); // hit
        assert_eq!(e.access(ObjectId(3)).evicted, Some(ObjectId(2)));
    }

    #[test]
    fn seq_is_contiguous_from_zero() {
        let mut e = CacheEngine::new(CacheConfig::new(1, Policy::Lfu)).unwrap();
        for expect in 0..5 {
            assert_eq!(e.access(ObjectId(expect % 2)).seq, expect);
        }
    }

    #[test]
    fn peaks_track_maxima() {
        let mut e = CacheEngine::new(CacheConfig::new(1, Policy::Plfu)).unwrap();
        outcomes(&mut e, &[1, 2, 3, 1]);
        // resident peaks at 1, parked grows to {two of 1,2,3}
        assert_eq!(e.metadata_peaks(), (1, 2));
    }
}
