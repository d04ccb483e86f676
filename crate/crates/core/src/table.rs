//! The adaptive separate-chaining hash table.
//!
//! Storage follows the index-vector / next-vector layout: key–value pairs
//! live in a stable, insertion-ordered `pairs` store (first real slot at
//! index 2, so 0 can serve as the nil index), `index` maps each bucket to the
//! first pair of its chain, and `next` threads both collision chains and the
//! free list of deleted slots. Hash values are cached in a parallel vector
//! for all but the lightest hash functions, letting lookups reject
//! non-matching keys on a word compare before touching the comparison
//! function, and letting rehashes skip hashing entirely when the hash
//! function did not change.
//!
//! Word-identity tables open in a constant-hash phase: a flat array scanned
//! linearly, which beats any hashing below a few dozen keys and needs no
//! chain bookkeeping. The 33rd key triggers the switch to chains, a shift
//! estimate from the first 16 keys, and the pointer-shift hash; from there
//! the adaptation policies take over (see [`crate::adapt`]).

use crate::adapt::{
    self, IdentityPolicy, LadderState, StringPolicy, CONSTANT_PHASE_MAX, SHIFT_SAMPLE_SIZE,
};
use crate::hashers::{HashValue, HasherConfig, DEFAULT_PAGE_BITS};
use crate::metrics::{self, BucketCounts, CostReport};
use crate::{Error, Result};

/// Key flavors a table can be specialized to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KeyKind {
    /// Word-sized keys compared by value (integers, pointers).
    Identity,
    /// Byte-string keys.
    String,
    /// Sequence keys whose elements are already reduced to words.
    Sequence,
}

/// Hash-function regime for a table. `Adaptive` is the default; the fixed
/// modes exist for baselines and experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableMode {
    /// Full ladder for identity keys, truncation-limit policy for strings.
    Adaptive,
    /// Identity keys: Murmur3 finalizer from the first key. String keys:
    /// untruncated hashing from the start.
    MurmurOnly,
    /// Identity keys only: the mid hash from the first key, no fallback.
    MidOnly,
    /// Identity keys only: constant phase, then the mid hash, no fallback.
    ConstantThenMid,
}

/// Keys an [`AdaptiveTable`] can manage.
pub trait TableKey: Eq + Clone {
    const KIND: KeyKind;

    fn hash_with(&self, hasher: &HasherConfig) -> HashValue;

    /// The key as a machine word, for shift detection. Only identity keys
    /// provide one.
    fn word(&self) -> u64 {
        unreachable!("only identity keys reduce to words")
    }
}

impl TableKey for u64 {
    const KIND: KeyKind = KeyKind::Identity;

    fn hash_with(&self, hasher: &HasherConfig) -> HashValue {
        hasher.hash_word(*self)
    }

    fn word(&self) -> u64 {
        *self
    }
}

impl TableKey for Vec<u8> {
    const KIND: KeyKind = KeyKind::String;

    fn hash_with(&self, hasher: &HasherConfig) -> HashValue {
        hasher.hash_bytes(self)
    }
}

impl TableKey for String {
    const KIND: KeyKind = KeyKind::String;

    fn hash_with(&self, hasher: &HasherConfig) -> HashValue {
        hasher.hash_bytes(self.as_bytes())
    }
}

impl TableKey for Vec<u64> {
    const KIND: KeyKind = KeyKind::Sequence;

    fn hash_with(&self, hasher: &HasherConfig) -> HashValue {
        hasher.hash_words(self)
    }
}

pub type IdentityTable<V> = AdaptiveTable<u64, V>;
pub type StringTable<V> = AdaptiveTable<Vec<u8>, V>;
pub type SequenceTable<V> = AdaptiveTable<Vec<u64>, V>;

/// Read-only snapshot of a table's adaptation state.
#[derive(Clone, Copy, Debug)]
pub struct TableStats {
    pub n: usize,
    /// Bucket count; 1 during the constant phase (a single conceptual bucket).
    pub m: u64,
    pub hasher: HasherConfig,
    pub shift: Option<u32>,
    pub limit: Option<usize>,
    /// Collision count of the most recent counted rehash.
    pub last_rehash_collisions: Option<u64>,
    /// Longest chain ever walked by an insert (existing keys in the bucket).
    pub max_chain_seen: u32,
    pub constant_phase: bool,
    /// Number of hasher escalations performed so far.
    pub escalations: u32,
}

struct RehashOutcome {
    collisions: u64,
    truncated: u64,
}

const INITIAL_FLAT_CAP: usize = 8;
const INITIAL_CHAINED_M_IDENTITY: u64 = 64;
const INITIAL_CHAINED_M_STRING: u64 = 16;
const FIRST_SLOT: usize = 2;

/// A separate-chaining map that adapts its hash function to the keys.
pub struct AdaptiveTable<K: TableKey, V> {
    mode: TableMode,
    /// Flat constant-phase store; `Some` while in the constant phase.
    flat: Option<Vec<(K, V)>>,
    flat_cap: usize,
    pairs: Vec<Option<(K, V)>>,
    next: Vec<u32>,
    /// Bucket -> first pair index, 0 when empty. Length is the bucket count.
    index: Vec<u32>,
    cache: Option<Vec<u64>>,
    free_head: u32,
    n: usize,
    hasher: HasherConfig,
    identity_policy: IdentityPolicy,
    string_policy: StringPolicy,
    last_rehash_collisions: Option<u64>,
    max_chain_seen: u32,
    escalations: u32,
}

impl<K: TableKey, V> Default for AdaptiveTable<K, V> {
    fn default() -> Self {
        Self::new()
    }
}

impl<K: TableKey, V> AdaptiveTable<K, V> {
    /// An adaptive table for the key kind `K`.
    pub fn new() -> Self {
        Self::with_mode(TableMode::Adaptive).expect("adaptive mode supports every key kind")
    }

    /// A table with an explicit hash-function regime. Fails for combinations
    /// that make no sense (truncation-free modes other than `MurmurOnly` on
    /// string or sequence keys).
    pub fn with_mode(mode: TableMode) -> Result<Self> {
        let mut t = Self {
            mode,
            flat: None,
            flat_cap: INITIAL_FLAT_CAP,
            pairs: vec![None, None],
            next: vec![0, 0],
            index: Vec::new(),
            cache: None,
            free_head: 0,
            n: 0,
            hasher: HasherConfig::Constant,
            identity_policy: IdentityPolicy::new(DEFAULT_PAGE_BITS),
            string_policy: StringPolicy::new(K::KIND),
            last_rehash_collisions: None,
            max_chain_seen: 0,
            escalations: 0,
        };
        match (K::KIND, mode) {
            (KeyKind::Identity, TableMode::Adaptive | TableMode::ConstantThenMid) => {
                t.flat = Some(Vec::with_capacity(INITIAL_FLAT_CAP));
            }
            (KeyKind::Identity, TableMode::MurmurOnly) => {
                t.hasher = HasherConfig::Murmur;
                t.identity_policy.state = LadderState::Murmur;
                t.cache = Some(vec![0, 0]);
                t.index = vec![0; INITIAL_CHAINED_M_IDENTITY as usize];
            }
            (KeyKind::Identity, TableMode::MidOnly) => {
                t.hasher = HasherConfig::Mid;
                t.identity_policy.state = LadderState::Mid;
                t.index = vec![0; INITIAL_CHAINED_M_IDENTITY as usize];
            }
            (KeyKind::String | KeyKind::Sequence, TableMode::Adaptive | TableMode::MurmurOnly) => {
                let limit = if mode == TableMode::MurmurOnly {
                    usize::MAX
                } else {
                    t.string_policy.limit
                };
                t.string_policy.limit = limit;
                t.hasher = match K::KIND {
                    KeyKind::String => HasherConfig::TruncatedString { limit },
                    _ => HasherConfig::TruncatedSequence { limit },
                };
                t.cache = Some(vec![0, 0]);
                t.index = vec![0; INITIAL_CHAINED_M_STRING as usize];
            }
            (kind, mode) => {
                return Err(Error::Unsupported {
                    reason: format!("{mode:?} is not defined for {kind:?} keys"),
                })
            }
        }
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn m(&self) -> u64 {
        self.index.len() as u64
    }

    fn hash_key(&self, key: &K) -> HashValue {
        key.hash_with(&self.hasher)
    }

    /// Inserts or replaces; returns the previous value for an existing key.
    pub fn put(&mut self, key: K, value: V) -> Option<V> {
        if let Some(flat) = &mut self.flat {
            for (k, v) in flat.iter_mut() {
                if *k == key {
                    return Some(std::mem::replace(v, value));
                }
            }
            if flat.len() == self.flat_cap {
                if self.flat_cap < CONSTANT_PHASE_MAX {
                    self.flat_cap *= 2;
                } else {
                    self.leave_constant_phase();
                }
            }
            if let Some(flat) = &mut self.flat {
                flat.push((key, value));
                self.n += 1;
                return None;
            }
        }
        self.put_chained(key, value)
    }

    pub fn get(&self, key: &K) -> Option<&V> {
        if let Some(flat) = &self.flat {
            return flat.iter().find(|(k, _)| k == key).map(|(_, v)| v);
        }
        let h = self.hash_key(key);
        let mut idx = self.index[h.bucket(self.m()) as usize] as usize;
        while idx != 0 {
            if self.slot_matches(idx, h, key) {
                return self.pairs[idx].as_ref().map(|(_, v)| v);
            }
            idx = self.next[idx] as usize;
        }
        None
    }

    /// Removes a key, returning its value. Freed slots are threaded onto the
    /// free list through `next`; the surviving pairs keep their positions.
    pub fn del(&mut self, key: &K) -> Option<V> {
        if let Some(flat) = &mut self.flat {
            let pos = flat.iter().position(|(k, _)| k == key)?;
            self.n -= 1;
            return Some(flat.remove(pos).1);
        }
        let h = self.hash_key(key);
        let b = h.bucket(self.m()) as usize;
        let mut idx = self.index[b] as usize;
        let mut prev = 0usize;
        while idx != 0 {
            if self.slot_matches(idx, h, key) {
                if prev == 0 {
                    self.index[b] = self.next[idx];
                } else {
                    self.next[prev] = self.next[idx];
                }
                let (_, v) = self.pairs[idx].take().expect("chains reference live slots");
                self.next[idx] = self.free_head;
                self.free_head = idx as u32;
                self.n -= 1;
                return Some(v);
            }
            prev = idx;
            idx = self.next[idx] as usize;
        }
        None
    }

    /// Pairs in stable slot order: insertion order as long as no slot freed
    /// by a deletion has been reused by a later insert.
    pub fn iter(&self) -> impl Iterator<Item = (&K, &V)> {
        let flat = self
            .flat
            .as_deref()
            .unwrap_or(&[])
            .iter()
            .map(|(k, v)| (k, v));
        let chained = self
            .pairs
            .iter()
            .filter_map(|s| s.as_ref().map(|(k, v)| (k, v)));
        flat.chain(chained)
    }

    pub fn stats(&self) -> TableStats {
        TableStats {
            n: self.n,
            m: if self.flat.is_some() { 1 } else { self.m() },
            hasher: self.hasher,
            shift: self.hasher.shift(),
            limit: self.hasher.limit(),
            last_rehash_collisions: self.last_rehash_collisions,
            max_chain_seen: self.max_chain_seen,
            constant_phase: self.flat.is_some(),
            escalations: self.escalations,
        }
    }

    pub fn has_hash_cache(&self) -> bool {
        self.cache.is_some()
    }

    /// Storage-shape fingerprint: (flat capacity, bucket count). Changes
    /// exactly when the table resizes, which is what segment planning probes.
    pub fn capacity_signature(&self) -> (usize, u64) {
        if self.flat.is_some() {
            (self.flat_cap, 0)
        } else {
            (0, self.m())
        }
    }

    /// Occupancy histogram of the current chains; `None` in the constant
    /// phase, which has no buckets.
    pub fn bucket_counts(&self) -> Option<BucketCounts> {
        if self.flat.is_some() {
            return None;
        }
        let mut counts = vec![0u64; self.index.len()];
        for (b, &head) in self.index.iter().enumerate() {
            let mut idx = head as usize;
            while idx != 0 {
                counts[b] += 1;
                idx = self.next[idx] as usize;
            }
        }
        Some(BucketCounts::new(counts).expect("bucket count is a power of two"))
    }

    /// Cost/regret of the table's current bucket assignment. The constant
    /// phase reports zeros: with a single conceptual bucket, the linear scan
    /// is exactly the minimal-cost layout.
    pub fn regret_report(&self) -> CostReport {
        match self.bucket_counts() {
            Some(bc) => metrics::report_for_counts(&bc),
            None => CostReport {
                cost: 0.0,
                min_cost: 0.0,
                regret: 0.0,
            },
        }
    }

    pub fn current_max_chain(&self) -> u64 {
        self.bucket_counts().map_or(0, |bc| bc.max_chain())
    }

    /// Rebuilds the chains for `new_m` buckets under `hasher`, refreshing the
    /// hash cache when one exists. Returns the number of keys placed into an
    /// already-nonempty bucket when `count` is set.
    ///
    /// This is the raw mechanism beneath growth and adaptation; it does not
    /// consult the policies. `new_m` must be a power of two of at least the
    /// live key count.
    pub fn rehash(&mut self, new_m: u64, hasher: HasherConfig, count: bool) -> Option<u64> {
        assert!(
            self.flat.is_none(),
            "constant phase tables have no chains to rebuild"
        );
        assert!(new_m.is_power_of_two() && new_m >= self.n as u64);
        let outcome = self.rehash_with(new_m, hasher, count);
        count.then_some(outcome.collisions)
    }

    fn slot_matches(&self, idx: usize, h: HashValue, key: &K) -> bool {
        if let Some(cache) = &self.cache {
            if cache[idx] != h.raw() {
                return false;
            }
        }
        match &self.pairs[idx] {
            Some((k, _)) => k == key,
            None => false,
        }
    }

    fn put_chained(&mut self, key: K, value: V) -> Option<V> {
        let mut h = self.hash_key(&key);
        let mut b = h.bucket(self.m()) as usize;

        let mut idx = self.index[b] as usize;
        let mut chain_len = 0u32;
        while idx != 0 {
            if self.slot_matches(idx, h, &key) {
                let slot = self.pairs[idx]
                    .as_mut()
                    .expect("chains reference live slots");
                return Some(std::mem::replace(&mut slot.1, value));
            }
            chain_len += 1;
            idx = self.next[idx] as usize;
        }
        self.max_chain_seen = self.max_chain_seen.max(chain_len);

        if self.mode == TableMode::Adaptive && self.maybe_escalate(h, chain_len) {
            h = self.hash_key(&key);
            b = h.bucket(self.m()) as usize;
        }

        if self.n as u64 == self.m() {
            let doubled = self.m() * 2;
            self.grow_to(doubled);
            h = self.hash_key(&key);
            b = h.bucket(self.m()) as usize;
        }

        let slot = self.alloc_slot(key, value, h);
        self.next[slot] = self.index[b];
        self.index[b] = slot as u32;
        self.n += 1;
        None
    }

    /// Put-time safety net. Returns true when the hasher changed (the caller
    /// must recompute the pending key's hash).
    fn maybe_escalate(&mut self, h: HashValue, chain_len: u32) -> bool {
        match K::KIND {
            KeyKind::Identity => {
                if chain_len < self.identity_policy.chain_threshold() {
                    return false;
                }
                let next = self.identity_policy.next_on_long_chain();
                if next == self.identity_policy.state {
                    return false;
                }
                self.identity_policy.state = next;
                self.escalations += 1;
                self.run_identity_adapt(self.m());
                true
            }
            KeyKind::String | KeyKind::Sequence => {
                if !h.truncated() || chain_len < self.string_policy.chain_threshold(self.m()) {
                    return false;
                }
                self.run_string_limit_loop();
                true
            }
        }
    }

    fn grow_to(&mut self, new_m: u64) {
        match (K::KIND, self.mode) {
            (KeyKind::Identity, TableMode::Adaptive) => self.run_identity_adapt(new_m),
            _ => {
                self.rehash_with(new_m, self.hasher, false);
            }
        }
    }

    /// Moves the flat store into chained storage and runs the first rehash,
    /// which is also where adaptation begins.
    fn leave_constant_phase(&mut self) {
        let flat = self.flat.take().expect("called in constant phase");
        self.pairs.reserve(flat.len());
        for (k, v) in flat {
            self.pairs.push(Some((k, v)));
            self.next.push(0);
        }
        match self.mode {
            TableMode::Adaptive => self.run_identity_adapt(INITIAL_CHAINED_M_IDENTITY),
            TableMode::ConstantThenMid => {
                self.identity_policy.state = LadderState::Mid;
                self.rehash_with(INITIAL_CHAINED_M_IDENTITY, HasherConfig::Mid, false);
            }
            _ => unreachable!("fixed modes never run a constant phase"),
        }
    }

    /// Rehash-time adaptation for identity keys; also performs the rehash(es).
    fn run_identity_adapt(&mut self, new_m: u64) {
        debug_assert_eq!(K::KIND, KeyKind::Identity);
        let sample: Vec<u64> = self
            .pairs
            .iter()
            .filter_map(|s| s.as_ref().map(|(k, _)| k.word()))
            .take(SHIFT_SAMPLE_SIZE)
            .collect();
        let mut policy = self.identity_policy;
        let before = policy.state.rank();
        let n = self.n as u64;
        self.hasher = adapt::on_full_rehash_identity(&mut policy, n, new_m, &sample, |h, count| {
            let outcome = self.rehash_with(new_m, h, count);
            count.then_some(outcome.collisions)
        });
        self.escalations += u32::from(policy.state.rank() > before);
        self.identity_policy = policy;
    }

    /// Truncation-limit doubling loop for string/sequence keys.
    fn run_string_limit_loop(&mut self) {
        let mut policy = self.string_policy;
        let n = self.n as u64;
        let m = self.m();
        self.escalations += 1;
        adapt::on_truncated_long_chain_string(&mut policy, n, m, |limit| {
            let hasher = match K::KIND {
                KeyKind::String => HasherConfig::TruncatedString { limit },
                _ => HasherConfig::TruncatedSequence { limit },
            };
            let outcome = self.rehash_with(m, hasher, true);
            (outcome.collisions, outcome.truncated > 0)
        });
        self.string_policy = policy;
    }

    fn rehash_with(&mut self, new_m: u64, hasher: HasherConfig, count: bool) -> RehashOutcome {
        debug_assert!(new_m.is_power_of_two());
        debug_assert!(new_m >= self.n as u64);
        if K::KIND == KeyKind::Identity && hasher == HasherConfig::Murmur && self.cache.is_none() {
            self.cache = Some(vec![0; self.pairs.len()]);
        }
        let reuse_cache = hasher == self.hasher && self.cache.is_some();
        if self.index.len() != new_m as usize {
            self.index = vec![0; new_m as usize];
        } else {
            self.index.fill(0);
        }
        let mut collisions = 0u64;
        let mut truncated = 0u64;
        for slot in FIRST_SLOT..self.pairs.len() {
            let Some((key, _)) = &self.pairs[slot] else {
                continue;
            };
            let raw = if reuse_cache {
                self.cache.as_ref().expect("reuse_cache implies a cache")[slot]
            } else {
                key.hash_with(&hasher).raw()
            };
            if let Some(cache) = &mut self.cache {
                cache[slot] = raw;
            }
            let h = HashValue::from_raw(raw);
            truncated += u64::from(h.truncated());
            let b = h.bucket(new_m) as usize;
            collisions += u64::from(self.index[b] != 0);
            self.next[slot] = self.index[b];
            self.index[b] = slot as u32;
        }
        self.hasher = hasher;
        if count {
            self.last_rehash_collisions = Some(collisions);
        }
        RehashOutcome {
            collisions,
            truncated,
        }
    }

    fn alloc_slot(&mut self, key: K, value: V, h: HashValue) -> usize {
        debug_assert!(self.pairs.len() < u32::MAX as usize);
        if self.free_head != 0 {
            let slot = self.free_head as usize;
            self.free_head = self.next[slot];
            self.pairs[slot] = Some((key, value));
            self.next[slot] = 0;
            if let Some(cache) = &mut self.cache {
                cache[slot] = h.raw();
            }
            slot
        } else {
            self.pairs.push(Some((key, value)));
            self.next.push(0);
            if let Some(cache) = &mut self.cache {
                cache.push(h.raw());
            }
            self.pairs.len() - 1
        }
    }

    /// Structural integrity check: every live pair reachable from exactly one
    /// chain, chains acyclic, bucket residues and cached hashes current, free
    /// list disjoint and complete. Intended for tests and debugging.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if let Some(flat) = &self.flat {
            if flat.len() != self.n {
                return Err(format!("flat len {} != n {}", flat.len(), self.n));
            }
            if self.n > CONSTANT_PHASE_MAX {
                return Err(format!("constant phase holds {} keys", self.n));
            }
            return Ok(());
        }
        let m = self.m();
        if !m.is_power_of_two() {
            return Err(format!("m = {m} is not a power of two"));
        }
        if (self.n as u64) > m {
            return Err(format!("load factor above 1: n = {}, m = {m}", self.n));
        }
        if self.pairs.len() != self.next.len() {
            return Err("pairs and next lengths diverged".into());
        }
        if let Some(cache) = &self.cache {
            if cache.len() != self.pairs.len() {
                return Err("hash cache length diverged".into());
            }
        }
        if self.pairs[0].is_some() || self.pairs[1].is_some() {
            return Err("reserved slots 0 and 1 must stay empty".into());
        }
        let mut seen = vec![false; self.pairs.len()];
        let mut live = 0usize;
        for (b, &head) in self.index.iter().enumerate() {
            let mut idx = head as usize;
            let mut steps = 0usize;
            while idx != 0 {
                if steps > self.pairs.len() {
                    return Err(format!("cycle in bucket {b}"));
                }
                if seen[idx] {
                    return Err(format!("slot {idx} reachable from two chains"));
                }
                seen[idx] = true;
                let Some((key, _)) = &self.pairs[idx] else {
                    return Err(format!("bucket {b} chains to free slot {idx}"));
                };
                let h = key.hash_with(&self.hasher);
                if h.bucket(m) as usize != b {
                    return Err(format!("slot {idx} lives in bucket {b}, hashes elsewhere"));
                }
                if let Some(cache) = &self.cache {
                    if cache[idx] != h.raw() {
                        return Err(format!("stale cached hash for slot {idx}"));
                    }
                }
                live += 1;
                steps += 1;
                idx = self.next[idx] as usize;
            }
        }
        if live != self.n {
            return Err(format!("chains reach {live} pairs, n = {}", self.n));
        }
        let mut free = 0usize;
        let mut idx = self.free_head as usize;
        while idx != 0 {
            if free > self.pairs.len() {
                return Err("cycle in free list".into());
            }
            if seen[idx] {
                return Err(format!("slot {idx} on free list and in a chain"));
            }
            if self.pairs[idx].is_some() {
                return Err(format!("live slot {idx} on free list"));
            }
            seen[idx] = true;
            free += 1;
            idx = self.next[idx] as usize;
        }
        if live + free + FIRST_SLOT != self.pairs.len() {
            return Err(format!(
                "slot accounting off: {live} live + {free} free + 2 reserved != {}",
                self.pairs.len()
            ));
        }
        Ok(())
    }
}
