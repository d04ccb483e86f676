//! Escalation policies: when and how a table switches hash functions.
//!
//! Word-identity tables climb a one-way ladder
//! `constant -> pointer-shift -> mid -> murmur`. The first switch happens at
//! the first real rehash, where a shift is detected from a small key sample.
//! Later switches are driven by two detectors that work in tandem: collision
//! counts at rehash time catch gradual degradation, and the max-chain check
//! at insert time catches catastrophic pile-ups in a single bucket.
//!
//! String and sequence tables instead adjust a truncation limit. When an
//! insert whose hash was truncated lands in an improbably long chain, the
//! limit doubles and the table rehashes, repeating until the collision count
//! drops to a plausible level or no truncated hashes remain.

use crate::hashers::{count_common_low_bits, HasherConfig, ShiftEstimate};
use crate::metrics::{self, ChainPolicy};
use crate::table::KeyKind;

/// Number of keys sampled for shift detection at the first rehash.
pub const SHIFT_SAMPLE_SIZE: usize = 16;

/// Keys handled by the flat constant-hash store before switching to chains.
pub const CONSTANT_PHASE_MAX: usize = 32;

/// Bucket count below which mid-hash rehashes skip collision counting.
pub const MID_COUNT_FLOOR_M: u64 = 2048;

/// Position on the identity-key safety ladder.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LadderState {
    Constant,
    PointerShift(ShiftEstimate),
    Mid,
    Murmur,
}

impl LadderState {
    /// Ordering index; escalation must never decrease it.
    pub fn rank(self) -> u8 {
        match self {
            LadderState::Constant => 0,
            LadderState::PointerShift(_) => 1,
            LadderState::Mid => 2,
            LadderState::Murmur => 3,
        }
    }

    pub fn hasher(self, page_bits: u32) -> HasherConfig {
        match self {
            LadderState::Constant => HasherConfig::Constant,
            LadderState::PointerShift(s) => HasherConfig::PointerShift {
                shift: s.bits(),
                page_bits,
            },
            LadderState::Mid => HasherConfig::Mid,
            LadderState::Murmur => HasherConfig::Murmur,
        }
    }
}

/// Adaptation state for a word-identity table.
#[derive(Clone, Copy, Debug)]
pub struct IdentityPolicy {
    pub state: LadderState,
    pub page_bits: u32,
}

impl IdentityPolicy {
    pub fn new(page_bits: u32) -> Self {
        Self {
            state: LadderState::Constant,
            page_bits,
        }
    }

    /// Next ladder state after a long chain was observed during an insert.
    /// The constant phase is exempt (a linear scan has no chains) and murmur
    /// absorbs.
    pub fn next_on_long_chain(&self) -> LadderState {
        match self.state {
            LadderState::Constant => LadderState::Constant,
            LadderState::PointerShift(_) => LadderState::Mid,
            LadderState::Mid => LadderState::Murmur,
            LadderState::Murmur => LadderState::Murmur,
        }
    }

    pub fn chain_threshold(&self) -> u32 {
        metrics::max_chain_threshold(1, ChainPolicy::Identity)
    }
}

/// Rehash-time adaptation for identity tables.
///
/// `rehash` rebuilds the table's chains under the given hasher and returns
/// the collision count when asked to count. The routine falls through the
/// ladder: entering in one state may exit several rungs higher, rehashing
/// under each newly chosen hasher along the way.
///
/// Collision counting happens on every pointer-shift rehash but only from
/// `MID_COUNT_FLOOR_M` buckets upward for the mid hash, keeping the cheap
/// common case cheap.
pub fn on_full_rehash_identity<F>(
    policy: &mut IdentityPolicy,
    n: u64,
    m: u64,
    sample: &[u64],
    mut rehash: F,
) -> HasherConfig
where
    F: FnMut(HasherConfig, bool) -> Option<u64>,
{
    let pb = policy.page_bits;
    if policy.state == LadderState::Constant && m == 64 {
        let take = sample.len().min(SHIFT_SAMPLE_SIZE);
        let s = count_common_low_bits(&sample[..take])
            .expect("constant phase always hands over at least 2 keys");
        policy.state = LadderState::PointerShift(s);
    }
    if let LadderState::PointerShift(_) = policy.state {
        let c = rehash(policy.state.hasher(pb), true).expect("counted rehash returns a count");
        if metrics::too_many_collisions(n, m, c) {
            policy.state = LadderState::Mid;
        }
    }
    if policy.state == LadderState::Mid {
        if m < MID_COUNT_FLOOR_M {
            rehash(policy.state.hasher(pb), false);
        } else {
            let c = rehash(policy.state.hasher(pb), true).expect("counted rehash returns a count");
            if metrics::too_many_collisions(n, m, c) {
                policy.state = LadderState::Murmur;
            }
        }
    }
    if policy.state == LadderState::Murmur {
        rehash(policy.state.hasher(pb), false);
    }
    policy.state.hasher(pb)
}

/// Truncation-limit state for string and sequence tables.
#[derive(Clone, Copy, Debug)]
pub struct StringPolicy {
    pub limit: usize,
    pub initial_limit: usize,
}

impl StringPolicy {
    pub fn new(kind: KeyKind) -> Self {
        let limit = initial_limit(kind);
        Self {
            limit,
            initial_limit: limit,
        }
    }

    /// Chain length that marks a truncated insert as suspicious at the
    /// current table size. Re-read on every use, so a resize switches to the
    /// tighter precomputed threshold automatically.
    pub fn chain_threshold(&self, m: u64) -> u32 {
        metrics::max_chain_threshold(m, ChainPolicy::String)
    }
}

/// Starting truncation limit per key kind: 4 elements for sequences, 16
/// characters for strings (long enough for most short keys, short enough to
/// keep truncation active on long ones).
pub fn initial_limit(kind: KeyKind) -> usize {
    match kind {
        KeyKind::Sequence => 4,
        _ => 16,
    }
}

/// Limit-doubling loop run when a truncated insert hits a long chain.
///
/// Doubles the limit and rehashes, then keeps doubling while the collision
/// count still looks implausible for the uniform hash and truncated hashes
/// remain. `rehash` rebuilds under the new limit and reports the collision
/// count plus whether any cached hash still carries the truncation flag.
/// Returns the final limit. Terminates because the limit doubles past every
/// key length in finitely many steps, clearing all truncation flags.
pub fn on_truncated_long_chain_string<F>(
    policy: &mut StringPolicy,
    n: u64,
    m: u64,
    mut rehash: F,
) -> usize
where
    F: FnMut(usize) -> (u64, bool),
{
    loop {
        policy.limit = policy.limit.saturating_mul(2);
        let (collisions, any_truncated) = rehash(policy.limit);
        if !metrics::too_many_collisions(n, m, collisions) || !any_truncated {
            return policy.limit;
        }
    }
}
