//! Adaptive hashing: hash tables that pick their hash function online.
//!
//! Most hash tables fix their hash function up front and hope it fits the
//! keys. This crate takes the opposite view: start with the cheapest hash
//! that could possibly work and climb a safety ladder (constant scan →
//! shift-based pointer hashes → a light mixer → the Murmur3 finalizer) as the
//! observed keys demand it. String and sequence keys get the same treatment
//! through a dynamically adjusted truncation limit, so short keys are hashed
//! in full while long keys are only hashed as deep as collisions require.
//!
//! The crate is organized around the table itself plus the instruments needed
//! to evaluate it:
//!
//! - [`table`]: the separate-chaining [`AdaptiveTable`] with an index-vector /
//!   next-vector layout over a stable pair store.
//! - [`hashers`]: the hash function family (FNV-1a with truncation, shift
//!   detection, pointer-shift, pointer-mix, the Murmur3 finalizer).
//! - [`adapt`]: the escalation policies that decide when and how to switch.
//! - [`metrics`]: bucket statistics, lookup cost, minimal cost, regret, and
//!   the collision-threshold tests that drive adaptation.
//! - [`keygen`]: deterministic workload generators (progressions, float bit
//!   patterns, simulated allocator pages, string corpora).
//! - [`mod@bench`]: a measurement harness with resize-segment planning, a
//!   PUT/GET/MISS/DEL protocol, and TSV output.

pub mod adapt;
pub mod bench;
pub mod hashers;
pub mod keygen;
pub mod metrics;
pub mod table;

pub use hashers::{HashValue, HasherConfig, ShiftEstimate};
pub use metrics::{BucketCounts, CostReport};
pub use table::{AdaptiveTable, IdentityTable, KeyKind, SequenceTable, StringTable, TableMode};

/// Errors reported by the library's fallible entry points.
///
/// Hot paths (table operations) are infallible by construction; errors are
/// confined to argument validation, generation, and I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("bucket count must be a nonzero power of two, got {m}")]
    InvalidBucketCount { m: u64 },
    #[error("cost is undefined for an empty table")]
    EmptyTable,
    #[error("keys-per-page {per_page} must divide the key count {n}")]
    PageKeysDoNotDivide { per_page: u64, n: u64 },
    #[error("shift detection needs at least 2 keys, got {len}")]
    ShiftSampleTooSmall { len: usize },
    #[error("monte carlo needs at least one trial")]
    NoTrials,
    #[error("invalid workload parameter: {reason}")]
    InvalidWorkload { reason: String },
    #[error("corpus holds {have} distinct keys but {need} were requested")]
    CorpusTooSmall { have: usize, need: usize },
    #[error("unsupported combination: {reason}")]
    Unsupported { reason: String },
    #[error("malformed table data at line {line}: {reason}")]
    TsvParse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// The pinned pseudo-random generator used everywhere randomness is needed.
///
/// This is the splitmix64 sequence (Steele et al.'s `SplittableRandom`
/// finalizer). It is fixed by contract so that generated corpora and
/// simulations are byte-reproducible across platforms and across ports of
/// this tool to other languages.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Derives an independent stream for a sub-task (e.g. one replica of one
    /// measurement point) without correlating it with the parent stream.
    pub fn derive(seed: u64, stream: u64) -> Self {
        let mut g = Self::new(seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        g.next_u64();
        g
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform draw from `[0, bound)` by rejection from the top of the range.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        let zone = u64::MAX - u64::MAX % bound;
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % bound;
            }
        }
    }

    pub fn range(&mut self, lo: u64, hi: u64) -> u64 {
        debug_assert!(lo < hi);
        lo + self.below(hi - lo)
    }

    /// In-place Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}
