//! Bucket statistics and the lookup cost model.
//!
//! Cost here is the expected number of key comparisons for a successful
//! lookup: a bucket holding `c` keys contributes `c * (c + 1) / 2` to the
//! total, and the mean over all `n` keys is the table's cost. A hash is
//! perfect when every bucket holds `floor(n/m)` or `floor(n/m) + 1` keys;
//! regret is the cost in excess of that optimum.
//!
//! Sums are accumulated in wide integers and divided once at the end, so the
//! reported numbers are bit-identical across platforms. Perfect distributions
//! produce a regret of exactly `0.0`, not merely a small one.

use std::sync::OnceLock;

use crate::hashers::HashValue;
use crate::{Error, Result, SplitMix64};

/// Per-bucket occupancy histogram for `n` keys in `m` buckets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BucketCounts {
    counts: Vec<u64>,
    n: u64,
}

impl BucketCounts {
    /// Builds a histogram from explicit per-bucket counts. The length must be
    /// a nonzero power of two.
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        let m = counts.len() as u64;
        if m == 0 || !m.is_power_of_two() {
            return Err(Error::InvalidBucketCount { m });
        }
        let n = counts.iter().sum();
        Ok(Self { counts, n })
    }

    /// Buckets the given hash values modulo `m` and counts occupancy.
    pub fn from_hashes(hashes: &[HashValue], m: u64) -> Result<Self> {
        if m == 0 || !m.is_power_of_two() {
            return Err(Error::InvalidBucketCount { m });
        }
        let mut counts = vec![0u64; m as usize];
        for h in hashes {
            counts[h.bucket(m) as usize] += 1;
        }
        Ok(Self {
            counts,
            n: hashes.len() as u64,
        })
    }

    pub fn m(&self) -> u64 {
        self.counts.len() as u64
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Number of keys that landed in an already-occupied bucket.
    pub fn collisions(&self) -> u64 {
        self.counts.iter().map(|&c| c.saturating_sub(1)).sum()
    }

    pub fn empty_buckets(&self) -> u64 {
        self.counts.iter().filter(|&&c| c == 0).count() as u64
    }

    pub fn max_chain(&self) -> u64 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    /// True when every bucket holds `floor(n/m)` or `floor(n/m) + 1` keys
    /// with the right multiplicities.
    pub fn is_perfect(&self) -> bool {
        let m = self.m();
        let q = self.n / m;
        let r = self.n % m;
        let over = self.counts.iter().filter(|&&c| c == q + 1).count() as u64;
        self.counts.iter().all(|&c| c == q || c == q + 1) && over == r
    }
}

/// Cost, minimal cost, and their difference for one bucket distribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostReport {
    /// Expected comparisons per successful lookup.
    pub cost: f64,
    /// Cost of a perfect distribution of the same `n` and `m`.
    pub min_cost: f64,
    /// `cost - min_cost`, zero exactly for perfect distributions.
    pub regret: f64,
}

/// Expected comparisons per successful lookup: `(1/n) * sum c_b (c_b + 1) / 2`.
///
/// Undefined for `n = 0`; composite entry points treat empty tables as cost 0
/// instead of calling this.
pub fn cost(bc: &BucketCounts) -> Result<f64> {
    if bc.n == 0 {
        return Err(Error::EmptyTable);
    }
    let total: u128 = bc.counts.iter().map(|&c| c as u128 * (c as u128 + 1)).sum();
    Ok(total as f64 / (2 * bc.n) as f64)
}

/// Cost of a perfect distribution of `n` keys in `m` buckets:
/// `(m - r) q (q + 1) / 2n + r (q + 1)(q + 2) / 2n` with `q = n / m`,
/// `r = n mod m`. Returns 0 for an empty table.
pub fn min_cost(n: u64, m: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    debug_assert!(m >= 1);
    let q = (n / m) as u128;
    let r = (n % m) as u128;
    let numer = (m as u128 - r) * q * (q + 1) + r * (q + 1) * (q + 2);
    numer as f64 / (2 * n) as f64
}

/// Cost report for a set of hash values bucketed modulo `m`.
pub fn regret(hashes: &[HashValue], m: u64) -> Result<CostReport> {
    let bc = BucketCounts::from_hashes(hashes, m)?;
    Ok(report_for_counts(&bc))
}

/// Cost report straight from an occupancy histogram. Empty tables report
/// zero cost and zero regret.
pub fn report_for_counts(bc: &BucketCounts) -> CostReport {
    if bc.n == 0 {
        return CostReport {
            cost: 0.0,
            min_cost: 0.0,
            regret: 0.0,
        };
    }
    let cost = cost(bc).expect("n > 0");
    let min_cost = min_cost(bc.n, bc.m());
    CostReport {
        cost,
        min_cost,
        regret: cost - min_cost,
    }
}

/// Expected cost when each key is assigned to a bucket independently and
/// uniformly: `1 + (n - 1) / 2m`.
pub fn expected_uniform_cost(n: u64, m: u64) -> f64 {
    debug_assert!(n >= 1 && m >= 1);
    1.0 + (n as f64 - 1.0) / (2.0 * m as f64)
}

/// The stated expected regret of the uniform hash at integer load factors:
/// `0.5 + 1/m`.
///
/// Note that the difference `expected_uniform_cost(qm, m) - min_cost(qm, m)`
/// evaluates to `0.5 - 1/(2m)`; see `uniform_regret_reference` for the
/// reference curve used by the harness at non-integer load factors.
pub fn expected_uniform_regret(m: u64) -> f64 {
    debug_assert!(m >= 1);
    0.5 + 1.0 / m as f64
}

/// Uniform-hash regret reference column: `expected_uniform_regret(m)` at
/// integer load factors and `expected_uniform_cost - min_cost` elsewhere.
pub fn uniform_regret_reference(n: u64, m: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    if n % m == 0 {
        expected_uniform_regret(m)
    } else {
        expected_uniform_cost(n, m) - min_cost(n, m)
    }
}

/// Expected cost of the pointer-mix hash for `n` keys spread over pages of
/// `u` keys each: `1 + (n - u min(1, 2^(PB-s)/m)) / 2m`.
///
/// `u` must divide `n` (keys are distributed over pages evenly).
pub fn expected_pointer_mix_cost(n: u64, u: u64, m: u64, page_bits: u32, s: u32) -> Result<f64> {
    if u == 0 || n % u != 0 {
        return Err(Error::PageKeysDoNotDivide { per_page: u, n });
    }
    debug_assert!(s <= page_bits && page_bits < 64);
    let window = (1u128 << (page_bits - s)) as f64;
    let guaranteed = u as f64 * (window / m as f64).min(1.0);
    Ok(1.0 + (n as f64 - guaranteed) / (2.0 * m as f64))
}

/// Expected number of unused buckets under the uniform hash: `m (1 - 1/m)^n`.
pub fn expected_empty_buckets(n: u64, m: u64) -> f64 {
    debug_assert!(m >= 1);
    m as f64 * (1.0 - 1.0 / m as f64).powf(n as f64)
}

/// Which collision-threshold rule applies at a given table size.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThresholdRule {
    /// `m < 1024`: too many when `c > n >> 1`.
    HalfN,
    /// `1024 <= m < 4096`: too many when `c > (n >> 1) - (n >> 4)`.
    SevenSixteenthsN,
    /// `m >= 4096`: too many when `(c + m - n)/m > exp(-n/m) / 0.9`.
    ExpBound,
}

pub fn threshold_rule(m: u64) -> ThresholdRule {
    if m < 1024 {
        ThresholdRule::HalfN
    } else if m < 4096 {
        ThresholdRule::SevenSixteenthsN
    } else {
        ThresholdRule::ExpBound
    }
}

/// Tests whether `c` collisions among `n` keys in `m` buckets exceed what the
/// uniform hash would be expected to produce.
///
/// The small-table tiers avoid the exponential: they reduce to shifts and a
/// compare. The number of unused buckets is `c + m - n`, which is what the
/// large-table tier compares against the `exp(-f) / 0.9` bound.
pub fn too_many_collisions(n: u64, m: u64, c: u64) -> bool {
    match threshold_rule(m) {
        ThresholdRule::HalfN => c > n >> 1,
        ThresholdRule::SevenSixteenthsN => c > (n >> 1) - (n >> 4),
        ThresholdRule::ExpBound => {
            let f = n as f64 / m as f64;
            let unused = (c as i128 + m as i128 - n as i128) as f64;
            unused / m as f64 > (-f).exp() / 0.9
        }
    }
}

/// Chain-length policies for the max-chain trigger.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChainPolicy {
    /// Word-identity tables: a flat threshold of 14, safe for every table
    /// size at load factor 1 with better than 99% probability.
    Identity,
    /// String tables: the tightest per-`m` threshold whose uniform-hash
    /// false-positive probability stays below 1%.
    String,
}

/// Chain length at which an insert should be treated as suspicious.
///
/// For `ChainPolicy::String` this is the smallest `L` with
/// `m * P[Binomial(m, 1/m) >= L] < 0.01` (a union bound over buckets at load
/// factor 1), memoized for every power-of-two `m`.
pub fn max_chain_threshold(m: u64, policy: ChainPolicy) -> u32 {
    match policy {
        ChainPolicy::Identity => 14,
        ChainPolicy::String => {
            debug_assert!(m.is_power_of_two());
            static TABLE: OnceLock<[u32; 64]> = OnceLock::new();
            let table = TABLE.get_or_init(|| {
                let mut t = [0u32; 64];
                for (bit, slot) in t.iter_mut().enumerate() {
                    *slot = string_threshold_for(1u64 << bit);
                }
                t
            });
            table[m.trailing_zeros() as usize]
        }
    }
}

fn string_threshold_for(m: u64) -> u32 {
    if m == 1 {
        // Binomial(1, 1) is the constant 1; any chain of 2 is impossible
        // under one key, so the threshold degenerates.
        return 2;
    }
    let mf = m as f64;
    let p_ratio = 1.0 / (mf - 1.0); // p / (1 - p) with p = 1/m
                                    // pmf of Binomial(m, 1/m), ascending; terms decay fast past the mean 1.
    let mut pmf = Vec::with_capacity(64);
    let mut cur = ((-1.0 / mf).ln_1p() * mf).exp(); // (1 - 1/m)^m
    let mut k = 0u64;
    while cur > 1e-300 && k <= m {
        pmf.push(cur);
        cur = cur * (m - k) as f64 / (k + 1) as f64 * p_ratio;
        k += 1;
    }
    // Smallest L with m * tail(L) < 0.01, summing tails from the top for
    // accuracy.
    let mut tail = 0.0;
    let mut threshold = pmf.len() as u32 + 1;
    for (idx, term) in pmf.iter().enumerate().rev() {
        if mf * (tail + term) >= 0.01 {
            break;
        }
        tail += term;
        threshold = idx as u32;
    }
    threshold
}

/// Mean and standard error of the lookup cost over `trials` independent
/// uniform assignments of `n` keys to `m` buckets. Deterministic per seed.
pub fn monte_carlo_uniform_cost(n: u64, m: u64, trials: u64, seed: u64) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::NoTrials);
    }
    if m == 0 || !m.is_power_of_two() {
        return Err(Error::InvalidBucketCount { m });
    }
    let mut rng = SplitMix64::new(seed);
    let mut counts = vec![0u64; m as usize];
    let mask = m - 1;
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for _ in 0..trials {
        counts.fill(0);
        for _ in 0..n {
            counts[(rng.next_u64() & mask) as usize] += 1;
        }
        let total: u64 = counts.iter().map(|&c| c * (c + 1)).sum();
        let cost = total as f64 / (2 * n) as f64;
        sum += cost;
        sumsq += cost * cost;
    }
    let t = trials as f64;
    let mean = sum / t;
    let se = if trials == 1 {
        0.0
    } else {
        let var = ((sumsq - sum * sum / t) / (t - 1.0)).max(0.0);
        (var / t).sqrt()
    };
    Ok((mean, se))
}
