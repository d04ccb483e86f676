//! The hash function family.
//!
//! Word hashes range from free (constant, plain shifts) to the Murmur3
//! finalizer; string and sequence hashing is FNV-1a over a limited number of
//! characters. The cheap members are only safe for particular key shapes,
//! which is exactly the bet the adaptive table makes and polices.
//!
//! Hash values reserve their top bit as a truncation flag for variable-length
//! keys: a set flag means the hash saw only a limited prefix/affix of the key
//! and equal hashes do not imply distinct keys were fully distinguished.
//! Bucket derivation always masks the flag and takes the value modulo a
//! power-of-two bucket count.

use crate::{Error, Result};

/// Top bit of a hash value, set when the key was hashed under truncation.
pub const TRUNCATION_FLAG: u64 = 1 << 63;

/// 64-bit FNV prime.
pub const FNV_PRIME_64: u64 = 0x100_0000_01b3;

/// Default base-2 logarithm of the allocation page size (32KB pages).
pub const DEFAULT_PAGE_BITS: u32 = 15;

/// A word-sized hash whose most significant bit doubles as the truncation
/// flag for variable-length keys.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HashValue(u64);

impl HashValue {
    pub fn from_raw(v: u64) -> Self {
        Self(v)
    }

    /// Full word including the flag bit.
    pub fn raw(self) -> u64 {
        self.0
    }

    pub fn truncated(self) -> bool {
        self.0 & TRUNCATION_FLAG != 0
    }

    /// Bucket index for a power-of-two bucket count. The truncation flag is
    /// masked out before the modulo, keeping the flag invisible to bucketing.
    pub fn bucket(self, m: u64) -> u64 {
        debug_assert!(m.is_power_of_two());
        (self.0 & !TRUNCATION_FLAG) & (m - 1)
    }
}

/// One step of FNV-1a over a single octet.
#[inline]
pub fn fnv1a_step(h: u64, byte: u8) -> u64 {
    (h ^ u64::from(byte)).wrapping_mul(FNV_PRIME_64)
}

/// FNV-1a step widened to a whole word, used for sequence elements that are
/// already reduced to words.
#[inline]
pub fn fnv1a_word_step(h: u64, word: u64) -> u64 {
    (h ^ word).wrapping_mul(FNV_PRIME_64)
}

/// Hashes at most `limit` characters of `s`, alternating front and back and
/// moving inwards, with the hash seeded by the string length.
///
/// The ends of a string tend to be its most informative parts, and the
/// inward order lets a future rehash at a higher limit resume from a lower
/// one. The truncation flag is set exactly when `limit < s.len()`.
pub fn hash_string_limited(s: &[u8], limit: usize) -> HashValue {
    let len = s.len();
    let mut h = len as u64;
    let n = limit.min(len);
    let mut a = 0usize;
    let mut b = len.wrapping_sub(1);
    while a < (n >> 1) {
        h = fnv1a_step(h, s[a]);
        h = fnv1a_step(h, s[b]);
        a += 1;
        b = b.wrapping_sub(1);
    }
    if n % 2 == 1 {
        h = fnv1a_step(h, s[a]);
    }
    finish(h, limit < len)
}

/// Prefix-only variant for sequence keys whose elements are already reduced
/// to words. Sequences are not random-access in general, so only the first
/// `limit` elements participate.
pub fn hash_sequence_limited(items: &[u64], limit: usize) -> HashValue {
    let len = items.len();
    let mut h = len as u64;
    for &item in &items[..limit.min(len)] {
        h = fnv1a_word_step(h, item);
    }
    finish(h, limit < len)
}

/// Reduces a nested string element to a word for sequence hashing: the
/// element's own limited hash, flag bit included.
pub fn reduce_string_element(s: &[u8], limit: usize) -> u64 {
    hash_string_limited(s, limit).raw()
}

#[inline]
fn finish(mixed: u64, truncated: bool) -> HashValue {
    let v = mixed & !TRUNCATION_FLAG;
    HashValue(if truncated { v | TRUNCATION_FLAG } else { v })
}

/// Count of low bits shared by every key in the sample, clamped to 63.
///
/// For keys drawn from an arithmetic progression this recovers the largest
/// `s` with `2^s` dividing the common difference, regardless of the offset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct ShiftEstimate(u32);

impl ShiftEstimate {
    pub fn bits(self) -> u32 {
        self.0
    }
}

/// Detects common low bits across a key sample with one XOR and one OR per
/// key. An all-identical sample clamps to 63 so shifts stay defined.
pub fn count_common_low_bits(keys: &[u64]) -> Result<ShiftEstimate> {
    if keys.len() < 2 {
        return Err(Error::ShiftSampleTooSmall { len: keys.len() });
    }
    let first = keys[0];
    let mut mask = 0u64;
    for &k in &keys[1..] {
        mask |= first ^ k;
    }
    Ok(ShiftEstimate(mask.trailing_zeros().min(63)))
}

/// `k >> s`: perfect on arithmetic progressions with difference `odd * 2^s`.
#[inline]
pub fn arithmetic_hash(k: u64, s: u32) -> HashValue {
    debug_assert!(s <= 63);
    HashValue(k >> s)
}

/// `(k >> s') + (k >> page_bits)` with `s'` forced to 63 when `s` equals
/// `page_bits`, zeroing the first term instead of degenerating to
/// `2 * (k >> page_bits)`.
#[inline]
pub fn pointer_shift_hash(k: u64, s: u32, page_bits: u32) -> HashValue {
    debug_assert!(s <= 63 && page_bits <= 63);
    let s_eff = if s == page_bits { 63 } else { s };
    HashValue((k >> s_eff).wrapping_add(k >> page_bits))
}

/// `(k >> s) ^ murmur_mix(k >> page_bits)`: the shift hash salted by a
/// general-purpose hash of the page address.
#[inline]
pub fn pointer_mix_hash(k: u64, s: u32, page_bits: u32) -> HashValue {
    debug_assert!(s <= 63 && page_bits <= 63);
    HashValue((k >> s) ^ murmur_mix(k >> page_bits).raw())
}

/// The 64-bit Murmur3 finalizer (fmix64). A bijection on words with strong
/// avalanche behavior; zero is its fixed point.
#[inline]
pub fn murmur_mix(k: u64) -> HashValue {
    let mut h = k;
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
    h ^= h >> 33;
    h = h.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    h ^= h >> 33;
    HashValue(h)
}

/// A one-cycle middle rung between the shift hashes and the full mixer:
/// `k ^ (k >> 13)`.
///
/// Locality-preserving in the low bits on near-sequential keys and therefore
/// cache-friendly, but deliberately weak against keys whose entropy lives
/// only in bits >= 13 that cancel under the XOR.
#[inline]
pub fn mid_hash(k: u64) -> HashValue {
    HashValue(k ^ (k >> 13))
}

/// A fully specified hash function: the family member plus its parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HasherConfig {
    /// No hashing at all; the table runs a linear scan over a flat store.
    Constant,
    Arithmetic {
        shift: u32,
    },
    PointerShift {
        shift: u32,
        page_bits: u32,
    },
    PointerMix {
        shift: u32,
        page_bits: u32,
    },
    Mid,
    Murmur,
    TruncatedString {
        limit: usize,
    },
    TruncatedSequence {
        limit: usize,
    },
}

impl HasherConfig {
    /// Hashes a word key. Meaningless for the string/sequence members.
    pub fn hash_word(&self, k: u64) -> HashValue {
        match *self {
            HasherConfig::Constant => HashValue(0),
            HasherConfig::Arithmetic { shift } => arithmetic_hash(k, shift),
            HasherConfig::PointerShift { shift, page_bits } => {
                pointer_shift_hash(k, shift, page_bits)
            }
            HasherConfig::PointerMix { shift, page_bits } => pointer_mix_hash(k, shift, page_bits),
            HasherConfig::Mid => mid_hash(k),
            HasherConfig::Murmur => murmur_mix(k),
            HasherConfig::TruncatedString { .. } | HasherConfig::TruncatedSequence { .. } => {
                unreachable!("word keys are never hashed with a truncating hasher")
            }
        }
    }

    pub fn hash_bytes(&self, s: &[u8]) -> HashValue {
        match *self {
            HasherConfig::TruncatedString { limit } => hash_string_limited(s, limit),
            _ => unreachable!("byte keys are always hashed with a string hasher"),
        }
    }

    pub fn hash_words(&self, items: &[u64]) -> HashValue {
        match *self {
            HasherConfig::TruncatedSequence { limit } => hash_sequence_limited(items, limit),
            _ => unreachable!("sequence keys are always hashed with a sequence hasher"),
        }
    }

    /// Truncation limit for the string/sequence members.
    pub fn limit(&self) -> Option<usize> {
        match *self {
            HasherConfig::TruncatedString { limit } | HasherConfig::TruncatedSequence { limit } => {
                Some(limit)
            }
            _ => None,
        }
    }

    pub fn shift(&self) -> Option<u32> {
        match *self {
            HasherConfig::Arithmetic { shift }
            | HasherConfig::PointerShift { shift, .. }
            | HasherConfig::PointerMix { shift, .. } => Some(shift),
            _ => None,
        }
    }

    /// Short display name, used by stats and the harness output.
    pub fn name(&self) -> &'static str {
        match self {
            HasherConfig::Constant => "constant",
            HasherConfig::Arithmetic { .. } => "arithmetic",
            HasherConfig::PointerShift { .. } => "pointer-shift",
            HasherConfig::PointerMix { .. } => "pointer-mix",
            HasherConfig::Mid => "mid",
            HasherConfig::Murmur => "murmur",
            HasherConfig::TruncatedString { .. } => "truncated-string",
            HasherConfig::TruncatedSequence { .. } => "truncated-sequence",
        }
    }
}
