//! Deterministic workload generators.
//!
//! Each generator is a pure function of its parameters and seed: the same
//! spec always yields the same keys, byte for byte, because all randomness
//! flows from the pinned [`SplitMix64`] stream. Every key set comes with an
//! equal-sized, disjoint miss set for timing failed lookups.
//!
//! Integer keys stay below 2^62 (machine-word integers with tag headroom).
//! The float workload emits the IEEE-754 bit patterns of a run of consecutive
//! integers converted to `f32`, starting low enough that the run crosses
//! binade boundaries: each crossing halves the spacing between consecutive
//! patterns, invalidating any fixed estimate of their constant low bits. The
//! paged workload simulates a bump allocator handing out fixed-stride objects
//! from power-of-two pages.

use std::collections::HashSet;
use std::path::PathBuf;

use crate::{Error, Result, SplitMix64};

/// Keys in insertion order plus an equal-sized disjoint miss set.
#[derive(Clone, Debug)]
pub struct KeySet<K> {
    pub keys: Vec<K>,
    pub miss: Vec<K>,
}

/// Where string keys come from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StringSource {
    /// Newline-delimited byte strings; blank lines skipped, duplicates
    /// collapsed, `n` sampled without replacement.
    File(PathBuf),
    /// Random lowercase strings with lengths uniform in `[4, 44]`.
    Random,
    /// Equal-length strings sharing a 32-byte prefix and a 32-byte suffix,
    /// distinct only in the middle: the worst case for affix-truncated
    /// hashing.
    SharedAffix,
}

/// A workload family with its parameters (key count and seed live in
/// [`WorkloadSpec`]).
#[derive(Clone, Debug, PartialEq)]
pub enum WorkloadKind {
    /// Arithmetic progression with difference `d`.
    Prog {
        d: u64,
    },
    /// Strictly increasing keys with gaps uniform in `[1, max_skip]`.
    RndProg {
        max_skip: u64,
    },
    /// Bit patterns of consecutive integers converted to `f32`.
    FloatBits,
    /// Simulated page-allocator addresses.
    Paged {
        page_bits: u32,
        stride: u64,
        occupancy: f64,
    },
    Strings {
        source: StringSource,
    },
}

/// A fully specified workload: generation is a pure function of this value.
#[derive(Clone, Debug)]
pub struct WorkloadSpec {
    pub kind: WorkloadKind,
    pub n: usize,
    pub seed: u64,
}

/// Keys produced by a workload, tagged by key type.
#[derive(Clone, Debug)]
pub enum WorkloadKeys {
    Words(KeySet<u64>),
    Bytes(KeySet<Vec<u8>>),
}

const MAX_KEY_BITS: u32 = 62;

/// Arithmetic progression `a0 + i*d` from a large random offset; the miss
/// set continues the progression past the last key.
pub fn gen_prog(n: usize, d: u64, seed: u64) -> Result<KeySet<u64>> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidWorkload {
            reason: format!("prog needs n >= 1, d >= 1 (n={n}, d={d})"),
        });
    }
    let span = (2 * n as u64 + 2)
        .checked_mul(d)
        .filter(|&s| s < (1 << MAX_KEY_BITS) - (1 << 40))
        .ok_or_else(|| Error::InvalidWorkload {
            reason: "progression overflows the key range".into(),
        })?;
    let mut rng = SplitMix64::new(seed);
    let a0 = loop {
        let a0 = rng.range(1 << 32, 1 << 40);
        if a0 + span < (1 << MAX_KEY_BITS) {
            break a0;
        }
    };
    let keys = (0..n as u64).map(|i| a0 + i * d).collect();
    let miss = (0..n as u64).map(|i| a0 + (n as u64 + 1 + i) * d).collect();
    Ok(KeySet { keys, miss })
}

/// Random progression: gaps drawn uniformly from `[1, max_skip]`, so `0` to
/// `max_skip - 1` values are skipped between successive keys and the keys
/// stay distinct.
pub fn gen_rnd_prog(n: usize, max_skip: u64, seed: u64) -> Result<KeySet<u64>> {
    if n == 0 || max_skip == 0 {
        return Err(Error::InvalidWorkload {
            reason: format!("rnd needs n >= 1, max_skip >= 1 (n={n}, max_skip={max_skip})"),
        });
    }
    let mut rng = SplitMix64::new(seed);
    let mut cur = rng.range(1 << 32, 1 << 40);
    let mut keys = Vec::with_capacity(n);
    keys.push(cur);
    for _ in 1..n {
        cur += 1 + rng.below(max_skip);
        keys.push(cur);
    }
    // One skipped gap keeps the miss set strictly beyond the keys.
    cur += 1 + rng.below(max_skip);
    let mut miss = Vec::with_capacity(n);
    for _ in 0..n {
        cur += 1 + rng.below(max_skip);
        miss.push(cur);
    }
    Ok(KeySet { keys, miss })
}

/// Bit patterns of `(a0 + i) as f32`, zero-extended to words.
///
/// The offset starts in a low binade, so consecutive integers map to patterns
/// with a large constant stride that halves at each power-of-two boundary the
/// run crosses; shift-based hashes tuned to the initial stride degrade as the
/// run proceeds. All values stay far below 2^24, where `f32` still represents
/// every integer exactly and distinctly.
pub fn gen_float_bits(n: usize, seed: u64) -> Result<KeySet<u64>> {
    if n == 0 || n > (1 << 22) {
        return Err(Error::InvalidWorkload {
            reason: format!("float workload supports 1..=2^22 keys, got {n}"),
        });
    }
    let mut rng = SplitMix64::new(seed);
    let a0 = rng.range(1 << 10, (1 << 11) - 64);
    let bits = |v: u64| u64::from((v as f32).to_bits());
    let keys = (0..n as u64).map(|i| bits(a0 + i)).collect();
    let miss = (0..n as u64).map(|i| bits(a0 + n as u64 + 1 + i)).collect();
    Ok(KeySet { keys, miss })
}

/// Simulated page-based allocator: `pages` random distinct page bases, and on
/// each page `per_page` distinct object addresses `base + slot * stride`.
/// The final key order is a seeded shuffle across all pages.
pub fn gen_paged_exact(
    pages: usize,
    per_page: usize,
    page_bits: u32,
    stride: u64,
    seed: u64,
) -> Result<KeySet<u64>> {
    validate_paged(page_bits, stride)?;
    let capacity = (1u64 << page_bits) / stride;
    if per_page == 0 || per_page as u64 > capacity {
        return Err(Error::InvalidWorkload {
            reason: format!("{per_page} keys per page exceed the page capacity {capacity}"),
        });
    }
    if pages == 0 {
        return Err(Error::InvalidWorkload {
            reason: "paged workload needs pages >= 1".into(),
        });
    }
    let mut rng = SplitMix64::new(seed);
    let mut bases = HashSet::with_capacity(2 * pages);
    let draw_base = |rng: &mut SplitMix64, taken: &mut HashSet<u64>| loop {
        let r = rng.range(1, 1 << (46 - page_bits));
        if taken.insert(r) {
            return r << page_bits;
        }
    };
    let fill = |rng: &mut SplitMix64, taken: &mut HashSet<u64>, out: &mut Vec<u64>| {
        for _ in 0..pages {
            let base = draw_base(rng, taken);
            let mut slots: Vec<u64> = (0..capacity).collect();
            rng.shuffle(&mut slots);
            out.extend(slots[..per_page].iter().map(|&s| base + s * stride));
        }
        rng.shuffle(out);
    };
    let mut keys = Vec::with_capacity(pages * per_page);
    let mut miss = Vec::with_capacity(pages * per_page);
    fill(&mut rng, &mut bases, &mut keys);
    fill(&mut rng, &mut bases, &mut miss);
    Ok(KeySet { keys, miss })
}

/// Paged workload sized by total key count: pages are filled to `occupancy`
/// of their capacity and as many pages are allocated as `n` requires.
pub fn gen_paged(
    n: usize,
    page_bits: u32,
    stride: u64,
    occupancy: f64,
    seed: u64,
) -> Result<KeySet<u64>> {
    validate_paged(page_bits, stride)?;
    if !(occupancy > 0.0 && occupancy <= 1.0) {
        return Err(Error::InvalidWorkload {
            reason: format!("occupancy {occupancy} not in (0, 1]"),
        });
    }
    if n == 0 {
        return Err(Error::InvalidWorkload {
            reason: "paged workload needs n >= 1".into(),
        });
    }
    let capacity = (1u64 << page_bits) / stride;
    let per_page = ((capacity as f64 * occupancy).round() as usize).clamp(1, capacity as usize);
    let pages = n.div_ceil(per_page);
    let mut set = gen_paged_exact(pages, per_page, page_bits, stride, seed)?;
    set.keys.truncate(n);
    set.miss.truncate(n);
    Ok(set)
}

fn validate_paged(page_bits: u32, stride: u64) -> Result<()> {
    if !(8..=40).contains(&page_bits) {
        return Err(Error::InvalidWorkload {
            reason: format!("page_bits {page_bits} not in 8..=40"),
        });
    }
    if stride == 0 || stride % 16 != 0 || stride > (1 << page_bits) {
        return Err(Error::InvalidWorkload {
            reason: format!("stride {stride} must be a positive multiple of 16 within the page"),
        });
    }
    Ok(())
}

/// Splits a newline-delimited corpus into byte strings, skipping blank
/// lines. No escaping and no carriage-return handling: a line is a key.
pub fn parse_corpus(bytes: &[u8]) -> Vec<Vec<u8>> {
    bytes
        .split(|&b| b == b'\n')
        .filter(|line| !line.is_empty())
        .map(<[u8]>::to_vec)
        .collect()
}

/// Equal-length strings agreeing on a 32-byte prefix and 32-byte suffix,
/// pairwise distinct only in the 16 bytes between them.
pub fn shared_affix_corpus(count: usize) -> Vec<Vec<u8>> {
    let prefix = b"the-same-thirty-two-byte-prefix-";
    let suffix = b"-and-the-same-32-byte-suffix-too";
    (0..count)
        .map(|i| {
            let mut s = Vec::with_capacity(80);
            s.extend_from_slice(prefix);
            s.extend_from_slice(format!("{i:016x}").as_bytes());
            s.extend_from_slice(suffix);
            s
        })
        .collect()
}

/// String keys from a file, the random generator, or the shared-affix
/// builtin. The miss set is always random, redrawn on any collision with the
/// key set.
pub fn gen_strings(source: &StringSource, n: usize, seed: u64) -> Result<KeySet<Vec<u8>>> {
    if n == 0 {
        return Err(Error::InvalidWorkload {
            reason: "string workload needs n >= 1".into(),
        });
    }
    let mut rng = SplitMix64::new(seed);
    let keys: Vec<Vec<u8>> = match source {
        StringSource::File(path) => {
            let corpus = parse_corpus(&std::fs::read(path)?);
            let mut seen = HashSet::new();
            let mut distinct: Vec<Vec<u8>> = corpus
                .into_iter()
                .filter(|s| seen.insert(s.clone()))
                .collect();
            if distinct.len() < n {
                return Err(Error::CorpusTooSmall {
                    have: distinct.len(),
                    need: n,
                });
            }
            // Partial Fisher–Yates: the first n entries become the sample.
            for i in 0..n {
                let j = i as u64 + rng.below((distinct.len() - i) as u64);
                distinct.swap(i, j as usize);
            }
            distinct.truncate(n);
            distinct
        }
        StringSource::Random => {
            let mut seen = HashSet::with_capacity(n);
            let mut keys = Vec::with_capacity(n);
            while keys.len() < n {
                let s = random_string(&mut rng);
                if seen.insert(s.clone()) {
                    keys.push(s);
                }
            }
            keys
        }
        StringSource::SharedAffix => shared_affix_corpus(n),
    };
    let taken: HashSet<&[u8]> = keys.iter().map(Vec::as_slice).collect();
    let mut miss = Vec::with_capacity(n);
    let mut miss_seen = HashSet::with_capacity(n);
    while miss.len() < n {
        let s = random_string(&mut rng);
        if !taken.contains(s.as_slice()) && miss_seen.insert(s.clone()) {
            miss.push(s);
        }
    }
    Ok(KeySet { keys, miss })
}

fn random_string(rng: &mut SplitMix64) -> Vec<u8> {
    let len = rng.range(4, 45) as usize;
    (0..len)
        .map(|_| rng.range(b'a'.into(), u64::from(b'z') + 1) as u8)
        .collect()
}

/// Generates the keys for a workload spec.
pub fn generate(spec: &WorkloadSpec) -> Result<WorkloadKeys> {
    Ok(match &spec.kind {
        WorkloadKind::Prog { d } => WorkloadKeys::Words(gen_prog(spec.n, *d, spec.seed)?),
        WorkloadKind::RndProg { max_skip } => {
            WorkloadKeys::Words(gen_rnd_prog(spec.n, *max_skip, spec.seed)?)
        }
        WorkloadKind::FloatBits => WorkloadKeys::Words(gen_float_bits(spec.n, spec.seed)?),
        WorkloadKind::Paged {
            page_bits,
            stride,
            occupancy,
        } => WorkloadKeys::Words(gen_paged(
            spec.n, *page_bits, *stride, *occupancy, spec.seed,
        )?),
        WorkloadKind::Strings { source } => {
            WorkloadKeys::Bytes(gen_strings(source, spec.n, spec.seed)?)
        }
    })
}

/// Parses the command-line workload grammar:
/// `prog:<d>`, `rnd:<max_skip>`, `float`, `paged[:<stride>:<occupancy>]`,
/// `strings:<file>`, `strings-random`, `strings-shared-affix`.
pub fn parse_workload(text: &str) -> Result<WorkloadKind> {
    let bad = |reason: String| Error::InvalidWorkload { reason };
    if let Some(rest) = text.strip_prefix("prog:") {
        let d = rest
            .parse()
            .map_err(|_| bad(format!("bad difference {rest:?}")))?;
        return Ok(WorkloadKind::Prog { d });
    }
    if let Some(rest) = text.strip_prefix("rnd:") {
        let max_skip = rest
            .parse()
            .map_err(|_| bad(format!("bad skip bound {rest:?}")))?;
        return Ok(WorkloadKind::RndProg { max_skip });
    }
    if text == "float" {
        return Ok(WorkloadKind::FloatBits);
    }
    if text == "paged" {
        return Ok(WorkloadKind::Paged {
            page_bits: 15,
            stride: 16,
            occupancy: 1.0,
        });
    }
    if let Some(rest) = text.strip_prefix("paged:") {
        let (stride, occ) = rest
            .split_once(':')
            .ok_or_else(|| bad("paged takes stride:occupancy".into()))?;
        let stride = stride
            .parse()
            .map_err(|_| bad(format!("bad stride {stride:?}")))?;
        let occupancy = occ
            .parse()
            .map_err(|_| bad(format!("bad occupancy {occ:?}")))?;
        return Ok(WorkloadKind::Paged {
            page_bits: 15,
            stride,
            occupancy,
        });
    }
    if text == "strings-random" {
        return Ok(WorkloadKind::Strings {
            source: StringSource::Random,
        });
    }
    if text == "strings-shared-affix" {
        return Ok(WorkloadKind::Strings {
            source: StringSource::SharedAffix,
        });
    }
    if let Some(rest) = text.strip_prefix("strings:") {
        if rest.is_empty() {
            return Err(bad("strings: needs a file path".into()));
        }
        return Ok(WorkloadKind::Strings {
            source: StringSource::File(PathBuf::from(rest)),
        });
    }
    Err(bad(format!("unknown workload {text:?}")))
}
