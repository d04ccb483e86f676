//! Measurement harness.
//!
//! The protocol per measurement point: generate a key set, time PUT while
//! populating an empty table in generated order, then GET over the keys in
//! random order, then MISS over the disjoint miss set, then DEL until the
//! table is empty again — in that order. Points are the endpoints of resize
//! segments (ranges of key counts within which the table never resizes), so
//! per-size curves can be interpolated from few measurements.
//!
//! Below 100 keys a single run is too short for the clock, so enough table
//! replicas (each with its own key sets) are timed together that the total
//! key count reaches 100. Every point is measured at least three times and
//! until the total operation count exceeds five million; `budget_ops` lowers
//! that floor for quick runs, and the TSV output is then marked with a
//! comment line so reduced runs are never mistaken for full ones.
//!
//! Timing goes through the [`Clock`] trait; tests drive the whole harness
//! with a deterministic mock.

use std::io::{BufRead, Write};
use std::time::Instant;

use crate::keygen::{
    gen_float_bits, gen_paged, gen_prog, gen_rnd_prog, gen_strings, KeySet, WorkloadKind,
};
use crate::metrics::uniform_regret_reference;
use crate::table::{AdaptiveTable, KeyKind, TableKey, TableMode, TableStats};
use crate::{Error, Result, SplitMix64};

/// Monotonic nanosecond source.
pub trait Clock {
    fn now_ns(&mut self) -> u64;
}

/// Wall-clock time from a fixed origin.
pub struct SystemClock {
    origin: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        Self {
            origin: Instant::now(),
        }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now_ns(&mut self) -> u64 {
        self.origin.elapsed().as_nanos() as u64
    }
}

/// Deterministic clock advancing a fixed step per reading; for tests.
pub struct MockClock {
    pub now: u64,
    pub step: u64,
}

impl Clock for MockClock {
    fn now_ns(&mut self) -> u64 {
        self.now += self.step;
        self.now
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Warmup,
    Put,
    Get,
    Miss,
    Del,
}

/// One timed phase of one repetition at one measurement point.
#[derive(Clone, Copy, Debug)]
pub struct PhaseEvent {
    pub nkeys: u64,
    pub rep: u32,
    pub replicas: u32,
    pub phase: Phase,
    pub ops: u64,
}

/// One output row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchRecord {
    pub nkeys: u64,
    pub putns: f64,
    pub getns: f64,
    pub missns: f64,
    pub delns: f64,
    pub regret: f64,
    pub rndregret: f64,
}

/// Key-count ranges within which the table performs no internal resize.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegmentPlan {
    pub segments: Vec<(u64, u64)>,
}

impl SegmentPlan {
    /// Measurement points: both endpoints of every segment.
    pub fn points(&self) -> Vec<u64> {
        self.segments
            .iter()
            .flat_map(|&(lo, hi)| [lo, hi])
            .collect()
    }
}

/// Derives the resize segments by instrumenting a scratch table of the given
/// kind and mode: a boundary falls wherever inserting the next key changes
/// the storage shape. Deterministic; growth depends only on key counts.
pub fn plan_segments(kind: KeyKind, mode: TableMode, max_n: u64) -> Result<SegmentPlan> {
    match kind {
        KeyKind::Identity => plan_with::<u64, _>(mode, max_n, |i| i),
        KeyKind::String => plan_with::<Vec<u8>, _>(mode, max_n, |i| i.to_le_bytes().to_vec()),
        KeyKind::Sequence => plan_with::<Vec<u64>, _>(mode, max_n, |i| vec![i]),
    }
}

fn plan_with<K: TableKey, F: Fn(u64) -> K>(
    mode: TableMode,
    max_n: u64,
    key: F,
) -> Result<SegmentPlan> {
    assert!(max_n >= 1);
    let mut table: AdaptiveTable<K, ()> = AdaptiveTable::with_mode(mode)?;
    let mut segments = Vec::new();
    let mut lo = 1u64;
    let mut sig = None;
    for i in 1..=max_n {
        table.put(key(i), ());
        let now = table.capacity_signature();
        if let Some(prev) = sig {
            if prev != now {
                segments.push((lo, i - 1));
                lo = i;
            }
        }
        sig = Some(now);
    }
    segments.push((lo, max_n));
    Ok(SegmentPlan { segments })
}

/// Harness parameters. `budget_ops` replaces the five-million total-op floor
/// when set; the three-repetition minimum always applies.
#[derive(Clone, Copy, Debug)]
pub struct BenchConfig {
    pub mode: TableMode,
    pub max_n: u64,
    pub seed: u64,
    pub budget_ops: Option<u64>,
}

const MIN_REPS: u32 = 3;
const DEFAULT_OP_FLOOR: u64 = 5_000_000;
const SMALL_RUN_MIN_KEYS: u64 = 100;

/// Everything a bench run produces: the records, the phase log (for
/// verification of the protocol), and the measured clock resolution.
#[derive(Debug)]
pub struct BenchOutcome {
    pub records: Vec<BenchRecord>,
    pub events: Vec<PhaseEvent>,
    pub clock_resolution_ns: u64,
    pub budget_ops: Option<u64>,
}

/// Runs the full measurement protocol for one workload and mode.
pub fn run_bench(
    kind: &WorkloadKind,
    cfg: &BenchConfig,
    clock: &mut dyn Clock,
) -> Result<BenchOutcome> {
    match kind {
        WorkloadKind::Prog { d } => {
            let d = *d;
            run_typed::<u64, _>(cfg, clock, move |n, s| gen_prog(n, d, s))
        }
        WorkloadKind::RndProg { max_skip } => {
            let ms = *max_skip;
            run_typed::<u64, _>(cfg, clock, move |n, s| gen_rnd_prog(n, ms, s))
        }
        WorkloadKind::FloatBits => run_typed::<u64, _>(cfg, clock, gen_float_bits),
        WorkloadKind::Paged {
            page_bits,
            stride,
            occupancy,
        } => {
            let (pb, st, occ) = (*page_bits, *stride, *occupancy);
            run_typed::<u64, _>(cfg, clock, move |n, s| gen_paged(n, pb, st, occ, s))
        }
        WorkloadKind::Strings { source } => {
            let source = source.clone();
            run_typed::<Vec<u8>, _>(cfg, clock, move |n, s| gen_strings(&source, n, s))
        }
    }
}

fn run_typed<K, G>(cfg: &BenchConfig, clock: &mut dyn Clock, gen: G) -> Result<BenchOutcome>
where
    K: TableKey,
    G: Fn(usize, u64) -> Result<KeySet<K>>,
{
    let plan = plan_segments(K::KIND, cfg.mode, cfg.max_n)?;
    let points = plan.points();
    let mut events = Vec::new();
    let mut records = Vec::new();
    let clock_resolution_ns = probe_resolution(clock);

    // Warm-up pass: the smallest point, untimed semantics (results discarded).
    if let Some(&first) = points.first() {
        let set = gen(first as usize, stream(cfg.seed, [u64::MAX, 0, 0]))?;
        let mut table: AdaptiveTable<K, u64> = AdaptiveTable::with_mode(cfg.mode)?;
        for (i, k) in set.keys.iter().enumerate() {
            table.put(k.clone(), i as u64);
        }
        for k in &set.keys {
            std::hint::black_box(table.get(k));
        }
        events.push(PhaseEvent {
            nkeys: first,
            rep: 0,
            replicas: 1,
            phase: Phase::Warmup,
            ops: 2 * first,
        });
    }

    let floor = cfg.budget_ops.unwrap_or(DEFAULT_OP_FLOOR);
    for &point in &points {
        let replicas = if point < SMALL_RUN_MIN_KEYS {
            SMALL_RUN_MIN_KEYS.div_ceil(point)
        } else {
            1
        } as u32;
        let mut rep = 0u32;
        let mut total_ops = 0u64;
        let mut phase_ns = [0u64; 4];
        let mut regret = 0.0;
        let mut rndregret = 0.0;
        loop {
            let mut sets = Vec::with_capacity(replicas as usize);
            for r in 0..replicas {
                sets.push(gen(
                    point as usize,
                    stream(cfg.seed, [point, rep.into(), r.into()]),
                )?);
            }
            let mut tables: Vec<AdaptiveTable<K, u64>> = (0..replicas)
                .map(|_| AdaptiveTable::with_mode(cfg.mode))
                .collect::<Result<_>>()?;
            let ops = point * u64::from(replicas);

            // PUT, in generated order.
            let t0 = clock.now_ns();
            for (table, set) in tables.iter_mut().zip(&sets) {
                for (i, k) in set.keys.iter().enumerate() {
                    table.put(k.clone(), i as u64);
                }
            }
            phase_ns[0] += clock.now_ns() - t0;
            events.push(PhaseEvent {
                nkeys: point,
                rep,
                replicas,
                phase: Phase::Put,
                ops,
            });

            if rep == 0 {
                let inv = 1.0 / f64::from(replicas);
                for table in &tables {
                    regret += table.regret_report().regret * inv;
                    rndregret += reference_regret::<K>(point, table.stats()) * inv;
                }
            }

            // GET, random order.
            let lookups = shuffled_refs(&sets, |s| &s.keys, cfg.seed, point, rep, 1);
            let t0 = clock.now_ns();
            for (table, keys) in tables.iter().zip(&lookups) {
                for k in keys {
                    std::hint::black_box(table.get(k));
                }
            }
            phase_ns[1] += clock.now_ns() - t0;
            events.push(PhaseEvent {
                nkeys: point,
                rep,
                replicas,
                phase: Phase::Get,
                ops,
            });

            // MISS, random order over the disjoint set.
            let lookups = shuffled_refs(&sets, |s| &s.miss, cfg.seed, point, rep, 2);
            let t0 = clock.now_ns();
            for (table, keys) in tables.iter().zip(&lookups) {
                for k in keys {
                    std::hint::black_box(table.get(k));
                }
            }
            phase_ns[2] += clock.now_ns() - t0;
            events.push(PhaseEvent {
                nkeys: point,
                rep,
                replicas,
                phase: Phase::Miss,
                ops,
            });

            // DEL, random order; leaves the tables empty.
            let deletions = shuffled_refs(&sets, |s| &s.keys, cfg.seed, point, rep, 3);
            let t0 = clock.now_ns();
            for (table, keys) in tables.iter_mut().zip(&deletions) {
                for k in keys {
                    std::hint::black_box(table.del(k));
                }
            }
            phase_ns[3] += clock.now_ns() - t0;
            events.push(PhaseEvent {
                nkeys: point,
                rep,
                replicas,
                phase: Phase::Del,
                ops,
            });

            rep += 1;
            total_ops += 4 * ops;
            if rep >= MIN_REPS && total_ops > floor {
                break;
            }
        }
        let denom = (point * u64::from(replicas) * u64::from(rep)) as f64;
        records.push(BenchRecord {
            nkeys: point,
            putns: phase_ns[0] as f64 / denom,
            getns: phase_ns[1] as f64 / denom,
            missns: phase_ns[2] as f64 / denom,
            delns: phase_ns[3] as f64 / denom,
            regret,
            rndregret,
        });
    }
    Ok(BenchOutcome {
        records,
        events,
        clock_resolution_ns,
        budget_ops: cfg.budget_ops,
    })
}

fn shuffled_refs<'a, K: TableKey>(
    sets: &'a [KeySet<K>],
    pick: impl Fn(&'a KeySet<K>) -> &'a Vec<K>,
    seed: u64,
    point: u64,
    rep: u32,
    salt: u64,
) -> Vec<Vec<&'a K>> {
    sets.iter()
        .enumerate()
        .map(|(r, set)| {
            let mut order: Vec<&K> = pick(set).iter().collect();
            let mut rng = SplitMix64::new(stream(
                seed,
                [point ^ salt.rotate_left(48), rep.into(), r as u64],
            ));
            rng.shuffle(&mut order);
            order
        })
        .collect()
}

/// Uniform-hash regret reference for the rndregret column. Constant-phase
/// tables are referenced against the chained table they stand in for.
fn reference_regret<K: TableKey>(n: u64, stats: TableStats) -> f64 {
    let floor = match K::KIND {
        KeyKind::Identity => 64,
        _ => 16,
    };
    let m = if stats.constant_phase {
        floor
    } else {
        stats.m.max(floor)
    };
    uniform_regret_reference(n, m.max(n.next_power_of_two()))
}

fn stream(seed: u64, parts: [u64; 3]) -> u64 {
    let mut s = seed;
    for p in parts {
        s = SplitMix64::derive(s, p).next_u64();
    }
    s
}

fn probe_resolution(clock: &mut dyn Clock) -> u64 {
    let mut best = u64::MAX;
    let mut prev = clock.now_ns();
    for _ in 0..64 {
        let now = clock.now_ns();
        if now > prev {
            best = best.min(now - prev);
        }
        prev = now;
    }
    if best == u64::MAX {
        0
    } else {
        best
    }
}

/// Writes records as TSV: a fixed header, one row per record, full float
/// precision. Runs under a reduced op budget are marked with a leading
/// comment line so they cannot be confused with full-methodology output.
pub fn emit_tsv<W: Write>(
    records: &[BenchRecord],
    budget_ops: Option<u64>,
    mut w: W,
) -> Result<()> {
    if let Some(b) = budget_ops {
        writeln!(w, "# budget-ops {b}")?;
    }
    writeln!(w, "nkeys\tputns\tgetns\tmissns\tdelns\tregret\trndregret")?;
    for r in records {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.nkeys, r.putns, r.getns, r.missns, r.delns, r.regret, r.rndregret
        )?;
    }
    Ok(())
}

/// Parses TSV produced by [`emit_tsv`] (comment lines are skipped).
pub fn parse_tsv<R: BufRead>(r: R) -> Result<Vec<BenchRecord>> {
    let mut records = Vec::new();
    let mut saw_header = false;
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\n');
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            if line != "nkeys\tputns\tgetns\tmissns\tdelns\tregret\trndregret" {
                return Err(Error::TsvParse {
                    line: lineno + 1,
                    reason: "bad header".into(),
                });
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 7 {
            return Err(Error::TsvParse {
                line: lineno + 1,
                reason: format!("expected 7 columns, got {}", fields.len()),
            });
        }
        let num = |i: usize| -> Result<f64> {
            fields[i].parse().map_err(|_| Error::TsvParse {
                line: lineno + 1,
                reason: format!("bad number {:?}", fields[i]),
            })
        };
        records.push(BenchRecord {
            nkeys: fields[0].parse().map_err(|_| Error::TsvParse {
                line: lineno + 1,
                reason: format!("bad key count {:?}", fields[0]),
            })?,
            putns: num(1)?,
            getns: num(2)?,
            missns: num(3)?,
            delns: num(4)?,
            regret: num(5)?,
            rndregret: num(6)?,
        });
    }
    if !saw_header {
        return Err(Error::TsvParse {
            line: 0,
            reason: "missing header".into(),
        });
    }
    Ok(records)
}

/// One row of the collision-bound table.
#[derive(Clone, Debug)]
pub struct BoundsRow {
    pub f: f64,
    /// `(1 - 1/m)^(m f)` for each requested `m`.
    pub finite: Vec<f64>,
    /// `exp(-f)`.
    pub exp: f64,
    /// `exp(-f) / 0.9`.
    pub exp_slack: f64,
    /// `1 - (9/16) f`.
    pub linear_nine_sixteenths: f64,
    /// `1 - f / 2`.
    pub linear_half: f64,
}

/// Expected proportion of empty buckets and its chain of upper bounds on a
/// uniform grid of load factors in `[0, 1]`.
pub fn cmd_bounds(ms: &[u64], f_steps: usize) -> Vec<BoundsRow> {
    assert!(f_steps >= 1);
    (0..=f_steps)
        .map(|i| {
            let f = i as f64 / f_steps as f64;
            BoundsRow {
                f,
                finite: ms
                    .iter()
                    .map(|&m| (1.0 - 1.0 / m as f64).powf(m as f64 * f))
                    .collect(),
                exp: (-f).exp(),
                exp_slack: (-f).exp() / 0.9,
                linear_nine_sixteenths: 1.0 - 9.0 / 16.0 * f,
                linear_half: 1.0 - f / 2.0,
            }
        })
        .collect()
}

pub fn emit_bounds_tsv<W: Write>(ms: &[u64], rows: &[BoundsRow], mut w: W) -> Result<()> {
    write!(w, "f")?;
    for m in ms {
        write!(w, "\tempty_m{m}")?;
    }
    writeln!(w, "\texp\texp_over_0.9\tlinear_9_16\tlinear_1_2")?;
    for row in rows {
        write!(w, "{}", row.f)?;
        for v in &row.finite {
            write!(w, "\t{v}")?;
        }
        writeln!(
            w,
            "\t{}\t{}\t{}\t{}",
            row.exp, row.exp_slack, row.linear_nine_sixteenths, row.linear_half
        )?;
    }
    Ok(())
}

/// Regret at one measurement point, with the table's final adaptation state.
#[derive(Clone, Copy, Debug)]
pub struct RegretPoint {
    pub nkeys: u64,
    pub regret: f64,
    pub rndregret: f64,
    pub stats: TableStats,
}

/// Populates one table per measurement point and reports regret against the
/// uniform reference — no timing, suitable for quick checks.
pub fn cmd_regret(
    kind: &WorkloadKind,
    mode: TableMode,
    max_n: u64,
    seed: u64,
) -> Result<Vec<RegretPoint>> {
    match kind {
        WorkloadKind::Prog { d } => {
            let d = *d;
            regret_typed::<u64, _>(mode, max_n, move |n, s| gen_prog(n, d, s), seed)
        }
        WorkloadKind::RndProg { max_skip } => {
            let ms = *max_skip;
            regret_typed::<u64, _>(mode, max_n, move |n, s| gen_rnd_prog(n, ms, s), seed)
        }
        WorkloadKind::FloatBits => regret_typed::<u64, _>(mode, max_n, gen_float_bits, seed),
        WorkloadKind::Paged {
            page_bits,
            stride,
            occupancy,
        } => {
            let (pb, st, occ) = (*page_bits, *stride, *occupancy);
            regret_typed::<u64, _>(mode, max_n, move |n, s| gen_paged(n, pb, st, occ, s), seed)
        }
        WorkloadKind::Strings { source } => {
            let source = source.clone();
            regret_typed::<Vec<u8>, _>(mode, max_n, move |n, s| gen_strings(&source, n, s), seed)
        }
    }
}

fn regret_typed<K, G>(mode: TableMode, max_n: u64, gen: G, seed: u64) -> Result<Vec<RegretPoint>>
where
    K: TableKey,
    G: Fn(usize, u64) -> Result<KeySet<K>>,
{
    let plan = plan_segments(K::KIND, mode, max_n)?;
    let mut out = Vec::new();
    for point in plan.points() {
        let set = gen(point as usize, stream(seed, [point, 0, 0]))?;
        let mut table: AdaptiveTable<K, u64> = AdaptiveTable::with_mode(mode)?;
        for (i, k) in set.keys.into_iter().enumerate() {
            table.put(k, i as u64);
        }
        let stats = table.stats();
        out.push(RegretPoint {
            nkeys: point,
            regret: table.regret_report().regret,
            rndregret: reference_regret::<K>(point, stats),
            stats,
        });
    }
    Ok(out)
}

pub fn emit_regret_tsv<W: Write>(points: &[RegretPoint], mut w: W) -> Result<()> {
    writeln!(w, "nkeys\tregret\trndregret\thasher")?;
    for p in points {
        writeln!(
            w,
            "{}\t{}\t{}\t{}",
            p.nkeys,
            p.regret,
            p.rndregret,
            p.stats.hasher.name()
        )?;
    }
    Ok(())
}
