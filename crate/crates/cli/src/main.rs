//! Command-line workbench: microbenchmarks, regret tables, collision-bound
//! tables, and key-set dumps for external tooling.

use std::fs::File;
use std::io::{self, BufWriter, Write};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use adapthash::bench::{
    cmd_bounds, cmd_regret, emit_bounds_tsv, emit_regret_tsv, emit_tsv, run_bench, BenchConfig,
    SystemClock,
};
use adapthash::keygen::{generate, parse_workload, WorkloadKeys, WorkloadSpec};
use adapthash::TableMode;

#[derive(Parser)]
#[command(name = "adapthash", version, about = "Adaptive hash table workbench")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Time PUT/GET/MISS/DEL across resize segments and emit a TSV table.
    ///
    /// For stable numbers, pin the process to one core, use the performance
    /// governor, and raise the priority; this tool only records the clock
    /// resolution and runs a warm-up pass.
    Bench {
        /// prog:<d> | rnd:<max_skip> | float | paged[:<stride>:<occ>] |
        /// strings:<file> | strings-random | strings-shared-affix
        #[arg(long)]
        workload: String,
        /// adaptive | murmur | mid | co-mid
        #[arg(long, default_value = "adaptive")]
        mode: String,
        /// Largest key count to measure.
        #[arg(long = "max-n")]
        max_n: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Lower the 5,000,000 total-op floor per point (quick runs; the
        /// output is marked as reduced).
        #[arg(long = "budget-ops")]
        budget_ops: Option<u64>,
        /// Output path, or - for stdout.
        #[arg(long, default_value = "-")]
        out: String,
    },
    /// Populate tables and report regret per size; no timing.
    Regret {
        #[arg(long)]
        workload: String,
        #[arg(long, default_value = "adaptive")]
        mode: String,
        #[arg(long = "max-n")]
        max_n: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "-")]
        out: String,
    },
    /// Emit the empty-bucket proportion and its upper bounds over a
    /// load-factor grid.
    Bounds {
        /// Number of grid steps over [0, 1].
        #[arg(long = "f-steps", default_value_t = 1000)]
        f_steps: usize,
        #[arg(long, default_value = "-")]
        out: String,
    },
    /// Emit a workload's key set and miss set.
    Keygen {
        /// Workload spec, same grammar as --workload.
        #[arg(long)]
        spec: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "-")]
        out: String,
    },
}

fn parse_mode(text: &str) -> anyhow::Result<TableMode> {
    Ok(match text {
        "adaptive" => TableMode::Adaptive,
        "murmur" => TableMode::MurmurOnly,
        "mid" => TableMode::MidOnly,
        "co-mid" => TableMode::ConstantThenMid,
        other => bail!("unknown mode {other:?} (adaptive | murmur | mid | co-mid)"),
    })
}

fn open_out(path: &str) -> anyhow::Result<Box<dyn Write>> {
    Ok(if path == "-" {
        Box::new(BufWriter::new(io::stdout()))
    } else {
        Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {path}"))?,
        ))
    })
}

fn run() -> anyhow::Result<()> {
    match Cli::parse().cmd {
        Cmd::Bench {
            workload,
            mode,
            max_n,
            seed,
            budget_ops,
            out,
        } => {
            let kind = parse_workload(&workload)?;
            let cfg = BenchConfig {
                mode: parse_mode(&mode)?,
                max_n,
                seed,
                budget_ops,
            };
            let mut clock = SystemClock::new();
            let outcome = run_bench(&kind, &cfg, &mut clock)?;
            eprintln!(
                "clock resolution {} ns; warm-up done; {} measurement points",
                outcome.clock_resolution_ns,
                outcome.records.len()
            );
            let mut w = open_out(&out)?;
            emit_tsv(&outcome.records, outcome.budget_ops, &mut w)?;
            w.flush()?;
        }
        Cmd::Regret {
            workload,
            mode,
            max_n,
            seed,
            out,
        } => {
            let kind = parse_workload(&workload)?;
            let points = cmd_regret(&kind, parse_mode(&mode)?, max_n, seed)?;
            let mut w = open_out(&out)?;
            emit_regret_tsv(&points, &mut w)?;
            w.flush()?;
        }
        Cmd::Bounds { f_steps, out } => {
            if f_steps == 0 {
                bail!("--f-steps must be at least 1");
            }
            let ms = [8, 16];
            let rows = cmd_bounds(&ms, f_steps);
            let mut w = open_out(&out)?;
            emit_bounds_tsv(&ms, &rows, &mut w)?;
            w.flush()?;
        }
        Cmd::Keygen { spec, n, seed, out } => {
            let kind = parse_workload(&spec)?;
            let keys = generate(&WorkloadSpec { kind, n, seed })?;
            let mut w = open_out(&out)?;
            emit_keyset(&keys, n, seed, &spec, &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

/// Key dump format: a header line, exactly n key lines, a miss marker, and
/// exactly n miss lines. Integer keys in decimal; string keys as raw bytes.
fn emit_keyset(
    keys: &WorkloadKeys,
    n: usize,
    seed: u64,
    spec: &str,
    w: &mut dyn Write,
) -> io::Result<()> {
    writeln!(w, "# workload {spec} n {n} seed {seed}")?;
    writeln!(w, "# keys {n}")?;
    match keys {
        WorkloadKeys::Words(set) => {
            for k in &set.keys {
                writeln!(w, "{k}")?;
            }
            writeln!(w, "# miss {n}")?;
            for k in &set.miss {
                writeln!(w, "{k}")?;
            }
        }
        WorkloadKeys::Bytes(set) => {
            for k in &set.keys {
                w.write_all(k)?;
                w.write_all(b"\n")?;
            }
            writeln!(w, "# miss {n}")?;
            for k in &set.miss {
                w.write_all(k)?;
                w.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

fn main() {
    if let Err(err) = run() {
        eprintln!("adapthash: {err:#}");
        std::process::exit(1);
    }
}
