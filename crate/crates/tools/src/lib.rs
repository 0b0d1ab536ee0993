//! File formats, benchmark driver and report writers around `scc-core`.
//!
//! * [`dataio`] reads and writes `.seq` trajectory files.
//! * [`bench`] runs seeded trials over a directory of sequences.
//! * [`report`] renders summary tables, histograms and per-sequence records.

pub mod bench;
pub mod dataio;
pub mod report;

/// Seed used by every command when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 0x5cc0_2009;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "SCC_THREADS";
