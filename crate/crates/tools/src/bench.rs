//! Repeated seeded trials over a set of labeled sequences.
//!
//! Trial `t` of sequence `s` runs with seed `derive_seed(root, s.id, t)`, so
//! results do not depend on how trials are spread over worker threads.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use scc_core::engine::{scc_run, Projection, SccConfig};
use scc_core::evaluation::misclassification_rate;
use scc_core::rng::derive_seed;
use scc_core::synth::SequenceRecord;
use scc_core::SccError;

use crate::report::SequenceResult;
use crate::THREADS_ENV;

/// Subspace dimension plus the space the data is clustered in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Regime {
    pub d: usize,
    pub projection: Projection,
}

impl Regime {
    pub const fn new(d: usize, projection: Projection) -> Self {
        Self { d, projection }
    }

    /// `SCC (d,D)`, e.g. `SCC (3,4K)`.
    pub fn label(&self) -> String {
        format!("SCC ({self})")
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.projection {
            Projection::PcaDPlus1 => write!(f, "{},{}", self.d, self.d + 1),
            p => write!(f, "{},{}", self.d, p),
        }
    }
}

/// Accepts `3,4`, `3,4K`, `3,2F`, `4,5`, ... and `3,d+1`.
impl FromStr for Regime {
    type Err = SccError;

    fn from_str(s: &str) -> Result<Self, SccError> {
        let bad = || SccError::InvalidConfig(format!("bad regime '{s}' (expected e.g. 3,4K)"));
        let (d, space) = s.split_once(',').ok_or_else(bad)?;
        let d: usize = d.trim().parse().map_err(|_| bad())?;
        let space = space.trim();
        let projection = match space.parse::<usize>() {
            Ok(dim) if dim == d + 1 => Projection::PcaDPlus1,
            Ok(_) => return Err(bad()),
            Err(_) => space.parse()?,
        };
        Ok(Self { d, projection })
    }
}

/// The six regimes `(3,4) (3,4K) (3,2F) (4,5) (4,4K) (4,2F)`.
pub const STANDARD_REGIMES: [Regime; 6] = [
    Regime::new(3, Projection::PcaDPlus1),
    Regime::new(3, Projection::Pca4K),
    Regime::new(3, Projection::Ambient),
    Regime::new(4, Projection::PcaDPlus1),
    Regime::new(4, Projection::Pca4K),
    Regime::new(4, Projection::Ambient),
];

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub regimes: Vec<Regime>,
    pub repeats: usize,
    pub seed: u64,
    /// Overrides the default number of sampled sets.
    pub c: Option<usize>,
    pub timings: bool,
}

impl BenchConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            regimes: STANDARD_REGIMES.to_vec(),
            repeats: 100,
            seed,
            c: None,
            timings: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOutput {
    /// Ordered by regime, then by input order of the sequences.
    pub results: Vec<SequenceResult>,
    /// Skipped sequences and failed runs, one line each.
    pub warnings: Vec<String>,
    /// Total wall time per sequence and regime in seconds, in result order.
    pub wall_times: Vec<f64>,
}

/// Worker count from the environment: `SCC_THREADS` when it is a positive
/// integer, else rayon's default.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

struct Trial {
    error_pct: f64,
    seconds: f64,
}

fn run_trial(
    seq: &SequenceRecord,
    regime: Regime,
    k: usize,
    trial: usize,
    config: &BenchConfig,
) -> Result<Trial, SccError> {
    let truth = seq.truth.as_ref().expect("unlabeled sequences are filtered");
    let mut scc = SccConfig::new(regime.d, k)
        .with_projection(regime.projection)
        .with_seed(derive_seed(config.seed, &seq.id, trial as u64));
    if let Some(c) = config.c {
        scc = scc.with_samples(c);
    }
    let start = Instant::now();
    let result = scc_run(&seq.trajectories, &scc)?;
    let seconds = start.elapsed().as_secs_f64();
    let error_pct = misclassification_rate(&result.partition, truth)?;
    Ok(Trial { error_pct, seconds })
}

/// Runs `repeats` trials per sequence and regime and averages them.
/// Sequences without labels are skipped; so is a (sequence, regime) pair
/// whose trials fail.
pub fn run_bench(sequences: &[SequenceRecord], config: &BenchConfig) -> Result<BenchOutput, SccError> {
    if config.repeats == 0 {
        return Err(SccError::InvalidConfig("repeats must be at least 1".into()));
    }
    if config.regimes.is_empty() {
        return Err(SccError::InvalidConfig("no regimes requested".into()));
    }
    let mut warnings = Vec::new();
    let mut usable = Vec::new();
    for seq in sequences {
        match (&seq.truth, seq.motions()) {
            (Some(_), Some(k)) if k > 0 => usable.push((seq, k)),
            _ => warnings.push(format!("skipping {}: no ground-truth labels", seq.id)),
        }
    }
    let jobs: Vec<(Regime, usize, usize)> = config
        .regimes
        .iter()
        .flat_map(|&r| (0..usable.len()).flat_map(move |s| (0..config.repeats).map(move |t| (r, s, t))))
        .collect();

    let work = || -> Vec<Result<Trial, SccError>> {
        jobs.par_iter()
            .map(|&(regime, s, t)| {
                let (seq, k) = usable[s];
                run_trial(seq, regime, k, t, config)
            })
            .collect()
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap() {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| SccError::Internal(format!("thread pool: {e}")))?;
    let trials = pool.install(work);

    let mut results = Vec::new();
    let mut wall_times = Vec::new();
    for (chunk, job) in trials.chunks(config.repeats).zip(jobs.chunks(config.repeats)) {
        let (regime, s, _) = job[0];
        let (seq, k) = usable[s];
        let mut errors = Vec::with_capacity(chunk.len());
        let mut seconds = 0.0;
        let mut failure = None;
        for trial in chunk {
            match trial {
                Ok(t) => {
                    errors.push(t.error_pct);
                    seconds += t.seconds;
                }
                Err(e) => failure = Some(e),
            }
        }
        if let Some(e) = failure {
            warnings.push(format!("skipping {} under {}: {e}", seq.id, regime.label()));
            continue;
        }
        let runs = errors.len();
        results.push(SequenceResult {
            method: regime.label(),
            sequence_id: seq.id.clone(),
            category: seq.category,
            motions: k,
            error_pct: errors.iter().sum::<f64>() / runs as f64,
            runs,
            mean_runtime_s: config.timings.then(|| seconds / runs as f64),
        });
        wall_times.push(seconds);
    }
    Ok(BenchOutput {
        results,
        warnings,
        wall_times,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use scc_core::evaluation::Category;
    use scc_core::synth::{synth_affine_motion, SynthSpec};

    #[test]
    fn regime_labels_round_trip() {
        let labels: Vec<String> = STANDARD_REGIMES.iter().map(Regime::label).collect();
        assert_eq!(
            labels,
            ["SCC (3,4)", "SCC (3,4K)", "SCC (3,2F)", "SCC (4,5)", "SCC (4,4K)", "SCC (4,2F)"]
        );
        for r in STANDARD_REGIMES {
            assert_eq!(r.to_string().parse::<Regime>().unwrap(), r);
        }
        assert_eq!("3,d+1".parse::<Regime>().unwrap(), STANDARD_REGIMES[0]);
        assert!("3,6".parse::<Regime>().is_err());
        assert!("3".parse::<Regime>().is_err());
        assert!("x,4K".parse::<Regime>().is_err());
    }

    #[test]
    fn unlabeled_sequences_are_skipped() {
        let mut seq = synth_affine_motion(&SynthSpec::motion(2, 5, 20, 0.0, 4)).unwrap();
        let mut bare = seq.clone();
        bare.id = "bare".into();
        bare.truth = None;
        bare.declared_k = 0;
        seq.category = Category::Traffic;
        let mut config = BenchConfig::new(9);
        config.regimes = vec![STANDARD_REGIMES[1]];
        config.repeats = 2;
        let out = run_bench(&[bare, seq], &config).unwrap();
        assert_eq!(out.results.len(), 1);
        assert_eq!(out.warnings.len(), 1);
        assert!(out.warnings[0].contains("bare"));
        assert_eq!(out.results[0].runs, 2);
        assert_eq!(out.results[0].category, Category::Traffic);
        assert!(out.results[0].mean_runtime_s.is_none());
    }
}
