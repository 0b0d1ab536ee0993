//! The SCC driver: sampling, bandwidth sweep with OLS model selection,
//! spectral clustering and iterative re-sampling inside the clusters.

use alloc::vec::Vec;
use core::fmt;
use rand::seq::index::sample;
use rand::Rng;

use crate::curvature::{CurvatureTable, SampleSet};
use crate::geometry::{
    cluster_ols_error, fit_affine_ols, fit_clusters, project_pca, AffineSubspace, DataMatrix, Partition,
};
use crate::rng::{derive_seed, stream_rng};
use crate::spectral::spectral_cluster_affinity;
use crate::{Result, SccError};

/// Errors below this fraction of the working data's scatter are treated as
/// numerically zero when judging improvement.
const NUMERICAL_FLOOR: f64 = 1e-14;

/// Space in which the clustering runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Projection {
    /// The original coordinates (`D = 2F` for trajectories).
    Ambient,
    /// PCA onto `4K` dimensions.
    Pca4K,
    /// PCA onto `d + 1` dimensions.
    PcaDPlus1,
}

impl Projection {
    /// Target dimension for PCA regimes; `None` for the ambient space.
    pub fn target_dim(self, d: usize, k: usize) -> Option<usize> {
        match self {
            Projection::Ambient => None,
            Projection::Pca4K => Some(4 * k),
            Projection::PcaDPlus1 => Some(d + 1),
        }
    }

    /// Command-line spelling: `2F`, `4K` or `d+1`.
    pub fn as_str(self) -> &'static str {
        match self {
            Projection::Ambient => "2F",
            Projection::Pca4K => "4K",
            Projection::PcaDPlus1 => "d+1",
        }
    }
}

impl fmt::Display for Projection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for Projection {
    type Err = SccError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "2F" | "2f" | "ambient" => Ok(Projection::Ambient),
            "4K" | "4k" => Ok(Projection::Pca4K),
            "d+1" | "D+1" => Ok(Projection::PcaDPlus1),
            other => Err(SccError::InvalidConfig(alloc::format!(
                "unknown projection '{other}' (expected d+1, 4K or 2F)"
            ))),
        }
    }
}

/// Parameters of one SCC run.
#[derive(Debug, Clone, PartialEq)]
pub struct SccConfig {
    /// Maximal intrinsic dimension of the flats.
    pub d: usize,
    /// Number of flats.
    pub k: usize,
    /// Number of sampled `(d+1)`-sets per iteration.
    pub c: usize,
    pub max_iterations: usize,
    /// Relative decrease of the best OLS error that counts as progress.
    pub improvement_tol: f64,
    /// Consecutive iterations without progress before stopping.
    pub patience: usize,
    pub seed: u64,
    pub projection: Projection,
}

impl SccConfig {
    /// Defaults: `c = 100 K`, `max(10, 2(d+1))` iterations, tolerance
    /// `1e-6`, patience 3, seed 0, ambient space.
    pub fn new(d: usize, k: usize) -> Self {
        Self {
            d,
            k,
            c: 100 * k,
            max_iterations: 10.max(2 * (d + 1)),
            improvement_tol: 1e-6,
            patience: 3,
            seed: 0,
            projection: Projection::Ambient,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_projection(mut self, projection: Projection) -> Self {
        self.projection = projection;
        self
    }

    pub fn with_samples(mut self, c: usize) -> Self {
        self.c = c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(SccError::InvalidConfig(msg.into()));
        if self.d < 1 {
            return bad("d must be >= 1");
        }
        if self.k < 1 {
            return bad("K must be >= 1");
        }
        if self.c < self.k {
            return bad("c must be >= K");
        }
        if self.max_iterations < 1 {
            return bad("max_iterations must be >= 1");
        }
        if self.patience < 1 {
            return bad("patience must be >= 1");
        }
        if !(self.improvement_tol >= 0.0 && self.improvement_tol.is_finite()) {
            return bad("improvement_tol must be finite and >= 0");
        }
        Ok(())
    }
}

/// Output of [`scc_run`]. Errors and flats are measured in the working
/// space, i.e. after the configured projection.
#[derive(Debug, Clone, PartialEq)]
pub struct SccResult {
    pub partition: Partition,
    pub ols_error: f64,
    pub sigma_sq_chosen: f64,
    /// 1-based index of the chosen bandwidth candidate.
    pub q_chosen: usize,
    pub iterations_run: usize,
    pub per_iteration_errors: Vec<f64>,
    /// One flat per cluster, `None` for an empty cluster.
    pub subspaces: Vec<Option<AffineSubspace>>,
}

/// Best partition of one bandwidth sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub partition: Partition,
    pub sigma_sq: f64,
    pub q: usize,
    pub ols_error: f64,
    /// `(sigma_sq, ols_error)` for every candidate, in order of `q`.
    pub candidates: Vec<(f64, f64)>,
}

fn draw_set<R: Rng>(rng: &mut R, pool: &[usize], size: usize) -> Vec<usize> {
    sample(rng, pool.len(), size).into_iter().map(|j| pool[j]).collect()
}

/// `c` sets of `d + 1` distinct indices drawn uniformly from `0..n`.
pub fn sample_initial<R: Rng>(n: usize, d: usize, c: usize, rng: &mut R) -> Result<SampleSet> {
    if n < d + 2 {
        return Err(SccError::TooFewPoints { required: d + 2, found: n });
    }
    let sets = (0..c).map(|_| sample(rng, n, d + 1).into_vec()).collect();
    SampleSet::new(sets, d + 1, n)
}

/// Bandwidth candidates: the element at 1-based position
/// `round((N-d-1) c / K^q)`, clamped to the list, for `q = 1..=d+1`.
pub fn sigma_candidates(sorted: &[f64], n: usize, d: usize, c: usize, k: usize) -> Result<Vec<f64>> {
    if sorted.is_empty() {
        return Err(SccError::EmptyInput);
    }
    let expected = n.saturating_sub(d + 1) * c;
    if sorted.len() != expected {
        return Err(SccError::LengthMismatch {
            left: sorted.len(),
            right: expected,
        });
    }
    let len = sorted.len() as f64;
    Ok((1..=d + 1)
        .map(|q| {
            let pos = libm::floor(len / libm::pow(k as f64, q as f64) + 0.5);
            let pos = pos.clamp(1.0, len) as usize;
            sorted[pos - 1]
        })
        .collect())
}

/// Replaces unusable bandwidths: `+inf` by the largest finite curvature,
/// zero by the smallest positive one, and 1 when neither exists (all
/// curvatures zero, so the bandwidth is irrelevant).
fn usable_sigma(candidate: f64, sorted: &[f64]) -> f64 {
    if candidate > 0.0 && candidate.is_finite() {
        return candidate;
    }
    let finite_pos = || sorted.iter().copied().filter(|v| *v > 0.0 && v.is_finite());
    let fallback = if candidate.is_infinite() {
        finite_pos().next_back()
    } else {
        finite_pos().next()
    };
    fallback.unwrap_or(1.0)
}

/// Moves isolated points to the cluster whose fitted flat is nearest.
fn attach_isolated(data: &DataMatrix, partition: &Partition, isolated: &[usize], d: usize) -> Result<Partition> {
    if isolated.is_empty() {
        return Ok(partition.clone());
    }
    let mut members = partition.members();
    for m in members.iter_mut() {
        m.retain(|i| isolated.binary_search(i).is_err());
    }
    let flats: Vec<Option<AffineSubspace>> = members
        .iter()
        .map(|m| {
            if m.is_empty() {
                Ok(None)
            } else {
                fit_affine_ols(&data.select(m)?, d).map(Some)
            }
        })
        .collect::<Result<_>>()?;
    if flats.iter().all(Option::is_none) {
        return Ok(partition.clone());
    }
    let mut labels = partition.labels().to_vec();
    for &i in isolated {
        let mut best = (labels[i], f64::INFINITY);
        for (k, flat) in flats.iter().enumerate() {
            if let Some(f) = flat {
                let dist = f.dist_sq_unchecked(data.point(i));
                if dist < best.1 {
                    best = (k, dist);
                }
            }
        }
        labels[i] = best.0;
    }
    Partition::new(labels, partition.num_clusters())
}

fn ols_of(data: &DataMatrix, partition: &Partition, d: usize) -> Result<f64> {
    partition.members().iter().map(|m| cluster_ols_error(data, m, d)).sum()
}

fn sweep_table(
    data: &DataMatrix,
    table: &CurvatureTable,
    config: &SccConfig,
    seed: u64,
) -> Result<SweepOutcome> {
    let sorted = table.sorted();
    let raw = sigma_candidates(&sorted, data.len(), config.d, table.num_sets(), config.k)?;
    let mut best: Option<SweepOutcome> = None;
    let mut candidates = Vec::with_capacity(raw.len());
    let mut previous: Option<(f64, Partition, f64)> = None;
    for (qi, &cand) in raw.iter().enumerate() {
        let sigma_sq = usable_sigma(cand, &sorted);
        let (partition, err) = match &previous {
            Some((s, p, e)) if *s == sigma_sq => (p.clone(), *e),
            _ => {
                let a = table.affinity(sigma_sq)?;
                let out = spectral_cluster_affinity(&a, config.k, seed)?;
                let p = attach_isolated(data, &out.partition, &out.isolated, config.d)?;
                let e = ols_of(data, &p, config.d)?;
                (p, e)
            }
        };
        candidates.push((sigma_sq, err));
        if best.as_ref().is_none_or(|b| err < b.ols_error) {
            best = Some(SweepOutcome {
                partition: partition.clone(),
                sigma_sq,
                q: qi + 1,
                ols_error: err,
                candidates: Vec::new(),
            });
        }
        previous = Some((sigma_sq, partition, err));
    }
    let mut best = best.expect("d + 1 >= 1 candidates");
    best.candidates = candidates;
    Ok(best)
}

/// One pass of the bandwidth sweep on already-projected data: for each
/// candidate bandwidth build the affinity, cluster spectrally and score the
/// partition by total OLS error; the lowest error wins, ties to the
/// smallest `q`.
pub fn sweep_and_cluster(data: &DataMatrix, samples: &SampleSet, config: &SccConfig, seed: u64) -> Result<SweepOutcome> {
    config.validate()?;
    if samples.tuple_len() != config.d + 1 {
        return Err(SccError::InvalidSamples(alloc::format!(
            "sets hold {} points, expected d + 1 = {}",
            samples.tuple_len(),
            config.d + 1
        )));
    }
    let table = CurvatureTable::compute(data, samples)?;
    sweep_table(data, &table, config, seed)
}

/// Draws `floor(c / K)` sets inside each cluster; the remaining sets go one
/// each to the largest clusters. Clusters with fewer than `d + 1` points
/// draw their quota from the whole data set.
pub fn resample_within<R: Rng>(partition: &Partition, d: usize, c: usize, rng: &mut R) -> Result<SampleSet> {
    let n = partition.len();
    if n < d + 2 {
        return Err(SccError::TooFewPoints { required: d + 2, found: n });
    }
    let k = partition.num_clusters();
    let members = partition.members();
    let mut quotas = alloc::vec![c / k; k];
    let mut by_size: Vec<usize> = (0..k).collect();
    by_size.sort_by(|&a, &b| members[b].len().cmp(&members[a].len()).then(a.cmp(&b)));
    for &cl in by_size.iter().take(c - k * (c / k)) {
        quotas[cl] += 1;
    }
    let everyone: Vec<usize> = (0..n).collect();
    let mut sets = Vec::with_capacity(c);
    for (cl, &quota) in quotas.iter().enumerate() {
        let pool = if members[cl].len() > d { &members[cl] } else { &everyone };
        for _ in 0..quota {
            sets.push(draw_set(rng, pool, d + 1));
        }
    }
    SampleSet::new(sets, d + 1, n)
}

const SAMPLING_STREAM: u64 = 0x5cc;

/// Runs spectral curvature clustering end to end.
///
/// Projects the data per the configured regime, samples `c` sets, then
/// alternates the bandwidth sweep with re-sampling inside the latest
/// clusters until the best OLS error stops improving by a relative
/// `improvement_tol` for `patience` iterations or `max_iterations` is hit.
/// The best partition seen is returned. Deterministic in `(data, config)`.
pub fn scc_run(data: &DataMatrix, config: &SccConfig) -> Result<SccResult> {
    config.validate()?;
    let n = data.len();
    if n < config.d + 2 {
        return Err(SccError::TooFewPoints {
            required: config.d + 2,
            found: n,
        });
    }
    if n < config.k {
        return Err(SccError::TooFewPoints { required: config.k, found: n });
    }
    let working = match config.projection.target_dim(config.d, config.k) {
        Some(t) => project_pca(data, t)?,
        None => data.clone(),
    };
    if config.d > working.dim() {
        return Err(SccError::InvalidDimension {
            requested: config.d,
            ambient: working.dim(),
        });
    }
    let floor = NUMERICAL_FLOOR * working.total_scatter();

    let mut rng = stream_rng(config.seed, SAMPLING_STREAM);
    let mut samples = sample_initial(n, config.d, config.c, &mut rng)?;
    let mut best: Option<SweepOutcome> = None;
    let mut errors = Vec::new();
    let mut stalled = 0;
    for iteration in 0..config.max_iterations {
        let seed = derive_seed(config.seed, "sweep", iteration as u64);
        let outcome = sweep_and_cluster(&working, &samples, config, seed)?;
        errors.push(outcome.ols_error);
        let progressed = match &best {
            None => true,
            Some(b) => {
                let gain = b.ols_error - outcome.ols_error;
                gain > config.improvement_tol * b.ols_error && gain > floor
            }
        };
        stalled = if progressed { 0 } else { stalled + 1 };
        let next = resample_within(&outcome.partition, config.d, config.c, &mut rng)?;
        if best.as_ref().is_none_or(|b| outcome.ols_error < b.ols_error) {
            best = Some(outcome);
        }
        if stalled >= config.patience {
            break;
        }
        samples = next;
    }
    let best = best.expect("max_iterations >= 1");
    let subspaces = fit_clusters(&working, &best.partition, config.d)?;
    Ok(SccResult {
        ols_error: best.ols_error,
        sigma_sq_chosen: best.sigma_sq,
        q_chosen: best.q,
        iterations_run: errors.len(),
        per_iteration_errors: errors,
        subspaces,
        partition: best.partition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::total_ols_error;
    use nalgebra::DMatrix;

    #[test]
    fn candidate_positions() {
        let sorted: Vec<f64> = (1..=1000).map(f64::from).collect();
        // N - d - 1 = 1000 with c = 1
        let c = sigma_candidates(&sorted, 1004, 3, 1, 2).unwrap();
        assert_eq!(c, [500.0, 250.0, 125.0, 63.0]);
        let one = sigma_candidates(&sorted, 1004, 3, 1, 1).unwrap();
        assert_eq!(one, [1000.0; 4]);
        assert_eq!(sigma_candidates(&[], 3, 1, 1, 2), Err(SccError::EmptyInput));
        // tiny lists clamp to position 1
        let short = sigma_candidates(&[0.5, 2.0], 4, 1, 1, 3).unwrap();
        assert_eq!(short, [0.5, 0.5]);
    }

    #[test]
    fn usable_sigma_fallbacks() {
        let sorted = [0.0, 0.0, 0.5, 3.0, f64::INFINITY];
        assert_eq!(usable_sigma(0.0, &sorted), 0.5);
        assert_eq!(usable_sigma(f64::INFINITY, &sorted), 3.0);
        assert_eq!(usable_sigma(2.0, &sorted), 2.0);
        assert_eq!(usable_sigma(0.0, &[0.0, 0.0]), 1.0);
    }

    #[test]
    fn initial_sampling() {
        let mut rng = stream_rng(4, 0);
        let s = sample_initial(5, 3, 1, &mut rng).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.set(0).len(), 4);
        let s = sample_initial(50, 1, 200, &mut rng).unwrap();
        assert_eq!(s.len(), 200);
        let a = sample_initial(30, 2, 10, &mut stream_rng(1, 1)).unwrap();
        let b = sample_initial(30, 2, 10, &mut stream_rng(1, 1)).unwrap();
        assert_eq!(a, b);
        assert!(sample_initial(4, 3, 1, &mut rng).is_err());
    }

    #[test]
    fn resampling_quotas() {
        let mut rng = stream_rng(4, 0);
        let labels: Vec<usize> = (0..40).map(|i| usize::from(i >= 15)).collect();
        let p = Partition::new(labels, 2).unwrap();
        let s = resample_within(&p, 2, 200, &mut rng).unwrap();
        assert_eq!(s.len(), 200);
        let first: Vec<&[usize]> = s.iter().take(100).collect();
        assert!(first.iter().all(|set| set.iter().all(|&i| i < 15)));
        assert!(s.iter().skip(100).all(|set| set.iter().all(|&i| i >= 15)));

        // c = 5: the larger cluster (label 1, 25 points) gets 3
        let s = resample_within(&p, 2, 5, &mut rng).unwrap();
        assert_eq!(s.iter().filter(|set| set[0] >= 15).count(), 3);

        // cluster 0 has only 2 points (< d + 1 = 3): its sets come from everyone
        let labels: Vec<usize> = (0..40).map(|i| usize::from(i >= 2)).collect();
        let p = Partition::new(labels, 2).unwrap();
        let s = resample_within(&p, 2, 400, &mut rng).unwrap();
        let fallback = &s.iter().take(200).flatten().copied().collect::<Vec<_>>();
        assert!(fallback.iter().any(|&i| i >= 2));
    }

    fn two_lines(n: usize, noise: f64, seed: u64) -> (DataMatrix, Vec<usize>) {
        let mut rng = stream_rng(seed, 7);
        let mut cols = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let t: f64 = rng.random_range(-1.0..1.0);
            let e: f64 = noise * rng.random_range(-1.0..1.0);
            if i % 2 == 0 {
                cols.push([t, 0.3 * t + e]);
                labels.push(0);
            } else {
                cols.push([t + e, 1.0 - 2.0 * t]);
                labels.push(1);
            }
        }
        let m = DMatrix::from_fn(2, n, |r, c| cols[c][r]);
        (DataMatrix::new(m).unwrap(), labels)
    }

    #[test]
    fn sweep_separates_two_lines() {
        let (data, labels) = two_lines(60, 0.0, 1);
        let cfg = SccConfig::new(1, 2);
        let samples = sample_initial(60, 1, 200, &mut stream_rng(3, 0)).unwrap();
        let out = sweep_and_cluster(&data, &samples, &cfg, 5).unwrap();
        assert_eq!(out.candidates.len(), 2);
        let l = out.partition.labels();
        assert!(l.iter().zip(&labels).all(|(a, b)| (*a == l[0]) == (*b == labels[0])));
        assert!(out.ols_error < 1e-20);
    }

    #[test]
    fn single_cluster_run() {
        let (data, _) = two_lines(30, 0.1, 2);
        let res = scc_run(&data, &SccConfig::new(1, 1)).unwrap();
        assert_eq!(res.partition, Partition::single(30));
        let global = total_ols_error(&data, &Partition::single(30), 1).unwrap();
        assert!((res.ols_error - global).abs() <= 1e-12 * global);
        assert_eq!(res.q_chosen, 1);
    }

    #[test]
    fn run_invariants() {
        let (data, _) = two_lines(80, 0.05, 3);
        let cfg = SccConfig::new(1, 2).with_seed(11);
        let res = scc_run(&data, &cfg).unwrap();
        assert_eq!(res, scc_run(&data, &cfg).unwrap());
        let recomputed = total_ols_error(&data, &res.partition, 1).unwrap();
        assert!((res.ols_error - recomputed).abs() <= 1e-9 * recomputed.max(1e-300));
        assert!(res.per_iteration_errors.iter().all(|&e| res.ols_error <= e));
        assert_eq!(res.iterations_run, res.per_iteration_errors.len());
        assert_eq!(res.subspaces.len(), 2);
        assert!((1..=2).contains(&res.q_chosen));
    }

    #[test]
    fn config_validation() {
        let (data, _) = two_lines(10, 0.0, 1);
        let mut cfg = SccConfig::new(1, 2);
        cfg.c = 1;
        assert!(matches!(scc_run(&data, &cfg), Err(SccError::InvalidConfig(_))));
        assert!(SccConfig::new(0, 2).validate().is_err());
        assert!(SccConfig::new(1, 0).validate().is_err());
        assert!(matches!(
            scc_run(&data, &SccConfig::new(3, 2)),
            Err(SccError::InvalidDimension { .. })
        ));
        let tiny = DataMatrix::from_points(&[&[0.0, 0.0], &[1.0, 1.0]]).unwrap();
        assert!(matches!(scc_run(&tiny, &SccConfig::new(1, 2)), Err(SccError::TooFewPoints { .. })));
        assert_eq!("4K".parse::<Projection>().unwrap(), Projection::Pca4K);
        assert!("5K".parse::<Projection>().is_err());
    }
}
