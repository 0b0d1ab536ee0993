//! Scoring against ground truth and the per-category summaries.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::geometry::Partition;
use crate::{Result, SccError};

/// Sequence category, following the motion-segmentation benchmark layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    Checkerboard,
    Traffic,
    Other,
    Synthetic,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Checkerboard,
        Category::Traffic,
        Category::Other,
        Category::Synthetic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Checkerboard => "checkerboard",
            Category::Traffic => "traffic",
            Category::Other => "other",
            Category::Synthetic => "synthetic",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = SccError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "checkerboard" | "checker" => Ok(Category::Checkerboard),
            "traffic" => Ok(Category::Traffic),
            "other" | "articulated" | "nonrigid" => Ok(Category::Other),
            "synthetic" => Ok(Category::Synthetic),
            _ => Err(SccError::InvalidConfig(alloc::format!("unknown category '{s}'"))),
        }
    }
}

/// A row group in a summary table: one category or all of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Group {
    Category(Category),
    All,
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Group::Category(c) => c.fmt(f),
            Group::All => f.write_str("all"),
        }
    }
}

impl FromStr for Group {
    type Err = SccError;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("all") {
            Ok(Group::All)
        } else {
            s.parse().map(Group::Category)
        }
    }
}

/// Per-sequence error averaged over repeated runs.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub sequence_id: String,
    pub category: Category,
    /// Number of motions.
    pub k: usize,
    pub error_pct: f64,
    pub runs: usize,
    /// Seconds.
    pub mean_runtime: f64,
}

fn best_assignment_brute(weights: &[Vec<usize>]) -> usize {
    let m = weights.len();
    let mut perm: Vec<usize> = (0..m).collect();
    let score = |p: &[usize]| p.iter().enumerate().map(|(i, &j)| weights[i][j]).sum::<usize>();
    let mut best = score(&perm);
    // Heap's algorithm
    let mut c = vec![0usize; m];
    let mut i = 0;
    while i < m {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.max(score(&perm));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

/// Maximum-weight perfect matching on a square matrix (Hungarian method
/// with potentials, `O(m^3)`).
pub fn best_assignment(weights: &[Vec<usize>]) -> usize {
    let m = weights.len();
    if m == 0 {
        return 0;
    }
    let max_w = weights.iter().flatten().copied().max().unwrap_or(0) as i64;
    let cost = |i: usize, j: usize| max_w - weights[i][j] as i64;
    let inf = i64::MAX / 4;
    let mut u = vec![0i64; m + 1];
    let mut v = vec![0i64; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=m {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=m).map(|j| weights[p[j] - 1][j - 1]).sum()
}

/// Percentage of points misclassified under the best one-to-one matching
/// of predicted clusters to true clusters.
///
/// Label sets of different size are padded to the larger one, so points in
/// unmatched clusters count as errors.
pub fn misclassification_rate(predicted: &Partition, truth: &Partition) -> Result<f64> {
    let n = truth.len();
    if predicted.len() != n {
        return Err(SccError::LengthMismatch {
            left: predicted.len(),
            right: n,
        });
    }
    if n == 0 {
        return Err(SccError::EmptyInput);
    }
    let m = predicted.num_clusters().max(truth.num_clusters());
    let mut confusion = vec![vec![0usize; m]; m];
    for (&p, &t) in predicted.labels().iter().zip(truth.labels()) {
        confusion[p][t] += 1;
    }
    let matched = if m <= 6 {
        best_assignment_brute(&confusion)
    } else {
        best_assignment(&confusion)
    };
    Ok(100.0 * (n - matched) as f64 / n as f64)
}

/// Mean and median error of one group of sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub group: Group,
    pub motions: usize,
    pub count: usize,
    pub mean_pct: f64,
    pub median_pct: f64,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Mean and median of `error_pct` per (motion count, category), plus an
/// `All` row per motion count. Rows come sorted by motion count, then in
/// category order with `All` last; empty groups are omitted.
pub fn aggregate(records: &[EvalRecord]) -> Result<Vec<AggregateRow>> {
    if records.is_empty() {
        return Err(SccError::EmptyInput);
    }
    let mut motions: Vec<usize> = records.iter().map(|r| r.k).collect();
    motions.sort_unstable();
    motions.dedup();
    let mut rows = Vec::new();
    for k in motions {
        let groups = Category::ALL.iter().map(|&c| Group::Category(c)).chain([Group::All]);
        for group in groups {
            let mut errs: Vec<f64> = records
                .iter()
                .filter(|r| r.k == k && (group == Group::All || group == Group::Category(r.category)))
                .map(|r| r.error_pct)
                .collect();
            if errs.is_empty() {
                continue;
            }
            errs.sort_unstable_by(f64::total_cmp);
            rows.push(AggregateRow {
                group,
                motions: k,
                count: errs.len(),
                mean_pct: errs.iter().sum::<f64>() / errs.len() as f64,
                median_pct: median(&errs),
            });
        }
    }
    Ok(rows)
}

/// Error histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    /// `edges.len() - 1` bins, left-closed, the last one closed.
    pub counts: Vec<usize>,
    /// Percentage of errors that are exactly zero (below `1e-12`).
    pub zero_share_pct: f64,
}

/// Counts errors into bins. Values outside the edges land in the nearest
/// end bin, so the counts always sum to the number of errors.
pub fn error_histogram(errors: &[f64], edges: &[f64]) -> Result<Histogram> {
    if edges.len() < 2
        || edges.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(core::cmp::Ordering::Less))
        || edges[0] > 0.0
        || edges[edges.len() - 1] < 100.0
    {
        return Err(SccError::InvalidBinEdges);
    }
    let bins = edges.len() - 1;
    let mut counts = vec![0; bins];
    for &e in errors {
        // number of interior edges <= e gives the bin index
        let idx = edges[1..bins].partition_point(|&edge| edge <= e);
        counts[idx] += 1;
    }
    let zeros = errors.iter().filter(|&&e| e < 1e-12).count();
    let zero_share_pct = if errors.is_empty() {
        0.0
    } else {
        100.0 * zeros as f64 / errors.len() as f64
    };
    Ok(Histogram {
        edges: edges.to_vec(),
        counts,
        zero_share_pct,
    })
}

/// Evenly spaced edges from 0 to 100.
pub fn uniform_edges(width: f64) -> Result<Vec<f64>> {
    if !(width > 0.0 && width <= 100.0) {
        return Err(SccError::InvalidBinEdges);
    }
    let bins = libm::ceil(100.0 / width - 1e-9) as usize;
    Ok((0..=bins).map(|i| (i as f64 * width).min(100.0)).collect())
}
