//! Spectral clustering with the symmetric normalized affinity and k-means on
//! the row-normalized top eigenvectors.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::curvature::{AffinityMatrix, WeightMatrix};
use crate::geometry::Partition;
use crate::linalg::{top_eigenpairs, SymmetricOperator};
use crate::rng::{stream_rng, SccRng};
use crate::{Result, SccError};

const KMEANS_RESTARTS: u64 = 10;
const KMEANS_MAX_ITER: usize = 100;
/// Above this size the dense weight path switches to the iterative solver.
pub const DENSE_EIGEN_LIMIT: usize = 2000;
const SYMMETRY_TOL: f64 = 1e-10;

/// Row-normalized spectral coordinates, one row per point.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    rows: DMatrix<f64>,
}

impl Embedding {
    /// Normalizes every nonzero row of `rows` to unit length.
    pub fn from_eigenvectors(mut rows: DMatrix<f64>) -> Self {
        for mut row in rows.row_iter_mut() {
            let norm = row.norm();
            if norm > 0.0 && norm.is_finite() {
                row /= norm;
            }
        }
        Self { rows }
    }

    pub fn rows(&self) -> &DMatrix<f64> {
        &self.rows
    }
}

/// Result of [`kmeans`].
#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub partition: Partition,
    /// One center per row.
    pub centers: DMatrix<f64>,
    /// Within-cluster sum of squares.
    pub cost: f64,
}

fn sq_dist(rows: &DMatrix<f64>, i: usize, centers: &DMatrix<f64>, c: usize) -> f64 {
    (0..rows.ncols())
        .map(|j| {
            let d = rows[(i, j)] - centers[(c, j)];
            d * d
        })
        .sum()
}

/// Nearest center, ties to the lowest index.
fn nearest(rows: &DMatrix<f64>, i: usize, centers: &DMatrix<f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centers.nrows() {
        let d = sq_dist(rows, i, centers, c);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Seeding weighted by squared distance to the closest chosen center.
fn seed_centers(rows: &DMatrix<f64>, k: usize, rng: &mut SccRng) -> DMatrix<f64> {
    let n = rows.nrows();
    let mut centers = DMatrix::zeros(k, rows.ncols());
    let first = rng.random_range(0..n);
    centers.row_mut(0).copy_from(&rows.row(first));
    let mut closest: Vec<f64> = (0..n).map(|i| sq_dist(rows, i, &centers, 0)).collect();
    for c in 1..k {
        let total: f64 = closest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &w) in closest.iter().enumerate() {
                acc += w;
                if acc > target && w > 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        centers.row_mut(c).copy_from(&rows.row(pick));
        for (i, slot) in closest.iter_mut().enumerate() {
            *slot = slot.min(sq_dist(rows, i, &centers, c));
        }
    }
    centers
}

fn lloyd(rows: &DMatrix<f64>, mut centers: DMatrix<f64>) -> (Vec<usize>, DMatrix<f64>, f64) {
    let n = rows.nrows();
    let k = centers.nrows();
    let mut labels = vec![usize::MAX; n];
    for _ in 0..KMEANS_MAX_ITER {
        let mut changed = false;
        for (i, label) in labels.iter_mut().enumerate() {
            let (c, _) = nearest(rows, i, &centers);
            if *label != c {
                *label = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = DMatrix::zeros(k, rows.ncols());
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            let mut row = sums.row_mut(l);
            row += rows.row(i);
        }
        for c in 0..k {
            if counts[c] > 0 {
                let mean = sums.row(c) / counts[c] as f64;
                centers.row_mut(c).copy_from(&mean);
            }
        }
        // an empty cluster takes the point farthest from its current center
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..n)
                    .map(|i| (i, sq_dist(rows, i, &centers, labels[i])))
                    .fold((0, -1.0), |a, b| if b.1 > a.1 { b } else { a });
                let old = labels[far.0];
                counts[old] -= 1;
                counts[c] = 1;
                labels[far.0] = c;
                centers.row_mut(c).copy_from(&rows.row(far.0));
            }
        }
    }
    let cost = (0..n).map(|i| sq_dist(rows, i, &centers, labels[i])).sum();
    (labels, centers, cost)
}

/// Lloyd k-means with seeded distance-weighted initialization and several
/// restarts; the lowest-cost run is kept. Deterministic in `(rows, k, seed)`.
pub fn kmeans(rows: &DMatrix<f64>, k: usize, seed: u64) -> Result<KMeans> {
    let n = rows.nrows();
    if k == 0 {
        return Err(SccError::InvalidConfig("k-means needs k >= 1".into()));
    }
    if n < k {
        return Err(SccError::TooFewPoints { required: k, found: n });
    }
    let mut best: Option<KMeans> = None;
    for restart in 0..KMEANS_RESTARTS {
        let mut rng = stream_rng(seed, restart);
        let centers = seed_centers(rows, k, &mut rng);
        let (labels, centers, cost) = lloyd(rows, centers);
        if best.as_ref().is_none_or(|b| cost < b.cost) {
            best = Some(KMeans {
                partition: Partition::new(labels, k)?,
                centers,
                cost,
            });
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Outcome of spectral clustering from a sampled affinity matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralOutcome {
    pub partition: Partition,
    /// Points with zero degree. They received the label of the center
    /// closest to the origin of the embedding; callers may reassign them.
    pub isolated: Vec<usize>,
}

/// `B Bᵀ` restricted to the active rows, with `B = Deg^{-1/2} A`.
struct NormalizedFactor {
    factor: DMatrix<f64>,
}

impl SymmetricOperator for NormalizedFactor {
    fn dim(&self) -> usize {
        self.factor.nrows()
    }

    fn apply(&self, block: &DMatrix<f64>) -> DMatrix<f64> {
        let inner = self.factor.tr_mul(block);
        &self.factor * inner
    }
}

/// `Deg^{-1/2} W Deg^{-1/2}` on active rows, applied without forming it.
struct NormalizedWeights<'a> {
    weights: &'a DMatrix<f64>,
    active: &'a [usize],
    inv_sqrt_deg: Vec<f64>,
}

impl SymmetricOperator for NormalizedWeights<'_> {
    fn dim(&self) -> usize {
        self.active.len()
    }

    fn apply(&self, block: &DMatrix<f64>) -> DMatrix<f64> {
        let m = self.active.len();
        let mut out = DMatrix::zeros(m, block.ncols());
        for (a, &i) in self.active.iter().enumerate() {
            for (b, &j) in self.active.iter().enumerate() {
                let w = self.weights[(i, j)] * self.inv_sqrt_deg[a] * self.inv_sqrt_deg[b];
                if w != 0.0 {
                    for col in 0..block.ncols() {
                        out[(a, col)] += w * block[(b, col)];
                    }
                }
            }
        }
        out
    }
}

fn split_active(degrees: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let mut active = Vec::new();
    let mut isolated = Vec::new();
    for (i, &d) in degrees.iter().enumerate() {
        if d > 0.0 {
            active.push(i);
        } else {
            isolated.push(i);
        }
    }
    (active, isolated)
}

/// Runs k-means on the active embedding rows and labels isolated points by
/// the center nearest to the zero vector.
fn cluster_embedding(
    n: usize,
    active: &[usize],
    isolated: Vec<usize>,
    vectors: DMatrix<f64>,
    k: usize,
    seed: u64,
) -> Result<SpectralOutcome> {
    let emb = Embedding::from_eigenvectors(vectors);
    let km = kmeans(emb.rows(), k, seed)?;
    let mut labels = vec![0; n];
    for (a, &i) in active.iter().enumerate() {
        labels[i] = km.partition.label(a);
    }
    if !isolated.is_empty() {
        let zero = DMatrix::zeros(1, km.centers.ncols());
        let (fallback, _) = nearest(&zero, 0, &km.centers);
        for &i in &isolated {
            labels[i] = fallback;
        }
    }
    Ok(SpectralOutcome {
        partition: Partition::new(labels, k)?,
        isolated,
    })
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 {
        return Err(SccError::InvalidConfig("number of clusters must be >= 1".into()));
    }
    if n < k {
        return Err(SccError::TooFewPoints { required: k, found: n });
    }
    Ok(())
}

/// Spectral clustering of an explicit weight matrix into `k` groups.
///
/// Uses the dense eigensolver up to [`DENSE_EIGEN_LIMIT`] points and the
/// block Krylov solver beyond.
pub fn spectral_cluster(w: &WeightMatrix, k: usize, seed: u64) -> Result<Partition> {
    let n = w.len();
    check_k(n, k)?;
    let m = w.matrix();
    let asym = (m - m.transpose()).amax();
    if asym > SYMMETRY_TOL * m.amax().max(1.0) {
        return Err(SccError::NotSymmetric(asym));
    }
    if k == 1 {
        return Ok(Partition::single(n));
    }
    let degrees: Vec<f64> = m.row_iter().map(|r| r.sum()).collect();
    let (mut active, mut isolated) = split_active(&degrees);
    if active.len() < k {
        active = (0..n).collect();
        isolated.clear();
    }
    let inv: Vec<f64> = active
        .iter()
        .map(|&i| if degrees[i] > 0.0 { 1.0 / libm::sqrt(degrees[i]) } else { 0.0 })
        .collect();
    let mut rng = stream_rng(seed, u64::MAX);
    let vectors = if active.len() <= DENSE_EIGEN_LIMIT {
        let normalized = DMatrix::from_fn(active.len(), active.len(), |a, b| {
            m[(active[a], active[b])] * inv[a] * inv[b]
        });
        top_eigenpairs(&normalized, k, &mut rng).vectors
    } else {
        let op = NormalizedWeights {
            weights: m,
            active: &active,
            inv_sqrt_deg: inv,
        };
        top_eigenpairs(&op, k, &mut rng).vectors
    };
    Ok(cluster_embedding(n, &active, isolated, vectors, k, seed)?.partition)
}

/// Spectral clustering of `W = A Aᵀ` straight from the affinity factor.
///
/// Equivalent to [`spectral_cluster`] on [`crate::curvature::pairwise_weights`]
/// but never forms the `N × N` matrix: the normalized operator is applied
/// as `B (Bᵀ x)` with `B = Deg^{-1/2} A`, which keeps memory at `O(N c)`.
pub fn spectral_cluster_affinity(a: &AffinityMatrix, k: usize, seed: u64) -> Result<SpectralOutcome> {
    let am = a.matrix();
    let n = am.nrows();
    check_k(n, k)?;
    if k == 1 {
        return Ok(SpectralOutcome {
            partition: Partition::single(n),
            isolated: Vec::new(),
        });
    }
    let col_sums: DVector<f64> = am.row_sum().transpose();
    let degrees: Vec<f64> = (am * &col_sums).iter().copied().collect();
    let (mut active, mut isolated) = split_active(&degrees);
    if active.len() < k {
        active = (0..n).collect();
        isolated.clear();
    }
    let factor = DMatrix::from_fn(active.len(), am.ncols(), |r, c| {
        let i = active[r];
        if degrees[i] > 0.0 {
            am[(i, c)] / libm::sqrt(degrees[i])
        } else {
            0.0
        }
    });
    let mut rng = stream_rng(seed, u64::MAX);
    let vectors = top_eigenpairs(&NormalizedFactor { factor }, k, &mut rng).vectors;
    cluster_embedding(n, &active, isolated, vectors, k, seed)
}
