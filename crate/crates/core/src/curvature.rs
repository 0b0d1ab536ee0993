//! Polar curvature of `(d+2)`-point tuples and the sampled affinity matrix.
//!
//! The squared polar curvature of a tuple `I` of `d + 2` points is
//!
//! ```text
//! diam(I)^2 * 1/(d+2) * sum_j  V(I) / prod_{k != j} |x_j - x_k|^2
//! ```
//!
//! where `V(I) = ((d+1)! vol)^2` is the squared volume of the simplex,
//! i.e. the determinant of the homogeneous Gram matrix `X'X + 1` of the
//! centroid-centered tuple. It vanishes exactly when the tuple lies on a
//! common `d`-flat.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::geometry::DataMatrix;
use crate::linalg::determinant;
use crate::{Result, SccError};

/// `c` index sets `J_1..J_c`, each holding `d + 1` distinct point indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSet {
    tuple_len: usize,
    indices: Vec<usize>,
}

impl SampleSet {
    /// Validates each set: exactly `tuple_len` distinct indices below `n`.
    pub fn new(sets: Vec<Vec<usize>>, tuple_len: usize, n: usize) -> Result<Self> {
        if tuple_len == 0 {
            return Err(SccError::InvalidSamples("tuple length must be positive".into()));
        }
        let mut indices = Vec::with_capacity(sets.len() * tuple_len);
        for (r, set) in sets.iter().enumerate() {
            if set.len() != tuple_len {
                return Err(SccError::InvalidSamples(format!(
                    "set {r} has {} indices, expected {tuple_len}",
                    set.len()
                )));
            }
            for (a, &i) in set.iter().enumerate() {
                if i >= n {
                    return Err(SccError::InvalidSamples(format!("set {r} index {i} >= {n}")));
                }
                if set[..a].contains(&i) {
                    return Err(SccError::InvalidSamples(format!("set {r} repeats index {i}")));
                }
            }
            indices.extend_from_slice(set);
        }
        Ok(Self { tuple_len, indices })
    }

    /// Number of sets `c`.
    pub fn len(&self) -> usize {
        self.indices.len() / self.tuple_len
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Points per set, `d + 1`.
    pub fn tuple_len(&self) -> usize {
        self.tuple_len
    }

    pub fn set(&self, r: usize) -> &[usize] {
        &self.indices[r * self.tuple_len..(r + 1) * self.tuple_len]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> {
        self.indices.chunks_exact(self.tuple_len)
    }
}

/// `N × c` matrix of affinities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    values: DMatrix<f64>,
}

impl AffinityMatrix {
    /// Accepts any matrix with entries in `[0, 1]`.
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(SccError::InvalidConfig("affinities must lie in [0, 1]".into()));
        }
        Ok(Self { values })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// Indices of points whose row is identically zero.
    pub fn zero_rows(&self) -> Vec<usize> {
        self.values
            .row_iter()
            .enumerate()
            .filter(|(_, row)| row.iter().all(|&v| v == 0.0))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Symmetric `N × N` weights `W = A Aᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    values: DMatrix<f64>,
}

impl WeightMatrix {
    /// Wraps a square matrix. Symmetry is checked by the consumers that need it.
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() != values.ncols() {
            return Err(SccError::NotSquare {
                rows: values.nrows(),
                cols: values.ncols(),
            });
        }
        Ok(Self { values })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }
}

fn check_tuple(tuple: &DMatrix<f64>, d: usize) -> Result<()> {
    if tuple.ncols() != d + 2 {
        return Err(SccError::TupleSize {
            expected: d + 2,
            found: tuple.ncols(),
        });
    }
    Ok(())
}

/// Squared `(d+1)`-volume of the simplex on the `d + 2` columns of `tuple`,
/// scaled by `((d+1)!)^2`.
///
/// Computed as the Gram determinant of the edge vectors from the first
/// vertex, which equals `det(X'X + 1)` for the centroid-centered tuple.
/// Roundoff negatives are clamped to 0.
pub fn simplex_gram_det(tuple: &DMatrix<f64>, d: usize) -> Result<f64> {
    check_tuple(tuple, d)?;
    Ok(edge_gram_det(tuple))
}

fn edge_gram_det(tuple: &DMatrix<f64>) -> f64 {
    let m = tuple.ncols();
    let base = tuple.column(0);
    let edges = DMatrix::from_fn(tuple.nrows(), m - 1, |r, c| tuple[(r, c + 1)] - base[r]);
    determinant(&edges.tr_mul(&edges)).max(0.0)
}

/// Combines the simplex volume with the vertex distances. `dist_sq` is the
/// `m × m` matrix of squared pairwise distances.
fn combine(volume_sq: f64, dist_sq: &[f64], m: usize) -> f64 {
    let diam_sq = dist_sq.iter().copied().fold(0.0, f64::max);
    if diam_sq == 0.0 {
        return 0.0;
    }
    if (0..m).any(|j| (0..m).any(|k| j != k && dist_sq[j * m + k] == 0.0)) {
        return f64::INFINITY;
    }
    let sum: f64 = (0..m)
        .map(|j| {
            let prod: f64 = (0..m).filter(|&k| k != j).map(|k| dist_sq[j * m + k]).product();
            volume_sq / prod
        })
        .sum();
    diam_sq * sum / m as f64
}

/// Squared polar curvature of `d + 2` points (the columns of `tuple`).
///
/// Returns 0 when all points coincide and `+inf` when only some of them
/// coincide.
pub fn polar_curvature_sq(tuple: &DMatrix<f64>, d: usize) -> Result<f64> {
    check_tuple(tuple, d)?;
    let m = d + 2;
    let mut dist_sq = vec![0.0; m * m];
    for j in 0..m {
        for k in (j + 1)..m {
            let v = (tuple.column(j) - tuple.column(k)).norm_squared();
            dist_sq[j * m + k] = v;
            dist_sq[k * m + j] = v;
        }
    }
    Ok(combine(edge_gram_det(tuple), &dist_sq, m))
}

/// Per-set precomputation: an orthonormal basis of the set's edges, its
/// Gram determinant and the pairwise distances inside the set. Appending a
/// point then costs `O(d D)`.
struct SetGeometry {
    anchor: DVector<f64>,
    basis: DMatrix<f64>,
    base_volume_sq: f64,
    dist_sq: Vec<f64>,
}

impl SetGeometry {
    fn new(data: &DataMatrix, set: &[usize]) -> Self {
        let len = set.len();
        let dim = data.dim();
        let anchor: DVector<f64> = data.point(set[0]).into_owned();
        let mut basis = DMatrix::zeros(dim, len - 1);
        let mut filled = 0;
        let mut base_volume_sq = 1.0;
        for &p in &set[1..] {
            let mut v = data.point(p) - &anchor;
            for _ in 0..2 {
                let q = basis.columns(0, filled);
                let coeff = q.tr_mul(&v);
                v -= q * coeff;
            }
            let norm_sq = v.norm_squared();
            base_volume_sq *= norm_sq;
            if norm_sq > 0.0 {
                basis.set_column(filled, &(v / libm::sqrt(norm_sq)));
                filled += 1;
            }
        }
        if filled < len - 1 {
            base_volume_sq = 0.0;
        }
        let m = len + 1;
        let mut dist_sq = vec![0.0; m * m];
        for a in 0..len {
            for b in (a + 1)..len {
                let v = (data.point(set[a]) - data.point(set[b])).norm_squared();
                dist_sq[a * m + b] = v;
                dist_sq[b * m + a] = v;
            }
        }
        Self {
            anchor,
            basis: basis.columns(0, filled).into_owned(),
            base_volume_sq,
            dist_sq,
        }
    }

    /// Curvature of the set plus point `i`. `scratch` is the `(d+2)^2`
    /// distance buffer, `resid` a `D`-vector buffer.
    fn curvature_with(
        &self,
        data: &DataMatrix,
        set: &[usize],
        i: usize,
        scratch: &mut [f64],
        resid: &mut [f64],
    ) -> f64 {
        let len = set.len();
        let m = len + 1;
        let dim = data.dim();
        let raw = data.matrix().as_slice();
        let x = &raw[i * dim..(i + 1) * dim];
        scratch.copy_from_slice(&self.dist_sq);
        for (a, &p) in set.iter().enumerate() {
            let v = sq_dist(x, &raw[p * dim..(p + 1) * dim]);
            scratch[a * m + len] = v;
            scratch[len * m + a] = v;
        }
        for ((r, xv), av) in resid.iter_mut().zip(x).zip(self.anchor.iter()) {
            *r = xv - av;
        }
        let basis = self.basis.as_slice();
        for q in basis.chunks_exact(dim) {
            let coeff: f64 = q.iter().zip(resid.iter()).map(|(a, b)| a * b).sum();
            for (r, qv) in resid.iter_mut().zip(q) {
                *r -= coeff * qv;
            }
        }
        let height_sq: f64 = resid.iter().map(|v| v * v).sum();
        combine(self.base_volume_sq * height_sq, scratch, m)
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Curvatures of every point against every sampled set, stored `N × c`.
/// Entries for points inside the set are absent.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureTable {
    n: usize,
    values: Vec<f64>,
    members: Vec<usize>,
    tuple_len: usize,
}

impl CurvatureTable {
    /// Computes all `(N - d - 1) c` curvatures.
    pub fn compute(data: &DataMatrix, samples: &SampleSet) -> Result<Self> {
        let n = data.len();
        let tuple_len = samples.tuple_len();
        if n <= tuple_len {
            return Err(SccError::TooFewPoints {
                required: tuple_len + 1,
                found: n,
            });
        }
        if samples.is_empty() {
            return Err(SccError::InvalidSamples("no sampled sets".into()));
        }
        if let Some(&bad) = samples.indices.iter().find(|&&i| i >= n) {
            return Err(SccError::InvalidSamples(format!("index {bad} >= {n}")));
        }
        let m = tuple_len + 1;
        let mut scratch = vec![0.0; m * m];
        let mut resid = vec![0.0; data.dim()];
        let mut values = vec![f64::NAN; n * samples.len()];
        for (r, set) in samples.iter().enumerate() {
            let geom = SetGeometry::new(data, set);
            let column = &mut values[r * n..(r + 1) * n];
            for (i, slot) in column.iter_mut().enumerate() {
                if !set.contains(&i) {
                    *slot = geom.curvature_with(data, set, i, &mut scratch, &mut resid);
                }
            }
        }
        Ok(Self {
            n,
            values,
            members: samples.indices.clone(),
            tuple_len,
        })
    }

    pub fn num_points(&self) -> usize {
        self.n
    }

    pub fn num_sets(&self) -> usize {
        self.values.len() / self.n
    }

    /// Curvature of point `i` against set `r`, `None` when `i` is in the set.
    pub fn get(&self, i: usize, r: usize) -> Option<f64> {
        if self.members[r * self.tuple_len..(r + 1) * self.tuple_len].contains(&i) {
            None
        } else {
            Some(self.values[r * self.n + i])
        }
    }

    /// All defined curvatures in ascending order, `+inf` last.
    pub fn sorted(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.values.iter().copied().filter(|v| !v.is_nan()).collect();
        out.sort_unstable_by(f64::total_cmp);
        out
    }

    /// `A(i, r) = exp(-c(i, r) / (2 sigma_sq))`, 0 for members of the set.
    pub fn affinity(&self, sigma_sq: f64) -> Result<AffinityMatrix> {
        if !(sigma_sq > 0.0 && sigma_sq.is_finite()) {
            return Err(SccError::NonPositiveSigma(sigma_sq));
        }
        let c = self.num_sets();
        let denom = 2.0 * sigma_sq;
        let values = DMatrix::from_fn(self.n, c, |i, r| {
            let v = self.values[r * self.n + i];
            if v.is_nan() {
                0.0
            } else {
                libm::exp(-v / denom)
            }
        });
        Ok(AffinityMatrix { values })
    }
}

/// Affinity matrix for the given samples and bandwidth.
pub fn build_affinity(data: &DataMatrix, samples: &SampleSet, sigma_sq: f64) -> Result<AffinityMatrix> {
    if !(sigma_sq > 0.0 && sigma_sq.is_finite()) {
        return Err(SccError::NonPositiveSigma(sigma_sq));
    }
    CurvatureTable::compute(data, samples)?.affinity(sigma_sq)
}

/// The `(N - d - 1) c` curvatures sorted ascending.
pub fn curvature_vector(data: &DataMatrix, samples: &SampleSet) -> Result<Vec<f64>> {
    Ok(CurvatureTable::compute(data, samples)?.sorted())
}

/// `W = A Aᵀ`, symmetrized exactly.
pub fn pairwise_weights(a: &AffinityMatrix) -> WeightMatrix {
    let w = &a.values * a.values.transpose();
    let sym = (&w + w.transpose()) * 0.5;
    WeightMatrix { values: sym }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tuple(points: &[&[f64]]) -> DMatrix<f64> {
        DMatrix::from_fn(points[0].len(), points.len(), |r, c| points[c][r])
    }

    #[test]
    fn right_triangle() {
        let t = tuple(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
        assert!((simplex_gram_det(&t, 1).unwrap() - 1.0).abs() < 1e-12);
        assert!((polar_curvature_sq(&t, 1).unwrap() - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn homogeneous_gram_of_centered_tuple_agrees() {
        let t = tuple(&[&[0.3, 2.0, -1.0], &[1.5, 0.2, 0.0], &[-0.7, 1.1, 2.2]]);
        let centroid = t.column_mean();
        let mut h = DMatrix::zeros(4, 3);
        for c in 0..3 {
            for r in 0..3 {
                h[(r, c)] = t[(r, c)] - centroid[r];
            }
            h[(3, c)] = 1.0;
        }
        let direct = determinant(&h.tr_mul(&h));
        assert!((simplex_gram_det(&t, 1).unwrap() - direct).abs() < 1e-10 * direct);
    }

    #[test]
    fn collinear_and_coincident() {
        let t = tuple(&[&[0.0, 0.0], &[1.0, 0.0], &[2.0, 0.0]]);
        assert_eq!(polar_curvature_sq(&t, 1).unwrap(), 0.0);
        let same = tuple(&[&[1.0, 1.0], &[1.0, 1.0], &[1.0, 1.0]]);
        assert_eq!(polar_curvature_sq(&same, 1).unwrap(), 0.0);
        let dup = tuple(&[&[1.0, 1.0], &[1.0, 1.0], &[0.0, 3.0]]);
        assert_eq!(polar_curvature_sq(&dup, 1).unwrap(), f64::INFINITY);
    }

    #[test]
    fn wrong_tuple_size() {
        let t = tuple(&[&[0.0, 0.0], &[1.0, 0.0]]);
        assert_eq!(
            polar_curvature_sq(&t, 1),
            Err(SccError::TupleSize { expected: 3, found: 2 })
        );
        assert!(simplex_gram_det(&t, 2).is_err());
    }

    #[test]
    fn affinity_members_and_bandwidth() {
        let data = DataMatrix::from_points(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[2.0, 0.0]]).unwrap();
        let samples = SampleSet::new(vec![vec![0, 1]], 2, 4).unwrap();
        // point 2 with set {0,1}: curvature 4/3; choose sigma_sq so that c = 2 sigma_sq
        let a = build_affinity(&data, &samples, 2.0 / 3.0).unwrap();
        assert_eq!(a.matrix()[(0, 0)], 0.0);
        assert_eq!(a.matrix()[(1, 0)], 0.0);
        assert!((a.matrix()[(2, 0)] - (-1.0f64).exp()).abs() < 1e-12);
        assert!((a.matrix()[(3, 0)] - 1.0).abs() < 1e-12);
        assert_eq!(build_affinity(&data, &samples, 0.0), Err(SccError::NonPositiveSigma(0.0)));
        assert!(build_affinity(&data, &samples, -1.0).is_err());
    }

    #[test]
    fn duplicate_point_gets_zero_affinity() {
        let data = DataMatrix::from_points(&[&[0.0, 0.0], &[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]).unwrap();
        let samples = SampleSet::new(vec![vec![0, 1]], 2, 4).unwrap();
        let table = CurvatureTable::compute(&data, &samples).unwrap();
        assert_eq!(table.get(2, 0), Some(f64::INFINITY));
        assert_eq!(table.get(0, 0), None);
        let a = table.affinity(1.0).unwrap();
        assert_eq!(a.matrix()[(2, 0)], 0.0);
        assert_eq!(*table.sorted().last().unwrap(), f64::INFINITY);
    }

    #[test]
    fn curvature_vector_length_and_errors() {
        let data = DataMatrix::from_points(&[&[0.0, 0.0], &[1.0, 0.3], &[0.0, 1.0], &[2.0, 0.5], &[3.0, 1.0]]).unwrap();
        let samples = SampleSet::new(vec![vec![0, 1], vec![2, 4], vec![1, 3]], 2, 5).unwrap();
        assert_eq!(curvature_vector(&data, &samples).unwrap().len(), (5 - 2) * 3);
        let tiny = DataMatrix::from_points(&[&[0.0], &[1.0]]).unwrap();
        let s = SampleSet::new(vec![vec![0, 1]], 2, 2).unwrap();
        assert!(matches!(curvature_vector(&tiny, &s), Err(SccError::TooFewPoints { .. })));
    }

    #[test]
    fn sample_set_validation() {
        assert!(SampleSet::new(vec![vec![0, 0]], 2, 3).is_err());
        assert!(SampleSet::new(vec![vec![0, 3]], 2, 3).is_err());
        assert!(SampleSet::new(vec![vec![0]], 2, 3).is_err());
        let s = SampleSet::new(vec![vec![2, 0], vec![1, 2]], 2, 3).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.set(1), &[1, 2]);
    }

    #[test]
    fn weights_special_cases() {
        let zero = AffinityMatrix::new(DMatrix::zeros(3, 2)).unwrap();
        assert_eq!(pairwise_weights(&zero).matrix(), &DMatrix::zeros(3, 3));
        let mut single = DMatrix::zeros(3, 2);
        single[(1, 1)] = 0.5;
        let w = pairwise_weights(&AffinityMatrix::new(single).unwrap());
        let mut expected = DMatrix::zeros(3, 3);
        expected[(1, 1)] = 0.25;
        assert_eq!(w.matrix(), &expected);
        assert!(AffinityMatrix::new(DMatrix::from_element(1, 1, 1.5)).is_err());
        assert!(WeightMatrix::new(DMatrix::zeros(2, 3)).is_err());
    }
}
