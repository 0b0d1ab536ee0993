//! Affine subspace fitting by orthogonal least squares, point-to-flat
//! distances and PCA projection.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector, DVectorView};

use crate::linalg::sym_eigen_desc;
use crate::{Result, SccError};

/// `D × N` matrix holding one point per column.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
}

impl DataMatrix {
    /// Wraps a `D × N` matrix. Rejects empty matrices and non-finite entries.
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(SccError::EmptyInput);
        }
        for col in 0..values.ncols() {
            for row in 0..values.nrows() {
                if !values[(row, col)].is_finite() {
                    return Err(SccError::NonFinite { row, col });
                }
            }
        }
        Ok(Self { values })
    }

    /// Builds a matrix from point coordinates, one slice per point.
    pub fn from_points(points: &[&[f64]]) -> Result<Self> {
        let first = points.first().ok_or(SccError::EmptyInput)?;
        let dim = first.len();
        for p in points {
            if p.len() != dim {
                return Err(SccError::DimensionMismatch { expected: dim, found: p.len() });
            }
        }
        Self::new(DMatrix::from_fn(dim, points.len(), |r, c| points[c][r]))
    }

    /// Ambient dimension `D`.
    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    /// Number of points `N`.
    pub fn len(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.values.ncols() == 0
    }

    pub fn point(&self, i: usize) -> DVectorView<'_, f64> {
        self.values.column(i)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.values
    }

    /// Copies the selected columns into a new matrix.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(SccError::EmptyInput);
        }
        Ok(Self {
            values: self.values.select_columns(indices),
        })
    }

    pub fn mean(&self) -> DVector<f64> {
        self.values.column_mean()
    }

    /// Sum of squared distances of the points to their mean.
    pub fn total_scatter(&self) -> f64 {
        let mean = self.mean();
        self.values
            .column_iter()
            .map(|c| (c - &mean).norm_squared())
            .sum()
    }
}

/// An affine flat `origin + span(basis)` with orthonormal basis columns.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSubspace {
    origin: DVector<f64>,
    basis: DMatrix<f64>,
}

impl AffineSubspace {
    /// Builds a flat from an origin and a basis with orthonormal columns.
    pub fn new(origin: DVector<f64>, basis: DMatrix<f64>) -> Result<Self> {
        if basis.nrows() != origin.len() {
            return Err(SccError::DimensionMismatch {
                expected: origin.len(),
                found: basis.nrows(),
            });
        }
        let gram = basis.tr_mul(&basis);
        let err = (gram - DMatrix::identity(basis.ncols(), basis.ncols())).amax();
        if err > 1e-10 {
            return Err(SccError::InvalidConfig(alloc::format!(
                "basis is not orthonormal (deviation {err:e})"
            )));
        }
        Ok(Self { origin, basis })
    }

    pub fn origin(&self) -> &DVector<f64> {
        &self.origin
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Intrinsic dimension.
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.origin.len()
    }

    /// Component of `x - origin` orthogonal to the flat.
    fn residual(&self, x: DVectorView<'_, f64>) -> DVector<f64> {
        let y = x - &self.origin;
        let coeff = self.basis.tr_mul(&y);
        y - &self.basis * coeff
    }

    pub(crate) fn dist_sq_unchecked(&self, x: DVectorView<'_, f64>) -> f64 {
        self.residual(x).norm_squared()
    }

    /// Coordinates of `x - origin` in the basis.
    pub fn coordinates(&self, x: DVectorView<'_, f64>) -> DVector<f64> {
        self.basis.tr_mul(&(x - &self.origin))
    }
}

/// Cluster assignment for `N` points into `k` groups.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(SccError::InvalidConfig("a partition needs at least one cluster".into()));
        }
        if let Some((index, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= k) {
            return Err(SccError::LabelOutOfRange { index, label, k });
        }
        Ok(Self { labels, k })
    }

    /// Infers `k` as one past the largest label.
    pub fn from_labels(labels: Vec<usize>) -> Result<Self> {
        let k = labels.iter().max().map_or(1, |m| m + 1);
        Self::new(labels, k)
    }

    /// Every point in cluster 0.
    pub fn single(n: usize) -> Self {
        Self { labels: vec![0; n], k: 1 }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn num_clusters(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Point indices per cluster, in increasing order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    /// Whether some cluster has no points.
    pub fn has_empty_cluster(&self) -> bool {
        self.sizes().contains(&0)
    }
}

/// Best-fit `d`-dimensional affine subspace in the orthogonal least squares
/// sense.
///
/// The origin is the column mean and the basis spans the top `d` principal
/// directions. With fewer than `d + 1` points the fit drops to dimension
/// `N - 1`, which interpolates the points exactly.
pub fn fit_affine_ols(points: &DataMatrix, d: usize) -> Result<AffineSubspace> {
    let dim = points.dim();
    if d > dim {
        return Err(SccError::InvalidDimension { requested: d, ambient: dim });
    }
    let n = points.len();
    let origin = points.mean();
    let eff = d.min(n - 1);
    if eff == 0 {
        return Ok(AffineSubspace {
            origin,
            basis: DMatrix::zeros(dim, 0),
        });
    }
    let mut centered = points.matrix().clone();
    for mut col in centered.column_iter_mut() {
        col -= &origin;
    }

    let basis = if dim <= n {
        let scatter = &centered * centered.transpose();
        let (_, vectors) = sym_eigen_desc(&scatter);
        vectors.columns(0, eff).into_owned()
    } else {
        // N x N Gram route; lift eigenvectors back to R^D and re-orthonormalize
        let gram = centered.tr_mul(&centered);
        let (values, vectors) = sym_eigen_desc(&gram);
        let floor = values[0].abs() * 1e-13 * n as f64;
        let mut basis = DMatrix::zeros(dim, eff);
        let mut filled = 0;
        for j in 0..eff {
            if values[j] <= floor {
                break;
            }
            let v = &centered * vectors.column(j);
            filled += push_orthonormal(&mut basis, filled, v);
        }
        let mut axis = 0;
        while filled < eff && axis < dim {
            let mut e = DVector::zeros(dim);
            e[axis] = 1.0;
            filled += push_orthonormal(&mut basis, filled, e);
            axis += 1;
        }
        basis
    };
    Ok(AffineSubspace { origin, basis })
}

fn push_orthonormal(basis: &mut DMatrix<f64>, filled: usize, mut v: DVector<f64>) -> usize {
    let orig = v.norm();
    if orig == 0.0 {
        return 0;
    }
    for _ in 0..2 {
        let q = basis.columns(0, filled);
        let coeff = q.tr_mul(&v);
        v -= q * coeff;
    }
    let norm = v.norm();
    if norm <= 1e-8 * orig {
        return 0;
    }
    basis.set_column(filled, &(v / norm));
    1
}

/// Euclidean distance from `x` to the flat `f`.
pub fn dist_to_subspace(x: DVectorView<'_, f64>, f: &AffineSubspace) -> Result<f64> {
    if x.len() != f.ambient_dim() {
        return Err(SccError::DimensionMismatch {
            expected: f.ambient_dim(),
            found: x.len(),
        });
    }
    Ok(libm::sqrt(f.dist_sq_unchecked(x)))
}

fn check_partition(data: &DataMatrix, partition: &Partition) -> Result<()> {
    if partition.len() != data.len() {
        return Err(SccError::LengthMismatch {
            left: data.len(),
            right: partition.len(),
        });
    }
    Ok(())
}

/// Squared OLS residual of one cluster at dimension `d`.
///
/// Clusters of at most `d + 1` points are interpolated exactly and cost 0.
pub(crate) fn cluster_ols_error(data: &DataMatrix, members: &[usize], d: usize) -> Result<f64> {
    if members.len() <= d + 1 {
        return Ok(0.0);
    }
    let pts = data.select(members)?;
    let flat = fit_affine_ols(&pts, d)?;
    Ok(pts
        .matrix()
        .column_iter()
        .map(|c| flat.dist_sq_unchecked(c.as_view()))
        .sum())
}

/// Total squared orthogonal distance of every point to the `d`-flat fitted
/// to its own cluster.
pub fn total_ols_error(data: &DataMatrix, partition: &Partition, d: usize) -> Result<f64> {
    check_partition(data, partition)?;
    if d > data.dim() {
        return Err(SccError::InvalidDimension { requested: d, ambient: data.dim() });
    }
    partition
        .members()
        .iter()
        .map(|m| cluster_ols_error(data, m, d))
        .sum()
}

/// Fits one flat per cluster; empty clusters give `None`.
pub fn fit_clusters(
    data: &DataMatrix,
    partition: &Partition,
    d: usize,
) -> Result<Vec<Option<AffineSubspace>>> {
    check_partition(data, partition)?;
    partition
        .members()
        .iter()
        .map(|m| {
            if m.is_empty() {
                Ok(None)
            } else {
                fit_affine_ols(&data.select(m)?, d).map(Some)
            }
        })
        .collect()
}

/// Coordinates of the centered data in its top `target_dim` principal
/// directions. `target_dim >= D` returns the data unchanged.
pub fn project_pca(data: &DataMatrix, target_dim: usize) -> Result<DataMatrix> {
    if target_dim < 1 {
        return Err(SccError::InvalidDimension {
            requested: target_dim,
            ambient: data.dim(),
        });
    }
    if target_dim >= data.dim() {
        return Ok(data.clone());
    }
    let flat = fit_affine_ols(data, target_dim)?;
    // pad with the completed basis when the data has lower rank than target_dim
    let basis = if flat.dim() == target_dim {
        flat.basis.clone()
    } else {
        let mut basis = DMatrix::zeros(data.dim(), target_dim);
        let mut filled = 0;
        for j in 0..flat.dim() {
            filled += push_orthonormal(&mut basis, filled, flat.basis.column(j).into_owned());
        }
        let mut axis = 0;
        while filled < target_dim {
            let mut e = DVector::zeros(data.dim());
            e[axis] = 1.0;
            filled += push_orthonormal(&mut basis, filled, e);
            axis += 1;
        }
        basis
    };
    let mut centered = data.matrix().clone();
    for mut col in centered.column_iter_mut() {
        col -= &flat.origin;
    }
    DataMatrix::new(basis.tr_mul(&centered))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;

    fn pts(points: &[&[f64]]) -> DataMatrix {
        DataMatrix::from_points(points).unwrap()
    }

    fn random_data(d: usize, n: usize, seed: u64) -> DataMatrix {
        let mut rng = stream_rng(seed, 0);
        DataMatrix::new(DMatrix::from_fn(d, n, |_, _| rng.random_range(-1.0..1.0))).unwrap()
    }

    #[test]
    fn exact_line_has_zero_residual() {
        let data = pts(&[&[0.0, 0.0], &[1.0, 2.0], &[2.0, 4.0], &[3.0, 6.0]]);
        let flat = fit_affine_ols(&data, 1).unwrap();
        for i in 0..data.len() {
            assert!(dist_to_subspace(data.point(i), &flat).unwrap() < 1e-12);
        }
        assert!(total_ols_error(&data, &Partition::single(4), 1).unwrap() < 1e-24);
    }

    #[test]
    fn single_point_fit() {
        let data = pts(&[&[5.0, 7.0]]);
        let flat = fit_affine_ols(&data, 0).unwrap();
        assert_eq!(flat.origin().as_slice(), &[5.0, 7.0]);
        assert_eq!(flat.dim(), 0);
        assert_eq!(dist_to_subspace(data.point(0), &flat).unwrap(), 0.0);
    }

    #[test]
    fn residual_is_smallest_scatter_eigenvalue() {
        let data = pts(&[&[0.0, 0.0], &[1.0, 1.0], &[2.0, 2.0], &[3.0, 3.1]]);
        // independent closed-form eigenvalues of the 2x2 centered scatter
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [0.0, 1.0, 2.0, 3.1];
        let mx = xs.iter().sum::<f64>() / 4.0;
        let my = ys.iter().sum::<f64>() / 4.0;
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for i in 0..4 {
            sxx += (xs[i] - mx) * (xs[i] - mx);
            sxy += (xs[i] - mx) * (ys[i] - my);
            syy += (ys[i] - my) * (ys[i] - my);
        }
        let tr = sxx + syy;
        let det = sxx * syy - sxy * sxy;
        let lambda_min = tr / 2.0 - ((tr / 2.0).powi(2) - det).sqrt();
        let err = total_ols_error(&data, &Partition::single(4), 1).unwrap();
        assert!((err - lambda_min).abs() < 1e-12 * tr, "{err} vs {lambda_min}");
    }

    #[test]
    fn distance_to_axis() {
        let flat = AffineSubspace::new(DVector::zeros(2), DMatrix::from_column_slice(2, 1, &[1.0, 0.0])).unwrap();
        let x = DVector::from_vec(vec![3.0, 4.0]);
        assert!((dist_to_subspace(x.as_view(), &flat).unwrap() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        let data = pts(&[&[1.0, 2.0]]);
        assert_eq!(
            fit_affine_ols(&data, 3),
            Err(SccError::InvalidDimension { requested: 3, ambient: 2 })
        );
        assert_eq!(DataMatrix::from_points(&[]), Err(SccError::EmptyInput));
        let flat = fit_affine_ols(&data, 1).unwrap();
        let x = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert!(matches!(
            dist_to_subspace(x.as_view(), &flat),
            Err(SccError::DimensionMismatch { .. })
        ));
        assert!(project_pca(&data, 0).is_err());
        assert!(DataMatrix::from_points(&[&[f64::NAN]]).is_err());
        assert!(Partition::new(vec![0, 2], 2).is_err());
    }

    #[test]
    fn full_dimension_fit_is_exact() {
        let data = random_data(3, 20, 4);
        assert!(total_ols_error(&data, &Partition::single(20), 3).unwrap() < 1e-24);
    }

    #[test]
    fn two_lines_two_clusters() {
        let data = pts(&[&[0.0, 0.0], &[1.0, 0.0], &[2.0, 0.0], &[0.0, 5.0], &[1.0, 6.0], &[2.0, 7.0]]);
        let p = Partition::new(vec![0, 0, 0, 1, 1, 1], 2).unwrap();
        assert!(total_ols_error(&data, &p, 1).unwrap() < 1e-24);
    }

    #[test]
    fn small_and_empty_clusters_contribute_nothing() {
        let data = random_data(4, 6, 2);
        // cluster 1 has two points (<= d+1 for d = 2); cluster 2 is empty
        let p = Partition::new(vec![0, 0, 0, 0, 1, 1], 3).unwrap();
        assert!(p.has_empty_cluster());
        let whole = data.select(&[0, 1, 2, 3]).unwrap();
        let expected = total_ols_error(&whole, &Partition::single(4), 2).unwrap();
        assert!((total_ols_error(&data, &p, 2).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn gram_route_matches_scatter_route() {
        // D > N uses the N x N Gram matrix
        let wide = random_data(12, 7, 9);
        let err_wide = total_ols_error(&wide, &Partition::single(7), 3).unwrap();
        let flat = fit_affine_ols(&wide, 3).unwrap();
        let gram = flat.basis().tr_mul(flat.basis());
        assert!((gram - DMatrix::identity(3, 3)).amax() < 1e-10);
        // same points embedded with extra zero rows still take the Gram route; compare to a
        // D <= N fit of the points after rotating them into R^6
        let projected = project_pca(&wide, 6).unwrap();
        let err_proj = total_ols_error(&projected, &Partition::single(7), 3).unwrap();
        assert!((err_wide - err_proj).abs() < 1e-10 * (1.0 + err_wide));
    }

    #[test]
    fn rank_deficient_gram_fit_completes_basis() {
        // 4 collinear points in R^10 fitted at d = 2
        let data = DataMatrix::new(DMatrix::from_fn(10, 4, |r, c| (c as f64) * (r as f64 + 1.0))).unwrap();
        let flat = fit_affine_ols(&data, 2).unwrap();
        assert_eq!(flat.dim(), 2);
        let gram = flat.basis().tr_mul(flat.basis());
        assert!((gram - DMatrix::identity(2, 2)).amax() < 1e-10);
        for i in 0..4 {
            assert!(dist_to_subspace(data.point(i), &flat).unwrap() < 1e-10);
        }
    }

    #[test]
    fn pca_identity_and_isometry() {
        let data = random_data(4, 10, 5);
        assert_eq!(project_pca(&data, 4).unwrap(), data);
        assert_eq!(project_pca(&data, 9).unwrap(), data);

        let dir = [0.3, -0.2, 0.5, 0.1, 0.7];
        let line = DataMatrix::new(DMatrix::from_fn(5, 6, |r, c| 1.0 + dir[r] * (c as f64 * 1.7 - 2.0))).unwrap();
        let proj = project_pca(&line, 1).unwrap();
        assert_eq!(proj.dim(), 1);
        for i in 0..6 {
            for j in 0..6 {
                let a = (line.point(i) - line.point(j)).norm();
                let b = (proj.point(i) - proj.point(j)).norm();
                assert!((a - b).abs() <= 1e-10 * a.max(1e-300));
            }
        }
    }
}
