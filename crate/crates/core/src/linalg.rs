//! Dense and iterative symmetric eigensolvers.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use crate::rng::SccRng;

/// Operators up to this size are solved densely.
const DENSE_LIMIT: usize = 64;
/// Extra Krylov block columns beyond the requested eigenpairs.
const OVERSAMPLE: usize = 4;
const MIN_BASIS: usize = 48;
const MAX_RESTARTS: usize = 60;
const RESIDUAL_TOL: f64 = 1e-10;

/// Eigen-decomposition of a symmetric matrix, eigenvalues in descending
/// order. Ties keep the solver's original column order.
pub fn sym_eigen_desc(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = m.clone().symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// A symmetric linear operator that can be applied to a block of vectors.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;
    /// `self * block` for an `dim × b` block.
    fn apply(&self, block: &DMatrix<f64>) -> DMatrix<f64>;
}

impl SymmetricOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, block: &DMatrix<f64>) -> DMatrix<f64> {
        self * block
    }
}

/// Leading eigenpairs of a symmetric operator.
#[derive(Debug, Clone)]
pub struct TopEigen {
    /// Descending.
    pub values: Vec<f64>,
    /// One column per eigenvalue.
    pub vectors: DMatrix<f64>,
}

fn dense_top<O: SymmetricOperator>(op: &O, k: usize) -> TopEigen {
    let n = op.dim();
    let full = op.apply(&DMatrix::identity(n, n));
    let sym = (&full + full.transpose()) * 0.5;
    let (values, vectors) = sym_eigen_desc(&sym);
    TopEigen {
        values: values[..k].to_vec(),
        vectors: vectors.columns(0, k).into_owned(),
    }
}

fn gaussian_block(n: usize, b: usize, rng: &mut SccRng) -> DMatrix<f64> {
    DMatrix::from_fn(n, b, |_, _| StandardNormal.sample(rng))
}

/// Orthonormalizes the columns of `block` against `basis[:, ..*m]` and
/// appends the survivors. Returns how many columns were appended.
fn append_orthonormal(basis: &mut DMatrix<f64>, m: &mut usize, block: &DMatrix<f64>) -> usize {
    let start = *m;
    for j in 0..block.ncols() {
        if *m == basis.ncols() {
            break;
        }
        let mut v: DVector<f64> = block.column(j).into_owned();
        let orig = v.norm();
        if orig == 0.0 || !orig.is_finite() {
            continue;
        }
        // two passes of classical Gram-Schmidt
        for _ in 0..2 {
            let q = basis.columns(0, *m);
            let coeff = q.tr_mul(&v);
            v -= q * coeff;
        }
        let norm = v.norm();
        if norm <= 1e-10 * orig {
            continue;
        }
        basis.set_column(*m, &(v / norm));
        *m += 1;
    }
    *m - start
}

/// Top `k` eigenpairs of `op` (largest eigenvalues).
///
/// Small operators go through the dense solver. Larger ones use a
/// restarted block Krylov iteration with full reorthogonalization, which
/// resolves eigenvalues of multiplicity up to the block size.
pub fn top_eigenpairs<O: SymmetricOperator>(op: &O, k: usize, rng: &mut SccRng) -> TopEigen {
    let n = op.dim();
    let k = k.min(n);
    if n <= DENSE_LIMIT {
        return dense_top(op, k);
    }
    let b = (k + OVERSAMPLE).min(n);
    let max_basis = n.min(MIN_BASIS.max(6 * b));

    let mut start = gaussian_block(n, b, rng);
    let mut best: Option<TopEigen> = None;
    for _ in 0..MAX_RESTARTS {
        let mut q = DMatrix::<f64>::zeros(n, max_basis);
        let mut mq = DMatrix::<f64>::zeros(n, max_basis);
        let mut t = DMatrix::<f64>::zeros(max_basis, max_basis);
        let mut m = 0;
        let mut block = start.clone();
        loop {
            let mut added = append_orthonormal(&mut q, &mut m, &block);
            if added == 0 && m < max_basis {
                // invariant subspace reached; keep going with fresh directions
                added = append_orthonormal(&mut q, &mut m, &gaussian_block(n, b, rng));
            }
            if added == 0 {
                break;
            }
            let fresh = q.columns(m - added, added).into_owned();
            let y = op.apply(&fresh);
            mq.columns_mut(m - added, added).copy_from(&y);
            let coupling = q.columns(0, m).tr_mul(&y);
            for i in 0..m {
                for j in 0..added {
                    let col = m - added + j;
                    t[(i, col)] = coupling[(i, j)];
                    t[(col, i)] = coupling[(i, j)];
                }
            }
            for j in 0..added {
                let col = m - added + j;
                for i in (m - added)..m {
                    let avg = 0.5 * (t[(i, col)] + t[(col, i)]);
                    t[(i, col)] = avg;
                    t[(col, i)] = avg;
                }
            }

            let kk = k.min(m);
            let (theta, s) = sym_eigen_desc(&t.view((0, 0), (m, m)).into_owned());
            let sk = s.columns(0, kk);
            let u = q.columns(0, m) * sk;
            let mu = mq.columns(0, m) * sk;
            let scale = theta.first().map_or(0.0, |v| v.abs()).max(f64::MIN_POSITIVE);
            let mut converged = kk == k;
            for i in 0..kk {
                let r = (mu.column(i) - u.column(i) * theta[i]).norm();
                if r > RESIDUAL_TOL * scale {
                    converged = false;
                }
            }
            if kk == k {
                best = Some(TopEigen {
                    values: theta[..k].to_vec(),
                    vectors: u.clone(),
                });
            }
            if converged || m == n {
                return best.expect("k eigenpairs available once the basis holds k vectors");
            }
            if m + b > max_basis {
                let keep = b.min(m);
                start = q.columns(0, m) * s.columns(0, keep);
                break;
            }
            block = y;
        }
    }
    match best {
        Some(top) => top,
        None => dense_top(op, k),
    }
}

/// Determinant of a small square matrix by LU with partial pivoting.
pub fn determinant(m: &DMatrix<f64>) -> f64 {
    m.clone().lu().determinant()
}
