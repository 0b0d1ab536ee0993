//! Synthetic data with ground truth: random affine subspace mixtures and
//! rigid-body motion sequences seen through an affine camera.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector, Matrix2x3, Rotation3, Unit, UnitQuaternion, Vector2, Vector3, Vector4};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::evaluation::Category;
use crate::geometry::{cluster_ols_error, DataMatrix, Partition};
use crate::rng::{stream_rng, SccRng};
use crate::{Result, SccError};

const MIXTURE_STREAM: u64 = 1;
const MOTION_STREAM: u64 = 2;
/// Relative residual a noiseless body may leave on its 3-flat.
const CONTAINMENT_TOL: f64 = 1e-9;

/// Generator parameters. Fields that a generator does not use are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    /// Number of subspaces or rigid bodies.
    pub k: usize,
    /// Subspace dimension (mixtures); minimum tuple size check for motions.
    pub d: usize,
    /// Ambient dimension of mixtures.
    pub ambient_dim: usize,
    pub points_per_cluster: usize,
    /// When set, overrides `points_per_cluster`: the total is split as evenly
    /// as possible, earlier clusters taking the remainder.
    pub total_points: Option<usize>,
    /// Standard deviation of the isotropic Gaussian noise, in data units
    /// (unit diameter when `normalize` is set).
    pub noise_sigma: f64,
    pub seed: u64,
    /// Rescale the clean data to unit diameter before adding noise.
    pub normalize: bool,
    /// Frames of a motion sequence.
    pub frames: usize,
    /// Translation step per frame of each rigid body.
    pub rigid_motion_magnitude: f64,
    /// Bound on the per-frame rotation angle of each rigid body (radians).
    pub rotation_step: f64,
}

impl SynthSpec {
    /// A subspace mixture spec.
    pub fn mixture(k: usize, d: usize, ambient_dim: usize, points_per_cluster: usize, noise_sigma: f64, seed: u64) -> Self {
        Self {
            k,
            d,
            ambient_dim,
            points_per_cluster,
            total_points: None,
            noise_sigma,
            seed,
            normalize: false,
            frames: 2,
            rigid_motion_magnitude: 0.2,
            rotation_step: 0.15,
        }
    }

    /// A rigid-motion sequence spec with `frames` frames.
    pub fn motion(k: usize, frames: usize, points_per_cluster: usize, noise_sigma: f64, seed: u64) -> Self {
        Self {
            frames,
            d: 3,
            ambient_dim: 2 * frames,
            ..Self::mixture(k, 3, 2 * frames, points_per_cluster, noise_sigma, seed)
        }
    }

    /// Points per cluster after applying `total_points`.
    pub fn cluster_sizes(&self) -> Vec<usize> {
        match self.total_points {
            Some(total) => (0..self.k)
                .map(|i| total / self.k + usize::from(i < total % self.k))
                .collect(),
            None => alloc::vec![self.points_per_cluster; self.k],
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SccError::InvalidSpec(msg));
        if self.k == 0 {
            return bad("K must be >= 1".into());
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!("noise must be finite and >= 0, got {}", self.noise_sigma));
        }
        if let Some(&small) = self.cluster_sizes().iter().find(|&&s| s < self.d + 2) {
            return bad(format!("each cluster needs at least d + 2 = {} points, got {small}", self.d + 2));
        }
        Ok(())
    }
}

/// A trajectory set: column `j` stacks the image coordinates of point `j`
/// over all frames, `x` then `y` per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceRecord {
    pub id: String,
    pub frames: usize,
    pub trajectories: DataMatrix,
    pub truth: Option<Partition>,
    pub category: Category,
    /// Number of motions declared by the source, 0 when unknown.
    pub declared_k: usize,
}

impl SequenceRecord {
    pub fn new(
        id: String,
        frames: usize,
        trajectories: DataMatrix,
        truth: Option<Partition>,
        category: Category,
        declared_k: usize,
    ) -> Result<Self> {
        if trajectories.dim() != 2 * frames {
            return Err(SccError::DimensionMismatch {
                expected: 2 * frames,
                found: trajectories.dim(),
            });
        }
        if let Some(t) = &truth {
            if t.len() != trajectories.len() {
                return Err(SccError::LengthMismatch {
                    left: t.len(),
                    right: trajectories.len(),
                });
            }
        }
        Ok(Self {
            id,
            frames,
            trajectories,
            truth,
            category,
            declared_k,
        })
    }

    pub fn num_points(&self) -> usize {
        self.trajectories.len()
    }

    /// Declared motion count, else the number of ground-truth clusters.
    pub fn motions(&self) -> Option<usize> {
        if self.declared_k > 0 {
            Some(self.declared_k)
        } else {
            self.truth.as_ref().map(Partition::num_clusters)
        }
    }
}

fn gaussian(rng: &mut SccRng) -> f64 {
    StandardNormal.sample(rng)
}

fn diameter(m: &DMatrix<f64>) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..m.ncols() {
        for j in (i + 1)..m.ncols() {
            best = best.max((m.column(i) - m.column(j)).norm_squared());
        }
    }
    libm::sqrt(best)
}

fn finish(mut clean: DMatrix<f64>, spec: &SynthSpec, rng: &mut SccRng) -> Result<DataMatrix> {
    if spec.normalize {
        let diam = diameter(&clean);
        if diam > 0.0 {
            clean /= diam;
        }
    }
    if spec.noise_sigma > 0.0 {
        for v in clean.iter_mut() {
            *v += spec.noise_sigma * gaussian(rng);
        }
    }
    DataMatrix::new(clean)
}

fn cluster_labels(sizes: &[usize]) -> Vec<usize> {
    sizes
        .iter()
        .enumerate()
        .flat_map(|(k, &s)| core::iter::repeat_n(k, s))
        .collect()
}

/// `K` random `d`-flats in `R^D`: orthonormal bases from the QR factor of
/// Gaussian matrices, origins uniform in `[-1, 1]^D`, points uniform in the
/// unit ball of each flat's coordinates, plus isotropic Gaussian noise.
pub fn synth_subspace_mixture(spec: &SynthSpec) -> Result<(DataMatrix, Partition)> {
    spec.validate()?;
    let (d, dim) = (spec.d, spec.ambient_dim);
    if d >= dim {
        return Err(SccError::InvalidSpec(format!("need d < D, got d = {d}, D = {dim}")));
    }
    let sizes = spec.cluster_sizes();
    let n: usize = sizes.iter().sum();
    let mut rng = stream_rng(spec.seed, MIXTURE_STREAM);
    let mut clean = DMatrix::zeros(dim, n);
    let mut col = 0;
    for &size in &sizes {
        let g = DMatrix::from_fn(dim, d, |_, _| gaussian(&mut rng));
        let basis = g.qr().q();
        let origin = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..=1.0));
        for _ in 0..size {
            let dir = DVector::from_fn(d, |_, _| gaussian(&mut rng));
            let radius = libm::pow(rng.random::<f64>(), 1.0 / d as f64);
            let coef = dir.normalize() * radius;
            clean.set_column(col, &(&origin + &basis * coef));
            col += 1;
        }
    }
    let data = finish(clean, spec, &mut rng)?;
    Ok((data, Partition::new(cluster_labels(&sizes), spec.k)?))
}

fn random_rotation(rng: &mut SccRng) -> Rotation3<f64> {
    let q = Vector4::from_fn(|_, _| gaussian(rng));
    UnitQuaternion::from_quaternion(nalgebra::Quaternion::from(q)).to_rotation_matrix()
}

fn random_unit(rng: &mut SccRng) -> Vector3<f64> {
    loop {
        let v = Vector3::from_fn(|_, _| gaussian(rng));
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

/// `K` rigid bodies moving independently in front of a fixed affine camera.
///
/// Each body is a cloud of 3-D points in `[-1, 1]^3`. Per frame it rotates
/// by a random angle of at most `rotation_step` and translates by
/// `rigid_motion_magnitude` in a random direction; the camera projects with
/// a fixed `2 × 3` matrix plus a per-frame offset. Every body's noiseless
/// trajectories lie on a 3-dimensional affine subspace of `R^{2F}`, which is
/// checked before returning. Noise is added to the image coordinates.
pub fn synth_affine_motion(spec: &SynthSpec) -> Result<SequenceRecord> {
    spec.validate()?;
    let frames = spec.frames;
    if frames < 2 {
        return Err(SccError::InvalidSpec(format!("need at least 2 frames, got {frames}")));
    }
    if !(spec.rigid_motion_magnitude >= 0.0 && spec.rotation_step >= 0.0) {
        return Err(SccError::InvalidSpec("motion magnitudes must be >= 0".into()));
    }
    let sizes = spec.cluster_sizes();
    let n: usize = sizes.iter().sum();
    let mut rng = stream_rng(spec.seed, MOTION_STREAM);

    let cam = random_rotation(&mut rng);
    let projection = Matrix2x3::from_fn(|r, c| cam[(r, c)]);
    let offsets: Vec<Vector2<f64>> = (0..frames)
        .map(|_| Vector2::from_fn(|_, _| rng.random_range(-0.1..=0.1)))
        .collect();

    let mut clean = DMatrix::zeros(2 * frames, n);
    let mut col = 0;
    for &size in &sizes {
        let shape: Vec<Vector3<f64>> = (0..size)
            .map(|_| Vector3::from_fn(|_, _| rng.random_range(-1.0..=1.0)))
            .collect();
        let mut rotation = random_rotation(&mut rng);
        let mut translation = Vector3::from_fn(|_, _| rng.random_range(-2.0..=2.0));
        for f in 0..frames {
            if f > 0 {
                let axis = Unit::new_unchecked(random_unit(&mut rng));
                let angle = rng.random_range(-1.0..=1.0) * spec.rotation_step;
                rotation = Rotation3::from_axis_angle(&axis, angle) * rotation;
                translation += random_unit(&mut rng) * spec.rigid_motion_magnitude;
            }
            for (j, y) in shape.iter().enumerate() {
                let z = projection * (rotation * y + translation) + offsets[f];
                clean[(2 * f, col + j)] = z.x;
                clean[(2 * f + 1, col + j)] = z.y;
            }
        }
        col += size;
    }

    let clean_data = DataMatrix::new(clean.clone())?;
    let labels = Partition::new(cluster_labels(&sizes), spec.k)?;
    for members in labels.members() {
        let body = clean_data.select(&members)?;
        let residual = cluster_ols_error(&clean_data, &members, 3)?;
        let scatter = body.total_scatter();
        if residual > CONTAINMENT_TOL * scatter {
            return Err(SccError::Internal(format!(
                "body trajectories leave residual {residual:e} on their 3-flat (scatter {scatter:e})"
            )));
        }
    }

    let trajectories = finish(clean, spec, &mut rng)?;
    SequenceRecord::new(
        format!("motion-k{}-f{}-s{}", spec.k, frames, spec.seed),
        frames,
        trajectories,
        Some(labels),
        Category::Synthetic,
        spec.k,
    )
}
