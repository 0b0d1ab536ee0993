//! Spectral curvature clustering (SCC) for data drawn from a mixture of
//! affine subspaces.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is pure
//! computation: fitting flats, polar curvatures, the sampled affinity
//! matrix, spectral clustering, the iterative SCC driver, scoring and the
//! synthetic generators. File formats, reports and the command line live in
//! the `scc-tools` crate.
//!
//! ```
//! use scc_core::engine::{scc_run, SccConfig};
//! use scc_core::synth::{synth_subspace_mixture, SynthSpec};
//! use scc_core::evaluation::misclassification_rate;
//!
//! let spec = SynthSpec::mixture(2, 1, 3, 30, 0.0, 11);
//! let (data, truth) = synth_subspace_mixture(&spec).unwrap();
//! let result = scc_run(&data, &SccConfig::new(1, 2).with_seed(3)).unwrap();
//! assert_eq!(misclassification_rate(&result.partition, &truth).unwrap(), 0.0);
//! ```
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod curvature;
pub mod engine;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod linalg;
pub mod reference;
pub mod rng;
pub mod spectral;
pub mod synth;

pub use error::SccError;
pub use nalgebra;

/// Result alias used throughout the crate.
pub type Result<T> = core::result::Result<T, SccError>;
