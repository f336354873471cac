//! Open-set locality preserving projections (OSLPP) for open-set
//! domain adaptation on precomputed feature vectors.
//!
//! A labelled source domain and an unlabelled target domain are mapped
//! into a common low-dimensional subspace learned from a label-driven
//! similarity graph. Target samples are progressively pseudo-labelled
//! by nearest class mean, the most confident ones are selected as
//! supervision, and outliers are rejected into one unified unknown
//! class — seeded by low confidence, then grown by nearest-neighbour
//! propagation. Subspace learning and selection/rejection alternate for
//! a fixed number of iterations, after which every target sample is
//! either assigned a known class or the unknown id.
//!
//! ```
//! use oslpp::pipeline::{run, Hyperparams};
//! use oslpp::synth::SynthConfig;
//!
//! let cfg = SynthConfig {
//!     n_known: 3, n_unknown: 1, dim: 8, per_class: 30,
//!     shift: 0.8, spread: 0.2, unknown_margin: 2.5, seed: 7,
//! };
//! let (source, target) = oslpp::synth::generate(&cfg).unwrap();
//! let hp = Hyperparams { d_pca: 6, d: 3, iterations: 5, n_r: 12, seed: 7 };
//! let result = run(&source, &target, &hp).unwrap();
//! assert_eq!(result.predictions.len(), target.len());
//! ```
//!
//! The per-sample kernels run on rayon when the `parallel` feature
//! (default) is enabled; disabling it falls back to sequential loops
//! with bit-identical results.

pub mod data;
mod error;
pub mod graph;
pub mod metrics;
pub mod numerics;
mod par;
pub mod pipeline;
pub mod pseudo;
pub mod synth;

pub use error::{Error, Result};
