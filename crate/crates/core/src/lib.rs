//! Supervised classification of multispectral rasters.
//!
//! The workflow has three steps: delineate training regions over a scene,
//! extract per-class spectral signatures from them, then label every pixel
//! with a decision rule. Six rules are provided:
//!
//! | method        | rule                                                      |
//! |---------------|-----------------------------------------------------------|
//! | `box`         | parallelepiped: per-band min/max box of the training data |
//! | `mindist`     | nearest class mean (Euclidean)                            |
//! | `maxlike`     | Gaussian maximum likelihood, equal priors                 |
//! | `sam`         | smallest spectral angle to the class mean                 |
//! | `mlp`         | feed-forward network trained by backpropagation           |
//! | `mahalanobis` | nearest class mean under the pooled covariance            |
//!
//! Maps are scored with an error matrix (an extra row collects unclassified
//! pixels), overall accuracy and the kappa coefficient.
//!
//! ```
//! use specmap::assessment::{kappa, overall_accuracy, ConfusionMatrix};
//!
//! let cm = ConfusionMatrix::from_counts(vec![
//!     vec![136, 5, 2],
//!     vec![65367, 1, 0],
//!     vec![0, 1514, 0],
//!     vec![0, 0, 1022],
//! ])
//! .unwrap();
//! assert!((overall_accuracy(&cm).unwrap() - 0.997884).abs() < 1e-6);
//! assert!((kappa(&cm).unwrap() - 0.9716).abs() < 1e-4);
//! ```
//!
//! Runnable walkthroughs live in `examples/`; the `specmap` binary wraps the
//! same pipeline for use from the shell.

pub mod assessment;
pub mod classifiers;
pub mod cli;
pub mod compare;
mod error;
pub mod raster_io;
pub mod signatures;
pub mod synthesis;

pub use error::{Error, Result};
