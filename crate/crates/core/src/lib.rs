//! Outlier detection for clustering algorithms.
//!
//! The pipeline maps every object to a 2-D feature space built from its local
//! density and the density of those density values ("high-order density"). In
//! that space outliers collect into one cluster, so any clustering backend can
//! find them.
//!
//! ```
//! use odar::dataset::{generate, Scenario, SyntheticSpec};
//! use odar::detector::{detect, DetectConfig};
//! use odar::evaluation::balanced_accuracy;
//!
//! let spec = SyntheticSpec::new(Scenario::GaussBlobsWithUniformNoise, vec![200, 200], 20, 1);
//! let data = generate(&spec).unwrap();
//! let det = detect(&data.data, &DetectConfig::new(6)).unwrap();
//! let (acc, _) = balanced_accuracy(&det.result.outliers, &data.labels).unwrap();
//! assert!(acc > 0.8);
//! ```

pub mod clustering;
pub mod dataset;
pub mod detector;
pub mod error;
pub mod evaluation;
pub mod neighbors;
pub mod transform;

pub use error::{Error, Result};
