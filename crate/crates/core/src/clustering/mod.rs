//! Deterministic clustering backends.
//!
//! Each backend maps a point set of any dimension to contiguous labels. Labels are
//! numbered in order of each cluster's smallest member index, so identical inputs
//! always produce identical label vectors.

mod delta;
mod dpc;
mod kmeans;
mod union_find;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

pub use delta::delta_like;
pub use dpc::{dpc, dpc_cutoff};
pub use kmeans::{kmeans, within_cluster_sum_of_squares};
pub use union_find::UnionFind;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterLabels {
    labels: Vec<usize>,
    n_clusters: usize,
}

impl ClusterLabels {
    /// Renumbers arbitrary cluster ids to `0..n_clusters` by first appearance.
    pub fn from_raw(raw: &[usize]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::Structure("no points were clustered".into()));
        }
        let mut map = std::collections::HashMap::new();
        let labels = raw
            .iter()
            .map(|&r| {
                let next = map.len();
                *map.entry(r).or_insert(next)
            })
            .collect();
        Ok(ClusterLabels {
            labels,
            n_clusters: map.len(),
        })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn members(&self, label: usize) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(move |(_, &l)| l == label)
            .map(|(i, _)| i)
    }
}

/// Backend selection and its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BackendSpec {
    Kmeans {
        k_clusters: usize,
    },
    Dpc {
        k_clusters: usize,
    },
    /// Radius-graph connected components.
    DeltaLike {
        radius: f64,
    },
}

impl Default for BackendSpec {
    fn default() -> Self {
        BackendSpec::Kmeans { k_clusters: 2 }
    }
}

impl BackendSpec {
    pub fn name(&self) -> &'static str {
        match self {
            BackendSpec::Kmeans { .. } => "kmeans",
            BackendSpec::Dpc { .. } => "dpc",
            BackendSpec::DeltaLike { .. } => "delta-like",
        }
    }

    /// Smallest point count the backend accepts.
    pub fn min_points(&self) -> usize {
        match *self {
            BackendSpec::Kmeans { k_clusters } | BackendSpec::Dpc { k_clusters } => k_clusters,
            BackendSpec::DeltaLike { .. } => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BackendSpec::Kmeans { k_clusters } | BackendSpec::Dpc { k_clusters } => {
                if k_clusters == 0 {
                    return Err(Error::Parameter("cluster count must be positive".into()));
                }
            }
            BackendSpec::DeltaLike { radius } => {
                if !(radius.is_finite() && radius > 0.0) {
                    return Err(Error::Parameter(format!(
                        "radius must be a positive real (got {radius})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn cluster(&self, points: &Dataset) -> Result<ClusterLabels> {
        match *self {
            BackendSpec::Kmeans { k_clusters } => kmeans(points, k_clusters),
            BackendSpec::Dpc { k_clusters } => dpc(points, k_clusters),
            BackendSpec::DeltaLike { radius } => delta_like(points, radius),
        }
    }
}

impl fmt::Display for BackendSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendSpec::Kmeans { k_clusters } => write!(f, "kmeans(k={k_clusters})"),
            BackendSpec::Dpc { k_clusters } => write!(f, "dpc(k={k_clusters})"),
            BackendSpec::DeltaLike { radius } => write!(f, "delta-like(radius={radius})"),
        }
    }
}

pub(crate) fn check_cluster_count(m: usize, k_clusters: usize) -> Result<()> {
    if k_clusters == 0 {
        return Err(Error::Parameter("cluster count must be positive".into()));
    }
    if m < k_clusters {
        return Err(Error::Parameter(format!(
            "{m} points cannot form {k_clusters} clusters"
        )));
    }
    Ok(())
}
