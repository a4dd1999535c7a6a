//! The ODAR feature transform.
//!
//! Every object is mapped to two features: its local density `rho` (a negated,
//! mean-normalized sum of exponentiated k-NN distances) and its high-order density
//! `hrho` (a truncated Gaussian kernel sum over nearby `rho` values). In the
//! resulting 2-D space outliers gather into one cluster. An optional shrinking pass
//! moves every point to the centroid of its `beta` nearest neighbors in that space.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::neighbors::{self, KdTree, KnnDistances};

/// How k-NN distances are min-max normalized before exponentiation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// One min/max over the whole `N x k` distance matrix.
    #[default]
    Global,
    /// Separate min/max for each neighbor rank `j`.
    PerRank,
}

/// Neighborhood scanned when summing the high-order density kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Window {
    /// All `j` with `|rho_i - rho_j| <= sigma`, self included.
    #[default]
    TwoSided,
    /// Upward-only scan in sorted order with a strict `< rho_i + sigma` bound,
    /// stopping before the last sorted element.
    OneSided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    pub rho: Vec<f64>,
    pub hrho: Vec<f64>,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdarSpace {
    coords: Vec<[f64; 2]>,
    shrunk: bool,
}

impl OdarSpace {
    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn is_shrunk(&self) -> bool {
        self.shrunk
    }

    pub fn rho(&self) -> Vec<f64> {
        self.coords.iter().map(|c| c[0]).collect()
    }

    pub fn hrho(&self) -> Vec<f64> {
        self.coords.iter().map(|c| c[1]).collect()
    }

    pub fn to_dataset(&self) -> Result<Dataset> {
        Dataset::new(self.coords.iter().flatten().copied().collect(), 2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformConfig {
    pub k: usize,
    pub shrink: bool,
    pub normalization: Normalization,
    pub window: Window,
    /// Shrink neighborhood; `None` selects [`default_beta`].
    pub beta: Option<usize>,
}

impl TransformConfig {
    pub fn new(k: usize) -> Self {
        TransformConfig {
            k,
            shrink: true,
            normalization: Normalization::Global,
            window: Window::TwoSided,
            beta: None,
        }
    }
}

/// `max(1, floor(N / 10))`.
pub fn default_beta(n: usize) -> usize {
    (n / 10).max(1)
}

/// Local density of every object from its k-NN distances.
///
/// Distances are min-max normalized (to 0 when max equals min), exponentiated and
/// summed per row; sums are negated and divided by their mean, so the result has
/// mean -1 and sparser objects get more negative values.
pub fn local_density(knn: &KnnDistances, normalization: Normalization) -> Result<Vec<f64>> {
    let n = knn.n();
    if n < 2 {
        return Err(Error::Parameter(
            "local density needs at least 2 objects".into(),
        ));
    }
    let k = knn.k();
    let (lo, hi): (Vec<f64>, Vec<f64>) = match normalization {
        Normalization::Global => {
            let (lo, hi) = min_max(knn.as_slice().iter().copied());
            (vec![lo; k], vec![hi; k])
        }
        Normalization::PerRank => (0..k).map(|j| min_max(knn.rows().map(|r| r[j]))).unzip(),
    };

    let sums: Vec<f64> = knn
        .rows()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(j, &x)| {
                    let span = hi[j] - lo[j];
                    let g = if span > 0.0 { (x - lo[j]) / span } else { 0.0 };
                    g.exp()
                })
                .sum()
        })
        .collect();
    let mean = sums.iter().sum::<f64>() / n as f64;
    Ok(sums.into_iter().map(|s| -s / mean).collect())
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

/// `10 * (max(rho) - min(rho)) / N`.
pub fn bandwidth(rho: &[f64]) -> f64 {
    let (lo, hi) = min_max(rho.iter().copied());
    10.0 * (hi - lo) / rho.len() as f64
}

fn sorted_order(rho: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..rho.len()).collect();
    order.sort_by(|&a, &b| rho[a].total_cmp(&rho[b]).then(a.cmp(&b)));
    order
}

#[inline]
fn kernel(diff: f64, sigma: f64) -> f64 {
    if sigma > 0.0 {
        (-(diff * diff) / (sigma * sigma)).exp()
    } else {
        1.0
    }
}

/// High-order density of each `rho` value and the bandwidth `sigma` used.
///
/// Runs in `O(N log N + sN)` where `s` is the mean window occupancy. With
/// `sigma == 0` each value's density is the multiplicity of its exact value.
pub fn high_order_density(rho: &[f64], window: Window) -> Result<(Vec<f64>, f64)> {
    let n = rho.len();
    if n == 0 {
        return Err(Error::Parameter(
            "high-order density needs at least 1 value".into(),
        ));
    }
    if rho.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("local densities must be finite".into()));
    }
    let sigma = bandwidth(rho);
    let order = sorted_order(rho);
    let sorted: Vec<f64> = order.iter().map(|&i| rho[i]).collect();

    let per_sorted: Vec<f64> = match window {
        Window::TwoSided => (0..n)
            .into_par_iter()
            .map(|pos| {
                let center = sorted[pos];
                let mut h = 1.0;
                for &v in sorted[..pos].iter().rev() {
                    let diff = (center - v).abs();
                    if diff > sigma {
                        break;
                    }
                    h += kernel(diff, sigma);
                }
                for &v in &sorted[pos + 1..] {
                    let diff = (center - v).abs();
                    if diff > sigma {
                        break;
                    }
                    h += kernel(diff, sigma);
                }
                h
            })
            .collect(),
        Window::OneSided => (0..n)
            .map(|pos| {
                let center = sorted[pos];
                let mut h = 0.0;
                let mut j = pos;
                while sorted[j] < center + sigma && j < n - 1 {
                    h += kernel(sorted[j] - center, sigma);
                    j += 1;
                }
                h
            })
            .collect(),
    };

    let mut hrho = vec![0.0; n];
    for (pos, &i) in order.iter().enumerate() {
        hrho[i] = per_sorted[pos];
    }
    Ok((hrho, sigma))
}

/// Mean number of `rho` values inside each two-sided `sigma` window, self
/// included. This is the `s` term of the transform's `(k + s + beta) N` cost.
pub fn mean_window_size(rho: &[f64], sigma: f64) -> f64 {
    let n = rho.len();
    if n == 0 {
        return 0.0;
    }
    let mut sorted = rho.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut total = 0usize;
    let (mut lo, mut hi) = (0, 0);
    for i in 0..n {
        while sorted[i] - sorted[lo] > sigma {
            lo += 1;
        }
        if hi < i {
            hi = i;
        }
        while hi + 1 < n && sorted[hi + 1] - sorted[i] <= sigma {
            hi += 1;
        }
        total += hi - lo + 1;
    }
    total as f64 / n as f64
}

/// Column-stacks `rho` and `hrho` into an unshrunk ODAR space.
pub fn assemble(rho: &[f64], hrho: &[f64]) -> Result<OdarSpace> {
    if rho.len() != hrho.len() {
        return Err(Error::Structure(format!(
            "rho has {} values but hrho has {}",
            rho.len(),
            hrho.len()
        )));
    }
    Ok(OdarSpace {
        coords: rho.iter().zip(hrho).map(|(&r, &h)| [r, h]).collect(),
        shrunk: false,
    })
}

/// Moves every point to the centroid of its `beta` nearest neighbors in ODAR
/// space, all computed from the positions before the pass.
pub fn shrink(space: &OdarSpace, beta: usize) -> Result<OdarSpace> {
    let n = space.len();
    neighbors::check_neighbor_count(beta, n, "beta")?;
    let data = space.to_dataset()?;
    let index = KdTree::new(&data);
    let coords = (0..n)
        .into_par_iter()
        .map(|i| {
            let origin = space.coords[i];
            let mut offset = [0.0f64; 2];
            for nb in index.nearest(&origin, beta, Some(i)) {
                let p = space.coords[nb.index];
                offset[0] += p[0] - origin[0];
                offset[1] += p[1] - origin[1];
            }
            let b = beta as f64;
            [origin[0] + offset[0] / b, origin[1] + offset[1] / b]
        })
        .collect();
    Ok(OdarSpace {
        coords,
        shrunk: true,
    })
}

/// Full transform: k-NN distances, local density, high-order density, and the
/// optional shrinking pass.
pub fn construct_odar_space(
    data: &Dataset,
    config: &TransformConfig,
) -> Result<(OdarSpace, DensityProfile)> {
    let index = KdTree::new(data);
    let knn = neighbors::knn_distances(&index, config.k).map_err(|e| e.in_stage("k-NN"))?;
    let rho = local_density(&knn, config.normalization)?;
    let (hrho, sigma) = high_order_density(&rho, config.window)?;
    let mut space = assemble(&rho, &hrho)?;
    if config.shrink && data.n() >= 2 {
        let beta = config.beta.unwrap_or_else(|| default_beta(data.n()));
        space = shrink(&space, beta).map_err(|e| e.in_stage("shrink"))?;
    }
    Ok((space, DensityProfile { rho, hrho, sigma }))
}

/// Writes `index,rho,hrho` rows.
pub fn write_profile_csv<W: Write>(mut out: W, profile: &DensityProfile) -> io::Result<()> {
    writeln!(out, "index,rho,hrho")?;
    for (i, (r, h)) in profile.rho.iter().zip(&profile.hrho).enumerate() {
        writeln!(out, "{i},{r},{h}")?;
    }
    Ok(())
}
