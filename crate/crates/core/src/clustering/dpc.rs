//! Density peaks clustering with automatic center selection.
//!
//! Density uses a Gaussian kernel whose cutoff is the 2nd-percentile pairwise
//! distance. Centers are the points with the largest `density * delta`, where
//! `delta` is the distance to the nearest point of higher density. Everything runs
//! in `O(M^2)` time and `O(M)` memory; pairwise distances are never stored.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::clustering::{check_cluster_count, ClusterLabels};
use crate::dataset::Dataset;
use crate::error::Result;
use crate::neighbors::squared_distance;

const CUTOFF_PERCENTILE: f64 = 0.02;
const BUCKETS: usize = 1 << 16;

#[inline]
fn dist(points: &Dataset, i: usize, j: usize) -> f64 {
    squared_distance(points.row(i), points.row(j)).sqrt()
}

/// Cutoff distance: the pairwise distance of nearest rank `ceil(0.02 P)` among the
/// `P = M(M-1)/2` pairs. Falls back to the smallest positive distance when that
/// rank lands on a zero; returns 0 only when all points coincide.
pub fn dpc_cutoff(points: &Dataset) -> f64 {
    let m = points.n();
    if m < 2 {
        return 0.0;
    }
    let pairs = m * (m - 1) / 2;
    let rank = ((CUTOFF_PERCENTILE * pairs as f64).ceil() as usize).clamp(1, pairs);
    let dc = select_pairwise(points, rank);
    if dc > 0.0 {
        return dc;
    }
    let smallest = (0..m)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..m)
                .map(|j| dist(points, i, j))
                .filter(|&d| d > 0.0)
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min);
    if smallest.is_finite() {
        smallest
    } else {
        0.0
    }
}

/// The `rank`-th smallest (1-based) pairwise distance, found by bucketing the
/// distance range and then selecting inside the single bucket holding the rank.
fn select_pairwise(points: &Dataset, rank: usize) -> f64 {
    let m = points.n();
    let max = (0..m)
        .into_par_iter()
        .map(|i| ((i + 1)..m).map(|j| dist(points, i, j)).fold(0.0, f64::max))
        .reduce(|| 0.0, f64::max);
    if max == 0.0 {
        return 0.0;
    }
    let bucket_of = |d: f64| (((d / max) * (BUCKETS - 1) as f64) as usize).min(BUCKETS - 1);

    let counts = (0..m)
        .into_par_iter()
        .fold(
            || vec![0usize; BUCKETS],
            |mut acc, i| {
                for j in (i + 1)..m {
                    acc[bucket_of(dist(points, i, j))] += 1;
                }
                acc
            },
        )
        .reduce(
            || vec![0usize; BUCKETS],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );

    let mut seen = 0;
    let mut target = 0;
    for (b, &c) in counts.iter().enumerate() {
        if seen + c >= rank {
            target = b;
            break;
        }
        seen += c;
    }
    let mut inside: Vec<f64> = (0..m)
        .into_par_iter()
        .flat_map_iter(|i| {
            ((i + 1)..m)
                .map(move |j| dist(points, i, j))
                .filter(move |&d| bucket_of(d) == target)
        })
        .collect();
    let nth = rank - seen - 1;
    let (_, v, _) = inside.select_nth_unstable_by(nth, f64::total_cmp);
    *v
}

/// Density peaks clustering into `k_clusters` groups.
pub fn dpc(points: &Dataset, k_clusters: usize) -> Result<ClusterLabels> {
    let m = points.n();
    check_cluster_count(m, k_clusters)?;
    if k_clusters == 1 {
        return ClusterLabels::from_raw(&vec![0; m]);
    }

    let dc = dpc_cutoff(points);
    if dc == 0.0 {
        // all points coincide
        return ClusterLabels::from_raw(&vec![0; m]);
    }

    let density: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|i| {
            (0..m)
                .filter(|&j| j != i)
                .map(|j| {
                    let r = dist(points, i, j) / dc;
                    (-(r * r)).exp()
                })
                .sum()
        })
        .collect();

    // Strict total order: higher density first, then lower index.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| density[b].total_cmp(&density[a]).then(a.cmp(&b)));
    let mut rank = vec![0usize; m];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }

    let (delta, parent): (Vec<f64>, Vec<usize>) = (0..m)
        .into_par_iter()
        .map(|i| {
            if rank[i] == 0 {
                let far = (0..m).map(|j| dist(points, i, j)).fold(0.0, f64::max);
                return (far, i);
            }
            let mut best = (f64::INFINITY, usize::MAX);
            for &j in &order[..rank[i]] {
                let d = dist(points, i, j);
                if d < best.0 || (d == best.0 && j < best.1) {
                    best = (d, j);
                }
            }
            best
        })
        .unzip();

    let mut by_gamma: Vec<usize> = (0..m).collect();
    by_gamma.sort_by(|&a, &b| {
        let (ga, gb) = (density[a] * delta[a], density[b] * delta[b]);
        gb.partial_cmp(&ga)
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut centers: Vec<usize> = by_gamma[..k_clusters].to_vec();
    let peak = order[0];
    if !centers.contains(&peak) {
        centers[k_clusters - 1] = peak;
    }

    let mut label = vec![usize::MAX; m];
    for (c, &i) in centers.iter().enumerate() {
        label[i] = c;
    }
    for &i in &order {
        if label[i] == usize::MAX {
            label[i] = label[parent[i]];
        }
    }
    ClusterLabels::from_raw(&label)
}
