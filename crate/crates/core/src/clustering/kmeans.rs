//! Lloyd's k-means with farthest-first initialization.

use crate::clustering::{check_cluster_count, ClusterLabels};
use crate::dataset::Dataset;
use crate::error::Result;
use crate::neighbors::squared_distance;

const MAX_ITERATIONS: usize = 300;

/// Clusters `points` into at most `k_clusters` groups.
///
/// Initial centers come from a farthest-first traversal that starts at the
/// lexicographically smallest point; iteration stops when no assignment changes or
/// after 300 rounds. A cluster that loses all members is reseeded with the point
/// farthest from its own centroid.
pub fn kmeans(points: &Dataset, k_clusters: usize) -> Result<ClusterLabels> {
    let m = points.n();
    check_cluster_count(m, k_clusters)?;
    let d = points.d();

    let mut centroids: Vec<Vec<f64>> = farthest_first(points, k_clusters)
        .into_iter()
        .map(|i| points.row(i).to_vec())
        .collect();

    let mut assign = vec![usize::MAX; m];
    for _ in 0..MAX_ITERATIONS {
        let next: Vec<usize> = points.rows().map(|p| nearest(&centroids, p)).collect();
        if next == assign {
            break;
        }
        assign = next;

        let mut sums = vec![vec![0.0; d]; k_clusters];
        let mut counts = vec![0usize; k_clusters];
        for (p, &c) in points.rows().zip(&assign) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k_clusters {
            if counts[c] > 0 {
                for (dst, s) in centroids[c].iter_mut().zip(&sums[c]) {
                    *dst = s / counts[c] as f64;
                }
            }
        }

        let mut taken = vec![false; m];
        for c in 0..k_clusters {
            if counts[c] > 0 {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for (i, p) in points.rows().enumerate() {
                if taken[i] {
                    continue;
                }
                let dist = squared_distance(p, &centroids[assign[i]]);
                if best.is_none_or(|(_, b)| dist > b) {
                    best = Some((i, dist));
                }
            }
            if let Some((i, _)) = best {
                taken[i] = true;
                centroids[c] = points.row(i).to_vec();
            }
        }
    }

    ClusterLabels::from_raw(&assign)
}

fn nearest(centroids: &[Vec<f64>], p: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, centroid) in centroids.iter().enumerate() {
        let dist = squared_distance(p, centroid);
        if dist < best_d {
            best_d = dist;
            best = c;
        }
    }
    best
}

fn farthest_first(points: &Dataset, k: usize) -> Vec<usize> {
    let start = (0..points.n())
        .min_by(|&a, &b| {
            let (pa, pb) = (points.row(a), points.row(b));
            pa.iter()
                .zip(pb)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        })
        .expect("non-empty dataset");

    let mut chosen = vec![start];
    let mut min_d: Vec<f64> = points
        .rows()
        .map(|p| squared_distance(p, points.row(start)))
        .collect();
    while chosen.len() < k {
        let mut next = 0;
        for i in 1..min_d.len() {
            if min_d[i] > min_d[next] {
                next = i;
            }
        }
        chosen.push(next);
        let c = points.row(next);
        for (i, p) in points.rows().enumerate() {
            min_d[i] = min_d[i].min(squared_distance(p, c));
        }
    }
    chosen
}

/// Sum of squared distances from each point to its cluster mean.
pub fn within_cluster_sum_of_squares(points: &Dataset, labels: &ClusterLabels) -> f64 {
    let d = points.d();
    let k = labels.n_clusters();
    let mut sums = vec![vec![0.0; d]; k];
    let mut counts = vec![0usize; k];
    for (p, &c) in points.rows().zip(labels.labels()) {
        counts[c] += 1;
        for (s, v) in sums[c].iter_mut().zip(p) {
            *s += v;
        }
    }
    let means: Vec<Vec<f64>> = sums
        .into_iter()
        .zip(&counts)
        .map(|(s, &n)| s.into_iter().map(|v| v / n as f64).collect())
        .collect();
    points
        .rows()
        .zip(labels.labels())
        .map(|(p, &c)| squared_distance(p, &means[c]))
        .sum()
}
