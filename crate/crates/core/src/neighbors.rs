//! Exact k-nearest-neighbor search under the Euclidean metric.
//!
//! [`KdTree`] answers exact queries; results are ordered by distance and then by
//! object index, which makes every neighbor list deterministic even among
//! duplicate points.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

const LEAF_SIZE: usize = 16;

/// Squared Euclidean distance, summed in dimension order.
#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let t = x - y;
        acc += t * t;
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    d2: f64,
    index: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2
            .total_cmp(&other.d2)
            .then(self.index.cmp(&other.index))
    }
}

#[derive(Debug)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        dim: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// A static kd-tree over the rows of a [`Dataset`].
#[derive(Debug)]
pub struct KdTree<'a> {
    data: &'a Dataset,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

/// Builds the spatial index for `data`.
pub fn build_index(data: &Dataset) -> KdTree<'_> {
    KdTree::new(data)
}

impl<'a> KdTree<'a> {
    pub fn new(data: &'a Dataset) -> Self {
        let mut tree = KdTree {
            data,
            order: (0..data.n()).collect(),
            nodes: Vec::new(),
        };
        tree.build(0, data.n());
        tree
    }

    pub fn data(&self) -> &'a Dataset {
        self.data
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { start, end });
        if end - start <= LEAF_SIZE {
            return id;
        }

        let d = self.data.d();
        let (mut best_dim, mut best_spread) = (0, 0.0);
        for dim in 0..d {
            let (lo, hi) = self.order[start..end]
                .iter()
                .map(|&i| self.data.row(i)[dim])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v), hi.max(v))
                });
            if hi - lo > best_spread {
                best_spread = hi - lo;
                best_dim = dim;
            }
        }
        if best_spread == 0.0 {
            return id;
        }

        let mid = start + (end - start) / 2;
        let data = self.data;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            data.row(a)[best_dim].total_cmp(&data.row(b)[best_dim])
        });
        let value = data.row(self.order[mid])[best_dim];
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split {
            dim: best_dim,
            value,
            left,
            right,
        };
        id
    }

    /// The `k` nearest objects to `query`, nearest first, ties by lower index.
    /// `exclude` removes one object (normally the query's own row) from the result.
    pub fn nearest(&self, query: &[f64], k: usize, exclude: Option<usize>) -> Vec<Neighbor> {
        if k == 0 {
            return Vec::new();
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.search(0, query, k, exclude, &mut heap);
        heap.into_sorted_vec()
            .into_iter()
            .map(|c| Neighbor {
                index: c.index,
                distance: c.d2.sqrt(),
            })
            .collect()
    }

    fn search(
        &self,
        node: usize,
        query: &[f64],
        k: usize,
        exclude: Option<usize>,
        heap: &mut BinaryHeap<Candidate>,
    ) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    if Some(i) == exclude {
                        continue;
                    }
                    let cand = Candidate {
                        d2: squared_distance(query, self.data.row(i)),
                        index: i,
                    };
                    if heap.len() < k {
                        heap.push(cand);
                    } else if cand < *heap.peek().expect("heap is full") {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = query[dim] - value;
                let (near, far) = if diff < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search(near, query, k, exclude, heap);
                // Ties with a lower index may sit exactly on the plane, so only a
                // strictly larger plane distance prunes.
                let full = heap.len() == k;
                if !full || diff * diff <= heap.peek().expect("heap is full").d2 {
                    self.search(far, query, k, exclude, heap);
                }
            }
        }
    }
}

/// Row `i` holds distances from object `i` to its `k` nearest other objects.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnDistances {
    dist: Vec<f64>,
    n: usize,
    k: usize,
}

impl KnnDistances {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let k = rows.first().map(Vec::len).unwrap_or(0);
        if n == 0 || k == 0 {
            return Err(Error::Structure("empty neighbor-distance matrix".into()));
        }
        let mut dist = Vec::with_capacity(n * k);
        for row in rows {
            if row.len() != k {
                return Err(Error::Structure("ragged neighbor-distance rows".into()));
            }
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::Validation(
                    "distances must be finite and nonnegative".into(),
                ));
            }
            if row.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::Validation("distance rows must be sorted".into()));
            }
            dist.extend(row);
        }
        Ok(KnnDistances { dist, n, k })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.dist[i * self.k..(i + 1) * self.k]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.dist.chunks_exact(self.k)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.dist
    }
}

pub(crate) fn check_neighbor_count(k: usize, n: usize, what: &str) -> Result<()> {
    if k == 0 {
        return Err(Error::Parameter(format!("{what} must be at least 1")));
    }
    if k >= n {
        return Err(Error::Parameter(format!(
            "{what} must be at most N-1 = {} (got {k})",
            n.saturating_sub(1)
        )));
    }
    Ok(())
}

/// Distances from every object to its `k` nearest other objects.
pub fn knn_distances(index: &KdTree<'_>, k: usize) -> Result<KnnDistances> {
    let data = index.data();
    check_neighbor_count(k, data.n(), "k")?;
    let dist: Vec<f64> = (0..data.n())
        .into_par_iter()
        .flat_map_iter(|i| {
            index
                .nearest(data.row(i), k, Some(i))
                .into_iter()
                .map(|nb| nb.distance)
        })
        .collect();
    Ok(KnnDistances {
        dist,
        n: data.n(),
        k,
    })
}
