//! Radius-graph connected components.

use crate::clustering::{ClusterLabels, UnionFind};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::neighbors::squared_distance;

/// Links every pair of points at distance `<= radius` and labels the connected
/// components, numbered by smallest member index.
pub fn delta_like(points: &Dataset, radius: f64) -> Result<ClusterLabels> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::Parameter(format!(
            "radius must be a positive real (got {radius})"
        )));
    }
    let m = points.n();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| points.row(a)[0].total_cmp(&points.row(b)[0]));

    // A sweep along the first axis bounds the candidate pairs; the slack keeps
    // the bound conservative against rounding in the full distance.
    let sweep = radius * (1.0 + 1e-9);
    let mut uf = UnionFind::new(m);
    for (a, &i) in order.iter().enumerate() {
        let pi = points.row(i);
        for &j in &order[a + 1..] {
            let pj = points.row(j);
            if pj[0] - pi[0] > sweep {
                break;
            }
            if squared_distance(pi, pj).sqrt() <= radius {
                uf.union(i, j);
            }
        }
    }
    ClusterLabels::from_raw(&uf.roots())
}
