//! Datasets, CSV ingestion and synthetic scenario generation.
//!
//! A [`Dataset`] is an immutable row-major `N x d` matrix of finite reals. Row `i`
//! refers to the same object through every stage of the pipeline.
//!
//! Synthetic data is drawn from a ChaCha8 stream seeded with the spec's seed, so a
//! given [`SyntheticSpec`] produces the same bytes on every platform. The geometry of
//! each scenario (cluster spread, separation) is a fixed choice of this crate and is
//! documented on [`Scenario`].

use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifier of the PRNG algorithm, written into generated-file headers.
pub const RNG_ALGORITHM: &str = "chacha8";

/// Outliers are rejected when closer than this many cluster standard deviations.
pub const OUTLIER_EXCLUSION_SIGMAS: f64 = 3.0;

const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;
const BLOB_STD: f64 = 3.0;
const UNBALANCED_STD: f64 = 1.5;
const WORM_STD: f64 = 0.8;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Vec<f64>,
    n: usize,
    d: usize,
}

impl Dataset {
    /// Builds a dataset from row-major coordinates.
    pub fn new(points: Vec<f64>, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Structure("dimension must be at least 1".into()));
        }
        if points.is_empty() {
            return Err(Error::Structure("dataset has no objects".into()));
        }
        if !points.len().is_multiple_of(d) {
            return Err(Error::Structure(format!(
                "{} values do not form rows of width {d}",
                points.len()
            )));
        }
        if let Some(pos) = points.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite coordinate at object {}, dimension {}",
                pos / d,
                pos % d
            )));
        }
        let n = points.len() / d;
        Ok(Dataset { points, n, d })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut points = Vec::with_capacity(rows.len() * d);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != d {
                return Err(Error::Structure(format!(
                    "row {i} has {} values, expected {d}",
                    row.len()
                )));
            }
            points.extend_from_slice(row);
        }
        Self::new(points, d)
    }

    /// A one-dimensional dataset.
    pub fn from_column(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec(), 1)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.points.chunks_exact(self.d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.points
    }

    /// Applies `f` to every row, producing a dataset of the same shape.
    pub fn map_rows(&self, mut f: impl FnMut(&[f64], &mut [f64])) -> Result<Self> {
        let mut out = vec![0.0; self.points.len()];
        for (src, dst) in self.rows().zip(out.chunks_exact_mut(self.d)) {
            f(src, dst);
        }
        Self::new(out, self.d)
    }

    /// Reorders rows so that row `i` of the result is row `order[i]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.n {
            return Err(Error::Structure("permutation length mismatch".into()));
        }
        let mut out = Vec::with_capacity(self.points.len());
        for &i in order {
            out.extend_from_slice(self.row(i));
        }
        Self::new(out, self.d)
    }
}

/// A dataset with per-object ground-truth outlier labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub data: Dataset,
    pub labels: Vec<bool>,
    pub outlier_rate: f64,
}

impl LabeledDataset {
    pub fn new(data: Dataset, labels: Vec<bool>) -> Result<Self> {
        if labels.len() != data.n() {
            return Err(Error::Structure(format!(
                "{} labels for {} objects",
                labels.len(),
                data.n()
            )));
        }
        let outliers = labels.iter().filter(|&&l| l).count();
        let outlier_rate = outliers as f64 / data.n() as f64;
        Ok(LabeledDataset {
            data,
            labels,
            outlier_rate,
        })
    }

    pub fn unlabeled(data: Dataset) -> Self {
        let labels = vec![false; data.n()];
        LabeledDataset {
            data,
            labels,
            outlier_rate: 0.0,
        }
    }

    pub fn outlier_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }
}

/// Reads a labeled dataset from a CSV file. See [`read_csv`].
pub fn load_csv(path: impl AsRef<Path>, label_column: Option<&str>) -> Result<LabeledDataset> {
    let file = File::open(path.as_ref())?;
    read_csv(file, label_column)
}

/// Reads comma-separated rows with an optional single header line.
///
/// Lines starting with `#` are comments. A first row containing any field that
/// does not parse as a number is taken as the header. `label_column` names a header
/// field, or gives a 1-based column position; its values must be `0` or `1`.
pub fn read_csv(reader: impl Read, label_column: Option<&str>) -> Result<LabeledDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut header: Option<Vec<String>> = None;
    let mut width: Option<usize> = None;
    let mut label_idx: Option<usize> = None;
    let mut coords = Vec::new();
    let mut labels = Vec::new();
    let mut first = true;

    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::Parse {
                line,
                message: e.to_string(),
            }
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }

        if first {
            first = false;
            if record.iter().any(|f| f.parse::<f64>().is_err()) {
                header = Some(record.iter().map(str::to_owned).collect());
                width = Some(record.len());
                label_idx = resolve_label_column(label_column, header.as_deref(), record.len())?;
                continue;
            }
        }

        let w = *width.get_or_insert(record.len());
        if label_idx.is_none() && label_column.is_some() {
            label_idx = resolve_label_column(label_column, header.as_deref(), w)?;
        }
        if record.len() != w {
            return Err(Error::Structure(format!(
                "line {line}: expected {w} fields, found {}",
                record.len()
            )));
        }

        for (c, field) in record.iter().enumerate() {
            if Some(c) == label_idx {
                match field {
                    "0" | "0.0" => labels.push(false),
                    "1" | "1.0" => labels.push(true),
                    other => {
                        return Err(Error::Validation(format!(
                            "line {line}: label {other:?} is not 0 or 1"
                        )))
                    }
                }
                continue;
            }
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                line,
                message: format!("field {} ({field:?}) is not a number", c + 1),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("field {} is not finite", c + 1),
                });
            }
            coords.push(v);
        }
    }

    let Some(w) = width else {
        return Err(Error::Structure("no data rows".into()));
    };
    let d = w - usize::from(label_idx.is_some());
    if d == 0 {
        return Err(Error::Structure("no coordinate columns".into()));
    }
    if coords.is_empty() {
        return Err(Error::Structure("no data rows".into()));
    }
    let data = Dataset::new(coords, d)?;
    if label_idx.is_some() {
        LabeledDataset::new(data, labels)
    } else {
        Ok(LabeledDataset::unlabeled(data))
    }
}

fn resolve_label_column(
    label_column: Option<&str>,
    header: Option<&[String]>,
    width: usize,
) -> Result<Option<usize>> {
    let Some(name) = label_column else {
        return Ok(None);
    };
    if let Some(pos) = header.and_then(|h| h.iter().position(|f| f == name)) {
        return Ok(Some(pos));
    }
    match name.parse::<usize>() {
        Ok(pos) if (1..=width).contains(&pos) => Ok(Some(pos - 1)),
        _ => Err(Error::Structure(format!(
            "label column {name:?} not found among {width} columns"
        ))),
    }
}

/// Writes `x0..x{d-1},label` rows, preceded by `# `-prefixed comment lines.
///
/// Values are written in shortest round-trip form, so reading the file back
/// reproduces every coordinate exactly.
pub fn write_csv<W: Write>(out: W, data: &LabeledDataset, comments: &[String]) -> io::Result<()> {
    let mut out = BufWriter::new(out);
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    let d = data.data.d();
    let header: Vec<String> = (0..d).map(|j| format!("x{j}")).collect();
    writeln!(out, "{},label", header.join(","))?;
    for (row, &label) in data.data.rows().zip(&data.labels) {
        for v in row {
            write!(out, "{v},")?;
        }
        writeln!(out, "{}", u8::from(label))?;
    }
    out.flush()
}

pub fn save_csv(path: impl AsRef<Path>, data: &LabeledDataset, comments: &[String]) -> Result<()> {
    let file = File::create(path.as_ref())?;
    write_csv(file, data, comments)?;
    Ok(())
}

/// Synthetic scenario families.
///
/// Cluster placement scales with the smallest bounding-box extent `e`; cluster
/// spread is in absolute units, so a box that is too small leaves no room for
/// outliers.
///
/// * `gauss-blobs-with-uniform-noise`: isotropic Gaussians with std 3, centers
///   evenly spaced on a circle of radius `0.3 e` about the box center.
/// * `unbalanced-two-cluster`: the same layout with std 1.5 for every cluster, so
///   density ratios follow the size ratios.
/// * `worm-like`: random-walk tubes of 60 steps of length `0.015 e` with Gaussian
///   cross-section of std 0.8.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    GaussBlobsWithUniformNoise,
    UnbalancedTwoCluster,
    WormLike,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::GaussBlobsWithUniformNoise => "gauss-blobs-with-uniform-noise",
            Scenario::UnbalancedTwoCluster => "unbalanced-two-cluster",
            Scenario::WormLike => "worm-like",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gauss-blobs-with-uniform-noise" | "blobs" => Ok(Scenario::GaussBlobsWithUniformNoise),
            "unbalanced-two-cluster" | "unbalanced" => Ok(Scenario::UnbalancedTwoCluster),
            "worm-like" | "worm" => Ok(Scenario::WormLike),
            other => Err(Error::Parameter(format!("unknown scenario {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub scenario: Scenario,
    pub cluster_sizes: Vec<usize>,
    pub outliers: usize,
    /// Per-dimension `(low, high)` interval; its length sets the dimensionality.
    pub bbox: Vec<(f64, f64)>,
    pub seed: u64,
}

impl SyntheticSpec {
    /// A 2-D spec on the `[0, 100]^2` box.
    pub fn new(scenario: Scenario, cluster_sizes: Vec<usize>, outliers: usize, seed: u64) -> Self {
        SyntheticSpec {
            scenario,
            cluster_sizes,
            outliers,
            bbox: vec![(0.0, 100.0); 2],
            seed,
        }
    }

    /// One-line description used in generated-file headers.
    pub fn header(&self) -> String {
        let sizes: Vec<String> = self.cluster_sizes.iter().map(|s| s.to_string()).collect();
        let bbox: Vec<String> = self
            .bbox
            .iter()
            .map(|(lo, hi)| format!("{lo}:{hi}"))
            .collect();
        format!(
            "odar-gen rng={RNG_ALGORITHM} scenario={} sizes={} outliers={} bbox={} seed={}",
            self.scenario,
            sizes.join(","),
            self.outliers,
            bbox.join(","),
            self.seed
        )
    }

    fn validate(&self) -> Result<()> {
        if !self.cluster_sizes.iter().any(|&s| s >= 1) {
            return Err(Error::Parameter(
                "at least one cluster size must be positive".into(),
            ));
        }
        if self.bbox.is_empty() {
            return Err(Error::Parameter(
                "bounding box needs at least one dimension".into(),
            ));
        }
        for &(lo, hi) in &self.bbox {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(Error::Parameter(format!(
                    "bad bounding interval [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }
}

/// Where one generated cluster lives: a single center for Gaussian blobs, or the
/// polyline vertices of a worm.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterLayout {
    pub centers: Vec<Vec<f64>>,
    pub std: f64,
}

impl ClusterLayout {
    /// Distance from `p` to the cluster's skeleton (center point or polyline).
    pub fn distance(&self, p: &[f64]) -> f64 {
        match self.centers.len() {
            0 => f64::INFINITY,
            1 => euclid(p, &self.centers[0]),
            _ => self
                .centers
                .windows(2)
                .map(|w| segment_distance(p, &w[0], &w[1]))
                .fold(f64::INFINITY, f64::min),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub data: LabeledDataset,
    pub clusters: Vec<ClusterLayout>,
}

/// Generates the labeled dataset described by `spec`.
pub fn generate(spec: &SyntheticSpec) -> Result<LabeledDataset> {
    generate_detailed(spec).map(|g| g.data)
}

/// Like [`generate`], also returning the cluster layout used.
pub fn generate_detailed(spec: &SyntheticSpec) -> Result<Generated> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let dim = spec.bbox.len();
    let extent = spec
        .bbox
        .iter()
        .map(|(lo, hi)| hi - lo)
        .fold(f64::INFINITY, f64::min);
    let mid: Vec<f64> = spec.bbox.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect();
    let nc = spec.cluster_sizes.len();

    let clusters: Vec<ClusterLayout> = match spec.scenario {
        Scenario::GaussBlobsWithUniformNoise => ring_layout(&mid, nc, 0.3 * extent)
            .into_iter()
            .map(|c| ClusterLayout {
                centers: vec![c],
                std: BLOB_STD,
            })
            .collect(),
        Scenario::UnbalancedTwoCluster => ring_layout(&mid, nc, 0.3 * extent)
            .into_iter()
            .map(|c| ClusterLayout {
                centers: vec![c],
                std: UNBALANCED_STD,
            })
            .collect(),
        Scenario::WormLike => (0..nc)
            .map(|_| worm_path(&mut rng, &spec.bbox, extent))
            .collect(),
    };

    let mut rows: Vec<(Vec<f64>, bool)> = Vec::new();
    for (layout, &size) in clusters.iter().zip(&spec.cluster_sizes) {
        let normal = Normal::new(0.0, layout.std).expect("positive std");
        for _ in 0..size {
            let base = if layout.centers.len() == 1 {
                layout.centers[0].clone()
            } else {
                let seg = rng.random_range(0..layout.centers.len() - 1);
                let t: f64 = rng.random();
                let (a, b) = (&layout.centers[seg], &layout.centers[seg + 1]);
                a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
            };
            let p: Vec<f64> = base.iter().map(|c| c + normal.sample(&mut rng)).collect();
            rows.push((p, false));
        }
    }

    for o in 0..spec.outliers {
        let mut placed = None;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let p: Vec<f64> = spec
                .bbox
                .iter()
                .map(|&(lo, hi)| rng.random_range(lo..hi))
                .collect();
            let clear = clusters
                .iter()
                .all(|c| c.distance(&p) >= OUTLIER_EXCLUSION_SIGMAS * c.std);
            if clear {
                placed = Some(p);
                break;
            }
        }
        match placed {
            Some(p) => rows.push((p, true)),
            None => {
                return Err(Error::Generation(format!(
                    "could not place outlier {o} outside the clusters after \
                     {MAX_PLACEMENT_ATTEMPTS} attempts; enlarge the bounding box"
                )))
            }
        }
    }

    rows.shuffle(&mut rng);
    let mut points = Vec::with_capacity(rows.len() * dim);
    let mut labels = Vec::with_capacity(rows.len());
    for (p, l) in rows {
        points.extend(p);
        labels.push(l);
    }
    let data = LabeledDataset::new(Dataset::new(points, dim)?, labels)?;
    Ok(Generated { data, clusters })
}

fn ring_layout(mid: &[f64], count: usize, radius: f64) -> Vec<Vec<f64>> {
    if count == 1 {
        return vec![mid.to_vec()];
    }
    (0..count)
        .map(|i| {
            let angle = std::f64::consts::PI + 2.0 * std::f64::consts::PI * i as f64 / count as f64;
            let mut c = mid.to_vec();
            c[0] += radius * angle.cos();
            if c.len() > 1 {
                c[1] += radius * angle.sin();
            }
            c
        })
        .collect()
}

fn worm_path(rng: &mut ChaCha8Rng, bbox: &[(f64, f64)], extent: f64) -> ClusterLayout {
    const STEPS: usize = 60;
    let step = 0.015 * extent;
    let margin = 0.15;
    let turn = Normal::new(0.0, 0.35).expect("positive std");

    let mut pos: Vec<f64> = bbox
        .iter()
        .map(|&(lo, hi)| {
            let w = hi - lo;
            rng.random_range(lo + 0.2 * w..hi - 0.2 * w)
        })
        .collect();
    let mut heading: Vec<f64> = (0..bbox.len()).map(|_| turn.sample(rng) + 1e-3).collect();
    normalize(&mut heading);

    let mut centers = vec![pos.clone()];
    for _ in 0..STEPS {
        for h in heading.iter_mut() {
            *h += turn.sample(rng);
        }
        normalize(&mut heading);
        for (j, &(lo, hi)) in bbox.iter().enumerate() {
            let w = hi - lo;
            let next = pos[j] + step * heading[j];
            if next < lo + margin * w || next > hi - margin * w {
                heading[j] = -heading[j];
            }
            pos[j] += step * heading[j];
        }
        centers.push(pos.clone());
    }
    ClusterLayout {
        centers,
        std: WORM_STD,
    }
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    } else if let Some(first) = v.first_mut() {
        *first = 1.0;
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn segment_distance(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab2: f64 = a.iter().zip(b).map(|(x, y)| (y - x) * (y - x)).sum();
    if ab2 == 0.0 {
        return euclid(p, a);
    }
    let t = a
        .iter()
        .zip(b)
        .zip(p)
        .map(|((x, y), q)| (q - x) * (y - x))
        .sum::<f64>()
        / ab2;
    let t = t.clamp(0.0, 1.0);
    let proj: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect();
    euclid(p, &proj)
}
