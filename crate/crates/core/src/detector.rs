//! Turning an ODAR space into an outlier set.
//!
//! The component strategy first keeps the objects whose local density is below
//! the median, then clusters the high-order density of those candidates in one
//! dimension and reports the cluster holding the smallest high-order density (the
//! anchor). The `nocomp` strategy skips the median split and clusters the full
//! 2-D space, using the same anchor rule.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::clustering::BackendSpec;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::transform::{self, DensityProfile, OdarSpace, TransformConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    #[default]
    Component,
    Nocomp,
}

/// Why an object ended up where it did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    KeptAsOutlier,
    ExcludedByMedian,
    ExcludedByHrhoCluster,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::KeptAsOutlier => "kept-as-outlier",
            Stage::ExcludedByMedian => "excluded-by-median",
            Stage::ExcludedByHrhoCluster => "excluded-by-hrho-cluster",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionParams {
    /// Neighbor count of the transform, when the detection came from [`detect`].
    pub k: Option<usize>,
    pub shrink: bool,
    pub strategy: Strategy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    /// Detected outliers, ascending.
    pub outliers: Vec<usize>,
    pub stage: Vec<Stage>,
    pub backend: BackendSpec,
    pub parameters: DetectionParams,
    /// Object with the smallest clustered high-order density, if any candidates.
    pub anchor: Option<usize>,
}

impl DetectionResult {
    fn empty(n: usize, stage: Stage, backend: BackendSpec, parameters: DetectionParams) -> Self {
        DetectionResult {
            outliers: Vec::new(),
            stage: vec![stage; n],
            backend,
            parameters,
            anchor: None,
        }
    }

    pub fn n(&self) -> usize {
        self.stage.len()
    }

    pub fn is_outlier(&self, i: usize) -> bool {
        self.stage[i] == Stage::KeptAsOutlier
    }

    pub fn count(&self, stage: Stage) -> usize {
        self.stage.iter().filter(|&&s| s == stage).count()
    }

    /// Writes `index,is_outlier,stage` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "index,is_outlier,stage")?;
        for (i, s) in self.stage.iter().enumerate() {
            let flag = u8::from(*s == Stage::KeptAsOutlier);
            writeln!(out, "{i},{flag},{}", s.as_str())?;
        }
        Ok(())
    }

    /// Counts, parameters and backend as a JSON object.
    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.n(),
            "outliers": self.outliers.len(),
            "excluded_by_median": self.count(Stage::ExcludedByMedian),
            "excluded_by_hrho_cluster": self.count(Stage::ExcludedByHrhoCluster),
            "anchor": self.anchor,
            "parameters": self.parameters,
            "backend": self.backend,
            "outlier_indices": self.outliers,
        })
    }
}

/// Reads the `index,is_outlier` columns of a detection CSV back into indices.
pub fn read_detection_csv(text: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("index") {
            continue;
        }
        let mut fields = line.split(',');
        let parse_err = |message: &str| Error::Parse {
            line: lineno as u64 + 1,
            message: message.to_owned(),
        };
        let index: usize = fields
            .next()
            .and_then(|f| f.trim().parse().ok())
            .ok_or_else(|| parse_err("bad index"))?;
        match fields.next().map(str::trim) {
            Some("1") => out.push(index),
            Some("0") => {}
            _ => return Err(parse_err("is_outlier must be 0 or 1")),
        }
    }
    Ok(out)
}

/// Indices whose `rho` is strictly below the median, ascending. The median of an
/// even count is the mean of the two middle values.
pub fn median_split(rho: &[f64]) -> Result<Vec<usize>> {
    let n = rho.len();
    if n < 2 {
        return Err(Error::Parameter(
            "median split needs at least 2 objects".into(),
        ));
    }
    let m = median(rho);
    Ok((0..n).filter(|&i| rho[i] < m).collect())
}

pub fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Component clustering strategy: median split on `rho`, then 1-D clustering of
/// the candidates' high-order density taken from `space`.
pub fn detect_component(
    space: &OdarSpace,
    rho: &[f64],
    backend: &BackendSpec,
) -> Result<DetectionResult> {
    backend.validate()?;
    let n = space.len();
    if rho.len() != n {
        return Err(Error::Structure(format!(
            "ODAR space has {n} rows but rho has {}",
            rho.len()
        )));
    }
    let params = DetectionParams {
        k: None,
        shrink: space.is_shrunk(),
        strategy: Strategy::Component,
    };

    let candidates = median_split(rho).map_err(|e| e.in_stage("median split"))?;
    if candidates.is_empty() {
        return Ok(DetectionResult::empty(
            n,
            Stage::ExcludedByMedian,
            *backend,
            params,
        ));
    }
    if candidates.len() < backend.min_points() {
        return Err(Error::Parameter(format!(
            "{} median-side candidates cannot form {} clusters",
            candidates.len(),
            backend.min_points()
        ))
        .in_stage("hrho clustering"));
    }

    let coords = space.coords();
    let hrho: Vec<f64> = candidates.iter().map(|&i| coords[i][1]).collect();
    let labels = backend
        .cluster(&Dataset::from_column(&hrho)?)
        .map_err(|e| e.in_stage("hrho clustering"))?;
    let anchor_pos = argmin(&hrho);
    let anchor_label = labels.labels()[anchor_pos];

    let mut stage = vec![Stage::ExcludedByMedian; n];
    let mut outliers = Vec::new();
    for (pos, &i) in candidates.iter().enumerate() {
        if labels.labels()[pos] == anchor_label {
            stage[i] = Stage::KeptAsOutlier;
            outliers.push(i);
        } else {
            stage[i] = Stage::ExcludedByHrhoCluster;
        }
    }
    Ok(DetectionResult {
        outliers,
        stage,
        backend: *backend,
        parameters: params,
        anchor: Some(candidates[anchor_pos]),
    })
}

/// Clusters the whole 2-D space and reports the cluster of the object with the
/// smallest high-order density.
pub fn detect_nocomp(space: &OdarSpace, backend: &BackendSpec) -> Result<DetectionResult> {
    backend.validate()?;
    let n = space.len();
    let params = DetectionParams {
        k: None,
        shrink: space.is_shrunk(),
        strategy: Strategy::Nocomp,
    };
    if n < backend.min_points() {
        return Err(Error::Parameter(format!(
            "{n} objects cannot form {} clusters",
            backend.min_points()
        ))
        .in_stage("ODAR-space clustering"));
    }
    let labels = backend
        .cluster(&space.to_dataset()?)
        .map_err(|e| e.in_stage("ODAR-space clustering"))?;
    let anchor = argmin(&space.hrho());
    let anchor_label = labels.labels()[anchor];

    let mut stage = vec![Stage::ExcludedByHrhoCluster; n];
    let mut outliers = Vec::new();
    for (i, &l) in labels.labels().iter().enumerate() {
        if l == anchor_label {
            stage[i] = Stage::KeptAsOutlier;
            outliers.push(i);
        }
    }
    Ok(DetectionResult {
        outliers,
        stage,
        backend: *backend,
        parameters: params,
        anchor: Some(anchor),
    })
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// Everything needed to run the pipeline end to end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectConfig {
    pub transform: TransformConfig,
    pub backend: BackendSpec,
    pub strategy: Strategy,
}

impl DetectConfig {
    /// Defaults: shrinking on, global normalization, two-sided window, kmeans with
    /// two clusters, component strategy.
    pub fn new(k: usize) -> Self {
        DetectConfig {
            transform: TransformConfig::new(k),
            backend: BackendSpec::default(),
            strategy: Strategy::Component,
        }
    }

    pub fn with_backend(mut self, backend: BackendSpec) -> Self {
        self.backend = backend;
        self
    }

    pub fn with_shrink(mut self, shrink: bool) -> Self {
        self.transform.shrink = shrink;
        self
    }

    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self
    }
}

#[derive(Debug, Clone)]
pub struct Detection {
    pub space: OdarSpace,
    pub profile: DensityProfile,
    pub result: DetectionResult,
}

/// Transform `data` and detect outliers with the configured strategy.
pub fn detect(data: &Dataset, config: &DetectConfig) -> Result<Detection> {
    config.backend.validate()?;
    let (space, profile) = transform::construct_odar_space(data, &config.transform)?;
    let mut result = match config.strategy {
        Strategy::Component => detect_component(&space, &profile.rho, &config.backend)?,
        Strategy::Nocomp => detect_nocomp(&space, &config.backend)?,
    };
    result.parameters.k = Some(config.transform.k);
    Ok(Detection {
        space,
        profile,
        result,
    })
}
