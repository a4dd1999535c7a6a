//! Minimal SVG scatter plots of detection results.

use std::fmt::Write;

use odar::dataset::Dataset;
use odar::detector::DetectionResult;

use crate::CliError;

pub const CANVAS: f64 = 800.0;
pub const MARGIN: f64 = 0.05 * CANVAS;
pub const OUTLIER_COLOR: &str = "#ff8c00";
pub const NORMAL_COLOR: &str = "#8c8c8c";
const RADIUS: f64 = 3.0;

/// Scatter plot of a 2-D dataset with detected outliers drawn in orange on top.
pub fn plot_svg(data: &Dataset, result: &DetectionResult) -> Result<String, CliError> {
    let flags: Vec<bool> = (0..result.n()).map(|i| result.is_outlier(i)).collect();
    plot_flags(data, &flags, None)
}

/// Like [`plot_svg`] but takes one flag per object, plus optional text stored in
/// the document's `<metadata>` element.
pub fn plot_flags(
    data: &Dataset,
    flags: &[bool],
    metadata: Option<&str>,
) -> Result<String, CliError> {
    if data.d() != 2 {
        return Err(CliError::Usage(format!(
            "can only plot 2-D data, this dataset has {} dimensions; plot the ODAR space with --space odar instead",
            data.d()
        )));
    }
    if flags.len() != data.n() {
        return Err(CliError::Usage(format!(
            "detection covers {} objects but the dataset has {}",
            flags.len(),
            data.n()
        )));
    }

    let axis = |t: usize| {
        let (lo, hi) = data
            .rows()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                (lo.min(r[t]), hi.max(r[t]))
            });
        move |v: f64| {
            let span = CANVAS - 2.0 * MARGIN;
            if hi > lo {
                (v - lo) / (hi - lo) * span
            } else {
                0.5 * span
            }
        }
    };
    let (sx, sy) = (axis(0), axis(1));

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{CANVAS}" height="{CANVAS}" viewBox="0 0 {CANVAS} {CANVAS}">"#
    );
    if let Some(text) = metadata {
        let escaped = text
            .replace('&', "&amp;")
            .replace('<', "&lt;")
            .replace('>', "&gt;");
        let _ = writeln!(svg, "<metadata>{escaped}</metadata>");
    }
    let _ = writeln!(
        svg,
        r#"<rect width="{CANVAS}" height="{CANVAS}" fill="white"/>"#
    );
    for flagged in [false, true] {
        let color = if flagged { OUTLIER_COLOR } else { NORMAL_COLOR };
        for (i, r) in data.rows().enumerate() {
            if flags[i] != flagged {
                continue;
            }
            let x = MARGIN + sx(r[0]);
            let y = CANVAS - MARGIN - sy(r[1]);
            let _ = writeln!(
                svg,
                r#"<circle cx="{x:.3}" cy="{y:.3}" r="{RADIUS}" fill="{color}"/>"#
            );
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use odar::clustering::BackendSpec;
    use odar::detector::{DetectionParams, Stage, Strategy};

    fn result(flags: &[bool]) -> DetectionResult {
        DetectionResult {
            outliers: (0..flags.len()).filter(|&i| flags[i]).collect(),
            stage: flags
                .iter()
                .map(|&f| {
                    if f {
                        Stage::KeptAsOutlier
                    } else {
                        Stage::ExcludedByMedian
                    }
                })
                .collect(),
            backend: BackendSpec::default(),
            parameters: DetectionParams {
                k: None,
                shrink: true,
                strategy: Strategy::Component,
            },
            anchor: None,
        }
    }

    fn square() -> Dataset {
        Dataset::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]).unwrap()
    }

    #[test]
    fn nothing_flagged_is_all_neutral() {
        let svg = plot_svg(&square(), &result(&[false; 4])).unwrap();
        assert_eq!(svg.matches(NORMAL_COLOR).count(), 4);
        assert_eq!(svg.matches(OUTLIER_COLOR).count(), 0);
    }

    #[test]
    fn everything_flagged_is_all_orange() {
        let svg = plot_svg(&square(), &result(&[true; 4])).unwrap();
        assert_eq!(svg.matches(OUTLIER_COLOR).count(), 4);
        assert_eq!(svg.matches(NORMAL_COLOR).count(), 0);
    }

    #[test]
    fn corners_land_on_the_margins() {
        let svg = plot_svg(&square(), &result(&[true, false, false, false])).unwrap();
        assert!(svg.contains(r#"cx="40.000" cy="760.000""#));
        assert!(svg.contains(r#"cx="760.000" cy="40.000""#));
    }

    #[test]
    fn three_dimensions_is_a_usage_error() {
        let data = Dataset::from_rows(&[[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]]).unwrap();
        let err = plot_svg(&data, &result(&[false, false])).unwrap_err();
        assert!(matches!(err, CliError::Usage(ref m) if m.contains("--space odar")));
    }
}
