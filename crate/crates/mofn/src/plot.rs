//! Threshold comparison chart: learned checklist cut points next to the
//! soft-threshold baseline's cut points and the feature means, all mapped
//! into each feature's observed [min, max] as a 0-to-1 coordinate.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::FeatureMatrix;

/// Normalized positions for one feature row of the chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub feature_name: String,
    pub mip_t_norm: Option<f64>,
    pub sets_t_norm: Option<f64>,
    pub mean_norm: f64,
    /// True when any value in this row was clipped into [-0.1, 1.1].
    pub clipped: bool,
}

/// Raw thresholds to compare, keyed by feature name. A feature absent from
/// a map simply has no marker for that source.
#[derive(Debug, Clone, Default)]
pub struct ThresholdChart {
    pub mip: HashMap<String, f64>,
    pub sets: HashMap<String, f64>,
}

const CLIP_LO: f64 = -0.1;
const CLIP_HI: f64 = 1.1;

fn clip(v: f64, clipped: &mut bool) -> f64 {
    if v < CLIP_LO {
        *clipped = true;
        CLIP_LO
    } else if v > CLIP_HI {
        *clipped = true;
        CLIP_HI
    } else {
        v
    }
}

/// Build one row per feature of `x`, in column order. Every name in the
/// threshold maps must match a feature of `x`.
pub fn threshold_rows(x: &FeatureMatrix, chart: &ThresholdChart) -> Result<Vec<ThresholdRow>> {
    let names = x.feature_names();
    for key in chart.mip.keys().chain(chart.sets.keys()) {
        if !names.iter().any(|n| n == key) {
            return Err(Error::structural(format!(
                "threshold for unknown feature {key:?}"
            )));
        }
    }
    let mut rows = Vec::with_capacity(x.n_features());
    for j in 0..x.n_features() {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let mut sum = 0.0;
        for i in 0..x.n_rows() {
            let v = x.value(i, j);
            lo = lo.min(v);
            hi = hi.max(v);
            sum += v;
        }
        let mean = sum / x.n_rows() as f64;
        // constant feature: every raw value maps to the interval midpoint
        let norm = |v: f64| if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
        let mut clipped = false;
        let name = &names[j];
        let row = ThresholdRow {
            feature_name: name.clone(),
            mip_t_norm: chart.mip.get(name).map(|&t| clip(norm(t), &mut clipped)),
            sets_t_norm: chart.sets.get(name).map(|&t| clip(norm(t), &mut clipped)),
            mean_norm: clip(norm(mean), &mut clipped),
            clipped,
        };
        rows.push(row);
    }
    Ok(rows)
}

/// CSV with a fixed header; empty cells for absent markers.
pub fn render_threshold_csv(rows: &[ThresholdRow]) -> String {
    let mut out = String::from("feature,mip_t_norm,sets_t_norm,mean_norm,clipped\n");
    let cell = |v: Option<f64>| v.map(|f| format!("{f:.6}")).unwrap_or_default();
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:.6},{}\n",
            r.feature_name,
            cell(r.mip_t_norm),
            cell(r.sets_t_norm),
            r.mean_norm,
            r.clipped
        ));
    }
    out
}

/// Self-contained SVG: one horizontal lane per feature, with a tick for the
/// mean and distinct markers for each threshold source.
pub fn render_threshold_svg(rows: &[ThresholdRow]) -> String {
    const LANE_H: usize = 28;
    const TOP: usize = 46;
    const LEFT: usize = 170;
    const SPAN: usize = 440;
    const RIGHT_PAD: usize = 40;
    let width = LEFT + SPAN + RIGHT_PAD;
    let height = TOP + rows.len().max(1) * LANE_H + 20;
    // normalized 0..1 spans the lane; the clip margins hang slightly outside
    let px = |v: f64| LEFT as f64 + v * SPAN as f64;

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    s.push_str(&format!(
        "<text x=\"{LEFT}\" y=\"18\" fill=\"#333\">normalized threshold position \
         (0 = feature min, 1 = feature max)</text>\n"
    ));
    // legend
    s.push_str(&format!(
        "<circle cx=\"{x}\" cy=\"32\" r=\"5\" fill=\"#d6604d\"/>\
         <text x=\"{tx}\" y=\"36\" fill=\"#333\">checklist</text>\n",
        x = LEFT,
        tx = LEFT + 10
    ));
    s.push_str(&format!(
        "<rect x=\"{x}\" y=\"27\" width=\"10\" height=\"10\" fill=\"#4393c3\"/>\
         <text x=\"{tx}\" y=\"36\" fill=\"#333\">soft baseline</text>\n",
        x = LEFT + 90,
        tx = LEFT + 104
    ));
    s.push_str(&format!(
        "<line x1=\"{x}\" y1=\"27\" x2=\"{x}\" y2=\"37\" stroke=\"#555\" stroke-width=\"2\"/>\
         <text x=\"{tx}\" y=\"36\" fill=\"#333\">mean</text>\n",
        x = LEFT + 210,
        tx = LEFT + 218
    ));

    for (k, r) in rows.iter().enumerate() {
        let cy = TOP + k * LANE_H + LANE_H / 2;
        let label = if r.clipped {
            format!("{} *", r.feature_name)
        } else {
            r.feature_name.clone()
        };
        s.push_str(&format!(
            "<text x=\"8\" y=\"{y}\" fill=\"#333\">{}</text>\n",
            xml_escape(&label),
            y = cy + 4
        ));
        s.push_str(&format!(
            "<line x1=\"{x1}\" y1=\"{cy}\" x2=\"{x2}\" y2=\"{cy}\" stroke=\"#ccc\"/>\n",
            x1 = px(0.0),
            x2 = px(1.0)
        ));
        s.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{y1}\" x2=\"{x}\" y2=\"{y2}\" stroke=\"#555\" stroke-width=\"2\"/>\n",
            x = px(r.mean_norm),
            y1 = cy - 5,
            y2 = cy + 5
        ));
        if let Some(t) = r.sets_t_norm {
            s.push_str(&format!(
                "<rect x=\"{x}\" y=\"{y}\" width=\"10\" height=\"10\" fill=\"#4393c3\" \
                 fill-opacity=\"0.85\"/>\n",
                x = px(t) - 5.0,
                y = cy - 5
            ));
        }
        if let Some(t) = r.mip_t_norm {
            s.push_str(&format!(
                "<circle cx=\"{x}\" cy=\"{cy}\" r=\"5\" fill=\"#d6604d\" fill-opacity=\"0.9\"/>\n",
                x = px(t)
            ));
        }
    }
    if rows.iter().any(|r| r.clipped) {
        s.push_str(&format!(
            "<text x=\"8\" y=\"{y}\" fill=\"#666\">* marker clipped to the plotted range</text>\n",
            y = height - 6
        ));
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn matrix() -> FeatureMatrix {
        // hr spans [60, 100]; temp is constant
        FeatureMatrix::from_rows(
            &[vec![60.0, 37.0], vec![80.0, 37.0], vec![100.0, 37.0]],
            vec!["hr".to_string(), "temp".to_string()],
        )
        .unwrap()
    }

    #[test]
    fn mean_and_min_map_to_expected_positions() {
        let rows = threshold_rows(&matrix(), &ThresholdChart::default()).unwrap();
        assert_abs_diff_eq!(rows[0].mean_norm, 0.5, epsilon = 1e-12);
        assert!(!rows[0].clipped);
        // constant feature sits at the midpoint by convention
        assert_abs_diff_eq!(rows[1].mean_norm, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn threshold_at_min_is_zero() {
        let mut chart = ThresholdChart::default();
        chart.mip.insert("hr".to_string(), 60.0);
        let rows = threshold_rows(&matrix(), &chart).unwrap();
        assert_eq!(rows[0].mip_t_norm, Some(0.0));
        assert!(!rows[0].clipped);
        assert_eq!(rows[1].mip_t_norm, None);
    }

    #[test]
    fn far_below_min_clips_and_flags() {
        let mut chart = ThresholdChart::default();
        chart.sets.insert("hr".to_string(), -500.0);
        let rows = threshold_rows(&matrix(), &chart).unwrap();
        assert_eq!(rows[0].sets_t_norm, Some(-0.1));
        assert!(rows[0].clipped);
    }

    #[test]
    fn unknown_feature_name_is_structural() {
        let mut chart = ThresholdChart::default();
        chart.mip.insert("bp".to_string(), 1.0);
        assert!(matches!(
            threshold_rows(&matrix(), &chart),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn csv_shape_and_empty_cells() {
        let mut chart = ThresholdChart::default();
        chart.mip.insert("hr".to_string(), 90.0);
        let rows = threshold_rows(&matrix(), &chart).unwrap();
        let csv = render_threshold_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "feature,mip_t_norm,sets_t_norm,mean_norm,clipped");
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1], "hr,0.750000,,0.500000,false");
        // constant feature has no thresholds, only its midpoint mean
        assert_eq!(lines[2], "temp,,,0.500000,false");
    }

    #[test]
    fn svg_is_self_contained_and_marks_each_source() {
        let mut chart = ThresholdChart::default();
        chart.mip.insert("hr".to_string(), 90.0);
        chart.sets.insert("hr".to_string(), 70.0);
        let rows = threshold_rows(&matrix(), &chart).unwrap();
        let svg = render_threshold_svg(&rows);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        // the only URL is the xmlns identifier; nothing is fetched at view time
        assert!(!svg.contains("href"));
        assert!(!svg.contains("@import"));
        assert!(svg.contains("circle"));
        assert!(svg.contains("rect"));
        assert!(svg.matches("<line").count() >= 2);
    }

    #[test]
    fn svg_escapes_feature_names() {
        let x = FeatureMatrix::from_rows(
            &[vec![0.0], vec![1.0]],
            vec!["a<b".to_string()],
        )
        .unwrap();
        let rows = threshold_rows(&x, &ThresholdChart::default()).unwrap();
        let svg = render_threshold_svg(&rows);
        assert!(svg.contains("a&lt;b"));
    }
}
