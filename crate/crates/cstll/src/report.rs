//! Plot generation from metrics.csv.
//!
//! Each of the four metrics gets a self-contained SVG line chart: one line
//! per method, seed-averaged values against the risk tolerance, and for the
//! risk chart a dashed diagonal marking the target level. The CSV remains
//! the source of record; the SVGs need no plotting toolchain.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::experiment::ExperimentError;

/// One parsed metrics.csv row.
#[derive(Debug, Clone)]
pub struct ParsedRow {
    pub method: String,
    pub epsilon: f64,
    pub seed: u64,
    pub avg_risk: f64,
    pub avg_set_size: f64,
    pub avg_complexity: Option<f64>,
    pub avg_diversity: Option<f64>,
}

/// Read metrics.csv back into rows.
pub fn read_metrics(path: &Path) -> Result<Vec<ParsedRow>, ExperimentError> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 7 {
            return Err(ExperimentError::Config(format!(
                "metrics.csv line {} has {} fields, expected at least 7",
                i + 1,
                fields.len()
            )));
        }
        let num = |s: &str, what: &str| -> Result<f64, ExperimentError> {
            s.parse().map_err(|_| {
                ExperimentError::Config(format!("metrics.csv line {}: bad {what} `{s}`", i + 1))
            })
        };
        let opt = |s: &str, what: &str| -> Result<Option<f64>, ExperimentError> {
            if s == "n/a" {
                Ok(None)
            } else {
                num(s, what).map(Some)
            }
        };
        rows.push(ParsedRow {
            method: fields[0].to_string(),
            epsilon: num(fields[1], "epsilon")?,
            seed: fields[2].parse().map_err(|_| {
                ExperimentError::Config(format!("metrics.csv line {}: bad seed", i + 1))
            })?,
            avg_risk: num(fields[3], "avg_risk")?,
            avg_set_size: num(fields[4], "avg_set_size")?,
            avg_complexity: opt(fields[5], "avg_complexity")?,
            avg_diversity: opt(fields[6], "avg_diversity")?,
        });
    }
    Ok(rows)
}

/// Seed-averaged value of one metric per (method, epsilon).
pub fn aggregate<F>(rows: &[ParsedRow], metric: F) -> BTreeMap<String, Vec<(f64, f64)>>
where
    F: Fn(&ParsedRow) -> Option<f64>,
{
    let mut buckets: BTreeMap<(String, u64), (f64, usize)> = BTreeMap::new();
    for row in rows {
        if let Some(v) = metric(row) {
            let key = (row.method.clone(), row.epsilon.to_bits());
            let entry = buckets.entry(key).or_insert((0.0, 0));
            entry.0 += v;
            entry.1 += 1;
        }
    }
    let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for ((method, eps_bits), (sum, count)) in buckets {
        series
            .entry(method)
            .or_default()
            .push((f64::from_bits(eps_bits), sum / count as f64));
    }
    for points in series.values_mut() {
        points.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite epsilon"));
    }
    series
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

/// Render one line chart as an SVG document.
pub fn render_chart(
    title: &str,
    y_label: &str,
    series: &BTreeMap<String, Vec<(f64, f64)>>,
    diagonal: bool,
) -> String {
    let (width, height) = (640.0, 420.0);
    let (left, right, top, bottom) = (70.0, 160.0, 40.0, 50.0);
    let plot_w = width - left - right;
    let plot_h = height - top - bottom;

    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for points in series.values() {
        for &(x, y) in points {
            xs.push(x);
            ys.push(y);
        }
    }
    let (x_min, x_max) = bounds(&xs, 0.0, 1.0);
    let (mut y_min, mut y_max) = bounds(&ys, 0.0, 1.0);
    if diagonal {
        y_min = y_min.min(x_min);
        y_max = y_max.max(x_max);
    }
    if (y_max - y_min).abs() < 1e-12 {
        y_max = y_min + 1.0;
    }
    let pad = 0.06 * (y_max - y_min);
    let (y_min, y_max) = (y_min - pad, y_max + pad);

    let sx = |x: f64| left + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |y: f64| top + plot_h - (y - y_min) / (y_max - y_min) * plot_h;

    let mut svg = String::new();
    let _ = write!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = write!(
        svg,
        r#"<rect width="{width}" height="{height}" fill="white"/>"#
    );
    let _ = write!(
        svg,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{title}</text>"#,
        left + plot_w / 2.0
    );

    // axes and ticks
    let _ = write!(
        svg,
        r#"<line x1="{left}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        top + plot_h,
        left + plot_w,
        top + plot_h
    );
    let _ = write!(
        svg,
        r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{}" stroke="black"/>"#,
        top + plot_h
    );
    for i in 0..=4 {
        let fx = x_min + (x_max - x_min) * i as f64 / 4.0;
        let fy = y_min + (y_max - y_min) * i as f64 / 4.0;
        let _ = write!(
            svg,
            r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="black"/><text x="{0}" y="{3}" font-family="sans-serif" font-size="11" text-anchor="middle">{4:.3}</text>"#,
            sx(fx),
            top + plot_h,
            top + plot_h + 5.0,
            top + plot_h + 20.0,
            fx
        );
        let _ = write!(
            svg,
            r#"<line x1="{1}" y1="{0}" x2="{2}" y2="{0}" stroke="black"/><text x="{3}" y="{4}" font-family="sans-serif" font-size="11" text-anchor="end">{5:.3}</text>"#,
            sy(fy),
            left - 5.0,
            left,
            left - 8.0,
            sy(fy) + 4.0,
            fy
        );
    }
    let _ = write!(
        svg,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle">risk tolerance</text>"#,
        left + plot_w / 2.0,
        height - 10.0
    );
    let _ = write!(
        svg,
        r#"<text x="16" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 16 {})">{y_label}</text>"#,
        top + plot_h / 2.0,
        top + plot_h / 2.0
    );

    if diagonal {
        let lo = x_min.max(y_min);
        let hi = x_max.min(y_max);
        if hi > lo {
            let _ = write!(
                svg,
                r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="gray" stroke-dasharray="6,4"/>"#,
                sx(lo),
                sy(lo),
                sx(hi),
                sy(hi)
            );
        }
    }

    for (si, (method, points)) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let path: Vec<String> = points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = write!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            path.join(" ")
        );
        for &(x, y) in points {
            let _ = write!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{color}"/>"#,
                sx(x),
                sy(y)
            );
        }
        let ly = top + 14.0 + 18.0 * si as f64;
        let lx = left + plot_w + 12.0;
        let _ = write!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}" font-family="sans-serif" font-size="12">{method}</text>"#,
            lx + 22.0,
            lx + 28.0,
            ly + 4.0
        );
    }

    svg.push_str("</svg>");
    svg
}

fn bounds(values: &[f64], default_lo: f64, default_hi: f64) -> (f64, f64) {
    if values.is_empty() {
        return (default_lo, default_hi);
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Render the four standard charts from metrics.csv into `out_dir`.
pub fn write_plots(metrics: &Path, out_dir: &Path) -> Result<Vec<PathBuf>, ExperimentError> {
    let rows = read_metrics(metrics)?;
    std::fs::create_dir_all(out_dir)?;
    let charts: [(&str, &str, Box<dyn Fn(&ParsedRow) -> Option<f64>>, bool); 4] = [
        (
            "risk_vs_epsilon.svg",
            "average risk",
            Box::new(|r: &ParsedRow| Some(r.avg_risk)),
            true,
        ),
        (
            "set_size_vs_epsilon.svg",
            "average set size",
            Box::new(|r: &ParsedRow| Some(r.avg_set_size)),
            false,
        ),
        (
            "complexity_vs_epsilon.svg",
            "average complexity",
            Box::new(|r: &ParsedRow| r.avg_complexity),
            false,
        ),
        (
            "diversity_vs_epsilon.svg",
            "average diversity",
            Box::new(|r: &ParsedRow| r.avg_diversity),
            false,
        ),
    ];
    let mut written = Vec::new();
    for (file, label, metric, diagonal) in charts {
        let series = aggregate(&rows, metric.as_ref());
        let svg = render_chart(label, label, &series, diagonal);
        let path = out_dir.join(file);
        std::fs::write(&path, svg)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregate_averages_over_seeds() {
        let rows = vec![
            ParsedRow {
                method: "cstll".into(),
                epsilon: 0.2,
                seed: 0,
                avg_risk: 0.1,
                avg_set_size: 2.0,
                avg_complexity: Some(0.3),
                avg_diversity: None,
            },
            ParsedRow {
                method: "cstll".into(),
                epsilon: 0.2,
                seed: 1,
                avg_risk: 0.3,
                avg_set_size: 4.0,
                avg_complexity: None,
                avg_diversity: None,
            },
        ];
        let risk = aggregate(&rows, |r| Some(r.avg_risk));
        assert_eq!(risk["cstll"], vec![(0.2, 0.2)]);
        // n/a rows drop out of the average instead of poisoning it.
        let complexity = aggregate(&rows, |r| r.avg_complexity);
        assert_eq!(complexity["cstll"], vec![(0.2, 0.3)]);
    }

    #[test]
    fn chart_contains_series_and_diagonal() {
        let mut series = BTreeMap::new();
        series.insert("cstll".to_string(), vec![(0.1, 0.05), (0.3, 0.2)]);
        let svg = render_chart("average risk", "average risk", &series, true);
        assert!(svg.contains("<polyline"));
        assert!(svg.contains("stroke-dasharray"));
        assert!(svg.contains("cstll"));
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>"));
    }
}
