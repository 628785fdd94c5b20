//! Learning-curve figures as standalone SVG.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::metrics::read_metrics;
use crate::error::{Error, Result};

/// A set of runs drawn as one curve: their per-epoch mean and, with more
/// than one run, the min/max envelope.
#[derive(Debug, Clone)]
pub struct Variant {
    pub label: String,
    /// Per-run `(epoch, eval_mean_return)` points.
    pub runs: Vec<Vec<(usize, f64)>>,
}

impl Variant {
    pub fn from_files(label: impl Into<String>, files: &[&Path]) -> Result<Self> {
        let runs = files
            .iter()
            .map(|f| {
                Ok(read_metrics(f)?
                    .into_iter()
                    .filter_map(|r| r.eval_mean_return.map(|v| (r.epoch, v)))
                    .collect())
            })
            .collect::<Result<Vec<Vec<_>>>>()?;
        Ok(Self {
            label: label.into(),
            runs,
        })
    }

    /// `(epoch, mean, min, max)` over runs reporting that epoch.
    pub fn envelope(&self) -> Vec<(usize, f64, f64, f64)> {
        let mut by_epoch: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for run in &self.runs {
            for &(e, v) in run {
                by_epoch.entry(e).or_default().push(v);
            }
        }
        by_epoch
            .into_iter()
            .map(|(e, vs)| {
                let mean = vs.iter().sum::<f64>() / vs.len() as f64;
                let lo = vs.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = vs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (e, mean, lo, hi)
            })
            .collect()
    }
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

fn fmt(x: f64) -> String {
    format!("{x:.2}")
}

/// Renders return-vs-epoch curves. Output bytes depend only on the input.
pub fn render_svg(variants: &[Variant]) -> Result<String> {
    let curves: Vec<_> = variants.iter().map(|v| v.envelope()).collect();
    let points = curves.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(e, _, lo, hi) in points {
        x0 = x0.min(e as f64);
        x1 = x1.max(e as f64);
        y0 = y0.min(lo);
        y1 = y1.max(hi);
    }
    if !x0.is_finite() {
        return Err(Error::Empty("no evaluation records to plot".into()));
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y0 -= 1.0;
        y1 += 1.0;
    }
    let sx = |e: f64| MARGIN + (e - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |v: f64| HEIGHT - MARGIN - (v - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        svg,
        r#"<path d="M{left} {top} L{left} {bottom} L{right} {bottom}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let f = f64::from(i) / 4.0;
        let (e, v) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            fmt(sx(e)),
            fmt(bottom + 16.0),
            e.round()
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            fmt(left - 6.0),
            fmt(sy(v) + 4.0),
            fmt(v)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">epoch</text>"#,
        fmt(WIDTH / 2.0),
        fmt(HEIGHT - 12.0)
    );
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">eval return</text>"#,
        fmt(HEIGHT / 2.0),
        fmt(HEIGHT / 2.0)
    );

    for (i, (variant, curve)) in variants.iter().zip(&curves).enumerate() {
        let color = COLORS[i % COLORS.len()];
        if variant.runs.len() > 1 {
            let mut d = String::new();
            for (j, &(e, _, _, hi)) in curve.iter().enumerate() {
                let _ = write!(d, "{}{} {} ", if j == 0 { "M" } else { "L" }, fmt(sx(e as f64)), fmt(sy(hi)));
            }
            for &(e, _, lo, _) in curve.iter().rev() {
                let _ = write!(d, "L{} {} ", fmt(sx(e as f64)), fmt(sy(lo)));
            }
            let _ = writeln!(
                svg,
                r#"<path class="band" d="{}Z" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
                d
            );
        }
        let pts: Vec<String> = curve
            .iter()
            .map(|&(e, m, _, _)| format!("{},{}", fmt(sx(e as f64)), fmt(sy(m))))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="mean" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            fmt(right - 150.0),
            fmt(top + 16.0 * (i as f64 + 1.0)),
            escape(&variant.label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Groups metrics files into variants by the name of the directory above
/// each run directory (`<variant>/seed-<n>/metrics.jsonl`), then writes the
/// figure to `out`.
pub fn emit_plot(metrics_files: &[&Path], out: &Path) -> Result<()> {
    if metrics_files.is_empty() {
        return Err(Error::Empty("no metrics files given".into()));
    }
    let mut groups: BTreeMap<String, Vec<&Path>> = BTreeMap::new();
    for &f in metrics_files {
        let label = f
            .parent()
            .and_then(Path::parent)
            .and_then(Path::file_name)
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| f.display().to_string());
        groups.entry(label).or_default().push(f);
    }
    let variants = groups
        .into_iter()
        .map(|(label, files)| Variant::from_files(label, &files))
        .collect::<Result<Vec<_>>>()?;
    fs::write(out, render_svg(&variants)?)?;
    Ok(())
}
