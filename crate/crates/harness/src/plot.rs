//! Plain SVG figures. Output depends only on the input numbers.

use spiralwave_core::{Point, RectDomain};
use std::fmt::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineStyle {
    Solid,
    Dashed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub points: Vec<Point>,
    pub style: LineStyle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRecord {
    pub label: String,
    pub samples: Vec<(f64, f64)>,
    pub style: LineStyle,
}

const SIZE: f64 = 400.0;
const MARGIN: f64 = 40.0;
const COLORS: [&str; 6] = ["#1f4e9c", "#b4271f", "#2a7f3b", "#7d3c98", "#b9770e", "#333333"];

fn polyline(s: &mut String, pts: &[(f64, f64)], style: LineStyle, color: &str) {
    if pts.len() < 2 {
        return;
    }
    let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    let dash = if style == LineStyle::Dashed { r#" stroke-dasharray="6 4""# } else { "" };
    let _ = writeln!(
        s,
        r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
        coords.join(" ")
    );
}

/// Spiral paths inside the domain rectangle.
pub fn trajectory_svg(dom: &RectDomain, paths: &[PathRecord]) -> String {
    let scale = SIZE / dom.lx.max(dom.ly);
    let (w, h) = (dom.lx * scale, dom.ly * scale);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.0} {:.0}">"#,
        w + 2.0 * MARGIN,
        h + 2.0 * MARGIN,
        w + 2.0 * MARGIN,
        h + 2.0 * MARGIN
    );
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN:.2}" y="{MARGIN:.2}" width="{w:.2}" height="{h:.2}" fill="none" stroke="black" stroke-width="1"/>"#
    );
    for (i, p) in paths.iter().enumerate() {
        let pts: Vec<(f64, f64)> = p.points.iter().map(|q| (MARGIN + q.x * scale, MARGIN + h - q.y * scale)).collect();
        polyline(&mut s, &pts, p.style, COLORS[i % COLORS.len()]);
    }
    s.push_str("</svg>\n");
    s
}

/// Time series on shared axes, with the value range printed on the axis.
pub fn series_svg(title: &str, series: &[SeriesRecord]) -> String {
    let all = series.iter().flat_map(|r| r.samples.iter());
    let (mut t0, mut t1, mut v0, mut v1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(t, v) in all {
        if t.is_finite() && v.is_finite() {
            t0 = t0.min(t);
            t1 = t1.max(t);
            v0 = v0.min(v);
            v1 = v1.max(v);
        }
    }
    if !(t1 > t0) {
        t1 = t0 + 1.0;
    }
    if !(v1 > v0) {
        v1 = v0 + 1.0;
    }
    let (w, h) = (1.5 * SIZE, SIZE);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.0} {:.0}" font-family="sans-serif" font-size="11">"#,
        w + 2.0 * MARGIN,
        h + 2.0 * MARGIN,
        w + 2.0 * MARGIN,
        h + 2.0 * MARGIN
    );
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN:.2}" y="{MARGIN:.2}" width="{w:.2}" height="{h:.2}" fill="none" stroke="black" stroke-width="1"/>"#
    );
    let _ = writeln!(s, r#"<text x="{MARGIN:.2}" y="{:.2}">{title}</text>"#, MARGIN - 12.0);
    let _ = writeln!(s, r#"<text x="2" y="{:.2}">{v1:.3e}</text>"#, MARGIN + 4.0);
    let _ = writeln!(s, r#"<text x="2" y="{:.2}">{v0:.3e}</text>"#, MARGIN + h);
    let _ = writeln!(s, r#"<text x="{MARGIN:.2}" y="{:.2}">t = {t0}</text>"#, MARGIN + h + 16.0);
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">t = {t1}</text>"#, MARGIN + w, MARGIN + h + 16.0);
    for (i, r) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<(f64, f64)> = r
            .samples
            .iter()
            .filter(|(t, v)| t.is_finite() && v.is_finite())
            .map(|&(t, v)| (MARGIN + (t - t0) / (t1 - t0) * w, MARGIN + h - (v - v0) / (v1 - v0) * h))
            .collect();
        polyline(&mut s, &pts, r.style, color);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" fill="{color}" text-anchor="end">{}</text>"#,
            MARGIN + w - 4.0,
            MARGIN + 14.0 * (i + 1) as f64,
            r.label
        );
    }
    s.push_str("</svg>\n");
    s
}
