//! Heatmaps, label maps and SVG line charts.

use std::fmt::Write as _;

pub use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::RegionGrid;
use crate::metrics::EntropyMap;
use crate::segmentation::Segmentation;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HeatmapScale {
    /// `[0, max value in the map]`.
    Auto,
    Fixed(f64, f64),
}

/// JSON sidecar describing how a heatmap's colors map to values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatmapLegend {
    pub layer: u32,
    pub component_size: f64,
    pub lo: f64,
    pub hi: f64,
}

pub struct Heatmap {
    pub image: RgbImage,
    pub legend: HeatmapLegend,
}

/// Single-hue ramp: black at `t = 0` through amber to pale yellow at `t = 1`.
/// Every channel is non-decreasing in `t`.
pub fn ramp_color(t: f64) -> [u8; 3] {
    let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
    [
        (255.0 * t).round() as u8,
        (224.0 * t).round() as u8,
        (96.0 * t * t).round() as u8,
    ]
}

fn resolve_scale(scale: HeatmapScale, map: &EntropyMap) -> Result<(f64, f64)> {
    let (lo, hi) = match scale {
        HeatmapScale::Auto => (0.0, map.max()),
        HeatmapScale::Fixed(lo, hi) => {
            if !(lo.is_finite() && hi.is_finite()) || hi < lo {
                return Err(Error::invalid(format!(
                    "invalid heatmap scale [{lo}, {hi}]"
                )));
            }
            (lo, hi)
        }
    };
    Ok(if hi == lo { (lo, lo + 1.0) } else { (lo, hi) })
}

/// Paints each region of `grid` with the ramp color of its entropy.
pub fn render_entropy_heatmap(
    map: &EntropyMap,
    grid: &RegionGrid,
    scale: HeatmapScale,
) -> Result<Heatmap> {
    if map.layer != grid.layer() || map.values.len() != grid.len() {
        return Err(Error::invalid(format!(
            "entropy map is for layer {} but grid is layer {}",
            map.layer,
            grid.layer()
        )));
    }
    let (lo, hi) = resolve_scale(scale, map)?;
    let mut image = RgbImage::new(grid.width() as u32, grid.height() as u32);
    for (rect, &v) in grid.regions().zip(&map.values) {
        let color = image::Rgb(ramp_color((v - lo) / (hi - lo)));
        for y in rect.y0..rect.y1 {
            for x in rect.x0..rect.x1 {
                image.put_pixel(x as u32, y as u32, color);
            }
        }
    }
    Ok(Heatmap {
        image,
        legend: HeatmapLegend {
            layer: map.layer,
            component_size: map.component_size,
            lo,
            hi,
        },
    })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic pseudo-random color for a canonical cluster label.
pub fn label_color(label: u32) -> [u8; 3] {
    let h = splitmix64(label as u64).to_le_bytes();
    [h[0], h[1], h[2]]
}

pub fn render_label_map(seg: &Segmentation) -> RgbImage {
    let mut image = RgbImage::new(seg.width() as u32, seg.height() as u32);
    for (px, &l) in image.pixels_mut().zip(seg.labels()) {
        *px = image::Rgb(label_color(l));
    }
    image
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series {
            label: label.into(),
            points,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveOptions {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
}

impl Default for CurveOptions {
    fn default() -> Self {
        CurveOptions {
            title: String::new(),
            x_label: "component size".into(),
            y_label: "bits".into(),
        }
    }
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

const SVG_W: f64 = 720.0;
const SVG_H: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const TICKS: usize = 5;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

/// Line chart of one or more series with linear axes and a legend.
///
/// Output depends only on the input, so identical calls give identical bytes.
pub fn render_curve(series: &[Series], opts: &CurveOptions) -> Result<String> {
    if series.is_empty() {
        return Err(Error::invalid("no series to plot"));
    }
    for s in series {
        if s.points.is_empty() {
            return Err(Error::invalid(format!(
                "series '{}' has no points",
                s.label
            )));
        }
        if s.points
            .iter()
            .any(|p| !(p.0.is_finite() && p.1.is_finite()))
        {
            return Err(Error::invalid(format!(
                "series '{}' has non-finite points",
                s.label
            )));
        }
    }
    let all = || series.iter().flat_map(|s| s.points.iter());
    let (x_lo, x_hi) = span(all().map(|p| p.0));
    let (y_lo, y_hi) = span(all().map(|p| p.1));
    let plot_w = SVG_W - LEFT - RIGHT;
    let plot_h = SVG_H - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |y: f64| TOP + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h;

    let mut svg = String::new();
    // Writing to a String cannot fail.
    let _ = writeln!(
        svg,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}" font-family="sans-serif" font-size="12">
<rect x="0" y="0" width="{SVG_W}" height="{SVG_H}" fill="white"/>"#
    );
    if !opts.title.is_empty() {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            LEFT + plot_w / 2.0,
            escape(&opts.title)
        );
    }
    let _ = writeln!(
        svg,
        r#"<g stroke="black" stroke-width="1"><line x1="{LEFT}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}"/><line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{y0:.2}"/></g>"#,
        y0 = TOP + plot_h,
        x1 = LEFT + plot_w,
    );
    for i in 0..=TICKS {
        let f = i as f64 / TICKS as f64;
        let xv = x_lo + f * (x_hi - x_lo);
        let yv = y_lo + f * (y_hi - y_lo);
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(
            svg,
            r#"<line x1="{px:.2}" y1="{b:.2}" x2="{px:.2}" y2="{b2:.2}" stroke="black"/><text x="{px:.2}" y="{t:.2}" text-anchor="middle">{}</text>"#,
            tick_label(xv),
            b = TOP + plot_h,
            b2 = TOP + plot_h + 5.0,
            t = TOP + plot_h + 18.0,
        );
        let _ = writeln!(
            svg,
            r#"<line x1="{l2:.2}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/><text x="{t:.2}" y="{ty:.2}" text-anchor="end">{}</text>"#,
            tick_label(yv),
            l2 = LEFT - 5.0,
            t = LEFT - 8.0,
            ty = py + 4.0,
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        SVG_H - 15.0,
        escape(&opts.x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{cy:.2}" text-anchor="middle" transform="rotate(-90 18 {cy:.2})">{}</text>"#,
        escape(&opts.y_label),
        cy = TOP + plot_h / 2.0,
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="series" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
        for &(x, y) in &s.points {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                sx(x),
                sy(y)
            );
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = LEFT + plot_w + 15.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(layer: u32, values: Vec<f64>) -> EntropyMap {
        let side = (values.len() as f64).sqrt() as usize;
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        EntropyMap {
            layer,
            component_size: 1000.0,
            side,
            values,
            mean,
        }
    }

    #[test]
    fn ramp_is_monotone() {
        let mut prev = ramp_color(0.0);
        assert_eq!(prev, [0, 0, 0]);
        for i in 1..=1000 {
            let c = ramp_color(i as f64 / 1000.0);
            assert!((0..3).all(|k| c[k] >= prev[k]));
            prev = c;
        }
        assert_eq!(ramp_color(2.0), ramp_color(1.0));
    }

    #[test]
    fn zero_map_is_dark_with_unit_scale() {
        let grid = RegionGrid::new(8, 8, 1).unwrap();
        let h = render_entropy_heatmap(&map(1, vec![0.0; 4]), &grid, HeatmapScale::Auto).unwrap();
        assert_eq!((h.legend.lo, h.legend.hi), (0.0, 1.0));
        assert!(h.image.pixels().all(|p| p.0 == [0, 0, 0]));
        assert_eq!(h.image.dimensions(), (8, 8));
    }

    #[test]
    fn hottest_region_is_brightest() {
        let grid = RegionGrid::new(6, 6, 1).unwrap();
        let h =
            render_entropy_heatmap(&map(1, vec![0.3, 1.7, 0.9, 0.0]), &grid, HeatmapScale::Auto)
                .unwrap();
        assert_eq!(h.image.get_pixel(3, 0).0, ramp_color(1.0));
        let bright = |x, y| h.image.get_pixel(x, y).0[0];
        assert!(
            bright(3, 0) > bright(0, 3)
                && bright(0, 3) > bright(0, 0)
                && bright(0, 0) > bright(3, 3)
        );
    }

    #[test]
    fn shared_scale_gives_equal_colors() {
        let grid = RegionGrid::new(4, 4, 1).unwrap();
        let scale = HeatmapScale::Fixed(0.0, 2.0);
        let a = render_entropy_heatmap(&map(1, vec![0.5, 1.0, 2.0, 0.0]), &grid, scale).unwrap();
        let b = render_entropy_heatmap(&map(1, vec![0.5, 0.1, 0.1, 0.1]), &grid, scale).unwrap();
        assert_eq!(a.image.get_pixel(0, 0), b.image.get_pixel(0, 0));
        assert!(render_entropy_heatmap(
            &map(1, vec![0.0; 4]),
            &grid,
            HeatmapScale::Fixed(2.0, 1.0)
        )
        .is_err());
    }

    #[test]
    fn layer_mismatch_rejected() {
        let grid = RegionGrid::new(4, 4, 0).unwrap();
        assert!(render_entropy_heatmap(&map(1, vec![0.0; 4]), &grid, HeatmapScale::Auto).is_err());
    }

    #[test]
    fn single_point_curve() {
        let svg = render_curve(
            &[Series::new("a", vec![(100.0, 1.0)])],
            &CurveOptions::default(),
        )
        .unwrap();
        assert_eq!(svg.matches("<circle").count(), 1);
        // Unit box around the point: x ticks run 99.5..100.5.
        assert!(svg.contains(">99.5<") && svg.contains(">100.5<"));
        assert!(svg.contains(">0.5<") && svg.contains(">1.5<"));
    }

    #[test]
    fn two_series_structure_and_determinism() {
        let pts: Vec<(f64, f64)> = (0..19).map(|i| (i as f64, (i * i) as f64)).collect();
        let series = [Series::new("S0", pts.clone()), Series::new("S<1>", pts)];
        let svg = render_curve(&series, &CurveOptions::default()).unwrap();
        let polylines: Vec<&str> = svg
            .lines()
            .filter(|l| l.contains("class=\"series\""))
            .collect();
        assert_eq!(polylines.len(), 2);
        for p in polylines {
            let points = p
                .split("points=\"")
                .nth(1)
                .unwrap()
                .trim_end_matches("\"/>");
            assert_eq!(points.split(' ').count(), 19);
        }
        assert!(svg.contains("S&lt;1&gt;"));
        assert_eq!(
            svg,
            render_curve(&series, &CurveOptions::default()).unwrap()
        );
    }

    #[test]
    fn empty_series_rejected() {
        assert!(render_curve(&[], &CurveOptions::default()).is_err());
        assert!(render_curve(&[Series::new("a", vec![])], &CurveOptions::default()).is_err());
    }

    #[test]
    fn label_colors_are_stable() {
        assert_eq!(label_color(7), label_color(7));
        assert_ne!(label_color(0), label_color(1));
    }
}
