//! Static SVG figures: feature overlays, stationary distributions and sweep
//! heatmaps.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Features1d,
    Stationary,
    HeatmapLogMse,
    HeatmapDiff,
    Features2d,
}

impl PlotKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PlotKind::Features1d => "features_1d",
            PlotKind::Stationary => "stationary",
            PlotKind::HeatmapLogMse => "heatmap_logmse",
            PlotKind::HeatmapDiff => "heatmap_diff",
            PlotKind::Features2d => "features_2d",
        }
    }
}

/// Row-by-column table of values; `None` marks a skipped cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub title: String,
    pub row_label: String,
    pub col_label: String,
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

pub enum PlotInput<'a> {
    Grid(&'a Grid),
    Basis { title: &'a str, y: &'a DMatrix<f64>, highlight: usize, lattice: Option<(usize, usize)> },
    Chain { title: &'a str, mu: &'a DVector<f64>, empirical: Option<&'a [f64]> },
}

pub fn render(kind: PlotKind, input: &PlotInput<'_>) -> Result<String, HarnessError> {
    match (kind, input) {
        (PlotKind::HeatmapLogMse, PlotInput::Grid(g)) => Ok(heatmap_logmse(g)),
        (PlotKind::HeatmapDiff, PlotInput::Grid(g)) => Ok(heatmap_diff(g)),
        (PlotKind::Features1d, PlotInput::Basis { title, y, highlight, lattice: None }) => {
            Ok(features_1d(title, y, *highlight))
        }
        (PlotKind::Features2d, PlotInput::Basis { title, y, highlight, lattice: Some((w, h)) }) => {
            Ok(features_2d(title, y, *w, *h, *highlight))
        }
        (PlotKind::Stationary, PlotInput::Chain { title, mu, empirical }) => Ok(stationary(title, mu, *empirical)),
        _ => Err(HarnessError::PlotInput(kind.as_str())),
    }
}

pub fn emit_plot(kind: PlotKind, input: &PlotInput<'_>, path: &Path) -> Result<(), HarnessError> {
    let svg = render(kind, input)?;
    std::fs::write(path, svg).map_err(|e| HarnessError::io(path, e))
}

/// Index of the smallest value in each column, ignoring skipped cells.
pub fn best_per_column(grid: &Grid) -> Vec<Option<usize>> {
    (0..grid.cols.len())
        .map(|c| {
            let mut best: Option<(usize, f64)> = None;
            for (r, row) in grid.values.iter().enumerate() {
                if let Some(v) = row[c] {
                    if best.is_none_or(|(_, b)| v < b) {
                        best = Some((r, v));
                    }
                }
            }
            best.map(|(r, _)| r)
        })
        .collect()
}

const CELL: f64 = 28.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;
const LEGEND_W: f64 = 90.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, w: f64, h: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="13">{}</text>"#, w / 2.0, escape(title));
}

fn rgb(c: [f64; 3]) -> String {
    let q = |x: f64| (x.clamp(0.0, 1.0) * 255.0).round() as u8;
    format!("#{:02x}{:02x}{:02x}", q(c[0]), q(c[1]), q(c[2]))
}

fn lerp_stops(stops: &[[f64; 3]], t: f64) -> [f64; 3] {
    let t = t.clamp(0.0, 1.0) * (stops.len() - 1) as f64;
    let i = (t.floor() as usize).min(stops.len() - 2);
    let f = t - i as f64;
    let (a, b) = (stops[i], stops[i + 1]);
    [a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1]), a[2] + f * (b[2] - a[2])]
}

// viridis anchors
const SEQUENTIAL: [[f64; 3]; 5] = [
    [0.267, 0.005, 0.329],
    [0.231, 0.322, 0.545],
    [0.129, 0.569, 0.549],
    [0.369, 0.788, 0.384],
    [0.993, 0.906, 0.144],
];
const DIVERGING: [[f64; 3]; 3] = [[0.129, 0.400, 0.675], [1.0, 1.0, 1.0], [0.698, 0.094, 0.169]];
const SKIPPED: &str = "#cccccc";

fn heatmap(grid: &Grid, color: impl Fn(f64) -> String, legend: &[(String, String)], markers: &[Option<usize>]) -> String {
    let (nr, nc) = (grid.rows.len(), grid.cols.len());
    let w = MARGIN_L + nc as f64 * CELL + LEGEND_W;
    let h = MARGIN_T + nr as f64 * CELL + MARGIN_B;
    let mut out = String::new();
    header(&mut out, w, h, &grid.title);
    for (r, row) in grid.values.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            let x = MARGIN_L + c as f64 * CELL;
            let y = MARGIN_T + r as f64 * CELL;
            let (fill, tip) = match v {
                Some(v) => (color(*v), format!("{v:.6e}")),
                None => (SKIPPED.to_string(), "skipped".to_string()),
            };
            let _ = writeln!(
                out,
                r#"<rect class="cell" x="{x:.1}" y="{y:.1}" width="{CELL:.1}" height="{CELL:.1}" fill="{fill}" stroke="white" stroke-width="0.5"><title>{}={}, {}={}: {tip}</title></rect>"#,
                escape(&grid.row_label),
                escape(&grid.rows[r]),
                escape(&grid.col_label),
                escape(&grid.cols[c]),
            );
        }
    }
    for (c, m) in markers.iter().enumerate() {
        if let Some(r) = m {
            let cx = MARGIN_L + (c as f64 + 0.5) * CELL;
            let cy = MARGIN_T + (*r as f64 + 0.5) * CELL;
            let _ = writeln!(out, r#"<circle class="best" cx="{cx:.1}" cy="{cy:.1}" r="4" fill="red" stroke="white"/>"#);
        }
    }
    for (r, label) in grid.rows.iter().enumerate() {
        let y = MARGIN_T + (r as f64 + 0.5) * CELL + 4.0;
        let _ = writeln!(out, r#"<text x="{:.1}" y="{y:.1}" text-anchor="end">{}</text>"#, MARGIN_L - 5.0, escape(label));
    }
    for (c, label) in grid.cols.iter().enumerate() {
        let x = MARGIN_L + (c as f64 + 0.5) * CELL;
        let y = MARGIN_T + nr as f64 * CELL + 14.0;
        let _ = writeln!(out, r#"<text x="{x:.1}" y="{y:.1}" text-anchor="middle">{}</text>"#, escape(label));
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        MARGIN_L + nc as f64 * CELL / 2.0,
        h - 12.0,
        escape(&grid.col_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">{}</text>"#,
        MARGIN_T + nr as f64 * CELL / 2.0,
        MARGIN_T + nr as f64 * CELL / 2.0,
        escape(&grid.row_label)
    );
    let lx = MARGIN_L + nc as f64 * CELL + 12.0;
    for (i, (fill, label)) in legend.iter().enumerate() {
        let y = MARGIN_T + i as f64 * 16.0;
        let _ = writeln!(out, r#"<rect x="{lx:.1}" y="{y:.1}" width="12" height="12" fill="{fill}"/>"#);
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, lx + 16.0, y + 10.0, escape(label));
    }
    out.push_str("</svg>\n");
    out
}

fn finite_range(grid: &Grid) -> Option<(f64, f64)> {
    let vals = grid.values.iter().flatten().flatten().copied();
    vals.fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

/// Sequential map of log-MSE with one red marker per column on its minimum.
pub fn heatmap_logmse(grid: &Grid) -> String {
    let (lo, hi) = finite_range(grid).unwrap_or((0.0, 1.0));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let color = |v: f64| rgb(lerp_stops(&SEQUENTIAL, (v - lo) / span));
    let legend: Vec<(String, String)> = (0..5)
        .map(|i| {
            let v = hi - span * i as f64 / 4.0;
            (color(v), format!("{v:.2}"))
        })
        .collect();
    heatmap(grid, color, &legend, &best_per_column(grid))
}

/// Diverging map centered at 0: red for positive, blue for negative.
pub fn heatmap_diff(grid: &Grid) -> String {
    let amp = grid.values.iter().flatten().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let color = move |v: f64| {
        if amp == 0.0 {
            rgb(DIVERGING[1])
        } else {
            rgb(lerp_stops(&DIVERGING, 0.5 + 0.5 * v / amp))
        }
    };
    let legend: Vec<(String, String)> =
        [amp, amp / 2.0, 0.0, -amp / 2.0, -amp].iter().map(|&v| (color(v), format!("{v:.2}"))).collect();
    heatmap(grid, color, &legend, &[])
}

fn palette(i: usize) -> &'static str {
    const P: [&str; 10] =
        ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];
    P[i % P.len()]
}

const PW: f64 = 640.0;
const PH: f64 = 360.0;

fn polyline(out: &mut String, xs: &[f64], ys: &[f64], lo: f64, hi: f64, stroke: &str, extra: &str) {
    let n = xs.len();
    let span = if hi > lo { hi - lo } else { 1.0 };
    let x_max = xs.last().copied().unwrap_or(1.0).max(1.0);
    let mut pts = String::new();
    for i in 0..n {
        let px = MARGIN_L + xs[i] / x_max * (PW - MARGIN_L - 20.0);
        let py = MARGIN_T + (1.0 - (ys[i] - lo) / span) * (PH - MARGIN_T - MARGIN_B);
        let _ = write!(pts, "{px:.2},{py:.2} ");
    }
    let _ = writeln!(out, r#"<polyline fill="none" stroke="{stroke}" {extra} points="{}"/>"#, pts.trim_end());
}

fn axes(out: &mut String, lo: f64, hi: f64, x_label: &str) {
    let (x0, x1, y0, y1) = (MARGIN_L, PW - 20.0, MARGIN_T, PH - MARGIN_B);
    let _ = writeln!(out, r#"<path d="M{x0:.1},{y0:.1} L{x0:.1},{y1:.1} L{x1:.1},{y1:.1}" fill="none" stroke="black"/>"#);
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{hi:.3e}</text>"#, x0 - 4.0, y0 + 4.0);
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{lo:.3e}</text>"#, x0 - 4.0, y1);
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{x_label}</text>"#, (x0 + x1) / 2.0, PH - 15.0);
}

/// Overlay of all feature columns over the state index; the first
/// `highlight` are drawn in color, the rest in light gray.
pub fn features_1d(title: &str, y: &DMatrix<f64>, highlight: usize) -> String {
    let mut out = String::new();
    header(&mut out, PW, PH, title);
    let lo = y.min().min(0.0);
    let hi = y.max().max(0.0);
    axes(&mut out, lo, hi, "state");
    let xs: Vec<f64> = (0..y.nrows()).map(|i| i as f64).collect();
    let order: Vec<usize> = (highlight.min(y.ncols())..y.ncols()).chain(0..highlight.min(y.ncols())).collect();
    for j in order {
        let ys: Vec<f64> = y.column(j).iter().copied().collect();
        if j < highlight {
            polyline(&mut out, &xs, &ys, lo, hi, palette(j), r#"class="feature" stroke-width="1.5""#);
        } else {
            polyline(&mut out, &xs, &ys, lo, hi, "#d0d0d0", r#"class="feature dim" stroke-width="1""#);
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Stationary distribution with optional empirical visit frequencies.
pub fn stationary(title: &str, mu: &DVector<f64>, empirical: Option<&[f64]>) -> String {
    let mut out = String::new();
    header(&mut out, PW, PH, title);
    let mut hi = mu.max();
    if let Some(f) = empirical {
        hi = f.iter().copied().fold(hi, f64::max);
    }
    axes(&mut out, 0.0, hi, "state");
    let xs: Vec<f64> = (0..mu.len()).map(|i| i as f64).collect();
    polyline(&mut out, &xs, mu.as_slice(), 0.0, hi, "#1f77b4", r#"class="mu" stroke-width="1.5""#);
    if let Some(f) = empirical {
        polyline(&mut out, &xs, f, 0.0, hi, "#d62728", r#"class="empirical" stroke-width="1" stroke-dasharray="4 2""#);
    }
    out.push_str("</svg>\n");
    out
}

/// One lattice color map per feature for the first `count` features.
pub fn features_2d(title: &str, y: &DMatrix<f64>, width: usize, height: usize, count: usize) -> String {
    let count = count.min(y.ncols()).max(1).min(y.ncols());
    let side = 150.0;
    let per_row = count.min(5);
    let rows = count.div_ceil(per_row.max(1));
    let w = 20.0 + per_row as f64 * (side + 20.0);
    let h = MARGIN_T + rows as f64 * (side + 30.0);
    let mut out = String::new();
    header(&mut out, w, h, title);
    let cell = side / width.max(height) as f64;
    for j in 0..count {
        let col = y.column(j);
        let amp = col.amax();
        let ox = 20.0 + (j % per_row) as f64 * (side + 20.0);
        let oy = MARGIN_T + (j / per_row) as f64 * (side + 30.0);
        let _ = writeln!(out, r#"<g class="panel"><text x="{:.1}" y="{:.1}" text-anchor="middle">y{}</text>"#, ox + side / 2.0, oy - 4.0, j + 1);
        for s in 0..width * height {
            let (x, yy) = (s % width, s / width);
            let t = if amp > 0.0 { 0.5 + 0.5 * col[s] / amp } else { 0.5 };
            // (0,0) at the bottom-left
            let px = ox + x as f64 * cell;
            let py = oy + (height - 1 - yy) as f64 * cell;
            let _ = writeln!(
                out,
                r#"<rect x="{px:.2}" y="{py:.2}" width="{cell:.2}" height="{cell:.2}" fill="{}"/>"#,
                rgb(lerp_stops(&DIVERGING, t))
            );
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(values: Vec<Vec<Option<f64>>>) -> Grid {
        Grid {
            title: "t".into(),
            row_label: "zeta".into(),
            col_label: "e".into(),
            rows: (0..values.len()).map(|i| i.to_string()).collect(),
            cols: (0..values[0].len()).map(|i| i.to_string()).collect(),
            values,
        }
    }

    #[test]
    fn one_marker_per_column_on_minimum() {
        let g = grid(vec![
            vec![Some(3.0), Some(1.0), None],
            vec![Some(2.0), Some(5.0), None],
            vec![Some(4.0), None, Some(0.5)],
        ]);
        assert_eq!(best_per_column(&g), vec![Some(1), Some(0), Some(2)]);
        let svg = heatmap_logmse(&g);
        assert_eq!(svg.matches(r#"class="cell""#).count(), 9);
        assert_eq!(svg.matches(r#"class="best""#).count(), 3);
        assert_eq!(svg.matches(SKIPPED).count(), 3);
    }

    #[test]
    fn all_skipped_column_has_no_marker() {
        let g = grid(vec![vec![None, Some(1.0)], vec![None, Some(0.0)]]);
        assert_eq!(best_per_column(&g), vec![None, Some(1)]);
        assert_eq!(heatmap_logmse(&g).matches(r#"class="best""#).count(), 1);
    }

    #[test]
    fn zero_difference_is_neutral() {
        let g = grid(vec![vec![Some(0.0); 4]; 3]);
        let svg = heatmap_diff(&g);
        assert_eq!(svg.matches(r##"fill="#ffffff" stroke="white""##).count(), 12);
    }

    #[test]
    fn diverging_scale_is_centered() {
        let g = grid(vec![vec![Some(-2.0), Some(0.0), Some(2.0)]]);
        let svg = heatmap_diff(&g);
        assert!(svg.contains(&format!(r#"fill="{}" stroke"#, rgb(DIVERGING[0]))));
        assert!(svg.contains(&format!(r#"fill="{}" stroke"#, rgb(DIVERGING[2]))));
        assert!(svg.contains(r##"fill="#ffffff" stroke"##));
    }

    #[test]
    fn feature_overlay_highlights_first_k() {
        let y = DMatrix::from_fn(20, 6, |i, j| ((i * (j + 1)) as f64).sin());
        let svg = features_1d("f", &y, 2);
        assert_eq!(svg.matches(r#"class="feature""#).count(), 2);
        assert_eq!(svg.matches(r#"class="feature dim""#).count(), 4);
    }

    #[test]
    fn mismatched_input_is_rejected() {
        let y = DMatrix::zeros(4, 1);
        let input = PlotInput::Basis { title: "x", y: &y, highlight: 1, lattice: None };
        assert!(matches!(render(PlotKind::HeatmapDiff, &input), Err(HarnessError::PlotInput(_))));
        assert!(render(PlotKind::Features2d, &input).is_err());
        assert!(render(PlotKind::Features1d, &input).is_ok());
    }

    #[test]
    fn lattice_panels() {
        let y = DMatrix::from_fn(12, 3, |i, j| (i + j) as f64 - 6.0);
        let svg = features_2d("g", &y, 4, 3, 3);
        assert_eq!(svg.matches(r#"class="panel""#).count(), 3);
    }
}
