//! Static SVG plots with hand-written markup.

use std::fmt::Write as _;
use std::path::Path;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Line,
    Step,
    Scatter,
    Bar,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Series {
        Series {
            label: label.into(),
            points,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axes {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn bounds(series: &[Series], kind: PlotKind) -> (f64, f64, f64, f64) {
    let pts = series
        .iter()
        .flat_map(|s| s.points.iter())
        .filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if kind == PlotKind::Bar {
        y0 = y0.min(0.0);
    }
    if x1 <= x0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 <= y0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    (x0, x1, y0, y1)
}

/// Render the plot to a string.
pub fn render(series: &[Series], kind: PlotKind, axes: &Axes) -> Result<String, CliError> {
    if series.iter().all(|s| s.points.is_empty()) {
        return Err(CliError::Usage("nothing to plot".into()));
    }
    let (x0, x1, y0, y1) = bounds(series, kind);
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
    let mut out = String::new();
    let w = &mut out;
    // Writing to a String cannot fail.
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(w, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        w,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(&axes.title)
    );
    let (bx, by, ex, ey) = (MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN, MARGIN);
    let _ = writeln!(
        w,
        r#"<path d="M{bx},{ey} L{bx},{by} L{ex},{by}" fill="none" stroke="black"/>"#
    );
    for (v, anchor, x) in [(x0, "start", bx), (x1, "end", ex)] {
        let _ = writeln!(
            w,
            r#"<text x="{x}" y="{}" text-anchor="{anchor}">{}</text>"#,
            by + 14.0,
            tick(v)
        );
    }
    for (v, y) in [(y0, by), (y1, ey)] {
        let _ = writeln!(
            w,
            r#"<text x="{}" y="{y}" text-anchor="end">{}</text>"#,
            bx - 4.0,
            tick(v)
        );
    }
    let _ = writeln!(
        w,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 14.0,
        escape(&axes.x_label)
    );
    let _ = writeln!(
        w,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(&axes.y_label)
    );
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<(f64, f64)> = s
            .points
            .iter()
            .copied()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .collect();
        match kind {
            PlotKind::Line | PlotKind::Step => {
                let mut d = String::new();
                for (i, &(x, y)) in pts.iter().enumerate() {
                    if i == 0 {
                        let _ = write!(d, "M{:.2},{:.2}", sx(x), sy(y));
                    } else if kind == PlotKind::Step {
                        let _ = write!(d, " H{:.2} V{:.2}", sx(x), sy(y));
                    } else {
                        let _ = write!(d, " L{:.2},{:.2}", sx(x), sy(y));
                    }
                }
                let _ = writeln!(
                    w,
                    r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.2"><title>{}</title></path>"#,
                    escape(&s.label)
                );
            }
            PlotKind::Scatter => {
                let _ = writeln!(
                    w,
                    r#"<g fill="{color}"><title>{}</title>"#,
                    escape(&s.label)
                );
                for &(x, y) in &pts {
                    let _ = writeln!(
                        w,
                        r#"<circle cx="{:.2}" cy="{:.2}" r="1.6"/>"#,
                        sx(x),
                        sy(y)
                    );
                }
                let _ = writeln!(w, "</g>");
            }
            PlotKind::Bar => {
                let step = pts
                    .windows(2)
                    .map(|p| p[1].0 - p[0].0)
                    .fold(f64::INFINITY, f64::min);
                let half = if step.is_finite() {
                    0.4 * step
                } else {
                    0.4 * (x1 - x0)
                };
                let _ = writeln!(
                    w,
                    r#"<g fill="{color}"><title>{}</title>"#,
                    escape(&s.label)
                );
                for &(x, y) in &pts {
                    let (l, r) = (sx(x - half).max(bx), sx(x + half).min(ex));
                    let (top, base) = (sy(y.max(0.0)), sy(y.min(0.0)));
                    let _ = writeln!(
                        w,
                        r#"<rect x="{l:.2}" y="{top:.2}" width="{:.2}" height="{:.2}"/>"#,
                        (r - l).max(0.5),
                        (base - top).max(0.0)
                    );
                }
                let _ = writeln!(w, "</g>");
            }
        }
    }
    let _ = writeln!(w, "</svg>");
    Ok(out)
}

pub fn emit_plot_svg(
    series: &[Series],
    kind: PlotKind,
    axes: &Axes,
    path: &Path,
) -> Result<(), CliError> {
    std::fs::write(path, render(series, kind, axes)?)?;
    Ok(())
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axes() -> Axes {
        Axes {
            title: "t <1>".into(),
            x_label: "x".into(),
            y_label: "y".into(),
        }
    }

    #[test]
    fn step_plot_uses_horizontal_then_vertical_moves() {
        let s = Series::new("N", vec![(1.0, 1.0), (2.0, 2.0), (4.0, 3.0)]);
        let svg = render(&[s], PlotKind::Step, &axes()).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches(" H").count(), 2);
        assert!(svg.contains("t &lt;1&gt;"));
    }

    #[test]
    fn bars_and_points_are_counted() {
        let pts = vec![(0.5, 3.0), (1.0, 7.0), (2.0, 1.0)];
        let bars = render(&[Series::new("h", pts.clone())], PlotKind::Bar, &axes()).unwrap();
        assert_eq!(bars.matches("<rect x=").count(), 3);
        let dots = render(&[Series::new("f", pts)], PlotKind::Scatter, &axes()).unwrap();
        assert_eq!(dots.matches("<circle").count(), 3);
    }

    #[test]
    fn empty_series_is_an_error() {
        assert!(render(&[Series::new("e", vec![])], PlotKind::Line, &axes()).is_err());
    }
}
