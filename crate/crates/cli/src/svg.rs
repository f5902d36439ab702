//! Minimal standalone SVG scatter plots and heatmaps.

use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SvgError {
    #[error("nothing to plot")]
    Empty,
    #[error("non-finite {what} at row {row}")]
    NonFinite { what: &'static str, row: usize },
    #[error("heatmap rows must all have {0} columns")]
    Ragged(usize),
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;
const MISSING: &str = "#9e9e9e";
const PALETTE: [&str; 8] = [
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666",
];

#[derive(Debug, Clone, PartialEq)]
pub enum Fill {
    /// Target absent from the overlay resource.
    Missing,
    /// Overlay value, coloured on a blue-red ramp.
    Value(f64),
    Category(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterPoint {
    pub x: f64,
    pub y: f64,
    pub fill: Fill,
    pub label: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScatterStyle {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_range: Option<(f64, f64)>,
    pub y_range: Option<(f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Linear blue to red ramp over `t` in [0, 1].
fn ramp(t: f64) -> String {
    let (a, b) = ([59.0, 76.0, 192.0], [180.0, 4.0, 38.0]);
    let c: Vec<u8> = (0..3).map(|i| (a[i] + (b[i] - a[i]) * t).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text class="title" x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

pub fn scatter(points: &[ScatterPoint], style: &ScatterStyle) -> Result<String, SvgError> {
    if points.is_empty() {
        return Err(SvgError::Empty);
    }
    for (row, p) in points.iter().enumerate() {
        if !p.x.is_finite() || !p.y.is_finite() {
            return Err(SvgError::NonFinite { what: "coordinate", row });
        }
        if let Fill::Value(v) = p.fill {
            if !v.is_finite() {
                return Err(SvgError::NonFinite { what: "overlay value", row });
            }
        }
    }
    let (x0, x1) = style.x_range.unwrap_or_else(|| extent(points.iter().map(|p| p.x)));
    let (y0, y1) = style.y_range.unwrap_or_else(|| extent(points.iter().map(|p| p.y)));
    let (v0, v1) = extent(points.iter().filter_map(|p| match p.fill {
        Fill::Value(v) => Some(v),
        _ => None,
    }));
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut out = String::new();
    header(&mut out, &style.title);
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        out,
        r#"<path class="axes" d="M{left} {top} L{left} {bottom} L{right} {bottom}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(
            out,
            r#"<text class="tick" x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            px(xv),
            bottom + 16.0,
            num(xv)
        );
        let _ = writeln!(
            out,
            r#"<text class="tick" x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            left - 6.0,
            py(yv) + 4.0,
            num(yv)
        );
    }
    let _ = writeln!(
        out,
        r#"<text class="axis-label" x="{}" y="{}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0,
        escape(&style.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text class="axis-label" x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(&style.y_label)
    );
    for p in points {
        let fill = match p.fill {
            Fill::Missing => MISSING.to_string(),
            Fill::Value(v) => ramp((v - v0) / (v1 - v0)),
            Fill::Category(c) => PALETTE[c % PALETTE.len()].to_string(),
        };
        let _ = writeln!(
            out,
            r#"<circle class="point" cx="{:.2}" cy="{:.2}" r="3" fill="{fill}" fill-opacity="0.8"><title>{}</title></circle>"#,
            px(p.x),
            py(p.y),
            escape(&p.label)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// One cell per matrix entry, shaded by value, with row and column labels.
pub fn heatmap(
    matrix: &[Vec<f64>],
    row_labels: &[String],
    col_labels: &[String],
    title: &str,
) -> Result<String, SvgError> {
    if matrix.is_empty() || matrix[0].is_empty() {
        return Err(SvgError::Empty);
    }
    let cols = matrix[0].len();
    for (row, r) in matrix.iter().enumerate() {
        if r.len() != cols {
            return Err(SvgError::Ragged(cols));
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(SvgError::NonFinite { what: "cell value", row });
        }
    }
    let max = matrix.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if max > 0.0 { max } else { 1.0 };
    let cell_w = (WIDTH - 2.0 * MARGIN) / cols as f64;
    let cell_h = (HEIGHT - 2.0 * MARGIN) / matrix.len() as f64;

    let mut out = String::new();
    header(&mut out, title);
    for (i, r) in matrix.iter().enumerate() {
        let y = MARGIN + i as f64 * cell_h;
        for (j, v) in r.iter().enumerate() {
            let x = MARGIN + j as f64 * cell_w;
            let shade = 255.0 - 200.0 * (v.abs() / scale);
            let g = shade.round() as u8;
            let _ = writeln!(
                out,
                r##"<rect class="cell" x="{x:.2}" y="{y:.2}" width="{cell_w:.2}" height="{cell_h:.2}" fill="#{:02x}{:02x}ff" stroke="white"><title>{}</title></rect>"##,
                g,
                g,
                num(*v)
            );
            let _ = writeln!(
                out,
                r#"<text class="value" x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                x + cell_w / 2.0,
                y + cell_h / 2.0 + 4.0,
                num(*v)
            );
        }
        let label = row_labels.get(i).map_or(String::new(), |s| escape(s));
        let _ = writeln!(
            out,
            r#"<text class="row-label" x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#,
            MARGIN - 6.0,
            y + cell_h / 2.0 + 4.0
        );
    }
    for j in 0..cols {
        let label = col_labels.get(j).map_or(String::new(), |s| escape(s));
        let _ = writeln!(
            out,
            r#"<text class="col-label" x="{:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#,
            MARGIN + (j as f64 + 0.5) * cell_w,
            HEIGHT - MARGIN + 16.0
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(x: f64, y: f64, fill: Fill) -> ScatterPoint {
        ScatterPoint {
            x,
            y,
            fill,
            label: "w".into(),
        }
    }

    #[test]
    fn one_point_one_marker() {
        let svg = scatter(&[point(3.0, 1.0, Fill::Missing)], &ScatterStyle::default()).unwrap();
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(svg.contains(MISSING));
    }

    #[test]
    fn grey_only_for_missing() {
        let pts = [point(1.0, 1.0, Fill::Value(0.2)), point(2.0, 1.5, Fill::Value(0.9))];
        let svg = scatter(&pts, &ScatterStyle::default()).unwrap();
        assert!(!svg.contains(MISSING));
        assert_eq!(svg, scatter(&pts, &ScatterStyle::default()).unwrap());
    }

    #[test]
    fn rejects_non_finite() {
        let err = scatter(&[point(f64::NAN, 1.0, Fill::Missing)], &ScatterStyle::default()).unwrap_err();
        assert_eq!(err, SvgError::NonFinite { what: "coordinate", row: 0 });
        assert!(scatter(&[point(1.0, 1.0, Fill::Value(f64::INFINITY))], &ScatterStyle::default()).is_err());
        assert_eq!(scatter(&[], &ScatterStyle::default()).unwrap_err(), SvgError::Empty);
        assert!(heatmap(&[vec![f64::NAN]], &[], &[], "").is_err());
    }

    #[test]
    fn heatmap_cells_and_axis() {
        let m = vec![vec![0.2; 5], vec![0.1, 0.2, 0.4, 0.2, 0.1], vec![0.26, 0.14, 0.19, 0.14, 0.27]];
        let rows: Vec<String> = (1..=3).map(|i| i.to_string()).collect();
        let cols: Vec<String> = (1..=5).map(|i| i.to_string()).collect();
        let svg = heatmap(&m, &rows, &cols, "centroids").unwrap();
        assert_eq!(svg.matches(r#"class="cell""#).count(), 15);
        for c in 1..=5 {
            assert!(svg.contains(&format!(r#"text-anchor="middle">{c}</text>"#)));
        }
        assert_eq!(svg.matches(r#"class="col-label""#).count(), 5);
        assert!(heatmap(&[vec![1.0, 2.0], vec![1.0]], &[], &[], "").is_err());
    }
}
