//! Minimal SVG trajectory plots: polylines over a metric grid.

use std::fmt::Write as _;

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const COLORS: [&str; 6] = ["#222222", "#d62728", "#ff7f0e", "#1f77b4", "#2ca02c", "#9467bd"];
const SCALE_PX: f64 = 900.0;
const MARGIN: f64 = 50.0;
const LEGEND_W: f64 = 150.0;

/// Tick spacing giving at most about ten ticks over `span`.
fn tick_step(span: f64) -> f64 {
    [0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0]
        .into_iter()
        .find(|s| span / s <= 10.0)
        .unwrap_or(200.0)
}

/// Plots `series` over the `area` rectangle with access points as squares.
/// The first series is drawn dashed, as a reference.
pub fn overlay(area: [f64; 2], aps: &[[f64; 2]], series: &[Series]) -> String {
    let (mut x0, mut y0, mut x1, mut y1) = (0.0f64, 0.0f64, area[0], area[1]);
    for p in series.iter().flat_map(|s| &s.points) {
        if p.0.is_finite() && p.1.is_finite() {
            x0 = x0.min(p.0);
            y0 = y0.min(p.1);
            x1 = x1.max(p.0);
            y1 = y1.max(p.1);
        }
    }
    let k = SCALE_PX / (x1 - x0).max(y1 - y0).max(1e-9);
    let (w, h) = ((x1 - x0) * k, (y1 - y0) * k);
    let px = |x: f64| MARGIN + (x - x0) * k;
    let py = |y: f64| MARGIN + (y1 - y) * k;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" font-family="sans-serif" font-size="12">"#,
        w + 2.0 * MARGIN + LEGEND_W,
        h + 2.0 * MARGIN
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);

    let step = tick_step((x1 - x0).max(y1 - y0));
    let mut t = (x0 / step).ceil() * step;
    while t <= x1 + 1e-9 {
        let _ = writeln!(
            s,
            r##"<line x1="{0:.1}" y1="{1:.1}" x2="{0:.1}" y2="{2:.1}" stroke="#e5e5e5"/><text x="{0:.1}" y="{3:.1}" text-anchor="middle">{4}</text>"##,
            px(t),
            py(y0),
            py(y1),
            py(y0) + 16.0,
            t
        );
        t += step;
    }
    let mut t = (y0 / step).ceil() * step;
    while t <= y1 + 1e-9 {
        let _ = writeln!(
            s,
            r##"<line x1="{0:.1}" y1="{1:.1}" x2="{2:.1}" y2="{1:.1}" stroke="#e5e5e5"/><text x="{3:.1}" y="{4:.1}" text-anchor="end">{5}</text>"##,
            px(x0),
            py(t),
            px(x1),
            px(x0) - 6.0,
            py(t) + 4.0,
            t
        );
        t += step;
    }
    let _ = writeln!(
        s,
        r##"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#888888"/>"##,
        px(0.0),
        py(area[1]),
        area[0] * k,
        area[1] * k
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">x (m)</text>"#,
        MARGIN + w / 2.0,
        h + 2.0 * MARGIN - 6.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.1}" transform="rotate(-90 14 {:.1})" text-anchor="middle">y (m)</text>"#,
        MARGIN + h / 2.0,
        MARGIN + h / 2.0
    );

    for a in aps {
        let _ = writeln!(
            s,
            r##"<rect x="{:.1}" y="{:.1}" width="8" height="8" fill="#555555"/>"##,
            px(a[0]) - 4.0,
            py(a[1]) - 4.0
        );
    }

    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut pts = String::new();
        for p in ser.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()) {
            let _ = write!(pts, "{:.1},{:.1} ", px(p.0), py(p.1));
        }
        let dash = if i == 0 { r#" stroke-dasharray="6 3""# } else { "" };
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" stroke-opacity="0.85"{dash} points="{}"/>"#,
            pts.trim_end()
        );
        let ly = MARGIN + 20.0 * i as f64;
        let lx = w + MARGIN + 20.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"{dash}/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 24.0,
            lx + 30.0,
            ly + 4.0,
            ser.label
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_polyline_per_series() {
        let series = vec![
            Series {
                label: "a".into(),
                points: vec![(0.0, 0.0), (1.0, 1.0)],
            },
            Series {
                label: "b".into(),
                points: vec![(2.0, 0.5), (f64::NAN, 1.0), (3.0, 3.0)],
            },
        ];
        let svg = overlay([10.0, 5.0], &[[1.0, 1.0]], &series);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn ticks_stay_few() {
        assert_eq!(tick_step(5.0), 0.5);
        assert_eq!(tick_step(10.0), 1.0);
        assert_eq!(tick_step(35.0), 5.0);
    }
}
