//! Static SVG line charts of `log10(V^t)` against the round number.

use std::fmt::Write as _;

use super::CliError;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;
const TICKS: usize = 5;
/// `log10` is clamped here so exact zeros still plot.
pub const LOG_FLOOR: f64 = -300.0;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// One labelled curve of `(round, V^t)` points.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(usize, f64)>,
}

fn log_v(v: f64) -> f64 {
    if v > 0.0 {
        v.log10().max(LOG_FLOOR)
    } else {
        LOG_FLOOR
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi - lo < 1e-12 {
        (lo - 1.0, hi + 1.0)
    } else {
        (lo, hi)
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub fn render_svg(series: &[Series]) -> Result<String, CliError> {
    if series.is_empty() || series.iter().any(|s| s.points.is_empty()) {
        return Err(CliError::EmptyTrace);
    }
    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut x_lo, mut x_hi, mut y_lo, mut y_hi) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(round, v) in all {
        let (x, y) = (round as f64, log_v(v));
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        y_lo = y_lo.min(y);
        y_hi = y_hi.max(y);
    }
    let (x_lo, x_hi) = padded(x_lo, x_hi);
    let (y_lo, y_hi) = padded(y_lo.floor(), y_hi.ceil());

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |y: f64| TOP + (y_hi - y) / (y_hi - y_lo) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">
<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let (x0, y0, x1, y1) = (LEFT, TOP + plot_h, LEFT + plot_w, TOP);
    let _ = writeln!(
        svg,
        r#"<g id="axes" stroke="black" stroke-width="1"><line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}"/><line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}"/></g>"#
    );

    svg.push_str(r#"<g id="ticks" font-family="sans-serif" font-size="11" fill="black">"#);
    svg.push('\n');
    for k in 0..=TICKS {
        let t = k as f64 / TICKS as f64;
        let xv = x_lo + t * (x_hi - x_lo);
        let yv = y_lo + t * (y_hi - y_lo);
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            sx(xv),
            y0 + 16.0,
            xv.round()
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{:.1}</text>"#,
            x0 - 6.0,
            sy(yv) + 4.0,
            yv
        );
    }
    svg.push_str("</g>\n");
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="13" text-anchor="middle">iteration t</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 16 {:.2})">log10 V(t)</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let points: Vec<String> = s
            .points
            .iter()
            .map(|&(r, v)| format!("{:.3},{:.3}", sx(r as f64), sy(log_v(v))))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="series" data-label="{}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            escape(&s.label),
            points.join(" ")
        );
        if s.points.len() == 1 {
            let (r, v) = s.points[0];
            let _ = writeln!(
                svg,
                r#"<circle class="marker" cx="{:.3}" cy="{:.3}" r="3" fill="{color}"/>"#,
                sx(r as f64),
                sy(log_v(v))
            );
        }
    }

    if series.len() > 1 {
        svg.push_str(r#"<g id="legend" font-family="sans-serif" font-size="12">"#);
        svg.push('\n');
        for (k, s) in series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let y = TOP + 12.0 + 16.0 * k as f64;
            let lx = WIDTH - RIGHT - 180.0;
            let _ = writeln!(
                svg,
                r#"<line x1="{lx}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
                lx + 20.0,
                lx + 26.0,
                y + 4.0,
                escape(&s.label)
            );
        }
        svg.push_str("</g>\n");
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn polylines(svg: &str) -> Vec<Vec<(f64, f64)>> {
        svg.lines()
            .filter(|l| l.starts_with("<polyline"))
            .map(|l| {
                let start = l.find("points=\"").unwrap() + 8;
                let end = start + l[start..].find('"').unwrap();
                l[start..end]
                    .split(' ')
                    .map(|p| {
                        let (x, y) = p.split_once(',').unwrap();
                        (x.parse().unwrap(), y.parse().unwrap())
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn single_point_series() {
        let svg = render_svg(&[Series { label: "a".into(), points: vec![(0, 2.0)] }]).unwrap();
        let lines = polylines(&svg);
        assert_eq!(lines.len(), 1);
        assert_eq!(lines[0].len(), 1);
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(!svg.contains("legend"));
    }

    #[test]
    fn decreasing_error_descends_on_screen() {
        let points = (0..50).map(|t| (t, 10f64.powi(-(t as i32)))).collect();
        let svg = render_svg(&[Series { label: "filtered".into(), points }]).unwrap();
        let line = &polylines(&svg)[0];
        assert!(line.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 >= w[0].1));
    }

    #[test]
    fn overlay_has_legend() {
        let a = Series { label: "with <filter>".into(), points: vec![(0, 1.0), (1, 0.1)] };
        let b = Series { label: "without".into(), points: vec![(0, 1.0), (1, 2.0)] };
        let svg = render_svg(&[a, b]).unwrap();
        assert_eq!(polylines(&svg).len(), 2);
        assert!(svg.contains(r#"id="legend""#));
        assert!(svg.contains("with &lt;filter&gt;"));
    }

    #[test]
    fn zero_error_is_clamped() {
        let svg = render_svg(&[Series { label: "z".into(), points: vec![(0, 1.0), (1, 0.0)] }]).unwrap();
        assert!(polylines(&svg)[0].iter().all(|(x, y)| x.is_finite() && y.is_finite()));
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(render_svg(&[]), Err(CliError::EmptyTrace)));
        assert!(matches!(
            render_svg(&[Series { label: "e".into(), points: vec![] }]),
            Err(CliError::EmptyTrace)
        ));
    }
}
