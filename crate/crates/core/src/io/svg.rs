//! Minimal SVG rendering: stacked line panels and a space-time density map.
//! Output is plain text with no external assets, so it is byte-stable for a
//! given trace.

use std::fmt::Write;

use crate::engine::StepRecord;

const PANEL_W: f64 = 760.0;
const PANEL_H: f64 = 130.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_T: f64 = 30.0;
const GAP: f64 = 28.0;
/// Upper bound on vertices per polyline; longer series are decimated.
const MAX_POINTS: usize = 2000;

/// One named curve in a panel.
#[derive(Debug, Clone)]
pub struct Series<'a> {
    pub label: &'a str,
    pub colour: &'a str,
    pub points: Vec<(f64, f64)>,
}

fn bounds(series: &[Series]) -> (f64, f64, f64, f64) {
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for (x, y) in series.iter().flat_map(|s| s.points.iter().copied()) {
        if x.is_finite() && y.is_finite() {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
    }
    if !x0.is_finite() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 * y0.abs().max(1e-12) {
        let pad = 0.05 * y0.abs().max(1e-3);
        y0 -= pad;
        y1 += pad;
    }
    (x0, x1, y0, y1)
}

fn panel(out: &mut String, top: f64, title: &str, series: &[Series]) {
    let (x0, x1, y0, y1) = bounds(series);
    let sx = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * PANEL_W;
    let sy = |y: f64| top + PANEL_H - (y - y0) / (y1 - y0) * PANEL_H;
    let _ = writeln!(
        out,
        r##"<rect x="{MARGIN_L}" y="{top}" width="{PANEL_W}" height="{PANEL_H}" fill="none" stroke="#999"/>"##
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="12">{}</text>"#,
        MARGIN_L + 4.0,
        top - 6.0,
        escape(title)
    );
    for (v, y) in [(y1, top + 10.0), (y0, top + PANEL_H)] {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{y}" font-size="10" text-anchor="end">{}</text>"#,
            MARGIN_L - 4.0,
            format_tick(v)
        );
    }
    let mut legend_x = MARGIN_L + PANEL_W - 10.0;
    for s in series.iter().rev() {
        let stride = s.points.len().div_ceil(MAX_POINTS).max(1);
        let mut pts = String::new();
        for (x, y) in s.points.iter().step_by(stride) {
            if x.is_finite() && y.is_finite() {
                let _ = write!(pts, "{:.2},{:.2} ", sx(*x), sy(*y));
            }
        }
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{}" stroke-width="1" points="{}"/>"#,
            s.colour,
            pts.trim_end()
        );
        let _ = writeln!(
            out,
            r#"<text x="{legend_x}" y="{}" font-size="10" text-anchor="end" fill="{}">{}</text>"#,
            top + 12.0,
            s.colour,
            escape(s.label)
        );
        legend_x -= 8.0 * s.label.len() as f64 + 16.0;
    }
}

fn format_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.3e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn document(height: f64, body: &str, title: &str) -> String {
    let width = MARGIN_L + PANEL_W + 20.0;
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">\n<title>{}</title>\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{body}</svg>\n",
        escape(title)
    )
}

/// Stacked panels; each entry is a panel title and its curves.
pub fn stacked_panels_svg(title: &str, panels: &[(&str, Vec<Series>)]) -> String {
    let mut body = String::new();
    for (i, (name, series)) in panels.iter().enumerate() {
        let top = MARGIN_T + i as f64 * (PANEL_H + GAP);
        panel(&mut body, top, name, series);
    }
    let height = MARGIN_T + panels.len() as f64 * (PANEL_H + GAP) + 10.0;
    document(height, &body, title)
}

/// Time-series overview of a run: arrivals and demand, queue, in-flux,
/// discharge, sensed density and speed limit.
pub fn series_panels_svg(title: &str, records: &[StepRecord]) -> String {
    let col = |f: fn(&StepRecord) -> f64| -> Vec<(f64, f64)> {
        records.iter().map(|r| (r.t, f(r))).collect()
    };
    let one = |label, colour, f| {
        vec![Series {
            label,
            colour,
            points: col(f),
        }]
    };
    let panels = vec![
        (
            "arrival rate r and upstream demand d (veh/s)",
            vec![
                Series {
                    label: "r",
                    colour: "#bbb",
                    points: col(|r| r.r),
                },
                Series {
                    label: "d",
                    colour: "#1f77b4",
                    points: col(|r| r.d_minus),
                },
            ],
        ),
        (
            "point queue lambda (veh)",
            one("lambda", "#8c564b", |r: &StepRecord| r.lambda),
        ),
        (
            "in-flux f (veh/s)",
            one("f", "#2ca02c", |r: &StepRecord| r.f),
        ),
        (
            "discharge g (veh/s)",
            one("g", "#d62728", |r: &StepRecord| r.g),
        ),
        (
            "sensed density k (veh/m)",
            one("k", "#9467bd", |r: &StepRecord| r.k_obs),
        ),
        (
            "speed limit u (m/s)",
            one("u", "#ff7f0e", |r: &StepRecord| r.u),
        ),
    ];
    stacked_panels_svg(title, &panels)
}

/// Space-time map of cell densities with a fixed 16-level scale over `[0, k_j]`.
/// Returns `None` for traces without a density field.
pub fn density_contour_svg(title: &str, records: &[StepRecord], k_j: f64) -> Option<String> {
    let n = records.first()?.field.len();
    if n == 0 {
        return None;
    }
    const LEVELS: usize = 16;
    let height_px = 320.0;
    let cols = records.len().min(800);
    let stride = records.len().div_ceil(cols);
    let cell_w = PANEL_W / records.len().div_ceil(stride) as f64;
    let cell_h = height_px / n as f64;
    let mut body = String::new();
    for (ci, rec) in records.iter().step_by(stride).enumerate() {
        for (i, rho) in rec.field.iter().enumerate() {
            let level = ((rho / k_j) * LEVELS as f64)
                .floor()
                .clamp(0.0, (LEVELS - 1) as f64) as usize;
            // Cell 1 (upstream) at the top.
            let _ = writeln!(
                body,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                MARGIN_L + ci as f64 * cell_w,
                MARGIN_T + i as f64 * cell_h,
                cell_w + 0.05,
                cell_h,
                ramp(level, LEVELS)
            );
        }
    }
    let t_end = records.last().map_or(0.0, |r| r.t);
    let _ = writeln!(
        body,
        r#"<text x="{MARGIN_L}" y="{}" font-size="10">t = 0</text><text x="{}" y="{}" font-size="10" text-anchor="end">t = {t_end}</text>"#,
        MARGIN_T + height_px + 14.0,
        MARGIN_L + PANEL_W,
        MARGIN_T + height_px + 14.0
    );
    let _ = writeln!(
        body,
        r#"<text x="{}" y="{}" font-size="10" text-anchor="end">cell 1</text><text x="{}" y="{}" font-size="10" text-anchor="end">cell {n}</text>"#,
        MARGIN_L - 4.0,
        MARGIN_T + 10.0,
        MARGIN_L - 4.0,
        MARGIN_T + height_px
    );
    let key_top = MARGIN_T + height_px + 30.0;
    let key_w = PANEL_W / LEVELS as f64;
    for l in 0..LEVELS {
        let _ = writeln!(
            body,
            r#"<rect x="{:.2}" y="{key_top}" width="{key_w:.2}" height="12" fill="{}"/>"#,
            MARGIN_L + l as f64 * key_w,
            ramp(l, LEVELS)
        );
    }
    let _ = writeln!(
        body,
        r#"<text x="{MARGIN_L}" y="{}" font-size="10">0</text><text x="{}" y="{}" font-size="10" text-anchor="end">k_j = {}</text>"#,
        key_top + 26.0,
        MARGIN_L + PANEL_W,
        key_top + 26.0,
        format_tick(k_j)
    );
    Some(document(key_top + 40.0, &body, title))
}

/// White → yellow → red → black.
fn ramp(level: usize, levels: usize) -> String {
    let s = level as f64 / (levels - 1) as f64;
    let (r, g, b) = if s < 0.5 {
        let a = s / 0.5;
        (255.0, 255.0 - 40.0 * a, 255.0 * (1.0 - a))
    } else {
        let a = (s - 0.5) / 0.5;
        (255.0 * (1.0 - 0.8 * a), 215.0 * (1.0 - a), 0.0)
    };
    format!("#{:02x}{:02x}{:02x}", r as u8, g as u8, b as u8)
}

/// Single-panel line chart for sweep results.
pub fn sweep_svg(title: &str, y_label: &str, points: &[(f64, f64)]) -> String {
    stacked_panels_svg(
        title,
        &[(
            y_label,
            vec![Series {
                label: y_label,
                colour: "#1f77b4",
                points: points.to_vec(),
            }],
        )],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t: f64, field: Vec<f64>) -> StepRecord {
        StepRecord {
            t,
            k_obs: t * 0.01,
            u: 30.0 - t,
            f: 0.1,
            g: 0.2,
            lambda: t,
            d_minus: 0.3,
            r: 0.3,
            field,
        }
    }

    #[test]
    fn panels_are_well_formed() {
        let recs: Vec<_> = (0..50).map(|i| rec(i as f64, vec![])).collect();
        let svg = series_panels_svg("run", &recs);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 7);
        assert!(!svg.contains("NaN"));
        assert_eq!(svg, series_panels_svg("run", &recs));
    }

    #[test]
    fn contour_uses_fixed_scale() {
        let recs: Vec<_> = (0..10)
            .map(|i| rec(i as f64, vec![0.0, 0.1, 0.2857]))
            .collect();
        let svg = density_contour_svg("ctm", &recs, 2.0 / 7.0).unwrap();
        assert!(svg.contains(&ramp(0, 16)));
        assert!(svg.contains(&ramp(15, 16)));
        assert!(density_contour_svg("lq", &[rec(0.0, vec![])], 0.2).is_none());
    }
}
