//! Self-contained SVG rendering of one or more traces: a PV panel with
//! the setpoint overlaid and a drive panel underneath. Pure text
//! generation with fixed-precision coordinates, so equal traces give
//! byte-identical files.

use crate::error::{Error, Result};
use crate::simloop::SimTrace;
use std::fmt::Write as _;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 640.0;
const MARGIN_LEFT: f64 = 62.0;
const MARGIN_RIGHT: f64 = 18.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
const SETPOINT_COLOR: &str = "#777777";

struct Panel {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    t_lo: f64,
    t_hi: f64,
    v_lo: f64,
    v_hi: f64,
}

impl Panel {
    fn x(&self, t: f64) -> f64 {
        self.x0 + (t - self.t_lo) / (self.t_hi - self.t_lo) * self.w
    }

    fn y(&self, v: f64) -> f64 {
        self.y0 + self.h - (v - self.v_lo) / (self.v_hi - self.v_lo) * self.h
    }

    fn polyline(&self, t: &[f64], v: &[f64]) -> String {
        let mut pts = String::with_capacity(t.len() * 14);
        for (a, b) in t.iter().zip(v) {
            let _ = write!(pts, "{:.2},{:.2} ", self.x(*a), self.y(*b));
        }
        pts.pop();
        pts
    }
}

/// Value range for a panel: [0, 100] widened to cover the data, rounded
/// out to multiples of 10 so tick labels stay clean.
fn value_range(series: &[&[f64]]) -> (f64, f64) {
    let mut lo: f64 = 0.0;
    let mut hi: f64 = 100.0;
    for s in series {
        for &v in *s {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    ((lo / 10.0).floor() * 10.0, (hi / 10.0).ceil() * 10.0)
}

fn fmt_tick(v: f64) -> String {
    if (v - v.round()).abs() < 1e-9 {
        format!("{:.0}", v)
    } else {
        format!("{:.1}", v)
    }
}

fn draw_panel(
    out: &mut String,
    panel: &Panel,
    title: &str,
    y_label: &str,
    x_ticks: bool,
) {
    let _ = writeln!(
        out,
        r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#333333" stroke-width="1"/>"##,
        panel.x0, panel.y0, panel.w, panel.h
    );
    let _ = writeln!(
        out,
        r##"<text x="{:.2}" y="{:.2}" font-size="14" fill="#222222">{}</text>"##,
        panel.x0,
        panel.y0 - 8.0,
        title
    );
    // Horizontal gridlines with value labels.
    for i in 0..=5 {
        let v = panel.v_lo + (panel.v_hi - panel.v_lo) * i as f64 / 5.0;
        let y = panel.y(v);
        if i > 0 && i < 5 {
            let _ = writeln!(
                out,
                r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd" stroke-width="1"/>"##,
                panel.x0,
                panel.x0 + panel.w
            );
        }
        let _ = writeln!(
            out,
            r##"<text x="{:.2}" y="{:.2}" font-size="11" fill="#444444" text-anchor="end">{}</text>"##,
            panel.x0 - 6.0,
            y + 4.0,
            fmt_tick(v)
        );
    }
    // Vertical gridlines; time labels only on the requesting panel.
    for i in 0..=6 {
        let t = panel.t_lo + (panel.t_hi - panel.t_lo) * i as f64 / 6.0;
        let x = panel.x(t);
        if i > 0 && i < 6 {
            let _ = writeln!(
                out,
                r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#dddddd" stroke-width="1"/>"##,
                panel.y0,
                panel.y0 + panel.h
            );
        }
        if x_ticks {
            let _ = writeln!(
                out,
                r##"<text x="{x:.2}" y="{:.2}" font-size="11" fill="#444444" text-anchor="middle">{}</text>"##,
                panel.y0 + panel.h + 16.0,
                fmt_tick(t)
            );
        }
    }
    // Rotated axis title.
    let _ = writeln!(
        out,
        r##"<text x="16" y="{:.2}" font-size="12" fill="#222222" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"##,
        panel.y0 + panel.h / 2.0,
        panel.y0 + panel.h / 2.0,
        y_label
    );
}

/// Renders labeled traces into one self-contained SVG document with a PV
/// panel (setpoint from the first trace, dashed) and a drive panel.
/// Deterministic: equal inputs yield byte-identical output.
pub fn emit_plot(traces: &[(&str, &SimTrace)]) -> Result<String> {
    if traces.is_empty() {
        return Err(Error::Argument("plot needs at least one trace".into()));
    }
    if traces.len() > COLORS.len() {
        return Err(Error::Argument(format!("plot supports at most {} traces", COLORS.len())));
    }
    if traces.iter().any(|(_, tr)| tr.is_empty()) {
        return Err(Error::Argument("plot needs non-empty traces".into()));
    }

    let t_lo = traces.iter().map(|(_, tr)| tr.t[0]).fold(f64::MAX, f64::min);
    let t_hi = traces.iter().map(|(_, tr)| *tr.t.last().unwrap()).fold(f64::MIN, f64::max);
    if !(t_hi > t_lo) {
        return Err(Error::Argument("plot needs a nonzero time span".into()));
    }

    let pv_series: Vec<&[f64]> = traces
        .iter()
        .flat_map(|(_, tr)| [tr.pv.as_slice(), tr.setpoint.as_slice()])
        .collect();
    let (pv_lo, pv_hi) = value_range(&pv_series);
    let u_series: Vec<&[f64]> = traces.iter().map(|(_, tr)| tr.u.as_slice()).collect();
    let (u_lo, u_hi) = value_range(&u_series);

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let pv_panel = Panel { x0: MARGIN_LEFT, y0: 34.0, w: plot_w, h: 252.0, t_lo, t_hi, v_lo: pv_lo, v_hi: pv_hi };
    let u_panel = Panel { x0: MARGIN_LEFT, y0: 352.0, w: plot_w, h: 252.0, t_lo, t_hi, v_lo: u_lo, v_hi: u_hi };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r##"<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>"##);

    draw_panel(&mut out, &pv_panel, "process variable", "PV (% of span)", false);
    draw_panel(&mut out, &u_panel, "controller output", "u (%)", true);
    let _ = writeln!(
        out,
        r##"<text x="{:.2}" y="{:.2}" font-size="12" fill="#222222" text-anchor="middle">t (s)</text>"##,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 6.0
    );

    // Setpoint from the first trace, dashed, PV panel only.
    let (_, first) = traces[0];
    let _ = writeln!(
        out,
        r##"<polyline fill="none" stroke="{SETPOINT_COLOR}" stroke-width="1.2" stroke-dasharray="6 4" points="{}"/>"##,
        pv_panel.polyline(&first.t, &first.setpoint)
    );
    for (i, (_, tr)) in traces.iter().enumerate() {
        let _ = writeln!(
            out,
            r##"<polyline class="pv-trace" fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"##,
            COLORS[i],
            pv_panel.polyline(&tr.t, &tr.pv)
        );
    }
    for (i, (_, tr)) in traces.iter().enumerate() {
        let _ = writeln!(
            out,
            r##"<polyline class="u-trace" fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"##,
            COLORS[i],
            u_panel.polyline(&tr.t, &tr.u)
        );
    }

    // Legend in the top-right corner of the PV panel.
    let legend_x = MARGIN_LEFT + plot_w - 170.0;
    let mut legend_y = pv_panel.y0 + 16.0;
    for (i, (label, _)) in traces.iter().enumerate() {
        let _ = writeln!(
            out,
            r##"<line x1="{legend_x:.2}" y1="{legend_y:.2}" x2="{:.2}" y2="{legend_y:.2}" stroke="{}" stroke-width="2"/>"##,
            legend_x + 26.0,
            COLORS[i]
        );
        let _ = writeln!(
            out,
            r##"<text x="{:.2}" y="{:.2}" font-size="12" fill="#222222">{}</text>"##,
            legend_x + 32.0,
            legend_y + 4.0,
            label
        );
        legend_y += 18.0;
    }
    let _ = writeln!(
        out,
        r##"<line x1="{legend_x:.2}" y1="{legend_y:.2}" x2="{:.2}" y2="{legend_y:.2}" stroke="{SETPOINT_COLOR}" stroke-width="1.2" stroke-dasharray="6 4"/>"##,
        legend_x + 26.0
    );
    let _ = writeln!(
        out,
        r##"<text x="{:.2}" y="{:.2}" font-size="12" fill="#222222">setpoint</text>"##,
        legend_x + 32.0,
        legend_y + 4.0
    );

    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::builtin;
    use crate::simloop::run_closed_loop;

    fn short_trace() -> SimTrace {
        let mut s = builtin("level-pi").unwrap();
        s.duration = 20.0;
        run_closed_loop(&s).unwrap()
    }

    #[test]
    fn output_is_deterministic() {
        let tr = short_trace();
        let a = emit_plot(&[("loop", &tr)]).unwrap();
        let b = emit_plot(&[("loop", &tr)]).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn same_trace_twice_gives_identical_polylines() {
        let tr = short_trace();
        let svg = emit_plot(&[("one", &tr), ("two", &tr)]).unwrap();
        let pv_points: Vec<&str> = svg
            .lines()
            .filter(|l| l.contains("pv-trace"))
            .map(|l| l.split("points=\"").nth(1).unwrap())
            .collect();
        assert_eq!(pv_points.len(), 2);
        assert_eq!(pv_points[0], pv_points[1]);
    }

    #[test]
    fn panels_are_labeled() {
        let tr = short_trace();
        let svg = emit_plot(&[("loop", &tr)]).unwrap();
        for needle in ["PV (% of span)", "u (%)", "t (s)", "setpoint", "loop"] {
            assert!(svg.contains(needle), "missing {needle}");
        }
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        assert!(emit_plot(&[]).is_err());
        let tr = short_trace();
        let empty = SimTrace { t: vec![], ..tr.clone() };
        assert!(emit_plot(&[("x", &empty)]).is_err());
    }

    #[test]
    fn range_widens_to_cover_out_of_band_data() {
        let mut tr = short_trace();
        tr.u[5] = 130.0;
        let svg = emit_plot(&[("loop", &tr)]).unwrap();
        assert!(svg.contains(">130<"), "u axis should stretch to 130");
    }
}
