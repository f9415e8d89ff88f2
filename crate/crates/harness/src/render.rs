//! SVG rendering of scenarios and trajectories.

use std::fmt::Write;

use crowdgen_core::world::{Bounds, Scenario, TrajectoryLog};
use crowdgen_core::Vec2;

/// Agent colors, indexed by agent id modulo the length.
pub const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOptions {
    pub width: f64,
    pub height: f64,
    pub margin: f64,
    /// Per-agent waypoint lists drawn as dashed lines.
    pub waypoints: Option<Vec<Vec<Vec2>>>,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            width: 800.0,
            height: 800.0,
            margin: 20.0,
            waypoints: None,
        }
    }
}

/// World → viewport map: uniform scale fitting the bounds inside the margins,
/// y flipped so that world up is screen up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewTransform {
    pub scale: f64,
    pub bounds: Bounds,
    pub height: f64,
    pub margin: f64,
}

impl ViewTransform {
    pub fn new(bounds: Bounds, opts: &RenderOptions) -> Self {
        let sx = (opts.width - 2.0 * opts.margin) / bounds.width().max(1e-9);
        let sy = (opts.height - 2.0 * opts.margin) / bounds.height().max(1e-9);
        ViewTransform {
            scale: sx.min(sy),
            bounds,
            height: opts.height,
            margin: opts.margin,
        }
    }

    /// `px = margin + (x - xmin) s`, `py = height - margin - (y - ymin) s`.
    pub fn apply(&self, p: Vec2) -> (f64, f64) {
        (
            self.margin + (p.x - self.bounds.min.x) * self.scale,
            self.height - self.margin - (p.y - self.bounds.min.y) * self.scale,
        )
    }
}

fn points(t: &ViewTransform, pts: impl IntoIterator<Item = Vec2>) -> String {
    let mut s = String::new();
    for (i, p) in pts.into_iter().enumerate() {
        let (x, y) = t.apply(p);
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{x:.2},{y:.2}");
    }
    s
}

pub fn render_svg(scenario: &Scenario, logs: &[TrajectoryLog], opts: &RenderOptions) -> String {
    let t = ViewTransform::new(scenario.bounds, opts);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = opts.width,
        h = opts.height
    );
    let (x0, y1) = t.apply(scenario.bounds.min);
    let (x1, y0) = t.apply(scenario.bounds.max);
    let _ = writeln!(
        out,
        r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y1 - y0
    );
    for o in &scenario.obstacles {
        let _ = writeln!(
            out,
            r##"<polygon points="{}" fill="#555555" stroke="black"/>"##,
            points(&t, o.vertices().iter().copied())
        );
    }
    if let Some(wps) = &opts.waypoints {
        for (i, w) in wps.iter().enumerate() {
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-dasharray="4 3" stroke-width="1"/>"#,
                points(&t, w.iter().copied()),
                PALETTE[i % PALETTE.len()]
            );
        }
    }
    for log in logs {
        for a in &log.agents {
            if a.records.len() < 2 {
                continue;
            }
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
                points(&t, a.records.iter().map(|r| r.position)),
                PALETTE[a.agent_id % PALETTE.len()]
            );
        }
    }
    for (i, task) in scenario.tasks.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let (sx, sy) = t.apply(task.start);
        let _ = writeln!(
            out,
            r#"<circle cx="{sx:.2}" cy="{sy:.2}" r="{:.2}" fill="{color}"/>"#,
            (task.radius * t.scale).max(1.0)
        );
        let (gx, gy) = t.apply(task.goal);
        let k = (task.radius * t.scale).max(2.0);
        let _ = writeln!(
            out,
            r#"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="{color}"/>"#,
            gx,
            gy - k,
            gx - k,
            gy + k,
            gx + k,
            gy + k
        );
    }
    out.push_str("</svg>\n");
    out
}
