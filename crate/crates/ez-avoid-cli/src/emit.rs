//! Trajectory file emission: CSV (node and dense tables), JSON (full
//! report), and deterministic SVG plots with zone snapshots.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use ez_avoid::ez::rho_general;
use ez_avoid::scenario::{ScenarioKind, SolveReport, TrajectorySample};

use crate::config::Format;

/// Twelve significant digits, deterministic across runs.
pub fn sig12(v: f64) -> String {
    format!("{v:.11e}")
}

const CSV_HEADER: &str = "t,x,y,psi,d,rho_max,c,g_ez";

fn csv_table(samples: &[TrajectorySample]) -> String {
    let mut out = String::with_capacity(samples.len() * 128);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for s in samples {
        let row = [s.t, s.x, s.y, s.psi, s.d, s.rho_max, s.c, s.g_ez]
            .map(sig12)
            .join(",");
        out.push_str(&row);
        out.push('\n');
    }
    out
}

/// Write the report in one format under `base` (a path without extension):
/// CSV produces `<base>_nodes.csv` and `<base>_dense.csv`, JSON `<base>.json`,
/// SVG `<base>.svg`. Reports with no trajectory samples are rejected.
pub fn emit_trajectory(report: &SolveReport, format: Format, base: &Path) -> io::Result<()> {
    if report.nodes.is_empty() || report.dense.is_empty() {
        return Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            "refusing to emit an empty trajectory",
        ));
    }
    match format {
        Format::Csv => {
            fs::write(
                base.with_file_name(format!(
                    "{}_nodes.csv",
                    base.file_name().unwrap_or_default().to_string_lossy()
                )),
                csv_table(&report.nodes),
            )?;
            fs::write(
                base.with_file_name(format!(
                    "{}_dense.csv",
                    base.file_name().unwrap_or_default().to_string_lossy()
                )),
                csv_table(&report.dense),
            )?;
        }
        Format::Json => {
            let mut text = serde_json::to_string_pretty(report)?;
            text.push('\n');
            fs::write(base.with_extension("json"), text)?;
        }
        Format::Svg => {
            let label = scenario_label(report);
            fs::write(base.with_extension("svg"), render_svg(&[(label, report)]))?;
        }
    }
    Ok(())
}

fn scenario_label(report: &SolveReport) -> String {
    match report.spec.kind {
        ScenarioKind::A => "A".into(),
        ScenarioKind::B => "B".into(),
        ScenarioKind::C => match report.spec.k_ez {
            Some(k) => format!("C k={k}"),
            None => "C".into(),
        },
        ScenarioKind::D => "D".into(),
    }
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

/// Nodes where a zone snapshot is drawn: where the hard constraint is
/// near-active for the avoidance scenario, where the penalty is nonzero
/// for the penalized ones, never for the unconstrained one.
fn snapshot_nodes(report: &SolveReport) -> Vec<&TrajectorySample> {
    report
        .nodes
        .iter()
        .filter(|s| match report.spec.kind {
            ScenarioKind::A => false,
            ScenarioKind::B => s.c >= -1e-4,
            ScenarioKind::C | ScenarioKind::D => s.g_ez > 0.0,
        })
        .collect()
}

/// Render one SVG with all given trajectories, start/goal markers, and the
/// instantaneous cardioid outline at qualifying nodes. Fully deterministic.
pub fn render_svg(reports: &[(String, &SolveReport)]) -> String {
    let mut min_x = f64::INFINITY;
    let mut max_x = f64::NEG_INFINITY;
    let mut min_y = f64::INFINITY;
    let mut max_y = f64::NEG_INFINITY;
    let mut extend = |x: f64, y: f64| {
        min_x = min_x.min(x);
        max_x = max_x.max(x);
        min_y = min_y.min(y);
        max_y = max_y.max(y);
    };
    extend(0.0, 0.0);
    let mut cardioids: Vec<Vec<(f64, f64)>> = Vec::new();
    for (_, report) in reports {
        for s in &report.dense {
            extend(s.x, s.y);
        }
        for node in snapshot_nodes(report) {
            let lambda = node.y.atan2(node.x);
            let xi = ez_avoid::ez::wrap_angle(node.psi - lambda - std::f64::consts::PI);
            let mut ring = Vec::with_capacity(129);
            for k in 0..=128 {
                let theta = -std::f64::consts::PI
                    + 2.0 * std::f64::consts::PI * k as f64 / 128.0;
                let r = rho_general(theta, lambda, xi, &report.spec.ez);
                let (px, py) = (r * theta.cos(), r * theta.sin());
                extend(px, py);
                ring.push((px, py));
            }
            cardioids.push(ring);
        }
    }

    let span = (max_x - min_x).max(max_y - min_y).max(1e-9);
    let pad = 0.08 * span;
    min_x -= pad;
    max_x += pad;
    min_y -= pad;
    max_y += pad;
    let width = 640.0;
    let scale = width / (max_x - min_x);
    let height = ((max_y - min_y) * scale).ceil();
    let sx = |x: f64| (x - min_x) * scale;
    let sy = |y: f64| (max_y - y) * scale;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect width="{width}" height="{height}" fill="white"/>"#
    );
    // axes through the zone origin
    let _ = writeln!(
        svg,
        r#"<line x1="{:.2}" y1="0" x2="{:.2}" y2="{height}" stroke="#dddddd" stroke-width="1"/>"#,
        sx(0.0),
        sx(0.0)
    );
    let _ = writeln!(
        svg,
        r#"<line x1="0" y1="{:.2}" x2="{width}" y2="{:.2}" stroke="#dddddd" stroke-width="1"/>"#,
        sy(0.0),
        sy(0.0)
    );
    let _ = writeln!(
        svg,
        r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#444444"/>"#,
        sx(0.0),
        sy(0.0)
    );

    for ring in &cardioids {
        let pts: Vec<String> = ring
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="#bbbbbb" stroke-width="0.8" opacity="0.7"/>"#,
            pts.join(" ")
        );
    }

    for (i, (label, report)) in reports.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = report
            .dense
            .iter()
            .map(|s| format!("{:.2},{:.2}", sx(s.x), sy(s.y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.6"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(
            svg,
            r#"<text x="8" y="{:.1}" font-family="monospace" font-size="12" fill="{color}">{label} (tf = {:.4})</text>"#,
            16.0 + 14.0 * i as f64,
            report.tf
        );
    }

    // start and goal markers come from the first report (shared geometry)
    if let Some((_, report)) = reports.first() {
        let (x0, xf) = (report.spec.x0, report.spec.xf);
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="none" stroke="black" stroke-width="1.5"/>"#,
            sx(x0.x),
            sy(x0.y)
        );
        let (gx, gy) = (sx(xf.x), sy(xf.y));
        let _ = writeln!(
            svg,
            r#"<path d="M {:.2} {:.2} L {:.2} {:.2} M {:.2} {:.2} L {:.2} {:.2}" stroke="black" stroke-width="1.5"/>"#,
            gx - 4.0,
            gy - 4.0,
            gx + 4.0,
            gy + 4.0,
            gx - 4.0,
            gy + 4.0,
            gx + 4.0,
            gy - 4.0
        );
    }

    svg.push_str("</svg>\n");
    svg
}
