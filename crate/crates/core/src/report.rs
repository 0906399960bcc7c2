//! Deterministic rendering of subject and cohort reports as JSON, CSV and SVG.
//!
//! Numbers are written with Rust's shortest round-trip formatting (or a fixed
//! precision for SVG coordinates), so identical reports give identical bytes.

use std::fmt::Write as _;

use crate::ensemble::GRID_POINTS;
use crate::ingest::RoiLabel;
use crate::pipeline::{CohortReport, Provenance, SubjectReport};

fn pretty_json<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("report types serialize");
    out.push(b'\n');
    out
}

pub fn subject_json(report: &SubjectReport) -> Vec<u8> {
    pretty_json(report)
}

pub fn cohort_json(report: &CohortReport) -> Vec<u8> {
    pretty_json(report)
}

fn provenance_comment(p: &Provenance) -> String {
    let mut s = format!("# {} {}\n", p.tool, p.version);
    let _ = writeln!(s, "# config {}", serde_json::to_string(&p.config).unwrap_or_default());
    for h in &p.inputs {
        let _ = writeln!(s, "# input {} {} sha256={}", h.role, h.path, h.sha256);
    }
    s
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `phase_index,global,insp,exp,sd` preceded by `#` provenance lines.
pub fn curves_csv(report: &SubjectReport) -> Vec<u8> {
    let mut head = provenance_comment(&report.provenance);
    let _ = writeln!(
        head,
        "# roi {} unit {} interpolation {}",
        report.roi.as_str(),
        report.unit.symbol(),
        serde_json::to_value(report.interpolation)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default()
    );
    let mut w = csv::Writer::from_writer(head.into_bytes());
    w.write_record(["phase_index", "global", "insp", "exp", "sd"])
        .expect("in-memory write");
    let c = &report.curves;
    for k in 0..GRID_POINTS {
        w.write_record([
            k.to_string(),
            c.global.mean[k].to_string(),
            opt(c.inspiration.as_ref().map(|e| e.mean[k])),
            opt(c.expiration.as_ref().map(|e| e.mean[k])),
            c.global.sd[k].to_string(),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn cohort_csv(report: &CohortReport) -> Vec<u8> {
    let head = provenance_comment(&report.provenance);
    let mut w = csv::Writer::from_writer(head.into_bytes());
    w.write_record(["subject_id", "roi", "unit", "conv_sv", "epi_sv", "epi_sv_modulation"])
        .expect("in-memory write");
    for r in &report.pairs {
        w.write_record([
            r.subject_id.clone(),
            r.roi.as_str().to_string(),
            r.unit.symbol().to_string(),
            r.conv_sv.to_string(),
            r.epi_sv.to_string(),
            opt(r.epi_sv_modulation),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }
}

fn svg_open(title: &str, provenance: &Provenance) -> String {
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
    );
    let _ = writeln!(
        s,
        "<metadata>{}</metadata>",
        xml_escape(&serde_json::to_string(provenance).unwrap_or_default())
    );
    let _ = writeln!(s, "<title>{}</title>", xml_escape(title));
    let _ = writeln!(s, "<rect x=\"0\" y=\"0\" width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{}</text>",
        W / 2.0,
        xml_escape(title)
    );
    s
}

fn axes(s: &mut String, f: &Frame, xlabel: &str, ylabel: &str) {
    let _ = writeln!(
        s,
        "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"black\"/>",
        W - LEFT - RIGHT,
        H - TOP - BOTTOM
    );
    for (v, anchor) in [(f.y0, "end"), (f.y1, "end")] {
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"{anchor}\">{}</text>",
            LEFT - 4.0,
            f.py(v) + 3.0,
            fmt_tick(v)
        );
    }
    for v in [f.x0, f.x1] {
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">{}</text>",
            f.px(v),
            H - BOTTOM + 14.0,
            fmt_tick(v)
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{}</text>",
        LEFT + (W - LEFT - RIGHT) / 2.0,
        H - 12.0,
        xml_escape(xlabel)
    );
    let _ = writeln!(
        s,
        "<text x=\"16\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">{}</text>",
        TOP + (H - TOP - BOTTOM) / 2.0,
        TOP + (H - TOP - BOTTOM) / 2.0,
        xml_escape(ylabel)
    );
}

fn fmt_tick(v: f64) -> String {
    format!("{:.4}", v)
}

fn polyline(s: &mut String, f: &Frame, pts: &[(f64, f64)], color: &str, width: u32, extra: &str) {
    let coords: Vec<String> = pts
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
        .collect();
    let _ = writeln!(
        s,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"{width}\"{extra}/>",
        coords.join(" ")
    );
}

/// Closed cycle on phase [0, 1]: the first point is repeated at phase 1.
fn cycle_points(curve: &[f64; GRID_POINTS]) -> Vec<(f64, f64)> {
    (0..=GRID_POINTS)
        .map(|k| (k as f64 / GRID_POINTS as f64, curve[k % GRID_POINTS]))
        .collect()
}

/// Inspiration (red) and expiration (blue) ensemble curves over the global
/// curve (grey), with the zero-flow line.
pub fn curves_svg(report: &SubjectReport) -> String {
    let c = &report.curves;
    let title = format!(
        "{} flow over the cardiac cycle (SV {} {})",
        report.roi.as_str(),
        format_args!("{:.4}", report.global.sv),
        report.unit.symbol()
    );
    let mut s = svg_open(&title, &report.provenance);
    let ymax = c
        .global
        .mean
        .iter()
        .chain(c.inspiration.iter().flat_map(|e| e.mean.iter()))
        .chain(c.expiration.iter().flat_map(|e| e.mean.iter()))
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let ymax = if ymax > 0.0 { 1.1 * ymax } else { 1.0 };
    let f = Frame {
        x0: 0.0,
        x1: 1.0,
        y0: -ymax,
        y1: ymax,
    };
    axes(&mut s, &f, "cardiac phase", "flow (mL/s)");
    polyline(&mut s, &f, &[(0.0, 0.0), (1.0, 0.0)], "black", 1, " stroke-dasharray=\"4 3\"");
    polyline(&mut s, &f, &cycle_points(&c.global.mean), "#999999", 2, "");
    let mut legend = vec![("#999999", format!("global (n={})", c.global.n_cycles))];
    if let Some(e) = &c.inspiration {
        polyline(&mut s, &f, &cycle_points(&e.mean), "red", 2, "");
        legend.push(("red", format!("inspiration (n={})", e.n_cycles)));
    }
    if let Some(e) = &c.expiration {
        polyline(&mut s, &f, &cycle_points(&e.mean), "blue", 2, "");
        legend.push(("blue", format!("expiration (n={})", e.n_cycles)));
    }
    for (i, (color, text)) in legend.iter().enumerate() {
        let y = TOP + 14.0 + 14.0 * i as f64;
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{y:.2}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"{color}\">{}</text>",
            LEFT + 8.0,
            xml_escape(text)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Conv versus EPI stroke volume per subject with the identity line.
pub fn scatter_svg(report: &CohortReport, roi: RoiLabel) -> String {
    let rows: Vec<_> = report.pairs.iter().filter(|r| r.roi == roi).collect();
    let cmp = report.comparisons.iter().find(|c| c.roi == roi);
    let unit = rows.first().map(|r| r.unit.symbol()).unwrap_or("");
    let title = match cmp {
        Some(c) => format!(
            "{} stroke volume, EPI vs conv (rs={:.3}, p={:.4}; Wilcoxon p={:.4})",
            roi.as_str(),
            c.spearman.statistic,
            c.spearman.p_value,
            c.wilcoxon.p_value
        ),
        None => format!("{} stroke volume, EPI vs conv", roi.as_str()),
    };
    let mut s = svg_open(&title, &report.provenance);
    let vmax = rows
        .iter()
        .flat_map(|r| [r.conv_sv, r.epi_sv])
        .fold(0.0f64, f64::max);
    let vmax = if vmax > 0.0 { 1.1 * vmax } else { 1.0 };
    let f = Frame {
        x0: 0.0,
        x1: vmax,
        y0: 0.0,
        y1: vmax,
    };
    axes(
        &mut s,
        &f,
        &format!("conv SV ({unit})"),
        &format!("EPI SV ({unit})"),
    );
    polyline(&mut s, &f, &[(0.0, 0.0), (vmax, vmax)], "#999999", 1, " stroke-dasharray=\"4 3\"");
    for r in &rows {
        let _ = writeln!(
            s,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"black\"><title>{}</title></circle>",
            f.px(r.conv_sv),
            f.py(r.epi_sv),
            xml_escape(&r.subject_id)
        );
    }
    s.push_str("</svg>\n");
    s
}
