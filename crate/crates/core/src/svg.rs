//! Self-contained SVG rendering of a reliability diagram and a confidence
//! histogram. Every bar carries its exact value in a `data-value` attribute.

use std::fmt::Write;

use crate::calibration::EvaluationReport;

const PANEL_W: f64 = 360.0;
const PANEL_H: f64 = 260.0;
const MARGIN: f64 = 40.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

struct Panel {
    x0: f64,
    y0: f64,
}

impl Panel {
    fn plot_w(&self) -> f64 {
        PANEL_W - 2.0 * MARGIN
    }

    fn plot_h(&self) -> f64 {
        PANEL_H - 2.0 * MARGIN
    }

    fn left(&self) -> f64 {
        self.x0 + MARGIN
    }

    fn bottom(&self) -> f64 {
        self.y0 + PANEL_H - MARGIN
    }

    fn frame(&self, out: &mut String, title: &str, x_label: &str, y_label: &str, y_max: &str) {
        let (l, b) = (self.left(), self.bottom());
        let (w, h) = (self.plot_w(), self.plot_h());
        let _ = writeln!(
            out,
            r##"<rect x="{l}" y="{}" width="{w}" height="{h}" fill="none" stroke="#444"/>"##,
            b - h
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{}</text>"#,
            l + w / 2.0,
            self.y0 + MARGIN - 12.0,
            escape(title)
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="11">{}</text>"#,
            l + w / 2.0,
            b + 28.0,
            escape(x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="11" transform="rotate(-90 {} {})">{}</text>"#,
            l - 26.0,
            b - h / 2.0,
            l - 26.0,
            b - h / 2.0,
            escape(y_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="end" font-size="10">0</text>"#,
            l - 4.0,
            b
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="end" font-size="10">{}</text>"#,
            l - 4.0,
            b - h + 8.0,
            escape(y_max)
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="end" font-size="10">1</text>"#,
            l + w,
            b + 12.0
        );
    }
}

/// Renders both charts side by side.
pub fn render_report(report: &EvaluationReport, title: &str) -> String {
    let rows = report.reliability_rows();
    let q = rows.len().max(1) as f64;
    let width = 2.0 * PANEL_W;
    let height = PANEL_H + 30.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{} (accuracy {:.4}, ECE {:.1}%)</text>"#,
        width / 2.0,
        escape(title),
        report.accuracy,
        100.0 * report.ece
    );

    let rel = Panel { x0: 0.0, y0: 30.0 };
    rel.frame(
        &mut out,
        "Reliability diagram",
        "confidence",
        "accuracy / confidence",
        "1",
    );
    let (l, b, w, h) = (rel.left(), rel.bottom(), rel.plot_w(), rel.plot_h());
    let _ = writeln!(
        out,
        r##"<line x1="{l}" y1="{b}" x2="{}" y2="{}" stroke="#999" stroke-dasharray="4 3"/>"##,
        l + w,
        b - h
    );
    let slot = w / q;
    let bar = slot * 0.42;
    let _ = writeln!(out, r#"<g id="reliability">"#);
    for (i, r) in rows.iter().enumerate() {
        let x = l + i as f64 * slot + slot * 0.08;
        for (class, value, color, dx) in [
            ("acc", r.acc, "#3b6fb6", 0.0),
            ("con", r.con, "#e08a2c", bar),
        ] {
            let bh = value * h;
            let _ = writeln!(
                out,
                r#"<rect class="{class}" data-bin="{i}" data-value="{value}" x="{:.3}" y="{:.3}" width="{bar:.3}" height="{bh:.3}" fill="{color}"/>"#,
                x + dx,
                b - bh
            );
        }
    }
    let _ = writeln!(out, "</g>");

    let counts = report.histogram();
    let max_count = counts.iter().copied().max().unwrap_or(0).max(1);
    let hist = Panel {
        x0: PANEL_W,
        y0: 30.0,
    };
    hist.frame(
        &mut out,
        "Prediction distribution",
        "confidence",
        "count",
        &max_count.to_string(),
    );
    let (l, b, h) = (hist.left(), hist.bottom(), hist.plot_h());
    let _ = writeln!(out, r#"<g id="histogram">"#);
    for (i, &c) in counts.iter().enumerate() {
        let bh = c as f64 / max_count as f64 * h;
        let _ = writeln!(
            out,
            r##"<rect class="count" data-bin="{i}" data-value="{c}" x="{:.3}" y="{:.3}" width="{:.3}" height="{bh:.3}" fill="#5a9e6f"/>"##,
            l + i as f64 * slot + slot * 0.08,
            b - bh,
            slot * 0.84
        );
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(
        out,
        r##"<g font-size="10"><rect x="{}" y="{}" width="10" height="10" fill="#3b6fb6"/><text x="{}" y="{}">accuracy</text><rect x="{}" y="{}" width="10" height="10" fill="#e08a2c"/><text x="{}" y="{}">confidence</text></g>"##,
        rel.left() + 6.0,
        rel.bottom() - rel.plot_h() + 6.0,
        rel.left() + 20.0,
        rel.bottom() - rel.plot_h() + 15.0,
        rel.left() + 6.0,
        rel.bottom() - rel.plot_h() + 20.0,
        rel.left() + 20.0,
        rel.bottom() - rel.plot_h() + 29.0
    );
    out.push_str("</svg>\n");
    out
}
