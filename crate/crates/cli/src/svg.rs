//! Minimal SVG line chart for risk reports: log-scaled `n` against the
//! estimate, with ±se whiskers.

use std::fmt::Write;

use metric_entropy_lab::risk::RiskReport;

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn span(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

pub fn risk_chart(report: &RiskReport, title: &str, comment: &str) -> String {
    let rows: Vec<_> = report
        .rows
        .iter()
        .filter(|r| r.n > 0 && r.estimate.is_finite())
        .collect();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, "<!-- {} -->", escape(comment));
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    if rows.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }

    let (x0, x1) = span(
        rows.iter()
            .map(|r| (r.n as f64).log10())
            .fold(f64::INFINITY, f64::min),
        rows.iter()
            .map(|r| (r.n as f64).log10())
            .fold(f64::NEG_INFINITY, f64::max),
    );
    let (y0, y1) = span(
        rows.iter()
            .map(|r| r.estimate - r.se)
            .fold(f64::INFINITY, f64::min)
            .min(0.0),
        rows.iter()
            .map(|r| r.estimate + r.se)
            .fold(f64::NEG_INFINITY, f64::max),
    );
    let px = |n: usize| LEFT + ((n as f64).log10() - x0) / (x1 - x0) * (W - LEFT - RIGHT);
    let py = |v: f64| H - BOTTOM - (v - y0) / (y1 - y0) * (H - TOP - BOTTOM);

    let _ = writeln!(
        svg,
        r#"<path d="M{LEFT},{TOP} V{} H{}" fill="none" stroke="black"/>"#,
        H - BOTTOM,
        W - RIGHT
    );
    for k in 0..=4 {
        let v = y0 + (y1 - y0) * k as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{v:.3e}</text>"#,
            LEFT - 6.0,
            py(v) + 4.0
        );
    }
    for r in &rows {
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
            px(r.n),
            H - BOTTOM + 18.0,
            r.n
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">n (log scale)</text>"#,
        (LEFT + W - RIGHT) / 2.0,
        H - 10.0
    );

    let path: Vec<String> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            format!(
                "{}{:.1},{:.1}",
                if i == 0 { 'M' } else { 'L' },
                px(r.n),
                py(r.estimate)
            )
        })
        .collect();
    let _ = writeln!(
        svg,
        r#"<path d="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#,
        path.join(" ")
    );
    for r in &rows {
        let x = px(r.n);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="steelblue"/>"#,
            py(r.estimate - r.se),
            py(r.estimate + r.se)
        );
        let _ = writeln!(
            svg,
            r#"<circle cx="{x:.1}" cy="{:.1}" r="3" fill="steelblue"/>"#,
            py(r.estimate)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use metric_entropy_lab::risk::RiskRow;

    fn row(n: usize, estimate: f64) -> RiskRow {
        RiskRow {
            n,
            estimate,
            se: 0.01,
            h: 0.5,
            delta_n: None,
            reps: 2,
        }
    }

    #[test]
    fn one_marker_per_row() {
        let report = RiskReport {
            rows: vec![row(100, 0.2), row(1000, 0.1), row(10000, 0.05)],
            seed: 1,
        };
        let svg = risk_chart(&report, "risk", "c");
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), 3);
    }

    #[test]
    fn empty_report_is_still_valid() {
        let svg = risk_chart(
            &RiskReport {
                rows: vec![],
                seed: 0,
            },
            "a<b",
            "c",
        );
        assert!(svg.contains("a&lt;b"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
