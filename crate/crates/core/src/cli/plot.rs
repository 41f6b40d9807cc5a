use std::fmt::Write as _;

use crate::verify::ConvergenceReport;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;

/// Name, colour and `(h, error)` points.
type Series = (&'static str, &'static str, Vec<(f64, f64)>);

/// Log-log chart of the three error columns against `h`, with a slope-0.5
/// reference line through the first state error.
pub fn loglog_svg(report: &ConvergenceReport) -> String {
    let series: [Series; 3] = [
        (
            "err_y",
            "#1f77b4",
            report.rows.iter().map(|r| (r.h, r.err_y)).collect(),
        ),
        (
            "err_z",
            "#d62728",
            report.rows.iter().map(|r| (r.h, r.err_z)).collect(),
        ),
        (
            "err_u",
            "#2ca02c",
            report.rows.iter().map(|r| (r.h, r.err_u)).collect(),
        ),
    ];
    let mut reference = Vec::new();
    if let (Some(first), Some(last)) = (report.rows.first(), report.rows.last()) {
        reference.push((first.h, first.err_y));
        reference.push((last.h, first.err_y * (last.h / first.h).sqrt()));
    }

    let points = series
        .iter()
        .flat_map(|(_, _, pts)| pts.iter())
        .chain(&reference)
        .filter(|(x, y)| *x > 0.0 && *y > 0.0);
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in points {
        x0 = x0.min(x.log10());
        x1 = x1.max(x.log10());
        y0 = y0.min(y.log10());
        y1 = y1.max(y.log10());
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (-1.0, 0.0, -1.0, 0.0);
    }
    let (x0, x1) = (x0.floor(), x1.ceil().max(x0.floor() + 1.0));
    let (y0, y1) = (y0.floor(), y1.ceil().max(y0.floor() + 1.0));
    let sx = |x: f64| MARGIN + (x.log10() - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y.log10() - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        s,
        r#"<path d="M {left} {top} L {left} {bottom} L {right} {bottom}" stroke="black" fill="none"/>"#
    );
    for e in (x0 as i32)..=(x1 as i32) {
        let x = sx(10f64.powi(e));
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{bottom}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" font-size="12" text-anchor="middle">1e{e}</text>"#,
            bottom + 5.0,
            bottom + 20.0
        );
    }
    for e in (y0 as i32)..=(y1 as i32) {
        let y = sy(10f64.powi(e));
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{left}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" font-size="12" text-anchor="end">1e{e}</text>"#,
            left - 5.0,
            left - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle">h</text>"#,
        WIDTH / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{:.2}" font-size="14" text-anchor="middle" transform="rotate(-90 15 {:.2})">error</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );

    if reference.len() == 2 {
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="6 4"/>"#,
            sx(reference[0].0),
            sy(reference[0].1),
            sx(reference[1].0),
            sy(reference[1].1)
        );
    }
    for (name, color, pts) in &series {
        let valid: Vec<_> = pts.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).collect();
        if valid.is_empty() {
            continue;
        }
        let path: Vec<String> = valid
            .iter()
            .map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" stroke="{color}" fill="none" data-series="{name}"/>"#,
            path.join(" ")
        );
        for (x, y) in valid {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                sx(*x),
                sy(*y)
            );
        }
    }
    let legend = [
        ("err_y", "#1f77b4"),
        ("err_z", "#d62728"),
        ("err_u", "#2ca02c"),
        ("slope 0.5", "gray"),
    ];
    for (j, (name, color)) in legend.iter().enumerate() {
        let y = top + 16.0 * j as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{:.2}" y="{:.2}" width="10" height="10" fill="{color}"/><text x="{:.2}" y="{:.2}" font-size="12">{name}</text>"#,
            right - 90.0,
            y - 9.0,
            right - 75.0,
            y
        );
    }
    s.push_str("</svg>\n");
    s
}
