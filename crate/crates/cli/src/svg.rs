//! F1-versus-samples line chart as a standalone SVG document.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    /// `(cumulative samples, F1)` in plotting order.
    pub points: Vec<(f64, f64)>,
}

fn color(name: &str) -> &'static str {
    match name {
        "random" => "#1f77b4",
        "uncertainty" => "#d62728",
        "coreset" => "#2ca02c",
        _ => "#7f7f7f",
    }
}

/// Tick spacing from {1, 2, 5} × 10^k giving at most five intervals.
fn tick_step(max: f64) -> f64 {
    if max <= 0.0 {
        return 1.0;
    }
    let raw = max / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders one polyline per series on a `[0, x_max] × [0, 1]` frame, plus a
/// dashed horizontal line at `reference` when given.
pub fn f1_curve(series: &[Series], reference: Option<(String, f64)>) -> String {
    let data_max = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0))
        .fold(0.0, f64::max);
    let step = tick_step(data_max);
    let x_max = ((data_max / step).ceil() * step).max(step);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + x / x_max * plot_w;
    let py = |y: f64| TOP + (1.0 - y.clamp(0.0, 1.0)) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);

    // grid and ticks
    let mut k = 0;
    loop {
        let x = k as f64 * step;
        if x > x_max + step * 1e-9 {
            break;
        }
        let _ = writeln!(
            s,
            r##"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="#e0e0e0"/>"##,
            px(x),
            TOP,
            TOP + plot_h
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            px(x),
            TOP + plot_h + 18.0,
            x
        );
        k += 1;
    }
    for j in 0..=5 {
        let y = j as f64 * 0.2;
        let _ = writeln!(
            s,
            r##"<line x1="{0:.2}" y1="{1:.2}" x2="{2:.2}" y2="{1:.2}" stroke="#e0e0e0"/>"##,
            LEFT,
            py(y),
            LEFT + plot_w
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{:.1}</text>"#,
            LEFT - 8.0,
            py(y) + 4.0,
            y
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">cumulative samples</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">F1</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    let mut legend_y = TOP + 10.0;
    let legend_x = LEFT + plot_w + 16.0;
    if let Some((label, f1)) = &reference {
        let _ = writeln!(
            s,
            r#"<line x1="{0:.2}" y1="{1:.2}" x2="{2:.2}" y2="{1:.2}" stroke="black" stroke-dasharray="6 4"/>"#,
            LEFT,
            py(*f1),
            LEFT + plot_w
        );
        let _ = writeln!(
            s,
            r#"<line x1="{0:.2}" y1="{1:.2}" x2="{2:.2}" y2="{1:.2}" stroke="black" stroke-dasharray="6 4"/><text x="{3:.2}" y="{4:.2}">{5} ({6:.3})</text>"#,
            legend_x,
            legend_y,
            legend_x + 20.0,
            legend_x + 26.0,
            legend_y + 4.0,
            escape(label),
            f1
        );
        legend_y += 18.0;
    }
    for series in series {
        let c = color(&series.name);
        let pts: Vec<String> = series
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="2"/>"#,
            pts.join(" ")
        );
        for &(x, y) in &series.points {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{c}"/>"#, px(x), py(y));
        }
        let _ = writeln!(
            s,
            r#"<line x1="{0:.2}" y1="{1:.2}" x2="{2:.2}" y2="{1:.2}" stroke="{c}" stroke-width="2"/><text x="{3:.2}" y="{4:.2}">{5}</text>"#,
            legend_x,
            legend_y,
            legend_x + 20.0,
            legend_x + 26.0,
            legend_y + 4.0,
            escape(&series.name)
        );
        legend_y += 18.0;
    }
    s.push_str("</svg>\n");
    s
}
