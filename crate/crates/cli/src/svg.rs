//! Minimal hand-built SVG charts. Output contains no timestamps or other
//! environment-dependent bytes, so files are reproducible.

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_L: f64 = 60.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
];

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

/// Line chart with one polyline per series and a right-side legend.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).collect();
    let (x_min, x_max) = bounds(all.iter().map(|p| p.0));
    let (y_min, y_max) = bounds(all.iter().map(|p| p.1));
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = |x: f64| MARGIN_L + (x - x_min) / (x_max - x_min).max(1e-12) * plot_w;
    let sy = |y: f64| MARGIN_T + plot_h - (y - y_min) / (y_max - y_min).max(1e-12) * plot_h;

    let mut svg = header(title);
    svg.push_str(&axes(x_label, y_label, x_min, x_max, y_min, y_max));
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{},{}", fmt(sx(x)), fmt(sy(y))))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n",
            pts.join(" ")
        ));
        for &(x, y) in &s.points {
            svg.push_str(&format!(
                "<circle cx=\"{}\" cy=\"{}\" r=\"2.5\" fill=\"{color}\"/>\n",
                fmt(sx(x)),
                fmt(sy(y))
            ));
        }
        let ly = MARGIN_T + 16.0 * i as f64;
        svg.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{color}\"/>\n",
            fmt(WIDTH - MARGIN_R + 10.0),
            fmt(ly)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\">{}</text>\n",
            fmt(WIDTH - MARGIN_R + 25.0),
            fmt(ly + 9.0),
            escape(&s.name)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Bar chart over labeled values (e.g. one bar per layer weight).
pub fn bar_chart(title: &str, x_label: &str, y_label: &str, values: &[(String, f64)]) -> String {
    let y_max = values.iter().map(|(_, v)| *v).fold(0.0f64, f64::max).max(1e-12);
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let n = values.len().max(1) as f64;
    let slot = plot_w / n;
    let bar_w = slot * 0.7;

    let mut svg = header(title);
    svg.push_str(&axes(x_label, y_label, 0.0, n, 0.0, y_max));
    for (i, (label, v)) in values.iter().enumerate() {
        let h = v / y_max * plot_h;
        let x = MARGIN_L + slot * i as f64 + (slot - bar_w) / 2.0;
        let y = MARGIN_T + plot_h - h;
        svg.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>\n",
            fmt(x),
            fmt(y),
            fmt(bar_w),
            fmt(h),
            PALETTE[0]
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"middle\">{}</text>\n",
            fmt(x + bar_w / 2.0),
            fmt(MARGIN_T + plot_h + 14.0),
            escape(label)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for v in values {
        min = min.min(v);
        max = max.max(v);
    }
    if !min.is_finite() || !max.is_finite() {
        return (0.0, 1.0);
    }
    if min == max {
        (min - 0.5, max + 0.5)
    } else {
        (min, max)
    }
}

fn header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"sans-serif\">\n<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"22\" font-size=\"15\" text-anchor=\"middle\">{}</text>\n",
        fmt(WIDTH / 2.0),
        escape(title)
    )
}

fn axes(x_label: &str, y_label: &str, x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> String {
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let x0 = MARGIN_L;
    let y0 = MARGIN_T + plot_h;
    format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{}\" y2=\"{y0}\" stroke=\"black\"/>\n\
         <line x1=\"{x0}\" y1=\"{}\" x2=\"{x0}\" y2=\"{y0}\" stroke=\"black\"/>\n\
         <text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n\
         <text x=\"18\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{}</text>\n\
         <text x=\"{}\" y=\"{}\" font-size=\"10\">{}</text>\n\
         <text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{}</text>\n\
         <text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{}</text>\n\
         <text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{}</text>\n",
        fmt(MARGIN_L + plot_w),
        fmt(MARGIN_T),
        fmt(MARGIN_L + plot_w / 2.0),
        fmt(HEIGHT - 12.0),
        escape(x_label),
        fmt(MARGIN_T + plot_h / 2.0),
        fmt(MARGIN_T + plot_h / 2.0),
        escape(y_label),
        fmt(x0),
        fmt(y0 + 14.0),
        fmt_tick(x_min),
        fmt(MARGIN_L + plot_w),
        fmt(y0 + 14.0),
        fmt_tick(x_max),
        fmt(x0 - 6.0),
        fmt(y0 + 4.0),
        fmt_tick(y_min),
        fmt(x0 - 6.0),
        fmt(MARGIN_T + 4.0),
        fmt_tick(y_max),
    )
}

fn fmt_tick(v: f64) -> String {
    format!("{v:.3}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
