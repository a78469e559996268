//! Hand-rolled SVG output for the report stage. Every chart is written
//! next to a CSV holding the same data, so the SVGs are disposable
//! conveniences, not the record.
//!
//! All numbers are formatted with fixed precision and no randomness, so a
//! rerun produces byte-identical files.

use proctime_core::rng::splitmix64;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 170.0;
const MARGIN_RIGHT: f64 = 40.0;
const MARGIN_TOP: f64 = 48.0;
const MARGIN_BOTTOM: f64 = 56.0;

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Blue-to-red color for a value in [0, 1]; grey for values outside it.
fn heat_color(t: f64) -> String {
    if !(0.0..=1.0).contains(&t) {
        return "rgb(150,150,150)".to_string();
    }
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("rgb({},{},{})", lerp(59.0, 180.0), lerp(76.0, 4.0), lerp(192.0, 38.0))
}

struct Canvas {
    body: Vec<String>,
}

impl Canvas {
    fn new(title: &str) -> Canvas {
        let mut body = vec![
            format!(
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
                 viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">"
            ),
            format!("<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"),
        ];
        body.push(format!(
            "<text x=\"{}\" y=\"24\" font-size=\"16\" text-anchor=\"middle\">{}</text>",
            fmt(WIDTH / 2.0),
            escape(title)
        ));
        Canvas { body }
    }

    fn push(&mut self, element: String) {
        self.body.push(element);
    }

    fn finish(mut self) -> String {
        self.body.push("</svg>".to_string());
        self.body.join("\n") + "\n"
    }
}

/// Linear map from a data range to a pixel range, padded so points do not
/// sit on the border. Degenerate ranges widen to a unit interval.
struct Scale {
    lo: f64,
    hi: f64,
    px_lo: f64,
    px_hi: f64,
}

impl Scale {
    fn new(values: impl Iterator<Item = f64>, px_lo: f64, px_hi: f64) -> Scale {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() || !hi.is_finite() {
            lo = 0.0;
            hi = 1.0;
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        let pad = (hi - lo) * 0.05;
        Scale {
            lo: lo - pad,
            hi: hi + pad,
            px_lo,
            px_hi,
        }
    }

    fn map(&self, v: f64) -> f64 {
        self.px_lo + (v - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }

    fn ticks(&self) -> Vec<f64> {
        (0..=4)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / 4.0)
            .collect()
    }
}

fn x_axis(canvas: &mut Canvas, scale: &Scale, y: f64, label: &str) {
    canvas.push(format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        fmt(scale.px_lo),
        fmt(y),
        fmt(scale.px_hi),
        fmt(y)
    ));
    for tick in scale.ticks() {
        let x = scale.map(tick);
        canvas.push(format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
            fmt(x),
            fmt(y),
            fmt(x),
            fmt(y + 5.0)
        ));
        canvas.push(format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
            fmt(x),
            fmt(y + 18.0),
            fmt(tick)
        ));
    }
    canvas.push(format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\">{}</text>",
        fmt((scale.px_lo + scale.px_hi) / 2.0),
        fmt(y + 38.0),
        escape(label)
    ));
}

/// Horizontal bar chart, one bar per (label, non-negative value) pair, in
/// the given order from top to bottom.
pub fn bar_chart(title: &str, x_label: &str, bars: &[(String, f64)]) -> String {
    let mut canvas = Canvas::new(title);
    if bars.is_empty() {
        return canvas.finish();
    }
    let x = Scale::new(
        bars.iter().map(|b| b.1).chain(std::iter::once(0.0)),
        MARGIN_LEFT,
        WIDTH - MARGIN_RIGHT,
    );
    let plot_height = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let slot = plot_height / bars.len() as f64;
    let bar_height = (slot * 0.7).min(26.0);
    for (i, (label, value)) in bars.iter().enumerate() {
        let y = MARGIN_TOP + slot * i as f64 + (slot - bar_height) / 2.0;
        let x0 = x.map(0.0);
        let x1 = x.map(*value);
        canvas.push(format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"rgb(70,120,180)\"/>",
            fmt(x0.min(x1)),
            fmt(y),
            fmt((x1 - x0).abs()),
            fmt(bar_height)
        ));
        canvas.push(format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"end\">{}</text>",
            fmt(MARGIN_LEFT - 8.0),
            fmt(y + bar_height / 2.0 + 4.0),
            escape(label)
        ));
    }
    x_axis(&mut canvas, &x, HEIGHT - MARGIN_BOTTOM, x_label);
    canvas.finish()
}

/// One dot of a scatter or beeswarm chart. `color` is a normalized value
/// in [0, 1] rendered on a blue-to-red ramp; `None` renders grey.
#[derive(Debug, Clone, Copy)]
pub struct Dot {
    pub x: f64,
    pub y: f64,
    pub color: Option<f64>,
}

/// Scatter plot with a continuous color ramp.
pub fn scatter(title: &str, x_label: &str, y_label: &str, dots: &[Dot]) -> String {
    let mut canvas = Canvas::new(title);
    if dots.is_empty() {
        return canvas.finish();
    }
    let x = Scale::new(dots.iter().map(|d| d.x), MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let y = Scale::new(dots.iter().map(|d| d.y), HEIGHT - MARGIN_BOTTOM, MARGIN_TOP);
    for tick in y.ticks() {
        let py = y.map(tick);
        canvas.push(format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{}</text>",
            fmt(MARGIN_LEFT - 8.0),
            fmt(py + 4.0),
            fmt(tick)
        ));
        canvas.push(format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"rgb(230,230,230)\"/>",
            fmt(MARGIN_LEFT),
            fmt(py),
            fmt(WIDTH - MARGIN_RIGHT),
            fmt(py)
        ));
    }
    canvas.push(format!(
        "<text x=\"20\" y=\"{}\" font-size=\"13\" transform=\"rotate(-90 20 {})\" \
         text-anchor=\"middle\">{}</text>",
        fmt(HEIGHT / 2.0),
        fmt(HEIGHT / 2.0),
        escape(y_label)
    ));
    for dot in dots {
        let fill = dot.color.map_or_else(|| "rgb(150,150,150)".to_string(), heat_color);
        canvas.push(format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{}\" fill-opacity=\"0.75\"/>",
            fmt(x.map(dot.x)),
            fmt(y.map(dot.y)),
            fill
        ));
    }
    x_axis(&mut canvas, &x, HEIGHT - MARGIN_BOTTOM, x_label);
    canvas.finish()
}

/// Beeswarm-style summary: one horizontal band per feature (top to
/// bottom), dots at their attribution values, vertical jitter derived from
/// the dot index so output stays deterministic.
pub fn beeswarm(title: &str, x_label: &str, rows: &[(String, Vec<Dot>)]) -> String {
    let mut canvas = Canvas::new(title);
    if rows.is_empty() {
        return canvas.finish();
    }
    let x = Scale::new(
        rows.iter().flat_map(|r| r.1.iter().map(|d| d.x)),
        MARGIN_LEFT,
        WIDTH - MARGIN_RIGHT,
    );
    let plot_height = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let slot = plot_height / rows.len() as f64;
    for (i, (label, dots)) in rows.iter().enumerate() {
        let y_center = MARGIN_TOP + slot * (i as f64 + 0.5);
        canvas.push(format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"rgb(230,230,230)\"/>",
            fmt(MARGIN_LEFT),
            fmt(y_center),
            fmt(WIDTH - MARGIN_RIGHT),
            fmt(y_center)
        ));
        canvas.push(format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"end\">{}</text>",
            fmt(MARGIN_LEFT - 8.0),
            fmt(y_center + 4.0),
            escape(label)
        ));
        for (j, dot) in dots.iter().enumerate() {
            // Deterministic jitter in +-0.35 of the band height.
            let h = splitmix64(j as u64) as f64 / u64::MAX as f64;
            let jitter = (h - 0.5) * 0.7 * slot;
            let fill = dot.color.map_or_else(|| "rgb(150,150,150)".to_string(), heat_color);
            canvas.push(format!(
                "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{}\" fill-opacity=\"0.75\"/>",
                fmt(x.map(dot.x)),
                fmt(y_center + jitter),
                fill
            ));
        }
    }
    let zero_x = x.map(0.0);
    if zero_x >= MARGIN_LEFT && zero_x <= WIDTH - MARGIN_RIGHT {
        canvas.push(format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\" \
             stroke-dasharray=\"4 3\"/>",
            fmt(zero_x),
            fmt(MARGIN_TOP),
            fmt(zero_x),
            fmt(HEIGHT - MARGIN_BOTTOM)
        ));
    }
    x_axis(&mut canvas, &x, HEIGHT - MARGIN_BOTTOM, x_label);
    canvas.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bar_chart_draws_one_rect_per_bar() {
        let bars = vec![("alpha".to_string(), 3.0), ("beta <x>".to_string(), 1.5)];
        let svg = bar_chart("title & more", "value", &bars);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<rect").count(), 3); // background + 2 bars
        assert!(svg.contains("beta &lt;x&gt;"));
        assert!(svg.contains("title &amp; more"));
    }

    #[test]
    fn scatter_draws_one_circle_per_dot() {
        let dots = vec![
            Dot { x: 1.0, y: 2.0, color: Some(0.0) },
            Dot { x: 3.0, y: 4.0, color: Some(1.0) },
            Dot { x: 5.0, y: 6.0, color: None },
        ];
        let svg = scatter("s", "x", "y", &dots);
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.contains("rgb(59,76,192)"));
        assert!(svg.contains("rgb(180,4,38)"));
        assert!(svg.contains("rgb(150,150,150)"));
    }

    #[test]
    fn output_is_deterministic() {
        let rows = vec![(
            "f".to_string(),
            (0..20)
                .map(|i| Dot {
                    x: i as f64,
                    y: 0.0,
                    color: Some(i as f64 / 19.0),
                })
                .collect(),
        )];
        assert_eq!(beeswarm("b", "phi", &rows), beeswarm("b", "phi", &rows));
    }

    #[test]
    fn empty_inputs_yield_valid_svgs() {
        for svg in [
            bar_chart("t", "x", &[]),
            scatter("t", "x", "y", &[]),
            beeswarm("t", "x", &[]),
        ] {
            assert!(svg.starts_with("<svg"));
            assert!(svg.trim_end().ends_with("</svg>"));
        }
    }

    #[test]
    fn degenerate_ranges_still_map_finitely() {
        let dots = vec![Dot { x: 2.0, y: 2.0, color: None }; 3];
        let svg = scatter("t", "x", "y", &dots);
        assert!(!svg.contains("NaN"));
        assert!(!svg.contains("inf"));
    }
}
