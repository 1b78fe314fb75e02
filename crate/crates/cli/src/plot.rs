//! Self-contained SVG emission: lines, polylines, circles, rects, text, and
//! a fixed blue-to-red color ramp. Output is deterministic for fixed inputs.

use std::fmt::Write as _;

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 600.0;

pub struct Svg {
    body: String,
}

fn fx(v: f64) -> String {
    format!("{v:.3}")
}

impl Svg {
    pub fn new() -> Self {
        let mut body = String::new();
        let _ = writeln!(
            body,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
        );
        let _ = writeln!(
            body,
            "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
        );
        Self { body }
    }

    pub fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, color: &str, width: f64) {
        let _ = writeln!(
            self.body,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\" stroke-width=\"{}\"/>",
            fx(x1),
            fx(y1),
            fx(x2),
            fx(y2),
            fx(width)
        );
    }

    pub fn polyline(&mut self, points: &[(f64, f64)], color: &str, width: f64, closed: bool) {
        let tag = if closed { "polygon" } else { "polyline" };
        let pts: Vec<String> = points
            .iter()
            .map(|(x, y)| format!("{},{}", fx(*x), fx(*y)))
            .collect();
        let _ = writeln!(
            self.body,
            "<{tag} points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"{}\"/>",
            pts.join(" "),
            fx(width)
        );
    }

    pub fn circle(&mut self, cx: f64, cy: f64, r: f64, fill: &str) {
        let _ = writeln!(
            self.body,
            "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{fill}\"/>",
            fx(cx),
            fx(cy),
            fx(r)
        );
    }

    pub fn circle_outline(&mut self, cx: f64, cy: f64, r: f64, color: &str, width: f64) {
        let _ = writeln!(
            self.body,
            "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"{}\"/>",
            fx(cx),
            fx(cy),
            fx(r),
            fx(width)
        );
    }

    pub fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        let _ = writeln!(
            self.body,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{fill}\"/>",
            fx(x),
            fx(y),
            fx(w),
            fx(h)
        );
    }

    pub fn text(&mut self, x: f64, y: f64, size: f64, content: &str) {
        let _ = writeln!(
            self.body,
            "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"{}\">{content}</text>",
            fx(x),
            fx(y),
            fx(size)
        );
    }

    pub fn finish(mut self) -> String {
        let _ = writeln!(self.body, "</svg>");
        self.body
    }
}

impl Default for Svg {
    fn default() -> Self {
        Self::new()
    }
}

/// Blue (t = 0) to red (t = 1).
pub fn ramp(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let r = (255.0 * t).round() as u8;
    let b = (255.0 * (1.0 - t)).round() as u8;
    format!("#{r:02x}00{b:02x}")
}

/// Maps data coordinates in [lo, hi]^2 onto the canvas with margins,
/// flipping y so larger values are higher.
pub struct Frame {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
    pub margin: f64,
}

impl Frame {
    pub fn new(x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64) -> Self {
        Self {
            x_lo,
            x_hi,
            y_lo,
            y_hi,
            margin: 40.0,
        }
    }

    pub fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let sx = (WIDTH - 2.0 * self.margin) / (self.x_hi - self.x_lo).max(1e-12);
        let sy = (HEIGHT - 2.0 * self.margin) / (self.y_hi - self.y_lo).max(1e-12);
        let s = sx.min(sy);
        (
            self.margin + (x - self.x_lo) * s,
            HEIGHT - self.margin - (y - self.y_lo) * s,
        )
    }
}
