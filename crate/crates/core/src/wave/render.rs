use std::f64::consts::PI;

use super::FieldGrid;

/// 8-bit RGB raster, rows from top (largest y) to bottom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

fn hsv_to_rgb(h: f64, v: f64) -> [u8; 3] {
    let h6 = h * 6.0;
    let sector = (h6.floor() as i64).rem_euclid(6);
    let f = h6 - h6.floor();
    let (p, q, t) = (0.0, v * (1.0 - f), v * f);
    let (r, g, b) = match sector {
        0 => (v, t, p),
        1 => (q, v, p),
        2 => (p, v, t),
        3 => (p, q, v),
        4 => (t, p, v),
        _ => (v, p, q),
    };
    [r, g, b].map(|c| (c * 255.0).round().clamp(0.0, 255.0) as u8)
}

/// Amplitude as brightness, phase as hue (red at 0, through green at 2π/3
/// and blue at 4π/3).
pub fn render_rgb(field: &FieldGrid) -> RgbImage {
    let n = field.n();
    let peak = field.samples().iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut pixels = Vec::with_capacity(3 * n * n);
    for iy in (0..n).rev() {
        for ix in 0..n {
            let c = field.at(ix, iy);
            let v = if peak > 0.0 { c.norm() / peak } else { 0.0 };
            let h = c.arg().rem_euclid(2.0 * PI) / (2.0 * PI);
            pixels.extend_from_slice(&hsv_to_rgb(h, v));
        }
    }
    RgbImage {
        width: n as u32,
        height: n as u32,
        pixels,
    }
}
