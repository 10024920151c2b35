use std::f64::consts::PI;

use super::{FieldGrid, GridSpec};
use crate::beam::{ComplexBeamParameter, ElectronContext};
use crate::{Error, Result, C64};

/// Smallest beam width, in pixels, the sampler accepts.
pub const MIN_PIXELS_PER_WIDTH: f64 = 16.0;
/// Smallest grid extent, in beam widths, the sampler accepts.
pub const MIN_EXTENT_WIDTHS: f64 = 6.0;

/// Hermite-Gaussian orders `(n, m)` along the mode's own x and y axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeIndex {
    pub n: u8,
    pub m: u8,
}

impl ModeIndex {
    pub const HG00: ModeIndex = ModeIndex { n: 0, m: 0 };
    pub const HG10: ModeIndex = ModeIndex { n: 1, m: 0 };
    pub const HG01: ModeIndex = ModeIndex { n: 0, m: 1 };

    pub fn new(n: u8, m: u8) -> Result<Self> {
        if n as u16 + m as u16 > 2 {
            return Err(Error::Sampling(format!(
                "mode order ({n}, {m}) is not supported; n + m must not exceed 2"
            )));
        }
        Ok(Self { n, m })
    }
}

fn hermite(n: u8, s: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0 * s,
        _ => 4.0 * s * s - 2.0,
    }
}

fn factorial(n: u8) -> f64 {
    (1..=n as u32).map(f64::from).product()
}

/// Normalized one-dimensional mode including its Gouy factor.
struct AxisMode {
    n: u8,
    norm: f64,
    scale: f64,
    phase_coeff: C64,
    gouy: C64,
}

impl AxisMode {
    fn new(n: u8, q: &ComplexBeamParameter, k: f64) -> Self {
        let w = q.width(k);
        let norm = ((2.0 / PI).sqrt() / (2f64.powi(n as i32) * factorial(n) * w)).sqrt();
        Self {
            n,
            norm,
            scale: 2f64.sqrt() / w,
            phase_coeff: C64::new(0.0, -0.5 * k) / q.value(),
            gouy: C64::from_polar(1.0, (n as f64 + 0.5) * q.gouy()),
        }
    }

    fn eval(&self, x: f64) -> C64 {
        self.norm * hermite(self.n, self.scale * x) * (self.phase_coeff * x * x).exp() * self.gouy
    }
}

/// Checks that a beam of width `w` is resolved and contained by the grid.
pub fn check_sampling(spec: &GridSpec, w: f64) -> Result<()> {
    let px = w / spec.dx();
    if px < MIN_PIXELS_PER_WIDTH {
        return Err(Error::Sampling(format!(
            "beam width {w:e} m spans {px:.1} pixels, need at least {MIN_PIXELS_PER_WIDTH}; \
             increase the grid size or reduce the extent"
        )));
    }
    if spec.extent() < MIN_EXTENT_WIDTHS * w {
        return Err(Error::Sampling(format!(
            "extent {:e} m is smaller than {MIN_EXTENT_WIDTHS} beam widths ({w:e} m); increase the extent",
            spec.extent()
        )));
    }
    Ok(())
}

/// Samples the normalized astigmatic mode `idx` with beam parameters `q_h`
/// and `q_v` along axes rotated by `alpha` from the lab frame.
pub fn sample_hg(
    idx: ModeIndex,
    q_h: &ComplexBeamParameter,
    q_v: &ComplexBeamParameter,
    alpha: f64,
    spec: &GridSpec,
    ctx: &ElectronContext,
) -> Result<FieldGrid> {
    let idx = ModeIndex::new(idx.n, idx.m)?;
    let k = ctx.wavenumber();
    check_sampling(spec, q_h.width(k).max(q_v.width(k)))?;
    let mx = AxisMode::new(idx.n, q_h, k);
    let my = AxisMode::new(idx.m, q_v, k);
    let (s, c) = alpha.sin_cos();
    let xs = spec.coords();
    let n = spec.n();
    let mut samples = Vec::with_capacity(n * n);
    for &y in &xs {
        for &x in &xs {
            let xr = x * c + y * s;
            let yr = -x * s + y * c;
            samples.push(mx.eval(xr) * my.eval(yr));
        }
    }
    FieldGrid::new(*spec, 0.0, *ctx, samples)
}
