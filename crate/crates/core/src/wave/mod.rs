//! FFT wave-propagation oracle for sampled transverse fields.
//!
//! Fields live on an `N×N` grid of full width `extent`, row-major with the
//! row index along `y`. Sample `j` of either axis sits at `(j - N/2)·dx`.
//! Propagation uses the paraxial transfer function with the plane-wave phase
//! removed, so it is exact for periodic, band-limited fields; the validator
//! reports when a field leaks into the outer ring of the grid or of its
//! spectrum.

mod dump;
mod overlap;
mod pipeline;
mod propagate;
mod render;
mod sample;

pub use dump::{read_dump, read_dump_file, write_dump, write_dump_file, DUMP_HEADER_LEN, DUMP_MAGIC, DUMP_VERSION};
pub use overlap::{modal_overlap, oam_expectation, OverlapResult, REFERENCE_RESIDUAL_LIMIT};
pub use pipeline::{
    run_schedule, run_setup, sample_state, setup_extent, SetupRun, StageRun, DEFAULT_GRID, EXTENT_FACTOR,
};
pub use propagate::{
    apply_phase_mask, check_field, fresnel_propagate, rotate_field, run_line, run_line_with, Fft2,
    LEAKAGE_LIMIT,
};
pub use render::{render_rgb, RgbImage};
pub use sample::{check_sampling, sample_hg, ModeIndex, MIN_EXTENT_WIDTHS, MIN_PIXELS_PER_WIDTH};

use crate::beam::ElectronContext;
use crate::{Error, Result, C64};

/// Grid size and physical width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    n: usize,
    extent: f64,
}

impl GridSpec {
    pub fn new(n: usize, extent: f64) -> Result<Self> {
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::GridSize(n));
        }
        if !(extent > 0.0) || !extent.is_finite() {
            return Err(Error::GridMismatch(format!("extent must be positive, got {extent} m")));
        }
        Ok(Self { n, extent })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn dx(&self) -> f64 {
        self.extent / self.n as f64
    }

    pub fn coord(&self, j: usize) -> f64 {
        (j as f64 - (self.n / 2) as f64) * self.dx()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.coord(j)).collect()
    }

    /// Angular spatial frequencies in FFT order.
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.n as i64;
        let dk = 2.0 * std::f64::consts::PI / self.extent;
        (0..n)
            .map(|j| if j < n / 2 { j } else { j - n })
            .map(|j| j as f64 * dk)
            .collect()
    }
}

/// Sampled complex field at axial position `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    spec: GridSpec,
    z: f64,
    ctx: ElectronContext,
    samples: Vec<C64>,
}

impl FieldGrid {
    pub fn new(spec: GridSpec, z: f64, ctx: ElectronContext, samples: Vec<C64>) -> Result<Self> {
        if samples.len() != spec.n * spec.n {
            return Err(Error::GridMismatch(format!(
                "expected {} samples, got {}",
                spec.n * spec.n,
                samples.len()
            )));
        }
        let field = Self {
            spec,
            z,
            ctx,
            samples,
        };
        if !field.power().is_finite() {
            return Err(Error::GridMismatch("total intensity is not finite".into()));
        }
        Ok(field)
    }

    pub fn zeros(spec: GridSpec, z: f64, ctx: ElectronContext) -> Self {
        Self {
            spec,
            z,
            ctx,
            samples: vec![C64::from(0.0); spec.n * spec.n],
        }
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn extent(&self) -> f64 {
        self.spec.extent
    }

    pub fn dx(&self) -> f64 {
        self.spec.dx()
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn set_z(&mut self, z: f64) {
        self.z = z;
    }

    pub fn ctx(&self) -> &ElectronContext {
        &self.ctx
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [C64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<C64> {
        self.samples
    }

    /// Sample at column `ix` (x) and row `iy` (y).
    pub fn at(&self, ix: usize, iy: usize) -> C64 {
        self.samples[iy * self.spec.n + ix]
    }

    /// `∬ |ψ|² dA`.
    pub fn power(&self) -> f64 {
        let da = self.dx() * self.dx();
        self.samples.iter().map(|c| c.norm_sqr()).sum::<f64>() * da
    }

    pub fn normalize(&mut self) {
        let p = self.power();
        if p > 0.0 {
            let s = 1.0 / p.sqrt();
            self.samples.iter_mut().for_each(|c| *c *= s);
        }
    }

    pub fn normalized(mut self) -> Self {
        self.normalize();
        self
    }

    pub fn scale(&mut self, factor: C64) {
        self.samples.iter_mut().for_each(|c| *c *= factor);
    }

    pub fn check_compatible(&self, other: &FieldGrid) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::GridMismatch(format!(
                "{}×{} over {} m vs {}×{} over {} m",
                self.spec.n, self.spec.n, self.spec.extent, other.spec.n, other.spec.n, other.spec.extent
            )));
        }
        Ok(())
    }

    /// `⟨self|other⟩ = ∬ self* · other dA`.
    pub fn inner(&self, other: &FieldGrid) -> Result<C64> {
        self.check_compatible(other)?;
        let da = self.dx() * self.dx();
        Ok(self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            * da)
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: C64, other: &FieldGrid, b: C64) -> Result<FieldGrid> {
        self.check_compatible(other)?;
        Ok(Self {
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(x, y)| a * x + b * y)
                .collect(),
            ..self.clone()
        })
    }

    pub fn max_abs_difference(&self, other: &FieldGrid) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// `|⟨self|other⟩|² / (‖self‖² ‖other‖²)`.
    pub fn fidelity(&self, other: &FieldGrid) -> Result<f64> {
        let ip = self.inner(other)?;
        Ok(ip.norm_sqr() / (self.power() * other.power()))
    }

    /// Second moment width `2√⟨x²⟩` along x and y, about the intensity
    /// centroid.
    pub fn second_moment_widths(&self) -> (f64, f64) {
        let n = self.spec.n;
        let xs = self.spec.coords();
        let (mut p, mut mx, mut my) = (0.0, 0.0, 0.0);
        for iy in 0..n {
            for ix in 0..n {
                let i = self.samples[iy * n + ix].norm_sqr();
                p += i;
                mx += i * xs[ix];
                my += i * xs[iy];
            }
        }
        let (mx, my) = (mx / p, my / p);
        let (mut sx, mut sy) = (0.0, 0.0);
        for iy in 0..n {
            for ix in 0..n {
                let i = self.samples[iy * n + ix].norm_sqr();
                sx += i * (xs[ix] - mx).powi(2);
                sy += i * (xs[iy] - my).powi(2);
            }
        }
        (2.0 * (sx / p).sqrt(), 2.0 * (sy / p).sqrt())
    }
}
