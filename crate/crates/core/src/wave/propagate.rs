use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use super::FieldGrid;
use crate::beam::{Element, OpticsLine};
use crate::{Error, Result, C64};

/// Largest fraction of the power allowed in the outer ring of the grid or
/// of the spectrum.
pub const LEAKAGE_LIMIT: f64 = 1e-6;

const ROWS_PER_TASK: usize = 16;

/// Forward and inverse plans for an `N×N` transform.
pub struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    fn rows(&self, data: &mut [C64], inverse: bool) {
        let fft = if inverse { &self.inverse } else { &self.forward };
        let n = self.n;
        data.par_chunks_mut(n * ROWS_PER_TASK).for_each(|chunk| {
            let mut scratch = vec![C64::from(0.0); fft.get_inplace_scratch_len()];
            fft.process_with_scratch(chunk, &mut scratch);
        });
    }

    /// Unnormalized 2-D transform in place.
    pub fn process(&self, data: &mut [C64], inverse: bool) {
        self.rows(data, inverse);
        transpose(data, self.n);
        self.rows(data, inverse);
        transpose(data, self.n);
    }

    /// Applies `mul(row, k)` to every row's spectrum, where `k` is the FFT
    /// bin index, then transforms back.
    fn filter_rows<F>(&self, data: &mut [C64], mul: F)
    where
        F: Fn(usize, usize) -> C64 + Sync,
    {
        let n = self.n;
        let scale = 1.0 / n as f64;
        data.par_chunks_mut(n * ROWS_PER_TASK)
            .enumerate()
            .for_each(|(task, chunk)| {
                let mut scratch = vec![
                    C64::from(0.0);
                    self.forward
                        .get_inplace_scratch_len()
                        .max(self.inverse.get_inplace_scratch_len())
                ];
                self.forward.process_with_scratch(chunk, &mut scratch);
                for (r, row) in chunk.chunks_mut(n).enumerate() {
                    let row_index = task * ROWS_PER_TASK + r;
                    for (k, v) in row.iter_mut().enumerate() {
                        *v *= mul(row_index, k) * scale;
                    }
                }
                self.inverse.process_with_scratch(chunk, &mut scratch);
            });
    }
}

fn transpose(data: &mut [C64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

fn ring_width(n: usize) -> usize {
    (n / 256).max(2)
}

fn ring_fraction(data: &[C64], n: usize, centered: bool) -> f64 {
    let w = ring_width(n);
    let total: f64 = data.iter().map(|c| c.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    // in FFT order the highest frequencies sit around index n/2
    let outer = |j: usize| {
        if centered {
            j < w || j >= n - w
        } else {
            j.abs_diff(n / 2) < w
        }
    };
    let mut ring = 0.0;
    for iy in 0..n {
        let row_outer = outer(iy);
        for ix in 0..n {
            if row_outer || outer(ix) {
                ring += data[iy * n + ix].norm_sqr();
            }
        }
    }
    ring / total
}

fn check_edge(data: &[C64], n: usize, what: &str) -> Result<()> {
    let f = ring_fraction(data, n, true);
    if f > LEAKAGE_LIMIT {
        return Err(Error::Sampling(format!(
            "{what}: {f:.2e} of the power reaches the grid edge; increase the extent"
        )));
    }
    Ok(())
}

fn check_spectrum(spectrum: &[C64], n: usize, what: &str) -> Result<()> {
    let f = ring_fraction(spectrum, n, false);
    if f > LEAKAGE_LIMIT {
        return Err(Error::Sampling(format!(
            "{what}: {f:.2e} of the power is near the sampling limit; increase the grid size"
        )));
    }
    Ok(())
}

/// Validates that the field stays clear of the grid edge and of the
/// spectral band limit.
pub fn check_field(field: &FieldGrid) -> Result<()> {
    let n = field.n();
    check_edge(field.samples(), n, "field")?;
    let mut spectrum = field.samples().to_vec();
    Fft2::new(n).process(&mut spectrum, false);
    check_spectrum(&spectrum, n, "field")
}

/// Paraxial free-space propagation over `dz`, without the plane-wave phase.
pub fn fresnel_propagate(field: &FieldGrid, dz: f64) -> Result<FieldGrid> {
    propagate_with(&Fft2::new(field.n()), field, dz)
}

fn propagate_with(fft: &Fft2, field: &FieldGrid, dz: f64) -> Result<FieldGrid> {
    if !dz.is_finite() {
        return Err(Error::InvalidDrift(dz));
    }
    let mut out = field.clone();
    if dz == 0.0 {
        return Ok(out);
    }
    let n = field.n();
    let k = field.ctx().wavenumber();
    let freqs = field.spec().frequencies();
    let data = out.samples_mut();
    fft.process(data, false);
    check_spectrum(data, n, "propagation input")?;
    let c = 0.5 * dz / k;
    let scale = 1.0 / (n * n) as f64;
    let h: Vec<f64> = freqs.iter().map(|kx| kx * kx).collect();
    data.par_chunks_mut(n).enumerate().for_each(|(iy, row)| {
        for (ix, v) in row.iter_mut().enumerate() {
            *v *= C64::from_polar(scale, c * (h[ix] + h[iy]));
        }
    });
    fft.process(data, true);
    check_edge(data, n, "propagation output")?;
    out.set_z(field.z() + dz);
    Ok(out)
}

/// Thin element with focal lengths `f_x` and `f_y` along axes turned by
/// `alpha`. `None` means no focusing along that axis.
pub fn apply_phase_mask(
    field: &FieldGrid,
    f_x: Option<f64>,
    f_y: Option<f64>,
    alpha: f64,
) -> Result<FieldGrid> {
    let inv = |f: Option<f64>| -> Result<f64> {
        match f {
            None => Ok(0.0),
            Some(f) if f == 0.0 || f.is_nan() => Err(Error::InvalidFocalLength(f)),
            Some(f) => Ok(1.0 / f),
        }
    };
    let (px, py) = (inv(f_x)?, inv(f_y)?);
    let mut out = field.clone();
    if px == 0.0 && py == 0.0 {
        return Ok(out);
    }
    let k = field.ctx().wavenumber();
    let dx = field.dx();
    let step = k * 0.5 * field.extent() * dx * px.abs().max(py.abs());
    if step >= PI {
        return Err(Error::Sampling(format!(
            "lens phase changes by {step:.3} rad per pixel at the grid edge; \
             increase the grid size or reduce the extent"
        )));
    }
    let n = field.n();
    let xs = field.spec().coords();
    let (s, c) = alpha.sin_cos();
    out.samples_mut()
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(iy, row)| {
            let y = xs[iy];
            for (ix, v) in row.iter_mut().enumerate() {
                let x = xs[ix];
                let xr = x * c + y * s;
                let yr = -x * s + y * c;
                *v *= C64::from_polar(1.0, 0.5 * k * (xr * xr * px + yr * yr * py));
            }
        });
    Ok(out)
}

fn quarter_turn(data: &[C64], n: usize) -> Vec<C64> {
    // new(x, y) = old(y, -x)
    let mut out = vec![C64::from(0.0); n * n];
    for iy in 0..n {
        for ix in 0..n {
            out[iy * n + ix] = data[((n - ix) % n) * n + iy];
        }
    }
    out
}

fn shear_rows(fft: &Fft2, data: &mut [C64], coords: &[f64], freqs: &[f64], s: f64) {
    let n = coords.len();
    fft.filter_rows(data, |row, k| {
        let shift = s * coords[row];
        if k == n / 2 {
            C64::from((freqs[k] * shift).cos())
        } else {
            C64::from_polar(1.0, -freqs[k] * shift)
        }
    });
}

/// Rotates the field by `angle` about the grid centre:
/// `out(r) = in(R(-angle)·r)`. Exact quarter turns are index permutations;
/// the remainder uses three Fourier shears on a zero-padded copy.
pub fn rotate_field(field: &FieldGrid, angle: f64) -> FieldGrid {
    let n = field.n();
    let turns = (angle / FRAC_PI_2).round();
    let rest = angle - turns * FRAC_PI_2;
    let mut out = field.clone();
    let mut data = field.samples().to_vec();
    for _ in 0..(turns as i64).rem_euclid(4) {
        data = quarter_turn(&data, n);
    }
    if rest != 0.0 {
        // shears stretch the field diagonally; pad so nothing wraps around
        let m = 2 * n;
        let off = n / 2;
        let mut padded = vec![C64::from(0.0); m * m];
        for iy in 0..n {
            padded[(iy + off) * m + off..(iy + off) * m + off + n]
                .copy_from_slice(&data[iy * n..(iy + 1) * n]);
        }
        let spec = super::GridSpec::new(m, 2.0 * field.extent()).expect("valid grid");
        let fft = Fft2::new(m);
        let coords = spec.coords();
        let freqs = spec.frequencies();
        let a = -(0.5 * rest).tan();
        let b = rest.sin();
        shear_rows(&fft, &mut padded, &coords, &freqs, a);
        transpose(&mut padded, m);
        shear_rows(&fft, &mut padded, &coords, &freqs, b);
        transpose(&mut padded, m);
        shear_rows(&fft, &mut padded, &coords, &freqs, a);
        for iy in 0..n {
            data[iy * n..(iy + 1) * n]
                .copy_from_slice(&padded[(iy + off) * m + off..(iy + off) * m + off + n]);
        }
    }
    out.samples_mut().copy_from_slice(&data);
    out
}

/// Runs the field through `line`.
pub fn run_line(field: &FieldGrid, line: &OpticsLine) -> Result<FieldGrid> {
    run_line_with(field, line, |_, _, _| {})
}

/// Like [`run_line`], calling `observer(index, element, field)` after every
/// element.
pub fn run_line_with<F>(field: &FieldGrid, line: &OpticsLine, mut observer: F) -> Result<FieldGrid>
where
    F: FnMut(usize, &Element, &FieldGrid),
{
    let fft = Fft2::new(field.n());
    let mut current = field.clone();
    for (i, e) in line.elements().iter().enumerate() {
        current = match *e {
            Element::Drift(l) => {
                e.validate()?;
                propagate_with(&fft, &current, l)?
            }
            Element::RoundLens(ex) => {
                e.validate()?;
                let f = ex.wave_focal_length();
                apply_phase_mask(&current, f, f, 0.0)?
            }
            Element::Quadrupole {
                excitation,
                axis_angle,
            } => {
                e.validate()?;
                let f = excitation.wave_focal_length();
                apply_phase_mask(&current, f, f.map(|f| -f), axis_angle)?
            }
            Element::Rotator(a) => rotate_field(&current, a),
        };
        observer(i, e, &current);
    }
    Ok(current)
}
