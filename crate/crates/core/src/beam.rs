//! Complex beam parameter algebra and analytic propagation of astigmatic
//! first-order Hermite-Gaussian modes.
//!
//! Conventions (all SI):
//!
//! - A Gaussian component is described by `q = z - z0 + i·zR` with `zR > 0`.
//! - The transverse field of a mode of order `n` along one axis is
//!   `H_n(√2 x / w) · exp(-i k x² / (2q)) · exp(i (n + 1/2) γ)`, with
//!   `w = √(2|q|² / (k Im q))`, `R = |q|² / Re q` and `γ = atan(Re q / Im q)`.
//!   The plane-wave factor is not part of the mode.
//! - A thin lens of focal length `f` maps `q ↦ 1/(1/q - 1/f)`; a quadrupole
//!   acts with `+f` on its own x′ axis and `-f` on its y′ axis.
//! - The basis states are `|0⟩ = HG₁₀` (horizontal, along the frame's h axis)
//!   and `|1⟩ = HG₀₁` (vertical). Over a drift, `|0⟩` picks up
//!   `3/2·Δγ_h + 1/2·Δγ_v` and `|1⟩` picks up `1/2·Δγ_h + 3/2·Δγ_v`, so the
//!   relative phase `arg(b/a)` advances by `Δγ_v - Δγ_h` and the common phase
//!   by `Δγ_h + Δγ_v`.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::{wrap_angle, Error, Result, C64};

/// Electron rest energy m₀c² in keV.
pub const ELECTRON_REST_ENERGY_KEV: f64 = 510.998_950_00;
const PLANCK: f64 = 6.626_070_15e-34;
const SPEED_OF_LIGHT: f64 = 299_792_458.0;
const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Relative tolerance on `|q_h - q_v| / |q_h|` below which a beam counts as
/// stigmatic.
pub const STIGMATIC_TOLERANCE: f64 = 1e-9;

/// Angular tolerance for aligning a quadrupole with an astigmatic frame.
pub const AXIS_TOLERANCE: f64 = 1e-9;

/// Electron beam constants for a given kinetic energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElectronContext {
    kinetic_energy_kev: f64,
    wavenumber: f64,
    wavelength: f64,
}

impl ElectronContext {
    /// Relativistic de Broglie wavelength `λ = hc / √(E² + 2E·m₀c²)`.
    pub fn from_energy_kev(kinetic_energy_kev: f64) -> Result<Self> {
        if !(kinetic_energy_kev > 0.0) || !kinetic_energy_kev.is_finite() {
            return Err(Error::NonPositiveEnergy(kinetic_energy_kev));
        }
        let e = kinetic_energy_kev;
        let pc_kev = (e * e + 2.0 * e * ELECTRON_REST_ENERGY_KEV).sqrt();
        let pc_joule = pc_kev * 1e3 * ELEMENTARY_CHARGE;
        let wavelength = PLANCK * SPEED_OF_LIGHT / pc_joule;
        Ok(Self {
            kinetic_energy_kev,
            wavenumber: 2.0 * PI / wavelength,
            wavelength,
        })
    }

    pub fn kinetic_energy_kev(&self) -> f64 {
        self.kinetic_energy_kev
    }

    /// Wave number k in 1/m.
    pub fn wavenumber(&self) -> f64 {
        self.wavenumber
    }

    /// Wavelength in m.
    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }
}

pub fn wavenumber_from_energy(kinetic_energy_kev: f64) -> Result<ElectronContext> {
    ElectronContext::from_energy_kev(kinetic_energy_kev)
}

/// Gaussian beam descriptor `q = z - z0 + i·zR` for one transverse axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexBeamParameter(C64);

impl ComplexBeamParameter {
    pub fn new(q: C64) -> Result<Self> {
        if !(q.im > 0.0) || !q.im.is_finite() || !q.re.is_finite() {
            return Err(Error::NonPhysicalBeam(q.im));
        }
        Ok(Self(q))
    }

    /// Beam at distance `z` behind its waist (negative before the waist).
    pub fn at(z: f64, rayleigh_range: f64) -> Result<Self> {
        Self::new(C64::new(z, rayleigh_range))
    }

    /// Beam with width `w` and curvature radius `R` at the current plane.
    /// An infinite `R` denotes a waist.
    pub fn from_width_curvature(width: f64, curvature_radius: f64, k: f64) -> Result<Self> {
        if !(width > 0.0) || !(k > 0.0) {
            return Err(Error::NonPhysicalBeam(0.0));
        }
        let inv = C64::new(1.0 / curvature_radius, -2.0 / (k * width * width));
        Self::new(inv.inv())
    }

    /// Waist of width `w0` located at the current plane.
    pub fn waist(width: f64, k: f64) -> Result<Self> {
        Self::from_width_curvature(width, f64::INFINITY, k)
    }

    pub fn value(&self) -> C64 {
        self.0
    }

    pub fn re(&self) -> f64 {
        self.0.re
    }

    pub fn rayleigh_range(&self) -> f64 {
        self.0.im
    }

    /// `q ↦ q + δz`.
    pub fn propagate(&self, dz: f64) -> Self {
        Self(self.0 + dz)
    }

    /// `q ↦ 1/(1/q - 1/f)`.
    pub fn apply_lens(&self, focal_length: f64) -> Result<Self> {
        if focal_length == 0.0 || focal_length.is_nan() {
            return Err(Error::InvalidFocalLength(focal_length));
        }
        Self::new((self.0.inv() - 1.0 / focal_length).inv())
    }

    /// `w = √(2|q|² / (k Im q))`.
    pub fn width(&self, k: f64) -> f64 {
        (2.0 * self.0.norm_sqr() / (k * self.0.im)).sqrt()
    }

    /// Waist width `w0 = √(2 zR / k)`.
    pub fn waist_width(&self, k: f64) -> f64 {
        (2.0 * self.0.im / k).sqrt()
    }

    /// `R = |q|² / Re q`, infinite at the waist.
    pub fn curvature_radius(&self) -> f64 {
        if self.0.re == 0.0 {
            f64::INFINITY
        } else {
            self.0.norm_sqr() / self.0.re
        }
    }

    /// Gouy phase `γ = atan(Re q / Im q)`, in `(-π/2, π/2)`.
    pub fn gouy(&self) -> f64 {
        (self.0.re / self.0.im).atan()
    }

    pub fn properties(&self, ctx: &ElectronContext) -> BeamProperties {
        BeamProperties {
            width: self.width(ctx.wavenumber()),
            curvature_radius: self.curvature_radius(),
            gouy: self.gouy(),
        }
    }

    /// `|q - other| / |q|`.
    pub fn relative_distance(&self, other: &Self) -> f64 {
        (self.0 - other.0).norm() / self.0.norm()
    }
}

/// Width, curvature radius and Gouy phase of a Gaussian component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamProperties {
    pub width: f64,
    pub curvature_radius: f64,
    pub gouy: f64,
}

pub fn beam_properties(q: &ComplexBeamParameter, ctx: &ElectronContext) -> BeamProperties {
    q.properties(ctx)
}

pub fn propagate(q: &ComplexBeamParameter, dz: f64) -> ComplexBeamParameter {
    q.propagate(dz)
}

pub fn apply_lens(q: &ComplexBeamParameter, focal_length: f64) -> Result<ComplexBeamParameter> {
    q.apply_lens(focal_length)
}

/// Overlap `⟨u_n(q2)|u_n(q1)⟩` of two normalized one-dimensional
/// Hermite-Gaussian modes of order `n ∈ {0, 1}` sampled at the same plane.
pub fn hg_overlap_1d(n: u8, q1: &ComplexBeamParameter, q2: &ComplexBeamParameter, k: f64) -> C64 {
    let (w1, w2) = (q1.width(k), q2.width(k));
    let a = C64::new(0.0, 0.5 * k) * (q1.value().inv() - q2.value().inv().conj());
    let gouy = C64::from_polar(1.0, (n as f64 + 0.5) * (q1.gouy() - q2.gouy()));
    let sqrt_pi = PI.sqrt();
    match n {
        0 => {
            let norm = (2.0 / PI).sqrt() / (w1 * w2).sqrt();
            gouy * norm * (C64::from(PI) / a).sqrt()
        }
        1 => {
            let norm = (2.0 / PI).sqrt() / (2.0 * (w1 * w2).sqrt());
            gouy * norm * 4.0 * sqrt_pi / (w1 * w2 * a.powf(1.5))
        }
        _ => panic!("hg_overlap_1d supports orders 0 and 1, got {n}"),
    }
}

/// Lens or quadrupole excitation.
///
/// `Surrogate` marks an element that is nominally off but is realized with a
/// very long finite focal length in the wave oracle. The analytic engine
/// treats it as off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Excitation {
    Off,
    On(f64),
    Surrogate(f64),
}

impl Excitation {
    /// Focal length seen by the analytic engine.
    pub fn focal_length(&self) -> Option<f64> {
        match *self {
            Excitation::On(f) => Some(f),
            _ => None,
        }
    }

    /// Focal length seen by the wave oracle.
    pub fn wave_focal_length(&self) -> Option<f64> {
        match *self {
            Excitation::On(f) | Excitation::Surrogate(f) => Some(f),
            Excitation::Off => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Excitation::On(f) | Excitation::Surrogate(f) if f == 0.0 || !f.is_finite() => {
                Err(Error::InvalidFocalLength(f))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Element {
    Drift(f64),
    RoundLens(Excitation),
    /// `+f` along the axis at `axis_angle` from the lab x axis, `-f` across.
    Quadrupole {
        excitation: Excitation,
        axis_angle: f64,
    },
    /// Ideal rotation of the transverse coordinate frame.
    Rotator(f64),
}

impl Element {
    pub fn lens(focal_length: f64) -> Self {
        Element::RoundLens(Excitation::On(focal_length))
    }

    pub fn quadrupole(focal_length: f64, axis_angle: f64) -> Self {
        Element::Quadrupole {
            excitation: Excitation::On(focal_length),
            axis_angle,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Element::Drift(l) if !(*l >= 0.0) || !l.is_finite() => Err(Error::InvalidDrift(*l)),
            Element::RoundLens(e) | Element::Quadrupole { excitation: e, .. } => e.validate(),
            _ => Ok(()),
        }
    }

    /// The same element with its orientation turned by `angle`.
    pub fn rotated(&self, angle: f64) -> Self {
        match *self {
            Element::Quadrupole {
                excitation,
                axis_angle,
            } => Element::Quadrupole {
                excitation,
                axis_angle: axis_angle + angle,
            },
            other => other,
        }
    }
}

/// Ordered sequence of elements; positions follow from the drift lengths.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OpticsLine {
    elements: Vec<Element>,
}

impl OpticsLine {
    pub fn new(elements: Vec<Element>) -> Result<Self> {
        for e in &elements {
            e.validate()?;
        }
        Ok(Self { elements })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn push(&mut self, element: Element) -> Result<()> {
        element.validate()?;
        self.elements.push(element);
        Ok(())
    }

    pub fn extend(&mut self, other: &OpticsLine) {
        self.elements.extend_from_slice(&other.elements);
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    /// Total drift length.
    pub fn length(&self) -> f64 {
        self.elements
            .iter()
            .map(|e| match e {
                Element::Drift(l) => *l,
                _ => 0.0,
            })
            .sum()
    }

    /// Axial position of every element's entrance, starting at `z0`.
    pub fn positions(&self, z0: f64) -> Vec<(f64, Element)> {
        let mut z = z0;
        self.elements
            .iter()
            .map(|e| {
                let here = z;
                if let Element::Drift(l) = e {
                    z += l;
                }
                (here, *e)
            })
            .collect()
    }

    /// Splits into `[0, index)` and `[index, len)`.
    pub fn split_at(&self, index: usize) -> (OpticsLine, OpticsLine) {
        let (a, b) = self.elements.split_at(index);
        (
            OpticsLine {
                elements: a.to_vec(),
            },
            OpticsLine {
                elements: b.to_vec(),
            },
        )
    }

    pub fn rotated(&self, angle: f64) -> OpticsLine {
        OpticsLine {
            elements: self.elements.iter().map(|e| e.rotated(angle)).collect(),
        }
    }
}

fn rotate_pair(v: [C64; 2], angle: f64) -> [C64; 2] {
    let (s, c) = angle.sin_cos();
    [v[0] * c - v[1] * s, v[0] * s + v[1] * c]
}

/// Astigmatic first-order mode state carried along an optics line.
///
/// `amplitudes` are the coefficients of `HG₁₀` and `HG₀₁` in the principal
/// frame at `frame_angle`. The common Gouy phase is kept separately in
/// [`ModeState::common_phase`]; the physical state is
/// `exp(i·common_phase) · lab_amplitudes()`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeState {
    q_h: ComplexBeamParameter,
    q_v: ComplexBeamParameter,
    frame_angle: f64,
    amplitudes: [C64; 2],
    accum_gouy_h: f64,
    accum_gouy_v: f64,
    relative_phase: f64,
    common_phase: f64,
}

impl ModeState {
    /// Stigmatic beam `q` carrying `a·HG₁₀ + b·HG₀₁` in the lab frame.
    pub fn new(q: ComplexBeamParameter, amplitudes: [C64; 2]) -> Result<Self> {
        let norm = amplitudes[0].norm_sqr() + amplitudes[1].norm_sqr();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self {
            q_h: q,
            q_v: q,
            frame_angle: 0.0,
            amplitudes,
            accum_gouy_h: 0.0,
            accum_gouy_v: 0.0,
            relative_phase: 0.0,
            common_phase: 0.0,
        })
    }

    pub fn q_h(&self) -> ComplexBeamParameter {
        self.q_h
    }

    pub fn q_v(&self) -> ComplexBeamParameter {
        self.q_v
    }

    pub fn frame_angle(&self) -> f64 {
        self.frame_angle
    }

    /// Amplitudes in the principal frame.
    pub fn amplitudes(&self) -> [C64; 2] {
        self.amplitudes
    }

    /// Amplitudes of `HG₁₀` and `HG₀₁` oriented along the lab axes.
    pub fn lab_amplitudes(&self) -> [C64; 2] {
        rotate_pair(self.amplitudes, self.frame_angle)
    }

    /// Lab amplitudes including the accumulated common phase.
    pub fn physical_amplitudes(&self) -> [C64; 2] {
        let g = C64::from_polar(1.0, self.common_phase);
        let [a, b] = self.lab_amplitudes();
        [a * g, b * g]
    }

    pub fn accum_gouy_h(&self) -> f64 {
        self.accum_gouy_h
    }

    pub fn accum_gouy_v(&self) -> f64 {
        self.accum_gouy_v
    }

    /// Accumulated `Σ (Δγ_v - Δγ_h)`.
    pub fn relative_phase(&self) -> f64 {
        self.relative_phase
    }

    /// Accumulated `Σ (Δγ_h + Δγ_v)`.
    pub fn common_phase(&self) -> f64 {
        self.common_phase
    }

    /// `|q_h - q_v| / |q_h|`.
    pub fn astigmatism(&self) -> f64 {
        self.q_h.relative_distance(&self.q_v)
    }

    pub fn is_stigmatic(&self) -> bool {
        self.astigmatism() <= STIGMATIC_TOLERANCE
    }

    pub fn drift(&self, length: f64) -> Result<Self> {
        Element::Drift(length).validate()?;
        let q_h = self.q_h.propagate(length);
        let q_v = self.q_v.propagate(length);
        let dg_h = q_h.gouy() - self.q_h.gouy();
        let dg_v = q_v.gouy() - self.q_v.gouy();
        let delta = dg_v - dg_h;
        let [a, b] = self.amplitudes;
        Ok(Self {
            q_h,
            q_v,
            amplitudes: [
                a * C64::from_polar(1.0, -0.5 * delta),
                b * C64::from_polar(1.0, 0.5 * delta),
            ],
            accum_gouy_h: self.accum_gouy_h + dg_h,
            accum_gouy_v: self.accum_gouy_v + dg_v,
            relative_phase: self.relative_phase + delta,
            common_phase: self.common_phase + dg_h + dg_v,
            ..*self
        })
    }

    pub fn apply_round_lens(&self, excitation: Excitation) -> Result<Self> {
        excitation.validate()?;
        match excitation.focal_length() {
            None => Ok(*self),
            Some(f) => Ok(Self {
                q_h: self.q_h.apply_lens(f)?,
                q_v: self.q_v.apply_lens(f)?,
                ..*self
            }),
        }
    }

    pub fn apply_quadrupole(&self, excitation: Excitation, axis_angle: f64) -> Result<Self> {
        excitation.validate()?;
        let Some(f) = excitation.focal_length() else {
            return Ok(*self);
        };
        let mut state = *self;
        if state.is_stigmatic() {
            // any frame describes a round beam; adopt the quadrupole's
            let turn = axis_angle - state.frame_angle;
            state.amplitudes = rotate_pair(state.amplitudes, -turn);
            state.frame_angle = axis_angle;
        }
        let offset = axis_angle - state.frame_angle;
        let quarter_turns = (offset / FRAC_PI_2).round();
        if (offset - quarter_turns * FRAC_PI_2).abs() > AXIS_TOLERANCE {
            return Err(Error::AxisMismatch {
                axis: axis_angle,
                frame: state.frame_angle,
            });
        }
        let f_h = if (quarter_turns as i64).rem_euclid(2) == 0 {
            f
        } else {
            -f
        };
        state.q_h = state.q_h.apply_lens(f_h)?;
        state.q_v = state.q_v.apply_lens(-f_h)?;
        Ok(state)
    }

    /// Ideal frame rotation by `angle`: `(a, b) ↦ R(angle)·(a, b)`.
    pub fn apply_rotator(&self, angle: f64) -> Result<Self> {
        let mismatch = self.astigmatism();
        if mismatch > STIGMATIC_TOLERANCE {
            return Err(Error::AstigmaticRotation(mismatch));
        }
        Ok(Self {
            amplitudes: rotate_pair(self.amplitudes, angle),
            ..*self
        })
    }

    pub fn apply(&self, element: &Element) -> Result<Self> {
        match *element {
            Element::Drift(l) => self.drift(l),
            Element::RoundLens(e) => self.apply_round_lens(e),
            Element::Quadrupole {
                excitation,
                axis_angle,
            } => self.apply_quadrupole(excitation, axis_angle),
            Element::Rotator(a) => self.apply_rotator(a),
        }
    }
}

pub fn apply_quadrupole(
    state: &ModeState,
    focal_length: f64,
    axis_angle: f64,
) -> Result<ModeState> {
    state.apply_quadrupole(Excitation::On(focal_length), axis_angle)
}

pub fn apply_rotator(state: &ModeState, angle: f64) -> Result<ModeState> {
    state.apply_rotator(angle)
}

/// Advances `state` through every element of `line` in order.
pub fn propagate_line(state: &ModeState, line: &OpticsLine) -> Result<ModeState> {
    line.elements()
        .iter()
        .try_fold(*state, |s, e| s.apply(e))
}

/// One station of an axial scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    pub z: f64,
    pub w_h: f64,
    pub w_v: f64,
    pub r_h: f64,
    pub r_v: f64,
    pub gamma_h: f64,
    pub gamma_v: f64,
    pub delta_phi_accum: f64,
}

impl ScanPoint {
    fn of(z: f64, s: &ModeState, k: f64) -> Self {
        Self {
            z,
            w_h: s.q_h.width(k),
            w_v: s.q_v.width(k),
            r_h: s.q_h.curvature_radius(),
            r_v: s.q_v.curvature_radius(),
            gamma_h: s.q_h.gouy(),
            gamma_v: s.q_v.gouy(),
            delta_phi_accum: s.relative_phase,
        }
    }
}

/// Samples beam widths, curvatures and the accumulated relative phase along
/// the line, `steps_per_drift` stations per drift plus one after every
/// element.
pub fn scan_line(
    state: &ModeState,
    line: &OpticsLine,
    ctx: &ElectronContext,
    steps_per_drift: usize,
) -> Result<Vec<ScanPoint>> {
    let k = ctx.wavenumber();
    let steps = steps_per_drift.max(1);
    let mut z = 0.0;
    let mut s = *state;
    let mut points = vec![ScanPoint::of(z, &s, k)];
    for e in line.elements() {
        match *e {
            Element::Drift(l) => {
                let start = s;
                for i in 1..=steps {
                    let part = l * i as f64 / steps as f64;
                    let here = start.drift(part)?;
                    points.push(ScanPoint::of(z + part, &here, k));
                    if i == steps {
                        s = here;
                    }
                }
                z += l;
            }
            _ => {
                s = s.apply(e)?;
                points.push(ScanPoint::of(z, &s, k));
            }
        }
    }
    Ok(points)
}

/// Wrapped relative phase `arg(b/a)` change between two lab amplitude pairs,
/// or `None` when either coefficient vanishes.
pub fn relative_phase_change(before: [C64; 2], after: [C64; 2]) -> Option<f64> {
    let eps = 1e-12;
    if before.iter().chain(after.iter()).any(|c| c.norm() < eps) {
        return None;
    }
    Some(wrap_angle(
        (after[1] / after[0]).arg() - (before[1] / before[0]).arg(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, SQRT_2};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn wavelengths_match_relativistic_formula() {
        // oracle: λ = hc / √(E(E + 2 m₀c²)) with hc = 1.239841984e-9 keV·m
        let hc = 1.239_841_984e-9;
        for (e, expected_pm) in [(200.0, 2.5079), (100.0, 3.7014), (300.0, 1.9687)] {
            let ctx = wavenumber_from_energy(e).unwrap();
            let oracle = hc / (e * (e + 2.0 * ELECTRON_REST_ENERGY_KEV)).sqrt();
            assert!(close(ctx.wavelength(), oracle, 1e-9));
            assert!((ctx.wavelength() * 1e12 - expected_pm).abs() < 5e-5);
            assert!(close(ctx.wavenumber() * ctx.wavelength(), 2.0 * PI, 1e-15));
        }
        let k = wavenumber_from_energy(200.0).unwrap().wavenumber();
        assert!(close(k, 2.5053e12, 1e-4));
    }

    #[test]
    fn wavelength_decreases_with_energy() {
        let mut last = f64::INFINITY;
        for e in [1.0, 10.0, 60.0, 80.0, 120.0, 200.0, 300.0, 1000.0] {
            let l = wavenumber_from_energy(e).unwrap().wavelength();
            assert!(l < last);
            last = l;
        }
    }

    #[test]
    fn energy_must_be_positive() {
        assert!(matches!(
            wavenumber_from_energy(0.0),
            Err(Error::NonPositiveEnergy(_))
        ));
        assert!(wavenumber_from_energy(-5.0).is_err());
        assert!(wavenumber_from_energy(f64::NAN).is_err());
    }

    #[test]
    fn properties_at_waist_and_rayleigh_range() {
        let ctx = wavenumber_from_energy(200.0).unwrap();
        let k = ctx.wavenumber();
        let zr = 0.05;
        let w0 = (2.0 * zr / k).sqrt();

        let p = ComplexBeamParameter::at(0.0, zr).unwrap().properties(&ctx);
        assert!(close(p.width, w0, 1e-15));
        assert!(p.curvature_radius.is_infinite());
        assert_eq!(p.gouy, 0.0);

        let p = ComplexBeamParameter::at(zr, zr).unwrap().properties(&ctx);
        assert!(close(p.width, SQRT_2 * w0, 1e-14));
        assert!(close(p.curvature_radius, 2.0 * zr, 1e-14));
        assert!(close(p.gouy, FRAC_PI_4, 1e-15));

        let p = ComplexBeamParameter::at(-zr, zr).unwrap().properties(&ctx);
        assert!(close(p.gouy, -FRAC_PI_4, 1e-15));
        assert!(close(p.curvature_radius, -2.0 * zr, 1e-14));
    }

    #[test]
    fn rejects_non_physical_parameters() {
        assert!(ComplexBeamParameter::new(c(1.0, 0.0)).is_err());
        assert!(ComplexBeamParameter::new(c(1.0, -1.0)).is_err());
        assert!(ComplexBeamParameter::new(c(f64::NAN, 1.0)).is_err());
        let q = ComplexBeamParameter::at(0.0, 1.0).unwrap();
        assert!(matches!(q.apply_lens(0.0), Err(Error::InvalidFocalLength(_))));
    }

    #[test]
    fn propagation_examples() {
        let q = ComplexBeamParameter::at(0.0, 2.0).unwrap();
        assert_eq!(propagate(&q, 2.0).value(), c(2.0, 2.0));
        let q = ComplexBeamParameter::new(c(-0.080, 0.056569)).unwrap();
        let out = propagate(&q, 0.120);
        assert!((out.re() - 0.040).abs() < 1e-15);
        assert_eq!(out.rayleigh_range(), q.rayleigh_range());
        let a = propagate(&propagate(&q, 0.3), -0.7);
        let b = propagate(&q, 0.3 - 0.7);
        assert!((a.value() - b.value()).norm() < 1e-15);
    }

    #[test]
    fn lens_examples() {
        let f = 0.2;
        let q = ComplexBeamParameter::at(0.0, f).unwrap();
        let out = apply_lens(&q, f).unwrap().value();
        let expected = c(-1.0, 1.0) * (f / 2.0);
        assert!((out - expected).norm() < 1e-15);

        let q = ComplexBeamParameter::new(c(0.03, 0.011)).unwrap();
        let back = q.apply_lens(0.17).unwrap().apply_lens(-0.17).unwrap();
        assert!(q.relative_distance(&back) < 1e-14);
        // very weak lens approaches identity
        let weak = q.apply_lens(1e12).unwrap();
        assert!(q.relative_distance(&weak) < 1e-10);
    }

    #[test]
    fn analytic_overlap_matches_quadrature() {
        let k = wavenumber_from_energy(200.0).unwrap().wavenumber();
        let q1 = ComplexBeamParameter::new(c(0.0123, 0.0114)).unwrap();
        let q2 = ComplexBeamParameter::new(c(0.012, 0.0115)).unwrap();
        // trapezoid quadrature of the sampled modes, independent of the closed form
        let mode = |n: u8, q: &ComplexBeamParameter, x: f64| -> C64 {
            let w = q.width(k);
            let h = if n == 0 { 1.0 } else { 2.0 * SQRT_2 * x / w };
            let norm = ((2.0 / PI).sqrt() / (if n == 0 { 1.0 } else { 2.0 } * w)).sqrt();
            let g = C64::from_polar(1.0, (n as f64 + 0.5) * q.gouy());
            g * norm * h * (C64::new(0.0, -k * x * x / 2.0) / q.value()).exp()
        };
        let w = q1.width(k).max(q2.width(k));
        let n_pts = 40_000;
        let dx = 16.0 * w / n_pts as f64;
        for n in [0u8, 1] {
            let mut sum = C64::new(0.0, 0.0);
            for i in 0..n_pts {
                let x = (i as f64 - n_pts as f64 / 2.0) * dx;
                sum += mode(n, &q2, x).conj() * mode(n, &q1, x) * dx;
            }
            let closed = hg_overlap_1d(n, &q1, &q2, k);
            assert!((sum - closed).norm() < 1e-9, "n={n}: {sum} vs {closed}");
            let selfo = hg_overlap_1d(n, &q1, &q1, k);
            assert!((selfo - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn quadrupole_examples() {
        let q = ComplexBeamParameter::new(c(-0.08, 0.0566)).unwrap();
        let s = ModeState::new(q, [c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let off = s.apply_quadrupole(Excitation::Off, 0.3).unwrap();
        assert_eq!(off, s);
        let out = apply_quadrupole(&s, 0.17, 0.0).unwrap();
        assert_eq!(out.q_h(), q.apply_lens(0.17).unwrap());
        assert_eq!(out.q_v(), q.apply_lens(-0.17).unwrap());
        assert_eq!(out.amplitudes(), s.amplitudes());
        let back = apply_quadrupole(&out, -0.17, 0.0).unwrap();
        assert!(back.q_h().relative_distance(&q) < 1e-14);
        assert!(back.q_v().relative_distance(&q) < 1e-14);
    }

    #[test]
    fn quadrupole_at_right_angle_swaps_axes() {
        let q = ComplexBeamParameter::new(c(-0.08, 0.0566)).unwrap();
        let s = ModeState::new(q, [c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let a = apply_quadrupole(&s, 0.17, 0.0).unwrap();
        // stigmatic input adopts the quadrupole frame; follow with a
        // perpendicular quadrupole on the now astigmatic beam
        let b = apply_quadrupole(&a, 0.17, FRAC_PI_2).unwrap();
        assert!(b.q_h().relative_distance(&q) < 1e-14);
        let c2 = apply_quadrupole(&a, 0.1, 0.3);
        assert!(matches!(c2, Err(Error::AxisMismatch { .. })));
    }

    #[test]
    fn rotator_examples() {
        let q = ComplexBeamParameter::at(0.0, 1.0).unwrap();
        let s = ModeState::new(q, [c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(apply_rotator(&s, 0.0).unwrap().amplitudes(), s.amplitudes());
        let r = apply_rotator(&s, FRAC_PI_4).unwrap().amplitudes();
        assert!((r[0] - FRAC_1_SQRT_2).norm() < 1e-15 && (r[1] - FRAC_1_SQRT_2).norm() < 1e-15);
        let r = apply_rotator(&s, FRAC_PI_2).unwrap().amplitudes();
        assert!(r[0].norm() < 1e-15 && (r[1] - 1.0).norm() < 1e-15);

        let astig = apply_quadrupole(&s, 0.5, 0.0).unwrap();
        assert!(matches!(
            apply_rotator(&astig, 0.1),
            Err(Error::AstigmaticRotation(_))
        ));
    }

    #[test]
    fn drift_of_round_beam_has_no_relative_phase() {
        let q = ComplexBeamParameter::at(-0.03, 0.02).unwrap();
        let s = ModeState::new(q, [c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let out = propagate_line(&s, &OpticsLine::new(vec![Element::Drift(0.05)]).unwrap()).unwrap();
        assert_eq!(out.relative_phase(), 0.0);
        let dg = q.propagate(0.05).gouy() - q.gouy();
        assert!((out.common_phase() - 2.0 * dg).abs() < 1e-15);
        assert_eq!(out.amplitudes(), s.amplitudes());
    }

    #[test]
    fn empty_line_is_identity() {
        let q = ComplexBeamParameter::at(0.1, 0.02).unwrap();
        let s = ModeState::new(q, [c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        assert_eq!(propagate_line(&s, &OpticsLine::empty()).unwrap(), s);
    }

    #[test]
    fn negative_drift_rejected() {
        assert!(OpticsLine::new(vec![Element::Drift(-1.0)]).is_err());
        assert!(OpticsLine::new(vec![Element::lens(0.0)]).is_err());
    }

    #[test]
    fn scan_covers_line() {
        let ctx = wavenumber_from_energy(200.0).unwrap();
        let q = ComplexBeamParameter::new(c(-0.08, 0.0565685424949238)).unwrap();
        let s = ModeState::new(q, [c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let line = OpticsLine::new(vec![
            Element::quadrupole(-0.1697056274847714, 0.0),
            Element::Drift(0.12),
            Element::quadrupole(-0.1697056274847714, 0.0),
        ])
        .unwrap();
        let pts = scan_line(&s, &line, &ctx, 10).unwrap();
        assert_eq!(pts.len(), 1 + 1 + 10 + 1);
        assert!((pts.last().unwrap().z - 0.12).abs() < 1e-15);
        let end = propagate_line(&s, &line).unwrap();
        assert!((pts.last().unwrap().delta_phi_accum - end.relative_phase()).abs() < 1e-15);
    }
}
