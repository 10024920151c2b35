//! Two-quadrupole relative phase shifter design.
//!
//! Two quadrupoles of focal lengths `f1`, `f2` a distance `d` apart shift the
//! Gouy phase of `HG₀₁` relative to `HG₁₀` and leave a round beam behind the
//! second quadrupole, provided the incident beam is
//!
//! ```text
//! q_in = (-d·f1² + i·d²·f1·u) / (f1² + d²·u²),   u = sign(f1)·√(f1·f2/d² - 1).
//! ```
//!
//! With the quadrupoles acting `+f` on the horizontal axis, the relative phase
//! `arg(b/a)` gained between the quadrupoles is `δφ = -2·atan(1/u)`, i.e.
//! `u = -cot(δφ/2)`. `u → ±∞` is the no-shift limit (quadrupoles off) and
//! `u → 0⁻` the `δφ = π` limit (`f1 = f2 = -d`, a line focus), so both edge
//! phases get their own constructions in [`design_edge`].

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use log::warn;

use crate::beam::{
    hg_overlap_1d, propagate_line, ComplexBeamParameter, Element, ElectronContext, Excitation,
    ModeState, OpticsLine,
};
use crate::{wrap_angle, Error, Result, C64};

/// Phases closer than this to 0 or π are treated as the edge cases.
pub const EDGE_PHASE_EPSILON: f64 = 1e-12;
/// Phases closer than this to 0 or π give extreme Normal designs.
pub const NEAR_EDGE_WARNING: f64 = 1e-6;
/// Relative tolerance used to accept a design.
pub const DESIGN_TOLERANCE: f64 = 1e-9;
/// Minimum predicted fidelity for geometric-limit edge designs.
pub const GEOMETRIC_FIDELITY: f64 = 0.95;
/// Edge designs need a Rayleigh range `k·w²/2` of at least this many spacings.
pub const GEOMETRIC_LIMIT_FACTOR: f64 = 5.0;
/// Focal length the original simulations used in place of an infinite one.
pub const OFF_SURROGATE_FOCAL_LENGTH: f64 = 1000.0;

const ROOT_BRACKET_MAX: f64 = 1e3;

/// Relative phase shift `δφ = -2·atan(1/u)` in `(-π, π]`, evaluated as the
/// two-argument arctangent of `(-2u, u² - 1)`.
pub fn phase_from_u(u: f64) -> f64 {
    if u == 0.0 {
        return PI;
    }
    wrap_angle((-2.0 * u).atan2(u * u - 1.0))
}

fn is_edge(delta_phi: f64) -> bool {
    let p = wrap_angle(delta_phi);
    p.abs() <= EDGE_PHASE_EPSILON || (PI - p).abs() <= EDGE_PHASE_EPSILON
}

/// Inverse of [`phase_from_u`]: `u = -cot(δφ/2)`.
pub fn u_from_phase(delta_phi: f64) -> Result<f64> {
    let p = wrap_angle(delta_phi);
    if is_edge(p) {
        return Err(Error::EdgePhase(delta_phi));
    }
    if p.abs() < NEAR_EDGE_WARNING || PI - p.abs() < NEAR_EDGE_WARNING {
        warn!("phase {p} rad is within {NEAR_EDGE_WARNING} of an edge case; the design is extreme");
    }
    Ok(-1.0 / (0.5 * p).tan())
}

/// Choice of the one free design parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FreeParameter {
    /// Fix the first quadrupole's focal length.
    F1(f64),
    /// `f1 = f2`, which also gives equal input and output beam widths.
    Symmetric,
    /// Fix `Im q_in`; the weaker-quadrupole branch is chosen.
    InputRayleigh(f64),
    /// Fix `Im q_out`; the weaker-quadrupole branch is chosen.
    OutputRayleigh(f64),
}

/// Two round lenses separated by a gap that map one round beam onto another.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Relay {
    pub first: Option<f64>,
    pub gap: f64,
    pub second: Option<f64>,
}

impl Relay {
    /// Relay taking `from` onto `to`. Equal widths need a single lens,
    /// otherwise the gap is half the largest feasible one.
    pub fn between(from: &ComplexBeamParameter, to: &ComplexBeamParameter) -> Result<Relay> {
        let lens = |power: f64, scale: f64| (power.abs() * scale > 1e-12).then(|| 1.0 / power);
        let a = from.value().inv();
        let b = to.value().inv();
        let (p1, s1) = (a.re, -a.im);
        let (p2, s2) = (b.re, -b.im);
        let scale = 1.0 / s2;
        if (s1 - s2).abs() <= 1e-12 * s2 {
            return Ok(Relay {
                first: lens(p1 - p2, scale),
                gap: 0.0,
                second: None,
            });
        }
        let gap = 0.5 / (s1 * s2).sqrt();
        let disc = s1 / s2 - gap * gap * s1 * s1;
        if disc <= 0.0 {
            return Err(Error::RelayUnattainable(format!(
                "no real lens power for gap {gap} m"
            )));
        }
        let p = (disc.sqrt() - 1.0) / gap;
        let mid = (C64::new(p, -s1)).inv() + gap;
        let p_mid = mid.inv().re;
        Ok(Relay {
            first: lens(p1 - p, scale),
            gap,
            second: lens(p_mid - p2, scale),
        })
    }

    pub fn line(&self) -> OpticsLine {
        let mut elements = Vec::new();
        if let Some(f) = self.first {
            elements.push(Element::lens(f));
        }
        if self.gap > 0.0 {
            elements.push(Element::Drift(self.gap));
        }
        if let Some(f) = self.second {
            elements.push(Element::lens(f));
        }
        OpticsLine::new(elements).expect("relay elements are valid")
    }

    pub fn apply(&self, q: &ComplexBeamParameter) -> Result<ComplexBeamParameter> {
        let mut q = *q;
        if let Some(f) = self.first {
            q = q.apply_lens(f)?;
        }
        q = q.propagate(self.gap);
        if let Some(f) = self.second {
            q = q.apply_lens(f)?;
        }
        Ok(q)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DesignKind {
    Normal {
        u: f64,
        f1: f64,
        f2: f64,
    },
    /// Both quadrupoles off; geometric focus half way between them.
    QpsOff {
        w_geom: f64,
        surrogate: Option<f64>,
    },
    /// Both quadrupoles at `-d`; the beam passes a horizontal line focus.
    LineFocus {
        w_geom: f64,
    },
    Chained {
        stages: Vec<PhaseShifterDesign>,
        /// `relays[i]` sits between stage `i` and stage `i + 1`.
        relays: Vec<Option<Relay>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseShifterDesign {
    pub d: f64,
    /// Target relative phase in `(-π, π]`.
    pub delta_phi: f64,
    pub kind: DesignKind,
    /// Beam at the entrance of the first quadrupole.
    pub q_in: ComplexBeamParameter,
    /// Nominal round beam behind the last quadrupole.
    pub q_out: ComplexBeamParameter,
}

impl PhaseShifterDesign {
    pub fn u(&self) -> Option<f64> {
        match self.kind {
            DesignKind::Normal { u, .. } => Some(u),
            DesignKind::LineFocus { .. } => Some(0.0),
            _ => None,
        }
    }

    pub fn f1(&self) -> Option<f64> {
        match self.kind {
            DesignKind::Normal { f1, .. } => Some(f1),
            DesignKind::LineFocus { .. } => Some(-self.d),
            _ => None,
        }
    }

    pub fn f2(&self) -> Option<f64> {
        match self.kind {
            DesignKind::Normal { f2, .. } => Some(f2),
            DesignKind::LineFocus { .. } => Some(-self.d),
            _ => None,
        }
    }

    pub fn mode_name(&self) -> &'static str {
        match self.kind {
            DesignKind::Normal { .. } => "normal",
            DesignKind::QpsOff { .. } => "qps_off",
            DesignKind::LineFocus { .. } => "line_focus",
            DesignKind::Chained { .. } => "chained",
        }
    }

    pub fn w_geom(&self) -> Option<f64> {
        match self.kind {
            DesignKind::QpsOff { w_geom, .. } | DesignKind::LineFocus { w_geom } => Some(w_geom),
            _ => None,
        }
    }

    /// Replaces switched-off quadrupoles by very weak ones in the wave oracle.
    pub fn with_off_surrogate(mut self, focal_length: f64) -> Self {
        if let DesignKind::QpsOff { surrogate, .. } = &mut self.kind {
            *surrogate = Some(focal_length);
        }
        self
    }

    /// Quadrupoles and drifts from the first quadrupole to the last.
    pub fn line(&self) -> OpticsLine {
        let qp = |excitation| Element::Quadrupole {
            excitation,
            axis_angle: 0.0,
        };
        match &self.kind {
            DesignKind::Normal { f1, f2, .. } => OpticsLine::new(vec![
                qp(Excitation::On(*f1)),
                Element::Drift(self.d),
                qp(Excitation::On(*f2)),
            ]),
            DesignKind::QpsOff { surrogate, .. } => {
                let e = surrogate.map_or(Excitation::Off, Excitation::Surrogate);
                OpticsLine::new(vec![qp(e), Element::Drift(self.d), qp(e)])
            }
            DesignKind::LineFocus { .. } => OpticsLine::new(vec![
                qp(Excitation::On(-self.d)),
                Element::Drift(self.d),
                qp(Excitation::On(-self.d)),
            ]),
            DesignKind::Chained { stages, relays } => {
                let mut line = OpticsLine::empty();
                for (i, stage) in stages.iter().enumerate() {
                    line.extend(&stage.line());
                    if let Some(Some(relay)) = relays.get(i) {
                        line.extend(&relay.line());
                    }
                }
                Ok(line)
            }
        }
        .expect("design elements are valid")
    }

    /// The shifter embedded between a round transfer lens that turns a waist
    /// into `q_in` and a round lens that flattens the phase front of `q_out`.
    pub fn figure_setup(&self) -> FigureSetup {
        let waist_in = ComplexBeamParameter::new(C64::new(0.0, 1.0 / self.q_in.value().inv().im.abs()))
            .expect("positive");
        let waist_out =
            ComplexBeamParameter::new(C64::new(0.0, 1.0 / self.q_out.value().inv().im.abs()))
                .expect("positive");
        let mut line = OpticsLine::empty();
        let r_in = self.q_in.curvature_radius();
        if r_in.is_finite() {
            line.push(Element::lens(-r_in)).expect("finite");
        }
        line.extend(&self.line());
        let r_out = self.q_out.curvature_radius();
        if r_out.is_finite() {
            line.push(Element::lens(r_out)).expect("finite");
        }
        FigureSetup {
            input: waist_in,
            line,
            output: waist_out,
        }
    }

    /// Conditions under which the design is questionable.
    pub fn warnings(&self, ctx: &ElectronContext) -> Vec<String> {
        let mut out = Vec::new();
        let p = self.delta_phi;
        if let DesignKind::Normal { .. } = self.kind {
            if p.abs() < NEAR_EDGE_WARNING || PI - p.abs() < NEAR_EDGE_WARNING {
                out.push(format!(
                    "phase {p} rad is within {NEAR_EDGE_WARNING} of an edge case; Im[q_in] is nearly zero"
                ));
            }
        }
        if let Some(w) = self.w_geom() {
            let zr = 0.5 * ctx.wavenumber() * w * w;
            if zr < GEOMETRIC_LIMIT_FACTOR * self.d {
                out.push(format!(
                    "beam width {w} m is too small for the geometric limit (k w^2/2 = {zr} m < {GEOMETRIC_LIMIT_FACTOR} d)"
                ));
            }
        }
        if let DesignKind::Chained { stages, .. } = &self.kind {
            for s in stages {
                out.extend(s.warnings(ctx));
            }
        }
        out
    }
}

/// A shifter line bracketed by round lenses, running from waist to waist.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureSetup {
    pub input: ComplexBeamParameter,
    pub line: OpticsLine,
    pub output: ComplexBeamParameter,
}

fn check_spacing(d: f64) -> Result<()> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::InvalidSpacing(d));
    }
    Ok(())
}

/// `q_in` of the mode-matched incident beam.
fn matched_input(d: f64, f1: f64, u: f64) -> Result<ComplexBeamParameter> {
    let den = f1 * f1 + d * d * u * u;
    ComplexBeamParameter::new(C64::new(-d * f1 * f1 / den, d * d * f1 * u / den))
}

/// Solves `Im q_in(f1) = zr` on `d|u| ≤ |f1| ≤ 1e3·d|u|` by bisection.
fn solve_rayleigh(d: f64, u: f64, zr: f64) -> Result<f64> {
    let im = |t: f64| d * d * t * u.abs() / (t * t + d * d * u * u);
    let lo = d * u.abs();
    let hi = lo * ROOT_BRACKET_MAX;
    let (max, min) = (im(lo), im(hi));
    if !(zr > min && zr <= max) {
        return Err(Error::UnattainableRayleigh {
            target: zr,
            min,
            max,
        });
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if im(m) > zr {
            a = m;
        } else {
            b = m;
        }
        if (b - a) <= 1e-15 * b {
            break;
        }
    }
    Ok(u.signum() * 0.5 * (a + b))
}

/// Normal design for `δφ ∉ {0, π}`.
pub fn design(d: f64, delta_phi: f64, free: FreeParameter) -> Result<PhaseShifterDesign> {
    check_spacing(d)?;
    let delta_phi = wrap_angle(delta_phi);
    let u = u_from_phase(delta_phi)?;
    let f1 = match free {
        FreeParameter::F1(f1) => {
            if f1 == 0.0 || !f1.is_finite() {
                return Err(Error::InvalidFocalLength(f1));
            }
            if f1.signum() != u.signum() {
                return Err(Error::SignMismatch { f1, u });
            }
            f1
        }
        FreeParameter::Symmetric => u.signum() * d * (1.0 + u * u).sqrt(),
        FreeParameter::InputRayleigh(zr) => solve_rayleigh(d, u, zr)?,
        FreeParameter::OutputRayleigh(zr) => {
            // the line run backwards is the same problem with f1 and f2 swapped
            let f2 = solve_rayleigh(d, u, zr)?;
            d * d * (1.0 + u * u) / f2
        }
    };
    let f2 = d * d * (1.0 + u * u) / f1;
    let q_in = matched_input(d, f1, u)?;
    let q_out = q_in
        .apply_lens(f1)?
        .propagate(d)
        .apply_lens(f2)?;
    Ok(PhaseShifterDesign {
        d,
        delta_phi,
        kind: DesignKind::Normal { u, f1, f2 },
        q_in,
        q_out,
    })
}

/// Collects design constraints and refuses more than one free parameter.
#[derive(Debug, Clone, Default)]
pub struct DesignRequest {
    d: f64,
    delta_phi: f64,
    constraints: Vec<FreeParameter>,
}

impl DesignRequest {
    pub fn new(d: f64, delta_phi: f64) -> Self {
        Self {
            d,
            delta_phi,
            constraints: Vec::new(),
        }
    }

    pub fn constrain(mut self, c: FreeParameter) -> Self {
        self.constraints.push(c);
        self
    }

    /// Symmetric when no constraint was given.
    pub fn build(&self) -> Result<PhaseShifterDesign> {
        match self.constraints.as_slice() {
            [] => design(self.d, self.delta_phi, FreeParameter::Symmetric),
            [c] => design(self.d, self.delta_phi, *c),
            many => Err(Error::Overconstrained(many.len())),
        }
    }
}

/// Design for the edge phases: `0` switches both quadrupoles off with a
/// geometric focus at `d/2`, `π` sets both to `-d`. Both rely on a beam of
/// width `w_geom` large enough for the geometric limit.
pub fn design_edge(
    d: f64,
    delta_phi: f64,
    w_geom: f64,
    ctx: &ElectronContext,
) -> Result<PhaseShifterDesign> {
    check_spacing(d)?;
    let p = wrap_angle(delta_phi);
    let k = ctx.wavenumber();
    let design = if p.abs() <= EDGE_PHASE_EPSILON {
        let q_in = ComplexBeamParameter::from_width_curvature(w_geom, -0.5 * d, k)?;
        PhaseShifterDesign {
            d,
            delta_phi: 0.0,
            kind: DesignKind::QpsOff {
                w_geom,
                surrogate: None,
            },
            q_in,
            q_out: q_in.propagate(d),
        }
    } else if (PI - p).abs() <= EDGE_PHASE_EPSILON {
        let q_in = ComplexBeamParameter::from_width_curvature(w_geom, -d, k)?;
        // in the geometric limit the exit plane mirrors the entrance plane
        let q_out = ComplexBeamParameter::new(-q_in.value().conj())?;
        PhaseShifterDesign {
            d,
            delta_phi: PI,
            kind: DesignKind::LineFocus { w_geom },
            q_in,
            q_out,
        }
    } else {
        return Err(Error::NotAnEdgePhase(delta_phi));
    };
    for w in design.warnings(ctx) {
        warn!("{w}");
    }
    Ok(design)
}

/// Edge phase realized by two Normal stages: `π = π/2 + π/2` and
/// `0 = π/2 - π/2`, joined by a relay.
pub fn design_edge_chained(d: f64, delta_phi: f64, free: FreeParameter) -> Result<PhaseShifterDesign> {
    let p = wrap_angle(delta_phi);
    let second = if p.abs() <= EDGE_PHASE_EPSILON {
        -PI / 2.0
    } else if (PI - p).abs() <= EDGE_PHASE_EPSILON {
        PI / 2.0
    } else {
        return Err(Error::NotAnEdgePhase(delta_phi));
    };
    chain_with_relays(vec![design(d, PI / 2.0, free)?, design(d, second, free)?])
}

fn chained(stages: Vec<PhaseShifterDesign>, relays: Vec<Option<Relay>>) -> Result<PhaseShifterDesign> {
    if stages.len() == 1 {
        return Ok(stages.into_iter().next().expect("one stage"));
    }
    let first = stages.first().ok_or(Error::EmptyChain)?;
    let last = stages.last().expect("non-empty");
    let delta_phi = wrap_angle(stages.iter().map(|s| s.delta_phi).sum());
    Ok(PhaseShifterDesign {
        d: first.d,
        delta_phi,
        q_in: first.q_in,
        q_out: last.q_out,
        kind: DesignKind::Chained { stages, relays },
    })
}

/// Chains stages whose interfaces already match (`q_out ≈ next q_in`).
pub fn chain(designs: Vec<PhaseShifterDesign>) -> Result<PhaseShifterDesign> {
    if designs.is_empty() {
        return Err(Error::EmptyChain);
    }
    for (i, pair) in designs.windows(2).enumerate() {
        let residual = pair[0].q_out.relative_distance(&pair[1].q_in);
        if residual > DESIGN_TOLERANCE {
            return Err(Error::IncompatibleStages {
                index: i,
                next: i + 1,
                residual,
            });
        }
    }
    let relays = vec![None; designs.len() - 1];
    chained(designs, relays)
}

/// Chains stages, inserting a round-lens relay wherever interfaces differ.
pub fn chain_with_relays(designs: Vec<PhaseShifterDesign>) -> Result<PhaseShifterDesign> {
    if designs.is_empty() {
        return Err(Error::EmptyChain);
    }
    let mut relays = Vec::with_capacity(designs.len().saturating_sub(1));
    for pair in designs.windows(2) {
        if pair[0].q_out.relative_distance(&pair[1].q_in) <= DESIGN_TOLERANCE {
            relays.push(None);
        } else {
            relays.push(Some(Relay::between(&pair[0].q_out, &pair[1].q_in)?));
        }
    }
    chained(designs, relays)
}

/// Outcome of [`verify`].
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    /// `|q_h - q_v| / |q_h|` behind the last quadrupole.
    pub mode_match_residual: f64,
    /// Relative phase gained along the design line.
    pub achieved_phase: f64,
    /// `|wrap(achieved - target)|`.
    pub phase_error: f64,
    /// Relative deviation of the incident curvature from its design value
    /// (`-d` for Normal, `-d/2` for QpsOff, `-d` for LineFocus).
    pub curvature_residual: f64,
    /// Largest relay/stage interface mismatch of a chained design.
    pub interface_residual: f64,
    pub w_in: f64,
    pub w_out: f64,
    /// Set for designs that only work in the geometric limit.
    pub geometric_limit: bool,
    /// Fidelity expected for an equatorial input, from closed-form mode
    /// overlaps against the nominal output beam.
    pub predicted_fidelity: f64,
    pub passed: bool,
}

/// Analytic amplitudes of the line output against round reference modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// Coefficients of the lab-frame `HG₁₀`, `HG₀₁` of the reference beam.
    pub amplitudes: [C64; 2],
    /// Power outside the two reference modes.
    pub residual_power: f64,
}

/// Runs `line` analytically from the round beam `start` and projects the
/// result onto first-order modes of the round beam `reference`.
///
/// The propagated state tracks Gouy phases of the drifts; the projection
/// converts them to coefficients of the canonical modes (Gouy factor
/// included) at the output and applies closed-form overlaps per axis.
pub fn project_line(
    start: &ComplexBeamParameter,
    amplitudes: [C64; 2],
    line: &OpticsLine,
    reference: &ComplexBeamParameter,
    k: f64,
) -> Result<Projection> {
    let state = ModeState::new(*start, amplitudes)?;
    let out = propagate_line(&state, line)?;
    project_state(&out, start, reference, k)
}

/// Projection of an already propagated state, see [`project_line`].
pub fn project_state(
    out: &ModeState,
    start: &ComplexBeamParameter,
    reference: &ComplexBeamParameter,
    k: f64,
) -> Result<Projection> {
    let g0 = start.gouy();
    let dh = out.q_h().gouy() - g0;
    let dv = out.q_v().gouy() - g0;
    let common = C64::from_polar(1.0, out.common_phase());
    let [a, b] = out.amplitudes();
    let a = a * common * C64::from_polar(1.0, -(1.5 * dh + 0.5 * dv));
    let b = b * common * C64::from_polar(1.0, -(0.5 * dh + 1.5 * dv));

    let frame = out.frame_angle();
    let quarter = (frame / (PI / 2.0)).round();
    let aligned = (frame - quarter * PI / 2.0).abs() <= 1e-9;
    if !aligned && !out.is_stigmatic() {
        return Err(Error::AxisMismatch { axis: 0.0, frame });
    }
    // lab axes see (q_h, q_v) or, a quarter turn off, (q_v, q_h)
    let (qx, qy) = if aligned && (quarter as i64).rem_euclid(2) == 1 {
        (out.q_v(), out.q_h())
    } else {
        (out.q_h(), out.q_v())
    };
    let (s, c) = frame.sin_cos();
    let lab = [a * c - b * s, a * s + b * c];
    let amplitudes = [
        lab[0] * hg_overlap_1d(1, &qx, reference, k) * hg_overlap_1d(0, &qy, reference, k),
        lab[1] * hg_overlap_1d(0, &qx, reference, k) * hg_overlap_1d(1, &qy, reference, k),
    ];
    let residual_power = (1.0 - amplitudes[0].norm_sqr() - amplitudes[1].norm_sqr()).max(0.0);
    Ok(Projection {
        amplitudes,
        residual_power,
    })
}

/// Checks mode matching, the achieved phase and the incident curvature.
pub fn verify(design: &PhaseShifterDesign, ctx: &ElectronContext) -> Result<VerificationReport> {
    let k = ctx.wavenumber();
    let equatorial = [C64::from(FRAC_1_SQRT_2), C64::from(FRAC_1_SQRT_2)];
    let state = ModeState::new(design.q_in, equatorial)?;
    let out = propagate_line(&state, &design.line())?;
    let achieved_phase = wrap_angle(out.relative_phase());
    let phase_error = wrap_angle(achieved_phase - design.delta_phi).abs();
    let mode_match_residual = out.astigmatism();

    let projection = project_state(&out, &design.q_in, &design.q_out, k)?;
    let target = C64::from_polar(1.0, design.delta_phi);
    let overlap = (equatorial[0] * projection.amplitudes[0]
        + equatorial[1] * target.conj() * projection.amplitudes[1])
        .norm_sqr();

    let r_in = design.q_in.curvature_radius();
    let curvature_target = match design.kind {
        DesignKind::QpsOff { .. } => -0.5 * design.d,
        _ => -design.d,
    };
    let curvature_residual = ((r_in - curvature_target) / curvature_target).abs();

    let mut interface_residual: f64 = 0.0;
    let mut stages_pass = true;
    let mut geometric_limit = matches!(design.kind, DesignKind::LineFocus { .. });
    if let DesignKind::Chained { stages, relays } = &design.kind {
        for (i, stage) in stages.iter().enumerate() {
            let r = verify(stage, ctx)?;
            stages_pass &= r.passed;
            geometric_limit |= r.geometric_limit;
            if let Some(next) = stages.get(i + 1) {
                let joined = match relays.get(i).copied().flatten() {
                    Some(relay) => relay.apply(&stage.q_out)?,
                    None => stage.q_out,
                };
                interface_residual = interface_residual.max(joined.relative_distance(&next.q_in));
            }
        }
    }

    let exact_ok = mode_match_residual < DESIGN_TOLERANCE
        && phase_error < DESIGN_TOLERANCE
        && curvature_residual < DESIGN_TOLERANCE
        && interface_residual < DESIGN_TOLERANCE;
    let passed = stages_pass
        && if geometric_limit {
            overlap >= GEOMETRIC_FIDELITY && interface_residual < DESIGN_TOLERANCE
        } else {
            exact_ok
        };
    Ok(VerificationReport {
        mode_match_residual,
        achieved_phase,
        phase_error,
        curvature_residual,
        interface_residual,
        w_in: design.q_in.width(k),
        w_out: design.q_out.width(k),
        geometric_limit,
        predicted_fidelity: overlap,
        passed,
    })
}
