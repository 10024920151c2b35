//! Two-state layer on `span{HG₁₀, HG₀₁}`: Bloch states, 2×2 unitaries,
//! x–z–x Euler decomposition and compilation into hardware schedules.
//!
//! # Axis convention
//!
//! A state is `cos(θ/2)|0⟩ + sin(θ/2)·e^{iφ}|1⟩` up to a global phase, with
//! `|0⟩ = HG₁₀` and `|1⟩ = HG₀₁`. The two hardware operations are
//!
//! - a frame rotation by `α`, `(a, b) ↦ (a cos α - b sin α, a sin α + b cos α)`,
//!   which changes `θ` by `2α` on the `φ = 0` meridian, and
//! - a relative phase shifter, `(a, b) ↦ (a e^{-iδ/2}, b e^{iδ/2})`.
//!
//! They define the rotations used here:
//!
//! ```text
//! Rx(t) = [[cos t/2, -sin t/2], [sin t/2, cos t/2]]     (frame rotation by t/2)
//! Rz(t) = diag(e^{-it/2}, e^{it/2})                     (phase shift by t)
//! ```
//!
//! In standard Pauli labels `Rx(t) = exp(-i t σ_y / 2)`: the "x" axis of this
//! Bloch sphere is the one about which the physical frame rotation turns the
//! state. [`QubitState::bloch_vector`] uses the matching right-handed frame
//! `(X, Y, Z) = (⟨σ_y⟩, -⟨σ_x⟩, ⟨σ_z⟩)`, so `Rx` and `Rz` act on it as
//! ordinary SO(3) rotations about `X` and `Z`.

use std::f64::consts::PI;

use crate::beam::ElectronContext;
use crate::shifter::{design, design_edge, design_edge_chained, FreeParameter, PhaseShifterDesign};
use crate::{wrap_angle, wrap_positive, Error, Result, C64};

/// Tolerance on `‖U U† - I‖_F` for [`Unitary2::new`].
pub const UNITARY_TOLERANCE: f64 = 1e-10;
/// Rotation and phase stages smaller than this are dropped.
pub const ANGLE_EPSILON: f64 = 1e-12;

const POLE_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    a: C64,
    b: C64,
}

/// Polar angle, azimuth and global phase of a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochAngles {
    pub theta: f64,
    pub phi: f64,
    pub chi: f64,
}

impl QubitState {
    pub fn new(a: C64, b: C64) -> Result<Self> {
        let norm = a.norm_sqr() + b.norm_sqr();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { a, b })
    }

    /// Rescales a non-zero pair to unit norm.
    pub fn normalized(a: C64, b: C64) -> Result<Self> {
        let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::NotNormalized(n * n));
        }
        Ok(Self { a: a / n, b: b / n })
    }

    pub fn zero() -> Self {
        Self {
            a: C64::from(1.0),
            b: C64::from(0.0),
        }
    }

    pub fn one() -> Self {
        Self {
            a: C64::from(0.0),
            b: C64::from(1.0),
        }
    }

    pub fn from_angles(theta: f64, phi: f64) -> Result<Self> {
        Self::from_angles_with_phase(theta, phi, 0.0)
    }

    pub fn from_angles_with_phase(theta: f64, phi: f64, chi: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::AngleOutOfRange {
                name: "theta",
                value: theta,
                range: "[0, π]",
            });
        }
        if !(0.0..2.0 * PI).contains(&phi) {
            return Err(Error::AngleOutOfRange {
                name: "phi",
                value: phi,
                range: "[0, 2π)",
            });
        }
        let (s, c) = (0.5 * theta).sin_cos();
        Ok(Self {
            a: C64::from_polar(c, chi),
            b: C64::from_polar(s, phi + chi),
        })
    }

    pub fn amplitudes(&self) -> [C64; 2] {
        [self.a, self.b]
    }

    /// `(θ, φ, χ)` with `a = cos(θ/2) e^{iχ}`, `b = sin(θ/2) e^{i(φ+χ)}`.
    /// At the poles `φ = 0` and `χ` is the phase of the surviving amplitude.
    pub fn angles(&self) -> BlochAngles {
        let theta = 2.0 * self.b.norm().atan2(self.a.norm());
        if self.b.norm() < POLE_EPSILON {
            BlochAngles {
                theta: 0.0,
                phi: 0.0,
                chi: self.a.arg(),
            }
        } else if self.a.norm() < POLE_EPSILON {
            BlochAngles {
                theta: PI,
                phi: 0.0,
                chi: self.b.arg(),
            }
        } else {
            BlochAngles {
                theta,
                phi: wrap_positive(self.b.arg() - self.a.arg()),
                chi: self.a.arg(),
            }
        }
    }

    /// Bloch vector in the `(X, Y, Z)` frame of the module docs.
    pub fn bloch_vector(&self) -> [f64; 3] {
        let ab = self.a.conj() * self.b;
        let (sx, sy) = (2.0 * ab.re, 2.0 * ab.im);
        let sz = self.a.norm_sqr() - self.b.norm_sqr();
        [sy, -sx, sz]
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &QubitState) -> f64 {
        (self.a.conj() * other.a + self.b.conj() * other.b).norm_sqr()
    }

    pub fn with_global_phase(&self, chi: f64) -> Self {
        let g = C64::from_polar(1.0, chi);
        Self {
            a: self.a * g,
            b: self.b * g,
        }
    }
}

pub fn state_from_angles(theta: f64, phi: f64) -> Result<QubitState> {
    QubitState::from_angles(theta, phi)
}

pub fn angles_from_state(state: &QubitState) -> BlochAngles {
    state.angles()
}

/// 2×2 unitary matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2 {
    m: [[C64; 2]; 2],
}

fn frobenius(m: &[[C64; 2]; 2]) -> f64 {
    m.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn matmul(x: &[[C64; 2]; 2], y: &[[C64; 2]; 2]) -> [[C64; 2]; 2] {
    let mut out = [[C64::from(0.0); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = x[i][0] * y[0][j] + x[i][1] * y[1][j];
        }
    }
    out
}

impl Unitary2 {
    pub fn new(m: [[C64; 2]; 2]) -> Result<Self> {
        Self::with_tolerance(m, UNITARY_TOLERANCE)
    }

    pub fn with_tolerance(m: [[C64; 2]; 2], tolerance: f64) -> Result<Self> {
        let u = Self { m };
        let dev = u.unitarity_deviation();
        if !(dev <= tolerance) {
            return Err(Error::NotUnitary(dev));
        }
        Ok(u)
    }

    /// Accepts an approximately unitary matrix within `tolerance` and
    /// returns the closest unitary (Gram-Schmidt on the columns).
    pub fn projected(m: [[C64; 2]; 2], tolerance: f64) -> Result<Self> {
        Self::with_tolerance(m, tolerance)?;
        let c0 = [m[0][0], m[1][0]];
        let n0 = (c0[0].norm_sqr() + c0[1].norm_sqr()).sqrt();
        let c0 = [c0[0] / n0, c0[1] / n0];
        let c1 = [m[0][1], m[1][1]];
        let proj = c0[0].conj() * c1[0] + c0[1].conj() * c1[1];
        let c1 = [c1[0] - proj * c0[0], c1[1] - proj * c0[1]];
        let n1 = (c1[0].norm_sqr() + c1[1].norm_sqr()).sqrt();
        let c1 = [c1[0] / n1, c1[1] / n1];
        Ok(Self {
            m: [[c0[0], c1[0]], [c0[1], c1[1]]],
        })
    }

    pub fn identity() -> Self {
        let (o, z) = (C64::from(1.0), C64::from(0.0));
        Self { m: [[o, z], [z, o]] }
    }

    /// Frame rotation by `t/2`, see the module docs.
    pub fn rx(t: f64) -> Self {
        let (s, c) = (0.5 * t).sin_cos();
        Self {
            m: [[C64::from(c), C64::from(-s)], [C64::from(s), C64::from(c)]],
        }
    }

    /// Relative phase shift by `t`.
    pub fn rz(t: f64) -> Self {
        let z = C64::from(0.0);
        Self {
            m: [[C64::from_polar(1.0, -0.5 * t), z], [z, C64::from_polar(1.0, 0.5 * t)]],
        }
    }

    pub fn phase(chi: f64) -> Self {
        let g = C64::from_polar(1.0, chi);
        let z = C64::from(0.0);
        Self { m: [[g, z], [z, g]] }
    }

    pub fn matrix(&self) -> [[C64; 2]; 2] {
        self.m
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.m;
        Self {
            m: [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]],
        }
    }

    /// `self · other`.
    pub fn mul(&self, other: &Unitary2) -> Self {
        Self {
            m: matmul(&self.m, &other.m),
        }
    }

    pub fn det(&self) -> C64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn unitarity_deviation(&self) -> f64 {
        let p = matmul(&self.m, &self.adjoint().m);
        let mut d = p;
        d[0][0] -= 1.0;
        d[1][1] -= 1.0;
        frobenius(&d)
    }

    pub fn frobenius_distance(&self, other: &Unitary2) -> f64 {
        let mut d = self.m;
        for (i, row) in d.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell -= other.m[i][j];
            }
        }
        frobenius(&d)
    }

    /// `min_χ ‖self - e^{iχ} other‖_F`.
    pub fn distance_up_to_phase(&self, other: &Unitary2) -> f64 {
        let tr = (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .map(|(i, j)| other.m[i][j].conj() * self.m[i][j])
            .sum::<C64>();
        let chi = tr.arg();
        self.frobenius_distance(&Unitary2::phase(chi).mul(other))
    }

    pub fn apply(&self, state: &QubitState) -> QubitState {
        let m = &self.m;
        QubitState {
            a: m[0][0] * state.a + m[0][1] * state.b,
            b: m[1][0] * state.a + m[1][1] * state.b,
        }
    }
}

pub fn apply_unitary(u: &Unitary2, state: &QubitState) -> QubitState {
    u.apply(state)
}

/// `U = e^{iχ} · Rx(α2) · Rz(β) · Rx(α1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerAngles {
    pub alpha1: f64,
    pub beta: f64,
    pub alpha2: f64,
    pub chi: f64,
}

impl EulerAngles {
    pub fn unitary(&self) -> Unitary2 {
        Unitary2::phase(self.chi)
            .mul(&Unitary2::rx(self.alpha2))
            .mul(&Unitary2::rz(self.beta))
            .mul(&Unitary2::rx(self.alpha1))
    }
}

fn nontrivial(alpha: f64) -> bool {
    // Rx(2π) = -I is a global phase
    let a = wrap_positive(alpha);
    a > ANGLE_EPSILON && 2.0 * PI - a > ANGLE_EPSILON
}

/// x–z–x Euler angles with `α1, α2 ∈ [0, 2π)` and `β ∈ (-π, π]`.
///
/// Degenerate cases: for `β = 0` the rotations merge into `α1` and `α2 = 0`;
/// for `β = π` only `α1 - α2` matters and `α2 = 0` as well. Otherwise the
/// equivalent form `(α1 + π, -β, α2 + π)` is preferred when it needs fewer
/// non-trivial rotations.
pub fn euler_xzx_decompose(u: &Unitary2) -> EulerAngles {
    let det_phase = 0.5 * u.det().arg();
    let g = C64::from_polar(1.0, -det_phase);
    let x = u.m[0][0] * g;
    let y = u.m[1][0] * g;
    // cos(β/2)·e^{i(α1+α2)/2} and sin(β/2)·e^{i(α1-α2)/2}
    let a = C64::new(x.re, y.re);
    let b = C64::new(-x.im, y.im);
    let tol = 1e-14;
    let (alpha1, beta, alpha2) = if b.norm() < tol {
        (2.0 * a.arg(), 0.0, 0.0)
    } else if a.norm() < tol {
        (2.0 * b.arg(), PI, 0.0)
    } else {
        let half_beta = b.norm().atan2(a.norm());
        (a.arg() + b.arg(), 2.0 * half_beta, a.arg() - b.arg())
    };
    let (mut alpha1, mut beta, mut alpha2) =
        (wrap_positive(alpha1), wrap_angle(beta), wrap_positive(alpha2));
    if beta != 0.0 && beta != PI {
        let alt = (wrap_positive(alpha1 + PI), -beta, wrap_positive(alpha2 + PI));
        let count = |p: (f64, f64)| nontrivial(p.0) as u8 + nontrivial(p.1) as u8;
        if count((alt.0, alt.2)) < count((alpha1, alpha2)) {
            (alpha1, beta, alpha2) = alt;
        }
    }
    let mut angles = EulerAngles {
        alpha1,
        beta,
        alpha2,
        chi: 0.0,
    };
    let m = angles.unitary();
    let tr: C64 = (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .map(|(i, j)| m.m[i][j].conj() * u.m[i][j])
        .sum();
    angles.chi = wrap_angle(tr.arg());
    angles
}

/// One hardware step.
#[derive(Debug, Clone, PartialEq)]
pub enum Stage {
    /// Frame rotation by `angle`; realizes `Rx(2·angle)`.
    Rotate(f64),
    /// Relative phase shift; realizes `Rz(delta_phi)`.
    Shift {
        delta_phi: f64,
        design: PhaseShifterDesign,
    },
}

impl Stage {
    pub fn unitary(&self) -> Unitary2 {
        match self {
            Stage::Rotate(a) => Unitary2::rx(2.0 * a),
            Stage::Shift { delta_phi, .. } => Unitary2::rz(*delta_phi),
        }
    }
}

/// Stages in application order plus the global phase of the target unitary.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GateSchedule {
    pub stages: Vec<Stage>,
    pub global_phase: f64,
}

impl GateSchedule {
    /// `e^{iχ} · S_n ⋯ S_1`.
    pub fn unitary(&self) -> Unitary2 {
        self.stages
            .iter()
            .fold(Unitary2::phase(self.global_phase), |acc, s| {
                s.unitary().mul(&acc)
            })
    }
}

/// How compile realizes a `β = π` phase stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeStrategy {
    /// Two quarter-wave shifters joined by a relay.
    Chained,
    /// Quadrupoles at `-d` on a beam wide enough for the geometric limit.
    LineFocus { w_geom: f64, ctx: ElectronContext },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompileOptions {
    pub d: f64,
    pub free: FreeParameter,
    pub edge: EdgeStrategy,
}

pub fn compile(u: &Unitary2, d: f64, free: FreeParameter) -> Result<GateSchedule> {
    compile_with(
        u,
        &CompileOptions {
            d,
            free,
            edge: EdgeStrategy::Chained,
        },
    )
}

/// `[Rotate(α1/2), Shift(β), Rotate(α2/2)]` with trivial stages removed and
/// adjacent rotations merged.
pub fn compile_with(u: &Unitary2, options: &CompileOptions) -> Result<GateSchedule> {
    let e = euler_xzx_decompose(u);
    let mut global_phase = e.chi;
    let mut stages = Vec::with_capacity(3);
    stages.push(Stage::Rotate(0.5 * e.alpha1));
    if e.beta.abs() > ANGLE_EPSILON {
        let shifter = if PI - e.beta.abs() <= ANGLE_EPSILON {
            match options.edge {
                EdgeStrategy::Chained => design_edge_chained(options.d, PI, options.free)?,
                EdgeStrategy::LineFocus { w_geom, ctx } => design_edge(options.d, PI, w_geom, &ctx)?,
            }
        } else {
            design(options.d, e.beta, options.free)?
        };
        stages.push(Stage::Shift {
            delta_phi: shifter.delta_phi,
            design: shifter,
        });
    }
    stages.push(Stage::Rotate(0.5 * e.alpha2));

    let mut merged: Vec<Stage> = Vec::with_capacity(stages.len());
    for s in stages {
        match (merged.last_mut(), s) {
            (Some(Stage::Rotate(prev)), Stage::Rotate(a)) => *prev += a,
            (_, s) => merged.push(s),
        }
    }
    let mut out = Vec::with_capacity(merged.len());
    for s in merged {
        match s {
            Stage::Rotate(a) => {
                // rotating the frame by π flips both basis modes
                let turns = (a / PI).round();
                let rest = a - turns * PI;
                if (turns as i64).rem_euclid(2) == 1 {
                    global_phase += PI;
                }
                if rest.abs() > ANGLE_EPSILON {
                    out.push(Stage::Rotate(rest));
                }
            }
            shift => out.push(shift),
        }
    }
    Ok(GateSchedule {
        stages: out,
        global_phase: wrap_angle(global_phase),
    })
}

/// Applies the stage matrices in order (global phase not included).
pub fn simulate_schedule(schedule: &GateSchedule, state: &QubitState) -> QubitState {
    schedule
        .stages
        .iter()
        .fold(*state, |s, stage| stage.unitary().apply(&s))
}
