//! JSON documents written and read by the CLI.
//!
//! Floats are printed with 17 significant digits so that serialize → parse
//! → serialize is a fixed point.

use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use qpgate_core::beam::{ComplexBeamParameter, ElectronContext};
use qpgate_core::gates::{GateSchedule, Stage, Unitary2};
use qpgate_core::shifter::{DesignKind, PhaseShifterDesign, Relay, VerificationReport};
use qpgate_core::C64;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QDocument {
    pub re_m: f64,
    pub im_m: f64,
}

impl QDocument {
    pub fn from_q(q: &ComplexBeamParameter) -> Self {
        Self {
            re_m: q.value().re,
            im_m: q.value().im,
        }
    }

    pub fn to_q(&self) -> CliResult<ComplexBeamParameter> {
        Ok(ComplexBeamParameter::new(C64::new(self.re_m, self.im_m))?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerificationDocument {
    pub mode_match_residual: f64,
    pub achieved_phase_rad: f64,
    pub curvature_residual: f64,
    pub interface_residual: f64,
    pub predicted_fidelity: f64,
    pub geometric_limit: bool,
    pub passed: bool,
}

impl From<&VerificationReport> for VerificationDocument {
    fn from(r: &VerificationReport) -> Self {
        Self {
            mode_match_residual: r.mode_match_residual,
            achieved_phase_rad: r.achieved_phase,
            curvature_residual: r.curvature_residual,
            interface_residual: r.interface_residual,
            predicted_fidelity: r.predicted_fidelity,
            geometric_limit: r.geometric_limit,
            passed: r.passed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelayDocument {
    pub first_f_m: Option<f64>,
    pub gap_m: f64,
    pub second_f_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignDocument {
    #[serde(rename = "energy_keV")]
    pub energy_kev: f64,
    pub d_m: f64,
    pub delta_phi_rad: f64,
    pub mode: String,
    pub u: Option<f64>,
    pub f1_m: Option<f64>,
    pub f2_m: Option<f64>,
    pub q_in: QDocument,
    pub q_out: QDocument,
    pub w_in_m: f64,
    pub w_out_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_geom_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surrogate_f_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stages: Option<Vec<DesignDocument>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relays: Option<Vec<Option<RelayDocument>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl DesignDocument {
    pub fn from_design(design: &PhaseShifterDesign, ctx: &ElectronContext) -> Self {
        let k = ctx.wavenumber();
        let (stages, relays) = match &design.kind {
            DesignKind::Chained { stages, relays } => (
                Some(stages.iter().map(|s| Self::from_design(s, ctx)).collect()),
                Some(
                    relays
                        .iter()
                        .map(|r| {
                            r.map(|r| RelayDocument {
                                first_f_m: r.first,
                                gap_m: r.gap,
                                second_f_m: r.second,
                            })
                        })
                        .collect(),
                ),
            ),
            _ => (None, None),
        };
        let surrogate = match design.kind {
            DesignKind::QpsOff { surrogate, .. } => surrogate,
            _ => None,
        };
        Self {
            energy_kev: ctx.kinetic_energy_kev(),
            d_m: design.d,
            delta_phi_rad: design.delta_phi,
            mode: design.mode_name().to_string(),
            u: design.u(),
            f1_m: design.f1(),
            f2_m: design.f2(),
            q_in: QDocument::from_q(&design.q_in),
            q_out: QDocument::from_q(&design.q_out),
            w_in_m: design.q_in.width(k),
            w_out_m: design.q_out.width(k),
            w_geom_m: design.w_geom(),
            surrogate_f_m: surrogate,
            stages,
            relays,
            verification: None,
            note: None,
        }
    }

    pub fn context(&self) -> CliResult<ElectronContext> {
        Ok(ElectronContext::from_energy_kev(self.energy_kev)?)
    }

    /// Rebuilds the design described by the document.
    pub fn to_design(&self) -> CliResult<PhaseShifterDesign> {
        let missing = |field: &str| {
            CliError::Input(format!("design document of mode '{}' needs '{field}'", self.mode))
        };
        let kind = match self.mode.as_str() {
            "normal" => DesignKind::Normal {
                u: self.u.ok_or_else(|| missing("u"))?,
                f1: self.f1_m.ok_or_else(|| missing("f1_m"))?,
                f2: self.f2_m.ok_or_else(|| missing("f2_m"))?,
            },
            "qps_off" => DesignKind::QpsOff {
                w_geom: self.w_geom_m.ok_or_else(|| missing("w_geom_m"))?,
                surrogate: self.surrogate_f_m,
            },
            "line_focus" => DesignKind::LineFocus {
                w_geom: self.w_geom_m.ok_or_else(|| missing("w_geom_m"))?,
            },
            "chained" => {
                let stages = self
                    .stages
                    .as_ref()
                    .ok_or_else(|| missing("stages"))?
                    .iter()
                    .map(|s| s.to_design())
                    .collect::<CliResult<Vec<_>>>()?;
                let relays = self
                    .relays
                    .clone()
                    .unwrap_or_default()
                    .into_iter()
                    .map(|r| {
                        r.map(|r| Relay {
                            first: r.first_f_m,
                            gap: r.gap_m,
                            second: r.second_f_m,
                        })
                    })
                    .collect();
                DesignKind::Chained { stages, relays }
            }
            other => return Err(CliError::Input(format!("unknown design mode '{other}'"))),
        };
        if !(self.d_m > 0.0) || !self.d_m.is_finite() {
            return Err(CliError::Input(format!("d_m must be positive, got {}", self.d_m)));
        }
        let design = PhaseShifterDesign {
            d: self.d_m,
            delta_phi: self.delta_phi_rad,
            kind,
            q_in: self.q_in.to_q()?,
            q_out: self.q_out.to_q()?,
        };
        qpgate_core::beam::OpticsLine::new(design.line().elements().to_vec())?;
        Ok(design)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum StageDocument {
    Rotate {
        angle_rad: f64,
    },
    Shift {
        delta_phi_rad: f64,
        design: DesignDocument,
    },
}

/// Row-major 2×2 matrix of `[re, im]` pairs.
pub type MatrixDocument = [[[f64; 2]; 2]; 2];

pub fn matrix_document(u: &Unitary2) -> MatrixDocument {
    u.matrix().map(|row| row.map(|c| [c.re, c.im]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleDocument {
    #[serde(rename = "energy_keV")]
    pub energy_kev: f64,
    pub stages: Vec<StageDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_unitary: Option<MatrixDocument>,
    pub global_phase_rad: f64,
}

impl ScheduleDocument {
    pub fn from_schedule(schedule: &GateSchedule, ctx: &ElectronContext, source: Option<&Unitary2>) -> Self {
        let stages = schedule
            .stages
            .iter()
            .map(|s| match s {
                Stage::Rotate(a) => StageDocument::Rotate { angle_rad: *a },
                Stage::Shift { delta_phi, design } => StageDocument::Shift {
                    delta_phi_rad: *delta_phi,
                    design: DesignDocument::from_design(design, ctx),
                },
            })
            .collect();
        Self {
            energy_kev: ctx.kinetic_energy_kev(),
            stages,
            source_unitary: source.map(matrix_document),
            global_phase_rad: schedule.global_phase,
        }
    }

    pub fn context(&self) -> CliResult<ElectronContext> {
        Ok(ElectronContext::from_energy_kev(self.energy_kev)?)
    }

    pub fn to_schedule(&self) -> CliResult<GateSchedule> {
        let stages = self
            .stages
            .iter()
            .map(|s| {
                Ok(match s {
                    StageDocument::Rotate { angle_rad } => Stage::Rotate(*angle_rad),
                    StageDocument::Shift {
                        delta_phi_rad,
                        design,
                    } => Stage::Shift {
                        delta_phi: *delta_phi_rad,
                        design: design.to_design()?,
                    },
                })
            })
            .collect::<CliResult<Vec<_>>>()?;
        Ok(GateSchedule {
            stages,
            global_phase: self.global_phase_rad,
        })
    }
}

/// Pretty printer that writes every float as `{:.16e}`.
struct FixedDigits(PrettyFormatter<'static>);

impl Formatter for FixedDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedDigits(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("documents serialize");
    out.push(b'\n');
    String::from_utf8(out).expect("JSON is UTF-8")
}

pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| CliError::Input(format!("invalid {what}: {e}")))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &std::path::Path, what: &str) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    from_json(&text, what)
}
