use clap::Args;

use qpgate_core::beam::ElectronContext;
use qpgate_core::shifter::{
    design, design_edge, design_edge_chained, verify, FreeParameter, EDGE_PHASE_EPSILON,
};
use qpgate_core::wrap_angle;

use crate::documents::{to_json, DesignDocument, VerificationDocument};
use crate::error::{CliResult, EXIT_NUMERICAL};
use crate::units::{parse_angle, parse_energy, parse_length};

#[derive(Debug, Args)]
pub struct DesignArgs {
    /// Quadrupole spacing, e.g. 120mm.
    #[arg(long = "d", value_parser = parse_length)]
    pub d: f64,
    /// Target relative phase, e.g. 90deg.
    #[arg(long, value_parser = parse_angle, allow_hyphen_values = true)]
    pub phase: f64,
    /// Equal quadrupole strengths (default for non-edge phases).
    #[arg(long, group = "free")]
    pub symmetric: bool,
    /// Focal length of the first quadrupole.
    #[arg(long, value_parser = parse_length, allow_hyphen_values = true, group = "free")]
    pub f1: Option<f64>,
    /// Rayleigh range of the incident beam.
    #[arg(long, value_parser = parse_length, group = "free")]
    pub rayleigh: Option<f64>,
    /// Rayleigh range of the outgoing beam.
    #[arg(long = "output-rayleigh", value_parser = parse_length, group = "free")]
    pub output_rayleigh: Option<f64>,
    /// Kinetic energy, keV when no unit is given.
    #[arg(long, value_parser = parse_energy, default_value = "200")]
    pub energy: f64,
    /// Beam width for the 0 and π edge designs.
    #[arg(long = "w-geom", value_parser = parse_length, default_value = "1000nm")]
    pub w_geom: f64,
    /// Finite focal length standing in for switched-off quadrupoles in the
    /// wave engine, e.g. 1km.
    #[arg(long, value_parser = parse_length)]
    pub surrogate: Option<f64>,
    /// Realize π as two chained π/2 shifters instead of a line focus.
    #[arg(long)]
    pub chain: bool,
    /// Check the design and exit non-zero if the check fails.
    #[arg(long)]
    pub verify: bool,
}

impl DesignArgs {
    fn free(&self) -> Option<FreeParameter> {
        if let Some(f) = self.f1 {
            Some(FreeParameter::F1(f))
        } else if let Some(z) = self.rayleigh {
            Some(FreeParameter::InputRayleigh(z))
        } else if let Some(z) = self.output_rayleigh {
            Some(FreeParameter::OutputRayleigh(z))
        } else if self.symmetric {
            Some(FreeParameter::Symmetric)
        } else {
            None
        }
    }
}

pub fn run(args: &DesignArgs) -> CliResult<(String, i32)> {
    let ctx = ElectronContext::from_energy_kev(args.energy)?;
    let p = wrap_angle(args.phase);
    let edge_zero = p.abs() <= EDGE_PHASE_EPSILON;
    let edge_pi = std::f64::consts::PI - p.abs() <= EDGE_PHASE_EPSILON;
    let free = args.free();
    let (des, note) = if edge_pi && args.chain {
        let des = design_edge_chained(args.d, p, free.unwrap_or(FreeParameter::Symmetric))?;
        (des, Some("two π/2 shifters joined by a relay".to_string()))
    } else if (edge_zero || edge_pi) && free.is_none() {
        let mut des = design_edge(args.d, p, args.w_geom, &ctx)?;
        if let Some(f) = args.surrogate {
            des = des.with_off_surrogate(f);
        }
        let note = if edge_zero {
            format!(
                "quadrupoles off; geometric focus at {} mm (d/2)",
                fmt_mm(0.5 * args.d)
            )
        } else {
            format!(
                "quadrupoles at f = -d = {} mm; horizontal line focus, valid in the geometric limit",
                fmt_mm(-args.d)
            )
        };
        (des, Some(note))
    } else {
        (design(args.d, p, free.unwrap_or(FreeParameter::Symmetric))?, None)
    };
    for w in des.warnings(&ctx) {
        log::warn!("{w}");
    }
    let mut doc = DesignDocument::from_design(&des, &ctx);
    doc.note = note;
    let mut code = 0;
    if args.verify {
        let report = verify(&des, &ctx)?;
        if !report.passed {
            code = EXIT_NUMERICAL;
        }
        doc.verification = Some(VerificationDocument::from(&report));
    }
    Ok((to_json(&doc), code))
}

fn fmt_mm(v: f64) -> String {
    let mm = v * 1e3;
    if (mm - mm.round()).abs() < 1e-9 {
        format!("{}", mm.round())
    } else {
        format!("{mm:.3}")
    }
}
