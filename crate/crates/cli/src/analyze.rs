use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use qpgate_core::beam::ComplexBeamParameter;
use qpgate_core::gates::QubitState;
use qpgate_core::wave::{modal_overlap, oam_expectation, read_dump_file, render_rgb, FieldGrid};
use qpgate_core::{Error, C64};

use crate::documents::to_json;
use crate::error::{CliError, CliResult};
use crate::units::{parse_angle_pair, parse_length};

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Field dump written by `simulate --dump-fields`.
    #[arg(long)]
    pub field: PathBuf,
    /// Reference beam: a Rayleigh range (beam at its waist), or
    /// `w0,z` for a waist width and the distance from the waist. Estimated
    /// from the field when omitted.
    #[arg(long, allow_hyphen_values = true)]
    pub reference: Option<String>,
    /// Target state (theta, phi) for the fidelity.
    #[arg(long, value_parser = parse_angle_pair, allow_hyphen_values = true)]
    pub target: Option<(f64, f64)>,
    /// Write a PNG with amplitude as brightness and phase as hue.
    #[arg(long)]
    pub render: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct ComplexDocument {
    re: f64,
    im: f64,
}

impl From<C64> for ComplexDocument {
    fn from(c: C64) -> Self {
        Self { re: c.re, im: c.im }
    }
}

#[derive(Debug, Serialize)]
struct ReferenceDocument {
    re_m: f64,
    im_m: f64,
    estimated: bool,
}

#[derive(Debug, Serialize)]
struct AnalysisDocument {
    a: ComplexDocument,
    b: ComplexDocument,
    residual_power: f64,
    theta_rad: f64,
    phi_rad: f64,
    chi_rad: f64,
    fidelity: Option<f64>,
    oam_hbar: f64,
    reference: ReferenceDocument,
    #[serde(rename = "energy_keV")]
    energy_kev: f64,
    z_m: f64,
    n: usize,
}

fn parse_reference(s: &str, k: f64) -> CliResult<ComplexBeamParameter> {
    let input = |e: String| CliError::Input(format!("--reference: {e}"));
    let q = match s.split_once(',') {
        None => ComplexBeamParameter::new(C64::new(0.0, parse_length(s).map_err(input)?)),
        Some((w, z)) => {
            let w0 = parse_length(w).map_err(input)?;
            let z = parse_length(z).map_err(input)?;
            ComplexBeamParameter::waist(w0, k).map(|q| q.propagate(z))
        }
    };
    q.map_err(|e| CliError::Input(format!("--reference: {e}")))
}

/// Round beam with the field's rms radius and mean wavefront curvature.
/// For any first-order state `⟨x² + y²⟩ = w²`.
fn estimate_reference(field: &FieldGrid) -> CliResult<ComplexBeamParameter> {
    let n = field.n();
    let xs = field.spec().coords();
    let k = field.ctx().wavenumber();
    let inv = 0.5 / field.dx();
    let s = field.samples();
    let (mut p, mut r2, mut flow) = (0.0, 0.0, 0.0);
    for iy in 1..n - 1 {
        for ix in 1..n - 1 {
            let psi = s[iy * n + ix];
            let i = psi.norm_sqr();
            let (x, y) = (xs[ix], xs[iy]);
            let dx = (s[iy * n + ix + 1] - s[iy * n + ix - 1]) * inv;
            let dy = (s[(iy + 1) * n + ix] - s[(iy - 1) * n + ix]) * inv;
            p += i;
            r2 += i * (x * x + y * y);
            // radial phase gradient, -k r / R for exp(-i k r² / 2R)
            flow += (psi.conj() * (dx * x + dy * y)).im;
        }
    }
    if !(p > 0.0) {
        return Err(CliError::Input("field is empty".into()));
    }
    let w2 = r2 / p;
    let inv_r = -flow / (k * r2);
    // 1/q = 1/R - 2i/(k w²)
    let inv_q = C64::new(inv_r, -2.0 / (k * w2));
    Ok(ComplexBeamParameter::new(inv_q.inv())?)
}

pub fn run(args: &AnalyzeArgs) -> CliResult<String> {
    let field = read_dump_file(&args.field).map_err(|e| match e {
        Error::Io(io) => CliError::io(&args.field, io),
        other => CliError::Input(format!("{}: {other}", args.field.display())),
    })?;
    let k = field.ctx().wavenumber();
    let (reference, estimated) = match &args.reference {
        Some(s) => (parse_reference(s, k)?, false),
        None => (estimate_reference(&field)?, true),
    };
    let target = args
        .target
        .map(|(t, p)| QubitState::from_angles(t, p))
        .transpose()?;
    let r = modal_overlap(&field, &reference, target.as_ref())?;
    if let Some(path) = &args.render {
        let img = render_rgb(&field);
        image::RgbImage::from_raw(img.width, img.height, img.pixels)
            .expect("buffer matches dimensions")
            .save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    }
    let doc = AnalysisDocument {
        a: r.a.into(),
        b: r.b.into(),
        residual_power: r.residual_power,
        theta_rad: r.theta,
        phi_rad: r.phi,
        chi_rad: r.chi,
        fidelity: r.fidelity,
        oam_hbar: oam_expectation(&field),
        reference: ReferenceDocument {
            re_m: reference.value().re,
            im_m: reference.value().im,
            estimated,
        },
        energy_kev: field.ctx().kinetic_energy_kev(),
        z_m: field.z(),
        n: field.n(),
    };
    Ok(to_json(&doc))
}
