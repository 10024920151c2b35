//! Unit-suffixed command-line values. Bare numbers are rejected except for
//! energies, which default to keV.

use std::f64::consts::PI;

fn split_number<'a>(s: &'a str, units: &[(&'a str, f64)], what: &str) -> Result<f64, String> {
    let s = s.trim();
    for (suffix, scale) in units {
        if let Some(number) = s.strip_suffix(suffix) {
            let number = number.trim_end();
            let v: f64 = number
                .parse()
                .map_err(|_| format!("cannot parse {what} '{s}': '{number}' is not a number"))?;
            if !v.is_finite() {
                return Err(format!("{what} '{s}' is not finite"));
            }
            return Ok(v * scale);
        }
    }
    let names: Vec<&str> = units.iter().map(|(u, _)| *u).collect();
    Err(format!(
        "{what} '{s}' needs a unit suffix ({})",
        names.join(", ")
    ))
}

/// Lengths in m, nm, µm/um, mm, km or pm.
pub fn parse_length(s: &str) -> Result<f64, String> {
    split_number(
        s,
        &[
            ("nm", 1e-9),
            ("um", 1e-6),
            ("µm", 1e-6),
            ("mm", 1e-3),
            ("km", 1e3),
            ("pm", 1e-12),
            ("m", 1.0),
        ],
        "length",
    )
}

/// Angles in deg or rad.
pub fn parse_angle(s: &str) -> Result<f64, String> {
    split_number(s, &[("deg", PI / 180.0), ("rad", 1.0)], "angle")
}

/// Kinetic energy in keV; also accepts eV and MeV suffixes.
pub fn parse_energy(s: &str) -> Result<f64, String> {
    let t = s.trim();
    if let Ok(v) = t.parse::<f64>() {
        return Ok(v);
    }
    split_number(t, &[("keV", 1.0), ("MeV", 1e3), ("eV", 1e-3)], "energy")
}

/// Two comma-separated angles, e.g. `90deg,45deg`.
/// Bloch angles `theta,phi`; phi is wrapped into [0, 2π).
pub fn parse_angle_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected two comma-separated angles, got '{s}'"))?;
    let tau = std::f64::consts::TAU;
    let phi = parse_angle(b)?.rem_euclid(tau);
    Ok((parse_angle(a)?, if phi >= tau { 0.0 } else { phi }))
}
