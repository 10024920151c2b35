use std::str::FromStr;

use clap::{ArgGroup, Args, ValueEnum};

use qpgate_core::beam::ElectronContext;
use qpgate_core::gates::{compile_with, CompileOptions, EdgeStrategy, QubitState, Unitary2};
use qpgate_core::shifter::FreeParameter;
use qpgate_core::C64;

use crate::documents::{to_json, ScheduleDocument};
use crate::error::{CliError, CliResult};
use crate::units::{parse_angle_pair, parse_energy, parse_length};

/// Unitarity tolerance for matrices given on the command line.
const INPUT_UNITARY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EdgeChoice {
    /// Two π/2 shifters joined by a relay.
    Chained,
    /// Quadrupoles at -d on a wide beam.
    LineFocus,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("input").required(true).args(["unitary", "target"])))]
pub struct DecomposeArgs {
    /// Matrix rows separated by ';', entries by ',', e.g. "0,1;1,0" or
    /// "0.7071,-0.7071i;-0.7071i,0.7071".
    #[arg(long, allow_hyphen_values = true)]
    pub unitary: Option<String>,
    /// Prepare (theta, phi) from HG10, e.g. 90deg,45deg.
    #[arg(long, value_parser = parse_angle_pair, allow_hyphen_values = true)]
    pub target: Option<(f64, f64)>,
    /// Quadrupole spacing of every shifter stage.
    #[arg(long = "d", value_parser = parse_length, default_value = "120mm")]
    pub d: f64,
    /// Kinetic energy, keV when no unit is given.
    #[arg(long, value_parser = parse_energy, default_value = "200")]
    pub energy: f64,
    /// Realization of a π phase stage.
    #[arg(long, value_enum, default_value = "chained")]
    pub edge: EdgeChoice,
    /// Beam width for a line-focus π stage.
    #[arg(long = "w-geom", value_parser = parse_length, default_value = "1000nm")]
    pub w_geom: f64,
}

fn parse_entry(s: &str) -> CliResult<C64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    C64::from_str(&t).map_err(|_| CliError::Input(format!("cannot parse matrix entry '{s}'")))
}

pub fn parse_matrix(s: &str) -> CliResult<[[C64; 2]; 2]> {
    let rows: Vec<&str> = s.split(';').collect();
    if rows.len() != 2 {
        return Err(CliError::Input(format!("expected 2 rows separated by ';', got {}", rows.len())));
    }
    let mut m = [[C64::from(0.0); 2]; 2];
    for (i, row) in rows.iter().enumerate() {
        let entries: Vec<&str> = row.split(',').collect();
        if entries.len() != 2 {
            return Err(CliError::Input(format!("row {} needs 2 entries, got {}", i + 1, entries.len())));
        }
        for (j, e) in entries.iter().enumerate() {
            m[i][j] = parse_entry(e)?;
        }
    }
    Ok(m)
}

pub fn run(args: &DecomposeArgs) -> CliResult<String> {
    let ctx = ElectronContext::from_energy_kev(args.energy)?;
    let u = match (&args.unitary, args.target) {
        (Some(text), _) => Unitary2::projected(parse_matrix(text)?, INPUT_UNITARY_TOLERANCE)?,
        (None, Some((theta, phi))) => {
            // validates the angle ranges
            QubitState::from_angles(theta, phi)?;
            Unitary2::rz(phi).mul(&Unitary2::rx(theta))
        }
        (None, None) => unreachable!("clap requires one input"),
    };
    let edge = match args.edge {
        EdgeChoice::Chained => EdgeStrategy::Chained,
        EdgeChoice::LineFocus => EdgeStrategy::LineFocus {
            w_geom: args.w_geom,
            ctx,
        },
    };
    let options = CompileOptions {
        d: args.d,
        free: FreeParameter::Symmetric,
        edge,
    };
    let schedule = compile_with(&u, &options)?;
    Ok(to_json(&ScheduleDocument::from_schedule(&schedule, &ctx, Some(&u))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrices() {
        let m = parse_matrix("0, -i; i, 0").unwrap();
        assert_eq!(m[0][1], C64::new(0.0, -1.0));
        assert_eq!(m[1][0], C64::new(0.0, 1.0));
        let m = parse_matrix("0.6+0.8i,0;0,1e-1-2i").unwrap();
        assert_eq!(m[0][0], C64::new(0.6, 0.8));
        assert_eq!(m[1][1], C64::new(0.1, -2.0));
        assert!(parse_matrix("1,0").is_err());
        assert!(parse_matrix("1,0;0,x").is_err());
    }
}
