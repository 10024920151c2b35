use std::cell::RefCell;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, ValueEnum};
use serde::Serialize;

use qpgate_core::beam::{scan_line, ComplexBeamParameter, ElectronContext, ModeState};
use qpgate_core::gates::{GateSchedule, QubitState, Stage, Unitary2};
use qpgate_core::shifter::project_line;
use qpgate_core::wave::{run_schedule, write_dump_file, DEFAULT_GRID};
use qpgate_core::wrap_angle;

use crate::documents::{read_json, to_json, DesignDocument, ScheduleDocument};
use crate::error::{CliError, CliResult};
use crate::units::parse_angle_pair;

const SCAN_STEPS_PER_DRIFT: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Engine {
    Analytic,
    Wave,
    Both,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["schedule", "design"])))]
pub struct SimulateArgs {
    /// Schedule document from `decompose`.
    #[arg(long)]
    pub schedule: Option<PathBuf>,
    /// Design document from `design`.
    #[arg(long)]
    pub design: Option<PathBuf>,
    /// Input state (theta, phi), e.g. 90deg,0deg.
    #[arg(long, value_parser = parse_angle_pair, default_value = "90deg,0deg", allow_hyphen_values = true)]
    pub input: (f64, f64),
    #[arg(long, value_enum, default_value = "both")]
    pub engine: Engine,
    /// Wave grid size N (power of two).
    #[arg(long, default_value_t = DEFAULT_GRID)]
    pub grid: usize,
    /// Directory for field dumps after every element.
    #[arg(long = "dump-fields")]
    pub dump_fields: Option<PathBuf>,
    /// CSV file for the analytic axial scan.
    #[arg(long)]
    pub zscan: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Angles {
    theta_rad: f64,
    phi_rad: f64,
}

impl Angles {
    fn of(s: &QubitState) -> Self {
        let a = s.angles();
        Self {
            theta_rad: a.theta,
            phi_rad: a.phi,
        }
    }
}

#[derive(Debug, Serialize)]
struct EngineResult {
    theta_rad: f64,
    phi_rad: f64,
    chi_rad: f64,
    /// Overlap with the target, including power lost from the two-mode
    /// space at every stage.
    fidelity: f64,
    /// Largest stage residual outside the two reference modes.
    residual_power: f64,
}

#[derive(Debug, Serialize)]
struct Deltas {
    theta_rad: f64,
    phi_rad: f64,
    fidelity: f64,
}

#[derive(Debug, Serialize)]
struct Report {
    engine: &'static str,
    #[serde(rename = "energy_keV")]
    energy_kev: f64,
    stages: usize,
    input: Angles,
    target: Angles,
    analytic: Option<EngineResult>,
    wave: Option<EngineResult>,
    delta: Option<Deltas>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<usize>,
}

/// Outcome of one engine: final state, global phase, kept power per stage.
struct Run {
    state: QubitState,
    chi: f64,
    kept: Vec<f64>,
}

impl Run {
    fn result(&self, target: &QubitState) -> EngineResult {
        let a = self.state.angles();
        let kept: f64 = self.kept.iter().product();
        EngineResult {
            theta_rad: a.theta,
            phi_rad: a.phi,
            chi_rad: self.chi,
            fidelity: self.state.fidelity(target) * kept,
            residual_power: self.kept.iter().map(|k| 1.0 - k).fold(0.0, f64::max),
        }
    }
}

fn load(args: &SimulateArgs) -> CliResult<(GateSchedule, ElectronContext)> {
    if let Some(path) = &args.schedule {
        let doc: ScheduleDocument = read_json(path, "schedule document")?;
        Ok((doc.to_schedule()?, doc.context()?))
    } else {
        let path = args.design.as_ref().expect("clap requires a source");
        let doc: DesignDocument = read_json(path, "design document")?;
        let design = doc.to_design()?;
        let schedule = GateSchedule {
            stages: vec![Stage::Shift {
                delta_phi: design.delta_phi,
                design,
            }],
            global_phase: 0.0,
        };
        Ok((schedule, doc.context()?))
    }
}

/// Ideal stage matrices, without the document's global phase.
fn ideal(schedule: &GateSchedule) -> Unitary2 {
    schedule
        .stages
        .iter()
        .fold(Unitary2::identity(), |acc, s| s.unitary().mul(&acc))
}

fn analytic(schedule: &GateSchedule, input: &QubitState, ctx: &ElectronContext) -> CliResult<Run> {
    let k = ctx.wavenumber();
    let mut state = *input;
    let mut kept = Vec::new();
    let mut amplitudes = state.amplitudes();
    for stage in &schedule.stages {
        match stage {
            Stage::Rotate(a) => {
                state = Unitary2::rx(2.0 * a).apply(&state);
                amplitudes = state.amplitudes();
            }
            Stage::Shift { design, .. } => {
                let setup = design.figure_setup();
                let p = project_line(&setup.input, state.amplitudes(), &setup.line, &setup.output, k)?;
                kept.push(1.0 - p.residual_power);
                amplitudes = p.amplitudes;
                state = QubitState::normalized(p.amplitudes[0], p.amplitudes[1])?;
            }
        }
    }
    let chi = QubitState::normalized(amplitudes[0], amplitudes[1])?.angles().chi;
    Ok(Run { state, chi, kept })
}

fn wave(
    schedule: &GateSchedule,
    input: &QubitState,
    ctx: &ElectronContext,
    grid: usize,
    dump_dir: Option<&Path>,
) -> CliResult<Run> {
    // rotations are applied to a beam like the first shifter's input waist
    let rotation_beam = schedule
        .stages
        .iter()
        .find_map(|s| match s {
            Stage::Shift { design, .. } => Some(design.figure_setup().input),
            _ => None,
        })
        .map_or_else(|| ComplexBeamParameter::waist(1e-6, ctx.wavenumber()), Ok)?;
    let dump_error: RefCell<Option<CliError>> = RefCell::new(None);
    let (state, runs) = run_schedule(schedule, input, &rotation_beam, grid, ctx, |s, i, _, field| {
        if let Some(dir) = dump_dir {
            let path = dir.join(format!("stage{s:02}_element{i:03}.qpgf"));
            if let Err(e) = write_dump_file(field, &path) {
                dump_error.borrow_mut().get_or_insert(CliError::Input(format!("{}: {e}", path.display())));
            }
        }
    })
    .map_err(|e| {
        if e.is_numerical() {
            CliError::Numerical(format!(
                "{e}; try a larger --grid (currently {grid}) so the beam stays resolved and inside the window"
            ))
        } else {
            e.into()
        }
    })?;
    if let Some(e) = dump_error.into_inner() {
        return Err(e);
    }
    let chi = runs.last().map_or(input.angles().chi, |r| r.overlap.chi);
    let kept = runs.iter().map(|r| 1.0 - r.overlap.residual_power).collect();
    Ok(Run { state, chi, kept })
}

fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v > 0.0 {
        "inf".into()
    } else if v < 0.0 {
        "-inf".into()
    } else {
        "nan".into()
    }
}

fn zscan(schedule: &GateSchedule, input: &QubitState, ctx: &ElectronContext) -> CliResult<String> {
    let mut csv = String::from("z_m,w_h_m,w_v_m,R_h_m,R_v_m,gamma_h_rad,gamma_v_rad,delta_phi_accum_rad\n");
    let (mut z0, mut phase0) = (0.0, 0.0);
    let k = ctx.wavenumber();
    let mut state = *input;
    for stage in &schedule.stages {
        match stage {
            Stage::Rotate(a) => state = Unitary2::rx(2.0 * a).apply(&state),
            Stage::Shift { design, .. } => {
                let setup = design.figure_setup();
                let start = ModeState::new(setup.input, state.amplitudes())?;
                let points = scan_line(&start, &setup.line, ctx, SCAN_STEPS_PER_DRIFT)?;
                for p in &points {
                    let row = [
                        z0 + p.z,
                        p.w_h,
                        p.w_v,
                        p.r_h,
                        p.r_v,
                        p.gamma_h,
                        p.gamma_v,
                        phase0 + p.delta_phi_accum,
                    ];
                    let cells: Vec<String> = row.iter().map(|v| fmt_float(*v)).collect();
                    let _ = writeln!(csv, "{}", cells.join(","));
                }
                if let Some(last) = points.last() {
                    phase0 += last.delta_phi_accum;
                }
                z0 += setup.line.length();
                let p = project_line(&setup.input, state.amplitudes(), &setup.line, &setup.output, k)?;
                state = QubitState::normalized(p.amplitudes[0], p.amplitudes[1])?;
            }
        }
    }
    Ok(csv)
}

pub fn run(args: &SimulateArgs) -> CliResult<String> {
    let (schedule, ctx) = load(args)?;
    let input = QubitState::from_angles(args.input.0, args.input.1)?;
    let target = ideal(&schedule).apply(&input);
    if !args.grid.is_power_of_two() || args.grid < 4 {
        return Err(CliError::Input(format!("--grid must be a power of two, got {}", args.grid)));
    }
    if let Some(dir) = &args.dump_fields {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    if let Some(path) = &args.zscan {
        let csv = zscan(&schedule, &input, &ctx)?;
        std::fs::write(path, csv).map_err(|e| CliError::io(path, e))?;
    }
    let want_analytic = args.engine != Engine::Wave;
    let want_wave = args.engine != Engine::Analytic;
    let analytic = want_analytic
        .then(|| analytic(&schedule, &input, &ctx))
        .transpose()?;
    let wave = want_wave
        .then(|| wave(&schedule, &input, &ctx, args.grid, args.dump_fields.as_deref()))
        .transpose()?;
    let analytic = analytic.map(|r| r.result(&target));
    let wave = wave.map(|r| r.result(&target));
    let delta = match (&analytic, &wave) {
        (Some(a), Some(w)) => Some(Deltas {
            theta_rad: (w.theta_rad - a.theta_rad).abs(),
            phi_rad: wrap_angle(w.phi_rad - a.phi_rad).abs(),
            fidelity: (w.fidelity - a.fidelity).abs(),
        }),
        _ => None,
    };
    let report = Report {
        engine: match args.engine {
            Engine::Analytic => "analytic",
            Engine::Wave => "wave",
            Engine::Both => "both",
        },
        energy_kev: ctx.kinetic_energy_kev(),
        stages: schedule.stages.len(),
        input: Angles::of(&input),
        target: Angles::of(&target),
        analytic,
        wave,
        delta,
        grid: want_wave.then_some(args.grid),
    };
    Ok(to_json(&report))
}
