use super::{modal_overlap, rotate_field, run_line_with, sample_hg, FieldGrid, GridSpec, ModeIndex, OverlapResult};
use crate::beam::{scan_line, ComplexBeamParameter, Element, ElectronContext, ModeState};
use crate::gates::{GateSchedule, QubitState, Stage};
use crate::shifter::FigureSetup;
use crate::{Result, C64};

/// Default grid size.
pub const DEFAULT_GRID: usize = 1024;
/// Default extent in units of the widest analytic beam along the line.
pub const EXTENT_FACTOR: f64 = 6.0;

const SCAN_STEPS: usize = 64;

/// Grid extent that holds the widest beam met along the setup.
pub fn setup_extent(setup: &FigureSetup, ctx: &ElectronContext) -> Result<f64> {
    let k = ctx.wavenumber();
    let state = ModeState::new(setup.input, [C64::from(1.0), C64::from(0.0)])?;
    let widest = scan_line(&state, &setup.line, ctx, SCAN_STEPS)?
        .iter()
        .map(|p| p.w_h.max(p.w_v))
        .fold(setup.output.width(k), f64::max);
    Ok(EXTENT_FACTOR * widest)
}

/// `a·HG₁₀ + b·HG₀₁` of the round beam `q`.
pub fn sample_state(
    state: &QubitState,
    q: &ComplexBeamParameter,
    spec: &GridSpec,
    ctx: &ElectronContext,
) -> Result<FieldGrid> {
    let [a, b] = state.amplitudes();
    let h = sample_hg(ModeIndex::HG10, q, q, 0.0, spec, ctx)?;
    let v = sample_hg(ModeIndex::HG01, q, q, 0.0, spec, ctx)?;
    h.combine(a, &v, b)
}

/// Output of a wave run through a figure setup.
#[derive(Debug, Clone)]
pub struct SetupRun {
    pub output: FieldGrid,
    pub overlap: OverlapResult,
}

/// Samples `state` at the setup's input waist, propagates it through the
/// line and projects the result on the output waist.
pub fn run_setup<F>(
    setup: &FigureSetup,
    state: &QubitState,
    target: Option<&QubitState>,
    spec: &GridSpec,
    ctx: &ElectronContext,
    observer: F,
) -> Result<SetupRun>
where
    F: FnMut(usize, &Element, &FieldGrid),
{
    let input = sample_state(state, &setup.input, spec, ctx)?;
    let output = run_line_with(&input, &setup.line, observer)?;
    let overlap = modal_overlap(&output, &setup.output, target)?;
    Ok(SetupRun { output, overlap })
}

/// Per-stage record of a wave schedule run.
#[derive(Debug, Clone)]
pub struct StageRun {
    pub overlap: OverlapResult,
    pub output: FieldGrid,
}

/// Runs every stage of a schedule on sampled fields. Between stages the
/// projected two-state part is handed on to the next stage's input beam,
/// i.e. the stages are joined by ideal relays.
///
/// `grid` sets `N`; each shift stage uses its own default extent and
/// rotations use the extent of the reference beam `rotation_beam`.
pub fn run_schedule<F>(
    schedule: &GateSchedule,
    input: &QubitState,
    rotation_beam: &ComplexBeamParameter,
    grid: usize,
    ctx: &ElectronContext,
    mut observer: F,
) -> Result<(QubitState, Vec<StageRun>)>
where
    F: FnMut(usize, usize, &Element, &FieldGrid),
{
    let mut state = *input;
    let mut runs = Vec::with_capacity(schedule.stages.len());
    for (s, stage) in schedule.stages.iter().enumerate() {
        let run = match stage {
            Stage::Rotate(angle) => {
                let extent = EXTENT_FACTOR * rotation_beam.width(ctx.wavenumber());
                let spec = GridSpec::new(grid, extent)?;
                let field = sample_state(&state, rotation_beam, &spec, ctx)?;
                let element = Element::Rotator(*angle);
                let output = rotate_field(&field, *angle);
                observer(s, 0, &element, &output);
                let overlap = modal_overlap(&output, rotation_beam, None)?;
                StageRun { overlap, output }
            }
            Stage::Shift { design, .. } => {
                let setup = design.figure_setup();
                let spec = GridSpec::new(grid, setup_extent(&setup, ctx)?)?;
                let run = run_setup(&setup, &state, None, &spec, ctx, |i, e, f| observer(s, i, e, f))?;
                StageRun {
                    overlap: run.overlap,
                    output: run.output,
                }
            }
        };
        state = run.overlap.state()?;
        runs.push(run);
    }
    Ok((state, runs))
}
