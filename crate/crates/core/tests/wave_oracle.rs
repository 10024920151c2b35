use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8, PI};

use proptest::prelude::*;
use qpgate_core::beam::{
    propagate_line, ComplexBeamParameter, Element, ElectronContext, ModeState, OpticsLine,
};
use qpgate_core::gates::QubitState;
use qpgate_core::shifter::{design, project_line, FreeParameter};
use qpgate_core::wave::{
    apply_phase_mask, fresnel_propagate, modal_overlap, read_dump, rotate_field, run_line,
    run_setup, sample_hg, sample_state, setup_extent, write_dump, FieldGrid, GridSpec, ModeIndex,
};
use qpgate_core::{wrap_angle, Error, C64};

fn ctx() -> ElectronContext {
    ElectronContext::from_energy_kev(200.0).unwrap()
}

fn waist(w: f64) -> ComplexBeamParameter {
    ComplexBeamParameter::waist(w, ctx().wavenumber()).unwrap()
}

fn hg(idx: ModeIndex, q: &ComplexBeamParameter, spec: &GridSpec) -> FieldGrid {
    sample_hg(idx, q, q, 0.0, spec, &ctx()).unwrap()
}

#[test]
fn propagation_conserves_power_and_inner_products() {
    let q = waist(100e-9);
    let spec = GridSpec::new(512, 1.6e-6).unwrap();
    let a = hg(ModeIndex::HG10, &q, &spec);
    let b = sample_hg(ModeIndex::HG01, &q, &q, 0.4, &spec, &ctx()).unwrap();
    let before = a.inner(&b).unwrap();
    let zr = q.rayleigh_range();
    let a1 = fresnel_propagate(&a, 0.7 * zr).unwrap();
    let b1 = fresnel_propagate(&b, 0.7 * zr).unwrap();
    assert!((a1.power() - a.power()).abs() < 1e-10 * a.power());
    assert!((a1.inner(&b1).unwrap() - before).norm() < 1e-10);
    assert_eq!(a1.z(), 0.7 * zr);
}

#[test]
fn lens_then_drift_follows_the_q_chain() {
    // a single lens fixes the sign pairing of kernel and mask
    let c = ctx();
    let k = c.wavenumber();
    let q0 = waist(500e-9);
    let f = 0.12;
    let spec = GridSpec::new(512, 3.2e-6).unwrap();
    let start = apply_phase_mask(&hg(ModeIndex::HG00, &q0, &spec), Some(f), Some(f), 0.0).unwrap();
    let q_lens = q0.apply_lens(f).unwrap();
    let zr = q0.rayleigh_range();
    let waist_z = f / (1.0 + (f / zr).powi(2));
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..=12 {
        let z = f * (0.5 + 0.05 * i as f64);
        let field = fresnel_propagate(&start, z).unwrap();
        let (wx, wy) = field.second_moment_widths();
        let w = q_lens.propagate(z).width(k);
        assert!(((wx - w) / w).abs() < 0.005, "z={z} wx={wx} w={w}");
        assert!(((wy - w) / w).abs() < 0.005);
        if wx < best.0 {
            best = (wx, z);
        }
    }
    assert!((best.1 - waist_z).abs() <= 0.025 * f, "{best:?} vs {waist_z}");
}

#[test]
fn quadrupole_orientation_swaps_focusing_axis() {
    let q = waist(300e-9);
    let spec = GridSpec::new(256, 2.4e-6).unwrap();
    let g = hg(ModeIndex::HG00, &q, &spec);
    let widths = |alpha: f64| {
        let m = apply_phase_mask(&g, Some(0.2), Some(-0.2), alpha).unwrap();
        fresnel_propagate(&m, 0.05).unwrap().second_moment_widths()
    };
    let (a, b) = (widths(0.0), widths(FRAC_PI_2));
    assert!(a.0 < a.1);
    assert!(((a.0 - b.1) / a.0).abs() < 1e-9 && ((a.1 - b.0) / a.1).abs() < 1e-9);
}

#[test]
fn shear_rotation_matches_rotated_sampling() {
    let q = waist(100e-9);
    let spec = GridSpec::new(256, 1.2e-6).unwrap();
    let c = ctx();
    for alpha in [0.3, FRAC_PI_4, 2.0, -1.1] {
        let rotated = rotate_field(&hg(ModeIndex::HG10, &q, &spec), alpha);
        let direct = sample_hg(ModeIndex::HG10, &q, &q, alpha, &spec, &c).unwrap();
        assert!(1.0 - rotated.fidelity(&direct).unwrap() < 1e-10, "alpha={alpha}");
    }
}

fn design_a_setup() -> (qpgate_core::shifter::FigureSetup, GridSpec) {
    let des = design(0.12, FRAC_PI_2, FreeParameter::Symmetric).unwrap();
    let setup = des.figure_setup();
    let spec = GridSpec::new(512, setup_extent(&setup, &ctx()).unwrap()).unwrap();
    (setup, spec)
}

#[test]
fn rotational_covariance() {
    let (setup, spec) = design_a_setup();
    let c = ctx();
    let input = sample_state(
        &QubitState::from_angles(1.0, 0.5).unwrap(),
        &setup.input,
        &spec,
        &c,
    )
    .unwrap();
    let plain = run_line(&input, &setup.line).unwrap();
    for alpha in [FRAC_PI_8, FRAC_PI_4] {
        let turned = run_line(&rotate_field(&input, alpha), &setup.line.rotated(alpha)).unwrap();
        let expected = rotate_field(&plain, alpha);
        let f = turned.fidelity(&expected).unwrap();
        assert!(1.0 - f < 1e-6, "alpha={alpha}: {f}");
    }
}

#[test]
fn pipeline_is_unitary() {
    let (setup, spec) = design_a_setup();
    let input = sample_state(&QubitState::zero(), &setup.input, &spec, &ctx()).unwrap();
    let out = run_line(&input, &setup.line).unwrap();
    assert!((out.power() - input.power()).abs() < 1e-6);
    assert!((out.z() - 0.12).abs() < 1e-15);
}

#[test]
fn oracle_agrees_with_analytic_projection() {
    let c = ctx();
    let k = c.wavenumber();
    let cases = [
        (0.12, 1.0, 0.3, 2.0),
        (0.08, -2.2, 2.5, 0.1),
        (0.30, 2.8, 1.2, 4.0),
    ];
    for (d, phase, theta, phi) in cases {
        let des = design(d, phase, FreeParameter::Symmetric).unwrap();
        let setup = des.figure_setup();
        let spec = GridSpec::new(1024, setup_extent(&setup, &c).unwrap()).unwrap();
        let input = QubitState::from_angles(theta, phi).unwrap();
        let run = run_setup(&setup, &input, None, &spec, &c, |_, _, _| {}).unwrap();
        let p = project_line(&setup.input, input.amplitudes(), &setup.line, &setup.output, k).unwrap();
        let analytic = QubitState::normalized(p.amplitudes[0], p.amplitudes[1]).unwrap().angles();
        assert!((run.overlap.theta - analytic.theta).abs() < 0.02);
        assert!(wrap_angle(run.overlap.phi - analytic.phi).abs() < 0.02);
        assert!(wrap_angle(analytic.phi - wrap_angle(phi + phase)).abs() < 1e-9);

        let (w, _) = run.output.second_moment_widths();
        // second moment of a·HG10 + b·HG01 along x: w²(1 + 2|a|²)/4
        let state = ModeState::new(setup.input, input.amplitudes()).unwrap();
        let out = propagate_line(&state, &setup.line).unwrap();
        let w_x = out.q_h().width(k) * (1.0 + 2.0 * run.overlap.a.norm_sqr()).sqrt();
        assert!(((w - w_x) / w_x).abs() < 0.005, "{w} {w_x}");
    }
}

#[test]
fn sampling_errors_are_numerical() {
    let q = waist(100e-9);
    let spec = GridSpec::new(128, 0.5e-6).unwrap();
    let e = sample_hg(ModeIndex::HG10, &q, &q, 0.0, &spec, &ctx()).unwrap_err();
    assert!(e.is_numerical());
    // a beam that expands beyond the window is caught at the grid edge
    let spec = GridSpec::new(256, 1.2e-6).unwrap();
    let f = hg(ModeIndex::HG10, &q, &spec);
    let e = fresnel_propagate(&f, 5.0 * q.rayleigh_range()).unwrap_err();
    assert!(matches!(e, Error::Sampling(_)), "{e}");
}

#[test]
fn deterministic_across_worker_counts() {
    let (setup, spec) = design_a_setup();
    let input = sample_state(&QubitState::from_angles(2.0, 1.0).unwrap(), &setup.input, &spec, &ctx()).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_line(&input, &setup.line).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(3));
}

#[test]
fn empty_line_and_identity_overlap() {
    let q = waist(100e-9);
    let spec = GridSpec::new(256, 1.2e-6).unwrap();
    let f = hg(ModeIndex::HG01, &q, &spec);
    assert_eq!(run_line(&f, &OpticsLine::empty()).unwrap(), f);
    let r = modal_overlap(&f, &q, Some(&QubitState::one())).unwrap();
    assert!((r.theta - PI).abs() < 1e-9 && (r.fidelity.unwrap() - 1.0).abs() < 1e-9);
    let line = OpticsLine::new(vec![Element::Rotator(FRAC_PI_2)]).unwrap();
    let r = modal_overlap(&run_line(&f, &line).unwrap(), &q, None).unwrap();
    // HG01 turned by a quarter turn becomes -HG10
    assert!((r.a + 1.0).norm() < 1e-9, "{:?}", r.a);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dump_round_trip(values in proptest::collection::vec((-1e9f64..1e9, -1e9f64..1e9), 16),
                       z in -1.0f64..1.0, extent in 1e-9f64..1e-3, energy in 1.0f64..1000.0) {
        let c = ElectronContext::from_energy_kev(energy).unwrap();
        let spec = GridSpec::new(4, extent).unwrap();
        let samples = values.iter().map(|&(re, im)| C64::new(re, im)).collect();
        let f = FieldGrid::new(spec, z, c, samples).unwrap();
        let mut buf = Vec::new();
        write_dump(&f, &mut buf).unwrap();
        let g = read_dump(&buf[..]).unwrap();
        prop_assert_eq!(&g, &f);
        let mut again = Vec::new();
        write_dump(&g, &mut again).unwrap();
        prop_assert_eq!(buf, again);
    }

    #[test]
    fn truncated_dumps_report_offset(cut in 0usize..320) {
        let c = ElectronContext::from_energy_kev(200.0).unwrap();
        let f = FieldGrid::zeros(GridSpec::new(4, 1e-6).unwrap(), 0.0, c);
        let mut buf = Vec::new();
        write_dump(&f, &mut buf).unwrap();
        match read_dump(&buf[..cut]) {
            Err(Error::Format { offset, .. }) => prop_assert_eq!(offset, cut as u64),
            other => prop_assert!(false, "{:?}", other),
        }
    }
}
