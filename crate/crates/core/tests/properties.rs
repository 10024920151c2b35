use std::f64::consts::PI;

use proptest::prelude::*;
use qpgate_core::beam::{propagate_line, ComplexBeamParameter, ElectronContext, ModeState};
use qpgate_core::gates::{compile, euler_xzx_decompose, simulate_schedule, QubitState, Unitary2};
use qpgate_core::shifter::{
    design, phase_from_u, u_from_phase, verify, DesignRequest, FreeParameter,
};
use qpgate_core::{wrap_angle, Error, C64};

fn off_edge() -> impl Strategy<Value = f64> {
    (-PI..PI).prop_filter("away from 0 and π", |p: &f64| p.abs() > 1e-3 && PI - p.abs() > 1e-3)
}

fn unitary() -> impl Strategy<Value = Unitary2> {
    (0.0..2.0 * PI, -PI..PI, 0.0..2.0 * PI, -PI..PI).prop_map(|(a1, b, a2, chi)| {
        // built from an independent z–y–z product so the x–z–x solver is
        // exercised on generic input
        let rz = |t: f64| {
            let z = C64::from(0.0);
            Unitary2::new([[C64::from_polar(1.0, -t / 2.0), z], [z, C64::from_polar(1.0, t / 2.0)]]).unwrap()
        };
        let ry = |t: f64| {
            let (s, c) = (t / 2.0).sin_cos();
            let i = C64::new(0.0, 1.0);
            Unitary2::new([[C64::from(c), -i * s], [-i * s, C64::from(c)]]).unwrap()
        };
        Unitary2::phase(chi).mul(&rz(a2)).mul(&ry(b)).mul(&rz(a1))
    })
}

proptest! {
    #[test]
    fn drift_composes(re in -1.0f64..1.0, im in 1e-3f64..1.0, a in 0.0f64..0.5, b in 0.0f64..0.5) {
        let q = ComplexBeamParameter::new(C64::new(re, im)).unwrap();
        let two = q.propagate(a).propagate(b);
        prop_assert!(two.relative_distance(&q.propagate(a + b)) < 1e-12);
    }

    #[test]
    fn thin_lenses_add_powers(re in -1.0f64..1.0, im in 1e-3f64..1.0, f in 0.05f64..1.0, g in -1.0f64..-0.05) {
        let q = ComplexBeamParameter::new(C64::new(re, im)).unwrap();
        let two = q.apply_lens(f).unwrap().apply_lens(g).unwrap();
        let one = q.apply_lens(1.0 / (1.0 / f + 1.0 / g)).unwrap();
        prop_assert!(two.relative_distance(&one) < 1e-9);
    }

    #[test]
    fn phase_parametrization_inverts(p in off_edge()) {
        let u = u_from_phase(p).unwrap();
        prop_assert!(wrap_angle(phase_from_u(u) - p).abs() < 1e-9);
        // δφ is the angle of (u² - 1, -2u)
        let angle = (-2.0 * u).atan2(u * u - 1.0);
        prop_assert!(wrap_angle(angle - p).abs() < 1e-9);
    }

    #[test]
    fn designs_verify(d in 0.05f64..0.5, p in off_edge(), scale in 0.2f64..5.0) {
        let ctx = ElectronContext::from_energy_kev(200.0).unwrap();
        let sym = design(d, p, FreeParameter::Symmetric).unwrap();
        let report = verify(&sym, &ctx).unwrap();
        prop_assert!(report.passed, "{:?}", report);
        let u = sym.u().unwrap();
        prop_assert!((sym.f1().unwrap() * sym.f2().unwrap() - d * d * (1.0 + u * u)).abs() < 1e-12 * d * d * (1.0 + u * u));
        prop_assert!((sym.f1().unwrap() - sym.f2().unwrap()).abs() < 1e-12 * sym.f1().unwrap().abs());

        let f1 = u.signum() * d * scale;
        let free = design(d, p, FreeParameter::F1(f1)).unwrap();
        prop_assert!(verify(&free, &ctx).unwrap().passed);
        let wrong = design(d, p, FreeParameter::F1(-f1));
        let is_sign_mismatch = matches!(wrong, Err(Error::SignMismatch { .. }));
        prop_assert!(is_sign_mismatch);
    }

    #[test]
    fn rayleigh_constraint_is_met(d in 0.05f64..0.5, p in off_edge(), frac in 0.05f64..0.95) {
        // the largest attainable Im q_in on the weak branch is d/2
        let zr = frac * 0.5 * d;
        let des = DesignRequest::new(d, p).constrain(FreeParameter::InputRayleigh(zr)).build().unwrap();
        prop_assert!((des.q_in.rayleigh_range() - zr).abs() < 1e-9 * zr);
        let f1 = des.f1().unwrap();
        prop_assert!(f1.abs() >= d * des.u().unwrap().abs() * (1.0 - 1e-12));
        let out = DesignRequest::new(d, p).constrain(FreeParameter::OutputRayleigh(zr)).build().unwrap();
        prop_assert!((out.q_out.rayleigh_range() - zr).abs() < 1e-9 * zr);
        let over = DesignRequest::new(d, p)
            .constrain(FreeParameter::InputRayleigh(zr))
            .constrain(FreeParameter::Symmetric)
            .build();
        let overconstrained = matches!(over, Err(Error::Overconstrained(2)));
        prop_assert!(overconstrained);
    }

    #[test]
    fn analytic_state_stays_normalized(d in 0.05f64..0.5, p in off_edge(), theta in 0.0f64..PI, phi in 0.0f64..6.28) {
        let des = design(d, p, FreeParameter::Symmetric).unwrap();
        let psi = QubitState::from_angles(theta, phi).unwrap();
        let out = propagate_line(&ModeState::new(des.q_in, psi.amplitudes()).unwrap(), &des.line()).unwrap();
        let [a, b] = out.amplitudes();
        prop_assert!((a.norm_sqr() + b.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn euler_reconstructs(u in unitary()) {
        let e = euler_xzx_decompose(&u);
        prop_assert!(u.frobenius_distance(&e.unitary()) < 1e-10);
        prop_assert!((0.0..2.0 * PI).contains(&e.alpha1));
        prop_assert!((0.0..2.0 * PI).contains(&e.alpha2));
        prop_assert!(e.beta > -PI && e.beta <= PI);
    }

    #[test]
    fn compiled_schedules_act_like_the_unitary(u in unitary(), theta in 0.0f64..PI, phi in 0.0f64..6.28) {
        let s = compile(&u, 0.12, FreeParameter::Symmetric).unwrap();
        prop_assert!(s.stages.len() <= 3);
        prop_assert!(s.unitary().frobenius_distance(&u) < 1e-10);
        let psi = QubitState::from_angles(theta, phi).unwrap();
        prop_assert!(1.0 - simulate_schedule(&s, &psi).fidelity(&u.apply(&psi)) < 1e-10);
    }

    #[test]
    fn angles_round_trip(theta in 1e-6f64..PI - 1e-6, phi in 0.0f64..6.28, chi in -PI..PI) {
        let s = QubitState::from_angles_with_phase(theta, phi, chi).unwrap();
        let a = s.angles();
        prop_assert!((a.theta - theta).abs() < 1e-9);
        prop_assert!(wrap_angle(a.phi - phi).abs() < 1e-9);
        prop_assert!(wrap_angle(a.chi - chi).abs() < 1e-9);
        let v = s.bloch_vector();
        prop_assert!((v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
