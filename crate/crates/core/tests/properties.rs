use nalgebra::Matrix3;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

use qutrit_core::evolve::{self, IntegratorConfig};
use qutrit_core::model::*;
use qutrit_core::protocols::{self, Backend, CdMode, Corrections, ProtocolConfig};
use qutrit_core::pulses;
use qutrit_core::stark;

fn max_abs(m: &Matrix3<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn shift_identities(m in 0.0..0.5f64, d in 0.01..0.99f64, lam in 0.5..2.0f64) {
        let s = stark::level_shifts(m, d, 1.0, lam).unwrap();
        let scale = s.eps0.abs().max(s.eps1.abs()).max(s.eps2.abs()).max(f64::MIN_POSITIVE);
        prop_assert!((s.eps0 + s.eps1 + s.eps2).abs() <= 1e-15 * scale);
        prop_assert!((s.eps01 + s.eps12 - s.eps02).abs() <= 1e-15 * scale);
        prop_assert!((s.eps01 - (s.eps1 - s.eps0)).abs() <= 2e-15 * scale);
        let s2 = stark::level_shifts(2.0 * m, d, 1.0, lam).unwrap();
        prop_assert_eq!(s2.eps0, 4.0 * s.eps0);
        prop_assert_eq!(s2.eps12, 4.0 * s.eps12);
    }

    #[test]
    fn realization_inverts_effective_coupling(re in -0.05..0.05f64, im in -0.05..0.05f64, d in prop_oneof![0.05..0.9f64, -0.9..-0.05f64], lam in 0.5..2.0f64) {
        let cd = C64::new(re, im);
        let (mag, ph) = pulses::two_photon_realization(cd, d, lam).unwrap();
        let eff = stark::effective_coupling(C64::from_polar(mag, ph), d, lam).unwrap();
        prop_assert!((eff - cd).norm() <= 1e-12 * cd.norm().max(1e-300));
    }

    #[test]
    fn eigensystem_residuals(o1 in 0.0..0.5f64, o2 in 0.0..0.5f64, d in -0.3..0.3f64) {
        prop_assume!(o1 + o2 > 1e-6);
        let b = instantaneous_eigensystem(o1, o2, d).unwrap();
        let h = build_rwa_hamiltonian(o1, o2, &DriveDetunings::two_photon_resonant(d));
        for (v, w) in [(b.plus, b.omega_plus), (b.minus, b.omega_minus), (b.dark, b.omega_dark)] {
            prop_assert!((h * v.0 - v.0 * C64::new(w, 0.0)).norm() < 1e-13);
        }
        prop_assert!(b.plus.inner(&b.minus).norm() < 1e-14);
        prop_assert!(b.dark.inner(&b.plus).norm() < 1e-14);
        prop_assert!(b.dark[1].norm() == 0.0);
    }

    #[test]
    fn hamiltonians_are_hermitian(t in -300.0..300.0f64, d in -0.2..0.2f64, om in 0.01..0.3f64) {
        let p = QutritParams::transmon(1.4);
        let tones = [
            CarrierTone { coupling: Coupling::Single(Transition::ZeroOne), amplitude: C64::new(om, 0.01), detuning: d },
            CarrierTone { coupling: Coupling::TwoPhoton, amplitude: C64::from_polar(0.1, 0.3), detuning: 0.5 },
            CarrierTone { coupling: Coupling::Single(Transition::ZeroTwo), amplitude: C64::new(0.0, 0.02), detuning: 0.0 },
        ];
        let h = build_carrier_hamiltonian(&tones, &p, &[0.1, -0.2, 0.05], t);
        prop_assert!(max_abs(&(h - h.adjoint())) < 1e-16);
        let mut cfg = ProtocolConfig::transfer_preset();
        cfg.delta = d;
        let drive = protocols::detuned_sastirap_drive(&cfg).unwrap();
        let h = drive.hamiltonian(t.clamp(drive.window().0, drive.window().1));
        prop_assert!(max_abs(&(h - h.adjoint())) < 1e-16);
    }

    #[test]
    fn fidelity_bounded_and_phase_invariant(a in proptest::array::uniform6(-1.0..1.0f64), g in 0.0..6.3f64) {
        let psi = StateVector::new(C64::new(a[0], a[1]), C64::new(0.0, 0.0), C64::new(a[2], a[3]));
        prop_assume!(psi.norm() > 1e-3);
        let psi = psi.normalized();
        let out = StateVector::new(C64::new(a[4], 0.1), C64::new(0.05, 0.0), C64::new(a[5], -0.2)).normalized();
        let u = protocols::ideal_not_gate();
        let f = protocols::state_fidelity(&psi, &out, &u);
        prop_assert!((0.0..=1.0).contains(&f));
        let rotated = StateVector(out.0 * C64::from_polar(1.0, g));
        prop_assert!((protocols::state_fidelity(&psi, &rotated, &u) - f).abs() < 1e-14);
    }

    #[test]
    fn angle_continuation_stays_close(prev in -10.0..10.0f64, jump in -3..3i32, eps in -1.5..1.5f64) {
        let a = prev + eps + std::f64::consts::PI * jump as f64;
        let c = protocols_angle(prev, a);
        prop_assert!((c - (prev + eps)).abs() < 1e-9);
    }
}

fn protocols_angle(prev: f64, a: f64) -> f64 {
    continue_angle(prev, a)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_protocols_conserve_norm(sigma in 5.0..20.0f64, om in 0.05..0.2f64, d in 0.0..0.15f64, ts in -2.5..-1.0f64) {
        let mut cfg = ProtocolConfig::transfer_preset();
        cfg.sigma = sigma;
        cfg.t_s = ts * sigma;
        cfg.omega01_peak = om;
        cfg.omega12_peak = om;
        cfg.delta = d;
        let tr = protocols::run_detuned_sastirap(&cfg, &StateVector::ground()).unwrap();
        prop_assert!(tr.max_norm_error < 1e-7);
        let p = evolve::final_populations(&tr);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-8);
    }

    /// `H(−δ) = −P H(δ)* P` with `P = diag(1, −1, 1)`, so populations are even in δ.
    #[test]
    fn effective_backend_even_in_detuning(d in 0.01..0.2f64, sigma in 8.0..20.0f64) {
        let mut cfg = ProtocolConfig::transfer_preset();
        cfg.sigma = sigma;
        cfg.t_s = -2.0 * sigma;
        cfg.delta = d;
        cfg.backend = Backend::Effective;
        let a = protocols::run_detuned_sastirap(&cfg, &StateVector::ground()).unwrap().final_state().populations();
        cfg.delta = -d;
        let b = protocols::run_detuned_sastirap(&cfg, &StateVector::ground()).unwrap().final_state().populations();
        for k in 0..3 {
            prop_assert!((a[k] - b[k]).abs() < 1e-8);
        }
    }

    #[test]
    fn ideal_cd_is_exact(sigma in 3.0..40.0f64, om in 0.03..0.3f64) {
        let mut cfg = ProtocolConfig::transfer_preset();
        cfg.sigma = sigma;
        cfg.t_s = -2.0 * sigma;
        cfg.omega01_peak = om;
        cfg.omega12_peak = om;
        cfg.cd_mode = CdMode::IdealDirect;
        cfg.corrections = Corrections::None;
        let p = protocols::run_sastirap(&cfg, &StateVector::ground()).unwrap().final_state().populations();
        prop_assert!(p[2] > 1.0 - 1e-6);
    }

    #[test]
    fn oracle_agrees_on_random_drive(sigma in 4.0..10.0f64, om in 0.05..0.3f64, d in -0.1..0.1f64) {
        let mut cfg = ProtocolConfig::transfer_preset();
        cfg.sigma = sigma;
        cfg.t_s = -2.0 * sigma;
        cfg.omega01_peak = om;
        cfg.omega12_peak = 0.8 * om;
        cfg.delta = d;
        let drive = protocols::detuned_sastirap_drive(&cfg).unwrap();
        let (rk, _) = evolve::evolve_state(|t| drive.hamiltonian(t), &StateVector::ground(), drive.window(), &IntegratorConfig::default()).unwrap();
        let ex = evolve::oracle_state(|t| drive.hamiltonian(t), &StateVector::ground(), drive.window(), 4000);
        let (p, q) = (rk.populations(), ex.populations());
        for k in 0..3 {
            prop_assert!((p[k] - q[k]).abs() < 1e-6);
        }
    }
}
