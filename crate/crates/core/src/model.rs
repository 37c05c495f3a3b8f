//! Qutrit parameters, state vectors and Hamiltonian builders.
//!
//! Detunings follow the convention `δ = ω_transition − ω_drive`. The two-photon detuning is
//! `δ02 = ω01 − ω_drive` for a tone driving the 0–2 transition through two photons.

use std::f64::consts::PI;
use std::ops::Index;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Hamiltonian = Matrix3<C64>;

/// Transition frequencies of the ladder and the ratio of matrix elements `λ = ⟨1|V|2⟩/⟨0|V|1⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QutritParams {
    pub omega01: f64,
    pub omega12: f64,
    pub lambda: f64,
}

impl QutritParams {
    pub fn new(omega01: f64, omega12: f64, lambda: f64) -> Result<Self> {
        let p = QutritParams { omega01, omega12, lambda };
        p.validate()?;
        Ok(p)
    }

    /// Transmon-like ladder with `Δ = 1` and `ω01 = 20 Δ`.
    pub fn transmon(lambda: f64) -> Self {
        QutritParams { omega01: 20.0, omega12: 19.0, lambda }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega01.is_finite() && self.omega12.is_finite() && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter("qutrit frequencies must be finite".into()));
        }
        if self.anharmonicity() <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "anharmonicity omega01 - omega12 must be positive, got {}",
                self.anharmonicity()
            )));
        }
        if self.lambda <= 0.0 {
            return Err(Error::InvalidParameter(format!("lambda must be positive, got {}", self.lambda)));
        }
        Ok(())
    }

    pub fn anharmonicity(&self) -> f64 {
        self.omega01 - self.omega12
    }
}

impl Default for QutritParams {
    fn default() -> Self {
        QutritParams::transmon(2f64.sqrt())
    }
}

/// One-photon detunings of the two STIRAP tones.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DriveDetunings {
    pub delta01: f64,
    pub delta12: f64,
}

impl DriveDetunings {
    /// Two-photon resonant pair `δ12 = −δ01`.
    pub fn two_photon_resonant(delta: f64) -> Self {
        DriveDetunings { delta01: delta, delta12: -delta }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateVector(pub Vector3<C64>);

impl StateVector {
    pub fn new(a0: C64, a1: C64, a2: C64) -> Self {
        StateVector(Vector3::new(a0, a1, a2))
    }

    pub fn basis(k: usize) -> Self {
        assert!(k < 3, "qutrit basis index out of range");
        let mut v = Vector3::zeros();
        v[k] = C64::new(1.0, 0.0);
        StateVector(v)
    }

    pub fn ground() -> Self {
        Self::basis(0)
    }

    pub fn populations(&self) -> [f64; 3] {
        [self.0[0].norm_sqr(), self.0[1].norm_sqr(), self.0[2].norm_sqr()]
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn normalized(&self) -> Self {
        StateVector(self.0 / C64::new(self.norm(), 0.0))
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.0.dotc(&other.0)
    }

    pub fn from_real(a: [f64; 3]) -> Self {
        StateVector::new(a[0].into(), a[1].into(), a[2].into())
    }
}

impl Index<usize> for StateVector {
    type Output = C64;
    fn index(&self, k: usize) -> &C64 {
        &self.0[k]
    }
}

/// Eigen-decomposition of the two-photon resonant Hamiltonian.
#[derive(Clone, Copy, Debug)]
pub struct InstantaneousBasis {
    pub theta: f64,
    pub phi: f64,
    pub omega_plus: f64,
    pub omega_minus: f64,
    pub omega_dark: f64,
    pub plus: StateVector,
    pub minus: StateVector,
    pub dark: StateVector,
}

/// Ladder Hamiltonian in the frame rotating with the two STIRAP tones.
pub fn build_rwa_hamiltonian(omega01: f64, omega12: f64, det: &DriveDetunings) -> Hamiltonian {
    let z = C64::new(0.0, 0.0);
    let h = |x: f64| C64::new(0.5 * x, 0.0);
    Matrix3::new(
        z,
        h(omega01),
        z,
        h(omega01),
        h(2.0 * det.delta01),
        h(omega12),
        z,
        h(omega12),
        h(2.0 * (det.delta01 + det.delta12)),
    )
}

/// Mixing angles `Θ`, `Φ`, eigenfrequencies and eigenvectors at two-photon resonance.
pub fn instantaneous_eigensystem(omega01: f64, omega12: f64, delta: f64) -> Result<InstantaneousBasis> {
    let r2 = omega01 * omega01 + omega12 * omega12;
    if r2 == 0.0 {
        return Err(Error::DegenerateEnvelopes { t: f64::NAN });
    }
    let r = r2.sqrt();
    let theta = omega01.atan2(omega12);
    let phi = 0.5 * r.atan2(delta);
    let s = (delta * delta + r2).sqrt();
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let dark = StateVector::from_real([ct, 0.0, -st]);
    let plus = StateVector::from_real([sp * st, cp, sp * ct]);
    let minus = StateVector::from_real([cp * st, -sp, cp * ct]);
    Ok(InstantaneousBasis {
        theta,
        phi,
        omega_plus: 0.5 * (delta + s),
        omega_minus: 0.5 * (delta - s),
        omega_dark: 0.0,
        plus,
        minus,
        dark,
    })
}

/// Shift `angle` by multiples of `π` so it lies closest to `previous`.
pub fn continue_angle(previous: f64, angle: f64) -> f64 {
    angle - PI * ((angle - previous) / PI).round()
}

/// Local adiabaticity `max(|⟨±|Ḋ⟩| / |ω±|)` given the basis and `Θ̇`.
pub fn adiabaticity_metric(basis: &InstantaneousBasis, theta_dot: f64, t: f64) -> Result<f64> {
    if basis.omega_plus == 0.0 || basis.omega_minus == 0.0 {
        return Err(Error::DegenerateEigenvalues { t });
    }
    let (sp, cp) = basis.phi.sin_cos();
    let plus = (theta_dot * sp).abs() / basis.omega_plus.abs();
    let minus = (theta_dot * cp).abs() / basis.omega_minus.abs();
    Ok(plus.max(minus))
}

/// Complex couplings, transition phases and level shifts entering the effective Hamiltonian.
#[derive(Clone, Copy, Debug, Default)]
pub struct EffectiveDrive {
    /// `Ω01 + 2i·a01`
    pub omega01: C64,
    /// `Ω12 + 2i·a12`
    pub omega12: C64,
    pub omega_eff: C64,
    /// `φ̃01, φ̃12, φ̃02`
    pub phases: [f64; 3],
    /// `ε0, ε1, ε2`
    pub shifts: [f64; 3],
}

/// Effective Hamiltonian after adiabatic elimination of the two-photon tone.
pub fn build_effective_hamiltonian(d: &EffectiveDrive, det: &DriveDetunings) -> Hamiltonian {
    let e01 = 0.5 * d.omega01 * C64::from_polar(1.0, d.phases[0]);
    let e12 = 0.5 * d.omega12 * C64::from_polar(1.0, d.phases[1]);
    let e02 = 0.5 * d.omega_eff * C64::from_polar(1.0, d.phases[2]);
    let re = |x: f64| C64::new(x, 0.0);
    Matrix3::new(
        re(d.shifts[0]),
        e01,
        e02,
        e01.conj(),
        re(d.shifts[1] + det.delta01),
        e12,
        e02.conj(),
        e12.conj(),
        re(d.shifts[2] + det.delta01 + det.delta12),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transition {
    ZeroOne,
    OneTwo,
    ZeroTwo,
}

impl Transition {
    fn levels(self) -> (usize, usize) {
        match self {
            Transition::ZeroOne => (0, 1),
            Transition::OneTwo => (1, 2),
            Transition::ZeroTwo => (0, 2),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coupling {
    /// Tone resonant with a single transition.
    Single(Transition),
    /// Tone near `ω02 / 2`, coupling 0–1 and (scaled by `λ`) 1–2.
    TwoPhoton,
}

/// A drive tone evaluated at one instant: complex amplitude `Ω e^{iφ}` and its detuning.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CarrierTone {
    pub coupling: Coupling,
    pub amplitude: C64,
    pub detuning: f64,
}

/// Full (non-eliminated) Hamiltonian in the interaction picture of the bare ladder, then
/// moved to a rotating frame with diagonal frequencies `frame`.
pub fn build_carrier_hamiltonian(
    tones: &[CarrierTone],
    params: &QutritParams,
    frame: &[f64; 3],
    t: f64,
) -> Hamiltonian {
    let mut h = Hamiltonian::zeros();
    let mut add = |l: usize, u: usize, amp: C64, freq: f64| {
        h[(l, u)] += 0.5 * amp * C64::from_polar(1.0, (freq + frame[l] - frame[u]) * t);
    };
    for tone in tones {
        match tone.coupling {
            Coupling::Single(tr) => {
                let (l, u) = tr.levels();
                add(l, u, tone.amplitude, -tone.detuning);
            }
            Coupling::TwoPhoton => {
                add(0, 1, tone.amplitude, -tone.detuning);
                add(1, 2, params.lambda * tone.amplitude, params.anharmonicity() - tone.detuning);
            }
        }
    }
    for (l, u) in [(0, 1), (1, 2), (0, 2)] {
        h[(u, l)] = h[(l, u)].conj();
    }
    for k in 0..3 {
        h[(k, k)] = C64::new(-frame[k], 0.0);
    }
    h
}

/// Rotating frame in which two-photon resonant STIRAP tones are static.
pub fn stirap_frame(det: &DriveDetunings) -> [f64; 3] {
    [0.0, -det.delta01, -det.delta01 - det.delta12]
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;

    fn max_abs(m: &Hamiltonian) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn rwa_hamiltonian_matches_ladder_layout() {
        let h = build_rwa_hamiltonian(0.3, 0.4, &DriveDetunings { delta01: 0.1, delta12: 0.05 });
        assert_eq!(h[(0, 1)].re, 0.15);
        assert_eq!(h[(1, 2)].re, 0.2);
        assert_eq!(h[(0, 2)].norm(), 0.0);
        assert!((h[(1, 1)].re - 0.1).abs() < 1e-15);
        assert!((h[(2, 2)].re - 0.15).abs() < 1e-15);
        assert!(max_abs(&(h - h.adjoint())) == 0.0);
    }

    #[test]
    fn eigensystem_diagonalizes_hamiltonian() {
        for &(o1, o2, d) in &[(0.3, 0.1, 0.0), (0.05, 0.2, 0.1), (0.2, 0.2, -0.07), (1e-3, 0.5, 0.3)] {
            let b = instantaneous_eigensystem(o1, o2, d).unwrap();
            let h = build_rwa_hamiltonian(o1, o2, &DriveDetunings::two_photon_resonant(d));
            for (v, w) in [(b.plus, b.omega_plus), (b.minus, b.omega_minus), (b.dark, b.omega_dark)] {
                let r = h * v.0 - v.0 * C64::new(w, 0.0);
                assert!(r.norm() < 1e-14, "residual {}", r.norm());
                assert!((v.norm() - 1.0).abs() < 1e-14);
            }
            // independent eigenvalue oracle
            let hr = h.map(|z| z.re);
            let mut ev: Vec<f64> = SymmetricEigen::new(hr).eigenvalues.iter().copied().collect();
            ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut ours = [b.omega_minus, b.omega_dark, b.omega_plus];
            ours.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for k in 0..3 {
                assert!((ev[k] - ours[k]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn resonant_angles() {
        let b = instantaneous_eigensystem(0.2, 0.2, 0.0).unwrap();
        assert!((b.theta - PI / 4.0).abs() < 1e-15);
        assert!((b.phi - PI / 4.0).abs() < 1e-15);
        assert!(instantaneous_eigensystem(0.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn carrier_in_stirap_frame_reduces_to_rwa() {
        let det = DriveDetunings::two_photon_resonant(0.07);
        let p = QutritParams::transmon(1.3);
        let tones = [
            CarrierTone { coupling: Coupling::Single(Transition::ZeroOne), amplitude: 0.3.into(), detuning: det.delta01 },
            CarrierTone { coupling: Coupling::Single(Transition::OneTwo), amplitude: 0.2.into(), detuning: det.delta12 },
        ];
        for &t in &[0.0, 1.7, -33.0] {
            let h = build_carrier_hamiltonian(&tones, &p, &stirap_frame(&det), t);
            let r = build_rwa_hamiltonian(0.3, 0.2, &det);
            assert!(max_abs(&(h - r)) < 1e-14);
        }
    }

    #[test]
    fn effective_hamiltonian_is_hermitian() {
        let d = EffectiveDrive {
            omega01: C64::new(0.1, 0.03),
            omega12: C64::new(0.2, -0.01),
            omega_eff: C64::new(-0.01, 0.02),
            phases: [0.3, -1.2, 2.0],
            shifts: [0.01, -0.03, 0.02],
        };
        let h = build_effective_hamiltonian(&d, &DriveDetunings::two_photon_resonant(0.05));
        assert!(max_abs(&(h - h.adjoint())) < 1e-16);
        assert!((h[(1, 1)].re - (-0.03 + 0.05)).abs() < 1e-16);
        assert!((h[(2, 2)].re - 0.02).abs() < 1e-16);
    }

    #[test]
    fn angle_continuation() {
        assert!((continue_angle(3.0, 3.0 - PI + 0.01) - (3.01)).abs() < 1e-12);
        assert_eq!(continue_angle(0.2, 0.3), 0.3);
    }

    #[test]
    fn params_validation() {
        assert!(QutritParams::new(5.0, 5.2, 1.0).is_err());
        assert!(QutritParams::new(5.0, 4.0, 0.0).is_err());
        assert_eq!(QutritParams::new(5.0, 4.0, 1.0).unwrap().anharmonicity(), 1.0);
    }
}
