//! Weak-probe spectroscopy of the Stark-shifted ladder under a constant two-photon drive.
//!
//! Runs use the full carrier Hamiltonian in the frame of the two-photon tone, where only the
//! probe term is time dependent; the evolution is then periodic and one period is reused.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{self, IntegratorConfig};
use crate::model::{build_carrier_hamiltonian, CarrierTone, Coupling, QutritParams, StateVector, Transition};
use crate::stark;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Probe {
    /// 0–1 probe, starting in `|0⟩`.
    ZeroOne,
    /// 1–2 probe, starting in `|2⟩`.
    OneTwo,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectroscopySetup {
    pub qutrit: QutritParams,
    pub probe_amplitude: f64,
    pub integrator: IntegratorConfig,
}

impl Default for SpectroscopySetup {
    fn default() -> Self {
        SpectroscopySetup { qutrit: QutritParams::transmon(1.0), probe_amplitude: 1e-3, integrator: IntegratorConfig::default() }
    }
}

impl SpectroscopySetup {
    pub fn duration(&self) -> f64 {
        PI / self.probe_amplitude
    }

    pub fn validate(&self) -> Result<()> {
        self.qutrit.validate()?;
        self.integrator.validate()?;
        if !(self.probe_amplitude > 0.0) {
            return Err(Error::InvalidParameter("probe amplitude must be positive".into()));
        }
        Ok(())
    }
}

/// Time-averaged `p1` for a probe at frequency offset `offset = ω_probe − ω_transition`,
/// with a constant two-photon drive `|Ω02| = omega02` at detuning `delta02`.
/// `corrected` adds the linear correction phases `ε t` to the probe and `ε02 t / 2` to the drive.
pub fn probe_average(setup: &SpectroscopySetup, probe: Probe, delta02: f64, omega02: f64, offset: f64, corrected: bool) -> Result<f64> {
    setup.validate()?;
    let q = &setup.qutrit;
    let anh = q.anharmonicity();
    let (mut d02, mut dp) = (delta02, -offset);
    if corrected && omega02 != 0.0 {
        let s = stark::level_shifts(omega02, delta02, anh, q.lambda)?;
        // a phase ramp e^{i r t} on a tone is a shift of its detuning by −r
        d02 -= 0.5 * s.eps02;
        dp -= match probe {
            Probe::ZeroOne => s.eps01,
            Probe::OneTwo => s.eps12,
        };
    }
    let frame = [0.0, -d02, anh - 2.0 * d02];
    let (tr, psi0, nu) = match probe {
        Probe::ZeroOne => (Transition::ZeroOne, StateVector::basis(0), d02 - dp),
        Probe::OneTwo => (Transition::OneTwo, StateVector::basis(2), d02 - anh - dp),
    };
    let tones = [
        CarrierTone { coupling: Coupling::TwoPhoton, amplitude: C64::new(omega02, 0.0), detuning: d02 },
        CarrierTone { coupling: Coupling::Single(tr), amplitude: C64::new(setup.probe_amplitude, 0.0), detuning: dp },
    ];
    let h = |t: f64| build_carrier_hamiltonian(&tones, q, &frame, t);
    let total = setup.duration();
    let period = if nu.abs() > 1e-12 { 2.0 * PI / nu.abs() } else { total };
    let fastest = [nu.abs(), d02.abs(), (anh - 2.0 * d02).abs(), omega02].into_iter().fold(1e-3, f64::max);
    let mut cfg = setup.integrator;
    if cfg.max_step.is_none() {
        cfg.max_step = Some(0.02 / fastest);
    }
    let span = period.min(total);
    let k_sub = ((span * fastest / 0.5).ceil() as usize).max(64);
    let (avg, _) = evolve::periodic_averaged_populations(h, &psi0, total, period, k_sub, &cfg)?;
    Ok(avg[1])
}

/// Time-averaged `p2` from `|0⟩` under the two-photon drive alone over `[0, t_f]`.
/// The Hamiltonian is static in the frame of the tone, so the average is taken in closed form
/// over its eigenbasis.
pub fn two_photon_average(qutrit: &QutritParams, delta02: f64, omega02: f64, t_f: f64) -> Result<f64> {
    qutrit.validate()?;
    if !(t_f > 0.0 && t_f.is_finite()) {
        return Err(Error::InvalidParameter(format!("duration must be positive and finite, got {t_f}")));
    }
    let anh = qutrit.anharmonicity();
    let tones = [CarrierTone { coupling: Coupling::TwoPhoton, amplitude: C64::new(omega02, 0.0), detuning: delta02 }];
    let h = build_carrier_hamiltonian(&tones, qutrit, &[0.0, -delta02, anh - 2.0 * delta02], 0.0);
    let eig = h.symmetric_eigen();
    // ψ2(t) = Σ_k a_k e^{−iE_k t}
    let a: Vec<C64> = (0..3).map(|k| eig.eigenvectors[(2, k)] * eig.eigenvectors[(0, k)].conj()).collect();
    let e = eig.eigenvalues;
    let mut acc = 0.0;
    for k in 0..3 {
        for l in 0..3 {
            let x = (e[k] - e[l]) * t_f;
            // (1/T)∫ e^{−iωt} dt
            let w = if x.abs() < 1e-6 { C64::new(1.0 - x * x / 6.0, -x / 2.0) } else { (C64::new(0.0, -x).exp() - 1.0) / C64::new(0.0, -x) };
            acc += (a[k] * a[l].conj() * w).re;
        }
    }
    Ok(acc.clamp(0.0, 1.0))
}

/// Location of the largest value of `f` on `[lo, hi]`: grid scan at `step`, then golden-section.
pub fn locate_peak<F: Fn(f64) -> Result<f64>>(f: F, lo: f64, hi: f64, step: f64) -> Result<(f64, f64)> {
    let n = ((hi - lo) / step).ceil().max(1.0) as usize;
    let mut best = (lo, f64::NEG_INFINITY);
    for k in 0..=n {
        let x = lo + (hi - lo) * k as f64 / n as f64;
        let v = f(x)?;
        if v > best.1 {
            best = (x, v);
        }
    }
    golden_max(&f, best.0 - step, best.0 + step, step * 1e-3, best)
}

fn golden_max<F: Fn(f64) -> Result<f64>>(f: &F, mut a: f64, mut b: f64, tol: f64, fallback: (f64, f64)) -> Result<(f64, f64)> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    while b - a > tol {
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2)?;
        }
    }
    let x = 0.5 * (a + b);
    let v = f(x)?;
    Ok(if v >= fallback.1 { (x, v) } else { fallback })
}

/// Local maxima of a sampled curve exceeding `threshold`.
pub fn local_maxima(xs: &[f64], ys: &[f64], threshold: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for k in 1..ys.len().saturating_sub(1) {
        if ys[k] > threshold && ys[k] >= ys[k - 1] && ys[k] > ys[k + 1] {
            out.push((xs[k], ys[k]));
        }
    }
    out
}
