//! Envelope families, counterdiabatic (CD) pulses and their two-photon realization.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianPulse {
    pub peak: f64,
    pub center: f64,
    pub sigma: f64,
}

impl GaussianPulse {
    pub fn new(peak: f64, center: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
        }
        if !(peak >= 0.0) {
            return Err(Error::InvalidParameter(format!("peak must be non-negative, got {peak}")));
        }
        Ok(GaussianPulse { peak, center, sigma })
    }

    pub fn value(&self, t: f64) -> f64 {
        let u = (t - self.center) / self.sigma;
        self.peak * (-0.5 * u * u).exp()
    }

    pub fn derivative(&self, t: f64) -> f64 {
        -(t - self.center) / (self.sigma * self.sigma) * self.value(t)
    }

    pub fn shifted(&self, dt: f64, scale: f64) -> Self {
        GaussianPulse { peak: self.peak * scale, center: self.center + dt, sigma: self.sigma }
    }
}

pub fn gaussian_envelope(p: &GaussianPulse, t: f64) -> f64 {
    p.value(t)
}

/// Real envelope with a time derivative.
#[derive(Clone)]
pub enum Envelope {
    Zero,
    /// Sum of Gaussians.
    Gaussians(Vec<GaussianPulse>),
    /// User-supplied function; derivative by a five-point stencil of width `step`.
    Custom { f: Arc<dyn Fn(f64) -> f64 + Send + Sync>, step: f64 },
}

impl fmt::Debug for Envelope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Envelope::Zero => write!(f, "Zero"),
            Envelope::Gaussians(g) => f.debug_tuple("Gaussians").field(g).finish(),
            Envelope::Custom { step, .. } => write!(f, "Custom {{ step: {step} }}"),
        }
    }
}

impl Envelope {
    pub fn gaussian(p: GaussianPulse) -> Self {
        Envelope::Gaussians(vec![p])
    }

    pub fn custom<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F, step: f64) -> Self {
        Envelope::Custom { f: Arc::new(f), step }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Envelope::Zero => 0.0,
            Envelope::Gaussians(g) => g.iter().map(|p| p.value(t)).sum(),
            Envelope::Custom { f, .. } => f(t),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            Envelope::Zero => 0.0,
            Envelope::Gaussians(g) => g.iter().map(|p| p.derivative(t)).sum(),
            Envelope::Custom { f, step } => {
                let h = *step;
                (f(t - 2.0 * h) - 8.0 * f(t - h) + 8.0 * f(t + h) - f(t + 2.0 * h)) / (12.0 * h)
            }
        }
    }

    pub fn peak_estimate(&self) -> f64 {
        match self {
            Envelope::Zero => 0.0,
            Envelope::Gaussians(g) => g.iter().map(|p| p.peak).sum(),
            Envelope::Custom { .. } => f64::NAN,
        }
    }
}

/// A pair of envelopes driving 0–1 and 1–2 that forms one (possibly fractional) STIRAP.
#[derive(Clone, Debug)]
pub struct StirapPair {
    pub env01: Envelope,
    pub env12: Envelope,
}

/// Mixing-angle rates of one pair.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AngleRates {
    pub theta: f64,
    pub theta_dot: f64,
    pub phi: f64,
    pub phi_dot: f64,
    /// false where both envelopes vanish
    pub defined: bool,
}

impl StirapPair {
    pub fn angle_rates(&self, delta: f64, t: f64) -> AngleRates {
        let (o1, o2) = (self.env01.value(t), self.env12.value(t));
        let (d1, d2) = (self.env01.derivative(t), self.env12.derivative(t));
        let r2 = o1 * o1 + o2 * o2;
        if r2 == 0.0 {
            return AngleRates { phi: 0.5 * 0f64.atan2(delta), ..Default::default() };
        }
        let r = r2.sqrt();
        let r_dot = (o1 * d1 + o2 * d2) / r;
        AngleRates {
            theta: o1.atan2(o2),
            theta_dot: (d1 * o2 - o1 * d2) / r2,
            phi: 0.5 * r.atan2(delta),
            phi_dot: delta * r_dot / (2.0 * (r2 + delta * delta)),
            defined: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FractionalParams {
    pub eta: f64,
    pub tau: f64,
}

impl FractionalParams {
    /// NOT-gate fraction `η = π/4` with delay `τ = 10σ`.
    pub fn not_gate(sigma: f64) -> Self {
        FractionalParams { eta: PI / 4.0, tau: 10.0 * sigma }
    }
}

/// STIRAP envelopes, their decomposition into CD segments and the integration window.
#[derive(Clone, Debug)]
pub struct PulseSchedule {
    pub env01: Envelope,
    pub env12: Envelope,
    /// Sub-sequences whose envelopes add up to `env01`, `env12`; each carries its own CD.
    pub segments: Vec<StirapPair>,
    pub base: Option<[GaussianPulse; 2]>,
    pub t_s: f64,
    pub sigma: f64,
    pub window: (f64, f64),
}

/// Counterdiabatic couplings `(a01, a12, a02)`, each applied as `2i·a` in the `Ω/2` convention.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CdTerms {
    pub a01: f64,
    pub a12: f64,
    pub a02: f64,
}

pub const DEFAULT_WINDOW_SIGMAS: f64 = 5.0;

pub fn stirap_schedule(omega01_peak: f64, omega12_peak: f64, sigma: f64, t_s: f64) -> Result<PulseSchedule> {
    let p = GaussianPulse::new(omega01_peak, 0.0, sigma)?;
    let s = GaussianPulse::new(omega12_peak, t_s, sigma)?;
    let pair = StirapPair { env01: Envelope::gaussian(p), env12: Envelope::gaussian(s) };
    Ok(PulseSchedule {
        env01: pair.env01.clone(),
        env12: pair.env12.clone(),
        segments: vec![pair],
        base: Some([p, s]),
        t_s,
        sigma,
        window: (
            t_s.min(0.0) - DEFAULT_WINDOW_SIGMAS * sigma,
            t_s.max(0.0) + DEFAULT_WINDOW_SIGMAS * sigma,
        ),
    })
}

/// Two back-to-back fractional STIRAPs, the second delayed by `τ` with channel roles exchanged.
pub fn fractional_schedule(base: &PulseSchedule, frac: &FractionalParams) -> Result<PulseSchedule> {
    let [p, s] = base
        .base
        .ok_or_else(|| Error::InvalidParameter("fractional schedule needs a Gaussian STIRAP base".into()))?;
    if !(0.0..=PI / 2.0).contains(&frac.eta) {
        return Err(Error::InvalidParameter(format!("eta must lie in [0, pi/2], got {}", frac.eta)));
    }
    if !(frac.tau >= 0.0) {
        return Err(Error::InvalidParameter(format!("tau must be non-negative, got {}", frac.tau)));
    }
    let (se, ce) = frac.eta.sin_cos();
    let first = StirapPair {
        env01: Envelope::Gaussians(vec![p, s.shifted(0.0, ce)]),
        env12: Envelope::Gaussians(vec![s.shifted(0.0, se)]),
    };
    let second = StirapPair {
        env01: Envelope::Gaussians(vec![p.shifted(frac.tau, se)]),
        env12: Envelope::Gaussians(vec![s.shifted(frac.tau, 1.0), p.shifted(frac.tau, ce)]),
    };
    let join = |a: &Envelope, b: &Envelope| match (a, b) {
        (Envelope::Gaussians(x), Envelope::Gaussians(y)) => {
            Envelope::Gaussians(x.iter().chain(y.iter()).copied().filter(|g| g.peak != 0.0).collect())
        }
        _ => unreachable!(),
    };
    let w = base.window;
    Ok(PulseSchedule {
        env01: join(&first.env01, &second.env01),
        env12: join(&first.env12, &second.env12),
        segments: vec![first, second],
        base: base.base,
        t_s: base.t_s,
        sigma: base.sigma,
        window: (w.0, w.1 + frac.tau),
    })
}

impl PulseSchedule {
    pub fn with_window(mut self, window: (f64, f64)) -> Self {
        self.window = window;
        self
    }

    /// `Θ̇` summed over segments.
    pub fn theta_dot(&self, t: f64) -> Result<f64> {
        Ok(self.cd_terms(0.0, t)?.a02)
    }

    /// Resonant CD envelope `Ω_cd = 2iΘ̇` (quotient form).
    pub fn cd_envelope(&self, t: f64) -> Result<C64> {
        Ok(C64::new(0.0, 2.0 * self.theta_dot(t)?))
    }

    /// CD couplings for single-photon detuning `delta` at two-photon resonance.
    pub fn cd_terms(&self, delta: f64, t: f64) -> Result<CdTerms> {
        let mut out = CdTerms::default();
        let mut any = false;
        for seg in &self.segments {
            let r = seg.angle_rates(delta, t);
            if !r.defined {
                continue;
            }
            any = true;
            let (st, ct) = r.theta.sin_cos();
            out.a01 += r.phi_dot * st;
            out.a12 -= r.phi_dot * ct;
            out.a02 += r.theta_dot;
        }
        if any {
            Ok(out)
        } else {
            Err(Error::DegenerateEnvelopes { t })
        }
    }

    /// Mixing angle of the combined envelopes.
    pub fn theta(&self, t: f64) -> Result<f64> {
        let (o1, o2) = (self.env01.value(t), self.env12.value(t));
        if o1 == 0.0 && o2 == 0.0 {
            return Err(Error::DegenerateEnvelopes { t });
        }
        Ok(o1.atan2(o2))
    }
}

pub fn cd_envelope(schedule: &PulseSchedule, t: f64) -> Result<C64> {
    schedule.cd_envelope(t)
}

pub fn detuned_cd_terms(schedule: &PulseSchedule, delta: f64, t: f64) -> Result<CdTerms> {
    schedule.cd_terms(delta, t)
}

/// Closed form of the resonant CD pulse for equal-peak Gaussians.
pub fn cd_envelope_sech(t_s: f64, sigma: f64, t: f64) -> C64 {
    let k = -t_s / (sigma * sigma);
    C64::new(0.0, k / (k * (t - t_s / 2.0)).cosh())
}

/// Two-photon tone `(|Ω02|, φ02)` whose effective coupling equals `omega_cd`.
pub fn two_photon_realization(omega_cd: C64, delta02: f64, lambda: f64) -> Result<(f64, f64)> {
    if delta02 == 0.0 {
        return Err(Error::ZeroDetuning);
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    let mag = (2.0 * delta02.abs() * omega_cd.norm() / lambda).sqrt();
    // Ω_eff = −λΩ02²/(2δ02): the square must equal −(2δ02/λ)·Ω_cd
    let target = if delta02 > 0.0 { -omega_cd } else { omega_cd };
    Ok((mag, 0.5 * target.arg()))
}

/// Two-photon tone realizing the sech CD pulse.
pub fn two_photon_cd_envelope(t_s: f64, sigma: f64, delta02: f64, lambda: f64, t: f64) -> Result<(f64, f64)> {
    if -2.0 * t_s * delta02 <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "two-photon CD needs t_s and delta02 of opposite sign (t_s = {t_s}, delta02 = {delta02})"
        )));
    }
    let (mag, _) = two_photon_realization(cd_envelope_sech(t_s, sigma, t), delta02, lambda)?;
    Ok((mag, -PI / 4.0))
}

pub fn pulse_area<F: Fn(f64) -> f64>(envelope: F, window: (f64, f64)) -> f64 {
    quad::integrate(envelope, window.0, window.1, 1e-10, 1e-14)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stark::effective_coupling;

    fn fd(f: impl Fn(f64) -> f64, t: f64, h: f64) -> f64 {
        (f(t - 2.0 * h) - 8.0 * f(t - h) + 8.0 * f(t + h) - f(t + 2.0 * h)) / (12.0 * h)
    }

    #[test]
    fn gaussian_shape() {
        let g = GaussianPulse::new(0.3, 2.0, 4.0).unwrap();
        assert_eq!(gaussian_envelope(&g, 2.0), 0.3);
        assert!((g.value(6.0) - 0.3 * (-0.5f64).exp()).abs() < 1e-16);
        assert!(GaussianPulse::new(0.3, 0.0, 0.0).is_err());
        assert!(GaussianPulse::new(-0.1, 0.0, 1.0).is_err());
    }

    #[test]
    fn gaussian_derivative_matches_differences() {
        let g = GaussianPulse::new(0.1, -3.0, 36.0).unwrap();
        let mut worst: f64 = 0.0;
        for k in 0..200 {
            let t = -200.0 + 2.0 * k as f64 + 0.37;
            let num = fd(|x| g.value(x), t, 1e-2);
            let an = g.derivative(t);
            if an.abs() > 1e-12 {
                worst = worst.max((num - an).abs() / an.abs());
            }
        }
        assert!(worst < 1e-8, "worst {worst}");
    }

    #[test]
    fn schedule_window_and_order() {
        let s = stirap_schedule(0.1, 0.1, 36.0, -72.0).unwrap();
        assert_eq!(s.window, (-72.0 - 180.0, 180.0));
        // 1-2 pulse first
        assert!(s.env12.value(-72.0) > s.env01.value(-72.0));
        for t in [s.window.0, s.window.1] {
            assert!(s.env01.value(t) < 1e-5 * 0.1 && s.env12.value(t) < 1e-5 * 0.1);
        }
        let area = pulse_area(|t| s.env01.value(t), (-1e3, 1e3));
        assert!((area - (2.0 * PI).sqrt() * 3.6).abs() < 1e-8);
    }

    #[test]
    fn quotient_matches_sech() {
        let sigma = 36.0;
        let s = stirap_schedule(0.1, 0.1, sigma, -2.0 * sigma).unwrap();
        let mut worst: f64 = 0.0;
        for k in 0..500 {
            let t = s.window.0 + (s.window.1 - s.window.0) * k as f64 / 499.0;
            let q = s.cd_envelope(t).unwrap();
            let c = cd_envelope_sech(s.t_s, sigma, t);
            worst = worst.max((q - c).norm() / c.norm());
        }
        assert!(worst < 1e-10, "worst {worst}");
        let peak = s.cd_envelope(-sigma).unwrap();
        assert!((peak.im - 2.0 / sigma).abs() < 1e-14);
        assert_eq!(peak.re, 0.0);
        let area = pulse_area(|t| s.cd_envelope(t).unwrap().norm(), s.window);
        assert!((area - PI).abs() < 1e-3 * PI);
    }

    #[test]
    fn sech_area_is_pi() {
        let area = pulse_area(|t| cd_envelope_sech(-10.0, 5.0, t).norm(), (-400.0, 400.0));
        assert!((area - PI).abs() < 1e-9);
    }

    #[test]
    fn two_photon_inverse() {
        let (ts, sigma, d02, lam) = (-72.0, 36.0, 0.5, 2f64.sqrt());
        for k in 0..50 {
            let t = -250.0 + 5.0 * k as f64;
            let (m, ph) = two_photon_cd_envelope(ts, sigma, d02, lam, t).unwrap();
            let eff = effective_coupling(C64::from_polar(m, ph), d02, lam).unwrap();
            let cd = cd_envelope_sech(ts, sigma, t);
            assert!((eff - cd).norm() < 1e-12 * cd.norm(), "t {t}");
        }
        let (peak, ph) = two_photon_cd_envelope(ts, sigma, d02, lam, ts / 2.0).unwrap();
        assert!((peak - (2f64.sqrt() / sigma).sqrt()).abs() < 1e-14);
        assert!((peak - 0.198).abs() < 1e-3);
        assert_eq!(ph, -PI / 4.0);
        let (p2, _) = two_photon_cd_envelope(ts, sigma, 2.0 * d02, lam, ts / 2.0).unwrap();
        assert!((p2 / peak - 2f64.sqrt()).abs() < 1e-14);
        assert!(two_photon_cd_envelope(72.0, sigma, d02, lam, 0.0).is_err());
    }

    #[test]
    fn general_realization_handles_both_lobes() {
        for cd in [C64::new(0.0, 0.02), C64::new(0.0, -0.013), C64::new(0.004, 0.01)] {
            for d02 in [0.5, -0.3] {
                let (m, ph) = two_photon_realization(cd, d02, 1.3).unwrap();
                let eff = effective_coupling(C64::from_polar(m, ph), d02, 1.3).unwrap();
                assert!((eff - cd).norm() < 1e-15);
            }
        }
        assert_eq!(two_photon_realization(C64::new(0.0, 1.0), 0.0, 1.0), Err(Error::ZeroDetuning));
    }

    #[test]
    fn resonant_limit_has_no_phi_terms() {
        let s = stirap_schedule(0.1, 0.1, 36.0, -72.0).unwrap();
        let c = s.cd_terms(0.0, -20.0).unwrap();
        assert_eq!((c.a01, c.a12), (0.0, 0.0));
        assert_eq!(c.a02, s.theta_dot(-20.0).unwrap());
    }

    #[test]
    fn phi_dot_matches_differences() {
        let s = stirap_schedule(1.0 / 6.0, 1.0 / 6.0, 80.0, -160.0).unwrap();
        let delta = 0.1;
        let phi = |t: f64| {
            let r = s.env01.value(t).hypot(s.env12.value(t));
            0.5 * r.atan2(delta)
        };
        for k in 0..100 {
            let t = -400.0 + 6.0 * k as f64 + 0.1;
            let r = s.segments[0].angle_rates(delta, t);
            let num = fd(phi, t, 1e-2);
            assert!((r.phi_dot - num).abs() <= 1e-6 * r.phi_dot.abs().max(1e-12), "t {t}");
            let c = s.cd_terms(delta, t).unwrap();
            assert!((c.a01 - r.phi_dot * r.theta.sin()).abs() < 1e-18);
        }
    }

    #[test]
    fn fractional_angles_and_derivatives() {
        let sigma = 36.0;
        let base = stirap_schedule(1.0 / 6.0, 1.0 / 6.0, sigma, -2.0 * sigma).unwrap();
        let eta = 0.6;
        let f = fractional_schedule(&base, &FractionalParams { eta, tau: 10.0 * sigma }).unwrap();
        // far outside both sequences the envelope ratio is set by eta
        let ti = f.window.0 - 20.0 * sigma;
        let tf = f.window.1 + 20.0 * sigma;
        assert!((f.env01.value(ti) / f.env12.value(ti) - 1.0 / eta.tan()).abs() < 1e-9);
        assert!((f.env01.value(tf) / f.env12.value(tf) - eta.tan()).abs() < 1e-9);
        for k in 0..300 {
            let t = f.window.0 + (f.window.1 - f.window.0) * k as f64 / 299.0;
            for env in [&f.env01, &f.env12] {
                let num = fd(|x| env.value(x), t, 1e-2);
                let an = env.derivative(t);
                assert!((num - an).abs() <= 1e-6 * an.abs().max(1e-10));
            }
            // segments sum to the combined envelopes
            let s01: f64 = f.segments.iter().map(|s| s.env01.value(t)).sum();
            assert!((s01 - f.env01.value(t)).abs() < 1e-15);
        }
        let full = fractional_schedule(&base, &FractionalParams { eta: PI / 2.0, tau: 10.0 * sigma }).unwrap();
        let s = &full.segments[0];
        assert!((s.env01.value(3.0) - base.env01.value(3.0)).abs() < 1e-15);
    }

    #[test]
    fn fractional_mirror_symmetry() {
        let sigma = 36.0;
        let base = stirap_schedule(0.2, 0.2, sigma, -2.0 * sigma).unwrap();
        let f = fractional_schedule(&base, &FractionalParams::not_gate(sigma)).unwrap();
        let tau = 10.0 * sigma;
        let (a, b) = (&f.segments[0], &f.segments[1]);
        for k in 0..50 {
            let t = -200.0 + 8.0 * k as f64;
            // second sequence is the first with channel labels exchanged and time reversed about t_s/2
            let m = base.t_s - t;
            assert!((b.env01.value(t + tau) - a.env12.value(m)).abs() < 1e-15);
            assert!((b.env12.value(t + tau) - a.env01.value(m)).abs() < 1e-15);
        }
    }

    #[test]
    fn custom_envelope_fallback() {
        let g = GaussianPulse::new(0.2, 1.0, 10.0).unwrap();
        let e = Envelope::custom(move |t| g.value(t), 1e-2);
        for t in [-20.0, 0.0, 3.0, 17.0] {
            assert!((e.derivative(t) - g.derivative(t)).abs() < 1e-6 * g.derivative(t).abs().max(1e-9));
        }
        assert_eq!(pulse_area(|t| Envelope::Zero.value(t), (0.0, 1.0)), 0.0);
    }
}
