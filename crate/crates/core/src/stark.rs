//! Two-photon effective coupling, second-order ac-Stark shifts and dynamical phase corrections.

use std::fmt;
use std::sync::Arc;

use nalgebra::Matrix3;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::Hamiltonian;
use crate::quad;

pub const POLE_GUARD: f64 = 1e-6;

/// `Ω_eff = −λΩ02²/(2δ02)`.
pub fn effective_coupling(omega02: C64, delta02: f64, lambda: f64) -> Result<C64> {
    if delta02 == 0.0 {
        return Err(Error::ZeroDetuning);
    }
    if omega02.norm() > 0.0 && delta02.abs() / omega02.norm() < 3.0 {
        log::warn!(
            "adiabatic elimination questionable: |delta02| / |Omega02| = {:.3}",
            delta02.abs() / omega02.norm()
        );
    }
    Ok(-lambda * omega02 * omega02 / (2.0 * delta02))
}

/// Effective `{|0⟩, |2⟩}` Hamiltonian after eliminating `|1⟩` (frame co-rotating with the tone).
pub fn adiabatic_eliminated_hamiltonian(omega02: C64, delta02: f64, anharmonicity: f64, lambda: f64) -> Result<Hamiltonian> {
    let eff = effective_coupling(omega02, delta02, lambda)?;
    let m2 = omega02.norm_sqr();
    let z = C64::new(0.0, 0.0);
    let d00 = C64::new(-m2 / (2.0 * delta02), 0.0);
    let d22 = C64::new(4.0 * delta02 - 2.0 * anharmonicity - lambda * lambda * m2 / (2.0 * delta02), 0.0);
    Ok(Matrix3::new(d00, z, eff, z, z, z, eff.conj(), z, d22) * C64::new(0.5, 0.0))
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LevelShifts {
    pub eps0: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub eps01: f64,
    pub eps12: f64,
    pub eps02: f64,
}

impl LevelShifts {
    pub fn levels(&self) -> [f64; 3] {
        [self.eps0, self.eps1, self.eps2]
    }

    pub fn scaled(&self, s: f64) -> Self {
        LevelShifts {
            eps0: self.eps0 * s,
            eps1: self.eps1 * s,
            eps2: self.eps2 * s,
            eps01: self.eps01 * s,
            eps12: self.eps12 * s,
            eps02: self.eps02 * s,
        }
    }
}

fn check_poles(delta02: f64, anharmonicity: f64) -> Result<()> {
    let guard = POLE_GUARD * anharmonicity;
    if delta02.abs() < guard || (anharmonicity - delta02).abs() < guard {
        return Err(Error::ShiftPole { delta02, guard });
    }
    Ok(())
}

/// Second-order shifts of the three levels and the three transitions.
pub fn level_shifts(mag02: f64, delta02: f64, anharmonicity: f64, lambda: f64) -> Result<LevelShifts> {
    check_poles(delta02, anharmonicity)?;
    let m2 = mag02 * mag02;
    let a = m2 / (4.0 * delta02);
    let b = lambda * lambda * m2 / (4.0 * (anharmonicity - delta02));
    Ok(LevelShifts {
        eps0: -a,
        eps1: a + b,
        eps2: -b,
        eps01: 2.0 * a + b,
        eps12: -a - 2.0 * b,
        eps02: a - b,
    })
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Cumulative `∫|Ω02|²` as a function of time.
#[derive(Clone)]
pub enum PhaseFn {
    Zero,
    Linear(f64),
    Table(PhaseTable),
    /// Closed form with its derivative.
    Exact { value: ScalarFn, rate: ScalarFn },
}

impl fmt::Debug for PhaseFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhaseFn::Zero => write!(f, "Zero"),
            PhaseFn::Linear(r) => write!(f, "Linear({r})"),
            PhaseFn::Table(t) => write!(f, "Table({} nodes)", t.len()),
            PhaseFn::Exact { .. } => write!(f, "Exact"),
        }
    }
}

impl PhaseFn {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            PhaseFn::Zero => 0.0,
            PhaseFn::Linear(rate) => rate * t,
            PhaseFn::Table(tab) => tab.eval(t),
            PhaseFn::Exact { value, .. } => value(t),
        }
    }

    pub fn rate(&self, t: f64) -> f64 {
        match self {
            PhaseFn::Zero => 0.0,
            PhaseFn::Linear(rate) => *rate,
            PhaseFn::Table(tab) => tab.rate(t),
            PhaseFn::Exact { rate, .. } => rate(t),
        }
    }
}

/// Cumulative integral of `g ≥ 0` on an adaptive grid, interpolated by cubic Hermite segments.
#[derive(Clone, Debug)]
pub struct PhaseTable {
    times: Vec<f64>,
    values: Vec<f64>,
    rates: Vec<f64>,
}

impl PhaseTable {
    pub fn build<F: Fn(f64) -> f64>(g: F, window: (f64, f64), tol: f64) -> Self {
        let (a, b) = window;
        let mut times = vec![a];
        let mut values = vec![0.0];
        let mut rates = vec![g(a)];
        let scale = quad::integrate(&g, a, b, 1e-12, 0.0).abs().max(1e-300);
        // recursive bisection until both the integral and the Hermite midpoint are accurate
        let mut stack = vec![(a, b)];
        let mut pieces: Vec<(f64, f64, f64)> = Vec::new();
        while let Some((lo, hi)) = stack.pop() {
            let (val, err) = quad::gauss_kronrod(&g, lo, hi);
            let mid = 0.5 * (lo + hi);
            let (half, _) = quad::gauss_kronrod(&g, lo, mid);
            let h = hi - lo;
            let (glo, ghi) = (g(lo), g(hi));
            let herm = 0.5 * val + h / 8.0 * (glo - ghi);
            // interpolant slope at s = 1/4, where the cubic's derivative error peaks
            let q = lo + 0.25 * h;
            let gq = g(q);
            let slope = 1.125 * val / h + 0.1875 * glo - 0.3125 * ghi;
            let bad = err > tol * scale * 1e-2
                || (herm - half).abs() > tol * scale
                || (slope - gq).abs() > 1e-10 * gq.abs().max(1e-3 * scale / (b - a));
            if bad && h > 1e-9 * (b - a) {
                stack.push((mid, hi));
                stack.push((lo, mid));
            } else {
                pieces.push((lo, hi, val));
            }
        }
        let mut acc = 0.0;
        for (_, hi, val) in pieces {
            acc += val;
            times.push(hi);
            values.push(acc);
            rates.push(g(hi));
        }
        PhaseTable { times, values, rates }
    }

    pub fn total(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Derivative of the interpolant.
    pub fn rate(&self, t: f64) -> f64 {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.rates[0];
        }
        if t >= self.times[n - 1] {
            return self.rates[n - 1];
        }
        let k = self.times.partition_point(|&x| x <= t) - 1;
        let h = self.times[k + 1] - self.times[k];
        let s = (t - self.times[k]) / h;
        let (y0, y1, m0, m1) = (self.values[k], self.values[k + 1], self.rates[k] * h, self.rates[k + 1] * h);
        ((6.0 * s * s - 6.0 * s) * (y0 - y1) + (3.0 * s * s - 4.0 * s + 1.0) * m0 + (3.0 * s * s - 2.0 * s) * m1) / h
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.rates[0] * (t - self.times[0]);
        }
        if t >= self.times[n - 1] {
            return self.values[n - 1] + self.rates[n - 1] * (t - self.times[n - 1]);
        }
        let k = self.times.partition_point(|&x| x <= t) - 1;
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let (y0, y1, m0, m1) = (self.values[k], self.values[k + 1], self.rates[k] * h, self.rates[k + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * m1
    }
}

/// `φ̃01, φ̃12, φ̃02` as functions of time; all proportional to `∫|Ω02|²`.
#[derive(Clone, Debug)]
pub struct DynamicalPhases {
    /// shifts per unit `|Ω02|²`
    pub unit: LevelShifts,
    pub integral: PhaseFn,
}

impl DynamicalPhases {
    pub fn zero() -> Self {
        DynamicalPhases { unit: LevelShifts::default(), integral: PhaseFn::Zero }
    }

    /// Constant drive amplitude: phases grow linearly from `t = 0`.
    pub fn constant(mag02: f64, delta02: f64, anharmonicity: f64, lambda: f64) -> Result<Self> {
        Ok(DynamicalPhases {
            unit: level_shifts(1.0, delta02, anharmonicity, lambda)?,
            integral: PhaseFn::Linear(mag02 * mag02),
        })
    }

    pub fn phi01(&self, t: f64) -> f64 {
        self.unit.eps01 * self.integral.eval(t)
    }

    pub fn phi12(&self, t: f64) -> f64 {
        self.unit.eps12 * self.integral.eval(t)
    }

    pub fn phi02(&self, t: f64) -> f64 {
        self.unit.eps02 * self.integral.eval(t)
    }

    /// `[φ̃01, φ̃12, φ̃02]`.
    pub fn all(&self, t: f64) -> [f64; 3] {
        let i = self.integral.eval(t);
        [self.unit.eps01 * i, self.unit.eps12 * i, self.unit.eps02 * i]
    }
}

/// Cumulative correction phases for a two-photon envelope `|Ω02(t)|`, zero at the window start.
pub fn dynamical_phases<F: Fn(f64) -> f64>(
    mag02: F,
    delta02: f64,
    anharmonicity: f64,
    lambda: f64,
    window: (f64, f64),
) -> Result<DynamicalPhases> {
    let unit = level_shifts(1.0, delta02, anharmonicity, lambda)?;
    let g = |t: f64| {
        let m = mag02(t);
        m * m
    };
    let probe_zero = (0..=64).all(|k| g(window.0 + (window.1 - window.0) * k as f64 / 64.0) == 0.0);
    if probe_zero {
        return Ok(DynamicalPhases { unit, integral: PhaseFn::Zero });
    }
    let table = PhaseTable::build(g, window, 1e-11);
    Ok(DynamicalPhases { unit, integral: PhaseFn::Table(table) })
}
