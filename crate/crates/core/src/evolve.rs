//! Schrödinger-equation integration: adaptive Dormand–Prince 5(4) with dense output, a
//! piecewise-constant matrix-exponential oracle, and observables on trajectories.

use std::io::Write;

use nalgebra::{Matrix3, SMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Hamiltonian, StateVector};

type Block<const C: usize> = SMatrix<C64, 3, C>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: Option<f64>,
    pub dense_output: bool,
    /// Sampling stride for dense output; `None` records every accepted step.
    pub sample_stride: Option<f64>,
    pub renormalize: bool,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-10,
            max_step: None,
            dense_output: true,
            sample_stride: None,
            renormalize: false,
            max_steps: 50_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidParameter("integrator tolerances must be positive".into()));
        }
        if let Some(h) = self.max_step {
            if !(h > 0.0) {
                return Err(Error::InvalidParameter("max_step must be positive".into()));
            }
        }
        if let Some(s) = self.sample_stride {
            if !(s > 0.0) {
                return Err(Error::InvalidParameter("sample_stride must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.rel_tol = tol;
        self.abs_tol = tol;
        self
    }

    pub fn with_max_step(mut self, h: Option<f64>) -> Self {
        self.max_step = h;
        self
    }

    pub fn with_stride(mut self, s: Option<f64>) -> Self {
        self.sample_stride = s;
        self
    }
}

#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    /// Largest `|‖ψ‖ − 1|` seen at accepted steps.
    pub max_norm_error: f64,
    pub steps: usize,
    pub rejected: usize,
}

impl Trajectory {
    pub fn populations(&self) -> Vec<[f64; 3]> {
        self.states.iter().map(|s| s.populations()).collect()
    }

    pub fn final_state(&self) -> StateVector {
        *self.states.last().expect("empty trajectory")
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t[1/Delta]", "re_a0", "im_a0", "re_a1", "im_a1", "re_a2", "im_a2", "p0", "p1", "p2"])?;
        for (t, s) in self.times.iter().zip(&self.states) {
            let p = s.populations();
            let mut row = vec![fmt(*t)];
            for k in 0..3 {
                row.push(fmt(s[k].re));
                row.push(fmt(s[k].im));
            }
            row.extend(p.iter().map(|x| fmt(*x)));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Shortest round-trip formatting; keeps CSV output byte-stable.
pub fn fmt(x: f64) -> String {
    format!("{x:e}")
}

#[derive(Clone, Copy, Debug)]
pub struct IntegrationStats {
    pub steps: usize,
    pub rejected: usize,
    pub max_norm_error: f64,
}

enum Sampling<'a> {
    Nothing,
    Steps,
    Times(&'a [f64]),
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn rhs<const C: usize, F: Fn(f64) -> Hamiltonian>(h: &F, t: f64, y: &Block<C>) -> Block<C> {
    let mut out = h(t) * y;
    for z in out.iter_mut() {
        *z = C64::new(z.im, -z.re);
    }
    out
}

fn scaled_rms<const C: usize>(e: &Block<C>, y0: &Block<C>, y1: &Block<C>, rtol: f64, atol: f64) -> f64 {
    let mut s = 0.0;
    for k in 0..3 * C {
        let sc = atol + rtol * y0[k].norm().max(y1[k].norm());
        s += (e[k].norm() / sc).powi(2);
    }
    (s / (3 * C) as f64).sqrt()
}

fn column_norm_error<const C: usize>(y: &Block<C>) -> f64 {
    (0..C).map(|c| (y.column(c).norm() - 1.0).abs()).fold(0.0, f64::max)
}

fn integrate_core<const C: usize, F: Fn(f64) -> Hamiltonian>(
    h: &F,
    y0: Block<C>,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
    sampling: Sampling<'_>,
    out: &mut dyn FnMut(f64, &Block<C>),
) -> Result<(Block<C>, IntegrationStats)> {
    cfg.validate()?;
    let mut stats = IntegrationStats { steps: 0, rejected: 0, max_norm_error: column_norm_error(&y0) };
    if matches!(sampling, Sampling::Steps) {
        out(t0, &y0);
    }
    let span = t1 - t0;
    if span == 0.0 {
        if let Sampling::Times(ts) = sampling {
            for &t in ts {
                out(t, &y0);
            }
        }
        return Ok((y0, stats));
    }
    let dir = span.signum();
    let hmax = cfg.max_step.unwrap_or(f64::INFINITY).min(span.abs());
    let (rtol, atol) = (cfg.rel_tol, cfg.abs_tol);

    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(h, t, &y);

    // initial step (Hairer–Nørsett–Wanner)
    let zero = Block::<C>::zeros();
    let d0 = scaled_rms(&y, &zero, &zero, rtol, atol);
    let d1 = scaled_rms(&k1, &y, &y, rtol, atol);
    let mut step = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    step = step.min(hmax);
    let y_probe = y + k1 * C64::new(dir * step, 0.0);
    let k_probe = rhs(h, t + dir * step, &y_probe);
    let d2 = scaled_rms(&(k_probe - k1), &y, &y, rtol, atol) / step;
    let h1 = if d1.max(d2) <= 1e-15 { (step * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    step = (100.0 * step).min(h1).min(hmax);

    let mut next_sample = 0usize;
    let mut fac_max = 5.0;
    loop {
        if stats.steps + stats.rejected >= cfg.max_steps {
            return Err(Error::TooManySteps { max_steps: cfg.max_steps, t_end: t1 });
        }
        let remaining = (t1 - t).abs();
        let last = step >= remaining;
        let hs = if last { remaining } else { step };
        if hs < 1e-13 * t.abs().max(1.0) && !last {
            return Err(Error::StepUnderflow { t, step: hs });
        }
        let hh = dir * hs;
        let c = |x: f64| C64::new(hh * x, 0.0);
        let k2 = rhs(h, t + C2 * hh, &(y + k1 * c(A21)));
        let k3 = rhs(h, t + C3 * hh, &(y + k1 * c(A31) + k2 * c(A32)));
        let k4 = rhs(h, t + C4 * hh, &(y + k1 * c(A41) + k2 * c(A42) + k3 * c(A43)));
        let k5 = rhs(h, t + C5 * hh, &(y + k1 * c(A51) + k2 * c(A52) + k3 * c(A53) + k4 * c(A54)));
        let k6 = rhs(h, t + hh, &(y + k1 * c(A61) + k2 * c(A62) + k3 * c(A63) + k4 * c(A64) + k5 * c(A65)));
        let y_new = y + k1 * c(A71) + k3 * c(A73) + k4 * c(A74) + k5 * c(A75) + k6 * c(A76);
        let t_new = if last { t1 } else { t + hh };
        let k7 = rhs(h, t_new, &y_new);
        let err_vec = k1 * c(E1) + k3 * c(E3) + k4 * c(E4) + k5 * c(E5) + k6 * c(E6) + k7 * c(E7);
        let err = scaled_rms(&err_vec, &y, &y_new, rtol, atol);
        if !err.is_finite() {
            return Err(Error::NonFinite(format!("integrator error estimate at t = {t}")));
        }
        if err <= 1.0 {
            stats.steps += 1;
            if let Sampling::Times(ts) = sampling {
                let r2 = y_new - y;
                let r3 = k1 * c(1.0) - r2;
                let r4 = r2 - k7 * c(1.0) - r3;
                let r5 = k1 * c(D1) + k3 * c(D3) + k4 * c(D4) + k5 * c(D5) + k6 * c(D6) + k7 * c(D7);
                while next_sample < ts.len() {
                    let ts_k = ts[next_sample];
                    let inside = if dir > 0.0 { ts_k <= t_new } else { ts_k >= t_new };
                    if !inside {
                        break;
                    }
                    let th = ((ts_k - t) / hh).clamp(0.0, 1.0);
                    let one = C64::new(1.0 - th, 0.0);
                    let thc = C64::new(th, 0.0);
                    let v = y + (r2 + (r3 + (r4 + r5 * one) * thc) * one) * thc;
                    out(ts_k, &v);
                    next_sample += 1;
                }
            }
            y = y_new;
            t = t_new;
            if cfg.renormalize {
                for mut col in y.column_iter_mut() {
                    let n = col.norm();
                    col /= C64::new(n, 0.0);
                }
            }
            stats.max_norm_error = stats.max_norm_error.max(column_norm_error(&y));
            if matches!(sampling, Sampling::Steps) {
                out(t, &y);
            }
            k1 = if cfg.renormalize { rhs(h, t, &y) } else { k7 };
            if last {
                break;
            }
            let fac = (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, fac_max);
            step = (hs * fac).min(hmax);
            fac_max = 5.0;
        } else {
            stats.rejected += 1;
            let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            step = hs * fac;
            fac_max = 1.0;
        }
    }
    if let Sampling::Times(ts) = sampling {
        for &ts_k in &ts[next_sample..] {
            out(ts_k, &y);
        }
    }
    Ok((y, stats))
}

fn sample_grid(t0: f64, t1: f64, stride: f64) -> Vec<f64> {
    let n = ((t1 - t0).abs() / stride).ceil().max(1.0) as usize;
    (0..=n).map(|k| if k == n { t1 } else { t0 + (t1 - t0) * k as f64 / n as f64 }).collect()
}

/// Integrate `i dψ/dt = H(t) ψ` over `window` (may run backwards).
pub fn integrate<F: Fn(f64) -> Hamiltonian>(
    h: F,
    psi0: &StateVector,
    window: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let (t0, t1) = window;
    let mut traj = Trajectory::default();
    let grid;
    let sampling = match (cfg.dense_output, cfg.sample_stride) {
        (true, Some(s)) => {
            grid = sample_grid(t0, t1, s);
            Sampling::Times(&grid)
        }
        _ => Sampling::Steps,
    };
    let mut rec = |t: f64, y: &Block<1>| {
        traj.times.push(t);
        traj.states.push(StateVector(y.column(0).into_owned()));
    };
    let (_, stats) = integrate_core::<1, _>(&h, psi0.0, t0, t1, cfg, sampling, &mut rec)?;
    traj.max_norm_error = stats.max_norm_error;
    traj.steps = stats.steps;
    traj.rejected = stats.rejected;
    Ok(traj)
}

/// Final state only, no sampling.
pub fn evolve_state<F: Fn(f64) -> Hamiltonian>(
    h: F,
    psi0: &StateVector,
    window: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<(StateVector, IntegrationStats)> {
    let (y, stats) = integrate_core::<1, _>(&h, psi0.0, window.0, window.1, cfg, Sampling::Nothing, &mut |_, _| {})?;
    Ok((StateVector(y.column(0).into_owned()), stats))
}

/// Propagator `U(t1, t0)` by integrating all three basis states at once.
pub fn propagator<F: Fn(f64) -> Hamiltonian>(h: F, window: (f64, f64), cfg: &IntegratorConfig) -> Result<Matrix3<C64>> {
    let (u, _) = integrate_core::<3, _>(&h, Matrix3::identity(), window.0, window.1, cfg, Sampling::Nothing, &mut |_, _| {})?;
    Ok(u)
}

/// `exp(−i H dt)` for Hermitian `H`.
pub fn expm_hermitian(h: &Hamiltonian, dt: f64) -> Matrix3<C64> {
    let herm = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let v = eig.eigenvectors;
    let d = Matrix3::from_diagonal(&eig.eigenvalues.map(|l| C64::from_polar(1.0, -l * dt)));
    v * d * v.adjoint()
}

/// Product of midpoint matrix exponentials over `n_steps` uniform steps.
pub fn propagator_oracle<F: Fn(f64) -> Hamiltonian>(h: F, window: (f64, f64), n_steps: usize) -> Matrix3<C64> {
    let n = n_steps.max(1);
    let dt = (window.1 - window.0) / n as f64;
    let mut u = Matrix3::identity();
    for k in 0..n {
        let tm = window.0 + (k as f64 + 0.5) * dt;
        u = expm_hermitian(&h(tm), dt) * u;
    }
    u
}

/// Oracle propagation of a single state, with Richardson extrapolation from `n` and `2n` steps.
pub fn oracle_state<F: Fn(f64) -> Hamiltonian>(h: F, psi0: &StateVector, window: (f64, f64), n_steps: usize) -> StateVector {
    let run = |n: usize| {
        let dt = (window.1 - window.0) / n as f64;
        let mut v = psi0.0;
        for k in 0..n {
            let tm = window.0 + (k as f64 + 0.5) * dt;
            v = expm_hermitian(&h(tm), dt) * v;
        }
        v
    };
    let a = run(n_steps);
    let b = run(2 * n_steps);
    // midpoint product is second order
    StateVector(b + (b - a) * C64::new(1.0 / 3.0, 0.0))
}

/// Time-averaged population of `level` by the trapezoidal rule.
pub fn averaged_population(traj: &Trajectory, level: usize) -> f64 {
    let n = traj.times.len();
    assert!(n > 0, "empty trajectory");
    if n == 1 {
        return traj.states[0][level].norm_sqr();
    }
    let mut acc = 0.0;
    for k in 1..n {
        let dt = traj.times[k] - traj.times[k - 1];
        acc += 0.5 * dt * (traj.states[k][level].norm_sqr() + traj.states[k - 1][level].norm_sqr());
    }
    acc / (traj.times[n - 1] - traj.times[0])
}

pub fn final_populations(traj: &Trajectory) -> [f64; 3] {
    traj.final_state().populations()
}

/// Time-averaged populations over `[0, t_total]` for `H` periodic with `period`.
/// The one-period propagator is integrated once (sampled at `k_sub` points) and reused.
pub fn periodic_averaged_populations<F: Fn(f64) -> Hamiltonian>(
    h: F,
    psi0: &StateVector,
    t_total: f64,
    period: f64,
    k_sub: usize,
    cfg: &IntegratorConfig,
) -> Result<([f64; 3], StateVector)> {
    if !(period > 0.0 && t_total > 0.0) {
        return Err(Error::InvalidParameter("period and duration must be positive".into()));
    }
    let k_sub = k_sub.max(2);
    let n_periods = (t_total / period).floor() as usize;
    let rem = t_total - n_periods as f64 * period;
    let sampled = |len: f64| -> Result<Vec<Matrix3<C64>>> {
        let grid: Vec<f64> = (0..=k_sub).map(|j| len * j as f64 / k_sub as f64).collect();
        let mut us = Vec::with_capacity(k_sub + 1);
        integrate_core::<3, _>(&h, Matrix3::identity(), 0.0, len, cfg, Sampling::Times(&grid), &mut |_, u| us.push(*u))?;
        Ok(us)
    };
    let mut acc = [0.0; 3];
    let mut psi = psi0.0;
    let add_block = |us: &[Matrix3<C64>], len: f64, psi: &nalgebra::Vector3<C64>, acc: &mut [f64; 3]| {
        let dt = len / k_sub as f64;
        for (j, u) in us.iter().enumerate() {
            let w = if j == 0 || j == k_sub { 0.5 * dt } else { dt };
            let v = u * psi;
            for l in 0..3 {
                acc[l] += w * v[l].norm_sqr();
            }
        }
    };
    if n_periods > 0 {
        let us = sampled(period)?;
        let ut = us[k_sub];
        for _ in 0..n_periods {
            add_block(&us, period, &psi, &mut acc);
            psi = ut * psi;
        }
    }
    if rem > 1e-12 * t_total {
        let us = sampled(rem)?;
        add_block(&us, rem, &psi, &mut acc);
        psi = us[k_sub] * psi;
    }
    Ok((acc.map(|a| a / t_total), StateVector(psi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rabi(omega: f64, det: f64) -> impl Fn(f64) -> Hamiltonian {
        move |_t| {
            let mut h = Hamiltonian::zeros();
            h[(0, 1)] = C64::new(0.5 * omega, 0.0);
            h[(1, 0)] = C64::new(0.5 * omega, 0.0);
            h[(1, 1)] = C64::new(det, 0.0);
            h
        }
    }

    fn smooth_random(seed: u64) -> impl Fn(f64) -> Hamiltonian {
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let coef: Vec<f64> = (0..27).map(|_| next()).collect();
        move |t: f64| {
            let mut h = Hamiltonian::zeros();
            let mut k = 0;
            for i in 0..3 {
                for j in i..3 {
                    let a = coef[k] + coef[k + 1] * (0.3 * t).sin() + coef[k + 2] * (0.17 * t * t / 10.0).cos();
                    let b = if i == j { 0.0 } else { coef[(k + 5) % 27] * (0.2 * t).cos() };
                    h[(i, j)] = C64::new(a, b);
                    h[(j, i)] = C64::new(a, -b);
                    k += 3;
                }
            }
            h
        }
    }

    #[test]
    fn zero_hamiltonian_is_identity() {
        let psi = StateVector::new(C64::new(0.6, 0.0), C64::new(0.0, 0.8), C64::new(0.0, 0.0));
        let tr = integrate(|_| Hamiltonian::zeros(), &psi, (0.0, 10.0), &IntegratorConfig::default()).unwrap();
        for s in &tr.states {
            assert!((s.0 - psi.0).norm() < 1e-15);
        }
        let u = propagator_oracle(|_| Hamiltonian::zeros(), (0.0, 5.0), 10);
        assert!((u - Matrix3::identity()).norm() < 1e-15);
    }

    #[test]
    fn resonant_pi_pulse() {
        let om = 0.3;
        let tr = integrate(rabi(om, 0.0), &StateVector::ground(), (0.0, PI / om), &IntegratorConfig::default()).unwrap();
        assert!((final_populations(&tr)[1] - 1.0).abs() < 1e-8);
        let pbar = averaged_population(
            &integrate(rabi(om, 0.0), &StateVector::ground(), (0.0, PI / om), &IntegratorConfig::default().with_stride(Some(0.01)))
                .unwrap(),
            1,
        );
        assert!((pbar - 0.5).abs() < 1e-3);
        let far = integrate(rabi(om, 10.0 * om), &StateVector::ground(), (0.0, PI / om), &IntegratorConfig::default().with_stride(Some(0.01)))
            .unwrap();
        assert!(averaged_population(&far, 1) < 0.05);
    }

    #[test]
    fn matches_oracle_on_random_smooth_hamiltonians() {
        for seed in 1..6 {
            let h = smooth_random(seed);
            let psi = StateVector::ground();
            let w = (0.0, 12.0);
            let (rk, stats) = evolve_state(&h, &psi, w, &IntegratorConfig::default()).unwrap();
            let u = propagator_oracle(&h, w, 10_000);
            let ex = u * psi.0;
            let ov = rk.0.dotc(&ex).norm();
            assert!(ov > 1.0 - 1e-8, "seed {seed}: overlap {ov}");
            assert!(stats.max_norm_error < 1e-9);
            let unit = (u.adjoint() * u - Matrix3::identity()).norm();
            assert!(unit < 1e-10);
            let full = propagator(&h, w, &IntegratorConfig::default()).unwrap();
            assert!((full * psi.0 - rk.0).norm() < 1e-8);
        }
    }

    #[test]
    fn constant_hamiltonian_exponential() {
        let h = smooth_random(9)(0.0);
        let u = expm_hermitian(&h, 2.5);
        let eig = SymmetricEigen::new(h);
        for k in 0..3 {
            let v = eig.eigenvectors.column(k);
            let r = u * v - v * C64::from_polar(1.0, -eig.eigenvalues[k] * 2.5);
            assert!(r.norm() < 1e-13);
        }
        let o = propagator_oracle(|_| h, (0.0, 2.5), 7);
        assert!((o - u).norm() < 1e-13);
    }

    #[test]
    fn forward_backward_reversibility() {
        let h = smooth_random(3);
        let psi = StateVector::ground();
        let cfg = IntegratorConfig::default();
        let (fwd, _) = evolve_state(&h, &psi, (0.0, 15.0), &cfg).unwrap();
        let (back, _) = evolve_state(&h, &fwd, (15.0, 0.0), &cfg).unwrap();
        assert!(psi.inner(&back).norm() > 1.0 - 1e-9);
    }

    #[test]
    fn dense_output_matches_step_endpoints() {
        let h = smooth_random(4);
        let cfg = IntegratorConfig::default().with_stride(Some(0.37));
        let tr = integrate(&h, &StateVector::ground(), (0.0, 10.0), &cfg).unwrap();
        assert_eq!(tr.times[0], 0.0);
        assert_eq!(*tr.times.last().unwrap(), 10.0);
        for w in tr.times.windows(2) {
            assert!(w[1] > w[0]);
        }
        for (t, s) in tr.times.iter().zip(&tr.states).skip(1) {
            let (e, _) = evolve_state(&h, &StateVector::ground(), (0.0, *t), &cfg).unwrap();
            assert!((e.0 - s.0).norm() < 1e-8, "t {t}");
        }
    }

    #[test]
    fn periodic_fast_path_matches_direct() {
        let nu = 0.7;
        let h = move |t: f64| {
            let mut m = rabi(0.05, 0.02)(t);
            m[(1, 2)] = C64::from_polar(0.03, nu * t);
            m[(2, 1)] = m[(1, 2)].conj();
            m[(2, 2)] = C64::new(-0.01, 0.0);
            m
        };
        let period = 2.0 * PI / nu;
        let total = 23.3 * period;
        let cfg = IntegratorConfig::default();
        let (avg, fin) = periodic_averaged_populations(&h, &StateVector::ground(), total, period, 64, &cfg).unwrap();
        let tr = integrate(&h, &StateVector::ground(), (0.0, total), &cfg.with_stride(Some(period / 64.0))).unwrap();
        for l in 0..3 {
            assert!((averaged_population(&tr, l) - avg[l]).abs() < 1e-6);
        }
        assert!((tr.final_state().0 - fin.0).norm() < 1e-7);
    }

    #[test]
    fn trajectory_csv_layout() {
        let tr = integrate(|_| Hamiltonian::zeros(), &StateVector::basis(2), (0.0, 1.0), &IntegratorConfig::default()).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let first = s.lines().next().unwrap();
        assert_eq!(first.split(',').count(), 10);
        assert_eq!(final_populations(&tr), [0.0, 0.0, 1.0]);
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = IntegratorConfig { rel_tol: 0.0, ..Default::default() };
        assert!(evolve_state(|_| Hamiltonian::zeros(), &StateVector::ground(), (0.0, 1.0), &cfg).is_err());
    }
}
