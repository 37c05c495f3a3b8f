//! Gate fidelity averaged over Gaussian amplitude and phase errors of the CD tone, and
//! fidelity landscapes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::protocols::{self, GateAction, ProtocolConfig};
use crate::quad::gauss_hermite;
use crate::sweep::{Axis, SweepResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FluctuationMethod {
    GaussHermite,
    MonteCarlo,
}

fn default_clip() -> f64 {
    4.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluctuationSpec {
    /// Standard deviation of the CD magnitude as a fraction of its optimal value.
    pub sigma_amp: f64,
    /// Standard deviation of the CD phase (rad).
    pub sigma_phase: f64,
    pub method: FluctuationMethod,
    /// Gauss–Hermite nodes per dimension, or Monte Carlo samples.
    pub nodes_or_samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_clip")]
    pub clip_sigmas: f64,
}

impl FluctuationSpec {
    pub fn gauss_hermite(sigma_amp: f64, sigma_phase: f64, nodes: usize) -> Self {
        FluctuationSpec { sigma_amp, sigma_phase, method: FluctuationMethod::GaussHermite, nodes_or_samples: nodes, seed: 0, clip_sigmas: 4.0 }
    }

    pub fn monte_carlo(sigma_amp: f64, sigma_phase: f64, samples: usize, seed: u64) -> Self {
        FluctuationSpec { sigma_amp, sigma_phase, method: FluctuationMethod::MonteCarlo, nodes_or_samples: samples, seed, clip_sigmas: 4.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_amp >= 0.0 && self.sigma_phase >= 0.0) {
            return Err(Error::InvalidParameter("fluctuation deviations must be non-negative".into()));
        }
        match self.method {
            FluctuationMethod::GaussHermite if self.nodes_or_samples < 5 => {
                Err(Error::InvalidParameter("Gauss-Hermite needs at least 5 nodes".into()))
            }
            FluctuationMethod::MonteCarlo if self.nodes_or_samples < 100 => {
                Err(Error::InvalidParameter("Monte Carlo needs at least 100 samples".into()))
            }
            _ if !(self.clip_sigmas > 0.0) => Err(Error::InvalidParameter("clip_sigmas must be positive".into())),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AveragedFidelity {
    pub value: f64,
    pub stderr: Option<f64>,
    pub x_grid: Vec<f64>,
    /// Samples or nodes moved by the ±clip truncation or the amplitude floor.
    pub clipped: usize,
    pub evaluations: usize,
}

/// Default initial-state grid `x ∈ {0, 0.1, …, 1}`.
pub fn default_x_grid() -> Vec<f64> {
    (0..=10).map(|k| k as f64 / 10.0).collect()
}

fn mean_fidelity(action: &GateAction, x_grid: &[f64]) -> f64 {
    x_grid.iter().map(|&x| action.fidelity(x)).sum::<f64>() / x_grid.len() as f64
}

struct Sample {
    amp: f64,
    phase: f64,
    weight: f64,
    clipped: bool,
}

fn to_sample(spec: &FluctuationSpec, za: f64, zp: f64, weight: f64) -> Sample {
    let c = spec.clip_sigmas;
    let (ca, cp) = (za.clamp(-c, c), zp.clamp(-c, c));
    let raw = 1.0 + spec.sigma_amp * ca;
    let amp = raw.max(0.0);
    Sample { amp, phase: spec.sigma_phase * cp, weight, clipped: (ca != za && spec.sigma_amp > 0.0) || (cp != zp && spec.sigma_phase > 0.0) || raw < 0.0 }
}

/// Fidelity against the ideal NOT gate, averaged uniformly over `x_grid` and over Gaussian
/// errors. `gate(amplitude_scale, phase_offset)` returns the gate's action on `|0⟩`, `|2⟩`.
pub fn averaged_fidelity<G>(gate: G, spec: &FluctuationSpec, x_grid: &[f64]) -> Result<AveragedFidelity>
where
    G: Fn(f64, f64) -> Result<GateAction> + Sync,
{
    spec.validate()?;
    if x_grid.is_empty() {
        return Err(Error::InvalidParameter("x grid must be non-empty".into()));
    }
    let samples: Vec<Sample> = match spec.method {
        FluctuationMethod::GaussHermite => {
            let rule = |s: f64| if s > 0.0 { gauss_hermite(spec.nodes_or_samples) } else { (vec![0.0], vec![1.0]) };
            let (za, wa) = rule(spec.sigma_amp);
            let (zp, wp) = rule(spec.sigma_phase);
            let mut v = Vec::with_capacity(za.len() * zp.len());
            for i in 0..za.len() {
                for j in 0..zp.len() {
                    v.push(to_sample(spec, za[i], zp[j], wa[i] * wp[j]));
                }
            }
            v
        }
        FluctuationMethod::MonteCarlo => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let n = spec.nodes_or_samples;
            (0..n)
                .map(|_| {
                    let za: f64 = StandardNormal.sample(&mut rng);
                    let zp: f64 = StandardNormal.sample(&mut rng);
                    to_sample(spec, za, zp, 1.0 / n as f64)
                })
                .collect()
        }
    };
    let values: Vec<Result<f64>> = samples
        .par_iter()
        .map(|s| {
            let f = mean_fidelity(&gate(s.amp, s.phase)?, x_grid);
            if f.is_finite() {
                Ok(f)
            } else {
                Err(Error::NonFinite(format!("fidelity sample at amplitude scale {}, phase {}", s.amp, s.phase)))
            }
        })
        .collect();
    let values: Vec<f64> = values.into_iter().collect::<Result<_>>()?;
    let value: f64 = samples.iter().zip(&values).map(|(s, f)| s.weight * f).sum();
    let stderr = match spec.method {
        FluctuationMethod::MonteCarlo => {
            let n = values.len() as f64;
            let var = values.iter().map(|f| (f - value).powi(2)).sum::<f64>() / (n - 1.0);
            Some((var / n).sqrt())
        }
        FluctuationMethod::GaussHermite => None,
    };
    Ok(AveragedFidelity {
        value: value.clamp(0.0, 1.0),
        stderr,
        x_grid: x_grid.to_vec(),
        clipped: samples.iter().filter(|s| s.clipped).count(),
        evaluations: samples.len(),
    })
}

/// NOT-gate fidelity at initial state `x` over relative CD amplitudes, phase offsets and
/// single-photon detunings.
pub fn fidelity_landscape(base: &ProtocolConfig, amp_grid: &[f64], phase_grid: &[f64], delta_list: &[f64], x: f64) -> Result<SweepResult> {
    if amp_grid.is_empty() || phase_grid.is_empty() || delta_list.is_empty() {
        return Err(Error::InvalidParameter("landscape grids must be non-empty".into()));
    }
    let drives: Vec<_> = delta_list
        .iter()
        .map(|&d| {
            let mut c = base.clone();
            c.delta = d;
            protocols::gate_drive(&c)
        })
        .collect::<Result<_>>()?;
    let cells: Vec<(usize, f64, f64)> = (0..delta_list.len())
        .flat_map(|i| amp_grid.iter().flat_map(move |&a| phase_grid.iter().map(move |&p| (i, a, p))))
        .collect();
    let values: Vec<f64> = cells
        .par_iter()
        .map(|&(i, a, p)| {
            let d = &drives[i];
            let scale = d.config().cd_amplitude_scale * a;
            let off = d.config().cd_phase_offset + p;
            Ok(d.with_errors(scale, off).gate_action()?.fidelity(x))
        })
        .collect::<Vec<Result<f64>>>()
        .into_iter()
        .collect::<Result<_>>()?;
    let mut r = SweepResult::new(
        vec![
            Axis::new("delta[Delta]", delta_list.to_vec()),
            Axis::new("cd_amplitude_rel", amp_grid.to_vec()),
            Axis::new("cd_phase_offset[rad]", phase_grid.to_vec()),
        ],
        vec![("fidelity".into(), values)],
    )?;
    let per = amp_grid.len() * phase_grid.len();
    let optima: Vec<_> = (0..delta_list.len())
        .map(|i| {
            let block = &r.observables[0].1[i * per..(i + 1) * per];
            let (k, f) = block.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (k, &f)| if f > acc.1 { (k, f) } else { acc });
            json!({"delta": delta_list[i], "cd_amplitude_rel": amp_grid[k / phase_grid.len()], "cd_phase_offset": phase_grid[k % phase_grid.len()], "fidelity": f})
        })
        .collect();
    r.metadata.insert("x".into(), json!(x));
    r.metadata.insert("optima".into(), json!(optima));
    Ok(r)
}
