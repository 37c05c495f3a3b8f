//! One function per experiment.

use std::f64::consts::PI;

use qutrit_core::protocols::{self, CdMode, Corrections, ProtocolConfig};
use qutrit_core::robustness::{self, FluctuationSpec};
use qutrit_core::spectroscopy::{self, Probe, SpectroscopySetup};
use qutrit_core::sweep::{Axis, SweepResult};
use qutrit_core::{stark, QutritParams, StateVector, C64};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{Command, JobConfig};
use crate::output::{CommandOutput, Table};
use crate::CliError;

type Res<T> = Result<T, CliError>;

/// Order-preserving parallel map; the first error in index order wins.
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> qutrit_core::Result<R> + Sync + Send) -> Res<Vec<R>> {
    let out: Vec<qutrit_core::Result<R>> = items.par_iter().map(f).collect();
    Ok(out.into_iter().collect::<qutrit_core::Result<Vec<R>>>()?)
}

fn grid2(a: &[f64], b: &[f64]) -> Vec<(f64, f64)> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| (x, y))).collect()
}

pub fn run(job: &JobConfig) -> Res<CommandOutput> {
    job.validate()?;
    match job.command {
        Command::Spectroscopy2d => cmd_spectroscopy_2d(job),
        Command::SpectroscopyAmp => cmd_spectroscopy_amp(job),
        Command::Transfer => cmd_transfer(job),
        Command::SweepDeltaAmp => cmd_sweep_delta_amp(job),
        Command::GateScan => cmd_gate_scan(job),
        Command::Robustness => cmd_robustness(job),
    }
}

fn setup(job: &JobConfig, lambda: f64) -> SpectroscopySetup {
    let o = job.spectroscopy();
    SpectroscopySetup { qutrit: o.qutrit.unwrap_or(QutritParams::transmon(lambda)), probe_amplitude: o.probe_amplitude, integrator: o.integrator }
}

/// Probe resonance position near `center`, searched at half the probe linewidth.
fn ridge(s: &SpectroscopySetup, probe: Probe, delta02: f64, omega02: f64, corrected: bool, center: f64, half_width: f64) -> qutrit_core::Result<f64> {
    let f = |o: f64| spectroscopy::probe_average(s, probe, delta02, omega02, o, corrected);
    Ok(spectroscopy::locate_peak(f, center - half_width, center + half_width, 0.5 * s.probe_amplitude)?.0)
}

const PANELS: [(Probe, bool, &str); 4] = [
    (Probe::ZeroOne, false, "p1_01"),
    (Probe::OneTwo, false, "p1_12"),
    (Probe::ZeroOne, true, "p1_01_corrected"),
    (Probe::OneTwo, true, "p1_12_corrected"),
];

/// `p̄1` over (δ02, probe detuning) at fixed `|Ω02|`, bare and with correction phases.
pub fn cmd_spectroscopy_2d(job: &JobConfig) -> Res<CommandOutput> {
    let opt = job.spectroscopy();
    let s = setup(job, 1.0);
    let (anh, lam, om) = (s.qutrit.anharmonicity(), s.qutrit.lambda, opt.omega02);
    let d02s = job.axis("delta02");
    let offs = job.axis("probe_detuning");
    let cells = grid2(&d02s, &offs);
    let mut obs = Vec::new();
    for (probe, corrected, name) in PANELS {
        obs.push((name.to_string(), par_map(&cells, |&(d, o)| spectroscopy::probe_average(&s, probe, d, om, o, corrected))?));
    }
    let shifts = par_map(&cells, |&(d, _)| stark::level_shifts(om, d, anh, lam))?;
    obs.push(("eps01[Delta]".into(), shifts.iter().map(|x| x.eps01).collect()));
    obs.push(("eps12[Delta]".into(), shifts.iter().map(|x| x.eps12).collect()));
    let mut grid = SweepResult::new(vec![Axis::new("delta02[Delta]", d02s.clone()), Axis::new("probe_detuning[Delta]", offs)], obs)?;
    grid.metadata.insert("omega02".into(), json!(om));
    grid.metadata.insert("lambda".into(), json!(lam));
    grid.metadata.insert("probe_amplitude".into(), json!(s.probe_amplitude));
    grid.metadata.insert("duration".into(), json!(s.duration()));
    let mut out = CommandOutput::new(job.command);
    out.push("spectroscopy_2d", Table::Sweep(grid));
    if opt.ridge {
        let rows = par_map(&d02s, |&d| {
            let e = stark::level_shifts(om, d, anh, lam)?;
            let w = opt.ridge_window;
            Ok([
                e.eps01,
                ridge(&s, Probe::ZeroOne, d, om, false, e.eps01, w)?,
                e.eps12,
                ridge(&s, Probe::OneTwo, d, om, false, e.eps12, w)?,
                ridge(&s, Probe::ZeroOne, d, om, true, 0.0, w)?,
                ridge(&s, Probe::OneTwo, d, om, true, 0.0, w)?,
            ])
        })?;
        let names = ["eps01[Delta]", "peak_01[Delta]", "eps12[Delta]", "peak_12[Delta]", "peak_01_corrected[Delta]", "peak_12_corrected[Delta]"];
        let obs = names.iter().enumerate().map(|(k, n)| (n.to_string(), rows.iter().map(|r| r[k]).collect())).collect();
        let mut r = SweepResult::new(vec![Axis::new("delta02[Delta]", d02s)], obs)?;
        r.metadata.insert("linewidth".into(), json!(s.probe_amplitude));
        out.push("spectroscopy_2d_ridge", Table::Sweep(r));
    }
    Ok(out)
}

/// `p̄1` over (|Ω02|, probe detuning) for both probes and `p̄2` over (|Ω02|, δ02) for the
/// two-photon resonance itself.
pub fn cmd_spectroscopy_amp(job: &JobConfig) -> Res<CommandOutput> {
    let opt = job.spectroscopy();
    let s = setup(job, 2f64.sqrt());
    let (anh, lam) = (s.qutrit.anharmonicity(), s.qutrit.lambda);
    let d02 = 0.5 * anh + opt.two_photon_offset;
    let oms = job.axis("omega02");
    let offs = job.axis("probe_detuning");
    let d02s = job.axis("delta02");
    let mut out = CommandOutput::new(job.command);
    for (probe, name) in [(Probe::ZeroOne, "01"), (Probe::OneTwo, "12")] {
        let cells = grid2(&oms, &offs);
        let p = par_map(&cells, |&(om, o)| spectroscopy::probe_average(&s, probe, d02, om, o, false))?;
        let eps = par_map(&cells, |&(om, _)| {
            let e = stark::level_shifts(om, d02, anh, lam)?;
            Ok(if probe == Probe::ZeroOne { e.eps01 } else { e.eps12 })
        })?;
        let mut r = SweepResult::new(
            vec![Axis::new("omega02[Delta]", oms.clone()), Axis::new("probe_detuning[Delta]", offs.clone())],
            vec![("p1".into(), p), (format!("eps{name}[Delta]"), eps)],
        )?;
        r.metadata.insert("delta02".into(), json!(d02));
        r.metadata.insert("lambda".into(), json!(lam));
        out.push(format!("spectroscopy_amp_{name}"), Table::Sweep(r));
    }
    // 0–2 panel: duration π/|Ω_eff| so that the resonant average is one half
    let cells = grid2(&oms, &d02s);
    let p2 = par_map(&cells, |&(om, d)| {
        let eff = stark::effective_coupling(C64::new(om, 0.0), d, lam)?.norm();
        if eff == 0.0 {
            return Ok(0.0);
        }
        spectroscopy::two_photon_average(&s.qutrit, d, om, PI / eff)
    })?;
    let res = par_map(&cells, |&(om, _)| Ok(0.5 * (anh - stark::level_shifts(om, 0.5 * anh, anh, lam)?.eps02)))?;
    let mut r = SweepResult::new(
        vec![Axis::new("omega02[Delta]", oms.clone()), Axis::new("delta02[Delta]", d02s)],
        vec![("p2".into(), p2), ("resonance_theory[Delta]".into(), res)],
    )?;
    r.metadata.insert("lambda".into(), json!(lam));
    r.metadata.insert("zero_drive".into(), json!("p2 reported as 0 where the effective coupling vanishes"));
    out.push("spectroscopy_amp_02", Table::Sweep(r));
    if opt.ridge {
        let rows = par_map(&oms, |&om| {
            let e = stark::level_shifts(om, d02, anh, lam)?;
            let w = opt.ridge_window;
            Ok([e.eps01, ridge(&s, Probe::ZeroOne, d02, om, false, e.eps01, w)?, e.eps12, ridge(&s, Probe::OneTwo, d02, om, false, e.eps12, w)?])
        })?;
        let names = ["eps01[Delta]", "peak_01[Delta]", "eps12[Delta]", "peak_12[Delta]"];
        let obs = names.iter().enumerate().map(|(k, n)| (n.to_string(), rows.iter().map(|r| r[k]).collect())).collect();
        let mut r = SweepResult::new(vec![Axis::new("omega02[Delta]", oms)], obs)?;
        r.metadata.insert("delta02".into(), json!(d02));
        out.push("spectroscopy_amp_ridge", Table::Sweep(r));
    }
    Ok(out)
}

/// saSTIRAP transfer with dynamical corrections against the best constant phase, using the
/// resonant (`Θ̇`-only) counterdiabatic tone.
pub fn cmd_transfer(job: &JobConfig) -> Res<CommandOutput> {
    let mut cfg = job.protocol();
    if cfg.cd_mode == CdMode::Off {
        return Err(CliError::Config("protocol.cd_mode: transfer needs a counterdiabatic drive".into()));
    }
    if cfg.corrections == Corrections::ConstantPhase {
        cfg.corrections = Corrections::Dynamical;
    }
    let psi0 = StateVector::ground();
    let drive = protocols::sastirap_drive(&cfg)?;
    let dynamical = drive.trajectory(&psi0)?;
    let (offset, _) = protocols::optimize_constant_phase(&cfg)?;
    let constant_cfg = ProtocolConfig { corrections: Corrections::None, cd_phase_offset: offset, ..cfg.clone() };
    let constant = protocols::run_sastirap(&constant_cfg, &psi0)?;

    let times = dynamical.times.clone();
    let mut cols: Vec<(String, Vec<f64>)> =
        ["phi01[rad]", "phi12[rad]", "phi02[rad]", "omega01[Delta]", "omega12[Delta]", "omega02_magnitude[Delta]", "omega02_phase[rad]"]
            .iter()
            .map(|n| (n.to_string(), Vec::with_capacity(times.len())))
            .collect();
    let s = drive.schedule();
    for &t in &times {
        let p = drive.phases().all(t);
        let tone = drive.two_photon_tone(t);
        let row = [p[0], p[1], p[2], s.env01.value(t), s.env12.value(t), tone.norm(), if tone.norm() > 0.0 { tone.arg() } else { 0.0 }];
        for (c, v) in cols.iter_mut().zip(row) {
            c.1.push(v);
        }
    }
    let phases = SweepResult::new(vec![Axis::new("t[1/Delta]", times)], cols)?;

    let area = protocols::stirap_area(&cfg)?;
    let mut out = CommandOutput::new(job.command);
    let pd = dynamical.final_state().populations();
    let pc = constant.final_state().populations();
    out.note("final_populations_dynamical", json!(pd));
    out.note("final_populations_constant_phase", json!(pc));
    out.note("constant_phase_offset_rad", offset);
    out.note("pulse_area_rad", area);
    out.note("pulse_area_over_pi", area / PI);
    out.note("peak_omega02", protocols::peak_cd_amplitude(&cfg)?);
    out.note("backend", serde_json::to_value(cfg.backend).expect("enum serializes"));
    out.push("transfer_dynamical", Table::Trajectory(dynamical));
    out.push("transfer_constant_phase", Table::Trajectory(constant));
    out.push("transfer_phases", Table::Sweep(phases));
    Ok(out)
}

/// Final populations of STIRAP and saSTIRAP over (δ, Ω), forward from `|0⟩` and reverse
/// from `|2⟩`.
pub fn cmd_sweep_delta_amp(job: &JobConfig) -> Res<CommandOutput> {
    let base = job.protocol();
    let deltas = job.axis("delta");
    let omegas = job.axis("omega");
    let cells = grid2(&deltas, &omegas);
    let at = |d: f64, o: f64| ProtocolConfig { delta: d, omega01_peak: o, omega12_peak: o, ..base.clone() };
    let bare = |d: f64, o: f64| ProtocolConfig { cd_mode: CdMode::Off, corrections: Corrections::None, ..at(d, o) };
    let rows = par_map(&cells, |&(d, o)| {
        let st = protocols::stirap_drive(&bare(d, o))?.final_state(&StateVector::ground())?.populations();
        let sa = protocols::run_sastirap(&at(d, o), &StateVector::ground())?.final_state().populations();
        let rev = protocols::run_sastirap(&at(d, o), &StateVector::basis(2))?.final_state().populations();
        Ok([st[2], sa[2], rev[0]])
    })?;
    let names = ["p2_stirap", "p2_sastirap", "p0_sastirap_reverse"];
    let obs = names.iter().enumerate().map(|(k, n)| (n.to_string(), rows.iter().map(|r| r[k]).collect())).collect();
    let mut r = SweepResult::new(vec![Axis::new("delta[Delta]", deltas), Axis::new("omega[Delta]", omegas)], obs)?;
    r.metadata.insert("sigma".into(), json!(base.sigma));
    r.metadata.insert("t_s".into(), json!(base.t_s));
    r.metadata.insert("lambda".into(), json!(base.qutrit.lambda));
    let mut out = CommandOutput::new(job.command);
    let min = |k: usize| rows.iter().map(|r| r[k]).fold(f64::INFINITY, f64::min);
    out.note("min_p2_stirap", min(0));
    out.note("min_p2_sastirap", min(1));
    out.note("min_p0_sastirap_reverse", min(2));
    out.push("sweep_delta_amp", Table::Sweep(r));
    Ok(out)
}

/// NOT-gate output `p2(x)` and fidelity `F(x)` for f-saSTIRAP and f-STIRAP.
pub fn cmd_gate_scan(job: &JobConfig) -> Res<CommandOutput> {
    let cfg = job.protocol();
    if cfg.frac.is_none() {
        return Err(CliError::Config("protocol.frac: gate-scan needs fractional parameters".into()));
    }
    let bare = ProtocolConfig { cd_mode: CdMode::Off, corrections: Corrections::None, ..cfg.clone() };
    let both = par_map(&[cfg.clone(), bare], protocols::not_gate_action)?;
    let xs = job.axis("x");
    let mut obs = Vec::new();
    let mut out = CommandOutput::new(job.command);
    for (action, tag) in both.iter().zip(["frac_sastirap", "frac_stirap"]) {
        let p2: Vec<f64> = xs.iter().map(|&x| action.apply(&protocols::gate_state(x)).populations()[2]).collect();
        let f: Vec<f64> = xs.iter().map(|&x| action.fidelity(x)).collect();
        let dev = xs.iter().zip(&p2).map(|(x, p)| (p - x).abs()).fold(0.0, f64::max);
        out.note(&format!("mean_fidelity_{tag}"), f.iter().sum::<f64>() / f.len() as f64);
        out.note(&format!("min_fidelity_{tag}"), f.iter().copied().fold(f64::INFINITY, f64::min));
        out.note(&format!("max_p2_deviation_{tag}"), dev);
        obs.push((format!("p2_{tag}"), p2));
        obs.push((format!("fidelity_{tag}"), f));
    }
    let area = protocols::stirap_area(&cfg)?;
    out.note("stirap_area_rad", area);
    out.note("stirap_area_over_pi", area / PI);
    out.push("gate_scan", Table::Sweep(SweepResult::new(vec![Axis::new("x", xs)], obs)?));
    Ok(out)
}

/// Averaged fidelity of the f-saSTIRAP gate and the two-photon π-pulse over CD amplitude and
/// phase noise, plus the single-shot fidelity landscape at `x = 1`.
pub fn cmd_robustness(job: &JobConfig) -> Res<CommandOutput> {
    let cfg = job.protocol();
    if cfg.frac.is_none() || cfg.cd_mode == CdMode::Off {
        return Err(CliError::Config("protocol: robustness needs fractional parameters and a counterdiabatic drive".into()));
    }
    let template = job.fluctuations();
    let omega_opt = protocols::peak_cd_amplitude(&cfg)?;
    let sa = protocols::gate_drive(&cfg)?;
    let pi = protocols::pi_pulse_drive(&cfg)?;
    let xs = robustness::default_x_grid();
    let sig_a = job.axis("sigma_amp");
    let sig_p = job.axis("sigma_phase");
    let mut cols: [Vec<f64>; 5] = Default::default();
    let mc = template.method == robustness::FluctuationMethod::MonteCarlo;
    let mut clipped = 0;
    for &(a, p) in &grid2(&sig_a, &sig_p) {
        let spec = FluctuationSpec { sigma_amp: a, sigma_phase: p, ..template };
        let run = |d: &protocols::ProtocolDrive| {
            let (s0, p0) = (d.config().cd_amplitude_scale, d.config().cd_phase_offset);
            robustness::averaged_fidelity(|da, dp| d.with_errors(s0 * da, p0 + dp).gate_action(), &spec, &xs)
        };
        let fs = run(&sa)?;
        let fp = run(&pi)?;
        clipped += fs.clipped + fp.clipped;
        cols[0].push(fs.value);
        cols[1].push(fp.value);
        cols[2].push(fs.value - fp.value);
        cols[3].push(fs.stderr.unwrap_or(0.0));
        cols[4].push(fp.stderr.unwrap_or(0.0));
    }
    let [fa_sa, fa_pi, dfa, se_sa, se_pi] = cols;
    let mut obs = vec![("fa_sastirap".into(), fa_sa), ("fa_pi_pulse".into(), fa_pi), ("delta_fa".into(), dfa)];
    if mc {
        obs.push(("stderr_sastirap".into(), se_sa));
        obs.push(("stderr_pi_pulse".into(), se_pi));
    }
    let mut surface = SweepResult::new(vec![Axis::new("sigma_amp[omega_opt]", sig_a), Axis::new("sigma_phase[rad]", sig_p)], obs)?;
    surface.metadata.insert("method".into(), serde_json::to_value(template.method).expect("enum serializes"));
    surface.metadata.insert("nodes_or_samples".into(), json!(template.nodes_or_samples));
    surface.metadata.insert("seed".into(), json!(template.seed));
    surface.metadata.insert("clip_sigmas".into(), json!(template.clip_sigmas));
    surface.metadata.insert("clipped_points".into(), json!(clipped));
    surface.metadata.insert("x_grid".into(), json!(xs));
    surface.metadata.insert("omega_opt".into(), json!(omega_opt));

    let landscape = robustness::fidelity_landscape(&cfg, &job.axis("cd_amplitude_rel"), &job.axis("cd_phase_offset"), &job.axis("delta"), 1.0)?;
    let mut out = CommandOutput::new(job.command);
    out.note("omega_opt", omega_opt);
    out.push("robustness_surface", Table::Sweep(surface));
    out.push("robustness_landscape", Table::Sweep(landscape));
    Ok(out)
}
