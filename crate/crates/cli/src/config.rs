//! JSON job files.

use std::fmt;
use std::path::{Path, PathBuf};

use qutrit_core::evolve::IntegratorConfig;
use qutrit_core::protocols::ProtocolConfig;
use qutrit_core::robustness::{FluctuationMethod, FluctuationSpec};
use qutrit_core::sweep::linspace;
use qutrit_core::QutritParams;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
pub enum Command {
    #[serde(rename = "spectroscopy-2d")]
    #[value(name = "spectroscopy-2d")]
    Spectroscopy2d,
    #[serde(rename = "spectroscopy-amp")]
    #[value(name = "spectroscopy-amp")]
    SpectroscopyAmp,
    #[serde(rename = "transfer")]
    #[value(name = "transfer")]
    Transfer,
    #[serde(rename = "sweep-delta-amp")]
    #[value(name = "sweep-delta-amp")]
    SweepDeltaAmp,
    #[serde(rename = "gate-scan")]
    #[value(name = "gate-scan")]
    GateScan,
    #[serde(rename = "robustness")]
    #[value(name = "robustness")]
    Robustness,
}

impl Command {
    pub const ALL: [Command; 6] =
        [Command::Spectroscopy2d, Command::SpectroscopyAmp, Command::Transfer, Command::SweepDeltaAmp, Command::GateScan, Command::Robustness];

    pub fn name(self) -> &'static str {
        match self {
            Command::Spectroscopy2d => "spectroscopy-2d",
            Command::SpectroscopyAmp => "spectroscopy-amp",
            Command::Transfer => "transfer",
            Command::SweepDeltaAmp => "sweep-delta-amp",
            Command::GateScan => "gate-scan",
            Command::Robustness => "robustness",
        }
    }

    fn is_spectroscopy(self) -> bool {
        matches!(self, Command::Spectroscopy2d | Command::SpectroscopyAmp)
    }

    /// Axis names the command understands, with their default grids (rates in units of Δ).
    pub fn default_axes(self) -> Vec<AxisSpec> {
        let ax = |name: &str, start: f64, stop: f64, count: usize| AxisSpec { name: name.into(), start, stop, count };
        match self {
            Command::Spectroscopy2d => vec![ax("delta02", 0.25, 0.75, 101), ax("probe_detuning", -0.15, 0.15, 101)],
            Command::SpectroscopyAmp => {
                vec![ax("omega02", 0.0, 0.2, 101), ax("probe_detuning", -0.15, 0.15, 101), ax("delta02", 0.48, 0.53, 101)]
            }
            Command::Transfer => vec![],
            Command::SweepDeltaAmp => vec![ax("delta", 0.0, 0.2, 41), ax("omega", 1.0 / 24.0, 1.0 / 6.0, 41)],
            Command::GateScan => vec![ax("x", 0.0, 1.0, 11)],
            Command::Robustness => vec![
                ax("sigma_amp", 0.0, 0.1, 11),
                ax("sigma_phase", 0.0, 0.1, 3),
                ax("cd_amplitude_rel", 0.5, 1.5, 21),
                ax("cd_phase_offset", -0.5, 0.5, 21),
                ax("delta", 0.025, 0.1, 4),
            ],
        }
    }

    pub fn default_protocol(self) -> Option<ProtocolConfig> {
        match self {
            Command::Spectroscopy2d | Command::SpectroscopyAmp => None,
            Command::Transfer => Some(ProtocolConfig::transfer_preset()),
            // δ and Ω come from the sweep axes
            Command::SweepDeltaAmp => Some(ProtocolConfig::detuned_preset(0.0, 1.0 / 6.0)),
            Command::GateScan | Command::Robustness => Some(ProtocolConfig::gate_preset()),
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub name: String,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl AxisSpec {
    pub fn values(&self) -> Vec<f64> {
        linspace(self.start, self.stop, self.count)
    }
}

fn default_probe_amplitude() -> f64 {
    1e-3
}

fn default_omega02() -> f64 {
    0.2
}

fn default_offset() -> f64 {
    1.0 / 60.0
}

fn default_ridge_window() -> f64 {
    0.04
}

fn default_true() -> bool {
    true
}

/// Options of the two spectroscopy commands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectroscopyOptions {
    /// Defaults to λ = 1 for `spectroscopy-2d` and λ = √2 for `spectroscopy-amp`.
    #[serde(default)]
    pub qutrit: Option<QutritParams>,
    #[serde(default = "default_probe_amplitude")]
    pub probe_amplitude: f64,
    /// Two-photon drive magnitude of `spectroscopy-2d`.
    #[serde(default = "default_omega02")]
    pub omega02: f64,
    /// `δ02 − Δ/2` used by the probe panels of `spectroscopy-amp`.
    #[serde(default = "default_offset")]
    pub two_photon_offset: f64,
    /// Also locate the resonance of every column by peak search.
    #[serde(default = "default_true")]
    pub ridge: bool,
    /// Half-width of the peak search around the perturbative estimate.
    #[serde(default = "default_ridge_window")]
    pub ridge_window: f64,
    #[serde(default)]
    pub integrator: IntegratorConfig,
}

impl Default for SpectroscopyOptions {
    fn default() -> Self {
        SpectroscopyOptions {
            qutrit: None,
            probe_amplitude: default_probe_amplitude(),
            omega02: default_omega02(),
            two_photon_offset: default_offset(),
            ridge: true,
            ridge_window: default_ridge_window(),
            integrator: IntegratorConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub command: Command,
    /// Full protocol; the command preset is used when absent.
    #[serde(default)]
    pub protocol: Option<ProtocolConfig>,
    /// Overrides of the command's default axes, matched by name.
    #[serde(default)]
    pub axes: Vec<AxisSpec>,
    /// Method template for `robustness`; the deviations come from the sweep axes.
    #[serde(default)]
    pub fluctuations: Option<FluctuationSpec>,
    #[serde(default)]
    pub spectroscopy: Option<SpectroscopyOptions>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

impl JobConfig {
    pub fn default_for(command: Command) -> Self {
        JobConfig {
            command,
            protocol: command.default_protocol(),
            axes: command.default_axes(),
            fluctuations: (command == Command::Robustness).then(|| FluctuationSpec::gauss_hermite(0.0, 0.0, 15)),
            spectroscopy: command.is_spectroscopy().then(SpectroscopyOptions::default),
            output: None,
            seed: 0,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let job: JobConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        job.validate()?;
        Ok(job)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("job configs serialize")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let known = self.command.default_axes();
        for (i, a) in self.axes.iter().enumerate() {
            if !known.iter().any(|k| k.name == a.name) {
                let names: Vec<_> = known.iter().map(|k| k.name.as_str()).collect();
                return Err(CliError::Config(format!("axes[{i}].name: unknown axis `{}` for {}, expected one of {names:?}", a.name, self.command)));
            }
            if self.axes[..i].iter().any(|b| b.name == a.name) {
                return Err(CliError::Config(format!("axes[{i}].name: duplicate axis `{}`", a.name)));
            }
            if a.count < 1 {
                return Err(CliError::Config(format!("axes[{i}].count: must be at least 1")));
            }
            if !(a.start.is_finite() && a.stop.is_finite()) {
                return Err(CliError::Config(format!("axes[{i}]: bounds must be finite")));
            }
        }
        match (&self.protocol, self.command.is_spectroscopy()) {
            (Some(_), true) => return Err(CliError::Config(format!("protocol: not used by {}", self.command))),
            (Some(p), false) => p.validate().map_err(|e| CliError::Config(format!("protocol: {e}")))?,
            _ => {}
        }
        if let Some(s) = &self.spectroscopy {
            if !self.command.is_spectroscopy() {
                return Err(CliError::Config(format!("spectroscopy: not used by {}", self.command)));
            }
            if let Some(q) = &s.qutrit {
                q.validate().map_err(|e| CliError::Config(format!("spectroscopy.qutrit: {e}")))?;
            }
            s.integrator.validate().map_err(|e| CliError::Config(format!("spectroscopy.integrator: {e}")))?;
            if !(s.probe_amplitude > 0.0) || !(s.omega02 >= 0.0) || !(s.ridge_window > 0.0) || !s.two_photon_offset.is_finite() {
                return Err(CliError::Config("spectroscopy: probe_amplitude and ridge_window must be positive, omega02 non-negative".into()));
            }
        }
        if let Some(f) = &self.fluctuations {
            if self.command != Command::Robustness {
                return Err(CliError::Config(format!("fluctuations: not used by {}", self.command)));
            }
            // deviations are swept, so validate the method part with zero spread
            let probe = FluctuationSpec { sigma_amp: 0.0, sigma_phase: 0.0, ..*f };
            probe.validate().map_err(|e| CliError::Config(format!("fluctuations: {e}")))?;
            if f.sigma_amp != 0.0 || f.sigma_phase != 0.0 {
                return Err(CliError::Config("fluctuations: set deviations through the sigma_amp/sigma_phase axes".into()));
            }
        }
        Ok(())
    }

    /// Grid of a named axis: the override if present, else the command default.
    pub fn axis(&self, name: &str) -> Vec<f64> {
        self.axes
            .iter()
            .find(|a| a.name == name)
            .cloned()
            .or_else(|| self.command.default_axes().into_iter().find(|a| a.name == name))
            .map(|a| a.values())
            .unwrap_or_default()
    }

    pub fn protocol(&self) -> ProtocolConfig {
        self.protocol.clone().or_else(|| self.command.default_protocol()).expect("command takes a protocol")
    }

    pub fn spectroscopy(&self) -> SpectroscopyOptions {
        self.spectroscopy.clone().unwrap_or_default()
    }

    /// Fluctuation template with the seed resolved.
    pub fn fluctuations(&self) -> FluctuationSpec {
        let mut f = self.fluctuations.unwrap_or_else(|| FluctuationSpec::gauss_hermite(0.0, 0.0, 15));
        if f.method == FluctuationMethod::MonteCarlo {
            f.seed = self.seed;
        }
        f
    }
}

pub fn load_config(path: &Path) -> Result<JobConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    JobConfig::from_json(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn write_config(job: &JobConfig, path: &Path) -> Result<(), CliError> {
    std::fs::write(path, job.to_json() + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        for c in Command::ALL {
            let j = JobConfig::default_for(c);
            j.validate().unwrap();
            assert_eq!(JobConfig::from_json(&j.to_json()).unwrap(), j);
        }
    }

    #[test]
    fn axis_lookup() {
        let mut j = JobConfig::default_for(Command::GateScan);
        assert_eq!(j.axis("x").len(), 11);
        j.axes = vec![AxisSpec { name: "x".into(), start: 0.0, stop: 1.0, count: 3 }];
        assert_eq!(j.axis("x"), vec![0.0, 0.5, 1.0]);
        j.axes[0].count = 0;
        assert!(j.validate().is_err());
        j.axes[0] = AxisSpec { name: "bogus".into(), start: 0.0, stop: 1.0, count: 3 };
        assert!(j.validate().unwrap_err().to_string().contains("bogus"));
    }

    #[test]
    fn command_names_match_serde() {
        for c in Command::ALL {
            assert_eq!(serde_json::to_string(&c).unwrap(), format!("\"{}\"", c.name()));
        }
    }
}
