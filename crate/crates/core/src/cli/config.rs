//! TOML run configuration. Frequencies are in MHz and times in µs.

use serde::{Deserialize, Serialize};

use crate::drive::{DriveScheme, ModulationClock};
use crate::evolve::{default_dt, DephasingRun, SimulationConfig};
use crate::noise::{AmplitudeNoiseSpec, BathSpec, BathUnits, HyperfineEnsemble};
use crate::spin::Axis;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    Single,
    Phase,
    Amplitude,
    Double,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeSection {
    pub kind: SchemeKind,
    pub rabi_mhz: f64,
    pub alpha: f64,
    /// Second-drive amplitude for `double`; defaults to α·Ω1/2.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub second_mhz: Option<f64>,
    /// Hold the modulation over AWG samples of this period.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub awg_sample_period_ns: Option<f64>,
    pub phase_jitter_rad: f64,
}

impl Default for SchemeSection {
    fn default() -> Self {
        SchemeSection {
            kind: SchemeKind::Single,
            rabi_mhz: 9.0,
            alpha: 0.1,
            second_mhz: None,
            awg_sample_period_ns: None,
            phase_jitter_rad: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BathSection {
    pub tau_us: f64,
    pub diffusion_mhz3: f64,
    pub units: BathUnits,
}

impl Default for BathSection {
    fn default() -> Self {
        BathSection {
            tau_us: 10.0,
            diffusion_mhz3: 6.6667e-5,
            units: BathUnits::Angular,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AmpNoiseSection {
    pub relative_error: f64,
    pub tau_us: f64,
}

impl Default for AmpNoiseSection {
    fn default() -> Self {
        AmpNoiseSection {
            relative_error: 0.0075,
            tau_us: 500.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperfineSection {
    pub centers_mhz: Vec<f64>,
    pub weights: Vec<f64>,
    pub peak_width_mhz: f64,
}

impl Default for HyperfineSection {
    fn default() -> Self {
        let d = HyperfineEnsemble::default();
        HyperfineSection {
            centers_mhz: d.centers,
            weights: d.weights,
            peak_width_mhz: d.peak_width,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub init_axis: Axis,
    /// Defaults to 1/(40·Ω1).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt_us: Option<f64>,
    pub duration_us: f64,
    pub n_realizations: usize,
    pub seed: u64,
    pub record_every: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            init_axis: Axis::Y,
            dt_us: None,
            duration_us: 5.0,
            n_realizations: 400,
            seed: 1,
            record_every: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    pub alphas: Vec<f64>,
}

impl Default for ScanSection {
    fn default() -> Self {
        ScanSection {
            alphas: vec![0.05, 0.1, 0.2, 0.3, 0.5, 0.8],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSection {
    pub fid_duration_us: f64,
    pub fid_dt_us: f64,
    pub echo_duration_us: f64,
    pub echo_dt_us: f64,
}

impl Default for CalibrationSection {
    fn default() -> Self {
        CalibrationSection {
            fid_duration_us: 2.0,
            fid_dt_us: 0.002,
            echo_duration_us: 1500.0,
            echo_dt_us: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveformSection {
    pub duration_us: f64,
    pub sample_period_ns: f64,
}

impl Default for WaveformSection {
    fn default() -> Self {
        WaveformSection {
            duration_us: 1.0,
            sample_period_ns: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    /// Carrier-to-Rabi ratios ω0/Ω1 for the lab-frame check.
    pub ratios: Vec<f64>,
    /// Lab-frame window; defaults to one Rabi period.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_us: Option<f64>,
    /// Lab-frame steps per carrier period.
    pub lab_steps_per_period: f64,
    pub alphas: Vec<f64>,
    /// Constant δΩ1 as a fraction of Ω1.
    pub delta_omega1_relative: f64,
    /// Second-frame horizon in Rabi periods.
    pub horizon_periods: f64,
    pub steps_per_period: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection {
            ratios: vec![50.0, 100.0, 200.0, 400.0],
            window_us: None,
            lab_steps_per_period: 200.0,
            alphas: vec![0.05, 0.1, 0.2],
            delta_omega1_relative: 0.0075,
            horizon_periods: 10.0,
            steps_per_period: 400.0,
        }
    }
}

/// The whole file. Missing sections and keys take the published values.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub scheme: SchemeSection,
    pub bath: BathSection,
    pub amp_noise: AmpNoiseSection,
    pub hyperfine: HyperfineSection,
    pub run: RunSection,
    pub scan: ScanSection,
    pub calibration: CalibrationSection,
    pub waveform: WaveformSection,
    pub verify: VerifySection,
}

impl FileConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            Error::config(offending_key(&msg, text, e.span()), msg)
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn scheme(&self) -> Result<DriveScheme> {
        let s = &self.scheme;
        let rabi_mhz = s.rabi_mhz;
        let scheme = match s.kind {
            SchemeKind::Single => DriveScheme::SingleDrive { rabi_mhz },
            SchemeKind::Phase => DriveScheme::PhaseMod { rabi_mhz, alpha: s.alpha },
            SchemeKind::Amplitude => DriveScheme::AmpMod { rabi_mhz, alpha: s.alpha },
            SchemeKind::Double => DriveScheme::DoubleDrive {
                rabi_mhz,
                second_mhz: s.second_mhz.unwrap_or(0.5 * s.alpha * rabi_mhz),
            },
        };
        scheme.validate()?;
        Ok(scheme)
    }

    pub fn simulation(&self) -> Result<SimulationConfig> {
        let scheme = self.scheme()?;
        let cfg = SimulationConfig {
            scheme,
            clock: match self.scheme.awg_sample_period_ns {
                Some(sample_period_ns) => ModulationClock::Held { sample_period_ns },
                None => ModulationClock::Continuous,
            },
            phase_jitter_rad: self.scheme.phase_jitter_rad,
            bath: BathSpec {
                tau_us: self.bath.tau_us,
                diffusion_mhz3: self.bath.diffusion_mhz3,
                units: self.bath.units,
            },
            amp_noise: AmplitudeNoiseSpec {
                relative_error: self.amp_noise.relative_error,
                tau_us: self.amp_noise.tau_us,
            },
            hyperfine: HyperfineEnsemble {
                centers: self.hyperfine.centers_mhz.clone(),
                weights: self.hyperfine.weights.clone(),
                peak_width: self.hyperfine.peak_width_mhz,
            },
            init_axis: self.run.init_axis,
            dt_us: self.run.dt_us.unwrap_or_else(|| default_dt(scheme.rabi_mhz())),
            duration_us: self.run.duration_us,
            n_realizations: self.run.n_realizations,
            master_seed: self.run.seed,
            record_every: self.run.record_every,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn fid_run(&self) -> DephasingRun {
        DephasingRun {
            duration_us: self.calibration.fid_duration_us,
            dt_us: self.calibration.fid_dt_us,
        }
    }

    pub fn echo_run(&self) -> DephasingRun {
        DephasingRun {
            duration_us: self.calibration.echo_duration_us,
            dt_us: self.calibration.echo_dt_us,
        }
    }
}

/// Best guess at the dotted key a TOML error refers to.
fn offending_key(msg: &str, text: &str, span: Option<std::ops::Range<usize>>) -> String {
    if let Some(name) = msg.strip_prefix("unknown field `").and_then(|r| r.split('`').next()) {
        let section = span.map(|s| section_at(text, s.start)).unwrap_or_default();
        return if section.is_empty() {
            name.to_string()
        } else {
            format!("{section}.{name}")
        };
    }
    let Some(span) = span else {
        return String::from("<file>");
    };
    let section = section_at(text, span.start);
    let line_start = text[..span.start.min(text.len())].rfind('\n').map_or(0, |i| i + 1);
    let line = &text[line_start..];
    let key = line.split('=').next().unwrap_or("").trim();
    let key = if key.starts_with('[') || key.is_empty() { "" } else { key };
    match (section.is_empty(), key.is_empty()) {
        (true, _) => key.to_string(),
        (false, true) => section,
        (false, false) => format!("{section}.{key}"),
    }
}

fn section_at(text: &str, pos: usize) -> String {
    text[..pos.min(text.len())]
        .lines()
        .rev()
        .find_map(|l| {
            let l = l.trim();
            l.strip_prefix('[').and_then(|r| r.strip_suffix(']')).map(|s| s.trim().to_string())
        })
        .unwrap_or_default()
}
