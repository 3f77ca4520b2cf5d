//! Drive schemes, the Hamiltonians they produce, and the I/Q waveform
//! compiler.
//!
//! Frames:
//! - lab frame: H = (ω0/2)σz + f·σz + d(t)·σx with the full carrier,
//! - first rotating frame (the simulation frame): the carrier is removed with
//!   U = e^{−i(ω0/2)σz t} and counter-rotating terms are dropped, leaving
//!   H_I = ((Ω1+δΩ1)/2)σx − (Ω2+δΩ2)·sin(Ω1 t)·σy + (f+Δ)σz.
//!
//! Frequencies are configured in MHz and every Hamiltonian coefficient
//! returned here is in rad/µs.

use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::noise::second_drive_fluctuation;
use crate::spin::PauliVector;
use crate::{mhz_to_angular, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriveScheme {
    /// Plain continuous (spin-lock / Rabi) drive.
    SingleDrive { rabi_mhz: f64 },
    /// Ω1·cos[ω0t + α·sin(Ω1t)].
    PhaseMod { rabi_mhz: f64, alpha: f64 },
    /// Ω1·[cos(ω0t) + α·sin(Ω1t)·cos(ω0t + π/2)].
    AmpMod { rabi_mhz: f64, alpha: f64 },
    /// Two physical drives, Ω1 on the carrier and Ω2 at the Rabi frequency.
    DoubleDrive { rabi_mhz: f64, second_mhz: f64 },
}

impl DriveScheme {
    pub fn validate(&self) -> Result<()> {
        let rabi = self.rabi_mhz();
        if !(rabi.is_finite() && rabi > 0.0) {
            return Err(Error::config("scheme.rabi_mhz", format!("must be > 0, got {rabi}")));
        }
        match *self {
            DriveScheme::PhaseMod { alpha, .. } | DriveScheme::AmpMod { alpha, .. } => {
                if !(alpha.is_finite() && alpha >= 0.0) {
                    return Err(Error::config("scheme.alpha", format!("must be >= 0, got {alpha}")));
                }
            }
            DriveScheme::DoubleDrive { rabi_mhz, second_mhz } => {
                if !(second_mhz.is_finite() && second_mhz >= 0.0 && second_mhz < rabi_mhz) {
                    return Err(Error::config(
                        "scheme.second_mhz",
                        format!("need 0 <= Ω2 < Ω1, got Ω2 = {second_mhz}, Ω1 = {rabi_mhz}"),
                    ));
                }
            }
            DriveScheme::SingleDrive { .. } => {}
        }
        Ok(())
    }

    pub fn rabi_mhz(&self) -> f64 {
        match *self {
            DriveScheme::SingleDrive { rabi_mhz }
            | DriveScheme::PhaseMod { rabi_mhz, .. }
            | DriveScheme::AmpMod { rabi_mhz, .. }
            | DriveScheme::DoubleDrive { rabi_mhz, .. } => rabi_mhz,
        }
    }

    /// Modulation strength α = 2Ω2/Ω1.
    pub fn alpha(&self) -> f64 {
        match *self {
            DriveScheme::SingleDrive { .. } => 0.0,
            DriveScheme::PhaseMod { alpha, .. } | DriveScheme::AmpMod { alpha, .. } => alpha,
            DriveScheme::DoubleDrive { rabi_mhz, second_mhz } => 2.0 * second_mhz / rabi_mhz,
        }
    }

    /// Effective second-drive amplitude Ω2 = αΩ1/2, MHz.
    pub fn second_mhz(&self) -> f64 {
        match *self {
            DriveScheme::DoubleDrive { second_mhz, .. } => second_mhz,
            _ => 0.5 * self.alpha() * self.rabi_mhz(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DriveScheme::SingleDrive { .. } => "single",
            DriveScheme::PhaseMod { .. } => "phase",
            DriveScheme::AmpMod { .. } => "amplitude",
            DriveScheme::DoubleDrive { .. } => "double",
        }
    }

    /// Same kind of scheme at a different modulation strength. A single
    /// drive becomes phase modulation.
    pub fn with_alpha(&self, alpha: f64) -> DriveScheme {
        let rabi_mhz = self.rabi_mhz();
        match self {
            DriveScheme::AmpMod { .. } => DriveScheme::AmpMod { rabi_mhz, alpha },
            DriveScheme::DoubleDrive { .. } => DriveScheme::DoubleDrive {
                rabi_mhz,
                second_mhz: 0.5 * alpha * rabi_mhz,
            },
            _ => DriveScheme::PhaseMod { rabi_mhz, alpha },
        }
    }
}

/// How the modulation waveform is evaluated in time.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ModulationClock {
    #[default]
    Continuous,
    /// Zero-order hold over AWG samples of the given period (ns).
    Held { sample_period_ns: f64 },
}

impl ModulationClock {
    #[inline]
    pub fn sample_time(&self, t_us: f64) -> f64 {
        match *self {
            ModulationClock::Continuous => t_us,
            ModulationClock::Held { sample_period_ns } => {
                let period_us = sample_period_ns * 1e-3;
                // the offset keeps exact sample instants from rounding down
                (t_us / period_us + 1e-9).floor() * period_us
            }
        }
    }
}

/// Phase modulation φ(t) = α·sin(2π·Ω1·t), with Ω1 in MHz and t in µs.
pub fn phase_waveform(t_us: f64, alpha: f64, rabi_mhz: f64) -> f64 {
    alpha * (mhz_to_angular(rabi_mhz) * t_us).sin()
}

/// Noise entering the first-frame Hamiltonian, all in rad/µs.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FrameNoise {
    /// Drive-amplitude fluctuation δΩ1.
    pub delta_omega1: f64,
    /// Spin-bath σz coefficient f(t).
    pub bath: f64,
    /// Static detuning as a σz coefficient.
    pub detuning: f64,
}

/// First-frame Hamiltonian for `scheme` at time `t_us`.
pub fn rotating_frame_hamiltonian(scheme: &DriveScheme, t_us: f64, noise: &FrameNoise) -> PauliVector {
    rotating_frame_hamiltonian_clocked(scheme, t_us, noise, ModulationClock::Continuous)
}

pub fn rotating_frame_hamiltonian_clocked(
    scheme: &DriveScheme,
    t_us: f64,
    noise: &FrameNoise,
    clock: ModulationClock,
) -> PauliVector {
    let omega1 = mhz_to_angular(scheme.rabi_mhz());
    let s = (omega1 * clock.sample_time(t_us)).sin();
    first_frame_from_sine(scheme, s, noise)
}

/// Assembles H_I given the modulation value s = sin(Ω1 t).
#[inline]
pub(crate) fn first_frame_from_sine(scheme: &DriveScheme, s: f64, noise: &FrameNoise) -> PauliVector {
    let omega1 = mhz_to_angular(scheme.rabi_mhz());
    let hx = 0.5 * (omega1 + noise.delta_omega1);
    let hz = noise.bath + noise.detuning;
    let hy = match scheme {
        DriveScheme::SingleDrive { .. } => 0.0,
        _ => {
            let omega2 = mhz_to_angular(scheme.second_mhz());
            let d2 = second_drive_fluctuation(noise.delta_omega1, omega1, omega2);
            -(omega2 + d2) * s
        }
    };
    PauliVector { h0: 0.0, hx, hy, hz }
}

/// Rotates the transverse drive (hx, hy) by an extra drive phase `eps`.
#[inline]
pub fn shift_drive_phase(h: &PauliVector, eps: f64) -> PauliVector {
    let (s, c) = eps.sin_cos();
    PauliVector {
        h0: h.h0,
        hx: h.hx * c + h.hy * s,
        hy: h.hy * c - h.hx * s,
        hz: h.hz,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabFrameParams {
    pub carrier_mhz: f64,
    pub scheme: DriveScheme,
}

impl LabFrameParams {
    pub fn validate(&self) -> Result<()> {
        self.scheme.validate()?;
        if !(self.carrier_mhz.is_finite() && self.carrier_mhz > 0.0) {
            return Err(Error::invalid(format!("carrier must be > 0 MHz, got {}", self.carrier_mhz)));
        }
        if self.carrier_mhz < 10.0 * self.scheme.rabi_mhz() {
            log::warn!(
                "carrier {} MHz is less than 10x the Rabi frequency {} MHz; RWA will be poor",
                self.carrier_mhz,
                self.scheme.rabi_mhz()
            );
        }
        Ok(())
    }
}

/// Full lab-frame Hamiltonian without the rotating-wave approximation.
///
/// The modulation sign is chosen so that removing the carrier with
/// U = e^{−i(ω0/2)σz t} and dropping the 2ω0 terms lands exactly on
/// [`rotating_frame_hamiltonian`]: phase modulation is
/// (Ω1+δΩ1)·cos[ω0t − φ(t)] and amplitude modulation
/// (Ω1+δΩ1)·[cos(ω0t) + α·sin(Ω1t)·sin(ω0t)].
pub fn lab_frame_hamiltonian(params: &LabFrameParams, t_us: f64, delta_omega1: f64, bath: f64) -> PauliVector {
    let scheme = &params.scheme;
    let omega0 = mhz_to_angular(params.carrier_mhz);
    let omega1 = mhz_to_angular(scheme.rabi_mhz());
    let amp = omega1 + delta_omega1;
    let carrier = omega0 * t_us;
    let drive = match *scheme {
        DriveScheme::SingleDrive { .. } => amp * carrier.cos(),
        DriveScheme::PhaseMod { rabi_mhz, alpha } => amp * (carrier - phase_waveform(t_us, alpha, rabi_mhz)).cos(),
        DriveScheme::AmpMod { .. } | DriveScheme::DoubleDrive { .. } => {
            let alpha = scheme.alpha();
            amp * (carrier.cos() + alpha * (omega1 * t_us).sin() * carrier.sin())
        }
    };
    PauliVector {
        h0: 0.0,
        hx: drive,
        hy: 0.0,
        hz: 0.5 * omega0 + bath,
    }
}

/// Baseband I/Q samples for the two AWG channels.
#[derive(Debug, Clone, PartialEq)]
pub struct IqWaveform {
    pub sample_period_ns: f64,
    pub i_samples: Vec<f64>,
    pub q_samples: Vec<f64>,
}

/// (I, Q) at time `t_us`: [1, α·sin(Ω1t)] for amplitude modulation and
/// {cos[α·sin(Ω1t)], sin[α·sin(Ω1t)]} for phase modulation.
pub fn iq_sample(scheme: &DriveScheme, t_us: f64) -> (f64, f64) {
    let s = (mhz_to_angular(scheme.rabi_mhz()) * t_us).sin();
    match scheme {
        DriveScheme::SingleDrive { .. } => (1.0, 0.0),
        DriveScheme::PhaseMod { alpha, .. } => {
            let (q, i) = (alpha * s).sin_cos();
            (i, q)
        }
        DriveScheme::AmpMod { .. } | DriveScheme::DoubleDrive { .. } => (1.0, scheme.alpha() * s),
    }
}

/// Samples the I/Q waveform for `duration_us` at `sample_period_ns`.
/// Sample k sits at t = k·sample_period.
pub fn compile_iq(scheme: &DriveScheme, duration_us: f64, sample_period_ns: f64) -> Result<IqWaveform> {
    scheme.validate()?;
    if !(duration_us.is_finite() && duration_us > 0.0) {
        return Err(Error::invalid(format!("duration must be > 0, got {duration_us}")));
    }
    if !(sample_period_ns.is_finite() && sample_period_ns > 0.0) {
        return Err(Error::invalid(format!("sample period must be > 0, got {sample_period_ns}")));
    }
    let period_us = sample_period_ns * 1e-3;
    let count = (duration_us / period_us).round();
    // 2^31 samples is far beyond any AWG memory
    if !count.is_finite() || count > (1u64 << 31) as f64 {
        return Err(Error::invalid(format!(
            "{duration_us} µs at {sample_period_ns} ns gives too many samples"
        )));
    }
    let n = (count as usize).max(1);
    let (i_samples, q_samples) = (0..n).map(|k| iq_sample(scheme, k as f64 * period_us)).unzip();
    Ok(IqWaveform {
        sample_period_ns,
        i_samples,
        q_samples,
    })
}

/// Sidecar describing an exported waveform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformMetadata {
    pub scheme: String,
    pub rabi_mhz: f64,
    pub alpha: f64,
    pub duration_us: f64,
    pub sample_period_ns: f64,
    pub samples: usize,
}

impl IqWaveform {
    pub fn len(&self) -> usize {
        self.i_samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.i_samples.is_empty()
    }

    /// `i,q` header followed by one row per sample.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "i,q")?;
        for (i, q) in self.i_samples.iter().zip(&self.q_samples) {
            writeln!(w, "{i:.16e},{q:.16e}")?;
        }
        Ok(())
    }

    pub fn metadata(&self, scheme: &DriveScheme, duration_us: f64) -> WaveformMetadata {
        WaveformMetadata {
            scheme: scheme.name().to_string(),
            rabi_mhz: scheme.rabi_mhz(),
            alpha: scheme.alpha(),
            duration_us,
            sample_period_ns: self.sample_period_ns,
            samples: self.len(),
        }
    }
}
