//! Ornstein–Uhlenbeck noise streams and the static hyperfine detuning
//! ensemble.
//!
//! An OU process with correlation time τ and diffusion coefficient c has
//! zero mean and autocorrelation ⟨f(t)f(t')⟩ = (cτ/2)·e^{−|t−t'|/τ}. It is
//! advanced with the exact update
//!
//! ```text
//! f(t+Δt) = f(t)·e^{−Δt/τ} + n·sqrt((cτ/2)(1 − e^{−2Δt/τ}))
//! ```
//!
//! which is valid for any step size.

use rand::Rng;
use rand::distr::weighted::WeightedIndex;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::{mhz_to_angular, Error, Result};

/// τ and c of an OU process. Units follow the caller; inside the simulator
/// c is in (rad/µs)²/µs and τ in µs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuSpec {
    pub tau: f64,
    pub c: f64,
}

impl OuSpec {
    pub fn new(tau: f64, c: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::invalid(format!("OU correlation time must be > 0, got {tau}")));
        }
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::invalid(format!("OU diffusion coefficient must be >= 0, got {c}")));
        }
        Ok(OuSpec { tau, c })
    }

    /// Stationary variance cτ/2.
    pub fn variance(&self) -> f64 {
        0.5 * self.c * self.tau
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Draws f(0) from the stationary distribution N(0, cτ/2).
    pub fn stationary<R: Rng + ?Sized>(&self, rng: &mut R) -> OuProcess {
        let n: f64 = StandardNormal.sample(rng);
        OuProcess {
            spec: *self,
            value: n * self.std_dev(),
        }
    }

    /// Precomputes the update coefficients for a fixed step.
    pub fn stepper(&self, dt: f64) -> Result<OuStepper> {
        check_dt(dt)?;
        let decay = (-dt / self.tau).exp();
        let kick = (self.variance() * (1.0 - (-2.0 * dt / self.tau).exp())).sqrt();
        Ok(OuStepper { decay, kick })
    }
}

/// An OU process together with its current value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuProcess {
    pub spec: OuSpec,
    pub value: f64,
}

impl OuProcess {
    pub fn new(spec: OuSpec, value: f64) -> Self {
        OuProcess { spec, value }
    }

    pub fn step(&self, dt: f64, n: f64) -> Result<OuProcess> {
        ou_step(self, dt, n)
    }
}

/// Advances `p` by `dt` given the unit Gaussian draw `n`.
pub fn ou_step(p: &OuProcess, dt: f64, n: f64) -> Result<OuProcess> {
    let stepper = p.spec.stepper(dt)?;
    Ok(OuProcess {
        spec: p.spec,
        value: stepper.advance(p.value, n),
    })
}

fn check_dt(dt: f64) -> Result<()> {
    if dt.is_finite() && dt > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("time step must be positive and finite, got {dt}")))
    }
}

/// Fixed-step form of [`ou_step`] for inner loops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuStepper {
    pub decay: f64,
    pub kick: f64,
}

impl OuStepper {
    #[inline]
    pub fn advance(&self, value: f64, n: f64) -> f64 {
        value * self.decay + n * self.kick
    }
}

/// `n_steps` samples of a stationary OU stream spaced by `dt`. Sample 0 is
/// the stationary initial draw.
pub fn ou_stream<R: Rng + ?Sized>(spec: &OuSpec, dt: f64, n_steps: usize, rng: &mut R) -> Result<Vec<f64>> {
    let stepper = spec.stepper(dt)?;
    let mut out = Vec::with_capacity(n_steps);
    if n_steps == 0 {
        return Ok(out);
    }
    let mut value = spec.stationary(rng).value;
    out.push(value);
    for _ in 1..n_steps {
        let n: f64 = StandardNormal.sample(rng);
        value = stepper.advance(value, n);
        out.push(value);
    }
    Ok(out)
}

/// How the configured bath diffusion coefficient (in "MHz³") maps onto the
/// σz coefficient f(t) of the simulated Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BathUnits {
    /// The configured c describes an angular transition-frequency shift δω
    /// in rad/µs; f = δω/2, so c_internal = c/4.
    Angular,
    /// The configured c describes an ordinary transition-frequency shift δν
    /// in MHz; f = 2π·δν/2, so c_internal = π²·c.
    Ordinary,
    /// The configured c already describes f itself in rad/µs.
    SigmaZ,
}

impl BathUnits {
    pub fn diffusion_factor(&self) -> f64 {
        match self {
            BathUnits::Angular => 0.25,
            BathUnits::Ordinary => PI * PI,
            BathUnits::SigmaZ => 1.0,
        }
    }

    pub fn all() -> [BathUnits; 3] {
        [BathUnits::Angular, BathUnits::Ordinary, BathUnits::SigmaZ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            BathUnits::Angular => "angular",
            BathUnits::Ordinary => "ordinary",
            BathUnits::SigmaZ => "sigma_z",
        }
    }
}

/// Spin-bath noise as configured: τ_B in µs and c_B in MHz³.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathSpec {
    pub tau_us: f64,
    pub diffusion_mhz3: f64,
    pub units: BathUnits,
}

impl BathSpec {
    /// The OU process for the σz coefficient f(t), in rad/µs.
    pub fn ou(&self) -> Result<OuSpec> {
        OuSpec::new(self.tau_us, self.diffusion_mhz3 * self.units.diffusion_factor())
    }
}

/// Relative drive-amplitude fluctuations δ_Ω with correlation time τ_Ω.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeNoiseSpec {
    pub relative_error: f64,
    pub tau_us: f64,
}

impl AmplitudeNoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.relative_error.is_finite() && self.relative_error >= 0.0) {
            return Err(Error::config(
                "amp_noise.relative_error",
                format!("must be >= 0, got {}", self.relative_error),
            ));
        }
        if !(self.tau_us.is_finite() && self.tau_us > 0.0) {
            return Err(Error::config("amp_noise.tau_us", format!("must be > 0, got {}", self.tau_us)));
        }
        Ok(())
    }

    /// c_Ω = 2(δ_Ω·Ω)²/τ_Ω for a drive of angular amplitude `omega`.
    pub fn diffusion(&self, omega: f64) -> f64 {
        let sigma = self.relative_error * omega;
        2.0 * sigma * sigma / self.tau_us
    }

    /// OU process for δΩ1 in rad/µs; its stationary std is δ_Ω·Ω1.
    pub fn ou(&self, rabi_mhz: f64) -> Result<OuSpec> {
        OuSpec::new(self.tau_us, self.diffusion(mhz_to_angular(rabi_mhz)))
    }
}

/// δΩ2 = (Ω2/Ω1)·δΩ1: both effective drives come from one source.
#[inline]
pub fn second_drive_fluctuation(delta_omega1: f64, omega1: f64, omega2: f64) -> f64 {
    if omega1 == 0.0 {
        0.0
    } else {
        delta_omega1 * omega2 / omega1
    }
}

/// Static detuning distribution: a weighted mixture of Gaussian lines.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperfineEnsemble {
    /// Line centres in MHz.
    pub centers: Vec<f64>,
    pub weights: Vec<f64>,
    /// Gaussian standard deviation of each line, MHz.
    pub peak_width: f64,
}

impl Default for HyperfineEnsemble {
    fn default() -> Self {
        HyperfineEnsemble {
            centers: vec![-2.2, 0.0, 2.2],
            weights: vec![1.0 / 3.0; 3],
            peak_width: 1.0,
        }
    }
}

/// A detuning draw and the index of the line it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetuningDraw {
    pub line: usize,
    pub center_mhz: f64,
    pub detuning_mhz: f64,
}

impl HyperfineEnsemble {
    /// A single resonant line of zero width.
    pub fn resonant() -> Self {
        HyperfineEnsemble {
            centers: vec![0.0],
            weights: vec![1.0],
            peak_width: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.centers.is_empty() {
            return Err(Error::config("hyperfine.centers_mhz", "needs at least one line"));
        }
        if self.centers.len() != self.weights.len() {
            return Err(Error::config(
                "hyperfine.weights",
                format!("{} weights for {} centers", self.weights.len(), self.centers.len()),
            ));
        }
        if self.centers.iter().any(|c| !c.is_finite()) {
            return Err(Error::config("hyperfine.centers_mhz", "non-finite center"));
        }
        if self.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::config("hyperfine.weights", "weights must be finite and >= 0"));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::config("hyperfine.weights", format!("weights sum to {total}, expected 1")));
        }
        if !(self.peak_width.is_finite() && self.peak_width >= 0.0) {
            return Err(Error::config(
                "hyperfine.peak_width_mhz",
                format!("must be >= 0, got {}", self.peak_width),
            ));
        }
        Ok(())
    }

    /// Picks a line by weight and adds Gaussian scatter of `peak_width`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DetuningDraw> {
        self.validate()?;
        let line = if self.centers.len() == 1 {
            0
        } else {
            WeightedIndex::new(&self.weights)
                .map_err(|e| Error::config("hyperfine.weights", e.to_string()))?
                .sample(rng)
        };
        let center = self.centers[line];
        let scatter = if self.peak_width > 0.0 {
            Normal::new(0.0, self.peak_width)
                .map_err(|e| Error::config("hyperfine.peak_width_mhz", e.to_string()))?
                .sample(rng)
        } else {
            0.0
        };
        Ok(DetuningDraw {
            line,
            center_mhz: center,
            detuning_mhz: center + scatter,
        })
    }
}

/// Transition detuning in MHz drawn from the ensemble.
pub fn sample_detuning<R: Rng + ?Sized>(ens: &HyperfineEnsemble, rng: &mut R) -> Result<f64> {
    Ok(ens.sample(rng)?.detuning_mhz)
}

/// σz coefficient (rad/µs) for a transition detuning given in MHz. A shift
/// Δ of the transition frequency contributes (2πΔ/2)·σz.
#[inline]
pub fn detuning_sigma_z(detuning_mhz: f64) -> f64 {
    PI * detuning_mhz
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use approx::assert_abs_diff_eq;

    #[test]
    fn deterministic_decay() {
        let p = OuProcess::new(OuSpec::new(2.0, 0.3).unwrap(), 1.0);
        let next = ou_step(&p, 2.0, 0.0).unwrap();
        assert_abs_diff_eq!(next.value, (-1.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(next.value, 0.36788, epsilon = 1e-5);
    }

    #[test]
    fn long_step_kick_is_stationary_std() {
        let spec = OuSpec::new(2.0, 0.3).unwrap();
        let p = OuProcess::new(spec, 0.0);
        let next = ou_step(&p, 1e6, 1.0).unwrap();
        assert_abs_diff_eq!(next.value, (0.3f64 * 2.0 / 2.0).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn invalid_steps_and_specs() {
        let p = OuProcess::new(OuSpec::new(1.0, 1.0).unwrap(), 0.0);
        assert!(ou_step(&p, 0.0, 0.0).is_err());
        assert!(ou_step(&p, -0.1, 0.0).is_err());
        assert!(OuSpec::new(0.0, 1.0).is_err());
        assert!(OuSpec::new(1.0, -1.0).is_err());
    }

    #[test]
    fn zero_diffusion_stream_is_zero() {
        let spec = OuSpec::new(10.0, 0.0).unwrap();
        let s = ou_stream(&spec, 0.1, 1000, &mut stream(1, 0)).unwrap();
        assert_eq!(s.len(), 1000);
        assert!(s.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn equal_seeds_equal_streams() {
        let spec = OuSpec::new(10.0, 1e-3).unwrap();
        let a = ou_stream(&spec, 0.5, 500, &mut stream(42, 9)).unwrap();
        let b = ou_stream(&spec, 0.5, 500, &mut stream(42, 9)).unwrap();
        let c = ou_stream(&spec, 0.5, 500, &mut stream(42, 10)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn amplitude_noise_variance_matches_relative_error() {
        let spec = AmplitudeNoiseSpec {
            relative_error: 0.0075,
            tau_us: 500.0,
        };
        let ou = spec.ou(9.0).unwrap();
        assert_abs_diff_eq!(ou.std_dev(), 0.0075 * mhz_to_angular(9.0), epsilon = 1e-12);
        assert_abs_diff_eq!(second_drive_fluctuation(2.0, 10.0, 0.5), 0.1, epsilon = 1e-15);
    }

    #[test]
    fn degenerate_ensemble_always_zero() {
        let ens = HyperfineEnsemble {
            centers: vec![-2.2, 0.0, 2.2],
            weights: vec![0.0, 1.0, 0.0],
            peak_width: 0.0,
        };
        let mut rng = stream(3, 0);
        for _ in 0..1000 {
            assert_eq!(sample_detuning(&ens, &mut rng).unwrap(), 0.0);
        }
    }

    #[test]
    fn default_ensemble_is_symmetric() {
        let ens = HyperfineEnsemble::default();
        let mut rng = stream(11, 0);
        let n = 100_000;
        let mut sum = 0.0;
        let mut upper = 0usize;
        for _ in 0..n {
            let d = sample_detuning(&ens, &mut rng).unwrap();
            sum += d;
            if (d - 2.2).abs() < 3.0 {
                upper += 1;
            }
        }
        let mean = sum / n as f64;
        assert!(mean.abs() < 0.03, "mean {mean}");
        // the window also catches most of the central line, so the expected
        // fraction comes from the mixture CDF rather than the bare 1/3 weight
        let frac = upper as f64 / n as f64;
        assert!((frac - expected_upper_fraction()).abs() < 0.01, "fraction {frac}");
    }

    // P(|Δ − 2.2| < 3) for the default mixture, from the normal CDF.
    fn expected_upper_fraction() -> f64 {
        use statrs::distribution::{ContinuousCDF, Normal as SNormal};
        let unit = SNormal::new(0.0, 1.0).unwrap();
        let (lo, hi) = (-0.8, 5.2);
        [-2.2, 0.0, 2.2]
            .iter()
            .map(|c| (unit.cdf(hi - c) - unit.cdf(lo - c)) / 3.0)
            .sum()
    }

    #[test]
    fn line_weights_are_respected() {
        let ens = HyperfineEnsemble::default();
        let mut rng = stream(12, 0);
        let n = 60_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[ens.sample(&mut rng).unwrap().line] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 1.0 / 3.0).abs() < 0.01);
        }
    }

    #[test]
    fn ensemble_validation() {
        let mut ens = HyperfineEnsemble::default();
        ens.weights = vec![0.5, 0.5, 0.5];
        assert!(matches!(ens.validate(), Err(Error::Config { key, .. }) if key == "hyperfine.weights"));
        let mut ens = HyperfineEnsemble::default();
        ens.peak_width = -1.0;
        assert!(ens.validate().is_err());
    }

    #[test]
    fn bath_unit_factors() {
        let b = BathSpec {
            tau_us: 10.0,
            diffusion_mhz3: 4.0,
            units: BathUnits::Angular,
        };
        assert_abs_diff_eq!(b.ou().unwrap().c, 1.0, epsilon = 1e-15);
        let b = BathSpec {
            units: BathUnits::Ordinary,
            ..b
        };
        assert_abs_diff_eq!(b.ou().unwrap().c, 4.0 * PI * PI, epsilon = 1e-12);
    }
}
