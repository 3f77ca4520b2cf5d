//! Trajectory propagation, ensemble averaging, free-induction and Hahn-echo
//! calibration curves, and the rotating-wave verifiers.

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use std::io::Write;

use crate::drive::{
    first_frame_from_sine, lab_frame_hamiltonian, rotating_frame_hamiltonian, shift_drive_phase, DriveScheme,
    FrameNoise, LabFrameParams, ModulationClock,
};
use crate::noise::{detuning_sigma_z, AmplitudeNoiseSpec, BathSpec, BathUnits, HyperfineEnsemble, OuStepper};
use crate::rng::{stream, StreamRng};
use crate::spin::{Axis, PauliVector, SpinState, Unitary};
use crate::{mhz_to_angular, Error, Result};

/// Trajectories reduced per block. Blocks are summed in index order, which
/// keeps the reduction independent of the worker count.
const BLOCK: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub scheme: DriveScheme,
    pub clock: ModulationClock,
    /// Std of a white drive-phase error redrawn every step, rad.
    pub phase_jitter_rad: f64,
    pub bath: BathSpec,
    pub amp_noise: AmplitudeNoiseSpec,
    pub hyperfine: HyperfineEnsemble,
    pub init_axis: Axis,
    pub dt_us: f64,
    pub duration_us: f64,
    pub n_realizations: usize,
    pub master_seed: u64,
    /// Record every n-th step.
    pub record_every: usize,
}

impl SimulationConfig {
    /// Published parameter set with a single 9 MHz drive.
    pub fn published_defaults() -> Self {
        let rabi_mhz = 9.0;
        SimulationConfig {
            scheme: DriveScheme::SingleDrive { rabi_mhz },
            clock: ModulationClock::Continuous,
            phase_jitter_rad: 0.0,
            bath: BathSpec {
                tau_us: 10.0,
                diffusion_mhz3: 6.6667e-5,
                units: BathUnits::Angular,
            },
            amp_noise: AmplitudeNoiseSpec {
                relative_error: 0.0075,
                tau_us: 500.0,
            },
            hyperfine: HyperfineEnsemble::default(),
            init_axis: Axis::Y,
            dt_us: default_dt(rabi_mhz),
            duration_us: 5.0,
            n_realizations: 400,
            master_seed: 1,
            record_every: 1,
        }
    }

    /// Every noise source switched off.
    pub fn noiseless(scheme: DriveScheme) -> Self {
        let mut c = Self::published_defaults();
        c.scheme = scheme;
        c.dt_us = default_dt(scheme.rabi_mhz());
        c.bath.diffusion_mhz3 = 0.0;
        c.amp_noise.relative_error = 0.0;
        c.hyperfine = HyperfineEnsemble::resonant();
        c
    }

    pub fn validate(&self) -> Result<()> {
        self.scheme.validate()?;
        self.amp_noise.validate()?;
        self.hyperfine.validate()?;
        if !(self.bath.tau_us.is_finite() && self.bath.tau_us > 0.0) {
            return Err(Error::config("bath.tau_us", format!("must be > 0, got {}", self.bath.tau_us)));
        }
        if !(self.bath.diffusion_mhz3.is_finite() && self.bath.diffusion_mhz3 >= 0.0) {
            return Err(Error::config(
                "bath.diffusion_mhz3",
                format!("must be >= 0, got {}", self.bath.diffusion_mhz3),
            ));
        }
        let max_dt = 1.0 / (20.0 * self.scheme.rabi_mhz());
        if !(self.dt_us.is_finite() && self.dt_us > 0.0) {
            return Err(Error::config("run.dt_us", format!("must be > 0, got {}", self.dt_us)));
        }
        if self.dt_us > max_dt * (1.0 + 1e-12) {
            return Err(Error::config(
                "run.dt_us",
                format!("{} µs does not resolve the drive; need dt <= 1/(20·Ω1) = {max_dt} µs", self.dt_us),
            ));
        }
        if !(self.duration_us.is_finite() && self.duration_us >= self.dt_us) {
            return Err(Error::config(
                "run.duration_us",
                format!("must be at least one time step, got {}", self.duration_us),
            ));
        }
        if self.n_realizations == 0 {
            return Err(Error::config("run.n_realizations", "must be >= 1"));
        }
        if self.record_every == 0 {
            return Err(Error::config("run.record_every", "must be >= 1"));
        }
        if !(self.phase_jitter_rad.is_finite() && self.phase_jitter_rad >= 0.0) {
            return Err(Error::config("scheme.phase_jitter_rad", "must be >= 0"));
        }
        if let ModulationClock::Held { sample_period_ns } = self.clock {
            if !(sample_period_ns.is_finite() && sample_period_ns > 0.0) {
                return Err(Error::config("scheme.awg_sample_period_ns", "must be > 0"));
            }
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.duration_us / self.dt_us).round() as usize
    }

    /// Short stable fingerprint of every parameter.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(format!("{self:?}").as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    fn recorded_times(&self) -> Vec<f64> {
        (0..=self.n_steps())
            .step_by(self.record_every)
            .map(|k| k as f64 * self.dt_us)
            .collect()
    }
}

/// dt = 1/(40·Ω1).
pub fn default_dt(rabi_mhz: f64) -> f64 {
    1.0 / (40.0 * rabi_mhz)
}

/// Ensemble-averaged fidelity to the initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoherenceCurve {
    pub times: Vec<f64>,
    pub fidelity: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n_realizations: usize,
    pub config_hash: String,
}

impl DecoherenceCurve {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `time_us,fidelity,stderr`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "time_us,fidelity,stderr")?;
        for i in 0..self.len() {
            writeln!(w, "{:.16e},{:.16e},{:.16e}", self.times[i], self.fidelity[i], self.stderr[i])?;
        }
        Ok(())
    }
}

/// Pointwise mean and standard error, accumulated in a fixed order.
#[derive(Debug, Clone)]
struct Welford {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    fn new(len: usize) -> Self {
        Welford {
            n: 0,
            mean: vec![0.0; len],
            m2: vec![0.0; len],
        }
    }

    fn push(&mut self, xs: &[f64]) {
        self.n += 1;
        let n = self.n as f64;
        for ((m, s), &x) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(xs) {
            let d = x - *m;
            *m += d / n;
            *s += d * (x - *m);
        }
    }

    fn stderr(&self) -> Vec<f64> {
        if self.n < 2 {
            return vec![0.0; self.mean.len()];
        }
        let n = self.n as f64;
        self.m2.iter().map(|s| (s / (n - 1.0)).max(0.0).sqrt() / n.sqrt()).collect()
    }
}

/// Runs `per_traj` for every realization and reduces the returned series in
/// index order.
fn reduce_ordered<F>(n_realizations: usize, len: usize, per_traj: F) -> Result<Welford>
where
    F: Fn(usize) -> Result<Vec<f64>> + Sync,
{
    let mut acc = Welford::new(len);
    let mut start = 0;
    while start < n_realizations {
        let end = (start + BLOCK).min(n_realizations);
        let block: Vec<Vec<f64>> = (start..end).into_par_iter().map(&per_traj).collect::<Result<_>>()?;
        for series in &block {
            acc.push(series);
        }
        start = end;
    }
    Ok(acc)
}

/// Per-run constants shared by every trajectory.
struct Propagation<'a> {
    cfg: &'a SimulationConfig,
    sines: Vec<f64>,
    bath: crate::noise::OuSpec,
    amp: crate::noise::OuSpec,
    bath_step: OuStepper,
    amp_step: OuStepper,
}

impl<'a> Propagation<'a> {
    fn new(cfg: &'a SimulationConfig) -> Result<Self> {
        cfg.validate()?;
        let omega1 = mhz_to_angular(cfg.scheme.rabi_mhz());
        let dt = cfg.dt_us;
        // modulation evaluated at the step midpoint
        let sines = (0..cfg.n_steps())
            .map(|k| (omega1 * cfg.clock.sample_time((k as f64 + 0.5) * dt)).sin())
            .collect();
        let bath = cfg.bath.ou()?;
        let amp = cfg.amp_noise.ou(cfg.scheme.rabi_mhz())?;
        Ok(Propagation {
            cfg,
            sines,
            bath,
            amp,
            bath_step: bath.stepper(dt)?,
            amp_step: amp.stepper(dt)?,
        })
    }

    /// Propagates realization `index`, calling `observe(slot, state)` at every
    /// recorded time, slot 0 being t = 0.
    fn run<F: FnMut(usize, &SpinState)>(&self, index: usize, mut observe: F) -> Result<()> {
        let cfg = self.cfg;
        let mut rng: StreamRng = stream(cfg.master_seed, index as u64);
        let detuning = detuning_sigma_z(cfg.hyperfine.sample(&mut rng)?.detuning_mhz);
        let mut bath = self.bath.stationary(&mut rng).value;
        let mut amp = self.amp.stationary(&mut rng).value;
        let jitter = cfg.phase_jitter_rad;
        let mut psi = SpinState::along(cfg.init_axis);
        observe(0, &psi);
        for (k, &s) in self.sines.iter().enumerate() {
            let noise = FrameNoise {
                delta_omega1: amp,
                bath,
                detuning,
            };
            let mut h = first_frame_from_sine(&cfg.scheme, s, &noise);
            let n_bath: f64 = StandardNormal.sample(&mut rng);
            let n_amp: f64 = StandardNormal.sample(&mut rng);
            if jitter > 0.0 {
                let n_phase: f64 = StandardNormal.sample(&mut rng);
                h = shift_drive_phase(&h, jitter * n_phase);
            }
            psi = psi.apply(&Unitary::exp(&h, cfg.dt_us));
            bath = self.bath_step.advance(bath, n_bath);
            amp = self.amp_step.advance(amp, n_amp);
            if (k + 1) % cfg.record_every == 0 {
                observe((k + 1) / cfg.record_every, &psi);
            }
        }
        Ok(())
    }
}

/// One trajectory's states at the recorded times.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SpinState>,
}

pub fn simulate_trajectory(config: &SimulationConfig, realization_index: usize) -> Result<Trajectory> {
    if realization_index >= config.n_realizations {
        return Err(Error::invalid(format!(
            "realization {realization_index} out of range (n_realizations = {})",
            config.n_realizations
        )));
    }
    let prop = Propagation::new(config)?;
    let times = config.recorded_times();
    let mut states = Vec::with_capacity(times.len());
    prop.run(realization_index, |_, s| states.push(*s))?;
    Ok(Trajectory { times, states })
}

/// Mean fidelity |⟨ψ(0)|ψ(t)⟩|² over all realizations.
pub fn ensemble_curve(config: &SimulationConfig) -> Result<DecoherenceCurve> {
    let prop = Propagation::new(config)?;
    let times = config.recorded_times();
    let len = times.len();
    let init = SpinState::along(config.init_axis);
    let acc = reduce_ordered(config.n_realizations, len, |i| {
        let mut f = vec![0.0; len];
        prop.run(i, |slot, s| f[slot] = init.fidelity(s))?;
        Ok(f)
    })?;
    Ok(DecoherenceCurve {
        times,
        stderr: acc.stderr(),
        fidelity: acc.mean,
        n_realizations: config.n_realizations,
        config_hash: config.hash(),
    })
}

/// Free-induction decay curve plus the line-resolved coherence envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct FidCurve {
    pub curve: DecoherenceCurve,
    /// |⟨e^{i(φ − 2π·c_line·t)}⟩|: coherence with each trajectory's line
    /// centre demodulated, i.e. the envelope under the hyperfine beats.
    pub envelope: Vec<f64>,
}

impl FidCurve {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let c = &self.curve;
        writeln!(w, "time_us,fidelity,stderr,envelope")?;
        for i in 0..c.len() {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                c.times[i], c.fidelity[i], c.stderr[i], self.envelope[i]
            )?;
        }
        Ok(())
    }
}

/// Sampling of a free-evolution (undriven) calibration run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DephasingRun {
    pub duration_us: f64,
    pub dt_us: f64,
}

impl DephasingRun {
    fn validate(&self, prefix: &str) -> Result<usize> {
        if !(self.dt_us.is_finite() && self.dt_us > 0.0) {
            return Err(Error::config(format!("calibration.{prefix}_dt_us"), "must be > 0"));
        }
        if !(self.duration_us.is_finite() && self.duration_us >= self.dt_us) {
            return Err(Error::config(
                format!("calibration.{prefix}_duration_us"),
                "must be at least one time step",
            ));
        }
        Ok((self.duration_us / self.dt_us).round() as usize)
    }
}

/// Free precession under H = (f(t) + Δ)σz only. Returns cumulative
/// ∫(f+Δ)dt at every grid point and the line centre of the trajectory.
fn accumulate_sigma_z(config: &SimulationConfig, index: usize, dt: f64, n: usize) -> Result<(Vec<f64>, f64)> {
    let mut rng = stream(config.master_seed, index as u64);
    let draw = config.hyperfine.sample(&mut rng)?;
    let detuning = detuning_sigma_z(draw.detuning_mhz);
    let ou = config.bath.ou()?;
    let stepper = ou.stepper(dt)?;
    let mut f = ou.stationary(&mut rng).value;
    let mut acc = Vec::with_capacity(n + 1);
    let mut theta = 0.0;
    acc.push(theta);
    for _ in 0..n {
        theta += (f + detuning) * dt;
        let z: f64 = StandardNormal.sample(&mut rng);
        f = stepper.advance(f, z);
        acc.push(theta);
    }
    Ok((acc, draw.center_mhz))
}

/// exp(−iθσz)|init⟩ as a relative phase 2θ between the amplitudes.
fn dephased(init: &SpinState, theta: f64) -> SpinState {
    let (a0, a1) = init.amplitudes();
    let p = Complex64::from_polar(1.0, -theta);
    SpinState::new(a0 * p, a1 * p.conj()).unwrap_or(*init)
}

/// Undriven free-induction decay from the configured initial axis.
pub fn fid_curve(config: &SimulationConfig, run: DephasingRun) -> Result<FidCurve> {
    config.bath.ou()?;
    config.hyperfine.validate()?;
    let n = run.validate("fid")?;
    let init = SpinState::along(config.init_axis);
    let times: Vec<f64> = (0..=n).map(|k| k as f64 * run.dt_us).collect();
    let len = n + 1;
    // fidelity, then Re and Im of the demodulated coherence
    let acc = reduce_ordered(config.n_realizations, 3 * len, |i| {
        let (theta, center) = accumulate_sigma_z(config, i, run.dt_us, n)?;
        let mut out = vec![0.0; 3 * len];
        for (k, &th) in theta.iter().enumerate() {
            out[k] = init.fidelity(&dephased(&init, th));
            let phase = 2.0 * th - mhz_to_angular(center) * times[k];
            let (s, c) = phase.sin_cos();
            out[len + k] = c;
            out[2 * len + k] = s;
        }
        Ok(out)
    })?;
    let stderr = acc.stderr();
    let envelope = (0..len)
        .map(|k| Complex64::new(acc.mean[len + k], acc.mean[2 * len + k]).norm())
        .collect();
    Ok(FidCurve {
        curve: DecoherenceCurve {
            times,
            fidelity: acc.mean[..len].to_vec(),
            stderr: stderr[..len].to_vec(),
            n_realizations: config.n_realizations,
            config_hash: config.hash(),
        },
        envelope,
    })
}

/// Hahn echo with an ideal instantaneous π pulse about the initial axis at
/// t/2. Echo times are multiples of 2·dt.
pub fn hahn_echo_curve(config: &SimulationConfig, run: DephasingRun) -> Result<DecoherenceCurve> {
    config.bath.ou()?;
    config.hyperfine.validate()?;
    let n = run.validate("echo")?;
    let half = n / 2;
    if half == 0 {
        return Err(Error::config("calibration.echo_duration_us", "needs at least two time steps"));
    }
    let init = SpinState::along(config.init_axis);
    let times: Vec<f64> = (0..=half).map(|m| 2.0 * m as f64 * run.dt_us).collect();
    let acc = reduce_ordered(config.n_realizations, half + 1, |i| {
        let (theta, _) = accumulate_sigma_z(config, i, run.dt_us, 2 * half)?;
        // phase before the pulse minus phase after it
        Ok((0..=half)
            .map(|m| {
                let echo = theta[m] - (theta[2 * m] - theta[m]);
                init.fidelity(&dephased(&init, echo))
            })
            .collect())
    })?;
    Ok(DecoherenceCurve {
        times,
        stderr: acc.stderr(),
        fidelity: acc.mean,
        n_realizations: config.n_realizations,
        config_hash: config.hash(),
    })
}

/// Fourth-order commutator-free exponential step for a time-dependent H.
fn cf4_step<H: Fn(f64) -> PauliVector>(psi: &SpinState, h: &H, t: f64, dt: f64) -> SpinState {
    let r3 = 3f64.sqrt();
    let (c1, c2) = (0.5 - r3 / 6.0, 0.5 + r3 / 6.0);
    let (a1, a2) = (0.25 - r3 / 6.0, 0.25 + r3 / 6.0);
    let h1 = h(t + c1 * dt);
    let h2 = h(t + c2 * dt);
    let first = h1.scaled(a2) + h2.scaled(a1);
    let second = h1.scaled(a1) + h2.scaled(a2);
    psi.apply(&Unitary::exp(&first, dt)).apply(&Unitary::exp(&second, dt))
}

/// Largest Bloch-vector distance between lab-frame evolution and the
/// first-frame (RWA) evolution mapped back through U = e^{−i(ω0/2)σz t},
/// over `window_us`. Noiseless, starting along y.
pub fn verify_rwa(params: &LabFrameParams, window_us: f64, dt_lab_us: f64) -> Result<f64> {
    params.validate()?;
    if !(window_us.is_finite() && window_us > 0.0) {
        return Err(Error::invalid(format!("window must be > 0, got {window_us}")));
    }
    let max_dt = 1.0 / (20.0 * params.carrier_mhz);
    if !(dt_lab_us.is_finite() && dt_lab_us > 0.0) || dt_lab_us > max_dt {
        return Err(Error::invalid(format!(
            "lab step {dt_lab_us} µs does not resolve the carrier; need <= {max_dt} µs"
        )));
    }
    let n = (window_us / dt_lab_us).ceil() as usize;
    let dt = window_us / n as f64;
    let omega0 = mhz_to_angular(params.carrier_mhz);
    let quiet = FrameNoise::default();
    let lab_h = |t: f64| lab_frame_hamiltonian(params, t, 0.0, 0.0);
    let rot_h = |t: f64| rotating_frame_hamiltonian(&params.scheme, t, &quiet);

    let mut lab = SpinState::along(Axis::Y);
    let mut rot = lab;
    let mut worst: f64 = 0.0;
    for k in 0..n {
        let t = k as f64 * dt;
        lab = cf4_step(&lab, &lab_h, t, dt);
        rot = cf4_step(&rot, &rot_h, t, dt);
        let t1 = t + dt;
        let frame = PauliVector::new(0.0, 0.0, 0.0, 0.5 * omega0);
        let mapped = rot.apply(&Unitary::exp(&frame, t1));
        worst = worst.max(lab.to_bloch().distance(&mapped.to_bloch()));
    }
    Ok(worst)
}

/// Largest Bloch distance between first-frame evolution of a modulated
/// drive with constant δΩ1 and the second-frame prediction
/// e^{−i(Ω1/2)σx t}·e^{−iH_I2 t}|y⟩ with
/// H_I2 = ((Ω2+δΩ2)/2)σz + (δΩ1/2)σx.
pub fn verify_second_frame(scheme: &DriveScheme, delta_omega1: f64, horizon_us: f64, dt_us: f64) -> Result<f64> {
    scheme.validate()?;
    if !(horizon_us.is_finite() && horizon_us > 0.0) {
        return Err(Error::invalid(format!("horizon must be > 0, got {horizon_us}")));
    }
    if !(delta_omega1.is_finite()) {
        return Err(Error::invalid("non-finite amplitude offset"));
    }
    let max_dt = 1.0 / (20.0 * scheme.rabi_mhz());
    if !(dt_us.is_finite() && dt_us > 0.0) || dt_us > max_dt {
        return Err(Error::invalid(format!("step {dt_us} µs too coarse; need <= {max_dt} µs")));
    }
    let n = (horizon_us / dt_us).ceil() as usize;
    let dt = horizon_us / n as f64;
    let omega1 = mhz_to_angular(scheme.rabi_mhz());
    let omega2 = mhz_to_angular(scheme.second_mhz());
    let d2 = crate::noise::second_drive_fluctuation(delta_omega1, omega1, omega2);
    let noise = FrameNoise {
        delta_omega1,
        ..FrameNoise::default()
    };
    let first = |t: f64| rotating_frame_hamiltonian(scheme, t, &noise);
    let second = PauliVector::new(0.0, 0.5 * delta_omega1, 0.0, 0.5 * (omega2 + d2));
    let frame = PauliVector::new(0.0, 0.5 * omega1, 0.0, 0.0);

    let init = SpinState::along(Axis::Y);
    let mut psi = init;
    let mut worst: f64 = 0.0;
    for k in 0..n {
        psi = cf4_step(&psi, &first, k as f64 * dt, dt);
        let t1 = (k + 1) as f64 * dt;
        let predicted = init.apply(&Unitary::exp(&second, t1)).apply(&Unitary::exp(&frame, t1));
        worst = worst.max(psi.to_bloch().distance(&predicted.to_bloch()));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn short(mut c: SimulationConfig) -> SimulationConfig {
        c.duration_us = 0.5;
        c.n_realizations = 8;
        c
    }

    #[test]
    fn noiseless_rabi_oscillation() {
        let mut c = SimulationConfig::noiseless(DriveScheme::SingleDrive { rabi_mhz: 9.0 });
        c.n_realizations = 1;
        c.duration_us = 0.3;
        let traj = simulate_trajectory(&c, 0).unwrap();
        let init = SpinState::along(Axis::Y);
        let omega = mhz_to_angular(9.0);
        for (t, s) in traj.times.iter().zip(&traj.states) {
            let expected = (0.5 * omega * t).cos().powi(2);
            assert_abs_diff_eq!(init.fidelity(s), expected, epsilon = 1e-10);
            assert_abs_diff_eq!(s.norm_sqr(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn noiseless_spin_lock_holds() {
        let mut c = SimulationConfig::noiseless(DriveScheme::SingleDrive { rabi_mhz: 9.0 });
        c.init_axis = Axis::X;
        c.n_realizations = 2;
        let curve = ensemble_curve(&c).unwrap();
        for f in &curve.fidelity {
            assert_abs_diff_eq!(*f, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn same_seed_same_trajectory() {
        let c = short(SimulationConfig::published_defaults());
        let a = simulate_trajectory(&c, 3).unwrap();
        let b = simulate_trajectory(&c, 3).unwrap();
        assert_eq!(a, b);
        let other = simulate_trajectory(&c, 4).unwrap();
        assert_ne!(a.states, other.states);
    }

    #[test]
    fn rejects_coarse_dt_and_bad_index() {
        let mut c = SimulationConfig::published_defaults();
        c.dt_us = 1.0 / (10.0 * 9.0);
        match ensemble_curve(&c) {
            Err(Error::Config { key, .. }) => assert_eq!(key, "run.dt_us"),
            other => panic!("unexpected {other:?}"),
        }
        let c = short(SimulationConfig::published_defaults());
        assert!(simulate_trajectory(&c, 8).is_err());
        let mut c = short(SimulationConfig::published_defaults());
        c.n_realizations = 0;
        assert!(ensemble_curve(&c).is_err());
    }

    #[test]
    fn curve_shape_and_first_point() {
        let mut c = short(SimulationConfig::published_defaults());
        c.record_every = 4;
        let curve = ensemble_curve(&c).unwrap();
        assert_eq!(curve.len(), c.n_steps() / 4 + 1);
        assert_eq!(curve.fidelity[0], 1.0);
        assert_eq!(curve.stderr[0], 0.0);
        assert!(curve.fidelity.iter().all(|f| (0.0..=1.0).contains(f)));
    }

    #[test]
    fn fid_without_broadening_is_flat() {
        let mut c = SimulationConfig::noiseless(DriveScheme::SingleDrive { rabi_mhz: 9.0 });
        c.n_realizations = 4;
        let fid = fid_curve(
            &c,
            DephasingRun {
                duration_us: 1.0,
                dt_us: 0.01,
            },
        )
        .unwrap();
        for (f, e) in fid.curve.fidelity.iter().zip(&fid.envelope) {
            assert_abs_diff_eq!(*f, 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(*e, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn echo_refocuses_static_detuning() {
        let mut c = SimulationConfig::published_defaults();
        c.bath.diffusion_mhz3 = 0.0;
        c.n_realizations = 16;
        let echo = hahn_echo_curve(
            &c,
            DephasingRun {
                duration_us: 50.0,
                dt_us: 0.05,
            },
        )
        .unwrap();
        for f in &echo.fidelity {
            assert_abs_diff_eq!(*f, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn second_frame_trivial_case() {
        let s = DriveScheme::PhaseMod {
            rabi_mhz: 9.0,
            alpha: 0.0,
        };
        let d = verify_second_frame(&s, 0.0, 1.0, 1.0 / (400.0 * 9.0)).unwrap();
        assert!(d < 1e-9, "deviation {d}");
    }

    #[test]
    fn rwa_rejects_coarse_lab_step() {
        let p = LabFrameParams {
            carrier_mhz: 900.0,
            scheme: DriveScheme::SingleDrive { rabi_mhz: 9.0 },
        };
        assert!(verify_rwa(&p, 0.1, 1.0 / (10.0 * 900.0)).is_err());
        assert!(verify_rwa(&p, 0.0, 1.0 / (100.0 * 900.0)).is_err());
    }
}
