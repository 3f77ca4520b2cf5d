//! Exponential decay fits, contrast arithmetic and modulation-strength scans.

use serde::Serialize;

use crate::drive::DriveScheme;
use crate::evolve::{ensemble_curve, DecoherenceCurve, SimulationConfig};
use crate::spin::Axis;
use crate::{Error, FitError, Result};

const MIN_POINTS: usize = 10;
const MIN_PEAKS: usize = 4;
const GRID: usize = 240;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    /// Fit the peaks of |F − asymptote|, for oscillating curves.
    EnvelopeExp,
    /// Fit the samples directly.
    PlainExp,
}

impl FitMethod {
    /// Envelope for Rabi-type curves, plain for spin-lock curves.
    pub fn for_axis(axis: Axis) -> Self {
        match axis {
            Axis::X => FitMethod::PlainExp,
            _ => FitMethod::EnvelopeExp,
        }
    }
}

/// Best fit of A·e^{−t/T} + B.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub t_decay: f64,
    pub amplitude: f64,
    pub offset: f64,
    pub residual_rms: f64,
    /// Standard error of T from the linearized covariance.
    pub t_stderr: f64,
    pub method: FitMethod,
}

/// Fits an ensemble curve.
pub fn fit_decay(curve: &DecoherenceCurve, method: FitMethod) -> Result<DecayFit, FitError> {
    fit_decay_samples(&curve.times, &curve.fidelity, method)
}

pub fn fit_decay_samples(times: &[f64], values: &[f64], method: FitMethod) -> Result<DecayFit, FitError> {
    let n = times.len().min(values.len());
    if n < MIN_POINTS {
        return Err(FitError::TooFewPoints {
            needed: MIN_POINTS,
            got: n,
        });
    }
    let (times, values) = (&times[..n], &values[..n]);
    if times.iter().chain(values).any(|v| !v.is_finite()) {
        return Err(FitError::NonFinite);
    }
    let duration = times[n - 1] - times[0];
    match method {
        FitMethod::PlainExp => fit_exponential(times, values, duration, method),
        FitMethod::EnvelopeExp => {
            let (te, env) = envelope_peaks(values, times);
            if te.len() < MIN_PEAKS {
                return Err(FitError::NotOscillating { peaks: te.len() });
            }
            fit_exponential(&te, &env, duration, method)
        }
    }
}

/// Strict local maxima of |F − asymptote|, the asymptote being the mean of
/// the final 10% of samples.
fn envelope_peaks(values: &[f64], times: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let asym = tail_mean(values);
    let r: Vec<f64> = values.iter().map(|v| (v - asym).abs()).collect();
    let mut te = Vec::new();
    let mut env = Vec::new();
    for i in 1..r.len() - 1 {
        if r[i] > r[i - 1] && r[i] >= r[i + 1] {
            te.push(times[i]);
            env.push(r[i]);
        }
    }
    (te, env)
}

fn tail_mean(v: &[f64]) -> f64 {
    let k = (v.len() / 10).max(1);
    v[v.len() - k..].iter().sum::<f64>() / k as f64
}

/// Linear least squares for (A, B) at fixed T. Returns (A, B, SSR).
fn solve_linear(t: &[f64], y: &[f64], t_decay: f64) -> (f64, f64, f64) {
    let t0 = t[0];
    let (mut see, mut se, mut sey, mut sy) = (0.0, 0.0, 0.0, 0.0);
    let n = t.len() as f64;
    for (&ti, &yi) in t.iter().zip(y) {
        let e = (-(ti - t0) / t_decay).exp();
        see += e * e;
        se += e;
        sey += e * yi;
        sy += yi;
    }
    let det = see * n - se * se;
    let (a_shift, b) = if det.abs() <= 1e-300 * see.max(1.0) {
        (0.0, sy / n)
    } else {
        ((n * sey - se * sy) / det, (see * sy - se * sey) / det)
    };
    let ssr = t
        .iter()
        .zip(y)
        .map(|(&ti, &yi)| {
            let r = yi - a_shift * (-(ti - t0) / t_decay).exp() - b;
            r * r
        })
        .sum();
    // A refers to t = 0, not to the first sample
    (a_shift * (t0 / t_decay).exp(), b, ssr)
}

/// Time at which the series first falls to 1/e of its initial height above
/// its final level, or the last time if it never does.
fn first_crossing(t: &[f64], y: &[f64]) -> f64 {
    let b = tail_mean(y);
    let thresh = b + (y[0] - b) / std::f64::consts::E;
    let falling = y[0] >= b;
    t.iter()
        .zip(y)
        .find(|(_, &v)| if falling { v <= thresh } else { v >= thresh })
        .map(|(&ti, _)| ti)
        .unwrap_or(t[t.len() - 1])
}

/// Variable projection: the amplitude and offset are solved exactly for
/// each T, leaving a one-dimensional search in log T.
fn fit_exponential(t: &[f64], y: &[f64], duration: f64, method: FitMethod) -> Result<DecayFit, FitError> {
    let n = t.len();
    let limit = 100.0 * duration;
    let lo = t.windows(2).map(|w| w[1] - w[0]).filter(|d| *d > 0.0).fold(f64::INFINITY, f64::min);
    if !(lo.is_finite() && limit > lo) {
        return Err(FitError::NonFinite);
    }
    let cost = |log_t: f64| solve_linear(t, y, log_t.exp()).2;
    let (a, b) = (lo.ln(), limit.ln());
    let step = (b - a) / GRID as f64;
    let mut best = (0, f64::INFINITY);
    for k in 0..=GRID {
        let c = cost(a + k as f64 * step);
        if c < best.1 {
            best = (k, c);
        }
    }
    // the 1/e crossing is tried as a starting point alongside the grid
    let t0 = first_crossing(t, y).clamp(lo, limit);
    if cost(t0.ln()) < best.1 {
        best = ((((t0.ln() - a) / step).round() as usize).min(GRID), cost(t0.ln()));
    }
    let (mut x0, mut x1) = (a + best.0.saturating_sub(1) as f64 * step, a + (best.0 + 1).min(GRID) as f64 * step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = x1 - g * (x1 - x0);
    let mut d = x0 + g * (x1 - x0);
    let (mut fc, mut fd) = (cost(c), cost(d));
    for _ in 0..100 {
        if (x1 - x0).abs() < 1e-12 {
            break;
        }
        if fc < fd {
            x1 = d;
            d = c;
            fd = fc;
            c = x1 - g * (x1 - x0);
            fc = cost(c);
        } else {
            x0 = c;
            c = d;
            fc = fd;
            d = x0 + g * (x1 - x0);
            fd = cost(d);
        }
    }
    let t_decay = (0.5 * (x0 + x1)).exp();
    let (amplitude, offset, ssr) = solve_linear(t, y, t_decay);
    let residual_rms = (ssr / n as f64).sqrt();
    if !(t_decay.is_finite() && amplitude.is_finite() && offset.is_finite()) {
        return Err(FitError::NonFinite);
    }
    if t_decay >= limit * 0.999 || t_decay <= lo * 1.001 {
        return Err(FitError::OutOfRange {
            t_decay,
            limit,
            residual_rms,
        });
    }
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if amplitude.abs() <= 3.0 * residual_rms.max(1e-12 * scale) {
        return Err(FitError::NoSignificantDecay {
            amplitude,
            residual_rms,
        });
    }
    Ok(DecayFit {
        t_decay,
        amplitude,
        offset,
        residual_rms,
        t_stderr: t_stderr(t, amplitude, t_decay, ssr),
        method,
    })
}

/// sqrt of the T diagonal of s²·(JᵀJ)⁻¹ for parameters (A, B, T).
fn t_stderr(t: &[f64], a: f64, tau: f64, ssr: f64) -> f64 {
    let n = t.len();
    if n <= 3 {
        return f64::NAN;
    }
    let mut m = [[0.0; 3]; 3];
    for &ti in t {
        let e = (-ti / tau).exp();
        let j = [e, 1.0, a * ti / (tau * tau) * e];
        for r in 0..3 {
            for c in 0..3 {
                m[r][c] += j[r] * j[c];
            }
        }
    }
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if det.abs() < f64::MIN_POSITIVE {
        return f64::NAN;
    }
    let inv22 = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
    let s2 = ssr / (n - 3) as f64;
    (s2 * inv22).max(0.0).sqrt()
}

/// Fluorescence contrast (r1 − r2)/(r1 + r2).
pub fn contrast(r1: f64, r2: f64) -> Result<f64> {
    if !(r1.is_finite() && r2.is_finite()) {
        return Err(Error::invalid("non-finite ratio"));
    }
    let sum = r1 + r2;
    if sum <= 0.0 {
        return Err(Error::invalid(format!("r1 + r2 must be > 0, got {sum}")));
    }
    Ok((r1 - r2) / sum)
}

/// First time at which `values − floor` falls to 1/e of its initial value,
/// linearly interpolated. `None` if it never does.
pub fn one_over_e_time(times: &[f64], values: &[f64], floor: f64) -> Option<f64> {
    let start = *values.first()? - floor;
    let target = start / std::f64::consts::E;
    for i in 1..times.len().min(values.len()) {
        let (v0, v1) = (values[i - 1] - floor, values[i] - floor);
        if v1 <= target {
            let frac = if v0 == v1 { 0.0 } else { (v0 - target) / (v0 - v1) };
            return Some(times[i - 1] + frac * (times[i] - times[i - 1]));
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanPoint {
    pub alpha: f64,
    pub fit: Result<DecayFit, FitError>,
}

/// Decay time against modulation strength.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaScanResult {
    pub init_axis: Axis,
    pub points: Vec<ScanPoint>,
}

impl AlphaScanResult {
    pub fn alphas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.alpha).collect()
    }

    /// Fitted decay times; `None` where the fit failed.
    pub fn t_decay(&self) -> Vec<Option<f64>> {
        self.points.iter().map(|p| p.fit.as_ref().ok().map(|f| f.t_decay)).collect()
    }

    pub fn stderr(&self) -> Vec<Option<f64>> {
        self.points.iter().map(|p| p.fit.as_ref().ok().map(|f| f.t_stderr)).collect()
    }

    /// Point with the longest fitted decay.
    pub fn best(&self) -> Option<(f64, f64)> {
        self.points
            .iter()
            .filter_map(|p| p.fit.as_ref().ok().map(|f| (p.alpha, f.t_decay)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// `alpha,T_decay_us,stderr,fit_residual,status`. Failed fits leave the
    /// numeric columns empty and name the failure in `status`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "alpha,T_decay_us,stderr,fit_residual,status")?;
        for p in &self.points {
            match &p.fit {
                Ok(f) => writeln!(
                    w,
                    "{:.16e},{:.16e},{:.16e},{:.16e},0",
                    p.alpha, f.t_decay, f.t_stderr, f.residual_rms
                )?,
                Err(e) => {
                    let residual = match e {
                        FitError::NoSignificantDecay { residual_rms, .. }
                        | FitError::OutOfRange { residual_rms, .. } => format!("{residual_rms:.16e}"),
                        _ => String::new(),
                    };
                    writeln!(w, "{:.16e},,,{residual},{}", p.alpha, status_code(e))?
                }
            }
        }
        Ok(())
    }
}

/// Nonzero status for each kind of fit failure.
pub fn status_code(e: &FitError) -> u8 {
    match e {
        FitError::TooFewPoints { .. } => 1,
        FitError::NotOscillating { .. } => 2,
        FitError::NoSignificantDecay { .. } => 3,
        FitError::OutOfRange { .. } => 4,
        FitError::NonFinite => 5,
    }
}

fn check_alphas(alphas: &[f64]) -> Result<()> {
    if alphas.is_empty() {
        return Err(Error::config("scan.alphas", "empty alpha list"));
    }
    if alphas.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
        return Err(Error::config("scan.alphas", "alphas must be finite and >= 0"));
    }
    if alphas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("scan.alphas", "alphas must be strictly increasing"));
    }
    Ok(())
}

/// Modulated scheme of strength `alpha`, phase modulation unless the base
/// scheme already modulates.
fn modulated(base: &DriveScheme, alpha: f64) -> DriveScheme {
    match base {
        DriveScheme::SingleDrive { rabi_mhz } => DriveScheme::PhaseMod {
            rabi_mhz: *rabi_mhz,
            alpha,
        },
        other => other.with_alpha(alpha),
    }
}

/// Runs one ensemble per alpha with the same master seed, so the noise
/// realizations are shared across the scan. A failed fit is recorded and
/// the scan continues; simulation errors abort it.
pub fn scan_alpha(base: &SimulationConfig, alphas: &[f64], init_axis: Axis) -> Result<AlphaScanResult> {
    check_alphas(alphas)?;
    let method = FitMethod::for_axis(init_axis);
    let mut points = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let mut cfg = base.clone();
        cfg.scheme = modulated(&base.scheme, alpha);
        cfg.init_axis = init_axis;
        let curve = ensemble_curve(&cfg)?;
        let fit = fit_decay(&curve, method);
        match &fit {
            Ok(f) => log::info!("alpha {alpha}: T = {:.4} ± {:.4} µs", f.t_decay, f.t_stderr),
            Err(e) => log::warn!("alpha {alpha}: fit failed: {e}"),
        }
        points.push(ScanPoint { alpha, fit });
    }
    Ok(AlphaScanResult { init_axis, points })
}

/// Phase- and amplitude-modulated curves on identical noise realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeComparison {
    pub phase: DecoherenceCurve,
    pub amplitude: DecoherenceCurve,
    pub max_abs_diff: f64,
}

impl SchemeComparison {
    /// Largest |ΔF| in units of the pooled standard error
    /// sqrt(se_p² + se_a²), skipping points where both errors vanish.
    pub fn max_pooled_z(&self) -> f64 {
        let (p, a) = (&self.phase, &self.amplitude);
        (0..p.len())
            .filter_map(|i| {
                let pooled = (p.stderr[i].powi(2) + a.stderr[i].powi(2)).sqrt();
                let d = (p.fidelity[i] - a.fidelity[i]).abs();
                if pooled > 0.0 {
                    Some(d / pooled)
                } else if d > 0.0 {
                    Some(f64::INFINITY)
                } else {
                    None
                }
            })
            .fold(0.0, f64::max)
    }
}

pub fn compare_schemes(base: &SimulationConfig, alpha: f64) -> Result<SchemeComparison> {
    check_alphas(&[alpha])?;
    let rabi_mhz = base.scheme.rabi_mhz();
    let mut cfg = base.clone();
    cfg.scheme = DriveScheme::PhaseMod { rabi_mhz, alpha };
    let phase = ensemble_curve(&cfg)?;
    cfg.scheme = DriveScheme::AmpMod { rabi_mhz, alpha };
    let amplitude = ensemble_curve(&cfg)?;
    let max_abs_diff = phase
        .fidelity
        .iter()
        .zip(&amplitude.fidelity)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(SchemeComparison {
        phase,
        amplitude,
        max_abs_diff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid(n: usize, dt: f64) -> Vec<f64> {
        (0..n).map(|k| k as f64 * dt).collect()
    }

    #[test]
    fn recovers_own_model() {
        let t = grid(200, 0.1);
        let y: Vec<f64> = t.iter().map(|t| (-t / 5.0).exp()).collect();
        let f = fit_decay_samples(&t, &y, FitMethod::PlainExp).unwrap();
        assert_abs_diff_eq!(f.t_decay, 5.0, epsilon = 1e-3);
        assert_abs_diff_eq!(f.amplitude, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(f.offset, 0.0, epsilon = 1e-6);
    }

    #[test]
    fn envelope_of_rabi_curve() {
        let t = grid(4000, 0.001);
        let w = std::f64::consts::TAU * 9.0;
        let y: Vec<f64> = t.iter().map(|t| 0.5 + 0.5 * (-t / 0.81).exp() * (w * t).cos()).collect();
        let f = fit_decay_samples(&t, &y, FitMethod::EnvelopeExp).unwrap();
        assert!((f.t_decay / 0.81 - 1.0).abs() < 0.05, "T = {}", f.t_decay);
    }

    #[test]
    fn failure_modes() {
        let t = grid(5, 1.0);
        assert_eq!(
            fit_decay_samples(&t, &[1.0; 5], FitMethod::PlainExp),
            Err(FitError::TooFewPoints { needed: 10, got: 5 })
        );
        let t = grid(50, 1.0);
        let flat = vec![0.7; 50];
        assert!(fit_decay_samples(&t, &flat, FitMethod::PlainExp).is_err());
        let mono: Vec<f64> = t.iter().map(|t| (-t / 10.0).exp()).collect();
        assert!(matches!(
            fit_decay_samples(&t, &mono, FitMethod::EnvelopeExp),
            Err(FitError::NotOscillating { .. })
        ));
        let mut bad = mono.clone();
        bad[3] = f64::NAN;
        assert_eq!(fit_decay_samples(&t, &bad, FitMethod::PlainExp), Err(FitError::NonFinite));
    }

    #[test]
    fn contrast_examples() {
        assert_eq!(contrast(0.3, 0.3).unwrap(), 0.0);
        assert_eq!(contrast(0.3, 0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(contrast(0.2, 0.7).unwrap(), -contrast(0.7, 0.2).unwrap());
        assert!(contrast(0.0, 0.0).is_err());
        assert!(contrast(-1.0, 0.5).is_err());
    }

    #[test]
    fn one_over_e_interpolates() {
        let t = grid(1000, 0.01);
        let y: Vec<f64> = t.iter().map(|t| 0.5 + 0.5 * (-t / 2.0).exp()).collect();
        assert_abs_diff_eq!(one_over_e_time(&t, &y, 0.5).unwrap(), 2.0, epsilon = 1e-4);
        assert_eq!(one_over_e_time(&t, &vec![1.0; 1000], 0.0), None);
    }

    #[test]
    fn alpha_list_validation() {
        let base = SimulationConfig::published_defaults();
        for bad in [&[][..], &[0.1, 0.1][..], &[0.2, 0.1][..], &[-0.1][..]] {
            match scan_alpha(&base, bad, Axis::Y) {
                Err(Error::Config { key, .. }) => assert_eq!(key, "scan.alphas"),
                other => panic!("unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn csv_row_for_failed_fit() {
        let r = AlphaScanResult {
            init_axis: Axis::Y,
            points: vec![ScanPoint {
                alpha: 0.5,
                fit: Err(FitError::NotOscillating { peaks: 1 }),
            }],
        };
        let mut out = Vec::new();
        r.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "5.0000000000000000e-1,,,,2");
    }
}
