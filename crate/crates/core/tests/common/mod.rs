//! Independent reference calculations used by the integration tests.
#![allow(dead_code)]

use num_complex::Complex64;
use std::f64::consts::PI;

pub type Mat2 = [[Complex64; 2]; 2];

fn matmul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

/// exp(−i·H·dt) by scaling and squaring a truncated Taylor series.
pub fn expm_taylor(h0: f64, hx: f64, hy: f64, hz: f64, dt: f64) -> Mat2 {
    let i = Complex64::new(0.0, 1.0);
    let hm: Mat2 = [
        [Complex64::new(h0 + hz, 0.0), Complex64::new(hx, 0.0) - i * hy],
        [Complex64::new(hx, 0.0) + i * hy, Complex64::new(h0 - hz, 0.0)],
    ];
    let norm = (h0.abs() + (hx * hx + hy * hy + hz * hz).sqrt()) * dt.abs();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scale = dt / 2f64.powi(squarings as i32);
    let mut a = [[Complex64::new(0.0, 0.0); 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            a[r][c] = -i * hm[r][c] * scale;
        }
    }
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut sum: Mat2 = [[one, zero], [zero, one]];
    let mut term = sum;
    for k in 1..30 {
        term = matmul(&term, &a);
        for r in 0..2 {
            for c in 0..2 {
                term[r][c] /= k as f64;
            }
        }
        for r in 0..2 {
            for c in 0..2 {
                sum[r][c] += term[r][c];
            }
        }
    }
    for _ in 0..squarings {
        sum = matmul(&sum, &sum);
    }
    sum
}

/// Variance of the echo-weighted integral of an OU process with
/// ⟨f(t)f(t')⟩ = (cτ/2)e^{−|t−t'|/τ}, π pulse at t/2.
pub fn echo_chi(c: f64, tau: f64, t: f64) -> f64 {
    c * tau * tau * (t - tau * (3.0 + (-t / tau).exp() - 4.0 * (-t / (2.0 * tau)).exp()))
}

/// Variance of ∫₀ᵗ f for the same process.
pub fn free_chi(c: f64, tau: f64, t: f64) -> f64 {
    c * tau * tau * (t / tau - 1.0 + (-t / tau).exp())
}

/// Echo coherence for a σz coefficient f: the relative phase is 2∫f.
pub fn echo_coherence(c: f64, tau: f64, t: f64) -> f64 {
    (-2.0 * echo_chi(c, tau, t)).exp()
}

/// Echo 1/e time by bisection on the closed form.
pub fn echo_one_over_e(c: f64, tau: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    while echo_coherence(c, tau, hi) > (-1.0f64).exp() {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if echo_coherence(c, tau, mid) > (-1.0f64).exp() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Free-induction fidelity of a transverse state dephased by the hyperfine
/// mixture (σz coefficient π·Δ) and an OU bath.
pub fn fid_fidelity(centers: &[f64], weights: &[f64], width: f64, c: f64, tau: f64, t: f64) -> f64 {
    let line = (-0.5 * (2.0 * PI * width * t).powi(2)).exp();
    let beat: f64 = centers
        .iter()
        .zip(weights)
        .map(|(c0, w)| w * (2.0 * PI * c0 * t).cos())
        .sum();
    0.5 * (1.0 + beat * line * (-2.0 * free_chi(c, tau, t)).exp())
}

/// Envelope of the same curve with each line demodulated.
pub fn fid_envelope(width: f64, c: f64, tau: f64, t: f64) -> f64 {
    (-0.5 * (2.0 * PI * width * t).powi(2)).exp() * (-2.0 * free_chi(c, tau, t)).exp()
}
