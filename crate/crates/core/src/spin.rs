//! Pure two-level states and the exact propagator for piecewise-constant
//! Hamiltonians written in the Pauli basis.

use num_complex::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;

use crate::{Error, Result};

const NORM_TOL: f64 = 1e-10;

/// Pure state a0|0⟩ + a1|1⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinState {
    a0: Complex64,
    a1: Complex64,
}

/// H = h0·I + hx·σx + hy·σy + hz·σz, coefficients in rad/µs.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PauliVector {
    pub h0: f64,
    pub hx: f64,
    pub hy: f64,
    pub hz: f64,
}

/// Expectation values (⟨σx⟩, ⟨σy⟩, ⟨σz⟩).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Bloch-sphere axis used for state preparation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(Error::invalid(format!("unknown axis `{other}`"))),
        }
    }
}

impl SpinState {
    /// Builds a state from its amplitudes. The pair must already be
    /// normalized; nothing here rescales it.
    pub fn new(a0: Complex64, a1: Complex64) -> Result<Self> {
        if !(a0.re.is_finite() && a0.im.is_finite() && a1.re.is_finite() && a1.im.is_finite()) {
            return Err(Error::invalid("non-finite spin amplitude"));
        }
        let s = SpinState { a0, a1 };
        if (s.norm_sqr() - 1.0).abs() > NORM_TOL {
            return Err(Error::invalid(format!(
                "spin state not normalized (|a0|²+|a1|² = {})",
                s.norm_sqr()
            )));
        }
        Ok(s)
    }

    pub fn ground() -> Self {
        SpinState {
            a0: Complex64::new(1.0, 0.0),
            a1: Complex64::new(0.0, 0.0),
        }
    }

    pub fn excited() -> Self {
        SpinState {
            a0: Complex64::new(0.0, 0.0),
            a1: Complex64::new(1.0, 0.0),
        }
    }

    /// +1 eigenstate of σx, σy or σz.
    pub fn along(axis: Axis) -> Self {
        let h = FRAC_1_SQRT_2;
        match axis {
            Axis::X => SpinState {
                a0: Complex64::new(h, 0.0),
                a1: Complex64::new(h, 0.0),
            },
            Axis::Y => SpinState {
                a0: Complex64::new(h, 0.0),
                a1: Complex64::new(0.0, h),
            },
            Axis::Z => Self::ground(),
        }
    }

    pub fn amplitudes(&self) -> (Complex64, Complex64) {
        (self.a0, self.a1)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.a0.norm_sqr() + self.a1.norm_sqr()
    }

    pub fn to_bloch(&self) -> BlochVector {
        let c = self.a0.conj() * self.a1;
        BlochVector {
            x: 2.0 * c.re,
            y: 2.0 * c.im,
            z: self.a0.norm_sqr() - self.a1.norm_sqr(),
        }
    }

    pub fn overlap(&self, other: &SpinState) -> Complex64 {
        self.a0.conj() * other.a0 + self.a1.conj() * other.a1
    }

    /// |⟨self|other⟩|².
    pub fn fidelity(&self, other: &SpinState) -> f64 {
        self.overlap(other).norm_sqr().min(1.0)
    }

    /// Applies the 2×2 matrix [[u00, u01], [u10, u11]].
    #[inline]
    pub(crate) fn apply(&self, u: &Unitary) -> SpinState {
        SpinState {
            a0: u.m[0][0] * self.a0 + u.m[0][1] * self.a1,
            a1: u.m[1][0] * self.a0 + u.m[1][1] * self.a1,
        }
    }
}

/// Free-function form of [`SpinState::to_bloch`].
pub fn to_bloch(state: &SpinState) -> BlochVector {
    state.to_bloch()
}

/// Free-function form of [`SpinState::fidelity`].
pub fn fidelity(a: &SpinState, b: &SpinState) -> f64 {
    a.fidelity(b)
}

impl PauliVector {
    pub const ZERO: PauliVector = PauliVector {
        h0: 0.0,
        hx: 0.0,
        hy: 0.0,
        hz: 0.0,
    };

    pub fn new(h0: f64, hx: f64, hy: f64, hz: f64) -> Self {
        PauliVector { h0, hx, hy, hz }
    }

    pub fn is_finite(&self) -> bool {
        self.h0.is_finite() && self.hx.is_finite() && self.hy.is_finite() && self.hz.is_finite()
    }

    /// Euclidean norm of the traceless part (hx, hy, hz).
    pub fn field_norm(&self) -> f64 {
        (self.hx * self.hx + self.hy * self.hy + self.hz * self.hz).sqrt()
    }

    pub fn scaled(&self, k: f64) -> PauliVector {
        PauliVector {
            h0: self.h0 * k,
            hx: self.hx * k,
            hy: self.hy * k,
            hz: self.hz * k,
        }
    }
}

impl std::ops::Add for PauliVector {
    type Output = PauliVector;

    fn add(self, o: PauliVector) -> PauliVector {
        PauliVector {
            h0: self.h0 + o.h0,
            hx: self.hx + o.hx,
            hy: self.hy + o.hy,
            hz: self.hz + o.hz,
        }
    }
}

impl BlochVector {
    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(&self, o: &BlochVector) -> f64 {
        let (dx, dy, dz) = (self.x - o.x, self.y - o.y, self.z - o.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn dot(&self, o: &BlochVector) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }
}

/// A 2×2 unitary in row-major order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary {
    pub m: [[Complex64; 2]; 2],
}

impl Unitary {
    /// exp(−i·H·dt) in closed form:
    /// e^{−i h0 dt} [cos(|a|dt)·I − i sin(|a|dt)·(â·σ)].
    #[inline]
    pub fn exp(h: &PauliVector, dt: f64) -> Unitary {
        let norm = h.field_norm();
        let theta = norm * dt;
        let (sin_t, cos_t) = theta.sin_cos();
        // sin(|a|dt)/|a| without dividing by zero
        let s = if norm > 0.0 { sin_t / norm } else { dt };
        let phase = Complex64::from_polar(1.0, -h.h0 * dt);
        let d0 = Complex64::new(cos_t, -s * h.hz);
        let d1 = Complex64::new(cos_t, s * h.hz);
        // −i·s·(hx ∓ i hy)
        let off01 = Complex64::new(-s * h.hy, -s * h.hx);
        let off10 = Complex64::new(s * h.hy, -s * h.hx);
        Unitary {
            m: [[phase * d0, phase * off01], [phase * off10, phase * d1]],
        }
    }
}

/// Propagates `state` through one step of the constant Hamiltonian `h`.
pub fn propagate_step(state: &SpinState, h: &PauliVector, dt: f64) -> Result<SpinState> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid(format!("time step must be positive and finite, got {dt}")));
    }
    if !h.is_finite() {
        return Err(Error::invalid("non-finite Hamiltonian coefficient"));
    }
    Ok(state.apply(&Unitary::exp(h, dt)))
}
