use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

/// Phase-space center of a harmonic-oscillator coherent state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentLabel {
    pub q: f64,
    pub p: f64,
}

impl CoherentLabel {
    pub fn new(q: f64, p: f64) -> Self {
        Self { q, p }
    }

    /// Eigenvalue of the annihilation-like coordinate fixed at the initial time, `(p - iq)/sqrt(2)`.
    pub fn big_p(&self) -> Complex64 {
        Complex64::new(self.p, -self.q) * FRAC_1_SQRT_2
    }

    /// Eigenvalue of the creation-like coordinate fixed at the final time, `(q - ip)/sqrt(2)`.
    pub fn big_q(&self) -> Complex64 {
        Complex64::new(self.q, -self.p) * FRAC_1_SQRT_2
    }

    /// Recovers `(q, p)` from the `P` label.
    pub fn from_big_p(big_p: Complex64) -> Self {
        let z = big_p / FRAC_1_SQRT_2;
        Self { q: -z.im, p: z.re }
    }

    /// Recovers `(q, p)` from the `Q` label.
    pub fn from_big_q(big_q: Complex64) -> Self {
        let z = big_q / FRAC_1_SQRT_2;
        Self { q: z.re, p: -z.im }
    }

    pub fn is_finite(&self) -> bool {
        self.q.is_finite() && self.p.is_finite()
    }
}

/// Orientation of a spin coherent state on the Bloch sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinLabel {
    pub theta: f64,
    pub phi: f64,
}

impl SpinLabel {
    /// Accepts `theta` in `[0, pi)` and wraps `phi` into `[0, 2 pi)`.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !theta.is_finite() || !phi.is_finite() {
            return Err(Error::InvalidArgument("spin angles must be finite".into()));
        }
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::InvalidArgument(format!("theta = {theta} outside [0, pi]")));
        }
        if theta == PI {
            return Err(Error::Pole);
        }
        Ok(Self { theta, phi: phi.rem_euclid(TAU) })
    }

    /// Bloch vector `(sin t cos f, sin t sin f, cos t)`.
    pub fn bloch_vector(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sf, cf) = self.phi.sin_cos();
        [st * cf, st * sf, ct]
    }
}

/// `e^{i phi} tan(theta / 2)`.
pub fn spin_stereographic(label: SpinLabel) -> Result<Complex64> {
    if label.theta >= PI {
        return Err(Error::Pole);
    }
    Ok(Complex64::from_polar((label.theta / 2.0).tan(), label.phi))
}
