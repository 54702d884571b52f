use super::operators::{CVector, HilbertSpec};
use crate::error::{Error, Result};
use crate::model::{Boundary, CoherentLabel, SpinLabel};
use num_complex::Complex64;

/// Largest coherent-state weight that may fall outside the truncated space.
pub const TAIL_TOLERANCE: f64 = 1e-14;

/// Guard levels added on top of the tail criterion for operator action.
pub const FOCK_GUARD_LEVELS: usize = 8;

/// Oscillator amplitude `(q + ip)/sqrt(2 hbar)`, so that `<q> = q` and `<p> = p`.
pub fn coherent_amplitude(label: CoherentLabel, hbar: f64) -> Complex64 {
    Complex64::new(label.q, label.p) / (2.0 * hbar).sqrt()
}

/// Poisson tail `e^-x sum_{n >= dim} x^n / n!` with `x = |alpha|^2`.
pub fn coherent_tail(mean_occupation: f64, dim: usize) -> f64 {
    let x = mean_occupation;
    if x == 0.0 {
        return if dim == 0 { 1.0 } else { 0.0 };
    }
    let ln_x = x.ln();
    let ln_term = |n: usize| -x + n as f64 * ln_x - statrs::function::gamma::ln_gamma(n as f64 + 1.0);
    let mut total = 0.0;
    let mut n = dim;
    loop {
        let term = ln_term(n).exp();
        total += term;
        // past the Poisson peak the terms fall off geometrically
        if n as f64 > x && term <= total * 1e-17 {
            break;
        }
        if n > dim + 100_000 {
            break;
        }
        n += 1;
    }
    total.min(1.0)
}

/// Smallest dimension whose dropped tail stays below [`TAIL_TOLERANCE`] for every label.
pub fn fock_dim_for_tail(labels: &[CoherentLabel], hbar: f64) -> usize {
    let max_occ = labels
        .iter()
        .map(|&l| coherent_amplitude(l, hbar).norm_sqr())
        .fold(0.0, f64::max);
    let mut dim = 1;
    while coherent_tail(max_occ, dim) >= TAIL_TOLERANCE {
        dim += 1;
    }
    dim
}

/// Tail-criterion dimension plus guard levels, never below `min_dim`.
pub fn fock_space_for(labels: &[CoherentLabel], hbar: f64, min_dim: usize) -> HilbertSpec {
    let dim = (fock_dim_for_tail(labels, hbar) + FOCK_GUARD_LEVELS).max(min_dim);
    HilbertSpec::Fock { dim }
}

pub fn coherent_state(label: CoherentLabel, dim: usize, hbar: f64) -> Result<CVector> {
    let alpha = coherent_amplitude(label, hbar);
    let tail = coherent_tail(alpha.norm_sqr(), dim);
    if tail > TAIL_TOLERANCE {
        return Err(Error::Tail { dim, tail });
    }
    let mut v = CVector::zeros(dim);
    let mut c = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..dim {
        v[n] = c;
        c = c * alpha / ((n + 1) as f64).sqrt();
    }
    let norm = v.norm();
    Ok(v / Complex64::new(norm, 0.0))
}

/// `(cos(theta/2), e^{i phi} sin(theta/2))` in the `{up, down}` basis.
pub fn spin_state(label: SpinLabel) -> CVector {
    let (s, c) = (label.theta / 2.0).sin_cos();
    CVector::from_vec(vec![Complex64::new(c, 0.0), Complex64::from_polar(s, label.phi)])
}

/// Builds `(|pre>, |post>)` for a boundary in the given space.
pub fn state_vectors(boundary: &Boundary, space: HilbertSpec, hbar: f64) -> Result<(CVector, CVector)> {
    match (boundary, space) {
        (Boundary::Spin { pre, post }, HilbertSpec::Qubit) => Ok((spin_state(*pre), spin_state(*post))),
        (Boundary::Coherent { pre, post }, HilbertSpec::Fock { dim }) => {
            Ok((coherent_state(*pre, dim, hbar)?, coherent_state(*post, dim, hbar)?))
        }
        (Boundary::Position { .. }, _) => Err(Error::UnsupportedBoundary("position")),
        (Boundary::Spin { .. }, _) => Err(Error::InvalidArgument("spin boundaries need a qubit space".into())),
        (Boundary::Coherent { .. }, _) => {
            Err(Error::InvalidArgument("coherent boundaries need a fock space".into()))
        }
    }
}
