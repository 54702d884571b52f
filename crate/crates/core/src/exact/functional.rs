//! Transition amplitudes with a source term and the weak value as their
//! logarithmic derivative.

use super::operators::{CVector, HilbertSpec, OperatorMatrix};
use super::{ExactSystem, Propagator};
use crate::error::{Error, Result};
use crate::model::{Method, Scenario, WeakValueResult};
use num_complex::Complex64;
use std::f64::consts::FRAC_PI_2;

/// One interval of constant source strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceBin {
    pub t_lo: f64,
    pub t_hi: f64,
    pub strength: f64,
}

/// Piecewise-constant source profile; no bins means a vanishing source.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SourceProfile {
    bins: Vec<SourceBin>,
}

impl SourceProfile {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(mut bins: Vec<SourceBin>) -> Result<Self> {
        bins.sort_by(|a, b| a.t_lo.total_cmp(&b.t_lo));
        for b in &bins {
            if !(b.t_lo.is_finite() && b.t_hi.is_finite() && b.strength.is_finite()) || b.t_hi <= b.t_lo {
                return Err(Error::InvalidArgument(format!("malformed source bin {b:?}")));
            }
        }
        for pair in bins.windows(2) {
            if pair[1].t_lo < pair[0].t_hi {
                return Err(Error::InvalidArgument("source bins overlap".into()));
            }
        }
        Ok(Self { bins })
    }

    pub fn single(t_lo: f64, t_hi: f64, strength: f64) -> Result<Self> {
        Self::new(vec![SourceBin { t_lo, t_hi, strength }])
    }

    pub fn bins(&self) -> &[SourceBin] {
        &self.bins
    }

    fn strength_at(&self, t: f64) -> f64 {
        self.bins
            .iter()
            .find(|b| b.t_lo <= t && t < b.t_hi)
            .map_or(0.0, |b| b.strength)
    }
}

/// Applies the time-ordered product of `exp(-i dt (H - s A)/hbar)` over `segments`
/// (earliest first) to `|pre>` and projects on `<post|`.
fn ordered_amplitude(sys: &ExactSystem, a: &OperatorMatrix, segments: &[(f64, f64)]) -> Result<Complex64> {
    let mut state: CVector = sys.pre().clone();
    let mut cache: Vec<(u64, Propagator)> = Vec::new();
    for &(duration, strength) in segments {
        if duration == 0.0 {
            continue;
        }
        let key = strength.to_bits();
        let idx = match cache.iter().position(|(k, _)| *k == key) {
            Some(i) => i,
            None => {
                let generator = sys.hamiltonian().add(&a.scale(Complex64::new(-strength, 0.0)));
                cache.push((key, Propagator::new(&generator, sys.hbar())?));
                cache.len() - 1
            }
        };
        state = cache[idx].1.evolve(&state, duration);
    }
    Ok(sys.post().dotc(&state))
}

/// `<post| T prod_k exp(-i dt (H - zeta_k A)/hbar) |pre>` on an `n_steps` uniform grid.
///
/// Every bin edge must fall on a grid node. Each step is an exact exponential of
/// its constant generator, so `H` and `A` need not commute.
pub fn generating_functional(
    scenario: &Scenario,
    a: &OperatorMatrix,
    zeta: &SourceProfile,
    space: HilbertSpec,
    n_steps: usize,
) -> Result<Complex64> {
    let sys = ExactSystem::new(scenario, space)?;
    generating_functional_for(&sys, a, zeta, n_steps)
}

pub(crate) fn generating_functional_for(
    sys: &ExactSystem,
    a: &OperatorMatrix,
    zeta: &SourceProfile,
    n_steps: usize,
) -> Result<Complex64> {
    if n_steps == 0 {
        return Err(Error::InvalidArgument("n_steps must be positive".into()));
    }
    if a.dim() != sys.space().dim() {
        return Err(Error::InvalidArgument("observable dimension mismatch".into()));
    }
    let (t0, t1) = sys.window();
    let dt = (t1 - t0) / n_steps as f64;
    for b in zeta.bins() {
        if b.t_lo < t0 || b.t_hi > t1 {
            return Err(Error::InvalidArgument(format!(
                "source bin [{}, {}] leaves the window [{t0}, {t1}]",
                b.t_lo, b.t_hi
            )));
        }
        for edge in [b.t_lo, b.t_hi] {
            let k = (edge - t0) / dt;
            if (k - k.round()).abs() > 1e-9 * (1.0 + k.abs()) {
                return Err(Error::Alignment { lo: b.t_lo, hi: b.t_hi, n_steps });
            }
        }
    }
    // run-length encode the per-step strengths
    let mut segments: Vec<(f64, f64)> = Vec::new();
    for k in 0..n_steps {
        let mid = t0 + (k as f64 + 0.5) * dt;
        let s = zeta.strength_at(mid);
        match segments.last_mut() {
            Some((len, last)) if *last == s => *len += 1.0,
            _ => segments.push((1.0, s)),
        }
    }
    let segments: Vec<(f64, f64)> = segments.into_iter().map(|(n, s)| (n * dt, s)).collect();
    ordered_amplitude(sys, a, &segments)
}

/// Weak value from the logarithmic derivative of the generating functional.
///
/// The source `+-epsilon` acts on the bin `[t - w/2, t + w/2]`; the estimate is
/// `-i hbar (ln Z(+eps) - ln Z(-eps)) / (2 eps w)`, the bin average of `W(A, .)`.
pub fn weak_value_via_gf(
    scenario: &Scenario,
    a: &OperatorMatrix,
    t: f64,
    space: HilbertSpec,
    epsilon: f64,
    bin_width: f64,
) -> Result<WeakValueResult> {
    let sys = ExactSystem::new(scenario, space)?;
    weak_value_via_gf_for(&sys, a, t, epsilon, bin_width)
}

pub(crate) fn weak_value_via_gf_for(
    sys: &ExactSystem,
    a: &OperatorMatrix,
    t: f64,
    epsilon: f64,
    bin_width: f64,
) -> Result<WeakValueResult> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(bin_width.is_finite() && bin_width > 0.0) {
        return Err(Error::InvalidArgument(format!("bin width must be positive, got {bin_width}")));
    }
    if a.dim() != sys.space().dim() {
        return Err(Error::InvalidArgument("observable dimension mismatch".into()));
    }
    let (t0, t1) = sys.window();
    let lo = t - bin_width / 2.0;
    let hi = t + bin_width / 2.0;
    let slack = 1e-12 * (t1 - t0);
    if lo < t0 - slack || hi > t1 + slack {
        return Err(Error::InvalidArgument(format!(
            "source bin [{lo}, {hi}] leaves the window [{t0}, {t1}]"
        )));
    }
    let lo = lo.max(t0);
    let hi = hi.min(t1);
    let width = hi - lo;
    let z = |s: f64| ordered_amplitude(sys, a, &[(lo - t0, 0.0), (width, s), (t1 - hi, 0.0)]);
    let z_plus = z(epsilon)?;
    let z_zero = z(0.0)?;
    let z_minus = z(-epsilon)?;
    if z_plus.norm() == 0.0 || z_zero.norm() == 0.0 || z_minus.norm() == 0.0 {
        return Err(Error::LogBranch);
    }
    // each half-step ratio must stay near 1 for the principal log to follow the path
    let up = z_plus / z_zero;
    let down = z_zero / z_minus;
    if up.arg().abs() > FRAC_PI_2 || down.arg().abs() > FRAC_PI_2 {
        return Err(Error::LogBranch);
    }
    let dlog = up.ln() + down.ln();
    let value = Complex64::new(0.0, -sys.hbar()) * dlog / (2.0 * epsilon * width);
    Ok(WeakValueResult::new(value, t, Method::GeneratingFunctional, z_zero.norm())
        .with("epsilon", epsilon)
        .with("bin_width", width))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{build_operator, default_space, weak_value_exact};
    use crate::model::{CoherentLabel, PolynomialSymbol, SpinLabel};
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn aav_scenario(alpha: f64) -> Scenario {
        Scenario::spin(
            SpinLabel::new(2.0 * alpha, 0.0).unwrap(),
            SpinLabel::new(PI / 2.0, PI).unwrap(),
            0.0,
            1.0,
        )
        .unwrap()
    }

    fn harmonic_scenario() -> Scenario {
        Scenario::coherent(
            CoherentLabel::new(1.0, 0.0),
            CoherentLabel::new(0.3, -0.8),
            PolynomialSymbol::harmonic(),
            1.0,
            0.0,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn profile_validation() {
        assert!(SourceProfile::new(vec![
            SourceBin { t_lo: 0.0, t_hi: 0.5, strength: 1.0 },
            SourceBin { t_lo: 0.4, t_hi: 0.6, strength: 1.0 },
        ])
        .is_err());
        assert!(SourceProfile::single(0.5, 0.5, 1.0).is_err());
    }

    #[test]
    fn empty_source_is_bare_overlap() {
        let s = aav_scenario(PI / 6.0);
        let z = generating_functional(&s, &OperatorMatrix::pauli_z(), &SourceProfile::empty(), HilbertSpec::Qubit, 7)
            .unwrap();
        let alpha = PI / 6.0;
        let overlap = (alpha.cos() - alpha.sin()) / 2f64.sqrt();
        assert!((z - c(overlap, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn empty_source_matches_transition_amplitude() {
        let s = harmonic_scenario();
        let space = default_space(&s, &[&PolynomialSymbol::q()]).unwrap();
        let q = build_operator(&PolynomialSymbol::q(), space, 1.0).unwrap();
        let z = generating_functional(&s, &q, &SourceProfile::empty(), space, 16).unwrap();
        let sys = ExactSystem::new(&s, space).unwrap();
        assert!((z - sys.transition_amplitude()).norm() < 1e-12);
    }

    #[test]
    fn single_bin_spin_closed_form() {
        let alpha = PI / 6.0;
        let s = aav_scenario(alpha);
        let zeta0 = 0.37;
        let profile = SourceProfile::single(0.0, 1.0, zeta0).unwrap();
        let z = generating_functional(&s, &OperatorMatrix::pauli_z(), &profile, HilbertSpec::Qubit, 4).unwrap();
        let ph = Complex64::from_polar(1.0, zeta0);
        let expected = (ph * alpha.cos() - ph.conj() * alpha.sin()) / 2f64.sqrt();
        assert!((z - expected).norm() < 1e-14);
    }

    #[test]
    fn misaligned_bin_rejected() {
        let s = aav_scenario(PI / 6.0);
        let profile = SourceProfile::single(0.1, 0.3, 1.0).unwrap();
        let err = generating_functional(&s, &OperatorMatrix::pauli_z(), &profile, HilbertSpec::Qubit, 4)
            .unwrap_err();
        assert!(matches!(err, Error::Alignment { n_steps: 4, .. }));
        assert!(generating_functional(&s, &OperatorMatrix::pauli_z(), &profile, HilbertSpec::Qubit, 10).is_ok());
    }

    #[test]
    fn identity_source_gives_one() {
        let s = aav_scenario(PI / 6.0);
        for eps in [1e-6, 1e-3, 0.1] {
            let r = weak_value_via_gf(&s, &OperatorMatrix::identity(2), 0.5, HilbertSpec::Qubit, eps, 0.1)
                .unwrap();
            assert!((r.value - c(1.0, 0.0)).norm() < 1e-8, "eps {eps}: {}", r.value);
        }
    }

    #[test]
    fn spin_gf_matches_exact() {
        let s = aav_scenario(PI / 6.0);
        let r = weak_value_via_gf(&s, &OperatorMatrix::pauli_z(), 0.5, HilbertSpec::Qubit, 1e-5, 1.0 / 64.0)
            .unwrap();
        assert!((r.value - c(2.0 + 3f64.sqrt(), 0.0)).norm() < 1e-4);
    }

    #[test]
    fn harmonic_gf_matches_exact() {
        let s = harmonic_scenario();
        let space = default_space(&s, &[&PolynomialSymbol::q()]).unwrap();
        let q = build_operator(&PolynomialSymbol::q(), space, 1.0).unwrap();
        let gf = weak_value_via_gf(&s, &q, 0.4, space, 1e-5, 1.0 / 64.0).unwrap();
        let ex = weak_value_exact(&s, &q, 0.4, space).unwrap();
        assert!((gf.value - ex.value).norm() < 1e-4, "{} vs {}", gf.value, ex.value);
    }

    #[test]
    fn bin_outside_window_rejected() {
        let s = aav_scenario(PI / 6.0);
        assert!(weak_value_via_gf(&s, &OperatorMatrix::pauli_z(), 0.01, HilbertSpec::Qubit, 1e-5, 0.1).is_err());
    }
}
