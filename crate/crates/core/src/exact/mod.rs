//! Finite-dimensional quantum computation of weak values.
//!
//! Everything here is a direct matrix calculation: states are built in a
//! truncated Fock space (coherent boundaries) or on a qubit (spin boundaries),
//! time evolution is the exact exponential of the Hamiltonian matrix, and
//! weak values follow from `<post|U(t'',t) A U(t,t')|pre> / <post|U(t'',t')|pre>`.

mod functional;
mod operators;
mod states;

pub use functional::{generating_functional, weak_value_via_gf, SourceBin, SourceProfile};
pub use operators::{annihilation, build_operator, position_momentum, CVector, HilbertSpec, OperatorMatrix};
pub use states::{
    coherent_amplitude, coherent_state, coherent_tail, fock_dim_for_tail, fock_space_for, spin_state,
    state_vectors, FOCK_GUARD_LEVELS, TAIL_TOLERANCE,
};

use crate::error::{Error, Result};
use crate::model::{Boundary, Hamiltonian, Method, PolynomialSymbol, Scenario, SpinLabel, WeakValueResult};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

/// Below this `|<post|U|pre>|` the weak value is undefined.
pub const ORTHOGONALITY_FLOOR: f64 = 1e-300;

/// Spectral form of a Hermitian generator, reusable for any time step.
#[derive(Debug, Clone)]
pub struct Propagator {
    vectors: DMatrix<Complex64>,
    values: DVector<f64>,
    hbar: f64,
}

impl Propagator {
    pub fn new(h: &OperatorMatrix, hbar: f64) -> Result<Self> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::InvalidArgument(format!("hbar must be positive, got {hbar}")));
        }
        let herr = h.hermiticity_error();
        if herr >= 1e-12 * (1.0 + max_entry(h.matrix())) {
            return Err(Error::InvalidArgument(format!("generator is not Hermitian (error {herr:e})")));
        }
        // symmetrize so roundoff cannot leak into the eigensolver
        let m = (h.matrix() + h.matrix().adjoint()) * Complex64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(m);
        Ok(Self { vectors: eig.eigenvectors, values: eig.eigenvalues, hbar })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    fn phases(&self, dt: f64) -> DVector<Complex64> {
        self.values.map(|e| Complex64::from_polar(1.0, -e * dt / self.hbar))
    }

    /// `exp(-i H dt / hbar) v`; negative `dt` runs backwards.
    pub fn evolve(&self, v: &CVector, dt: f64) -> CVector {
        if dt == 0.0 {
            return v.clone();
        }
        let coeffs = self.vectors.adjoint() * v;
        let rotated = coeffs.component_mul(&self.phases(dt));
        &self.vectors * rotated
    }

    pub fn matrix(&self, dt: f64) -> OperatorMatrix {
        let d = DMatrix::from_diagonal(&self.phases(dt));
        OperatorMatrix::new(&self.vectors * d * self.vectors.adjoint()).expect("square")
    }
}

fn max_entry(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `exp(-i H dt / hbar)`.
pub fn propagate(h: &OperatorMatrix, dt: f64, hbar: f64) -> Result<OperatorMatrix> {
    if !(dt.is_finite() && dt >= 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be finite and non-negative, got {dt}")));
    }
    if dt == 0.0 {
        return Ok(OperatorMatrix::identity(h.dim()));
    }
    Ok(Propagator::new(h, hbar)?.matrix(dt))
}

/// Picks the Hilbert space for a scenario: a qubit for spins, otherwise a Fock
/// space sized by the coherent tail rule and large enough for every symbol given.
pub fn default_space(scenario: &Scenario, symbols: &[&PolynomialSymbol]) -> Result<HilbertSpec> {
    match scenario.boundary {
        Boundary::Spin { .. } => Ok(HilbertSpec::Qubit),
        Boundary::Position { .. } => Err(Error::UnsupportedBoundary("position")),
        Boundary::Coherent { pre, post } => {
            let degree = symbols
                .iter()
                .copied()
                .chain(scenario.polynomial_hamiltonian())
                .map(|s| s.degree() as usize)
                .max()
                .unwrap_or(0);
            Ok(fock_space_for(&[pre, post], scenario.hbar, degree + 2))
        }
    }
}

/// A scenario realized in a concrete Hilbert space, ready for repeated queries.
#[derive(Debug, Clone)]
pub struct ExactSystem {
    space: HilbertSpec,
    hbar: f64,
    t_start: f64,
    t_end: f64,
    pre: CVector,
    post: CVector,
    hamiltonian: OperatorMatrix,
    propagator: Propagator,
}

impl ExactSystem {
    pub fn new(scenario: &Scenario, space: HilbertSpec) -> Result<Self> {
        scenario.validate()?;
        let hamiltonian = match &scenario.hamiltonian {
            Hamiltonian::Polynomial(h) => build_operator(h, space, scenario.hbar)?,
            Hamiltonian::SpinZero => OperatorMatrix::zeros(space.dim()),
        };
        let (pre, post) = state_vectors(&scenario.boundary, space, scenario.hbar)?;
        Self::from_parts(space, scenario.hbar, (scenario.t_start, scenario.t_end), pre, post, hamiltonian)
    }

    pub fn from_parts(
        space: HilbertSpec,
        hbar: f64,
        window: (f64, f64),
        pre: CVector,
        post: CVector,
        hamiltonian: OperatorMatrix,
    ) -> Result<Self> {
        let dim = space.dim();
        if pre.len() != dim || post.len() != dim || hamiltonian.dim() != dim {
            return Err(Error::InvalidArgument("state and operator dimensions disagree".into()));
        }
        if !(window.1 > window.0) {
            return Err(Error::InvalidArgument("time window must have t_end > t_start".into()));
        }
        let propagator = Propagator::new(&hamiltonian, hbar)?;
        Ok(Self { space, hbar, t_start: window.0, t_end: window.1, pre, post, hamiltonian, propagator })
    }

    pub fn space(&self) -> HilbertSpec {
        self.space
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn window(&self) -> (f64, f64) {
        (self.t_start, self.t_end)
    }

    pub fn hamiltonian(&self) -> &OperatorMatrix {
        &self.hamiltonian
    }

    pub fn pre(&self) -> &CVector {
        &self.pre
    }

    pub fn post(&self) -> &CVector {
        &self.post
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(self.t_start..=self.t_end).contains(&t) {
            return Err(Error::InvalidArgument(format!(
                "time {t} outside [{}, {}]",
                self.t_start, self.t_end
            )));
        }
        Ok(())
    }

    /// `(U(t,t')|pre>, U(t,t'')|post>)`: the forward and backward evolved states at `t`.
    pub fn states_at(&self, t: f64) -> Result<(CVector, CVector)> {
        self.check_time(t)?;
        let fwd = self.propagator.evolve(&self.pre, t - self.t_start);
        let bwd = self.propagator.evolve(&self.post, t - self.t_end);
        Ok((fwd, bwd))
    }

    /// `<post|U(t'',t')|pre>`.
    pub fn transition_amplitude(&self) -> Complex64 {
        self.post.dotc(&self.propagator.evolve(&self.pre, self.t_end - self.t_start))
    }

    pub fn weak_value(&self, a: &OperatorMatrix, t: f64) -> Result<WeakValueResult> {
        if a.dim() != self.space.dim() {
            return Err(Error::InvalidArgument("observable dimension mismatch".into()));
        }
        let (fwd, bwd) = self.states_at(t)?;
        let den = bwd.dotc(&fwd);
        let overlap = den.norm();
        if !(overlap >= ORTHOGONALITY_FLOOR) {
            return Err(Error::OrthogonalPostselection { overlap });
        }
        let num = bwd.dotc(&a.apply(&fwd));
        Ok(WeakValueResult::new(num / den, t, Method::Exact, overlap))
    }

    /// `W((A - W(A))^2)`, cross-checked against `W(A^2) - W(A)^2`.
    pub fn weak_variance(&self, a: &OperatorMatrix, t: f64) -> Result<Complex64> {
        let w = self.weak_value(a, t)?.value;
        let centered = a.shift(w);
        let direct = self.weak_value(&centered.mul(&centered), t)?.value;
        let w2 = self.weak_value(&a.mul(a), t)?.value;
        let algebraic = w2 - w * w;
        let scale = 1.0 + w.norm_sqr() + w2.norm();
        if (direct - algebraic).norm() > 1e-10 * scale {
            return Err(Error::Inconsistent(format!(
                "weak variance routes disagree: {direct} vs {algebraic}"
            )));
        }
        Ok(direct)
    }
}

pub fn weak_value_exact(
    scenario: &Scenario,
    a: &OperatorMatrix,
    t: f64,
    space: HilbertSpec,
) -> Result<WeakValueResult> {
    ExactSystem::new(scenario, space)?.weak_value(a, t)
}

pub fn weak_variance_exact(
    scenario: &Scenario,
    a: &OperatorMatrix,
    t: f64,
    space: HilbertSpec,
) -> Result<Complex64> {
    ExactSystem::new(scenario, space)?.weak_variance(a, t)
}

/// `(W(sigma_x), W(sigma_y), W(sigma_z))` for a spin-1/2 with a 2x2 Hermitian Hamiltonian
/// acting over `window`.
pub fn spin_weak_values_exact(
    pre: SpinLabel,
    post: SpinLabel,
    h_spin: &OperatorMatrix,
    window: (f64, f64),
    t: f64,
) -> Result<(Complex64, Complex64, Complex64)> {
    if h_spin.dim() != 2 {
        return Err(Error::InvalidArgument("spin Hamiltonian must be 2x2".into()));
    }
    let sys = ExactSystem::from_parts(
        HilbertSpec::Qubit,
        1.0,
        window,
        spin_state(pre),
        spin_state(post),
        h_spin.clone(),
    )?;
    let w = |op: OperatorMatrix| sys.weak_value(&op, t).map(|r| r.value);
    Ok((w(OperatorMatrix::pauli_x())?, w(OperatorMatrix::pauli_y())?, w(OperatorMatrix::pauli_z())?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CoherentLabel;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn aav(alpha: f64) -> (SpinLabel, SpinLabel) {
        (SpinLabel::new(2.0 * alpha, 0.0).unwrap(), SpinLabel::new(PI / 2.0, PI).unwrap())
    }

    #[test]
    fn propagate_examples() {
        let h = OperatorMatrix::pauli_x();
        let u = propagate(&h, 0.0, 1.0).unwrap();
        assert_eq!(u, OperatorMatrix::identity(2));

        let u = propagate(&OperatorMatrix::zeros(3), 2.7, 1.0).unwrap();
        assert!((u.matrix() - DMatrix::identity(3, 3)).norm() < 1e-15);

        let u = propagate(&OperatorMatrix::pauli_z(), PI / 2.0, 1.0).unwrap();
        let m = u.matrix();
        assert!((m[(0, 0)] - Complex64::from_polar(1.0, -PI / 2.0)).norm() < 1e-14);
        assert!((m[(1, 1)] - Complex64::from_polar(1.0, PI / 2.0)).norm() < 1e-14);
        assert!(m[(0, 1)].norm() < 1e-14 && m[(1, 0)].norm() < 1e-14);
    }

    #[test]
    fn propagator_is_unitary() {
        let h = build_operator(&PolynomialSymbol::quartic(0.2), HilbertSpec::Fock { dim: 30 }, 0.5)
            .unwrap();
        let u = propagate(&h, 1.3, 0.5).unwrap();
        let err = u.matrix().adjoint() * u.matrix() - DMatrix::identity(30, 30);
        assert!(max_entry(&err) < 1e-12);
    }

    #[test]
    fn propagate_rejects_non_hermitian() {
        let m = OperatorMatrix::from_row_slice(2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])
            .unwrap();
        assert!(propagate(&m, 1.0, 1.0).is_err());
    }

    #[test]
    fn identity_weak_value_is_one() {
        let (pre, post) = aav(PI / 6.0);
        let s = Scenario::spin(pre, post, 0.0, 1.0).unwrap();
        let r = weak_value_exact(&s, &OperatorMatrix::identity(2), 0.5, HilbertSpec::Qubit).unwrap();
        assert!((r.value - c(1.0, 0.0)).norm() < 1e-15);
        assert!(r.overlap_abs() > 0.0);
    }

    #[test]
    fn aav_sigma_z() {
        let (pre, post) = aav(PI / 6.0);
        let s = Scenario::spin(pre, post, 0.0, 1.0).unwrap();
        let r = weak_value_exact(&s, &OperatorMatrix::pauli_z(), 0.3, HilbertSpec::Qubit).unwrap();
        assert!((r.value - c(2.0 + 3f64.sqrt(), 0.0)).norm() < 1e-12);
        let expected_overlap = ((PI / 6.0).cos() - (PI / 6.0).sin()) / 2f64.sqrt();
        assert!((r.overlap_abs() - expected_overlap).abs() < 1e-15);
    }

    #[test]
    fn coherent_h0_position() {
        let s = Scenario::coherent(
            CoherentLabel::new(1.0, 0.0),
            CoherentLabel::new(0.0, 1.0),
            PolynomialSymbol::zero(),
            1.0,
            0.0,
            1.0,
        )
        .unwrap();
        let space = HilbertSpec::Fock { dim: 24 };
        let q = build_operator(&PolynomialSymbol::q(), space, 1.0).unwrap();
        let r = weak_value_exact(&s, &q, 0.5, space).unwrap();
        assert!((r.value - c(0.5, -0.5)).norm() < 1e-12);
    }

    #[test]
    fn orthogonal_postselection() {
        let s = Scenario::spin(
            SpinLabel::new(0.0, 0.0).unwrap(),
            SpinLabel::new(PI - 1e-9, 0.0).unwrap(),
            0.0,
            1.0,
        )
        .unwrap();
        // nearly but not exactly orthogonal: still defined
        let r = weak_value_exact(&s, &OperatorMatrix::pauli_z(), 0.5, HilbertSpec::Qubit).unwrap();
        assert!(r.overlap_abs() < 1e-8);

        let sys = ExactSystem::from_parts(
            HilbertSpec::Qubit,
            1.0,
            (0.0, 1.0),
            CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]),
            CVector::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)]),
            OperatorMatrix::zeros(2),
        )
        .unwrap();
        assert!(matches!(
            sys.weak_value(&OperatorMatrix::pauli_z(), 0.5),
            Err(Error::OrthogonalPostselection { .. })
        ));
    }

    #[test]
    fn weak_variance_examples() {
        let (pre, post) = aav(PI / 6.0);
        let s = Scenario::spin(pre, post, 0.0, 1.0).unwrap();
        let v = weak_variance_exact(&s, &OperatorMatrix::identity(2), 0.5, HilbertSpec::Qubit).unwrap();
        assert!(v.norm() < 1e-14);

        let w = weak_value_exact(&s, &OperatorMatrix::pauli_z(), 0.5, HilbertSpec::Qubit).unwrap().value;
        let v = weak_variance_exact(&s, &OperatorMatrix::pauli_z(), 0.5, HilbertSpec::Qubit).unwrap();
        assert!((v - (c(1.0, 0.0) - w * w)).norm() < 1e-12);
    }

    #[test]
    fn coherent_h0_variance_is_half_hbar() {
        // normal ordering gives W((q - W(q))^2) = hbar / 2 for H = 0
        for hbar in [1.0, 0.5, 0.25] {
            let s = Scenario::coherent(
                CoherentLabel::new(1.0, 0.0),
                CoherentLabel::new(0.0, 1.0),
                PolynomialSymbol::zero(),
                hbar,
                0.0,
                1.0,
            )
            .unwrap();
            let space = default_space(&s, &[&PolynomialSymbol::q()]).unwrap();
            let q = build_operator(&PolynomialSymbol::q(), space, hbar).unwrap();
            let v = weak_variance_exact(&s, &q, 0.5, space).unwrap();
            assert!((v - c(hbar / 2.0, 0.0)).norm() < 1e-10, "hbar {hbar}: {v}");
        }
    }

    #[test]
    fn spin_examples() {
        let zero = OperatorMatrix::zeros(2);
        let pre = SpinLabel::new(1.1, 0.4).unwrap();
        let (x, y, z) = spin_weak_values_exact(pre, pre, &zero, (0.0, 1.0), 0.5).unwrap();
        let b = pre.bloch_vector();
        for (w, e) in [(x, b[0]), (y, b[1]), (z, b[2])] {
            assert!((w - c(e, 0.0)).norm() < 1e-14);
        }

        let (pre, post) = aav(PI / 6.0);
        let k = 2.0 + 3f64.sqrt();
        let (x, y, z) = spin_weak_values_exact(pre, post, &zero, (0.0, 1.0), 0.5).unwrap();
        assert!((x - c(-1.0, 0.0)).norm() < 1e-12);
        assert!((y - c(0.0, -k)).norm() < 1e-12);
        assert!((z - c(k, 0.0)).norm() < 1e-12);

        let alpha = PI / 4.0 - 0.005;
        let (pre, post) = aav(alpha);
        let (_, _, z) = spin_weak_values_exact(pre, post, &zero, (0.0, 1.0), 0.5).unwrap();
        assert!(z.norm() >= 100.0);
        assert!((z.re - (PI / 4.0 + alpha).tan()).abs() < 1e-9 * z.norm());
    }

    #[test]
    fn spin_with_hamiltonian_evolves_in_time() {
        let h = OperatorMatrix::pauli_x().scale(c(0.7, 0.0));
        let pre = SpinLabel::new(0.3, 0.0).unwrap();
        let u = propagate(&h, 1.0, 1.0).unwrap();
        // postselect on the evolved preselection: weak values are ordinary expectations
        let evolved = u.apply(&spin_state(pre));
        let sys = ExactSystem::from_parts(HilbertSpec::Qubit, 1.0, (0.0, 1.0), spin_state(pre), evolved, h)
            .unwrap();
        for t in [0.0, 0.4, 1.0] {
            let (fwd, _) = sys.states_at(t).unwrap();
            let w = sys.weak_value(&OperatorMatrix::pauli_z(), t).unwrap().value;
            let expect = fwd.dotc(&OperatorMatrix::pauli_z().apply(&fwd));
            assert!((w - expect).norm() < 1e-12);
            assert!(w.im.abs() < 1e-12);
        }
    }
}
