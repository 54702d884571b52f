//! Weak values from complex classical trajectories.
//!
//! Under the single-trajectory approximation the weak value of `A` at time `t`
//! is the classical symbol `A(q(t), p(t))` evaluated on the complex trajectory
//! selected by the boundary conditions, up to `O(hbar)`.

mod flow;
mod shooting;

pub use flow::{
    flow_endpoint, integrate_complex_trajectory, integrate_flow, FlowOutput, FlowState, HamiltonFlow, Integrator,
    LOCAL_TOLERANCE, MAX_DEGREE,
};
pub use shooting::{
    klauder_residuals, shoot, shoot_coherent_bvp, shoot_coherent_bvp_with, shoot_position_quadratic, MultiStart,
    ShootingOptions, TrajectorySolution,
};

use crate::error::{Error, Result};
use crate::model::{
    spin_stereographic, Boundary, BoundaryKind, CoherentLabel, ComplexPhasePoint, Method, PolynomialSymbol,
    SpinLabel, WeakValueResult,
};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Below this caustic indicator the single-trajectory picture is flagged.
pub const CAUSTIC_THRESHOLD: f64 = 0.1;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// The `H = 0` trajectory for coherent boundaries:
/// `q = (q''+q')/2 - i(p''-p')/2`, `p = (p''+p')/2 + i(q''-q')/2`.
pub fn closed_form_h0(pre: CoherentLabel, post: CoherentLabel) -> ComplexPhasePoint {
    ComplexPhasePoint::new(
        Complex64::new((post.q + pre.q) / 2.0, -(post.p - pre.p) / 2.0),
        Complex64::new((post.p + pre.p) / 2.0, (post.q - pre.q) / 2.0),
    )
}

/// Magnitude of the leading exponential factor of `<post|U|pre>` along the trajectory.
///
/// For coherent boundaries this is `|exp(Phi)|` with
/// `Phi = iS/hbar + ln <x'|pre> + ln <post|x''>` at the complex end points
/// `x' = q(t')`, `x'' = q(t'')`; the prefactor from the Gaussian fluctuation
/// integral is not included. For position boundaries it is `|E exp(iS/hbar)|`.
pub fn semiclassical_overlap_abs(traj: &TrajectorySolution) -> f64 {
    let hbar = traj.hbar;
    match traj.boundary {
        Boundary::Coherent { pre, post } => {
            let xa = traj.start().q;
            let xb = traj.end().q;
            let (qa, pa, qb, pb) = (pre.q, pre.p, post.q, post.p);
            let phi = I * traj.action / hbar - (xa - qa).powi(2) / (2.0 * hbar) + I * pa * xa / hbar
                - I * pa * qa / (2.0 * hbar)
                - (xb - qb).powi(2) / (2.0 * hbar)
                - I * pb * xb / hbar
                + I * pb * qb / (2.0 * hbar);
            phi.re.exp()
        }
        Boundary::Position { .. } => match action_and_amplitude(traj, BoundaryKind::Position) {
            Ok((s, Some(e))) => (e * (I * s / hbar).exp()).norm(),
            _ => f64::INFINITY,
        },
        Boundary::Spin { .. } => f64::NAN,
    }
}

/// `A(q(t), p(t))` on a converged trajectory.
pub fn weak_value_semiclassical(traj: &TrajectorySolution, a: &PolynomialSymbol, t: f64) -> Result<WeakValueResult> {
    let pt = traj.point_at(t)?;
    let (indicator, _) = caustic_diagnostic(traj, traj.kind());
    Ok(WeakValueResult::new(a.eval(pt), t, Method::Semiclassical, semiclassical_overlap_abs(traj))
        .with("residual", traj.residual)
        .with("caustic_indicator", indicator)
        .with("multi_root_flag", if traj.multi_root_flag { 1.0 } else { 0.0 })
        .with("newton_iters", traj.newton_iters as f64))
}

/// `W(A^2) - W(A)^2` at leading order, i.e. `(A^2)(q, p) - A(q, p)^2`.
pub fn weak_variance_semiclassical(traj: &TrajectorySolution, a: &PolynomialSymbol, t: f64) -> Result<Complex64> {
    let pt = traj.point_at(t)?;
    Ok(a.mul(a).eval(pt) - a.eval(pt).powi(2))
}

/// Action `S` and, for position boundaries, `E = 1/sqrt(2 pi hbar dq''/dp')` on the principal branch.
pub fn action_and_amplitude(traj: &TrajectorySolution, kind: BoundaryKind) -> Result<(Complex64, Option<Complex64>)> {
    match kind {
        BoundaryKind::Position => {
            let m_qp = traj.monodromy[0][1];
            if m_qp.norm() < 1e-12 {
                return Err(Error::Caustic { indicator: m_qp.norm() });
            }
            let e = (m_qp * (2.0 * PI * traj.hbar)).sqrt().inv();
            Ok((traj.action, Some(e)))
        }
        BoundaryKind::Coherent => Ok((traj.action, None)),
        BoundaryKind::Spin => Err(Error::UnsupportedBoundary("spin")),
    }
}

/// `|dQ''/dQ'|` (coherent) or `|dq''/dp'|` (position), and whether the
/// single-trajectory picture is in doubt.
pub fn caustic_diagnostic(traj: &TrajectorySolution, kind: BoundaryKind) -> (f64, bool) {
    let indicator = match kind {
        BoundaryKind::Position => traj.monodromy[0][1].norm(),
        _ => traj.monodromy_qq_kms().norm(),
    };
    (indicator, indicator < CAUSTIC_THRESHOLD || traj.multi_root_flag)
}

/// Stereographic forward variable `z` and backward variable `w` (the continuation of `conj(z)`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinTrajectory {
    pub z: Complex64,
    pub w: Complex64,
}

impl SpinTrajectory {
    /// Constant solution for the vanishing Hamiltonian: `z = e^{i phi'} tan(theta'/2)`,
    /// `w = e^{-i phi''} tan(theta''/2)`.
    pub fn for_vanishing_hamiltonian(pre: SpinLabel, post: SpinLabel) -> Result<Self> {
        Ok(Self { z: spin_stereographic(pre)?, w: spin_stereographic(post)?.conj() })
    }

    pub fn denominator(&self) -> Complex64 {
        Complex64::new(1.0, 0.0) + self.z * self.w
    }

    /// `(W(sx), W(sy), W(sz))` from the continued spin-coherent symbols.
    pub fn weak_values(&self) -> Result<(Complex64, Complex64, Complex64)> {
        let d = self.denominator();
        if d.norm() < 1e-14 {
            return Err(Error::OrthogonalPostselection { overlap: d.norm() });
        }
        let (z, w) = (self.z, self.w);
        Ok(((z + w) / d, I * (w - z) / d, (Complex64::new(1.0, 0.0) - z * w) / d))
    }
}

pub fn spin_weak_values_semiclassical(pre: SpinLabel, post: SpinLabel) -> Result<(Complex64, Complex64, Complex64)> {
    SpinTrajectory::for_vanishing_hamiltonian(pre, post)?.weak_values()
}

/// `|<post|pre>|` written in stereographic variables.
pub fn spin_overlap_abs(pre: SpinLabel, post: SpinLabel) -> Result<f64> {
    let t = SpinTrajectory::for_vanishing_hamiltonian(pre, post)?;
    Ok(t.denominator().norm() / ((1.0 + t.z.norm_sqr()) * (1.0 + t.w.norm_sqr())).sqrt())
}
