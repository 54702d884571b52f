//! Holomorphic Hamilton flow with its variational equations and action.

use crate::error::{Error, Result};
use crate::model::{mat2_identity, ComplexPhasePoint, Mat2, PolynomialSymbol};
use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Largest polynomial degree the flow evaluator accepts.
pub const MAX_DEGREE: u32 = 31;

/// Local error target of the step-doubling controller.
pub const LOCAL_TOLERANCE: f64 = 1e-12;

const MAX_STEPS: usize = 2_000_000;
const BLOWUP: f64 = 1e100;

/// `[q, p, M_qq, M_qp, M_pq, M_pp, S]`
pub type FlowState = [Complex64; 7];

#[derive(Debug, Clone)]
struct Terms(Vec<(usize, usize, Complex64)>);

impl Terms {
    fn from(s: &PolynomialSymbol) -> Self {
        Terms(s.terms().map(|((m, n), c)| (m as usize, n as usize, c)).collect())
    }

    fn eval(&self, qp: &[Complex64; 32], pp: &[Complex64; 32]) -> Complex64 {
        self.0.iter().map(|&(m, n, c)| c * qp[m] * pp[n]).sum()
    }
}

/// A Hamiltonian with its first and second derivatives, ready for integration.
#[derive(Debug, Clone)]
pub struct HamiltonFlow {
    symbol: PolynomialSymbol,
    h: Terms,
    hq: Terms,
    hp: Terms,
    hqq: Terms,
    hqp: Terms,
    hpp: Terms,
    max_m: usize,
    max_n: usize,
}

impl HamiltonFlow {
    pub fn new(h: &PolynomialSymbol) -> Result<Self> {
        if h.degree() > MAX_DEGREE {
            return Err(Error::InvalidArgument(format!(
                "hamiltonian degree {} exceeds {MAX_DEGREE}",
                h.degree()
            )));
        }
        let (hq, hp) = (h.d_dq(), h.d_dp());
        let max_m = h.terms().map(|((m, _), _)| m as usize).max().unwrap_or(0);
        let max_n = h.terms().map(|((_, n), _)| n as usize).max().unwrap_or(0);
        Ok(Self {
            symbol: h.clone(),
            h: Terms::from(h),
            hqq: Terms::from(&hq.d_dq()),
            hqp: Terms::from(&hq.d_dp()),
            hpp: Terms::from(&hp.d_dp()),
            hq: Terms::from(&hq),
            hp: Terms::from(&hp),
            max_m,
            max_n,
        })
    }

    pub fn symbol(&self) -> &PolynomialSymbol {
        &self.symbol
    }

    fn powers(&self, q: Complex64, p: Complex64) -> ([Complex64; 32], [Complex64; 32]) {
        let mut qp = [ZERO; 32];
        let mut pp = [ZERO; 32];
        qp[0] = Complex64::new(1.0, 0.0);
        pp[0] = Complex64::new(1.0, 0.0);
        for k in 1..=self.max_m {
            qp[k] = qp[k - 1] * q;
        }
        for k in 1..=self.max_n {
            pp[k] = pp[k - 1] * p;
        }
        (qp, pp)
    }

    pub fn energy(&self, pt: ComplexPhasePoint) -> Complex64 {
        let (qp, pp) = self.powers(pt.q, pt.p);
        self.h.eval(&qp, &pp)
    }

    /// Right-hand side: Hamilton's equations, `dM/dt = J Hess(H) M` and `dS/dt = p H_p - H`.
    pub fn rhs(&self, y: &FlowState) -> FlowState {
        let (qp, pp) = self.powers(y[0], y[1]);
        let h = self.h.eval(&qp, &pp);
        let hq = self.hq.eval(&qp, &pp);
        let hp = self.hp.eval(&qp, &pp);
        let hqq = self.hqq.eval(&qp, &pp);
        let hqp = self.hqp.eval(&qp, &pp);
        let hpp = self.hpp.eval(&qp, &pp);
        // J Hess = [[H_pq, H_pp], [-H_qq, -H_qp]]
        let (m11, m12, m21, m22) = (y[2], y[3], y[4], y[5]);
        [
            hp,
            -hq,
            hqp * m11 + hpp * m21,
            hqp * m12 + hpp * m22,
            -hqq * m11 - hqp * m21,
            -hqq * m12 - hqp * m22,
            y[1] * hp - h,
        ]
    }
}

pub fn initial_state(start: ComplexPhasePoint) -> FlowState {
    let m = mat2_identity();
    [start.q, start.p, m[0][0], m[0][1], m[1][0], m[1][1], ZERO]
}

pub fn state_point(y: &FlowState) -> ComplexPhasePoint {
    ComplexPhasePoint::new(y[0], y[1])
}

pub fn state_monodromy(y: &FlowState) -> Mat2 {
    [[y[2], y[3]], [y[4], y[5]]]
}

fn axpy(y: &FlowState, h: f64, k: &FlowState) -> FlowState {
    let mut out = *y;
    for i in 0..7 {
        out[i] += k[i] * h;
    }
    out
}

fn rk4_step(flow: &HamiltonFlow, y: &FlowState, h: f64) -> FlowState {
    let k1 = flow.rhs(y);
    let k2 = flow.rhs(&axpy(y, h / 2.0, &k1));
    let k3 = flow.rhs(&axpy(y, h / 2.0, &k2));
    let k4 = flow.rhs(&axpy(y, h, &k3));
    let mut out = *y;
    for i in 0..7 {
        out[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
    }
    out
}

fn finite(y: &FlowState) -> bool {
    y.iter().all(|z| z.is_finite() && z.norm() < BLOWUP)
}

/// Adaptive integrator: classical RK4 with step doubling and local extrapolation.
#[derive(Debug, Clone, Copy)]
pub struct Integrator {
    pub tolerance: f64,
}

impl Default for Integrator {
    fn default() -> Self {
        Self { tolerance: LOCAL_TOLERANCE }
    }
}

impl Integrator {
    /// Advances `y` from `t0` to `t1` (either direction), starting with step `h0`.
    /// Returns the final state and the last accepted step magnitude.
    pub fn advance(&self, flow: &HamiltonFlow, y: FlowState, t0: f64, t1: f64, h0: f64) -> Result<(FlowState, f64)> {
        let span = t1 - t0;
        if span == 0.0 {
            return Ok((y, h0));
        }
        let dir = span.signum();
        let mut t = t0;
        let mut y = y;
        let mut h = h0.abs().min(span.abs()).max(span.abs() * 1e-9);
        let min_step = span.abs() * 1e-13;
        let mut steps = 0usize;
        while (t1 - t) * dir > 0.0 {
            steps += 1;
            if steps > MAX_STEPS {
                return Err(Error::StepFailure { t, step: h });
            }
            let remaining = (t1 - t).abs();
            let last = h >= remaining;
            let step = if last { remaining } else { h };
            let signed = step * dir;
            let full = rk4_step(flow, &y, signed);
            let half = rk4_step(flow, &y, signed / 2.0);
            let two_half = rk4_step(flow, &half, signed / 2.0);
            let ok = finite(&full) && finite(&two_half);
            let err = if ok {
                (0..7)
                    .map(|i| (two_half[i] - full[i]).norm() / 15.0 / (1.0 + two_half[i].norm()))
                    .fold(0.0, f64::max)
            } else {
                f64::INFINITY
            };
            if err <= self.tolerance {
                for i in 0..7 {
                    y[i] = two_half[i] + (two_half[i] - full[i]) / 15.0;
                }
                t = if last { t1 } else { t + signed };
                let factor = if err == 0.0 { 4.0 } else { (0.9 * (self.tolerance / err).powf(0.2)).clamp(0.2, 4.0) };
                // keep the working step when a short final step was accepted
                if !last {
                    h = step * factor;
                }
            } else {
                if !ok && step <= min_step {
                    return Err(Error::StepFailure { t, step });
                }
                let factor = if err.is_finite() { (0.9 * (self.tolerance / err).powf(0.2)).clamp(0.1, 0.5) } else { 0.25 };
                h = step * factor;
                if h < min_step {
                    return Err(Error::StepFailure { t, step: h });
                }
            }
        }
        Ok((y, h))
    }
}

/// Trajectory samples on a uniform grid together with the end-point monodromy and action.
#[derive(Debug, Clone)]
pub struct FlowOutput {
    pub times: Vec<f64>,
    pub points: Vec<ComplexPhasePoint>,
    pub monodromy: Mat2,
    pub action: Complex64,
    pub end_state: FlowState,
}

/// Integrates the complexified flow of `h` from `start` over `t_span`, sampling
/// `n_steps + 1` uniformly spaced nodes.
pub fn integrate_complex_trajectory(
    h: &PolynomialSymbol,
    start: ComplexPhasePoint,
    t_span: (f64, f64),
    n_steps: usize,
) -> Result<FlowOutput> {
    let flow = HamiltonFlow::new(h)?;
    integrate_flow(&flow, start, t_span, n_steps)
}

pub fn integrate_flow(
    flow: &HamiltonFlow,
    start: ComplexPhasePoint,
    t_span: (f64, f64),
    n_steps: usize,
) -> Result<FlowOutput> {
    if n_steps < 16 {
        return Err(Error::InvalidArgument(format!("n_steps must be at least 16, got {n_steps}")));
    }
    let (t0, t1) = t_span;
    if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
        return Err(Error::InvalidArgument(format!("invalid time span [{t0}, {t1}]")));
    }
    if !start.is_finite() {
        return Err(Error::InvalidArgument("start point is not finite".into()));
    }
    let integ = Integrator::default();
    let dt = (t1 - t0) / n_steps as f64;
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut points = Vec::with_capacity(n_steps + 1);
    let mut y = initial_state(start);
    let mut h = dt / 4.0;
    times.push(t0);
    points.push(start);
    for k in 0..n_steps {
        let a = t0 + k as f64 * dt;
        let b = if k + 1 == n_steps { t1 } else { t0 + (k + 1) as f64 * dt };
        let (next, hn) = integ.advance(flow, y, a, b, h)?;
        y = next;
        h = hn;
        times.push(b);
        points.push(state_point(&y));
    }
    Ok(FlowOutput { times, points, monodromy: state_monodromy(&y), action: y[6], end_state: y })
}

/// End state only; used inside Newton iterations where no samples are needed.
pub fn flow_endpoint(flow: &HamiltonFlow, start: ComplexPhasePoint, t_span: (f64, f64)) -> Result<FlowState> {
    let span = t_span.1 - t_span.0;
    Integrator::default()
        .advance(flow, initial_state(start), t_span.0, t_span.1, span / 64.0)
        .map(|(y, _)| y)
}
