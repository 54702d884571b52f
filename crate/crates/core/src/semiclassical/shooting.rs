//! Newton shooting for Klauder's mixed boundary conditions.
//!
//! For coherent boundaries the initial `P(t') = (p' - iq')/sqrt(2)` is fixed and
//! the unknown is the complex number `Q(t')`; Newton drives
//! `Q(t'') - (q'' - ip'')/sqrt(2)` to zero with the derivative `dQ(t'')/dQ(t')`
//! taken from the integrated monodromy.

use super::flow::{flow_endpoint, integrate_flow, state_monodromy, state_point, HamiltonFlow};
use crate::error::{Error, Result};
use crate::model::{
    kms_inverse, kms_transform, monodromy_to_kms, Boundary, BoundaryKind, CoherentLabel, ComplexPhasePoint,
    KmsPoint, Mat2, Scenario,
};
use crate::par::{self, Execution};
use num_complex::Complex64;
use std::sync::Arc;

/// When to run the grid of extra Newton starts around the seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MultiStart {
    /// Always sweep, so a second root raises `multi_root_flag` even when the seed converges.
    Always,
    /// Sweep only if Newton from the seed fails.
    OnFailure,
    Never,
}

#[derive(Debug, Clone, Copy)]
pub struct ShootingOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Uniform sample nodes stored on the converged trajectory.
    pub grid_steps: usize,
    pub multi_start: MultiStart,
    /// Half-width of the square start grid in the complex `Q(t')` plane.
    pub grid_radius: f64,
    /// Points per side of the start grid.
    pub grid_points: usize,
    /// Two converged `Q(t')` closer than this are the same root.
    pub root_separation: f64,
    pub execution: Execution,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            max_iterations: 60,
            grid_steps: 64,
            multi_start: MultiStart::Always,
            grid_radius: 2.0,
            grid_points: 5,
            root_separation: 1e-6,
            execution: Execution::Parallel,
        }
    }
}

/// A converged complex classical trajectory and its shooting record.
#[derive(Debug, Clone)]
pub struct TrajectorySolution {
    pub times: Vec<f64>,
    pub points: Vec<ComplexPhasePoint>,
    /// `d(q(t''), p(t'')) / d(q(t'), p(t'))`.
    pub monodromy: Mat2,
    /// `S = integral of (p dq/dt - H) dt`.
    pub action: Complex64,
    /// Position boundaries only; see `action_and_amplitude`.
    pub amplitude: Option<Complex64>,
    pub residual: f64,
    pub newton_iters: usize,
    pub multi_root_flag: bool,
    /// Every distinct converged shooting unknown (`Q(t')` or `p(t')`), selected root first.
    pub roots: Vec<Complex64>,
    pub boundary: Boundary,
    pub hbar: f64,
    pub(crate) flow: Arc<HamiltonFlow>,
}

impl TrajectorySolution {
    pub fn kind(&self) -> BoundaryKind {
        self.boundary.kind()
    }

    pub fn window(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().expect("non-empty grid"))
    }

    pub fn start(&self) -> ComplexPhasePoint {
        self.points[0]
    }

    pub fn end(&self) -> ComplexPhasePoint {
        *self.points.last().expect("non-empty grid")
    }

    /// `dQ(t'')/dQ(t')` at fixed `P(t')`.
    pub fn monodromy_qq_kms(&self) -> Complex64 {
        monodromy_to_kms(&self.monodromy)[0][0]
    }

    pub fn hamiltonian_energy(&self, pt: ComplexPhasePoint) -> Complex64 {
        self.flow.energy(pt)
    }

    /// Phase-space point at time `t`, integrated from the nearest stored node.
    pub fn point_at(&self, t: f64) -> Result<ComplexPhasePoint> {
        let (t0, t1) = self.window();
        if !(t0..=t1).contains(&t) {
            return Err(Error::InvalidArgument(format!("time {t} outside [{t0}, {t1}]")));
        }
        let idx = match self.times.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => return Ok(self.points[i]),
            Err(i) => i,
        };
        // nearest node on either side
        let (lo, hi) = (idx - 1, idx);
        let from = if t - self.times[lo] <= self.times[hi] - t { lo } else { hi };
        let end = flow_endpoint(&self.flow, self.points[from], (self.times[from], t))?;
        Ok(state_point(&end))
    }

    /// Largest imaginary part along the stored grid.
    pub fn max_imag(&self) -> f64 {
        self.points.iter().map(|p| p.max_imag()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy)]
struct NewtonOutcome {
    unknown: Complex64,
    residual: f64,
    iterations: usize,
    converged: bool,
}

/// Newton on a holomorphic scalar residual `r(x)` with derivative `r'(x)`,
/// halving steps that fail to integrate or do not reduce `|r|`.
fn newton<F>(start: Complex64, opts: &ShootingOptions, residual: F) -> NewtonOutcome
where
    F: Fn(Complex64) -> Result<(Complex64, Complex64)>,
{
    let mut x = start;
    let (mut r, mut dr) = match residual(x) {
        Ok(v) => v,
        Err(_) => return NewtonOutcome { unknown: x, residual: f64::INFINITY, iterations: 0, converged: false },
    };
    for it in 0..=opts.max_iterations {
        if r.norm() < opts.tolerance {
            return NewtonOutcome { unknown: x, residual: r.norm(), iterations: it, converged: true };
        }
        if it == opts.max_iterations || dr.norm() == 0.0 || !dr.is_finite() {
            break;
        }
        let step = -r / dr;
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = x + step * scale;
            if let Ok((rt, drt)) = residual(trial) {
                if rt.norm() < r.norm() {
                    x = trial;
                    r = rt;
                    dr = drt;
                    accepted = true;
                    break;
                }
            }
            scale *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    NewtonOutcome { unknown: x, residual: r.norm(), iterations: opts.max_iterations, converged: false }
}

fn start_grid(seed: Complex64, opts: &ShootingOptions) -> Vec<Complex64> {
    let n = opts.grid_points.max(1);
    let offsets: Vec<f64> = if n == 1 {
        vec![0.0]
    } else {
        (0..n).map(|k| -opts.grid_radius + 2.0 * opts.grid_radius * k as f64 / (n - 1) as f64).collect()
    };
    let mut out = Vec::with_capacity(n * n);
    for &a in &offsets {
        for &b in &offsets {
            out.push(seed + Complex64::new(a, b));
        }
    }
    out
}

/// Runs Newton from the seed and, per `opts.multi_start`, from a start grid.
/// Returns the selected root outcome and all distinct converged unknowns
/// (selected root first).
fn solve_with_starts<F>(seed: Complex64, opts: &ShootingOptions, residual: F) -> Result<(NewtonOutcome, Vec<Complex64>)>
where
    F: Fn(Complex64) -> Result<(Complex64, Complex64)> + Sync + Send,
{
    let primary = newton(seed, opts, &residual);
    let sweep = match opts.multi_start {
        MultiStart::Always => true,
        MultiStart::OnFailure => !primary.converged,
        MultiStart::Never => false,
    };
    let mut outcomes = vec![primary];
    if sweep {
        let starts = start_grid(seed, opts);
        outcomes.extend(par::map(opts.execution, &starts, |&s| newton(s, opts, &residual)));
    }
    let mut roots: Vec<NewtonOutcome> = Vec::new();
    for o in outcomes.iter().filter(|o| o.converged) {
        let sep = opts.root_separation * (1.0 + o.unknown.norm());
        if roots.iter().all(|r| (r.unknown - o.unknown).norm() > sep) {
            roots.push(*o);
        }
    }
    if roots.is_empty() {
        let best = outcomes.iter().map(|o| o.residual).fold(f64::INFINITY, f64::min);
        return Err(Error::NoConvergence { best_residual: best });
    }
    // continuity with the real trajectory: keep the root nearest the seed
    roots.sort_by(|a, b| (a.unknown - seed).norm().total_cmp(&(b.unknown - seed).norm()));
    let unknowns = roots.iter().map(|r| r.unknown).collect();
    let mut chosen = roots[0];
    if chosen.unknown == primary.unknown {
        chosen.iterations = primary.iterations;
    }
    Ok((chosen, unknowns))
}

/// Solves Klauder's boundary conditions for a coherent-state scenario.
pub fn shoot_coherent_bvp(scenario: &Scenario) -> Result<TrajectorySolution> {
    shoot_coherent_bvp_with(scenario, &ShootingOptions::default())
}

pub fn shoot_coherent_bvp_with(scenario: &Scenario, opts: &ShootingOptions) -> Result<TrajectorySolution> {
    scenario.validate()?;
    let (pre, post) = match scenario.boundary {
        Boundary::Coherent { pre, post } => (pre, post),
        other => return Err(Error::UnsupportedBoundary(other.kind().name())),
    };
    let h = scenario
        .polynomial_hamiltonian()
        .ok_or(Error::UnsupportedBoundary("spin"))?;
    let flow = Arc::new(HamiltonFlow::new(h)?);
    let span = (scenario.t_start, scenario.t_end);
    let big_p = pre.big_p();
    let target = post.big_q();
    let launch = |big_q: Complex64| kms_inverse(KmsPoint::new(big_q, big_p));
    let residual = |big_q: Complex64| -> Result<(Complex64, Complex64)> {
        let end = flow_endpoint(&flow, launch(big_q), span)?;
        let q_end = kms_transform(state_point(&end)).big_q;
        let m = monodromy_to_kms(&state_monodromy(&end));
        Ok((q_end - target, m[0][0]))
    };
    // the real trajectory launched at (q', p') has Q(t') = (q' - ip')/sqrt(2)
    let seed = pre.big_q();
    let (chosen, roots) = solve_with_starts(seed, opts, residual)?;
    let out = integrate_flow(&flow, launch(chosen.unknown), span, opts.grid_steps.max(16))?;
    let residual = (kms_transform(*out.points.last().unwrap()).big_q - target).norm();
    Ok(TrajectorySolution {
        times: out.times,
        points: out.points,
        monodromy: out.monodromy,
        action: out.action,
        amplitude: None,
        residual,
        newton_iters: chosen.iterations,
        multi_root_flag: roots.len() > 1,
        roots,
        boundary: scenario.boundary,
        hbar: scenario.hbar,
        flow,
    })
}

/// Position boundaries `q(t') = q'`, `q(t'') = q''` for Hamiltonians of degree at most two.
///
/// The flow is affine, so `q(t'') = q_0(t'') + M_qp p'` is solved for `p'` directly.
pub fn shoot_position_quadratic(scenario: &Scenario) -> Result<TrajectorySolution> {
    scenario.validate()?;
    let (q_pre, q_post) = match scenario.boundary {
        Boundary::Position { pre, post } => (pre, post),
        other => return Err(Error::UnsupportedBoundary(other.kind().name())),
    };
    let h = scenario
        .polynomial_hamiltonian()
        .ok_or(Error::UnsupportedBoundary("spin"))?;
    if h.degree() > 2 {
        return Err(Error::InvalidArgument(
            "position boundaries are supported only for Hamiltonians of degree <= 2".into(),
        ));
    }
    let flow = Arc::new(HamiltonFlow::new(h)?);
    let span = (scenario.t_start, scenario.t_end);
    let base = flow_endpoint(&flow, ComplexPhasePoint::real(q_pre, 0.0), span)?;
    let m_qp = base[3];
    if m_qp.norm() < 1e-12 {
        return Err(Error::Caustic { indicator: m_qp.norm() });
    }
    let p_start = (Complex64::new(q_post, 0.0) - base[0]) / m_qp;
    let start = ComplexPhasePoint::new(Complex64::new(q_pre, 0.0), p_start);
    let out = integrate_flow(&flow, start, span, 64)?;
    let residual = (out.points.last().unwrap().q - q_post).norm();
    Ok(TrajectorySolution {
        times: out.times,
        points: out.points,
        monodromy: out.monodromy,
        action: out.action,
        amplitude: None,
        residual,
        newton_iters: 1,
        multi_root_flag: false,
        roots: vec![p_start],
        boundary: scenario.boundary,
        hbar: scenario.hbar,
        flow,
    })
}

/// Dispatches on the boundary kind; spin boundaries have their own closed forms.
pub fn shoot(scenario: &Scenario, opts: &ShootingOptions) -> Result<TrajectorySolution> {
    match scenario.boundary.kind() {
        BoundaryKind::Coherent => shoot_coherent_bvp_with(scenario, opts),
        BoundaryKind::Position => shoot_position_quadratic(scenario),
        BoundaryKind::Spin => Err(Error::UnsupportedBoundary("spin")),
    }
}

/// `(P(t'), Q(t''))` boundary residuals of a coherent-label trajectory.
pub fn klauder_residuals(traj: &TrajectorySolution, pre: CoherentLabel, post: CoherentLabel) -> (f64, f64) {
    let start = kms_transform(traj.start());
    let end = kms_transform(traj.end());
    ((start.big_p - pre.big_p()).norm(), (end.big_q - post.big_q()).norm())
}
