//! Executes a [`RunRequest`] against the core engines.

use crate::observable::{Axis, Observable};
use crate::output::Record;
use crate::request::{Command, RunRequest, SweepParam};
use num_complex::Complex64;
use rayon::prelude::*;
use std::time::Instant;
use weakline_core::exact::{build_operator, default_space, weak_value_via_gf, ExactSystem, HilbertSpec, OperatorMatrix};
use weakline_core::model::{Boundary, PolynomialSymbol, Scenario, SpinLabel, WeakValueResult};
use weakline_core::pointer::{
    couple_and_postselect, default_ladder, momentum_response, pointer_moments, recover_weak_value, sample_readouts,
    PointerConfig,
};
use weakline_core::semiclassical::{
    shoot, spin_overlap_abs, spin_weak_values_semiclassical, weak_value_semiclassical, ShootingOptions,
    TrajectorySolution,
};
use weakline_core::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NO_CONVERGENCE: i32 = 3;
pub const EXIT_ORTHOGONAL: i32 = 4;

/// Overlaps below this draw a warning on stderr.
pub const LOW_OVERLAP: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self { code: EXIT_VALIDATION, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self { code: exit_code(&e), message: e.to_string() }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NoConvergence { .. } | Error::StepFailure { .. } | Error::Caustic { .. } | Error::LogBranch => {
            EXIT_NO_CONVERGENCE
        }
        Error::OrthogonalPostselection { .. } | Error::ZeroNorm => EXIT_ORTHOGONAL,
        _ => EXIT_VALIDATION,
    }
}

fn status_of(e: &Error) -> &'static str {
    match e {
        Error::NoConvergence { .. } => "no_convergence",
        Error::StepFailure { .. } => "step_failure",
        Error::Caustic { .. } => "caustic",
        Error::LogBranch => "log_branch",
        Error::OrthogonalPostselection { .. } => "orthogonal_postselection",
        Error::ZeroNorm => "zero_norm",
        _ => "error",
    }
}

/// Records plus everything destined for stderr.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub records: Vec<Record>,
    pub exit_code: i32,
    pub diagnostics: Vec<String>,
}

struct Variant {
    scenario: Scenario,
    sweep: Option<(SweepParam, f64)>,
    times: Vec<f64>,
}

/// Runs the request on an already parsed scenario. Validation problems abort with
/// exit code 2; solver failures become rows with a non-`ok` status.
pub fn run(req: &RunRequest, scenario: &Scenario) -> Result<RunOutcome, CliError> {
    let observable = match &req.observable {
        Some(spec) => spec.parse::<Observable>().map_err(|e| CliError::validation(format!("observable: {e}")))?,
        None => match scenario.boundary {
            Boundary::Spin { .. } => Observable::Pauli(Axis::Z),
            _ => Observable::Symbol(PolynomialSymbol::q()),
        },
    };
    if req.command == Command::Sweep && req.sweep.is_none() {
        return Err(CliError::validation("the sweep command needs --sweep PARAM=v1,v2,..."));
    }
    if !(req.sigma.is_finite() && req.sigma > 0.0) {
        return Err(CliError::validation("--sigma must be positive"));
    }
    if !(req.epsilon.is_finite() && req.epsilon > 0.0) {
        return Err(CliError::validation("--epsilon must be positive"));
    }
    if req.samples > 0 && !matches!(&req.sweep, Some(s) if s.param == SweepParam::G) {
        return Err(CliError::validation("--samples needs a coupling sweep (--sweep g=...)"));
    }
    let variants = variants(req, scenario)?;

    let per_variant: Vec<Result<Vec<Record>, CliError>> = variants
        .par_iter()
        .enumerate()
        .map(|(k, v)| evaluate(req, &observable, v, k as u64))
        .collect();

    let mut records = vec![];
    for rows in per_variant {
        records.extend(rows?);
    }
    let mut exit_code = EXIT_OK;
    let mut diagnostics = vec![];
    for r in &records {
        if r.status != "ok" {
            let code = if r.status == "orthogonal_postselection" || r.status == "zero_norm" {
                EXIT_ORTHOGONAL
            } else {
                EXIT_NO_CONVERGENCE
            };
            exit_code = exit_code.max(code);
            diagnostics.push(format!("ERROR {code} {} failed at t={}{}: {}", r.method, r.t, sweep_note(r), r.status));
        } else if let Some(ov) = r.overlap_abs.filter(|ov| *ov < LOW_OVERLAP) {
            diagnostics.push(format!("WARNING low_overlap {} at t={}{}: overlap_abs={ov:e}", r.method, r.t, sweep_note(r)));
        }
    }
    Ok(RunOutcome { records, exit_code, diagnostics })
}

fn sweep_note(r: &Record) -> String {
    match (&r.sweep_param, r.sweep_value) {
        (Some(p), Some(v)) => format!(" {p}={v}"),
        _ => String::new(),
    }
}

fn variants(req: &RunRequest, base: &Scenario) -> Result<Vec<Variant>, CliError> {
    let sweep_points: Vec<Option<(SweepParam, f64)>> = match &req.sweep {
        None => vec![None],
        Some(spec) => {
            if spec.values.is_empty() || spec.values.iter().any(|v| !v.is_finite()) {
                return Err(CliError::validation("sweep values must be finite and nonempty"));
            }
            spec.values.iter().map(|&v| Some((spec.param, v))).collect()
        }
    };
    let mut out = vec![];
    for point in sweep_points {
        let mut s = base.clone();
        match point {
            Some((SweepParam::Hbar, v)) => s.hbar = v,
            Some((SweepParam::TEnd, v)) => s.t_end = v,
            Some((SweepParam::Alpha, v)) => match &mut s.boundary {
                Boundary::Spin { pre, .. } => {
                    *pre = SpinLabel::new(2.0 * v, 0.0).map_err(|e| CliError::validation(format!("alpha={v}: {e}")))?
                }
                _ => return Err(CliError::validation("alpha sweeps need a spin scenario")),
            },
            Some((SweepParam::G, v)) => {
                if req.command != Command::Pointer {
                    return Err(CliError::validation("g sweeps apply to the pointer command only"));
                }
                PointerConfig::new(v, req.sigma, s.hbar)?;
                if v == 0.0 {
                    return Err(CliError::validation("g = 0 carries no information about the weak value"));
                }
            }
            None => {}
        }
        s.validate().map_err(|e| CliError::validation(format!("{}{e}", point_prefix(point))))?;
        let times = match &req.times {
            Some(ts) if ts.is_empty() => return Err(CliError::validation("--times is empty")),
            Some(ts) => ts.clone(),
            None => vec![0.5 * (s.t_start + s.t_end)],
        };
        for &t in &times {
            s.check_time(t).map_err(|e| CliError::validation(format!("{}{e}", point_prefix(point))))?;
        }
        out.push(Variant { scenario: s, sweep: point, times });
    }
    Ok(out)
}

fn point_prefix(point: Option<(SweepParam, f64)>) -> String {
    point.map(|(p, v)| format!("{}={v}: ", p.name())).unwrap_or_default()
}

fn evaluate(req: &RunRequest, obs: &Observable, v: &Variant, index: u64) -> Result<Vec<Record>, CliError> {
    let mut rows = match req.command {
        Command::Exact => exact_rows(req, obs, v)?,
        Command::Semiclassical => semiclassical_rows(req, obs, v)?,
        Command::Gf => gf_rows(req, obs, v)?,
        Command::Pointer => pointer_rows(req, obs, v, index)?,
        Command::Compare | Command::Sweep => {
            let ex = exact_rows(req, obs, v)?;
            let sc = semiclassical_rows(req, obs, v)?;
            let mut rows = Vec::with_capacity(2 * ex.len());
            for (mut a, mut b) in ex.into_iter().zip(sc) {
                if let (Some(ar), Some(ai), Some(br), Some(bi)) = (a.re_w, a.im_w, b.re_w, b.im_w) {
                    let d = Complex64::new(ar - br, ai - bi).norm();
                    a.abs_diff = Some(d);
                    b.abs_diff = Some(d);
                }
                rows.push(a);
                rows.push(b);
            }
            rows
        }
    };
    for r in &mut rows {
        if let Some((p, val)) = v.sweep {
            r.sweep_param = Some(p.name().to_string());
            r.sweep_value = Some(val);
        }
        if !req.timing {
            r.wallclock_ms = 0.0;
        }
    }
    Ok(rows)
}

/// Splits per-point failures (kept as status rows) from validation errors (fatal).
fn row_or_status(method: &str, t: f64, res: Result<Record, Error>) -> Result<Record, CliError> {
    match res {
        Ok(r) => Ok(r),
        Err(e) if exit_code(&e) == EXIT_VALIDATION => Err(e.into()),
        Err(e) => {
            let mut r = Record::new(method, t);
            r.status = status_of(&e).to_string();
            Ok(r)
        }
    }
}

fn from_result(method: &str, w: &WeakValueResult, ms: f64) -> Record {
    let mut r = Record::new(method, w.time);
    r.re_w = Some(w.value.re);
    r.im_w = Some(w.value.im);
    r.overlap_abs = Some(w.overlap_abs());
    r.residual = w.diagnostic("residual").or_else(|| w.diagnostic("extrapolation_error"));
    r.caustic_indicator = w.diagnostic("caustic_indicator");
    r.multi_root_flag = w.diagnostic("multi_root_flag").map(|f| f != 0.0);
    r.wallclock_ms = ms;
    r
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Hilbert space and matrix of the observable for the exact engine.
fn operator_for(s: &Scenario, obs: &Observable) -> Result<(HilbertSpec, OperatorMatrix), CliError> {
    let space = match (&s.boundary, obs) {
        (Boundary::Spin { .. }, Observable::Symbol(_)) => {
            return Err(CliError::validation("spin scenarios take sigma_x|y|z or identity"))
        }
        (Boundary::Spin { .. }, _) => HilbertSpec::Qubit,
        (_, Observable::Pauli(_)) => return Err(CliError::validation("Pauli observables need a spin scenario")),
        (_, Observable::Symbol(sym)) => default_space(s, &[sym])?,
        (_, Observable::Identity) => default_space(s, &[])?,
    };
    let matrix = match obs {
        Observable::Identity => OperatorMatrix::identity(space.dim()),
        Observable::Pauli(Axis::X) => OperatorMatrix::pauli_x(),
        Observable::Pauli(Axis::Y) => OperatorMatrix::pauli_y(),
        Observable::Pauli(Axis::Z) => OperatorMatrix::pauli_z(),
        Observable::Symbol(sym) => build_operator(sym, space, s.hbar)?,
    };
    Ok((space, matrix))
}

fn exact_rows(_req: &RunRequest, obs: &Observable, v: &Variant) -> Result<Vec<Record>, CliError> {
    let start = Instant::now();
    let (space, a) = operator_for(&v.scenario, obs)?;
    let sys = ExactSystem::new(&v.scenario, space)?;
    let setup = elapsed_ms(start);
    v.times
        .iter()
        .map(|&t| {
            let start = Instant::now();
            let res = sys.weak_value(&a, t).map(|w| from_result("exact", &w, setup + elapsed_ms(start)));
            row_or_status("exact", t, res)
        })
        .collect()
}

fn semiclassical_rows(_req: &RunRequest, obs: &Observable, v: &Variant) -> Result<Vec<Record>, CliError> {
    let s = &v.scenario;
    let start = Instant::now();
    if let Boundary::Spin { pre, post } = s.boundary {
        let res = spin_weak_values_semiclassical(pre, post).and_then(|w| Ok((w, spin_overlap_abs(pre, post)?)));
        return v
            .times
            .iter()
            .map(|&t| {
                let res = res.clone().and_then(|((wx, wy, wz), overlap)| {
                    let value = match obs {
                        Observable::Identity => Complex64::new(1.0, 0.0),
                        Observable::Pauli(Axis::X) => wx,
                        Observable::Pauli(Axis::Y) => wy,
                        Observable::Pauli(Axis::Z) => wz,
                        Observable::Symbol(_) => {
                            return Err(Error::InvalidArgument("spin scenarios take sigma_x|y|z or identity".into()))
                        }
                    };
                    let w = WeakValueResult::new(value, t, weakline_core::model::Method::ClosedForm, overlap);
                    Ok(from_result("semiclassical", &w, elapsed_ms(start)))
                });
                row_or_status("semiclassical", t, res)
            })
            .collect();
    }
    let symbol = match obs {
        Observable::Symbol(sym) => sym.clone(),
        Observable::Identity => PolynomialSymbol::constant(1.0),
        Observable::Pauli(_) => return Err(CliError::validation("Pauli observables need a spin scenario")),
    };
    let traj: Result<TrajectorySolution, Error> = shoot(s, &ShootingOptions::default());
    let setup = elapsed_ms(start);
    v.times
        .iter()
        .map(|&t| {
            let start = Instant::now();
            let res = traj
                .as_ref()
                .map_err(Clone::clone)
                .and_then(|tr| weak_value_semiclassical(tr, &symbol, t))
                .map(|w| from_result("semiclassical", &w, setup + elapsed_ms(start)));
            row_or_status("semiclassical", t, res)
        })
        .collect()
}

fn gf_rows(req: &RunRequest, obs: &Observable, v: &Variant) -> Result<Vec<Record>, CliError> {
    let s = &v.scenario;
    let (space, a) = operator_for(s, obs)?;
    let width = req.bin_width.unwrap_or(s.duration() / 64.0);
    v.times
        .iter()
        .map(|&t| {
            let start = Instant::now();
            let res = weak_value_via_gf(s, &a, t, space, req.epsilon, width)
                .map(|w| from_result("generating_functional", &w, elapsed_ms(start)));
            row_or_status("generating_functional", t, res)
        })
        .collect()
}

fn pointer_rows(req: &RunRequest, obs: &Observable, v: &Variant, index: u64) -> Result<Vec<Record>, CliError> {
    let s = &v.scenario;
    let (space, a) = operator_for(s, obs)?;
    let sys = ExactSystem::new(s, space)?;
    let g = v.sweep.and_then(|(p, val)| (p == SweepParam::G).then_some(val));
    v.times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let start = Instant::now();
            let res = match g {
                None => default_ladder(&a, req.sigma, 4)
                    .and_then(|ladder| recover_weak_value(&sys, &a, t, req.sigma, &ladder))
                    .map(|w| from_result("pointer", &w, elapsed_ms(start))),
                Some(g) => finite_coupling(req, &sys, &a, t, g, index.wrapping_mul(1 << 20).wrapping_add(k as u64))
                    .map(|mut r| {
                        r.wallclock_ms = elapsed_ms(start);
                        r
                    }),
            };
            row_or_status("pointer", t, res)
        })
        .collect()
}

/// Weak-value estimate from a single coupling: `<x>/g` and `<p>/(g kappa)`; with
/// `--samples` the real part comes from simulated readouts instead.
fn finite_coupling(
    req: &RunRequest,
    sys: &ExactSystem,
    a: &OperatorMatrix,
    t: f64,
    g: f64,
    stream: u64,
) -> Result<Record, Error> {
    let cfg = PointerConfig::new(g, req.sigma, sys.hbar())?;
    let (fwd, bwd) = sys.states_at(t)?;
    let ps = couple_and_postselect(&fwd, &bwd, a, cfg)?;
    let (mx, mp, vx) = pointer_moments(&ps, cfg);
    let mut r = Record::new("pointer", t);
    r.im_w = Some(mp / (g * momentum_response(req.sigma, sys.hbar())));
    r.overlap_abs = Some(bwd.dotc(&fwd).norm());
    if req.samples > 0 {
        let xs = sample_readouts(&ps, req.samples, req.seed.wrapping_add(stream));
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        r.re_w = Some(mean / g);
        r.residual = Some((vx / req.samples as f64).sqrt() / g.abs());
    } else {
        r.re_w = Some(mx / g);
    }
    Ok(r)
}
