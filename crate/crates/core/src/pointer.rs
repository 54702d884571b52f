//! Von Neumann pointer: impulsive coupling `exp(-i g A p / hbar)` of a system to a
//! Gaussian pointer, postselection, and the resulting pointer statistics.
//!
//! The pointer wavefunction is `G(x) = (2 pi sigma^2)^(-1/4) exp(-x^2 / 4 sigma^2)`,
//! so `|G|^2` is a normal density of standard deviation `sigma`. For two copies
//! centered at `a` and `b`:
//!
//! * `<G_a|G_b> = exp(-(a-b)^2 / 8 sigma^2) =: S`
//! * `<G_a|x|G_b> = m S` with `m = (a+b)/2`, and `<G_a|x^2|G_b> = (m^2 + sigma^2) S`
//! * `<G_a|p|G_b> = i hbar (a-b) / (4 sigma^2) S`
//!
//! Expanding the moments to first order in `g` gives `<x> = g Re W` and
//! `<p> = g Im W hbar / (2 sigma^2)`, hence [`momentum_response`].

use crate::error::{Error, Result};
use crate::exact::{CVector, ExactSystem, OperatorMatrix};
use crate::model::{Method, WeakValueResult};
use crate::par::{self, Execution};
use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use statrs::function::erf::erf;
use std::f64::consts::{PI, SQRT_2};

/// Smallest admissible `<phi|phi>` after postselection.
pub const NORM_FLOOR: f64 = 1e-300;
/// Default weakness: `g max|a_j| <= sigma / WEAKNESS`.
pub const WEAKNESS: f64 = 25.0;
const SAMPLE_CHUNK: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointerConfig {
    pub g: f64,
    pub sigma: f64,
    pub hbar: f64,
}

impl PointerConfig {
    pub fn new(g: f64, sigma: f64, hbar: f64) -> Result<Self> {
        let cfg = Self { g, sigma, hbar };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.g.is_finite() {
            return Err(Error::InvalidArgument(format!("coupling g must be finite, got {}", self.g)));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::InvalidArgument(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.hbar.is_finite() && self.hbar > 0.0) {
            return Err(Error::InvalidArgument(format!("hbar must be positive, got {}", self.hbar)));
        }
        Ok(())
    }
}

/// Postselected pointer wavefunction `sum_j weight_j G(x - center_j)` (unnormalized).
#[derive(Debug, Clone, PartialEq)]
pub struct PointerState {
    pub components: Vec<(Complex64, f64)>,
    pub norm: f64,
    pub sigma: f64,
}

impl PointerState {
    /// Build from components, computing the norm by Gaussian overlap algebra.
    pub fn new(components: Vec<(Complex64, f64)>, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
        }
        let norm = pair_sum(&components, sigma, |_, _| Complex64::new(1.0, 0.0)).re;
        if !(norm > NORM_FLOOR) {
            return Err(Error::ZeroNorm);
        }
        Ok(Self { components, norm, sigma })
    }

    /// `phi(x)`.
    pub fn amplitude(&self, x: f64) -> Complex64 {
        self.components.iter().map(|&(w, c)| w * gaussian(x - c, self.sigma)).sum()
    }

    /// Normalized readout density `|phi(x)|^2 / norm`.
    pub fn density(&self, x: f64) -> f64 {
        self.amplitude(x).norm_sqr() / self.norm
    }

    /// Closed-form distribution function of the readout density.
    pub fn cdf(&self, x: f64) -> f64 {
        let s = self.sigma;
        let v = pair_sum(&self.components, s, |a, b| {
            let m = 0.5 * (a + b);
            Complex64::new(0.5 * (1.0 + erf((x - m) / (s * SQRT_2))), 0.0)
        });
        v.re / self.norm
    }
}

fn gaussian(x: f64, sigma: f64) -> f64 {
    (2.0 * PI * sigma * sigma).powf(-0.25) * (-x * x / (4.0 * sigma * sigma)).exp()
}

/// `sum_{a,b} conj(w_a) w_b <G_a|G_b> f(c_a, c_b)`.
fn pair_sum(components: &[(Complex64, f64)], sigma: f64, f: impl Fn(f64, f64) -> Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &(wa, a) in components {
        for &(wb, b) in components {
            let s = (-(a - b) * (a - b) / (8.0 * sigma * sigma)).exp();
            acc += wa.conj() * wb * s * f(a, b);
        }
    }
    acc
}

/// Distinct eigenvalues of a Hermitian operator with their spectral projectors.
pub fn spectral_projectors(a: &OperatorMatrix) -> Result<Vec<(f64, OperatorMatrix)>> {
    if !a.is_hermitian() {
        return Err(Error::InvalidArgument(format!(
            "observable is not Hermitian (error {:.3e})",
            a.hermiticity_error()
        )));
    }
    let m = a.matrix();
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let scale = eig.eigenvalues.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    let tol = 1e-9 * scale;
    let mut groups: Vec<(Vec<f64>, Vec<usize>)> = Vec::new();
    for i in order {
        let v = eig.eigenvalues[i];
        match groups.last_mut() {
            Some((vals, idx)) if (v - vals[0]).abs() <= tol => {
                vals.push(v);
                idx.push(i);
            }
            _ => groups.push((vec![v], vec![i])),
        }
    }
    Ok(groups
        .into_iter()
        .map(|(vals, idx)| {
            let value = vals.iter().sum::<f64>() / vals.len() as f64;
            let dim = m.nrows();
            let mut proj = nalgebra::DMatrix::zeros(dim, dim);
            for i in idx {
                let col = eig.eigenvectors.column(i);
                proj += &col * col.adjoint();
            }
            (value, OperatorMatrix::new(proj).expect("square projector"))
        })
        .collect())
}

/// Pointer state after coupling `pre` to the pointer through `A` and projecting on `post`.
pub fn couple_and_postselect(
    pre: &CVector,
    post: &CVector,
    a: &OperatorMatrix,
    cfg: PointerConfig,
) -> Result<PointerState> {
    cfg.validate()?;
    if pre.len() != a.dim() || post.len() != a.dim() {
        return Err(Error::InvalidArgument("state and observable dimensions disagree".into()));
    }
    let mut components: Vec<(Complex64, f64)> = Vec::new();
    for (value, proj) in spectral_projectors(a)? {
        let weight = post.dotc(&proj.apply(pre));
        let center = cfg.g * value;
        // coincident centers (g = 0) collapse into one Gaussian
        match components.iter_mut().find(|(_, c)| *c == center) {
            Some((w, _)) => *w += weight,
            None => components.push((weight, center)),
        }
    }
    components.retain(|(w, _)| *w != Complex64::new(0.0, 0.0));
    if components.is_empty() {
        return Err(Error::ZeroNorm);
    }
    PointerState::new(components, cfg.sigma)
}

/// Exact `(<x>, <p>, Var x)` of the normalized pointer state.
pub fn pointer_moments(ps: &PointerState, cfg: PointerConfig) -> (f64, f64, f64) {
    let s2 = ps.sigma * ps.sigma;
    let x1 = pair_sum(&ps.components, ps.sigma, |a, b| Complex64::new(0.5 * (a + b), 0.0)).re / ps.norm;
    let x2 = pair_sum(&ps.components, ps.sigma, |a, b| {
        let m = 0.5 * (a + b);
        Complex64::new(m * m + s2, 0.0)
    })
    .re
        / ps.norm;
    let p1 = pair_sum(&ps.components, ps.sigma, |a, b| Complex64::new(0.0, cfg.hbar * (a - b) / (4.0 * s2))).re
        / ps.norm;
    (x1, p1, x2 - x1 * x1)
}

/// `kappa` in `<p> ~ g kappa Im W`.
pub fn momentum_response(sigma: f64, hbar: f64) -> f64 {
    hbar / (2.0 * sigma * sigma)
}

/// Geometric ladder `g_0, g_0/2, ...` with `g_0 max|a_j| = sigma / 25`.
pub fn default_ladder(a: &OperatorMatrix, sigma: f64, len: usize) -> Result<Vec<f64>> {
    let spread = spectral_projectors(a)?.iter().fold(0.0f64, |m, (v, _)| m.max(v.abs()));
    let g0 = sigma / (WEAKNESS * if spread > 0.0 { spread } else { 1.0 });
    Ok((0..len).map(|k| g0 / 2f64.powi(k as i32)).collect())
}

/// Neville evaluation at `x = 0` of the interpolant through `(xs, ys)`, plus the
/// change contributed by the last tableau level as an error estimate.
pub fn extrapolate_to_zero(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len();
    let mut p = ys.to_vec();
    let mut last_change = f64::INFINITY;
    for level in 1..n {
        for i in 0..n - level {
            let (xi, xj) = (xs[i], xs[i + level]);
            let new = (xi * p[i + 1] - xj * p[i]) / (xi - xj);
            if i == 0 {
                last_change = (new - p[0]).abs().min((new - p[1]).abs());
            }
            p[i] = new;
        }
    }
    (p[0], if n > 1 { last_change } else { f64::INFINITY })
}

/// Weak value read off the pointer in the `g -> 0` limit: `<x>/g -> Re W` and
/// `<p>/(g kappa) -> Im W`, each extrapolated in `g^2` over `ladder`.
pub fn recover_from_states(
    pre: &CVector,
    post: &CVector,
    a: &OperatorMatrix,
    sigma: f64,
    hbar: f64,
    ladder: &[f64],
) -> Result<(Complex64, f64)> {
    if ladder.len() < 4 {
        return Err(Error::InvalidArgument(format!("need at least 4 couplings, got {}", ladder.len())));
    }
    if ladder.iter().any(|g| !(g.is_finite() && *g != 0.0)) {
        return Err(Error::InvalidArgument("couplings must be finite and non-zero".into()));
    }
    let kappa = momentum_response(sigma, hbar);
    let mut xs = Vec::with_capacity(ladder.len());
    let mut re = Vec::with_capacity(ladder.len());
    let mut im = Vec::with_capacity(ladder.len());
    for &g in ladder {
        let cfg = PointerConfig::new(g, sigma, hbar)?;
        let ps = couple_and_postselect(pre, post, a, cfg)?;
        let (mx, mp, _) = pointer_moments(&ps, cfg);
        xs.push(g * g);
        re.push(mx / g);
        im.push(mp / (g * kappa));
    }
    let (w_re, e_re) = extrapolate_to_zero(&xs, &re);
    let (w_im, e_im) = extrapolate_to_zero(&xs, &im);
    Ok((Complex64::new(w_re, w_im), e_re.hypot(e_im)))
}

/// [`recover_from_states`] for the evolved states of `sys` at time `t`.
pub fn recover_weak_value(
    sys: &ExactSystem,
    a: &OperatorMatrix,
    t: f64,
    sigma: f64,
    ladder: &[f64],
) -> Result<WeakValueResult> {
    let (fwd, bwd) = sys.states_at(t)?;
    let (w, err) = recover_from_states(&fwd, &bwd, a, sigma, sys.hbar(), ladder)?;
    let overlap = bwd.dotc(&fwd).norm();
    Ok(WeakValueResult::new(w, t, Method::Pointer, overlap)
        .with("extrapolation_error", err)
        .with("g_min", ladder.iter().fold(f64::INFINITY, |m, g| m.min(g.abs())))
        .with("sigma", sigma))
}

/// `n` readouts from `|phi|^2 / norm`, deterministic in `seed`.
pub fn sample_readouts(ps: &PointerState, n: usize, seed: u64) -> Vec<f64> {
    sample_readouts_with(ps, n, seed, Execution::default())
}

/// Rejection sampling against the envelope `(sum|w|) sum_j |w_j| N(c_j, sigma^2)`, which
/// bounds `|phi|^2` by Cauchy-Schwarz. Work is split into fixed chunks, each with its
/// own ChaCha stream, so the output does not depend on `exec` or the thread count.
pub fn sample_readouts_with(ps: &PointerState, n: usize, seed: u64, exec: Execution) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    let mags: Vec<f64> = ps.components.iter().map(|(w, _)| w.norm()).collect();
    let total: f64 = mags.iter().sum();
    let s2 = ps.sigma * ps.sigma;
    let normal_pdf = |x: f64, c: f64| (-(x - c) * (x - c) / (2.0 * s2)).exp() / (2.0 * PI * s2).sqrt();
    let chunks = n.div_ceil(SAMPLE_CHUNK);
    let parts = par::map_range(exec, chunks, |k| {
        let quota = SAMPLE_CHUNK.min(n - k * SAMPLE_CHUNK);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let unit = Normal::new(0.0, ps.sigma).expect("positive sigma");
        let mut out = Vec::with_capacity(quota);
        while out.len() < quota {
            let mut u = rng.random::<f64>() * total;
            let mut j = 0;
            while j + 1 < mags.len() && u >= mags[j] {
                u -= mags[j];
                j += 1;
            }
            let x = ps.components[j].1 + unit.sample(&mut rng);
            let envelope: f64 =
                total * ps.components.iter().zip(&mags).map(|(&(_, c), m)| m * normal_pdf(x, c)).sum::<f64>();
            if rng.random::<f64>() * envelope <= ps.amplitude(x).norm_sqr() {
                out.push(x);
            }
        }
        out
    });
    parts.into_iter().flatten().collect()
}
