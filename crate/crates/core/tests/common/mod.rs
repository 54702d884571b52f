//! Randomized invariant suites shared by the integration and acceptance targets.
//! Each suite returns `(cases checked, worst observed error)` or a description of
//! the first violation.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use weakline_core::exact::{
    build_operator, default_space, spin_weak_values_exact, CVector, ExactSystem, HilbertSpec, OperatorMatrix,
    Propagator,
};
use weakline_core::model::{mat2_det, CoherentLabel, ComplexPhasePoint, PolynomialSymbol, Scenario, SpinLabel};
use weakline_core::semiclassical::{
    integrate_complex_trajectory, klauder_residuals, shoot, spin_weak_values_semiclassical, weak_value_semiclassical,
    HamiltonFlow, MultiStart, ShootingOptions,
};
use weakline_core::Error;

pub type Suite = Result<(usize, f64), String>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn unit_complex(r: &mut ChaCha8Rng, radius: f64) -> Complex64 {
    c(r.random_range(-radius..radius), r.random_range(-radius..radius))
}

/// Harmonic oscillator plus random real terms of total degree <= 4.
pub fn random_hamiltonian(r: &mut ChaCha8Rng) -> PolynomialSymbol {
    let mut terms = vec![];
    for m in 0..=4u32 {
        for n in 0..=(4 - m) {
            if r.random_bool(0.5) {
                terms.push((m, n, r.random_range(-0.2..0.2)));
            }
        }
    }
    PolynomialSymbol::harmonic().add(&PolynomialSymbol::from_real_terms(terms))
}

/// Real symbol of degree <= 2, whose Weyl quantization is Hermitian.
pub fn random_observable(r: &mut ChaCha8Rng) -> PolynomialSymbol {
    let terms: Vec<(u32, u32, f64)> = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
        .into_iter()
        .map(|(m, n)| (m, n, r.random_range(-1.0..1.0)))
        .collect();
    PolynomialSymbol::from_real_terms(terms)
}

pub fn random_spin(r: &mut ChaCha8Rng) -> SpinLabel {
    SpinLabel::new(r.random_range(0.05..PI - 0.05), r.random_range(-PI..PI)).unwrap()
}

fn random_coherent(r: &mut ChaCha8Rng, half: f64) -> CoherentLabel {
    CoherentLabel::new(r.random_range(-half..half), r.random_range(-half..half))
}

/// det(monodromy) = 1 along random complex trajectories of random quartic flows.
pub fn symplecticity(cases: usize, seed: u64) -> Suite {
    let mut r = rng(seed);
    let (mut done, mut worst) = (0, 0.0f64);
    let mut attempts = 0;
    while done < cases {
        attempts += 1;
        if attempts > 10 * cases {
            return Err(format!("only {done} of {cases} trajectories integrated"));
        }
        let h = random_hamiltonian(&mut r);
        let start = ComplexPhasePoint::new(unit_complex(&mut r, 1.0), unit_complex(&mut r, 1.0));
        let tau = r.random_range(0.1..5.0);
        let out = match integrate_complex_trajectory(&h, start, (0.0, tau), 16) {
            Ok(o) => o,
            // finite-time blowup of a complex trajectory is legitimate; draw again
            Err(Error::StepFailure { .. }) => continue,
            Err(e) => return Err(e.to_string()),
        };
        let err = (mat2_det(&out.monodromy) - 1.0).norm();
        worst = worst.max(err);
        if err > 1e-9 {
            return Err(format!("det M - 1 = {err:.3e} for H = {h}, tau = {tau}"));
        }
        done += 1;
    }
    Ok((done, worst))
}

/// `H(q(t), p(t))` constant along complex trajectories (relative to `1 + |H|`).
pub fn energy_conservation(cases: usize, seed: u64) -> Suite {
    let mut r = rng(seed);
    let (mut done, mut worst) = (0, 0.0f64);
    let mut attempts = 0;
    while done < cases {
        attempts += 1;
        if attempts > 10 * cases {
            return Err(format!("only {done} of {cases} trajectories integrated"));
        }
        let h = random_hamiltonian(&mut r);
        let flow = HamiltonFlow::new(&h).map_err(|e| e.to_string())?;
        let start = ComplexPhasePoint::new(unit_complex(&mut r, 1.0), unit_complex(&mut r, 1.0));
        let tau = r.random_range(0.1..5.0);
        let out = match integrate_complex_trajectory(&h, start, (0.0, tau), 32) {
            Ok(o) => o,
            Err(Error::StepFailure { .. }) => continue,
            Err(e) => return Err(e.to_string()),
        };
        let e0 = flow.energy(start);
        for pt in &out.points {
            let err = (flow.energy(*pt) - e0).norm() / (1.0 + e0.norm());
            worst = worst.max(err);
            if err > 1e-9 {
                return Err(format!("energy drift {err:.3e} for H = {h}"));
            }
        }
        done += 1;
    }
    Ok((done, worst))
}

/// `W(sx)^2 + W(sy)^2 + W(sz)^2 = 1` for exact and stereographic spin weak values.
pub fn pauli_sum_of_squares(cases: usize, seed: u64) -> Suite {
    let mut r = rng(seed);
    let (mut done, mut worst) = (0, 0.0f64);
    let zero = OperatorMatrix::zeros(2);
    while done < cases {
        let (pre, post) = (random_spin(&mut r), random_spin(&mut r));
        let ex = match spin_weak_values_exact(pre, post, &zero, (0.0, 1.0), 0.5) {
            Ok(w) => w,
            Err(Error::OrthogonalPostselection { .. }) => continue,
            Err(e) => return Err(e.to_string()),
        };
        let sc = spin_weak_values_semiclassical(pre, post).map_err(|e| e.to_string())?;
        for (x, y, z) in [ex, sc] {
            let scale = 1.0 + x.norm_sqr() + y.norm_sqr() + z.norm_sqr();
            let err = (x * x + y * y + z * z - 1.0).norm() / scale;
            worst = worst.max(err);
            if err > 1e-10 {
                return Err(format!("sum of squares off by {err:.3e} for {pre:?} -> {post:?}"));
            }
        }
        done += 1;
    }
    Ok((done, worst))
}

fn random_coherent_system(r: &mut ChaCha8Rng, a: &PolynomialSymbol, b: &PolynomialSymbol) -> (Scenario, HilbertSpec) {
    let h = if r.random_bool(0.5) { PolynomialSymbol::harmonic() } else { PolynomialSymbol::quartic(0.1) };
    let hbar = r.random_range(0.5..1.5);
    let s = Scenario::coherent(random_coherent(r, 1.2), random_coherent(r, 1.2), h, hbar, 0.0, r.random_range(0.2..1.5))
        .unwrap();
    let space = default_space(&s, &[a, b]).unwrap();
    (s, space)
}

/// `W(aA + bB) = a W(A) + b W(B)` and `W(I) = 1`.
pub fn linearity_and_normalization(cases: usize, seed: u64) -> Suite {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let (sa, sb) = (random_observable(&mut r), random_observable(&mut r));
        let (s, space) = random_coherent_system(&mut r, &sa, &sb);
        let sys = ExactSystem::new(&s, space).map_err(|e| e.to_string())?;
        let am = build_operator(&sa, space, s.hbar).unwrap();
        let bm = build_operator(&sb, space, s.hbar).unwrap();
        let (ka, kb) = (unit_complex(&mut r, 2.0), unit_complex(&mut r, 2.0));
        let t = r.random_range(s.t_start..s.t_end);
        let combo = am.scale(ka).add(&bm.scale(kb));
        let wa = sys.weak_value(&am, t).map_err(|e| e.to_string())?.value;
        let wb = sys.weak_value(&bm, t).map_err(|e| e.to_string())?.value;
        let wc = sys.weak_value(&combo, t).map_err(|e| e.to_string())?.value;
        let err = (wc - ka * wa - kb * wb).norm() / (ka * wa).norm().max((kb * wb).norm()).max(1e-300);
        let wi = sys.weak_value(&OperatorMatrix::identity(space.dim()), t).map_err(|e| e.to_string())?.value;
        let err_i = (wi - 1.0).norm();
        worst = worst.max(err).max(err_i);
        if err > 1e-12 || err_i > 1e-12 {
            return Err(format!("linearity {err:.3e}, W(I) - 1 = {err_i:.3e} for {s:?}"));
        }
    }
    Ok((cases, worst))
}

/// With `post = U(t'', t') pre` the weak value is the real expectation value.
pub fn preselection_only_reality(cases: usize, seed: u64) -> Suite {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let sa = random_observable(&mut r);
        let (s, space) = random_coherent_system(&mut r, &sa, &PolynomialSymbol::zero());
        let base = ExactSystem::new(&s, space).map_err(|e| e.to_string())?;
        let u = Propagator::new(base.hamiltonian(), s.hbar).map_err(|e| e.to_string())?;
        let post = u.evolve(base.pre(), s.t_end - s.t_start);
        let sys = ExactSystem::from_parts(
            space,
            s.hbar,
            (s.t_start, s.t_end),
            base.pre().clone(),
            post,
            base.hamiltonian().clone(),
        )
        .map_err(|e| e.to_string())?;
        let am = build_operator(&sa, space, s.hbar).unwrap();
        let t = r.random_range(s.t_start..s.t_end);
        let w = sys.weak_value(&am, t).map_err(|e| e.to_string())?.value;
        let psi: CVector = u.evolve(base.pre(), t - s.t_start);
        let expectation = psi.dotc(&am.apply(&psi)) / psi.dotc(&psi);
        let err = w.im.abs().max((w - expectation).norm() / (1.0 + expectation.norm()));
        worst = worst.max(err);
        if err > 1e-10 {
            return Err(format!("preselection-only weak value {w} vs <A> = {expectation}"));
        }
    }
    Ok((cases, worst))
}

/// Under `H = 0` the exact weak value does not depend on `t`.
pub fn time_constancy(cases: usize, seed: u64) -> Suite {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let sa = random_observable(&mut r);
        let s = Scenario::coherent(
            random_coherent(&mut r, 1.5),
            random_coherent(&mut r, 1.5),
            PolynomialSymbol::zero(),
            1.0,
            0.0,
            2.0,
        )
        .unwrap();
        let space = default_space(&s, &[&sa]).unwrap();
        let sys = ExactSystem::new(&s, space).map_err(|e| e.to_string())?;
        let am = build_operator(&sa, space, 1.0).unwrap();
        let ws: Vec<Complex64> = [0.0, 0.3, 1.0, 1.7, 2.0]
            .iter()
            .map(|&t| sys.weak_value(&am, t).map(|w| w.value))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let err = ws.iter().map(|w| (w - ws[0]).norm()).fold(0.0, f64::max);
        worst = worst.max(err);
        if err > 1e-12 {
            return Err(format!("H = 0 weak value varies by {err:.3e}"));
        }
    }
    Ok((cases, worst))
}

/// For `H = 0` and the harmonic oscillator the complex trajectory reproduces the
/// exact weak values of `q` and `p`, and satisfies Klauder's conditions.
pub fn quadratic_oracle_equivalence(cases: usize, seed: u64) -> Suite {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    let opts = ShootingOptions { multi_start: MultiStart::OnFailure, ..Default::default() };
    for k in 0..cases {
        let h = if k % 2 == 0 { PolynomialSymbol::zero() } else { PolynomialSymbol::harmonic() };
        let (pre, post) = (random_coherent(&mut r, 2.0), random_coherent(&mut r, 2.0));
        let tau = r.random_range(0.2..2.0);
        let s = Scenario::coherent(pre, post, h, 1.0, 0.0, tau).unwrap();
        let traj = shoot(&s, &opts).map_err(|e| e.to_string())?;
        let (rp, rq) = klauder_residuals(&traj, pre, post);
        if rp.max(rq) > 1e-12 {
            return Err(format!("boundary residual {:.3e}", rp.max(rq)));
        }
        let t = r.random_range(0.0..tau);
        let space = default_space(&s, &[&PolynomialSymbol::q()]).unwrap();
        let sys = ExactSystem::new(&s, space).map_err(|e| e.to_string())?;
        for a in [PolynomialSymbol::q(), PolynomialSymbol::p()] {
            let ex = sys.weak_value(&build_operator(&a, space, 1.0).unwrap(), t).map_err(|e| e.to_string())?;
            let sc = weak_value_semiclassical(&traj, &a, t).map_err(|e| e.to_string())?;
            let err = (ex.value - sc.value).norm();
            worst = worst.max(err);
            if err > 1e-8 {
                return Err(format!("|W_sc - W_exact| = {err:.3e} for {s:?}"));
            }
        }
    }
    Ok((cases, worst))
}

/// Largest entry of `|M - M^dagger|` for a dense complex matrix.
pub fn hermiticity(m: &DMatrix<Complex64>) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Spearman rank correlation (no ties expected).
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut out = vec![0.0; v.len()];
        for (rank, i) in idx.into_iter().enumerate() {
            out[i] = rank as f64;
        }
        out
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b) * (a - b)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    num / den
}
