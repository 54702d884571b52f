use super::phase::ComplexPhasePoint;
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::fmt;

/// A classical observable `sum c_mn q^m p^n` over complex phase space.
///
/// Keys are `(m, n)` exponent pairs; zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PolynomialSymbol {
    terms: BTreeMap<(u32, u32), Complex64>,
}

impl PolynomialSymbol {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::from_terms([((0, 0), Complex64::new(c, 0.0))])
    }

    pub fn monomial(m: u32, n: u32, c: Complex64) -> Self {
        Self::from_terms([((m, n), c)])
    }

    pub fn q() -> Self {
        Self::monomial(1, 0, Complex64::new(1.0, 0.0))
    }

    pub fn p() -> Self {
        Self::monomial(0, 1, Complex64::new(1.0, 0.0))
    }

    /// `(q^2 + p^2) / 2`
    pub fn harmonic() -> Self {
        Self::from_real_terms([(2, 0, 0.5), (0, 2, 0.5)])
    }

    /// `(q^2 + p^2) / 2 + lambda q^4`
    pub fn quartic(lambda: f64) -> Self {
        Self::from_real_terms([(2, 0, 0.5), (0, 2, 0.5), (4, 0, lambda)])
    }

    /// Builds a symbol, summing coefficients of repeated exponent pairs.
    pub fn from_terms<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = ((u32, u32), Complex64)>,
    {
        let mut map = BTreeMap::new();
        for (key, c) in terms {
            *map.entry(key).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        map.retain(|_, c: &mut Complex64| *c != Complex64::new(0.0, 0.0));
        Self { terms: map }
    }

    pub fn from_real_terms<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (u32, u32, f64)>,
    {
        Self::from_terms(terms.into_iter().map(|(m, n, c)| ((m, n), Complex64::new(c, 0.0))))
    }

    pub fn terms(&self) -> impl Iterator<Item = ((u32, u32), Complex64)> + '_ {
        self.terms.iter().map(|(&k, &c)| (k, c))
    }

    pub fn coefficient(&self, m: u32, n: u32) -> Complex64 {
        self.terms.get(&(m, n)).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree `max(m + n)`; zero for the zero symbol.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|&(m, n)| m + n).max().unwrap_or(0)
    }

    pub fn has_real_coefficients(&self) -> bool {
        self.terms.values().all(|c| c.im == 0.0)
    }

    pub fn eval(&self, pt: ComplexPhasePoint) -> Complex64 {
        if self.terms.is_empty() {
            return Complex64::new(0.0, 0.0);
        }
        let max_m = self.terms.keys().map(|k| k.0).max().unwrap_or(0) as usize;
        let max_n = self.terms.keys().map(|k| k.1).max().unwrap_or(0) as usize;
        let q_pows = powers(pt.q, max_m);
        let p_pows = powers(pt.p, max_n);
        self.terms
            .iter()
            .map(|(&(m, n), &c)| c * q_pows[m as usize] * p_pows[n as usize])
            .sum()
    }

    pub fn d_dq(&self) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .filter(|(k, _)| k.0 > 0)
                .map(|(&(m, n), &c)| ((m - 1, n), c * m as f64)),
        )
    }

    pub fn d_dp(&self) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .filter(|(k, _)| k.1 > 0)
                .map(|(&(m, n), &c)| ((m, n - 1), c * n as f64)),
        )
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::from_terms(self.terms.iter().map(|(&k, &c)| (k, c * s)))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_terms(self.terms().chain(other.terms()))
    }

    /// Commutative product of two symbols.
    pub fn mul(&self, other: &Self) -> Self {
        Self::from_terms(self.terms.iter().flat_map(|(&(m1, n1), &c1)| {
            other
                .terms
                .iter()
                .map(move |(&(m2, n2), &c2)| ((m1 + m2, n1 + n2), c1 * c2))
        }))
    }
}

/// Returns `(dS/dq, dS/dp)`.
pub fn symbol_gradient(s: &PolynomialSymbol) -> (PolynomialSymbol, PolynomialSymbol) {
    (s.d_dq(), s.d_dp())
}

pub fn eval_symbol(s: &PolynomialSymbol, pt: ComplexPhasePoint) -> Complex64 {
    s.eval(pt)
}

fn powers(z: Complex64, max: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(max + 1);
    let mut acc = Complex64::new(1.0, 0.0);
    out.push(acc);
    for _ in 0..max {
        acc *= z;
        out.push(acc);
    }
    out
}

impl fmt::Display for PolynomialSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (&(m, n), c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if c.im == 0.0 {
                write!(f, "{}", c.re)?;
            } else {
                write!(f, "({}{:+}i)", c.re, c.im)?;
            }
            match m {
                0 => {}
                1 => write!(f, "*q")?,
                _ => write!(f, "*q^{m}")?,
            }
            match n {
                0 => {}
                1 => write!(f, "*p")?,
                _ => write!(f, "*p^{n}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    // Horner in q for each power of p: an evaluation path independent of `powers`.
    fn horner_eval(s: &PolynomialSymbol, pt: ComplexPhasePoint) -> Complex64 {
        let max_m = s.terms().map(|((m, _), _)| m).max().unwrap_or(0);
        let max_n = s.terms().map(|((_, n), _)| n).max().unwrap_or(0);
        let mut total = c(0.0, 0.0);
        for n in (0..=max_n).rev() {
            let mut inner = c(0.0, 0.0);
            for m in (0..=max_m).rev() {
                inner = inner * pt.q + s.coefficient(m, n);
            }
            total = total * pt.p + inner;
        }
        total
    }

    #[test]
    fn eval_examples() {
        let q = PolynomialSymbol::q();
        assert_eq!(q.eval(ComplexPhasePoint::new(c(2.0, 1.0), c(0.0, 0.0))), c(2.0, 1.0));

        let h = PolynomialSymbol::harmonic();
        assert_eq!(h.eval(ComplexPhasePoint::real(0.0, 3.0)), c(4.5, 0.0));

        let s = PolynomialSymbol::monomial(2, 1, c(1.0, 0.0));
        let pt = ComplexPhasePoint::new(c(1.0, 1.0), c(2.0, 0.0));
        let v = s.eval(pt);
        assert!((v - c(0.0, 4.0)).norm() < 1e-15);
        assert!((horner_eval(&s, pt) - c(0.0, 4.0)).norm() < 1e-15);
    }

    #[test]
    fn zero_point_is_constant_term() {
        let s = PolynomialSymbol::from_real_terms([(0, 0, 1.5), (3, 1, 2.0), (0, 2, -1.0)]);
        assert_eq!(s.eval(ComplexPhasePoint::real(0.0, 0.0)), c(1.5, 0.0));
    }

    #[test]
    fn duplicates_merge_and_zeros_drop() {
        let s = PolynomialSymbol::from_real_terms([(1, 0, 1.0), (1, 0, 2.0), (0, 1, 1.0), (0, 1, -1.0)]);
        assert_eq!(s.len(), 1);
        assert_eq!(s.coefficient(1, 0), c(3.0, 0.0));
    }

    #[test]
    fn gradient_examples() {
        let (dq, dp) = symbol_gradient(&PolynomialSymbol::monomial(2, 0, c(1.0, 0.0)));
        assert_eq!(dq, PolynomialSymbol::monomial(1, 0, c(2.0, 0.0)));
        assert!(dp.is_zero());

        let (dq, dp) = symbol_gradient(&PolynomialSymbol::harmonic());
        assert_eq!(dq, PolynomialSymbol::q());
        assert_eq!(dp, PolynomialSymbol::p());

        let (dq, dp) = symbol_gradient(&PolynomialSymbol::monomial(3, 2, c(1.0, 0.0)));
        assert_eq!(dq, PolynomialSymbol::monomial(2, 2, c(3.0, 0.0)));
        assert_eq!(dp, PolynomialSymbol::monomial(3, 1, c(2.0, 0.0)));
    }

    #[test]
    fn square_matches_pointwise_square() {
        let s = PolynomialSymbol::from_real_terms([(1, 0, 1.0), (0, 1, -0.5), (2, 1, 0.25)]);
        let pt = ComplexPhasePoint::new(c(0.3, -0.7), c(1.1, 0.2));
        let lhs = s.mul(&s).eval(pt);
        let rhs = s.eval(pt).powi(2);
        assert!((lhs - rhs).norm() < 1e-14);
    }

    fn arb_symbol() -> impl Strategy<Value = PolynomialSymbol> {
        prop::collection::vec((0u32..4, 0u32..4, -2.0..2.0f64, -2.0..2.0f64), 1..6).prop_map(|ts| {
            PolynomialSymbol::from_terms(ts.into_iter().map(|(m, n, re, im)| ((m, n), c(re, im))))
        })
    }

    proptest! {
        #[test]
        fn mixed_partials_commute(s in arb_symbol()) {
            prop_assert_eq!(s.d_dq().d_dp(), s.d_dp().d_dq());
        }

        #[test]
        fn derivative_matches_central_difference(
            s in arb_symbol(),
            qr in -1.5..1.5f64, qi in -1.5..1.5f64, pr in -1.5..1.5f64, pi in -1.5..1.5f64,
        ) {
            let h = 1e-5;
            let pt = ComplexPhasePoint::new(c(qr, qi), c(pr, pi));
            let shift_q = |d: f64| ComplexPhasePoint::new(pt.q + d, pt.p);
            let shift_p = |d: f64| ComplexPhasePoint::new(pt.q, pt.p + d);
            let fd_q = (s.eval(shift_q(h)) - s.eval(shift_q(-h))) / (2.0 * h);
            let fd_p = (s.eval(shift_p(h)) - s.eval(shift_p(-h))) / (2.0 * h);
            let an_q = s.d_dq().eval(pt);
            let an_p = s.d_dp().eval(pt);
            // absolute floor covers derivatives that vanish at the sample point
            let scale = 1.0 + s.terms().map(|(_, c)| c.norm()).sum::<f64>() * 100.0;
            prop_assert!((fd_q - an_q).norm() <= 1e-8 * an_q.norm().max(scale));
            prop_assert!((fd_p - an_p).norm() <= 1e-8 * an_p.norm().max(scale));
        }

        #[test]
        fn horner_agrees_with_eval(
            s in arb_symbol(),
            qr in -2.0..2.0f64, qi in -2.0..2.0f64, pr in -2.0..2.0f64, pi in -2.0..2.0f64,
        ) {
            let pt = ComplexPhasePoint::new(c(qr, qi), c(pr, pi));
            let a = s.eval(pt);
            let b = horner_eval(&s, pt);
            prop_assert!((a - b).norm() <= 1e-12 * (1.0 + a.norm()));
        }
    }
}
