use crate::error::{Error, Result};
use crate::model::PolynomialSymbol;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CVector = DVector<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Finite model of the system Hilbert space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HilbertSpec {
    Qubit,
    Fock { dim: usize },
}

impl HilbertSpec {
    pub fn dim(self) -> usize {
        match self {
            HilbertSpec::Qubit => 2,
            HilbertSpec::Fock { dim } => dim,
        }
    }
}

/// Dense complex matrix acting on a [`HilbertSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix(DMatrix<Complex64>);

impl OperatorMatrix {
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::InvalidArgument(format!(
                "operator must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self(m))
    }

    pub fn from_row_slice(dim: usize, entries: &[Complex64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::InvalidArgument("entry count does not match dim^2".into()));
        }
        Self::new(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    /// Largest entry of `|M - M^dagger|`.
    pub fn hermiticity_error(&self) -> f64 {
        let diff = &self.0 - self.0.adjoint();
        diff.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_error() < 1e-12
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self(&self.0 * s)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(&self.0 + &other.0)
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0)
    }

    /// `M - s I`.
    pub fn shift(&self, s: Complex64) -> Self {
        let mut m = self.0.clone();
        for i in 0..m.nrows() {
            m[(i, i)] -= s;
        }
        Self(m)
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        &self.0 * v
    }

    pub fn pauli_x() -> Self {
        Self(DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]))
    }

    pub fn pauli_y() -> Self {
        let i = Complex64::new(0.0, 1.0);
        Self(DMatrix::from_row_slice(2, 2, &[ZERO, -i, i, ZERO]))
    }

    pub fn pauli_z() -> Self {
        Self(DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]))
    }
}

/// Annihilation operator on `dim` Fock levels.
pub fn annihilation(dim: usize) -> DMatrix<Complex64> {
    let mut a = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// `(q, p)` with `q = sqrt(hbar/2)(a + a^dagger)`, `p = -i sqrt(hbar/2)(a - a^dagger)`.
pub fn position_momentum(dim: usize, hbar: f64) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let a = annihilation(dim);
    let ad = a.adjoint();
    let s = (hbar / 2.0).sqrt();
    let q = (&a + &ad) * Complex64::new(s, 0.0);
    let p = (&a - &ad) * Complex64::new(0.0, -s);
    (q, p)
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn matrix_power(m: &DMatrix<Complex64>, k: u32) -> DMatrix<Complex64> {
    let mut out = DMatrix::identity(m.nrows(), m.ncols());
    for _ in 0..k {
        out = &out * m;
    }
    out
}

/// Weyl-symmetrized quantization of a polynomial symbol on a truncated Fock space.
///
/// Each monomial uses `q^m p^n -> 2^-m sum_k C(m,k) q^k p^n q^(m-k)`. Products are
/// formed on `dim + m + n` levels and then cut back to `dim`, so every retained
/// matrix element equals its untruncated value.
pub fn build_operator(
    s: &PolynomialSymbol,
    space: HilbertSpec,
    hbar: f64,
) -> Result<OperatorMatrix> {
    let dim = match space {
        HilbertSpec::Fock { dim } => dim,
        HilbertSpec::Qubit => return Err(Error::UnsupportedBoundary("spin")),
    };
    if !(hbar.is_finite() && hbar > 0.0) {
        return Err(Error::InvalidArgument(format!("hbar must be positive, got {hbar}")));
    }
    for ((m, n), _) in s.terms() {
        // linear and constant terms involve no products and are exact at any size
        let needed = if m + n >= 2 { (m + n) as usize + 2 } else { 1 };
        if dim < needed {
            return Err(Error::Truncation { dim, m, n, needed });
        }
    }
    let mut out = DMatrix::zeros(dim, dim);
    for ((m, n), c) in s.terms() {
        let big = dim + (m + n) as usize;
        let (q, p) = position_momentum(big, hbar);
        let p_n = matrix_power(&p, n);
        let mut mono = DMatrix::zeros(big, big);
        for k in 0..=m {
            let term = matrix_power(&q, k) * &p_n * matrix_power(&q, m - k);
            mono += term * Complex64::new(binomial(m, k), 0.0);
        }
        mono *= Complex64::new(0.5f64.powi(m as i32), 0.0);
        out += mono.view((0, 0), (dim, dim)) * c;
    }
    Ok(OperatorMatrix(out))
}
