use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// A point of complexified phase space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexPhasePoint {
    pub q: Complex64,
    pub p: Complex64,
}

impl ComplexPhasePoint {
    pub fn new(q: Complex64, p: Complex64) -> Self {
        Self { q, p }
    }

    pub fn real(q: f64, p: f64) -> Self {
        Self::new(Complex64::new(q, 0.0), Complex64::new(p, 0.0))
    }

    pub fn is_finite(&self) -> bool {
        self.q.is_finite() && self.p.is_finite()
    }

    pub fn max_imag(&self) -> f64 {
        self.q.im.abs().max(self.p.im.abs())
    }
}

/// Coordinates after the complex symplectic (KMS) map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KmsPoint {
    pub big_q: Complex64,
    pub big_p: Complex64,
}

impl KmsPoint {
    pub fn new(big_q: Complex64, big_p: Complex64) -> Self {
        Self { big_q, big_p }
    }
}

/// The KMS matrix `[[1, -i], [-i, 1]] / sqrt(2)` as row-major entries.
pub const KMS_MATRIX: [[Complex64; 2]; 2] = [
    [Complex64::new(FRAC_1_SQRT_2, 0.0), Complex64::new(0.0, -FRAC_1_SQRT_2)],
    [Complex64::new(0.0, -FRAC_1_SQRT_2), Complex64::new(FRAC_1_SQRT_2, 0.0)],
];

/// Inverse of [`KMS_MATRIX`]: `[[1, i], [i, 1]] / sqrt(2)`.
pub const KMS_INVERSE_MATRIX: [[Complex64; 2]; 2] = [
    [Complex64::new(FRAC_1_SQRT_2, 0.0), Complex64::new(0.0, FRAC_1_SQRT_2)],
    [Complex64::new(0.0, FRAC_1_SQRT_2), Complex64::new(FRAC_1_SQRT_2, 0.0)],
];

/// `Q = (q - ip)/sqrt(2)`, `P = (-iq + p)/sqrt(2)`.
pub fn kms_transform(pt: ComplexPhasePoint) -> KmsPoint {
    KmsPoint {
        big_q: (pt.q - I * pt.p) * FRAC_1_SQRT_2,
        big_p: (pt.p - I * pt.q) * FRAC_1_SQRT_2,
    }
}

pub fn kms_inverse(kp: KmsPoint) -> ComplexPhasePoint {
    ComplexPhasePoint {
        q: (kp.big_q + I * kp.big_p) * FRAC_1_SQRT_2,
        p: (kp.big_p + I * kp.big_q) * FRAC_1_SQRT_2,
    }
}

/// 2x2 complex matrix stored row-major.
pub type Mat2 = [[Complex64; 2]; 2];

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn mat2_det(a: &Mat2) -> Complex64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

pub fn mat2_identity() -> Mat2 {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    [[one, zero], [zero, one]]
}

/// Expresses a monodromy matrix given in `(q, p)` coordinates in KMS coordinates.
pub fn monodromy_to_kms(m: &Mat2) -> Mat2 {
    mat2_mul(&mat2_mul(&KMS_MATRIX, m), &KMS_INVERSE_MATRIX)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn transform_examples() {
        let z = kms_transform(ComplexPhasePoint::real(0.0, 0.0));
        assert_eq!(z.big_q, c(0.0, 0.0));
        assert_eq!(z.big_p, c(0.0, 0.0));

        let e1 = kms_transform(ComplexPhasePoint::real(1.0, 0.0));
        assert_abs_diff_eq!((e1.big_q - c(FRAC_1_SQRT_2, 0.0)).norm(), 0.0, epsilon = 1e-16);
        assert_abs_diff_eq!((e1.big_p - c(0.0, -FRAC_1_SQRT_2)).norm(), 0.0, epsilon = 1e-16);

        let e2 = kms_transform(ComplexPhasePoint::real(0.0, 1.0));
        assert_abs_diff_eq!((e2.big_q - c(0.0, -FRAC_1_SQRT_2)).norm(), 0.0, epsilon = 1e-16);
        assert_abs_diff_eq!((e2.big_p - c(FRAC_1_SQRT_2, 0.0)).norm(), 0.0, epsilon = 1e-16);
    }

    #[test]
    fn inverse_examples() {
        let o = kms_inverse(KmsPoint::new(c(0.0, 0.0), c(0.0, 0.0)));
        assert_eq!(o, ComplexPhasePoint::real(0.0, 0.0));
        let back = kms_inverse(KmsPoint::new(c(FRAC_1_SQRT_2, 0.0), c(0.0, -FRAC_1_SQRT_2)));
        assert_abs_diff_eq!((back.q - c(1.0, 0.0)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(back.p.norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn kms_matrix_is_unimodular() {
        let det = mat2_det(&KMS_MATRIX);
        assert!((det - c(1.0, 0.0)).norm() < 1e-15);
        let prod = mat2_mul(&KMS_MATRIX, &KMS_INVERSE_MATRIX);
        let id = mat2_identity();
        for i in 0..2 {
            for j in 0..2 {
                assert!((prod[i][j] - id[i][j]).norm() < 1e-15);
            }
        }
    }

    proptest! {
        #[test]
        fn round_trip(qr in -10.0..10.0f64, qi in -10.0..10.0f64, pr in -10.0..10.0f64, pi in -10.0..10.0f64) {
            let kp = KmsPoint::new(c(qr, qi), c(pr, pi));
            let back = kms_transform(kms_inverse(kp));
            let scale = 1.0 + kp.big_q.norm().max(kp.big_p.norm());
            prop_assert!((back.big_q - kp.big_q).norm() <= 1e-15 * scale * 4.0);
            prop_assert!((back.big_p - kp.big_p).norm() <= 1e-15 * scale * 4.0);
        }
    }
}
