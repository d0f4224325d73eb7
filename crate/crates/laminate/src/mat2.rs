//! 2x2 matrix algebra and rank-one geometry.
//!
//! The whole crate lives in the space of real 2x2 matrices. The determinant
//! is a quadratic form there, with the polarization identity
//!
//! ```text
//! det(X + Y) = det X + <cof X, Y> + det Y
//! ```
//!
//! where `cof` is the cofactor matrix and `<.,.>` the Hilbert-Schmidt inner
//! product. That identity is what makes `det` affine along rank-one lines,
//! and it is pinned by a unit test below because every hull computation
//! depends on its sign convention.

use crate::scalar::{Scalar, FLOAT_TOLERANCE};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// A 2-vector of scalars (amplitudes `a` and frequencies `n`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vec2(pub Scalar, pub Scalar);

impl Vec2 {
    pub fn new(x: impl Into<Scalar>, y: impl Into<Scalar>) -> Self {
        Vec2(x.into(), y.into())
    }

    pub fn from_ints(x: i64, y: i64) -> Self {
        Vec2(Scalar::from_int(x), Scalar::from_int(y))
    }

    pub fn dot(&self, other: &Vec2) -> Scalar {
        &self.0 * &other.0 + &self.1 * &other.1
    }

    /// Counter-clockwise quarter turn: `(x, y) -> (-y, x)`.
    pub fn perp(&self) -> Vec2 {
        Vec2(-&self.1, self.0.clone())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero() && self.1.is_zero()
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Scalar {
        Scalar::from_int(n)
    }
}

/// A 2x2 matrix with entries
/// `[[m11, m12], [m21, m22]]`, serialized as a row-major pair of rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[[Scalar; 2]; 2]", into = "[[Scalar; 2]; 2]")]
pub struct Mat2 {
    pub m11: Scalar,
    pub m12: Scalar,
    pub m21: Scalar,
    pub m22: Scalar,
}

impl From<[[Scalar; 2]; 2]> for Mat2 {
    fn from(rows: [[Scalar; 2]; 2]) -> Self {
        let [[m11, m12], [m21, m22]] = rows;
        Mat2 { m11, m12, m21, m22 }
    }
}

impl From<Mat2> for [[Scalar; 2]; 2] {
    fn from(m: Mat2) -> Self {
        [[m.m11, m.m12], [m.m21, m.m22]]
    }
}

impl Mat2 {
    pub fn new(
        m11: impl Into<Scalar>,
        m12: impl Into<Scalar>,
        m21: impl Into<Scalar>,
        m22: impl Into<Scalar>,
    ) -> Self {
        Mat2 {
            m11: m11.into(),
            m12: m12.into(),
            m21: m21.into(),
            m22: m22.into(),
        }
    }

    pub fn zero() -> Self {
        Mat2::new(0, 0, 0, 0)
    }

    pub fn identity() -> Self {
        Mat2::new(1, 0, 0, 1)
    }

    pub fn from_ints(m11: i64, m12: i64, m21: i64, m22: i64) -> Self {
        Mat2::new(m11, m12, m21, m22)
    }

    pub fn entries(&self) -> [&Scalar; 4] {
        [&self.m11, &self.m12, &self.m21, &self.m22]
    }

    pub fn is_zero(&self) -> bool {
        self.entries().iter().all(|e| e.is_zero())
    }

    pub fn scale(&self, s: &Scalar) -> Mat2 {
        Mat2 {
            m11: &self.m11 * s,
            m12: &self.m12 * s,
            m21: &self.m21 * s,
            m22: &self.m22 * s,
        }
    }

    /// Largest absolute entry; an exact, scale-tracking norm.
    pub fn max_abs_entry(&self) -> Scalar {
        let mut best = self.m11.abs();
        for e in [&self.m12, &self.m21, &self.m22] {
            let a = e.abs();
            if a > best {
                best = a;
            }
        }
        best
    }

    /// Squared Frobenius norm (exact in exact mode).
    pub fn frobenius_sq(&self) -> Scalar {
        self.entries()
            .iter()
            .fold(Scalar::zero(), |acc, e| acc + *e * *e)
    }
}

/// `det X = m11 m22 - m12 m21`.
pub fn det(x: &Mat2) -> Scalar {
    &x.m11 * &x.m22 - &x.m12 * &x.m21
}

/// Cofactor matrix, with the sign convention making
/// `det(X+Y) = det X + inner(cof X, Y) + det Y` hold exactly.
pub fn cof(x: &Mat2) -> Mat2 {
    Mat2 {
        m11: x.m22.clone(),
        m12: -&x.m21,
        m21: -&x.m12,
        m22: x.m11.clone(),
    }
}

/// Hilbert-Schmidt inner product `sum_ij X_ij Y_ij`.
pub fn inner(x: &Mat2, y: &Mat2) -> Scalar {
    &x.m11 * &y.m11 + &x.m12 * &y.m12 + &x.m21 * &y.m21 + &x.m22 * &y.m22
}

/// Rank-one product `a (x) n`, the matrix `a n^T`.
pub fn tensor(a: &Vec2, n: &Vec2) -> Mat2 {
    Mat2 {
        m11: &a.0 * &n.0,
        m12: &a.0 * &n.1,
        m21: &a.1 * &n.0,
        m22: &a.1 * &n.1,
    }
}

/// True iff `X` is nonzero with vanishing determinant. Exact scalars decide
/// `det X = 0` exactly; float mode tests `|det X| <= tol * |X|_F^2`, which is
/// scale invariant.
pub fn is_rank_one(x: &Mat2) -> bool {
    if x.is_zero() {
        return false;
    }
    let d = det(x);
    if d.is_exact() && x.entries().iter().all(|e| e.is_exact()) {
        d.is_zero()
    } else {
        d.to_f64().abs() <= FLOAT_TOLERANCE * x.frobenius_sq().to_f64()
    }
}

impl Add for &Mat2 {
    type Output = Mat2;
    fn add(self, rhs: &Mat2) -> Mat2 {
        Mat2 {
            m11: &self.m11 + &rhs.m11,
            m12: &self.m12 + &rhs.m12,
            m21: &self.m21 + &rhs.m21,
            m22: &self.m22 + &rhs.m22,
        }
    }
}

impl Sub for &Mat2 {
    type Output = Mat2;
    fn sub(self, rhs: &Mat2) -> Mat2 {
        Mat2 {
            m11: &self.m11 - &rhs.m11,
            m12: &self.m12 - &rhs.m12,
            m21: &self.m21 - &rhs.m21,
            m22: &self.m22 - &rhs.m22,
        }
    }
}

impl Neg for &Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        Mat2 {
            m11: -&self.m11,
            m12: -&self.m12,
            m21: -&self.m21,
            m22: -&self.m22,
        }
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, rhs: Mat2) -> Mat2 {
        &self + &rhs
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, rhs: Mat2) -> Mat2 {
        &self - &rhs
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        -&self
    }
}

impl Mul<&Mat2> for &Scalar {
    type Output = Mat2;
    fn mul(self, rhs: &Mat2) -> Mat2 {
        rhs.scale(self)
    }
}

impl fmt::Display for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[[{}, {}], [{}, {}]]",
            self.m11, self.m12, self.m21, self.m22
        )
    }
}

/// Convex combination `t A + (1-t) B`.
pub fn lerp(a: &Mat2, b: &Mat2, t: &Scalar) -> Mat2 {
    &a.scale(t) + &b.scale(&(Scalar::one() - t))
}


#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    fn scalar() -> impl Strategy<Value = Scalar> {
        (-64i64..=64, 1i64..=16).prop_map(|(p, q)| Scalar::ratio(p, q))
    }

    fn mat() -> impl Strategy<Value = Mat2> {
        (scalar(), scalar(), scalar(), scalar())
            .prop_map(|(a, b, c, d)| Mat2::new(a, b, c, d))
    }

    fn vec2() -> impl Strategy<Value = Vec2> {
        (scalar(), scalar()).prop_map(|(x, y)| Vec2::new(x, y))
    }

    proptest! {
        /// The polarization identity holds exactly for all rational pairs.
        #[test]
        fn polarization_identity(x in mat(), y in mat()) {
            prop_assert_eq!(
                det(&(&x + &y)),
                det(&x) + inner(&cof(&x), &y) + det(&y)
            );
        }

        /// Tensor products have exactly vanishing determinant.
        #[test]
        fn tensor_products_are_singular(a in vec2(), n in vec2()) {
            prop_assert_eq!(det(&tensor(&a, &n)), Scalar::zero());
        }

        /// The factorized cofactor pairing of two tensor products.
        #[test]
        fn cof_tensor_pairing(a in vec2(), n in vec2(), b in vec2(), m in vec2()) {
            let lhs = inner(&cof(&tensor(&a, &n)), &tensor(&b, &m));
            prop_assert_eq!(lhs, a.perp().dot(&b) * n.perp().dot(&m));
        }
    }
}
