//! Dual-mode scalar arithmetic: exact rationals by default, binary floats on
//! request.
//!
//! Every construction path in this crate runs on exact rationals, so that
//! certificates can be checked with decidable equality. Floats exist for
//! Monte-Carlo sampling and for test functions whose values are irrational
//! (norms). Mixing the two modes in an arithmetic operation never happens
//! silently: the result is a float carrying a `downgraded` marker that
//! propagates through all further arithmetic.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

/// Relative comparison tolerance for float-mode scalars.
pub const FLOAT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug)]
enum Repr {
    Exact(BigRational),
    Float(f64),
}

/// A scalar that is either an exact rational or a 64-bit float.
#[derive(Clone, Debug)]
pub struct Scalar {
    repr: Repr,
    downgraded: bool,
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar::from_int(0)
    }

    pub fn one() -> Self {
        Scalar::from_int(1)
    }

    pub fn from_int(n: i64) -> Self {
        Scalar {
            repr: Repr::Exact(BigRational::from_integer(BigInt::from(n))),
            downgraded: false,
        }
    }

    /// Exact rational `p/q`. Panics if `q == 0`.
    pub fn ratio(p: i64, q: i64) -> Self {
        Scalar {
            repr: Repr::Exact(BigRational::new(BigInt::from(p), BigInt::from(q))),
            downgraded: false,
        }
    }

    pub fn from_rational(r: BigRational) -> Self {
        Scalar {
            repr: Repr::Exact(r),
            downgraded: false,
        }
    }

    pub fn float(v: f64) -> Self {
        Scalar {
            repr: Repr::Float(v),
            downgraded: false,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.repr, Repr::Exact(_))
    }

    /// True if this value passed through an exact-with-float operation at
    /// some point of its history.
    pub fn downgraded(&self) -> bool {
        self.downgraded
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match &self.repr {
            Repr::Exact(r) => Some(r),
            Repr::Float(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match &self.repr {
            Repr::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Repr::Float(v) => *v,
        }
    }

    /// Lossy conversion to float mode (marked as downgraded when the input
    /// was exact, so the loss stays visible downstream).
    pub fn to_float_mode(&self) -> Scalar {
        match &self.repr {
            Repr::Float(_) => self.clone(),
            Repr::Exact(r) => Scalar {
                repr: Repr::Float(r.to_f64().unwrap_or(f64::NAN)),
                downgraded: true,
            },
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.repr {
            Repr::Exact(r) => r.is_zero(),
            Repr::Float(v) => *v == 0.0,
        }
    }

    pub fn is_positive(&self) -> bool {
        match &self.repr {
            Repr::Exact(r) => r.is_positive(),
            Repr::Float(v) => *v > 0.0,
        }
    }

    pub fn is_negative(&self) -> bool {
        match &self.repr {
            Repr::Exact(r) => r.is_negative(),
            Repr::Float(v) => *v < 0.0,
        }
    }

    /// Sign as -1, 0, +1. Exact in exact mode; raw float sign otherwise
    /// (callers apply their own tolerances where the contract asks for one).
    pub fn signum(&self) -> i32 {
        if self.is_zero() {
            0
        } else if self.is_positive() {
            1
        } else {
            -1
        }
    }

    pub fn abs(&self) -> Scalar {
        if self.is_negative() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    pub fn recip(&self) -> Scalar {
        Scalar::one() / self.clone()
    }

    /// Mode-aware equality: decidable equality for two exact values,
    /// relative `FLOAT_TOLERANCE` closeness when floats are involved.
    pub fn approx_eq(&self, other: &Scalar) -> bool {
        match (&self.repr, &other.repr) {
            (Repr::Exact(a), Repr::Exact(b)) => a == b,
            _ => {
                let (a, b) = (self.to_f64(), other.to_f64());
                let scale = 1.0f64.max(a.abs()).max(b.abs());
                (a - b).abs() <= FLOAT_TOLERANCE * scale
            }
        }
    }

    /// Square root. Stays exact when the operand is a perfect rational
    /// square, downgrades to float otherwise. Panics on negative input.
    pub fn sqrt(&self) -> Scalar {
        match &self.repr {
            Repr::Exact(r) => {
                assert!(!r.is_negative(), "sqrt of negative scalar");
                let (n, d) = (r.numer(), r.denom());
                let (sn, sd) = (n.sqrt(), d.sqrt());
                if &(&sn * &sn) == n && &(&sd * &sd) == d {
                    Scalar::from_rational(BigRational::new(sn, sd))
                } else {
                    Scalar {
                        repr: Repr::Float(r.to_f64().map(f64::sqrt).unwrap_or(f64::NAN)),
                        downgraded: true,
                    }
                }
            }
            Repr::Float(v) => Scalar {
                repr: Repr::Float(v.sqrt()),
                downgraded: self.downgraded,
            },
        }
    }

    /// If exact, reduce modulo 1 into `[0, 1)`.
    pub fn fract_mod_one(&self) -> Scalar {
        match &self.repr {
            Repr::Exact(r) => Scalar {
                repr: Repr::Exact(r - r.floor()),
                downgraded: self.downgraded,
            },
            Repr::Float(v) => Scalar {
                repr: Repr::Float(v.rem_euclid(1.0)),
                downgraded: self.downgraded,
            },
        }
    }

    fn binop(
        &self,
        other: &Scalar,
        exact: impl Fn(&BigRational, &BigRational) -> BigRational,
        float: impl Fn(f64, f64) -> f64,
    ) -> Scalar {
        let downgraded = self.downgraded || other.downgraded;
        match (&self.repr, &other.repr) {
            (Repr::Exact(a), Repr::Exact(b)) => Scalar {
                repr: Repr::Exact(exact(a, b)),
                downgraded,
            },
            (a, b) => {
                // Mixed or float: float result; mixing exact with float is a
                // recorded downgrade.
                let mixed = matches!(
                    (a, b),
                    (Repr::Exact(_), Repr::Float(_)) | (Repr::Float(_), Repr::Exact(_))
                );
                Scalar {
                    repr: Repr::Float(float(self.to_f64(), other.to_f64())),
                    downgraded: downgraded || mixed,
                }
            }
        }
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        match (&self.repr, &other.repr) {
            (Repr::Exact(a), Repr::Exact(b)) => a == b,
            _ => self.to_f64() == other.to_f64(),
        }
    }
}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (&self.repr, &other.repr) {
            (Repr::Exact(a), Repr::Exact(b)) => a.partial_cmp(b),
            _ => self.to_f64().partial_cmp(&other.to_f64()),
        }
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                self.binop(rhs, |a, b| a $op b, |a, b| a $op b)
            }
        }
        impl $trait<&Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                (&self).$method(rhs)
            }
        }
        impl $trait<Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                self.$method(&rhs)
            }
        }
    };
}

impl_binop!(Add, add, +);
impl_binop!(Sub, sub, -);
impl_binop!(Mul, mul, *);
impl_binop!(Div, div, /);

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match &self.repr {
            Repr::Exact(r) => Scalar {
                repr: Repr::Exact(-r),
                downgraded: self.downgraded,
            },
            Repr::Float(v) => Scalar {
                repr: Repr::Float(-v),
                downgraded: self.downgraded,
            },
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Exact(r) => {
                if r.denom().is_one() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Repr::Float(v) => write!(f, "{v}"),
        }
    }
}

/// Errors from parsing the `"p/q"` scalar syntax.
#[derive(Debug, thiserror::Error)]
#[error("invalid rational literal `{0}`")]
pub struct ParseScalarError(String);

impl FromStr for Scalar {
    type Err = ParseScalarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ParseScalarError(s.to_string());
        match s.split_once('/') {
            Some((p, q)) => {
                let p: BigInt = p.trim().parse().map_err(|_| bad())?;
                let q: BigInt = q.trim().parse().map_err(|_| bad())?;
                if q.is_zero() {
                    return Err(bad());
                }
                Ok(Scalar::from_rational(BigRational::new(p, q)))
            }
            None => {
                let p: BigInt = s.trim().parse().map_err(|_| bad())?;
                Ok(Scalar::from_rational(BigRational::from_integer(p)))
            }
        }
    }
}

impl serde::Serialize for Scalar {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match &self.repr {
            Repr::Exact(_) => serializer.serialize_str(&self.to_string()),
            Repr::Float(v) => serializer.serialize_f64(*v),
        }
    }
}

impl<'de> serde::Deserialize<'de> for Scalar {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Scalar;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "a rational string \"p/q\", an integer, or a float")
            }
            fn visit_str<E: serde::de::Error>(self, s: &str) -> Result<Scalar, E> {
                s.parse().map_err(serde::de::Error::custom)
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<Scalar, E> {
                Ok(Scalar::from_int(v))
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<Scalar, E> {
                Ok(Scalar::from_rational(BigRational::from_integer(v.into())))
            }
            fn visit_f64<E: serde::de::Error>(self, v: f64) -> Result<Scalar, E> {
                Ok(Scalar::float(v))
            }
        }
        deserializer.deserialize_any(V)
    }
}
