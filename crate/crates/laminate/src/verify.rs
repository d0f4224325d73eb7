//! Rank-one convex test functions and end-to-end inequality verification.
//!
//! No finite battery can certify laminate status by itself (the defining
//! inequality quantifies over all rank-one convex functions); that is the
//! certificate's job, where validated splits give Jensen's inequality for
//! free. The battery is a secondary smoke test: convex norms, the two
//! null Lagrangians `+/- det`, and random polyconvex max-affine functions
//! with rational data that stay exactly evaluable.

use crate::cube::{symmetric_laminate, CubeError, CubeFrame};
use crate::mat2::{det, tensor, Mat2, Vec2};
use crate::measures::{barycenter, jensen_check, AtomicMeasure};
use crate::scalar::Scalar;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// One affine form `<coeffs, X> + det_coeff * det X + offset` of a
/// polyconvex max-affine function.
#[derive(Clone, Debug)]
pub struct AffineForm {
    pub coeffs: Mat2,
    pub det_coeff: Scalar,
    pub offset: Scalar,
}

impl AffineForm {
    fn eval(&self, x: &Mat2) -> Scalar {
        crate::mat2::inner(&self.coeffs, x) + &self.det_coeff * &det(x) + &self.offset
    }
}

/// A rank-one convex test function.
#[derive(Clone)]
pub enum TestFunction {
    /// Frobenius norm (convex).
    FrobeniusNorm,
    /// Largest row norm, an operator-norm surrogate (convex).
    MaxRowNorm,
    /// The null Lagrangian `det` (rank-one affine).
    Det,
    /// The null Lagrangian `-det`.
    NegDet,
    /// Maximum of affine forms in `(X, det X)`: polyconvex, hence rank-one
    /// convex, and exactly evaluable on rational input.
    PolyAffine(Vec<AffineForm>),
    /// Caller-supplied evaluator (not necessarily rank-one convex; used to
    /// exercise violation reporting).
    Custom {
        name: String,
        eval: Arc<dyn Fn(&Mat2) -> Scalar + Send + Sync>,
    },
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "TestFunction({})", self.tag())
    }
}

impl TestFunction {
    pub fn eval(&self, x: &Mat2) -> Scalar {
        match self {
            TestFunction::FrobeniusNorm => x.frobenius_sq().sqrt(),
            TestFunction::MaxRowNorm => {
                let r1 = (&x.m11 * &x.m11 + &x.m12 * &x.m12).sqrt();
                let r2 = (&x.m21 * &x.m21 + &x.m22 * &x.m22).sqrt();
                if r1 >= r2 {
                    r1
                } else {
                    r2
                }
            }
            TestFunction::Det => det(x),
            TestFunction::NegDet => -det(x),
            TestFunction::PolyAffine(forms) => {
                let mut best = forms[0].eval(x);
                for form in &forms[1..] {
                    let v = form.eval(x);
                    if v > best {
                        best = v;
                    }
                }
                best
            }
            TestFunction::Custom { eval, .. } => eval(x),
        }
    }

    pub fn tag(&self) -> String {
        match self {
            TestFunction::FrobeniusNorm => "frobenius-norm".into(),
            TestFunction::MaxRowNorm => "max-row-norm".into(),
            TestFunction::Det => "plus-det".into(),
            TestFunction::NegDet => "minus-det".into(),
            TestFunction::PolyAffine(forms) => format!("polyconvex-max-affine-{}", forms.len()),
            TestFunction::Custom { name, .. } => format!("custom-{name}"),
        }
    }

    /// Whether evaluation preserves exactness on exact input (norms take
    /// square roots).
    pub fn exact_evaluable(&self) -> bool {
        matches!(
            self,
            TestFunction::Det | TestFunction::NegDet | TestFunction::PolyAffine(_)
        )
    }

    pub fn as_fn(&self) -> impl Fn(&Mat2) -> Scalar + '_ {
        move |x| self.eval(x)
    }
}

fn random_ratio(rng: &mut impl Rng) -> Scalar {
    // Rational coefficients p/q, |p| <= 8, 1 <= q <= 8: large enough to
    // put kinks near the cube at unit scale.
    Scalar::ratio(rng.random_range(-8..=8), rng.random_range(1..=8))
}

/// A deterministic battery of `size >= 4` rank-one convex functions: both
/// norms, both determinant signs, and `size - 4` random polyconvex
/// max-affine functions drawn from the seed.
pub fn battery(seed: u64, size: usize) -> Vec<TestFunction> {
    assert!(size >= 4, "battery needs at least the four fixed members");
    let mut out = vec![
        TestFunction::FrobeniusNorm,
        TestFunction::MaxRowNorm,
        TestFunction::Det,
        TestFunction::NegDet,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 4..size {
        let n_forms = rng.random_range(3..=6);
        let forms = (0..n_forms)
            .map(|_| AffineForm {
                coeffs: Mat2::new(
                    random_ratio(&mut rng),
                    random_ratio(&mut rng),
                    random_ratio(&mut rng),
                    random_ratio(&mut rng),
                ),
                det_coeff: random_ratio(&mut rng),
                offset: random_ratio(&mut rng),
            })
            .collect();
        out.push(TestFunction::PolyAffine(forms));
    }
    out
}

/// Outcome of sampled rank-one convexity checking.
#[derive(Clone, Debug)]
pub enum RocOutcome {
    Pass,
    /// Reproduction data of the first midpoint-convexity violation found:
    /// base point, rank-one direction factors, and offset.
    Violation {
        base: Mat2,
        amplitude: Vec2,
        frequency: Vec2,
        offset: f64,
    },
}

impl RocOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, RocOutcome::Pass)
    }
}

/// Samples midpoint convexity of `t -> f(A + t a (x) n)` at random base
/// points, rank-one directions, and offsets. Deterministic per seed.
pub fn roc_sampled(f: &TestFunction, trials: usize, seed: u64) -> RocOutcome {
    assert!(trials >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = |rng: &mut ChaCha8Rng| rng.random_range(-2.0..2.0);
    for _ in 0..trials {
        let base = Mat2::new(
            Scalar::float(unit(&mut rng)),
            Scalar::float(unit(&mut rng)),
            Scalar::float(unit(&mut rng)),
            Scalar::float(unit(&mut rng)),
        );
        let amplitude = Vec2::new(Scalar::float(unit(&mut rng)), Scalar::float(unit(&mut rng)));
        let frequency = Vec2::new(Scalar::float(unit(&mut rng)), Scalar::float(unit(&mut rng)));
        let offset = rng.random_range(0.05..2.0);
        let dir = tensor(&amplitude, &frequency);
        let step = dir.scale(&Scalar::float(offset));
        let mid = f.eval(&base).to_f64();
        let hi = f.eval(&(&base + &step)).to_f64();
        let lo = f.eval(&(&base - &step)).to_f64();
        let tol = 1e-7 * (1.0 + mid.abs());
        if mid > 0.5 * (hi + lo) + tol {
            return RocOutcome::Violation {
                base,
                amplitude,
                frequency,
                offset,
            };
        }
    }
    RocOutcome::Pass
}

/// Jensen margin of a measure against one test function:
/// `sum w f(X) - f(barycenter)`.
pub fn check_inequality(m: &AtomicMeasure, f: &TestFunction) -> Scalar {
    let expectation = m
        .atoms()
        .iter()
        .fold(Scalar::zero(), |acc, (p, w)| acc + &(w * &f.eval(p)));
    expectation - f.eval(&barycenter(m))
}

/// Margin table and certificate summary for one frame.
#[derive(Clone, Debug)]
pub struct SuiteReport {
    /// Per-function Jensen margins of the `(1/16, 3/16)` vertex measure.
    pub margins: Vec<(String, Scalar)>,
    /// Smallest margin across the battery (as a float).
    pub min_margin: f64,
    /// Total split count of the verifying certificate forest.
    pub certificate_order: usize,
    /// Smallest per-node Jensen margin across certificate trees and battery
    /// members (as a float).
    pub min_node_margin: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.min_margin >= -1e-9 && self.min_node_margin >= -1e-9
    }
}

/// Runs the full check for one frame: builds the `(1/16, 3/16)` symmetric
/// measure on the cube's vertices, evaluates the battery inequalities, and
/// independently verifies the measure through a splitting certificate.
pub fn main_theorem_suite(frame: &CubeFrame, battery_fns: &[TestFunction]) -> Result<SuiteReport, CubeError> {
    let measure = frame.symmetric_measure(&Scalar::ratio(1, 16), &Scalar::ratio(3, 16));
    let mut margins = Vec::with_capacity(battery_fns.len());
    let mut min_margin = f64::INFINITY;
    for f in battery_fns {
        let margin = check_inequality(&measure, f);
        if f.exact_evaluable() && margin.is_exact() && margin.is_negative() {
            return Err(CubeError::Internal(format!(
                "exact margin {margin} negative for {}",
                f.tag()
            )));
        }
        min_margin = min_margin.min(margin.to_f64());
        margins.push((f.tag(), margin));
    }

    let cert = symmetric_laminate(frame, &Scalar::ratio(1, 3))?;
    if !cert.flattened.measure_eq(&measure) {
        return Err(CubeError::Internal(
            "certificate does not flatten to the vertex measure".into(),
        ));
    }
    let order = match cert.forest.validate() {
        crate::measures::ValidationOutcome::Valid { order } => order,
        crate::measures::ValidationOutcome::Invalid(v) => {
            return Err(CubeError::Internal(format!("certificate invalid: {v}")))
        }
    };
    let mut min_node_margin = f64::INFINITY;
    for component in &cert.forest.components {
        for f in battery_fns {
            let report = jensen_check(&component.tree, &f.as_fn());
            if !report.passed() {
                return Err(CubeError::Internal(format!(
                    "Jensen violation for {} at {:?}",
                    f.tag(),
                    report.violations
                )));
            }
            if let Some(m) = report.min_node_margin() {
                min_node_margin = min_node_margin.min(m.to_f64());
            }
        }
    }
    Ok(SuiteReport {
        margins,
        min_margin,
        certificate_order: order,
        min_node_margin,
    })
}
