//! Symmetric laminates on rank-one cubes: the construction pipeline.
//!
//! Everything here works in the coordinates `(x, y, z) <-> x C1 + y C2 + z C3`
//! of a frame of rank-one edge matrices. The determinant becomes the
//! quadratic form `q(x, y, z) = a x y + b x z + c y z`, and after a sign
//! normalization one may assume `a, b, c > 0` (or flag the degenerate case
//! `a b c = 0`). The origin witness then produces, for each admissible axis,
//! a splitting tree rooted at `0` whose leaves are cube vertices; case
//! mixing turns those trees into symmetric laminate certificates with any
//! prescribed vertex-class ratio in `[1/3, 3]`.

use crate::hulls::{
    pairing, ray_surface_intersections, HullError, RankOneSquare, RayHit, RuledSurfacePatch,
};
use crate::mat2::{cof, inner, is_rank_one, lerp, Mat2};
use crate::measures::{
    flatten_forest, flatten_tree, symmetric_from_partial, AtomicMeasure, MeasureError,
    MeasureForest, SplitNode, SplittingTree,
};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum CubeError {
    #[error("edge matrix C{0} is not rank-one")]
    NotRankOne(usize),
    #[error("operation requires a non-degenerate frame (abc != 0)")]
    DegenerateFrame,
    #[error("operation requires a degenerate frame (abc = 0)")]
    NotDegenerate,
    #[error("determinant sign precondition fails: {0}")]
    WrongCaseSign(String),
    #[error("alpha = {0} outside [0, 1/4]")]
    AlphaOutOfRange(Scalar),
    #[error("target ratio {0} outside [1/3, 3]")]
    TargetOutOfRange(Scalar),
    #[error("origin witness search exhausted after {tried} directions on axis {axis}")]
    SearchExhausted { tried: usize, axis: usize },
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Hull(#[from] HullError),
    #[error("internal inconsistency: {0}")]
    Internal(String),
}

/// Coordinates with respect to the frame edges.
pub type Coord = [Scalar; 3];

fn coord_from_ints(v: [i64; 3]) -> Coord {
    [
        Scalar::from_int(v[0]),
        Scalar::from_int(v[1]),
        Scalar::from_int(v[2]),
    ]
}

fn coord_add(u: &Coord, v: &Coord) -> Coord {
    [&u[0] + &v[0], &u[1] + &v[1], &u[2] + &v[2]]
}

fn coord_sub(u: &Coord, v: &Coord) -> Coord {
    [&u[0] - &v[0], &u[1] - &v[1], &u[2] - &v[2]]
}

fn coord_neg(u: &Coord) -> Coord {
    [-&u[0], -&u[1], -&u[2]]
}

fn coord_scale(u: &Coord, s: &Scalar) -> Coord {
    [&u[0] * s, &u[1] * s, &u[2] * s]
}

/// `w u + (1 - w) v`.
fn coord_combo(u: &Coord, v: &Coord, w: &Scalar) -> Coord {
    coord_add(&coord_scale(u, w), &coord_scale(v, &(Scalar::one() - w)))
}

/// An axis permutation carrying canonical positions to frame axes:
/// `to_frame[j]` is the frame axis playing canonical role `j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Perm3 {
    pub to_frame: [usize; 3],
}

impl Perm3 {
    pub fn identity() -> Self {
        Perm3 {
            to_frame: [0, 1, 2],
        }
    }

    /// Brings `axis` to canonical position 0.
    fn axis_first(axis: usize) -> Self {
        Perm3 {
            to_frame: [axis, (axis + 1) % 3, (axis + 2) % 3],
        }
    }

    /// Brings `axis` to canonical position 1 (the role with the positive
    /// vertex determinant in the one-positive case).
    fn axis_middle(axis: usize) -> Self {
        Perm3 {
            to_frame: [(axis + 1) % 3, axis, (axis + 2) % 3],
        }
    }

    /// Swaps canonical positions 1 and 2 (exchanges the roles of the two
    /// free axes, i.e. the coefficients `a` and `b`).
    fn swap_bc(&self) -> Self {
        Perm3 {
            to_frame: [self.to_frame[0], self.to_frame[2], self.to_frame[1]],
        }
    }

    /// Maps canonical coordinates to frame coordinates.
    pub fn apply(&self, v: &Coord) -> Coord {
        let mut out = [Scalar::zero(), Scalar::zero(), Scalar::zero()];
        for j in 0..3 {
            out[self.to_frame[j]] = v[j].clone();
        }
        out
    }
}

/// A normalized rank-one cube frame.
///
/// Stores the edge matrices exactly as given; the normalization is a record
/// of per-axis coordinate sign flips (each flips two of the coefficients)
/// plus an optional global determinant flip, chosen so that the normalized
/// coefficients satisfy `a, b, c > 0` whenever `abc != 0`.
#[derive(Clone, Debug, Serialize)]
pub struct CubeFrame {
    edges: [Mat2; 3],
    abc: [Scalar; 3],
    flips: [i8; 3],
    det_flip: bool,
    degenerate: bool,
}

/// Builds and normalizes a frame from three rank-one matrices.
pub fn build_frame(c1: Mat2, c2: Mat2, c3: Mat2) -> Result<CubeFrame, CubeError> {
    for (i, c) in [&c1, &c2, &c3].iter().enumerate() {
        if !is_rank_one(c) {
            return Err(CubeError::NotRankOne(i + 1));
        }
    }
    let a0 = inner(&cof(&c1), &c2);
    let b0 = inner(&cof(&c1), &c3);
    let c0 = inner(&cof(&c2), &c3);
    let degenerate = a0.is_zero() || b0.is_zero() || c0.is_zero();

    // Axis flips reach the four even sign patterns; the determinant flip
    // negates all three coefficients.
    let patterns: [[i8; 3]; 4] = [[1, 1, 1], [-1, -1, 1], [-1, 1, -1], [1, -1, -1]];
    for det_flip in [false, true] {
        for flips in patterns {
            let g = if det_flip { -1i64 } else { 1 };
            let sign = |s: i64| Scalar::from_int(s * g);
            let a = &a0 * &sign((flips[0] * flips[1]) as i64);
            let b = &b0 * &sign((flips[0] * flips[2]) as i64);
            let c = &c0 * &sign((flips[1] * flips[2]) as i64);
            let ok = if degenerate {
                !a.is_negative() && !b.is_negative() && !c.is_negative()
            } else {
                a.is_positive() && b.is_positive() && c.is_positive()
            };
            if ok {
                return Ok(CubeFrame {
                    edges: [c1, c2, c3],
                    abc: [a, b, c],
                    flips,
                    det_flip,
                    degenerate,
                });
            }
        }
    }
    Err(CubeError::Internal(
        "no sign normalization reached nonnegative coefficients".into(),
    ))
}

impl CubeFrame {
    /// The edge matrices exactly as given to `build_frame`.
    pub fn edges(&self) -> &[Mat2; 3] {
        &self.edges
    }

    /// Normalized coefficients `(a, b, c)` of
    /// `det(x, y, z) = a x y + b x z + c y z` in normalized coordinates.
    pub fn coefficients(&self) -> &[Scalar; 3] {
        &self.abc
    }

    pub fn flips(&self) -> [i8; 3] {
        self.flips
    }

    pub fn det_flip(&self) -> bool {
        self.det_flip
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Materializes normalized coordinates as a matrix of the original span:
    /// `point(v) = sum_i flips_i v_i C_i`.
    pub fn point(&self, v: &Coord) -> Mat2 {
        let mut out = Mat2::zero();
        for ((edge, &flip), coord) in self.edges.iter().zip(&self.flips).zip(v) {
            let s = Scalar::from_int(flip as i64);
            out = &out + &edge.scale(&(&s * coord));
        }
        out
    }

    /// The quadratic form `a x y + b x z + c y z`; up to the recorded
    /// determinant flip this is `det(point(v))`.
    pub fn qdet(&self, v: &Coord) -> Scalar {
        let [a, b, c] = &self.abc;
        a * &(&v[0] * &v[1]) + b * &(&v[0] * &v[2]) + c * &(&v[1] * &v[2])
    }

    /// Vertex of the original cube at sign pattern `eps` (original labels,
    /// without normalization flips).
    pub fn vertex(&self, eps: [i8; 3]) -> Mat2 {
        let mut out = Mat2::zero();
        for (edge, &sign) in self.edges.iter().zip(&eps) {
            out = &out + &edge.scale(&Scalar::from_int(sign as i64));
        }
        out
    }

    /// All eight vertices with their original sign labels.
    pub fn vertices(&self) -> Vec<([i8; 3], Mat2)> {
        let mut out = Vec::with_capacity(8);
        for mask in 0..8usize {
            let eps = [
                if mask & 1 != 0 { 1 } else { -1 },
                if mask & 2 != 0 { 1 } else { -1 },
                if mask & 4 != 0 { 1 } else { -1 },
            ];
            out.push((eps, self.vertex(eps)));
        }
        out
    }

    /// Signs of `det X_1, det X_2, det X_3` in normalized coordinates
    /// (`det X_i < 0` means the triangle inequality holds at axis `i`).
    pub fn vertex_det_signs(&self) -> [i32; 3] {
        let [a, b, c] = &self.abc;
        let d1 = c - a - b;
        let d2 = b - a - c;
        let d3 = a - b - c;
        let signs = [d1.signum(), d2.signum(), d3.signum()];
        assert!(
            signs.iter().filter(|&&s| s > 0).count() <= 1,
            "two positive vertex determinants are incompatible with a, b, c > 0"
        );
        signs
    }

    /// The symmetric pattern measure with weight `alpha` on the even sign
    /// class and `beta = 1/4 - alpha` on the odd class.
    pub fn symmetric_measure(&self, alpha: &Scalar, beta: &Scalar) -> AtomicMeasure {
        let atoms = self
            .vertices()
            .into_iter()
            .map(|(eps, v)| {
                let even = eps.iter().product::<i8>() > 0;
                (v, if even { alpha.clone() } else { beta.clone() })
            })
            .collect();
        AtomicMeasure::new(atoms).expect("pattern weights form a probability measure")
    }

    /// Rebuilds the frame with the third edge negated. The normalized
    /// coefficients do not change, but the vertex labeling pulls back with
    /// the even and odd sign classes exchanged.
    pub fn with_swapped_classes(&self) -> Result<CubeFrame, CubeError> {
        build_frame(
            self.edges[0].clone(),
            self.edges[1].clone(),
            -&self.edges[2],
        )
    }

    /// Canonical coefficients seen through the permutation: `a' = ` coupling
    /// of canonical positions (0,1), and so on.
    fn canonical_abc(&self, perm: &Perm3) -> [Scalar; 3] {
        let couple = |i: usize, j: usize| -> Scalar {
            match (i.min(j), i.max(j)) {
                (0, 1) => self.abc[0].clone(),
                (0, 2) => self.abc[1].clone(),
                (1, 2) => self.abc[2].clone(),
                _ => unreachable!(),
            }
        };
        [
            couple(perm.to_frame[0], perm.to_frame[1]),
            couple(perm.to_frame[0], perm.to_frame[2]),
            couple(perm.to_frame[1], perm.to_frame[2]),
        ]
    }
}

// --- the waypoint lemma -------------------------------------------------------

/// Canonical waypoint data for a frame with `0 < a <= b`, `0 < c < a + b`.
struct LemmaPCore {
    lambda: Scalar,
    lambda1: Scalar,
    lambda2: Scalar,
    lambda3: Scalar,
    /// Canonical coordinates.
    p: Coord,
    p1: Coord,
    p2: Coord,
    p3: Coord,
}

fn x0c() -> Coord {
    coord_from_ints([1, 1, 1])
}
fn x1c() -> Coord {
    coord_from_ints([-1, 1, 1])
}
fn x2c() -> Coord {
    coord_from_ints([1, -1, 1])
}
fn x3c() -> Coord {
    coord_from_ints([1, 1, -1])
}

fn qdet_abc(a: &Scalar, b: &Scalar, c: &Scalar, v: &Coord) -> Scalar {
    a * &(&v[0] * &v[1]) + b * &(&v[0] * &v[2]) + c * &(&v[1] * &v[2])
}

fn lemma_p_core(a: &Scalar, b: &Scalar, c: &Scalar) -> Result<LemmaPCore, CubeError> {
    let one = Scalar::one();
    let ab = a + b;
    let lambda = &(&ab - c) / &ab;
    let p = coord_combo(&coord_neg(&x0c()), &coord_neg(&x1c()), &lambda);
    let lambda1 = &(&lambda * b) / &(a + &(&lambda * b));
    let p1 = coord_combo(&x1c(), &p, &lambda1);
    let lambda2 = &(&lambda * a) / &(b + &(&lambda * a));
    let p2 = coord_combo(&x1c(), &p, &lambda2);
    let b2a2 = b * b - &(a * a);
    let lambda3 = &(&(&ab - c) * &(b - a)) / &(&b2a2 + &(&(&one + &lambda) * &(a * c)));
    let p3 = coord_combo(&x3c(), &p2, &lambda3);

    // The defining determinant conditions, checked exactly.
    let checks = [
        (coord_sub(&p, &x1c()), "det(P - X1)"),
        (coord_sub(&p1, &x2c()), "det(P1 - X2)"),
        (coord_sub(&p2, &x3c()), "det(P2 - X3)"),
        (coord_sub(&p3, &x2c()), "det(P3 - X2)"),
    ];
    for (diff, what) in checks {
        let q = qdet_abc(a, b, c, &diff);
        if !q.is_zero() {
            return Err(CubeError::Internal(format!("{what} = {q}, expected 0")));
        }
    }

    Ok(LemmaPCore {
        lambda,
        lambda1,
        lambda2,
        lambda3,
        p,
        p1,
        p2,
        p3,
    })
}

/// Waypoints of the origin witness for one axis, expressed in frame
/// coordinates, together with the relabeling that was applied.
#[derive(Clone, Debug, Serialize)]
pub struct LemmaPData {
    /// Axis index (0-based): the vertex `X_{axis+1}` has negative
    /// determinant and anchors the construction.
    pub axis: usize,
    /// Canonical-to-frame axis permutation used (records the `a <= b`
    /// relabeling).
    pub perm: Perm3,
    pub lambda: Scalar,
    pub lambda1: Scalar,
    pub lambda2: Scalar,
    pub lambda3: Scalar,
    /// Frame-coordinate waypoints.
    pub p: Coord,
    pub p1: Coord,
    pub p2: Coord,
    pub p3: Coord,
}

/// Computes the rank-one waypoints `P, P1, P2, P3` for the given axis.
/// Requires a non-degenerate frame and a strictly negative vertex
/// determinant at that axis.
pub fn lemma_p(frame: &CubeFrame, axis: usize) -> Result<LemmaPData, CubeError> {
    assert!(axis < 3);
    if frame.is_degenerate() {
        return Err(CubeError::DegenerateFrame);
    }
    let mut perm = Perm3::axis_first(axis);
    let [mut a, mut b, c] = frame.canonical_abc(&perm);
    let det_x1 = &c - &(&a + &b);
    if !det_x1.is_negative() {
        return Err(CubeError::WrongCaseSign(format!(
            "axis {axis}: det X = {det_x1} >= 0"
        )));
    }
    if a > b {
        perm = perm.swap_bc();
        std::mem::swap(&mut a, &mut b);
    }
    let core = lemma_p_core(&a, &b, &c)?;
    Ok(LemmaPData {
        axis,
        perm,
        lambda: core.lambda.clone(),
        lambda1: core.lambda1.clone(),
        lambda2: core.lambda2.clone(),
        lambda3: core.lambda3.clone(),
        p: perm.apply(&core.p),
        p1: perm.apply(&core.p1),
        p2: perm.apply(&core.p2),
        p3: perm.apply(&core.p3),
    })
}

// --- origin witness -----------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Label {
    X0,
    X1,
    X2,
    X3,
    P1,
    P2,
    P3,
}

/// Materialized construction context for one axis.
struct WitnessCtx {
    /// Matrices of the labeled points.
    x0: Mat2,
    x1: Mat2,
    x2: Mat2,
    x3: Mat2,
    p: Mat2,
    p1: Mat2,
    p2: Mat2,
    p3: Mat2,
    minus_x0: Mat2,
    minus_x1: Mat2,
    lambda: Scalar,
    lambda1: Scalar,
    lambda2: Scalar,
    lambda3: Scalar,
    expand_waypoints: bool,
}

impl WitnessCtx {
    fn mat(&self, l: Label) -> &Mat2 {
        match l {
            Label::X0 => &self.x0,
            Label::X1 => &self.x1,
            Label::X2 => &self.x2,
            Label::X3 => &self.x3,
            Label::P1 => &self.p1,
            Label::P2 => &self.p2,
            Label::P3 => &self.p3,
        }
    }

    fn p_node(&self) -> SplitNode {
        SplitNode::Split {
            point: self.p.clone(),
            lambda: self.lambda.clone(),
            left: Box::new(SplitNode::Leaf(self.minus_x0.clone())),
            right: Box::new(SplitNode::Leaf(self.minus_x1.clone())),
        }
    }

    fn label_node(&self, l: Label) -> SplitNode {
        match l {
            Label::X0 | Label::X1 | Label::X2 | Label::X3 => {
                SplitNode::Leaf(self.mat(l).clone())
            }
            Label::P1 if self.expand_waypoints => SplitNode::Split {
                point: self.p1.clone(),
                lambda: self.lambda1.clone(),
                left: Box::new(SplitNode::Leaf(self.x1.clone())),
                right: Box::new(self.p_node()),
            },
            Label::P2 if self.expand_waypoints => SplitNode::Split {
                point: self.p2.clone(),
                lambda: self.lambda2.clone(),
                left: Box::new(SplitNode::Leaf(self.x1.clone())),
                right: Box::new(self.p_node()),
            },
            Label::P3 if self.expand_waypoints => {
                if self.lambda3.is_zero() {
                    // P3 coincides with P2 when a = b.
                    self.label_node(Label::P2)
                } else {
                    SplitNode::Split {
                        point: self.p3.clone(),
                        lambda: self.lambda3.clone(),
                        left: Box::new(SplitNode::Leaf(self.x3.clone())),
                        right: Box::new(self.label_node(Label::P2)),
                    }
                }
            }
            Label::P1 | Label::P2 | Label::P3 => SplitNode::Leaf(self.mat(l).clone()),
        }
    }

    /// Node for `w * first + (1 - w) * second` along a square edge.
    fn edge_node(&self, first: Label, second: Label, w: &Scalar) -> SplitNode {
        if w == &Scalar::one() {
            return self.label_node(first);
        }
        if w.is_zero() {
            return self.label_node(second);
        }
        SplitNode::Split {
            point: lerp(self.mat(first), self.mat(second), w),
            lambda: w.clone(),
            left: Box::new(self.label_node(first)),
            right: Box::new(self.label_node(second)),
        }
    }

    /// Expands a patch hit into ruling and edge splits.
    fn hit_node(
        &self,
        labels: &[Label; 4],
        patch: &RuledSurfacePatch,
        hit: &RayHit,
    ) -> Result<SplitNode, CubeError> {
        let s = pairing(&patch.square, &hit.t)?;
        let a_node = self.edge_node(labels[0], labels[1], &hit.t);
        let b_node = self.edge_node(labels[3], labels[2], &s);
        if hit.u == Scalar::one() {
            return Ok(a_node);
        }
        if hit.u.is_zero() {
            return Ok(b_node);
        }
        Ok(SplitNode::Split {
            point: hit.point.clone(),
            lambda: hit.u.clone(),
            left: Box::new(a_node),
            right: Box::new(b_node),
        })
    }
}

/// Default bound on the numerators and denominators of the cone-direction
/// parameters tried by the origin witness search.
pub const DEFAULT_SEARCH_BOUND: i64 = 6;

/// Rational directions on the cone `q = 0`, produced by intersecting lines
/// through the cone point `(1, 0, 0)` with the projectivized conic. The
/// axes themselves are on the cone and come first.
fn cone_directions(a: &Scalar, b: &Scalar, c: &Scalar, bound: i64) -> Vec<Coord> {
    let mut out = vec![
        coord_from_ints([1, 0, 0]),
        coord_from_ints([0, 1, 0]),
        coord_from_ints([0, 0, 1]),
    ];
    let mut params: Vec<Scalar> = Vec::new();
    for den in 1..=bound {
        for num in 1..=bound {
            if num.unsigned_abs().max(den.unsigned_abs()) > 1
                && gcd(num.unsigned_abs(), den.unsigned_abs()) != 1
            {
                continue;
            }
            params.push(Scalar::ratio(num, den));
            params.push(Scalar::ratio(-num, den));
        }
    }
    for m in params {
        // d(m) = (c m, -(a + b m), -m (a + b m)) satisfies q(d) = 0.
        let abm = a + &(b * &m);
        let d = [c * &m, -&abm, -&(&m * &abm)];
        if !(d[0].is_zero() && d[1].is_zero() && d[2].is_zero()) {
            out.push(d);
        }
    }
    out
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Builds the splitting tree witnessing `0` inside the lamination hull of
/// `{X0, X1, X2, X3, P}` for the given axis, with the `P -> {-X0, -X_i}`
/// split grafted so that all leaves are cube vertices.
///
/// The search enumerates exact rational rank-one directions through the
/// origin; for such directions each patch quadric meets the line in at most
/// one point with an exact line parameter, so the bracketing pair
/// `Q- < 0 < Q+` and the final tree are exact. The first direction whose
/// assembled tree validates wins, making the output deterministic.
pub fn witness_origin(frame: &CubeFrame, axis: usize) -> Result<SplittingTree, CubeError> {
    witness_tree(frame, axis, true, DEFAULT_SEARCH_BOUND)
}

/// `witness_origin` with an explicit bound on the direction-search
/// resolution (the maximal numerator/denominator of the cone parameters).
pub fn witness_origin_with_search(
    frame: &CubeFrame,
    axis: usize,
    bound: i64,
) -> Result<SplittingTree, CubeError> {
    witness_tree(frame, axis, true, bound)
}

/// Same search, but keeping the waypoints `P1, P2, P3` as leaves (the
/// support stays inside `{X0, X1, X2, X3, P1, P2, P3}`).
pub fn witness_origin_waypoints(
    frame: &CubeFrame,
    axis: usize,
) -> Result<SplittingTree, CubeError> {
    witness_tree(frame, axis, false, DEFAULT_SEARCH_BOUND)
}

fn witness_tree(
    frame: &CubeFrame,
    axis: usize,
    expand_waypoints: bool,
    bound: i64,
) -> Result<SplittingTree, CubeError> {
    assert!(axis < 3);
    if frame.is_degenerate() {
        return Err(CubeError::DegenerateFrame);
    }
    let mut perm = Perm3::axis_first(axis);
    let [mut a, mut b, c] = frame.canonical_abc(&perm);
    let det_x1 = &c - &(&a + &b);
    if det_x1.is_positive() {
        return Err(CubeError::WrongCaseSign(format!(
            "axis {axis}: det X = {det_x1} > 0"
        )));
    }
    let mat_of = |perm: &Perm3, v: &Coord| frame.point(&perm.apply(v));
    if det_x1.is_zero() {
        // Boundary: X_i itself is rank-one, so 0 = (X_i + (-X_i)) / 2
        // directly.
        let xi = mat_of(&perm, &x1c());
        let tree = SplittingTree::new(SplitNode::Split {
            point: Mat2::zero(),
            lambda: Scalar::ratio(1, 2),
            left: Box::new(SplitNode::Leaf(xi.clone())),
            right: Box::new(SplitNode::Leaf(-&xi)),
        });
        tree.validate().expect_valid();
        return Ok(tree);
    }
    if a > b {
        perm = perm.swap_bc();
        std::mem::swap(&mut a, &mut b);
    }
    let core = lemma_p_core(&a, &b, &c)?;

    let ctx = WitnessCtx {
        x0: mat_of(&perm, &x0c()),
        x1: mat_of(&perm, &x1c()),
        x2: mat_of(&perm, &x2c()),
        x3: mat_of(&perm, &x3c()),
        p: mat_of(&perm, &core.p),
        p1: mat_of(&perm, &core.p1),
        p2: mat_of(&perm, &core.p2),
        p3: mat_of(&perm, &core.p3),
        minus_x0: mat_of(&perm, &coord_neg(&x0c())),
        minus_x1: mat_of(&perm, &coord_neg(&x1c())),
        lambda: core.lambda.clone(),
        lambda1: core.lambda1.clone(),
        lambda2: core.lambda2.clone(),
        lambda3: core.lambda3.clone(),
        expand_waypoints,
    };

    // The four rank-one squares bounding the hull; a degenerate fourth
    // square (a = b) drops out of the patch list.
    let square_labels: [[Label; 4]; 4] = [
        [Label::X0, Label::X2, Label::P3, Label::X3],
        [Label::X0, Label::X1, Label::P1, Label::X2],
        [Label::X0, Label::X1, Label::P2, Label::X3],
        [Label::X2, Label::P1, Label::P2, Label::P3],
    ];
    let mut patches: Vec<([Label; 4], RuledSurfacePatch)> = Vec::new();
    for labels in &square_labels {
        let sq = RankOneSquare::new(
            ctx.mat(labels[0]).clone(),
            ctx.mat(labels[1]).clone(),
            ctx.mat(labels[2]).clone(),
            ctx.mat(labels[3]).clone(),
        )
        .map_err(|e| CubeError::Internal(format!("square construction failed: {e}")))?;
        match RuledSurfacePatch::new(sq) {
            Ok(patch) => patches.push((*labels, patch)),
            Err(HullError::WrongCase(_)) => continue,
            Err(e) => return Err(e.into()),
        }
    }

    let zero = Mat2::zero();
    let directions = cone_directions(&a, &b, &c, bound);
    let tried = directions.len();
    'directions: for d in directions {
        let d_mat = mat_of(&perm, &d);
        debug_assert!(is_rank_one(&d_mat));
        let mut hits: Vec<(usize, RayHit)> = Vec::new();
        for (i, (_, patch)) in patches.iter().enumerate() {
            match ray_surface_intersections(patch, &zero, &d_mat) {
                Ok(hs) => hits.extend(hs.into_iter().map(|h| (i, h))),
                Err(HullError::LineInSurface) => continue 'directions,
                Err(e) => return Err(e.into()),
            }
        }
        let pos = hits
            .iter()
            .filter(|(_, h)| h.sigma.is_positive())
            .min_by(|(i, x), (j, y)| {
                x.sigma
                    .partial_cmp(&y.sigma)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(i.cmp(j))
            });
        let neg = hits
            .iter()
            .filter(|(_, h)| h.sigma.is_negative())
            .max_by(|(i, x), (j, y)| {
                x.sigma
                    .partial_cmp(&y.sigma)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(j.cmp(i))
            });
        let (Some((ip, hp)), Some((iq, hq))) = (pos, neg) else {
            continue;
        };
        let plus = ctx.hit_node(&patches[*ip].0, &patches[*ip].1, hp)?;
        let minus = ctx.hit_node(&patches[*iq].0, &patches[*iq].1, hq)?;
        let mu = -&hq.sigma / (&hp.sigma - &hq.sigma);
        let tree = SplittingTree::new(SplitNode::Split {
            point: zero.clone(),
            lambda: mu,
            left: Box::new(plus),
            right: Box::new(minus),
        });
        if tree.validate().is_valid() {
            let m = flatten_tree(&tree)?;
            if crate::measures::barycenter(&m).is_zero() {
                return Ok(tree);
            }
        }
    }
    Err(CubeError::SearchExhausted { tried, axis })
}

// --- certificates ---------------------------------------------------------------

/// Which construction produced a certificate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseTag {
    Degenerate,
    Case1,
    Case2,
    Combined,
}

/// Normalization and relabeling metadata embedded in certificates so that a
/// third party can re-verify without re-running the construction.
#[derive(Clone, Debug, Serialize)]
pub struct NormalizationRecord {
    pub flips: [i8; 3],
    pub det_flip: bool,
    /// Case-2 axis relabeling (identity otherwise).
    pub permutation: [usize; 3],
    /// Whether the construction ran on the class-swapped frame (targets
    /// above 1).
    pub swapped_classes: bool,
}

/// A symmetric-laminate certificate: a validated splitting forest together
/// with its flattened measure and construction metadata.
#[derive(Clone, Debug, Serialize)]
pub struct LaminateCertificate {
    pub case: CaseTag,
    pub forest: MeasureForest,
    pub flattened: AtomicMeasure,
    /// Symmetric pattern weights of the flattened measure.
    pub alpha: Scalar,
    pub beta: Scalar,
    /// For the case constructions, the heavy-to-light ratio
    /// `nu(-X0)/nu(-X_k) = beta/alpha`; for target constructions, the
    /// requested `alpha/beta`. `None` for the extreme degenerate laminate
    /// with `beta = 0`.
    pub achieved_ratio: Option<Scalar>,
    /// Per-component `nu_i(-X0)/nu_i(-X_i)` for the case constructions.
    pub component_ratios: Vec<Scalar>,
    pub normalization: NormalizationRecord,
    pub schema_version: u32,
}

pub const CERTIFICATE_SCHEMA_VERSION: u32 = 1;

impl LaminateCertificate {
    fn record(frame: &CubeFrame, permutation: [usize; 3], swapped: bool) -> NormalizationRecord {
        NormalizationRecord {
            flips: frame.flips(),
            det_flip: frame.det_flip(),
            permutation,
            swapped_classes: swapped,
        }
    }
}

/// The order-7 uniform tree: three nested axis splits, all eight vertices
/// at weight 1/8, valid on any frame.
pub fn uniform_laminate(frame: &CubeFrame) -> SplittingTree {
    fn rec(frame: &CubeFrame, v: Coord, depth: usize) -> SplitNode {
        if depth == 3 {
            return SplitNode::Leaf(frame.point(&v));
        }
        let mut plus = v.clone();
        plus[depth] = &plus[depth] + &Scalar::one();
        let mut minus = v.clone();
        minus[depth] = &minus[depth] - &Scalar::one();
        SplitNode::Split {
            point: frame.point(&v),
            lambda: Scalar::ratio(1, 2),
            left: Box::new(rec(frame, plus, depth + 1)),
            right: Box::new(rec(frame, minus, depth + 1)),
        }
    }
    let tree = SplittingTree::new(rec(
        frame,
        [Scalar::zero(), Scalar::zero(), Scalar::zero()],
        0,
    ));
    tree.validate().expect_valid();
    tree
}

/// Symmetric laminates on a degenerate frame (`abc = 0`): the rank-one
/// in-plane diagonals give two extreme trees (all mass on the even class,
/// or all on the odd class), and every symmetric measure is their convex
/// combination.
pub fn degenerate_laminate(
    frame: &CubeFrame,
    alpha: &Scalar,
) -> Result<LaminateCertificate, CubeError> {
    if !frame.is_degenerate() {
        return Err(CubeError::NotDegenerate);
    }
    let quarter = Scalar::ratio(1, 4);
    if alpha.is_negative() || alpha > &quarter {
        return Err(CubeError::AlphaOutOfRange(alpha.clone()));
    }
    let beta = &quarter - alpha;

    // The zero coefficient couples two axes; those two span a rank-one
    // plane, and the remaining axis is the first split direction.
    let [a, b, c] = frame.coefficients();
    let (split_axis, in_plane) = if a.is_zero() {
        (2usize, (0usize, 1usize))
    } else if b.is_zero() {
        (1, (0, 2))
    } else {
        debug_assert!(c.is_zero());
        (0, (1, 2))
    };

    let diag = |sign: i64| -> Coord {
        let mut d = [Scalar::zero(), Scalar::zero(), Scalar::zero()];
        d[in_plane.0] = Scalar::one();
        d[in_plane.1] = Scalar::from_int(sign);
        d
    };

    // From +-e_k, split along an in-plane diagonal. Using the (+) diagonal
    // above and the (-) diagonal below lands on the even class; the other
    // pairing lands on the odd class.
    let half_node = |frame: &CubeFrame, center: &Coord, diag: &Coord| -> SplitNode {
        let left = frame.point(&coord_add(center, diag));
        let right = frame.point(&coord_sub(center, diag));
        if left == right {
            // The two in-plane vertices coincide as matrices; the split
            // degenerates to the common point.
            SplitNode::Leaf(left)
        } else {
            SplitNode::Split {
                point: frame.point(center),
                lambda: Scalar::ratio(1, 2),
                left: Box::new(SplitNode::Leaf(left)),
                right: Box::new(SplitNode::Leaf(right)),
            }
        }
    };
    let extreme = |upper_sign: i64| -> SplittingTree {
        let mut e_k = [Scalar::zero(), Scalar::zero(), Scalar::zero()];
        e_k[split_axis] = Scalar::one();
        let top = half_node(frame, &e_k, &diag(upper_sign));
        let bottom = half_node(frame, &coord_neg(&e_k), &diag(-upper_sign));
        SplittingTree::new(SplitNode::Split {
            point: Mat2::zero(),
            lambda: Scalar::ratio(1, 2),
            left: Box::new(top),
            right: Box::new(bottom),
        })
    };

    let even_tree = extreme(1);
    let odd_tree = extreme(-1);
    let four = Scalar::from_int(4);
    let mut components = Vec::new();
    if !alpha.is_zero() {
        components.push((&four * alpha, even_tree));
    }
    if !beta.is_zero() {
        components.push((&four * &beta, odd_tree));
    }
    let forest = MeasureForest::new(components);
    forest.validate().expect_valid();
    let flattened = flatten_forest(&forest)?;
    let expected = frame.symmetric_measure(alpha, &beta);
    if !flattened.measure_eq(&expected) {
        return Err(CubeError::Internal(
            "degenerate construction missed the symmetric pattern".into(),
        ));
    }
    let achieved_ratio = if beta.is_zero() {
        None
    } else {
        Some(alpha / &beta)
    };
    Ok(LaminateCertificate {
        case: CaseTag::Degenerate,
        forest,
        flattened,
        alpha: alpha.clone(),
        beta,
        achieved_ratio,
        component_ratios: vec![],
        normalization: LaminateCertificate::record(frame, [0, 1, 2], false),
        schema_version: CERTIFICATE_SCHEMA_VERSION,
    })
}

/// Frame-coordinate vertex `-X_{i+1}`: `+1` at axis `i`, `-1` elsewhere.
fn minus_xi_coord(i: usize) -> Coord {
    let mut v = coord_from_ints([-1, -1, -1]);
    v[i] = Scalar::one();
    v
}

/// Closed-form component ratio for axis `i`:
/// `(a' + b' - c')/c'` in the canonical coefficients of that axis.
fn component_ratio_formula(frame: &CubeFrame, axis: usize) -> Scalar {
    let [a, b, c] = frame.canonical_abc(&Perm3::axis_first(axis));
    (&(&a + &b) - &c) / c
}

/// Case 1 (all vertex determinants nonpositive): mixes the three per-axis
/// origin witnesses so that the masses at `-X1, -X2, -X3` coincide. The
/// heavy-to-light ratio is exactly
/// `(a + b + c)(1/a + 1/b + 1/c) - 6 >= 3`, with equality iff `a = b = c`.
pub fn case1_laminate(frame: &CubeFrame) -> Result<LaminateCertificate, CubeError> {
    case1_laminate_with_search(frame, DEFAULT_SEARCH_BOUND)
}

fn case1_laminate_with_search(
    frame: &CubeFrame,
    bound: i64,
) -> Result<LaminateCertificate, CubeError> {
    if frame.is_degenerate() {
        return Err(CubeError::DegenerateFrame);
    }
    let signs = frame.vertex_det_signs();
    if signs.iter().any(|&s| s > 0) {
        return Err(CubeError::WrongCaseSign(
            "case 1 requires det X_i <= 0 for all axes".into(),
        ));
    }

    let minus_x0 = frame.point(&coord_from_ints([-1, -1, -1]));
    let mut trees = Vec::with_capacity(3);
    let mut inv_masses = Vec::with_capacity(3);
    let mut component_ratios = Vec::with_capacity(3);
    for axis in 0..3 {
        let tree = witness_tree(frame, axis, true, bound)?;
        let m = flatten_tree(&tree)?;
        let mass_xi = m.weight_at(&frame.point(&minus_xi_coord(axis)));
        if !mass_xi.is_positive() {
            return Err(CubeError::Internal(format!(
                "axis {axis}: witness puts no mass at -X{}",
                axis + 1
            )));
        }
        let ratio = &m.weight_at(&minus_x0) / &mass_xi;
        let expected = component_ratio_formula(frame, axis);
        if ratio != expected {
            return Err(CubeError::Internal(format!(
                "axis {axis}: component ratio {ratio} != closed form {expected}"
            )));
        }
        component_ratios.push(ratio);
        inv_masses.push(mass_xi.recip());
        trees.push(tree);
    }
    let total = inv_masses
        .iter()
        .fold(Scalar::zero(), |acc, w| acc + w);
    let norm = total.recip();
    let forest = MeasureForest::new(
        inv_masses
            .iter()
            .zip(trees)
            .map(|(w, t)| (w * &norm, t))
            .collect(),
    );
    forest.validate().expect_valid();
    let flattened = flatten_forest(&forest)?;
    let (alpha, beta) = symmetric_from_partial(&flattened, frame)?;

    let heavy = component_ratios
        .iter()
        .fold(Scalar::zero(), |acc, r| acc + r);
    let [a, b, c] = frame.coefficients();
    let closed = (a + b + c) * (a.recip() + b.recip() + c.recip()) - Scalar::from_int(6);
    if heavy != closed {
        return Err(CubeError::Internal(format!(
            "case-1 ratio {heavy} != closed form {closed}"
        )));
    }
    Ok(LaminateCertificate {
        case: CaseTag::Case1,
        forest,
        flattened,
        alpha,
        beta,
        achieved_ratio: Some(heavy),
        component_ratios,
        normalization: LaminateCertificate::record(frame, [0, 1, 2], false),
        schema_version: CERTIFICATE_SCHEMA_VERSION,
    })
}

/// Case 2 (one vertex determinant positive, canonically `b > a + c`): the
/// four-point laminate on `{X1, X2, -X1, -X2}` replaces the blocked axis,
/// and the mix deflates the first witness to keep the pattern symmetric.
/// The heavy-to-light ratio is exactly `2a/c + (b + c - a)/a > 4`.
pub fn case2_laminate(frame: &CubeFrame) -> Result<LaminateCertificate, CubeError> {
    case2_laminate_with_search(frame, DEFAULT_SEARCH_BOUND)
}

fn case2_laminate_with_search(
    frame: &CubeFrame,
    bound: i64,
) -> Result<LaminateCertificate, CubeError> {
    if frame.is_degenerate() {
        return Err(CubeError::DegenerateFrame);
    }
    let signs = frame.vertex_det_signs();
    let positive = signs.iter().position(|&s| s > 0).ok_or_else(|| {
        CubeError::WrongCaseSign("case 2 requires one positive vertex determinant".into())
    })?;
    let perm = Perm3::axis_middle(positive);
    let [a, b, c] = frame.canonical_abc(&perm);

    // lambda = (b - a - c)/(b - c) in (0, 1).
    let lambda = &(&(&b - &a) - &c) / &(&b - &c);
    let x1m = frame.point(&perm.apply(&x1c()));
    let x2m = frame.point(&perm.apply(&x2c()));
    let p = lerp(&x1m, &-&x2m, &lambda);
    let half = Scalar::ratio(1, 2);
    let q_plus = lerp(&x2m, &p, &half);
    let nu2_tree = SplittingTree::new(SplitNode::Split {
        point: Mat2::zero(),
        lambda: half.clone(),
        left: Box::new(SplitNode::Split {
            point: q_plus.clone(),
            lambda: half.clone(),
            left: Box::new(SplitNode::Leaf(x2m.clone())),
            right: Box::new(SplitNode::Split {
                point: p.clone(),
                lambda: lambda.clone(),
                left: Box::new(SplitNode::Leaf(x1m.clone())),
                right: Box::new(SplitNode::Leaf(-&x2m)),
            }),
        }),
        right: Box::new(SplitNode::Split {
            point: -&q_plus,
            lambda: half.clone(),
            left: Box::new(SplitNode::Leaf(-&x2m)),
            right: Box::new(SplitNode::Split {
                point: -&p,
                lambda: lambda.clone(),
                left: Box::new(SplitNode::Leaf(-&x1m)),
                right: Box::new(SplitNode::Leaf(x2m.clone())),
            }),
        }),
    });
    nu2_tree.validate().expect_valid();
    let nu2 = flatten_tree(&nu2_tree)?;
    let four = Scalar::from_int(4);
    let quarter_lambda = &lambda / &four;
    let mass_x2 = (&Scalar::from_int(2) - &lambda) / &four;
    for (point, expected) in [
        (x1m.clone(), quarter_lambda.clone()),
        (-&x1m, quarter_lambda.clone()),
        (x2m.clone(), mass_x2.clone()),
        (-&x2m, mass_x2.clone()),
    ] {
        if nu2.weight_at(&point) != expected {
            return Err(CubeError::Internal(
                "four-point laminate weights differ from lambda/4, (2-lambda)/4".into(),
            ));
        }
    }

    // Witnesses on the two admissible axes (canonical roles 1 and 3).
    let axis1 = perm.to_frame[0];
    let axis3 = perm.to_frame[2];
    let t1 = witness_tree(frame, axis1, true, bound)?;
    let t3 = witness_tree(frame, axis3, true, bound)?;
    let m1 = flatten_tree(&t1)?;
    let m3 = flatten_tree(&t3)?;
    let minus_x0 = frame.point(&coord_from_ints([-1, -1, -1]));
    let r1 = m1.weight_at(&frame.point(&minus_xi_coord(axis1)));
    let r3 = m3.weight_at(&frame.point(&minus_xi_coord(axis3)));
    let ratio1 = &m1.weight_at(&minus_x0) / &r1;
    let ratio3 = &m3.weight_at(&minus_x0) / &r3;

    // Deflation keeps nu(-X1) = nu(-X2): the four-point laminate already
    // charges -X1 by lambda/4.
    let deflate = Scalar::one() - &(&quarter_lambda / &mass_x2);
    let w1 = &deflate * &r1.recip();
    let w2 = mass_x2.recip();
    let w3 = r3.recip();
    let total = &(&w1 + &w2) + &w3;
    let norm = total.recip();
    let forest = MeasureForest::new(vec![
        (&w1 * &norm, t1),
        (&w2 * &norm, nu2_tree),
        (&w3 * &norm, t3),
    ]);
    forest.validate().expect_valid();
    let flattened = flatten_forest(&forest)?;
    let (alpha, beta) = symmetric_from_partial(&flattened, frame)?;

    let heavy = &(&deflate * &ratio1) + &ratio3;
    let closed = &(&(&Scalar::from_int(2) * &a) / &c) + &(&(&(&b + &c) - &a) / &a);
    if heavy != closed {
        return Err(CubeError::Internal(format!(
            "case-2 ratio {heavy} != closed form {closed}"
        )));
    }
    if heavy <= Scalar::from_int(4) {
        return Err(CubeError::Internal(format!(
            "case-2 ratio {heavy} should exceed 4"
        )));
    }
    Ok(LaminateCertificate {
        case: CaseTag::Case2,
        forest,
        flattened,
        alpha,
        beta,
        achieved_ratio: Some(heavy),
        component_ratios: vec![ratio1, ratio3],
        normalization: LaminateCertificate::record(frame, perm.to_frame, false),
        schema_version: CERTIFICATE_SCHEMA_VERSION,
    })
}

/// Dispatches to the case construction matching the vertex determinant
/// signs (degenerate frames use `degenerate_laminate`).
fn heavy_case_laminate(
    frame: &CubeFrame,
    bound: i64,
) -> Result<LaminateCertificate, CubeError> {
    if frame.vertex_det_signs().iter().any(|&s| s > 0) {
        case2_laminate_with_search(frame, bound)
    } else {
        case1_laminate_with_search(frame, bound)
    }
}

/// Builds a symmetric laminate with the exact vertex-class ratio
/// `alpha/beta = target` for any target in `[1/3, 3]`.
///
/// Targets at or below 1 mix the heavy case certificate (which achieves
/// `alpha/beta <= 1/3`) with the uniform tree; targets above 1 run the same
/// construction on the class-swapped frame (third edge negated) and pull
/// the labels back.
pub fn symmetric_laminate(
    frame: &CubeFrame,
    target: &Scalar,
) -> Result<LaminateCertificate, CubeError> {
    symmetric_laminate_with_search(frame, target, DEFAULT_SEARCH_BOUND)
}

/// `symmetric_laminate` with an explicit witness-search resolution bound.
pub fn symmetric_laminate_with_search(
    frame: &CubeFrame,
    target: &Scalar,
    bound: i64,
) -> Result<LaminateCertificate, CubeError> {
    let third = Scalar::ratio(1, 3);
    let three = Scalar::from_int(3);
    if target < &third || target > &three {
        return Err(CubeError::TargetOutOfRange(target.clone()));
    }
    let one = Scalar::one();
    let quarter = Scalar::ratio(1, 4);
    let alpha_target = &(&quarter * target) / &(&one + target);
    let beta_target = &quarter - &alpha_target;

    if frame.is_degenerate() {
        let mut cert = degenerate_laminate(frame, &alpha_target)?;
        cert.achieved_ratio = Some(&cert.alpha / &cert.beta);
        return Ok(cert);
    }

    if target > &one {
        // Swap the vertex classes and aim for the reciprocal ratio. The
        // swapped frame materializes the same matrices, so the forest is
        // valid verbatim; only the pattern labels change.
        let swapped = frame.with_swapped_classes()?;
        let inner = symmetric_laminate_with_search(&swapped, &target.recip(), bound)?;
        let flattened = inner.flattened;
        let expected = frame.symmetric_measure(&alpha_target, &beta_target);
        if !flattened.measure_eq(&expected) {
            return Err(CubeError::Internal(
                "class swap did not produce the mirrored pattern".into(),
            ));
        }
        let mut normalization = inner.normalization;
        normalization.swapped_classes = true;
        return Ok(LaminateCertificate {
            case: inner.case,
            forest: inner.forest,
            flattened,
            alpha: alpha_target,
            beta: beta_target,
            achieved_ratio: Some(target.clone()),
            component_ratios: inner.component_ratios,
            normalization,
            schema_version: CERTIFICATE_SCHEMA_VERSION,
        });
    }

    let base = heavy_case_laminate(frame, bound)?;
    // Mix weight w on the base certificate so that the pattern difference
    // hits the target exactly: w (alpha_c - beta_c) = alpha* - beta*.
    let diff_target = &alpha_target - &beta_target;
    let diff_base = &base.alpha - &base.beta;
    let w = &diff_target / &diff_base;
    if w.is_negative() || w > one {
        return Err(CubeError::Internal(format!(
            "mixing weight {w} escaped [0, 1]"
        )));
    }
    let mut components: Vec<(Scalar, SplittingTree)> = Vec::new();
    if !w.is_zero() {
        for c in &base.forest.components {
            components.push((&c.weight * &w, c.tree.clone()));
        }
    }
    let w_uniform = &one - &w;
    if !w_uniform.is_zero() {
        components.push((w_uniform, uniform_laminate(frame)));
    }
    let forest = MeasureForest::new(components);
    forest.validate().expect_valid();
    let flattened = flatten_forest(&forest)?;
    let expected = frame.symmetric_measure(&alpha_target, &beta_target);
    if !flattened.measure_eq(&expected) {
        return Err(CubeError::Internal(
            "mixed certificate missed the target pattern".into(),
        ));
    }
    Ok(LaminateCertificate {
        case: if w == one { base.case } else { CaseTag::Combined },
        forest,
        flattened,
        alpha: alpha_target,
        beta: beta_target,
        achieved_ratio: Some(target.clone()),
        component_ratios: base.component_ratios,
        normalization: base.normalization,
        schema_version: CERTIFICATE_SCHEMA_VERSION,
    })
}
