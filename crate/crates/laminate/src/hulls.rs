//! Semiconvex hulls of rank-one squares: classification, doubly ruled
//! fillings, ray intersections, and polyconvex membership.
//!
//! A rank-one square is a 4-tuple whose cyclic differences all have zero
//! determinant. Its lamination hull depends only on the signs of the two
//! diagonal determinants `d13 = det(X1-X3)` and `d24 = det(X2-X4)`:
//! both zero gives a flat convex hull, one zero gives two triangles glued
//! along a diagonal, equal signs pin the hull to the edge frame, and
//! opposite signs fill the square with a doubly ruled quadric patch whose
//! ruling segments are rank-one.

use crate::mat2::{cof, det, inner, lerp, Mat2};
use crate::scalar::{Scalar, FLOAT_TOLERANCE};
use crate::simplex::{solve_feasibility, Feasibility};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum HullError {
    #[error("edge {0} of the square is not rank-one (det = {1})")]
    NotRankOneSquare(usize, Scalar),
    #[error("operation requires a square with opposite-sign diagonals, got {0:?}")]
    WrongCase(SquareClass),
    #[error("parameter {0} outside [0, 1]")]
    OutOfRange(Scalar),
    #[error("the four points are coplanar; the quadric through them is not unique")]
    Coplanar,
    #[error("the line lies inside the patch quadric")]
    LineInSurface,
    #[error("ray direction is zero")]
    ZeroDirection,
    #[error("hit point could not be pulled back to patch parameters")]
    PullbackFailed,
}

/// Four matrices with rank-one cyclic differences and cached diagonal
/// determinants.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RankOneSquare {
    pub x1: Mat2,
    pub x2: Mat2,
    pub x3: Mat2,
    pub x4: Mat2,
    pub d13: Scalar,
    pub d24: Scalar,
}

/// Mode-aware zero test for a determinant against the square's scale.
fn det_is_zero(d: &Scalar, scale_sq: &Scalar) -> bool {
    if d.is_exact() {
        d.is_zero()
    } else {
        d.to_f64().abs() <= FLOAT_TOLERANCE * scale_sq.to_f64().max(1.0)
    }
}

impl RankOneSquare {
    pub fn new(x1: Mat2, x2: Mat2, x3: Mat2, x4: Mat2) -> Result<Self, HullError> {
        let corners = [&x1, &x2, &x3, &x4];
        let scale_sq = corners
            .iter()
            .map(|m| m.frobenius_sq())
            .fold(Scalar::zero(), |a, b| if b > a { b } else { a });
        for i in 0..4 {
            let d = det(&(corners[i] - corners[(i + 1) % 4]));
            if !det_is_zero(&d, &scale_sq) {
                return Err(HullError::NotRankOneSquare(i + 1, d));
            }
        }
        let d13 = det(&(&x1 - &x3));
        let d24 = det(&(&x2 - &x4));
        Ok(RankOneSquare {
            x1,
            x2,
            x3,
            x4,
            d13,
            d24,
        })
    }

    pub fn corners(&self) -> [&Mat2; 4] {
        [&self.x1, &self.x2, &self.x3, &self.x4]
    }

    fn scale_sq(&self) -> Scalar {
        self.corners()
            .iter()
            .map(|m| m.frobenius_sq())
            .fold(Scalar::zero(), |a, b| if b > a { b } else { a })
    }
}

/// Hull classification by the diagonal determinant signs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SquareClass {
    /// Both diagonals degenerate: the square lies in a rank-one plane and
    /// the hull is the ordinary convex hull.
    DegeneratePlane,
    /// Exactly one diagonal degenerate: the hull is the union of the two
    /// triangles sharing that diagonal (`diagonal` = 13 or 24).
    CoplanarTriangles { diagonal: u8 },
    /// Diagonals of the same nonzero sign: the hull is just the edge frame.
    SameSign,
    /// Opposite signs: the polyconvex hull is filled by a doubly ruled
    /// surface patch.
    OppositeSign,
}

/// Classifies a rank-one square. The `flagged` component is true when a
/// float-mode diagonal was routed to a degenerate case by tolerance rather
/// than by exact vanishing.
pub fn classify_flagged(sq: &RankOneSquare) -> (SquareClass, bool) {
    let scale_sq = sq.scale_sq();
    let z13 = det_is_zero(&sq.d13, &scale_sq);
    let z24 = det_is_zero(&sq.d24, &scale_sq);
    let flagged = (z13 && !sq.d13.is_exact() && !sq.d13.is_zero())
        || (z24 && !sq.d24.is_exact() && !sq.d24.is_zero());
    let class = match (z13, z24) {
        (true, true) => SquareClass::DegeneratePlane,
        (true, false) => SquareClass::CoplanarTriangles { diagonal: 13 },
        (false, true) => SquareClass::CoplanarTriangles { diagonal: 24 },
        (false, false) => {
            if sq.d13.signum() == sq.d24.signum() {
                SquareClass::SameSign
            } else {
                SquareClass::OppositeSign
            }
        }
    };
    (class, flagged)
}

pub fn classify(sq: &RankOneSquare) -> SquareClass {
    classify_flagged(sq).0
}

/// A doubly ruled filling of an opposite-sign square.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RuledSurfacePatch {
    pub square: RankOneSquare,
}

impl RuledSurfacePatch {
    pub fn new(square: RankOneSquare) -> Result<Self, HullError> {
        match classify(&square) {
            SquareClass::OppositeSign => Ok(RuledSurfacePatch { square }),
            other => Err(HullError::WrongCase(other)),
        }
    }
}

/// The pairing function of an opposite-sign square:
/// `s = f(t) = t d13 / (t d13 - (1-t) d24)`, the unique parameter for which
/// `det((t X1 + (1-t) X2) - (s X4 + (1-s) X3)) = 0`. It fixes `f(0) = 0`,
/// `f(1) = 1` and increases strictly.
pub fn pairing(sq: &RankOneSquare, t: &Scalar) -> Result<Scalar, HullError> {
    let class = classify(sq);
    if class != SquareClass::OppositeSign {
        return Err(HullError::WrongCase(class));
    }
    let num = t * &sq.d13;
    let den = &num - &((Scalar::one() - t) * &sq.d24);
    if den.is_zero() {
        return Err(HullError::OutOfRange(t.clone()));
    }
    Ok(num / den)
}

fn in_unit(x: &Scalar) -> bool {
    if x.is_exact() {
        !x.is_negative() && x <= &Scalar::one()
    } else {
        let v = x.to_f64();
        (-FLOAT_TOLERANCE..=1.0 + FLOAT_TOLERANCE).contains(&v)
    }
}

/// Ruling endpoints at parameter `t`: `A(t) = t X1 + (1-t) X2` on the
/// `[X1, X2]` edge and `B(t) = f(t) X4 + (1-f(t)) X3` on the opposite edge.
/// The segment `[A(t), B(t)]` is rank-one.
pub fn ruling(patch: &RuledSurfacePatch, t: &Scalar) -> Result<(Mat2, Mat2), HullError> {
    let sq = &patch.square;
    let s = pairing(sq, t)?;
    Ok((lerp(&sq.x1, &sq.x2, t), lerp(&sq.x4, &sq.x3, &s)))
}

/// Point of the patch at ruling parameter `t` and segment parameter `u`:
/// `u A(t) + (1-u) B(t)`.
pub fn surface_point(
    patch: &RuledSurfacePatch,
    t: &Scalar,
    u: &Scalar,
) -> Result<Mat2, HullError> {
    if !in_unit(t) {
        return Err(HullError::OutOfRange(t.clone()));
    }
    if !in_unit(u) {
        return Err(HullError::OutOfRange(u.clone()));
    }
    let (a, b) = ruling(patch, t)?;
    Ok(lerp(&a, &b, u))
}

/// Solves for the unique matrix `R` in the affine span of four non-coplanar
/// points and the scalar `alpha` with `det(X_i - R) = alpha` for all `i`.
/// The quadric `{det(X - R) = alpha}` then contains all four points and, for
/// opposite-sign squares, the whole ruled patch.
pub fn hyperboloid_center(points: &[Mat2; 4]) -> Result<(Mat2, Scalar), HullError> {
    let u = [&points[1] - &points[0], &points[2] - &points[0], &points[3] - &points[0]];
    // <cof(X_i - X_1), R> = det X_i - det X_1, with R = X_1 + sum coeff_j U_j.
    let mut rows = Vec::with_capacity(3);
    let mut rhs = Vec::with_capacity(3);
    for i in 0..3 {
        let c = cof(&u[i]);
        rows.push([inner(&c, &u[0]), inner(&c, &u[1]), inner(&c, &u[2])]);
        rhs.push(det(&points[i + 1]) - det(&points[0]) - inner(&c, &points[0]));
    }
    let coeffs = solve_3x3(&rows, &rhs).ok_or(HullError::Coplanar)?;
    let mut r = points[0].clone();
    for (c, dir) in coeffs.iter().zip(&u) {
        r = &r + &dir.scale(c);
    }
    let alpha = det(&(&points[0] - &r));
    for p in points.iter() {
        debug_assert!(det(&(p - &r)).approx_eq(&alpha));
    }
    Ok((r, alpha))
}

/// Exact 3x3 solve by Gaussian elimination; `None` when singular.
fn solve_3x3(rows: &[[Scalar; 3]], rhs: &[Scalar]) -> Option<[Scalar; 3]> {
    let mut m: Vec<Vec<Scalar>> = rows
        .iter()
        .zip(rhs)
        .map(|(r, b)| vec![r[0].clone(), r[1].clone(), r[2].clone(), b.clone()])
        .collect();
    for col in 0..3 {
        let pivot = (col..3).find(|&i| !m[i][col].is_zero())?;
        m.swap(col, pivot);
        let p = m[col][col].clone();
        for v in m[col].iter_mut() {
            *v = &*v / &p;
        }
        let prow = m[col].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i != col && !row[col].is_zero() {
                let f = row[col].clone();
                for (v, pv) in row.iter_mut().zip(&prow) {
                    *v = &*v - &(&f * pv);
                }
            }
        }
    }
    Some([m[0][3].clone(), m[1][3].clone(), m[2][3].clone()])
}

/// One intersection of a parametric line with a ruled patch.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RayHit {
    pub point: Mat2,
    /// Ruling parameter of the hit.
    pub t: Scalar,
    /// Segment parameter along the ruling.
    pub u: Scalar,
    /// Line parameter: `point = origin + sigma * direction`.
    pub sigma: Scalar,
}

/// Intersects the line `origin + sigma * direction` with a ruled patch.
///
/// Substituting into the patch quadric `det(X - R) = alpha` gives a
/// quadratic in `sigma` (linear when the direction is rank-one). Each real
/// root is kept only if its `(t, u)` pullback lands in the unit square; at
/// most two hits return, sorted by `sigma`. Coplanar patches fall back to a
/// plane intersection. A line contained in the quadric is reported as
/// `LineInSurface`.
pub fn ray_surface_intersections(
    patch: &RuledSurfacePatch,
    origin: &Mat2,
    direction: &Mat2,
) -> Result<Vec<RayHit>, HullError> {
    if direction.is_zero() {
        return Err(HullError::ZeroDirection);
    }
    let sq = &patch.square;
    let sigmas: Vec<Scalar> = match hyperboloid_center(&[
        sq.x1.clone(),
        sq.x2.clone(),
        sq.x3.clone(),
        sq.x4.clone(),
    ]) {
        Ok((r, alpha)) => {
            let g = origin - &r;
            let a2 = det(direction);
            let a1 = inner(&cof(&g), direction);
            let a0 = det(&g) - alpha;
            solve_scalar_quadratic(&a2, &a1, &a0)?
        }
        Err(HullError::Coplanar) => plane_line_sigma(sq, origin, direction)?,
        Err(e) => return Err(e),
    };

    let mut hits = Vec::new();
    for sigma in sigmas {
        let h = origin + &direction.scale(&sigma);
        if let Some((t, u)) = pull_back(sq, &h) {
            if in_unit(&t) && in_unit(&u) {
                hits.push(RayHit {
                    point: h,
                    t,
                    u,
                    sigma,
                });
            }
        }
    }
    hits.sort_by(|a, b| {
        a.sigma
            .partial_cmp(&b.sigma)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    hits.dedup_by(|a, b| a.sigma == b.sigma);
    Ok(hits)
}

/// Roots of `a2 s^2 + a1 s + a0 = 0`, exact where possible. Irrational roots
/// go through floats and are verified a posteriori against the exact
/// coefficients.
fn solve_scalar_quadratic(
    a2: &Scalar,
    a1: &Scalar,
    a0: &Scalar,
) -> Result<Vec<Scalar>, HullError> {
    if a2.is_zero() {
        if a1.is_zero() {
            return if a0.is_zero() {
                Err(HullError::LineInSurface)
            } else {
                Ok(vec![])
            };
        }
        return Ok(vec![-(a0 / a1)]);
    }
    let four = Scalar::from_int(4);
    let disc = a1 * a1 - &(&four * &(a2 * a0));
    if disc.is_negative() {
        return Ok(vec![]);
    }
    let sqrt_disc = disc.sqrt();
    let two_a2 = Scalar::from_int(2) * a2;
    let r1 = (-(a1.clone()) - &sqrt_disc) / &two_a2;
    let r2 = (-(a1.clone()) + &sqrt_disc) / &two_a2;
    let mut out = vec![r1];
    if !sqrt_disc.is_zero() {
        out.push(r2);
    }
    if !sqrt_disc.is_exact() {
        // Float roots: reject any root whose residual exceeds the scale-aware
        // tolerance.
        let scale = a2
            .to_f64()
            .abs()
            .max(a1.to_f64().abs())
            .max(a0.to_f64().abs())
            .max(1.0);
        out.retain(|s| {
            let v = s.to_f64();
            let res = a2.to_f64() * v * v + a1.to_f64() * v + a0.to_f64();
            res.abs() <= 1e-9 * scale * v.mul_add(v, 1.0)
        });
    }
    Ok(out)
}

/// Line parameter of the intersection with the plane of a coplanar square.
fn plane_line_sigma(
    sq: &RankOneSquare,
    origin: &Mat2,
    direction: &Mat2,
) -> Result<Vec<Scalar>, HullError> {
    // Solve origin + sigma d = X1 + p U + q V over the four matrix entries.
    let u = &sq.x2 - &sq.x1;
    let v = &sq.x3 - &sq.x1;
    let rhs_m = origin - &sq.x1;
    let cols = [u, v, -direction];
    let rows: Vec<[Scalar; 3]> = (0..4)
        .map(|e| {
            [
                cols[0].entries()[e].clone(),
                cols[1].entries()[e].clone(),
                cols[2].entries()[e].clone(),
            ]
        })
        .collect();
    let rhs: Vec<Scalar> = (0..4).map(|e| rhs_m.entries()[e].clone()).collect();
    // Pick three independent rows, solve, and check the fourth.
    for skip in (0..4).rev() {
        let sel: Vec<usize> = (0..4).filter(|&i| i != skip).collect();
        let sub_rows = [
            rows[sel[0]].clone(),
            rows[sel[1]].clone(),
            rows[sel[2]].clone(),
        ];
        let sub_rhs = vec![
            rhs[sel[0]].clone(),
            rhs[sel[1]].clone(),
            rhs[sel[2]].clone(),
        ];
        if let Some(sol) = solve_3x3(&sub_rows, &sub_rhs) {
            let check = &rows[skip][0] * &sol[0]
                + &rows[skip][1] * &sol[1]
                + &rows[skip][2] * &sol[2];
            if check.approx_eq(&rhs[skip]) {
                return Ok(vec![sol[2].clone()]);
            }
            return Ok(vec![]);
        }
    }
    // The 3x4 system is rank-deficient: the line is parallel to or inside
    // the plane.
    let in_plane = {
        // origin - X1 and direction both in span{U, V}?
        let u = &sq.x2 - &sq.x1;
        let v = &sq.x3 - &sq.x1;
        in_span2(&u, &v, &rhs_m) && in_span2(&u, &v, direction)
    };
    if in_plane {
        Err(HullError::LineInSurface)
    } else {
        Ok(vec![])
    }
}

fn in_span2(u: &Mat2, v: &Mat2, w: &Mat2) -> bool {
    // w in span{u, v} iff every 3x3 minor of [u v w] (as 4-vectors) vanishes.
    let cols = [u, v, w];
    for drop in 0..4 {
        let rows: Vec<usize> = (0..4).filter(|&i| i != drop).collect();
        let m: Vec<Vec<Scalar>> = rows
            .iter()
            .map(|&i| cols.iter().map(|c| c.entries()[i].clone()).collect())
            .collect();
        let d = &m[0][0] * &(&m[1][1] * &m[2][2] - &m[1][2] * &m[2][1])
            - &m[0][1] * &(&m[1][0] * &m[2][2] - &m[1][2] * &m[2][0])
            + &m[0][2] * &(&m[1][0] * &m[2][1] - &m[1][1] * &m[2][0]);
        if !d.is_zero() {
            return false;
        }
    }
    true
}

/// Pulls a point of the patch quadric back to ruling parameters `(t, u)`.
///
/// The ruling through `H` meets the edge line `[X1, X2]` at the unique
/// rank-one-connected point: `det(H - A(t)) = 0` is linear in `t` because
/// the edge is rank-one. If that equation degenerates, the dual equation on
/// the `[X4, X3]` edge is used and `t` recovered through the inverse pairing.
/// The combination `H = u A + (1-u) B` is then verified exactly.
fn pull_back(sq: &RankOneSquare, h: &Mat2) -> Option<(Scalar, Scalar)> {
    let (t, s) = {
        let g2 = h - &sq.x2;
        let denom_t = inner(&cof(&g2), &(&sq.x1 - &sq.x2));
        if !denom_t.is_zero() {
            let t = det(&g2) / denom_t;
            let num = &t * &sq.d13;
            let den = &num - &((Scalar::one() - &t) * &sq.d24);
            if den.is_zero() {
                return None;
            }
            (t.clone(), num / den)
        } else {
            let g3 = h - &sq.x3;
            let denom_s = inner(&cof(&g3), &(&sq.x4 - &sq.x3));
            if denom_s.is_zero() {
                return None;
            }
            let s = det(&g3) / denom_s;
            let num = &s * &sq.d24;
            let den = &num - &((Scalar::one() - &s) * &sq.d13);
            if den.is_zero() {
                return None;
            }
            (num / den, s)
        }
    };
    let a = lerp(&sq.x1, &sq.x2, &t);
    let b = lerp(&sq.x4, &sq.x3, &s);
    let diff = &a - &b;
    // u from the largest-magnitude entry of A - B, then verified on all
    // entries.
    let (mut best, mut best_abs) = (None, Scalar::zero());
    for i in 0..4 {
        let abs = diff.entries()[i].abs();
        if abs > best_abs {
            best_abs = abs;
            best = Some(i);
        }
    }
    let i = best?;
    let u = (&(h - &b).entries()[i].clone()) / diff.entries()[i];
    let recon = lerp(&a, &b, &u);
    if crate::measures::mat2_close(&recon, h) {
        Some((t, u))
    } else {
        None
    }
}

/// Polyconvex membership verdict: witness weights when `X` is the
/// barycenter of a measure on `K` matching both moments, or infeasibility.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum PcMembership {
    Feasible(Vec<Scalar>),
    Infeasible,
}

impl PcMembership {
    pub fn is_feasible(&self) -> bool {
        matches!(self, PcMembership::Feasible(_))
    }
}

/// Decides `X in K^pc` for a finite set `K` by exact LP feasibility of
///
/// ```text
/// lambda >= 0,  sum lambda = 1,  sum lambda_i X_i = X,
/// sum lambda_i det X_i = det X.
/// ```
pub fn pc_membership(k: &[Mat2], x: &Mat2) -> PcMembership {
    let n = k.len();
    let mut rows: Vec<Vec<Scalar>> = Vec::with_capacity(6);
    let mut rhs: Vec<Scalar> = Vec::with_capacity(6);
    // Mass.
    rows.push(vec![Scalar::one(); n]);
    rhs.push(Scalar::one());
    // First moment, entry by entry.
    for e in 0..4 {
        rows.push(k.iter().map(|p| p.entries()[e].clone()).collect());
        rhs.push(x.entries()[e].clone());
    }
    // Determinant moment.
    rows.push(k.iter().map(det).collect());
    rhs.push(det(x));

    match solve_feasibility(&rows, &rhs) {
        Feasibility::Feasible(w) => PcMembership::Feasible(w),
        Feasibility::Infeasible => PcMembership::Infeasible,
    }
}

/// The polyconvex membership identity specialized to a square: a convex
/// combination with weights `lambda` has determinant matching its moments
/// iff `lambda1 lambda3 d13 + lambda2 lambda4 d24 = 0`.
pub fn square_pc_check(sq: &RankOneSquare, lambdas: &[Scalar; 4]) -> bool {
    let lhs = &lambdas[0] * &lambdas[2] * &sq.d13 + &lambdas[1] * &lambdas[3] * &sq.d24;
    lhs.approx_eq(&Scalar::zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat2::{tensor, Vec2};

    fn e11() -> Mat2 {
        tensor(&Vec2::from_ints(1, 0), &Vec2::from_ints(1, 0))
    }

    fn e22() -> Mat2 {
        tensor(&Vec2::from_ints(0, 1), &Vec2::from_ints(0, 1))
    }

    /// Planar parallelogram square: always opposite-sign diagonals.
    fn parallelogram() -> RankOneSquare {
        let x1 = Mat2::zero();
        let x2 = e11();
        let x3 = &e11() + &e22();
        let x4 = e22();
        RankOneSquare::new(x1, x2, x3, x4).unwrap()
    }

    /// Non-coplanar square with same-sign diagonals (corners on det = 1).
    fn same_sign_square() -> RankOneSquare {
        RankOneSquare::new(
            Mat2::identity(),
            Mat2::from_ints(1, 0, 1, 1),
            Mat2::from_ints(2, 1, 1, 1),
            Mat2::from_ints(2, -1, 1, 0),
        )
        .unwrap()
    }

    /// Two rank-one planes glued along a shared rank-one diagonal.
    fn triangles_square() -> RankOneSquare {
        RankOneSquare::new(
            Mat2::zero(),
            Mat2::from_ints(0, 1, 0, 0),
            e11(),
            Mat2::from_ints(0, 0, 1, 0),
        )
        .unwrap()
    }

    #[test]
    fn square_constructor_rejects_bad_edges() {
        let err = RankOneSquare::new(Mat2::zero(), Mat2::identity(), e11(), e22());
        assert!(err.is_err());
    }

    #[test]
    fn classify_cases() {
        assert_eq!(classify(&parallelogram()), SquareClass::OppositeSign);
        assert_eq!(classify(&same_sign_square()), SquareClass::SameSign);
        assert_eq!(
            classify(&triangles_square()),
            SquareClass::CoplanarTriangles { diagonal: 13 }
        );
        // Fully degenerate: everything inside one rank-one plane.
        let sq = RankOneSquare::new(
            Mat2::zero(),
            Mat2::from_ints(1, 0, 0, 0),
            Mat2::from_ints(1, 1, 0, 0),
            Mat2::from_ints(0, 1, 0, 0),
        )
        .unwrap();
        assert_eq!(classify(&sq), SquareClass::DegeneratePlane);
    }

    #[test]
    fn pairing_endpoints_and_residual() {
        let sq = parallelogram();
        assert_eq!(pairing(&sq, &Scalar::zero()).unwrap(), Scalar::zero());
        assert_eq!(pairing(&sq, &Scalar::one()).unwrap(), Scalar::one());
        // d13 = 1, d24 = -1: f(1/2) = 1/2.
        assert_eq!(
            pairing(&sq, &Scalar::ratio(1, 2)).unwrap(),
            Scalar::ratio(1, 2)
        );
        for num in 0..=20i64 {
            let t = Scalar::ratio(num, 20);
            let s = pairing(&sq, &t).unwrap();
            let a = lerp(&sq.x1, &sq.x2, &t);
            let b = lerp(&sq.x4, &sq.x3, &s);
            assert_eq!(det(&(&a - &b)), Scalar::zero());
        }
        assert!(pairing(&same_sign_square(), &Scalar::ratio(1, 2)).is_err());
    }

    #[test]
    fn surface_point_boundaries() {
        let patch = RuledSurfacePatch::new(parallelogram()).unwrap();
        let p = surface_point(&patch, &Scalar::zero(), &Scalar::one()).unwrap();
        assert_eq!(p, patch.square.x2);
        let p = surface_point(&patch, &Scalar::one(), &Scalar::zero()).unwrap();
        assert_eq!(p, patch.square.x4);
        assert!(surface_point(&patch, &Scalar::ratio(3, 2), &Scalar::zero()).is_err());
    }

    #[test]
    fn hyperboloid_center_shifted_quadric() {
        let sq = same_sign_square();
        let pts = [
            sq.x1.clone(),
            sq.x2.clone(),
            sq.x3.clone(),
            sq.x4.clone(),
        ];
        let (r, alpha) = hyperboloid_center(&pts).unwrap();
        // The defining property holds at all four points.
        for p in &pts {
            assert_eq!(det(&(p - &r)), alpha);
        }
        // Shifting the inputs so the previous center lands at the origin:
        // the new center is zero, with the same level alpha.
        let shifted: [Mat2; 4] = [
            &pts[0] - &r,
            &pts[1] - &r,
            &pts[2] - &r,
            &pts[3] - &r,
        ];
        let (r2, alpha2) = hyperboloid_center(&shifted).unwrap();
        assert_eq!(r2, Mat2::zero());
        assert_eq!(alpha2, alpha);
        // Coplanar inputs are rejected.
        let sq = parallelogram();
        assert!(matches!(
            hyperboloid_center(&[
                sq.x1.clone(),
                sq.x2.clone(),
                sq.x3.clone(),
                sq.x4.clone()
            ]),
            Err(HullError::Coplanar)
        ));
    }

    #[test]
    fn ray_hits_coplanar_patch() {
        // The plane of the parallelogram is the diagonal-matrix plane; a
        // line through its center along e12 + e21 pierces it once.
        let patch = RuledSurfacePatch::new(parallelogram()).unwrap();
        let origin = Mat2::new(
            Scalar::ratio(1, 2),
            Scalar::from_int(-1),
            Scalar::from_int(-1),
            Scalar::ratio(1, 2),
        );
        let dir = Mat2::from_ints(0, 1, 1, 0);
        let hits = ray_surface_intersections(&patch, &origin, &dir).unwrap();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].sigma, Scalar::one());
        assert_eq!(hits[0].t, Scalar::ratio(1, 2));
        assert_eq!(hits[0].u, Scalar::ratio(1, 2));
        // Pointing away from the plane misses.
        let miss = ray_surface_intersections(
            &patch,
            &Mat2::from_ints(5, 0, 0, 5),
            &Mat2::from_ints(0, 1, 1, 0),
        )
        .unwrap();
        assert!(miss.is_empty());
    }

    #[test]
    fn ray_in_surface_is_signaled() {
        let patch = RuledSurfacePatch::new(parallelogram()).unwrap();
        // The ruling through the patch center runs along e11 - e22.
        let origin = Mat2::new(
            Scalar::ratio(1, 2),
            Scalar::zero(),
            Scalar::zero(),
            Scalar::ratio(1, 2),
        );
        let dir = Mat2::from_ints(1, 0, 0, -1);
        assert!(matches!(
            ray_surface_intersections(&patch, &origin, &dir),
            Err(HullError::LineInSurface)
        ));
    }

    #[test]
    fn pc_membership_trivial_witness() {
        let k = vec![Mat2::identity(), e11(), e22()];
        match pc_membership(&k, &Mat2::identity()) {
            PcMembership::Feasible(w) => {
                assert_eq!(w[0], Scalar::one());
            }
            PcMembership::Infeasible => panic!("a support point is always a member"),
        }
    }

    #[test]
    fn pc_membership_same_sign_center_infeasible() {
        let sq = same_sign_square();
        let quarter = Scalar::ratio(1, 4);
        let center = sq
            .corners()
            .iter()
            .fold(Mat2::zero(), |acc, m| &acc + &m.scale(&quarter));
        let k: Vec<Mat2> = sq.corners().iter().map(|m| (*m).clone()).collect();
        assert!(!pc_membership(&k, &center).is_feasible());
    }

    #[test]
    fn pc_membership_triangles() {
        let sq = triangles_square();
        let k: Vec<Mat2> = sq.corners().iter().map(|m| (*m).clone()).collect();
        let third = Scalar::ratio(1, 3);
        // Interior of triangle {X1, X2, X3}: member.
        let p = (&(&sq.x1 + &sq.x2) + &sq.x3).scale(&third);
        assert!(pc_membership(&k, &p).is_feasible());
        // All-strictly-positive combination: outside both triangles.
        let quarter = Scalar::ratio(1, 4);
        let q = sq
            .corners()
            .iter()
            .fold(Mat2::zero(), |acc, m| &acc + &m.scale(&quarter));
        assert!(!pc_membership(&k, &q).is_feasible());
    }

    #[test]
    fn square_pc_check_examples() {
        let sq = parallelogram();
        // A vertex.
        assert!(square_pc_check(
            &sq,
            &[Scalar::one(), Scalar::zero(), Scalar::zero(), Scalar::zero()]
        ));
        // An edge point.
        assert!(square_pc_check(
            &sq,
            &[
                Scalar::ratio(1, 3),
                Scalar::ratio(2, 3),
                Scalar::zero(),
                Scalar::zero()
            ]
        ));
        // The center of an opposite-sign square with |d13| = |d24| balances.
        assert!(square_pc_check(
            &sq,
            &[
                Scalar::ratio(1, 4),
                Scalar::ratio(1, 4),
                Scalar::ratio(1, 4),
                Scalar::ratio(1, 4)
            ]
        ));
        let ss = same_sign_square();
        assert!(!square_pc_check(
            &ss,
            &[
                Scalar::ratio(1, 4),
                Scalar::ratio(1, 4),
                Scalar::ratio(1, 4),
                Scalar::ratio(1, 4)
            ]
        ));
    }

    #[test]
    fn surface_points_are_pc_members() {
        let patch = RuledSurfacePatch::new(parallelogram()).unwrap();
        let k: Vec<Mat2> = patch.square.corners().iter().map(|m| (*m).clone()).collect();
        for i in 0..=4i64 {
            for j in 0..=4i64 {
                let t = Scalar::ratio(i, 4);
                let u = Scalar::ratio(j, 4);
                let p = surface_point(&patch, &t, &u).unwrap();
                assert!(pc_membership(&k, &p).is_feasible(), "t={t} u={u}");
            }
        }
    }
}

#[cfg(test)]
mod properties {
    use super::*;
    use crate::mat2::tensor;
    use crate::mat2::Vec2;
    use proptest::prelude::*;

    fn small_scalar() -> impl Strategy<Value = Scalar> {
        (-8i64..=8, 1i64..=4).prop_map(|(p, q)| Scalar::ratio(p, q))
    }

    fn rank_one() -> impl Strategy<Value = Mat2> {
        (small_scalar(), small_scalar(), small_scalar(), small_scalar())
            .prop_map(|(a1, a2, n1, n2)| tensor(&Vec2::new(a1, a2), &Vec2::new(n1, n2)))
            .prop_filter("nonzero", |m| !m.is_zero())
    }

    /// Squares through `X1` and `X3` with both off-diagonal corners solved
    /// from the linear rank-one step equation. The diagonal step must be
    /// nonsingular for the step equation to have a solution.
    fn square() -> impl Strategy<Value = RankOneSquare> {
        (
            (small_scalar(), small_scalar(), small_scalar(), small_scalar())
                .prop_map(|(a, b, c, d)| Mat2::new(a, b, c, d)),
            rank_one(),
            rank_one(),
            small_scalar(),
            small_scalar(),
            small_scalar(),
            small_scalar(),
        )
            .prop_filter_map("valid square", |(g, d2, d4, x1a, x1b, x1c, x1d)| {
                let x1 = Mat2::new(x1a, x1b, x1c, x1d);
                let x3 = &x1 + &g;
                let d13 = det(&(&x1 - &x3));
                if d13.is_zero() {
                    return None;
                }
                let corner = |dir: &Mat2| -> Option<Mat2> {
                    let denom = inner(&cof(&(&x1 - &x3)), dir);
                    if denom.is_zero() {
                        return None;
                    }
                    Some(&x1 + &dir.scale(&(-&d13 / &denom)))
                };
                let x2 = corner(&d2)?;
                let x4 = corner(&d4)?;
                if x2 == x4 {
                    return None;
                }
                RankOneSquare::new(x1, x2, x3, x4).ok()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// The pairing annihilates the ruling determinant exactly, for any
        /// rational parameter in the unit interval.
        #[test]
        fn pairing_residual_vanishes(sq in square(), num in 0i64..=24) {
            if classify(&sq) == SquareClass::OppositeSign {
                let t = Scalar::ratio(num, 24);
                let s = pairing(&sq, &t).unwrap();
                let a = lerp(&sq.x1, &sq.x2, &t);
                let b = lerp(&sq.x4, &sq.x3, &s);
                prop_assert_eq!(det(&(&a - &b)), Scalar::zero());
            }
        }

        /// The quadric center reproduces its level at all four corners.
        #[test]
        fn hyperboloid_center_is_exact(sq in square()) {
            let pts = [sq.x1.clone(), sq.x2.clone(), sq.x3.clone(), sq.x4.clone()];
            if let Ok((r, alpha)) = hyperboloid_center(&pts) {
                for p in &pts {
                    prop_assert_eq!(det(&(p - &r)), alpha.clone());
                }
            }
        }
    }
}
