//! Atomic probability measures on 2x2 matrices and splitting-tree
//! certificates.
//!
//! A splitting tree is the finite witness that a measure is a prelaminate:
//! every internal node splits its barycenter along a rank-one direction into
//! the barycenters of its children. Validity of the whole certificate reduces
//! to two decidable checks per node, and Jensen's inequality for any rank-one
//! convex function then follows mechanically down the tree.

use crate::cube::CubeFrame;
use crate::mat2::{det, is_rank_one, lerp, Mat2};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

#[derive(Debug, thiserror::Error)]
pub enum MeasureError {
    #[error("measure has no atoms")]
    Empty,
    #[error("atom {index} has negative weight {weight}")]
    NegativeWeight { index: usize, weight: Scalar },
    #[error("weights sum to {0}, not 1")]
    BadTotal(Scalar),
    #[error("support contains a point outside the cube's vertex set: {0}")]
    SupportOutsideCube(Mat2),
    #[error("symmetry hypothesis fails: weights at -X1, -X2, -X3 are {0}, {1}, {2}")]
    HypothesisFailed(Scalar, Scalar, Scalar),
    #[error("measure satisfies the hypothesis but not the symmetric pattern")]
    PatternViolated,
    #[error("invalid splitting tree: {0}")]
    InvalidTree(TreeViolation),
}

/// A finitely supported probability measure, atoms merged and weights
/// summing to one.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AtomicMeasure {
    atoms: Vec<(Mat2, Scalar)>,
}

fn scalar_cmp(a: &Scalar, b: &Scalar) -> Ordering {
    a.partial_cmp(b).unwrap_or(Ordering::Equal)
}

fn point_cmp(a: &Mat2, b: &Mat2) -> Ordering {
    for (x, y) in a.entries().into_iter().zip(b.entries()) {
        match scalar_cmp(x, y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

/// Entrywise mode-aware equality of matrices (decidable for exact entries).
pub fn mat2_close(a: &Mat2, b: &Mat2) -> bool {
    a.entries()
        .into_iter()
        .zip(b.entries())
        .all(|(x, y)| x.approx_eq(y))
}

impl AtomicMeasure {
    /// Builds a measure, merging duplicate points and validating that the
    /// weights are nonnegative and sum to one.
    pub fn new(atoms: Vec<(Mat2, Scalar)>) -> Result<Self, MeasureError> {
        if atoms.is_empty() {
            return Err(MeasureError::Empty);
        }
        for (i, (_, w)) in atoms.iter().enumerate() {
            if w.is_negative() {
                return Err(MeasureError::NegativeWeight {
                    index: i,
                    weight: w.clone(),
                });
            }
        }
        let total = atoms
            .iter()
            .fold(Scalar::zero(), |acc, (_, w)| acc + w);
        let ok = if total.is_exact() {
            total == Scalar::one()
        } else {
            total.approx_eq(&Scalar::one())
        };
        if !ok {
            return Err(MeasureError::BadTotal(total));
        }
        Ok(AtomicMeasure {
            atoms: merge_atoms(atoms),
        })
    }

    pub fn dirac(point: Mat2) -> Self {
        AtomicMeasure {
            atoms: vec![(point, Scalar::one())],
        }
    }

    pub fn atoms(&self) -> &[(Mat2, Scalar)] {
        &self.atoms
    }

    /// Weight of `point` (zero if absent from the support).
    pub fn weight_at(&self, point: &Mat2) -> Scalar {
        self.atoms
            .iter()
            .find(|(p, _)| mat2_close(p, point))
            .map(|(_, w)| w.clone())
            .unwrap_or_else(Scalar::zero)
    }

    /// Two measures are the same iff their merged, sorted atom lists agree.
    pub fn measure_eq(&self, other: &AtomicMeasure) -> bool {
        if self.atoms.len() != other.atoms.len() {
            return false;
        }
        self.atoms
            .iter()
            .zip(&other.atoms)
            .all(|((p, w), (q, v))| mat2_close(p, q) && w.approx_eq(v))
    }
}

fn merge_atoms(atoms: Vec<(Mat2, Scalar)>) -> Vec<(Mat2, Scalar)> {
    let mut merged: Vec<(Mat2, Scalar)> = Vec::new();
    for (p, w) in atoms {
        if let Some((_, acc)) = merged.iter_mut().find(|(q, _)| mat2_close(q, &p)) {
            *acc = &*acc + &w;
        } else {
            merged.push((p, w));
        }
    }
    merged.retain(|(_, w)| !w.is_zero());
    merged.sort_by(|(p, _), (q, _)| point_cmp(p, q));
    merged
}

/// Center of mass `sum w_i X_i`.
pub fn barycenter(m: &AtomicMeasure) -> Mat2 {
    m.atoms
        .iter()
        .fold(Mat2::zero(), |acc, (p, w)| &acc + &p.scale(w))
}

// --- splitting trees --------------------------------------------------------

/// A node of a binary splitting tree. Every node knows its barycenter; a
/// `Split` must satisfy `point = lambda bary(left) + (1-lambda) bary(right)`
/// with `bary(left) - bary(right)` of rank one.
#[derive(Clone, Debug)]
pub enum SplitNode {
    Leaf(Mat2),
    Split {
        point: Mat2,
        lambda: Scalar,
        left: Box<SplitNode>,
        right: Box<SplitNode>,
    },
}

impl SplitNode {
    /// Barycenter carried by this node.
    pub fn point(&self) -> &Mat2 {
        match self {
            SplitNode::Leaf(p) => p,
            SplitNode::Split { point, .. } => point,
        }
    }

    pub fn leaf(point: Mat2) -> SplitNode {
        SplitNode::Leaf(point)
    }

    /// Number of splits below (and including) this node.
    pub fn order(&self) -> usize {
        match self {
            SplitNode::Leaf(_) => 0,
            SplitNode::Split { left, right, .. } => 1 + left.order() + right.order(),
        }
    }
}

/// A binary prelaminate certificate.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(from = "NodeJson", into = "NodeJson")]
pub struct SplittingTree {
    pub root: SplitNode,
}

impl SplittingTree {
    pub fn new(root: SplitNode) -> Self {
        SplittingTree { root }
    }

    pub fn barycenter(&self) -> &Mat2 {
        self.root.point()
    }

    pub fn order(&self) -> usize {
        self.root.order()
    }

    pub fn validate(&self) -> ValidationOutcome {
        validate_node(&self.root, &mut String::new())
    }

    /// Applies a pointwise matrix map to every node (used to pull
    /// certificates back through frame normalizations).
    pub fn map_points(&self, f: &impl Fn(&Mat2) -> Mat2) -> SplittingTree {
        fn go(node: &SplitNode, f: &impl Fn(&Mat2) -> Mat2) -> SplitNode {
            match node {
                SplitNode::Leaf(p) => SplitNode::Leaf(f(p)),
                SplitNode::Split {
                    point,
                    lambda,
                    left,
                    right,
                } => SplitNode::Split {
                    point: f(point),
                    lambda: lambda.clone(),
                    left: Box::new(go(left, f)),
                    right: Box::new(go(right, f)),
                },
            }
        }
        SplittingTree::new(go(&self.root, f))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum NodeJson {
    Leaf {
        leaf: Mat2,
    },
    Split {
        point: Mat2,
        lambda: Scalar,
        left: Box<NodeJson>,
        right: Box<NodeJson>,
    },
}

impl From<NodeJson> for SplittingTree {
    fn from(n: NodeJson) -> Self {
        fn go(n: NodeJson) -> SplitNode {
            match n {
                NodeJson::Leaf { leaf } => SplitNode::Leaf(leaf),
                NodeJson::Split {
                    point,
                    lambda,
                    left,
                    right,
                } => SplitNode::Split {
                    point,
                    lambda,
                    left: Box::new(go(*left)),
                    right: Box::new(go(*right)),
                },
            }
        }
        SplittingTree::new(go(n))
    }
}

impl From<SplittingTree> for NodeJson {
    fn from(t: SplittingTree) -> Self {
        fn go(n: &SplitNode) -> NodeJson {
            match n {
                SplitNode::Leaf(p) => NodeJson::Leaf { leaf: p.clone() },
                SplitNode::Split {
                    point,
                    lambda,
                    left,
                    right,
                } => NodeJson::Split {
                    point: point.clone(),
                    lambda: lambda.clone(),
                    left: Box::new(go(left)),
                    right: Box::new(go(right)),
                },
            }
        }
        go(&t.root)
    }
}

/// Which invariant a node violates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TreeViolationKind {
    LambdaOutOfRange,
    BarycenterMismatch,
    RankOneViolation,
}

#[derive(Clone, Debug)]
pub struct TreeViolation {
    /// Path from the root, `L`/`R` per branch.
    pub path: String,
    pub kind: TreeViolationKind,
    /// Largest offending magnitude: barycenter residual or determinant.
    pub residual: Scalar,
}

impl std::fmt::Display for TreeViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{:?} at `{}` (residual {})",
            self.kind,
            if self.path.is_empty() { "root" } else { &self.path },
            self.residual
        )
    }
}

#[derive(Clone, Debug)]
pub enum ValidationOutcome {
    /// The tree is a valid prelaminate certificate of the given order.
    Valid { order: usize },
    Invalid(TreeViolation),
}

impl ValidationOutcome {
    pub fn is_valid(&self) -> bool {
        matches!(self, ValidationOutcome::Valid { .. })
    }

    pub fn expect_valid(&self) -> usize {
        match self {
            ValidationOutcome::Valid { order } => *order,
            ValidationOutcome::Invalid(v) => panic!("invalid splitting tree: {v}"),
        }
    }
}

fn validate_node(node: &SplitNode, path: &mut String) -> ValidationOutcome {
    match node {
        SplitNode::Leaf(_) => ValidationOutcome::Valid { order: 0 },
        SplitNode::Split {
            point,
            lambda,
            left,
            right,
        } => {
            if !(lambda.is_positive() && lambda < &Scalar::one()) {
                return ValidationOutcome::Invalid(TreeViolation {
                    path: path.clone(),
                    kind: TreeViolationKind::LambdaOutOfRange,
                    residual: lambda.clone(),
                });
            }
            let combo = lerp(left.point(), right.point(), lambda);
            let residual = (&combo - point).max_abs_entry();
            if !mat2_close(&combo, point) {
                return ValidationOutcome::Invalid(TreeViolation {
                    path: path.clone(),
                    kind: TreeViolationKind::BarycenterMismatch,
                    residual,
                });
            }
            let dir = left.point() - right.point();
            if !is_rank_one(&dir) {
                return ValidationOutcome::Invalid(TreeViolation {
                    path: path.clone(),
                    kind: TreeViolationKind::RankOneViolation,
                    residual: det(&dir),
                });
            }
            path.push('L');
            let l = validate_node(left, path);
            path.pop();
            let ValidationOutcome::Valid { order: lo } = l else {
                return l;
            };
            path.push('R');
            let r = validate_node(right, path);
            path.pop();
            let ValidationOutcome::Valid { order: ro } = r else {
                return r;
            };
            ValidationOutcome::Valid { order: 1 + lo + ro }
        }
    }
}

/// Flattens a validated tree to its leaf measure (path-weight products,
/// duplicates merged). The barycenter of the result equals the root point.
pub fn flatten_tree(tree: &SplittingTree) -> Result<AtomicMeasure, MeasureError> {
    match tree.validate() {
        ValidationOutcome::Valid { .. } => {}
        ValidationOutcome::Invalid(v) => return Err(MeasureError::InvalidTree(v)),
    }
    let mut atoms = Vec::new();
    collect_leaves(&tree.root, Scalar::one(), &mut atoms);
    AtomicMeasure::new(atoms)
}

fn collect_leaves(node: &SplitNode, weight: Scalar, out: &mut Vec<(Mat2, Scalar)>) {
    match node {
        SplitNode::Leaf(p) => out.push((p.clone(), weight)),
        SplitNode::Split {
            lambda, left, right, ..
        } => {
            collect_leaves(left, &weight * lambda, out);
            collect_leaves(right, &weight * &(Scalar::one() - lambda), out);
        }
    }
}

/// A convex combination of splitting trees with a common barycenter.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeasureForest {
    pub components: Vec<ForestComponent>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ForestComponent {
    pub weight: Scalar,
    pub tree: SplittingTree,
}

impl MeasureForest {
    pub fn new(components: Vec<(Scalar, SplittingTree)>) -> Self {
        MeasureForest {
            components: components
                .into_iter()
                .map(|(weight, tree)| ForestComponent { weight, tree })
                .collect(),
        }
    }

    pub fn single(tree: SplittingTree) -> Self {
        MeasureForest::new(vec![(Scalar::one(), tree)])
    }

    pub fn barycenter(&self) -> Option<&Mat2> {
        self.components.first().map(|c| c.tree.barycenter())
    }

    /// Validates component weights, the shared barycenter, and every tree.
    pub fn validate(&self) -> ValidationOutcome {
        if self.components.is_empty() {
            return ValidationOutcome::Invalid(TreeViolation {
                path: String::new(),
                kind: TreeViolationKind::BarycenterMismatch,
                residual: Scalar::zero(),
            });
        }
        let total = self
            .components
            .iter()
            .fold(Scalar::zero(), |acc, c| acc + &c.weight);
        if self.components.iter().any(|c| c.weight.is_negative())
            || !total.approx_eq(&Scalar::one())
        {
            return ValidationOutcome::Invalid(TreeViolation {
                path: String::new(),
                kind: TreeViolationKind::LambdaOutOfRange,
                residual: total,
            });
        }
        let root = self.components[0].tree.barycenter();
        let mut order = 0;
        for (i, c) in self.components.iter().enumerate() {
            if !mat2_close(c.tree.barycenter(), root) {
                return ValidationOutcome::Invalid(TreeViolation {
                    path: format!("component {i}"),
                    kind: TreeViolationKind::BarycenterMismatch,
                    residual: (c.tree.barycenter() - root).max_abs_entry(),
                });
            }
            match c.tree.validate() {
                ValidationOutcome::Valid { order: o } => order += o,
                ValidationOutcome::Invalid(mut v) => {
                    v.path = format!("component {i}: {}", v.path);
                    return ValidationOutcome::Invalid(v);
                }
            }
        }
        ValidationOutcome::Valid { order }
    }
}

/// Flattens a forest to the convex combination of its flattened trees.
pub fn flatten_forest(forest: &MeasureForest) -> Result<AtomicMeasure, MeasureError> {
    let mut atoms = Vec::new();
    for c in &forest.components {
        if c.weight.is_zero() {
            continue;
        }
        let m = flatten_tree(&c.tree)?;
        for (p, w) in m.atoms() {
            atoms.push((p.clone(), w * &c.weight));
        }
    }
    AtomicMeasure::new(atoms)
}

// --- Jensen checking ---------------------------------------------------------

/// Margin report of `f` along a splitting tree. At every split the margin is
/// `lambda f(L) + (1-lambda) f(R) - f(point)`; for rank-one convex `f` all
/// node margins are nonnegative, with exact zero for the null Lagrangians
/// `+/- det`.
#[derive(Clone, Debug)]
pub struct JensenReport {
    pub node_margins: Vec<(String, Scalar)>,
    /// `sum_leaves w f(X) - f(root)`.
    pub global_margin: Scalar,
    /// Paths of nodes whose margin is negative beyond tolerance.
    pub violations: Vec<String>,
}

impl JensenReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn min_node_margin(&self) -> Option<&Scalar> {
        self.node_margins
            .iter()
            .map(|(_, m)| m)
            .min_by(|a, b| scalar_cmp(a, b))
    }
}

/// Per-node violation threshold: exact margins must be `>= 0`; float margins
/// tolerate `-1e-7 (1 + |f(point)|)` of arithmetic noise.
fn margin_is_violation(margin: &Scalar, f_point: &Scalar) -> bool {
    if margin.is_exact() {
        margin.is_negative()
    } else {
        margin.to_f64() < -1e-7 * (1.0 + f_point.to_f64().abs())
    }
}

pub fn jensen_check(tree: &SplittingTree, f: &dyn Fn(&Mat2) -> Scalar) -> JensenReport {
    let mut node_margins = Vec::new();
    let mut violations = Vec::new();
    let mut path = String::new();
    walk_jensen(&tree.root, f, &mut path, &mut node_margins, &mut violations);
    let mut leaves = Vec::new();
    collect_leaves(&tree.root, Scalar::one(), &mut leaves);
    let expectation = leaves
        .iter()
        .fold(Scalar::zero(), |acc, (p, w)| acc + &(w * &f(p)));
    let global_margin = expectation - f(tree.barycenter());
    JensenReport {
        node_margins,
        global_margin,
        violations,
    }
}

fn walk_jensen(
    node: &SplitNode,
    f: &dyn Fn(&Mat2) -> Scalar,
    path: &mut String,
    margins: &mut Vec<(String, Scalar)>,
    violations: &mut Vec<String>,
) {
    if let SplitNode::Split {
        point,
        lambda,
        left,
        right,
    } = node
    {
        let f_point = f(point);
        let margin =
            lambda * &f(left.point()) + (Scalar::one() - lambda) * f(right.point()) - &f_point;
        if margin_is_violation(&margin, &f_point) {
            violations.push(path.clone());
        }
        margins.push((path.clone(), margin));
        path.push('L');
        walk_jensen(left, f, path, margins, violations);
        path.pop();
        path.push('R');
        walk_jensen(right, f, path, margins, violations);
        path.pop();
    }
}

// --- moment constraints -------------------------------------------------------

/// Residuals of the two moment constraints against a declared barycenter:
/// the first-moment residual `|sum w X - B|` (max-abs entry norm) and the
/// determinant residual `|sum w det X - det B|`. Both vanish exactly for
/// flattened laminate certificates with the correct barycenter.
pub fn pc_constraints_check(m: &AtomicMeasure, declared: &Mat2) -> (Scalar, Scalar) {
    let first = (&barycenter(m) - declared).max_abs_entry();
    let det_moment = m
        .atoms
        .iter()
        .fold(Scalar::zero(), |acc, (p, w)| acc + &(w * &det(p)));
    let second = (det_moment - det(declared)).abs();
    (first, second)
}

// --- symmetric measures ---------------------------------------------------------

/// Decides whether `m` matches the two-orbit symmetric pattern on the
/// frame's cube: weight `alpha` on the even sign class, `beta` on the odd
/// class, with `alpha + beta = 1/4`. Returns the pattern when it matches.
/// Vertices that coincide (degenerate frames) are handled by comparing
/// merged expected masses.
pub fn symmetric_pattern(
    m: &AtomicMeasure,
    frame: &CubeFrame,
) -> Result<Option<(Scalar, Scalar)>, MeasureError> {
    let vertices = frame.vertices();
    for (p, _) in m.atoms() {
        if !vertices.iter().any(|(_, v)| mat2_close(v, p)) {
            return Err(MeasureError::SupportOutsideCube(p.clone()));
        }
    }

    // Group coincident vertices, counting even/odd class multiplicities.
    let mut groups: Vec<(Mat2, i64, i64)> = Vec::new();
    for (eps, v) in &vertices {
        let even = eps.iter().product::<i8>() > 0;
        if let Some((_, ke, ko)) = groups.iter_mut().find(|(q, _, _)| mat2_close(q, v)) {
            *ke += i64::from(even);
            *ko += i64::from(!even);
        } else {
            groups.push((v.clone(), i64::from(even), i64::from(!even)));
        }
    }

    // The pattern measure is alpha * (even counts) + beta * (odd counts)
    // with beta = 1/4 - alpha; solve for alpha from the first group that
    // pins it down, then verify every group.
    let quarter = Scalar::ratio(1, 4);
    let alpha = groups
        .iter()
        .find(|(_, ke, ko)| ke != ko)
        .map(|(v, ke, ko)| {
            let w = m.weight_at(v);
            let ko_s = Scalar::from_int(*ko);
            (w - &ko_s * &quarter) / Scalar::from_int(ke - ko)
        })
        .unwrap_or_else(|| Scalar::ratio(1, 8));
    let beta = &quarter - &alpha;
    if alpha.is_negative() || beta.is_negative() {
        return Ok(None);
    }
    for (v, ke, ko) in &groups {
        let expected = Scalar::from_int(*ke) * &alpha + Scalar::from_int(*ko) * &beta;
        if !m.weight_at(v).approx_eq(&expected) {
            return Ok(None);
        }
    }
    Ok(Some((alpha, beta)))
}

/// True iff the measure is symmetric on the frame's cube.
pub fn is_symmetric(m: &AtomicMeasure, frame: &CubeFrame) -> Result<bool, MeasureError> {
    symmetric_pattern(m, frame).map(|p| p.is_some())
}

/// Checks the reduced symmetry criterion: if a barycenter-zero measure on a
/// cube with positive coefficients has equal weights at `-X1`, `-X2`, `-X3`,
/// the full symmetric pattern must follow; this verifies it and returns
/// `(alpha, beta)`.
pub fn symmetric_from_partial(
    m: &AtomicMeasure,
    frame: &CubeFrame,
) -> Result<(Scalar, Scalar), MeasureError> {
    let w1 = m.weight_at(&frame.vertex([1, -1, -1]));
    let w2 = m.weight_at(&frame.vertex([-1, 1, -1]));
    let w3 = m.weight_at(&frame.vertex([-1, -1, 1]));
    if !(w1.approx_eq(&w2) && w2.approx_eq(&w3)) {
        return Err(MeasureError::HypothesisFailed(w1, w2, w3));
    }
    match symmetric_pattern(m, frame)? {
        Some(pair) => Ok(pair),
        None => Err(MeasureError::PatternViolated),
    }
}
