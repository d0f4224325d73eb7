//! Exact construction and machine verification of laminates supported on
//! rank-one cubes of 2x2 matrices.
//!
//! Periodic sawtooth deformations of the torus induce probability measures on
//! the vertices of a rank-one cube; this crate computes those weights exactly,
//! builds explicit splitting-tree certificates showing that the symmetric
//! measures among them are laminates, and verifies the resulting Jensen
//! inequalities against a battery of rank-one convex test functions.
//!
//! Everything on the construction path runs in exact rational arithmetic, so
//! a certificate is a finite object that a third party can re-check with
//! decidable equality. See the `book/` directory for a guided tour.
//!
//! ```
//! use laminate::prelude::*;
//!
//! // The classical configuration: frequencies (1,0), (0,1), (1,1) with
//! // phases (0, 0, 1/4) put weight 1/16 on one vertex class of the cube
//! // and 3/16 on the other.
//! let d = PeriodicDeformation::new(vec![
//!     SawtoothMode::new(Vec2::from_ints(1, 0), [1, 0], Scalar::zero()),
//!     SawtoothMode::new(Vec2::from_ints(0, 1), [0, 1], Scalar::zero()),
//!     SawtoothMode::new(Vec2::from_ints(1, 1), [1, 1], Scalar::ratio(1, 4)),
//! ]).unwrap();
//! let w = exact_weights(&d).unwrap();
//! assert_eq!(w.weight(&[1, 1, 1]), Scalar::ratio(1, 16));
//! assert_eq!(w.weight(&[-1, -1, -1]), Scalar::ratio(3, 16));
//! ```

// Error types carry exact scalars for diagnostics; their size is immaterial
// at this call volume.
#![allow(clippy::result_large_err, clippy::large_enum_variant)]

pub mod cube;
pub mod hulls;
pub mod mat2;
pub mod measures;
pub mod periodic;
pub mod scalar;
pub mod verify;

mod simplex;

/// Convenience re-exports of the types and operations used by almost every
/// caller.
pub mod prelude {
    pub use crate::cube::{
        build_frame, case1_laminate, case2_laminate, degenerate_laminate, lemma_p,
        symmetric_laminate, symmetric_laminate_with_search, uniform_laminate, witness_origin,
        witness_origin_with_search, CaseTag, CubeFrame, LaminateCertificate,
    };
    pub use crate::hulls::{
        classify, hyperboloid_center, pairing, pc_membership, ray_surface_intersections,
        square_pc_check, surface_point, PcMembership, RankOneSquare, RuledSurfacePatch,
        SquareClass,
    };
    pub use crate::mat2::{cof, det, inner, is_rank_one, lerp, tensor, Mat2, Vec2};
    pub use crate::measures::{
        barycenter, flatten_forest, flatten_tree, jensen_check, pc_constraints_check,
        AtomicMeasure, MeasureForest, SplitNode, SplittingTree,
    };
    pub use crate::periodic::{
        correlation_integral, exact_weights, mc_weights, sawtooth, sawtooth_slope,
        support_points, PeriodicDeformation, SawtoothMode, SignPattern, SignPatternMeasure,
    };
    pub use crate::scalar::Scalar;
    pub use crate::verify::{battery, check_inequality, main_theorem_suite, roc_sampled, TestFunction};
}

// Every code block in the book is compiled and run with `cargo test`, which
// keeps the guide in sync with the library.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            mod $name {}
        };
    }

    chapter!(introduction, "../../../book/src/introduction.md");
    chapter!(scalars_and_matrices, "../../../book/src/scalars-and-matrices.md");
    chapter!(young_measures, "../../../book/src/young-measures.md");
    chapter!(splitting_trees, "../../../book/src/splitting-trees.md");
    chapter!(hulls, "../../../book/src/hulls.md");
    chapter!(cube_construction, "../../../book/src/cube-construction.md");
    chapter!(verification, "../../../book/src/verification.md");
    chapter!(cli, "../../../book/src/cli.md");
}
