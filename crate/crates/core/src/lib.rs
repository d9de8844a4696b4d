//! Numerical laboratory for weak inverse mean curvature flow in hyperbolic space.
//!
//! * [`hypgeo`]: ball and geodesic-polar coordinates, distance, sphere inversions.
//! * [`starshape`]: axisymmetric radial graphs and their geometry.
//! * [`reflect`]: star-shapedness, gradient and comparison certificates.
//! * [`flows`]: parametric inverse mean curvature flow and mean curvature flow.
//! * [`weakflow`]: the elliptic-regularized level-set solver.
//! * [`funcs`]: Heintze-Karcher deficit, the functionals `Q` and `P`, Minkowski checks.

pub mod certificate;
pub mod error;
pub mod flows;
pub mod funcs;
pub mod hypgeo;
pub mod quadrature;
pub mod reflect;
pub mod starshape;
pub mod weakflow;

pub use error::{Error, Result};

// The guide's chapters run as doctests so its snippets cannot drift.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/coordinates.md")]
    mod coordinates {}
    #[doc = include_str!("../../../book/src/surfaces.md")]
    mod surfaces {}
    #[doc = include_str!("../../../book/src/certificates.md")]
    mod certificates {}
    #[doc = include_str!("../../../book/src/parametric-flows.md")]
    mod parametric_flows {}
    #[doc = include_str!("../../../book/src/weak-flow.md")]
    mod weak_flow {}
    #[doc = include_str!("../../../book/src/functionals.md")]
    mod functionals {}
}
