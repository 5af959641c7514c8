//! Packings and coverings of convex bodies by cylinders: construction,
//! verification and numerical checks of the associated volume inequalities.

// NaN must fail validation, so `!(x > 0.0)` is intended throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod body;
pub mod bounds;
pub mod cap_packing;
pub mod cylinder;
pub mod density;
pub mod error;
pub mod falconer;
pub mod frame;
pub mod generate;
pub mod hull;
pub mod instance;
pub mod multiplicity;
pub mod mvee;
mod par;
pub mod projection;
pub mod quad;
pub mod sampling;
pub mod slice;
pub mod special;

pub use body::{ConvexBody, Ellipsoid, Polytope};
pub use cylinder::{Cylinder, CylinderBase};
pub use error::{Error, Result};
pub use frame::{orthonormalize, Frame};
pub use sampling::Estimate;
