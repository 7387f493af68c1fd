//! Subspace designs and large sets of subspace designs over GF(2).

pub mod design;
pub mod error;
pub mod gf2;
pub mod grassmann;
pub mod group;
pub mod join;
pub mod km;
pub mod paper_data;
pub mod planner;

pub use design::{Design, LargeSet, LargeSetManifest, LargeSetReport};
pub use error::{Error, ErrorClass, Result};
pub use gf2::{BitMatrix, BitVec};
pub use grassmann::{
    count_subspaces, enumerate_grassmannian, gaussian_binomial, GrassmannIndex, Grassmannian,
    QuotientFrame, Subspace,
};
pub use group::{Group, GroupElement, Orbit, OrbitPartition};
