// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod canon;
pub mod capture;
pub mod container;
pub mod crypto;
pub mod geometry;
pub mod manifest;
pub mod scalar;
pub mod scan;
pub mod sensing;
pub mod trust;

pub use scalar::Real;

/// Double-precision geometry, used by the simulation and CLI layers.
pub type Point3 = geometry::Vec3<f64>;
pub type Camera = geometry::PinholeCamera<f64>;
pub type Rig = geometry::CameraRig<f64>;
pub type Correspondences = geometry::CorrespondenceSet<f64>;
pub type Planarity = geometry::PlanarityReport<f64>;
