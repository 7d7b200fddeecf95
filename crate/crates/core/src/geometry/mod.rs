//! Pinhole projection, two-view triangulation, plane fitting and the
//! planar/volumetric scene test built on them.

mod camera;
pub mod io;
mod linalg;
mod plane;

pub use camera::{
    triangulate, CameraRig, Correspondence, CorrespondenceSet, PinholeCamera, Pixel,
    DEFAULT_PARALLEL_TOLERANCE, ROTATION_TOLERANCE,
};
pub use linalg::{symmetric_eigen, Mat3, Vec3};
pub use plane::{centroid, fit_plane, scatter, PlaneFit};

use thiserror::Error;

use crate::manifest::SceneLabel;
use crate::scalar::{lit, Real};

/// Default cut-off on the normalized planarity score.
pub const DEFAULT_PLANARITY_THRESHOLD: f64 = 0.005;
/// Fewest triangulated points `classify_scene` will fit a plane to.
pub const MIN_CLASSIFY_POINTS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("point is not in front of the camera")]
    BehindCamera,
    #[error("rays are parallel within tolerance")]
    DegenerateRays,
    #[error("degenerate point set: {0}")]
    DegeneratePoints(String),
    #[error("only {valid} of {total} correspondences triangulated, need {required}")]
    InsufficientGeometry {
        valid: usize,
        total: usize,
        required: usize,
    },
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("invalid rig: {0}")]
    InvalidRig(String),
    #[error("invalid correspondences: {0}")]
    InvalidCorrespondences(String),
    #[error("{0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanarityReport<T> {
    pub points_3d: Vec<Vec3<T>>,
    pub plane_normal: Vec3<T>,
    pub plane_offset: T,
    pub rms_residual: T,
    /// `rms_residual` divided by the mean depth in `cam_a`.
    pub normalized_score: T,
    pub label: SceneLabel,
    pub threshold_used: T,
}

pub fn label_for_score<T: Real>(score: T, threshold: T) -> SceneLabel {
    if score <= threshold {
        SceneLabel::Label2D
    } else {
        SceneLabel::Label3D
    }
}

/// Triangulates every pair and decides whether the rig is looking at a plane.
///
/// Pairs whose rays are near parallel, or whose point lands behind either
/// camera, are dropped before fitting.
pub fn classify_scene<T: Real>(
    correspondences: &CorrespondenceSet<T>,
    rig: &CameraRig<T>,
    threshold: T,
) -> Result<PlanarityReport<T>, GeometryError> {
    classify_scene_with(
        correspondences,
        rig,
        threshold,
        lit(DEFAULT_PARALLEL_TOLERANCE),
    )
}

pub fn classify_scene_with<T: Real>(
    correspondences: &CorrespondenceSet<T>,
    rig: &CameraRig<T>,
    threshold: T,
    parallel_tolerance: T,
) -> Result<PlanarityReport<T>, GeometryError> {
    let points: Vec<Vec3<T>> = correspondences
        .pairs
        .iter()
        .filter_map(|pair| triangulate(pair, rig, parallel_tolerance).ok())
        .filter(|p| {
            p.is_finite() && rig.cam_a.depth_of(p) > T::zero() && rig.cam_b.depth_of(p) > T::zero()
        })
        .collect();
    if points.len() < MIN_CLASSIFY_POINTS {
        return Err(GeometryError::InsufficientGeometry {
            valid: points.len(),
            total: correspondences.len(),
            required: MIN_CLASSIFY_POINTS,
        });
    }
    let fit = fit_plane(&points)?;
    let n = T::from_usize(points.len()).unwrap();
    let mean_depth = points.iter().map(|p| rig.cam_a.depth_of(p)).sum::<T>() / n;
    let normalized_score = fit.rms_residual / mean_depth;
    Ok(PlanarityReport {
        label: label_for_score(normalized_score, threshold),
        points_3d: points,
        plane_normal: fit.normal,
        plane_offset: fit.offset,
        rms_residual: fit.rms_residual,
        normalized_score,
        threshold_used: threshold,
    })
}
