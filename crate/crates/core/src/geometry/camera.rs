use super::linalg::{Mat3, Vec3};
use super::GeometryError;
use crate::scalar::{lit, Real};

/// Tolerance for the rotation orthonormality check.
pub const ROTATION_TOLERANCE: f64 = 1e-9;
/// Rays closer to parallel than this (radians) do not triangulate.
pub const DEFAULT_PARALLEL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pixel<T> {
    pub u: T,
    pub v: T,
}

impl<T: Real> Pixel<T> {
    pub fn new(u: T, v: T) -> Self {
        Self { u, v }
    }
}

/// Pinhole camera without distortion. The pose maps world to camera
/// coordinates: `x_cam = rotation · x_world + translation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinholeCamera<T> {
    pub focal_px: T,
    pub principal_point: (T, T),
    pub rotation: Mat3<T>,
    pub translation: Vec3<T>,
}

impl<T: Real> PinholeCamera<T> {
    pub fn new(
        focal_px: T,
        principal_point: (T, T),
        rotation: Mat3<T>,
        translation: Vec3<T>,
    ) -> Result<Self, GeometryError> {
        if !(focal_px > T::zero() && focal_px.is_finite()) {
            return Err(GeometryError::InvalidCamera(format!(
                "focal length {focal_px} must be positive"
            )));
        }
        if !(principal_point.0.is_finite()
            && principal_point.1.is_finite()
            && translation.is_finite())
        {
            return Err(GeometryError::InvalidCamera(
                "non-finite intrinsics or translation".into(),
            ));
        }
        if !rotation.is_finite() || !rotation.is_rotation(T::tolerance(ROTATION_TOLERANCE)) {
            return Err(GeometryError::InvalidCamera(
                "rotation must be orthonormal with determinant +1".into(),
            ));
        }
        Ok(Self {
            focal_px,
            principal_point,
            rotation,
            translation,
        })
    }

    /// Camera with orientation `rotation` whose optical centre sits at `center`.
    pub fn at_position(
        focal_px: T,
        principal_point: (T, T),
        rotation: Mat3<T>,
        center: Vec3<T>,
    ) -> Result<Self, GeometryError> {
        let translation = -rotation.mul_vec(&center);
        Self::new(focal_px, principal_point, rotation, translation)
    }

    pub fn center(&self) -> Vec3<T> {
        -self.rotation.transpose().mul_vec(&self.translation)
    }

    pub fn to_camera(&self, p: &Vec3<T>) -> Vec3<T> {
        self.rotation.mul_vec(p) + self.translation
    }

    /// Depth of a world point along this camera's optical axis.
    pub fn depth_of(&self, p: &Vec3<T>) -> T {
        self.to_camera(p).z()
    }

    pub fn project(&self, p: &Vec3<T>) -> Result<Pixel<T>, GeometryError> {
        let c = self.to_camera(p);
        if !(c.z() > T::zero()) {
            return Err(GeometryError::BehindCamera);
        }
        Ok(Pixel {
            u: self.focal_px * c.x() / c.z() + self.principal_point.0,
            v: self.focal_px * c.y() / c.z() + self.principal_point.1,
        })
    }

    /// World-frame ray `(origin, unit direction)` through a pixel.
    pub fn back_project(&self, px: &Pixel<T>) -> (Vec3<T>, Vec3<T>) {
        let d_cam = Vec3::new(
            (px.u - self.principal_point.0) / self.focal_px,
            (px.v - self.principal_point.1) / self.focal_px,
            T::one(),
        );
        let d = self.rotation.transpose().mul_vec(&d_cam);
        (self.center(), d.normalized().expect("z component is one"))
    }
}

/// Pixel observations of one world point in both views.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Correspondence<T> {
    pub a: Pixel<T>,
    pub b: Pixel<T>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorrespondenceSet<T> {
    pub pairs: Vec<Correspondence<T>>,
}

impl<T: Real> CorrespondenceSet<T> {
    pub fn new(pairs: Vec<Correspondence<T>>) -> Result<Self, GeometryError> {
        if pairs.is_empty() {
            return Err(GeometryError::InvalidCorrespondences(
                "at least one pair is required".into(),
            ));
        }
        let finite = pairs.iter().all(|p| {
            p.a.u.is_finite() && p.a.v.is_finite() && p.b.u.is_finite() && p.b.v.is_finite()
        });
        if !finite {
            return Err(GeometryError::InvalidCorrespondences(
                "non-finite pixel coordinate".into(),
            ));
        }
        Ok(Self { pairs })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Two calibrated views with distinct optical centres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraRig<T> {
    pub cam_a: PinholeCamera<T>,
    pub cam_b: PinholeCamera<T>,
}

impl<T: Real> CameraRig<T> {
    pub fn new(cam_a: PinholeCamera<T>, cam_b: PinholeCamera<T>) -> Result<Self, GeometryError> {
        let baseline = (cam_a.center() - cam_b.center()).norm();
        if !(baseline > T::zero()) {
            return Err(GeometryError::InvalidRig(
                "cameras share an optical centre".into(),
            ));
        }
        Ok(Self { cam_a, cam_b })
    }

    /// Rectified pair: both cameras look down +z, `cam_b` sits `baseline`
    /// units along +x from `cam_a` at the origin.
    pub fn rectified(focal_px: T, baseline: T) -> Result<Self, GeometryError> {
        let pp = (T::zero(), T::zero());
        let cam_a = PinholeCamera::at_position(focal_px, pp, Mat3::identity(), Vec3::zero())?;
        let cam_b = PinholeCamera::at_position(
            focal_px,
            pp,
            Mat3::identity(),
            Vec3::new(baseline, T::zero(), T::zero()),
        )?;
        Self::new(cam_a, cam_b)
    }

    pub fn baseline(&self) -> T {
        (self.cam_a.center() - self.cam_b.center()).norm()
    }

    pub fn project(&self, p: &Vec3<T>) -> Result<Correspondence<T>, GeometryError> {
        Ok(Correspondence {
            a: self.cam_a.project(p)?,
            b: self.cam_b.project(p)?,
        })
    }
}

/// Midpoint of the shortest segment between the two back-projected rays.
pub fn triangulate<T: Real>(
    pair: &Correspondence<T>,
    rig: &CameraRig<T>,
    parallel_tolerance: T,
) -> Result<Vec3<T>, GeometryError> {
    let (o1, d1) = rig.cam_a.back_project(&pair.a);
    let (o2, d2) = rig.cam_b.back_project(&pair.b);
    // Directions are unit length, so |d1 × d2| is the sine of the ray angle.
    if d1.cross(&d2).norm() < parallel_tolerance {
        return Err(GeometryError::DegenerateRays);
    }
    let w0 = o1 - o2;
    let b = d1.dot(&d2);
    let d = d1.dot(&w0);
    let e = d2.dot(&w0);
    let denom = T::one() - b * b;
    let s = (b * e - d) / denom;
    let t = (e - b * d) / denom;
    let p1 = o1 + d1 * s;
    let p2 = o2 + d2 * t;
    Ok((p1 + p2) * lit::<T>(0.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_rig() -> CameraRig<f64> {
        CameraRig::rectified(1.0, 1.0).unwrap()
    }

    #[test]
    fn projection_examples() {
        let cam = PinholeCamera::new(1.0, (0.0, 0.0), Mat3::identity(), Vec3::zero()).unwrap();
        assert_eq!(
            cam.project(&Vec3::new(0.0, 0.0, 5.0)).unwrap(),
            Pixel::new(0.0, 0.0)
        );
        assert_eq!(
            cam.project(&Vec3::new(1.0, 0.0, 5.0)).unwrap(),
            Pixel::new(0.2, 0.0)
        );
        let moved =
            PinholeCamera::at_position(1.0, (0.0, 0.0), Mat3::identity(), Vec3::new(1.0, 0.0, 0.0))
                .unwrap();
        assert_eq!(
            moved.project(&Vec3::new(0.0, 0.0, 5.0)).unwrap(),
            Pixel::new(-0.2, 0.0)
        );
        assert_eq!(
            cam.project(&Vec3::new(0.0, 0.0, -1.0)),
            Err(GeometryError::BehindCamera)
        );
        assert_eq!(
            cam.project(&Vec3::new(0.0, 0.0, 0.0)),
            Err(GeometryError::BehindCamera)
        );
    }

    #[test]
    fn projection_in_f32() {
        let cam =
            PinholeCamera::<f32>::new(1.0, (0.0, 0.0), Mat3::identity(), Vec3::zero()).unwrap();
        let px = cam.project(&Vec3::new(1.0, 0.0, 5.0)).unwrap();
        assert!((px.u - 0.2).abs() < 1e-7);
    }

    #[test]
    fn camera_validation() {
        let mut r = Mat3::<f64>::identity();
        r.0[0][0] = 1.0 + 1e-6;
        assert!(PinholeCamera::new(1.0, (0.0, 0.0), r, Vec3::zero()).is_err());
        assert!(PinholeCamera::new(0.0, (0.0, 0.0), Mat3::identity(), Vec3::zero()).is_err());
        let cam = PinholeCamera::new(1.0, (0.0, 0.0), Mat3::identity(), Vec3::zero()).unwrap();
        assert!(matches!(
            CameraRig::new(cam, cam),
            Err(GeometryError::InvalidRig(_))
        ));
    }

    #[test]
    fn triangulation_examples() {
        let rig = unit_rig();
        let pair = Correspondence {
            a: Pixel::new(0.0, 0.0),
            b: Pixel::new(-0.2, 0.0),
        };
        let p = triangulate(&pair, &rig, 1e-6).unwrap();
        assert!((p - Vec3::new(0.0, 0.0, 5.0)).norm() <= 1e-9);

        let same = Correspondence {
            a: Pixel::new(0.0, 0.0),
            b: Pixel::new(0.0, 0.0),
        };
        assert_eq!(
            triangulate(&same, &rig, 1e-6),
            Err(GeometryError::DegenerateRays)
        );
    }

    #[test]
    fn projection_then_triangulation_recovers_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let rig = CameraRig::rectified(500.0, 1.0).unwrap();
        for _ in 0..1000 {
            let p = Vec3::new(
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(3.0..8.0),
            );
            let pair = rig.project(&p).unwrap();
            let q = triangulate(&pair, &rig, 1e-6).unwrap();
            assert!((p - q).norm() <= 1e-9);
        }
    }

    #[test]
    fn correspondence_set_validation() {
        assert!(CorrespondenceSet::<f64>::new(vec![]).is_err());
        let bad = Correspondence {
            a: Pixel::new(f64::NAN, 0.0),
            b: Pixel::new(0.0, 0.0),
        };
        assert!(CorrespondenceSet::new(vec![bad]).is_err());
    }
}
