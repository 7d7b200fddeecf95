use super::linalg::{symmetric_eigen, Mat3, Vec3};
use super::GeometryError;
use crate::scalar::Real;

/// Relative eigenvalue gap below which a point set counts as collinear.
const RANK_TOLERANCE: f64 = 1e-12;

/// Least-squares plane `normal · x = offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneFit<T> {
    pub normal: Vec3<T>,
    pub offset: T,
    /// Root-mean-square orthogonal distance of the points to the plane.
    pub rms_residual: T,
}

impl<T: Real> PlaneFit<T> {
    pub fn distance(&self, p: &Vec3<T>) -> T {
        self.normal.dot(p) - self.offset
    }
}

pub fn centroid<T: Real>(points: &[Vec3<T>]) -> Vec3<T> {
    let n = T::from_usize(points.len()).expect("count fits");
    points.iter().fold(Vec3::zero(), |acc, p| acc + *p) * (T::one() / n)
}

/// Scatter matrix of the centred points.
pub fn scatter<T: Real>(points: &[Vec3<T>], center: &Vec3<T>) -> Mat3<T> {
    let mut m = [[T::zero(); 3]; 3];
    for p in points {
        let d = *p - *center;
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = m[i][j] + d[i] * d[j];
            }
        }
    }
    Mat3(m)
}

/// Fits the plane whose normal is the smallest principal direction of the
/// centred point set.
pub fn fit_plane<T: Real>(points: &[Vec3<T>]) -> Result<PlaneFit<T>, GeometryError> {
    if points.len() < 3 {
        return Err(GeometryError::DegeneratePoints(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    let c = centroid(points);
    let (values, vectors) = symmetric_eigen(&scatter(points, &c));
    if !(values[1] > T::tolerance(RANK_TOLERANCE) * values[2]) {
        return Err(GeometryError::DegeneratePoints(
            "points are collinear or coincident".into(),
        ));
    }
    let mut normal = Vec3::new(vectors.0[0][0], vectors.0[1][0], vectors.0[2][0])
        .normalized()
        .expect("eigenvectors are unit length");
    let mut offset = normal.dot(&c);
    // Sign convention: non-negative offset, ties broken by the largest component.
    let flip = if offset != T::zero() {
        offset < T::zero()
    } else {
        let big = (0..3)
            .max_by(|&i, &j| normal[i].abs().partial_cmp(&normal[j].abs()).unwrap())
            .unwrap();
        normal[big] < T::zero()
    };
    if flip {
        normal = -normal;
        offset = -offset;
    }
    let n = T::from_usize(points.len()).unwrap();
    let ss: T = points
        .iter()
        .map(|p| {
            let r = normal.dot(&(*p - c));
            r * r
        })
        .sum();
    Ok(PlaneFit {
        normal,
        offset,
        rms_residual: (ss / n).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_plane() {
        let pts = [
            Vec3::new(0.0f64, 0.0, 5.0),
            Vec3::new(1.0, 0.0, 5.0),
            Vec3::new(0.0, 1.0, 5.0),
            Vec3::new(1.0, 1.0, 5.0),
        ];
        let fit = fit_plane(&pts).unwrap();
        assert!((fit.normal - Vec3::new(0.0, 0.0, 1.0)).norm() <= 1e-12);
        assert!((fit.offset - 5.0).abs() <= 1e-12);
        assert!(fit.rms_residual <= 1e-12);
    }

    #[test]
    fn tilted_plane_and_off_plane_point() {
        // These five points all satisfy z = 4 + 2x.
        let mut pts = vec![
            Vec3::new(0.0, 0.0, 4.0),
            Vec3::new(1.0, 0.0, 6.0),
            Vec3::new(0.0, 1.0, 4.0),
            Vec3::new(1.0, 1.0, 6.0),
            Vec3::new(0.5, 0.5, 5.0),
        ];
        let fit = fit_plane(&pts).unwrap();
        assert!(fit.rms_residual <= 1e-12);
        let expected = Vec3::new(-2.0, 0.0, 1.0) * (1.0 / 5f64.sqrt());
        assert!((fit.normal - expected).norm() <= 1e-12);

        // Lifting the centre point off the plane; value from numpy eigh.
        pts[4] = Vec3::new(0.5, 0.5, 5.5);
        let fit = fit_plane(&pts).unwrap();
        assert!((fit.rms_residual - 0.08803443079484359).abs() <= 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        let two = [Vec3::new(0.0, 0.0, 1.0), Vec3::new(1.0, 0.0, 1.0)];
        assert!(matches!(
            fit_plane(&two),
            Err(GeometryError::DegeneratePoints(_))
        ));
        let line: Vec<_> = (0..5)
            .map(|i| Vec3::new(i as f64, 2.0 * i as f64, 1.0))
            .collect();
        assert!(matches!(
            fit_plane(&line),
            Err(GeometryError::DegeneratePoints(_))
        ));
        let same = [Vec3::new(1.0, 1.0, 1.0); 4];
        assert!(fit_plane(&same).is_err());
    }

    #[test]
    fn plane_through_origin_sign_convention() {
        let pts = [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ];
        let fit = fit_plane(&pts).unwrap();
        assert_eq!(fit.normal, Vec3::new(0.0, 0.0, 1.0));
    }
}
