//! Least-squares plane references that share no code with the library's
//! Jacobi-based fit.

#![allow(dead_code)]

pub type P = [f64; 3];

fn centered(points: &[P]) -> Vec<P> {
    let n = points.len() as f64;
    let mut c = [0.0; 3];
    for p in points {
        for k in 0..3 {
            c[k] += p[k] / n;
        }
    }
    points
        .iter()
        .map(|p| [p[0] - c[0], p[1] - c[1], p[2] - c[2]])
        .collect()
}

fn sum_sq(centered: &[P], n: P) -> f64 {
    centered
        .iter()
        .map(|d| (d[0] * n[0] + d[1] * n[1] + d[2] * n[2]).powi(2))
        .sum()
}

fn unit(v: P) -> P {
    let l = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / l, v[1] / l, v[2] / l]
}

/// Direct search over unit normals: a coarse sphere grid, then a compass
/// search in the tangent plane with step halving. Returns (normal, rms).
pub fn brute_force_plane(points: &[P]) -> (P, f64) {
    let d = centered(points);
    let mut best = [0.0, 0.0, 1.0];
    let mut best_f = f64::INFINITY;
    let steps = 90;
    for i in 0..=steps {
        let theta = std::f64::consts::PI * i as f64 / steps as f64;
        for j in 0..2 * steps {
            let phi = std::f64::consts::PI * j as f64 / steps as f64;
            let n = [
                theta.sin() * phi.cos(),
                theta.sin() * phi.sin(),
                theta.cos(),
            ];
            let f = sum_sq(&d, n);
            if f < best_f {
                best_f = f;
                best = n;
            }
        }
    }
    let mut step = 0.05;
    while step > 1e-14 {
        // tangent basis at the current normal
        let helper = if best[0].abs() < 0.9 {
            [1.0, 0.0, 0.0]
        } else {
            [0.0, 1.0, 0.0]
        };
        let u = unit(cross(best, helper));
        let v = cross(best, u);
        let mut improved = false;
        for (a, b) in [
            (1.0, 0.0),
            (-1.0, 0.0),
            (0.0, 1.0),
            (0.0, -1.0),
            (1.0, 1.0),
            (-1.0, -1.0),
            (1.0, -1.0),
            (-1.0, 1.0),
        ] {
            let cand = unit([
                best[0] + step * (a * u[0] + b * v[0]),
                best[1] + step * (a * u[1] + b * v[1]),
                best[2] + step * (a * u[2] + b * v[2]),
            ]);
            let f = sum_sq(&d, cand);
            if f < best_f {
                best_f = f;
                best = cand;
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (best, (best_f / points.len() as f64).sqrt())
}

pub fn cross(a: P, b: P) -> P {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Smallest eigenvalue of the centred scatter matrix by the trigonometric
/// cubic solution, converted to an rms residual.
pub fn closed_form_rms(points: &[P]) -> f64 {
    let d = centered(points);
    let mut m = [[0.0; 3]; 3];
    for p in &d {
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += p[i] * p[j];
            }
        }
    }
    let p1 = m[0][1].powi(2) + m[0][2].powi(2) + m[1][2].powi(2);
    let q = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
    let p2 = (m[0][0] - q).powi(2) + (m[1][1] - q).powi(2) + (m[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    if p == 0.0 {
        return (q.max(0.0) / points.len() as f64).sqrt();
    }
    let mut b = m;
    for i in 0..3 {
        b[i][i] -= q;
    }
    for row in b.iter_mut() {
        for v in row.iter_mut() {
            *v /= p;
        }
    }
    let det = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1])
        - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let r = (det / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let smallest = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    (smallest.max(0.0) / points.len() as f64).sqrt()
}
