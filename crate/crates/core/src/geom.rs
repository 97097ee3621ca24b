//! Small fixed-size vector and matrix helpers for planar geometry.

pub type Point = [f64; 2];
pub type Vec2 = [f64; 2];
/// Row-major 2x2 matrix.
pub type Mat2 = [[f64; 2]; 2];

pub const IDENTITY: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

#[inline]
pub fn sub(a: Point, b: Point) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn add(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn scale(s: f64, a: Vec2) -> Vec2 {
    [s * a[0], s * a[1]]
}

#[inline]
pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn cross(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn norm(a: Vec2) -> f64 {
    libm::hypot(a[0], a[1])
}

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

#[inline]
pub fn midpoint(a: Point, b: Point) -> Point {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

/// Rotation by +90 degrees.
#[inline]
pub fn perp(a: Vec2) -> Vec2 {
    [-a[1], a[0]]
}

#[inline]
pub fn mat_vec(m: &Mat2, v: Vec2) -> Vec2 {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

pub fn mat_sub(a: &Mat2, b: &Mat2) -> Mat2 {
    [[a[0][0] - b[0][0], a[0][1] - b[0][1]], [a[1][0] - b[1][0], a[1][1] - b[1][1]]]
}

pub fn det(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn inverse(m: &Mat2) -> Option<Mat2> {
    let d = det(m);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    Some([[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]])
}

/// Symmetric (to a relative 1e-12) with strictly positive eigenvalues.
pub fn is_spd(m: &Mat2) -> bool {
    let s = libm::fabs(m[0][0]) + libm::fabs(m[1][1]) + libm::fabs(m[0][1]);
    if !(s.is_finite() && s > 0.0) {
        return false;
    }
    if libm::fabs(m[0][1] - m[1][0]) > 1e-12 * s {
        return false;
    }
    m[0][0] > 0.0 && det(m) > 0.0
}

/// Twice the signed area of the triangle (a, b, c); positive when counterclockwise.
#[inline]
pub fn signed_area2(a: Point, b: Point, c: Point) -> f64 {
    cross(sub(b, a), sub(c, a))
}

/// Affine map from barycentric coordinates to the physical point.
#[inline]
pub fn from_barycentric(corners: &[Point; 3], l: [f64; 3]) -> Point {
    [
        l[0] * corners[0][0] + l[1] * corners[1][0] + l[2] * corners[2][0],
        l[0] * corners[0][1] + l[1] * corners[1][1] + l[2] * corners[2][1],
    ]
}

/// Gradients of the barycentric coordinates of a counterclockwise triangle.
pub fn barycentric_gradients(corners: &[Point; 3]) -> [Vec2; 3] {
    let area2 = signed_area2(corners[0], corners[1], corners[2]);
    let mut g = [[0.0; 2]; 3];
    for (k, gk) in g.iter_mut().enumerate() {
        let p1 = corners[(k + 1) % 3];
        let p2 = corners[(k + 2) % 3];
        *gk = [(p1[1] - p2[1]) / area2, (p2[0] - p1[0]) / area2];
    }
    g
}

/// Polar angle in `[0, 2 pi)` measured counterclockwise from the positive x-axis.
pub fn polar_angle(x: Point) -> f64 {
    let t = libm::atan2(x[1], x[0]);
    if t < 0.0 {
        t + 2.0 * core::f64::consts::PI
    } else {
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn barycentric_gradients_reference_triangle() {
        let g = barycentric_gradients(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(g, [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn spd_check() {
        assert!(is_spd(&IDENTITY));
        assert!(!is_spd(&[[1.0, 2.0], [2.0, 1.0]]));
        assert!(!is_spd(&[[1.0, 0.5], [0.0, 1.0]]));
        assert!(!is_spd(&[[-1.0, 0.0], [0.0, -1.0]]));
    }

    #[test]
    fn polar_angle_range() {
        assert_eq!(polar_angle([1.0, 0.0]), 0.0);
        assert!((polar_angle([0.0, -1.0]) - 1.5 * core::f64::consts::PI).abs() < 1e-15);
    }
}
