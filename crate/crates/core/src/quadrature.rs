//! Quadrature rules on triangles and edges.
//!
//! Triangle rules are given in barycentric coordinates with weights that sum to
//! one; the integral is `|T| * sum_i w_i f(x_i)`.

use crate::geom::{from_barycentric, midpoint, signed_area2, Point};

#[derive(Debug, Clone, Copy)]
pub struct TriangleRule {
    pub points: &'static [[f64; 3]],
    pub weights: &'static [f64],
    /// Polynomial degree integrated exactly.
    pub degree: usize,
}

pub const CENTROID: TriangleRule = TriangleRule {
    points: &[[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]],
    weights: &[1.0],
    degree: 1,
};

/// Edge-midpoint rule, exact for quadratics.
pub const EDGE_MIDPOINT: TriangleRule = TriangleRule {
    points: &[[0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]],
    weights: &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
    degree: 2,
};

const A1: f64 = 0.101_286_507_323_456_338_800_987_4;
const B1: f64 = 0.797_426_985_353_087_322_398_025_3;
const W1: f64 = 0.125_939_180_544_827_152_595_683_9;
const A2: f64 = 0.470_142_064_105_115_089_770_441_2;
const B2: f64 = 0.059_715_871_789_769_820_459_117_58;
const W2: f64 = 0.132_394_152_788_506_180_737_649_4;

/// Radon's seven-point rule, exact for polynomials of degree five.
pub const SEVEN_POINT: TriangleRule = TriangleRule {
    points: &[
        [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        [A1, A1, B1],
        [A1, B1, A1],
        [B1, A1, A1],
        [A2, A2, B2],
        [A2, B2, A2],
        [B2, A2, A2],
    ],
    weights: &[0.225, W1, W1, W1, W2, W2, W2],
    degree: 5,
};

/// Two-point Gauss–Legendre rule on `[0, 1]` (exact for cubics).
pub const GAUSS2: ([f64; 2], [f64; 2]) = (
    [0.211_324_865_405_187_117_745_425_6, 0.788_675_134_594_812_882_254_574_4],
    [0.5, 0.5],
);

impl TriangleRule {
    pub fn integrate(&self, corners: &[Point; 3], mut f: impl FnMut(Point) -> f64) -> f64 {
        let area = 0.5 * signed_area2(corners[0], corners[1], corners[2]);
        let mut s = 0.0;
        for (l, w) in self.points.iter().zip(self.weights) {
            s += w * f(from_barycentric(corners, *l));
        }
        area * s
    }
}

/// Integrate with the seven-point rule, refining dyadically toward `singular` when it
/// coincides with a corner of the triangle. Each level splits the triangle into its four
/// red children and recurses only into the child that still touches the singular corner.
pub fn integrate_graded(
    corners: &[Point; 3],
    singular: Option<Point>,
    depth: usize,
    f: &mut impl FnMut(Point) -> f64,
) -> f64 {
    let corner = singular.and_then(|s| {
        let h = crate::geom::dist(corners[0], corners[1]);
        corners.iter().position(|c| crate::geom::dist(*c, s) <= 1e-12 * h)
    });
    match corner {
        Some(k) if depth > 0 => {
            let [p0, p1, p2] = *corners;
            let m01 = midpoint(p0, p1);
            let m12 = midpoint(p1, p2);
            let m20 = midpoint(p2, p0);
            let children = [[p0, m01, m20], [m01, p1, m12], [m20, m12, p2], [m12, m20, m01]];
            let mut s = 0.0;
            for (i, child) in children.iter().enumerate() {
                if i == k {
                    s += integrate_graded(child, singular, depth - 1, f);
                } else {
                    s += SEVEN_POINT.integrate(child, &mut *f);
                }
            }
            s
        }
        _ => SEVEN_POINT.integrate(corners, f),
    }
}
