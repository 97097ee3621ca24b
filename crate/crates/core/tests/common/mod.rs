//! Oracles shared by the integration tests.

#![allow(dead_code)]

use afem_core::prelude::*;
use proptest::prelude::*;

/// Gauss–Legendre nodes and weights on [0, 1].
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let (x, w): (&[f64], &[f64]) = match n {
        5 => (
            &[-0.906_179_845_938_664, -0.538_469_310_105_683, 0.0, 0.538_469_310_105_683, 0.906_179_845_938_664],
            &[0.236_926_885_056_189, 0.478_628_670_499_366, 0.568_888_888_888_889, 0.478_628_670_499_366, 0.236_926_885_056_189],
        ),
        _ => unimplemented!(),
    };
    x.iter().zip(w).map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect()
}

/// Collapsed tensor Gauss rule; with five points per direction it integrates
/// polynomials up to degree eight exactly.
pub fn integrate_duffy(t: &[Point; 3], f: impl Fn(Point) -> f64) -> f64 {
    let g = gauss_legendre(5);
    let [a, b, c] = *t;
    let jac = ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])).abs();
    let mut s = 0.0;
    for &(u, wu) in &g {
        for &(v, wv) in &g {
            let (xi, eta) = (u, v * (1.0 - u));
            let x = [
                a[0] + xi * (b[0] - a[0]) + eta * (c[0] - a[0]),
                a[1] + xi * (b[1] - a[1]) + eta * (c[1] - a[1]),
            ];
            s += wu * wv * (1.0 - u) * f(x);
        }
    }
    s * jac
}

pub fn spd(l1: f64, l2: f64, angle: f64) -> Mat2 {
    let (c, s) = (angle.cos(), angle.sin());
    [[l1 * c * c + l2 * s * s, (l1 - l2) * c * s], [(l1 - l2) * c * s, l1 * s * s + l2 * c * c]]
}

pub fn triangle() -> impl Strategy<Value = [Point; 3]> {
    prop::array::uniform3(prop::array::uniform2(-2.0f64..2.0)).prop_filter("well shaped", |t| {
        let area = 0.5 * ((t[1][0] - t[0][0]) * (t[2][1] - t[0][1]) - (t[2][0] - t[0][0]) * (t[1][1] - t[0][1]));
        let sides: f64 = (0..3)
            .map(|k| {
                let (p, q) = (t[k], t[(k + 1) % 3]);
                (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)
            })
            .sum();
        area > 0.05 * sides
    })
}

pub fn outward_normals_scaled(t: &[Point; 3]) -> [Vec2; 3] {
    // |E_k| nu_k for the edge opposite vertex k, oriented away from vertex k.
    let mut out = [[0.0; 2]; 3];
    for k in 0..3 {
        let (p, q) = (t[(k + 1) % 3], t[(k + 2) % 3]);
        let n = [q[1] - p[1], -(q[0] - p[0])];
        let to_vertex = [t[k][0] - p[0], t[k][1] - p[1]];
        let sign = if n[0] * to_vertex[0] + n[1] * to_vertex[1] > 0.0 { -1.0 } else { 1.0 };
        out[k] = [sign * n[0], sign * n[1]];
    }
    out
}

/// `int_T (x - c) . A^{-1} (x - c) dx` about the centroid `c`.
pub fn second_moment_oracle(t: &[Point; 3], a_inv: &Mat2) -> f64 {
    let c = [(t[0][0] + t[1][0] + t[2][0]) / 3.0, (t[0][1] + t[1][1] + t[2][1]) / 3.0];
    integrate_duffy(t, |x| {
        let d = [x[0] - c[0], x[1] - c[1]];
        d[0] * (a_inv[0][0] * d[0] + a_inv[0][1] * d[1]) + d[1] * (a_inv[1][0] * d[0] + a_inv[1][1] * d[1])
    })
}

/// Local CR matrix for constant `A`, `b`, `gamma` written with the gradients
/// `grad(1 - 2 lambda_k) = |E_k| nu_k / |T|`: stiffness, the `b`-term tested with the
/// mean of the basis functions, and the lumped (exact) reaction mass.
pub fn cr_matrix_oracle(t: &[Point; 3], a: &Mat2, b: Vec2, gamma: f64) -> [[f64; 3]; 3] {
    let area = 0.5 * ((t[1][0] - t[0][0]) * (t[2][1] - t[0][1]) - (t[2][0] - t[0][0]) * (t[1][1] - t[0][1]));
    let grads = outward_normals_scaled(t).map(|n| [n[0] / area, n[1] / area]);
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let ag = [a[0][0] * grads[j][0] + a[0][1] * grads[j][1], a[1][0] * grads[j][0] + a[1][1] * grads[j][1]];
            let stiff = area * (grads[i][0] * ag[0] + grads[i][1] * ag[1]);
            let conv = area / 3.0 * (b[0] * grads[i][0] + b[1] * grads[i][1]);
            let react = if i == j { gamma * area / 3.0 } else { 0.0 };
            m[i][j] = stiff + conv + react;
        }
    }
    m
}
