//! Initial meshes for the benchmark problems and tests.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{build_mesh, Triangulation};
use crate::geom::Point;

pub fn reference_triangle() -> Triangulation {
    build_mesh(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]], &[]).expect("valid mesh")
}

/// Unit square split along the diagonal (0,0)-(1,1).
pub fn unit_square() -> Triangulation {
    let v = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    build_mesh(v, vec![[0, 1, 2], [0, 2, 3]], &[]).expect("valid mesh")
}

/// `n x n` grid on the unit square, every cell split along its SW-NE diagonal.
pub fn square_grid(n: usize) -> Triangulation {
    let h = 1.0 / n as f64;
    let mut v = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            v.push([i as f64 * h, j as f64 * h]);
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut t = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (sw, se, ne, nw) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            t.push([sw, se, ne]);
            t.push([sw, ne, nw]);
        }
    }
    build_mesh(v, t, &[]).expect("valid mesh")
}

/// L-shaped domain `(-1,1)^2 \ [0,1]x[-1,0]` on the 0.5 grid. Each square is cut by
/// the diagonal through its corner nearest the origin: 21 vertices, 44 edges,
/// 24 triangles.
pub fn lshape() -> Triangulation {
    let coords = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let removed = |x: f64, y: f64| x > 0.0 && y < 0.0;
    let mut v: Vec<Point> = Vec::new();
    let mut index = [[usize::MAX; 5]; 5];
    for (j, &y) in coords.iter().enumerate() {
        for (i, &x) in coords.iter().enumerate() {
            if !removed(x, y) {
                index[j][i] = v.len();
                v.push([x, y]);
            }
        }
    }
    let mut t = Vec::new();
    for j in 0..4 {
        for i in 0..4 {
            let (x0, y0) = (coords[i], coords[j]);
            if x0 >= 0.0 && y0 < 0.0 {
                continue;
            }
            let sw = index[j][i];
            let se = index[j][i + 1];
            let ne = index[j + 1][i + 1];
            let nw = index[j + 1][i];
            let r2 = |p: usize| v[p][0] * v[p][0] + v[p][1] * v[p][1];
            let nearest = [sw, se, ne, nw]
                .into_iter()
                .min_by(|&a, &b| r2(a).total_cmp(&r2(b)))
                .unwrap();
            if nearest == sw || nearest == ne {
                t.push([sw, se, ne]);
                t.push([sw, ne, nw]);
            } else {
                t.push([sw, se, nw]);
                t.push([se, ne, nw]);
            }
        }
    }
    build_mesh(v, t, &[]).expect("valid mesh")
}

/// Slit disc: the regular 16-gon inscribed in the unit circle minus the slit
/// `[0,1] x {0}`. Vertices on the slit are duplicated; the first copy belongs to the
/// upper side (angle 0), the second to the lower side (angle 2 pi). One inner ring of
/// eight points at radius 1/2.
pub fn crack_disc() -> Triangulation {
    let mut v: Vec<Point> = vec![[0.0, 0.0]];
    let ring = |v: &mut Vec<Point>, r: f64, n: usize| -> Vec<usize> {
        (0..=n)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / n as f64;
                let p = if k == n { [r, 0.0] } else { [r * libm::cos(a), r * libm::sin(a)] };
                v.push(p);
                v.len() - 1
            })
            .collect()
    };
    let inner = ring(&mut v, 0.5, 8);
    let outer = ring(&mut v, 1.0, 16);
    let mut t = Vec::new();
    for k in 0..8 {
        t.push([0, inner[k], inner[k + 1]]);
    }
    for k in 0..8 {
        t.push([inner[k], outer[2 * k], outer[2 * k + 1]]);
        t.push([inner[k], outer[2 * k + 1], inner[k + 1]]);
        t.push([inner[k + 1], outer[2 * k + 1], outer[2 * k + 2]]);
    }
    build_mesh(v, t, &[]).expect("valid mesh")
}
