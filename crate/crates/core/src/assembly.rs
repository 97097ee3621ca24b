//! Global sparse systems for the Crouzeix–Raviart method, its condensed variant whose
//! solution reconstructs the mixed solution, and the Raviart–Thomas saddle-point system.
//!
//! CR unknowns are values at edge midpoints with local basis `psi_k = 1 - 2 lambda_k`
//! (local edge `k` opposite vertex `k`). RT0 unknowns are normal fluxes `p . nu_E`
//! followed by one scalar per triangle.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geom::{self, Mat2, Point, Vec2};
use crate::mesh::Triangulation;
use crate::problem::{CoefficientField, ElementCoefficients, PiecewiseData};
use crate::quadrature::{EDGE_MIDPOINT, SEVEN_POINT};
use crate::sparse::{CscMatrix, TripletMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    Ncfem,
    ModifiedNcfem,
    MixedDirect,
}

/// An assembled system. `dof_map[i]` is the unknown of full dof `i` (edges, then
/// triangles for the mixed system), `None` for eliminated Dirichlet dofs whose values
/// are listed in `dirichlet_values`.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub kind: SystemKind,
    pub matrix: CscMatrix,
    pub rhs: Vec<f64>,
    pub dof_map: Vec<Option<usize>>,
    pub dirichlet_values: Vec<(usize, f64)>,
    /// Unknowns eliminated together as a 2x2 block on their off-diagonal entries.
    pub pivot_pairs: Vec<(usize, usize)>,
    boundary_applied: bool,
}

impl SparseSystem {
    /// A square system without eliminated dofs.
    pub fn new(kind: SystemKind, matrix: CscMatrix, rhs: Vec<f64>) -> Self {
        let n = rhs.len();
        Self {
            kind,
            matrix,
            rhs,
            dof_map: (0..n).map(Some).collect(),
            dirichlet_values: Vec::new(),
            pivot_pairs: Vec::new(),
            boundary_applied: true,
        }
    }

    pub fn n_unknowns(&self) -> usize {
        self.rhs.len()
    }

    /// Full dof vector from a solution of the reduced system.
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.dof_map.len()];
        for (i, m) in self.dof_map.iter().enumerate() {
            if let Some(k) = m {
                full[i] = x[*k];
            }
        }
        for &(i, v) in &self.dirichlet_values {
            full[i] = v;
        }
        full
    }
}

/// Coefficients for the plain CR system: either the elementwise constants (one-point
/// quadrature) or the fields themselves, integrated with a degree-5 rule.
#[derive(Clone, Copy)]
pub enum NcCoefficients<'a> {
    Projected(&'a PiecewiseData),
    Field(&'a dyn CoefficientField),
}

/// Edge-midpoint values of a CR function.
#[derive(Debug, Clone, PartialEq)]
pub struct CrSolution {
    pub values: Vec<f64>,
}

impl CrSolution {
    pub fn local(&self, mesh: &Triangulation, t: usize) -> [f64; 3] {
        mesh.triangle_edges(t).map(|e| self.values[e])
    }

    pub fn gradient(&self, mesh: &Triangulation, t: usize) -> Vec2 {
        let g = cr_gradients(&mesh.corners(t));
        let u = self.local(mesh, t);
        (0..3).fold([0.0, 0.0], |acc, k| geom::add(acc, geom::scale(u[k], g[k])))
    }

    /// Integral mean over `t`, the mean of the three edge values.
    pub fn mean(&self, mesh: &Triangulation, t: usize) -> f64 {
        let u = self.local(mesh, t);
        (u[0] + u[1] + u[2]) / 3.0
    }

    /// Values of the affine restriction to `t` at its corners.
    pub fn vertex_traces(&self, mesh: &Triangulation, t: usize) -> [f64; 3] {
        let u = self.local(mesh, t);
        let s = u[0] + u[1] + u[2];
        u.map(|uj| s - 2.0 * uj)
    }

    pub fn value_at(&self, mesh: &Triangulation, t: usize, x: Point) -> f64 {
        let c = mesh.centroid(t);
        self.mean(mesh, t) + geom::dot(self.gradient(mesh, t), geom::sub(x, c))
    }
}

/// Affine flux `c + d x` on one triangle.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AffineFlux {
    pub c: Vec2,
    pub d: f64,
}

impl AffineFlux {
    pub fn at(&self, x: Point) -> Vec2 {
        [self.c[0] + self.d * x[0], self.c[1] + self.d * x[1]]
    }

    pub fn divergence(&self) -> f64 {
        2.0 * self.d
    }
}

/// RT0 flux and piecewise constant scalar.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedSolution {
    pub flux: Vec<AffineFlux>,
    /// `p . nu_E` on every edge.
    pub normal_flux: Vec<f64>,
    pub scalar: Vec<f64>,
}

impl MixedSolution {
    /// Build the per-triangle affine fields from edge normal fluxes.
    pub fn from_normal_fluxes(mesh: &Triangulation, normal_flux: Vec<f64>, scalar: Vec<f64>) -> Self {
        let flux = (0..mesh.n_triangles())
            .map(|t| {
                let corners = mesh.corners(t);
                let s = rt_scales(mesh, t);
                let edges = mesh.triangle_edges(t);
                let mut f = AffineFlux::default();
                for k in 0..3 {
                    let w = normal_flux[edges[k]] * s[k];
                    f.d += w;
                    f.c = geom::sub(f.c, geom::scale(w, corners[k]));
                }
                f
            })
            .collect();
        Self { flux, normal_flux, scalar }
    }

    /// Build from per-triangle affine fields; normal fluxes are read off the first
    /// triangle adjacent to each edge.
    pub fn from_affine(mesh: &Triangulation, flux: Vec<AffineFlux>, scalar: Vec<f64>) -> Self {
        let normal_flux = (0..mesh.n_edges())
            .map(|e| {
                let (t, _) = mesh.edge_triangles(e);
                geom::dot(flux[t].at(mesh.edge_midpoint(e)), mesh.edge_normal(e))
            })
            .collect();
        Self { flux, normal_flux, scalar }
    }

    pub fn zero(mesh: &Triangulation) -> Self {
        Self {
            flux: vec![AffineFlux::default(); mesh.n_triangles()],
            normal_flux: vec![0.0; mesh.n_edges()],
            scalar: vec![0.0; mesh.n_triangles()],
        }
    }

    pub(crate) fn check_mesh(&self, mesh: &Triangulation) -> Result<()> {
        if self.flux.len() != mesh.n_triangles()
            || self.scalar.len() != mesh.n_triangles()
            || self.normal_flux.len() != mesh.n_edges()
        {
            return Err(Error::MeshMismatch);
        }
        Ok(())
    }
}

/// Gradients of the CR basis functions `1 - 2 lambda_k`.
pub fn cr_gradients(corners: &[Point; 3]) -> [Vec2; 3] {
    geom::barycentric_gradients(corners).map(|g| geom::scale(-2.0, g))
}

/// `sigma_k |E_k| / (2|T|)`: the RT0 basis function of local edge `k` on `t` is this
/// factor times `x - P_k`.
fn rt_scales(mesh: &Triangulation, t: usize) -> [f64; 3] {
    let area = mesh.area(t);
    let signs = mesh.edge_signs(t);
    let edges = mesh.triangle_edges(t);
    [0, 1, 2].map(|k| signs[k] * mesh.edge_length(edges[k]) / (2.0 * area))
}

/// Element matrix and load vector of the plain CR method with constant coefficients.
/// Entry `[i][j]` is the form with trial function `j` and test function `i`.
pub fn cr_element(corners: &[Point; 3], k: &ElementCoefficients) -> ([[f64; 3]; 3], [f64; 3]) {
    let area = 0.5 * geom::signed_area2(corners[0], corners[1], corners[2]);
    let g = cr_gradients(corners);
    let mut m = [[0.0; 3]; 3];
    let mut load = [0.0; 3];
    for i in 0..3 {
        let conv = area / 3.0 * geom::dot(k.b, g[i]);
        for j in 0..3 {
            m[i][j] = area * geom::dot(g[i], geom::mat_vec(&k.a, g[j])) + conv;
        }
        m[i][i] += k.gamma * area / 3.0;
        load[i] = k.f * area / 3.0;
    }
    (m, load)
}

/// Plain CR element integrated against variable coefficients with the seven-point rule.
fn cr_element_field(corners: &[Point; 3], field: &dyn CoefficientField) -> ([[f64; 3]; 3], [f64; 3]) {
    let g = cr_gradients(corners);
    let lam = |x: Point| {
        let area2 = geom::signed_area2(corners[0], corners[1], corners[2]);
        [
            geom::signed_area2(x, corners[1], corners[2]) / area2,
            geom::signed_area2(corners[0], x, corners[2]) / area2,
            geom::signed_area2(corners[0], corners[1], x) / area2,
        ]
    };
    let mut m = [[0.0; 3]; 3];
    let mut load = [0.0; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = SEVEN_POINT.integrate(corners, |x| {
                let psi_j = 1.0 - 2.0 * lam(x)[j];
                let psi_i = 1.0 - 2.0 * lam(x)[i];
                geom::dot(g[i], geom::mat_vec(&field.diffusion(x), g[j]))
                    + psi_j * geom::dot(field.convection(x), g[i])
                    + field.reaction(x) * psi_j * psi_i
            });
        }
        load[i] = SEVEN_POINT.integrate(corners, |x| field.source(x) * (1.0 - 2.0 * lam(x)[i]));
    }
    (m, load)
}

/// Element matrix and load vector of the condensed CR system in which the lower-order
/// terms act on the elementwise mean scaled by `kappa = 1 / (1 + gamma S(T) / (4|T|))`.
pub fn modified_element(
    corners: &[Point; 3],
    k: &ElementCoefficients,
    triangle: usize,
) -> Result<([[f64; 3]; 3], [f64; 3])> {
    let factor = k.condensation_factor();
    if factor.abs() < 1e-12 {
        return Err(Error::SingularLocalFactor { triangle, factor });
    }
    let kappa = 1.0 / factor;
    let area = 0.5 * geom::signed_area2(corners[0], corners[1], corners[2]);
    let g = cr_gradients(corners);
    let quarter_s_f = 0.25 * k.s_mean * k.f;
    let mut m = [[0.0; 3]; 3];
    let mut load = [0.0; 3];
    for i in 0..3 {
        let bg = geom::dot(k.b, g[i]);
        let lower = area * kappa / 3.0 * bg + k.gamma * kappa * area / 9.0;
        for j in 0..3 {
            m[i][j] = area * geom::dot(g[i], geom::mat_vec(&k.a, g[j])) + lower;
        }
        load[i] = k.f * area / 3.0 - area * kappa * quarter_s_f * bg - k.gamma * kappa * quarter_s_f * area / 3.0;
    }
    Ok((m, load))
}

/// RT0 element matrix `(A_h^{-1} phi_j, phi_i)_T` for the basis of local edges.
pub fn rt_element_mass(corners: &[Point; 3], scales: [f64; 3], a_inv: &Mat2) -> [[f64; 3]; 3] {
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in i..3 {
            let v = EDGE_MIDPOINT.integrate(corners, |x| {
                let pi = geom::scale(scales[i], geom::sub(x, corners[i]));
                let pj = geom::scale(scales[j], geom::sub(x, corners[j]));
                geom::dot(pi, geom::mat_vec(a_inv, pj))
            });
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    m
}

fn edge_system(kind: SystemKind, mesh: &Triangulation, t: TripletMatrix, rhs: Vec<f64>) -> SparseSystem {
    SparseSystem {
        kind,
        matrix: t.to_csc(),
        rhs,
        dof_map: (0..mesh.n_edges()).map(Some).collect(),
        dirichlet_values: Vec::new(),
        pivot_pairs: Vec::new(),
        boundary_applied: false,
    }
}

fn scatter(
    t: &mut TripletMatrix,
    rhs: &mut [f64],
    edges: [usize; 3],
    m: &[[f64; 3]; 3],
    load: &[f64; 3],
) {
    for i in 0..3 {
        for j in 0..3 {
            t.push(edges[i], edges[j], m[i][j]);
        }
        rhs[edges[i]] += load[i];
    }
}

fn assemble_ncfem_full(mesh: &Triangulation, coeffs: NcCoefficients<'_>) -> Result<SparseSystem> {
    let ne = mesh.n_edges();
    let mut t = TripletMatrix::with_capacity(ne, ne, 9 * mesh.n_triangles());
    let mut rhs = vec![0.0; ne];
    if let NcCoefficients::Projected(pw) = coeffs {
        pw.check_mesh(mesh)?;
    }
    for tri in 0..mesh.n_triangles() {
        let corners = mesh.corners(tri);
        let (m, load) = match coeffs {
            NcCoefficients::Projected(pw) => cr_element(&corners, pw.element(tri)),
            NcCoefficients::Field(f) => cr_element_field(&corners, f),
        };
        scatter(&mut t, &mut rhs, mesh.triangle_edges(tri), &m, &load);
    }
    Ok(edge_system(SystemKind::Ncfem, mesh, t, rhs))
}

/// Plain CR system with Dirichlet dofs eliminated.
pub fn assemble_ncfem(mesh: &Triangulation, coeffs: NcCoefficients<'_>) -> Result<SparseSystem> {
    let full = assemble_ncfem_full(mesh, coeffs)?;
    let values = match coeffs {
        NcCoefficients::Projected(pw) => pw.boundary_values.clone(),
        NcCoefficients::Field(f) => {
            let mut v = vec![0.0; mesh.n_edges()];
            for &e in mesh.boundary_edges() {
                v[e] = f.dirichlet(mesh.edge_midpoint(e));
            }
            v
        }
    };
    Ok(apply_dirichlet(full, &values, mesh))
}

/// Condensed CR system with Dirichlet dofs eliminated.
pub fn assemble_modified_ncfem(mesh: &Triangulation, pw: &PiecewiseData) -> Result<SparseSystem> {
    pw.check_mesh(mesh)?;
    let ne = mesh.n_edges();
    let mut t = TripletMatrix::with_capacity(ne, ne, 9 * mesh.n_triangles());
    let mut rhs = vec![0.0; ne];
    for tri in 0..mesh.n_triangles() {
        let (m, load) = modified_element(&mesh.corners(tri), pw.element(tri), tri)?;
        scatter(&mut t, &mut rhs, mesh.triangle_edges(tri), &m, &load);
    }
    let full = edge_system(SystemKind::ModifiedNcfem, mesh, t, rhs);
    Ok(apply_dirichlet(full, &pw.boundary_values, mesh))
}

/// RT0 x P0 saddle-point system; edge fluxes first, then one scalar per triangle.
pub fn assemble_mixed_direct(mesh: &Triangulation, pw: &PiecewiseData) -> Result<SparseSystem> {
    pw.check_mesh(mesh)?;
    let ne = mesh.n_edges();
    let n = mesh.ndof_mixed();
    let mut t = TripletMatrix::with_capacity(n, n, 16 * mesh.n_triangles());
    let mut rhs = vec![0.0; n];
    for tri in 0..mesh.n_triangles() {
        let k = pw.element(tri);
        let corners = mesh.corners(tri);
        let edges = mesh.triangle_edges(tri);
        let signs = mesh.edge_signs(tri);
        let scales = rt_scales(mesh, tri);
        let area = mesh.area(tri);
        let centroid = mesh.centroid(tri);
        let m = rt_element_mass(&corners, scales, &k.a_inv);
        let row_t = ne + tri;
        for i in 0..3 {
            for j in 0..3 {
                t.push(edges[i], edges[j], m[i][j]);
            }
            let flux_out = signs[i] * mesh.edge_length(edges[i]);
            // (u b*_h, phi_i)_T - (div phi_i, u)_T
            let mean_phi = geom::scale(scales[i] * area, geom::sub(centroid, corners[i]));
            t.push(edges[i], row_t, geom::dot(k.b_star, mean_phi) - flux_out);
            t.push(row_t, edges[i], flux_out);
        }
        t.push(row_t, row_t, k.gamma * area);
        rhs[row_t] = k.f * area;
    }
    let full = SparseSystem {
        kind: SystemKind::MixedDirect,
        matrix: t.to_csc(),
        rhs,
        dof_map: (0..n).map(Some).collect(),
        dirichlet_values: Vec::new(),
        pivot_pairs: edge_triangle_matching(mesh).into_iter().map(|(e, t)| (e, ne + t)).collect(),
        boundary_applied: false,
    };
    Ok(apply_dirichlet(full, &pw.boundary_values, mesh))
}

/// Assign every triangle a distinct edge: breadth-first search over the dual graph
/// from a triangle with a boundary edge, matching each triangle with the edge it was
/// reached through and the root with its boundary edge.
pub fn edge_triangle_matching(mesh: &Triangulation) -> Vec<(usize, usize)> {
    let nt = mesh.n_triangles();
    let mut seen = vec![false; nt];
    let mut pairs = Vec::with_capacity(nt);
    let mut queue = alloc::collections::VecDeque::new();
    for &root_edge in mesh.boundary_edges() {
        let (root, _) = mesh.edge_triangles(root_edge);
        if seen[root] {
            continue;
        }
        seen[root] = true;
        pairs.push((root_edge, root));
        queue.push_back(root);
        while let Some(t) = queue.pop_front() {
            for e in mesh.triangle_edges(t) {
                if let (a, Some(b)) = mesh.edge_triangles(e) {
                    let next = if a == t { b } else { a };
                    if !seen[next] {
                        seen[next] = true;
                        pairs.push((e, next));
                        queue.push_back(next);
                    }
                }
            }
        }
    }
    pairs
}

/// Fold Dirichlet values `u_D(mid E)` (indexed by edge) into a freshly assembled system.
///
/// CR systems drop the boundary rows and columns and move the couplings to the right
/// hand side. The mixed system keeps all unknowns and gains `-|E| u_D(mid E) sigma` in
/// the row of each boundary edge. A system that already carries its data is returned
/// unchanged.
pub fn apply_dirichlet(system: SparseSystem, boundary_values: &[f64], mesh: &Triangulation) -> SparseSystem {
    if system.boundary_applied {
        return system;
    }
    let mut system = system;
    system.boundary_applied = true;
    match system.kind {
        SystemKind::MixedDirect => {
            for &e in mesh.boundary_edges() {
                let (tri, _) = mesh.edge_triangles(e);
                let k = mesh.triangle_edges(tri).iter().position(|&x| x == e).unwrap_or(0);
                let sigma = mesh.edge_signs(tri)[k];
                system.rhs[e] -= mesh.edge_length(e) * boundary_values[e] * sigma;
            }
            system
        }
        SystemKind::Ncfem | SystemKind::ModifiedNcfem => {
            let n = system.dof_map.len();
            let mut fixed = vec![false; n];
            for &e in mesh.boundary_edges() {
                fixed[e] = true;
            }
            let mut dof_map = vec![None; n];
            let mut free = 0;
            for i in 0..n {
                if !fixed[i] {
                    dof_map[i] = Some(free);
                    free += 1;
                }
            }
            let mut rhs = vec![0.0; free];
            for i in 0..n {
                if let Some(k) = dof_map[i] {
                    rhs[k] = system.rhs[i];
                }
            }
            let mut t = TripletMatrix::with_capacity(free, free, system.matrix.nnz());
            for (i, j, v) in system.matrix.triplets() {
                match (dof_map[i], dof_map[j]) {
                    (Some(r), Some(c)) => t.push(r, c, v),
                    (Some(r), None) => rhs[r] -= v * boundary_values[j],
                    _ => {}
                }
            }
            let dirichlet_values = (0..n).filter(|&i| fixed[i]).map(|i| (i, boundary_values[i])).collect();
            SparseSystem {
                kind: system.kind,
                matrix: t.to_csc(),
                rhs,
                dof_map,
                dirichlet_values,
                pivot_pairs: Vec::new(),
                boundary_applied: true,
            }
        }
    }
}
