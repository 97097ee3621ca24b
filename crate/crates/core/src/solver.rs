//! Linear solves and the two routes to the mixed solution.

use alloc::vec::Vec;

use crate::assembly::{
    assemble_mixed_direct, assemble_modified_ncfem, assemble_ncfem, AffineFlux, CrSolution, MixedSolution,
    NcCoefficients, SparseSystem,
};
use crate::error::{Error, Result};
use crate::geom;
use crate::mesh::Triangulation;
use crate::problem::PiecewiseData;
use crate::quadrature::EDGE_MIDPOINT;
use crate::sparse::{equilibrate, minimum_degree_order, norm2, pivot_rows, LuFactors};

/// Tolerances of the direct solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Required relative residual `|Ax - b| / |b|`.
    pub residual_tol: f64,
    /// Pivots below this multiple of `max |A_ij|` count as zero.
    pub pivot_tol: f64,
    /// Threshold partial pivoting parameter in `(0, 1]`.
    pub pivot_threshold: f64,
    pub max_refinement_steps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { residual_tol: 1e-10, pivot_tol: 1e-14, pivot_threshold: 0.1, max_refinement_steps: 3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSolveReport {
    pub solution: Vec<f64>,
    /// `|Ax - b| / |b|`, or `|Ax - b|` when `b = 0`.
    pub residual: f64,
    pub factor_nnz: usize,
    /// Columns pivoted away from their preferred row.
    pub off_diagonal_pivots: usize,
    /// Smallest pivot of the equilibrated matrix.
    pub min_pivot: f64,
    pub refinement_steps: usize,
}

/// Solve the reduced system by sparse LU with iterative refinement. A residual that
/// stays above the tolerance is reported as a singular matrix.
pub fn solve_sparse(system: &SparseSystem, cfg: &SolverConfig) -> Result<LinearSolveReport> {
    let a = &system.matrix;
    let n = system.rhs.len();
    if a.n_rows() != n || a.n_cols() != n {
        return Err(Error::DimensionMismatch(alloc::format!(
            "{}x{} matrix with right-hand side of length {}",
            a.n_rows(),
            a.n_cols(),
            n
        )));
    }
    if n == 0 {
        return Ok(LinearSolveReport {
            solution: Vec::new(),
            residual: 0.0,
            factor_nnz: 0,
            off_diagonal_pivots: 0,
            min_pivot: f64::INFINITY,
            refinement_steps: 0,
        });
    }
    let d = equilibrate(a, 8);
    let mut scaled = a.clone();
    scaled.scale_symmetric(&d);
    let q = minimum_degree_order(&scaled, &system.pivot_pairs);
    let rows = pivot_rows(n, &system.pivot_pairs);
    let lu = LuFactors::factor(&scaled, &q, &rows, cfg.pivot_threshold, cfg.pivot_tol)?;
    // Solve (D A D) y = D r, then x = D y.
    let solve = |r: &[f64]| -> Vec<f64> {
        let rs: Vec<f64> = r.iter().zip(&d).map(|(r, d)| r * d).collect();
        lu.solve(&rs).iter().zip(&d).map(|(y, d)| y * d).collect()
    };
    let b = &system.rhs;
    let bnorm = norm2(b);
    let denom = if bnorm > 0.0 { bnorm } else { 1.0 };
    let mut x = solve(b);
    let residual_of = |x: &[f64]| -> Vec<f64> { a.mul_vec(x).iter().zip(b).map(|(ax, bi)| bi - ax).collect() };
    let mut r = residual_of(&x);
    let mut res = norm2(&r) / denom;
    let mut steps = 0;
    while res > 0.1 * cfg.residual_tol && steps < cfg.max_refinement_steps {
        let dx = solve(&r);
        let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
        let r_trial = residual_of(&trial);
        let res_trial = norm2(&r_trial) / denom;
        steps += 1;
        if !(res_trial < res) {
            break;
        }
        x = trial;
        r = r_trial;
        res = res_trial;
    }
    if !(res <= cfg.residual_tol) {
        return Err(Error::SingularMatrix { step: n, pivot: res });
    }
    Ok(LinearSolveReport {
        solution: x,
        residual: res,
        factor_nnz: lu.nnz(),
        off_diagonal_pivots: lu.off_diagonal_pivots(),
        min_pivot: lu.min_pivot(),
        refinement_steps: steps,
    })
}

/// Plain CR solution with coefficients projected onto piecewise constants.
pub fn solve_ncfem(mesh: &Triangulation, pw: &PiecewiseData, cfg: &SolverConfig) -> Result<CrSolution> {
    let sys = assemble_ncfem(mesh, NcCoefficients::Projected(pw))?;
    let rep = solve_sparse(&sys, cfg)?;
    Ok(CrSolution { values: sys.expand(&rep.solution) })
}

/// Saddle-point solve for the RT0 flux and P0 scalar.
pub fn solve_mixed_direct(mesh: &Triangulation, pw: &PiecewiseData, cfg: &SolverConfig) -> Result<MixedSolution> {
    let sys = assemble_mixed_direct(mesh, pw)?;
    let rep = solve_sparse(&sys, cfg)?;
    let mut x = sys.expand(&rep.solution);
    let scalar = x.split_off(mesh.n_edges());
    Ok(MixedSolution::from_normal_fluxes(mesh, x, scalar))
}

/// Mixed solution reconstructed elementwise from the condensed CR solution. Returns
/// the mixed solution and the CR solution it was built from.
pub fn solve_mixed_via_equivalence(
    mesh: &Triangulation,
    pw: &PiecewiseData,
    cfg: &SolverConfig,
) -> Result<(MixedSolution, CrSolution)> {
    let sys = assemble_modified_ncfem(mesh, pw)?;
    let rep = solve_sparse(&sys, cfg)?;
    let cr = CrSolution { values: sys.expand(&rep.solution) };
    Ok((reconstruct_mixed(mesh, pw, &cr)?, cr))
}

/// With `s = S(T) / |T|`:
/// `u_M = (mean u_CR + s f_h / 4) / (1 + gamma_h s / 4)` and
/// `p_M = -(A_h grad u_CR + u_M b_h) + (f_h - gamma_h u_M)(x - mid T) / 2`.
pub fn reconstruct_mixed(mesh: &Triangulation, pw: &PiecewiseData, cr: &CrSolution) -> Result<MixedSolution> {
    let nt = mesh.n_triangles();
    let mut flux = Vec::with_capacity(nt);
    let mut scalar = Vec::with_capacity(nt);
    for t in 0..nt {
        let k = pw.element(t);
        let factor = k.condensation_factor();
        if factor.abs() < 1e-12 {
            return Err(Error::SingularLocalFactor { triangle: t, factor });
        }
        let u = (cr.mean(mesh, t) + 0.25 * k.s_mean * k.f) / factor;
        let g = geom::mat_vec(&k.a, cr.gradient(mesh, t));
        let d = 0.5 * (k.f - k.gamma * u);
        let p_mid = [-(g[0] + u * k.b[0]), -(g[1] + u * k.b[1])];
        let c = geom::sub(p_mid, geom::scale(d, mesh.centroid(t)));
        flux.push(AffineFlux { c, d });
        scalar.push(u);
    }
    Ok(MixedSolution::from_affine(mesh, flux, scalar))
}

/// Relative L2 discrepancies `(|p1 - p2| / |p1|, |u1 - u2| / |u1|)`; a vanishing
/// reference norm falls back to the absolute discrepancy.
pub fn equivalence_residual(
    mesh: &Triangulation,
    direct: &MixedSolution,
    recon: &MixedSolution,
) -> Result<(f64, f64)> {
    direct.check_mesh(mesh)?;
    recon.check_mesh(mesh)?;
    let (mut dp, mut np, mut du, mut nu) = (0.0, 0.0, 0.0, 0.0);
    for t in 0..mesh.n_triangles() {
        let corners = mesh.corners(t);
        let (a, b) = (direct.flux[t], recon.flux[t]);
        dp += EDGE_MIDPOINT.integrate(&corners, |x| {
            let d = geom::sub(a.at(x), b.at(x));
            geom::dot(d, d)
        });
        np += EDGE_MIDPOINT.integrate(&corners, |x| geom::dot(a.at(x), a.at(x)));
        let area = mesh.area(t);
        let diff = direct.scalar[t] - recon.scalar[t];
        du += area * diff * diff;
        nu += area * direct.scalar[t] * direct.scalar[t];
    }
    let rel = |d: f64, n: f64| if n > 0.0 { libm::sqrt(d / n) } else { libm::sqrt(d) };
    Ok((rel(dp, np), rel(du, nu)))
}
