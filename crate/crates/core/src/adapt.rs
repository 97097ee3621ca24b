//! A posteriori error estimators, nodal averaging, Dörfler marking and the adaptive
//! loop SOLVE, ESTIMATE, MARK, REFINE.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::assembly::{CrSolution, MixedSolution};
use crate::bench::{error_norms, ConvergenceHistory, LevelDiagnostics, LevelRecord, SingularEvent};
use crate::error::{Error, Result};
use crate::geom::{self, Point, Vec2};
use crate::mesh::{rgb_refine, uniform_red_refine, Triangulation};
use crate::problem::{project_p0, CoefficientField, PiecewiseData, ProblemInstance};
use crate::quadrature::{EDGE_MIDPOINT, GAUSS2, SEVEN_POINT};
use crate::solver::{equivalence_residual, solve_mixed_direct, solve_mixed_via_equivalence, SolverConfig};

/// One estimator contribution with its local norm on every triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorTerm {
    pub name: &'static str,
    pub local: Vec<f64>,
}

impl EstimatorTerm {
    /// Global norm `sqrt(sum_T local_T^2)`.
    pub fn norm(&self) -> f64 {
        libm::sqrt(self.local.iter().map(|x| x * x).sum())
    }
}

/// Estimator terms plus global diagnostics that do not enter marking.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorReport {
    pub terms: Vec<EstimatorTerm>,
    pub diagnostics: Vec<(&'static str, f64)>,
}

impl EstimatorReport {
    /// `eta = sqrt(sum_T eta_T^2)`.
    pub fn eta(&self) -> f64 {
        libm::sqrt(self.terms.iter().map(|t| t.local.iter().map(|x| x * x).sum::<f64>()).sum())
    }

    /// `eta_T^2`: the sum over terms of the squared local contributions.
    pub fn eta_sq_per_triangle(&self) -> Vec<f64> {
        let n = self.terms.first().map_or(0, |t| t.local.len());
        (0..n).map(|t| self.terms.iter().map(|term| term.local[t] * term.local[t]).sum()).collect()
    }

    pub fn term(&self, name: &str) -> Option<&EstimatorTerm> {
        self.terms.iter().find(|t| t.name == name)
    }

    pub fn diagnostic(&self, name: &str) -> Option<f64> {
        self.diagnostics.iter().find(|d| d.0 == name).map(|d| d.1)
    }
}

/// Nodal values of the averaged CR function: each vertex gets the mean of the traces
/// of the triangles around it.
pub fn average_cr(mesh: &Triangulation, u: &CrSolution) -> Vec<f64> {
    let mut sum = vec![0.0; mesh.n_vertices()];
    let mut count = vec![0usize; mesh.n_vertices()];
    for t in 0..mesh.n_triangles() {
        let traces = u.vertex_traces(mesh, t);
        for (k, &v) in mesh.triangle(t).iter().enumerate() {
            sum[v] += traces[k];
            count[v] += 1;
        }
    }
    sum.iter().zip(&count).map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 }).collect()
}

fn p1_gradient(corners: &[Point; 3], values: [f64; 3]) -> Vec2 {
    let g = geom::barycentric_gradients(corners);
    (0..3).fold([0.0, 0.0], |acc, k| geom::add(acc, geom::scale(values[k], g[k])))
}

fn check_lengths(mesh: &Triangulation, pw: &PiecewiseData, cr: &CrSolution) -> Result<()> {
    if pw.elements.len() != mesh.n_triangles() || cr.values.len() != mesh.n_edges() {
        return Err(Error::MeshMismatch);
    }
    Ok(())
}

/// Residual estimator of the mixed solution. Terms on each triangle:
///
/// * `volume`: `|h_T (A_h^{-1} p_M + u_M b*_h)|`;
/// * `nonconformity`: `|A_h^{-1} p_M + u_M b*_h - grad v|` with `v = -(averaged u_CR)`;
/// * `coeff_a`: `|(A^{-1} - A_h^{-1}) p_M|`;
/// * `coeff_b`: `|u_M (b* - b*_h)|`.
///
/// The discrete problem sees the elementwise constant data `f_h`, `gamma_h`, so the
/// oscillation `(1 - Pi_0)(f_h - gamma_h u_M)` vanishes and is not a term. The
/// oscillation of the exact data, `|(1 - Pi_0)(f - gamma u_M)|` by the seven-point
/// rule against the centroid value, is reported as the diagnostic `osc` together with
/// `h2_f = |h_T^2 f_h|` and `h_residual = |h_T (f_h - gamma_h u_M)|`.
pub fn estimate_mixed(
    mesh: &Triangulation,
    mixed: &MixedSolution,
    u_cr: &CrSolution,
    field: &dyn CoefficientField,
    pw: &PiecewiseData,
) -> Result<EstimatorReport> {
    mixed.check_mesh(mesh)?;
    check_lengths(mesh, pw, u_cr)?;
    let nt = mesh.n_triangles();
    let v_nodal: Vec<f64> = average_cr(mesh, u_cr).iter().map(|x| -x).collect();
    let mut osc = 0.0;
    let mut volume = Vec::with_capacity(nt);
    let mut nonconformity = Vec::with_capacity(nt);
    let mut coeff_a = Vec::with_capacity(nt);
    let mut coeff_b = Vec::with_capacity(nt);
    let (mut h2_f, mut h_res) = (0.0, 0.0);
    for t in 0..nt {
        let k = pw.element(t);
        let corners = mesh.corners(t);
        let flux = mixed.flux[t];
        let u = mixed.scalar[t];
        let h = mesh.diameter(t);
        let area = mesh.area(t);

        let g = |x: Point| field.source(x) - field.reaction(x) * u;
        let g0 = g(mesh.centroid(t));
        osc += SEVEN_POINT.integrate(&corners, |x| {
            let d = g(x) - g0;
            d * d
        });

        let w = |x: Point| geom::add(geom::mat_vec(&k.a_inv, flux.at(x)), geom::scale(u, k.b_star));
        let w_sq = EDGE_MIDPOINT.integrate(&corners, |x| geom::dot(w(x), w(x)));
        volume.push(h * libm::sqrt(w_sq));

        let [a, b, c] = mesh.triangle(t);
        let grad_v = p1_gradient(&corners, [v_nodal[a], v_nodal[b], v_nodal[c]]);
        nonconformity.push(libm::sqrt(EDGE_MIDPOINT.integrate(&corners, |x| {
            let d = geom::sub(w(x), grad_v);
            geom::dot(d, d)
        })));

        let mut spd_failure = false;
        let ca = EDGE_MIDPOINT.integrate(&corners, |x| match geom::inverse(&field.diffusion(x)) {
            Some(a_inv) => {
                let d = geom::mat_vec(&geom::mat_sub(&a_inv, &k.a_inv), flux.at(x));
                geom::dot(d, d)
            }
            None => {
                spd_failure = true;
                0.0
            }
        });
        if spd_failure {
            return Err(Error::NotPositiveDefinite { triangle: t });
        }
        coeff_a.push(libm::sqrt(ca));
        coeff_b.push(libm::sqrt(EDGE_MIDPOINT.integrate(&corners, |x| {
            let b_star = geom::inverse(&field.diffusion(x))
                .map_or([0.0, 0.0], |a_inv| geom::mat_vec(&a_inv, field.convection(x)));
            let d = geom::scale(u, geom::sub(b_star, k.b_star));
            geom::dot(d, d)
        })));

        h2_f += area * (h * h * k.f) * (h * h * k.f);
        let r = h * (k.f - k.gamma * u);
        h_res += area * r * r;
    }
    Ok(EstimatorReport {
        terms: vec![
            EstimatorTerm { name: "volume", local: volume },
            EstimatorTerm { name: "nonconformity", local: nonconformity },
            EstimatorTerm { name: "coeff_a", local: coeff_a },
            EstimatorTerm { name: "coeff_b", local: coeff_b },
        ],
        diagnostics: vec![
            ("osc", libm::sqrt(osc)),
            ("h2_f", libm::sqrt(h2_f)),
            ("h_residual", libm::sqrt(h_res)),
        ],
    })
}

/// Explicit residual estimator of a CR solution with `p_CR = -(A_h grad u_CR + u_CR b_h)`:
///
/// * `volume`: `h_T |f - gamma u_CR - div p_CR|_T`, seven-point rule;
/// * `jump`: `h_E^{1/2} |[p_CR] . nu_E|_E` on interior edges, two-point Gauss, each
///   squared edge contribution split evenly between the two neighbours.
pub fn estimate_nc(
    mesh: &Triangulation,
    u_cr: &CrSolution,
    field: &dyn CoefficientField,
    pw: &PiecewiseData,
) -> Result<EstimatorReport> {
    check_lengths(mesh, pw, u_cr)?;
    let nt = mesh.n_triangles();
    let grads: Vec<Vec2> = (0..nt).map(|t| u_cr.gradient(mesh, t)).collect();
    let flux = |t: usize, x: Point| -> Vec2 {
        let k = pw.element(t);
        let a_grad = geom::mat_vec(&k.a, grads[t]);
        let u = u_cr.value_at(mesh, t, x);
        [-(a_grad[0] + u * k.b[0]), -(a_grad[1] + u * k.b[1])]
    };
    let mut volume = Vec::with_capacity(nt);
    for (t, grad) in grads.iter().enumerate() {
        let k = pw.element(t);
        let corners = mesh.corners(t);
        // div p_CR = -b_h . grad u_CR on each triangle.
        let div_p = -geom::dot(k.b, *grad);
        let r_sq = SEVEN_POINT.integrate(&corners, |x| {
            let r = field.source(x) - field.reaction(x) * u_cr.value_at(mesh, t, x) - div_p;
            r * r
        });
        volume.push(mesh.diameter(t) * libm::sqrt(r_sq));
    }
    let mut jump_sq = vec![0.0; nt];
    for e in mesh.interior_edges() {
        let (t1, t2) = mesh.edge_triangles(e);
        let Some(t2) = t2 else { continue };
        let [a, b] = mesh.edge(e);
        let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
        let nu = mesh.edge_normal(e);
        let len = mesh.edge_length(e);
        let mut integral = 0.0;
        for (s, w) in GAUSS2.0.iter().zip(GAUSS2.1) {
            let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
            let j = geom::dot(geom::sub(flux(t1, x), flux(t2, x)), nu);
            integral += w * j * j;
        }
        let contribution = len * len * integral;
        jump_sq[t1] += 0.5 * contribution;
        jump_sq[t2] += 0.5 * contribution;
    }
    Ok(EstimatorReport {
        terms: vec![
            EstimatorTerm { name: "volume", local: volume },
            EstimatorTerm { name: "jump", local: jump_sq.into_iter().map(libm::sqrt).collect() },
        ],
        diagnostics: Vec::new(),
    })
}

/// Triangles selected by Dörfler marking, in selection order.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkedSet {
    pub triangles: Vec<usize>,
    /// `eta^2(M) / eta^2`; one for a vanishing estimator.
    pub fraction: f64,
}

/// Greedy bulk marking: take triangles by decreasing `eta_T^2` (ties by index) until
/// their share of the total reaches `theta`.
pub fn dorfler_mark(eta_sq: &[f64], theta: f64) -> Result<MarkedSet> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::BadTheta(theta));
    }
    let mut order: Vec<usize> = (0..eta_sq.len()).collect();
    order.sort_by(|&a, &b| eta_sq[b].total_cmp(&eta_sq[a]).then(a.cmp(&b)));
    let total: f64 = order.iter().map(|&t| eta_sq[t]).sum();
    if total <= 0.0 {
        return Ok(MarkedSet { triangles: Vec::new(), fraction: 1.0 });
    }
    let goal = theta * total;
    let mut acc = 0.0;
    let mut triangles = Vec::new();
    for &t in &order {
        // With theta = 1 indicators below the rounding of the running sum still count.
        let done = if theta == 1.0 { eta_sq[t] <= 0.0 } else { acc >= goal };
        if done {
            break;
        }
        acc += eta_sq[t];
        triangles.push(t);
    }
    Ok(MarkedSet { triangles, fraction: acc / total })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefinementMode {
    Uniform,
    Adaptive,
}

impl RefinementMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RefinementMode::Uniform => "uniform",
            RefinementMode::Adaptive => "adaptive",
        }
    }
}

impl core::fmt::Display for RefinementMode {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for RefinementMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(RefinementMode::Uniform),
            "adaptive" => Ok(RefinementMode::Adaptive),
            other => Err(Error::Config(format!("unknown refinement mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopConfig {
    pub theta: f64,
    /// Levels are computed while the number of mixed unknowns stays at or below this.
    pub max_ndof: usize,
    pub mode: RefinementMode,
    pub solver: SolverConfig,
    /// Largest accepted discrepancy between the two mixed solutions.
    pub equivalence_tol: f64,
    /// Dyadic refinement depth of error quadrature toward the singular point.
    pub quadrature_depth: usize,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            theta: 0.5,
            max_ndof: 20_000,
            mode: RefinementMode::Adaptive,
            solver: SolverConfig::default(),
            equivalence_tol: 1e-8,
            quadrature_depth: 3,
        }
    }
}

/// Everything computed on one level, handed to the observer of [`adaptive_loop_with`].
pub struct LevelState<'a> {
    pub level: usize,
    pub mesh: &'a Triangulation,
    pub pw: &'a PiecewiseData,
    /// Mixed solution reconstructed from the condensed CR solution.
    pub mixed: &'a MixedSolution,
    /// Mixed solution of the saddle-point system.
    pub direct: &'a MixedSolution,
    pub cr: &'a CrSolution,
    pub report: &'a EstimatorReport,
    pub record: &'a LevelRecord,
    pub diagnostics: &'a LevelDiagnostics,
    /// `None` on the last level, which is not refined.
    pub marked: Option<&'a MarkedSet>,
}

pub fn adaptive_loop(instance: &ProblemInstance, cfg: &LoopConfig) -> Result<ConvergenceHistory> {
    adaptive_loop_with(instance, cfg, |_| {})
}

/// Run the adaptive (or uniform) loop until the next mesh exceeds `cfg.max_ndof`. A
/// singular linear system ends the run early; the levels computed so far are returned
/// together with the event.
pub fn adaptive_loop_with(
    instance: &ProblemInstance,
    cfg: &LoopConfig,
    mut observer: impl FnMut(&LevelState<'_>),
) -> Result<ConvergenceHistory> {
    if !(cfg.theta > 0.0 && cfg.theta <= 1.0) {
        return Err(Error::BadTheta(cfg.theta));
    }
    let mut mesh = instance.initial_mesh().clone();
    if mesh.ndof_mixed() > cfg.max_ndof {
        return Err(Error::Config(format!(
            "max_ndof {} is below the {} unknowns of the initial mesh",
            cfg.max_ndof,
            mesh.ndof_mixed()
        )));
    }
    let mut history = ConvergenceHistory::new(instance.name());
    let mut level = 0;
    loop {
        let ndof = mesh.ndof_mixed();
        let pw = project_p0(instance.field(), &mesh)?;
        let solved = solve_mixed_via_equivalence(&mesh, &pw, &cfg.solver)
            .and_then(|(m, cr)| Ok((m, cr, solve_mixed_direct(&mesh, &pw, &cfg.solver)?)));
        let (mixed, cr, direct) = match solved {
            Ok(s) => s,
            Err(e @ (Error::SingularMatrix { .. } | Error::SingularLocalFactor { .. })) => {
                history.singular = Some(SingularEvent { level, ndof, message: e.to_string() });
                break;
            }
            Err(e) => return Err(e),
        };
        let (rel_p, rel_u) = equivalence_residual(&mesh, &direct, &mixed)?;
        if !(rel_p <= cfg.equivalence_tol && rel_u <= cfg.equivalence_tol) {
            return Err(Error::EquivalenceViolated { rel_p, rel_u });
        }
        let report = estimate_mixed(&mesh, &mixed, &cr, instance.field(), &pw)?;
        let eta = report.eta();
        let errors = match instance.exact() {
            Some(_) => Some(error_norms(&mesh, &mixed, instance, cfg.quadrature_depth)?),
            None => None,
        };
        let record = LevelRecord::new(level, ndof, errors, eta);
        let diagnostics = LevelDiagnostics {
            equivalence: (rel_p, rel_u),
            divergence_defect: divergence_defect(&mesh, &pw, &mixed).max(divergence_defect(&mesh, &pw, &direct)),
            n_triangles: mesh.n_triangles(),
            min_angle: mesh.min_angle(),
        };

        let next_mesh = match cfg.mode {
            RefinementMode::Uniform => uniform_red_refine(&mesh),
            RefinementMode::Adaptive => {
                let marked = dorfler_mark(&report.eta_sq_per_triangle(), cfg.theta)?;
                let refined = if marked.triangles.is_empty() { None } else { Some(rgb_refine(&mesh, &marked.triangles)?) };
                let last = refined.as_ref().is_none_or(|m| m.ndof_mixed() > cfg.max_ndof);
                observer(&LevelState {
                    level,
                    mesh: &mesh,
                    pw: &pw,
                    mixed: &mixed,
                    direct: &direct,
                    cr: &cr,
                    report: &report,
                    record: &record,
                    diagnostics: &diagnostics,
                    marked: (!last).then_some(&marked),
                });
                history.push(record, diagnostics);
                match refined {
                    Some(m) if !last => {
                        mesh = m;
                        level += 1;
                        continue;
                    }
                    _ => break,
                }
            }
        };
        let last = next_mesh.ndof_mixed() > cfg.max_ndof;
        let all = MarkedSet { triangles: (0..mesh.n_triangles()).collect(), fraction: 1.0 };
        observer(&LevelState {
            level,
            mesh: &mesh,
            pw: &pw,
            mixed: &mixed,
            direct: &direct,
            cr: &cr,
            report: &report,
            record: &record,
            diagnostics: &diagnostics,
            marked: (!last).then_some(&all),
        });
        history.push(record, diagnostics);
        if last {
            break;
        }
        mesh = next_mesh;
        level += 1;
    }
    history.update_rates();
    Ok(history)
}

/// `max_T |div p_M - (f_h - gamma_h u_M)| / scale_T`, where `scale_T` is the larger of
/// `|f_h| + |gamma_h u_M|` and `sum_E |E| |p_M . nu_E| / |T|`, the magnitude of the terms
/// cancelling in the discrete divergence.
pub fn divergence_defect(mesh: &Triangulation, pw: &PiecewiseData, mixed: &MixedSolution) -> f64 {
    let mut worst = 0.0f64;
    for t in 0..mesh.n_triangles() {
        let k = pw.element(t);
        let u = mixed.scalar[t];
        let defect = (mixed.flux[t].divergence() - (k.f - k.gamma * u)).abs();
        if defect == 0.0 {
            continue;
        }
        let fluxes: f64 = mesh.triangle_edges(t).iter().map(|&e| mesh.edge_length(e) * mixed.normal_flux[e].abs()).sum();
        let scale = (k.f.abs() + (k.gamma * u).abs()).max(fluxes / mesh.area(t));
        worst = worst.max(if scale > 0.0 { defect / scale } else { defect });
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dorfler_examples() {
        let m = dorfler_mark(&[4.0, 1.0, 1.0], 0.5).unwrap();
        assert_eq!(m.triangles, vec![0]);
        assert!((m.fraction - 4.0 / 6.0).abs() < 1e-15);

        let m = dorfler_mark(&[0.0, 2.0, 0.0, 1.0], 1.0).unwrap();
        assert_eq!(m.triangles, vec![1, 3]);

        let m = dorfler_mark(&[1.0; 10], 0.3).unwrap();
        assert_eq!(m.triangles, vec![0, 1, 2]);

        assert_eq!(dorfler_mark(&[1.0], 0.0), Err(Error::BadTheta(0.0)));
        assert_eq!(dorfler_mark(&[1.0], 1.5), Err(Error::BadTheta(1.5)));
        assert_eq!(dorfler_mark(&[0.0, 0.0], 0.5).unwrap().triangles, Vec::<usize>::new());
    }
}
