//! Coefficient fields, their elementwise constant projections, and the benchmark
//! problems.
//!
//! The equation is `-div(A grad u + u b) + gamma u = f` with Dirichlet data `u_D`.
//! Projections onto piecewise constants use one-point quadrature at the centroid.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geom::{self, polar_angle, Mat2, Point, Vec2, IDENTITY};
use crate::mesh::{self, Triangulation};

/// First Dirichlet eigenvalue of the Laplacian on the L-shaped domain.
pub const LSHAPE_LAMBDA1: f64 = 9.6397238440219;

/// Reaction coefficients used when an eigenvalue sweep runs without an explicit value.
pub const DEFAULT_GAMMA_GRID: [f64; 8] = [8.0, 9.0, 9.5, 9.63, 9.64, 9.7, 10.0, 12.0];

pub trait CoefficientField {
    fn diffusion(&self, _x: Point) -> Mat2 {
        IDENTITY
    }
    fn convection(&self, _x: Point) -> Vec2 {
        [0.0, 0.0]
    }
    fn reaction(&self, _x: Point) -> f64 {
        0.0
    }
    fn source(&self, x: Point) -> f64;
    fn dirichlet(&self, _x: Point) -> f64 {
        0.0
    }
}

pub trait ExactSolution {
    fn value(&self, x: Point) -> f64;
    fn gradient(&self, x: Point) -> Vec2;
}

type ScalarFn = Box<dyn Fn(Point) -> f64 + Send + Sync>;
type VectorFn = Box<dyn Fn(Point) -> Vec2 + Send + Sync>;
type MatrixFn = Box<dyn Fn(Point) -> Mat2 + Send + Sync>;

/// Coefficient field assembled from closures. Unset coefficients default to
/// `A = I`, `b = 0`, `gamma = 0`, `f = 0`, `u_D = 0`.
#[derive(Default)]
pub struct CallbackField {
    diffusion: Option<MatrixFn>,
    convection: Option<VectorFn>,
    reaction: Option<ScalarFn>,
    source: Option<ScalarFn>,
    dirichlet: Option<ScalarFn>,
}

impl CallbackField {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn diffusion(mut self, f: impl Fn(Point) -> Mat2 + Send + Sync + 'static) -> Self {
        self.diffusion = Some(Box::new(f));
        self
    }

    pub fn convection(mut self, f: impl Fn(Point) -> Vec2 + Send + Sync + 'static) -> Self {
        self.convection = Some(Box::new(f));
        self
    }

    pub fn reaction(mut self, f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        self.reaction = Some(Box::new(f));
        self
    }

    pub fn source(mut self, f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        self.source = Some(Box::new(f));
        self
    }

    pub fn dirichlet(mut self, f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        self.dirichlet = Some(Box::new(f));
        self
    }
}

impl CoefficientField for CallbackField {
    fn diffusion(&self, x: Point) -> Mat2 {
        self.diffusion.as_ref().map_or(IDENTITY, |f| f(x))
    }
    fn convection(&self, x: Point) -> Vec2 {
        self.convection.as_ref().map_or([0.0, 0.0], |f| f(x))
    }
    fn reaction(&self, x: Point) -> f64 {
        self.reaction.as_ref().map_or(0.0, |f| f(x))
    }
    fn source(&self, x: Point) -> f64 {
        self.source.as_ref().map_or(0.0, |f| f(x))
    }
    fn dirichlet(&self, x: Point) -> f64 {
        self.dirichlet.as_ref().map_or(0.0, |f| f(x))
    }
}

/// Constant coefficients on one triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementCoefficients {
    pub a: Mat2,
    pub a_inv: Mat2,
    pub b: Vec2,
    /// `A_h^{-1} b_h`
    pub b_star: Vec2,
    pub gamma: f64,
    pub f: f64,
    /// `S(T) = int_T (x - mid T) . A_h^{-1} (x - mid T) dx`
    pub s: f64,
    /// `S(T) / |T|`
    pub s_mean: f64,
}

impl ElementCoefficients {
    /// `1 + gamma_h S(T) / (4 |T|)`, the local condensation factor.
    pub fn condensation_factor(&self) -> f64 {
        1.0 + 0.25 * self.gamma * self.s_mean
    }
}

/// Piecewise constant data on a mesh plus the Dirichlet values `u_D(mid E)` on
/// boundary edges (zero on interior edges).
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseData {
    pub elements: Vec<ElementCoefficients>,
    pub boundary_values: Vec<f64>,
}

impl PiecewiseData {
    pub fn element(&self, t: usize) -> &ElementCoefficients {
        &self.elements[t]
    }

    pub(crate) fn check_mesh(&self, mesh: &Triangulation) -> Result<()> {
        if self.elements.len() != mesh.n_triangles() || self.boundary_values.len() != mesh.n_edges() {
            return Err(Error::MeshMismatch);
        }
        Ok(())
    }
}

/// Second moment `S(T)` of a triangle with respect to the metric `A_h^{-1}`, evaluated
/// with the edge-midpoint rule, which is exact for the quadratic integrand.
pub fn s_of_t(corners: &[Point; 3], a_inv: &Mat2) -> f64 {
    let [p0, p1, p2] = *corners;
    let area = 0.5 * geom::signed_area2(p0, p1, p2);
    let c = [(p0[0] + p1[0] + p2[0]) / 3.0, (p0[1] + p1[1] + p2[1]) / 3.0];
    let mids = [geom::midpoint(p1, p2), geom::midpoint(p2, p0), geom::midpoint(p0, p1)];
    let q: f64 = mids
        .iter()
        .map(|m| {
            let d = geom::sub(*m, c);
            geom::dot(d, geom::mat_vec(a_inv, d))
        })
        .sum();
    area / 3.0 * q
}

/// Evaluate the coefficients at every centroid and the Dirichlet data at every
/// boundary edge midpoint.
pub fn project_p0(field: &dyn CoefficientField, mesh: &Triangulation) -> Result<PiecewiseData> {
    let mut elements = Vec::with_capacity(mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let c = mesh.centroid(t);
        let a = field.diffusion(c);
        if !geom::is_spd(&a) {
            return Err(Error::NotPositiveDefinite { triangle: t });
        }
        let a_inv = geom::inverse(&a).ok_or(Error::NotPositiveDefinite { triangle: t })?;
        let b = field.convection(c);
        let s = s_of_t(&mesh.corners(t), &a_inv);
        elements.push(ElementCoefficients {
            a,
            a_inv,
            b,
            b_star: geom::mat_vec(&a_inv, b),
            gamma: field.reaction(c),
            f: field.source(c),
            s,
            s_mean: s / mesh.area(t),
        });
    }
    let mut boundary_values = alloc::vec![0.0; mesh.n_edges()];
    for &e in mesh.boundary_edges() {
        boundary_values[e] = field.dirichlet(mesh.edge_midpoint(e));
    }
    Ok(PiecewiseData { elements, boundary_values })
}

/// A problem: coefficients, an initial mesh, and optionally the exact solution.
pub struct ProblemInstance {
    name: String,
    field: Box<dyn CoefficientField + Send + Sync>,
    exact: Option<Box<dyn ExactSolution + Send + Sync>>,
    singular_point: Option<Point>,
    initial_mesh: Triangulation,
}

impl ProblemInstance {
    pub fn new(
        name: impl Into<String>,
        field: Box<dyn CoefficientField + Send + Sync>,
        initial_mesh: Triangulation,
    ) -> Self {
        Self { name: name.into(), field, exact: None, singular_point: None, initial_mesh }
    }

    pub fn with_exact(mut self, exact: Box<dyn ExactSolution + Send + Sync>) -> Self {
        self.exact = Some(exact);
        self
    }

    /// Point where the exact solution is singular; error quadrature is graded toward it.
    pub fn with_singular_point(mut self, p: Point) -> Self {
        self.singular_point = Some(p);
        self
    }

    pub fn with_mesh(mut self, mesh: Triangulation) -> Self {
        self.initial_mesh = mesh;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn field(&self) -> &(dyn CoefficientField + Send + Sync) {
        self.field.as_ref()
    }

    pub fn exact(&self) -> Option<&(dyn ExactSolution + Send + Sync)> {
        self.exact.as_deref()
    }

    pub fn singular_point(&self) -> Option<Point> {
        self.singular_point
    }

    pub fn initial_mesh(&self) -> &Triangulation {
        &self.initial_mesh
    }

    /// `p = -(A grad u + u b)` of the exact solution.
    pub fn exact_flux(&self, x: Point) -> Option<Vec2> {
        let ex = self.exact.as_ref()?;
        let g = geom::mat_vec(&self.field.diffusion(x), ex.gradient(x));
        let u = ex.value(x);
        let b = self.field.convection(x);
        Some([-(g[0] + u * b[0]), -(g[1] + u * b[1])])
    }

    /// `div p = f - gamma u` of the exact solution.
    pub fn exact_flux_divergence(&self, x: Point) -> Option<f64> {
        let u = self.exact.as_ref()?.value(x);
        Some(self.field.source(x) - self.field.reaction(x) * u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Benchmark {
    /// `A = I`, `b = x`, `gamma = -4` on the L-shape; `u = r^(2/3) sin(2 theta/3)`.
    LShape,
    /// `A = I`, `b = (x-1, y+1)`, `gamma = 0` on the slit disc;
    /// `u = r^(1/2) sin(theta/2) - r^2 sin^2(theta)/2`.
    Crack,
    /// `-lap u - gamma u = 1`, `u_D = 0` on the L-shape: the shifted Laplacian, which is
    /// indefinite for `gamma` above the first Dirichlet eigenvalue [`LSHAPE_LAMBDA1`].
    EigenSweep { gamma: f64 },
}

impl Benchmark {
    /// Parse `lshape`, `crack`, `eigen_sweep` or `eigen_sweep(<gamma>)`. A bare
    /// `eigen_sweep` takes `gamma`, or the first value of the default grid.
    pub fn parse(name: &str, gamma: Option<f64>) -> Result<Self> {
        let name = name.trim();
        match name {
            "lshape" => Ok(Benchmark::LShape),
            "crack" => Ok(Benchmark::Crack),
            "eigen_sweep" => Ok(Benchmark::EigenSweep { gamma: gamma.unwrap_or(DEFAULT_GAMMA_GRID[0]) }),
            _ => {
                let inner = name
                    .strip_prefix("eigen_sweep(")
                    .and_then(|s| s.strip_suffix(')'))
                    .ok_or_else(|| Error::UnknownBenchmark(name.to_string()))?;
                let gamma: f64 = inner.trim().parse().map_err(|_| Error::UnknownBenchmark(name.to_string()))?;
                if !gamma.is_finite() {
                    return Err(Error::UnknownBenchmark(name.to_string()));
                }
                Ok(Benchmark::EigenSweep { gamma })
            }
        }
    }

    pub fn instance(self) -> ProblemInstance {
        match self {
            Benchmark::LShape => ProblemInstance::new("lshape", Box::new(LShapeProblem), mesh::lshape())
                .with_exact(Box::new(LShapeProblem))
                .with_singular_point([0.0, 0.0]),
            Benchmark::Crack => ProblemInstance::new("crack", Box::new(CrackProblem), mesh::crack_disc())
                .with_exact(Box::new(CrackProblem))
                .with_singular_point([0.0, 0.0]),
            Benchmark::EigenSweep { gamma } => ProblemInstance::new(
                format!("eigen_sweep({gamma})"),
                Box::new(CallbackField::new().reaction(move |_| -gamma).source(|_| 1.0)),
                mesh::lshape(),
            ),
        }
    }
}

/// Look up a benchmark by name; see [`Benchmark::parse`].
pub fn benchmark(name: &str) -> Result<ProblemInstance> {
    Ok(Benchmark::parse(name, None)?.instance())
}

fn polar(x: Point) -> (f64, f64) {
    (libm::hypot(x[0], x[1]), polar_angle(x))
}

/// `r^alpha sin(alpha theta)` and its gradient.
fn corner_singularity(alpha: f64, x: Point) -> (f64, Vec2) {
    let (r, theta) = polar(x);
    if r == 0.0 {
        return (0.0, [0.0, 0.0]);
    }
    let u = libm::pow(r, alpha) * libm::sin(alpha * theta);
    let s = alpha * libm::pow(r, alpha - 1.0);
    let phase = (alpha - 1.0) * theta;
    (u, [s * libm::sin(phase), s * libm::cos(phase)])
}

pub struct LShapeProblem;

impl CoefficientField for LShapeProblem {
    fn convection(&self, x: Point) -> Vec2 {
        x
    }
    fn reaction(&self, _x: Point) -> f64 {
        -4.0
    }
    /// `u` is harmonic and `x . grad u = (2/3) u`, `div b = 2`, so `f = -(8/3) u - 4 u`.
    fn source(&self, x: Point) -> f64 {
        -20.0 / 3.0 * self.value(x)
    }
    fn dirichlet(&self, x: Point) -> f64 {
        self.value(x)
    }
}

impl ExactSolution for LShapeProblem {
    fn value(&self, x: Point) -> f64 {
        corner_singularity(2.0 / 3.0, x).0
    }
    fn gradient(&self, x: Point) -> Vec2 {
        corner_singularity(2.0 / 3.0, x).1
    }
}

pub struct CrackProblem;

impl CoefficientField for CrackProblem {
    fn convection(&self, x: Point) -> Vec2 {
        [x[0] - 1.0, x[1] + 1.0]
    }
    /// `laplace u = -1`, `div b = 2`, so `f = 1 - b . grad u - 2 u`.
    fn source(&self, x: Point) -> f64 {
        1.0 - geom::dot(self.convection(x), self.gradient(x)) - 2.0 * self.value(x)
    }
    fn dirichlet(&self, x: Point) -> f64 {
        self.value(x)
    }
}

impl ExactSolution for CrackProblem {
    fn value(&self, x: Point) -> f64 {
        corner_singularity(0.5, x).0 - 0.5 * x[1] * x[1]
    }
    fn gradient(&self, x: Point) -> Vec2 {
        let g = corner_singularity(0.5, x).1;
        [g[0], g[1] - x[1]]
    }
}
