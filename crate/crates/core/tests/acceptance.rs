//! Acceptance criteria 1-9, one PASS/FAIL line each.
//!
//! Criteria 7 and 8 are known gaps (see README): they are evaluated at full strength
//! and reported as FAIL, but do not change the exit status. Any other failure does.

use std::time::Instant;

use afem_core::assembly::cr_element;
use afem_core::mesh::{lshape, square_grid};
use afem_core::prelude::*;
use afem_core::problem::ElementCoefficients;
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

mod common;
use common::{cr_matrix_oracle, second_moment_oracle, spd, triangle};

const KNOWN_GAPS: [usize; 2] = [7, 8];

/// Table of the uniform L-shape run: (Ndof, e_u, e_p).
const LSHAPE_UNIFORM: [(usize, f64, f64); 6] = [
    (68, 0.16656920, 0.26578962),
    (256, 0.08258681, 0.19505767),
    (992, 0.04098066, 0.12772995),
    (3904, 0.02034316, 0.08188794),
    (15488, 0.01011251, 0.05215656),
    (61696, 0.00503450, 0.03310369),
];

struct Run {
    name: String,
    history: ConvergenceHistory,
    seconds: f64,
}

fn run(benchmark: Benchmark, mode: RefinementMode, max_ndof: usize) -> Run {
    let instance = benchmark.instance();
    let cfg = LoopConfig { mode, max_ndof, theta: 0.5, ..LoopConfig::default() };
    let start = Instant::now();
    let history = adaptive_loop(&instance, &cfg).unwrap_or_else(|e| panic!("{} {mode}: {e}", instance.name()));
    Run { name: format!("{} {mode}", instance.name()), history, seconds: start.elapsed().as_secs_f64() }
}

fn in_range(x: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&x)
}

fn mean_rate_p_beyond(h: &ConvergenceHistory, ndof: usize) -> f64 {
    let rates: Vec<f64> = h.records.iter().filter(|r| r.ndof > ndof).filter_map(|r| r.rate_p).collect();
    rates.iter().sum::<f64>() / rates.len() as f64
}

fn last_two_rates(h: &ConvergenceHistory, f: impl Fn(&LevelRecord) -> Option<f64>) -> Vec<f64> {
    h.records.iter().rev().take(2).rev().filter_map(f).collect()
}

/// Log-log interpolation of `e_p` over Ndof, extrapolating from the end segments.
fn e_p_at(h: &ConvergenceHistory, ndof: usize) -> f64 {
    let pts: Vec<(f64, f64)> = h.records.iter().map(|r| ((r.ndof as f64).ln(), r.e_p.unwrap().ln())).collect();
    let x = (ndof as f64).ln();
    let k = pts.windows(2).position(|w| x <= w[1].0).unwrap_or(pts.len() - 2);
    let ((x0, y0), (x1, y1)) = (pts[k], pts[k + 1]);
    (y0 + (y1 - y0) * (x - x0) / (x1 - x0)).exp()
}

fn criterion_1(uniform: &Run) -> (bool, String) {
    let start = Instant::now();
    let mut mesh = lshape();
    let mut counted = vec![mesh.ndof_mixed()];
    for _ in 0..5 {
        mesh = uniform_red_refine(&mesh);
        counted.push(mesh.ndof_mixed());
    }
    let count_time = start.elapsed().as_secs_f64();
    let solved: Vec<usize> = uniform.history.records.iter().map(|r| r.ndof).collect();
    let expected: Vec<usize> = LSHAPE_UNIFORM.iter().map(|r| r.0).collect();
    let ok = counted == expected && solved == expected && count_time < 1.0 && uniform.seconds < 60.0;
    (ok, format!("Ndof {solved:?}; counting {count_time:.3} s, solves {:.1} s", uniform.seconds))
}

fn criterion_2_3(runs: &[&Run]) -> ((bool, String), (bool, String)) {
    let (mut eq, mut div, mut levels) = (0.0f64, 0.0f64, 0);
    for r in runs {
        for d in &r.history.diagnostics {
            eq = eq.max(d.equivalence.0).max(d.equivalence.1);
            div = div.max(d.divergence_defect);
            levels += 1;
        }
    }
    (
        (eq <= 1e-8, format!("max equivalence residual {eq:.2e} over {levels} levels of {} runs", runs.len())),
        (div <= 1e-12, format!("max relative divergence defect {div:.2e}")),
    )
}

fn criterion_4(uniform: &Run) -> (bool, String) {
    let h = &uniform.history;
    let rp = last_two_rates(h, |r| r.rate_p);
    let ru = last_two_rates(h, |r| r.rate_u);
    let rates_ok = rp.len() == 2 && ru.len() == 2 && rp.iter().all(|&r| in_range(r, 0.29, 0.37)) && ru.iter().all(|&r| in_range(r, 0.47, 0.53));
    let mut worst: f64 = 0.0;
    for (r, &(n, eu, ep)) in h.records.iter().zip(&LSHAPE_UNIFORM) {
        assert_eq!(r.ndof, n);
        worst = worst.max((r.e_u.unwrap() / eu - 1.0).abs()).max((r.e_p.unwrap() / ep - 1.0).abs());
    }
    let ok = rates_ok && h.records.len() == LSHAPE_UNIFORM.len() && worst <= 0.2;
    (ok, format!("CR(e_p) {rp:.4?}, CR(e_u) {ru:.4?}, largest relative deviation from the table {:.1}%", 100.0 * worst))
}

fn criterion_5(uniform: &Run, adaptive: &Run) -> (bool, String) {
    let mean = mean_rate_p_beyond(&adaptive.history, 5000);
    let last = adaptive.history.records.last().unwrap();
    let ratio = e_p_at(&uniform.history, last.ndof) / last.e_p.unwrap();
    let ok = in_range(mean, 0.43, 0.57) && ratio >= 2.0 && last.ndof >= 40_000;
    (ok, format!("mean CR(e_p) over Ndof > 5000 = {mean:.4}; at Ndof {} uniform e_p / adaptive e_p = {ratio:.2}", last.ndof))
}

fn criterion_6(uniform: &Run, adaptive: &Run) -> (bool, String) {
    let rp = last_two_rates(&uniform.history, |r| r.rate_p);
    let mean = mean_rate_p_beyond(&adaptive.history, 5000);
    let ok = rp.len() == 2 && rp.iter().all(|&r| in_range(r, 0.20, 0.30)) && in_range(mean, 0.43, 0.57);
    (ok, format!("uniform CR(e_p) at the two finest levels {rp:.4?}; adaptive mean CR(e_p) over Ndof > 5000 = {mean:.4}"))
}

fn criterion_7(runs: &[&Run]) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for r in runs {
        let eff: Vec<f64> = r.history.records.iter().filter(|x| x.ndof >= 1000).filter_map(|x| x.efficiency).collect();
        let (lo, hi) = eff.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &e| (a.min(e), b.max(e)));
        let inside = eff.iter().filter(|&&e| in_range(e, 2.0, 3.5)).count();
        ok &= eff.iter().all(|&e| in_range(e, 1.5, 4.5)) && 2 * inside > eff.len();
        parts.push(format!("{}: [{lo:.2}, {hi:.2}], {inside}/{} in [2, 3.5]", r.name, eff.len()));
    }
    (ok, format!("eta/e_p at Ndof >= 1000: {}", parts.join("; ")))
}

fn criterion_8(reference: &Run, shifted: &[&Run]) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for r in shifted {
        let ratios: Vec<f64> = r.history.records.iter().zip(&reference.history.records).map(|(a, b)| a.eta / b.eta).collect();
        let shrinking = ratios.windows(2).all(|w| w[1] < w[0]);
        ok &= !ratios.is_empty() && ratios[0] >= 5.0 && shrinking;
        let stop = r.history.singular.as_ref().map(|s| format!(", singular at Ndof {}", s.ndof)).unwrap_or_default();
        parts.push(format!("{}: eta ratio to gamma=8 {ratios:.2?}{stop}", r.history.problem));
    }
    (ok, parts.join("; "))
}

fn draw<S: Strategy>(runner: &mut TestRunner, s: S) -> S::Value {
    s.new_tree(runner).expect("strategy rejected too many values").current()
}

fn criterion_9() -> (bool, String) {
    let mut failures: Vec<String> = Vec::new();
    let solver = SolverConfig::default();
    let mut runner = TestRunner::new_with_rng(Config::default(), TestRng::deterministic_rng(RngAlgorithm::ChaCha));

    // Patch tests: affine u is reproduced by CR, constant flux by both mixed routes.
    let mesh = square_grid(4);
    let affine = CallbackField::new().dirichlet(|x| 2.0 * x[0] - x[1] + 0.5);
    let pw = project_p0(&affine, &mesh).unwrap();
    let cr = solve_ncfem(&mesh, &pw, &solver).unwrap();
    let cr_err = (0..mesh.n_edges())
        .map(|e| {
            let m = mesh.edge_midpoint(e);
            (cr.values[e] - (2.0 * m[0] - m[1] + 0.5)).abs()
        })
        .fold(0.0, f64::max);
    let direct = solve_mixed_direct(&mesh, &pw, &solver).unwrap();
    let (recon, _) = solve_mixed_via_equivalence(&mesh, &pw, &solver).unwrap();
    let mut flux_err: f64 = 0.0;
    for sol in [&direct, &recon] {
        for t in 0..mesh.n_triangles() {
            for x in mesh.corners(t) {
                let p = sol.flux[t].at(x);
                flux_err = flux_err.max((p[0] + 2.0).abs()).max((p[1] - 1.0).abs());
            }
        }
    }
    if cr_err > 1e-10 || flux_err > 1e-10 {
        failures.push(format!("patch test ({cr_err:.1e}, {flux_err:.1e})"));
    }

    // Dörfler minimality by exhaustive search, n <= 12.
    let mut dorfler_bad = 0;
    for _ in 0..200 {
        let (eta, theta) = draw(&mut runner, (proptest::collection::vec(0u32..20, 1..=12), 0.01f64..=1.0));
        let eta: Vec<f64> = eta.into_iter().map(f64::from).collect();
        let total: f64 = eta.iter().sum();
        let marked = dorfler_mark(&eta, theta).unwrap();
        let picked: f64 = marked.triangles.iter().map(|&t| eta[t]).sum();
        let smaller = (0u32..1 << eta.len()).any(|mask| {
            (mask.count_ones() as usize) < marked.triangles.len()
                && (0..eta.len()).filter(|i| mask >> i & 1 == 1).map(|i| eta[i]).sum::<f64>() >= theta * total
        });
        if picked < theta * total || smaller {
            dorfler_bad += 1;
        }
    }
    if dorfler_bad > 0 {
        failures.push(format!("Dörfler minimality ({dorfler_bad} instances)"));
    }

    // Local CR matrices and second moments against the oracles, 100 random instances.
    let (mut cr_dev, mut s_dev) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let (t, (l1, l2, angle), b, gamma) = draw(
            &mut runner,
            (triangle(), (0.1f64..10.0, 0.1f64..10.0, 0.0f64..3.2), proptest::array::uniform2(-3.0f64..3.0), -5.0f64..5.0),
        );
        let a = spd(l1, l2, angle);
        let a_inv = spd(1.0 / l1, 1.0 / l2, angle);
        let k = ElementCoefficients { a, a_inv, b, b_star: [0.0; 2], gamma, f: 1.0, s: 0.0, s_mean: 0.0 };
        let (m, _) = cr_element(&t, &k);
        let oracle = cr_matrix_oracle(&t, &a, b, gamma);
        let scale = 1.0 + oracle.iter().flatten().fold(0.0f64, |x, y| x.max(y.abs()));
        for i in 0..3 {
            for j in 0..3 {
                cr_dev = cr_dev.max((m[i][j] - oracle[i][j]).abs() / scale);
            }
        }
        let s = second_moment_oracle(&t, &a_inv);
        s_dev = s_dev.max((s_of_t(&t, &a_inv) - s).abs() / s.abs().max(1.0));
    }
    if cr_dev > 1e-13 || s_dev > 1e-13 {
        failures.push(format!("element oracles ({cr_dev:.1e}, {s_dev:.1e})"));
    }

    // Zero data gives a zero estimate.
    let mesh = uniform_red_refine(&lshape());
    let field = CallbackField::new().diffusion(|x| [[2.0 + x[0], 0.1], [0.1, 1.0]]).convection(|x| [x[1], 1.0]).reaction(|_| -3.0);
    let pw = project_p0(&field, &mesh).unwrap();
    let (mixed, cr) = solve_mixed_via_equivalence(&mesh, &pw, &solver).unwrap();
    let eta = estimate_mixed(&mesh, &mixed, &cr, &field, &pw).unwrap().eta();
    if eta != 0.0 {
        failures.push(format!("zero problem eta = {eta:e}"));
    }

    let detail = format!(
        "patch {:.1e}/{:.1e}, Dörfler 200 exhaustive instances, CR matrix {cr_dev:.1e}, S(T) {s_dev:.1e}, zero-problem eta {eta}",
        cr_err, flux_err
    );
    (failures.is_empty(), if failures.is_empty() { detail } else { format!("{detail}; failed: {}", failures.join(", ")) })
}

fn main() {
    let start = Instant::now();
    use RefinementMode::{Adaptive, Uniform};
    let jobs: Vec<(Benchmark, RefinementMode, usize)> = vec![
        (Benchmark::LShape, Uniform, 65_000),
        (Benchmark::LShape, Adaptive, 55_000),
        (Benchmark::Crack, Uniform, 65_000),
        (Benchmark::Crack, Adaptive, 55_000),
        (Benchmark::EigenSweep { gamma: 8.0 }, Uniform, 65_000),
        (Benchmark::EigenSweep { gamma: 9.63 }, Uniform, 65_000),
        (Benchmark::EigenSweep { gamma: 9.64 }, Uniform, 65_000),
    ];
    let runs: Vec<Run> = std::thread::scope(|s| {
        let handles: Vec<_> = jobs.iter().map(|&(b, m, n)| s.spawn(move || run(b, m, n))).collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let [lu, la, cu, ca, e8, e963, e964] = [0, 1, 2, 3, 4, 5, 6].map(|i| &runs[i]);
    let all: Vec<&Run> = runs.iter().collect();
    let (c2, c3) = criterion_2_3(&all);
    let results = [
        criterion_1(lu),
        c2,
        c3,
        criterion_4(lu),
        criterion_5(lu, la),
        criterion_6(cu, ca),
        criterion_7(&[lu, la, cu, ca]),
        criterion_8(e8, &[e963, e964]),
        criterion_9(),
    ];
    let mut unexpected = Vec::new();
    for (i, (ok, detail)) in results.iter().enumerate() {
        let id = i + 1;
        let note = if !ok && KNOWN_GAPS.contains(&id) { " [known gap]" } else { "" };
        println!("criterion {id}: {}{note} {detail}", if *ok { "PASS" } else { "FAIL" });
        if !ok && !KNOWN_GAPS.contains(&id) {
            unexpected.push(id);
        }
    }
    let passed = results.iter().filter(|r| r.0).count();
    println!("acceptance: {passed}/9 criteria pass in {:.1} s", start.elapsed().as_secs_f64());
    if !unexpected.is_empty() {
        println!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
