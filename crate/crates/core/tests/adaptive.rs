//! The SOLVE, ESTIMATE, MARK, REFINE loop on the benchmark problems.

use afem_core::prelude::*;

fn loop_cfg(mode: RefinementMode, max_ndof: usize) -> LoopConfig {
    LoopConfig { mode, max_ndof, ..LoopConfig::default() }
}

#[test]
fn configuration_is_checked() {
    let inst = benchmark("lshape").unwrap();
    assert!(matches!(adaptive_loop(&inst, &loop_cfg(RefinementMode::Uniform, 67)), Err(Error::Config(_))));
    let bad = LoopConfig { theta: 0.0, ..loop_cfg(RefinementMode::Adaptive, 1000) };
    assert_eq!(adaptive_loop(&inst, &bad).unwrap_err(), Error::BadTheta(0.0));
}

#[test]
fn uniform_lshape_levels_and_identities() {
    let inst = benchmark("lshape").unwrap();
    let mut last_marked = Vec::new();
    let h = adaptive_loop_with(&inst, &loop_cfg(RefinementMode::Uniform, 4000), |s| {
        last_marked.push(s.marked.map(|m| m.triangles.len()));
    })
    .unwrap();
    let ndof: Vec<usize> = h.records.iter().map(|r| r.ndof).collect();
    assert_eq!(ndof, vec![68, 256, 992, 3904]);
    assert_eq!(last_marked, vec![Some(24), Some(96), Some(384), None]);
    for d in &h.diagnostics {
        assert!(d.equivalence.0 <= 1e-8 && d.equivalence.1 <= 1e-8);
        assert!(d.divergence_defect <= 1e-12);
    }
    assert!(h.records[0].rate_p.is_none());
    assert!(h.records[1..].iter().all(|r| r.rate_p.is_some() && r.rate_u.is_some() && r.rate_eta.is_some()));
}

fn r_of(x: Point) -> f64 {
    x[0].hypot(x[1])
}

#[test]
fn adaptive_crack_refines_toward_the_tip() {
    let inst = benchmark("crack").unwrap();
    let mut grading = Vec::new();
    let h = adaptive_loop_with(&inst, &loop_cfg(RefinementMode::Adaptive, 20_000), |s| {
        let mesh = s.mesh;
        let near: Vec<usize> = (0..mesh.n_triangles()).filter(|&t| r_of(mesh.centroid(t)) < 0.25).collect();
        let h_tip = near.iter().map(|&t| mesh.diameter(t)).fold(f64::INFINITY, f64::min);
        let mut far: Vec<f64> =
            (0..mesh.n_triangles()).filter(|&t| r_of(mesh.centroid(t)) > 0.5).map(|t| mesh.diameter(t)).collect();
        far.sort_by(f64::total_cmp);
        let density = near.len() as f64 / mesh.n_triangles() as f64;
        grading.push((h_tip, far[far.len() / 2], density));
    })
    .unwrap();
    assert!(h.records.windows(2).all(|w| w[0].ndof < w[1].ndof));
    assert!(grading.len() >= 8);
    // The disc r < 0.25 covers 1/16 of the domain.
    for &(h_tip, h_far, density) in &grading[grading.len() - 3..] {
        assert!(h_far >= 20.0 * h_tip, "{grading:?}");
        assert!(density >= 3.0 / 16.0, "{grading:?}");
    }
    for r in &h.records {
        assert!(r.c_rel.unwrap() < 10.0);
    }
}

#[test]
fn adaptive_lshape_estimator_decreases() {
    let inst = benchmark("lshape").unwrap();
    let h = adaptive_loop(&inst, &loop_cfg(RefinementMode::Adaptive, 20_000)).unwrap();
    let eta: Vec<f64> = h.records.iter().map(|r| r.eta).collect();
    for l in 3..eta.len().saturating_sub(2) {
        assert!(eta[l + 2] <= eta[l], "{eta:?}");
    }
    for (r, d) in h.records.iter().zip(&h.diagnostics) {
        assert!(r.c_rel.unwrap() < 10.0);
        assert!(d.equivalence.0 <= 1e-8 && d.equivalence.1 <= 1e-8);
        assert!((r.efficiency.unwrap() * r.e_p.unwrap() - r.eta).abs() <= 1e-14 * r.eta);
    }
}

#[test]
fn shift_near_the_eigenvalue_stops_with_partial_history() {
    let inst = Benchmark::EigenSweep { gamma: 9.63 }.instance();
    let h = adaptive_loop(&inst, &loop_cfg(RefinementMode::Uniform, 20_000)).unwrap();
    let event = h.singular.as_ref().expect("singular system near the eigenvalue");
    assert_eq!(event.level, h.records.len());
    assert!(h.records.iter().all(|r| r.eta.is_finite() && r.e_p.is_none()));
}
