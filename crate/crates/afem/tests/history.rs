use afem::history::{format_table, plot_script, read_csv, write_csv, CSV_HEADER};
use afem::Error;
use afem_core::bench::{ConvergenceHistory, ErrorNorms, LevelDiagnostics, LevelRecord, SingularEvent};
use proptest::prelude::*;

fn text(records: &[LevelRecord]) -> String {
    let mut buf = Vec::new();
    write_csv(records, &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![any::<f64>().prop_filter("finite", |x| x.is_finite()), 1e-300..1e3f64, Just(0.0), Just(-0.0)]
}

fn record() -> impl Strategy<Value = LevelRecord> {
    let opt = || proptest::option::of(finite());
    (0..100usize, 1..10_000_000usize, (opt(), opt(), opt(), opt(), opt()), finite(), (opt(), opt(), opt())).prop_map(
        |(level, ndof, (e_u, rate_u, e_p, rate_p, e_div), eta, (rate_eta, c_rel, efficiency))| LevelRecord {
            level,
            ndof,
            e_u,
            rate_u,
            e_p,
            rate_p,
            e_div,
            eta,
            rate_eta,
            c_rel,
            efficiency,
        },
    )
}

proptest! {
    #[test]
    fn csv_round_trips(records in proptest::collection::vec(record(), 0..8)) {
        let t = text(&records);
        let back = read_csv(t.as_bytes()).unwrap();
        prop_assert_eq!(back.len(), records.len());
        for (a, b) in records.iter().zip(&back) {
            prop_assert_eq!(format!("{a:?}"), format!("{b:?}"));
        }
        prop_assert_eq!(text(&back), t);
    }
}

#[test]
fn header_and_empty_fields() {
    let mut h = ConvergenceHistory::new("p");
    let diag = LevelDiagnostics { equivalence: (0.0, 0.0), divergence_defect: 0.0, n_triangles: 1, min_angle: 1.0 };
    h.push(LevelRecord::new(0, 68, Some(ErrorNorms { e_u: 0.5, e_p: 0.25, e_div: 0.0 }), 1.0), diag);
    h.push(LevelRecord::new(1, 256, None, 0.5), diag);
    h.update_rates();
    let t = text(&h.records);
    let mut lines = t.lines();
    assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
    assert_eq!(lines.next().unwrap(), "0,68,0.5,,0.25,,0.0,1.0,,0.75,4.0");
    let rate = (2.0f64).ln() / (256.0f64 / 68.0).ln();
    assert_eq!(lines.next().unwrap(), format!("1,256,,,,,,0.5,{rate:?},,"));
}

#[test]
fn wrong_header_or_value_is_rejected() {
    assert!(matches!(read_csv("a,b\n1,2\n".as_bytes()), Err(Error::Parse { line: 1, .. })));
    let bad = format!("{}\n0,68,x,,,,,1.0,,,\n", CSV_HEADER.join(","));
    assert!(matches!(read_csv(bad.as_bytes()), Err(Error::Parse { line: 2, .. })));
    let no_eta = format!("{}\n0,68,,,,,,,,,\n", CSV_HEADER.join(","));
    assert!(matches!(read_csv(no_eta.as_bytes()), Err(Error::Parse { line: 2, .. })));
}

#[test]
fn table_lists_levels_and_singular_event() {
    let mut h = ConvergenceHistory::new("eigen_sweep(9.64)");
    let diag = LevelDiagnostics { equivalence: (0.0, 0.0), divergence_defect: 0.0, n_triangles: 24, min_angle: 0.7 };
    h.push(LevelRecord::new(0, 68, Some(ErrorNorms { e_u: 0.16656920, e_p: 0.26578962, e_div: 0.1 }), 1.01064602), diag);
    h.singular = Some(SingularEvent { level: 1, ndof: 256, message: "pivot".into() });
    let t = format_table(&h);
    assert!(t.contains("0.16656920"));
    assert!(t.contains("1.01064602"));
    assert!(t.contains("singular system at level 1 (ndof 256)"));
    let widths: Vec<usize> = t.lines().skip(1).take(2).map(str::len).collect();
    assert_eq!(widths[0], widths[1]);
}

#[test]
fn plot_script_references_every_file() {
    let files = vec![("a".to_string(), "a.csv".to_string()), ("b".to_string(), "b.csv".to_string())];
    let s = plot_script("t", &files, &[(5, "e_p"), (8, "eta")], "out.png");
    assert!(s.contains("set logscale xy"));
    assert!(s.contains("set output 'out.png'"));
    assert_eq!(s.matches("using 2:").count(), 4);
    assert!(s.contains("'b.csv' using 2:8"));
}
