use afem::meshio::{format_mesh, parse_mesh, read_mesh};
use afem::Error;
use afem_core::mesh::{crack_disc, lshape, uniform_red_refine, Triangulation};

fn assert_same(a: &Triangulation, b: &Triangulation) {
    assert_eq!(a.vertices(), b.vertices());
    assert_eq!(a.triangles(), b.triangles());
    assert_eq!(a.boundary_segments(), b.boundary_segments());
}

fn shipped(name: &str) -> Triangulation {
    read_mesh(format!("{}/meshes/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

#[test]
fn shipped_meshes_match_builtin() {
    assert_same(&shipped("lshape.mesh"), &lshape());
    assert_same(&shipped("crack.mesh"), &crack_disc());
    assert_eq!(shipped("lshape.mesh").ndof_mixed(), 68);
}

#[test]
fn round_trip_is_exact() {
    let m = uniform_red_refine(&crack_disc());
    let text = format_mesh(&m, Some("two\nlines"));
    let back = parse_mesh(&text).unwrap();
    assert_same(&m, &back);
    assert_eq!(format_mesh(&back, Some("two\nlines")), text);
}

#[test]
fn header_may_span_lines_without_slashes() {
    let text = "# unit square\nvertices 4\ntriangles 2\nboundary 1\n0 0\n1 0 # corner\n1 1\n0 1\n0 1 2\n0 2 3\n0 1 7\n";
    let m = parse_mesh(text).unwrap();
    assert_eq!(m.n_triangles(), 2);
    assert_eq!(m.n_edges(), 5);
    let tags: Vec<u32> = m.boundary_segments().iter().map(|b| b.tag).collect();
    assert_eq!(tags.iter().filter(|&&t| t == 7).count(), 1);
    assert_eq!(tags.iter().filter(|&&t| t == 0).count(), 3);
}

fn parse_error(text: &str) -> (usize, String) {
    match parse_mesh(text) {
        Err(Error::Parse { line, message }) => (line, message),
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn malformed_input_reports_the_line() {
    let (line, msg) = parse_error("vertices 3 / triangles 1 / boundary 0\n0 0\n1 0\n0 1\n0 1 5\n");
    assert_eq!(line, 5);
    assert!(msg.contains("out of range"), "{msg}");

    let (line, msg) = parse_error("vertices 3 / triangles 1 / boundary 0\n0 0\n1 x\n");
    assert_eq!(line, 3);
    assert!(msg.contains("'x'"), "{msg}");

    let (_, msg) = parse_error("vertices 3 / triangles 1 / boundary 0\n0 0\n1 0\n0 1\n");
    assert!(msg.contains("end of file"), "{msg}");

    let (line, msg) = parse_error("vertices 3 / triangles 1 / boundary 0\n0 0\n1 0\n0 1\n0 1 2\n\n9\n");
    assert_eq!(line, 7);
    assert!(msg.contains("trailing"), "{msg}");

    let (line, _) = parse_error("verts 3\n");
    assert_eq!(line, 1);
}

#[test]
fn invalid_geometry_is_rejected_by_validation() {
    let cw = "vertices 3 / triangles 1 / boundary 0\n0 0\n1 0\n0 1\n0 2 1\n";
    assert!(matches!(parse_mesh(cw), Err(Error::Core(afem_core::Error::NonPositiveArea { .. }))));
    let dangling = "vertices 4 / triangles 1 / boundary 1\n0 0\n1 0\n0 1\n5 5\n0 1 2\n0 3 1\n";
    assert!(matches!(parse_mesh(dangling), Err(Error::Core(_))));
}

#[test]
fn missing_file_is_an_io_error() {
    assert!(matches!(read_mesh("/nonexistent/x.mesh"), Err(Error::Io { .. })));
}
