//! Plain-text triangle meshes.
//!
//! ```text
//! # comment
//! vertices N / triangles M / boundary K
//! x y            (N lines)
//! i j k          (M lines, counterclockwise, 0-based)
//! i j tag        (K lines)
//! ```
//!
//! Tokens are whitespace separated, so the header may also be split over several
//! lines and the slashes may be dropped. Boundary edges without a listed tag get tag 0.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use afem_core::mesh::{build_mesh, BoundarySegment, Triangulation};

use crate::{Error, Result};

struct Tokens<'a> {
    inner: Box<dyn Iterator<Item = (usize, &'a str)> + 'a>,
    line: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let inner = text.lines().enumerate().flat_map(|(i, l)| {
            let l = l.split('#').next().unwrap_or("");
            l.split_whitespace().filter(|t| *t != "/").map(move |t| (i + 1, t))
        });
        Self { inner: Box::new(inner), line: 1 }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse { line: self.line, message: message.into() }
    }

    fn next(&mut self, what: &str) -> Result<&'a str> {
        match self.inner.next() {
            Some((line, t)) => {
                self.line = line;
                Ok(t)
            }
            None => Err(self.err(format!("unexpected end of file, expected {what}"))),
        }
    }

    fn parse<T: FromStr>(&mut self, what: &str) -> Result<T> {
        let t = self.next(what)?;
        t.parse().map_err(|_| self.err(format!("expected {what}, found '{t}'")))
    }

    fn keyword(&mut self, kw: &str) -> Result<usize> {
        let t = self.next(kw)?;
        if t != kw {
            return Err(self.err(format!("expected '{kw}', found '{t}'")));
        }
        self.parse(&format!("{kw} count"))
    }
}

pub fn parse_mesh(text: &str) -> Result<Triangulation> {
    let mut tok = Tokens::new(text);
    let nv = tok.keyword("vertices")?;
    let nt = tok.keyword("triangles")?;
    let nb = tok.keyword("boundary")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let x: f64 = tok.parse("x coordinate")?;
        let y: f64 = tok.parse("y coordinate")?;
        if !(x.is_finite() && y.is_finite()) {
            return Err(tok.err("non-finite coordinate"));
        }
        vertices.push([x, y]);
    }
    let index = |tok: &mut Tokens, what: &str| -> Result<usize> {
        let i: usize = tok.parse(what)?;
        if i >= nv {
            return Err(tok.err(format!("vertex index {i} out of range (mesh has {nv} vertices)")));
        }
        Ok(i)
    };
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        triangles.push([index(&mut tok, "vertex index")?, index(&mut tok, "vertex index")?, index(&mut tok, "vertex index")?]);
    }
    let mut boundary = Vec::with_capacity(nb);
    for _ in 0..nb {
        let a = index(&mut tok, "vertex index")?;
        let b = index(&mut tok, "vertex index")?;
        let tag: u32 = tok.parse("boundary tag")?;
        boundary.push(BoundarySegment::new(a, b, tag));
    }
    if let Some((line, t)) = tok.inner.next() {
        return Err(Error::Parse { line, message: format!("trailing data '{t}'") });
    }
    Ok(build_mesh(vertices, triangles, &boundary)?)
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<Triangulation> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    parse_mesh(&text)
}

/// Serialize with every boundary edge listed. Coordinates use the shortest decimal
/// form that parses back to the same `f64`.
pub fn format_mesh(mesh: &Triangulation, comment: Option<&str>) -> String {
    let boundary = mesh.boundary_segments();
    let mut s = String::new();
    if let Some(c) = comment {
        for l in c.lines() {
            let _ = writeln!(s, "# {l}");
        }
    }
    let _ = writeln!(s, "vertices {} / triangles {} / boundary {}", mesh.n_vertices(), mesh.n_triangles(), boundary.len());
    for v in mesh.vertices() {
        let _ = writeln!(s, "{:?} {:?}", v[0], v[1]);
    }
    for t in mesh.triangles() {
        let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
    }
    for b in &boundary {
        let _ = writeln!(s, "{} {} {}", b.a, b.b, b.tag);
    }
    s
}

pub fn write_mesh(mesh: &Triangulation, path: impl AsRef<Path>, comment: Option<&str>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_mesh(mesh, comment)).map_err(Error::io(path))
}
