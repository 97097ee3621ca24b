//! Matrix Market coordinate dumps of assembled systems.

use std::fmt::Write as _;
use std::path::Path;

use afem_core::assembly::SparseSystem;

use crate::{Error, Result};

/// Matrix as 1-based `i j value` triplets in column-major order.
pub fn format_matrix(system: &SparseSystem, comment: &str) -> String {
    let a = &system.matrix;
    let mut s = String::with_capacity(32 * a.nnz() + 128);
    let _ = writeln!(s, "%%MatrixMarket matrix coordinate real general");
    for l in comment.lines() {
        let _ = writeln!(s, "% {l}");
    }
    let _ = writeln!(s, "{} {} {}", a.n_rows(), a.n_cols(), a.nnz());
    for (i, j, v) in a.triplets() {
        let _ = writeln!(s, "{} {} {v:e}", i + 1, j + 1);
    }
    s
}

pub fn format_rhs(system: &SparseSystem, comment: &str) -> String {
    let mut s = String::with_capacity(24 * system.rhs.len() + 128);
    let _ = writeln!(s, "%%MatrixMarket matrix array real general");
    for l in comment.lines() {
        let _ = writeln!(s, "% {l}");
    }
    let _ = writeln!(s, "{} 1", system.rhs.len());
    for v in &system.rhs {
        let _ = writeln!(s, "{v:e}");
    }
    s
}

/// Write `<stem>.mtx` and `<stem>_rhs.mtx` into `dir`.
pub fn dump_system(system: &SparseSystem, dir: &Path, stem: &str, comment: &str) -> Result<()> {
    let m = dir.join(format!("{stem}.mtx"));
    std::fs::write(&m, format_matrix(system, comment)).map_err(Error::io(&m))?;
    let r = dir.join(format!("{stem}_rhs.mtx"));
    std::fs::write(&r, format_rhs(system, comment)).map_err(Error::io(&r))
}
