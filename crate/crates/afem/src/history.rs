//! Convergence histories as CSV, aligned text tables and gnuplot scripts.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use afem_core::bench::{ConvergenceHistory, LevelRecord};

use crate::{Error, Result};

pub const CSV_HEADER: [&str; 11] =
    ["level", "ndof", "e_u", "rate_u", "e_p", "rate_p", "e_div", "eta", "rate_eta", "c_rel", "efficiency"];

fn field(x: Option<f64>) -> String {
    x.map(|v| format!("{v:?}")).unwrap_or_default()
}

fn record_fields(r: &LevelRecord) -> [String; 11] {
    [
        r.level.to_string(),
        r.ndof.to_string(),
        field(r.e_u),
        field(r.rate_u),
        field(r.e_p),
        field(r.rate_p),
        field(r.e_div),
        field(Some(r.eta)),
        field(r.rate_eta),
        field(r.c_rel),
        field(r.efficiency),
    ]
}

pub fn write_csv<W: io::Write>(records: &[LevelRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for r in records {
        out.write_record(record_fields(r))?;
    }
    out.flush().map_err(Error::io("<csv>"))?;
    Ok(())
}

pub fn write_csv_file(records: &[LevelRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(Error::io(path))?;
    write_csv(records, io::BufWriter::new(file))
}

pub fn read_csv<R: io::Read>(r: R) -> Result<Vec<LevelRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Parse { line: 1, message: format!("unexpected header '{}'", header.iter().collect::<Vec<_>>().join(",")) });
    }
    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let bad = |name: &str, s: &str| Error::Parse { line, message: format!("invalid {name} '{s}'") };
        let int = |k: usize| row[k].parse::<usize>().map_err(|_| bad(CSV_HEADER[k], &row[k]));
        let opt = |k: usize| -> Result<Option<f64>> {
            match &row[k] {
                "" => Ok(None),
                s => s.parse().map(Some).map_err(|_| bad(CSV_HEADER[k], s)),
            }
        };
        records.push(LevelRecord {
            level: int(0)?,
            ndof: int(1)?,
            e_u: opt(2)?,
            rate_u: opt(3)?,
            e_p: opt(4)?,
            rate_p: opt(5)?,
            e_div: opt(6)?,
            eta: opt(7)?.ok_or_else(|| bad("eta", ""))?,
            rate_eta: opt(8)?,
            c_rel: opt(9)?,
            efficiency: opt(10)?,
        });
    }
    Ok(records)
}

pub fn read_csv_file(path: impl AsRef<Path>) -> Result<Vec<LevelRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(Error::io(path))?;
    read_csv(file)
}

/// Text table with errors to eight and rates to four decimals.
pub fn format_table(history: &ConvergenceHistory) -> String {
    let err = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.8}"));
    let rate = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.4}"));
    let ratio = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.3}"));
    let mut s = String::new();
    let _ = writeln!(s, "{}", history.problem);
    let _ = writeln!(
        s,
        "{:>5} {:>8} {:>11} {:>8} {:>11} {:>8} {:>11} {:>11} {:>8} {:>7} {:>7}",
        "level", "ndof", "e_u", "CR(e_u)", "e_p", "CR(e_p)", "e_div", "eta", "CR(eta)", "C_rel", "eta/e_p"
    );
    for r in &history.records {
        let _ = writeln!(
            s,
            "{:>5} {:>8} {:>11} {:>8} {:>11} {:>8} {:>11} {:>11} {:>8} {:>7} {:>7}",
            r.level,
            r.ndof,
            err(r.e_u),
            rate(r.rate_u),
            err(r.e_p),
            rate(r.rate_p),
            err(r.e_div),
            err(Some(r.eta)),
            rate(r.rate_eta),
            ratio(r.c_rel),
            ratio(r.efficiency),
        );
    }
    if let Some(ev) = &history.singular {
        let _ = writeln!(s, "singular system at level {} (ndof {}): {}", ev.level, ev.ndof, ev.message);
    }
    s
}

/// Gnuplot script plotting the given CSV columns (1-based, as `(column, name)`) of each
/// `(label, file)` against the number of unknowns. Files are relative to the script.
pub fn plot_script(title: &str, files: &[(String, String)], columns: &[(usize, &str)], output: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set datafile missing ''");
    let _ = writeln!(s, "set terminal pngcairo size 900,650");
    let _ = writeln!(s, "set output '{output}'");
    let _ = writeln!(s, "set title '{title}' noenhanced");
    let _ = writeln!(s, "set logscale xy");
    let _ = writeln!(s, "set xlabel 'Ndof'");
    let _ = writeln!(s, "set key outside right noenhanced");
    let mut curves = Vec::new();
    for (label, file) in files {
        for (col, name) in columns {
            curves.push(format!("'{file}' using 2:{col} with linespoints title '{label} {name}'"));
        }
    }
    let _ = writeln!(s, "plot {}", curves.join(", \\\n     "));
    s
}
