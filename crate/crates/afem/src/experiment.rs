//! Run benchmarks and write their CSV, table, plot script and optional system dumps.

use std::io::Write;
use std::path::{Path, PathBuf};

use afem_core::adapt::{adaptive_loop_with, LevelState, LoopConfig};
use afem_core::assembly::{assemble_mixed_direct, assemble_modified_ncfem};
use afem_core::bench::ConvergenceHistory;
use afem_core::mesh::Triangulation;
use afem_core::problem::Benchmark;

use crate::config::RunConfig;
use crate::history::{format_table, plot_script, write_csv_file};
use crate::{meshio, mtx, Error, Result};

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub benchmark: Benchmark,
    pub history: ConvergenceHistory,
    /// `||u_M||` per level.
    pub u_norms: Vec<f64>,
    pub csv: PathBuf,
}

#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    pub runs: Vec<RunOutput>,
    /// Every file written, in order.
    pub files: Vec<PathBuf>,
}

impl RunSummary {
    pub fn any_singular(&self) -> bool {
        self.runs.iter().any(|r| r.history.singular.is_some())
    }
}

fn gamma_label(gamma: f64) -> String {
    format!("gamma{gamma}")
}

fn u_norm(state: &LevelState<'_>) -> f64 {
    let s: f64 = state.mixed.scalar.iter().enumerate().map(|(t, u)| u * u * state.mesh.area(t)).sum();
    s.sqrt()
}

fn run_one(
    benchmark: Benchmark,
    initial: Option<&Triangulation>,
    loop_cfg: &LoopConfig,
    dump: Option<(&Path, &str)>,
) -> Result<(ConvergenceHistory, Vec<f64>)> {
    let mut instance = benchmark.instance();
    if let Some(mesh) = initial {
        instance = instance.with_mesh(mesh.clone());
    }
    let mut u_norms = Vec::new();
    let mut dump_error: Option<Error> = None;
    let history = adaptive_loop_with(&instance, loop_cfg, |state| {
        u_norms.push(u_norm(state));
        if let (Some((dir, prefix)), None) = (dump, &dump_error) {
            let written = (|| -> Result<()> {
                let comment = format!("{} level {} ndof {}", instance.name(), state.level, state.record.ndof);
                let modified = assemble_modified_ncfem(state.mesh, state.pw)?;
                mtx::dump_system(&modified, dir, &format!("{prefix}level{}_modified_ncfem", state.level), &comment)?;
                let mixed = assemble_mixed_direct(state.mesh, state.pw)?;
                mtx::dump_system(&mixed, dir, &format!("{prefix}level{}_mixed", state.level), &comment)
            })();
            dump_error = written.err();
        }
    })?;
    match dump_error {
        Some(e) => Err(e),
        None => Ok((history, u_norms)),
    }
}

fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let name = stem.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    stem.with_file_name(format!("{name}{suffix}"))
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Run every benchmark of `cfg`. Tables go to `log`. Shifts of a sweep run in parallel.
/// A singular system is not an error: the partial history is written and flagged in
/// the summary.
pub fn run_experiment(cfg: &RunConfig, log: &mut dyn Write) -> Result<RunSummary> {
    let benchmarks = cfg.benchmarks()?;
    let initial = cfg.mesh.as_ref().map(meshio::read_mesh).transpose()?;
    let loop_cfg = LoopConfig { theta: cfg.theta, max_ndof: cfg.max_ndof, mode: cfg.mode, ..LoopConfig::default() };
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from(format!("{}_{}.csv", cfg.problem, cfg.mode)));
    let stem = out.with_extension("");
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(Error::io(dir))?;
    }
    let dump_dir = with_suffix(&stem, "_systems");
    if cfg.dump_systems {
        std::fs::create_dir_all(&dump_dir).map_err(Error::io(&dump_dir))?;
    }
    let sweep = benchmarks.len() > 1;
    let prefixes: Vec<String> = benchmarks
        .iter()
        .map(|b| match b {
            Benchmark::EigenSweep { gamma } if sweep => format!("{}_", gamma_label(*gamma)),
            _ => String::new(),
        })
        .collect();

    let results: Vec<Result<(ConvergenceHistory, Vec<f64>)>> = std::thread::scope(|s| {
        let handles: Vec<_> = benchmarks
            .iter()
            .zip(&prefixes)
            .map(|(&b, prefix)| {
                let dump = cfg.dump_systems.then_some((dump_dir.as_path(), prefix.as_str()));
                let initial = initial.as_ref();
                let loop_cfg = &loop_cfg;
                s.spawn(move || run_one(b, initial, loop_cfg, dump))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("benchmark thread panicked")).collect()
    });

    let mut summary = RunSummary::default();
    for (b, result) in benchmarks.iter().zip(results) {
        let (history, u_norms) = result?;
        let csv = match b {
            Benchmark::EigenSweep { gamma } if sweep => with_suffix(&stem, &format!("_{}.csv", gamma_label(*gamma))),
            _ => out.clone(),
        };
        write_csv_file(&history.records, &csv)?;
        let _ = writeln!(log, "{}", format_table(&history));
        summary.files.push(csv.clone());
        summary.runs.push(RunOutput { benchmark: *b, history, u_norms, csv });
    }

    if sweep {
        let combined = with_suffix(&stem, "_c_rel.csv");
        write_sweep_csv(&summary.runs, &combined)?;
        summary.files.push(combined);
    }

    let script = stem.with_extension("gp");
    let files: Vec<(String, String)> = summary.runs.iter().map(|r| (r.history.problem.clone(), file_name(&r.csv))).collect();
    let columns: &[(usize, &str)] = if summary.runs.iter().any(|r| r.history.records.iter().any(|x| x.e_p.is_some())) {
        &[(5, "e_p"), (8, "eta"), (10, "C_rel")]
    } else {
        &[(8, "eta")]
    };
    let png = file_name(&stem.with_extension("png"));
    let text = plot_script(&format!("{} ({})", cfg.problem, cfg.mode), &files, columns, &png);
    std::fs::write(&script, text).map_err(Error::io(&script))?;
    summary.files.push(script);
    if cfg.dump_systems {
        summary.files.push(dump_dir);
    }
    Ok(summary)
}

/// One row per shift and level: `gamma,level,ndof,eta,u_norm,c_rel`. `c_rel` is empty
/// without an exact solution.
fn write_sweep_csv(runs: &[RunOutput], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(Error::io(path))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    w.write_record(["gamma", "level", "ndof", "eta", "u_norm", "c_rel"])?;
    for run in runs {
        let gamma = match run.benchmark {
            Benchmark::EigenSweep { gamma } => gamma,
            _ => continue,
        };
        for (r, u) in run.history.records.iter().zip(&run.u_norms) {
            w.write_record([
                format!("{gamma:?}"),
                r.level.to_string(),
                r.ndof.to_string(),
                format!("{:?}", r.eta),
                format!("{u:?}"),
                r.c_rel.map(|c| format!("{c:?}")).unwrap_or_default(),
            ])?;
        }
    }
    w.flush().map_err(Error::io(path))?;
    Ok(())
}
