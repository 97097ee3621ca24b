//! Run configuration from command-line flags or `key = value` files.

use std::path::PathBuf;

use afem_core::adapt::RefinementMode;
use afem_core::problem::Benchmark;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// `lshape`, `crack` or `eigen_sweep`.
    pub problem: String,
    pub mode: RefinementMode,
    pub theta: f64,
    pub max_ndof: usize,
    /// Shift of `eigen_sweep`; without it the whole default grid is run.
    pub gamma: Option<f64>,
    /// CSV path. Sweeps use its stem for one file per shift.
    pub out: Option<PathBuf>,
    /// Initial mesh replacing the built-in one.
    pub mesh: Option<PathBuf>,
    pub dump_systems: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: "lshape".into(),
            mode: RefinementMode::Adaptive,
            theta: 0.5,
            max_ndof: 20_000,
            gamma: None,
            out: None,
            mesh: None,
            dump_systems: false,
        }
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "true" | "yes" | "1" | "on" => Some(true),
        "false" | "no" | "0" | "off" => Some(false),
        _ => None,
    }
}

impl RunConfig {
    /// Set one option. Keys are the long flag names; `-` and `_` are interchangeable.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("invalid {what} '{value}'"));
        match key.replace('-', "_").as_str() {
            "problem" => self.problem = value.to_string(),
            "mode" => self.mode = value.parse().map_err(|_| bad("mode"))?,
            "theta" => self.theta = value.parse().map_err(|_| bad("theta"))?,
            "max_ndof" => self.max_ndof = value.parse().map_err(|_| bad("max_ndof"))?,
            "gamma" => self.gamma = Some(value.parse().map_err(|_| bad("gamma"))?),
            "out" => self.out = Some(PathBuf::from(value)),
            "mesh" => self.mesh = Some(PathBuf::from(value)),
            "dump_systems" => self.dump_systems = parse_bool(value).ok_or_else(|| bad("dump_systems"))?,
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Apply `key = value` lines on top of `self`. Blank lines and `#` comments are skipped.
    pub fn merge_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse { line: i + 1, message: format!("expected 'key = value', found '{line}'") })?;
            self.set(k.trim(), v.trim()).map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.merge_text(text)?;
        Ok(cfg)
    }

    /// The benchmarks this configuration runs: one, or one per shift of a sweep.
    pub fn benchmarks(&self) -> Result<Vec<Benchmark>> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::Config(format!("theta = {} is outside (0, 1]", self.theta)));
        }
        if let Some(g) = self.gamma {
            if !g.is_finite() {
                return Err(Error::Config(format!("gamma = {g} is not finite")));
            }
        }
        match Benchmark::parse(&self.problem, self.gamma)? {
            Benchmark::EigenSweep { .. } if self.gamma.is_none() && self.problem.trim() == "eigen_sweep" => Ok(
                afem_core::problem::DEFAULT_GAMMA_GRID.iter().map(|&gamma| Benchmark::EigenSweep { gamma }).collect(),
            ),
            b @ Benchmark::EigenSweep { .. } => Ok(vec![b]),
            _ if self.gamma.is_some() => {
                Err(Error::Config(format!("gamma only applies to eigen_sweep, not {}", self.problem)))
            }
            b => Ok(vec![b]),
        }
    }
}
