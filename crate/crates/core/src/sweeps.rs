//! Error curves over an x grid and an r schedule, for the built-in functions.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::combinatorics::IndexSet;
use crate::error::{Error, Result};
use crate::multiproduct::{cutoff_n_max, estimate, GmpConfig, Parity};
use crate::oracle::BuiltinFunction;

pub const DEFAULT_CUTOFF: f64 = 32.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    FixedNMax(u32),
    /// `n_max = ceil(ln K / ln r)`
    FixedCutoff(f64),
}

impl Coupling {
    pub fn n_max(&self, r: f64, base: &IndexSet) -> Result<u32> {
        match *self {
            Coupling::FixedNMax(n) => Ok(n),
            Coupling::FixedCutoff(k) => cutoff_n_max(r, k, base.cardinality() as u32),
        }
    }
}

/// `1 + 2^{-t}` for `t = 1..=t_max`.
pub fn halving_schedule(t_max: u32) -> Vec<f64> {
    (1..=t_max).map(|t| 1.0 + 2f64.powi(-(t as i32))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl XGrid {
    /// `start + i * step` up to and including `stop` (with a 1e-9 step slack).
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| self.start + i as f64 * self.step)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub function: BuiltinFunction,
    pub grid: XGrid,
    pub schedule: Vec<f64>,
    pub coupling: Coupling,
    pub base: IndexSet,
    pub parity: Parity,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.grid.step > 0.0) || !self.grid.step.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "grid step must be > 0, got {}",
                self.grid.step
            )));
        }
        if !self.grid.start.is_finite() || !(self.grid.stop >= self.grid.start) {
            return Err(Error::InvalidConfig(format!(
                "grid needs finite start <= stop, got [{}, {}]",
                self.grid.start, self.grid.stop
            )));
        }
        if self.schedule.is_empty() {
            return Err(Error::InvalidConfig("r schedule is empty".into()));
        }
        if let Some(&r) = self
            .schedule
            .iter()
            .find(|r| !(**r > 1.0) || !r.is_finite())
        {
            return Err(Error::RatioNotAboveOne(r));
        }
        if let Coupling::FixedCutoff(k) = self.coupling {
            if !(k >= 2.0) {
                return Err(Error::InvalidConfig(format!(
                    "cutoff K must be >= 2, got {k}"
                )));
            }
        }
        // surfaces n_max/parity problems before any evaluation
        for &r in &self.schedule {
            self.config_for(r)?;
        }
        Ok(())
    }

    pub fn config_for(&self, r: f64) -> Result<GmpConfig> {
        let n_max = self.coupling.n_max(r, &self.base)?;
        GmpConfig::new(r, n_max, self.base.clone(), self.parity)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub x: f64,
    pub r: f64,
    pub n_max: u32,
    pub estimate: Option<f64>,
    pub reference: f64,
    pub abs_error: Option<f64>,
    pub factor_count: u128,
    /// `ok`, or the error kind that prevented the estimate.
    pub status: String,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

fn eval_row(function: &BuiltinFunction, x: f64, cfg: &GmpConfig) -> Result<SweepRow> {
    let factor_count = crate::combinatorics::factor_count(cfg.base(), u64::from(cfg.n_max()))?;
    let reference = function.eval(x);
    let row = match estimate(function, x, cfg) {
        Ok(e) => SweepRow {
            x,
            r: cfg.r(),
            n_max: cfg.n_max(),
            estimate: Some(e.value),
            reference,
            abs_error: Some((e.value - reference).abs()),
            factor_count,
            status: "ok".into(),
        },
        Err(err) => SweepRow {
            x,
            r: cfg.r(),
            n_max: cfg.n_max(),
            estimate: None,
            reference,
            abs_error: None,
            factor_count,
            status: err.kind().into(),
        },
    };
    Ok(row)
}

/// One row per `(x, r)`, ordered by x then by schedule position. Estimator
/// failures become row statuses; only invalid specs fail the whole sweep.
///
/// Rows are evaluated on the current rayon pool.
pub fn grid_eval(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let configs = spec
        .schedule
        .iter()
        .map(|&r| spec.config_for(r))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(f64, &GmpConfig)> = spec
        .grid
        .points()
        .into_iter()
        .flat_map(|x| configs.iter().map(move |c| (x, c)))
        .collect();
    jobs.par_iter()
        .map(|&(x, cfg)| eval_row(&spec.function, x, cfg))
        .collect()
}

/// Single-x sweep over the r schedule.
pub fn r_sweep(
    function: BuiltinFunction,
    x: f64,
    schedule: &[f64],
    coupling: Coupling,
    base: &IndexSet,
) -> Result<Vec<SweepRow>> {
    let spec = SweepSpec {
        function,
        grid: XGrid {
            start: x,
            stop: x,
            step: 1.0,
        },
        schedule: schedule.to_vec(),
        coupling,
        base: base.clone(),
        parity: Parity::All,
    };
    grid_eval(&spec)
}

pub const CSV_HEADER: &str = "x,r,n_max,estimate,reference,abs_error,factor_count,status";

/// 17 significant digits, locale independent.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv<W: Write>(rows: &[SweepRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    let opt = |v: Option<f64>| v.map(fmt_float).unwrap_or_default();
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt_float(row.x),
            fmt_float(row.r),
            row.n_max,
            opt(row.estimate),
            fmt_float(row.reference),
            opt(row.abs_error),
            row.factor_count,
            row.status
        )?;
    }
    Ok(())
}
