//! TOML run configuration. Key names carry their units.
//!
//! ```toml
//! workers = 4
//!
//! [field]
//! e0_over_ecr = 0.4
//! omega_over_m = 0.4
//! tau_times_m = 100.0   # default
//! phi_rad = 0.0         # default
//! delta = 0.0           # default
//!
//! [solver]              # optional, defaults shown
//! rel_tol = 1e-7
//! abs_tol = 1e-12
//! t_span_factor = 8.0
//! max_steps = 10000000
//! constancy_window_periods = 1.0
//! method = "dop853"     # or "dopri5", "rk4-fixed"
//! fixed_step_times_m = 0.02
//! h9_reading = "pe"     # or "ep"
//!
//! [grid]                # exactly one task block: point, grid, scan, predict
//! plane = "xy"
//! fixed_over_m = 0.0
//! axis1_over_m = [-1.2, 1.2]
//! n1 = 161
//! axis2_over_m = [-1.2, 1.2]
//! n2 = 161
//!
//! [output]
//! dir = "out"
//! stem = "spectrum"
//! raw = false
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dhw::{H9Reading, SolverOptions};
use crate::field::{FieldConfig, Momentum3};
use crate::ode::Method;
use crate::semianalytic::Spin;
use crate::sweep::{FrequencyScanSpec, GridSpec, Plane};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    pub e0_over_ecr: f64,
    pub omega_over_m: f64,
    #[serde(default = "default_tau")]
    pub tau_times_m: f64,
    #[serde(default)]
    pub phi_rad: f64,
    #[serde(default)]
    pub delta: f64,
}

fn default_tau() -> f64 {
    100.0
}

impl From<FieldSection> for FieldConfig {
    fn from(s: FieldSection) -> Self {
        FieldConfig {
            e0: s.e0_over_ecr,
            omega: s.omega_over_m,
            tau: s.tau_times_m,
            phi: s.phi_rad,
            delta: s.delta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub t_span_factor: f64,
    pub max_steps: u64,
    pub constancy_window_periods: f64,
    pub method: Method,
    pub fixed_step_times_m: f64,
    pub h9_reading: H9Reading,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverOptions::default();
        SolverSection {
            rel_tol: d.rel_tol,
            abs_tol: d.abs_tol,
            t_span_factor: d.t_span_factor,
            max_steps: d.max_steps,
            constancy_window_periods: d.constancy_check_window,
            method: d.method,
            fixed_step_times_m: d.fixed_step,
            h9_reading: d.h9_reading,
        }
    }
}

impl From<SolverSection> for SolverOptions {
    fn from(s: SolverSection) -> Self {
        SolverOptions {
            rel_tol: s.rel_tol,
            abs_tol: s.abs_tol,
            t_span_factor: s.t_span_factor,
            max_steps: s.max_steps,
            constancy_check_window: s.constancy_window_periods,
            method: s.method,
            fixed_step: s.fixed_step_times_m,
            h9_reading: s.h9_reading,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointTask {
    pub q_over_m: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridTask {
    #[serde(default)]
    pub plane: Plane,
    #[serde(default)]
    pub fixed_over_m: f64,
    pub axis1_over_m: [f64; 2],
    pub n1: usize,
    pub axis2_over_m: [f64; 2],
    pub n2: usize,
}

impl From<GridTask> for GridSpec {
    fn from(g: GridTask) -> Self {
        GridSpec {
            plane: g.plane,
            fixed_value: g.fixed_over_m,
            min1: g.axis1_over_m[0],
            max1: g.axis1_over_m[1],
            n1: g.n1,
            min2: g.axis2_over_m[0],
            max2: g.axis2_over_m[1],
            n2: g.n2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanTask {
    pub q_over_m: [f64; 3],
    pub omega_over_m: [f64; 2],
    pub n_omega: usize,
    #[serde(default = "default_prominence")]
    pub peak_prominence: f64,
}

fn default_prominence() -> f64 {
    1e-2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictTask {
    pub n_min: Option<u32>,
    pub n_max: Option<u32>,
    #[serde(default)]
    pub spin: Spin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub stem: String,
    pub raw: bool,
    /// Persist sweep progress to `<stem>.ckpt` and resume from it.
    pub checkpoint: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("."),
            stem: "spectrum".into(),
            raw: false,
            checkpoint: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub field: Option<FieldSection>,
    #[serde(default)]
    pub solver: SolverSection,
    pub point: Option<PointTask>,
    pub grid: Option<GridTask>,
    pub scan: Option<ScanTask>,
    pub predict: Option<PredictTask>,
    #[serde(default)]
    pub output: OutputSection,
    pub workers: Option<usize>,
}

/// The single task a configuration describes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Task {
    Point(Momentum3),
    Grid(GridSpec),
    Scan(ScanTask),
    Predict(PredictTask),
}

impl RunConfig {
    /// Parses TOML; errors carry line and column.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn empty() -> Self {
        RunConfig {
            field: None,
            solver: SolverSection::default(),
            point: None,
            grid: None,
            scan: None,
            predict: None,
            output: OutputSection::default(),
            workers: None,
        }
    }

    pub fn field_config(&self) -> Result<FieldConfig, ConfigError> {
        let f: FieldConfig = self.field.ok_or_else(|| ConfigError::Invalid("missing [field] section".into()))?.into();
        f.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(f)
    }

    pub fn solver_options(&self) -> Result<SolverOptions, ConfigError> {
        let s: SolverOptions = self.solver.into();
        s.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(s)
    }

    /// Exactly one of the task blocks must be present.
    pub fn task(&self) -> Result<Task, ConfigError> {
        let mut tasks = Vec::new();
        if let Some(p) = self.point {
            tasks.push(Task::Point(Momentum3::new(p.q_over_m[0], p.q_over_m[1], p.q_over_m[2])));
        }
        if let Some(g) = self.grid {
            tasks.push(Task::Grid(g.into()));
        }
        if let Some(s) = self.scan {
            tasks.push(Task::Scan(s));
        }
        if let Some(p) = self.predict {
            tasks.push(Task::Predict(p));
        }
        match tasks.len() {
            1 => Ok(tasks[0]),
            0 => Err(ConfigError::Invalid("no task block ([point], [grid], [scan] or [predict])".into())),
            _ => Err(ConfigError::Invalid("more than one task block present".into())),
        }
    }

    pub fn scan_spec(scan: &ScanTask, base: FieldConfig) -> FrequencyScanSpec {
        FrequencyScanSpec {
            q: Momentum3::new(scan.q_over_m[0], scan.q_over_m[1], scan.q_over_m[2]),
            omega_min: scan.omega_over_m[0],
            omega_max: scan.omega_over_m[1],
            n_omega: scan.n_omega,
            base,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_point_config() {
        let cfg = RunConfig::from_toml("[field]\ne0_over_ecr = 0.4\nomega_over_m = 0.4\n[point]\nq_over_m = [0.2, 0.3, 0.0]\n").unwrap();
        let f = cfg.field_config().unwrap();
        assert_eq!(f.tau, 100.0);
        assert_eq!(cfg.task().unwrap(), Task::Point(Momentum3::new(0.2, 0.3, 0.0)));
        assert_eq!(cfg.solver_options().unwrap(), SolverOptions::default());
    }

    #[test]
    fn parse_errors_name_the_line() {
        let err = RunConfig::from_toml("[field]\ne0_over_ecr = 0.4\nomega_over_m = = 0.4\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = RunConfig::from_toml("[field]\ne0 = 0.4\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn exactly_one_task() {
        let cfg = RunConfig::from_toml("[field]\ne0_over_ecr = 0.1\nomega_over_m = 0.4\n").unwrap();
        assert!(cfg.task().is_err());
        let two = "[field]\ne0_over_ecr = 0.1\nomega_over_m = 0.4\n[point]\nq_over_m=[0,0,0]\n[predict]\n";
        assert!(RunConfig::from_toml(two).unwrap().task().is_err());
    }

    #[test]
    fn zero_frequency_rejected() {
        let cfg = RunConfig::from_toml("[field]\ne0_over_ecr = 0.1\nomega_over_m = 0.0\n[predict]\n").unwrap();
        assert!(cfg.field_config().is_err());
    }
}
