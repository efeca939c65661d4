//! Output files: CSV tables, raw float64 grids and the JSON metadata sidecar.
//!
//! A grid sweep with stem `s` produces
//!
//! * `s.csv`  UTF-8, LF line endings, header `q1,q2,f`, one row per lattice
//!   point in row-major order (first axis outer), numbers with 17
//!   significant digits;
//! * `s.f64`  the same values as little-endian IEEE-754 doubles, row-major,
//!   no header (optional);
//! * `s.json` the sidecar: schema tag and version, engine version, H9
//!   reading, field and solver settings, axes and per-point flags.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dhw::{H9Reading, SolverOptions};
use crate::field::FieldConfig;
use crate::sweep::{FrequencyCurve, GridSpec, PointStatus, Provenance, SpectrumGrid};

pub const SIDECAR_SCHEMA: &str = "pairspec.spectrum-grid";
pub const SIDECAR_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: malformed sidecar: {msg}")]
    Sidecar { path: PathBuf, msg: String },
    #[error("unsupported sidecar schema {schema:?} version {version}")]
    UnsupportedVersion { schema: String, version: u32 },
    #[error("{path}:{line}: {msg}")]
    Csv { path: PathBuf, line: usize, msg: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Lossless decimal form of a double (17 significant digits).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn grid_csv(grid: &SpectrumGrid) -> String {
    let s = &grid.spec;
    let mut out = String::with_capacity(64 * s.len() + 16);
    out.push_str("q1,q2,f\n");
    for i in 0..s.n1 {
        let c1 = fmt_f64(s.coord1(i));
        for j in 0..s.n2 {
            let _ = writeln!(out, "{},{},{}", c1, fmt_f64(s.coord2(j)), fmt_f64(grid.get(i, j)));
        }
    }
    out
}

pub fn grid_raw(grid: &SpectrumGrid) -> Vec<u8> {
    grid.values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn curve_csv(curve: &FrequencyCurve) -> String {
    let mut out = String::from("omega,f\n");
    for (w, f) in curve.omegas.iter().zip(&curve.values) {
        let _ = writeln!(out, "{},{}", fmt_f64(*w), fmt_f64(*f));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisMeta {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaggedPoint {
    pub i1: usize,
    pub i2: usize,
    pub status: PointStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub schema: String,
    pub schema_version: u32,
    pub engine_version: String,
    pub h9_reading: H9Reading,
    pub units: String,
    pub field: FieldConfig,
    pub solver: SolverOptions,
    pub grid: GridSpec,
    pub axis1: AxisMeta,
    pub axis2: AxisMeta,
    pub fixed_axis: String,
    pub csv_file: String,
    pub raw_file: Option<String>,
    pub flagged: Vec<FlaggedPoint>,
    /// Seconds since the epoch; taken from `SOURCE_DATE_EPOCH` when set.
    pub created_unix: Option<u64>,
    /// The run configuration that produced the grid, verbatim.
    pub run_config: Option<serde_json::Value>,
}

impl Sidecar {
    pub fn for_grid(grid: &SpectrumGrid, csv_file: &str, raw_file: Option<&str>, run_config: Option<serde_json::Value>, created_unix: Option<u64>) -> Self {
        let s = &grid.spec;
        let (a1, a2, fixed) = s.plane.axis_names();
        let flagged = (0..s.len())
            .filter(|&k| grid.status[k].is_flagged())
            .map(|k| FlaggedPoint {
                i1: k / s.n2,
                i2: k % s.n2,
                status: grid.status[k],
            })
            .collect();
        Sidecar {
            schema: SIDECAR_SCHEMA.into(),
            schema_version: SIDECAR_VERSION,
            engine_version: grid.provenance.engine_version.clone(),
            h9_reading: grid.provenance.h9_reading,
            units: "momenta in m, field in E_cr, time in 1/m, f per spin state".into(),
            field: grid.field,
            solver: grid.solver,
            grid: *s,
            axis1: AxisMeta {
                name: a1.into(),
                min: s.min1,
                max: s.max1,
                n: s.n1,
            },
            axis2: AxisMeta {
                name: a2.into(),
                min: s.min2,
                max: s.max2,
                n: s.n2,
            },
            fixed_axis: fixed.into(),
            csv_file: csv_file.into(),
            raw_file: raw_file.map(Into::into),
            flagged,
            created_unix,
            run_config,
        }
    }
}

/// Timestamp honouring `SOURCE_DATE_EPOCH` for reproducible sidecars.
pub fn creation_time() -> Option<u64> {
    if let Ok(v) = std::env::var("SOURCE_DATE_EPOCH") {
        return v.trim().parse().ok();
    }
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).ok().map(|d| d.as_secs())
}

/// Paths written by [`write_grid`].
#[derive(Debug, Clone)]
pub struct GridFiles {
    pub csv: PathBuf,
    pub raw: Option<PathBuf>,
    pub sidecar: PathBuf,
}

pub fn write_grid(grid: &SpectrumGrid, dir: &Path, stem: &str, raw: bool, run_config: Option<serde_json::Value>) -> Result<GridFiles, IoError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let csv_name = format!("{stem}.csv");
    let raw_name = raw.then(|| format!("{stem}.f64"));
    let csv = dir.join(&csv_name);
    fs::write(&csv, grid_csv(grid)).map_err(io_err(&csv))?;
    let raw_path = match &raw_name {
        Some(name) => {
            let p = dir.join(name);
            fs::write(&p, grid_raw(grid)).map_err(io_err(&p))?;
            Some(p)
        }
        None => None,
    };
    let sidecar = Sidecar::for_grid(grid, &csv_name, raw_name.as_deref(), run_config, creation_time());
    let sidecar_path = dir.join(format!("{stem}.json"));
    let mut text = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    text.push('\n');
    fs::write(&sidecar_path, text).map_err(io_err(&sidecar_path))?;
    Ok(GridFiles {
        csv,
        raw: raw_path,
        sidecar: sidecar_path,
    })
}

/// Sidecar location for a grid given either the sidecar itself or its CSV.
pub fn sidecar_path_for(path: &Path) -> PathBuf {
    if path.extension().is_some_and(|e| e == "json") {
        path.to_path_buf()
    } else {
        path.with_extension("json")
    }
}

pub fn read_sidecar(path: &Path) -> Result<Sidecar, IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| IoError::Sidecar {
        path: path.into(),
        msg: e.to_string(),
    })?;
    let schema = value.get("schema").and_then(|v| v.as_str()).unwrap_or_default().to_string();
    let version = value.get("schema_version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
    if schema != SIDECAR_SCHEMA || version != SIDECAR_VERSION {
        return Err(IoError::UnsupportedVersion { schema, version });
    }
    serde_json::from_value(value).map_err(|e| IoError::Sidecar {
        path: path.into(),
        msg: e.to_string(),
    })
}

/// Reads a grid back from its sidecar and CSV. Every lattice row must be
/// present and carry the expected coordinates.
pub fn read_grid(path: &Path) -> Result<SpectrumGrid, IoError> {
    let sidecar_path = sidecar_path_for(path);
    let meta = read_sidecar(&sidecar_path)?;
    let spec = meta.grid;
    let bad_meta = |msg: String| IoError::Sidecar {
        path: sidecar_path.clone(),
        msg,
    };
    spec.validate().map_err(|e| bad_meta(e.to_string()))?;
    let csv_path = sidecar_path.parent().unwrap_or(Path::new(".")).join(&meta.csv_file);
    let text = fs::read_to_string(&csv_path).map_err(io_err(&csv_path))?;
    let csv_err = |line: usize, msg: String| IoError::Csv {
        path: csv_path.clone(),
        line,
        msg,
    };

    let mut lines = text.split('\n');
    match lines.next() {
        Some("q1,q2,f") => {}
        _ => return Err(csv_err(1, "expected header q1,q2,f".into())),
    }
    let mut values = Vec::with_capacity(spec.len());
    for (k, line) in lines.enumerate() {
        let lineno = k + 2;
        if line.is_empty() {
            continue;
        }
        if values.len() == spec.len() {
            return Err(csv_err(lineno, "more rows than the grid holds".into()));
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(csv_err(lineno, format!("expected 3 columns, found {}", fields.len())));
        }
        let mut nums = [0.0f64; 3];
        for (slot, s) in nums.iter_mut().zip(&fields) {
            *slot = s.parse().map_err(|_| csv_err(lineno, format!("not a number: {s:?}")))?;
        }
        let idx = values.len();
        let (i, j) = (idx / spec.n2, idx % spec.n2);
        let tol = 1e-9 * (1.0 + nums[0].abs().max(nums[1].abs()));
        if (nums[0] - spec.coord1(i)).abs() > tol || (nums[1] - spec.coord2(j)).abs() > tol {
            return Err(csv_err(lineno, format!("coordinates do not match lattice point ({i}, {j})")));
        }
        values.push(nums[2]);
    }
    if !text.ends_with('\n') {
        return Err(csv_err(values.len() + 1, "file does not end with a newline (truncated?)".into()));
    }
    if values.len() != spec.len() {
        return Err(csv_err(values.len() + 2, format!("expected {} rows, found {}", spec.len(), values.len())));
    }
    let mut status = vec![PointStatus::Ok; spec.len()];
    for fp in &meta.flagged {
        if fp.i1 < spec.n1 && fp.i2 < spec.n2 {
            status[fp.i1 * spec.n2 + fp.i2] = fp.status;
        }
    }
    Ok(SpectrumGrid {
        spec,
        field: meta.field,
        solver: meta.solver,
        values,
        status,
        provenance: Provenance {
            engine_version: meta.engine_version,
            h9_reading: meta.h9_reading,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, 2.5e-300, -7.0e12, 0.0] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(0.0), "0.0000000000000000e0");
    }
}
