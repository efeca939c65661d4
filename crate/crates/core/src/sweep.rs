//! Deterministic parallel sweeps over momentum grids, frequency scans and
//! arbitrary point lists.
//!
//! Each point is an independent pure solve whose result is written into a
//! preallocated slot indexed by lattice position, so the output does not
//! depend on the worker count or on scheduling.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dhw::{solve_point, PointResult, SolveError, SolverOptions};
use crate::field::{FieldConfig, Momentum3};

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep specification: {0}")]
    Spec(String),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("checkpoint I/O: {0}")]
    Io(#[from] io::Error),
    #[error("checkpoint does not match this sweep (spec hash differs)")]
    ChecksumMismatch,
    #[error("malformed checkpoint: {0}")]
    BadCheckpoint(String),
    #[error("thread pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Plane {
    #[default]
    Xy,
    Xz,
    Yz,
}

impl Plane {
    pub fn axis_names(self) -> (&'static str, &'static str, &'static str) {
        match self {
            Plane::Xy => ("qx", "qy", "qz"),
            Plane::Xz => ("qx", "qz", "qy"),
            Plane::Yz => ("qy", "qz", "qx"),
        }
    }
}

/// A rectangular lattice in one momentum plane. Values are stored row-major
/// with the first axis as the row index: `values[i1 * n2 + i2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub plane: Plane,
    /// Out-of-plane momentum component.
    pub fixed_value: f64,
    pub min1: f64,
    pub max1: f64,
    pub n1: usize,
    pub min2: f64,
    pub max2: f64,
    pub n2: usize,
}

impl GridSpec {
    pub fn square(plane: Plane, half_width: f64, n: usize) -> Self {
        GridSpec {
            plane,
            fixed_value: 0.0,
            min1: -half_width,
            max1: half_width,
            n1: n,
            min2: -half_width,
            max2: half_width,
            n2: n,
        }
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        if self.n1 < 2 || self.n2 < 2 {
            return Err(SweepError::Spec("each axis needs at least 2 points".into()));
        }
        let vals = [self.fixed_value, self.min1, self.max1, self.min2, self.max2];
        if !vals.iter().all(|v| v.is_finite()) {
            return Err(SweepError::Spec("non-finite axis bound".into()));
        }
        if !(self.max1 > self.min1 && self.max2 > self.min2) {
            return Err(SweepError::Spec("axis max must exceed min".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn step1(&self) -> f64 {
        (self.max1 - self.min1) / (self.n1 - 1) as f64
    }

    pub fn step2(&self) -> f64 {
        (self.max2 - self.min2) / (self.n2 - 1) as f64
    }

    pub fn coord1(&self, i: usize) -> f64 {
        if i + 1 == self.n1 {
            self.max1
        } else {
            self.min1 + i as f64 * self.step1()
        }
    }

    pub fn coord2(&self, j: usize) -> f64 {
        if j + 1 == self.n2 {
            self.max2
        } else {
            self.min2 + j as f64 * self.step2()
        }
    }

    pub fn momentum(&self, i: usize, j: usize) -> Momentum3 {
        let (a, b, c) = (self.coord1(i), self.coord2(j), self.fixed_value);
        match self.plane {
            Plane::Xy => Momentum3::new(a, b, c),
            Plane::Xz => Momentum3::new(a, c, b),
            Plane::Yz => Momentum3::new(c, a, b),
        }
    }
}

/// Per-point outcome code stored next to each value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
#[repr(u8)]
pub enum PointStatus {
    #[default]
    Ok = 0,
    /// `f` left `[0, 1]` beyond tolerance during reporting.
    Clipped = 1,
    StepLimit = 2,
    NonFinite = 3,
    Invalid = 4,
}

impl PointStatus {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(c: u8) -> Option<Self> {
        Some(match c {
            0 => PointStatus::Ok,
            1 => PointStatus::Clipped,
            2 => PointStatus::StepLimit,
            3 => PointStatus::NonFinite,
            4 => PointStatus::Invalid,
            _ => return None,
        })
    }

    pub fn is_flagged(self) -> bool {
        self != PointStatus::Ok
    }

    fn classify(r: &Result<PointResult, SolveError>) -> (f64, PointStatus) {
        match r {
            Ok(p) if p.clip_flag => (p.f_final, PointStatus::Clipped),
            Ok(p) => (p.f_final, PointStatus::Ok),
            Err(SolveError::StepLimitExceeded(_)) => (0.0, PointStatus::StepLimit),
            Err(SolveError::NonFinite(_)) => (0.0, PointStatus::NonFinite),
            Err(_) => (0.0, PointStatus::Invalid),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub engine_version: String,
    pub h9_reading: crate::dhw::H9Reading,
}

impl Provenance {
    pub fn current(opts: &SolverOptions) -> Self {
        Provenance {
            engine_version: ENGINE_VERSION.to_string(),
            h9_reading: opts.h9_reading,
        }
    }
}

/// Final distribution on a momentum-plane lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumGrid {
    pub spec: GridSpec,
    pub field: FieldConfig,
    pub solver: SolverOptions,
    pub values: Vec<f64>,
    pub status: Vec<PointStatus>,
    pub provenance: Provenance,
}

impl SpectrumGrid {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.spec.n2 + j]
    }

    pub fn flagged(&self) -> usize {
        self.status.iter().filter(|s| s.is_flagged()).count()
    }

    /// Builds a grid from externally supplied values (analysis fixtures, file input).
    pub fn from_values(spec: GridSpec, field: FieldConfig, solver: SolverOptions, values: Vec<f64>) -> Result<Self, SweepError> {
        spec.validate()?;
        if values.len() != spec.len() {
            return Err(SweepError::Spec(format!("expected {} values, got {}", spec.len(), values.len())));
        }
        Ok(SpectrumGrid {
            spec,
            field,
            solver,
            status: vec![PointStatus::Ok; values.len()],
            values,
            provenance: Provenance::current(&solver),
        })
    }

    /// Samples `f(q)` on the lattice; for synthetic fixtures.
    pub fn tabulate(spec: GridSpec, field: FieldConfig, f: impl Fn(Momentum3) -> f64) -> Result<Self, SweepError> {
        let mut values = Vec::with_capacity(spec.len());
        for i in 0..spec.n1 {
            for j in 0..spec.n2 {
                values.push(f(spec.momentum(i, j)));
            }
        }
        Self::from_values(spec, field, SolverOptions::default(), values)
    }
}

/// Runs per-point work on a private pool of `workers` threads.
#[derive(Debug, Clone, Copy)]
pub struct Executor {
    pub workers: usize,
}

impl Default for Executor {
    fn default() -> Self {
        Executor {
            workers: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        }
    }
}

impl Executor {
    pub fn new(workers: usize) -> Self {
        Executor { workers: workers.max(1) }
    }

    fn install<R: Send>(&self, op: impl FnOnce() -> R + Send) -> Result<R, SweepError> {
        if self.workers == 1 {
            return Ok(op());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| SweepError::Pool(e.to_string()))?;
        Ok(pool.install(op))
    }

    /// Solves every momentum in `points`; results keep the input order.
    pub fn solve_points(&self, points: &[Momentum3], cfg: &FieldConfig, opts: &SolverOptions) -> Result<Vec<Result<PointResult, SolveError>>, SweepError> {
        self.install(|| points.par_iter().map(|q| solve_point(*q, cfg, opts)).collect())
    }

    /// Solves whole rows `rows` of the grid into `values`/`status` (row-sized chunks).
    fn solve_rows(
        &self,
        cfg: &FieldConfig,
        spec: &GridSpec,
        opts: &SolverOptions,
        rows: std::ops::Range<usize>,
        values: &mut [f64],
        status: &mut [PointStatus],
    ) -> Result<(), SweepError> {
        let n2 = spec.n2;
        let start = rows.start;
        self.install(|| {
            values
                .par_chunks_mut(n2)
                .zip(status.par_chunks_mut(n2))
                .enumerate()
                .for_each(|(k, (vrow, srow))| {
                    let i = start + k;
                    for j in 0..n2 {
                        let (v, s) = PointStatus::classify(&solve_point(spec.momentum(i, j), cfg, opts));
                        vrow[j] = v;
                        srow[j] = s;
                    }
                });
        })
    }
}

/// Full grid sweep without checkpointing.
pub fn sweep_grid(cfg: &FieldConfig, spec: &GridSpec, opts: &SolverOptions, exec: &Executor) -> Result<SpectrumGrid, SweepError> {
    spec.validate()?;
    cfg.validate().map_err(SolveError::from)?;
    opts.validate()?;
    let mut values = vec![0.0; spec.len()];
    let mut status = vec![PointStatus::Ok; spec.len()];
    exec.solve_rows(cfg, spec, opts, 0..spec.n1, &mut values, &mut status)?;
    Ok(SpectrumGrid {
        spec: *spec,
        field: *cfg,
        solver: *opts,
        values,
        status,
        provenance: Provenance::current(opts),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyScanSpec {
    pub q: Momentum3,
    pub omega_min: f64,
    pub omega_max: f64,
    pub n_omega: usize,
    /// Remaining field parameters; its `omega` is ignored.
    pub base: FieldConfig,
}

impl FrequencyScanSpec {
    pub fn validate(&self) -> Result<(), SweepError> {
        if !(self.omega_min > 0.0) || !self.omega_max.is_finite() {
            return Err(SweepError::Spec("omega_min must be > 0".into()));
        }
        if self.n_omega == 0 {
            return Err(SweepError::Spec("empty frequency range".into()));
        }
        if self.n_omega > 1 && !(self.omega_max > self.omega_min) {
            return Err(SweepError::Spec("omega_max must exceed omega_min".into()));
        }
        Ok(())
    }

    pub fn omegas(&self) -> Vec<f64> {
        if self.n_omega == 1 {
            return vec![self.omega_min];
        }
        let step = (self.omega_max - self.omega_min) / (self.n_omega - 1) as f64;
        (0..self.n_omega)
            .map(|k| {
                if k + 1 == self.n_omega {
                    self.omega_max
                } else {
                    self.omega_min + k as f64 * step
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyCurve {
    pub scan: FrequencyScanSpec,
    pub omegas: Vec<f64>,
    pub values: Vec<f64>,
    pub status: Vec<PointStatus>,
}

/// `f(+inf)` at fixed momentum as a function of the carrier frequency.
pub fn sweep_frequency(scan: &FrequencyScanSpec, opts: &SolverOptions, exec: &Executor) -> Result<FrequencyCurve, SweepError> {
    scan.validate()?;
    opts.validate()?;
    let omegas = scan.omegas();
    let results: Vec<(f64, PointStatus)> = exec.install(|| {
        omegas
            .par_iter()
            .map(|&w| {
                let cfg = FieldConfig { omega: w, ..scan.base };
                PointStatus::classify(&solve_point(scan.q, &cfg, opts))
            })
            .collect()
    })?;
    let (values, status) = results.into_iter().unzip();
    Ok(FrequencyCurve {
        scan: *scan,
        omegas,
        values,
        status,
    })
}

/// One-dimensional scan along a photon ring in the `q_z = 0` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocusScanSpec {
    pub n: u32,
    /// Samples evenly spaced in `q_x` over `[-qx_max, qx_max]`.
    pub n_qx: usize,
    pub qx_max: f64,
    /// Each sample is the maximum over `n_qy` points within this distance
    /// (in `q_y`) of the resonance locus.
    pub qy_half_window: f64,
    pub n_qy: usize,
}

impl LocusScanSpec {
    /// Covers 90% of the ring's `q_x` extent with a ±0.05 window of 11 points.
    pub fn for_ring(n: u32, cfg: &FieldConfig, n_qx: usize) -> Result<Self, SweepError> {
        let extent = crate::semianalytic::locus_qx_extent(n, cfg).ok_or_else(|| SweepError::Spec(format!("the {n}-photon ring is closed")))?;
        Ok(LocusScanSpec {
            n,
            n_qx,
            qx_max: 0.9 * extent,
            qy_half_window: 0.05,
            n_qy: 11,
        })
    }

    pub fn qx(&self) -> Vec<f64> {
        (0..self.n_qx)
            .map(|k| -self.qx_max + 2.0 * self.qx_max * k as f64 / (self.n_qx - 1) as f64)
            .collect()
    }

    pub fn step(&self) -> f64 {
        2.0 * self.qx_max / (self.n_qx - 1) as f64
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        if self.n == 0 || self.n_qx < 3 || self.n_qy == 0 {
            return Err(SweepError::Spec("ring scan needs n >= 1, at least 3 q_x samples and 1 q_y sample".into()));
        }
        if !(self.qx_max > 0.0 && self.qx_max.is_finite() && self.qy_half_window >= 0.0 && self.qy_half_window.is_finite()) {
            return Err(SweepError::Spec("ring scan extents must be positive and finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocusScan {
    pub spec: LocusScanSpec,
    pub field: FieldConfig,
    pub qx: Vec<f64>,
    /// `q_y` of the window maximum.
    pub qy: Vec<f64>,
    pub values: Vec<f64>,
    pub status: Vec<PointStatus>,
}

/// Final distribution along a photon ring. Windows run along `q_y` at fixed
/// `q_x`, so interference nodes (lines of constant `q_x`) are not filled in
/// by neighbouring crest values.
pub fn sweep_ring_locus(cfg: &FieldConfig, spec: &LocusScanSpec, opts: &SolverOptions, exec: &Executor) -> Result<LocusScan, SweepError> {
    spec.validate()?;
    cfg.validate().map_err(SolveError::from)?;
    opts.validate()?;
    let qx = spec.qx();
    let centres: Vec<f64> = qx
        .iter()
        .map(|&x| crate::semianalytic::locus_qy(spec.n, cfg, x).ok_or_else(|| SweepError::Spec(format!("q_x = {x} lies outside the {}-photon ring", spec.n))))
        .collect::<Result<_, _>>()?;
    let offsets: Vec<f64> = if spec.n_qy == 1 {
        vec![0.0]
    } else {
        (0..spec.n_qy)
            .map(|k| -spec.qy_half_window + 2.0 * spec.qy_half_window * k as f64 / (spec.n_qy - 1) as f64)
            .collect()
    };
    let points: Vec<Momentum3> = qx
        .iter()
        .zip(&centres)
        .flat_map(|(&x, &c)| offsets.iter().map(move |&o| Momentum3::new(x, (c + o).max(0.0), 0.0)))
        .collect();
    let results: Vec<(f64, PointStatus)> = exec.install(|| points.par_iter().map(|q| PointStatus::classify(&solve_point(*q, cfg, opts))).collect())?;
    let mut qy = Vec::with_capacity(qx.len());
    let mut values = Vec::with_capacity(qx.len());
    let mut status = Vec::with_capacity(qx.len());
    for (k, chunk) in results.chunks(offsets.len()).enumerate() {
        let (best, &(v, _)) = chunk.iter().enumerate().max_by(|a, b| a.1 .0.total_cmp(&b.1 .0)).expect("non-empty window");
        qy.push(points[k * offsets.len() + best].qy);
        values.push(v);
        status.push(chunk.iter().map(|c| c.1).find(|s| s.is_flagged()).unwrap_or(PointStatus::Ok));
    }
    Ok(LocusScan {
        spec: *spec,
        field: *cfg,
        qx,
        qy,
        values,
        status,
    })
}

/// Where and how often a checkpointed sweep persists its progress.
#[derive(Debug, Clone)]
pub struct CheckpointOptions {
    pub path: PathBuf,
    /// Flush after at least this many newly solved points.
    pub every: usize,
    /// Stop (leaving a partial checkpoint) once this many points are done.
    pub stop_after: Option<usize>,
}

impl CheckpointOptions {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        CheckpointOptions {
            path: path.into(),
            every: 256,
            stop_after: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)] // returned once per sweep
pub enum SweepOutcome {
    Complete(SpectrumGrid),
    Partial { done: usize, total: usize },
}

const CHECKPOINT_MAGIC: &[u8; 4] = b"PSCK";
const CHECKPOINT_VERSION: u32 = 1;

/// SHA-256 over the canonical JSON of everything that determines the values.
pub fn spec_hash(cfg: &FieldConfig, spec: &GridSpec, opts: &SolverOptions) -> [u8; 32] {
    #[derive(Serialize)]
    struct Key<'a> {
        engine: &'a str,
        field: &'a FieldConfig,
        grid: &'a GridSpec,
        solver: &'a SolverOptions,
    }
    let key = Key {
        engine: ENGINE_VERSION,
        field: cfg,
        grid: spec,
        solver: opts,
    };
    let bytes = serde_json::to_vec(&key).expect("plain structs serialize");
    Sha256::digest(bytes).into()
}

/// Row-granular progress: rows are the unit of work, so `done` is a prefix.
struct Checkpoint {
    hash: [u8; 32],
    done: Vec<bool>,
    values: Vec<f64>,
    status: Vec<PointStatus>,
}

impl Checkpoint {
    fn write(&self, path: &Path) -> io::Result<()> {
        let mut buf = Vec::with_capacity(48 + self.values.len() * 9);
        buf.extend_from_slice(CHECKPOINT_MAGIC);
        buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        buf.extend_from_slice(&self.hash);
        buf.extend_from_slice(&(self.values.len() as u64).to_le_bytes());
        let mut bitmap = vec![0u8; self.done.len().div_ceil(8)];
        for (k, &d) in self.done.iter().enumerate() {
            if d {
                bitmap[k / 8] |= 1 << (k % 8);
            }
        }
        buf.extend_from_slice(&bitmap);
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        buf.extend(self.status.iter().map(|s| s.code()));
        // write-then-rename so an interrupted flush never truncates the previous checkpoint
        let tmp = path.with_extension("tmp");
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&buf)?;
            f.sync_all()?;
        }
        fs::rename(tmp, path)
    }

    fn read(path: &Path) -> Result<Self, SweepError> {
        let mut buf = Vec::new();
        fs::File::open(path)?.read_to_end(&mut buf)?;
        let bad = |m: &str| SweepError::BadCheckpoint(m.to_string());
        if buf.len() < 48 || &buf[0..4] != CHECKPOINT_MAGIC {
            return Err(bad("missing header"));
        }
        let version = u32::from_le_bytes(buf[4..8].try_into().unwrap());
        if version != CHECKPOINT_VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let hash: [u8; 32] = buf[8..40].try_into().unwrap();
        let n = u64::from_le_bytes(buf[40..48].try_into().unwrap()) as usize;
        let nb = n.div_ceil(8);
        if buf.len() != 48 + nb + 9 * n {
            return Err(bad("length does not match point count"));
        }
        let bitmap = &buf[48..48 + nb];
        let done = (0..n).map(|k| bitmap[k / 8] & (1 << (k % 8)) != 0).collect();
        let vstart = 48 + nb;
        let values = (0..n)
            .map(|k| f64::from_le_bytes(buf[vstart + 8 * k..vstart + 8 * k + 8].try_into().unwrap()))
            .collect();
        let sstart = vstart + 8 * n;
        let status = buf[sstart..]
            .iter()
            .map(|&c| PointStatus::from_code(c).ok_or_else(|| bad("unknown status code")))
            .collect::<Result<_, _>>()?;
        Ok(Checkpoint { hash, done, values, status })
    }
}

/// Grid sweep that persists progress and resumes from an existing checkpoint
/// at `ck.path` when one is present. A checkpoint written for different
/// inputs is rejected with [`SweepError::ChecksumMismatch`].
pub fn sweep_grid_checkpointed(
    cfg: &FieldConfig,
    spec: &GridSpec,
    opts: &SolverOptions,
    exec: &Executor,
    ck: &CheckpointOptions,
) -> Result<SweepOutcome, SweepError> {
    spec.validate()?;
    cfg.validate().map_err(SolveError::from)?;
    opts.validate()?;
    let hash = spec_hash(cfg, spec, opts);
    let total = spec.len();
    let mut state = if ck.path.exists() {
        let existing = Checkpoint::read(&ck.path)?;
        if existing.hash != hash || existing.values.len() != total {
            return Err(SweepError::ChecksumMismatch);
        }
        existing
    } else {
        Checkpoint {
            hash,
            done: vec![false; total],
            values: vec![0.0; total],
            status: vec![PointStatus::Ok; total],
        }
    };

    let n2 = spec.n2;
    let rows_per_flush = ck.every.div_ceil(n2).max(1);
    let mut row = (0..spec.n1).find(|&i| !state.done[i * n2]).unwrap_or(spec.n1);
    while row < spec.n1 {
        let done_points = row * n2;
        if let Some(limit) = ck.stop_after {
            if done_points >= limit {
                state.write(&ck.path)?;
                return Ok(SweepOutcome::Partial { done: done_points, total });
            }
        }
        let mut end = (row + rows_per_flush).min(spec.n1);
        if let Some(limit) = ck.stop_after {
            end = end.min(limit.div_ceil(n2).max(row + 1));
        }
        let span = row * n2..end * n2;
        exec.solve_rows(cfg, spec, opts, row..end, &mut state.values[span.clone()], &mut state.status[span.clone()])?;
        state.done[span].iter_mut().for_each(|d| *d = true);
        state.write(&ck.path)?;
        row = end;
    }
    Ok(SweepOutcome::Complete(SpectrumGrid {
        spec: *spec,
        field: *cfg,
        solver: *opts,
        values: state.values,
        status: state.status,
        provenance: Provenance::current(opts),
    }))
}

/// Resumes (or completes) a checkpointed sweep. On a finished checkpoint this
/// only reads the stored grid.
pub fn checkpoint_resume(
    cfg: &FieldConfig,
    spec: &GridSpec,
    opts: &SolverOptions,
    exec: &Executor,
    path: impl Into<PathBuf>,
) -> Result<SpectrumGrid, SweepError> {
    let ck = CheckpointOptions::new(path);
    match sweep_grid_checkpointed(cfg, spec, opts, exec, &ck)? {
        SweepOutcome::Complete(grid) => Ok(grid),
        SweepOutcome::Partial { .. } => unreachable!("no stop limit was set"),
    }
}
