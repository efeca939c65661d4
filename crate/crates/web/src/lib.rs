//! WebAssembly bindings for the browser demo. The plain-Rust functions carry
//! the logic and are tested natively; the `#[wasm_bindgen]` wrappers only
//! convert errors.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use pairspec::dhw::{solve_point, SolverOptions};
use pairspec::field::{FieldConfig, Momentum3};
use pairspec::semianalytic::{self, EnvelopeVariant, EvaluationMode, SemianalyticConfig, Spin};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest line scan the page may request; each point is a full pulse integration.
pub const MAX_LINE_POINTS: usize = 2001;
/// Largest semianalytic map side.
pub const MAX_MAP_SIDE: usize = 512;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RingRow {
    pub n: u32,
    pub present: bool,
    pub radius: Option<f64>,
    pub node_qx: Vec<f64>,
    pub node_count: usize,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Prediction {
    pub gamma: f64,
    pub mstar: f64,
    pub min_photon_number: u32,
    pub rings: Vec<RingRow>,
}

fn field(e0: f64, omega: f64, delta: f64) -> Result<FieldConfig, String> {
    let cfg = FieldConfig::new(e0, omega).with_delta(delta);
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

/// Ring radii and node positions for `n_min..=n_max`.
pub fn predict(e0: f64, omega: f64, n_min: u32, n_max: u32) -> Result<Prediction, String> {
    if e0 <= 0.0 {
        return Err("e0 must be positive".into());
    }
    if n_min == 0 || n_max < n_min || n_max - n_min > 64 {
        return Err("photon range must satisfy 1 <= n_min <= n_max <= n_min + 64".into());
    }
    let cfg = field(e0, omega, 0.0)?;
    let derived = cfg.derived().map_err(|e| e.to_string())?;
    let rings = (n_min..=n_max)
        .map(|n| {
            let geo = semianalytic::ring_radius(n, &cfg);
            let points = semianalytic::node_positions(n, &cfg, Spin::Fermion).unwrap_or_default();
            RingRow {
                n,
                present: geo.present,
                radius: geo.radius,
                node_qx: semianalytic::node_qx(&points),
                node_count: points.len(),
            }
        })
        .collect();
    Ok(Prediction {
        gamma: derived.gamma,
        mstar: derived.mstar,
        min_photon_number: semianalytic::min_photon_number(&cfg),
        rings,
    })
}

/// Semianalytic spectrum on a `side x side` grid over `[-half_width, half_width]^2`
/// in the `q_x q_y` plane, summed over the open channels up to `n_max`. Row-major
/// with `q_y` descending (row 0 at the top), as an image is drawn.
pub fn semianalytic_map(e0: f64, omega: f64, n_max: u32, half_width: f64, side: usize, bracketed: bool) -> Result<Vec<f64>, String> {
    if !(2..=MAX_MAP_SIDE).contains(&side) {
        return Err(format!("map side must be in 2..={MAX_MAP_SIDE}"));
    }
    if !(half_width > 0.0) {
        return Err("half width must be positive".into());
    }
    let cfg = field(e0, omega, 0.0)?;
    let sconf = SemianalyticConfig {
        envelope_variant: if bracketed { EnvelopeVariant::Bracketed } else { EnvelopeVariant::AsPrinted },
        evaluation_mode: EvaluationMode::RegularizedDelta,
        ..Default::default()
    };
    let n_min = semianalytic::min_photon_number(&cfg);
    let step = 2.0 * half_width / (side - 1) as f64;
    let mut out = Vec::with_capacity(side * side);
    for row in 0..side {
        let qy = half_width - row as f64 * step;
        for col in 0..side {
            let q = Momentum3::new(-half_width + col as f64 * step, qy, 0.0);
            let mut total = 0.0;
            for n in n_min..=n_max.max(n_min) {
                total += semianalytic::fn_value(q, n, &cfg, &sconf).map_err(|e| e.to_string())?;
            }
            out.push(total);
        }
    }
    Ok(out)
}

/// DHW occupation along `q = (qx, qy, 0)` for `qx` evenly spaced in `[qx_min, qx_max]`.
#[allow(clippy::too_many_arguments)]
pub fn line_scan(e0: f64, omega: f64, delta: f64, tau: f64, qy: f64, qx_min: f64, qx_max: f64, n: usize) -> Result<Vec<f64>, String> {
    if !(2..=MAX_LINE_POINTS).contains(&n) {
        return Err(format!("number of points must be in 2..={MAX_LINE_POINTS}"));
    }
    if !(qx_max > qx_min) {
        return Err("qx range is empty".into());
    }
    let cfg = field(e0, omega, delta)?.with_tau(tau);
    cfg.validate().map_err(|e| e.to_string())?;
    let opts = SolverOptions::default();
    (0..n)
        .map(|k| {
            let qx = qx_min + (qx_max - qx_min) * k as f64 / (n - 1) as f64;
            solve_point(Momentum3::new(qx, qy, 0.0), &cfg, &opts)
                .map(|r| r.f_final)
                .map_err(|e| e.to_string())
        })
        .collect()
}

#[wasm_bindgen(js_name = predictRings)]
pub fn predict_rings_js(e0: f64, omega: f64, n_min: u32, n_max: u32) -> Result<String, JsError> {
    let p = predict(e0, omega, n_min, n_max).map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&p).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = semianalyticMap)]
pub fn semianalytic_map_js(e0: f64, omega: f64, n_max: u32, half_width: f64, side: usize, bracketed: bool) -> Result<Vec<f64>, JsError> {
    semianalytic_map(e0, omega, n_max, half_width, side, bracketed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = lineScan)]
#[allow(clippy::too_many_arguments)]
pub fn line_scan_js(e0: f64, omega: f64, delta: f64, tau: f64, qy: f64, qx_min: f64, qx_max: f64, n: usize) -> Result<Vec<f64>, JsError> {
    line_scan(e0, omega, delta, tau, qy, qx_min, qx_max, n).map_err(|e| JsError::new(&e))
}
