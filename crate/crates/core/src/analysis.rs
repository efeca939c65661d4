//! Quantitative signatures of computed spectra: ring radii, interference
//! nodes, frequency recovery from node spacing, polarization trends and
//! resonance peaks of frequency scans.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{effective_mass, FieldConfig, Momentum3};
use crate::semianalytic::{min_photon_number, omega_rms};
use crate::sweep::{FrequencyCurve, SpectrumGrid};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("grid does not cover the origin or is too small for the requested profile")]
    GridTooSmall,
    #[error("no rings found")]
    NoRingsFound,
    #[error("ring of radius {0} does not fit inside the grid")]
    RingOutsideGrid(f64),
    #[error("need at least two distinct node positions")]
    InsufficientNodes,
    #[error("no resonance peaks found")]
    NoPeaks,
    #[error("profiles differ in length or are empty")]
    ProfileMismatch,
}

/// Bilinear interpolation of the grid at in-plane coordinates `(c1, c2)`.
pub fn interpolate(grid: &SpectrumGrid, c1: f64, c2: f64) -> Option<f64> {
    let s = &grid.spec;
    let x = (c1 - s.min1) / s.step1();
    let y = (c2 - s.min2) / s.step2();
    let eps = 1e-9;
    if x < -eps || y < -eps || x > (s.n1 - 1) as f64 + eps || y > (s.n2 - 1) as f64 + eps {
        return None;
    }
    let x = x.clamp(0.0, (s.n1 - 1) as f64);
    let y = y.clamp(0.0, (s.n2 - 1) as f64);
    let i = (x.floor() as usize).min(s.n1 - 2);
    let j = (y.floor() as usize).min(s.n2 - 2);
    let (tx, ty) = (x - i as f64, y - j as f64);
    let v = grid.get(i, j) * (1.0 - tx) * (1.0 - ty)
        + grid.get(i + 1, j) * tx * (1.0 - ty)
        + grid.get(i, j + 1) * (1.0 - tx) * ty
        + grid.get(i + 1, j + 1) * tx * ty;
    Some(v)
}

/// Radius of the largest origin-centred circle inside the grid.
pub fn inscribed_radius(grid: &SpectrumGrid) -> Option<f64> {
    let s = &grid.spec;
    if s.min1 > 0.0 || s.max1 < 0.0 || s.min2 > 0.0 || s.max2 < 0.0 {
        return None;
    }
    Some((-s.min1).min(s.max1).min(-s.min2).min(s.max2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub radii: Vec<f64>,
    pub mean_f: Vec<f64>,
    pub max_f: Vec<f64>,
}

pub fn radial_profile(grid: &SpectrumGrid, n_radii: usize, n_angles: usize) -> Result<RadialProfile, AnalysisError> {
    let r_max = inscribed_radius(grid).ok_or(AnalysisError::GridTooSmall)?;
    if n_radii < 3 || n_angles < 4 || r_max <= 0.0 {
        return Err(AnalysisError::GridTooSmall);
    }
    let mut radii = Vec::with_capacity(n_radii);
    let mut mean_f = Vec::with_capacity(n_radii);
    let mut max_f = Vec::with_capacity(n_radii);
    for k in 0..n_radii {
        let r = r_max * k as f64 / (n_radii - 1) as f64;
        let (mut sum, mut max) = (0.0, 0.0f64);
        for a in 0..n_angles {
            let th = 2.0 * PI * a as f64 / n_angles as f64;
            let v = interpolate(grid, r * th.cos(), r * th.sin()).unwrap_or(0.0);
            sum += v;
            max = max.max(v);
        }
        radii.push(r);
        mean_f.push(sum / n_angles as f64);
        max_f.push(max);
    }
    Ok(RadialProfile { radii, mean_f, max_f })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingFeature {
    pub radius: f64,
    pub n_assigned: u32,
    pub peak_height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingOptions {
    /// Minimum prominence relative to the global profile maximum.
    pub prominence_rel: f64,
    /// Largest accepted `|2 Omega_rms / w - n|`.
    pub assign_tol: f64,
}

impl Default for RingOptions {
    fn default() -> Self {
        RingOptions {
            prominence_rel: 1e-3,
            assign_tol: 0.25,
        }
    }
}

/// Interior local maxima of `y` with their topographic prominence.
fn local_maxima(y: &[f64]) -> Vec<(usize, f64)> {
    let n = y.len();
    let mut out = Vec::new();
    for k in 1..n.saturating_sub(1) {
        if !(y[k] > y[k - 1] && y[k] >= y[k + 1]) {
            continue;
        }
        let mut left_min = y[k];
        for j in (0..k).rev() {
            if y[j] > y[k] {
                break;
            }
            left_min = left_min.min(y[j]);
        }
        let mut right_min = y[k];
        for &v in &y[k + 1..] {
            if v > y[k] {
                break;
            }
            right_min = right_min.min(v);
        }
        out.push((k, y[k] - left_min.max(right_min)));
    }
    out
}

/// Vertex offset in `[-0.5, 0.5]` of the parabola through three samples.
fn parabolic_offset(a: f64, b: f64, c: f64) -> f64 {
    let den = a - 2.0 * b + c;
    if den == 0.0 {
        0.0
    } else {
        (0.5 * (a - c) / den).clamp(-0.5, 0.5)
    }
}

/// Photon-number assignment `n = round(2 sqrt(r^2 + m*^2) / w)`.
pub fn assign_photon_number(radius: f64, cfg: &FieldConfig) -> (u32, f64) {
    let m = effective_mass(cfg);
    let x = 2.0 * (radius * radius + m * m).sqrt() / cfg.omega;
    let n = x.round().max(1.0);
    (n as u32, (x - n).abs())
}

/// Prominent peaks of the angular-max profile as `(radius, height)`, with
/// parabolic sub-step refinement.
fn profile_peaks(profile: &RadialProfile, prominence_rel: f64) -> Result<Vec<(f64, f64)>, AnalysisError> {
    let y = &profile.max_f;
    let global = y.iter().cloned().fold(0.0, f64::max);
    if global <= 0.0 || y.len() < 3 {
        return Err(AnalysisError::NoRingsFound);
    }
    let dr = profile.radii[1] - profile.radii[0];
    Ok(local_maxima(y)
        .into_iter()
        .filter(|&(_, prom)| prom >= prominence_rel * global)
        .map(|(k, _)| (profile.radii[k] + dr * parabolic_offset(y[k - 1], y[k], y[k + 1]), y[k]))
        .collect())
}

/// Peaks of the angular-maximum profile, assigned to photon channels by
/// their own radius.
pub fn extract_rings(profile: &RadialProfile, cfg: &FieldConfig, opts: &RingOptions) -> Result<Vec<RingFeature>, AnalysisError> {
    let n_min = min_photon_number(cfg);
    let mut rings = Vec::new();
    for (radius, height) in profile_peaks(profile, opts.prominence_rel)? {
        let (n, mismatch) = assign_photon_number(radius, cfg);
        if mismatch > opts.assign_tol || n < n_min {
            continue;
        }
        rings.push(RingFeature {
            radius,
            n_assigned: n,
            peak_height: height,
        });
    }
    if rings.is_empty() {
        return Err(AnalysisError::NoRingsFound);
    }
    Ok(rings)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSet {
    pub ring: RingFeature,
    /// Locus the nodes were sampled on.
    pub ridge: RingRidge,
    /// In-plane coordinates `(c1, c2)` of each node.
    pub node_points: Vec<(f64, f64)>,
    /// Distinct first-axis coordinates, ascending (`q_x` for xy and xz planes).
    pub node_qx: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeOptions {
    pub n_samples: usize,
    /// A minimum is a node when it is at most this fraction of the mean of its neighbouring maxima.
    pub depth: f64,
}

impl Default for NodeOptions {
    fn default() -> Self {
        NodeOptions { n_samples: 1440, depth: 0.1 }
    }
}

/// Minima of `y` at most `depth` times the mean of the maxima reached on
/// either side before the signal drops below the minimum again. With
/// `circular`, indices wrap around.
fn deep_minima(y: &[f64], depth: f64, circular: bool) -> Vec<usize> {
    let n = y.len();
    let at = |k: isize| -> Option<f64> {
        if circular {
            Some(y[k.rem_euclid(n as isize) as usize])
        } else if k < 0 || k >= n as isize {
            None
        } else {
            Some(y[k as usize])
        }
    };
    let reach = if circular { n as isize / 2 } else { n as isize };
    let mut out = Vec::new();
    for k in 0..n as isize {
        let v = y[k as usize];
        let (Some(l), Some(r)) = (at(k - 1), at(k + 1)) else { continue };
        if !(v <= l && v < r) {
            continue;
        }
        let side = |dir: isize| -> f64 {
            let mut m = v;
            for s in 1..=reach {
                match at(k + dir * s) {
                    Some(u) if u >= v => m = m.max(u),
                    _ => break,
                }
            }
            m
        };
        let neighbours = 0.5 * (side(-1) + side(1));
        if neighbours > 0.0 && v <= depth * neighbours {
            out.push(k as usize);
        }
    }
    out
}

/// Keeps the lowest of any minima closer than `min_sep` samples.
fn merge_close(y: &[f64], mut idx: Vec<usize>, min_sep: usize, circular: bool) -> Vec<usize> {
    let n = y.len();
    let dist = |a: usize, b: usize| {
        let d = a.abs_diff(b);
        if circular {
            d.min(n - d)
        } else {
            d
        }
    };
    idx.sort_by(|&a, &b| y[a].total_cmp(&y[b]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for k in idx {
        if kept.iter().all(|&j| dist(j, k) >= min_sep) {
            kept.push(k);
        }
    }
    kept.sort_unstable();
    kept
}

/// Clusters sorted values closer than `tol` and returns the cluster means.
pub fn dedup_positions(mut xs: Vec<f64>, tol: f64) -> Vec<f64> {
    xs.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::new();
    let mut cluster: Vec<f64> = Vec::new();
    for x in xs {
        if let Some(&last) = cluster.last() {
            if x - last > tol {
                out.push(cluster.iter().sum::<f64>() / cluster.len() as f64);
                cluster.clear();
            }
        }
        cluster.push(x);
    }
    if !cluster.is_empty() {
        out.push(cluster.iter().sum::<f64>() / cluster.len() as f64);
    }
    out
}

/// Smooth closed ring locus `r(θ) = a0 + a2 cos 2θ + a4 cos 4θ`. Strong
/// linearly polarized fields stretch rings along the field axis; weak or
/// circular fields give `a2 ≈ a4 ≈ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingRidge {
    pub a0: f64,
    pub a2: f64,
    pub a4: f64,
}

impl RingRidge {
    pub fn circle(radius: f64) -> Self {
        RingRidge { a0: radius, a2: 0.0, a4: 0.0 }
    }

    pub fn radius_at(&self, theta: f64) -> f64 {
        self.a0 + self.a2 * (2.0 * theta).cos() + self.a4 * (4.0 * theta).cos()
    }

    pub fn max_radius(&self) -> f64 {
        self.a0 + self.a2.abs() + self.a4.abs()
    }
}

/// Radial distance between neighbouring photon rings near radius `r`,
/// from `(n w / 2)^2 = r^2 + m*^2`.
pub fn ring_spacing(r: f64, cfg: &FieldConfig) -> f64 {
    let m = effective_mass(cfg);
    let x = 2.0 * (r * r + m * m).sqrt() / cfg.omega;
    x * cfg.omega * cfg.omega / (4.0 * r.max(1e-12))
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(a);
    if d.abs() < 1e-300 {
        return None;
    }
    let mut x = [0.0; 3];
    for (c, xc) in x.iter_mut().enumerate() {
        let mut m = a;
        for r in 0..3 {
            m[r][c] = b[r];
        }
        *xc = det(m) / d;
    }
    Some(x)
}

/// Follows the crest of a ring starting from the circle `r0`: at each angle
/// the radial maximum within `half_window` of the current locus is located,
/// and the locus is refitted (weighted by crest height squared, so nodes
/// barely count) with the window halved on each of three passes.
pub fn trace_ridge(grid: &SpectrumGrid, r0: f64, half_window: f64) -> Result<RingRidge, AnalysisError> {
    let r_lim = inscribed_radius(grid).ok_or(AnalysisError::GridTooSmall)?;
    if !(r0 > 0.0 && r0 <= r_lim) {
        return Err(AnalysisError::RingOutsideGrid(r0));
    }
    const N_ANGLES: usize = 720;
    const N_RADIAL: usize = 81;
    let mut ridge = RingRidge::circle(r0);
    let mut win = half_window.min(0.5 * r0);
    for _ in 0..3 {
        let mut ata = [[0.0; 3]; 3];
        let mut atb = [0.0; 3];
        for a in 0..N_ANGLES {
            let th = 2.0 * PI * a as f64 / N_ANGLES as f64;
            let centre = ridge.radius_at(th);
            let (mut best_r, mut best_v) = (centre, -1.0);
            for k in 0..N_RADIAL {
                let r = centre - win + 2.0 * win * k as f64 / (N_RADIAL - 1) as f64;
                if r <= 0.0 || r > r_lim {
                    continue;
                }
                let v = interpolate(grid, r * th.cos(), r * th.sin()).unwrap_or(0.0);
                if v > best_v {
                    best_v = v;
                    best_r = r;
                }
            }
            let w = best_v.max(0.0).powi(2);
            let basis = [1.0, (2.0 * th).cos(), (4.0 * th).cos()];
            for i in 0..3 {
                atb[i] += w * basis[i] * best_r;
                for j in 0..3 {
                    ata[i][j] += w * basis[i] * basis[j];
                }
            }
        }
        match solve3(ata, atb) {
            Some([a0, a2, a4]) if a0 > 0.0 && (a0 - a2.abs() - a4.abs()) > 0.0 => ridge = RingRidge { a0, a2, a4 },
            _ => return Ok(RingRidge::circle(r0)),
        }
        win *= 0.5;
    }
    Ok(ridge)
}

/// Interference nodes along a ring: the crest is traced from the ring's
/// radius and sampled at `n_samples` angles.
pub fn detect_nodes(grid: &SpectrumGrid, ring: &RingFeature, opts: &NodeOptions) -> Result<NodeSet, AnalysisError> {
    let r = ring.radius;
    let inside = inscribed_radius(grid).ok_or(AnalysisError::RingOutsideGrid(r))?;
    if !(r > 0.0 && r <= inside) {
        return Err(AnalysisError::RingOutsideGrid(r));
    }
    let ridge = trace_ridge(grid, r, 0.4 * ring_spacing(r, &grid.field))?;
    if ridge.max_radius() > inside {
        return Err(AnalysisError::RingOutsideGrid(ridge.max_radius()));
    }
    nodes_on_ridge(grid, ring, ridge, opts)
}

/// Node detection along the circle of the ring's radius, without tracing.
pub fn detect_nodes_circle(grid: &SpectrumGrid, ring: &RingFeature, opts: &NodeOptions) -> Result<NodeSet, AnalysisError> {
    let r = ring.radius;
    let inside = inscribed_radius(grid).ok_or(AnalysisError::RingOutsideGrid(r))?;
    if !(r > 0.0 && r <= inside) {
        return Err(AnalysisError::RingOutsideGrid(r));
    }
    nodes_on_ridge(grid, ring, RingRidge::circle(r), opts)
}

fn nodes_on_ridge(grid: &SpectrumGrid, ring: &RingFeature, ridge: RingRidge, opts: &NodeOptions) -> Result<NodeSet, AnalysisError> {
    let n = opts.n_samples.max(720);
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let th = 2.0 * PI * k as f64 / n as f64;
            let r = ridge.radius_at(th);
            (r * th.cos(), r * th.sin())
        })
        .collect();
    let samples: Vec<f64> = pts
        .iter()
        .map(|&(x, y)| interpolate(grid, x, y).ok_or(AnalysisError::RingOutsideGrid(ridge.max_radius())))
        .collect::<Result<_, _>>()?;
    let spacing = grid.spec.step1().min(grid.spec.step2());
    let sep = ((2.0 * spacing / ridge.a0) / (2.0 * PI / n as f64)).ceil() as usize;
    let minima = merge_close(&samples, deep_minima(&samples, opts.depth, true), sep.max(4), true);
    let node_points: Vec<(f64, f64)> = minima.iter().map(|&k| pts[k]).collect();
    let node_qx = dedup_positions(node_points.iter().map(|p| p.0).collect(), spacing);
    Ok(NodeSet {
        ring: *ring,
        ridge,
        node_points,
        node_qx,
    })
}

/// Deep minima of a sampled 1D profile, at their abscissae.
pub fn profile_nodes(x: &[f64], y: &[f64], depth: f64) -> Result<Vec<f64>, AnalysisError> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(AnalysisError::ProfileMismatch);
    }
    let minima = merge_close(y, deep_minima(y, depth, false), 2, false);
    Ok(minima.into_iter().map(|k| x[k]).collect())
}

/// Node spacing: median of consecutive differences of the sorted node positions.
pub fn recover_frequency(node_qx: &[f64]) -> Result<f64, AnalysisError> {
    let mut xs = node_qx.to_vec();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < 2 {
        return Err(AnalysisError::InsufficientNodes);
    }
    let mut diffs: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    diffs.sort_by(f64::total_cmp);
    let m = diffs.len();
    Ok(if m % 2 == 1 { diffs[m / 2] } else { 0.5 * (diffs[m / 2 - 1] + diffs[m / 2]) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdTrend {
    /// `(delta, smallest ring radius)`, ascending in `delta`.
    pub entries: Vec<(f64, f64)>,
    pub non_increasing: bool,
}

/// Rings of a grid. Candidates are the prominent peaks of the angular-max
/// profile; each is traced along its crest and assigned a photon number
/// from the crest's mean radius, which stays inside the quarter-photon band
/// even when strong fields stretch the ring. Of several candidates with the
/// same photon number the highest is kept.
pub fn grid_rings(grid: &SpectrumGrid, opts: &RingOptions) -> Result<Vec<RingFeature>, AnalysisError> {
    let r_max = inscribed_radius(grid).ok_or(AnalysisError::GridTooSmall)?;
    let step = grid.spec.step1().min(grid.spec.step2());
    let n_radii = ((4.0 * r_max / step).ceil() as usize).max(16) + 1;
    let profile = radial_profile(grid, n_radii, 1440)?;
    let cfg = &grid.field;
    let n_min = min_photon_number(cfg);
    let mut rings: Vec<RingFeature> = Vec::new();
    for (radius, height) in profile_peaks(&profile, opts.prominence_rel)? {
        let ridge = trace_ridge(grid, radius, 0.4 * ring_spacing(radius, cfg))?;
        let (n, mismatch) = assign_photon_number(ridge.a0, cfg);
        if mismatch > opts.assign_tol || n < n_min {
            continue;
        }
        let cand = RingFeature {
            radius,
            n_assigned: n,
            peak_height: height,
        };
        match rings.iter_mut().find(|r| r.n_assigned == n) {
            Some(existing) if existing.peak_height < height => *existing = cand,
            Some(_) => {}
            None => rings.push(cand),
        }
    }
    if rings.is_empty() {
        return Err(AnalysisError::NoRingsFound);
    }
    rings.sort_by(|a, b| a.radius.total_cmp(&b.radius));
    Ok(rings)
}

pub fn threshold_trend(grids: &[(f64, &SpectrumGrid)]) -> Result<ThresholdTrend, AnalysisError> {
    let mut entries = Vec::with_capacity(grids.len());
    for (delta, grid) in grids {
        let rings = grid_rings(grid, &RingOptions::default())?;
        let smallest = rings.iter().map(|r| r.radius).fold(f64::INFINITY, f64::min);
        entries.push((*delta, smallest));
    }
    entries.sort_by(|a, b| a.0.total_cmp(&b.0));
    let non_increasing = entries.windows(2).all(|w| w[1].1 <= w[0].1);
    Ok(ThresholdTrend { entries, non_increasing })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonancePeak {
    pub omega: f64,
    pub n_assigned: u32,
    pub height: f64,
    /// `|2 Omega_rms / w - n|` at the peak.
    pub mismatch: f64,
}

/// Local maxima of a frequency scan, each assigned the photon number that
/// satisfies `n w = 2 Omega_rms(q)` at the peak frequency.
pub fn resonance_peaks(curve: &FrequencyCurve, prominence_rel: f64) -> Result<Vec<ResonancePeak>, AnalysisError> {
    let y = &curve.values;
    let global = y.iter().cloned().fold(0.0, f64::max);
    if global <= 0.0 || y.len() < 3 {
        return Err(AnalysisError::NoPeaks);
    }
    let mut peaks = Vec::new();
    for (k, prom) in local_maxima(y) {
        if prom < prominence_rel * global {
            continue;
        }
        let dw = curve.omegas[k + 1] - curve.omegas[k];
        let omega = curve.omegas[k] + dw * parabolic_offset(y[k - 1], y[k], y[k + 1]);
        let cfg = FieldConfig { omega, ..curve.scan.base };
        let x = 2.0 * omega_rms(curve.scan.q, &cfg) / omega;
        let n = x.round().max(1.0);
        peaks.push(ResonancePeak {
            omega,
            n_assigned: n as u32,
            height: y[k],
            mismatch: (x - n).abs(),
        });
    }
    if peaks.is_empty() {
        return Err(AnalysisError::NoPeaks);
    }
    Ok(peaks)
}

/// Relative L2 distance `|a/max a - b/max b| / |b/max b|` after peak normalization.
pub fn normalized_l2(a: &[f64], b: &[f64]) -> Result<f64, AnalysisError> {
    if a.len() != b.len() || a.is_empty() {
        return Err(AnalysisError::ProfileMismatch);
    }
    let ma = a.iter().cloned().fold(0.0, f64::max);
    let mb = b.iter().cloned().fold(0.0, f64::max);
    if ma <= 0.0 || mb <= 0.0 {
        return Err(AnalysisError::ProfileMismatch);
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        num += (x / ma - y / mb).powi(2);
        den += (y / mb).powi(2);
    }
    Ok((num / den).sqrt())
}

/// Points on the upper half circle of radius `r` with evenly spaced `q_x`.
pub fn upper_half_ring(radius: f64, n_samples: usize) -> Vec<Momentum3> {
    (0..n_samples)
        .map(|k| {
            let qx = -radius + 2.0 * radius * k as f64 / (n_samples - 1) as f64;
            Momentum3::new(qx, (radius * radius - qx * qx).max(0.0).sqrt(), 0.0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semianalytic::{interference_factor, ring_radius, Spin};
    use crate::sweep::{FrequencyScanSpec, GridSpec, Plane, PointStatus};

    fn strong_field() -> FieldConfig {
        FieldConfig::new(0.4, 0.4)
    }

    fn ring_grid(cfg: FieldConfig, n_grid: usize, rings: &[(f64, f64)], nodes: Option<&[u32]>) -> SpectrumGrid {
        let spec = GridSpec::square(Plane::Xy, 1.2, n_grid);
        SpectrumGrid::tabulate(spec, cfg, |q| {
            let r = (q.qx * q.qx + q.qy * q.qy).sqrt();
            rings
                .iter()
                .enumerate()
                .map(|(k, &(r0, h))| {
                    let factor = nodes.map_or(1.0, |ns| interference_factor(q.qx, cfg.omega, ns[k], Spin::Fermion));
                    h * (-(r - r0).powi(2) / (2.0 * 0.02f64.powi(2))).exp() * factor
                })
                .sum()
        })
        .unwrap()
    }

    #[test]
    fn radial_profile_finds_single_ring() {
        let spec = GridSpec::square(Plane::Xy, 1.2, 121);
        let grid = SpectrumGrid::tabulate(spec, strong_field(), |q| {
            let r = (q.qx * q.qx + q.qy * q.qy).sqrt();
            (-(r - 0.6).powi(2) / 0.001).exp()
        })
        .unwrap();
        let p = radial_profile(&grid, 121, 720).unwrap();
        let k = (0..p.max_f.len()).max_by(|&a, &b| p.max_f[a].total_cmp(&p.max_f[b])).unwrap();
        let dr = p.radii[1] - p.radii[0];
        assert!((p.radii[k] - 0.6).abs() <= dr);
    }

    #[test]
    fn rings_are_assigned_their_photon_numbers() {
        let cfg = strong_field();
        let r7 = ring_radius(7, &cfg).radius.unwrap();
        let r8 = ring_radius(8, &cfg).radius.unwrap();
        let grid = ring_grid(cfg, 161, &[(r7, 1.0), (r8, 0.1)], None);
        let step = grid.spec.step1();
        for rings in [grid_rings(&grid, &RingOptions::default()).unwrap(), {
            let p = radial_profile(&grid, 321, 1440).unwrap();
            extract_rings(&p, &cfg, &RingOptions::default()).unwrap()
        }] {
            assert_eq!(rings.iter().map(|r| r.n_assigned).collect::<Vec<_>>(), vec![7, 8]);
            assert!((rings[0].radius - r7).abs() <= step);
            assert!((rings[1].radius - r8).abs() <= step);
        }
    }

    #[test]
    fn off_band_peaks_are_rejected() {
        let cfg = strong_field();
        // halfway between the 7- and 8-photon rings
        let grid = ring_grid(cfg, 121, &[(0.86, 1.0)], None);
        assert_eq!(grid_rings(&grid, &RingOptions::default()), Err(AnalysisError::NoRingsFound));
    }

    #[test]
    fn node_counts_on_fixture() {
        let cfg = strong_field();
        let r7 = ring_radius(7, &cfg).radius.unwrap();
        let r8 = ring_radius(8, &cfg).radius.unwrap();
        let grid = ring_grid(cfg, 161, &[(r7, 1.0), (r8, 0.1)], Some(&[7, 8]));
        let rings = grid_rings(&grid, &RingOptions::default()).unwrap();
        let spacing = grid.spec.step1();
        let expected: [&[f64]; 2] = [&[-0.6, -0.2, 0.2, 0.6], &[-0.8, -0.4, 0.0, 0.4, 0.8]];
        for (ring, want) in rings.iter().zip(expected) {
            let set = detect_nodes(&grid, ring, &NodeOptions::default()).unwrap();
            assert_eq!(set.node_points.len(), 2 * want.len());
            assert_eq!(set.node_qx.len(), want.len());
            for (got, w) in set.node_qx.iter().zip(want) {
                assert!((got - w).abs() <= 0.5 * spacing, "{got} vs {w}");
            }
            assert!((recover_frequency(&set.node_qx).unwrap() - 0.4).abs() <= spacing);
        }
    }

    #[test]
    fn uniform_ring_has_no_nodes() {
        let cfg = FieldConfig::new(0.1 * std::f64::consts::SQRT_2, 0.4).with_delta(1.0);
        let grid = ring_grid(cfg, 121, &[(0.6, 1.0)], None);
        let ring = RingFeature {
            radius: 0.6,
            n_assigned: 6,
            peak_height: 1.0,
        };
        assert!(detect_nodes(&grid, &ring, &NodeOptions::default()).unwrap().node_points.is_empty());
        let outside = RingFeature { radius: 1.5, ..ring };
        assert_eq!(detect_nodes(&grid, &outside, &NodeOptions::default()), Err(AnalysisError::RingOutsideGrid(1.5)));
    }

    #[test]
    fn crest_tracing_follows_elliptic_rings() {
        let cfg = strong_field();
        let spec = GridSpec::square(Plane::Xy, 1.2, 161);
        let grid = SpectrumGrid::tabulate(spec, cfg, |q| {
            let th = q.qy.atan2(q.qx);
            let r0 = 0.75 + 0.05 * (2.0 * th).cos();
            let r = (q.qx * q.qx + q.qy * q.qy).sqrt();
            (-(r - r0).powi(2) / (2.0 * 0.015f64.powi(2))).exp()
        })
        .unwrap();
        let ridge = trace_ridge(&grid, 0.8, 0.12).unwrap();
        assert!((ridge.a0 - 0.75).abs() < 0.005, "{ridge:?}");
        assert!((ridge.a2 - 0.05).abs() < 0.005, "{ridge:?}");
    }

    #[test]
    fn frequency_from_node_spacing() {
        assert_eq!(recover_frequency(&[-0.8, -0.4, 0.0, 0.4, 0.8]).unwrap(), 0.4);
        assert!((recover_frequency(&[-0.6, -0.2, 0.2, 0.6]).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(recover_frequency(&[0.2]), Err(AnalysisError::InsufficientNodes));
    }

    #[test]
    fn threshold_trends() {
        let cfg = FieldConfig::new(0.1 * std::f64::consts::SQRT_2, 0.4);
        let a = ring_grid(cfg, 121, &[(0.628, 1.0)], None);
        let b = ring_grid(cfg.with_delta(1.0), 121, &[(0.568, 1.0)], None);
        let t = threshold_trend(&[(1.0, &b), (0.0, &a)]).unwrap();
        assert_eq!(t.entries[0].0, 0.0);
        assert!(t.entries[1].1 < t.entries[0].1);
        assert!(t.non_increasing);
        let flat = threshold_trend(&[(0.0, &a), (1.0, &a)]).unwrap();
        assert!(flat.non_increasing);
        assert_eq!(threshold_trend(&[(0.0, &a)]).unwrap().entries.len(), 1);
        let rising = threshold_trend(&[(0.0, &b), (1.0, &a)]).unwrap();
        assert!(!rising.non_increasing);
    }

    #[test]
    fn resonance_peaks_on_synthetic_curve() {
        let base = FieldConfig::new(0.1, 0.4);
        let scan = FrequencyScanSpec {
            q: Momentum3::ORIGIN,
            omega_min: 0.3,
            omega_max: 0.5,
            n_omega: 801,
            base,
        };
        let omegas = scan.omegas();
        // resonances where n w = 2 m*(w), n = 5, 6
        let centre = |n: f64| {
            let mut w = 0.4;
            for _ in 0..50 {
                w = 2.0 * effective_mass(&FieldConfig { omega: w, ..base }) / n;
            }
            w
        };
        let (w5, w6) = (centre(5.0), centre(6.0));
        let values: Vec<f64> = omegas
            .iter()
            .map(|w| (-(w - w5).powi(2) / 2e-6).exp() + 0.1 * (-(w - w6).powi(2) / 2e-6).exp())
            .collect();
        let status = vec![PointStatus::Ok; values.len()];
        let curve = FrequencyCurve { scan, omegas, values, status };
        let peaks = resonance_peaks(&curve, 1e-2).unwrap();
        assert_eq!(peaks.iter().map(|p| p.n_assigned).collect::<Vec<_>>(), vec![6, 5]);
        assert!(peaks.iter().all(|p| p.mismatch < 0.05));
        let flat = FrequencyCurve {
            values: vec![0.0; curve.omegas.len()],
            ..curve
        };
        assert_eq!(resonance_peaks(&flat, 1e-2), Err(AnalysisError::NoPeaks));
    }

    #[test]
    fn profile_comparison() {
        let a = [0.0, 1.0, 2.0, 1.0];
        let b = [0.0, 2.0, 4.0, 2.0];
        assert_eq!(normalized_l2(&a, &b).unwrap(), 0.0);
        assert!(normalized_l2(&a, &[1.0, 1.0, 1.0, 1.0]).unwrap() > 0.3);
        assert_eq!(normalized_l2(&a, &b[..2]), Err(AnalysisError::ProfileMismatch));
        let xs: Vec<f64> = (0..41).map(|k| -1.0 + 0.05 * k as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 + (std::f64::consts::PI * x / 0.4 * 2.0).cos()).collect();
        let nodes = profile_nodes(&xs, &ys, 0.1).unwrap();
        // the zeros at the two end samples are not interior minima
        assert_eq!(nodes.len(), 4);
        for (got, want) in nodes.iter().zip([-0.6, -0.2, 0.2, 0.6]) {
            assert!((got - want).abs() < 1e-12);
        }
    }
}
