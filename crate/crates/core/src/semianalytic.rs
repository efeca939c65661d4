//! Semianalytic momentum distribution of the n-photon channel.
//!
//! ```text
//! f_n(q) ~ (2 w^2 / pi) w(q) [1 + (-1)^(n+2s) cos(2 pi q_x / w)] delta(2 Omega_rms(q) - n w)
//! w(q)   = exp{ -pi/E0 [g + Q b1 (q_y^2 + q_z^2)] + b2 q_x^2 }
//! Omega_rms(q) = sqrt(q^2 + m*^2)
//! ```
//!
//! with the Popov functions
//! `g(gamma) = 4/pi int_0^1 sqrt(1-u^2) / sqrt(1+(gamma u)^2) du`,
//! `b1 = g + gamma g'/2` and `b2 = -gamma b1'`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{effective_mass, keldysh_gamma, FieldConfig, FieldError, Momentum3};
use crate::quadrature::{integrate, QuadratureError};

/// Absolute accuracy requested from every Popov quadrature.
const QUAD_ABS_TOL: f64 = 1e-13;

/// Relative slack when deciding whether `n w / 2 >= m*`.
const THRESHOLD_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SemiError {
    #[error("the {0}-photon ring is below threshold")]
    RingAbsent(u32),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("invalid semianalytic configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopovCoefficients {
    pub gamma: f64,
    pub g: f64,
    pub b1: f64,
    pub b2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Spin {
    /// s = 0
    Boson,
    /// s = 1/2
    #[default]
    Fermion,
}

impl Spin {
    fn two_s(self) -> u32 {
        match self {
            Spin::Boson => 0,
            Spin::Fermion => 1,
        }
    }
}

/// Placement of the `b2 q_x^2` term in the envelope `w(q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EnvelopeVariant {
    /// `exp{-pi/E0 [g + Q b1 q_perp^2] + b2 q_x^2}`
    #[default]
    AsPrinted,
    /// `exp{-pi/E0 [g + Q b1 q_perp^2 + b2 q_x^2]}`
    Bracketed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EvaluationMode {
    /// Drop the energy delta; the caller places `q` on the ring.
    #[default]
    RingLocus,
    /// Replace the delta by a unit-area Gaussian of standard deviation `delta_reg_width`.
    RegularizedDelta,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SemianalyticConfig {
    pub q_factor: f64,
    pub spin: Spin,
    pub envelope_variant: EnvelopeVariant,
    /// Width of the regularized delta in energy units; `None` means `omega/20`.
    pub delta_reg_width: Option<f64>,
    pub evaluation_mode: EvaluationMode,
}

impl Default for SemianalyticConfig {
    fn default() -> Self {
        SemianalyticConfig {
            q_factor: 0.88,
            spin: Spin::Fermion,
            envelope_variant: EnvelopeVariant::AsPrinted,
            delta_reg_width: None,
            evaluation_mode: EvaluationMode::RingLocus,
        }
    }
}

impl SemianalyticConfig {
    pub fn validate(&self) -> Result<(), SemiError> {
        if !(self.q_factor > 0.0) {
            return Err(SemiError::Config("q_factor must be > 0".into()));
        }
        if let Some(w) = self.delta_reg_width {
            if !(w > 0.0) {
                return Err(SemiError::Config("delta_reg_width must be > 0".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingFeaturePrediction {
    pub n: u32,
    /// `|q|` on the ring; `None` below threshold.
    pub radius: Option<f64>,
    pub present: bool,
}

/// A predicted interference node on a ring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodePoint {
    pub qx: f64,
    pub qy: f64,
}

// integrands in theta with u = sin(theta); the weight cos^2 absorbs sqrt(1-u^2) du
fn popov_integral(gamma: f64, kernel: impl Fn(f64, f64) -> f64) -> Result<f64, QuadratureError> {
    let est = integrate(
        |theta: f64| {
            let (s, c) = theta.sin_cos();
            let u2 = s * s;
            c * c * kernel(u2, 1.0 + gamma * gamma * u2)
        },
        0.0,
        0.5 * PI,
        QUAD_ABS_TOL * PI / 4.0,
        0.0,
    )?;
    Ok(4.0 / PI * est.value)
}

/// `g(gamma)`.
pub fn g_of_gamma(gamma: f64) -> Result<f64, SemiError> {
    check_gamma(gamma)?;
    Ok(popov_integral(gamma, |_, d| 1.0 / d.sqrt())?)
}

/// `dg/dgamma`, from the differentiated integrand.
pub fn g_prime(gamma: f64) -> Result<f64, SemiError> {
    check_gamma(gamma)?;
    Ok(popov_integral(gamma, |u2, d| -gamma * u2 / (d * d.sqrt()))?)
}

/// `d^2 g/dgamma^2`, from the twice-differentiated integrand.
pub fn g_double_prime(gamma: f64) -> Result<f64, SemiError> {
    check_gamma(gamma)?;
    Ok(popov_integral(gamma, |u2, d| {
        let d32 = d * d.sqrt();
        -u2 / d32 + 3.0 * gamma * gamma * u2 * u2 / (d32 * d)
    })?)
}

fn check_gamma(gamma: f64) -> Result<(), SemiError> {
    if gamma.is_finite() && gamma >= 0.0 {
        Ok(())
    } else {
        Err(SemiError::Config(format!("gamma must be finite and >= 0, got {gamma}")))
    }
}

fn compute_coefficients(gamma: f64) -> Result<PopovCoefficients, SemiError> {
    let g = g_of_gamma(gamma)?;
    let g1 = g_prime(gamma)?;
    let g2 = g_double_prime(gamma)?;
    let b1 = g + 0.5 * gamma * g1;
    // b1' = g' + g'/2 + gamma g''/2
    let b1_prime = 1.5 * g1 + 0.5 * gamma * g2;
    Ok(PopovCoefficients {
        gamma,
        g,
        b1,
        b2: -gamma * b1_prime,
    })
}

fn cache() -> &'static Mutex<HashMap<u64, PopovCoefficients>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, PopovCoefficients>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `(gamma, g, b1, b2)`, memoized per exact `gamma`.
pub fn popov_coefficients(gamma: f64) -> Result<PopovCoefficients, SemiError> {
    let key = gamma.to_bits();
    if let Some(c) = cache().lock().expect("coefficient cache poisoned").get(&key) {
        return Ok(*c);
    }
    let c = compute_coefficients(gamma)?;
    cache().lock().expect("coefficient cache poisoned").insert(key, c);
    Ok(c)
}

/// Uncached evaluation, for checking that the cache is transparent.
pub fn popov_coefficients_uncached(gamma: f64) -> Result<PopovCoefficients, SemiError> {
    compute_coefficients(gamma)
}

fn ring_present(n: u32, omega: f64, mstar: f64) -> bool {
    0.5 * n as f64 * omega >= mstar * (1.0 - THRESHOLD_SLACK)
}

/// Geometry of the ring `2 sqrt(q^2 + m*^2) = n w`.
pub fn ring_radius(n: u32, cfg: &FieldConfig) -> RingFeaturePrediction {
    let mstar = effective_mass(cfg);
    let present = n >= 1 && ring_present(n, cfg.omega, mstar);
    let radius = present.then(|| {
        let half = 0.5 * n as f64 * cfg.omega;
        (half * half - mstar * mstar).max(0.0).sqrt()
    });
    RingFeaturePrediction { n, radius, present }
}

/// Smallest photon number with `n w / 2 >= m*`.
pub fn min_photon_number(cfg: &FieldConfig) -> u32 {
    let mstar = effective_mass(cfg);
    let mut n = ((2.0 * mstar / cfg.omega).floor() as u32).max(1);
    while !ring_present(n, cfg.omega, mstar) {
        n += 1;
    }
    // floor can overshoot only through the slack
    while n > 1 && ring_present(n - 1, cfg.omega, mstar) {
        n -= 1;
    }
    n
}

fn parity_sign(n: u32, spin: Spin) -> f64 {
    if (n + spin.two_s()).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `cos(2 pi x)` with the integer part of `x` removed first, so integer and
/// half-integer arguments give exactly `1` and `-1`.
fn cos_two_pi(x: f64) -> f64 {
    let r = x - x.round();
    (2.0 * PI * r).cos()
}

/// `1 + (-1)^(n+2s) cos(2 pi q_x / w)`.
pub fn interference_factor(qx: f64, omega: f64, n: u32, spin: Spin) -> f64 {
    (1.0 + parity_sign(n, spin) * cos_two_pi(qx / omega)).max(0.0)
}

/// The factor with `q_x` replaced by `sqrt(q_x^2 + q_y^2)`. Heuristic for
/// elliptic polarization; only meaningful near the origin.
pub fn interference_factor_planar(qx: f64, qy: f64, omega: f64, n: u32, spin: Spin) -> f64 {
    interference_factor(qx.hypot(qy), omega, n, spin)
}

/// `1 + (-1)^(n+2s) cos(4 q_x / w * atan(gamma))`, the original form of the factor.
pub fn popov_original_factor(qx: f64, omega: f64, gamma: f64, n: u32, spin: Spin) -> f64 {
    1.0 + parity_sign(n, spin) * (4.0 * qx / omega * gamma.atan()).cos()
}

/// Zeros of the interference factor on the `n`-photon ring, as points with
/// `q_z = 0`, sorted by `(q_x, q_y)`. Points with `q_y = 0` appear once.
pub fn node_positions(n: u32, cfg: &FieldConfig, spin: Spin) -> Result<Vec<NodePoint>, SemiError> {
    let radius = ring_radius(n, cfg).radius.ok_or(SemiError::RingAbsent(n))?;
    let offset = if parity_sign(n, spin) > 0.0 { 0.5 } else { 0.0 };
    let k_max = (radius / cfg.omega + 1.0).ceil() as i64;
    let mut points = Vec::new();
    for k in -k_max..=k_max {
        let qx = (k as f64 + offset) * cfg.omega;
        if qx.abs() > radius {
            continue;
        }
        let qy = (radius * radius - qx * qx).max(0.0).sqrt();
        if qy == 0.0 {
            points.push(NodePoint { qx, qy: 0.0 });
        } else {
            points.push(NodePoint { qx, qy: -qy });
            points.push(NodePoint { qx, qy });
        }
    }
    Ok(points)
}

/// Distinct node `q_x` values, ascending.
pub fn node_qx(points: &[NodePoint]) -> Vec<f64> {
    let mut qx: Vec<f64> = points.iter().map(|p| p.qx).collect();
    qx.sort_by(f64::total_cmp);
    qx.dedup();
    qx
}

/// The envelope `w(q)`.
pub fn envelope(q: Momentum3, cfg: &FieldConfig, coeffs: &PopovCoefficients, sconf: &SemianalyticConfig) -> f64 {
    let perp = q.qy * q.qy + q.qz * q.qz;
    let par = q.qx * q.qx;
    let bracket = coeffs.g + sconf.q_factor * coeffs.b1 * perp;
    match sconf.envelope_variant {
        EnvelopeVariant::AsPrinted => (-PI / cfg.e0 * bracket + coeffs.b2 * par).exp(),
        EnvelopeVariant::Bracketed => (-PI / cfg.e0 * (bracket + coeffs.b2 * par)).exp(),
    }
}

/// `sqrt(q^2 + m*^2)`.
pub fn omega_rms(q: Momentum3, cfg: &FieldConfig) -> f64 {
    let m = effective_mass(cfg);
    (q.as_vec().norm_sqr() + m * m).sqrt()
}

/// Semianalytic weight of the `n`-photon channel at `q`.
pub fn fn_value(q: Momentum3, n: u32, cfg: &FieldConfig, sconf: &SemianalyticConfig) -> Result<f64, SemiError> {
    sconf.validate()?;
    let gamma = keldysh_gamma(cfg)?;
    let coeffs = popov_coefficients(gamma)?;
    let delta_factor = match sconf.evaluation_mode {
        EvaluationMode::RingLocus => {
            if !ring_radius(n, cfg).present {
                return Err(SemiError::RingAbsent(n));
            }
            1.0
        }
        EvaluationMode::RegularizedDelta => {
            let sigma = sconf.delta_reg_width.unwrap_or(cfg.omega / 20.0);
            let x = 2.0 * omega_rms(q, cfg) - n as f64 * cfg.omega;
            (-0.5 * (x / sigma).powi(2)).exp() / (sigma * (2.0 * PI).sqrt())
        }
    };
    let prefactor = 2.0 * cfg.omega * cfg.omega / PI;
    Ok(prefactor * envelope(q, cfg, &coeffs, sconf) * interference_factor(q.qx, cfg.omega, n, sconf.spin) * delta_factor)
}

/// Point on the upper half of the `n`-photon ring (`q_y >= 0`, `q_z = 0`) at the given `q_x`.
pub fn ring_point(n: u32, cfg: &FieldConfig, qx: f64) -> Result<Momentum3, SemiError> {
    let r = ring_radius(n, cfg).radius.ok_or(SemiError::RingAbsent(n))?;
    Ok(Momentum3::new(qx, (r * r - qx * qx).max(0.0).sqrt(), 0.0))
}

/// Cycle-averaged kinetic energy `<sqrt(1 + |q - eA(t)|^2)>` in the carrier
/// of constant amplitude `e0`. Unlike the effective mass, this keeps the
/// anisotropy of a linearly polarized field: the resonance loci
/// `2 <Omega>(q) = n w` are stretched along the field axis, and along `q_y`
/// they coincide with the effective-mass circles to leading order.
pub fn quasi_energy(q: Momentum3, cfg: &FieldConfig) -> f64 {
    // periodic integrand: the trapezoid rule converges geometrically
    const N: usize = 256;
    let a = cfg.e0 / (cfg.omega * (1.0 + cfg.delta * cfg.delta).sqrt());
    let perp = 1.0 + q.qz * q.qz;
    let mut sum = 0.0;
    for k in 0..N {
        let s = 2.0 * PI * k as f64 / N as f64;
        let px = q.qx + a * s.sin();
        let py = q.qy - a * cfg.delta * s.cos();
        sum += (perp + px * px + py * py).sqrt();
    }
    sum / N as f64
}

/// `q_y >= 0` on the resonance locus `2 <Omega>(q) = n w` at the given `q_x`
/// (`q_z = 0`), or `None` if the locus does not reach this `q_x`.
pub fn locus_qy(n: u32, cfg: &FieldConfig, qx: f64) -> Option<f64> {
    let target = 0.5 * n as f64 * cfg.omega;
    let excess = |qy: f64| quasi_energy(Momentum3::new(qx, qy, 0.0), cfg) - target;
    if excess(0.0) > 0.0 {
        return None;
    }
    // <Omega> >= |q_y| makes `target` an upper bracket
    let (mut lo, mut hi) = (0.0, target.max(1e-3));
    while excess(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Extent of the resonance locus along `q_x` (its crossing of `q_y = 0`).
pub fn locus_qx_extent(n: u32, cfg: &FieldConfig) -> Option<f64> {
    let target = 0.5 * n as f64 * cfg.omega;
    let excess = |qx: f64| quasi_energy(Momentum3::new(qx, 0.0, 0.0), cfg) - target;
    if excess(0.0) > 0.0 {
        return None;
    }
    let (mut lo, mut hi) = (0.0, target.max(1e-3) + cfg.e0 / cfg.omega);
    while excess(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strong_field() -> FieldConfig {
        FieldConfig::new(0.4, 0.4)
    }

    fn weak_field() -> FieldConfig {
        FieldConfig::new(0.1 * std::f64::consts::SQRT_2, 0.4)
    }

    #[test]
    fn g_at_zero_is_one() {
        assert!((g_of_gamma(0.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(g_of_gamma(4.0).unwrap() < g_of_gamma(2.0).unwrap());
        assert!(g_of_gamma(-1.0).is_err());
    }

    #[test]
    fn small_gamma_expansion() {
        let c = popov_coefficients(0.01).unwrap();
        assert!((c.b1 - (1.0 - 0.01f64.powi(2) / 4.0)).abs() < 1e-5);
        assert!((c.b2 - 0.01f64.powi(2) / 2.0).abs() < 1e-5);
        let c0 = popov_coefficients(0.0).unwrap();
        assert!((c0.b1 - 1.0).abs() < 1e-12);
        assert_eq!(c0.b2, 0.0);
        assert!(popov_coefficients(1.0).unwrap().b1 > 0.0);
    }

    #[test]
    fn cache_is_transparent() {
        for gamma in [0.3, 1.7, 4.0] {
            let a = popov_coefficients(gamma).unwrap();
            let b = popov_coefficients(gamma).unwrap();
            assert_eq!(a, b);
            assert_eq!(a, popov_coefficients_uncached(gamma).unwrap());
        }
    }

    #[test]
    fn ring_geometry() {
        let r6 = ring_radius(6, &weak_field());
        assert!(r6.present);
        assert!((r6.radius.unwrap() - 0.61441).abs() < 1e-5);
        let r8 = ring_radius(8, &strong_field());
        assert!((r8.radius.unwrap() - 1.02956).abs() < 1e-5);
        let r7 = ring_radius(7, &strong_field());
        assert!((r7.radius.unwrap() - 0.67823).abs() < 1e-5);
        let r2 = ring_radius(2, &strong_field());
        assert!(!r2.present);
        assert_eq!(r2.radius, None);
    }

    #[test]
    fn photon_thresholds() {
        assert_eq!(min_photon_number(&strong_field()), 7);
        assert_eq!(min_photon_number(&weak_field()), 6);
        assert_eq!(min_photon_number(&FieldConfig::new(0.0, 0.4)), 5);
        assert_eq!(min_photon_number(&FieldConfig::new(0.01, 3.0)), 1);
    }

    #[test]
    fn interference_zeros() {
        assert_eq!(interference_factor(0.0, 0.4, 8, Spin::Fermion), 0.0);
        assert_eq!(interference_factor(0.2, 0.4, 7, Spin::Fermion), 0.0);
        assert_eq!(interference_factor(0.0, 0.4, 8, Spin::Boson), 2.0);
        assert_eq!(interference_factor(0.0, 0.4, 7, Spin::Fermion), 2.0);
    }

    #[test]
    fn popov_factor_limits() {
        for qx in [-0.4, -0.13, 0.0, 0.21, 0.4] {
            let d = popov_original_factor(qx, 0.4, 1e3, 8, Spin::Fermion) - interference_factor(qx, 0.4, 8, Spin::Fermion);
            assert!(d.abs() <= 3e-3, "{qx}: {d}");
        }
        assert_eq!(popov_original_factor(0.0, 0.4, 2.0, 8, Spin::Fermion), 0.0);
        let c = popov_original_factor(0.4, 0.4, 1.0, 8, Spin::Fermion) - 1.0;
        // -(cos pi) = +1
        assert!((c - 1.0).abs() < 1e-15);
    }

    #[test]
    fn node_positions_match_printed_counts() {
        let n8 = node_positions(8, &strong_field(), Spin::Fermion).unwrap();
        assert_eq!(n8.len(), 10);
        assert_eq!(node_qx(&n8), vec![-0.8, -0.4, 0.0, 0.4, 0.8]);
        let n7 = node_positions(7, &strong_field(), Spin::Fermion).unwrap();
        assert_eq!(n7.len(), 8);
        assert_eq!(node_qx(&n7), vec![-0.6000000000000001, -0.2, 0.2, 0.6000000000000001]);
        let n6 = node_positions(6, &weak_field(), Spin::Fermion).unwrap();
        assert_eq!(n6.len(), 6);
        assert_eq!(node_positions(2, &strong_field(), Spin::Fermion), Err(SemiError::RingAbsent(2)));
    }

    #[test]
    fn fn_value_vanishes_on_nodes() {
        let cfg = FieldConfig::new(0.1, 0.4);
        let sconf = SemianalyticConfig::default();
        for n in [6, 7, 8] {
            for node in node_positions(n, &cfg, Spin::Fermion).unwrap() {
                let q = Momentum3::new(node.qx, node.qy, 0.0);
                assert_eq!(fn_value(q, n, &cfg, &sconf).unwrap(), 0.0);
            }
        }
        assert!(matches!(fn_value(Momentum3::ORIGIN, 2, &cfg, &sconf), Err(SemiError::RingAbsent(2))));
    }

    #[test]
    fn regularized_delta_peaks_on_ring() {
        let cfg = FieldConfig::new(0.1, 0.4);
        let sconf = SemianalyticConfig {
            evaluation_mode: EvaluationMode::RegularizedDelta,
            ..Default::default()
        };
        let on = ring_point(7, &cfg, 0.0).unwrap();
        let off = Momentum3::new(0.0, on.qy + 0.1, 0.0);
        assert!(fn_value(on, 7, &cfg, &sconf).unwrap() > fn_value(off, 7, &cfg, &sconf).unwrap());
    }
}
