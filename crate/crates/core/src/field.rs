//! Natural-unit conventions and the elliptically polarized pulse.
//!
//! Everything is measured in units of the electron mass `m`: momenta as `q/m`,
//! frequencies as `omega/m`, times as `t*m`. Field strengths are expressed as
//! fractions of the critical field `E_cr = m^2/e`, so that `e*E` is numerically
//! equal to the stored field strength and the coupling `e` never appears.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vec3::Vec3;

/// Electron mass, the unit of energy and momentum.
pub const ELECTRON_MASS: f64 = 1.0;

/// Critical (Schwinger) field in volts per centimetre, for reporting only.
pub const CRITICAL_FIELD_V_PER_CM: f64 = 1.32e16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("invalid field configuration: {0}")]
    Invalid(String),
    #[error("Keldysh parameter is undefined for zero field strength")]
    GammaUndefined,
}

/// Parameters of the pulse
/// `E(t) = E0/sqrt(1+delta^2) * exp(-t^2/(2 tau^2)) * (cos(wt+phi), delta sin(wt+phi), 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldConfig {
    /// Peak field strength in units of `E_cr`.
    pub e0: f64,
    /// Carrier angular frequency in units of `m`.
    pub omega: f64,
    /// Envelope duration in units of `1/m`.
    pub tau: f64,
    /// Carrier phase in radians.
    pub phi: f64,
    /// Ellipticity in `[-1, 1]`; 0 is linear, 1 circular.
    pub delta: f64,
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig {
            e0: 0.1,
            omega: 0.4,
            tau: 100.0,
            phi: 0.0,
            delta: 0.0,
        }
    }
}

impl FieldConfig {
    pub fn new(e0: f64, omega: f64) -> Self {
        FieldConfig {
            e0,
            omega,
            ..Default::default()
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = phi;
        self
    }

    /// Checks the parameter ranges. A zero field strength is accepted (the
    /// vacuum case is a useful baseline) but negative values are not.
    pub fn validate(&self) -> Result<(), FieldError> {
        let finite = [self.e0, self.omega, self.tau, self.phi, self.delta].iter().all(|v| v.is_finite());
        if !finite {
            return Err(FieldError::Invalid("non-finite parameter".into()));
        }
        if self.e0 < 0.0 {
            return Err(FieldError::Invalid(format!("e0 must be >= 0, got {}", self.e0)));
        }
        if self.omega <= 0.0 {
            return Err(FieldError::Invalid(format!("omega must be > 0, got {}", self.omega)));
        }
        if self.tau <= 0.0 {
            return Err(FieldError::Invalid(format!("tau must be > 0, got {}", self.tau)));
        }
        if !(-1.0..=1.0).contains(&self.delta) {
            return Err(FieldError::Invalid(format!("delta must lie in [-1, 1], got {}", self.delta)));
        }
        Ok(())
    }

    /// Laser period `2 pi / omega`.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    /// Amplitude after the intensity-preserving normalization.
    #[inline]
    fn amplitude(&self) -> f64 {
        self.e0 / (1.0 + self.delta * self.delta).sqrt()
    }

    pub fn derived(&self) -> Result<DerivedParams, FieldError> {
        Ok(DerivedParams {
            gamma: keldysh_gamma(self)?,
            mstar: effective_mass(self),
        })
    }
}

/// Canonical momentum in units of `m`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Momentum3 {
    pub qx: f64,
    pub qy: f64,
    pub qz: f64,
}

impl Momentum3 {
    pub const ORIGIN: Momentum3 = Momentum3 { qx: 0.0, qy: 0.0, qz: 0.0 };

    pub const fn new(qx: f64, qy: f64, qz: f64) -> Self {
        Momentum3 { qx, qy, qz }
    }

    pub fn as_vec(self) -> Vec3 {
        Vec3::new(self.qx, self.qy, self.qz)
    }

    pub fn is_finite(self) -> bool {
        self.as_vec().is_finite()
    }
}

impl From<Vec3> for Momentum3 {
    fn from(v: Vec3) -> Self {
        Momentum3::new(v.x, v.y, v.z)
    }
}

/// Keldysh parameter and field-dressed mass of a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    pub gamma: f64,
    pub mstar: f64,
}

/// Electric field at time `t`, in units of `E_cr`. Equivalently `e*E` in units of `m^2`.
#[inline]
pub fn electric_field(cfg: &FieldConfig, t: f64) -> Vec3 {
    let envelope = (-t * t / (2.0 * cfg.tau * cfg.tau)).exp();
    let a = cfg.amplitude() * envelope;
    let (s, c) = (cfg.omega * t + cfg.phi).sin_cos();
    Vec3::new(a * c, a * cfg.delta * s, 0.0)
}

/// `gamma = m omega / (e E0)`.
pub fn keldysh_gamma(cfg: &FieldConfig) -> Result<f64, FieldError> {
    if cfg.e0 == 0.0 {
        return Err(FieldError::GammaUndefined);
    }
    Ok(cfg.omega / cfg.e0)
}

/// `m* = m sqrt(1 + e^2 E0^2 / (2 m^2 omega^2))`, independent of the polarization.
pub fn effective_mass(cfg: &FieldConfig) -> f64 {
    let r = cfg.e0 / cfg.omega;
    ELECTRON_MASS * (1.0 + 0.5 * r * r).sqrt()
}

/// Closed form of `-e * integral E dt` over the whole real line, i.e. `e*A(+inf)`
/// when `A(-inf) = 0`. Used to check the co-integrated vector potential.
pub fn vector_potential_tail(cfg: &FieldConfig) -> Vec3 {
    // integral exp(-t^2/2tau^2) e^{i(wt+phi)} dt = tau sqrt(2pi) exp(-w^2 tau^2/2) e^{i phi}
    let gauss = cfg.tau * (2.0 * PI).sqrt() * (-0.5 * (cfg.omega * cfg.tau).powi(2)).exp();
    let a = cfg.amplitude() * gauss;
    Vec3::new(-a * cfg.phi.cos(), -a * cfg.delta * cfg.phi.sin(), 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG3_E0: f64 = 0.1 * std::f64::consts::SQRT_2;

    #[test]
    fn field_at_peak() {
        let cfg = FieldConfig::new(0.1, 0.2);
        assert_eq!(electric_field(&cfg, 0.0), Vec3::new(0.1, 0.0, 0.0));

        let circ = FieldConfig::new(FIG3_E0, 0.4).with_delta(1.0);
        let e = electric_field(&circ, 0.0);
        assert!((e.x - 0.1).abs() < 1e-16);
        assert_eq!(e.y, 0.0);
        assert_eq!(e.z, 0.0);
    }

    #[test]
    fn field_tail_bound() {
        for delta in [0.0, 0.5, 1.0] {
            let cfg = FieldConfig::new(0.3, 0.37).with_delta(delta).with_phi(0.4);
            for t in [-10.0 * cfg.tau, 10.0 * cfg.tau] {
                assert!(electric_field(&cfg, t).norm() <= cfg.e0 * (-50.0f64).exp());
            }
        }
    }

    #[test]
    fn keldysh_values() {
        assert_eq!(keldysh_gamma(&FieldConfig::new(0.1, 0.2)).unwrap(), 2.0);
        assert_eq!(keldysh_gamma(&FieldConfig::new(0.4, 0.4)).unwrap(), 1.0);
        assert_eq!(keldysh_gamma(&FieldConfig::new(1.0, 1.0)).unwrap(), 1.0);
        assert_eq!(keldysh_gamma(&FieldConfig::new(0.0, 1.0)), Err(FieldError::GammaUndefined));
    }

    #[test]
    fn effective_mass_values() {
        assert_eq!(effective_mass(&FieldConfig::new(0.0, 0.3)), 1.0);
        let m3 = effective_mass(&FieldConfig::new(FIG3_E0, 0.4));
        assert!((m3 - (1.0f64 + 0.02 / 0.32).sqrt()).abs() < 1e-15);
        assert!((m3 - 1.030776).abs() < 1e-6);
        let m1f = effective_mass(&FieldConfig::new(0.4, 0.4));
        assert!((m1f - 1.224745).abs() < 1e-6);
    }

    #[test]
    fn vector_potential_tail_cases() {
        let cfg = FieldConfig::new(0.2, 0.4);
        let tail = vector_potential_tail(&cfg);
        // omega*tau = 40: exp(-800) underflows
        assert_eq!(tail.x.abs(), 0.0);
        assert_eq!(tail.y, 0.0);
        assert_eq!(vector_potential_tail(&FieldConfig::new(0.0, 0.4)), Vec3::ZERO);

        let short = FieldConfig::new(0.2, 0.1).with_tau(5.0).with_delta(0.5);
        let tail = vector_potential_tail(&short);
        let expected = -0.2 / 1.25f64.sqrt() * 5.0 * (2.0 * PI).sqrt() * (-0.125f64).exp();
        assert!((tail.x - expected).abs() < 1e-14);
        assert_eq!(tail.y, 0.0);
    }

    #[test]
    fn validation() {
        assert!(FieldConfig::new(0.1, 0.0).validate().is_err());
        assert!(FieldConfig::new(-0.1, 0.2).validate().is_err());
        assert!(FieldConfig::new(0.1, 0.2).with_delta(1.5).validate().is_err());
        assert!(FieldConfig::new(0.1, 0.2).with_tau(0.0).validate().is_err());
        assert!(FieldConfig::new(0.1, 0.2).with_delta(-1.0).validate().is_ok());
    }
}
