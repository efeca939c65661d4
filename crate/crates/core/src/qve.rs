//! Quantum Vlasov equation for a linearly polarized field along x.
//!
//! Standard three-equation form
//!
//! ```text
//! f' = Q u / 2,   u' = Q (1 - 2f) - 2 Omega v,   v' = 2 Omega u,
//! Q = e E_x eps_perp / Omega^2,   Omega^2 = eps_perp^2 + (q_x - eA_x)^2
//! ```
//!
//! It shares nothing with the DHW solver except the field evaluation, which
//! keeps it usable as an independent check.

use crate::dhw::{validate_inputs, window, PointResult, SolveError, SolverOptions};
use crate::field::{electric_field, FieldConfig, Momentum3};
use crate::ode::{OdeSystem, Stepper};

#[derive(Debug, Clone, Copy)]
pub struct QveSystem {
    cfg: FieldConfig,
    qx: f64,
    eps_perp_sq: f64,
}

impl QveSystem {
    pub fn new(q: Momentum3, cfg: FieldConfig) -> Self {
        QveSystem {
            cfg,
            qx: q.qx,
            eps_perp_sq: 1.0 + q.qy * q.qy + q.qz * q.qz,
        }
    }
}

impl OdeSystem<4> for QveSystem {
    #[inline]
    fn rhs(&self, t: f64, y: &[f64; 4], dy: &mut [f64; 4]) {
        let [f, u, v, ea_x] = *y;
        let ex = electric_field(&self.cfg, t).x;
        let p_par = self.qx - ea_x;
        let om2 = self.eps_perp_sq + p_par * p_par;
        let om = om2.sqrt();
        let q_src = ex * self.eps_perp_sq.sqrt() / om2;
        dy[0] = 0.5 * q_src * u;
        dy[1] = q_src * (1.0 - 2.0 * f) - 2.0 * om * v;
        dy[2] = 2.0 * om * u;
        dy[3] = -ex;
    }
}

pub fn qve_solve_point(q: Momentum3, cfg: &FieldConfig, opts: &SolverOptions) -> Result<PointResult, SolveError> {
    if cfg.delta != 0.0 {
        return Err(SolveError::NotLinearlyPolarized(cfg.delta));
    }
    validate_inputs(q, cfg, opts)?;
    if cfg.e0 == 0.0 {
        return Ok(PointResult::from_trajectory(0.0, 0.0, 0.0, 0.0, 0, opts.abs_tol));
    }
    let sys = QveSystem::new(q, *cfg);
    let (t0, t_mark, t1) = window(cfg, opts);
    let mut stepper = Stepper::new(&sys, t0, [0.0; 4], opts.step_control());
    let (mut f_min, mut f_max) = (0.0f64, 0.0f64);
    let mut track = |_t: f64, y: &[f64; 4]| {
        f_min = f_min.min(y[0]);
        f_max = f_max.max(y[0]);
    };
    stepper.advance_to(t_mark, &mut track)?;
    let f_mark = stepper.state()[0];
    stepper.advance_to(t1, &mut track)?;
    let f_raw = stepper.state()[0];
    Ok(PointResult::from_trajectory(
        f_raw,
        f_mark,
        f_min,
        f_max,
        stepper.accepted_steps(),
        opts.abs_tol,
    ))
}

/// Acceptance bounds for DHW/QVE agreement: relative deviation where either
/// value is at least [`SMALL_F`], absolute deviation where both are below it.
pub const ORACLE_MAX_REL: f64 = 1e-2;
pub const ORACLE_MAX_ABS_SMALL: f64 = 1e-9;
pub const SMALL_F: f64 = 1e-7;
const REL_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OracleReport {
    pub n_points: usize,
    /// Largest `|f_dhw - f_qve| / max(f_qve, 1e-10)` over points not both below `SMALL_F`.
    pub max_rel: f64,
    /// Largest `|f_dhw - f_qve|` over points where both are below `SMALL_F`.
    pub max_abs_small: f64,
    /// Largest `|f_dhw - f_qve|` over all points.
    pub max_abs: f64,
    pub worst_point: Momentum3,
    pub pass: bool,
}

/// Compares DHW and QVE occupations point by point.
pub fn compare_pairs(points: &[Momentum3], dhw: &[f64], qve: &[f64]) -> OracleReport {
    let mut rep = OracleReport {
        n_points: points.len(),
        max_rel: 0.0,
        max_abs_small: 0.0,
        max_abs: 0.0,
        worst_point: Momentum3::ORIGIN,
        pass: true,
    };
    for ((q, &a), &b) in points.iter().zip(dhw).zip(qve) {
        let diff = (a - b).abs();
        rep.max_abs = rep.max_abs.max(diff);
        if a < SMALL_F && b < SMALL_F {
            rep.max_abs_small = rep.max_abs_small.max(diff);
        } else {
            let rel = diff / b.max(REL_FLOOR);
            if rel > rep.max_rel {
                rep.max_rel = rel;
                rep.worst_point = *q;
            }
        }
    }
    rep.pass = rep.max_rel <= ORACLE_MAX_REL && rep.max_abs_small <= ORACLE_MAX_ABS_SMALL;
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_elliptic_fields() {
        let cfg = FieldConfig::new(0.4, 0.4).with_delta(0.5);
        let err = qve_solve_point(Momentum3::ORIGIN, &cfg, &SolverOptions::default()).unwrap_err();
        assert_eq!(err, SolveError::NotLinearlyPolarized(0.5));
    }

    #[test]
    fn zero_field_is_vacuum() {
        let r = qve_solve_point(Momentum3::new(0.1, 0.2, 0.3), &FieldConfig::new(0.0, 0.4), &SolverOptions::default()).unwrap();
        assert_eq!(r.f_final, 0.0);
    }

    #[test]
    fn pauli_bound_and_constancy() {
        let opts = SolverOptions::default();
        let r = qve_solve_point(Momentum3::new(0.0, 0.0, 0.0), &FieldConfig::new(1.0, 0.5), &opts).unwrap();
        assert!(r.f_min >= -1e-9 && r.f_max <= 1.0 + 1e-9);
        assert!(r.constancy_residual <= 10.0 * opts.abs_tol + 1e-6 * r.f_final);
    }

    #[test]
    fn comparison_splits_small_and_large_values() {
        let pts = [Momentum3::ORIGIN; 3];
        let rep = compare_pairs(&pts, &[1.0e-3, 5e-9, 0.0], &[1.001e-3, 4.5e-9, 0.0]);
        assert!((rep.max_rel - 1e-3 / 1.001).abs() < 1e-9);
        assert!((rep.max_abs_small - 5e-10).abs() < 1e-20);
        assert!(rep.pass);
        let rep = compare_pairs(&pts[..1], &[2e-7], &[1e-7]);
        assert!(!rep.pass);
        let rep = compare_pairs(&pts[..1], &[5e-8], &[3e-8]);
        assert!(!rep.pass, "absolute bound applies below the split");
    }
}
