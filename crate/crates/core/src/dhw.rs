//! Reduced Dirac-Heisenberg-Wigner system for a spatially homogeneous,
//! time-dependent electric field.
//!
//! The state is the one-particle distribution `f`, an auxiliary nine-vector
//! split into three 3-vectors `w1, w2, w3`, and the co-integrated vector
//! potential `eA` (with `d(eA)/dt = -eE`, `eA(t_start) = 0`). The kinetic
//! momentum is `p = q - eA` and `Omega = sqrt(1 + p^2)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{electric_field, FieldConfig, FieldError, Momentum3};
use crate::ode::{Method, OdeError, OdeSystem, StepControl, Stepper};
use crate::vec3::Vec3;

pub(crate) const DIM: usize = 13;

/// Which outer product the first block of the 9x9 generator represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum H9Reading {
    /// `w1 -> -e p (E.w1) / Omega^2`
    #[default]
    PE,
    /// `w1 -> -e E (p.w1) / Omega^2`; kept for comparison, disagrees with the QVE.
    EP,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DhwState {
    pub f: f64,
    pub w1: Vec3,
    pub w2: Vec3,
    pub w3: Vec3,
    /// `e*A(t)` in units of `m`.
    pub a_pot: Vec3,
}

impl DhwState {
    pub fn vacuum() -> Self {
        Self::default()
    }

    pub(crate) fn to_array(self) -> [f64; DIM] {
        let mut y = [0.0; DIM];
        y[0] = self.f;
        y[1..4].copy_from_slice(&self.w1.to_array());
        y[4..7].copy_from_slice(&self.w2.to_array());
        y[7..10].copy_from_slice(&self.w3.to_array());
        y[10..13].copy_from_slice(&self.a_pot.to_array());
        y
    }

    pub(crate) fn from_array(y: &[f64; DIM]) -> Self {
        DhwState {
            f: y[0],
            w1: Vec3::from_slice(&y[1..4]),
            w2: Vec3::from_slice(&y[4..7]),
            w3: Vec3::from_slice(&y[7..10]),
            a_pot: Vec3::from_slice(&y[10..13]),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KineticMomentum {
    pub p: Vec3,
    pub omega_p: f64,
}

pub fn kinetic_momentum(q: Momentum3, e_a: Vec3) -> KineticMomentum {
    let p = q.as_vec() - e_a;
    KineticMomentum {
        p,
        omega_p: (1.0 + p.norm_sqr()).sqrt(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// The integration window is `[-c tau, c tau]`.
    pub t_span_factor: f64,
    pub max_steps: u64,
    /// Constancy check window in laser periods.
    pub constancy_check_window: f64,
    pub method: Method,
    /// Step for [`Method::Rk4Fixed`].
    pub fixed_step: f64,
    pub h9_reading: H9Reading,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            rel_tol: 1e-7,
            abs_tol: 1e-12,
            t_span_factor: 8.0,
            max_steps: 10_000_000,
            constancy_check_window: 1.0,
            method: Method::Dop853,
            fixed_step: 0.02,
            h9_reading: H9Reading::PE,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("invalid solver options: {0}")]
    Options(String),
    #[error("non-finite momentum")]
    BadMomentum,
    #[error("step limit exceeded ({0} steps)")]
    StepLimitExceeded(u64),
    #[error("non-finite state at t = {0}")]
    NonFinite(f64),
    #[error("the QVE oracle requires linear polarization (delta = 0), got delta = {0}")]
    NotLinearlyPolarized(f64),
}

impl From<OdeError> for SolveError {
    fn from(e: OdeError) -> Self {
        match e {
            OdeError::StepLimitExceeded(n, _) => SolveError::StepLimitExceeded(n),
            OdeError::NonFinite(t) | OdeError::StepSizeUnderflow(t) => SolveError::NonFinite(t),
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(SolveError::Options("tolerances must be positive".into()));
        }
        if !(self.t_span_factor >= 5.0) {
            return Err(SolveError::Options("t_span_factor must be >= 5".into()));
        }
        if self.max_steps == 0 {
            return Err(SolveError::Options("max_steps must be positive".into()));
        }
        if !(self.constancy_check_window > 0.0) {
            return Err(SolveError::Options("constancy window must be positive".into()));
        }
        if self.method == Method::Rk4Fixed && !(self.fixed_step > 0.0) {
            return Err(SolveError::Options("fixed_step must be positive".into()));
        }
        Ok(())
    }

    pub(crate) fn step_control(&self) -> StepControl {
        StepControl {
            method: self.method,
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_steps: self.max_steps,
            max_step: if self.method == Method::Rk4Fixed { self.fixed_step } else { f64::INFINITY },
        }
    }
}

/// Outcome of integrating one momentum point through the pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    /// Reported occupation, clamped to be non-negative.
    pub f_final: f64,
    /// Unclamped value at the end of the window.
    pub f_raw: f64,
    pub n_steps: u64,
    /// `|f(t_end) - f(t_end - window)|`.
    pub constancy_residual: f64,
    /// `f` left `[0, 1]` by more than `10 abs_tol`.
    pub clip_flag: bool,
    pub f_min: f64,
    pub f_max: f64,
}

impl PointResult {
    pub(crate) fn from_trajectory(f_raw: f64, f_mark: f64, f_min: f64, f_max: f64, n_steps: u64, abs_tol: f64) -> Self {
        let slack = 10.0 * abs_tol;
        let clip_flag = f_raw < -slack || f_raw > 1.0 + slack;
        PointResult {
            f_final: f_raw.max(0.0),
            f_raw,
            n_steps,
            constancy_residual: (f_raw - f_mark).abs(),
            clip_flag,
            f_min,
            f_max,
        }
    }
}

/// The DHW right-hand side at fixed canonical momentum.
#[derive(Debug, Clone, Copy)]
pub struct DhwSystem {
    pub q: Momentum3,
    pub cfg: FieldConfig,
    pub reading: H9Reading,
}

impl DhwSystem {
    pub fn new(q: Momentum3, cfg: FieldConfig) -> Self {
        DhwSystem {
            q,
            cfg,
            reading: H9Reading::PE,
        }
    }

    /// Time derivative of the state, closed form.
    pub fn derivative(&self, t: f64, s: &DhwState) -> DhwState {
        let ee = electric_field(&self.cfg, t);
        let KineticMomentum { p, omega_p } = kinetic_momentum(self.q, s.a_pot);
        let om2 = omega_p * omega_p;
        let e_w1 = ee.dot(s.w1);
        let p_e = p.dot(ee);

        let first = match self.reading {
            H9Reading::PE => p * (-e_w1 / om2),
            H9Reading::EP => ee * (-p.dot(s.w1) / om2),
        };
        // G * d(e1)/dt
        let source = ee * (1.0 / omega_p) - p * (p_e / (om2 * omega_p));
        let w1_dot = first - 2.0 * p.cross(s.w2) - 2.0 * s.w3 + source * (2.0 * (1.0 - s.f));
        DhwState {
            f: 0.5 * e_w1 / omega_p,
            w1: w1_dot,
            w2: -2.0 * p.cross(s.w1),
            w3: 2.0 * s.w1 + p * (2.0 * p.dot(s.w1)),
            a_pot: -ee,
        }
    }

    /// Same derivative assembled from the explicit `e1`, `F`, `G` and `H9` matrices.
    pub fn derivative_matrix_form(&self, t: f64, s: &DhwState) -> DhwState {
        let ee = electric_field(&self.cfg, t);
        let KineticMomentum { p, omega_p } = kinetic_momentum(self.q, s.a_pot);
        let om3 = omega_p.powi(3);
        let pv = p.to_array();
        let ev = ee.to_array();
        let y = s.to_array();
        let w9: [f64; 9] = y[1..10].try_into().unwrap();

        // d/dt e1 with e1 = (1/Omega, p/Omega, 0_6) and dp/dt = eE
        let mut e1_dot = [0.0; 10];
        e1_dot[0] = -p.dot(ee) / om3;
        for i in 0..3 {
            e1_dot[1 + i] = ev[i] / omega_p - pv[i] * p.dot(ee) / om3;
        }

        // F = [(-p^T, 0_6); I_9] (10x9)
        let mut fmat = [[0.0; 9]; 10];
        for i in 0..3 {
            fmat[0][i] = -pv[i];
        }
        for i in 0..9 {
            fmat[1 + i][i] = 1.0;
        }
        let mut f_w = [0.0; 10];
        for r in 0..10 {
            f_w[r] = (0..9).map(|c| fmat[r][c] * w9[c]).sum();
        }
        let f_dot = 0.5 * (0..10).map(|r| e1_dot[r] * f_w[r]).sum::<f64>();

        // [p]x as a matrix
        let cross = [[0.0, -pv[2], pv[1]], [pv[2], 0.0, -pv[0]], [-pv[1], pv[0], 0.0]];
        let om2 = omega_p * omega_p;
        let mut h9 = [[0.0; 9]; 9];
        for i in 0..3 {
            for j in 0..3 {
                h9[i][j] = match self.reading {
                    H9Reading::PE => -pv[i] * ev[j] / om2,
                    H9Reading::EP => -ev[i] * pv[j] / om2,
                };
                h9[i][3 + j] = -2.0 * cross[i][j];
                h9[i][6 + j] = if i == j { -2.0 } else { 0.0 };
                h9[3 + i][j] = -2.0 * cross[i][j];
                h9[6 + i][j] = 2.0 * ((if i == j { 1.0 } else { 0.0 }) + pv[i] * pv[j]);
            }
        }
        let mut w_dot = [0.0; 9];
        for r in 0..9 {
            // G = (0 | I_9) picks components 1..10 of d(e1)/dt
            w_dot[r] = (0..9).map(|c| h9[r][c] * w9[c]).sum::<f64>() + 2.0 * (1.0 - s.f) * e1_dot[1 + r];
        }
        DhwState {
            f: f_dot,
            w1: Vec3::from_slice(&w_dot[0..3]),
            w2: Vec3::from_slice(&w_dot[3..6]),
            w3: Vec3::from_slice(&w_dot[6..9]),
            a_pot: -ee,
        }
    }
}

impl OdeSystem<DIM> for DhwSystem {
    #[inline]
    fn rhs(&self, t: f64, y: &[f64; DIM], dy: &mut [f64; DIM]) {
        *dy = self.derivative(t, &DhwState::from_array(y)).to_array();
    }
}

/// Closed-form right-hand side evaluated at `(q, state, t)`.
pub fn dhw_rhs(q: Momentum3, state: &DhwState, t: f64, cfg: &FieldConfig) -> DhwState {
    DhwSystem::new(q, *cfg).derivative(t, state)
}

pub(crate) fn validate_inputs(q: Momentum3, cfg: &FieldConfig, opts: &SolverOptions) -> Result<(), SolveError> {
    cfg.validate()?;
    opts.validate()?;
    if !q.is_finite() {
        return Err(SolveError::BadMomentum);
    }
    Ok(())
}

/// Integration window `(t_start, t_mark, t_end)` where `t_mark` opens the constancy check.
pub(crate) fn window(cfg: &FieldConfig, opts: &SolverOptions) -> (f64, f64, f64) {
    let half = opts.t_span_factor * cfg.tau;
    let mark = (half - opts.constancy_check_window * cfg.period()).max(-half);
    (-half, mark, half)
}

/// The state variable `f` sums over both spin states (its blocking factor is
/// `1 - f`); reported occupations are per spin state, on the QVE scale.
const SPIN_STATES_INV: f64 = 0.5;

/// Integrates one canonical momentum from vacuum through the pulse.
///
/// The returned occupation is per spin state, in `[0, 1]`.
pub fn solve_point(q: Momentum3, cfg: &FieldConfig, opts: &SolverOptions) -> Result<PointResult, SolveError> {
    validate_inputs(q, cfg, opts)?;
    if cfg.e0 == 0.0 {
        return Ok(PointResult::from_trajectory(0.0, 0.0, 0.0, 0.0, 0, opts.abs_tol));
    }
    let sys = DhwSystem {
        q,
        cfg: *cfg,
        reading: opts.h9_reading,
    };
    let (t0, t_mark, t1) = window(cfg, opts);
    let mut stepper = Stepper::new(&sys, t0, DhwState::vacuum().to_array(), opts.step_control());
    let (mut f_min, mut f_max) = (0.0f64, 0.0f64);
    let mut track = |_t: f64, y: &[f64; DIM]| {
        f_min = f_min.min(y[0]);
        f_max = f_max.max(y[0]);
    };
    stepper.advance_to(t_mark, &mut track)?;
    let f_mark = stepper.state()[0];
    stepper.advance_to(t1, &mut track)?;
    let f_raw = stepper.state()[0];
    Ok(PointResult::from_trajectory(
        SPIN_STATES_INV * f_raw,
        SPIN_STATES_INV * f_mark,
        SPIN_STATES_INV * f_min,
        SPIN_STATES_INV * f_max,
        stepper.accepted_steps(),
        opts.abs_tol,
    ))
}

/// Final state at the end of the window, for diagnostics.
pub fn solve_point_state(q: Momentum3, cfg: &FieldConfig, opts: &SolverOptions) -> Result<DhwState, SolveError> {
    validate_inputs(q, cfg, opts)?;
    let sys = DhwSystem {
        q,
        cfg: *cfg,
        reading: opts.h9_reading,
    };
    let (t0, _, t1) = window(cfg, opts);
    let mut stepper = Stepper::new(&sys, t0, DhwState::vacuum().to_array(), opts.step_control());
    stepper.advance_to(t1, |_, _| {})?;
    Ok(DhwState::from_array(stepper.state()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qve::qve_solve_point;
    use rand::{rngs::StdRng, Rng, SeedableRng};

    fn strong_field() -> FieldConfig {
        FieldConfig::new(0.4, 0.4)
    }

    #[test]
    fn kinetic_momentum_examples() {
        let k = kinetic_momentum(Momentum3::ORIGIN, Vec3::ZERO);
        assert_eq!((k.p, k.omega_p), (Vec3::ZERO, 1.0));
        let k = kinetic_momentum(Momentum3::new(0.3, 0.0, 0.0), Vec3::new(0.3, 0.0, 0.0));
        assert_eq!((k.p, k.omega_p), (Vec3::ZERO, 1.0));
        let k = kinetic_momentum(Momentum3::new(0.6, 0.8, 0.0), Vec3::ZERO);
        assert!((k.omega_p - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn vacuum_is_stationary_without_field() {
        let cfg = strong_field();
        let t = 40.0 * cfg.tau; // envelope underflows to zero
        let d = dhw_rhs(Momentum3::new(0.3, -0.2, 0.1), &DhwState::vacuum(), t, &cfg);
        assert_eq!(d, DhwState::default());
    }

    #[test]
    fn source_term_at_rest() {
        let cfg = strong_field();
        let t = 0.3;
        let e = electric_field(&cfg, t);
        let d = dhw_rhs(Momentum3::ORIGIN, &DhwState::vacuum(), t, &cfg);
        assert_eq!(d.f, 0.0);
        assert!((d.w1 - e * 2.0).norm() < 1e-16);
        assert_eq!(d.w2, Vec3::ZERO);
        assert_eq!(d.w3, Vec3::ZERO);
        assert_eq!(d.a_pot, -e);
    }

    fn random_vec(rng: &mut StdRng, scale: f64) -> Vec3 {
        Vec3::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))
    }

    #[test]
    fn matrix_form_matches_closed_form() {
        let mut rng = StdRng::seed_from_u64(7);
        for reading in [H9Reading::PE, H9Reading::EP] {
            for _ in 0..1000 {
                let cfg = FieldConfig::new(rng.gen_range(0.01..1.0), rng.gen_range(0.05..1.0))
                    .with_delta(rng.gen_range(-1.0..1.0))
                    .with_phi(rng.gen_range(0.0..6.3));
                let q = Momentum3::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
                let s = DhwState {
                    f: rng.gen_range(0.0..1.0),
                    w1: random_vec(&mut rng, 1.0),
                    w2: random_vec(&mut rng, 1.0),
                    w3: random_vec(&mut rng, 1.0),
                    a_pot: random_vec(&mut rng, 2.0),
                };
                let t = rng.gen_range(-2.0..2.0) * cfg.tau;
                let sys = DhwSystem { q, cfg, reading };
                let a = sys.derivative(t, &s).to_array();
                let b = sys.derivative_matrix_form(t, &s).to_array();
                for (x, y) in a.iter().zip(&b) {
                    assert!((x - y).abs() <= 1e-13, "{x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn zero_field_gives_exactly_zero() {
        let cfg = FieldConfig::new(0.0, 0.4);
        let r = solve_point(Momentum3::new(0.2, 0.3, 0.0), &cfg, &SolverOptions::default()).unwrap();
        assert_eq!(r.f_final, 0.0);
        assert!(!r.clip_flag);
    }

    #[test]
    fn state_is_twice_the_vlasov_occupation() {
        // tight tolerances: the Vlasov system converges more slowly than the DHW one
        let opts = SolverOptions {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            ..Default::default()
        };
        for (cfg, q) in [
            (strong_field(), Momentum3::new(0.2, 0.3, 0.0)),
            (FieldConfig::new(0.1, 0.4), Momentum3::new(0.2, 0.61, 0.0)),
            (FieldConfig::new(0.5, 0.7), Momentum3::new(0.1, 0.0, 0.2)),
        ] {
            let state = solve_point_state(q, &cfg, &opts).unwrap();
            let qve = qve_solve_point(q, &cfg, &opts).unwrap().f_final;
            assert!((0.5 * state.f - qve).abs() <= 1e-6 * qve, "{} vs {}", state.f, qve);
            let r = solve_point(q, &cfg, &opts).unwrap();
            assert!((r.f_final - 0.5 * state.f).abs() <= 1e-9 * r.f_final);
            assert!(r.constancy_residual <= 10.0 * opts.abs_tol + 1e-6 * r.f_final);
        }
    }

    #[test]
    fn transposed_outer_product_disagrees_with_vlasov() {
        let q = Momentum3::new(0.2, 0.3, 0.0);
        let opts = SolverOptions {
            h9_reading: H9Reading::EP,
            ..Default::default()
        };
        let ep = solve_point(q, &strong_field(), &opts).unwrap().f_final;
        let qve = qve_solve_point(q, &strong_field(), &opts).unwrap().f_final;
        assert!((ep - qve).abs() > 1e-2 * qve);
    }

    #[test]
    fn rejects_bad_inputs() {
        let opts = SolverOptions::default();
        assert!(matches!(
            solve_point(Momentum3::new(f64::NAN, 0.0, 0.0), &strong_field(), &opts),
            Err(SolveError::BadMomentum)
        ));
        let bad = SolverOptions { rel_tol: 0.0, ..opts };
        assert!(solve_point(Momentum3::ORIGIN, &strong_field(), &bad).is_err());
        let tight = SolverOptions { max_steps: 50, ..opts };
        assert!(matches!(
            solve_point(Momentum3::ORIGIN, &strong_field(), &tight),
            Err(SolveError::StepLimitExceeded(_))
        ));
    }

    #[test]
    fn reporting_convention() {
        let r = PointResult::from_trajectory(-5e-11, 0.0, -5e-11, 0.0, 1, 1e-12);
        assert_eq!(r.f_final, 0.0);
        assert!(r.clip_flag);
        let r = PointResult::from_trajectory(-5e-13, 0.0, -5e-13, 0.0, 1, 1e-12);
        assert!(!r.clip_flag);
    }
}
