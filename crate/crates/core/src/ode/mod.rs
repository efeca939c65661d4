//! Explicit Runge-Kutta integration for small fixed-size systems.
//!
//! Two embedded pairs with PI step-size control (Dormand-Prince 5(4) and
//! Dormand-Prince 8(5,3)) plus a fixed-step classical RK4 for debugging.
//! States are plain `[f64; N]` arrays so the hot loop never allocates.

mod dop853_tableau;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, y: &[f64; N], dy: &mut [f64; N]);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Dopri5,
    #[default]
    Dop853,
    /// Classical RK4 with a fixed step; no error control.
    Rk4Fixed,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step limit of {0} exceeded at t = {1}")]
    StepLimitExceeded(u64, f64),
    #[error("non-finite state at t = {0}")]
    NonFinite(f64),
    #[error("step size underflow at t = {0}")]
    StepSizeUnderflow(f64),
}

#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub method: Method,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: u64,
    /// Step used by [`Method::Rk4Fixed`]; upper bound for the adaptive methods.
    pub max_step: f64,
}

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const PI_BETA: f64 = 0.04;

/// Integration state that can be advanced to successive output times. The
/// step size carries over between calls, so splitting an interval changes
/// only the final (clipped) step.
pub struct Stepper<'a, S, const N: usize> {
    sys: &'a S,
    ctl: StepControl,
    t: f64,
    y: [f64; N],
    dy: [f64; N],
    h: f64,
    err_prev: f64,
    steps: u64,
    rejected: u64,
}

impl<'a, S: OdeSystem<N>, const N: usize> Stepper<'a, S, N> {
    pub fn new(sys: &'a S, t0: f64, y0: [f64; N], ctl: StepControl) -> Self {
        let mut dy = [0.0; N];
        sys.rhs(t0, &y0, &mut dy);
        Stepper {
            sys,
            ctl,
            t: t0,
            y: y0,
            dy,
            h: 0.0,
            err_prev: 1e-4,
            steps: 0,
            rejected: 0,
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> &[f64; N] {
        &self.y
    }

    pub fn accepted_steps(&self) -> u64 {
        self.steps
    }

    pub fn rejected_steps(&self) -> u64 {
        self.rejected
    }

    fn order(&self) -> f64 {
        match self.ctl.method {
            Method::Dopri5 => 5.0,
            Method::Dop853 => 8.0,
            Method::Rk4Fixed => 4.0,
        }
    }

    /// Starting step from the usual two-derivative estimate.
    fn initial_step(&self, span: f64) -> f64 {
        let sc = |i: usize| self.ctl.abs_tol + self.ctl.rel_tol * self.y[i].abs();
        let d0 = rms((0..N).map(|i| self.y[i] / sc(i)));
        let d1 = rms((0..N).map(|i| self.dy[i] / sc(i)));
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span).min(self.ctl.max_step);
        let y1: [f64; N] = std::array::from_fn(|i| self.y[i] + h0 * self.dy[i]);
        let mut dy1 = [0.0; N];
        self.sys.rhs(self.t + h0, &y1, &mut dy1);
        let d2 = rms((0..N).map(|i| (dy1[i] - self.dy[i]) / sc(i))) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(1.0 / self.order())
        };
        (100.0 * h0).min(h1).min(span).min(self.ctl.max_step)
    }

    /// Advances to exactly `t_end`, calling `observe(t, y)` after every accepted step.
    pub fn advance_to<F>(&mut self, t_end: f64, mut observe: F) -> Result<(), OdeError>
    where
        F: FnMut(f64, &[f64; N]),
    {
        if t_end <= self.t {
            return Ok(());
        }
        if self.ctl.method == Method::Rk4Fixed {
            return self.advance_fixed(t_end, observe);
        }
        if self.h <= 0.0 {
            self.h = self.initial_step(t_end - self.t);
        }
        let q = self.order();
        let alpha = 1.0 / q - 0.75 * PI_BETA;
        let mut y_new = [0.0; N];
        let mut dy_new = [0.0; N];
        let mut last_rejected = false;
        while self.t < t_end {
            if self.steps >= self.ctl.max_steps {
                return Err(OdeError::StepLimitExceeded(self.ctl.max_steps, self.t));
            }
            let remaining = t_end - self.t;
            let mut h = self.h.min(self.ctl.max_step);
            let clipped = h >= remaining;
            if clipped {
                h = remaining;
            }
            if h <= 1e-14 * self.t.abs().max(1.0) && !clipped {
                return Err(OdeError::StepSizeUnderflow(self.t));
            }
            let err = match self.ctl.method {
                Method::Dopri5 => dopri5_step(self.sys, self.t, &self.y, &self.dy, h, &self.ctl, &mut y_new, &mut dy_new),
                Method::Dop853 => dop853_step(self.sys, self.t, &self.y, &self.dy, h, &self.ctl, &mut y_new, &mut dy_new),
                Method::Rk4Fixed => unreachable!(),
            };
            if !err.is_finite() {
                return Err(OdeError::NonFinite(self.t));
            }
            if err <= 1.0 {
                let mut fac = if err == 0.0 {
                    FAC_MAX
                } else {
                    SAFETY * err.powf(-alpha) * self.err_prev.powf(PI_BETA)
                };
                fac = fac.clamp(FAC_MIN, FAC_MAX);
                if last_rejected {
                    fac = fac.min(1.0);
                }
                self.t = if clipped { t_end } else { self.t + h };
                self.y = y_new;
                self.dy = dy_new;
                self.steps += 1;
                self.err_prev = err.max(1e-4);
                if !y_new.iter().all(|v| v.is_finite()) {
                    return Err(OdeError::NonFinite(self.t));
                }
                observe(self.t, &self.y);
                // a clipped step says nothing about the natural step length
                if !clipped {
                    self.h = h * fac;
                }
                last_rejected = false;
            } else {
                let fac = (SAFETY * err.powf(-alpha)).max(FAC_MIN);
                self.h = h * fac;
                self.rejected += 1;
                last_rejected = true;
            }
        }
        Ok(())
    }

    fn advance_fixed<F>(&mut self, t_end: f64, mut observe: F) -> Result<(), OdeError>
    where
        F: FnMut(f64, &[f64; N]),
    {
        let span = t_end - self.t;
        let n = (span / self.ctl.max_step).ceil().max(1.0) as u64;
        let h = span / n as f64;
        let t0 = self.t;
        let (mut k1, mut k2, mut k3, mut k4, mut tmp) = ([0.0; N], [0.0; N], [0.0; N], [0.0; N], [0.0; N]);
        for i in 0..n {
            if self.steps >= self.ctl.max_steps {
                return Err(OdeError::StepLimitExceeded(self.ctl.max_steps, self.t));
            }
            let t = t0 + i as f64 * h;
            self.sys.rhs(t, &self.y, &mut k1);
            for j in 0..N {
                tmp[j] = self.y[j] + 0.5 * h * k1[j];
            }
            self.sys.rhs(t + 0.5 * h, &tmp, &mut k2);
            for j in 0..N {
                tmp[j] = self.y[j] + 0.5 * h * k2[j];
            }
            self.sys.rhs(t + 0.5 * h, &tmp, &mut k3);
            for j in 0..N {
                tmp[j] = self.y[j] + h * k3[j];
            }
            self.sys.rhs(t + h, &tmp, &mut k4);
            for j in 0..N {
                self.y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
            self.t = if i + 1 == n { t_end } else { t0 + (i + 1) as f64 * h };
            self.steps += 1;
            if !self.y.iter().all(|v| v.is_finite()) {
                return Err(OdeError::NonFinite(self.t));
            }
            observe(self.t, &self.y);
        }
        self.sys.rhs(self.t, &self.y, &mut self.dy);
        Ok(())
    }
}

fn rms(it: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for v in it {
        s += v * v;
        n += 1;
    }
    (s / n.max(1) as f64).sqrt()
}

#[inline]
fn scale(ctl: &StepControl, a: f64, b: f64) -> f64 {
    ctl.abs_tol + ctl.rel_tol * a.abs().max(b.abs())
}

// Dormand-Prince 5(4)
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[allow(clippy::too_many_arguments)]
fn dopri5_step<S: OdeSystem<N>, const N: usize>(
    sys: &S,
    t: f64,
    y: &[f64; N],
    dy: &[f64; N],
    h: f64,
    ctl: &StepControl,
    y_new: &mut [f64; N],
    dy_new: &mut [f64; N],
) -> f64 {
    let mut k = [[0.0; N]; 7];
    k[0] = *dy;
    let mut tmp = [0.0; N];
    for s in 1..6 {
        for i in 0..N {
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate().take(s) {
                acc += DP_A[s][j] * kj[i];
            }
            tmp[i] = y[i] + h * acc;
        }
        sys.rhs(t + DP_C[s] * h, &tmp, &mut k[s]);
    }
    for i in 0..N {
        let mut acc = 0.0;
        for (j, kj) in k.iter().enumerate().take(6) {
            acc += DP_A[6][j] * kj[i];
        }
        y_new[i] = y[i] + h * acc;
    }
    sys.rhs(t + h, y_new, &mut k[6]);
    *dy_new = k[6];
    let mut sum = 0.0;
    for i in 0..N {
        let mut e = 0.0;
        for (j, kj) in k.iter().enumerate() {
            e += DP_E[j] * kj[i];
        }
        let r = h * e / scale(ctl, y[i], y_new[i]);
        sum += r * r;
    }
    (sum / N as f64).sqrt()
}

#[allow(clippy::too_many_arguments)]
fn dop853_step<S: OdeSystem<N>, const N: usize>(
    sys: &S,
    t: f64,
    y: &[f64; N],
    dy: &[f64; N],
    h: f64,
    ctl: &StepControl,
    y_new: &mut [f64; N],
    dy_new: &mut [f64; N],
) -> f64 {
    use dop853_tableau::{A, B, C, E3, E5, STAGES};
    let mut k = [[0.0; N]; STAGES + 1];
    k[0] = *dy;
    let mut tmp = [0.0; N];
    for s in 1..STAGES {
        for i in 0..N {
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate().take(s) {
                acc += A[s][j] * kj[i];
            }
            tmp[i] = y[i] + h * acc;
        }
        sys.rhs(t + C[s] * h, &tmp, &mut k[s]);
    }
    for i in 0..N {
        let mut acc = 0.0;
        for (j, kj) in k.iter().enumerate().take(STAGES) {
            acc += B[j] * kj[i];
        }
        y_new[i] = y[i] + h * acc;
    }
    sys.rhs(t + h, y_new, &mut k[STAGES]);
    *dy_new = k[STAGES];
    let (mut e5n, mut e3n) = (0.0, 0.0);
    for i in 0..N {
        let sc = scale(ctl, y[i], y_new[i]);
        let (mut e5, mut e3) = (0.0, 0.0);
        for (j, kj) in k.iter().enumerate() {
            e5 += E5[j] * kj[i];
            e3 += E3[j] * kj[i];
        }
        e5n += (e5 / sc).powi(2);
        e3n += (e3 / sc).powi(2);
    }
    if e5n == 0.0 && e3n == 0.0 {
        return 0.0;
    }
    h.abs() * e5n / ((e5n + 0.01 * e3n) * N as f64).sqrt()
}
