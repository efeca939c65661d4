#![allow(dead_code)]

use std::f64::consts::PI;

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    assert!(n.is_multiple_of(2));
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// `(4/pi) int_0^1 sqrt(1-u^2) h(u) du` with `u = 1 - v^2`, which removes
/// the square-root endpoint singularity of the derivative at `u = 1`.
pub fn popov_brute<F: Fn(f64) -> f64>(h: F, nodes: usize) -> f64 {
    let integrand = |v: f64| {
        let u = 1.0 - v * v;
        let s = (v * v * (2.0 - v * v)).sqrt();
        s * h(u) * 2.0 * v
    };
    4.0 / PI * simpson(integrand, 0.0, 1.0, nodes)
}

pub fn g_brute(gamma: f64) -> f64 {
    popov_brute(|u| 1.0 / (1.0 + (gamma * u).powi(2)).sqrt(), 20_000)
}

pub fn g_prime_brute(gamma: f64) -> f64 {
    popov_brute(|u| -gamma * u * u / (1.0 + (gamma * u).powi(2)).powf(1.5), 20_000)
}

pub fn b1_brute(gamma: f64) -> f64 {
    g_brute(gamma) + 0.5 * gamma * g_prime_brute(gamma)
}
