//! Helpers for the acceptance suite in `tests/acceptance.rs`.

use std::io::Write;

/// Prints the one-line verdict of a criterion. Writes to the stdout handle
/// directly so the line shows in a plain `cargo test` run, where the test
/// harness would otherwise capture it for passing tests.
pub fn report(id: u32, name: &str, pass: bool, details: &str) {
    let line = format!("\ncriterion {id} ({name}): {} -- {details}\n", if pass { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
}

/// Same length and pairwise within `tol` (both sorted ascending).
pub fn close_sets(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

pub fn fmt_list(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Deterministic LCG in [0, 1), so the sampled cases never depend on an RNG crate's version.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn uniform(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lcg_stays_in_range() {
        let mut r = Lcg(1);
        assert!((0..1000).all(|_| (2.0..3.0).contains(&r.range(2.0, 3.0))));
    }

    #[test]
    fn set_comparison() {
        assert!(close_sets(&[0.0, 0.4], &[0.01, 0.39], 0.015));
        assert!(!close_sets(&[0.0, 0.4], &[0.0], 1.0));
        assert_eq!(fmt_list(&[0.5, -0.25]), "[0.5000, -0.2500]");
    }
}
