//! Standard-normal helpers used across the crate.

use statrs::distribution::{Continuous, ContinuousCDF, Normal};

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Standard normal density.
pub fn phi(x: f64) -> f64 {
    std_normal().pdf(x)
}

/// Standard normal CDF.
pub fn cdf(x: f64) -> f64 {
    std_normal().cdf(x)
}

/// Standard normal quantile function.
pub fn inverse_cdf(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}
