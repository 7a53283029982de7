//! Thin wrappers over `libm`.
//!
//! Using `libm` unconditionally (also with `std` enabled) keeps results
//! bit-identical between the `std` and `no_std` builds and across targets,
//! which the reproducibility contract of the CLI depends on.

#![allow(dead_code)]

pub(crate) use libm::{atan, cos, exp, fabs, floor, hypot, log as ln, pow, round, sin, sqrt};

/// Ceiling of a non-negative float as usize (saturating).
pub(crate) fn ceil_to_usize(x: f64) -> usize {
    debug_assert!(x >= 0.0);
    let c = libm::ceil(x);
    if c >= usize::MAX as f64 {
        usize::MAX
    } else {
        c as usize
    }
}

/// Integer power by repeated squaring.
pub(crate) fn powi(x: f64, n: i32) -> f64 {
    let mut base = if n < 0 { 1.0 / x } else { x };
    let mut k = n.unsigned_abs();
    let mut acc = 1.0;
    while k > 0 {
        if k & 1 == 1 {
            acc *= base;
        }
        base *= base;
        k >>= 1;
    }
    acc
}
