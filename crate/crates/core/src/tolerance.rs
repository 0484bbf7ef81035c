//! Residual conventions shared by every check in the crate.
//!
//! Scalar identities are compared with a mixed absolute/relative residual, so
//! a tolerance `tol` accepts `|a - b| <= tol * max(1, |a|, |b|)`. Matrix
//! identities report the max-abs-entry norm, divided by the largest entry
//! involved once that entry exceeds [`MATRIX_SCALE_THRESHOLD`].

/// Entry magnitude above which matrix residuals are reported relative.
pub const MATRIX_SCALE_THRESHOLD: f64 = 1e3;

/// `|a - b| / max(1, |a|, |b|)`.
pub fn mixed(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

/// Mixed residual of a value that should vanish, measured against `scale`.
pub fn mixed_zero(value: f64, scale: f64) -> f64 {
    value.abs() / 1f64.max(scale.abs())
}

/// Matrix residual: absolute while `scale <= 1e3`, relative above.
pub fn matrix(abs: f64, scale: f64) -> f64 {
    if scale > MATRIX_SCALE_THRESHOLD {
        abs / scale
    } else {
        abs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_is_absolute_near_zero_and_relative_far_away() {
        assert_eq!(mixed(0.0, 1e-12), 1e-12);
        assert!((mixed(1e6, 1e6 + 1.0) - 1.0 / (1e6 + 1.0)).abs() < 1e-20);
    }

    #[test]
    fn matrix_switches_to_relative_above_threshold() {
        assert_eq!(matrix(1e-9, 10.0), 1e-9);
        assert!((matrix(1e-6, 1e4) - 1e-10).abs() < 1e-24);
    }
}
