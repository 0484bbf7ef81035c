//! q-analogs of the special functions used throughout the crate.
//!
//! Two conventions coexist. The "Bytsko" functions [`gamma_q`] and [`psi_q`]
//! are deformed in `q` with the squared base `q^2` inside the products:
//!
//! ```text
//! Gamma_q(x) = q^{x(1-x)/2} (q^{-1} - q)^{1-x} (q^2;q^2)_inf / (q^{2x};q^2)_inf
//! psi_q(z)   = -log(1-q^2) + 2 log(q) sum_{k>=0} q^{2(k+z)} / (1 - q^{2(k+z)}) + (3-2z)/2 log(q)
//! ```
//!
//! The standard functions [`gamma_tilde`] and [`psi_tilde`] take the base
//! `gamma` directly. They are related by
//! `Gamma_q(x) = q^{-(x-2)(x-1)/2} Gamma~_{q^2}(x)` and
//! `psi_q(x) = psi~_{q^2}(x) + (3-2x)/2 log(q)`.
//!
//! Besides the functions this module evaluates two identities on which the
//! spectral results rest: a terminating `3phi2` summation in terms of
//! `psi_q` ([`krattenthaler_residual`]) and the `psi_q` reflection relation
//! ([`reflection_residual`]).

use std::sync::atomic::{AtomicBool, Ordering};

use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::tolerance;

/// Denominator factors smaller than this are treated as poles.
pub const POLE_EPS: f64 = 1e-13;

/// Above this `q` the digamma-type series converge slowly enough to warn.
pub const SLOW_CONVERGENCE_Q: f64 = 0.99;

static SLOW_WARNED: AtomicBool = AtomicBool::new(false);

/// Truncation policy for the infinite products and series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesControl {
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self {
            rel_tol: 1e-14,
            max_terms: 100_000,
        }
    }
}

impl SeriesControl {
    pub fn new(rel_tol: f64, max_terms: usize) -> Result<Self> {
        if rel_tol.is_nan() || rel_tol <= 0.0 {
            return domain(format!("rel_tol must be positive, got {rel_tol}"));
        }
        if max_terms < 1 {
            return domain("max_terms must be at least 1");
        }
        Ok(Self { rel_tol, max_terms })
    }
}

/// Pair of sides of a numerical identity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Identity {
    pub lhs: f64,
    pub rhs: f64,
}

impl Identity {
    pub fn difference(&self) -> f64 {
        self.lhs - self.rhs
    }

    /// Mixed absolute/relative residual, see [`tolerance::mixed`].
    pub fn residual(&self) -> f64 {
        tolerance::mixed(self.lhs, self.rhs)
    }
}

pub(crate) fn check_base(name: &str, base: f64) -> Result<()> {
    if base > 0.0 && base < 1.0 {
        Ok(())
    } else {
        domain(format!("{name} must lie in (0,1), got {base}"))
    }
}

/// `[x] = (q^x - q^{-x}) / (q - q^{-1})` without argument validation.
#[inline]
pub(crate) fn qnum(x: f64, q: f64) -> f64 {
    (q.powf(x) - q.powf(-x)) / (q - q.powf(-1.0))
}

/// The symmetric q-number `[x]`.
pub fn q_number(x: f64, q: f64) -> Result<f64> {
    check_base("q", q)?;
    Ok(qnum(x, q))
}

/// Finite q-Pochhammer symbol `(a; base)_m = prod_{j<m} (1 - a base^j)`.
pub fn q_pochhammer(a: f64, base: f64, m: usize) -> f64 {
    let mut prod = 1.0;
    let mut shifted = a;
    for _ in 0..m {
        prod *= 1.0 - shifted;
        shifted *= base;
    }
    prod
}

/// Pochhammer symbol extended to negative order,
/// `(a; base)_{-n} = 1 / prod_{j=1}^{n} (1 - a base^{-j})`.
pub fn q_pochhammer_signed(a: f64, base: f64, m: i64) -> f64 {
    if m >= 0 {
        q_pochhammer(a, base, m as usize)
    } else {
        let mut prod = 1.0;
        for j in 1..=(-m) {
            prod *= 1.0 - a * base.powi(-(j as i32));
        }
        1.0 / prod
    }
}

/// Infinite q-Pochhammer symbol `(a; base)_inf`.
pub fn q_pochhammer_inf(a: f64, base: f64, ctrl: SeriesControl) -> Result<f64> {
    check_base("base", base)?;
    let mut prod = 1.0;
    let mut shifted = a;
    for k in 0..ctrl.max_terms {
        if shifted.abs() < ctrl.rel_tol * (1.0 - base) {
            return Ok(prod);
        }
        let factor = 1.0 - shifted;
        if factor.abs() < POLE_EPS {
            return Err(Error::Pole(format!(
                "factor {k} of ({a}; {base})_inf vanishes"
            )));
        }
        prod *= factor;
        shifted *= base;
    }
    Err(Error::NonConvergence {
        what: format!("({a}; {base})_inf"),
        terms: ctrl.max_terms,
    })
}

/// q-Gamma function in the symmetric (Bytsko) convention.
pub fn gamma_q(x: f64, q: f64, ctrl: SeriesControl) -> Result<f64> {
    check_base("q", q)?;
    let q2 = q * q;
    let den = q_pochhammer_inf(q.powf(2.0 * x), q2, ctrl)
        .map_err(|e| pole_or(e, format!("Gamma_q has a pole at x = {x}")))?;
    let num = q_pochhammer_inf(q2, q2, ctrl)?;
    Ok(q.powf(0.5 * x * (1.0 - x)) * (1.0 / q - q).powf(1.0 - x) * num / den)
}

/// q-Gamma function in the standard convention, base `gamma`.
pub fn gamma_tilde(z: f64, gamma: f64, ctrl: SeriesControl) -> Result<f64> {
    check_base("gamma", gamma)?;
    let den = q_pochhammer_inf(gamma.powf(z), gamma, ctrl)
        .map_err(|e| pole_or(e, format!("Gamma~ has a pole at z = {z}")))?;
    let num = q_pochhammer_inf(gamma, gamma, ctrl)?;
    Ok((1.0 - gamma).powf(1.0 - z) * num / den)
}

fn pole_or(e: Error, msg: String) -> Error {
    match e {
        Error::Pole(_) => Error::Pole(msg),
        other => other,
    }
}

/// `sum_{k>=0} b^{k+z} / (1 - b^{k+z})`, the series shared by both digammas.
fn lambert_sum(base: f64, z: f64, ctrl: SeriesControl, what: &str) -> Result<f64> {
    if base.sqrt() > SLOW_CONVERGENCE_Q && !SLOW_WARNED.swap(true, Ordering::Relaxed) {
        log::warn!(
            "{what}: q = {} is close to 1, series converge slowly",
            base.sqrt()
        );
    }
    // Consecutive terms shrink by at least `base` once b^{k+z} < 1.
    let tail_factor = base / (1.0 - base);
    let mut sum = 0.0;
    for k in 0..ctrl.max_terms {
        let u = base.powf(k as f64 + z);
        let den = 1.0 - u;
        if den.abs() < POLE_EPS {
            return Err(Error::Pole(format!("{what} has a pole at z = {z}")));
        }
        let term = u / den;
        sum += term;
        if u < 1.0 && term.abs() * tail_factor <= ctrl.rel_tol * sum.abs().max(f64::MIN_POSITIVE) {
            return Ok(sum);
        }
    }
    Err(Error::NonConvergence {
        what: format!("{what}(z = {z})"),
        terms: ctrl.max_terms,
    })
}

/// q-digamma function in the symmetric (Bytsko) convention.
pub fn psi_q(z: f64, q: f64, ctrl: SeriesControl) -> Result<f64> {
    check_base("q", q)?;
    let lq = q.ln();
    let s = lambert_sum(q * q, z, ctrl, "psi_q")?;
    Ok(-(1.0 - q * q).ln() + 2.0 * lq * s + 0.5 * (3.0 - 2.0 * z) * lq)
}

/// `psi_q(y + d) - psi_q(y)` for an integer shift `d`, from the functional
/// equation `psi_q(y+1) - psi_q(y) = -log q (1 + q^{2y}) / (1 - q^{2y})`.
///
/// The finite sum avoids the cancellation between two full series.
pub fn psi_q_difference(y: f64, d: usize, q: f64) -> Result<f64> {
    check_base("q", q)?;
    let lq = q.ln();
    let mut sum = 0.0;
    for i in 0..d {
        let u = (q * q).powf(y + i as f64);
        if (1.0 - u).abs() < POLE_EPS {
            return Err(Error::Pole(format!(
                "psi_q has a pole at z = {}",
                y + i as f64
            )));
        }
        sum += (1.0 + u) / (1.0 - u);
    }
    Ok(-lq * sum)
}

/// `psi_q(y+d) - psi_q(y) - d log q`, with the `d log q` cancelled
/// analytically: `-2 log q sum_{i<d} u_i / (1 - u_i)`, `u_i = q^{2(y+i)}`.
fn psi_q_difference_excess(y: f64, d: usize, q: f64) -> Result<f64> {
    check_base("q", q)?;
    let mut sum = 0.0;
    for i in 0..d {
        let u = (q * q).powf(y + i as f64);
        if (1.0 - u).abs() < POLE_EPS {
            return Err(Error::Pole(format!(
                "psi_q has a pole at z = {}",
                y + i as f64
            )));
        }
        sum += u / (1.0 - u);
    }
    Ok(-2.0 * q.ln() * sum)
}

/// q-digamma function in the standard convention, base `gamma`.
pub fn psi_tilde(z: f64, gamma: f64, ctrl: SeriesControl) -> Result<f64> {
    check_base("gamma", gamma)?;
    let s = lambert_sum(gamma, z, ctrl, "psi~")?;
    Ok(-(1.0 - gamma).ln() + gamma.ln() * s)
}

/// `Gamma_q(x)` against `q^{-(x-2)(x-1)/2} Gamma~_{q^2}(x)`.
pub fn gamma_conversion(x: f64, q: f64, ctrl: SeriesControl) -> Result<Identity> {
    let lhs = gamma_q(x, q, ctrl)?;
    let rhs = q.powf(-0.5 * (x - 2.0) * (x - 1.0)) * gamma_tilde(x, q * q, ctrl)?;
    Ok(Identity { lhs, rhs })
}

/// `psi_q(x)` against `psi~_{q^2}(x) + (3-2x)/2 log(q)`.
pub fn psi_conversion(x: f64, q: f64, ctrl: SeriesControl) -> Result<Identity> {
    let lhs = psi_q(x, q, ctrl)?;
    let rhs = psi_tilde(x, q * q, ctrl)? + 0.5 * (3.0 - 2.0 * x) * q.ln();
    Ok(Identity { lhs, rhs })
}

/// If `p = base^{-n}` for an integer `n >= 0`, the Pochhammer `(p; base)_l`
/// vanishes for every `l > n` and the series stops at order `n`.
fn termination_order(p: f64, base: f64) -> Option<usize> {
    if p <= 0.0 {
        return None;
    }
    let n = -p.ln() / base.ln();
    let rounded = n.round();
    if rounded >= 0.0 && (n - rounded).abs() < 1e-9 {
        Some(rounded as usize)
    } else {
        None
    }
}

/// The basic hypergeometric series
/// `3phi2(a,b,c; d,e; base; z) = sum_l (a)_l (b)_l (c)_l / ((d)_l (e)_l (base)_l) z^l`.
///
/// A numerator parameter equal to `base^{-n}` terminates the sum after the
/// `l = n` term; the vanishing factor is skipped exactly rather than trusted
/// to round to zero. Non-terminating series require `|z| < 1`.
#[allow(clippy::too_many_arguments)]
pub fn phi_3_2(
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    e: f64,
    base: f64,
    z: f64,
    ctrl: SeriesControl,
) -> Result<f64> {
    check_base("base", base)?;
    let last = [a, b, c]
        .iter()
        .filter_map(|&p| termination_order(p, base))
        .min();
    if last.is_none() && z.abs() >= 1.0 {
        return domain(format!("non-terminating 3phi2 needs |z| < 1, got z = {z}"));
    }
    let limit = last.unwrap_or(ctrl.max_terms);
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut power = 1.0; // base^l
    for l in 0..limit {
        let den = (1.0 - d * power) * (1.0 - e * power) * (1.0 - base * power);
        if (1.0 - d * power).abs() < POLE_EPS || (1.0 - e * power).abs() < POLE_EPS {
            return Err(Error::Pole(format!(
                "denominator Pochhammer of 3phi2 vanishes at order {}",
                l + 1
            )));
        }
        let ratio = (1.0 - a * power) * (1.0 - b * power) * (1.0 - c * power) / den * z;
        term *= ratio;
        sum += term;
        power *= base;
        // The term ratio tends to z; bound the tail by the larger of the two.
        let r = ratio.abs().max(z.abs());
        if last.is_none()
            && r < 1.0
            && term.abs() * r / (1.0 - r) <= ctrl.rel_tol * sum.abs().max(f64::MIN_POSITIVE)
        {
            return Ok(sum);
        }
    }
    if last.is_some() {
        Ok(sum)
    } else {
        Err(Error::NonConvergence {
            what: "3phi2".into(),
            terms: ctrl.max_terms,
        })
    }
}

/// Both sides of
/// `3phi2(q^2, q^2, q^{2(a+1)}; q^4, q^{2(b+1)}; q^2; q^{2(b-a)})
///   = (1-q^{-2b})/(1-q^{-2a}) (1-q^2)/(2 log q) (psi_q(b-a) - psi_q(b) - a log q)`.
///
/// For integers `a < 0 < b` the series is summed exactly and the digamma
/// difference is telescoped as in [`psi_q_difference`].
pub fn krattenthaler_residual(a: f64, b: f64, q: f64, ctrl: SeriesControl) -> Result<Identity> {
    check_base("q", q)?;
    if a == 0.0 {
        return domain("krattenthaler identity is singular at a = 0");
    }
    let q2 = q * q;
    let integral = |x: f64| x == x.round() && x.abs() < 1e6;
    let lhs = if a < 0.0 && integral(a) && integral(b) && b > 0.0 {
        krattenthaler_lhs_exact(a as i64, b as i64, q)?
    } else {
        phi_3_2(
            q2,
            q2,
            q.powf(2.0 * (a + 1.0)),
            q2 * q2,
            q.powf(2.0 * (b + 1.0)),
            q2,
            q.powf(2.0 * (b - a)),
            ctrl,
        )?
    };
    let lq = q.ln();
    let shift = -a;
    let bracket = if shift > 0.0 && (shift - shift.round()).abs() < 1e-12 {
        psi_q_difference_excess(b, shift.round() as usize, q)?
    } else {
        psi_q(b - a, q, ctrl)? - psi_q(b, q, ctrl)? - a * lq
    };
    let rhs =
        (1.0 - q.powf(-2.0 * b)) / (1.0 - q.powf(-2.0 * a)) * (1.0 - q2) / (2.0 * lq) * bracket;
    Ok(Identity { lhs, rhs })
}

/// Terminating left side for integers `a < 0 < b`, summed exactly in
/// rationals on the binary value of `q`. The terms alternate and are far
/// larger than the sum at small `q`.
fn krattenthaler_lhs_exact(a: i64, b: i64, q: f64) -> Result<f64> {
    let q = BigRational::from_float(q).expect("q is finite");
    let one = BigRational::one();
    let pw = |e: i64| q.pow(e as i32);
    let mut term = one.clone();
    let mut sum = one.clone();
    for l in 0..-a {
        let num = (&one - pw(2 + 2 * l)).pow(2) * (&one - pw(2 * (a + 1) + 2 * l));
        let den =
            (&one - pw(4 + 2 * l)) * (&one - pw(2 * (b + 1) + 2 * l)) * (&one - pw(2 + 2 * l));
        term = term * num / den * pw(2 * (b - a));
        sum += &term;
    }
    sum.to_f64()
        .ok_or_else(|| Error::Domain("3phi2 sum is not representable as f64".into()))
}

/// Both sides of `psi_q(1/2+x) - psi_q(1/2-x) = psi_q(1/2+x+k) - psi_q(1/2-x-k)`.
pub fn reflection_residual(x: f64, k: i64, q: f64, ctrl: SeriesControl) -> Result<Identity> {
    let k = k as f64;
    let lhs = psi_q(0.5 + x, q, ctrl)? - psi_q(0.5 - x, q, ctrl)?;
    let rhs = psi_q(0.5 + x + k, q, ctrl)? - psi_q(0.5 - x - k, q, ctrl)?;
    Ok(Identity { lhs, rhs })
}

#[cfg(test)]
mod tests {
    use super::*;

    const C: SeriesControl = SeriesControl {
        rel_tol: 1e-14,
        max_terms: 100_000,
    };

    #[test]
    fn shifted_psi_difference_matches_series() {
        for &(y, d, q) in &[
            (0.5, 1usize, 0.6),
            (2.0, 3, 0.3),
            (1.5, 6, 0.9),
            (3.0, 0, 0.5),
        ] {
            let series = psi_q(y + d as f64, q, C).unwrap() - psi_q(y, q, C).unwrap();
            let finite = psi_q_difference(y, d, q).unwrap();
            assert!(
                (series - finite).abs() < 1e-11,
                "{y} {d} {q}: {series} {finite}"
            );
        }
        assert!(matches!(
            psi_q_difference(-1.0, 2, 0.5),
            Err(Error::Pole(_))
        ));
    }

    #[test]
    fn q_number_values() {
        assert_eq!(q_number(0.0, 0.5).unwrap(), 0.0);
        assert_eq!(q_number(1.0, 0.5).unwrap(), 1.0);
        assert!((q_number(2.0, 0.5).unwrap() - 2.5).abs() < 1e-15);
        assert!((q_number(-1.3, 0.7).unwrap() + q_number(1.3, 0.7).unwrap()).abs() < 1e-15);
        assert!(matches!(q_number(1.0, 1.0), Err(Error::Domain(_))));
        assert!(q_number(1.0, 0.0).is_err());
    }

    #[test]
    fn pochhammer_values() {
        assert_eq!(q_pochhammer(0.7, 0.3, 0), 1.0);
        assert!((q_pochhammer(0.5, 0.25, 2) - 0.4375).abs() < 1e-15);
        assert_eq!(q_pochhammer(1.0, 0.3, 3), 0.0);
    }

    #[test]
    fn signed_pochhammer_extends_the_split_rule() {
        // (a;b)_{-1} (a b^{-1}; b)_1 = (a;b)_0
        let (a, b) = (0.4, 0.6);
        let lhs = q_pochhammer_signed(a, b, -1) * q_pochhammer(a / b, b, 1);
        assert!((lhs - 1.0).abs() < 1e-15);
    }

    #[test]
    fn infinite_pochhammer() {
        assert_eq!(q_pochhammer_inf(0.0, 0.5, C).unwrap(), 1.0);
        let finite = q_pochhammer(0.5, 0.5, 60);
        assert!((q_pochhammer_inf(0.5, 0.5, C).unwrap() - finite).abs() < 1e-14);
        let v = q_pochhammer_inf(0.9, 0.9, C).unwrap();
        let finite = q_pochhammer(0.9, 0.9, 2000);
        assert!(v > 0.0 && (v - finite).abs() < 1e-14 * finite.max(1e-300) + 1e-16);
        assert!(matches!(q_pochhammer_inf(1.0, 0.5, C), Err(Error::Pole(_))));
        let tiny = SeriesControl::new(1e-14, 3).unwrap();
        assert!(matches!(
            q_pochhammer_inf(0.5, 0.9, tiny),
            Err(Error::NonConvergence { .. })
        ));
    }

    #[test]
    fn gamma_q_values() {
        assert!((gamma_q(1.0, 0.5, C).unwrap() - 1.0).abs() < 1e-14);
        assert!((gamma_q(2.0, 0.5, C).unwrap() - 1.0).abs() < 1e-14);
        // Direct product evaluation at x = 3: the ratio of infinite products
        // collapses to (1-q^2)(1-q^4).
        let q: f64 = 0.6;
        let direct = q.powf(-3.0) * (1.0 / q - q).powi(-2) * (1.0 - q * q) * (1.0 - q.powi(4));
        assert!((gamma_q(3.0, q, C).unwrap() - direct).abs() < 1e-13);
        assert!(matches!(gamma_q(0.0, 0.5, C), Err(Error::Pole(_))));
        assert!(matches!(gamma_q(-2.0, 0.5, C), Err(Error::Pole(_))));
        assert_eq!(gamma_tilde(1.0, 0.3, C).unwrap(), 1.0);
    }

    #[test]
    fn gamma_recursion_from_products() {
        // Gamma_q(x+1) = [x] Gamma_q(x) in the symmetric convention.
        for &q in &[0.3, 0.6, 0.9] {
            for &x in &[0.4, 1.3, 2.7] {
                let lhs = gamma_q(x + 1.0, q, C).unwrap();
                let rhs = qnum(x, q) * gamma_q(x, q, C).unwrap();
                assert!(tolerance::mixed(lhs, rhs) < 1e-12, "q={q} x={x}");
            }
        }
    }

    #[test]
    fn psi_is_the_log_derivative_of_gamma() {
        for &q in &[0.3, 0.6, 0.9] {
            for &x in &[0.7, 1.5, 3.2] {
                let h = 1e-5;
                let fd = (gamma_q(x + h, q, C).unwrap().ln() - gamma_q(x - h, q, C).unwrap().ln())
                    / (2.0 * h);
                assert!((psi_q(x, q, C).unwrap() - fd).abs() < 1e-7, "q={q} x={x}");
            }
        }
    }

    #[test]
    fn psi_alpha_plus_consistency() {
        // (psi_q(1+2s) - psi_q(2s) + log q) / (-2 q^{4s} log q) = 1/(1-q^{4s})
        let (q, two_s) = (0.6f64, 1.0);
        let lq = q.ln();
        let v = (psi_q(1.0 + two_s, q, C).unwrap() - psi_q(two_s, q, C).unwrap() + lq)
            / (-2.0 * q.powf(2.0 * two_s) * lq);
        assert!((v - 1.5625).abs() < 1e-12);
    }

    #[test]
    fn convention_conversions() {
        let id = psi_conversion(1.7, 0.55, C).unwrap();
        assert!(id.difference().abs() < 1e-12);
        let id = gamma_conversion(2.3, 0.7, C).unwrap();
        assert!(id.residual() < 1e-12);
        let p: Vec<f64> = [0.5, 1.0, 2.0]
            .iter()
            .map(|&z| psi_tilde(z, 0.49, C).unwrap())
            .collect();
        assert!(p[0] < p[1] && p[1] < p[2]);
    }

    #[test]
    fn psi_pole_and_negative_arguments() {
        assert!(matches!(psi_q(0.0, 0.5, C), Err(Error::Pole(_))));
        assert!(matches!(psi_q(-3.0, 0.5, C), Err(Error::Pole(_))));
        assert!(psi_q(-2.7, 0.5, C).unwrap().is_finite());
    }

    #[test]
    fn phi_3_2_basics() {
        assert_eq!(phi_3_2(0.3, 0.4, 0.5, 0.2, 0.1, 0.5, 0.0, C).unwrap(), 1.0);
        // c = base^{-2}: exactly three terms survive.
        let base: f64 = 0.36;
        let (a, b, c, d, e, z): (f64, f64, f64, f64, f64, f64) =
            (base, base, base.powi(-2), base * base, 0.1, 0.7);
        let brute: f64 = (0..=2)
            .map(|l| {
                q_pochhammer(a, base, l) * q_pochhammer(b, base, l) * q_pochhammer(c, base, l)
                    / (q_pochhammer(d, base, l)
                        * q_pochhammer(e, base, l)
                        * q_pochhammer(base, base, l))
                    * z.powi(l as i32)
            })
            .sum();
        assert!((phi_3_2(a, b, c, d, e, base, z, C).unwrap() - brute).abs() < 1e-14);
        assert!(matches!(
            phi_3_2(0.3, 0.4, 0.5, 0.2, 0.1, 0.5, 1.5, C),
            Err(Error::Domain(_))
        ));
        // d = base^{-1}: (d;base)_2 vanishes before any termination.
        assert!(matches!(
            phi_3_2(0.3, 0.4, 0.5, 1.0 / 0.5, 0.1, 0.5, 0.5, C),
            Err(Error::Pole(_))
        ));
    }

    #[test]
    fn phi_3_2_non_terminating_matches_brute_force() {
        let (a, b, c, d, e, base, z): (f64, f64, f64, f64, f64, f64, f64) =
            (0.3, 0.2, 0.6, 0.5, 0.7, 0.4, 0.8);
        let brute: f64 = (0..400)
            .map(|l| {
                q_pochhammer(a, base, l) * q_pochhammer(b, base, l) * q_pochhammer(c, base, l)
                    / (q_pochhammer(d, base, l)
                        * q_pochhammer(e, base, l)
                        * q_pochhammer(base, base, l))
                    * z.powi(l as i32)
            })
            .sum();
        assert!(tolerance::mixed(phi_3_2(a, b, c, d, e, base, z, C).unwrap(), brute) < 1e-13);
    }

    #[test]
    fn krattenthaler_instances() {
        // a = k - j = -2, b = k + 2s = 1 at q = 0.6
        let id = krattenthaler_residual(-2.0, 1.0, 0.6, C).unwrap();
        assert!(id.residual() < 1e-10, "{id:?}");
        let id = krattenthaler_residual(-1.0, 2.0, 0.5, C).unwrap();
        assert!(id.residual() < 1e-10, "{id:?}");
        assert!((id.lhs - 1.0).abs() < 1e-15);
        let tight = SeriesControl::new(1e-16, 100_000).unwrap();
        let again = krattenthaler_residual(-2.0, 1.0, 0.6, tight).unwrap();
        assert!(
            (again.difference()
                - krattenthaler_residual(-2.0, 1.0, 0.6, C)
                    .unwrap()
                    .difference())
            .abs()
                < 1e-13
        );
        assert!(krattenthaler_residual(0.0, 1.0, 0.5, C).is_err());
    }

    #[test]
    fn reflection_instances() {
        let id = reflection_residual(0.0, 3, 0.6, C).unwrap();
        assert_eq!(id.lhs, 0.0);
        assert!(id.residual() < 1e-10);
        assert!(reflection_residual(0.2, 1, 0.5, C).unwrap().residual() < 1e-10);
        assert_eq!(
            reflection_residual(0.2, 0, 0.5, C).unwrap().difference(),
            0.0
        );
        assert!(matches!(
            reflection_residual(0.5, 1, 0.5, C),
            Err(Error::Pole(_))
        ));
    }
}
