//! Hopping rates of the q-Hahn zero-range process and their spin-chain
//! counterparts.
//!
//! With `(a;g)_m` the q-Pochhammer symbol, `k` of `m` particles leave a site
//! to the right with rate
//! `beta_+(m,k) = mu^k / (mu (1 - g^k)) (g;g)_m (mu;g)_{m-k} / ((g;g)_{m-k} (mu;g)_m)`
//! and to the left with `beta_-(m,k) = beta_+(m,k) / mu^k`. Under
//! `gamma = q^2`, `mu = q^{4s}` both become the symmetric coefficient
//! `rho(m,k)` after the diagonal similarity transformation.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::qspecial::{check_base, psi_q, SeriesControl};

/// Process parameters `0 < gamma, mu < 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HahnParams {
    gamma: f64,
    mu: f64,
}

impl HahnParams {
    pub fn new(gamma: f64, mu: f64) -> Result<Self> {
        check_base("gamma", gamma)?;
        check_base("mu", mu)?;
        Ok(Self { gamma, mu })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

/// Spin-chain parameters: deformation `q` and spin `s`, stored as `two_s = 2s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QParams {
    q: f64,
    two_s: u32,
}

impl QParams {
    pub fn new(q: f64, two_s: u32) -> Result<Self> {
        check_base("q", q)?;
        if two_s < 1 {
            return domain("2s must be a positive integer");
        }
        Ok(Self { q, two_s })
    }

    /// Accepts `s` as a decimal half-integer such as `0.5`, `1` or `1.5`.
    pub fn from_spin(q: f64, s: f64) -> Result<Self> {
        let two_s = 2.0 * s;
        if two_s.is_nan()
            || two_s < 1.0
            || (two_s - two_s.round()).abs() > 1e-12
            || two_s > u32::MAX as f64
        {
            return domain(format!("spin must be a positive half-integer, got s = {s}"));
        }
        Self::new(q, two_s.round() as u32)
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn two_s(&self) -> u32 {
        self.two_s
    }

    pub fn s(&self) -> f64 {
        self.two_s as f64 / 2.0
    }

    /// `gamma = q^2`.
    pub fn gamma(&self) -> f64 {
        self.q * self.q
    }

    /// `mu = q^{4s}`.
    pub fn mu(&self) -> f64 {
        self.q.powi(2 * self.two_s as i32)
    }

    pub fn hahn(&self) -> HahnParams {
        HahnParams {
            gamma: self.gamma(),
            mu: self.mu(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

fn check_window(m: usize, k: usize) -> Result<()> {
    if k >= 1 && k <= m {
        Ok(())
    } else {
        domain(format!("need 1 <= k <= m, got m = {m}, k = {k}"))
    }
}

/// `(g;g)_m (mu;g)_{m-k} / ((g;g)_{m-k} (mu;g)_m)` as a product of `k` factors
/// `(1 - g^{j+1}) / (1 - mu g^j)`, `j = m-k..m-1`.
///
/// `g^{j+1}` is formed as `g * g^j` so that at `mu = g` every factor is
/// exactly one.
fn pochhammer_ratio(m: usize, k: usize, g: f64, mu: f64) -> f64 {
    let mut r = 1.0;
    let mut gj = g.powi((m - k) as i32);
    for _ in (m - k)..m {
        r *= (1.0 - g * gj) / (1.0 - mu * gj);
        gj *= g;
    }
    r
}

/// Rate for `k` of `m` particles hopping to the right.
pub fn beta_plus(m: usize, k: usize, p: HahnParams) -> Result<f64> {
    check_window(m, k)?;
    let (g, mu) = (p.gamma, p.mu);
    Ok(mu.powi(k as i32 - 1) / (1.0 - g.powi(k as i32)) * pochhammer_ratio(m, k, g, mu))
}

/// Rate for `k` of `m` particles hopping to the left.
pub fn beta_minus(m: usize, k: usize, p: HahnParams) -> Result<f64> {
    check_window(m, k)?;
    let (g, mu) = (p.gamma, p.mu);
    Ok(pochhammer_ratio(m, k, g, mu) / (mu * (1.0 - g.powi(k as i32))))
}

/// Total right-hopping rate out of a site holding `m` particles.
pub fn alpha_plus(m: usize, p: HahnParams) -> f64 {
    let (g, mu) = (p.gamma, p.mu);
    let mut gk = 1.0;
    let mut sum = 0.0;
    for _ in 0..m {
        sum += gk / (1.0 - mu * gk);
        gk *= g;
    }
    sum
}

/// Total left-hopping rate out of a site holding `m` particles.
pub fn alpha_minus(m: usize, p: HahnParams) -> f64 {
    let (g, mu) = (p.gamma, p.mu);
    let mut gk = 1.0;
    let mut sum = 0.0;
    for _ in 0..m {
        sum += 1.0 / (1.0 - mu * gk);
        gk *= g;
    }
    sum / mu
}

/// Symmetrised hopping coefficient of the spin-chain Hamiltonian density.
pub fn rho(m: usize, k: usize, p: QParams) -> Result<f64> {
    check_window(m, k)?;
    Ok(rho_unchecked(m, k, p))
}

/// `rho(m,k)`, extended by zero outside `1 <= k <= m`.
pub(crate) fn rho_ext(m: i64, k: i64, p: QParams) -> f64 {
    if k < 1 || m < k {
        0.0
    } else {
        rho_unchecked(m as usize, k as usize, p)
    }
}

fn rho_unchecked(m: usize, k: usize, p: QParams) -> f64 {
    let (g, mu) = (p.gamma(), p.mu());
    let q = p.q;
    q.powi((k as u32 * p.two_s) as i32) / (mu * (1.0 - g.powi(k as i32)))
        * pochhammer_ratio(m, k, g, mu)
}

/// Diagonal rate through the q-digamma closed form
/// `alpha_±(m) = (psi_q(m+2s) - psi_q(2s) ± m log q) / (-2 q^{4s} log q)`.
pub fn alpha_psi(m: usize, sign: Sign, p: QParams, ctrl: SeriesControl) -> Result<f64> {
    if m == 0 {
        return Ok(0.0);
    }
    let q = p.q;
    let lq = q.ln();
    let two_s = p.two_s as f64;
    let diff = psi_q(m as f64 + two_s, q, ctrl)? - psi_q(two_s, q, ctrl)?;
    let shift = match sign {
        Sign::Plus => m as f64 * lq,
        Sign::Minus => -(m as f64) * lq,
    };
    Ok((diff + shift) / (-2.0 * p.mu() * lq))
}

/// Residuals of the two `rho` recursions, `rho(m,k)` against `rho(m-1,k)` and
/// against `rho(m,k-1)`. Each is `None` outside its window (`k <= m-1` for
/// the first, `k >= 2` for the second).
pub fn rho_recursion_residuals(
    m: usize,
    k: usize,
    p: QParams,
) -> Result<(Option<f64>, Option<f64>)> {
    check_window(m, k)?;
    let q = p.q;
    let two_s = p.two_s as i32;
    let qp = |e: i32| q.powi(e);
    let (mi, ki) = (m as i32, k as i32);
    let target = rho_unchecked(m, k, p);
    let first = (k < m).then(|| {
        let factor = (qp(2 * mi) - 1.0) * (qp(2 * (mi + two_s)) - qp(2 * ki + 2))
            / ((qp(2 * mi) - qp(2 * ki)) * (qp(2 * (mi + two_s)) - qp(2)));
        crate::tolerance::mixed(target, factor * rho_unchecked(m - 1, k, p))
    });
    let second = (k >= 2).then(|| {
        let factor = (qp(2 * ki) - qp(2)) * q.powi(two_s - 2) * (qp(2 * ki) - qp(2 * mi + 2))
            / ((qp(2 * ki) - 1.0) * (qp(2 * ki) - qp(2 * (mi + two_s))));
        crate::tolerance::mixed(target, factor * rho_unchecked(m, k - 1, p))
    });
    Ok((first, second))
}

/// Residuals of `alpha_-(m+1) - alpha_-(m) = 1/(q^{4s} - q^{2m+8s})` and
/// `alpha_+(m) - alpha_+(m+1) = 1/(q^{4s} - q^{-2m})`.
pub fn alpha_difference_residuals(m: usize, p: QParams) -> (f64, f64) {
    let h = p.hahn();
    let q = p.q;
    let mu = p.mu();
    let mi = m as i32;
    let four_s = 2 * p.two_s as i32;
    let minus = tolerance_pair(
        alpha_minus(m + 1, h) - alpha_minus(m, h),
        1.0 / (mu - q.powi(2 * mi + 2 * four_s)),
    );
    let plus = tolerance_pair(
        alpha_plus(m, h) - alpha_plus(m + 1, h),
        1.0 / (mu - q.powi(-2 * mi)),
    );
    (minus, plus)
}

fn tolerance_pair(a: f64, b: f64) -> f64 {
    crate::tolerance::mixed(a, b)
}

/// Spin-1/2 (`mu = gamma`) rates, independent of the source occupation.
pub fn madm_rate(k: usize, gamma: f64, direction: Sign) -> Result<f64> {
    if k < 1 {
        return domain("k must be at least 1");
    }
    check_base("gamma", gamma)?;
    let gk = gamma.powi(k as i32);
    Ok(match direction {
        Sign::Plus => gk / (gamma * (1.0 - gk)),
        Sign::Minus => 1.0 / (gamma * (1.0 - gk)),
    })
}

/// Which scaled rate of the totally asymmetric limit is probed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `gamma^{2s} beta_-` tends to 1.
    Left,
    /// `gamma^{2s} beta_+` tends to 0.
    Right,
}

fn tasep_params(two_s: u32, gamma_small: f64) -> Result<HahnParams> {
    if !(gamma_small > 0.0 && gamma_small <= 0.1) {
        return domain(format!("gamma must lie in (0, 0.1], got {gamma_small}"));
    }
    if two_s < 1 {
        return domain("2s must be a positive integer");
    }
    HahnParams::new(gamma_small, gamma_small.powi(two_s as i32))
}

/// `|gamma^{2s} beta_∓(m,k) - limit|` at `mu = gamma^{2s}` as `gamma -> 0`.
///
/// The `gamma -> ∞` limit is the left/right mirror image of this one: there
/// `gamma^{2s} beta_+` tends to 1 and `gamma^{2s} beta_-` to 0. It lies outside
/// `0 < gamma < 1` and is not evaluated.
pub fn tasep_limit_residual(
    m: usize,
    k: usize,
    two_s: u32,
    gamma_small: f64,
    side: Side,
) -> Result<f64> {
    let p = tasep_params(two_s, gamma_small)?;
    let scale = gamma_small.powi(two_s as i32);
    Ok(match side {
        Side::Left => (scale * beta_minus(m, k, p)? - 1.0).abs(),
        Side::Right => (scale * beta_plus(m, k, p)?).abs(),
    })
}

/// `|gamma^{2s} alpha_∓(m) - limit|` with limits `m` (left) and `0` (right).
pub fn tasep_alpha_residual(m: usize, two_s: u32, gamma_small: f64, side: Side) -> Result<f64> {
    let p = tasep_params(two_s, gamma_small)?;
    let scale = gamma_small.powi(two_s as i32);
    Ok(match side {
        Side::Left => (scale * alpha_minus(m, p) - m as f64).abs(),
        Side::Right => (scale * alpha_plus(m, p)).abs(),
    })
}

fn rational_q(q_near_one: f64) -> Result<()> {
    if (0.99..1.0).contains(&q_near_one) {
        Ok(())
    } else {
        domain(format!("q must lie in [0.99, 1), got {q_near_one}"))
    }
}

/// `(1/2k) Gamma(m+1) Gamma(m-k+2s) / (Gamma(m-k+1) Gamma(m+2s))`.
pub fn rational_rho(m: usize, k: usize, two_s: u32) -> Result<f64> {
    check_window(m, k)?;
    use statrs::function::gamma::ln_gamma;
    let (m, k, t) = (m as f64, k as f64, two_s as f64);
    let log = ln_gamma(m + 1.0) + ln_gamma(m - k + t) - ln_gamma(m - k + 1.0) - ln_gamma(m + t);
    Ok(log.exp() / (2.0 * k))
}

/// `(psi(m+2s) - psi(2s)) / 2` with the classical digamma.
pub fn rational_alpha(m: usize, two_s: u32) -> f64 {
    use statrs::function::gamma::digamma;
    let t = two_s as f64;
    (digamma(m as f64 + t) - digamma(t)) / 2.0
}

/// `|log(1/q) rho(m,k) - rational_rho(m,k)|` for `q` close to one.
pub fn rational_limit_residual(m: usize, k: usize, two_s: u32, q_near_one: f64) -> Result<f64> {
    rational_q(q_near_one)?;
    let p = QParams::new(q_near_one, two_s)?;
    Ok(((1.0 / q_near_one).ln() * rho(m, k, p)? - rational_rho(m, k, two_s)?).abs())
}

/// `|log(1/q) alpha_±(m) - rational_alpha(m)|` for `q` close to one.
pub fn rational_alpha_residual(m: usize, two_s: u32, q_near_one: f64, sign: Sign) -> Result<f64> {
    rational_q(q_near_one)?;
    let h = QParams::new(q_near_one, two_s)?.hahn();
    let a = match sign {
        Sign::Plus => alpha_plus(m, h),
        Sign::Minus => alpha_minus(m, h),
    };
    Ok(((1.0 / q_near_one).ln() * a - rational_alpha(m, two_s)).abs())
}

/// All rates with `m <= max_m`, filled by the `k -> k+1` ratio recursion.
#[derive(Clone, Debug)]
pub struct RateTable {
    max_m: usize,
    // beta_+ = mu^{k-1} base and beta_- = base / mu; row m holds k = 1..=m
    // at offset m(m-1)/2 + k-1
    base: Vec<f64>,
    mu_pow: Vec<f64>,
    inv_mu: f64,
    alpha_plus: Vec<f64>,
    alpha_minus: Vec<f64>,
}

impl RateTable {
    pub fn new(max_m: usize, p: HahnParams) -> Self {
        let (g, mu) = (p.gamma, p.mu);
        let mut base = Vec::with_capacity(max_m * (max_m + 1) / 2);
        // step[j] = (1 - g^{j+1}) / (1 - mu g^j), inv[k] = 1 / (1 - g^k)
        let mut step = Vec::with_capacity(max_m);
        let mut inv = vec![0.0; max_m + 1];
        let mut gj = 1.0;
        for j in 0..max_m {
            step.push((1.0 - g * gj) / (1.0 - mu * gj));
            gj *= g;
            inv[j + 1] = 1.0 / (1.0 - gj);
        }
        // ratio(m, k) = step[m - 1] ratio(m - 1, k - 1), row by row
        let (mut prev, mut next) = (vec![1.0], Vec::with_capacity(max_m + 1));
        for m in 1..=max_m {
            let s = step[m - 1];
            next.clear();
            next.push(1.0);
            next.extend(prev.iter().map(|r| r * s));
            base.extend(next[1..].iter().zip(&inv[1..]).map(|(r, i)| r * i));
            std::mem::swap(&mut prev, &mut next);
        }
        let mut mu_pow = Vec::with_capacity(max_m);
        let mut muk = 1.0;
        for _ in 0..max_m {
            mu_pow.push(muk);
            muk *= mu;
        }
        // running sums in the order used by `alpha_plus` and `alpha_minus`
        let (mut ap, mut am, mut gk) = (0.0, 0.0, 1.0);
        let mut alpha_plus = vec![0.0];
        let mut alpha_minus = vec![0.0];
        for _ in 0..max_m {
            ap += gk / (1.0 - mu * gk);
            am += 1.0 / (1.0 - mu * gk);
            gk *= g;
            alpha_plus.push(ap);
            alpha_minus.push(am / mu);
        }
        Self {
            max_m,
            base,
            mu_pow,
            inv_mu: 1.0 / mu,
            alpha_plus,
            alpha_minus,
        }
    }

    pub fn max_m(&self) -> usize {
        self.max_m
    }

    #[inline]
    fn offset(m: usize, k: usize) -> usize {
        m * (m - 1) / 2 + k - 1
    }

    /// `beta_+(m,k)`; panics outside `1 <= k <= m <= max_m`.
    #[inline]
    pub fn beta_plus(&self, m: usize, k: usize) -> f64 {
        debug_assert!(k >= 1 && k <= m && m <= self.max_m);
        self.mu_pow[k - 1] * self.base[Self::offset(m, k)]
    }

    #[inline]
    pub fn beta_minus(&self, m: usize, k: usize) -> f64 {
        debug_assert!(k >= 1 && k <= m && m <= self.max_m);
        self.base[Self::offset(m, k)] * self.inv_mu
    }

    #[inline]
    pub fn alpha_plus(&self, m: usize) -> f64 {
        self.alpha_plus[m]
    }

    #[inline]
    pub fn alpha_minus(&self, m: usize) -> f64 {
        self.alpha_minus[m]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tolerance::mixed;

    fn p() -> HahnParams {
        HahnParams::new(0.25, 0.5).unwrap()
    }

    #[test]
    fn params_validate() {
        assert!(HahnParams::new(1.5, 0.5).is_err());
        assert!(HahnParams::new(0.5, 0.0).is_err());
        assert!(QParams::new(0.5, 0).is_err());
        assert!(QParams::from_spin(0.5, 0.75).is_err());
        let qp = QParams::from_spin(0.6, 1.5).unwrap();
        assert_eq!(qp.two_s(), 3);
        assert!((qp.mu() - 0.6f64.powi(6)).abs() < 1e-16);
    }

    #[test]
    fn beta_values() {
        let p = p();
        assert!((beta_plus(1, 1, p).unwrap() - 2.0).abs() < 1e-15);
        assert!((beta_plus(2, 1, p).unwrap() - 1.25 / 0.875).abs() < 1e-15);
        assert!((beta_plus(2, 2, p).unwrap() - 0.5 * 0.75 / (0.5 * 0.875)).abs() < 1e-15);
        assert!((beta_minus(1, 1, p).unwrap() - 4.0).abs() < 1e-15);
        assert!((beta_minus(2, 1, p).unwrap() - 2.857142857142857).abs() < 1e-14);
        assert!((beta_minus(2, 2, p).unwrap() - 3.428571428571428).abs() < 1e-14);
        assert!(beta_plus(1, 2, p).is_err());
        assert!(beta_minus(3, 0, p).is_err());
    }

    #[test]
    fn alpha_values() {
        let p = p();
        assert_eq!(alpha_plus(0, p), 0.0);
        assert_eq!(alpha_minus(0, p), 0.0);
        assert!((alpha_plus(2, p) - 2.2857142857142856).abs() < 1e-14);
        assert!((alpha_minus(2, p) - 6.285714285714286).abs() < 1e-14);
    }

    #[test]
    fn rho_values_and_symmetry() {
        let qp = QParams::new(0.6, 1).unwrap();
        assert!((rho(1, 1, qp).unwrap() - 2.6041666666666665).abs() < 1e-14);
        let h = HahnParams::new(0.36, 0.36).unwrap();
        assert!((0.6f64.powi(-1) * beta_plus(1, 1, h).unwrap() - 2.6041666666666665).abs() < 1e-14);
        let lhs = rho(2, 2, qp).unwrap();
        let rhs = 0.6f64.powi(-2) * beta_plus(2, 2, h).unwrap();
        assert!(mixed(lhs, rhs) < 1e-14);
    }

    #[test]
    fn alpha_psi_values() {
        let qp = QParams::new(0.6, 1).unwrap();
        let c = SeriesControl::default();
        assert_eq!(alpha_psi(0, Sign::Plus, qp, c).unwrap(), 0.0);
        assert_eq!(alpha_psi(0, Sign::Minus, qp, c).unwrap(), 0.0);
        assert!((alpha_psi(1, Sign::Plus, qp, c).unwrap() - 1.5625).abs() < 1e-12);
        assert!((alpha_psi(1, Sign::Minus, qp, c).unwrap() - 1.0 / (0.36 * 0.64)).abs() < 1e-12);
    }

    #[test]
    fn recursion_examples() {
        let (a, b) = rho_recursion_residuals(2, 1, QParams::new(0.5, 2).unwrap()).unwrap();
        assert!(a.unwrap() < 1e-12);
        assert!(b.is_none());
        let (a, b) = rho_recursion_residuals(3, 2, QParams::new(0.7, 1).unwrap()).unwrap();
        assert!(a.unwrap() < 1e-12 && b.unwrap() < 1e-12);
        let (a, b) = rho_recursion_residuals(2, 2, QParams::new(0.6, 2).unwrap()).unwrap();
        assert!(a.is_none());
        assert!(b.unwrap() < 1e-12);
        assert!(rho_recursion_residuals(2, 3, QParams::new(0.6, 2).unwrap()).is_err());
    }

    #[test]
    fn alpha_difference_examples() {
        for (m, q, two_s) in [(0, 0.6, 1), (1, 0.5, 2), (4, 0.9, 4)] {
            let (a, b) = alpha_difference_residuals(m, QParams::new(q, two_s).unwrap());
            assert!(a < 1e-12 && b < 1e-12, "m={m} q={q}");
        }
    }

    #[test]
    fn madm_examples() {
        assert!((madm_rate(1, 0.36, Sign::Plus).unwrap() - 1.5625).abs() < 1e-14);
        let h = HahnParams::new(0.36, 0.36).unwrap();
        assert_eq!(beta_plus(5, 1, h).unwrap(), beta_plus(1, 1, h).unwrap());
        assert!((beta_plus(1, 1, h).unwrap() - 1.5625).abs() < 1e-14);
        assert!((madm_rate(2, 0.25, Sign::Minus).unwrap() - 4.266666666666667).abs() < 1e-14);
        assert!(madm_rate(0, 0.25, Sign::Minus).is_err());
    }

    #[test]
    fn tasep_examples() {
        assert!(tasep_limit_residual(3, 2, 1, 1e-3, Side::Left).unwrap() < 5e-3);
        assert!(tasep_limit_residual(3, 2, 1, 1e-3, Side::Right).unwrap() < 2e-3);
        let a1 = tasep_alpha_residual(4, 2, 1e-2, Side::Left).unwrap();
        let a2 = tasep_alpha_residual(4, 2, 1e-3, Side::Left).unwrap();
        assert!(a2 < a1 && a2 < 1e-2);
        assert!(tasep_limit_residual(3, 2, 1, 0.5, Side::Left).is_err());
    }

    #[test]
    fn rational_examples() {
        assert!((rational_rho(1, 1, 1).unwrap() - 0.5).abs() < 1e-14);
        assert!((rational_rho(2, 1, 2).unwrap() - 1.0 / 3.0).abs() < 1e-14);
        assert!(rational_limit_residual(1, 1, 1, 0.9999).unwrap() < 1e-3);
        assert!(rational_limit_residual(2, 1, 2, 0.9999).unwrap() < 1e-3);
        assert!((rational_alpha(1, 1) - 0.5).abs() < 1e-14);
        assert!(rational_alpha_residual(1, 1, 0.9999, Sign::Plus).unwrap() < 1e-3);
        assert!(rational_limit_residual(1, 1, 1, 0.9).is_err());
    }

    #[test]
    fn table_matches_direct_rates() {
        for &(g, mu) in &[(0.25, 0.5), (0.36, 0.36), (0.75, 0.25)] {
            let p = HahnParams::new(g, mu).unwrap();
            let t = RateTable::new(50, p);
            for m in 1..=50 {
                for k in 1..=m {
                    assert!(mixed(t.beta_plus(m, k), beta_plus(m, k, p).unwrap()) < 1e-14);
                    assert!(mixed(t.beta_minus(m, k), beta_minus(m, k, p).unwrap()) < 1e-14);
                }
            }
            for m in 0..=50 {
                assert_eq!(t.alpha_plus(m), alpha_plus(m, p));
                assert_eq!(t.alpha_minus(m), alpha_minus(m, p));
            }
        }
    }
}
