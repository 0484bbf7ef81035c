//! U_q(sl2) generators on two-site blocks.
//!
//! Every operator acts between the exact `(n+1)`-dimensional sectors of
//! fixed total occupation, in the same basis as [`crate::generator`]: index
//! `i` of block `n` is the state `|n-i> (x) |i>`. Single-site modules are
//! never truncated.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::generator::{self, enumerate_configs, BlockMatrix};
use crate::linalg;
use crate::qspecial::{self, q_pochhammer, q_pochhammer_signed, qnum, SeriesControl};
use crate::rates::{self, rho_ext, QParams};
use crate::tolerance;

/// Raising or lowering direction of an intertwiner check; `Zero` is the
/// Cartan generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Direction {
    Plus,
    Minus,
    Zero,
}

fn block(
    rows: usize,
    cols: usize,
    rows_n: usize,
    cols_n: usize,
    m: DMatrix<f64>,
) -> Result<BlockMatrix> {
    debug_assert_eq!((rows, cols), m.shape());
    Ok(BlockMatrix::new(
        m,
        enumerate_configs(2, rows_n)?,
        enumerate_configs(2, cols_n)?,
    ))
}

/// `Delta(S_0) = (n + 2s) I` on block `n`.
pub fn delta_s0(n: usize, p: QParams) -> Result<BlockMatrix> {
    let v = n as f64 + p.two_s() as f64;
    block(
        n + 1,
        n + 1,
        n,
        n,
        DMatrix::from_diagonal_element(n + 1, n + 1, v),
    )
}

/// `Delta(S_-)|m,m'> = [m] q^{-m'-s} |m-1,m'> + q^{m+s} [m'] |m,m'-1>`,
/// an `n x (n+1)` matrix from block `n` to block `n-1`.
pub fn delta_s_minus(n: usize, p: QParams) -> Result<BlockMatrix> {
    if n == 0 {
        return Err(Error::Domain("Delta(S_-) needs n >= 1".into()));
    }
    let (q, s) = (p.q(), p.s());
    let mut a = DMatrix::zeros(n, n + 1);
    for i in 0..=n {
        let (m, mp) = ((n - i) as f64, i as f64);
        if i < n {
            a[(i, i)] += qnum(m, q) * q.powf(-mp - s);
        }
        if i > 0 {
            a[(i - 1, i)] += q.powf(m + s) * qnum(mp, q);
        }
    }
    block(n, n + 1, n - 1, n, a)
}

/// `Delta(S_+)|m,m'> = [m+2s] q^{-m'-s} |m+1,m'> + q^{m+s} [m'+2s] |m,m'+1>`,
/// an `(n+2) x (n+1)` matrix from block `n` to block `n+1`.
pub fn delta_s_plus(n: usize, p: QParams) -> Result<BlockMatrix> {
    let (q, s) = (p.q(), p.s());
    let t = p.two_s() as f64;
    let mut a = DMatrix::zeros(n + 2, n + 1);
    for i in 0..=n {
        let (m, mp) = ((n - i) as f64, i as f64);
        a[(i, i)] += qnum(m + t, q) * q.powf(-mp - s);
        a[(i + 1, i)] += q.powf(m + s) * qnum(mp + t, q);
    }
    block(n + 2, n + 1, n + 1, n, a)
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        0.0
    } else {
        m.amax()
    }
}

fn matrix_residual(diff: &DMatrix<f64>, parts: &[&DMatrix<f64>]) -> f64 {
    let scale = parts.iter().map(|m| max_abs(m)).fold(0.0, f64::max);
    tolerance::matrix(max_abs(diff), scale)
}

/// `||Delta(S_+) H_n - H_{n+1} Delta(S_+)||`, its lowering analogue, or
/// `||[Delta(S_0), H_n]||`.
pub fn intertwiner_residual(n: usize, p: QParams, direction: Direction) -> Result<f64> {
    let h = generator::local_hamiltonian(n, p)?;
    match direction {
        Direction::Zero => {
            let d = delta_s0(n, p)?;
            let l = d.matrix() * h.matrix();
            let r = h.matrix() * d.matrix();
            Ok(matrix_residual(&(&l - &r), &[&l, &r]))
        }
        Direction::Plus => {
            let d = delta_s_plus(n, p)?;
            let h1 = generator::local_hamiltonian(n + 1, p)?;
            let l = d.matrix() * h.matrix();
            let r = h1.matrix() * d.matrix();
            Ok(matrix_residual(&(&l - &r), &[&l, &r]))
        }
        Direction::Minus => {
            let d = delta_s_minus(n, p)?;
            let h1 = generator::local_hamiltonian(n - 1, p)?;
            let l = d.matrix() * h.matrix();
            let r = h1.matrix() * d.matrix();
            Ok(matrix_residual(&(&l - &r), &[&l, &r]))
        }
    }
}

/// `Delta(S_+) Delta(S_-) - Delta(S_-) Delta(S_+) + [2 Delta(S_0)]` on block `n`.
pub fn commutator_residual(n: usize, p: QParams) -> Result<f64> {
    let up = delta_s_plus(n, p)?;
    let down_after = delta_s_minus(n + 1, p)?;
    let lower_raise = down_after.matrix() * up.matrix();
    let raise_lower = if n == 0 {
        DMatrix::zeros(1, 1)
    } else {
        delta_s_plus(n - 1, p)?.matrix() * delta_s_minus(n, p)?.matrix()
    };
    let target = qnum(2.0 * (n as f64 + p.two_s() as f64), p.q());
    let lhs = &raise_lower - &lower_raise;
    let rhs = DMatrix::from_diagonal_element(n + 1, n + 1, -target);
    Ok(matrix_residual(
        &(&lhs - &rhs),
        &[&raise_lower, &lower_raise, &rhs],
    ))
}

/// Sum of terms together with the largest term, for mixed residuals.
struct Terms {
    sum: f64,
    scale: f64,
}

impl Terms {
    fn of(parts: &[f64]) -> Self {
        Self {
            sum: parts.iter().sum(),
            scale: parts.iter().map(|v| v.abs()).fold(0.0, f64::max),
        }
    }

    fn residual(&self) -> f64 {
        tolerance::mixed_zero(self.sum, self.scale)
    }
}

/// Residuals of the coefficients `A_k^±, B^±, C_k^±, D^±` of
/// `[Delta(S_±), H] |m,m'>`, each normalised by its largest term. Keys are
/// `"A-[k]"`, `"B-"`, `"C-[k]"`, `"D-"` and the `+` analogues.
///
/// `rho(m,k)` is taken as zero outside `1 <= k <= m`; terms carrying a factor
/// `[0]` are dropped since their partner may lie outside the domain.
pub fn coefficient_residuals(m: usize, mp: usize, p: QParams) -> Result<BTreeMap<String, f64>> {
    let (q, s, t) = (p.q(), p.s(), p.two_s() as f64);
    let h = p.hahn();
    let br = |x: f64| qnum(x, q);
    let r = |a: i64, b: i64| rho_ext(a, b, p);
    let pw = |x: f64| q.powf(x);
    let ap = |k: usize| rates::alpha_plus(k, h);
    let am = |k: usize| rates::alpha_minus(k, h);
    let (mi, mpi) = (m as i64, mp as i64);
    let (mf, mpf) = (m as f64, mp as f64);
    let mut out = BTreeMap::new();

    for k in 0..m.saturating_sub(1) {
        let (ki, kf) = (k as i64, k as f64);
        let t4 = Terms::of(&[
            r(mi, mi - ki - 1) * br(kf + 1.0) * pw(-mpf - mf + kf + 1.0 - s),
            r(mi, mi - ki) * pw(kf + s) * br(mpf + mf - kf),
            -br(mf) * pw(-mpf - s) * r(mi - 1, mi - ki - 1),
            -pw(mf + s) * br(mpf) * r(mi, mi - ki),
        ]);
        out.insert(format!("A-[{k}]"), t4.residual());
    }
    {
        let mut parts = vec![
            -r(mi, 1) * pw(mf - 1.0 + s) * br(mpf + 1.0),
            pw(mf + s) * br(mpf) * r(mi, 1),
        ];
        if m > 0 {
            parts.push(br(mf) * pw(-mpf - s) * ap(m));
            parts.push(-br(mf) * pw(-mpf - s) * ap(m - 1));
        }
        out.insert("B-".into(), Terms::of(&parts).residual());
    }
    for k in 0..mp.saturating_sub(1) {
        let (ki, kf) = (k as i64, k as f64);
        let t4 = Terms::of(&[
            r(mpi, mpi - ki) * br(mf + mpf - kf) * pw(-kf - s),
            r(mpi, mpi - ki - 1) * pw(mf + mpf - kf - 1.0 + s) * br(kf + 1.0),
            -br(mf) * pw(-mpf - s) * r(mpi, mpi - ki),
            -pw(mf + s) * br(mpf) * r(mpi - 1, mpi - ki - 1),
        ]);
        out.insert(format!("C-[{k}]"), t4.residual());
    }
    {
        let mut parts = vec![
            -r(mpi, 1) * br(mf + 1.0) * pw(-mpf + 1.0 - s),
            br(mf) * pw(-mpf - s) * r(mpi, 1),
        ];
        if mp > 0 {
            parts.push(pw(mf + s) * br(mpf) * am(mp));
            parts.push(-pw(mf + s) * br(mpf) * am(mp - 1));
        }
        out.insert("D-".into(), Terms::of(&parts).residual());
    }

    for k in 0..m {
        let (ki, kf) = (k as i64, k as f64);
        let t4 = Terms::of(&[
            r(mi, mi - ki + 1) * br(kf - 1.0 + t) * pw(-mpf - mf + kf - 1.0 - s),
            r(mi, mi - ki) * pw(kf + s) * br(mpf + mf - kf + t),
            -br(mf + t) * pw(-mpf - s) * r(mi + 1, mi - ki + 1),
            -pw(mf + s) * br(mpf + t) * r(mi, mi - ki),
        ]);
        out.insert(format!("A+[{k}]"), t4.residual());
    }
    out.insert(
        "B+".into(),
        Terms::of(&[
            br(mf + t) * pw(-mpf - s) * ap(m),
            -r(mpi, 1) * pw(mf + 1.0 + s) * br(mpf + t - 1.0),
            -br(mf + t) * pw(-mpf - s) * ap(m + 1),
            pw(mf + s) * br(mpf + t) * r(mpi + 1, 1),
        ])
        .residual(),
    );
    for k in 0..mp {
        let (ki, kf) = (k as i64, k as f64);
        let t4 = Terms::of(&[
            r(mpi, mpi - ki) * br(mf + mpf - kf + t) * pw(-kf - s),
            r(mpi, mpi - ki + 1) * pw(mf + mpf - kf + 1.0 + s) * br(kf - 1.0 + t),
            -br(mf + t) * pw(-mpf - s) * r(mpi, mpi - ki),
            -pw(mf + s) * br(mpf + t) * r(mpi + 1, mpi - ki + 1),
        ]);
        out.insert(format!("C+[{k}]"), t4.residual());
    }
    out.insert(
        "D+".into(),
        Terms::of(&[
            pw(mf + s) * br(mpf + t) * am(mp),
            -r(mi, 1) * br(mf + t - 1.0) * pw(-mpf - 1.0 - s),
            -pw(mf + s) * br(mpf + t) * am(mp + 1),
            br(mf + t) * pw(-mpf - s) * r(mi + 1, 1),
        ])
        .residual(),
    );
    Ok(out)
}

/// Two-site Casimir `[Delta S_0][Delta S_0 - 1] - Delta(S_+) Delta(S_-)` on
/// block `n`.
pub fn casimir(n: usize, p: QParams) -> Result<DMatrix<f64>> {
    let d0 = n as f64 + p.two_s() as f64;
    let cartan = qnum(d0, p.q()) * qnum(d0 - 1.0, p.q());
    let mut c = DMatrix::from_diagonal_element(n + 1, n + 1, cartan);
    if n > 0 {
        c -= delta_s_plus(n - 1, p)?.matrix() * delta_s_minus(n, p)?.matrix();
    }
    Ok(c)
}

/// `Delta(C)` on block `n` composed exactly in rationals over `r = sqrt(q)`
/// and rounded once, with the sorted targets `[2s+j][2s+j-1]` on the same
/// footing. Forming `[S_0][S_0-1] - Delta(S_+) Delta(S_-)` in floating point
/// cancels catastrophically once `q^{-2n}` is large.
fn casimir_exact(n: usize, p: QParams) -> (DMatrix<f64>, Vec<f64>) {
    let r = BigRational::from_float(p.q().sqrt()).expect("q is finite");
    // q^{e/2}
    let half = |e: i64| r.pow(e as i32);
    let bracket = |x2: i64| (half(x2) - half(-x2)) / (half(2) - half(-2));
    let t = p.two_s() as i64;
    let ni = n as i64;
    let cartan = |d0: i64| bracket(2 * d0) * bracket(2 * d0 - 2);
    let mut c: Vec<Vec<BigRational>> = (0..=n)
        .map(|i| {
            (0..=n)
                .map(|j| {
                    if i == j {
                        cartan(ni + t)
                    } else {
                        BigRational::zero()
                    }
                })
                .collect()
        })
        .collect();
    if n > 0 {
        // Delta(S_-) on block n: n x (n+1).
        let mut down = vec![vec![BigRational::zero(); n + 1]; n];
        for i in 0..=ni {
            let (m, mp) = (ni - i, i);
            if i < ni {
                down[i as usize][i as usize] += bracket(2 * m) * half(-2 * mp - t);
            }
            if i > 0 {
                down[i as usize - 1][i as usize] += half(2 * m + t) * bracket(2 * mp);
            }
        }
        // Delta(S_+) on block n-1: (n+1) x n.
        let mut up = vec![vec![BigRational::zero(); n]; n + 1];
        for i in 0..ni {
            let (m, mp) = (ni - 1 - i, i);
            up[i as usize][i as usize] += bracket(2 * m + 2 * t) * half(-2 * mp - t);
            up[i as usize + 1][i as usize] += half(2 * m + t) * bracket(2 * mp + 2 * t);
        }
        for (i, row) in c.iter_mut().enumerate() {
            for (j, cij) in row.iter_mut().enumerate() {
                for k in 0..n {
                    *cij -= &up[i][k] * &down[k][j];
                }
            }
        }
    }
    let to_f64 = |x: &BigRational| x.to_f64().unwrap_or(f64::NAN);
    let m = DMatrix::from_fn(n + 1, n + 1, |i, j| to_f64(&c[i][j]));
    let mut expect: Vec<f64> = (0..=ni).map(|j| to_f64(&cartan(t + j))).collect();
    expect.sort_by(f64::total_cmp);
    (m, expect)
}

/// Symmetric tridiagonal matrix similar to `a`, when `a` is tridiagonal with
/// positive products of paired off-diagonal entries.
fn symmetrize_tridiagonal(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    for i in 0..n {
        for j in 0..n {
            if i.abs_diff(j) > 1 && a[(i, j)] != 0.0 {
                return None;
            }
        }
    }
    let mut sym = DMatrix::from_diagonal(&a.diagonal());
    for i in 0..n.saturating_sub(1) {
        let prod = a[(i, i + 1)] * a[(i + 1, i)];
        if prod.is_nan() || prod <= 0.0 {
            return None;
        }
        let off = prod.sqrt();
        sym[(i, i + 1)] = off;
        sym[(i + 1, i)] = off;
    }
    Some(sym)
}

/// Largest deviation of the Casimir spectrum on block `n` from
/// `{[2s+j][2s+j-1]}_{j=0..n}`, relative once the values are large.
pub fn casimir_check(n: usize, p: QParams) -> Result<f64> {
    let (c, expect) = casimir_exact(n, p);
    let ev = match symmetrize_tridiagonal(&c) {
        Some(sym) => {
            let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
            ev.sort_by(f64::total_cmp);
            ev
        }
        None => linalg::real_spectrum(&c, linalg::DEFAULT_TOL_IMAG)?,
    };
    Ok(ev
        .iter()
        .zip(&expect)
        .map(|(a, b)| tolerance::mixed(*a, *b))
        .fold(0.0, f64::max))
}

/// Lowest-weight vector `sum_k c_{j,k} |k> (x) |j-k>`, normalised to
/// `c_{j,0} = 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowestWeightState {
    pub j: usize,
    pub coeffs: Vec<f64>,
}

impl LowestWeightState {
    /// Coefficients in the block basis of block `j` (index `j - k` holds `c_{j,k}`).
    pub fn block_vector(&self) -> DVector<f64> {
        DVector::from_iterator(self.j + 1, self.coeffs.iter().rev().copied())
    }
}

/// Solves `[k+1] q^{-s-j+k+1} c_{k+1} + [j-k] q^{k+s} c_k = 0` from `c_0 = 1`.
pub fn lowest_weight_coeffs(j: usize, p: QParams) -> LowestWeightState {
    let (q, s) = (p.q(), p.s());
    let jf = j as f64;
    let mut coeffs = vec![1.0];
    for k in 0..j {
        let kf = k as f64;
        let c = coeffs[k];
        let next = -qnum(jf - kf, q) * q.powf(kf + s) * c
            / (qnum(kf + 1.0, q) * q.powf(-s - jf + kf + 1.0));
        coeffs.push(next);
    }
    LowestWeightState { j, coeffs }
}

/// Largest mixed residual of the difference equation over `k`.
pub fn difference_equation_residual(state: &LowestWeightState, p: QParams) -> f64 {
    let (q, s) = (p.q(), p.s());
    let jf = state.j as f64;
    (0..state.j)
        .map(|k| {
            let kf = k as f64;
            let a = qnum(kf + 1.0, q) * q.powf(-s - jf + kf + 1.0) * state.coeffs[k + 1];
            let b = qnum(jf - kf, q) * q.powf(kf + s) * state.coeffs[k];
            tolerance::mixed_zero(a + b, a.abs().max(b.abs()))
        })
        .fold(0.0, f64::max)
}

/// Closed form `q^{2k(j+s)} (q^{2-2j};q^2)_{k-1} / (q^4;q^2)_{k-1}`, with
/// `(a;b)_{-1} = 1/(1 - a/b)`. Undefined at `j = 0`.
pub fn lowest_weight_closed_form(j: usize, k: usize, p: QParams) -> f64 {
    let q = p.q();
    let q2 = q * q;
    let order = k as i64 - 1;
    q.powf(2.0 * k as f64 * (j as f64 + p.s()))
        * q_pochhammer_signed(q.powi(2 - 2 * j as i32), q2, order)
        / q_pochhammer_signed(q.powi(4), q2, order)
}

/// Spread of `c_{j,k} / closed_form(j,k)` over `k`, relative to its mean;
/// zero when the two agree up to a `k`-independent factor. `None` at `j = 0`.
pub fn closed_form_mismatch(j: usize, p: QParams) -> Option<f64> {
    if j == 0 {
        return None;
    }
    let state = lowest_weight_coeffs(j, p);
    let ratios: Vec<f64> = (0..=j)
        .map(|k| state.coeffs[k] / lowest_weight_closed_form(j, k, p))
        .collect();
    let r0 = ratios[0];
    Some(
        ratios
            .iter()
            .map(|r| tolerance::mixed(r / r0, 1.0))
            .fold(0.0, f64::max),
    )
}

/// Residuals of a lowest-weight state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LowestWeightResiduals {
    /// `||Delta(S_-) Phi||`.
    pub annihilation: f64,
    /// `||H_j Phi - lambda_j Phi||`.
    pub eigen: f64,
    /// `|Delta(S_0) eigenvalue - (2s + j)|`.
    pub weight: f64,
}

/// Residuals of `Phi_{2s+j}`; matrix norms are relative once entries exceed
/// the matrix threshold.
pub fn lowest_weight_checks(j: usize, p: QParams) -> Result<LowestWeightResiduals> {
    let phi = lowest_weight_coeffs(j, p).block_vector();
    let annihilation = if j == 0 {
        0.0
    } else {
        let d = delta_s_minus(j, p)?;
        let out = d.matrix() * &phi;
        let scale = max_abs(d.matrix()) * phi.amax();
        tolerance::matrix(out.amax(), scale)
    };
    let h = generator::local_hamiltonian(j, p)?;
    let lambda = generator::lambda_eigenvalue(j, p);
    let hv = h.matrix() * &phi;
    let lv = &phi * lambda;
    let scale = hv.amax().max(lv.amax());
    let eigen = tolerance::matrix((&hv - &lv).amax(), scale);
    let s0 = delta_s0(j, p)?.matrix() * &phi;
    let expect = p.two_s() as f64 + j as f64;
    let weight = (0..=j)
        .filter(|&i| phi[i] != 0.0)
        .map(|i| tolerance::mixed(s0[i] / phi[i], expect))
        .fold(0.0, f64::max);
    Ok(LowestWeightResiduals {
        annihilation,
        eigen,
        weight,
    })
}

/// `Delta(S_+)^{n-j} Phi_{2s+j}` for `j = 0..=n`, as the columns of an
/// `(n+1) x (n+1)` matrix. Each column is scaled to unit max-norm.
pub fn propagated_lowest_weights(n: usize, p: QParams) -> Result<DMatrix<f64>> {
    let mut cols = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let mut v = lowest_weight_coeffs(j, p).block_vector();
        for level in j..n {
            v = delta_s_plus(level, p)?.matrix() * v;
            let norm = v.amax();
            v /= norm;
        }
        cols.push(v);
    }
    Ok(DMatrix::from_columns(&cols))
}

/// Numerical rank of the propagated lowest weights on block `n`.
pub fn completeness_rank(n: usize, p: QParams, rel_tol: f64) -> Result<usize> {
    Ok(linalg::rank(&propagated_lowest_weights(n, p)?, rel_tol))
}

/// Largest mixed deviation of the Rayleigh quotients of `H_n` on the
/// propagated lowest weights from `lambda_j`.
pub fn rayleigh_residual(n: usize, p: QParams) -> Result<f64> {
    let vs = propagated_lowest_weights(n, p)?;
    let h = generator::local_hamiltonian(n, p)?;
    let mut worst: f64 = 0.0;
    for (j, v) in vs.column_iter().enumerate() {
        let quotient = v.dot(&(h.matrix() * v)) / v.dot(&v);
        worst = worst.max(tolerance::mixed(
            quotient,
            generator::lambda_eigenvalue(j, p),
        ));
    }
    Ok(worst)
}

/// `F(j,k) = sum_{l=1}^{j-k} q^{2l(j+s)} (q^{2k-2j};q^2)_l / (q^{2k+2};q^2)_l rho(l+k,l)`.
pub fn lemma_f(j: usize, k: usize, p: QParams) -> Result<f64> {
    check_pair(j, k)?;
    let (q, s) = (p.q(), p.s());
    let q2 = q * q;
    let (jf, kf) = (j as f64, k as f64);
    let mut sum = 0.0;
    for l in 1..=(j - k) {
        let w = q.powf(2.0 * l as f64 * (jf + s))
            * q_pochhammer(q.powf(2.0 * kf - 2.0 * jf), q2, l)
            / q_pochhammer(q.powf(2.0 * kf + 2.0), q2, l);
        sum += w * rates::rho(l + k, l, p)?;
    }
    Ok(sum)
}

/// `G(j,k) = sum_{l=1}^{k} q^{-2l(s-1)} (q^{-2k};q^2)_l / (q^{2j-2k+2};q^2)_l rho(j-k+l,l)`.
///
/// The terms alternate in sign and grow like `q^{-k^2}`, so the sum is
/// formed exactly in rational arithmetic on the binary value of `q` and
/// rounded once at the end.
pub fn lemma_g(j: usize, k: usize, p: QParams) -> Result<f64> {
    check_pair(j, k)?;
    let q = BigRational::from_float(p.q()).expect("q is finite");
    let pw = |e: i64| q.pow(e as i32);
    let one = BigRational::one();
    let t = p.two_s() as i64;
    let (j, k) = (j as i64, k as i64);
    let rho = |m: i64, l: i64| {
        let mut r = pw(l * t) / (pw(2 * t) * (&one - pw(2 * l)));
        for i in (m - l)..m {
            r *= (&one - pw(2 * (i + 1))) / (&one - pw(2 * t + 2 * i));
        }
        r
    };
    let mut sum = BigRational::zero();
    let mut ratio = one.clone();
    for l in 1..=k {
        let i = l - 1;
        ratio *= (&one - pw(2 * i - 2 * k)) / (&one - pw(2 * (j - k + 1 + i)));
        sum += pw(-l * t + 2 * l) * &ratio * rho(j - k + l, l);
    }
    sum.to_f64()
        .ok_or_else(|| Error::Domain("lemma sum is not representable as f64".into()))
}

/// `F(j,k)` through its terminating `3phi2` representation.
pub fn lemma_f_hypergeometric(j: usize, k: usize, p: QParams, ctrl: SeriesControl) -> Result<f64> {
    check_pair(j, k)?;
    if j == k {
        return Ok(0.0);
    }
    let q = p.q();
    let q2 = q * q;
    let (jf, kf, t) = (j as f64, k as f64, p.two_s() as f64);
    let pre = q.powf(2.0 * jf) / (1.0 - q2) * (1.0 - q.powf(2.0 * (kf - jf)))
        / (1.0 - q.powf(2.0 * (kf + t)));
    let phi = qspecial::phi_3_2(
        q2,
        q2,
        q.powf(2.0 * (1.0 - jf + kf)),
        q.powi(4),
        q.powf(2.0 + 2.0 * kf + 2.0 * t),
        q2,
        q.powf(2.0 * jf + 2.0 * t),
        ctrl,
    )?;
    Ok(pre * phi)
}

fn check_pair(j: usize, k: usize) -> Result<()> {
    if k > j {
        return Err(Error::Domain(format!(
            "lemma sums need k <= j, got j = {j}, k = {k}"
        )));
    }
    Ok(())
}

/// Mixed residuals `F(j,k) - (alpha_+(k) - alpha_+(j))` and
/// `G(j,k) - (alpha_-(j-k) - alpha_-(j))`.
pub fn lemma_sums(j: usize, k: usize, p: QParams) -> Result<(f64, f64)> {
    let h = p.hahn();
    let f = lemma_f(j, k, p)?;
    let g = lemma_g(j, k, p)?;
    let f_target = rates::alpha_plus(k, h) - rates::alpha_plus(j, h);
    let g_target = rates::alpha_minus(j - k, h) - rates::alpha_minus(j, h);
    Ok((tolerance::mixed(f, f_target), tolerance::mixed(g, g_target)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qp(q: f64, two_s: u32) -> QParams {
        QParams::new(q, two_s).unwrap()
    }

    #[test]
    fn generator_entries() {
        let p = qp(0.6, 1);
        let dm = delta_s_minus(1, p).unwrap();
        assert_eq!(dm.matrix().shape(), (1, 2));
        assert!((dm.get(0, 0) - 0.6f64.powf(-0.5)).abs() < 1e-14);
        assert!((dm.get(0, 1) - 0.6f64.sqrt()).abs() < 1e-14);
        let dp = delta_s_plus(0, p).unwrap();
        assert_eq!(dp.matrix().shape(), (2, 1));
        assert!((dp.get(0, 0) - 1.2909944487358056).abs() < 1e-14);
        assert!((dp.get(1, 0) - 0.7745966692414834).abs() < 1e-14);
        let p1 = qp(0.6, 2);
        let two = 0.6 + 1.0 / 0.6;
        let dp = delta_s_plus(0, p1).unwrap();
        assert!((dp.get(0, 0) - two / 0.6).abs() < 1e-13);
        assert!((dp.get(1, 0) - 0.6 * two).abs() < 1e-13);
        assert_eq!(delta_s_plus(3, p1).unwrap().rows(), 5);
        let d0 = delta_s0(3, p1).unwrap();
        assert_eq!(d0.matrix(), &DMatrix::from_diagonal_element(4, 4, 5.0));
        assert!(delta_s_minus(0, p).is_err());
    }

    #[test]
    fn intertwiners_vanish() {
        assert_eq!(
            intertwiner_residual(3, qp(0.6, 1), Direction::Zero).unwrap(),
            0.0
        );
        assert!(intertwiner_residual(2, qp(0.6, 1), Direction::Plus).unwrap() < 1e-10);
        assert!(intertwiner_residual(5, qp(0.9, 4), Direction::Minus).unwrap() < 1e-10);
    }

    #[test]
    fn commutator_matches_cartan() {
        for n in 0..6 {
            assert!(commutator_residual(n, qp(0.7, 3)).unwrap() < 1e-10);
        }
    }

    #[test]
    fn coefficient_windows() {
        let p = qp(0.6, 1);
        let r = coefficient_residuals(1, 0, p).unwrap();
        let keys: Vec<_> = r.keys().cloned().collect();
        assert_eq!(keys, ["A+[0]", "B+", "B-", "D+", "D-"]);
        assert!(r.values().all(|v| *v < 1e-11), "{r:?}");
        let r = coefficient_residuals(2, 2, qp(0.5, 2)).unwrap();
        assert!(r.values().all(|v| *v < 1e-11), "{r:?}");
        let r = coefficient_residuals(0, 0, p).unwrap();
        assert_eq!(r["B+"], 0.0);
        assert!(r["D+"] < 1e-15);
    }

    #[test]
    fn casimir_spectrum() {
        let p = qp(0.6, 1);
        let c0 = casimir(0, p).unwrap();
        assert_eq!(c0[(0, 0)], 0.0);
        assert!(casimir_check(1, p).unwrap() < 1e-12);
        let mut ev = linalg::real_spectrum(&casimir(1, p).unwrap(), 1e-8).unwrap();
        ev.sort_by(f64::total_cmp);
        assert!(ev[0].abs() < 1e-12 && (ev[1] - 2.2666666666666666).abs() < 1e-12);
        assert!(casimir_check(4, qp(0.9, 2)).unwrap() < 1e-9);
        assert!(casimir_check(8, qp(0.3, 3)).unwrap() < 1e-12);
    }

    #[test]
    fn exact_casimir_matches_float_composition() {
        for p in [qp(0.6, 1), qp(0.9, 2), qp(0.7, 3)] {
            for n in 0..5 {
                let f = casimir(n, p).unwrap();
                let (e, _) = casimir_exact(n, p);
                assert!((&f - &e).amax() < 1e-11 * f.amax().max(1.0), "n={n}");
            }
        }
    }

    #[test]
    fn lowest_weights() {
        let p = qp(0.6, 1);
        assert_eq!(lowest_weight_coeffs(0, p).coeffs, vec![1.0]);
        let st = lowest_weight_coeffs(1, p);
        assert!((st.coeffs[1] + 0.6).abs() < 1e-15);
        let r = lowest_weight_checks(1, p).unwrap();
        assert!(r.annihilation < 1e-12 && r.eigen < 1e-12 && r.weight < 1e-15);
        let r0 = lowest_weight_checks(0, p).unwrap();
        assert_eq!((r0.annihilation, r0.eigen, r0.weight), (0.0, 0.0, 0.0));
        let st = lowest_weight_coeffs(2, qp(0.5, 2));
        assert!(difference_equation_residual(&st, qp(0.5, 2)) < 1e-12);
        let r = lowest_weight_checks(4, qp(0.9, 4)).unwrap();
        assert!(r.annihilation < 1e-10 && r.eigen < 1e-10);
    }

    #[test]
    fn closed_form_agrees_up_to_normalisation() {
        assert_eq!(closed_form_mismatch(0, qp(0.6, 1)), None);
        for j in 1..7 {
            for (q, t) in [(0.6, 1), (0.5, 2), (0.8, 3)] {
                assert!(closed_form_mismatch(j, qp(q, t)).unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn completeness_and_rayleigh() {
        let p = qp(0.6, 1);
        for n in 0..6 {
            assert_eq!(completeness_rank(n, p, 1e-8).unwrap(), n + 1);
            assert!(rayleigh_residual(n, p).unwrap() < 1e-8);
        }
    }

    #[test]
    fn lemma_examples() {
        let p = qp(0.6, 1);
        assert_eq!(lemma_sums(3, 3, p).unwrap().0, 0.0);
        let f = lemma_f(2, 0, p).unwrap();
        assert!(tolerance::mixed(f, -rates::alpha_plus(2, p.hahn())) < 1e-10);
        let (a, b) = lemma_sums(3, 2, qp(0.5, 2)).unwrap();
        assert!(a < 1e-10 && b < 1e-10);
        for j in 0..7 {
            for k in 0..=j {
                let hyp = lemma_f_hypergeometric(j, k, p, SeriesControl::default()).unwrap();
                assert!(tolerance::mixed(hyp, lemma_f(j, k, p).unwrap()) < 1e-10);
            }
        }
        assert!(lemma_sums(1, 2, p).is_err());
    }
}
