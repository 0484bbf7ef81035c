//! Markov generators and Hamiltonians on fixed-particle-number blocks.
//!
//! Matrices follow the column convention: column `j` holds the rates out of
//! configuration `j`, the diagonal is non-negative, off-diagonals are
//! non-positive and every column of a Markov matrix sums to zero. The
//! master equation is `dP/dt = -M P`.
//!
//! Configurations are enumerated colexicographically, so on two sites block
//! `n` is ordered `(n,0), (n-1,1), ..., (0,n)`.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::rates::{self, HahnParams, QParams, RateTable};

/// Largest enumerated state space.
pub const MAX_ENUMERATED: u128 = 1_000_000;
/// Largest dense matrix dimension.
pub const MAX_DENSE: usize = 2000;
/// Largest particle number for two-site rate queries.
pub const MAX_LOCAL_N: usize = 10_000;

/// Occupation numbers `(m_1, ..., m_N)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Configuration(Vec<usize>);

impl Configuration {
    pub fn new(occupations: Vec<usize>) -> Self {
        Self(occupations)
    }

    pub fn occupations(&self) -> &[usize] {
        &self.0
    }

    pub fn sites(&self) -> usize {
        self.0.len()
    }

    pub fn particles(&self) -> usize {
        self.0.iter().sum()
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, m) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{m}")?;
        }
        Ok(())
    }
}

impl FromStr for Configuration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let occ = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Parse(format!("bad occupation {t:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if occ.is_empty() {
            return Err(Error::Parse("empty configuration".into()));
        }
        Ok(Self(occ))
    }
}

/// Boundary condition of a chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

impl Boundary {
    /// Bonds as 0-based `(left, right)` site pairs. Bond `i` (1-based) joins
    /// sites `i` and `i+1`; on a ring bond `N` joins site `N` to site 1. A
    /// single site has no bonds.
    pub fn bonds(self, sites: usize) -> Vec<(usize, usize)> {
        let mut out: Vec<_> = (0..sites.saturating_sub(1)).map(|i| (i, i + 1)).collect();
        if self == Boundary::Periodic && sites >= 2 {
            out.push((sites - 1, 0));
        }
        out
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Open => "open",
            Boundary::Periodic => "periodic",
        })
    }
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "open" => Ok(Boundary::Open),
            "periodic" => Ok(Boundary::Periodic),
            other => Err(Error::Parse(format!("unknown boundary {other:?}"))),
        }
    }
}

/// `C(n + N - 1, N - 1)`, saturating.
pub fn state_count(sites: usize, n: usize) -> u128 {
    if sites == 0 {
        return 0;
    }
    let k = (sites - 1).min(n) as u128;
    let top = (n + sites - 1) as u128;
    let mut c: u128 = 1;
    for i in 0..k {
        c = match c.checked_mul(top - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    c
}

/// All configurations of `n` particles on `sites` sites in colex order.
pub fn enumerate_configs(sites: usize, n: usize) -> Result<Vec<Configuration>> {
    if sites == 0 {
        return Err(Error::Domain("a chain needs at least one site".into()));
    }
    let count = state_count(sites, n);
    if count > MAX_ENUMERATED {
        return Err(Error::Capacity {
            what: format!("state space of {n} particles on {sites} sites"),
            size: count,
            limit: MAX_ENUMERATED,
        });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut occ = vec![0; sites];
    fill_colex(&mut occ, sites, n, &mut out);
    Ok(out)
}

// Colex order: the last site varies slowest.
fn fill_colex(occ: &mut Vec<usize>, len: usize, n: usize, out: &mut Vec<Configuration>) {
    if len == 1 || n == 0 {
        occ[..len].fill(0);
        occ[0] = n;
        out.push(Configuration(occ.clone()));
        return;
    }
    for last in 0..=n {
        occ[len - 1] = last;
        fill_colex(occ, len - 1, n - last, out);
    }
    occ[len - 1] = 0;
}

/// Enumerated configurations with a reverse index.
#[derive(Clone, Debug)]
pub struct Basis {
    sites: usize,
    particles: usize,
    configs: Vec<Configuration>,
    // pascal[p][r] = C(r + p, p)
    pascal: Vec<Vec<usize>>,
    // step[p][x] = pascal[p + 1][x] - pascal[p][x], the rank offset of the bond (p, p + 1)
    step: Vec<Vec<usize>>,
}

impl Basis {
    pub fn new(sites: usize, particles: usize) -> Result<Self> {
        let configs = enumerate_configs(sites, particles)?;
        let mut pascal = vec![vec![1usize; particles + 1]; sites];
        for p in 1..sites {
            for r in 1..=particles {
                pascal[p][r] = pascal[p - 1][r] + pascal[p][r - 1];
            }
        }
        let step = pascal
            .windows(2)
            .map(|w| w[1].iter().zip(&w[0]).map(|(a, b)| a - b).collect())
            .collect();
        Ok(Self {
            sites,
            particles,
            configs,
            pascal,
            step,
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn configs(&self) -> &[Configuration] {
        &self.configs
    }

    /// Colex rank, `sum_p C(R_p + p, p) - C(R_p - m_p + p, p)` with `R_p` the
    /// particles on sites `0..=p`.
    pub fn index_of(&self, c: &Configuration) -> Option<usize> {
        if c.sites() != self.sites || c.particles() != self.particles {
            return None;
        }
        Some(self.rank(&c.0))
    }

    #[inline]
    fn rank(&self, occ: &[usize]) -> usize {
        let mut rank = 0;
        let mut remaining = self.particles;
        for p in (1..self.sites).rev() {
            let m = occ[p];
            rank += self.pascal[p][remaining] - self.pascal[p][remaining - m];
            remaining -= m;
        }
        rank
    }
}

fn sum_and_max(v: &[f64]) -> (f64, f64) {
    let mut sum = [0.0; 4];
    let mut max = [f64::NEG_INFINITY; 4];
    let chunks = v.chunks_exact(4);
    let tail = chunks.remainder();
    for c in chunks {
        for i in 0..4 {
            sum[i] += c[i];
            max[i] = if c[i] > max[i] { c[i] } else { max[i] };
        }
    }
    let (mut s, mut m) = (
        (sum[0] + sum[1]) + (sum[2] + sum[3]),
        max[0].max(max[1]).max(max[2]).max(max[3]),
    );
    for &x in tail {
        s += x;
        m = m.max(x);
    }
    (s, m)
}

/// Dense matrix whose rows and columns are labelled by configurations.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockMatrix {
    matrix: DMatrix<f64>,
    row_basis: Arc<[Configuration]>,
    col_basis: Arc<[Configuration]>,
}

impl BlockMatrix {
    pub fn new(
        matrix: DMatrix<f64>,
        row_basis: Vec<Configuration>,
        col_basis: Vec<Configuration>,
    ) -> Self {
        Self::shared(matrix, row_basis.into(), col_basis.into())
    }

    pub fn square(matrix: DMatrix<f64>, basis: Vec<Configuration>) -> Self {
        let basis: Arc<[Configuration]> = basis.into();
        Self::shared(matrix, basis.clone(), basis)
    }

    fn shared(
        matrix: DMatrix<f64>,
        row_basis: Arc<[Configuration]>,
        col_basis: Arc<[Configuration]>,
    ) -> Self {
        assert_eq!(matrix.nrows(), row_basis.len());
        assert_eq!(matrix.ncols(), col_basis.len());
        Self {
            matrix,
            row_basis,
            col_basis,
        }
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.matrix[(row, col)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn row_basis(&self) -> &[Configuration] {
        &self.row_basis
    }

    pub fn col_basis(&self) -> &[Configuration] {
        &self.col_basis
    }

    pub fn column_sums(&self) -> Vec<f64> {
        self.matrix.column_iter().map(|c| c.sum()).collect()
    }

    pub fn max_column_sum_deviation(&self) -> f64 {
        self.column_sums()
            .iter()
            .map(|s| s.abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Largest off-diagonal entry (should be `<= 0` for generators).
    pub fn max_off_diagonal(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for (j, col) in self.matrix.column_iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                if i != j && v > worst {
                    worst = v;
                }
            }
        }
        worst
    }

    /// `(max_column_sum_deviation, max_off_diagonal)` in one pass.
    pub fn generator_defects(&self) -> (f64, f64) {
        let (mut dev, mut worst) = (0.0f64, f64::NEG_INFINITY);
        for (j, col) in self.matrix.column_iter().enumerate() {
            let (above, rest) = col.as_slice().split_at(j);
            let (s0, w0) = sum_and_max(above);
            let (s1, w1) = sum_and_max(&rest[1..]);
            let d = (s0 + rest[0] + s1).abs();
            dev = if d.is_nan() {
                f64::INFINITY
            } else {
                dev.max(d)
            };
            worst = worst.max(w0).max(w1);
        }
        (dev, worst)
    }

    pub fn min_diagonal(&self) -> f64 {
        self.matrix
            .diagonal()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Max-abs entrywise difference.
    pub fn max_abs_diff(&self, other: &BlockMatrix) -> f64 {
        assert_eq!(self.matrix.shape(), other.matrix.shape());
        (&self.matrix - &other.matrix).amax()
    }

    /// Nonzero entries `(row, col, value)` in column-major order.
    pub fn nonzeros(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let rows = self.rows();
        (0..self.cols()).flat_map(move |j| {
            (0..rows).filter_map(move |i| {
                let v = self.matrix[(i, j)];
                (v != 0.0).then_some((i, j, v))
            })
        })
    }
}

/// Two-site coefficients of a bond term.
trait BondTerms {
    fn diagonal(&self, m: usize, m_right: usize) -> f64;
    /// Coefficient (before the minus sign) for `k` of `m` moving right.
    fn right(&self, m: usize, k: usize) -> f64;
    /// Coefficient for `k` of `m_right` moving left.
    fn left(&self, m_right: usize, k: usize) -> f64;
}

struct MarkovTerms(RateTable);

impl BondTerms for MarkovTerms {
    fn diagonal(&self, m: usize, m_right: usize) -> f64 {
        self.0.alpha_plus(m) + self.0.alpha_minus(m_right)
    }
    fn right(&self, m: usize, k: usize) -> f64 {
        self.0.beta_plus(m, k)
    }
    fn left(&self, m_right: usize, k: usize) -> f64 {
        self.0.beta_minus(m_right, k)
    }
}

struct HamiltonianTerms {
    alpha: Vec<(f64, f64)>,
    // rho[m][k-1]
    rho: Vec<Vec<f64>>,
}

impl HamiltonianTerms {
    fn new(n: usize, p: QParams) -> Self {
        let h = p.hahn();
        let alpha = (0..=n)
            .map(|m| (rates::alpha_plus(m, h), rates::alpha_minus(m, h)))
            .collect();
        let rho = (0..=n)
            .map(|m| {
                (1..=m)
                    .map(|k| rates::rho(m, k, p).expect("1 <= k <= m"))
                    .collect()
            })
            .collect();
        Self { alpha, rho }
    }
}

impl BondTerms for HamiltonianTerms {
    fn diagonal(&self, m: usize, m_right: usize) -> f64 {
        self.alpha[m].0 + self.alpha[m_right].1
    }
    fn right(&self, m: usize, k: usize) -> f64 {
        self.rho[m][k - 1]
    }
    fn left(&self, m_right: usize, k: usize) -> f64 {
        self.rho[m_right][k - 1]
    }
}

fn dense_basis(sites: usize, n: usize) -> Result<Basis> {
    let count = state_count(sites, n);
    if count > MAX_DENSE as u128 {
        return Err(Error::Capacity {
            what: format!("dense block of {n} particles on {sites} sites"),
            size: count,
            limit: MAX_DENSE as u128,
        });
    }
    Basis::new(sites, n)
}

/// Sum of bond terms. `twist` multiplies the off-diagonal entries of the
/// wrap-around bond by `twist^{Δm_1}`, with `Δm_1` the change of the
/// occupation of site 1.
fn assemble<T: BondTerms>(
    basis: Basis,
    boundary: Boundary,
    terms: &T,
    twist: Option<f64>,
) -> BlockMatrix {
    let dim = basis.len();
    let sites = basis.sites();
    let periodic = boundary == Boundary::Periodic && sites >= 2;
    let mut mat = DMatrix::zeros(dim, dim);
    let mut target = vec![0; sites];
    for (col, c) in basis.configs().iter().enumerate() {
        let occ = &c.0;
        // column-major storage
        let column = &mut mat.as_mut_slice()[col * dim..(col + 1) * dim];
        let mut hop = Hop {
            basis: &basis,
            terms,
            column,
            col,
            occ,
            target: &mut target,
        };
        // bonds without particles contribute nothing; visit the rest in order
        let mut through = 0;
        let mut done = None;
        for (i, &m) in occ.iter().enumerate() {
            if m == 0 {
                continue;
            }
            if i > 0 && done != Some(i - 1) {
                hop.bond(i - 1, i, through, 1.0);
            }
            through += m;
            if i + 1 < sites {
                hop.bond(i, i + 1, through, 1.0);
                done = Some(i);
            }
        }
        if periodic && (occ[sites - 1] > 0 || occ[0] > 0) {
            hop.bond(sites - 1, 0, occ[0], twist.unwrap_or(1.0));
        }
    }
    BlockMatrix::square(mat, basis.configs)
}

struct Hop<'a, T> {
    basis: &'a Basis,
    terms: &'a T,
    column: &'a mut [f64],
    col: usize,
    occ: &'a [usize],
    target: &'a mut Vec<usize>,
}

impl<T: BondTerms> Hop<'_, T> {
    /// Moves across the bond `(l, r)`, with `x0` the particles on sites
    /// `0..=min(l, r)` and `t` the factor per particle entering site 1.
    #[inline]
    fn bond(&mut self, l: usize, r: usize, x0: usize, t: f64) {
        let (m, mr) = (self.occ[l], self.occ[r]);
        if m == 0 && mr == 0 {
            return;
        }
        let (terms, col) = (self.terms, self.col);
        self.column[col] += terms.diagonal(m, mr);
        let (lo, hi) = (l.min(r), l.max(r));
        if hi == lo + 1 {
            // only the rank terms of sites lo and hi change
            let d = &self.basis.step[lo];
            let base = col + d[x0];
            let row = |x: usize| base - d[x];
            let onto_r = |k: usize| if r == hi { x0 - k } else { x0 + k };
            let onto_l = |k: usize| if r == hi { x0 + k } else { x0 - k };
            let mut f = 1.0;
            for k in 1..=m {
                f *= t;
                self.column[row(onto_r(k))] -= terms.right(m, k) * f;
            }
            f = 1.0;
            for k in 1..=mr {
                f /= t;
                self.column[row(onto_l(k))] -= terms.left(mr, k) * f;
            }
            return;
        }
        let target = &mut *self.target;
        target.copy_from_slice(self.occ);
        let mut f = 1.0;
        for k in 1..=m {
            f *= t;
            target[l] = m - k;
            target[r] = mr + k;
            self.column[self.basis.rank(target)] -= terms.right(m, k) * f;
        }
        f = 1.0;
        for k in 1..=mr {
            f /= t;
            target[l] = m + k;
            target[r] = mr - k;
            self.column[self.basis.rank(target)] -= terms.left(mr, k) * f;
        }
    }
}

/// Two-site Markov matrix on block `n`.
pub fn local_markov(n: usize, p: HahnParams) -> Result<BlockMatrix> {
    if n > MAX_LOCAL_N {
        return Err(Error::Capacity {
            what: "two-site block".into(),
            size: n as u128,
            limit: MAX_LOCAL_N as u128,
        });
    }
    chain_markov(2, n, p, Boundary::Open)
}

/// Two-site Hamiltonian density on block `n`.
pub fn local_hamiltonian(n: usize, p: QParams) -> Result<BlockMatrix> {
    if n > MAX_LOCAL_N {
        return Err(Error::Capacity {
            what: "two-site block".into(),
            size: n as u128,
            limit: MAX_LOCAL_N as u128,
        });
    }
    chain_hamiltonian(2, n, p, Boundary::Open)
}

/// `S_n = diag(1, q^{-2s}, ..., q^{-2ns})`, with `H_n = S_n M_n S_n^{-1}`.
pub fn local_similarity(n: usize, p: QParams) -> Result<BlockMatrix> {
    let basis = enumerate_configs(2, n)?;
    let diag =
        nalgebra::DVector::from_fn(n + 1, |i, _| p.q().powi(-((i as u32 * p.two_s()) as i32)));
    Ok(BlockMatrix::square(DMatrix::from_diagonal(&diag), basis))
}

/// Whole-chain Markov matrix `M = sum over bonds of the local generator`.
pub fn chain_markov(
    sites: usize,
    n: usize,
    p: HahnParams,
    boundary: Boundary,
) -> Result<BlockMatrix> {
    let basis = dense_basis(sites, n)?;
    Ok(assemble(
        basis,
        boundary,
        &MarkovTerms(RateTable::new(n, p)),
        None,
    ))
}

/// Whole-chain Hamiltonian. On a ring the wrap-around bond term is
/// conjugated by the diagonal twist `q^{2sN S_0^{[1]}}`.
pub fn chain_hamiltonian(
    sites: usize,
    n: usize,
    p: QParams,
    boundary: Boundary,
) -> Result<BlockMatrix> {
    let basis = dense_basis(sites, n)?;
    let twist = p.q().powi((p.two_s() as usize * sites) as i32);
    Ok(assemble(
        basis,
        boundary,
        &HamiltonianTerms::new(n, p),
        Some(twist),
    ))
}

/// Exponent `sum_k k m_k` (sites counted from 1).
pub fn similarity_exponent(c: &Configuration) -> u64 {
    c.0.iter()
        .enumerate()
        .map(|(i, &m)| (i as u64 + 1) * m as u64)
        .sum()
}

/// Diagonal `D` with entries `q^{2s sum_k k m_k}`, satisfying `M = D H D^{-1}`.
///
/// The configuration-independent factor `q^{2s s sum_k k}` is dropped.
pub fn chain_similarity(sites: usize, n: usize, p: QParams) -> Result<BlockMatrix> {
    let basis = dense_basis(sites, n)?;
    let diag: Vec<f64> = basis
        .configs()
        .iter()
        .map(|c| {
            p.q()
                .powi((p.two_s() as u64 * similarity_exponent(c)) as i32)
        })
        .collect();
    if diag.iter().any(|&d| d < 1e-300) {
        log::warn!("similarity diagonal underflows below 1e-300 for N = {sites}, n = {n}");
    }
    Ok(BlockMatrix::square(
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag)),
        basis.configs().to_vec(),
    ))
}

/// `D A D^{-1}` for a diagonal `D`.
pub fn conjugate_diagonal(d: &BlockMatrix, a: &BlockMatrix) -> BlockMatrix {
    let dd = d.matrix().diagonal();
    let m = DMatrix::from_fn(a.rows(), a.cols(), |i, j| a.get(i, j) * dd[i] / dd[j]);
    BlockMatrix::shared(m, a.row_basis.clone(), a.col_basis.clone())
}

/// `D H D^{-1}` with `D = chain_similarity`, formed from exponent
/// differences so that no diagonal entry is materialised.
pub fn conjugate_by_similarity(h: &BlockMatrix, p: QParams) -> BlockMatrix {
    let e: Vec<i64> = h
        .row_basis
        .iter()
        .map(|c| similarity_exponent(c) as i64)
        .collect();
    let two_s = p.two_s() as i64;
    let m = DMatrix::from_fn(h.rows(), h.cols(), |i, j| {
        let v = h.get(i, j);
        if v == 0.0 {
            0.0
        } else {
            v * p.q().powi((two_s * (e[i] - e[j])) as i32)
        }
    });
    BlockMatrix::shared(m, h.row_basis.clone(), h.col_basis.clone())
}

/// Real eigenvalues in ascending order; fails on a non-real spectrum.
pub fn spectrum(a: &BlockMatrix, tol_imag: f64) -> Result<Vec<f64>> {
    linalg::real_spectrum(a.matrix(), tol_imag)
}

/// All eigenvalues sorted by real then imaginary part.
pub fn complex_spectrum(a: &BlockMatrix) -> Result<Vec<Complex<f64>>> {
    linalg::sorted_complex_eigenvalues(a.matrix())
}

/// `lambda_j = alpha_-(j) + alpha_+(j)`.
pub fn lambda_eigenvalue(j: usize, p: QParams) -> f64 {
    let h = p.hahn();
    rates::alpha_minus(j, h) + rates::alpha_plus(j, h)
}

/// `lambda_j = (psi_q(j+2s) - psi_q(2s)) / (-q^{4s} log q)`.
pub fn lambda_eigenvalue_psi(
    j: usize,
    p: QParams,
    ctrl: crate::qspecial::SeriesControl,
) -> Result<f64> {
    if j == 0 {
        return Ok(0.0);
    }
    let t = p.two_s() as f64;
    let q = p.q();
    let d = crate::qspecial::psi_q(j as f64 + t, q, ctrl)? - crate::qspecial::psi_q(t, q, ctrl)?;
    Ok(d / (-p.mu() * q.ln()))
}

/// Metadata written on the first line of a matrix export.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixHeader {
    pub rows: usize,
    pub cols: usize,
    pub sites: usize,
    pub particles: usize,
    pub gamma: f64,
    pub mu: f64,
}

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes the matrix export: a `# qhahn-matrix ...` header line, optional
/// further `#` comment lines, then one `<row> <col> <value>` line per
/// nonzero entry (0-indexed).
pub fn write_matrix<W: Write>(
    w: &mut W,
    a: &BlockMatrix,
    header: &MatrixHeader,
    comments: &[String],
) -> Result<()> {
    writeln!(
        w,
        "# qhahn-matrix rows={} cols={} basis=colex N={} n={} gamma={} mu={}",
        header.rows,
        header.cols,
        header.sites,
        header.particles,
        fmt_f64(header.gamma),
        fmt_f64(header.mu)
    )?;
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    for (i, j, v) in a.nonzeros() {
        writeln!(w, "{i} {j} {}", fmt_f64(v))?;
    }
    Ok(())
}

fn header_field<'a>(fields: &HashMap<&'a str, &'a str>, key: &str) -> Result<&'a str> {
    fields
        .get(key)
        .copied()
        .ok_or_else(|| Error::Parse(format!("matrix header lacks {key}")))
}

fn parse_num<T: FromStr>(s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Parse(format!("bad number {s:?}")))
}

/// Reads a matrix export back into its header and dense entries.
pub fn read_matrix<R: BufRead>(r: R) -> Result<(MatrixHeader, DMatrix<f64>)> {
    let mut lines = r.lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::Parse("empty matrix file".into()))??;
    let rest = first
        .strip_prefix("# qhahn-matrix ")
        .ok_or_else(|| Error::Parse("missing qhahn-matrix header".into()))?;
    let fields: HashMap<&str, &str> = rest
        .split_whitespace()
        .filter_map(|t| t.split_once('='))
        .collect();
    if header_field(&fields, "basis")? != "colex" {
        return Err(Error::Parse("only colex bases are supported".into()));
    }
    let header = MatrixHeader {
        rows: parse_num(header_field(&fields, "rows")?)?,
        cols: parse_num(header_field(&fields, "cols")?)?,
        sites: parse_num(header_field(&fields, "N")?)?,
        particles: parse_num(header_field(&fields, "n")?)?,
        gamma: parse_num(header_field(&fields, "gamma")?)?,
        mu: parse_num(header_field(&fields, "mu")?)?,
    };
    let mut m = DMatrix::zeros(header.rows, header.cols);
    for line in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let (Some(i), Some(j), Some(v), None) = (it.next(), it.next(), it.next(), it.next()) else {
            return Err(Error::Parse(format!("bad matrix line {line:?}")));
        };
        let (i, j): (usize, usize) = (parse_num(i)?, parse_num(j)?);
        if i >= header.rows || j >= header.cols {
            return Err(Error::Parse(format!("entry ({i},{j}) out of range")));
        }
        m[(i, j)] = parse_num(v)?;
    }
    Ok((header, m))
}

/// One configuration per line, comma-separated.
pub fn write_basis<W: Write>(w: &mut W, basis: &[Configuration]) -> Result<()> {
    for c in basis {
        writeln!(w, "{c}")?;
    }
    Ok(())
}

pub fn read_basis<R: BufRead>(r: R) -> Result<Vec<Configuration>> {
    r.lines()
        .filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
        .map(|l| l?.parse())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(v: &[usize]) -> Configuration {
        Configuration::new(v.to_vec())
    }

    fn hp() -> HahnParams {
        HahnParams::new(0.25, 0.5).unwrap()
    }

    #[test]
    fn rank_inverts_enumeration() {
        for (sites, n) in [(1, 4), (2, 0), (2, 7), (3, 5), (5, 4), (9, 2)] {
            let basis = Basis::new(sites, n).unwrap();
            for (i, c) in basis.configs().iter().enumerate() {
                assert_eq!(basis.index_of(c), Some(i));
            }
        }
        let basis = Basis::new(3, 2).unwrap();
        assert_eq!(basis.index_of(&cfg(&[1, 1, 1])), None);
        assert_eq!(basis.index_of(&cfg(&[2, 0])), None);
    }

    #[test]
    fn enumeration_order_and_counts() {
        assert_eq!(
            enumerate_configs(2, 2).unwrap(),
            vec![cfg(&[2, 0]), cfg(&[1, 1]), cfg(&[0, 2])]
        );
        assert_eq!(enumerate_configs(1, 5).unwrap(), vec![cfg(&[5])]);
        assert_eq!(enumerate_configs(3, 2).unwrap().len(), 6);
        assert_eq!(
            enumerate_configs(3, 2).unwrap(),
            vec![
                cfg(&[2, 0, 0]),
                cfg(&[1, 1, 0]),
                cfg(&[0, 2, 0]),
                cfg(&[1, 0, 1]),
                cfg(&[0, 1, 1]),
                cfg(&[0, 0, 2])
            ]
        );
        assert_eq!(enumerate_configs(4, 0).unwrap(), vec![cfg(&[0, 0, 0, 0])]);
        assert!(matches!(
            enumerate_configs(30, 30),
            Err(Error::Capacity { .. })
        ));
        assert!(enumerate_configs(0, 1).is_err());
    }

    #[test]
    fn counts_match_binomial() {
        for sites in 1..6 {
            for n in 0..7 {
                let brute = enumerate_configs(sites, n).unwrap().len() as u128;
                assert_eq!(brute, state_count(sites, n));
            }
        }
    }

    #[test]
    fn local_markov_small_blocks() {
        let m0 = local_markov(0, hp()).unwrap();
        assert_eq!(m0.rows(), 1);
        assert_eq!(m0.get(0, 0), 0.0);
        let m1 = local_markov(1, hp()).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[2.0, -4.0, -2.0, 4.0]);
        assert!((m1.matrix() - expect).amax() < 1e-15);
        let m2 = local_markov(2, hp()).unwrap();
        assert!((m2.get(0, 0) - 2.2857142857142856).abs() < 1e-14);
        assert!((m2.get(1, 0) + 1.4285714285714286).abs() < 1e-14);
        assert!((m2.get(2, 0) + 0.8571428571428571).abs() < 1e-14);
    }

    #[test]
    fn local_markov_matches_displayed_layout() {
        // Row 0 holds -beta_-(j, j); the first column holds -beta_+(n, i).
        let n = 4;
        let m = local_markov(n, hp()).unwrap();
        for j in 1..=n {
            assert!((m.get(0, j) + rates::beta_minus(j, j, hp()).unwrap()).abs() < 1e-14);
            assert!((m.get(j, 0) + rates::beta_plus(n, j, hp()).unwrap()).abs() < 1e-14);
        }
        assert!(m.max_column_sum_deviation() < 1e-12);
    }

    #[test]
    fn local_hamiltonian_two_by_two() {
        let p = QParams::new(0.6, 1).unwrap();
        let h = local_hamiltonian(1, p).unwrap();
        let expect = DMatrix::from_row_slice(
            2,
            2,
            &[
                1.5625,
                -2.6041666666666665,
                -2.6041666666666665,
                4.340277777777778,
            ],
        );
        assert!((h.matrix() - expect).amax() < 1e-13);
        let s = local_similarity(1, p).unwrap();
        let m = local_markov(1, p.hahn()).unwrap();
        let conj = conjugate_diagonal(&s, &m);
        assert!(conj.max_abs_diff(&h) < 1e-13);
    }

    #[test]
    fn chain_on_two_sites_is_local() {
        let p = hp();
        for n in 0..5 {
            assert_eq!(
                chain_markov(2, n, p, Boundary::Open).unwrap(),
                local_markov(n, p).unwrap()
            );
        }
    }

    #[test]
    fn three_site_single_particle() {
        let p = hp();
        let open = chain_markov(3, 1, p, Boundary::Open).unwrap();
        // basis (1,0,0), (0,1,0), (0,0,1)
        let expect =
            DMatrix::from_row_slice(3, 3, &[2.0, -4.0, 0.0, -2.0, 6.0, -4.0, 0.0, -2.0, 4.0]);
        assert!((open.matrix() - &expect).amax() < 1e-14);
        let ring = chain_markov(3, 1, p, Boundary::Periodic).unwrap();
        let expect =
            DMatrix::from_row_slice(3, 3, &[6.0, -4.0, -2.0, -2.0, 6.0, -4.0, -4.0, -2.0, 6.0]);
        assert!((ring.matrix() - &expect).amax() < 1e-14);
        assert!(ring.max_column_sum_deviation() < 1e-14);
    }

    #[test]
    fn spectrum_of_smallest_block() {
        let ev = spectrum(&local_markov(1, hp()).unwrap(), 1e-8).unwrap();
        assert!(ev[0].abs() < 1e-13 && (ev[1] - 6.0).abs() < 1e-13);
    }

    #[test]
    fn similarity_on_two_sites_is_inverse_of_local_transform() {
        let p = QParams::new(0.7, 3).unwrap();
        let n = 4;
        let d = chain_similarity(2, n, p).unwrap();
        let s = local_similarity(n, p).unwrap();
        let products: Vec<f64> = (0..=n).map(|i| d.get(i, i) * s.get(i, i)).collect();
        for v in &products {
            assert!((v / products[0] - 1.0).abs() < 1e-13);
        }
        let d0 = chain_similarity(3, 0, p).unwrap();
        assert_eq!(d0.rows(), 1);
        assert!(d0.get(0, 0) > 0.0);
    }

    #[test]
    fn lambda_values() {
        let p = QParams::new(0.6, 1).unwrap();
        assert_eq!(lambda_eigenvalue(0, p), 0.0);
        assert!((lambda_eigenvalue(1, p) - 1.36 / (0.36 * 0.64)).abs() < 1e-13);
        let psi = lambda_eigenvalue_psi(1, p, Default::default()).unwrap();
        assert!((psi - lambda_eigenvalue(1, p)).abs() < 1e-10);
    }

    #[test]
    fn export_round_trip() {
        let m = chain_markov(3, 2, hp(), Boundary::Periodic).unwrap();
        let header = MatrixHeader {
            rows: m.rows(),
            cols: m.cols(),
            sites: 3,
            particles: 2,
            gamma: 0.25,
            mu: 0.5,
        };
        let mut buf = Vec::new();
        write_matrix(&mut buf, &m, &header, &["markov".into()]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# qhahn-matrix rows=6 cols=6 basis=colex N=3 n=2 gamma=2.5000000000000000e-1 mu=5.0000000000000000e-1\n"));
        let (h, back) = read_matrix(&buf[..]).unwrap();
        assert_eq!(h, header);
        assert_eq!(&back, m.matrix());
        let mut b = Vec::new();
        write_basis(&mut b, m.col_basis()).unwrap();
        assert_eq!(
            String::from_utf8(b.clone()).unwrap().lines().next(),
            Some("2,0,0")
        );
        assert_eq!(read_basis(&b[..]).unwrap(), m.col_basis());
    }

    #[test]
    fn malformed_exports_are_rejected() {
        assert!(read_matrix(&b"0 0 1\n"[..]).is_err());
        assert!(read_matrix(
            &b"# qhahn-matrix rows=1 cols=1 basis=colex N=1 n=0 gamma=0.5 mu=0.5\n3 0 1\n"[..]
        )
        .is_err());
        assert!("1,x".parse::<Configuration>().is_err());
        assert!("torus".parse::<Boundary>().is_err());
    }

    #[test]
    fn hamiltonian_is_conjugate_of_markov() {
        for &(q, two_s) in &[(0.6, 1), (0.8, 2), (0.45, 3)] {
            let p = QParams::new(q, two_s).unwrap();
            for boundary in [Boundary::Open, Boundary::Periodic] {
                for (sites, n) in [(3, 2), (4, 3), (5, 2)] {
                    let m = chain_markov(sites, n, p.hahn(), boundary).unwrap();
                    let h = chain_hamiltonian(sites, n, p, boundary).unwrap();
                    let back = conjugate_by_similarity(&h, p);
                    let scale = m.max_abs();
                    assert!(
                        crate::tolerance::matrix(back.max_abs_diff(&m), scale) < 1e-12,
                        "{boundary} N={sites} n={n} q={q}"
                    );
                    let d = chain_similarity(sites, n, p).unwrap();
                    let direct = conjugate_diagonal(&d, &h);
                    assert!(crate::tolerance::matrix(direct.max_abs_diff(&m), scale) < 1e-12);
                }
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn markov_columns_vanish(gamma in 0.01f64..0.95, mu in 0.01f64..0.95, sites in 1usize..5, n in 0usize..5) {
            let p = HahnParams::new(gamma, mu).unwrap();
            for boundary in [Boundary::Open, Boundary::Periodic] {
                let m = chain_markov(sites, n, p, boundary).unwrap();
                let scale = m.max_abs();
                proptest::prop_assert!(crate::tolerance::matrix(m.max_column_sum_deviation(), scale) < 1e-12);
                if m.rows() > 1 {
                    proptest::prop_assert!(m.max_off_diagonal() <= 0.0);
                }
                proptest::prop_assert!(m.min_diagonal() >= 0.0);
                let (dev, off) = m.generator_defects();
                proptest::prop_assert!((dev - m.max_column_sum_deviation()).abs() <= 1e-14 * scale.max(1.0));
                proptest::prop_assert_eq!(off, m.max_off_diagonal());
            }
        }

        #[test]
        fn config_text_round_trips(occ in proptest::collection::vec(0usize..50, 1..8)) {
            let c = Configuration::new(occ);
            proptest::prop_assert_eq!(c.to_string().parse::<Configuration>().unwrap(), c);
        }
    }
}
