//! Named invariant suites with pass/fail reports.
//!
//! Each case records the worst residual over one parameter point. A check
//! that fails to evaluate is recorded with an infinite residual and the error
//! message.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{self, state_count, Boundary, Configuration};
use crate::qspecial::{self, SeriesControl};
use crate::rates::{self, HahnParams, QParams, Sign};
use crate::simulator::{self, Stop};
use crate::uqsl2::{self, Direction};
use crate::{linalg, tolerance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    All,
    Qspecial,
    Rates,
    Generator,
    Uqsl2,
    Simulator,
}

impl Suite {
    const PARTS: [Suite; 5] = [
        Suite::Qspecial,
        Suite::Rates,
        Suite::Generator,
        Suite::Uqsl2,
        Suite::Simulator,
    ];
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::All => "all",
            Suite::Qspecial => "qspecial",
            Suite::Rates => "rates",
            Suite::Generator => "generator",
            Suite::Uqsl2 => "uqsl2",
            Suite::Simulator => "simulator",
        })
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "all" => Suite::All,
            "qspecial" => Suite::Qspecial,
            "rates" => Suite::Rates,
            "generator" => Suite::Generator,
            "uqsl2" => Suite::Uqsl2,
            "simulator" => Suite::Simulator,
            other => return Err(Error::Parse(format!("unknown suite {other:?}"))),
        })
    }
}

/// Parameter points swept by the suites.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub qs: Vec<f64>,
    pub two_s: Vec<u32>,
    pub hahn: Vec<(f64, f64)>,
}

impl Grid {
    /// `q in {0.3, 0.6, 0.9}`, `2s in {1,2,3,4}`, `(gamma, mu) in {0.25, 0.5, 0.75}^2`.
    pub fn standard() -> Self {
        let g = [0.25, 0.5, 0.75];
        Self {
            qs: vec![0.3, 0.6, 0.9],
            two_s: vec![1, 2, 3, 4],
            hahn: g
                .iter()
                .flat_map(|&a| g.iter().map(move |&b| (a, b)))
                .collect(),
        }
    }

    /// One point per axis family, for quick runs.
    pub fn small() -> Self {
        Self {
            qs: vec![0.6],
            two_s: vec![1, 2],
            hahn: vec![(0.25, 0.5), (0.36, 0.36)],
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "default" => Ok(Self::standard()),
            "small" => Ok(Self::small()),
            other => Err(Error::Parse(format!("unknown grid {other:?}"))),
        }
    }

    fn qparams(&self) -> impl Iterator<Item = QParams> + '_ {
        self.qs.iter().flat_map(move |&q| {
            self.two_s
                .iter()
                .map(move |&t| QParams::new(q, t).expect("grid point is valid"))
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckCase {
    pub name: String,
    pub parameters: BTreeMap<String, f64>,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub suite: Suite,
    pub cases: Vec<CheckCase>,
    pub summary: Summary,
    pub tool_version: String,
    pub wall_time_seconds: f64,
}

impl CheckReport {
    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }
}

/// Settings shared by all suites.
#[derive(Clone, Debug)]
pub struct CheckConfig {
    pub max_n: usize,
    pub grid: Grid,
    /// Events per stationarity run in the simulator suite.
    pub sim_events: u64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            max_n: 8,
            grid: Grid::standard(),
            sim_events: 300_000,
        }
    }
}

struct Cases(Vec<CheckCase>);

impl Cases {
    fn push(&mut self, name: &str, params: &[(&str, f64)], tol: f64, residual: Result<f64>) {
        let (residual, error) = match residual {
            Ok(r) => (r, None),
            Err(e) => (f64::INFINITY, Some(e.to_string())),
        };
        self.0.push(CheckCase {
            name: name.to_string(),
            parameters: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            residual,
            tolerance: tol,
            pass: residual <= tol,
            error,
        });
    }
}

fn qs_params(p: QParams) -> [(&'static str, f64); 2] {
    [("q", p.q()), ("two_s", p.two_s() as f64)]
}

fn worst<I: IntoIterator<Item = Result<f64>>>(it: I) -> Result<f64> {
    let mut w: f64 = 0.0;
    for r in it {
        let r = r?;
        if r.is_nan() {
            return Ok(f64::INFINITY);
        }
        w = w.max(r);
    }
    Ok(w)
}

/// Runs one suite (or all of them).
pub fn run(suite: Suite, cfg: &CheckConfig) -> CheckReport {
    let start = Instant::now();
    let mut cases = Cases(Vec::new());
    let parts: Vec<Suite> = if suite == Suite::All {
        Suite::PARTS.to_vec()
    } else {
        vec![suite]
    };
    for part in parts {
        match part {
            Suite::Qspecial => qspecial_suite(&mut cases, cfg),
            Suite::Rates => rates_suite(&mut cases, cfg),
            Suite::Generator => generator_suite(&mut cases, cfg),
            Suite::Uqsl2 => uqsl2_suite(&mut cases, cfg),
            Suite::Simulator => simulator_suite(&mut cases, cfg),
            Suite::All => unreachable!(),
        }
    }
    let passed = cases.0.iter().filter(|c| c.pass).count();
    let total = cases.0.len();
    CheckReport {
        suite,
        cases: cases.0,
        summary: Summary {
            total,
            passed,
            failed: total - passed,
        },
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
    }
}

fn qspecial_suite(cases: &mut Cases, cfg: &CheckConfig) {
    let ctrl = SeriesControl::default();
    for &q in &cfg.grid.qs {
        cases.push(
            "reflection",
            &[("q", q)],
            1e-10,
            worst([0.1, 0.2, 0.3].iter().flat_map(|&x| {
                (1..=3).map(move |k| {
                    qspecial::reflection_residual(x, k, q, ctrl).map(|i| i.residual())
                })
            })),
        );
        cases.push(
            "gamma_conversion",
            &[("q", q)],
            1e-12,
            worst(
                [0.3, 0.75, 1.5, 2.5]
                    .iter()
                    .map(|&x| qspecial::gamma_conversion(x, q, ctrl).map(|i| i.residual())),
            ),
        );
        cases.push(
            "psi_conversion",
            &[("q", q)],
            1e-12,
            worst(
                [0.3, 0.75, 1.5, 2.5]
                    .iter()
                    .map(|&x| qspecial::psi_conversion(x, q, ctrl).map(|i| i.residual())),
            ),
        );
        for &t in &cfg.grid.two_s {
            let mut items = Vec::new();
            for j in 1..=cfg.max_n {
                for k in 0..j {
                    let (a, b) = (k as f64 - j as f64, k as f64 + t as f64);
                    items.push(
                        qspecial::krattenthaler_residual(a, b, q, ctrl).map(|i| i.residual()),
                    );
                }
            }
            cases.push(
                "krattenthaler",
                &[("q", q), ("two_s", t as f64)],
                1e-10,
                worst(items),
            );
        }
    }
    let mut split = Vec::new();
    for &a in &[0.2, 0.5, 0.9] {
        for &b in &[0.3, 0.6, 0.9] {
            for m in [0usize, 3, 10, 20] {
                for n in [0usize, 5, 20] {
                    let lhs = qspecial::q_pochhammer(a, b, m + n);
                    let rhs = qspecial::q_pochhammer(a, b, n)
                        * qspecial::q_pochhammer(a * b.powi(n as i32), b, m);
                    split.push(Ok(tolerance::mixed(lhs, rhs)));
                }
            }
        }
    }
    cases.push("pochhammer_split", &[], 1e-12, worst(split));
}

fn rates_suite(cases: &mut Cases, cfg: &CheckConfig) {
    let max_m = 12;
    let ctrl = SeriesControl::default();
    for p in cfg.grid.qparams() {
        let h = p.hahn();
        let mut sym = Vec::new();
        let mut rec = Vec::new();
        let mut psi = Vec::new();
        let mut diff = Vec::new();
        for m in 1..=max_m {
            for k in 1..=m {
                let half = p.q().powi((k as u32 * p.two_s()) as i32);
                let res = (|| {
                    let rho = rates::rho(m, k, p)?;
                    let bp = rates::beta_plus(m, k, h)?;
                    let bm = rates::beta_minus(m, k, h)?;
                    Ok(tolerance::mixed(bp / half, rho).max(tolerance::mixed(bm * half, rho)))
                })();
                sym.push(res);
                rec.push(
                    rates::rho_recursion_residuals(m, k, p)
                        .map(|(a, b)| a.unwrap_or(0.0).max(b.unwrap_or(0.0))),
                );
            }
            for sign in [Sign::Plus, Sign::Minus] {
                let direct = match sign {
                    Sign::Plus => rates::alpha_plus(m, h),
                    Sign::Minus => rates::alpha_minus(m, h),
                };
                psi.push(rates::alpha_psi(m, sign, p, ctrl).map(|v| tolerance::mixed(v, direct)));
            }
            let (a, b) = rates::alpha_difference_residuals(m, p);
            diff.push(Ok(a.max(b)));
        }
        cases.push("symmetrization", &qs_params(p), 1e-12, worst(sym));
        cases.push("rho_recursions", &qs_params(p), 1e-12, worst(rec));
        cases.push("alpha_psi", &qs_params(p), 1e-10, worst(psi));
        cases.push("alpha_differences", &qs_params(p), 1e-12, worst(diff));
    }
    for &(g, mu) in &cfg.grid.hahn {
        let params = [("gamma", g), ("mu", mu)];
        let Ok(h) = HahnParams::new(g, mu) else {
            cases.push(
                "column_seed",
                &params,
                1e-12,
                Err(Error::Domain("invalid grid point".into())),
            );
            continue;
        };
        let mut seed = Vec::new();
        let mut positive = true;
        for m in 1..=max_m {
            let mut sp = 0.0;
            let mut sm = 0.0;
            for k in 1..=m {
                let (bp, bm) = (
                    rates::beta_plus(m, k, h).unwrap(),
                    rates::beta_minus(m, k, h).unwrap(),
                );
                positive &= bp > 0.0 && bm > 0.0;
                sp += bp;
                sm += bm;
            }
            let (ap, am) = (rates::alpha_plus(m, h), rates::alpha_minus(m, h));
            positive &= ap > 0.0 && am > 0.0;
            seed.push(Ok(tolerance::mixed(ap, sp).max(tolerance::mixed(am, sm))));
        }
        cases.push("column_seed", &params, 1e-12, worst(seed));
        cases.push(
            "positivity",
            &params,
            0.0,
            Ok(if positive { 0.0 } else { 1.0 }),
        );
        let table = rates::RateTable::new(max_m, h);
        let mut agree = Vec::new();
        for m in 1..=max_m {
            for k in 1..=m {
                agree.push(Ok(tolerance::mixed(
                    table.beta_plus(m, k),
                    rates::beta_plus(m, k, h).unwrap(),
                )
                .max(tolerance::mixed(
                    table.beta_minus(m, k),
                    rates::beta_minus(m, k, h).unwrap(),
                ))));
            }
        }
        cases.push("rate_table", &params, 1e-14, worst(agree));
    }
    for &g in &[0.25, 0.36, 0.5, 0.75] {
        cases.push(
            "madm_m_independence",
            &[("gamma", g)],
            1e-13,
            madm_residual(g),
        );
    }
}

/// Worst deviation of `beta_±(m,k)` at `mu = gamma` from the occupation-free
/// rates, for `k <= 4` and `m in [k, k+6]`.
pub fn madm_residual(gamma: f64) -> Result<f64> {
    let h = HahnParams::new(gamma, gamma)?;
    let mut items = Vec::new();
    for k in 1..=4 {
        let (rp, rm) = (
            rates::madm_rate(k, gamma, Sign::Plus)?,
            rates::madm_rate(k, gamma, Sign::Minus)?,
        );
        for m in k..=k + 6 {
            items.push(Ok(tolerance::mixed(rates::beta_plus(m, k, h)?, rp)
                .max(tolerance::mixed(rates::beta_minus(m, k, h)?, rm))));
        }
    }
    worst(items)
}

fn generator_suite(cases: &mut Cases, cfg: &CheckConfig) {
    let max_states = 500u128;
    for &(g, mu) in &cfg.grid.hahn {
        let Ok(h) = HahnParams::new(g, mu) else {
            continue;
        };
        for boundary in [Boundary::Open, Boundary::Periodic] {
            let mut sums = Vec::new();
            let mut signs = true;
            for sites in 1..=10 {
                // A single site has one state for every n.
                for n in 0..=cfg.max_n.max(12) {
                    if state_count(sites, n) > max_states {
                        break;
                    }
                    match generator::chain_markov(sites, n, h, boundary) {
                        Ok(m) => {
                            sums.push(Ok(tolerance::matrix(
                                m.max_column_sum_deviation(),
                                m.max_abs(),
                            )));
                            signs &= m.rows() == 1 || m.max_off_diagonal() <= 0.0;
                            signs &= m.min_diagonal() >= 0.0;
                        }
                        Err(e) => sums.push(Err(e)),
                    }
                }
            }
            let params = [
                ("gamma", g),
                ("mu", mu),
                ("periodic", (boundary == Boundary::Periodic) as u8 as f64),
            ];
            cases.push("column_sums", &params, 1e-11, worst(sums));
            cases.push(
                "sign_pattern",
                &params,
                0.0,
                Ok(if signs { 0.0 } else { 1.0 }),
            );
        }
    }
    for p in cfg.grid.qparams() {
        let mut spec = Vec::new();
        let mut markov = Vec::new();
        for n in 0..=cfg.max_n {
            spec.push(two_site_spectrum_residual(n, p));
            markov.push(markov_hamiltonian_spectrum_residual(n, p));
        }
        cases.push("two_site_spectrum", &qs_params(p), 1e-8, worst(spec));
        cases.push(
            "markov_vs_hamiltonian_spectrum",
            &qs_params(p),
            1e-9,
            worst(markov),
        );
    }
    for &q in &[0.6, 0.9] {
        for t in [1, 2] {
            let p = QParams::new(q, t).expect("valid");
            let mut items = Vec::new();
            for boundary in [Boundary::Open, Boundary::Periodic] {
                for (sites, n) in [(3, 2), (3, 3), (4, 2)] {
                    items.push(similarity_residual(sites, n, p, boundary));
                }
            }
            cases.push("chain_similarity", &qs_params(p), 1e-11, worst(items));
        }
    }
}

/// Max mixed deviation of the sorted spectrum of `H_n` from
/// `{lambda_j}_{j=0..n}`.
pub fn two_site_spectrum_residual(n: usize, p: QParams) -> Result<f64> {
    let h = generator::local_hamiltonian(n, p)?;
    let ev = generator::spectrum(&h, linalg::DEFAULT_TOL_IMAG)?;
    let mut lambda: Vec<f64> = (0..=n)
        .map(|j| generator::lambda_eigenvalue(j, p))
        .collect();
    lambda.sort_by(f64::total_cmp);
    Ok(ev
        .iter()
        .zip(&lambda)
        .map(|(a, b)| tolerance::mixed(*a, *b))
        .fold(0.0, f64::max))
}

/// Sorted spectra of `M_n` and `H_n` compared entrywise.
pub fn markov_hamiltonian_spectrum_residual(n: usize, p: QParams) -> Result<f64> {
    let m = generator::spectrum(
        &generator::local_markov(n, p.hahn())?,
        linalg::DEFAULT_TOL_IMAG,
    )?;
    let h = generator::spectrum(
        &generator::local_hamiltonian(n, p)?,
        linalg::DEFAULT_TOL_IMAG,
    )?;
    Ok(m.iter()
        .zip(&h)
        .map(|(a, b)| tolerance::mixed(*a, *b))
        .fold(0.0, f64::max))
}

/// `|M - D H D^{-1}|` on a chain, relative once entries exceed the matrix
/// threshold.
pub fn similarity_residual(sites: usize, n: usize, p: QParams, boundary: Boundary) -> Result<f64> {
    let m = generator::chain_markov(sites, n, p.hahn(), boundary)?;
    let h = generator::chain_hamiltonian(sites, n, p, boundary)?;
    let d = generator::chain_similarity(sites, n, p)?;
    let back = generator::conjugate_diagonal(&d, &h);
    Ok(tolerance::matrix(back.max_abs_diff(&m), m.max_abs()))
}

fn uqsl2_suite(cases: &mut Cases, cfg: &CheckConfig) {
    for p in cfg.grid.qparams() {
        let params = qs_params(p);
        for (name, dir) in [
            ("intertwiner_zero", Direction::Zero),
            ("intertwiner_plus", Direction::Plus),
            ("intertwiner_minus", Direction::Minus),
        ] {
            let lo = if dir == Direction::Minus { 1 } else { 0 };
            cases.push(
                name,
                &params,
                1e-10,
                worst((lo..=cfg.max_n).map(|n| uqsl2::intertwiner_residual(n, p, dir))),
            );
        }
        cases.push(
            "commutator",
            &params,
            1e-10,
            worst((0..=cfg.max_n).map(|n| uqsl2::commutator_residual(n, p))),
        );
        let mut coeffs = Vec::new();
        for m in 0..=cfg.max_n {
            for mp in 0..=cfg.max_n - m {
                coeffs.push(
                    uqsl2::coefficient_residuals(m, mp, p)
                        .map(|r| r.values().copied().fold(0.0, f64::max)),
                );
            }
        }
        cases.push("coefficients", &params, 1e-11, worst(coeffs));
        cases.push(
            "casimir",
            &params,
            1e-9,
            worst((0..=cfg.max_n).map(|n| uqsl2::casimir_check(n, p))),
        );
        let lw: Vec<_> = (0..=cfg.max_n)
            .map(|j| uqsl2::lowest_weight_checks(j, p))
            .collect();
        cases.push(
            "lowest_weight_annihilation",
            &params,
            1e-10,
            worst(
                lw.iter()
                    .map(|r| r.as_ref().map(|r| r.annihilation).map_err(clone_err)),
            ),
        );
        cases.push(
            "lowest_weight_eigen",
            &params,
            1e-10,
            worst(
                lw.iter()
                    .map(|r| r.as_ref().map(|r| r.eigen).map_err(clone_err)),
            ),
        );
        cases.push(
            "lowest_weight_s0",
            &params,
            1e-10,
            worst(
                lw.iter()
                    .map(|r| r.as_ref().map(|r| r.weight).map_err(clone_err)),
            ),
        );
        cases.push(
            "difference_equation",
            &params,
            1e-12,
            worst((0..=cfg.max_n).map(|j| {
                Ok(uqsl2::difference_equation_residual(
                    &uqsl2::lowest_weight_coeffs(j, p),
                    p,
                ))
            })),
        );
        cases.push(
            "closed_form_coefficients",
            &params,
            1e-10,
            worst((1..=cfg.max_n).map(|j| Ok(uqsl2::closed_form_mismatch(j, p).unwrap_or(0.0)))),
        );
        let mut lemma = Vec::new();
        let mut hyp = Vec::new();
        for j in 0..=cfg.max_n {
            for k in 0..=j {
                lemma.push(uqsl2::lemma_sums(j, k, p).map(|(a, b)| a.max(b)));
                hyp.push((|| {
                    let direct = uqsl2::lemma_f(j, k, p)?;
                    let via = uqsl2::lemma_f_hypergeometric(j, k, p, SeriesControl::default())?;
                    Ok(tolerance::mixed(direct, via))
                })());
            }
        }
        cases.push("lemma_sums", &params, 1e-10, worst(lemma));
        cases.push("lemma_f_hypergeometric", &params, 1e-10, worst(hyp));
        cases.push(
            "completeness_rank",
            &params,
            0.0,
            worst(
                (0..=cfg.max_n).map(|n| {
                    uqsl2::completeness_rank(n, p, 1e-8).map(|r| (r != n + 1) as u8 as f64)
                }),
            ),
        );
        cases.push(
            "rayleigh",
            &params,
            1e-8,
            worst((0..=cfg.max_n).map(|n| uqsl2::rayleigh_residual(n, p))),
        );
    }
}

fn clone_err(e: &Error) -> Error {
    Error::Domain(e.to_string())
}

fn simulator_suite(cases: &mut Cases, cfg: &CheckConfig) {
    let mut seed = 1000;
    for &(g, mu) in &[(0.25, 0.5), (0.36, 0.36)] {
        let h = HahnParams::new(g, mu).expect("valid");
        for boundary in [Boundary::Open, Boundary::Periodic] {
            for (sites, n) in [(2, 1), (2, 2), (3, 2), (3, 3)] {
                seed += 1;
                let mut initial = vec![0; sites];
                initial[0] = n;
                let params = [
                    ("gamma", g),
                    ("mu", mu),
                    ("sites", sites as f64),
                    ("particles", n as f64),
                    ("periodic", (boundary == Boundary::Periodic) as u8 as f64),
                    ("seed", seed as f64),
                ];
                let run = simulator::simulate(
                    &Configuration::new(initial),
                    h,
                    boundary,
                    Stop::MaxEvents(cfg.sim_events),
                    seed,
                    simulator::DEFAULT_BURN_IN,
                );
                match run {
                    Ok(mut r) => {
                        cases.push("stationary_tv", &params, 0.02, r.compare_exact());
                        let escape = simulator::stationary_escape_rate(sites, n, h, boundary)
                            .map(|e| (r.mean_escape_rate - e).abs() / e);
                        cases.push("escape_rate", &params, 0.02, escape);
                    }
                    Err(e) => cases.push("stationary_tv", &params, 0.02, Err(e)),
                }
            }
        }
    }
}
