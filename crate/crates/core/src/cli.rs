//! Command-line interface.
//!
//! JSON goes to the output stream, diagnostics to the error stream. Exit
//! codes: 0 on success, 1 on domain errors or failed checks, 2 on bad flags.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::checks::{self, CheckConfig, Grid, Suite};
use crate::error::{Error, Result};
use crate::generator::{self, Boundary, Configuration, MatrixHeader};
use crate::qspecial::SeriesControl;
use crate::rates::{self, HahnParams, QParams, Side, Sign};
use crate::simulator::{self, Stop};
use crate::{json, linalg, tolerance};

#[derive(Parser, Debug)]
#[command(
    name = "qhahn",
    version,
    about = "q-Hahn zero-range process and non-compact XXZ toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Hopping rates and diagonal sums for one (m, k).
    Rates(RatesArgs),
    /// Export a Markov matrix or Hamiltonian with its basis.
    Generator(GeneratorArgs),
    /// Spectrum of the two-site Hamiltonian density against lambda_j.
    Spectrum(SpectrumArgs),
    /// Run invariant suites.
    Check(CheckArgs),
    /// Gillespie simulation.
    Simulate(SimulateArgs),
    /// Limiting-case residuals.
    Limits(LimitsArgs),
}

#[derive(Args, Debug, Clone)]
struct ParamArgs {
    #[arg(long, requires = "mu", conflicts_with_all = ["q", "s"])]
    gamma: Option<f64>,
    #[arg(long, requires = "gamma")]
    mu: Option<f64>,
    #[arg(long, requires = "s")]
    q: Option<f64>,
    /// Spin; 2s must be a positive integer.
    #[arg(long, requires = "q", value_parser = parse_spin)]
    s: Option<f64>,
}

enum Params {
    Hahn(HahnParams),
    Spin(QParams),
}

impl ParamArgs {
    fn resolve(&self) -> Result<Params> {
        match (self.gamma, self.mu, self.q, self.s) {
            (Some(g), Some(mu), None, None) => Ok(Params::Hahn(HahnParams::new(g, mu)?)),
            (None, None, Some(q), Some(s)) => Ok(Params::Spin(QParams::from_spin(q, s)?)),
            _ => Err(Error::Parse("give either --gamma/--mu or --q/--s".into())),
        }
    }

    fn hahn(&self) -> Result<HahnParams> {
        Ok(match self.resolve()? {
            Params::Hahn(h) => h,
            Params::Spin(p) => p.hahn(),
        })
    }
}

#[derive(Args, Debug)]
struct RatesArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long)]
    m: usize,
    /// Number of moving particles; omitted rates are not printed.
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BoundaryArg {
    Open,
    Periodic,
}

impl From<BoundaryArg> for Boundary {
    fn from(b: BoundaryArg) -> Self {
        match b {
            BoundaryArg::Open => Boundary::Open,
            BoundaryArg::Periodic => Boundary::Periodic,
        }
    }
}

#[derive(Args, Debug)]
struct GeneratorArgs {
    #[arg(long)]
    sites: usize,
    #[arg(long)]
    particles: usize,
    #[command(flatten)]
    params: ParamArgs,
    /// Export the spin-chain Hamiltonian instead (needs --q/--s).
    #[arg(long)]
    hamiltonian: bool,
    #[arg(long, value_enum, default_value = "open")]
    boundary: BoundaryArg,
    #[arg(long)]
    out: PathBuf,
    /// Basis file; defaults to the matrix path with `.basis` appended.
    #[arg(long)]
    basis_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    q: f64,
    #[arg(long, value_parser = parse_spin)]
    s: f64,
    #[arg(long, default_value_t = linalg::DEFAULT_TOL_IMAG)]
    tol_imag: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SuiteArg {
    All,
    Qspecial,
    Rates,
    Generator,
    Uqsl2,
    Simulator,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::All => Suite::All,
            SuiteArg::Qspecial => Suite::Qspecial,
            SuiteArg::Rates => Suite::Rates,
            SuiteArg::Generator => Suite::Generator,
            SuiteArg::Uqsl2 => Suite::Uqsl2,
            SuiteArg::Simulator => Suite::Simulator,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GridArg {
    Default,
    Small,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(long, value_enum, default_value = "all")]
    suite: SuiteArg,
    #[arg(long, default_value_t = 8)]
    max_n: usize,
    #[arg(long, value_enum, default_value = "default")]
    grid: GridArg,
    /// Events per simulator-suite run.
    #[arg(long, default_value_t = 300_000)]
    sim_events: u64,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("stop").required(true).args(["events", "time"]))]
struct SimulateArgs {
    #[arg(long)]
    sites: usize,
    #[arg(long)]
    particles: Option<usize>,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, value_enum, default_value = "open")]
    boundary: BoundaryArg,
    #[arg(long)]
    events: Option<u64>,
    #[arg(long)]
    time: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated initial occupations; defaults to all particles on site 1.
    #[arg(long)]
    initial: Option<String>,
    #[arg(long, default_value_t = simulator::DEFAULT_BURN_IN)]
    burn_in: f64,
    /// Trajectory CSV path.
    #[arg(long)]
    traj: Option<PathBuf>,
    /// Sampling step of the trajectory CSV.
    #[arg(long, default_value_t = 0.1)]
    traj_dt: f64,
    /// Add the total-variation distance to the exact stationary law.
    #[arg(long)]
    compare_exact: bool,
    /// Independent runs merged into one report.
    #[arg(long, default_value_t = 1)]
    runs: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum LimitArg {
    Madm,
    Tasep,
    Rational,
}

#[derive(Args, Debug)]
struct LimitsArgs {
    #[arg(long, value_enum)]
    which: LimitArg,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long, value_parser = parse_spin)]
    s: Option<f64>,
    #[arg(long, default_value_t = 4)]
    max_m: usize,
}

#[derive(Serialize)]
struct RatesOut {
    gamma: f64,
    mu: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    s: Option<f64>,
    m: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta_plus: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta_minus: Option<f64>,
    alpha_plus: f64,
    alpha_minus: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    rho: Option<f64>,
}

#[derive(Serialize)]
struct GeneratorOut {
    kind: &'static str,
    rows: usize,
    cols: usize,
    boundary: Boundary,
    column_sum_max_deviation: f64,
    matrix: String,
    basis: String,
}

#[derive(Serialize)]
struct SpectrumOut {
    n: usize,
    q: f64,
    s: f64,
    spectrum: Vec<f64>,
    lambda: Vec<f64>,
    lambda_psi: Vec<f64>,
    max_deviation: f64,
}

#[derive(Serialize)]
struct LimitRow {
    name: String,
    m: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    two_s: u32,
    residual: f64,
    tolerance: f64,
    pass: bool,
}

#[derive(Serialize)]
struct LimitsOut {
    which: &'static str,
    parameter: f64,
    rows: Vec<LimitRow>,
    all_pass: bool,
}

/// Runs the tool with `args` (including the program name) and returns the
/// exit code.
pub fn run<I, T, O, E>(args: I, out: &mut O, err: &mut E) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
    O: Write,
    E: Write,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    2
                }
            };
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(Error::Parse(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn emit<T: Serialize, O: Write>(out: &mut O, value: &T) -> Result<()> {
    writeln!(out, "{}", json::to_string_pretty(value)?)?;
    Ok(())
}

fn dispatch<O: Write, E: Write>(cmd: Command, out: &mut O, err: &mut E) -> Result<i32> {
    match cmd {
        Command::Rates(a) => cmd_rates(a, out),
        Command::Generator(a) => cmd_generator(a, out),
        Command::Spectrum(a) => cmd_spectrum(a, out),
        Command::Check(a) => cmd_check(a, out, err),
        Command::Simulate(a) => cmd_simulate(a, out, err),
        Command::Limits(a) => cmd_limits(a, out),
    }
}

fn cmd_rates<O: Write>(a: RatesArgs, out: &mut O) -> Result<i32> {
    let params = a.params.resolve()?;
    let (h, spin) = match params {
        Params::Hahn(h) => (h, None),
        Params::Spin(p) => (p.hahn(), Some(p)),
    };
    let (beta_plus, beta_minus, rho) = match a.k {
        Some(k) => (
            Some(rates::beta_plus(a.m, k, h)?),
            Some(rates::beta_minus(a.m, k, h)?),
            spin.map(|p| rates::rho(a.m, k, p)).transpose()?,
        ),
        None => (None, None, None),
    };
    emit(
        out,
        &RatesOut {
            gamma: h.gamma(),
            mu: h.mu(),
            q: spin.map(|p| p.q()),
            s: spin.map(|p| p.s()),
            m: a.m,
            k: a.k,
            beta_plus,
            beta_minus,
            alpha_plus: rates::alpha_plus(a.m, h),
            alpha_minus: rates::alpha_minus(a.m, h),
            rho,
        },
    )?;
    Ok(0)
}

fn cmd_generator<O: Write>(a: GeneratorArgs, out: &mut O) -> Result<i32> {
    let boundary: Boundary = a.boundary.into();
    let params = a.params.resolve()?;
    let (matrix, h, kind, comments) = if a.hamiltonian {
        let Params::Spin(p) = params else {
            return Err(Error::Parse("--hamiltonian needs --q and --s".into()));
        };
        let m = generator::chain_hamiltonian(a.sites, a.particles, p, boundary)?;
        let comments = vec![
            "kind=hamiltonian".to_string(),
            format!("q={} two_s={}", generator::fmt_f64(p.q()), p.two_s()),
            "markov = D H D^-1 with D = diag(q^(two_s * sum_k k*m_k)), sites counted from 1"
                .to_string(),
        ];
        (m, p.hahn(), "hamiltonian", comments)
    } else {
        let h = match params {
            Params::Hahn(h) => h,
            Params::Spin(p) => p.hahn(),
        };
        let m = generator::chain_markov(a.sites, a.particles, h, boundary)?;
        (m, h, "markov", vec!["kind=markov".to_string()])
    };
    let header = MatrixHeader {
        rows: matrix.rows(),
        cols: matrix.cols(),
        sites: a.sites,
        particles: a.particles,
        gamma: h.gamma(),
        mu: h.mu(),
    };
    let mut comments = comments;
    comments.push(format!("boundary={boundary}"));
    let mut w = BufWriter::new(File::create(&a.out)?);
    generator::write_matrix(&mut w, &matrix, &header, &comments)?;
    w.flush()?;
    let basis_path = a.basis_out.unwrap_or_else(|| {
        let mut p = a.out.clone().into_os_string();
        p.push(".basis");
        p.into()
    });
    let mut w = BufWriter::new(File::create(&basis_path)?);
    generator::write_basis(&mut w, matrix.col_basis())?;
    w.flush()?;
    emit(
        out,
        &GeneratorOut {
            kind,
            rows: matrix.rows(),
            cols: matrix.cols(),
            boundary,
            column_sum_max_deviation: matrix.max_column_sum_deviation(),
            matrix: a.out.display().to_string(),
            basis: basis_path.display().to_string(),
        },
    )?;
    Ok(0)
}

fn cmd_spectrum<O: Write>(a: SpectrumArgs, out: &mut O) -> Result<i32> {
    let p = QParams::from_spin(a.q, a.s)?;
    let h = generator::local_hamiltonian(a.n, p)?;
    let spectrum = generator::spectrum(&h, a.tol_imag)?;
    let mut lambda: Vec<f64> = (0..=a.n)
        .map(|j| generator::lambda_eigenvalue(j, p))
        .collect();
    lambda.sort_by(f64::total_cmp);
    let lambda_psi = (0..=a.n)
        .map(|j| generator::lambda_eigenvalue_psi(j, p, SeriesControl::default()))
        .collect::<Result<Vec<_>>>()?;
    let max_deviation = spectrum
        .iter()
        .zip(&lambda)
        .map(|(x, y)| tolerance::mixed(*x, *y))
        .fold(0.0, f64::max);
    emit(
        out,
        &SpectrumOut {
            n: a.n,
            q: p.q(),
            s: p.s(),
            spectrum,
            lambda,
            lambda_psi,
            max_deviation,
        },
    )?;
    Ok(0)
}

fn cmd_check<O: Write, E: Write>(a: CheckArgs, out: &mut O, err: &mut E) -> Result<i32> {
    let cfg = CheckConfig {
        max_n: a.max_n,
        grid: match a.grid {
            GridArg::Default => Grid::standard(),
            GridArg::Small => Grid::small(),
        },
        sim_events: a.sim_events,
    };
    let report = checks::run(a.suite.into(), &cfg);
    for c in report.cases.iter().filter(|c| !c.pass) {
        let _ = writeln!(
            err,
            "FAIL {} {:?}: residual {:e} > {:e}",
            c.name, c.parameters, c.residual, c.tolerance
        );
    }
    emit(out, &report)?;
    Ok(if report.all_passed() { 0 } else { 1 })
}

fn cmd_simulate<O: Write, E: Write>(a: SimulateArgs, out: &mut O, err: &mut E) -> Result<i32> {
    let h = a.params.hahn()?;
    let initial = match (&a.initial, a.particles) {
        (Some(text), n) => {
            let c: Configuration = text.parse()?;
            if c.sites() != a.sites {
                return Err(Error::Domain(format!(
                    "--initial has {} sites, expected {}",
                    c.sites(),
                    a.sites
                )));
            }
            if n.is_some_and(|n| n != c.particles()) {
                return Err(Error::Domain("--initial disagrees with --particles".into()));
            }
            c
        }
        (None, Some(n)) => {
            if a.sites == 0 {
                return Err(Error::Domain("a chain needs at least one site".into()));
            }
            let mut occ = vec![0; a.sites];
            occ[0] = n;
            Configuration::new(occ)
        }
        (None, None) => return Err(Error::Parse("give --particles or --initial".into())),
    };
    let boundary: Boundary = a.boundary.into();
    let stop = match (a.events, a.time) {
        (Some(e), None) => Stop::MaxEvents(e),
        (None, Some(t)) => Stop::MaxTime(t),
        _ => unreachable!("clap enforces exactly one stop flag"),
    };
    if a.compare_exact
        && generator::state_count(a.sites, initial.particles()) > generator::MAX_DENSE as u128
    {
        return Err(Error::Capacity {
            what: "exact comparison".into(),
            size: generator::state_count(a.sites, initial.particles()),
            limit: generator::MAX_DENSE as u128,
        });
    }
    let mut report = if a.runs <= 1 {
        let traj = simulator::gillespie_run(&initial, h, boundary, stop, a.seed)?;
        if let Some(path) = &a.traj {
            let mut w = BufWriter::new(File::create(path)?);
            traj.write_csv(&mut w, a.traj_dt)?;
            w.flush()?;
        }
        if traj.halted && !traj.events.is_empty() {
            let _ = writeln!(
                err,
                "warning: run halted after {} events",
                traj.events.len()
            );
        }
        simulator::SimReport::from_trajectory(
            &traj,
            simulator::RunInfo {
                params: h,
                seed: a.seed,
                stream: 0,
                burn_in_fraction: a.burn_in,
            },
        )?
    } else {
        if a.traj.is_some() {
            return Err(Error::Parse(
                "--traj is only available for a single run".into(),
            ));
        }
        let reports =
            simulator::run_ensemble(&initial, h, boundary, stop, a.seed, a.runs, a.burn_in)?;
        simulator::merge(&reports)?
    };
    if a.compare_exact {
        report.compare_exact()?;
    }
    emit(out, &report)?;
    Ok(0)
}

fn cmd_limits<O: Write>(a: LimitsArgs, out: &mut O) -> Result<i32> {
    let mut rows = Vec::new();
    let (which, parameter) = match a.which {
        LimitArg::Madm => {
            let g = a
                .gamma
                .ok_or_else(|| Error::Parse("madm needs --gamma".into()))?;
            let h = HahnParams::new(g, g)?;
            for k in 1..=a.max_m {
                let rp = rates::madm_rate(k, g, Sign::Plus)?;
                let rm = rates::madm_rate(k, g, Sign::Minus)?;
                for m in k..=k + 6 {
                    let r = tolerance::mixed(rates::beta_plus(m, k, h)?, rp)
                        .max(tolerance::mixed(rates::beta_minus(m, k, h)?, rm));
                    rows.push(limit_row("m_independence", m, Some(k), 1, r, 1e-13));
                }
            }
            ("madm", g)
        }
        LimitArg::Tasep => {
            let g = a
                .gamma
                .ok_or_else(|| Error::Parse("tasep needs --gamma".into()))?;
            let two_s = spin_to_two_s(a.s.unwrap_or(0.5))?;
            for m in 1..=a.max_m {
                for k in 1..=m {
                    let l = rates::tasep_limit_residual(m, k, two_s, g, Side::Left)?;
                    rows.push(limit_row("scaled_beta_minus", m, Some(k), two_s, l, 5e-3));
                    let r = rates::tasep_limit_residual(m, k, two_s, g, Side::Right)?;
                    rows.push(limit_row("scaled_beta_plus", m, Some(k), two_s, r, 5e-3));
                }
            }
            ("tasep", g)
        }
        LimitArg::Rational => {
            let q =
                a.q.ok_or_else(|| Error::Parse("rational needs --q".into()))?;
            let two_s =
                spin_to_two_s(a.s.ok_or_else(|| Error::Parse("rational needs --s".into()))?)?;
            for m in 1..=a.max_m {
                for k in 1..=m {
                    let r = rates::rational_limit_residual(m, k, two_s, q)?;
                    rows.push(limit_row("rho", m, Some(k), two_s, r, 1e-3));
                }
                for (name, sign) in [("alpha_plus", Sign::Plus), ("alpha_minus", Sign::Minus)] {
                    let r = rates::rational_alpha_residual(m, two_s, q, sign)?;
                    rows.push(limit_row(name, m, None, two_s, r, 1e-3));
                }
            }
            ("rational", q)
        }
    };
    let all_pass = rows.iter().all(|r| r.pass);
    emit(
        out,
        &LimitsOut {
            which,
            parameter,
            rows,
            all_pass,
        },
    )?;
    Ok(if all_pass { 0 } else { 1 })
}

fn parse_spin(text: &str) -> std::result::Result<f64, String> {
    let s: f64 = text
        .parse()
        .map_err(|_| format!("{text:?} is not a number"))?;
    let t = 2.0 * s;
    if t >= 1.0 && t == t.round() && t <= u32::MAX as f64 {
        Ok(s)
    } else {
        Err(format!("2s must be a positive integer, got s = {s}"))
    }
}

fn spin_to_two_s(s: f64) -> Result<u32> {
    QParams::from_spin(0.5, s).map(|p| p.two_s())
}

fn limit_row(
    name: &str,
    m: usize,
    k: Option<usize>,
    two_s: u32,
    residual: f64,
    tol: f64,
) -> LimitRow {
    LimitRow {
        name: name.to_string(),
        m,
        k,
        two_s,
        residual,
        tolerance: tol,
        pass: residual <= tol,
    }
}
