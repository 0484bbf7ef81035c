//! Gillespie simulation of the q-Hahn zero-range process on a chain.
//!
//! A run stores its full event sequence; observables are computed afterwards
//! by replaying the trajectory, so a report is a pure function of the
//! trajectory and the burn-in fraction.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{self, Basis, Boundary, Configuration};
use crate::linalg;
use crate::qspecial::q_pochhammer;
use crate::rates::{HahnParams, RateTable};

/// Name of the generator recorded in every report.
pub const RNG_NAME: &str = "ChaCha8Rng";
/// Default fraction of simulated time discarded before measuring.
pub const DEFAULT_BURN_IN: f64 = 0.1;
/// Number of time batches used for current error bars.
pub const CURRENT_BATCHES: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Right,
    Left,
}

/// `k` particles crossing `bond` (1-based left site; bond `N` is `(N,1)` on a
/// ring).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub bond: usize,
    pub k: usize,
    pub direction: Direction,
    pub rate: f64,
}

impl Event {
    /// Source and target sites (0-based).
    pub fn sites(&self, sites: usize) -> (usize, usize) {
        let l = self.bond - 1;
        let r = (l + 1) % sites;
        match self.direction {
            Direction::Right => (l, r),
            Direction::Left => (r, l),
        }
    }

    /// Signed particle transfer to the right.
    pub fn flux(&self) -> i64 {
        match self.direction {
            Direction::Right => self.k as i64,
            Direction::Left => -(self.k as i64),
        }
    }
}

/// When a run stops.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stop {
    MaxEvents(u64),
    MaxTime(f64),
}

fn events_into(c: &[usize], table: &RateTable, boundary: Boundary, out: &mut Vec<Event>) {
    out.clear();
    for (b, (l, r)) in boundary.bonds(c.len()).into_iter().enumerate() {
        let bond = b + 1;
        for k in 1..=c[l] {
            out.push(Event {
                bond,
                k,
                direction: Direction::Right,
                rate: table.beta_plus(c[l], k),
            });
        }
        for k in 1..=c[r] {
            out.push(Event {
                bond,
                k,
                direction: Direction::Left,
                rate: table.beta_minus(c[r], k),
            });
        }
    }
}

/// All possible transitions out of `c`.
pub fn event_table(c: &Configuration, p: HahnParams, boundary: Boundary) -> Vec<Event> {
    let table = RateTable::new(c.particles(), p);
    let mut out = Vec::new();
    events_into(c.occupations(), &table, boundary, &mut out);
    out
}

/// Escape rate `sum over bonds of alpha_+(m_left) + alpha_-(m_right)`.
pub fn total_rate(c: &Configuration, table: &RateTable, boundary: Boundary) -> f64 {
    let occ = c.occupations();
    boundary
        .bonds(occ.len())
        .into_iter()
        .map(|(l, r)| table.alpha_plus(occ[l]) + table.alpha_minus(occ[r]))
        .sum()
}

/// Event sequence of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub initial: Configuration,
    pub boundary: Boundary,
    /// `(time, event)` with strictly increasing times.
    pub events: Vec<(f64, Event)>,
    /// Time at which observation ends.
    pub end_time: f64,
    /// The run stopped because no transition was possible.
    pub halted: bool,
}

impl Trajectory {
    /// Configuration after every event, starting with the initial one.
    pub fn replay(&self) -> impl Iterator<Item = (f64, Configuration)> + '_ {
        let sites = self.initial.sites();
        let mut state = self.initial.clone();
        std::iter::once((0.0, self.initial.clone())).chain(self.events.iter().map(move |(t, e)| {
            let (src, dst) = e.sites(sites);
            let mut occ = state.occupations().to_vec();
            occ[src] -= e.k;
            occ[dst] += e.k;
            state = Configuration::new(occ);
            (*t, state.clone())
        }))
    }

    /// Configuration at `0, dt, 2 dt, ...` up to the end time.
    pub fn sample(&self, dt: f64) -> Result<Vec<(f64, Configuration)>> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Domain(format!(
                "sampling step must be positive, got {dt}"
            )));
        }
        let mut out = Vec::new();
        let mut states = self.replay().peekable();
        let mut current = states.next().expect("initial state").1;
        let mut i = 0u64;
        loop {
            let t = i as f64 * dt;
            if t > self.end_time {
                break;
            }
            while let Some((te, _)) = states.peek() {
                if *te <= t {
                    current = states.next().expect("peeked").1;
                } else {
                    break;
                }
            }
            out.push((t, current.clone()));
            i += 1;
        }
        Ok(out)
    }

    /// Writes `time,site_1,...,site_N` rows at step `dt`.
    pub fn write_csv<W: Write>(&self, w: &mut W, dt: f64) -> Result<()> {
        let header: Vec<String> = (1..=self.initial.sites())
            .map(|i| format!("site_{i}"))
            .collect();
        writeln!(w, "time,{}", header.join(","))?;
        for (t, c) in self.sample(dt)? {
            writeln!(w, "{},{c}", generator::fmt_f64(t))?;
        }
        Ok(())
    }
}

/// Particle number on the ring and open chain is conserved; this is the
/// guard against a malformed event.
fn apply(occ: &mut [usize], e: &Event) {
    let (src, dst) = e.sites(occ.len());
    assert!(occ[src] >= e.k, "event moves more particles than present");
    occ[src] -= e.k;
    occ[dst] += e.k;
}

/// Direct-method Gillespie run with a fresh generator seeded from `seed`.
pub fn gillespie_run(
    initial: &Configuration,
    p: HahnParams,
    boundary: Boundary,
    stop: Stop,
    seed: u64,
) -> Result<Trajectory> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    gillespie_with(initial, p, boundary, stop, &mut rng)
}

/// Gillespie run drawing from a caller-supplied generator.
pub fn gillespie_with<R: Rng>(
    initial: &Configuration,
    p: HahnParams,
    boundary: Boundary,
    stop: Stop,
    rng: &mut R,
) -> Result<Trajectory> {
    if initial.sites() == 0 {
        return Err(Error::Domain("a chain needs at least one site".into()));
    }
    if let Stop::MaxTime(t) = stop {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!(
                "simulation time must be finite and non-negative, got {t}"
            )));
        }
    }
    let n = initial.particles();
    let table = RateTable::new(n, p);
    let mut occ = initial.occupations().to_vec();
    let mut events = Vec::new();
    let mut table_buf = Vec::new();
    let mut t = 0.0;
    let mut halted = false;
    loop {
        if let Stop::MaxEvents(max) = stop {
            if events.len() as u64 >= max {
                break;
            }
        }
        events_into(&occ, &table, boundary, &mut table_buf);
        let total: f64 = table_buf.iter().map(|e| e.rate).sum();
        if total <= 0.0 {
            halted = true;
            break;
        }
        let wait = -(1.0 - rng.random::<f64>()).ln() / total;
        if let Stop::MaxTime(max) = stop {
            if t + wait > max {
                t = max;
                break;
            }
        }
        t += wait;
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = *table_buf.last().expect("non-empty event table");
        for e in &table_buf {
            acc += e.rate;
            if target < acc {
                chosen = *e;
                break;
            }
        }
        apply(&mut occ, &chosen);
        events.push((t, chosen));
    }
    let end_time = match stop {
        Stop::MaxTime(max) => max,
        Stop::MaxEvents(_) => t,
    };
    Ok(Trajectory {
        initial: initial.clone(),
        boundary,
        events,
        end_time,
        halted,
    })
}

/// Net current on one bond with its batch-means standard error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BondCurrent {
    pub bond: usize,
    pub current: f64,
    pub std_error: Option<f64>,
}

/// Observables of one run after burn-in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub sites: usize,
    pub particles: usize,
    pub gamma: f64,
    pub mu: f64,
    pub boundary: Boundary,
    pub seed: u64,
    pub stream: u64,
    pub rng: String,
    pub burn_in_fraction: f64,
    pub total_time: f64,
    pub measured_time: f64,
    pub event_count: u64,
    pub halted: bool,
    /// Time-weighted mean occupation per site.
    pub empirical_occupancy: Vec<f64>,
    /// Time-weighted occupation frequencies keyed by configuration.
    pub empirical_distribution: BTreeMap<String, f64>,
    pub currents: Vec<BondCurrent>,
    /// Time average of the escape rate.
    pub mean_escape_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tv_distance: Option<f64>,
}

/// Run metadata echoed into a report.
#[derive(Clone, Copy, Debug)]
pub struct RunInfo {
    pub params: HahnParams,
    pub seed: u64,
    pub stream: u64,
    pub burn_in_fraction: f64,
}

impl SimReport {
    pub fn from_trajectory(traj: &Trajectory, info: RunInfo) -> Result<Self> {
        let burn = info.burn_in_fraction;
        if !(0.0..1.0).contains(&burn) {
            return Err(Error::Domain(format!(
                "burn-in fraction must lie in [0, 1), got {burn}"
            )));
        }
        let sites = traj.initial.sites();
        let n = traj.initial.particles();
        let table = RateTable::new(n, info.params);
        let t0 = burn * traj.end_time;
        let window = traj.end_time - t0;

        let mut occupancy = vec![0.0; sites];
        let mut dist: BTreeMap<Configuration, f64> = BTreeMap::new();
        let mut escape = 0.0;
        let mut hold = |c: &Configuration, from: f64, to: f64| {
            let (a, b) = (from.max(t0), to.min(traj.end_time));
            if b > a {
                let dt = b - a;
                for (o, m) in occupancy.iter_mut().zip(c.occupations()) {
                    *o += dt * *m as f64;
                }
                *dist.entry(c.clone()).or_insert(0.0) += dt;
                escape += dt * total_rate(c, &table, traj.boundary);
            }
        };
        let mut states = traj.replay();
        let (mut t_prev, mut state) = states.next().expect("initial state");
        for (t, next) in states {
            hold(&state, t_prev, t);
            t_prev = t;
            state = next;
        }
        hold(&state, t_prev, traj.end_time);

        let bonds = traj.boundary.bonds(sites).len();
        let mut net = vec![vec![0i64; CURRENT_BATCHES]; bonds];
        let batch_len = window / CURRENT_BATCHES as f64;
        for (t, e) in &traj.events {
            if *t > t0 && window > 0.0 {
                let b = (((t - t0) / batch_len) as usize).min(CURRENT_BATCHES - 1);
                net[e.bond - 1][b] += e.flux();
            }
        }
        let currents = net
            .iter()
            .enumerate()
            .map(|(b, batches)| {
                if window <= 0.0 {
                    return BondCurrent {
                        bond: b + 1,
                        current: 0.0,
                        std_error: None,
                    };
                }
                let total: i64 = batches.iter().sum();
                let rates: Vec<f64> = batches.iter().map(|&x| x as f64 / batch_len).collect();
                let mean = rates.iter().sum::<f64>() / rates.len() as f64;
                let var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>()
                    / (rates.len() - 1) as f64;
                BondCurrent {
                    bond: b + 1,
                    current: total as f64 / window,
                    std_error: Some((var / rates.len() as f64).sqrt()),
                }
            })
            .collect();

        let norm = |x: f64| if window > 0.0 { x / window } else { 0.0 };
        let (empirical_occupancy, empirical_distribution, mean_escape_rate) = if window > 0.0 {
            (
                occupancy.into_iter().map(norm).collect(),
                dist.into_iter()
                    .map(|(c, w)| (c.to_string(), w / window))
                    .collect(),
                escape / window,
            )
        } else {
            // Nothing observed: report the initial state.
            let occ = traj
                .initial
                .occupations()
                .iter()
                .map(|&m| m as f64)
                .collect();
            let mut d = BTreeMap::new();
            d.insert(traj.initial.to_string(), 1.0);
            (occ, d, total_rate(&traj.initial, &table, traj.boundary))
        };

        Ok(SimReport {
            sites,
            particles: n,
            gamma: info.params.gamma(),
            mu: info.params.mu(),
            boundary: traj.boundary,
            seed: info.seed,
            stream: info.stream,
            rng: RNG_NAME.to_string(),
            burn_in_fraction: burn,
            total_time: traj.end_time,
            measured_time: window,
            event_count: traj.events.len() as u64,
            halted: traj.halted,
            empirical_occupancy,
            empirical_distribution,
            currents,
            mean_escape_rate,
            tv_distance: None,
        })
    }

    /// Empirical distribution as a vector over `basis`.
    pub fn distribution_vector(&self, basis: &Basis) -> Result<Vec<f64>> {
        let mut v = vec![0.0; basis.len()];
        for (key, w) in &self.empirical_distribution {
            let c: Configuration = key.parse()?;
            let i = basis
                .index_of(&c)
                .ok_or_else(|| Error::Domain(format!("configuration {key} is not in the basis")))?;
            v[i] = *w;
        }
        Ok(v)
    }

    /// Fills `tv_distance` against the exact stationary law.
    pub fn compare_exact(&mut self) -> Result<f64> {
        let basis = Basis::new(self.sites, self.particles)?;
        let exact = exact_stationary(
            self.sites,
            self.particles,
            HahnParams::new(self.gamma, self.mu)?,
            self.boundary,
        )?;
        let tv = tv_distance(&self.distribution_vector(&basis)?, &exact)?;
        self.tv_distance = Some(tv);
        Ok(tv)
    }
}

/// Simulation and report in one step.
pub fn simulate(
    initial: &Configuration,
    p: HahnParams,
    boundary: Boundary,
    stop: Stop,
    seed: u64,
    burn_in_fraction: f64,
) -> Result<SimReport> {
    let traj = gillespie_run(initial, p, boundary, stop, seed)?;
    SimReport::from_trajectory(
        &traj,
        RunInfo {
            params: p,
            seed,
            stream: 0,
            burn_in_fraction,
        },
    )
}

/// Unit-sum null vector of the chain generator, in colex order.
pub fn exact_stationary(
    sites: usize,
    n: usize,
    p: HahnParams,
    boundary: Boundary,
) -> Result<Vec<f64>> {
    let m = generator::chain_markov(sites, n, p, boundary)?;
    Ok(linalg::unit_sum_kernel(m.matrix())?
        .iter()
        .copied()
        .collect())
}

/// `sum_c pi(c) * total_rate(c)`.
pub fn stationary_escape_rate(
    sites: usize,
    n: usize,
    p: HahnParams,
    boundary: Boundary,
) -> Result<f64> {
    let pi = exact_stationary(sites, n, p, boundary)?;
    let basis = Basis::new(sites, n)?;
    let table = RateTable::new(n, p);
    Ok(basis
        .configs()
        .iter()
        .zip(&pi)
        .map(|(c, w)| w * total_rate(c, &table, boundary))
        .sum())
}

/// `(1/2) sum |p1 - p2|`.
pub fn tv_distance(p1: &[f64], p2: &[f64]) -> Result<f64> {
    if p1.len() != p2.len() {
        return Err(Error::LengthMismatch(p1.len(), p2.len()));
    }
    for p in [p1, p2] {
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > 1e-6 {
            return Err(Error::Domain(format!("probability vector sums to {s}")));
        }
    }
    Ok(0.5 * p1.iter().zip(p2).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Net rightward transfer across `bond` per unit time over the whole run.
pub fn current(traj: &Trajectory, bond: usize) -> Result<f64> {
    let bonds = traj.boundary.bonds(traj.initial.sites()).len();
    if bond == 0 || bond > bonds {
        return Err(Error::Domain(format!(
            "bond {bond} does not exist on this chain"
        )));
    }
    if traj.end_time <= 0.0 {
        return Ok(0.0);
    }
    let net: i64 = traj
        .events
        .iter()
        .filter(|(_, e)| e.bond == bond)
        .map(|(_, e)| e.flux())
        .sum();
    Ok(net as f64 / traj.end_time)
}

/// Independent runs; run `i` uses stream `i` of the generator seeded by
/// `master_seed`. Reports come back in stream order.
pub fn run_ensemble(
    initial: &Configuration,
    p: HahnParams,
    boundary: Boundary,
    stop: Stop,
    master_seed: u64,
    runs: usize,
    burn_in_fraction: f64,
) -> Result<Vec<SimReport>> {
    (0..runs as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
            rng.set_stream(i);
            let traj = gillespie_with(initial, p, boundary, stop, &mut rng)?;
            SimReport::from_trajectory(
                &traj,
                RunInfo {
                    params: p,
                    seed: master_seed,
                    stream: i,
                    burn_in_fraction,
                },
            )
        })
        .collect()
}

/// Pools reports by measured time. Current errors combine the per-run
/// errors in quadrature with the measured-time weights.
pub fn merge(reports: &[SimReport]) -> Result<SimReport> {
    let first = reports
        .first()
        .ok_or_else(|| Error::Domain("nothing to merge".into()))?;
    let total: f64 = reports.iter().map(|r| r.measured_time).sum();
    let weight = |r: &SimReport| {
        if total > 0.0 {
            r.measured_time / total
        } else {
            1.0 / reports.len() as f64
        }
    };
    let mut out = first.clone();
    out.stream = 0;
    out.total_time = reports.iter().map(|r| r.total_time).sum();
    out.measured_time = total;
    out.event_count = reports.iter().map(|r| r.event_count).sum();
    out.halted = reports.iter().any(|r| r.halted);
    out.tv_distance = None;
    out.empirical_occupancy = vec![0.0; first.sites];
    out.empirical_distribution.clear();
    out.mean_escape_rate = 0.0;
    for c in &mut out.currents {
        c.current = 0.0;
        c.std_error = Some(0.0);
    }
    for r in reports {
        let w = weight(r);
        for (o, v) in out
            .empirical_occupancy
            .iter_mut()
            .zip(&r.empirical_occupancy)
        {
            *o += w * v;
        }
        for (k, v) in &r.empirical_distribution {
            *out.empirical_distribution.entry(k.clone()).or_insert(0.0) += w * v;
        }
        out.mean_escape_rate += w * r.mean_escape_rate;
        for (o, c) in out.currents.iter_mut().zip(&r.currents) {
            o.current += w * c.current;
            o.std_error = match (o.std_error, c.std_error) {
                (Some(a), Some(b)) => Some(a + (w * b).powi(2)),
                _ => None,
            };
        }
    }
    for c in &mut out.currents {
        c.std_error = c.std_error.map(f64::sqrt);
    }
    Ok(out)
}

/// Product measure `prod_i (mu;gamma)_{m_i} / (gamma;gamma)_{m_i}`,
/// normalised over the basis. It is stationary on the ring but not on the
/// open chain, where mass accumulates at the right end.
pub fn product_form_measure(sites: usize, n: usize, p: HahnParams) -> Result<Vec<f64>> {
    let basis = Basis::new(sites, n)?;
    let w: Vec<f64> = (0..=n)
        .map(|m| q_pochhammer(p.mu(), p.gamma(), m) / q_pochhammer(p.gamma(), p.gamma(), m))
        .collect();
    let raw: Vec<f64> = basis
        .configs()
        .iter()
        .map(|c| c.occupations().iter().map(|&m| w[m]).product())
        .collect();
    let z: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|x| x / z).collect())
}

/// Total-variation distance between the product measure and the exact
/// stationary law.
pub fn product_form_distance(
    sites: usize,
    n: usize,
    p: HahnParams,
    boundary: Boundary,
) -> Result<f64> {
    tv_distance(
        &product_form_measure(sites, n, p)?,
        &exact_stationary(sites, n, p, boundary)?,
    )
}
