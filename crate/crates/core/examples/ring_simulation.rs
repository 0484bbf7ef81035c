// Gillespie simulation on a ring against the exact stationary law.

use qhahn::generator::{Boundary, Configuration};
use qhahn::rates::HahnParams;
use qhahn::simulator::{self, Stop};

pub fn run_example() -> qhahn::Result<()> {
    let p = HahnParams::new(0.25, 0.5)?;
    let start = Configuration::new(vec![3, 0, 0]);
    let mut report = simulator::simulate(
        &start,
        p,
        Boundary::Periodic,
        Stop::MaxEvents(200_000),
        7,
        0.1,
    )?;
    let tv = report.compare_exact()?;
    println!(
        "{} events over t = {:.1}, TV distance to exact = {tv:.4}",
        report.event_count, report.total_time
    );
    for c in &report.currents {
        println!(
            "bond {}: J = {:.4} +/- {:.4}",
            c.bond,
            c.current,
            c.std_error.unwrap_or(f64::NAN)
        );
    }
    let exact_rate = simulator::stationary_escape_rate(3, 3, p, Boundary::Periodic)?;
    println!(
        "escape rate {:.4} (exact {exact_rate:.4})",
        report.mean_escape_rate
    );

    let runs = simulator::run_ensemble(
        &start,
        p,
        Boundary::Periodic,
        Stop::MaxTime(500.0),
        7,
        4,
        0.1,
    )?;
    let pooled = simulator::merge(&runs)?;
    println!(
        "ensemble of {}: occupancy {:?}",
        runs.len(),
        pooled.empirical_occupancy
    );

    let pf = simulator::product_form_distance(3, 3, p, Boundary::Periodic)?;
    println!("product-form measure vs exact on the ring: {pf:.1e}");

    let spread = Configuration::new(vec![1, 1, 1]);
    let traj = simulator::gillespie_run(&spread, p, Boundary::Open, Stop::MaxTime(2.0), 1)?;
    let mut csv = Vec::new();
    traj.write_csv(&mut csv, 0.5)?;
    print!("{}", String::from_utf8(csv).expect("utf-8"));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
