// q-Gamma, q-digamma and the two identities the spectrum relies on.

use qhahn::qspecial::{self, SeriesControl};

pub fn run_example() -> qhahn::Result<()> {
    let ctrl = SeriesControl::default();
    let q = 0.6;
    for x in [0.5, 1.0, 2.5, 4.0] {
        println!(
            "x = {x:<4} Gamma_q = {:>14.10}  psi_q = {:>14.10}",
            qspecial::gamma_q(x, q, ctrl)?,
            qspecial::psi_q(x, q, ctrl)?
        );
    }

    println!("terminating 3phi2 against psi_q");
    for (a, b) in [(-1.0, 2.0), (-2.0, 1.0), (-5.0, 3.0)] {
        let id = qspecial::krattenthaler_residual(a, b, q, ctrl)?;
        println!(
            "  a = {a:>4}, b = {b}: lhs = {:.15}, rhs = {:.15}",
            id.lhs, id.rhs
        );
        assert!(id.residual() < 1e-10);
    }

    let id = qspecial::reflection_residual(0.2, 3, q, ctrl)?;
    println!("reflection at x = 0.2, k = 3: {:.3e}", id.difference());

    let conv = qspecial::psi_conversion(1.7, q, ctrl)?;
    println!("psi_q vs psi~_(q^2): {:.3e}", conv.difference());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
