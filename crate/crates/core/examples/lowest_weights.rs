// Lowest-weight vectors generate the eigenbasis of each two-site block.

use qhahn::rates::QParams;
use qhahn::uqsl2;

pub fn run_example() -> qhahn::Result<()> {
    let p = QParams::from_spin(0.6, 0.5)?;
    for j in 0..=4 {
        let state = uqsl2::lowest_weight_coeffs(j, p);
        let r = uqsl2::lowest_weight_checks(j, p)?;
        let coeffs: Vec<String> = state.coeffs.iter().map(|c| format!("{c:.5}")).collect();
        println!(
            "j = {j}: c = [{}]  |S- phi| = {:.1e}  |H phi - lambda phi| = {:.1e}",
            coeffs.join(", "),
            r.annihilation,
            r.eigen
        );
    }

    let n = 5;
    let rank = uqsl2::completeness_rank(n, p, 1e-10)?;
    println!(
        "block {n}: propagated lowest weights have rank {rank} of {}",
        n + 1
    );
    println!(
        "Rayleigh quotient residual: {:.2e}",
        uqsl2::rayleigh_residual(n, p)?
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
