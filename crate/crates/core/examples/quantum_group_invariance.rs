// The two-site Hamiltonian commutes with the coproduct of `U_q(sl2)`.

use qhahn::rates::QParams;
use qhahn::uqsl2::{self, Direction};

pub fn run_example() -> qhahn::Result<()> {
    let p = QParams::new(0.9, 3)?;
    println!(
        "{:>2} {:>10} {:>10} {:>10} {:>10} {:>10}",
        "n", "S0", "S+", "S-", "[S+,S-]", "Casimir"
    );
    for n in 1..=6 {
        println!(
            "{n:>2} {:>10.2e} {:>10.2e} {:>10.2e} {:>10.2e} {:>10.2e}",
            uqsl2::intertwiner_residual(n, p, Direction::Zero)?,
            uqsl2::intertwiner_residual(n, p, Direction::Plus)?,
            uqsl2::intertwiner_residual(n, p, Direction::Minus)?,
            uqsl2::commutator_residual(n, p)?,
            uqsl2::casimir_check(n, p)?,
        );
    }

    let worst = uqsl2::coefficient_residuals(3, 2, p)?
        .into_iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty");
    println!(
        "largest commutator coefficient residual at (3,2): {} = {:.2e}",
        worst.0, worst.1
    );

    for j in 1..=4 {
        let (f, g) = uqsl2::lemma_sums(j, j / 2, p)?;
        println!("lemma sums j = {j}, k = {}: {f:.2e} {g:.2e}", j / 2);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
