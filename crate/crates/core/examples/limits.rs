// Degenerations of the rates: spin 1/2, totally asymmetric and rational.

use qhahn::rates::{self, Side, Sign};

pub fn run_example() -> qhahn::Result<()> {
    let g = 0.4;
    for k in 1..=3 {
        println!(
            "spin-1/2 rates k = {k}: right {:.6}, left {:.6}",
            rates::madm_rate(k, g, Sign::Plus)?,
            rates::madm_rate(k, g, Sign::Minus)?
        );
    }
    let mut worst: f64 = 0.0;
    for (m, k) in [(1, 1), (3, 2), (4, 4)] {
        worst = worst.max(rates::tasep_limit_residual(m, k, 2, 1e-3, Side::Left)?);
        worst = worst.max(rates::tasep_limit_residual(m, k, 2, 1e-3, Side::Right)?);
    }
    println!("totally asymmetric limit at gamma = 1e-3: {worst:.2e}");
    for (m, k) in [(2, 1), (4, 3)] {
        println!(
            "rational rho({m},{k}) = {:.6}, residual at q = 0.9999: {:.2e}",
            rates::rational_rho(m, k, 3)?,
            rates::rational_limit_residual(m, k, 3, 0.9999)?
        );
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
