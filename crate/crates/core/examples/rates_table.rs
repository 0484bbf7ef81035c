// Hopping rates of the q-Hahn process and their symmetrised form.
//
// cargo run --example rates_table

use qhahn::rates::{self, QParams, RateTable};

pub fn run_example() -> qhahn::Result<()> {
    let p = QParams::from_spin(0.6, 0.5)?;
    let h = p.hahn();
    println!(
        "q = {}, s = {}, gamma = {:.4}, mu = {:.4}",
        p.q(),
        p.s(),
        h.gamma(),
        h.mu()
    );

    println!(
        "{:>3} {:>3} {:>14} {:>14} {:>14}",
        "m", "k", "beta+", "beta-", "rho"
    );
    for m in 1..=4 {
        for k in 1..=m {
            let up = rates::beta_plus(m, k, h)?;
            let down = rates::beta_minus(m, k, h)?;
            let r = rates::rho(m, k, p)?;
            println!("{m:>3} {k:>3} {up:>14.8} {down:>14.8} {r:>14.8}");
            // q^{-2ks} beta_+ = q^{2ks} beta_- = rho
            let shift = p.q().powf(2.0 * k as f64 * p.s());
            assert!((up / shift - r).abs() < 1e-12 * r.max(1.0));
            assert!((down * shift - r).abs() < 1e-12 * r.max(1.0));
        }
    }

    let table = RateTable::new(8, h);
    for m in 0..=8 {
        println!(
            "alpha+({m}) = {:.10}   alpha-({m}) = {:.10}",
            table.alpha_plus(m),
            table.alpha_minus(m)
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
