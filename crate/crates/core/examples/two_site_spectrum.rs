// The two-site Hamiltonian has the simple spectrum `lambda_j = alpha_+(j) + alpha_-(j)`.

use qhahn::generator;
use qhahn::linalg::DEFAULT_TOL_IMAG;
use qhahn::qspecial::SeriesControl;
use qhahn::rates::QParams;

pub fn run_example() -> qhahn::Result<()> {
    let p = QParams::new(0.6, 2)?;
    let n = 5;
    let h = generator::local_hamiltonian(n, p)?;
    let m = generator::local_markov(n, p.hahn())?;
    let eh = generator::spectrum(&h, DEFAULT_TOL_IMAG)?;
    let em = generator::spectrum(&m, DEFAULT_TOL_IMAG)?;
    println!(
        "{:>2} {:>16} {:>16} {:>16} {:>16}",
        "j", "lambda_j", "via psi_q", "H", "M"
    );
    for j in 0..=n {
        let lam = generator::lambda_eigenvalue(j, p);
        let lam_psi = generator::lambda_eigenvalue_psi(j, p, SeriesControl::default())?;
        println!(
            "{j:>2} {lam:>16.10} {lam_psi:>16.10} {:>16.10} {:>16.10}",
            eh[j], em[j]
        );
    }

    let (sites, particles) = (3, 3);
    for boundary in [generator::Boundary::Open, generator::Boundary::Periodic] {
        let hc = generator::chain_hamiltonian(sites, particles, p, boundary)?;
        let mc = generator::chain_markov(sites, particles, p.hahn(), boundary)?;
        let back = generator::conjugate_by_similarity(&hc, p);
        println!(
            "{boundary:?}: |M - D H D^-1| = {:.2e}",
            mc.max_abs_diff(&back)
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
