// Build a chain generator, write it in the sparse text format and read it
// back.

use std::io::{BufReader, Cursor};

use qhahn::generator::{self, Boundary, MatrixHeader};
use qhahn::rates::HahnParams;

pub fn run_example() -> qhahn::Result<()> {
    let p = HahnParams::new(0.25, 0.5)?;
    let (sites, n) = (3, 2);
    let m = generator::chain_markov(sites, n, p, Boundary::Periodic)?;
    println!(
        "{} states, max |column sum| = {:.2e}",
        m.cols(),
        m.max_column_sum_deviation()
    );
    println!("largest off-diagonal entry: {:.2e}", m.max_off_diagonal());

    let header = MatrixHeader {
        rows: m.rows(),
        cols: m.cols(),
        sites,
        particles: n,
        gamma: p.gamma(),
        mu: p.mu(),
    };
    let mut buf = Vec::new();
    generator::write_matrix(&mut buf, &m, &header, &["periodic ring".to_string()])?;
    let text = String::from_utf8(buf).expect("utf-8");
    for line in text.lines().take(5) {
        println!("{line}");
    }

    let (back, dense) = generator::read_matrix(BufReader::new(Cursor::new(text)))?;
    assert_eq!(back, header);
    assert_eq!(&dense, m.matrix());

    let mut basis = Vec::new();
    generator::write_basis(&mut basis, m.col_basis())?;
    print!("basis:\n{}", String::from_utf8(basis).expect("utf-8"));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
