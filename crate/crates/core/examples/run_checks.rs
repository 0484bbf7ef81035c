// Run the built-in verification suites on a reduced grid.

use qhahn::checks::{self, CheckConfig, Grid, Suite};

pub fn run_example() -> qhahn::Result<()> {
    let cfg = CheckConfig {
        max_n: 4,
        grid: Grid::small(),
        sim_events: 50_000,
    };
    for suite in [
        Suite::Qspecial,
        Suite::Rates,
        Suite::Generator,
        Suite::Uqsl2,
    ] {
        let report = checks::run(suite, &cfg);
        println!(
            "{suite}: {} of {} passed in {:.2} s",
            report.summary.passed, report.summary.total, report.wall_time_seconds
        );
        for case in report.cases.iter().filter(|c| !c.pass) {
            println!("  FAIL {} residual {:e}", case.name, case.residual);
        }
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
