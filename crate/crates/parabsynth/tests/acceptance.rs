//! Acceptance criteria 1 to 11, one line each.

use std::process::ExitCode;

use parabsynth::verify;

fn main() -> ExitCode {
    let reports = verify::acceptance(0);
    println!();
    for r in &reports {
        println!("{}", r.line());
        for n in &r.notes {
            println!("    {n}");
        }
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    println!("\nacceptance: {} passed, {failed} failed\n", reports.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
