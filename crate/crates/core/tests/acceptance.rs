//! Acceptance suite runner. Prints one line per criterion and exits non-zero
//! if any criterion fails.

use std::path::PathBuf;
use std::process::ExitCode;

use qfi_radar::acceptance::{run_acceptance, AcceptanceOptions};
use qfi_radar::verdict::verdicts_csv;

fn main() -> ExitCode {
    let report = run_acceptance(&AcceptanceOptions::default());
    for c in &report.criteria {
        println!("{}", c.line());
    }
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let path = dir.join("verdicts.csv");
    match std::fs::write(&path, verdicts_csv(&report.verdicts)) {
        Ok(()) => println!("verdict file: {} ({} rows)", path.display(), report.verdicts.len()),
        Err(e) => {
            println!("could not write verdict file {}: {e}", path.display());
            return ExitCode::FAILURE;
        }
    }
    let s = report.verdict_summary;
    println!(
        "verdicts: {} confirmed, {} refuted, {} undefined, {} oracle failures",
        s.confirmed, s.refuted, s.undefined, s.oracle_failures
    );
    if report.passed() {
        println!("acceptance: all {} criteria pass in {:.2} s", report.criteria.len(), report.elapsed_s);
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} criteria fail", report.failures().len());
        ExitCode::FAILURE
    }
}
