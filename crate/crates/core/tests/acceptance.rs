//! Full verification suite on the reference configuration: Gaussian
//! g = −2, a = 1, λ = 1 on the (24, 12, 24) grid with R_max = 6.
//! Runs without the test harness so every criterion line is printed.

use std::process::ExitCode;

use lsscatter::cli::config::RunConfig;
use lsscatter::cli::verify::{run_verification, Status};

fn main() -> ExitCode {
    let cfg = RunConfig::from_toml("lambdas = [1.0]\nr_max = 6.0\n").unwrap();
    let report = run_verification(&cfg).unwrap();
    assert_eq!(report.criteria.len(), 11);
    let rec = &report.records[0];
    assert_eq!((rec.grid.n_r, rec.grid.n_theta, rec.grid.n_phi), (24, 12, 24));
    assert_eq!(rec.config_hash, cfg.hash());
    println!("acceptance (config_hash={})", report.config_hash);
    for c in &report.criteria {
        println!(
            "criterion {:>2} {}: {}  value={:.3e} threshold={:.1e}  {}",
            c.id,
            c.name,
            c.status.label(),
            c.value,
            c.threshold,
            c.detail
        );
    }
    for n in &report.notes {
        println!("note: {n}");
    }
    let passed = report.criteria.iter().filter(|c| c.status == Status::Pass).count();
    println!("acceptance: {passed}/{} criteria pass", report.criteria.len());
    if passed == report.criteria.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
