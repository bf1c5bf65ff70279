//! Acceptance criteria, one line per check. Set `SPREADPC_ACCEPTANCE=fast`
//! to skip the Monte Carlo checks.

use spreadpc::verify::{run_check, suite_ids, Suite, VerifyOptions, VerifyReport};

fn main() {
    let suite = match std::env::var("SPREADPC_ACCEPTANCE").as_deref() {
        Ok("fast") => Suite::Fast,
        _ => Suite::Full,
    };
    let opts = VerifyOptions::default();
    let mut report = VerifyReport {
        suite,
        checks: Vec::new(),
    };
    println!("acceptance ({suite:?} suite, seed {})", opts.seed);
    for id in suite_ids(suite) {
        let r = run_check(id, &opts).expect("known check id");
        report.checks.push(r);
        // print as we go so long runs show progress
        print!("{}", report.table().lines().last().map(|l| format!("{l}\n")).unwrap_or_default());
    }
    let failed = report.checks.iter().filter(|c| !c.passed && c.gating).count();
    let soft = report.checks.iter().filter(|c| !c.passed && !c.gating).count();
    println!(
        "acceptance: {} passed, {failed} failed, {soft} soft-failed",
        report.checks.iter().filter(|c| c.passed).count()
    );
    if !report.passed() {
        std::process::exit(1);
    }
}
