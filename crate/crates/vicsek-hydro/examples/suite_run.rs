//! Run the built-in benchmark suite end to end (grid side only) and
//! summarize the report.
//!
//! The suite bundles five canonical Riemann setups: a double rarefaction,
//! two shock-pair problems, a mixed case on a periodic domain, and a pure
//! contact discontinuity. Each scenario is solved semi-analytically and by
//! every configured grid scheme; artifacts (profiles, diagnostics, wave
//! structure, report.json) land in a scratch directory. Particle runs are
//! skipped here to keep the example fast - drop `skip_micro` to include
//! them (minutes to hours depending on scale).
//!
//! Run with: `cargo run --release --example suite_run`

use vicsek_hydro::suite::{load_suite, run_suite, SuiteOptions, BUILTIN_SUITE_NAME};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenarios = load_suite(BUILTIN_SUITE_NAME)?;
    println!("loaded suite with {} scenarios:", scenarios.len());
    for sc in &scenarios {
        println!(
            "  {:<12} d = {:<4} domain [0, {}], t_end = {}, schemes: {}",
            sc.name,
            sc.d,
            sc.length,
            sc.t_end,
            sc.grid.schemes.join(", ")
        );
    }

    let out_dir = std::env::temp_dir().join("vicsek_hydro_suite_example");
    let opts = SuiteOptions {
        only: None,
        skip_micro: true,
        paper_scale: false,
        seed: None,
    };
    println!("\nrunning into {}", out_dir.display());
    let report = run_suite(&scenarios, BUILTIN_SUITE_NAME, &out_dir, &opts)?;

    println!("\n{:<12} {:<8} shocks located (per scheme)", "scenario", "status");
    for sc in &report.scenarios {
        let shocks: Vec<String> = sc
            .shock_macro
            .iter()
            .map(|(tag, pos)| match pos {
                Some(x) => format!("{tag}: x = {x:.3}"),
                None => format!("{tag}: none"),
            })
            .collect();
        println!("{:<12} {:<8} {}", sc.name, sc.status, shocks.join("  "));
        for w in &sc.warnings {
            println!("    warning: {w}");
        }
    }
    println!(
        "\n{} of {} scenarios failed; full report at {}",
        report.failed,
        report.scenarios.len(),
        out_dir.join("report.json").display()
    );
    Ok(())
}
