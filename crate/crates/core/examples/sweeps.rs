//! Parameter sweeps driven by the shipped instance files. The first compares
//! an alternating environment with an independent one as the service times
//! grow; the second tabulates the Model II mean waiting time over p and u.
//! CSV files and reports land in the system temp directory.
//!
//! cargo run --release --example sweeps

use std::path::Path;

use mmlindley::cli::{cmd_sweep_model1, cmd_sweep_model2, default_u_grid, RunOptions};
use mmlindley::Result;

fn main() -> Result<()> {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let opts = RunOptions {
        out_dir: std::env::temp_dir(),
        ..RunOptions::default()
    };

    let sweep = cmd_sweep_model1(&configs.join("model1_two_state.toml"), &default_u_grid(), &opts)?;
    println!("{:>5} {:>12} {:>12}", "u", "alternating", "independent");
    for row in &sweep.rows {
        println!("{:>5} {:>12.6} {:>12.6}", row.u, row.mean_auto, row.mean_indep);
    }

    let p_grid = [0.1, 0.5, 0.9];
    let sweep = cmd_sweep_model2(&configs.join("model2_two_state.toml"), &p_grid, &[1.0, 2.0, 4.0], &opts)?;
    println!("\n{:>5} {:>5} {:>12}", "p", "u", "E[W]");
    for row in &sweep.rows {
        println!("{:>5} {:>5} {:>12.6}", row.p, row.u, row.mean_wait);
    }
    println!("\nfiles: {:?}", sweep.report.files);
    Ok(())
}
