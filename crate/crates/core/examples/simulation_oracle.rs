//! Checks a Model I solution against the raw recursion. Each row prints the
//! analytic value, the simulated estimate with its standard error across
//! replications, and the z-score.
//!
//! cargo run --release --example simulation_oracle

use mmlindley::model1::{assemble_and_solve_coefficients, mean_workload, Model1Spec};
use mmlindley::probcore::{ModulationChain, NegativeMultiplierLaw, RationalLst};
use mmlindley::simulate::{simulate_model1, SimConfig};
use mmlindley::{Complex64, Result};

fn main() -> Result<()> {
    let spec = Model1Spec::new(
        ModulationChain::new(vec![vec![0.1, 0.9], vec![0.7, 0.3]])?,
        vec![RationalLst::erlang(2, 6.0)?, RationalLst::exponential(5.0)?],
        vec![RationalLst::exponential(1.5)?, RationalLst::erlang(2, 5.0)?],
        (0.5, 0.3, 0.2),
        0.4,
        NegativeMultiplierLaw::new(vec![(-0.5, 0.5), (-1.5, 0.5)])?,
    )?;
    let sol = assemble_and_solve_coefficients(&spec)?;
    let cfg = SimConfig {
        n_steps: 4_000_000,
        seed: 11,
        ..SimConfig::default()
    };
    let sim = simulate_model1(&spec, &cfg)?;
    println!("{} steps over {} replications", sim.steps, sim.replications);

    let mean = mean_workload(&sol)?;
    for (i, est) in sim.mean_by_state.iter().enumerate() {
        println!(
            "mean      state {i}: analytic {:.6}, simulated {:.6} +- {:.1e}, z = {:+.2}",
            mean[i],
            est.value,
            est.stderr,
            est.z_score(mean[i])
        );
    }
    for t in &sim.transform_by_state {
        let phi = sol.phi(Complex64::new(t.s, 0.0))?;
        for (i, est) in t.by_state.iter().enumerate() {
            println!(
                "Phi({:.1}) state {i}: analytic {:.6}, simulated {:.6} +- {:.1e}, z = {:+.2}",
                t.s,
                phi[i].re,
                est.value,
                est.stderr,
                est.z_score(phi[i].re)
            );
        }
    }
    Ok(())
}
