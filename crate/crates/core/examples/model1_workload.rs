//! Solve a two-state Model I instance: V is 1, a or negative, service and
//! interarrival times are exponential. Prints the stability verdict, the
//! roots found in the right half-plane, a few transform values and the mean
//! workload per state.
//!
//! cargo run --release --example model1_workload

use mmlindley::model1::{
    assemble_and_solve_coefficients, check_stability_model1, mean_workload, Model1Spec,
};
use mmlindley::probcore::{ModulationChain, NegativeMultiplierLaw, RationalLst};
use mmlindley::{Complex64, Result};

fn main() -> Result<()> {
    let chain = ModulationChain::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]])?;
    let service = vec![RationalLst::exponential(10.0)?, RationalLst::exponential(8.0)?];
    let interarrival = vec![RationalLst::exponential(2.0)?, RationalLst::exponential(3.0)?];
    let spec = Model1Spec::new(
        chain,
        service,
        interarrival,
        (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0),
        0.2,
        NegativeMultiplierLaw::single(-1.0)?,
    )?;

    let stability = check_stability_model1(&spec);
    println!("stable: {} ({})", stability.stable, stability.reason);

    let sol = assemble_and_solve_coefficients(&spec)?;
    for z in &sol.delta_roots.zeros {
        println!("root of det(I - p1 F): {:.10}", z.re);
    }
    println!("condition {:.2e}, b0 residual {:.2e}", sol.diagnostics.condition, sol.diagnostics.b0_residual);

    for s in [0.0, 0.5, 1.0, 5.0] {
        let phi = sol.phi(Complex64::new(s, 0.0))?;
        println!("Phi({s}) = [{:.10}, {:.10}]", phi[0].re, phi[1].re);
    }
    let mean = mean_workload(&sol)?;
    println!("E[W 1{{Z=i}}] = {mean:.10?}, E[W] = {:.10}", mean.iter().sum::<f64>());
    Ok(())
}
