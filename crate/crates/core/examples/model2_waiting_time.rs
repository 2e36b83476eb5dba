//! Model II: with probability p the recursion is the Lindley recursion,
//! otherwise the workload is reflected, W_{n+1} = [D_n - C_n - W_n]^+.
//! Solves a two-state instance and prints the roots of det G, the transform
//! and the first four moments per state.
//!
//! cargo run --release --example model2_waiting_time

use mmlindley::model2::{assemble_unknowns, check_stability_model2, evaluate_phi2, moments, Model2Spec};
use mmlindley::probcore::{GeneralLst, ModulationChain};
use mmlindley::{Complex64, Result};

fn main() -> Result<()> {
    let spec = Model2Spec::new(
        ModulationChain::new(vec![vec![0.2, 0.8], vec![0.6, 0.4]])?,
        vec![2.0, 3.0],
        vec![10.0, 8.0],
        vec![GeneralLst::exponential(10.0)?, GeneralLst::exponential(8.0)?],
        vec![GeneralLst::exponential(8.0)?, GeneralLst::exponential(6.0)?],
        0.5,
    )?;
    let stability = check_stability_model2(&spec);
    println!("stable: {} ({})", stability.stable, stability.reason);

    let sol = assemble_unknowns(&spec)?;
    println!("path {:?}", sol.path);
    for s in &sol.roots {
        println!("zero of det G: {:.10} {:+.3e}i", s.re, s.im);
    }
    for warning in &sol.warnings {
        println!("warning: {warning}");
    }

    for s in [0.0, 1.0, 4.0] {
        let phi = evaluate_phi2(&sol, Complex64::new(s, 0.0))?;
        println!("Phi({s}) = [{:.10}, {:.10}]", phi[0].re, phi[1].re);
    }
    for (r, row) in moments(&sol, 4)?.iter().enumerate() {
        let row: Vec<String> = row.iter().map(|x| format!("{x:.6e}")).collect();
        println!("E[W^{r} 1{{Z=i}}] = [{}]", row.join(", "));
    }
    Ok(())
}
