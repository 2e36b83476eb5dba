//! With p = 1 and one state, Model II is the M/G/1 waiting time. This
//! compares the solver against the Pollaczek-Khinchine transform
//! (1 - rho) s / (s - lambda (1 - beta(s))) for Erlang service.
//!
//! cargo run --release --example mg1_check

use mmlindley::model2::{assemble_unknowns, evaluate_phi2, moments, Model2Spec};
use mmlindley::probcore::{GeneralLst, Law, ModulationChain};
use mmlindley::{Complex64, Result};

fn main() -> Result<()> {
    let (lambda, phases, rate) = (0.8, 3, 4.0);
    let service = Law::Erlang { phases, rate };
    let spec = Model2Spec::new(
        ModulationChain::new(vec![vec![1.0]])?,
        vec![lambda],
        vec![1.0],
        vec![GeneralLst::from_law(service.clone())?],
        vec![GeneralLst::exponential(1.0)?],
        1.0,
    )?;
    let sol = assemble_unknowns(&spec)?;
    let rho = lambda * service.mean();
    println!("path {:?}, rho = {rho}", sol.path);

    for s in [0.25, 1.0, 4.0] {
        let z = Complex64::new(s, 0.0);
        let pk = (1.0 - rho) * z / (z - lambda * (1.0 - service.lst(z)));
        let phi = evaluate_phi2(&sol, z)?[0];
        println!("s = {s}: solver {:.12}, formula {:.12}, gap {:.1e}", phi.re, pk.re, (phi - pk).norm());
    }
    let mean = moments(&sol, 1)?[1][0];
    let pk_mean = lambda * service.moment(2) / (2.0 * (1.0 - rho));
    println!("E[W]: solver {mean:.12}, formula {pk_mean:.12}");
    Ok(())
}
