//! The case where V is always negative: W_{n+1} = [V W_n + S_n - A_{n+1}]^+
//! with V < 0. The transform has a closed form in the service poles, so the
//! interarrival law can be anything with a transform, here deterministic.
//!
//! cargo run --release --example model1_special

use mmlindley::model1::{solve_model1_special, Model1SpecialSpec};
use mmlindley::probcore::{GeneralLst, Law, ModulationChain, NegativeMultiplierLaw, RationalLst};
use mmlindley::{Complex64, Result};

fn main() -> Result<()> {
    let spec = Model1SpecialSpec::new(
        ModulationChain::new(vec![vec![0.3, 0.7], vec![0.6, 0.4]])?,
        vec![RationalLst::erlang(2, 4.0)?, RationalLst::exponential(1.5)?],
        vec![
            GeneralLst::from_law(Law::PointMass { at: 0.5 })?,
            GeneralLst::exponential(2.0)?,
        ],
        NegativeMultiplierLaw::new(vec![(-0.5, 0.6), (-2.0, 0.4)])?,
    )?;
    if let Some(p) = spec.positive_drop_probability() {
        println!("P(S < A) = {p:.6}");
    }

    let sol = solve_model1_special(&spec)?;
    println!("condition {:.2e}, residual {:.2e}", sol.condition, sol.system_residual);
    for s in [0.0, 1.0, 3.0] {
        let phi = sol.phi(Complex64::new(s, 0.0))?;
        println!("Phi({s}) = [{:.10}, {:.10}]", phi[0].re, phi[1].re);
    }
    println!("P(W = 0, Z = i) = {:.10?}", sol.atom_at_zero());
    println!("E[W 1{{Z=i}}]    = {:.10?}", sol.mean());
    Ok(())
}
