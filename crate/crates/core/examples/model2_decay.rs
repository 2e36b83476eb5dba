//! Exponential tail of the Model II waiting time. The solver reads the decay
//! rate R off the rightmost zero of det G on the negative axis; the
//! simulation fits the slope of log P(W > x) between its 50th and 99th
//! percentiles.
//!
//! cargo run --release --example model2_decay

use mmlindley::model2::{assemble_unknowns, decay_profile, Model2Spec};
use mmlindley::probcore::{GeneralLst, ModulationChain};
use mmlindley::simulate::{simulate_model2, SimConfig};
use mmlindley::Result;

fn main() -> Result<()> {
    let spec = Model2Spec::new(
        ModulationChain::new(vec![vec![1.0]])?,
        vec![2.0],
        vec![10.0],
        vec![GeneralLst::exponential(10.0)?],
        vec![GeneralLst::exponential(1.0)?],
        0.5,
    )?;
    let sol = assemble_unknowns(&spec)?;
    let decay = decay_profile(&sol)?;
    println!("R = {:.10}, C = {:.6?}", decay.r, decay.c);
    if let Some(caveat) = &decay.caveat {
        println!("caveat: {caveat}");
    }

    let cfg = SimConfig {
        n_steps: 4_000_000,
        keep_samples: true,
        seed: 7,
        ..SimConfig::default()
    };
    let sim = simulate_model2(&spec, &cfg)?;
    if let Some(tail) = sim.tail_slope {
        println!(
            "simulated slope {:.4} +- {:.4} over [{:.3}, {:.3}], expected {:.4}",
            tail.slope, tail.stderr, tail.x50, tail.x99, -decay.r
        );
    }
    Ok(())
}
