//! Probability objects: the modulating chain, transforms of the conditional
//! distributions, and the law of the negative multiplier.

mod chain;
mod law;
mod lst;
mod poly;

pub use chain::{check_irreducible, stationary_distribution, ModulationChain};
pub use law::Law;
pub use lst::{
    erlang_mixture_lst, exponential_lst, lst_eval, GeneralLst, Lst, NegativeMultiplierLaw,
    RationalLst,
};
pub use poly::{Poly, MAX_DEGREE};
