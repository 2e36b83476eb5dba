//! Stationary analysis of Markov-modulated multiplicative Lindley recursions
//! `W_{n+1} = [V_n W_n + Y_n(V_n)]^+`.
//!
//! Two solvers compute the transform vector `Φ_W(s) = (E[e^{-sW} 1{Z=i}])_i`:
//! [`model1`] for `V ∈ {1, a} ∪ (−∞, 0)` with rational service and
//! interarrival transforms, and [`model2`] for `V ∈ {+1, −1}` with
//! exponential arrivals. [`simulate`] runs the raw recursion as an
//! independent oracle, and [`cli`] wires everything to instance files.

pub mod cli;
pub mod error;
pub mod model1;
pub mod model2;
pub mod polyalg;
pub mod probcore;
pub mod simulate;

pub use error::{Error, Result};
pub use num_complex::Complex64;
