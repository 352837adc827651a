//! The two-strain imperfect-vaccine SVI₁I₂R epidemic model and its analyses.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod error;
pub mod linalg;
pub mod model;
pub mod odeint;

pub use error::{Error, Result};
pub use model::{ModelParameters, ParamName, State, StateDerivative, Trajectory};
pub mod equilibria;
pub mod reproduction;
pub mod stability;
pub mod bifurcation;
pub mod sensitivity;
pub mod calibration;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/equilibria.md")]
    mod equilibria {}
    #[doc = include_str!("../../../book/src/reproduction.md")]
    mod reproduction {}
    #[doc = include_str!("../../../book/src/stability.md")]
    mod stability {}
    #[doc = include_str!("../../../book/src/bifurcation.md")]
    mod bifurcation {}
    #[doc = include_str!("../../../book/src/sensitivity.md")]
    mod sensitivity {}
    #[doc = include_str!("../../../book/src/calibration.md")]
    mod calibration {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
