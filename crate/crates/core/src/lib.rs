//! Runge-Kutta time integration for nonlinear diffusion equations with
//! entropy-dissipation diagnostics and admissibility-region analysis.

pub mod entropy;
pub mod error;
pub mod initial;
pub mod operators;
pub mod regions;
pub mod stepping;
pub mod tableau;

pub use error::{Error, Result};
pub use operators::{CyclicBanded, DiffusionCoefficient, Family, Grid1D, ProblemSpec, StateField};
pub use tableau::{registry, ButcherTableau, Scheme, SchemeKind, SchemeRegistry, Violation};
pub use stepping::{backward_solve, forward_step, run, NewtonConfig, Trajectory};
pub use entropy::{evaluate, i0, i1, production, profile_g, EntropyFunctional, GProfile, QExponent};
pub use regions::{emit_mask, AxisRange, RegionFamily, RegionMask, RegionQuery, Witness};
