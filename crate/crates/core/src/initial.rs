//! Initial data on a periodic grid.

use crate::error::{Error, Result};
use crate::operators::{Grid1D, StateField};

/// Barenblatt profile of the porous-medium equation centred at `L/2`, with
/// support `[L/2 - r, L/2 + r]`, `r = |x_R - L/2|`.
pub fn barenblatt(grid: &Grid1D, beta: f64, t0: f64, x_r: f64) -> Result<StateField> {
    if !(beta > 1.0 && beta.is_finite()) {
        return Err(Error::InvalidArgument(format!("barenblatt profile needs beta > 1, got {beta}")));
    }
    if !(t0 > 0.0 && t0.is_finite()) {
        return Err(Error::InvalidArgument(format!("t0 must be positive, got {t0}")));
    }
    let centre = 0.5 * grid.length();
    let k = (beta - 1.0) / (2.0 * beta * (beta + 1.0));
    let spread = t0.powf(2.0 / (beta + 1.0));
    let c = k * (x_r - centre).powi(2) / spread;
    let amp = t0.powf(-1.0 / (beta + 1.0));
    let values = (0..grid.n())
        .map(|i| {
            let base = c - k * (grid.x(i) - centre).powi(2) / spread;
            amp * base.max(0.0).powf(1.0 / (beta - 1.0))
        })
        .collect();
    StateField::scalar(values)
}

/// `mean + amplitude · cos(2πx/L)` on every species.
pub fn cosine(grid: &Grid1D, species: usize, mean: f64, amplitude: f64) -> Result<StateField> {
    if species == 0 {
        return Err(Error::InvalidArgument("at least one species required".into()));
    }
    let profile: Vec<f64> = (0..grid.n())
        .map(|i| mean + amplitude * (std::f64::consts::TAU * grid.x(i) / grid.length()).cos())
        .collect();
    StateField::new(species, grid.n(), profile.repeat(species))
}
