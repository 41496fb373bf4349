//! Shared fixtures for the benchmarks.

use entropy_rk::initial::barenblatt;
use entropy_rk::{registry, Family, Grid1D, NewtonConfig, ProblemSpec, Scheme, StateField};

/// Porous medium with `β = 2` on `n` cells, started from a Barenblatt profile.
pub fn barenblatt_pme(n: usize) -> (ProblemSpec, StateField) {
    let grid = Grid1D::unit(n).expect("grid");
    let u0 = barenblatt(&grid, 2.0, 0.01, 0.25).expect("profile");
    (ProblemSpec::porous_medium(2.0, grid).expect("problem"), u0)
}

/// Two-species linear system with a smooth positive state.
pub fn linear_system(n: usize) -> (ProblemSpec, StateField) {
    let grid = Grid1D::unit(n).expect("grid");
    let p = ProblemSpec::new(Family::LinearSystem { rho1: 1.0, rho2: 0.5, mu: 1.0 }, grid).expect("problem");
    let profile: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.3 * (std::f64::consts::TAU * grid.x(i)).cos())
        .collect();
    let u = StateField::new(2, n, [profile.clone(), profile.iter().map(|x| 2.0 - x).collect()].concat())
        .expect("field");
    (p, u)
}

pub fn scheme(name: &str) -> Scheme {
    registry().get(name).expect("registered scheme").clone()
}

pub fn newton() -> NewtonConfig {
    NewtonConfig::default()
}
