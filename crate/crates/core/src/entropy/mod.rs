//! Discrete entropies, entropy production and the condition integrals.
//!
//! All integrals are cell sums times `dx`. For first-order entropies
//! `F[u] = Σ (D₁ f(u))² dx` the discrete Laplacian is `D₁∘D₁`, the exact
//! adjoint partner of the central difference used in `F`; with it the
//! production and `I₁` are the exact derivatives `-G'(0)` and `-G''(0)`
//! of the semi-discrete problem.

mod decay;
mod profile;

pub use decay::{fit_decay_rate, fit_decay_rate_series, steady_state};
pub use profile::{profile_g, profile_g_with, GProfile, QExponent};

use crate::error::{Error, Result};
use crate::operators::{d1, Family, Grid1D, ProblemSpec, StateField};

/// Entropy kinds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EntropyFunctional {
    /// `h(u) = u^{α+1} / (α(α+1))` for `α > 0`, `h(u) = u(log u - 1)` at `α = 0`.
    Power { alpha: f64 },
    /// `Σ_species u (log u - 1)`, the two-species system entropy.
    LogSum,
    /// `H_d[u] = Σ u_i^α dx`; a polynomial, defined for negative cells,
    /// when `α` is an integer.
    ExperimentPower { alpha: f64 },
    /// `F[u] = Σ (D₁ f(u))_i² dx` with `f(u) = u^{α/2}`.
    FirstOrder { alpha: f64 },
}

impl EntropyFunctional {
    pub fn validate(&self) -> Result<()> {
        let (alpha, min_ok) = match *self {
            EntropyFunctional::Power { alpha } => (alpha, alpha >= 0.0),
            EntropyFunctional::ExperimentPower { alpha } | EntropyFunctional::FirstOrder { alpha } => {
                (alpha, alpha > 0.0)
            }
            EntropyFunctional::LogSum => return Ok(()),
        };
        if alpha.is_finite() && min_ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid entropy exponent alpha = {alpha}")))
        }
    }

    /// The exponent `α`, if the kind has one.
    pub fn alpha(&self) -> Option<f64> {
        match *self {
            EntropyFunctional::Power { alpha }
            | EntropyFunctional::ExperimentPower { alpha }
            | EntropyFunctional::FirstOrder { alpha } => Some(alpha),
            EntropyFunctional::LogSum => None,
        }
    }

    pub fn is_first_order(&self) -> bool {
        matches!(self, EntropyFunctional::FirstOrder { .. })
    }

    fn is_logarithmic(&self) -> bool {
        matches!(
            self,
            EntropyFunctional::LogSum | EntropyFunctional::Power { alpha: 0.0 }
        )
    }

    fn requires_positive(&self) -> bool {
        self.is_logarithmic() || self.is_first_order()
    }

    fn allows_negative(&self) -> bool {
        matches!(*self, EntropyFunctional::ExperimentPower { alpha } if alpha.fract() == 0.0 && alpha <= 64.0)
    }

    /// `(h, h', h'')` at `u` for zeroth-order kinds, `(f, f', f'')` for
    /// [`EntropyFunctional::FirstOrder`].
    pub fn density(&self, u: f64) -> (f64, f64, f64) {
        match *self {
            EntropyFunctional::LogSum | EntropyFunctional::Power { alpha: 0.0 } => {
                (u * (u.ln() - 1.0), u.ln(), 1.0 / u)
            }
            EntropyFunctional::Power { alpha } => (
                u.powf(alpha + 1.0) / (alpha * (alpha + 1.0)),
                u.powf(alpha) / alpha,
                u.powf(alpha - 1.0),
            ),
            EntropyFunctional::ExperimentPower { alpha } if alpha.fract() == 0.0 && alpha <= 64.0 => {
                let k = alpha as i32;
                let pow = |e: i32| if e < 0 { 0.0 } else { u.powi(e) };
                (pow(k), alpha * pow(k - 1), alpha * (alpha - 1.0) * pow(k - 2))
            }
            EntropyFunctional::ExperimentPower { alpha } => (
                u.powf(alpha),
                alpha * u.powf(alpha - 1.0),
                alpha * (alpha - 1.0) * u.powf(alpha - 2.0),
            ),
            EntropyFunctional::FirstOrder { alpha } => {
                let k = alpha / 2.0;
                (u.powf(k), k * u.powf(k - 1.0), k * (k - 1.0) * u.powf(k - 2.0))
            }
        }
    }

    fn check(&self, u: &StateField) -> Result<()> {
        self.validate()?;
        if self.requires_positive() {
            u.require_positive("entropy requires strictly positive values")?;
        } else if !self.allows_negative() {
            if let Some(pos) = u.values().iter().position(|&v| v < 0.0) {
                return Err(Error::Domain {
                    species: pos / u.n(),
                    cell: pos % u.n(),
                    value: u.values()[pos],
                    reason: "power entropy requires nonnegative values",
                });
            }
        }
        if self.is_first_order() && u.species() != 1 {
            return Err(Error::Shape {
                expected: "single-species field for a first-order entropy".into(),
                found: format!("{} species", u.species()),
            });
        }
        Ok(())
    }

    /// Per-cell `(h, h', h'')` (or `(f, f', f'')`), failing on non-finite values.
    fn densities(&self, u: &StateField, need: usize) -> Result<Vec<(f64, f64, f64)>> {
        self.check(u)?;
        u.values()
            .iter()
            .enumerate()
            .map(|(pos, &v)| {
                let d = self.density(v);
                let parts = [d.0, d.1, d.2];
                if parts[..need].iter().all(|x| x.is_finite()) {
                    Ok(d)
                } else {
                    Err(Error::Domain {
                        species: pos / u.n(),
                        cell: pos % u.n(),
                        value: v,
                        reason: "entropy density not finite",
                    })
                }
            })
            .collect()
    }
}

/// `(f, f', f'', D₁D₁ f)` per cell.
type Parts = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>);

fn first_order_parts(
    e: &EntropyFunctional,
    u: &StateField,
    grid: &Grid1D,
    need: usize,
) -> Result<Parts> {
    let dens = e.densities(u, need)?;
    let f: Vec<f64> = dens.iter().map(|d| d.0).collect();
    let fp: Vec<f64> = dens.iter().map(|d| d.1).collect();
    let fpp: Vec<f64> = dens.iter().map(|d| d.2).collect();
    let lap = d1(&d1(&f, grid.dx()), grid.dx());
    Ok((f, fp, fpp, lap))
}

/// Discrete entropy `Σ h(u_i) dx` (species-summed), or `Σ (D₁ f(u))² dx`.
pub fn evaluate(e: &EntropyFunctional, u: &StateField, grid: &Grid1D) -> Result<f64> {
    if e.is_first_order() {
        let dens = e.densities(u, 1)?;
        let f: Vec<f64> = dens.iter().map(|d| d.0).collect();
        Ok(d1(&f, grid.dx()).iter().map(|x| x * x).sum::<f64>() * grid.dx())
    } else {
        Ok(e.densities(u, 1)?.iter().map(|d| d.0).sum::<f64>() * grid.dx())
    }
}

/// Entropy production `DH[u](A[u])`; for first-order entropies
/// `-2 Σ (D₁D₁ f(u)) f'(u) A[u] dx`. Equals `-G'(0)`.
pub fn production(e: &EntropyFunctional, p: &ProblemSpec, u: &StateField) -> Result<f64> {
    let a = p.apply(u)?;
    let dx = p.grid().dx();
    if e.is_first_order() {
        let (_, fp, _, lap) = first_order_parts(e, u, p.grid(), 2)?;
        let s: f64 = (0..u.len()).map(|i| lap[i] * fp[i] * a.values()[i]).sum();
        Ok(-2.0 * s * dx)
    } else {
        let dens = e.densities(u, 2)?;
        Ok(dens.iter().zip(a.values()).map(|(d, ai)| d.1 * ai).sum::<f64>() * dx)
    }
}

/// `I₀ = Σ [C h'(u) DA[u](A[u]) + h''(u) A[u]²] dx = -G''(0)`.
pub fn i0(e: &EntropyFunctional, p: &ProblemSpec, u: &StateField, c_rk: f64) -> Result<f64> {
    if e.is_first_order() {
        return Err(Error::InvalidArgument("i0 needs a zeroth-order entropy".into()));
    }
    let dens = e.densities(u, 3)?;
    let a = p.apply(u)?;
    let daa = p.deriv_apply(u, &a)?;
    let s: f64 = (0..u.len())
        .map(|i| {
            let ai = a.values()[i];
            c_rk * dens[i].1 * daa.values()[i] + dens[i].2 * ai * ai
        })
        .sum();
    Ok(s * p.grid().dx())
}

/// `I₁ = -G''(0)` for `F[u] = Σ (D₁ f(u))² dx`:
/// `2 Σ [(D₁(f'A))² - C Δf f' DA(A) - Δf f'' A²] dx` with `Δ = D₁∘D₁`.
pub fn i1(e: &EntropyFunctional, p: &ProblemSpec, u: &StateField, c_rk: f64) -> Result<f64> {
    if !e.is_first_order() {
        return Err(Error::InvalidArgument("i1 needs a first-order entropy".into()));
    }
    if !matches!(p.family(), Family::PorousMedium { .. } | Family::ScalarDiffusion(_) | Family::Dlss) {
        return Err(Error::InvalidArgument("i1 needs a single-species problem".into()));
    }
    let (_, fp, fpp, lap) = first_order_parts(e, u, p.grid(), 3)?;
    let a = p.apply(u)?;
    let daa = p.deriv_apply(u, &a)?;
    let dx = p.grid().dx();
    let fa: Vec<f64> = fp.iter().zip(a.values()).map(|(x, y)| x * y).collect();
    let grad = d1(&fa, dx);
    let s: f64 = (0..u.len())
        .map(|i| {
            let ai = a.values()[i];
            grad[i] * grad[i] - c_rk * lap[i] * fp[i] * daa.values()[i] - lap[i] * fpp[i] * ai * ai
        })
        .sum();
    Ok(2.0 * s * dx)
}
