use std::fmt::Write as _;

use super::{evaluate, EntropyFunctional};
use crate::error::{Error, Result};
use crate::operators::{d1, Family, ProblemSpec, StateField};
use crate::stepping::{backward_solve_from, BackwardState, NewtonConfig};
use crate::tableau::Scheme;

/// Exponent `e` in the quotient denominator `Σ u^e (D₁u)⁴ dx`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QExponent {
    /// `α + 2β - 2`.
    #[default]
    Equation,
    /// `2β + α - 5`.
    Text,
}

impl QExponent {
    pub fn value(self, alpha: f64, beta: f64) -> f64 {
        match self {
            QExponent::Equation => alpha + 2.0 * beta - 2.0,
            QExponent::Text => 2.0 * beta + alpha - 5.0,
        }
    }
}

/// `G(τ) = H[u] - H[v(τ)]` on a uniform τ-grid, with its central second
/// differences and the quotient `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct GProfile {
    pub taus: Vec<f64>,
    pub g: Vec<f64>,
    /// Defined on interior indices only.
    pub d2g: Vec<Option<f64>>,
    /// `d2g` divided by the quotient denominator (porous-medium problems).
    pub q: Vec<Option<f64>>,
    pub base_time: f64,
    /// Index of the first τ at which the backward solve failed, if any;
    /// the profile is truncated there.
    pub failed_at: Option<usize>,
    pub failure: Option<String>,
}

impl GProfile {
    /// CSV with header `tau,G,d2G,Q`; undefined entries are left empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau,G,d2G,Q\n");
        for j in 0..self.g.len() {
            let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
            let _ = writeln!(
                out,
                "{:e},{:e},{},{}",
                self.taus[j],
                self.g[j],
                opt(self.d2g[j]),
                opt(self.q[j])
            );
        }
        out
    }

    /// Grid spacing `h` of the τ-grid.
    pub fn h(&self) -> f64 {
        self.taus.get(1).copied().unwrap_or(0.0)
    }

    /// Richardson-extrapolated `G''(0)`: `2 d2g[1] - d2g[2]`.
    pub fn extrapolated_d2g(&self) -> Option<f64> {
        Some(2.0 * self.d2g.get(1).copied().flatten()? - self.d2g.get(2).copied().flatten()?)
    }
}

/// [`profile_g_with`] using the default quotient exponent.
pub fn profile_g(
    e: &EntropyFunctional,
    p: &ProblemSpec,
    s: &Scheme,
    u: &StateField,
    tau_max: f64,
    m: usize,
    cfg: &NewtonConfig,
) -> Result<GProfile> {
    profile_g_with(e, p, s, u, tau_max, m, cfg, QExponent::default())
}

/// Profiles `G` on `τ_j = j τ_max / m`, `j = 0..=m`.
///
/// The backward solves run in τ order, each warm-started from the previous
/// solution so the whole profile stays on one solution branch.
#[allow(clippy::too_many_arguments)]
pub fn profile_g_with(
    e: &EntropyFunctional,
    p: &ProblemSpec,
    s: &Scheme,
    u: &StateField,
    tau_max: f64,
    m: usize,
    cfg: &NewtonConfig,
    q_exponent: QExponent,
) -> Result<GProfile> {
    if !(tau_max.is_finite() && tau_max > 0.0) {
        return Err(Error::InvalidArgument(format!("tau_max must be positive, got {tau_max}")));
    }
    if m < 3 {
        return Err(Error::InvalidArgument(format!("profile needs m >= 3, got {m}")));
    }
    let h = tau_max / m as f64;
    let h0 = evaluate(e, u, p.grid())?;
    let mut taus = vec![0.0];
    let mut g = vec![0.0];
    let mut failed_at = None;
    let mut failure = None;
    let mut state: Option<BackwardState> = None;
    for j in 1..=m {
        let tau = j as f64 * h;
        let solved = backward_solve_from(p, s, u, tau, cfg, state.as_ref())
            .or_else(|_| backward_solve_from(p, s, u, tau, cfg, None))
            .and_then(|b| evaluate(e, &b.v, p.grid()).map(|hv| (b, hv)));
        match solved {
            Ok((b, hv)) => {
                taus.push(tau);
                g.push(h0 - hv);
                state = Some(b);
            }
            Err(err) => {
                failed_at = Some(j);
                failure = Some(err.to_string());
                break;
            }
        }
    }
    let len = g.len();
    let d2g: Vec<Option<f64>> = (0..len)
        .map(|j| (j > 0 && j + 1 < len).then(|| (g[j + 1] - 2.0 * g[j] + g[j - 1]) / (h * h)))
        .collect();
    let denom = quotient_denominator(e, p, u, q_exponent);
    let q = d2g
        .iter()
        .map(|d| match (d, denom) {
            (Some(d), Some(den)) if den > 0.0 => Some(d / den),
            _ => None,
        })
        .collect();
    Ok(GProfile {
        taus,
        g,
        d2g,
        q,
        base_time: 0.0,
        failed_at,
        failure,
    })
}

/// `Σ u^e (D₁u)⁴ dx` for porous-medium problems with a power-type entropy.
fn quotient_denominator(e: &EntropyFunctional, p: &ProblemSpec, u: &StateField, q: QExponent) -> Option<f64> {
    let Family::PorousMedium { beta } = p.family() else {
        return None;
    };
    let alpha = e.alpha()?;
    let exponent = q.value(alpha, *beta);
    let ux = d1(u.values(), p.grid().dx());
    let s: f64 = u
        .values()
        .iter()
        .zip(&ux)
        .map(|(&v, &d)| {
            let d4 = d * d * d * d;
            if d4 == 0.0 {
                0.0
            } else {
                v.powf(exponent) * d4
            }
        })
        .sum();
    let den = s * p.grid().dx();
    den.is_finite().then_some(den)
}
