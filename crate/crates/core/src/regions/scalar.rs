//! Pointwise conditions for scalar diffusion `∂_t u = div(a(u)∇u)` with
//! mobility `μ = a / h''`.

use crate::error::{Error, Result};

/// Absolute tolerance of the `b(u)` quadrature.
pub const QUADRATURE_TOL: f64 = 1e-10;

/// Condition values at one `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionRow {
    pub u: f64,
    /// `b(u) = (2/3)(C+1) ∫_{u₀}^u μ μ' h'' dv`, as displayed in the theorem.
    pub b_theorem: f64,
    /// Same integral with the factor `(2/3)(C+2)` arising in the proof.
    pub b_proof: f64,
    /// `(C+1) h'' μ² - ((d-1)/d) b(u)` for each form of `b`.
    pub cond2_theorem: f64,
    pub cond2_proof: f64,
    /// `(C+2) μ μ'' + (C-1) μ'²`.
    pub cond3: f64,
}

impl ConditionRow {
    pub fn cond1_pass(&self) -> bool {
        self.b_theorem >= 0.0
    }

    pub fn cond1_proof_pass(&self) -> bool {
        self.b_proof >= 0.0
    }

    pub fn cond2_pass(&self) -> bool {
        self.cond2_theorem >= 0.0
    }

    pub fn cond2_proof_pass(&self) -> bool {
        self.cond2_proof >= 0.0
    }

    pub fn cond3_pass(&self) -> bool {
        self.cond3 < 0.0
    }
}

/// Functions defining the scalar problem.
pub struct Mobility<'a> {
    pub mu: &'a dyn Fn(f64) -> f64,
    pub dmu: &'a dyn Fn(f64) -> f64,
    pub d2mu: &'a dyn Fn(f64) -> f64,
    pub h2: &'a dyn Fn(f64) -> f64,
}

/// Evaluates the three conditions on an ascending positive grid; the
/// integral in `b` starts at the first grid point.
pub fn scalar_conditions(m: &Mobility<'_>, u_grid: &[f64], d: usize, c_rk: f64) -> Result<Vec<ConditionRow>> {
    let Some(&u0) = u_grid.first() else {
        return Err(Error::InvalidArgument("empty u grid".into()));
    };
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    if u0 <= 0.0 || u_grid.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
        return Err(Error::InvalidArgument("u grid must be positive and strictly ascending".into()));
    }
    let integrand = |v: f64| (m.mu)(v) * (m.dmu)(v) * (m.h2)(v);
    let segments = (u_grid.len() - 1).max(1) as f64;
    let mut integral = 0.0;
    let mut prev = u0;
    let dd = d as f64;
    u_grid
        .iter()
        .map(|&u| {
            if u > prev {
                integral += adaptive_simpson(&integrand, prev, u, QUADRATURE_TOL / segments)?;
                prev = u;
            }
            let b_theorem = 2.0 / 3.0 * (c_rk + 1.0) * integral;
            let b_proof = 2.0 / 3.0 * (c_rk + 2.0) * integral;
            let mu = (m.mu)(u);
            let diag = (c_rk + 1.0) * (m.h2)(u) * mu * mu;
            let dmu = (m.dmu)(u);
            Ok(ConditionRow {
                u,
                b_theorem,
                b_proof,
                cond2_theorem: diag - (dd - 1.0) / dd * b_theorem,
                cond2_proof: diag - (dd - 1.0) / dd * b_proof,
                cond3: (c_rk + 2.0) * mu * (m.d2mu)(u) + (c_rk - 1.0) * dmu * dmu,
            })
        })
        .collect()
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    const MAX_DEPTH: u32 = 48;
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Option<f64> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if !delta.is_finite() {
            return None;
        }
        if delta.abs() <= 15.0 * tol {
            return Some(left + right + delta / 15.0);
        }
        if depth == 0 {
            return None;
        }
        Some(
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?,
        )
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH).ok_or(Error::Quadrature { from: a, to: b })
}
