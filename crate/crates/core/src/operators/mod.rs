//! Periodic finite-difference operators `A[u]` with `∂_t u = -A[u]`.
//!
//! Four families are provided: the porous-medium equation, scalar
//! nonlinear diffusion in conservative flux form, a linear two-species
//! reaction-diffusion system and the fourth-order DLSS equation. Each
//! supplies `A[u]`, the directional derivative `DA[u](w)` and the exact
//! Jacobian as a [`CyclicBanded`] matrix.

mod banded;
mod grid;

use std::fmt;
use std::sync::Arc;

pub use banded::CyclicBanded;
pub use grid::{Grid1D, StateField};

use crate::error::{Error, Result};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Diffusion coefficient `a(u)` together with its derivative `a'(u)`.
#[derive(Clone)]
pub struct DiffusionCoefficient {
    label: String,
    a: ScalarFn,
    da: ScalarFn,
}

impl DiffusionCoefficient {
    pub fn new(
        label: impl Into<String>,
        a: impl Fn(f64) -> f64 + Send + Sync + 'static,
        da: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            a: Arc::new(a),
            da: Arc::new(da),
        }
    }

    /// `a(u) = rho`.
    pub fn constant(rho: f64) -> Self {
        Self::new(format!("{rho}"), move |_| rho, |_| 0.0)
    }

    /// `a(u) = k u^m`. With `k = β` and `m = β - 1` this is the
    /// porous-medium equation written in divergence form.
    pub fn power(k: f64, m: f64) -> Self {
        Self::new(
            format!("{k}*u^{m}"),
            move |u| k * u.powf(m),
            move |u| if m == 0.0 { 0.0 } else { k * m * u.powf(m - 1.0) },
        )
    }

    #[inline]
    pub fn a(&self, u: f64) -> f64 {
        (self.a)(u)
    }

    #[inline]
    pub fn da(&self, u: f64) -> f64 {
        (self.da)(u)
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl fmt::Debug for DiffusionCoefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiffusionCoefficient")
            .field("a", &self.label)
            .finish()
    }
}

/// Equation family and its parameters.
#[derive(Debug, Clone)]
pub enum Family {
    /// `∂_t u = (u^β)_xx`.
    PorousMedium { beta: f64 },
    /// `∂_t u = (a(u) u_x)_x`.
    ScalarDiffusion(DiffusionCoefficient),
    /// `∂_t u_1 = ρ_1 u_1,xx + μ(u_2 - u_1)` and symmetrically for `u_2`.
    LinearSystem { rho1: f64, rho2: f64, mu: f64 },
    /// `∂_t u = -(u (log u)_xx)_xx`.
    Dlss,
}

impl Family {
    pub fn species(&self) -> usize {
        match self {
            Family::LinearSystem { .. } => 2,
            _ => 1,
        }
    }

    pub fn bandwidth(&self) -> usize {
        match self {
            Family::Dlss => 2,
            _ => 1,
        }
    }

    /// Whether admissible states must be strictly positive.
    pub fn requires_positive(&self) -> bool {
        matches!(self, Family::Dlss)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::PorousMedium { .. } => "pme",
            Family::ScalarDiffusion(_) => "diffusion",
            Family::LinearSystem { .. } => "system",
            Family::Dlss => "dlss",
        }
    }
}

/// An equation family on a periodic grid.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    family: Family,
    grid: Grid1D,
}

impl ProblemSpec {
    pub fn new(family: Family, grid: Grid1D) -> Result<Self> {
        match &family {
            Family::PorousMedium { beta } if !(beta.is_finite() && *beta > 0.0) => {
                return Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")));
            }
            Family::LinearSystem { rho1, rho2, mu } => {
                for (name, v) in [("rho1", rho1), ("rho2", rho2), ("mu", mu)] {
                    if !(v.is_finite() && *v >= 0.0) {
                        return Err(Error::InvalidArgument(format!(
                            "{name} must be nonnegative, got {v}"
                        )));
                    }
                }
            }
            _ => {}
        }
        Ok(Self { family, grid })
    }

    pub fn porous_medium(beta: f64, grid: Grid1D) -> Result<Self> {
        Self::new(Family::PorousMedium { beta }, grid)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn species(&self) -> usize {
        self.family.species()
    }

    /// State dimension `species * n`.
    pub fn dim(&self) -> usize {
        self.species() * self.grid.n()
    }

    /// Checks shape, finiteness and (where needed) positivity of `u`.
    pub fn check_state(&self, u: &StateField) -> Result<()> {
        if u.species() != self.species() || u.n() != self.grid.n() {
            return Err(Error::Shape {
                expected: format!("{} species on {} cells", self.species(), self.grid.n()),
                found: format!("{} species on {} cells", u.species(), u.n()),
            });
        }
        u.check_finite("non-finite state")?;
        if self.family.requires_positive() {
            u.require_positive("DLSS requires strictly positive states")?;
        }
        Ok(())
    }

    /// `A[u]`.
    pub fn apply(&self, u: &StateField) -> Result<StateField> {
        self.check_state(u)?;
        let n = self.grid.n();
        let h2 = self.grid.dx() * self.grid.dx();
        let values = match &self.family {
            Family::PorousMedium { beta } => {
                let w = pme_power(u.values(), *beta)?;
                d2(&w, h2).into_iter().map(|x| -x).collect()
            }
            Family::ScalarDiffusion(coef) => {
                let ua = u.values();
                let out = flux_div(ua, |i, j| coef.a(0.5 * (ua[i] + ua[j])), h2);
                check_output(out, "diffusion coefficient not finite")?
            }
            Family::LinearSystem { rho1, rho2, mu } => {
                let (u1, u2) = (u.component(0), u.component(1));
                let mut out = flux_div(u1, |_, _| *rho1, h2);
                out.extend(flux_div(u2, |_, _| *rho2, h2));
                for i in 0..n {
                    out[i] -= mu * (u2[i] - u1[i]);
                    out[n + i] -= mu * (u1[i] - u2[i]);
                }
                out
            }
            Family::Dlss => {
                let ua = u.values();
                let logu: Vec<f64> = ua.iter().map(|v| v.ln()).collect();
                let q = d2(&logu, h2);
                let p: Vec<f64> = ua.iter().zip(&q).map(|(a, b)| a * b).collect();
                d2(&p, h2)
            }
        };
        Ok(StateField::from_raw(u.species(), n, values))
    }

    /// `DA[u](w)`.
    pub fn deriv_apply(&self, u: &StateField, w: &StateField) -> Result<StateField> {
        self.check_state(u)?;
        if w.species() != u.species() || w.n() != u.n() {
            return Err(Error::Shape {
                expected: format!("direction with {} species on {} cells", u.species(), u.n()),
                found: format!("{} species on {} cells", w.species(), w.n()),
            });
        }
        w.check_finite("non-finite direction")?;
        let n = self.grid.n();
        let h2 = self.grid.dx() * self.grid.dx();
        let values = match &self.family {
            Family::PorousMedium { beta } => {
                let dw = pme_slope(u.values(), *beta)?;
                let z: Vec<f64> = dw.iter().zip(w.values()).map(|(a, b)| a * b).collect();
                d2(&z, h2).into_iter().map(|x| -x).collect()
            }
            Family::ScalarDiffusion(coef) => {
                let (ua, wa) = (u.values(), w.values());
                let mut out = vec![0.0; n];
                for i in 0..n {
                    let ip = (i + 1) % n;
                    let im = (i + n - 1) % n;
                    let (mp, mm) = (0.5 * (ua[i] + ua[ip]), 0.5 * (ua[im] + ua[i]));
                    let fp = coef.da(mp) * 0.5 * (wa[i] + wa[ip]) * (ua[ip] - ua[i])
                        + coef.a(mp) * (wa[ip] - wa[i]);
                    let fm = coef.da(mm) * 0.5 * (wa[im] + wa[i]) * (ua[i] - ua[im])
                        + coef.a(mm) * (wa[i] - wa[im]);
                    out[i] = -(fp - fm) / h2;
                }
                check_output(out, "diffusion coefficient not finite")?
            }
            Family::LinearSystem { .. } => return self.apply_unchecked_linear(w),
            Family::Dlss => {
                let (ua, wa) = (u.values(), w.values());
                let logu: Vec<f64> = ua.iter().map(|v| v.ln()).collect();
                let q = d2(&logu, h2);
                let ratio: Vec<f64> = wa.iter().zip(ua).map(|(a, b)| a / b).collect();
                let r = d2(&ratio, h2);
                let z: Vec<f64> = (0..n).map(|i| wa[i] * q[i] + ua[i] * r[i]).collect();
                d2(&z, h2)
            }
        };
        Ok(StateField::from_raw(u.species(), n, values))
    }

    fn apply_unchecked_linear(&self, w: &StateField) -> Result<StateField> {
        // The system is linear, so DA[u](w) = A[w] for every u.
        let Family::LinearSystem { rho1, rho2, mu } = &self.family else {
            unreachable!("only called for linear systems")
        };
        let n = self.grid.n();
        let h2 = self.grid.dx() * self.grid.dx();
        let (w1, w2) = (w.component(0), w.component(1));
        let mut out = flux_div(w1, |_, _| *rho1, h2);
        out.extend(flux_div(w2, |_, _| *rho2, h2));
        for i in 0..n {
            out[i] -= mu * (w2[i] - w1[i]);
            out[n + i] -= mu * (w1[i] - w2[i]);
        }
        Ok(StateField::from_raw(2, n, out))
    }

    /// Exact Jacobian of `A` at `u`.
    pub fn jacobian(&self, u: &StateField) -> Result<CyclicBanded> {
        self.check_state(u)?;
        let n = self.grid.n();
        let h2 = self.grid.dx() * self.grid.dx();
        let mut jac = CyclicBanded::zeros(n, self.species(), self.family.bandwidth());
        const D2: [(isize, f64); 3] = [(-1, 1.0), (0, -2.0), (1, 1.0)];
        match &self.family {
            Family::PorousMedium { beta } => {
                let dw = pme_slope(u.values(), *beta)?;
                for i in 0..n {
                    for (k, c) in D2 {
                        jac.add(0, 0, i, k, -c * dw[self.grid.wrap(i, k)] / h2);
                    }
                }
            }
            Family::ScalarDiffusion(coef) => {
                let ua = u.values();
                for i in 0..n {
                    let ip = (i + 1) % n;
                    let im = (i + n - 1) % n;
                    let (mp, mm) = (0.5 * (ua[i] + ua[ip]), 0.5 * (ua[im] + ua[i]));
                    let (dp, dm) = (ua[ip] - ua[i], ua[i] - ua[im]);
                    let (ap, am) = (coef.a(mp), coef.a(mm));
                    let (gp, gm) = (0.5 * coef.da(mp) * dp, 0.5 * coef.da(mm) * dm);
                    jac.add(0, 0, i, 1, -(gp + ap) / h2);
                    jac.add(0, 0, i, 0, -(gp - ap - gm - am) / h2);
                    jac.add(0, 0, i, -1, -(am - gm) / h2);
                }
            }
            Family::LinearSystem { rho1, rho2, mu } => {
                for (s, rho) in [(0, *rho1), (1, *rho2)] {
                    for i in 0..n {
                        for (k, c) in D2 {
                            jac.add(s, s, i, k, -rho * c / h2);
                        }
                        jac.add(s, s, i, 0, *mu);
                        jac.add(s, 1 - s, i, 0, -*mu);
                    }
                }
            }
            Family::Dlss => {
                // A = D2 p with p_k = u_k q_k, q = D2 log u, so
                // ∂p_k/∂u_m = δ_km q_k + u_k (D2)_km / u_m.
                let ua = u.values();
                let logu: Vec<f64> = ua.iter().map(|v| v.ln()).collect();
                let q = d2(&logu, h2);
                for i in 0..n {
                    for (k, ck) in D2 {
                        let kk = self.grid.wrap(i, k);
                        jac.add(0, 0, i, k, ck * q[kk] / h2);
                        for (m, cm) in D2 {
                            let mm = self.grid.wrap(kk, m);
                            jac.add(0, 0, i, k + m, ck * cm * ua[kk] / (ua[mm] * h2 * h2));
                        }
                    }
                }
            }
        }
        Ok(jac)
    }
}

/// Periodic second difference `(w_{i+1} - 2 w_i + w_{i-1}) / dx²`.
pub(crate) fn d2(w: &[f64], h2: f64) -> Vec<f64> {
    let n = w.len();
    (0..n)
        .map(|i| (w[(i + 1) % n] - 2.0 * w[i] + w[(i + n - 1) % n]) / h2)
        .collect()
}

/// Periodic central first difference `(w_{i+1} - w_{i-1}) / (2 dx)`.
pub(crate) fn d1(w: &[f64], dx: f64) -> Vec<f64> {
    let n = w.len();
    (0..n)
        .map(|i| (w[(i + 1) % n] - w[(i + n - 1) % n]) / (2.0 * dx))
        .collect()
}

/// `-[a_{i+1/2}(w_{i+1} - w_i) - a_{i-1/2}(w_i - w_{i-1})] / dx²`, where
/// `coef(i, j)` returns the interface coefficient between cells `i` and `j`.
fn flux_div(w: &[f64], coef: impl Fn(usize, usize) -> f64, h2: f64) -> Vec<f64> {
    let n = w.len();
    (0..n)
        .map(|i| {
            let ip = (i + 1) % n;
            let im = (i + n - 1) % n;
            let right = coef(i, ip) * (w[ip] - w[i]);
            let left = coef(im, i) * (w[i] - w[im]);
            -(right - left) / h2
        })
        .collect()
}

fn check_output(out: Vec<f64>, reason: &'static str) -> Result<Vec<f64>> {
    match out.iter().position(|v| !v.is_finite()) {
        None => Ok(out),
        Some(cell) => Err(Error::Domain {
            species: 0,
            cell,
            value: out[cell],
            reason,
        }),
    }
}

fn is_integer(beta: f64) -> bool {
    beta.fract() == 0.0 && beta.abs() < 64.0
}

/// `u^β`; negative cells are accepted only for integer `β`.
fn pme_power(u: &[f64], beta: f64) -> Result<Vec<f64>> {
    let int = is_integer(beta);
    u.iter()
        .enumerate()
        .map(|(cell, &v)| {
            if v < 0.0 && !int {
                return Err(Error::Domain {
                    species: 0,
                    cell,
                    value: v,
                    reason: "negative state with non-integer beta",
                });
            }
            Ok(if int { v.powi(beta as i32) } else { v.powf(beta) })
        })
        .collect()
}

/// `β u^{β-1}`; requires a finite value, so zero cells need `β >= 1`.
fn pme_slope(u: &[f64], beta: f64) -> Result<Vec<f64>> {
    let int = is_integer(beta);
    u.iter()
        .enumerate()
        .map(|(cell, &v)| {
            let s = if int {
                beta * v.powi(beta as i32 - 1)
            } else if v >= 0.0 {
                beta * v.powf(beta - 1.0)
            } else {
                f64::NAN
            };
            if s.is_finite() {
                Ok(s)
            } else {
                Err(Error::Domain {
                    species: 0,
                    cell,
                    value: v,
                    reason: "beta*u^(beta-1) is not finite",
                })
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(n: usize) -> Grid1D {
        Grid1D::unit(n).unwrap()
    }

    fn smooth(n: usize, phase: f64) -> StateField {
        let v = (0..n)
            .map(|i| {
                let x = i as f64 / n as f64;
                1.0 + 0.3 * (std::f64::consts::TAU * x + phase).cos() + 0.1 * (2.0 * std::f64::consts::TAU * x).sin()
            })
            .collect();
        StateField::scalar(v).unwrap()
    }

    fn all_families(n: usize) -> Vec<ProblemSpec> {
        let g = grid(n);
        vec![
            ProblemSpec::porous_medium(2.0, g).unwrap(),
            ProblemSpec::porous_medium(1.5, g).unwrap(),
            ProblemSpec::new(Family::ScalarDiffusion(DiffusionCoefficient::power(2.0, 1.0)), g).unwrap(),
            ProblemSpec::new(Family::LinearSystem { rho1: 1.0, rho2: 0.5, mu: 2.0 }, g).unwrap(),
            ProblemSpec::new(Family::Dlss, g).unwrap(),
        ]
    }

    fn state_for(p: &ProblemSpec, vals: &[f64]) -> StateField {
        let n = p.grid().n();
        if p.species() == 2 {
            let second: Vec<f64> = vals.iter().rev().copied().collect();
            StateField::pair(vals[..n].to_vec(), second[..n].to_vec()).unwrap()
        } else {
            StateField::scalar(vals[..n].to_vec()).unwrap()
        }
    }

    #[test]
    fn pme_hand_stencil() {
        let p = ProblemSpec::porous_medium(2.0, grid(4)).unwrap();
        let u = StateField::scalar(vec![1.0, 2.0, 1.0, 2.0]).unwrap();
        assert_eq!(p.apply(&u).unwrap().values(), &[-96.0, 96.0, -96.0, 96.0]);
    }

    #[test]
    fn constant_is_steady() {
        for p in all_families(8) {
            let u = StateField::constant(p.species(), 8, 1.7).unwrap();
            assert!(p.apply(&u).unwrap().norm_inf() <= 1e-12, "{}", p.family().name());
        }
    }

    #[test]
    fn pme_jacobian_at_one_is_scaled_laplacian() {
        let n = 6;
        let p = ProblemSpec::porous_medium(2.0, grid(n)).unwrap();
        let u = StateField::constant(1, n, 1.0).unwrap();
        let j = p.jacobian(&u).unwrap().to_dense();
        let h2 = p.grid().dx().powi(2);
        for r in 0..n {
            for c in 0..n {
                let lap = if r == c {
                    -2.0
                } else if (r + 1) % n == c || (c + 1) % n == r {
                    1.0
                } else {
                    0.0
                };
                assert_eq!(j[(r, c)], -2.0 * lap / h2);
            }
        }
    }

    #[test]
    fn decoupled_system_is_block_diagonal() {
        let n = 5;
        let p = ProblemSpec::new(Family::LinearSystem { rho1: 2.0, rho2: 3.0, mu: 0.0 }, grid(n)).unwrap();
        let u = StateField::constant(2, n, 1.0).unwrap();
        let j = p.jacobian(&u).unwrap().to_dense();
        let h2 = p.grid().dx().powi(2);
        for r in 0..2 * n {
            for c in 0..2 * n {
                if r / n != c / n {
                    assert_eq!(j[(r, c)], 0.0);
                }
            }
            let rho = if r < n { 2.0 } else { 3.0 };
            assert_eq!(j[(r, r)], 2.0 * rho / h2);
        }
    }

    #[test]
    fn pme_derivative_matches_central_difference() {
        let n = 32;
        let p = ProblemSpec::porous_medium(2.0, grid(n)).unwrap();
        let u = smooth(n, 0.3);
        let w = smooth(n, 1.9);
        let eps = 1e-6;
        let plus: Vec<f64> = u.values().iter().zip(w.values()).map(|(a, b)| a + eps * b).collect();
        let minus: Vec<f64> = u.values().iter().zip(w.values()).map(|(a, b)| a - eps * b).collect();
        let ap = p.apply(&StateField::scalar(plus).unwrap()).unwrap();
        let am = p.apply(&StateField::scalar(minus).unwrap()).unwrap();
        let da = p.deriv_apply(&u, &w).unwrap();
        let scale = da.norm_inf();
        for i in 0..n {
            let fd = (ap.values()[i] - am.values()[i]) / (2.0 * eps);
            assert!((fd - da.values()[i]).abs() <= 1e-6 * scale);
        }
    }

    #[test]
    fn linear_system_derivative_is_apply() {
        let n = 8;
        let p = ProblemSpec::new(Family::LinearSystem { rho1: 1.0, rho2: 2.0, mu: 0.7 }, grid(n)).unwrap();
        let u = StateField::pair(smooth(n, 0.1).into_values(), smooth(n, 2.0).into_values()).unwrap();
        let w = StateField::pair(smooth(n, 0.5).into_values(), smooth(n, 1.2).into_values()).unwrap();
        assert_eq!(p.deriv_apply(&u, &w).unwrap(), p.apply(&w).unwrap());
    }

    #[test]
    fn constant_coefficient_diffusion_matches_system_diffusion() {
        let n = 16;
        let rho = 0.37;
        let scalar = ProblemSpec::new(Family::ScalarDiffusion(DiffusionCoefficient::constant(rho)), grid(n)).unwrap();
        let system = ProblemSpec::new(Family::LinearSystem { rho1: rho, rho2: rho, mu: 0.0 }, grid(n)).unwrap();
        let u = smooth(n, 0.4);
        let pair = StateField::pair(u.values().to_vec(), u.values().to_vec()).unwrap();
        let a = scalar.apply(&u).unwrap();
        let b = system.apply(&pair).unwrap();
        assert_eq!(a.values(), b.component(0));
    }

    #[test]
    fn dlss_rejects_nonpositive() {
        let p = ProblemSpec::new(Family::Dlss, grid(4)).unwrap();
        let u = StateField::scalar(vec![1.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(p.apply(&u), Err(Error::Domain { cell: 2, .. })));
    }

    #[test]
    fn pme_zero_cells() {
        let u = StateField::scalar(vec![0.0, 1.0, 2.0, 0.0]).unwrap();
        let p = ProblemSpec::porous_medium(2.0, grid(4)).unwrap();
        assert!(p.jacobian(&u).is_ok());
        let p = ProblemSpec::porous_medium(0.5, grid(4)).unwrap();
        assert!(p.apply(&u).is_ok());
        assert!(matches!(p.jacobian(&u), Err(Error::Domain { cell: 0, .. })));
    }

    #[test]
    fn parameter_validation() {
        assert!(ProblemSpec::porous_medium(0.0, grid(4)).is_err());
        assert!(ProblemSpec::new(Family::LinearSystem { rho1: -1.0, rho2: 1.0, mu: 0.0 }, grid(4)).is_err());
        let p = ProblemSpec::porous_medium(2.0, grid(4)).unwrap();
        assert!(matches!(
            p.apply(&StateField::scalar(vec![1.0; 5]).unwrap()),
            Err(Error::Shape { .. })
        ));
    }

    fn positive_vec(len: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.2f64..2.0, len)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn zero_sum(vals in positive_vec(32)) {
            for p in all_families(16) {
                let a = p.apply(&state_for(&p, &vals)).unwrap();
                let sum: f64 = a.values().iter().sum();
                prop_assert!(sum.abs() <= 1e-12 * 16.0 * a.norm_inf().max(f64::MIN_POSITIVE));
            }
        }

        #[test]
        fn jacobian_matches_directional_derivative(vals in positive_vec(32), dir in positive_vec(32)) {
            for p in all_families(16) {
                let u = state_for(&p, &vals);
                let w = state_for(&p, &dir);
                let da = p.deriv_apply(&u, &w).unwrap();
                let jw = p.jacobian(&u).unwrap().matvec(w.values());
                let err = jw.iter().zip(da.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                prop_assert!(err <= 1e-13 * da.norm_inf(), "{}: {err}", p.family().name());
            }
        }

        #[test]
        fn translation_equivariance(vals in positive_vec(32), k in 0usize..16) {
            for p in all_families(16) {
                let u = state_for(&p, &vals);
                let shifted = p.apply(&u.shifted(k)).unwrap();
                prop_assert_eq!(shifted, p.apply(&u).unwrap().shifted(k));
            }
        }

        #[test]
        fn small_grids_keep_jacobian_exact(vals in positive_vec(8), dir in positive_vec(8)) {
            // n = 4 with the bandwidth-2 DLSS stencil wraps onto itself.
            let p = ProblemSpec::new(Family::Dlss, grid(4)).unwrap();
            let u = StateField::scalar(vals[..4].to_vec()).unwrap();
            let w = StateField::scalar(dir[..4].to_vec()).unwrap();
            let da = p.deriv_apply(&u, &w).unwrap();
            let jw = p.jacobian(&u).unwrap().matvec(w.values());
            for (a, b) in jw.iter().zip(da.values()) {
                prop_assert!((a - b).abs() <= 1e-12 * da.norm_inf().max(1.0));
            }
        }
    }
}
