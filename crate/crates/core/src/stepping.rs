//! Newton-based Runge-Kutta stepping and the backward solve.
//!
//! Residuals are measured in state units: the stage equations
//! `K_i + A[U_i] = 0` are scaled by `τ`, so a tolerance of `1e-15` means
//! the same thing for every step size and every operator stiffness.
//! Evaluating the residual carries rounding error of order `τ ε ‖J‖ ‖u‖`,
//! which exceeds tight tolerances for large `τ`; the tolerance is clamped
//! to that floor, and Newton also stops once an update moves the state by
//! at most the tolerance.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::operators::{ProblemSpec, StateField};
use crate::tableau::{ButcherTableau, Scheme, SchemeKind};

/// Newton stopping rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    /// Sup-norm tolerance on the residual or the Newton update, in state units.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 50,
        }
    }
}

impl NewtonConfig {
    pub fn new(tol: f64, max_iter: usize) -> Result<Self> {
        let cfg = Self { tol, max_iter };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("Newton tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("Newton max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Uniform-step solution history.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateField>,
    /// Newton iterations used by each step; `iterations[k]` belongs to the
    /// step producing `states[k + 1]`.
    pub iterations: Vec<usize>,
    pub scheme: Scheme,
    pub problem: ProblemSpec,
    pub tau: f64,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn last(&self) -> &StateField {
        self.states.last().expect("trajectory holds the initial state")
    }
}

fn check_tau(tau: f64, allow_zero: bool) -> Result<()> {
    let ok = tau.is_finite() && (tau > 0.0 || (allow_zero && tau == 0.0));
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("invalid step size {tau}")))
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// `base + τ Σ_j w_j K_j`.
fn combine(base: &[f64], tau: f64, weights: impl Iterator<Item = f64>, stages: &[Vec<f64>]) -> Vec<f64> {
    let mut acc = vec![0.0; base.len()];
    for (w, k) in weights.zip(stages) {
        if w != 0.0 {
            for (a, x) in acc.iter_mut().zip(k) {
                *a += w * x;
            }
        }
    }
    base.iter().zip(&acc).map(|(b, a)| b + tau * a).collect()
}

fn field(p: &ProblemSpec, values: Vec<f64>) -> Result<StateField> {
    StateField::new(p.species(), p.grid().n(), values)
}

fn dense_jacobian(p: &ProblemSpec, u: &StateField) -> Result<DMatrix<f64>> {
    Ok(p.jacobian(u)?.to_dense())
}

/// Relative size of the rounding floor under a residual.
const FLOOR_ULPS: f64 = 16.0 * f64::EPSILON;

/// Magnitude of the terms summed in `A[u]`, estimated as `‖J‖∞ ‖u‖∞`.
fn term_scale(jac: &DMatrix<f64>, u: &StateField) -> f64 {
    let row_max = jac
        .row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    row_max * u.norm_inf()
}

fn solve(mat: DMatrix<f64>, rhs: Vec<f64>, iteration: usize) -> Result<Vec<f64>> {
    mat.lu()
        .solve(&DVector::from_vec(rhs))
        .map(|x| x.data.into())
        .ok_or(Error::SingularJacobian { iteration })
}

/// One step `u^{k-1} -> u^k`.
pub fn forward_step(p: &ProblemSpec, s: &Scheme, u_prev: &StateField, tau: f64, cfg: &NewtonConfig) -> Result<StateField> {
    forward_step_counted(p, s, u_prev, tau, cfg).map(|(u, _)| u)
}

/// [`forward_step`] that also reports the number of Newton updates.
pub fn forward_step_counted(
    p: &ProblemSpec,
    s: &Scheme,
    u_prev: &StateField,
    tau: f64,
    cfg: &NewtonConfig,
) -> Result<(StateField, usize)> {
    check_tau(tau, false)?;
    cfg.validate()?;
    p.check_state(u_prev)?;
    match s.kind() {
        SchemeKind::Tableau(t) if t.is_explicit() => Ok((explicit_step(p, t, u_prev, tau)?, 0)),
        SchemeKind::Tableau(t) => implicit_step(p, t, u_prev, tau, cfg),
        SchemeKind::CompositeSimpson => simpson_step(p, u_prev, tau, cfg),
    }
}

fn explicit_step(p: &ProblemSpec, t: &ButcherTableau, u: &StateField, tau: f64) -> Result<StateField> {
    let mut stages: Vec<Vec<f64>> = Vec::with_capacity(t.stages());
    for i in 0..t.stages() {
        let ui = combine(u.values(), tau, (0..i).map(|j| t.a(i, j)), &stages);
        let ai = p.apply(&field(p, ui)?)?;
        stages.push(ai.into_values().into_iter().map(|x| -x).collect());
    }
    field(p, combine(u.values(), tau, t.b().iter().copied(), &stages))
}

fn implicit_step(
    p: &ProblemSpec,
    t: &ButcherTableau,
    u: &StateField,
    tau: f64,
    cfg: &NewtonConfig,
) -> Result<(StateField, usize)> {
    let s = t.stages();
    let m = p.dim();
    let minus_a: Vec<f64> = p.apply(u)?.into_values().into_iter().map(|x| -x).collect();
    let mut k = vec![minus_a; s];
    let mut residual = f64::INFINITY;
    let mut settled = false;
    for it in 0..=cfg.max_iter {
        let mut r = Vec::with_capacity(s * m);
        let mut stage_states = Vec::with_capacity(s);
        for i in 0..s {
            let ui = field(p, combine(u.values(), tau, (0..s).map(|j| t.a(i, j)), &k))?;
            let ai = p.apply(&ui)?;
            r.extend(k[i].iter().zip(ai.values()).map(|(kk, aa)| tau * (kk + aa)));
            stage_states.push(ui);
        }
        let jacs = stage_states
            .iter()
            .map(|ui| dense_jacobian(p, ui))
            .collect::<Result<Vec<_>>>()?;
        let floor = FLOOR_ULPS
            * tau
            * (0..s)
                .map(|i| term_scale(&jacs[i], &stage_states[i]) + sup(&k[i]))
                .fold(0.0, f64::max);
        residual = sup(&r);
        if residual <= cfg.tol.max(floor) || settled {
            return Ok((field(p, combine(u.values(), tau, t.b().iter().copied(), &k))?, it));
        }
        if it == cfg.max_iter {
            break;
        }
        let mut mat = DMatrix::zeros(s * m, s * m);
        for (i, ji) in jacs.iter().enumerate() {
            for j in 0..s {
                let mut block = mat.view_mut((i * m, j * m), (m, m));
                let aij = t.a(i, j);
                if aij != 0.0 {
                    block.copy_from(&(ji * (tau * tau * aij)));
                }
                if i == j {
                    for d in 0..m {
                        block[(d, d)] += tau;
                    }
                }
            }
        }
        let delta = solve(mat, r, it)?;
        settled = tau * sup(&delta) <= cfg.tol;
        for i in 0..s {
            for (kk, d) in k[i].iter_mut().zip(&delta[i * m..(i + 1) * m]) {
                *kk -= d;
            }
        }
    }
    Err(Error::NewtonNotConverged {
        iterations: cfg.max_iter,
        residual,
    })
}

fn midpoint(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect()
}

/// `u - u_prev + τ/6 (A[u] + 4 A[(u + u_prev)/2] + A[u_prev])`.
fn simpson_residual(p: &ProblemSpec, u: &StateField, mid: &StateField, a_prev: &StateField, u_prev: &StateField, tau: f64) -> Result<Vec<f64>> {
    let au = p.apply(u)?;
    let am = p.apply(mid)?;
    Ok((0..u.len())
        .map(|i| {
            u.values()[i] - u_prev.values()[i]
                + tau / 6.0 * (au.values()[i] + 4.0 * am.values()[i] + a_prev.values()[i])
        })
        .collect())
}

fn simpson_step(p: &ProblemSpec, u_prev: &StateField, tau: f64, cfg: &NewtonConfig) -> Result<(StateField, usize)> {
    let m = p.dim();
    let a_prev = p.apply(u_prev)?;
    // Start from the explicit Euler predictor, matching the stage guess K = -A[u_prev].
    let mut u = field(
        p,
        u_prev.values().iter().zip(a_prev.values()).map(|(x, a)| x - tau * a).collect(),
    )?;
    let mut residual = f64::INFINITY;
    let mut settled = false;
    for it in 0..=cfg.max_iter {
        let mid = field(p, midpoint(u.values(), u_prev.values()))?;
        let r = simpson_residual(p, &u, &mid, &a_prev, u_prev, tau)?;
        let (ju, jm) = (dense_jacobian(p, &u)?, dense_jacobian(p, &mid)?);
        let floor = FLOOR_ULPS
            * (u.norm_inf()
                + u_prev.norm_inf()
                + tau / 6.0 * (term_scale(&ju, &u) + 4.0 * term_scale(&jm, &mid) + a_prev.norm_inf()));
        residual = sup(&r);
        if residual <= cfg.tol.max(floor) || settled {
            return Ok((u, it));
        }
        if it == cfg.max_iter {
            break;
        }
        let mut mat = ju + jm * 2.0;
        mat *= tau / 6.0;
        for d in 0..m {
            mat[(d, d)] += 1.0;
        }
        let delta = solve(mat, r, it)?;
        settled = sup(&delta) <= cfg.tol;
        let next: Vec<f64> = u.values().iter().zip(&delta).map(|(x, d)| x - d).collect();
        u = field(p, next)?;
    }
    Err(Error::NewtonNotConverged {
        iterations: cfg.max_iter,
        residual,
    })
}

/// Unknowns of the backward problem: stage slopes and the earlier state.
#[derive(Debug, Clone)]
pub(crate) struct BackwardState {
    pub stages: Vec<Vec<f64>>,
    pub v: StateField,
}

/// Finds `v = u^{k-1}` with `forward_step(v, τ) = u`.
///
/// Solves the joint system for `(K_1, ..., K_s, v)` by Newton, starting at
/// `K_i = -A[u]`, `v = u`. If that start does not converge, the solution
/// branch is followed from `τ = 0` by continuation. At `τ = 0` returns `u`.
pub fn backward_solve(p: &ProblemSpec, s: &Scheme, u: &StateField, tau: f64, cfg: &NewtonConfig) -> Result<StateField> {
    backward_solve_from(p, s, u, tau, cfg, None).map(|b| b.v)
}

pub(crate) fn backward_solve_from(
    p: &ProblemSpec,
    s: &Scheme,
    u: &StateField,
    tau: f64,
    cfg: &NewtonConfig,
    guess: Option<&BackwardState>,
) -> Result<BackwardState> {
    check_tau(tau, true)?;
    cfg.validate()?;
    p.check_state(u)?;
    let stages_len = s.tableau().map_or(0, |t| t.stages());
    if tau == 0.0 {
        let minus_a: Vec<f64> = p.apply(u)?.into_values().into_iter().map(|x| -x).collect();
        return Ok(BackwardState {
            stages: vec![minus_a; stages_len],
            v: u.clone(),
        });
    }
    if let Some(g) = guess {
        return backward_newton(p, s, u, tau, cfg, g.clone());
    }
    let minus_a: Vec<f64> = p.apply(u)?.into_values().into_iter().map(|x| -x).collect();
    let y0 = BackwardState {
        stages: vec![minus_a; stages_len],
        v: u.clone(),
    };
    let first = match backward_newton(p, s, u, tau, cfg, y0.clone()) {
        Err(e @ (Error::NewtonNotConverged { .. } | Error::SingularJacobian { .. })) => e,
        other => return other,
    };
    // Far from τ = 0 the plain start can miss the solution branch through
    // (τ, v) = (0, u). Follow that branch in τ with successively finer
    // continuation steps.
    for pieces in [4usize, 16, 64] {
        let mut state = y0.clone();
        let mut ok = true;
        for j in 1..=pieces {
            match backward_newton(p, s, u, tau * j as f64 / pieces as f64, cfg, state.clone()) {
                Ok(next) => state = next,
                Err(Error::NewtonNotConverged { .. } | Error::SingularJacobian { .. }) => {
                    ok = false;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if ok {
            return Ok(state);
        }
    }
    Err(first)
}

fn backward_newton(
    p: &ProblemSpec,
    s: &Scheme,
    u: &StateField,
    tau: f64,
    cfg: &NewtonConfig,
    start: BackwardState,
) -> Result<BackwardState> {
    match s.kind() {
        SchemeKind::Tableau(t) => backward_tableau(p, t, u, tau, cfg, start),
        SchemeKind::CompositeSimpson => backward_simpson(p, u, tau, cfg, start.v),
    }
}

fn backward_tableau(
    p: &ProblemSpec,
    t: &ButcherTableau,
    u: &StateField,
    tau: f64,
    cfg: &NewtonConfig,
    start: BackwardState,
) -> Result<BackwardState> {
    let s = t.stages();
    let m = p.dim();
    let BackwardState { stages: mut k, mut v } = start;
    let mut residual = f64::INFINITY;
    let mut settled = false;
    for it in 0..=cfg.max_iter {
        let mut r = Vec::with_capacity((s + 1) * m);
        let mut stage_states = Vec::with_capacity(s);
        for i in 0..s {
            let ui = field(p, combine(v.values(), tau, (0..s).map(|j| t.a(i, j)), &k))?;
            let ai = p.apply(&ui)?;
            r.extend(k[i].iter().zip(ai.values()).map(|(kk, aa)| tau * (kk + aa)));
            stage_states.push(ui);
        }
        let back = combine(v.values(), tau, t.b().iter().copied(), &k);
        r.extend(back.iter().zip(u.values()).map(|(b, x)| b - x));
        let jacs = stage_states
            .iter()
            .map(|ui| dense_jacobian(p, ui))
            .collect::<Result<Vec<_>>>()?;
        let k_max = k.iter().map(|ki| sup(ki)).fold(0.0, f64::max);
        let stage_floor = (0..s)
            .map(|i| term_scale(&jacs[i], &stage_states[i]))
            .fold(0.0, f64::max);
        let floor = FLOOR_ULPS * (tau * (stage_floor + k_max)).max(v.norm_inf() + u.norm_inf() + tau * k_max);
        residual = sup(&r);
        if residual <= cfg.tol.max(floor) || settled {
            return Ok(BackwardState { stages: k, v });
        }
        if it == cfg.max_iter {
            break;
        }
        let dim = (s + 1) * m;
        let mut mat = DMatrix::zeros(dim, dim);
        for (i, ji) in jacs.into_iter().enumerate() {
            for j in 0..s {
                let mut block = mat.view_mut((i * m, j * m), (m, m));
                let aij = t.a(i, j);
                if aij != 0.0 {
                    block.copy_from(&(&ji * (tau * tau * aij)));
                }
                if i == j {
                    for d in 0..m {
                        block[(d, d)] += tau;
                    }
                }
            }
            mat.view_mut((i * m, s * m), (m, m)).copy_from(&(ji * tau));
        }
        for j in 0..s {
            for d in 0..m {
                mat[(s * m + d, j * m + d)] = tau * t.b()[j];
            }
        }
        for d in 0..m {
            mat[(s * m + d, s * m + d)] = 1.0;
        }
        let delta = solve(mat, r, it)?;
        settled = (tau * sup(&delta[..s * m])).max(sup(&delta[s * m..])) <= cfg.tol;
        for i in 0..s {
            for (kk, d) in k[i].iter_mut().zip(&delta[i * m..(i + 1) * m]) {
                *kk -= d;
            }
        }
        let next: Vec<f64> = v.values().iter().zip(&delta[s * m..]).map(|(x, d)| x - d).collect();
        v = field(p, next)?;
    }
    Err(Error::NewtonNotConverged {
        iterations: cfg.max_iter,
        residual,
    })
}

fn backward_simpson(p: &ProblemSpec, u: &StateField, tau: f64, cfg: &NewtonConfig, mut v: StateField) -> Result<BackwardState> {
    let m = p.dim();
    let mut residual = f64::INFINITY;
    let mut settled = false;
    for it in 0..=cfg.max_iter {
        let mid = field(p, midpoint(u.values(), v.values()))?;
        // Same residual as the forward step with the roles of u and v fixed.
        let r = simpson_residual(p, u, &mid, &p.apply(&v)?, &v, tau)?;
        let (jv, jm) = (dense_jacobian(p, &v)?, dense_jacobian(p, &mid)?);
        let floor = FLOOR_ULPS
            * (u.norm_inf()
                + v.norm_inf()
                + tau / 6.0 * (term_scale(&jv, &v) + 4.0 * term_scale(&jm, &mid) + p.apply(u)?.norm_inf()));
        residual = sup(&r);
        if residual <= cfg.tol.max(floor) || settled {
            return Ok(BackwardState { stages: Vec::new(), v });
        }
        if it == cfg.max_iter {
            break;
        }
        let mut mat = jv + jm * 2.0;
        mat *= tau / 6.0;
        for d in 0..m {
            mat[(d, d)] -= 1.0;
        }
        let delta = solve(mat, r, it)?;
        settled = sup(&delta) <= cfg.tol;
        let next: Vec<f64> = v.values().iter().zip(&delta).map(|(x, d)| x - d).collect();
        v = field(p, next)?;
    }
    Err(Error::NewtonNotConverged {
        iterations: cfg.max_iter,
        residual,
    })
}

/// Number of steps of size `tau` needed to reach `t_end`, tolerant of the
/// rounding in `t_end / tau` (0.01 / 1e-4 is 100, not 101).
pub fn step_count(tau: f64, t_end: f64) -> usize {
    let ratio = t_end / tau;
    let nearest = ratio.round();
    if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as usize
    } else {
        ratio.ceil() as usize
    }
}

/// Integrates from `u0` with `⌈t_end / τ⌉` steps.
pub fn run(
    p: &ProblemSpec,
    s: &Scheme,
    u0: &StateField,
    tau: f64,
    t_end: f64,
    cfg: &NewtonConfig,
) -> Result<Trajectory> {
    run_with(p, s, u0, tau, t_end, cfg, |_, _| {})
}

/// [`run`] with a callback invoked after every accepted step with the step
/// index (1-based) and the new state.
pub fn run_with(
    p: &ProblemSpec,
    s: &Scheme,
    u0: &StateField,
    tau: f64,
    t_end: f64,
    cfg: &NewtonConfig,
    mut on_step: impl FnMut(usize, &StateField),
) -> Result<Trajectory> {
    check_tau(tau, false)?;
    cfg.validate()?;
    if !(t_end.is_finite() && t_end >= tau) {
        return Err(Error::InvalidArgument(format!("t_end = {t_end} must be at least tau = {tau}")));
    }
    p.check_state(u0)?;
    let steps = step_count(tau, t_end);
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut iterations = Vec::with_capacity(steps);
    times.push(0.0);
    states.push(u0.clone());
    for k in 1..=steps {
        let prev = states.last().expect("nonempty");
        let (next, its) = forward_step_counted(p, s, prev, tau, cfg).map_err(|e| Error::StepFailed {
            step: k,
            source: Box::new(e),
        })?;
        on_step(k, &next);
        times.push(k as f64 * tau);
        states.push(next);
        iterations.push(its);
    }
    Ok(Trajectory {
        times,
        states,
        iterations,
        scheme: s.clone(),
        problem: p.clone(),
        tau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::Grid1D;
    use crate::tableau::registry;
    use proptest::prelude::*;

    fn pme(n: usize) -> ProblemSpec {
        ProblemSpec::porous_medium(2.0, Grid1D::unit(n).unwrap()).unwrap()
    }

    fn smooth(n: usize) -> StateField {
        StateField::scalar(
            (0..n)
                .map(|i| {
                    let x = i as f64 / n as f64;
                    1.0 + 0.3 * (std::f64::consts::TAU * x).cos() + 0.1 * (2.0 * std::f64::consts::TAU * x).sin()
                })
                .collect(),
        )
        .unwrap()
    }

    fn tight() -> NewtonConfig {
        NewtonConfig::new(1e-14, 50).unwrap()
    }

    #[test]
    fn explicit_euler_is_plain_update() {
        let p = pme(16);
        let u = smooth(16);
        let tau = 1e-5;
        let s = registry().get("explicit_euler").unwrap().clone();
        let got = forward_step(&p, &s, &u, tau, &NewtonConfig::default()).unwrap();
        let a = p.apply(&u).unwrap();
        let want: Vec<f64> = u.values().iter().zip(a.values()).map(|(x, y)| x - tau * y).collect();
        assert_eq!(got.values(), want.as_slice());
        let again = forward_step(&p, &s, &u, tau, &NewtonConfig::default()).unwrap();
        assert_eq!(got, again);
    }

    #[test]
    fn constants_are_fixed_points() {
        let p = pme(8);
        let u = StateField::constant(1, 8, 0.7).unwrap();
        for s in registry().iter() {
            let v = forward_step(&p, s, &u, 1e-3, &NewtonConfig::default()).unwrap();
            assert_eq!(v, u, "{}", s.name());
        }
    }

    #[test]
    fn mass_is_conserved_per_step() {
        let p = pme(32);
        let u = smooth(32);
        let cfg = NewtonConfig::default();
        let tau = 1e-4;
        for s in registry().iter() {
            let v = forward_step(&p, s, &u, tau, &cfg).unwrap();
            let drift: f64 = v.values().iter().zip(u.values()).map(|(a, b)| a - b).sum::<f64>() * p.grid().dx();
            assert!(drift.abs() <= 10.0 * cfg.tol * tau, "{}: {drift}", s.name());
        }
    }

    #[test]
    fn backward_at_zero_returns_input() {
        let p = pme(16);
        let u = smooth(16);
        for s in registry().iter() {
            assert_eq!(backward_solve(&p, s, &u, 0.0, &tight()).unwrap(), u);
        }
    }

    #[test]
    fn implicit_euler_backward_closed_form() {
        let p = pme(16);
        let u = smooth(16);
        let tau = 1e-4;
        let s = registry().get("implicit_euler").unwrap().clone();
        let v = backward_solve(&p, &s, &u, tau, &tight()).unwrap();
        let a = p.apply(&u).unwrap();
        for i in 0..16 {
            assert!((v.values()[i] - (u.values()[i] + tau * a.values()[i])).abs() <= 1e-13);
        }
    }

    #[test]
    fn backward_slope_is_a_of_u() {
        let p = pme(16);
        let u = smooth(16);
        let a = p.apply(&u).unwrap();
        for s in registry().iter() {
            let err = |tau: f64| {
                let v = backward_solve(&p, s, &u, tau, &tight()).unwrap();
                (0..16)
                    .map(|i| ((v.values()[i] - u.values()[i]) / tau - a.values()[i]).abs())
                    .fold(0.0, f64::max)
            };
            let (e1, e2) = (err(2e-5), err(1e-5));
            if s.c_rk_effective() == 0.0 {
                assert!(e1 <= 1e-6 * a.norm_inf() && e2 <= 1e-6 * a.norm_inf());
            } else {
                assert!((e1 / e2 - 2.0).abs() < 0.2, "{}: {e1} {e2}", s.name());
            }
        }
    }

    #[test]
    fn run_counts_steps() {
        let p = pme(8);
        let u = smooth(8);
        let s = registry().get("trapezoidal").unwrap().clone();
        let traj = run(&p, &s, &u, 1e-4, 1e-4, &NewtonConfig::default()).unwrap();
        assert_eq!(traj.states.len(), 2);
        assert_eq!(traj.states[1], forward_step(&p, &s, &u, 1e-4, &NewtonConfig::default()).unwrap());
        assert_eq!(step_count(1e-4, 0.01), 100);
        assert_eq!(step_count(0.3, 1.0), 4);
        assert!(run(&p, &s, &u, 1e-3, 1e-4, &NewtonConfig::default()).is_err());
    }

    #[test]
    fn newton_failure_is_reported_with_step() {
        let p = pme(8);
        let u = smooth(8);
        let s = registry().get("implicit_euler").unwrap().clone();
        let cfg = NewtonConfig::new(1e-300, 2).unwrap();
        match run(&p, &s, &u, 1e-3, 2e-3, &cfg) {
            Err(Error::StepFailed { step: 1, source }) => {
                assert!(matches!(*source, Error::NewtonNotConverged { iterations: 2, .. }))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    /// Positive field built from a few random Fourier modes. Grid-scale
    /// noise is avoided: backward diffusion of such data is ill-posed once
    /// `τ λ_max` exceeds one.
    fn band_limited(n: usize, coef: &[(f64, f64)]) -> StateField {
        StateField::scalar(
            (0..n)
                .map(|i| {
                    let x = std::f64::consts::TAU * i as f64 / n as f64;
                    1.0 + coef
                        .iter()
                        .enumerate()
                        .map(|(k, (a, b))| {
                            let kx = (k + 1) as f64 * x;
                            a * kx.cos() + b * kx.sin()
                        })
                        .sum::<f64>()
                })
                .collect(),
        )
        .unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn round_trip(coef in prop::collection::vec((-0.15f64..0.15, -0.15f64..0.15), 3), tau in 1e-6f64..=1e-3) {
            let p = pme(32);
            let u = band_limited(32, &coef);
            let cfg = NewtonConfig::default();
            for s in registry().iter() {
                // The backward map contains I - (C_RK/2) τ J, which must stay
                // nonsingular along the branch: (C_RK/2) τ λ_max < 1, with
                // λ_max = 4 β max(u)^(β-1) / dx² for the porous-medium stencil.
                let lambda_max = 4.0 * 2.0 * u.max() * 32.0 * 32.0;
                let tau = tau.min(0.9 / (0.5 * s.c_rk_effective() * lambda_max));
                let v = backward_solve(&p, s, &u, tau, &cfg);
                prop_assert!(v.is_ok(), "{} at tau {tau}: {v:?}", s.name());
                let w = forward_step(&p, s, &v.unwrap(), tau, &cfg).unwrap();
                prop_assert!(w.max_abs_diff(&u) <= 100.0 * cfg.tol, "{}: {}", s.name(), w.max_abs_diff(&u));
            }
        }

        #[test]
        fn trajectory_mass(coef in prop::collection::vec((-0.15f64..0.15, -0.15f64..0.15), 3)) {
            let p = pme(32);
            let u0 = band_limited(32, &coef);
            let cfg = NewtonConfig::default();
            let tau = 1e-4;
            for s in registry().iter() {
                let traj = run(&p, s, &u0, tau, 2e-3, &cfg).unwrap();
                let m0 = u0.mass(p.grid());
                for (k, u) in traj.states.iter().enumerate() {
                    prop_assert!((u.mass(p.grid()) - m0).abs() <= 10.0 * k.max(1) as f64 * cfg.tol * tau);
                }
            }
        }
    }
}
