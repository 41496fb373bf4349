//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use entropy_rk::entropy::{fit_decay_rate_series, i0, i1, production};
use entropy_rk::initial::{barenblatt, cosine};
use entropy_rk::regions::{
    c8_star, dlss_chain, parse_rational, r0_1d, r0_membership, r0_polynomial, r1_membership, r1_polynomial,
    b12_polynomial, RegionQuery,
};
use entropy_rk::stepping::step_count;
use entropy_rk::*;
use num::{BigInt, BigRational, Zero};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn c_rk_table() -> Outcome {
    let reg = registry();
    for (name, want) in [("explicit_euler", 2.0), ("implicit_euler", 0.0), ("trapezoidal", 1.0)] {
        let got = reg.get(name).map_err(err)?.c_rk_effective();
        ensure(got == want, || format!("{name}: C_RK = {got}, want {want}"))?;
    }
    Ok("explicit 2, implicit 0, trapezoidal 1".into())
}

fn r0_one_dimensional() -> Outcome {
    let mut checked = 0;
    for c in [0.0, 1.0, 2.0] {
        for i in 1..=100i64 {
            for j in 1..=100i64 {
                let (a, b) = (i as f64 / 20.0, j as f64 / 20.0);
                let q = RegionQuery::new(a, b, 1, c).map_err(err)?;
                let got = r0_1d(&q);
                // α - β = (i - j)/20 exactly in integers.
                let k = i - j;
                let want = match c as i64 {
                    0 => true,
                    1 => -40 < k && k < 20,
                    _ => -20 < k && k < 20,
                };
                ensure(got == want, || format!("strip mismatch at ({a}, {b}), C = {c}"))?;
                // Discriminant of the auxiliary quadratic in c₂.
                let z = a - b;
                let lin = (c - 2.0) * z + 2.0 * (c + 1.0);
                let disc = lin * lin - 9.0 * c * c * z * z;
                if disc.abs() > 1e-12 {
                    ensure(got == (disc > 0.0), || format!("discriminant disagrees at ({a}, {b}), C = {c}"))?;
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("3 strips exact on 100x100; {checked} off-boundary discriminant checks agree"))
}

fn sample_eta(rng: &mut StdRng) -> f64 {
    let mag = 10f64.powf(rng.random_range(-2.0..2.0));
    mag * rng.random_range(-1.0..1.0)
}

fn r0_certification() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed_0001);
    let axis: Vec<f64> = (0..21).map(|k| 0.2 + 0.24 * k as f64).collect();
    let mut accepted = 0;
    let mut worst = f64::INFINITY;
    for d in [2usize, 10] {
        for c in [0.0, 1.0, 2.0] {
            let one = RegionQuery::new(1.0, 1.0, d, c).map_err(err)?;
            ensure(r0_membership(&one).map_err(err)?.0, || format!("(1,1) rejected for d = {d}, C = {c}"))?;
            for &a in &axis {
                for &b in &axis {
                    let q = RegionQuery::new(a, b, d, c).map_err(err)?;
                    let (member, witness) = r0_membership(&q).map_err(err)?;
                    if !member {
                        continue;
                    }
                    let w = witness.ok_or("member without witness")?;
                    accepted += 1;
                    for _ in 0..10_000 {
                        let eta = [0; 4].map(|_| sample_eta(&mut rng));
                        let (v, scale) = r0_polynomial(&q, &w, eta);
                        let rel = v / scale;
                        worst = worst.min(rel);
                        ensure(v >= -1e-9 * scale, || format!("Q < 0 at ({a}, {b}), d = {d}, C = {c}: {v:e}"))?;
                    }
                }
            }
        }
    }
    Ok(format!("{accepted} accepted cells certified, min Q/scale = {worst:.2e}"))
}

fn r1_region() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed_0002);
    let axis: Vec<f64> = (0..=28).map(|k| 0.5 + 0.125 * k as f64).collect();
    let mut members = 0;
    for &a in &axis {
        for &b in &axis {
            let (member, witness) = r1_membership(a, b).map_err(err)?;
            let gate = a - 2.0 * b;
            if !(-2.0..=1.0).contains(&gate) {
                ensure(!member, || format!("({a}, {b}) accepted outside the gate"))?;
            }
            if !member {
                continue;
            }
            members += 1;
            let w = witness.ok_or("member without witness")?;
            for _ in 0..10_000 {
                let xi = [0; 3].map(|_| sample_eta(&mut rng));
                let (v, scale) = r1_polynomial(a, b, &w, xi);
                ensure(v >= -1e-9 * scale, || format!("P < 0 at ({a}, {b}): {v:e}"))?;
            }
        }
    }
    ensure(members > 0, || "R1 empty on [0.5,4]^2".into())?;
    Ok(format!("{members} of {} cells accepted and certified", axis.len() * axis.len()))
}

fn dlss_constants() -> Outcome {
    let poly = b12_polynomial();
    let c8 = c8_star();
    let b12 = poly.eval(&c8);
    let want = BigRational::new(BigInt::from(20), BigInt::from(129));
    ensure(b12 == want, || format!("b12(17/172) = {b12}"))?;
    ensure(poly.derivative().eval(&c8).is_zero(), || "b12' does not vanish".into())?;
    let rep = dlss_chain(&parse_rational("-0.029").map_err(err)?, &c8).map_err(err)?;
    let p = rep.p_f64();
    ensure(0.004 < p && p < 0.005, || format!("p(-0.029) = {p}"))?;
    Ok(format!("b12 = 20/129, b12' = 0, p(-0.029) = {p:.10}"))
}

fn newton_tight() -> NewtonConfig {
    NewtonConfig::new(1e-15, 50).expect("valid config")
}

fn barenblatt_problem() -> (ProblemSpec, StateField) {
    let grid = Grid1D::unit(64).expect("grid");
    let u0 = barenblatt(&grid, 2.0, 0.01, 0.25).expect("profile");
    (ProblemSpec::porous_medium(2.0, grid).expect("problem"), u0)
}

fn dissipation() -> Outcome {
    let (p, u0) = barenblatt_problem();
    let e = EntropyFunctional::ExperimentPower { alpha: 5.0 };
    let mass0 = u0.mass(p.grid());
    let mut report = Vec::new();
    for s in registry().iter() {
        let traj = run(&p, s, &u0, 1e-4, 0.01, &newton_tight()).map_err(err)?;
        ensure(traj.steps() == 100, || format!("{}: {} steps", s.name(), traj.steps()))?;
        let hs = traj
            .states
            .iter()
            .map(|u| evaluate(&e, u, p.grid()))
            .collect::<Result<Vec<_>>>()
            .map_err(err)?;
        if let Some(k) = hs.windows(2).position(|w| w[1] > w[0]) {
            return Err(format!("{}: H increases at step {}", s.name(), k + 1));
        }
        let drift = traj
            .states
            .iter()
            .map(|u| (u.mass(p.grid()) - mass0).abs())
            .fold(0.0, f64::max);
        ensure(drift <= 1e-10, || format!("{}: mass drift {drift:e}", s.name()))?;
        report.push(format!("{} drift {drift:.1e}", s.name()));
    }
    Ok(report.join(", "))
}

const BASE_TIMES: [f64; 3] = [0.001, 0.003, 0.006];

fn g_profile() -> Outcome {
    let (p, u0) = barenblatt_problem();
    let e = EntropyFunctional::ExperimentPower { alpha: 5.0 };
    let cfg = newton_tight();
    let mut worst_q = f64::NEG_INFINITY;
    for s in registry().iter() {
        let traj = run(&p, s, &u0, 1e-4, BASE_TIMES[2], &cfg).map_err(err)?;
        for &t in &BASE_TIMES {
            let u = &traj.states[step_count(1e-4, t)];
            let prof = profile_g(&e, &p, s, u, 1e-3, 100, &cfg).map_err(err)?;
            for j in 1..=30 {
                let tag = || format!("{} t = {t} tau = {:e}", s.name(), j as f64 * 1e-5);
                let d2g = prof.d2g.get(j).copied().flatten().ok_or_else(|| format!("{}: d2g missing", tag()))?;
                let q = prof.q.get(j).copied().flatten().ok_or_else(|| format!("{}: Q missing", tag()))?;
                ensure(d2g < 0.0, || format!("{}: d2g = {d2g:e}", tag()))?;
                ensure(q < 0.0, || format!("{}: Q = {q:e}", tag()))?;
                worst_q = worst_q.max(q);
            }
        }
    }
    Ok(format!("12 profiles, d2g < 0 and Q < 0 up to tau = 3e-4 (max Q = {worst_q:.3e})"))
}

fn smooth_pme() -> (ProblemSpec, StateField) {
    let n = 32;
    let grid = Grid1D::unit(n).expect("grid");
    let u = StateField::scalar(
        (0..n)
            .map(|i| {
                let x = grid.x(i);
                1.0 + 0.3 * (std::f64::consts::TAU * x).cos() + 0.1 * (2.0 * std::f64::consts::TAU * x).sin()
            })
            .collect(),
    )
    .expect("field");
    (ProblemSpec::porous_medium(2.0, grid).expect("problem"), u)
}

const TABLEAU_SCHEMES: [&str; 3] = ["explicit_euler", "implicit_euler", "trapezoidal"];
const SPACINGS: [f64; 5] = [4e-5, 2e-5, 1e-5, 5e-6, 2.5e-6];

/// Errors of the extrapolated `G''(0)` against `-target` and their rounding
/// floors, one per grid spacing.
fn extrapolation_errors(e: &EntropyFunctional, s: &Scheme, target: f64) -> Result<(Vec<f64>, Vec<f64>), String> {
    let (p, u) = smooth_pme();
    let cfg = newton_tight();
    let h0 = evaluate(e, &u, p.grid()).map_err(err)?;
    let mut errs = Vec::new();
    let mut noise = Vec::new();
    for h in SPACINGS {
        let prof = profile_g(e, &p, s, &u, 3.0 * h, 3, &cfg).map_err(err)?;
        let ext = prof.extrapolated_d2g().ok_or("profile too short")?;
        errs.push((ext + target).abs());
        // Each G carries ~ε|H| rounding; the extrapolation weighs them by 12/h².
        noise.push(64.0 * f64::EPSILON * h0.abs() / (h * h));
    }
    Ok((errs, noise))
}

/// Ratios of successive errors over the levels that stay well above the
/// rounding floor; the last two must lie within `want ± tol`.
fn asymptotic_ratios(label: &str, errs: &[f64], noise: &[f64], want: f64, tol: f64) -> Result<String, String> {
    let usable: Vec<f64> = errs
        .iter()
        .zip(noise)
        .take_while(|(e, n)| **e > 10.0 * **n)
        .map(|(e, _)| *e)
        .collect();
    ensure(usable.len() >= 3, || format!("{label}: only {} levels above rounding (errors {errs:?})", usable.len()))?;
    let r: Vec<f64> = usable.windows(2).map(|w| w[0] / w[1]).collect();
    let tail = &r[r.len() - 2..];
    for x in tail {
        ensure((x - want).abs() <= tol, || format!("{label}: ratios {r:.3?} (errors {usable:?})"))?;
    }
    Ok(format!("{label} {:.2}/{:.2}", tail[0], tail[1]))
}

fn at_rounding(label: &str, errs: &[f64], noise: &[f64], why: &str) -> Result<String, String> {
    for (e, n) in errs.iter().zip(noise) {
        ensure(e <= &(100.0 * n), || format!("{label}: error {e:e} above rounding {n:e}"))?;
    }
    Ok(format!("{label} exact ({why})"))
}

fn cross_oracle() -> Outcome {
    let (p, u) = smooth_pme();
    let reg = registry();
    let mut parts = Vec::new();
    for name in TABLEAU_SCHEMES {
        let s = reg.get(name).map_err(err)?;
        let c = s.c_rk_effective();
        let e0 = EntropyFunctional::Power { alpha: 1.0 };
        let t0 = i0(&e0, &p, &u, c).map_err(err)?;
        let (errs, noise) = extrapolation_errors(&e0, s, t0)?;
        let label = format!("{name}/i0");
        parts.push(if name == "implicit_euler" {
            // v(τ) = u + τA[u] and h is quadratic, so G is a quadratic in τ.
            at_rounding(&label, &errs, &noise, "G quadratic in tau")?
        } else {
            asymptotic_ratios(&label, &errs, &noise, 4.0, 0.5)?
        });
        let e1 = EntropyFunctional::FirstOrder { alpha: 3.0 };
        let t1 = i1(&e1, &p, &u, c).map_err(err)?;
        let (errs, noise) = extrapolation_errors(&e1, s, t1)?;
        parts.push(asymptotic_ratios(&format!("{name}/i1"), &errs, &noise, 4.0, 0.5)?);
    }
    Ok(parts.join(", "))
}

fn backward_expansion() -> Outcome {
    let (p, u) = smooth_pme();
    let cfg = newton_tight();
    let reg = registry();
    let a = p.apply(&u).map_err(err)?;
    let daa = p.deriv_apply(&u, &a).map_err(err)?;
    let mut parts = Vec::new();
    for name in ["trapezoidal", "implicit_euler"] {
        let s = reg.get(name).map_err(err)?;
        let c = s.c_rk_effective();
        let mut rem = Vec::new();
        let mut noise = Vec::new();
        for tau in [4e-5, 2e-5, 1e-5] {
            let v = backward_solve(&p, s, &u, tau, &cfg).map_err(err)?;
            rem.push(
                (0..u.len())
                    .map(|i| {
                        let taylor = u.values()[i] + tau * a.values()[i] + 0.5 * c * tau * tau * daa.values()[i];
                        (v.values()[i] - taylor).abs()
                    })
                    .fold(0.0, f64::max),
            );
            noise.push(16.0 * f64::EPSILON * u.norm_inf() + cfg.tol);
        }
        parts.push(if name == "implicit_euler" {
            // The backward step is v = u + τA[u] exactly.
            at_rounding(name, &rem, &noise, "v linear in tau")?
        } else {
            asymptotic_ratios(name, &rem, &noise, 8.0, 1.0)?
        });
    }
    Ok(parts.join(", "))
}

fn linear_system() -> Outcome {
    let n = 64;
    let grid = Grid1D::unit(n).map_err(err)?;
    let p = ProblemSpec::new(Family::LinearSystem { rho1: 1.0, rho2: 1.0, mu: 1.0 }, grid).map_err(err)?;
    let s = registry().get("trapezoidal").map_err(err)?.clone();
    let cfg = NewtonConfig::default();
    let e = EntropyFunctional::LogSum;
    let mut rng = StdRng::seed_from_u64(0x5eed_0003);
    let mut draw = || (0..n).map(|_| rng.random_range(0.5..1.5)).collect::<Vec<f64>>();
    let u0 = StateField::pair(draw(), draw()).map_err(err)?;
    let traj = run(&p, &s, &u0, 1e-4, 0.02, &cfg).map_err(err)?;
    ensure(traj.steps() == 200, || format!("{} steps", traj.steps()))?;
    let mut prev = f64::INFINITY;
    let mut min_i0 = f64::INFINITY;
    for (k, u) in traj.states.iter().enumerate() {
        let h = evaluate(&e, u, &grid).map_err(err)?;
        ensure(h <= prev, || format!("entropy increases at step {k}"))?;
        prev = h;
        let val = i0(&e, &p, u, 1.0).map_err(err)?;
        ensure(val > 0.0, || format!("i0 = {val:e} at step {k}"))?;
        min_i0 = min_i0.min(val);
    }
    let same = draw();
    let v0 = StateField::pair(same.clone(), same).map_err(err)?;
    let traj = run(&p, &s, &v0, 1e-4, 0.02, &cfg).map_err(err)?;
    let split = traj
        .states
        .iter()
        .map(|u| u.component(0).iter().zip(u.component(1)).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    ensure(split <= 1e-12, || format!("species separate by {split:e}"))?;
    Ok(format!("200 steps, min i0 = {min_i0:.3e}, species split {split:.1e}"))
}

fn implicit_euler_bound() -> Outcome {
    let grid = Grid1D::unit(64).map_err(err)?;
    let p = ProblemSpec::porous_medium(2.0, grid).map_err(err)?;
    let s = registry().get("implicit_euler").map_err(err)?.clone();
    let cfg = NewtonConfig::default();
    let u0 = cosine(&grid, 1, 1.0, 0.2).map_err(err)?;
    let traj = run(&p, &s, &u0, 1e-3, 0.05, &cfg).map_err(err)?;
    let (mut checked, mut skipped) = (0, 0);
    for alpha in [0.0, 1.0, 2.0] {
        let e = EntropyFunctional::Power { alpha };
        for (k, u) in traj.states.iter().enumerate().step_by(10) {
            let prod = production(&e, &p, u).map_err(err)?;
            let h = evaluate(&e, u, &grid).map_err(err)?;
            for tau in [1e-4, 1e-2, 1.0] {
                let v = backward_solve(&p, &s, u, tau, &cfg).map_err(err)?;
                let Ok(hv) = evaluate(&e, &v, &grid) else {
                    skipped += 1;
                    continue;
                };
                let g = h - hv;
                let slack = 1e-12 * h.abs().max(hv.abs());
                ensure(g <= -tau * prod + slack, || {
                    format!("alpha = {alpha}, step {k}, tau = {tau}: G = {g:e}, -tau*production = {:e}", -tau * prod)
                })?;
                ensure(g <= tau * prod + slack, || format!("G > tau*production at step {k}"))?;
                checked += 1;
            }
        }
    }
    ensure(checked >= 30, || format!("only {checked} admissible (state, tau) pairs"))?;
    Ok(format!(
        "{checked} (entropy, state, tau) triples satisfy G <= -tau*production, {skipped} skipped (v leaves the entropy domain)"
    ))
}

fn decay_fit() -> Outcome {
    let mut worst: f64 = 0.0;
    for (c, kappa, tau) in [(3.0, 2.5, 1e-2), (0.7, 40.0, 1e-4), (12.0, 0.3, 0.5)] {
        let times: Vec<f64> = (0..300).map(|k| k as f64 * tau).collect();
        let gaps: Vec<f64> = (0..300).map(|k| c * (1.0f64 + kappa * tau).powi(-k)).collect();
        let rate = fit_decay_rate_series(&times, &gaps, (0.0, times[299])).map_err(err)?;
        let want = (kappa * tau).ln_1p() / tau;
        let rel = ((rate - want) / want).abs();
        worst = worst.max(rel);
        ensure(rel <= 1e-10, || format!("kappa = {kappa}, tau = {tau}: {rate} vs {want}"))?;
    }
    Ok(format!("max relative error {worst:.1e}"))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "C_RK table", budget: Duration::from_secs(1), run: c_rk_table },
        Criterion { id: 2, name: "R0(1) strips", budget: Duration::from_secs(1), run: r0_one_dimensional },
        Criterion { id: 3, name: "R0(d) certification", budget: Duration::from_secs(120), run: r0_certification },
        Criterion { id: 4, name: "R1 region", budget: Duration::from_secs(120), run: r1_region },
        Criterion { id: 5, name: "DLSS constants", budget: Duration::from_secs(1), run: dlss_constants },
        Criterion { id: 6, name: "PME dissipation", budget: Duration::from_secs(30), run: dissipation },
        Criterion { id: 7, name: "G'' profile", budget: Duration::from_secs(300), run: g_profile },
        Criterion { id: 8, name: "cross-oracle i0/i1", budget: Duration::from_secs(60), run: cross_oracle },
        Criterion { id: 9, name: "backward expansion", budget: Duration::from_secs(10), run: backward_expansion },
        Criterion { id: 10, name: "linear system", budget: Duration::from_secs(30), run: linear_system },
        Criterion { id: 11, name: "implicit Euler bound", budget: Duration::from_secs(10), run: implicit_euler_bound },
        Criterion { id: 12, name: "decay-rate fit", budget: Duration::from_secs(1), run: decay_fit },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|msg| {
            if elapsed <= c.budget {
                Ok(msg)
            } else {
                Err(format!("{msg}; over budget ({:.1?} > {:?})", elapsed, c.budget))
            }
        });
        let (tag, msg) = match outcome {
            Ok(m) => ("PASS", m),
            Err(m) => {
                failed += 1;
                ("FAIL", m)
            }
        };
        println!("criterion {:>2} {tag} {:<22} {:>8.2?}  {msg}", c.id, c.name, elapsed);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
