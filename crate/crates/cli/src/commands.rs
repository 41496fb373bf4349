use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use entropy_rk::entropy::profile_g_with;
use entropy_rk::regions::{
    b12_polynomial, c8_star, dlss_chain, parse_rational, scalar_conditions, ConditionRow, Mobility, RationalDisplay,
};
use entropy_rk::stepping::{forward_step_counted, step_count};
use entropy_rk::{emit_mask, evaluate, AxisRange, Grid1D, RegionFamily, StateField};

use crate::config::{make_initial, RunConfig};
use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.into(),
        source,
    })
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

fn snapshot_csv(u: &StateField, grid: &Grid1D) -> String {
    let mut out = String::from("x");
    if u.species() == 1 {
        out.push_str(",u");
    } else {
        for s in 1..=u.species() {
            let _ = write!(out, ",u{s}");
        }
    }
    out.push('\n');
    for i in 0..grid.n() {
        let _ = write!(out, "{:e}", grid.x(i));
        for s in 0..u.species() {
            let _ = write!(out, ",{:e}", u.component(s)[i]);
        }
        out.push('\n');
    }
    out
}

fn meta(cfg: &RunConfig, command: &str, status: &str) -> String {
    format!("# entropy-rk {VERSION}\n# command: {command}\n# status: {status}\n{}", cfg.echo())
}

/// Runs one trajectory, writing `entropy.csv`, snapshots and `meta.txt`.
/// A failing step still leaves everything computed so far on disk.
pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    let p = cfg.problem_spec()?;
    let s = RunConfig::scheme_by_name(&cfg.scheme)?;
    let newton = cfg.newton()?;
    let e = cfg.entropy_functional();
    let grid = *p.grid();
    let mut u = make_initial(cfg, &grid)?;
    p.check_state(&u)?;
    create_dir(out)?;

    let steps = step_count(cfg.tau, cfg.t_end);
    let wanted: BTreeMap<usize, f64> = cfg
        .snapshots
        .iter()
        .map(|&t| (if t == 0.0 { 0 } else { step_count(cfg.tau, t) }, t))
        .collect();

    let mut table = String::from("t,H,mass,min,max,iters\n");
    let mut row = |k: usize, u: &StateField, iters: usize| -> Result<f64, entropy_rk::Error> {
        let h = evaluate(&e, u, &grid)?;
        let _ = writeln!(
            table,
            "{:e},{:e},{:e},{:e},{:e},{iters}",
            k as f64 * cfg.tau,
            h,
            u.mass(&grid),
            u.min(),
            u.max()
        );
        Ok(h)
    };

    let mut failure = None;
    let mut first_h = f64::NAN;
    let mut last_h = f64::NAN;
    let mut done = 0;
    match row(0, &u, 0) {
        Ok(h) => (first_h, last_h) = (h, h),
        Err(err) => failure = Some(err),
    }
    if failure.is_none() && wanted.contains_key(&0) {
        write_file(out, &format!("snapshot_t{:e}.csv", 0.0), &snapshot_csv(&u, &grid))?;
    }
    for k in 1..=steps {
        if failure.is_some() {
            break;
        }
        match forward_step_counted(&p, &s, &u, cfg.tau, &newton) {
            Ok((next, iters)) => {
                u = next;
                match row(k, &u, iters) {
                    Ok(h) => last_h = h,
                    Err(err) => failure = Some(entropy_rk::Error::StepFailed { step: k, source: Box::new(err) }),
                }
                done = k;
                if wanted.contains_key(&k) {
                    let t = k as f64 * cfg.tau;
                    write_file(out, &format!("snapshot_t{t:e}.csv"), &snapshot_csv(&u, &grid))?;
                }
            }
            Err(err) => failure = Some(entropy_rk::Error::StepFailed { step: k, source: Box::new(err) }),
        }
    }

    write_file(out, "entropy.csv", &table)?;
    let status = match &failure {
        None => format!("complete, {steps} steps"),
        Some(err) => format!("failed after {done} of {steps} steps: {err}"),
    };
    write_file(out, "meta.txt", &meta(cfg, "simulate", &status))?;
    match failure {
        Some(source) => Err(CliError::Partial { out: out.into(), source }),
        None => Ok(format!(
            "{}: {steps} steps to t = {:e}, H {first_h:e} -> {last_h:e}",
            cfg.scheme,
            steps as f64 * cfg.tau
        )),
    }
}

/// Profiles `G` for every configured scheme at every base time.
pub fn gprofile(cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    let p = cfg.problem_spec()?;
    let newton = cfg.newton()?;
    let e = cfg.entropy_functional();
    let grid = *p.grid();
    let u0 = make_initial(cfg, &grid)?;
    p.check_state(&u0)?;
    create_dir(out)?;

    let targets: Vec<usize> = cfg
        .base_times
        .iter()
        .map(|&t| if t == 0.0 { 0 } else { step_count(cfg.tau, t) })
        .collect();
    let last = targets.iter().copied().max().unwrap_or(0);

    let mut index = String::from("scheme,base_time,file,points,failed_at,extrapolated_d2G\n");
    let mut summary = Vec::new();
    for name in cfg.profile_schemes() {
        let s = RunConfig::scheme_by_name(&name)?;
        let mut states = BTreeMap::new();
        let mut u = u0.clone();
        for k in 0..=last {
            if k > 0 {
                u = forward_step_counted(&p, &s, &u, cfg.tau, &newton)
                    .map_err(|err| CliError::Partial {
                        out: out.into(),
                        source: entropy_rk::Error::StepFailed { step: k, source: Box::new(err) },
                    })?
                    .0;
            }
            if targets.contains(&k) {
                states.insert(k, u.clone());
            }
        }
        for &k in &targets {
            let t = k as f64 * cfg.tau;
            let mut prof = profile_g_with(&e, &p, &s, &states[&k], cfg.tau_max, cfg.m, &newton, cfg.q_exponent)?;
            prof.base_time = t;
            let file = format!("gprofile_{name}_t{t:e}.csv");
            write_file(out, &file, &prof.to_csv())?;
            let failed = prof.failed_at.map(|j| j.to_string()).unwrap_or_default();
            let extra = prof.extrapolated_d2g().map(|x| format!("{x:e}")).unwrap_or_default();
            let _ = writeln!(index, "{name},{t:e},{file},{},{failed},{extra}", prof.g.len());
            if let (Some(j), Some(why)) = (prof.failed_at, &prof.failure) {
                eprintln!("warning: {name} at t = {t:e}: profile truncated at j = {j}: {why}");
            }
            summary.push(file);
        }
    }
    write_file(out, "gprofile_index.csv", &index)?;
    write_file(out, "meta.txt", &meta(cfg, "gprofile", "complete"))?;
    Ok(format!("wrote {} profiles", summary.len()))
}

pub struct RegionRequest {
    pub family: RegionFamily,
    pub alpha: AxisRange,
    pub beta: AxisRange,
    pub d: usize,
    pub c_rk: f64,
}

pub fn region(req: &RegionRequest, out: &Path) -> Result<String, CliError> {
    let mask = emit_mask(req.family, req.alpha, req.beta, req.d, req.c_rk)?;
    create_dir(out)?;
    let tag = match req.family {
        RegionFamily::Pme0 => "pme0",
        RegionFamily::Pme1 => "pme1",
    };
    let file = format!("region_{tag}_d{}_c{}.csv", req.d, req.c_rk);
    write_file(out, &file, &mask.to_csv())?;
    Ok(format!(
        "{tag}: {} of {} cells admissible, written to {file}",
        mask.count(),
        mask.alphas.len() * mask.betas.len()
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConditionCase {
    /// Heat equation with the logarithmic entropy: `μ = u`.
    HeatLog,
    /// Porous medium `a = β u^{β-1}` with `h'' = u^{α-1}`: `μ = β u^{β-α}`.
    Pme { alpha: f64, beta: f64 },
}

pub struct ConditionRequest {
    pub case: ConditionCase,
    pub u_min: f64,
    pub u_max: f64,
    pub points: usize,
    pub d: usize,
    pub c_rk: f64,
}

fn condition_csv(rows: &[ConditionRow]) -> String {
    let mut out = String::from("u,b_theorem,b_proof,cond2_theorem,cond2_proof,cond3\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{:e},{:e},{:e},{:e},{:e},{:e}",
            r.u, r.b_theorem, r.b_proof, r.cond2_theorem, r.cond2_proof, r.cond3
        );
    }
    out
}

pub fn check_conditions(req: &ConditionRequest, out: &Path) -> Result<String, CliError> {
    if !(req.u_min > 0.0 && req.u_max > req.u_min && req.points >= 2) {
        return Err(entropy_rk::Error::InvalidArgument(format!(
            "need 0 < u_min < u_max and at least 2 points, got [{}, {}] with {}",
            req.u_min, req.u_max, req.points
        ))
        .into());
    }
    let grid: Vec<f64> = (0..req.points)
        .map(|k| req.u_min + (req.u_max - req.u_min) * k as f64 / (req.points - 1) as f64)
        .collect();
    let rows = match req.case {
        ConditionCase::HeatLog => {
            let (mu, dmu, d2mu, h2) = (|u: f64| u, |_: f64| 1.0, |_: f64| 0.0, |u: f64| 1.0 / u);
            scalar_conditions(&Mobility { mu: &mu, dmu: &dmu, d2mu: &d2mu, h2: &h2 }, &grid, req.d, req.c_rk)?
        }
        ConditionCase::Pme { alpha, beta } => {
            let e = beta - alpha;
            let mu = move |u: f64| beta * u.powf(e);
            let dmu = move |u: f64| beta * e * u.powf(e - 1.0);
            let d2mu = move |u: f64| beta * e * (e - 1.0) * u.powf(e - 2.0);
            let h2 = move |u: f64| u.powf(alpha - 1.0);
            scalar_conditions(&Mobility { mu: &mu, dmu: &dmu, d2mu: &d2mu, h2: &h2 }, &grid, req.d, req.c_rk)?
        }
    };
    create_dir(out)?;
    write_file(out, "conditions.csv", &condition_csv(&rows))?;

    let verdict = |f: fn(&ConditionRow) -> bool| if rows.iter().all(f) { "PASS" } else { "FAIL" };
    let range = |f: fn(&ConditionRow) -> f64| {
        let (lo, hi) = rows.iter().map(f).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
        format!("[{lo:e}, {hi:e}]")
    };
    Ok([
        format!("cond1 b >= 0 (theorem factor C+1): {}", verdict(ConditionRow::cond1_pass)),
        format!("cond1 b >= 0 (proof factor C+2): {}", verdict(ConditionRow::cond1_proof_pass)),
        format!(
            "cond2 (theorem factor C+1): {} range {}",
            verdict(ConditionRow::cond2_pass),
            range(|r| r.cond2_theorem)
        ),
        format!(
            "cond2 (proof factor C+2): {} range {}",
            verdict(ConditionRow::cond2_proof_pass),
            range(|r| r.cond2_proof)
        ),
        format!("cond3 < 0: {} range {}", verdict(ConditionRow::cond3_pass), range(|r| r.cond3)),
    ]
    .join("\n"))
}

/// Exact DLSS constants; fails when any of the quoted identities breaks.
pub fn dlss_constants(c3: &str, c8: Option<&str>, out: &Path) -> Result<String, CliError> {
    let rat = |s: &str| parse_rational(s).map_err(CliError::from);
    let star = c8_star();
    let poly = b12_polynomial();
    let b12 = poly.eval(&star);
    let slope = poly.derivative().eval(&star);
    let quoted = dlss_chain(&rat("-0.029")?, &star)?;
    let at_zero = dlss_chain(&rat("0")?, &star)?;
    let p = quoted.p_f64();

    let mut checks = vec![
        (format!("b12(17/172)={}", RationalDisplay(&b12)), b12 == rat("20/129")?),
        (format!("b12'(17/172)={}", RationalDisplay(&slope)), slope == rat("0")?),
        (format!("p(-0.029)={p:e} in (0.004, 0.005)"), 0.004 < p && p < 0.005),
        (
            format!("c1(0)={}", RationalDisplay(&at_zero.c[0])),
            at_zero.c[0] == rat("34135130165539/163091166664200")?,
        ),
    ];
    if quoted.c[0] != quoted.c1_quoted {
        checks.push(("c1(-0.029) equals the quoted cubic".into(), false));
    }

    let c3v = rat(c3)?;
    let c8v = match c8 {
        Some(s) => rat(s)?,
        None => star,
    };
    let rep = dlss_chain(&c3v, &c8v)?;
    let mut report = String::new();
    let _ = writeln!(report, "c3 = {}", RationalDisplay(&c3v));
    let _ = writeln!(report, "c8 = {}", RationalDisplay(&c8v));
    for (i, c) in rep.c.iter().enumerate() {
        let _ = writeln!(report, "c{} = {}", i + 1, RationalDisplay(c));
    }
    for (i, a) in rep.a.iter().enumerate() {
        let _ = writeln!(report, "a{} = {}", i + 1, RationalDisplay(a));
    }
    for (name, v) in [("b1", &rep.b1), ("b2", &rep.b2), ("b4", &rep.b4), ("b7", &rep.b7), ("b12", &rep.b12)] {
        let _ = writeln!(report, "{name} = {}", RationalDisplay(v));
    }
    let _ = writeln!(report, "p = {} ~ {:e}", RationalDisplay(&rep.p), rep.p_f64());
    create_dir(out)?;
    write_file(out, "dlss_constants.txt", &report)?;

    let lines: Vec<String> = checks
        .iter()
        .map(|(what, ok)| format!("{what} {}", if *ok { "PASS" } else { "FAIL" }))
        .collect();
    let text = lines.join("\n");
    if checks.iter().all(|(_, ok)| *ok) {
        Ok(text)
    } else {
        println!("{text}");
        Err(CliError::Check("a DLSS identity failed".into()))
    }
}
