use super::{evaluate, EntropyFunctional};
use crate::error::{Error, Result};
use crate::operators::{Family, ProblemSpec, StateField};
use crate::stepping::Trajectory;

/// Periodic steady state with the same mass as `u`: the per-species mean,
/// or the common mean when the species exchange mass.
pub fn steady_state(p: &ProblemSpec, u: &StateField) -> StateField {
    let n = u.n();
    let means: Vec<f64> = (0..u.species())
        .map(|s| u.component(s).iter().sum::<f64>() / n as f64)
        .collect();
    let coupled = matches!(p.family(), Family::LinearSystem { mu, .. } if *mu > 0.0);
    let values = if coupled {
        let mean = means.iter().sum::<f64>() / means.len() as f64;
        vec![mean; u.len()]
    } else {
        means.iter().flat_map(|&m| std::iter::repeat(m).take(n)).collect()
    };
    StateField::from_raw(u.species(), n, values)
}

/// Exponential rate of `H[u^k] - H[u_∞]` over `window`, from a
/// least-squares fit of its logarithm against time.
pub fn fit_decay_rate(traj: &Trajectory, e: &EntropyFunctional, window: (f64, f64)) -> Result<f64> {
    let grid = traj.problem.grid();
    let steady = steady_state(&traj.problem, &traj.states[0]);
    let h_inf = evaluate(e, &steady, grid)?;
    let gaps = traj
        .states
        .iter()
        .map(|u| evaluate(e, u, grid).map(|h| h - h_inf))
        .collect::<Result<Vec<_>>>()?;
    fit_decay_rate_series(&traj.times, &gaps, window)
}

/// Rate `-d/dt log(gap)` fitted over the samples with time in `window`
/// (inclusive, with a relative slack of 1e-9 for accumulated time steps).
pub fn fit_decay_rate_series(times: &[f64], gaps: &[f64], window: (f64, f64)) -> Result<f64> {
    if times.len() != gaps.len() {
        return Err(Error::Shape {
            expected: format!("{} entropy values", times.len()),
            found: format!("{}", gaps.len()),
        });
    }
    let (lo, hi) = window;
    let slack = 1e-9 * lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    let mut pts = Vec::new();
    for (&t, &g) in times.iter().zip(gaps) {
        if t >= lo - slack && t <= hi + slack {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::InvalidArgument(format!("non-positive entropy gap {g} at t = {t}")));
            }
            pts.push((t, g.ln()));
        }
    }
    if pts.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "window [{lo}, {hi}] contains {} samples, need at least 2",
            pts.len()
        )));
    }
    let k = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|(t, y)| (t - tm) * (y - ym)).sum();
    let sxx: f64 = pts.iter().map(|(t, _)| (t - tm) * (t - tm)).sum();
    if sxx == 0.0 {
        return Err(Error::DivisionByZero("window has a single distinct time"));
    }
    Ok(-sxy / sxx)
}
