//! Porous-medium admissibility regions.

use crate::error::{Error, Result};

/// Parameters of a region query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionQuery {
    pub alpha: f64,
    pub beta: f64,
    /// Space dimension.
    pub d: usize,
    pub c_rk: f64,
}

impl RegionQuery {
    pub fn new(alpha: f64, beta: f64, d: usize, c_rk: f64) -> Result<Self> {
        let q = Self { alpha, beta, d, c_rk };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.beta > 0.0 && self.alpha.is_finite() && self.beta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "alpha and beta must be positive, got ({}, {})",
                self.alpha, self.beta
            )));
        }
        if self.d == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        if ![0.0, 1.0, 2.0].contains(&self.c_rk) {
            return Err(Error::InvalidArgument(format!("C_RK must be 0, 1 or 2, got {}", self.c_rk)));
        }
        Ok(())
    }
}

/// Coefficient choice certifying membership.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness {
    pub c1: f64,
    pub c2: f64,
    pub c3: Option<f64>,
    pub lambda: Option<f64>,
}

/// One-dimensional zeroth-order region: all of `(0,∞)²` for `C_RK = 0`,
/// otherwise the open strip `-(C+1)/(2C-1) < α - β < 1`.
///
/// Points within a few ulps of `max(α, β)` of an edge count as boundary
/// points, so grids like `α = i/20` get their boundary cells rejected even
/// when `α - β` rounds to the inside.
pub fn r0_1d(q: &RegionQuery) -> bool {
    if q.c_rk == 0.0 {
        return true;
    }
    let z = q.alpha - q.beta;
    let slack = 4.0 * f64::EPSILON * q.alpha.abs().max(q.beta.abs()).max(1.0);
    let lower = -(q.c_rk + 1.0) / (2.0 * q.c_rk - 1.0);
    lower + slack < z && z < 1.0 - slack
}

/// `(b_1, ..., b_6)` of the zeroth-order polynomial in `η = (η_G, η_L, η_R, η_S)`.
pub fn r0_coefficients(q: &RegionQuery, c1: f64, c2: f64) -> [f64; 6] {
    let (a, b, c) = (q.alpha, q.beta, q.c_rk);
    let d = q.d as f64;
    let k = 1.0 - 1.0 / d;
    [
        (c + 1.0) + k * c1,
        (c + 2.0) * (b - a) + k * (2.0 * b - a - 1.0) * c1 - (2.0 / d + 1.0) * c2,
        (b - a).powi(2) - (2.0 * b - 2.0 * a - 1.0) * c2,
        -(d - 1.0) * ((2.0 * b - a - 1.0) * c1 + 2.0 * c2),
        -c1,
        -d * (d - 1.0) * c1,
    ]
}

/// `Q(η)` at a witness, with the scale `Σ|b_i| max(1, |η|_∞)⁴` used for
/// relative tolerances.
pub fn r0_polynomial(q: &RegionQuery, w: &Witness, eta: [f64; 4]) -> (f64, f64) {
    let b = r0_coefficients(q, w.c1, w.c2);
    let [g, l, r, s] = eta;
    let g2 = g * g;
    let value = b[0] * l * l + b[1] * l * g2 + b[2] * g2 * g2 + b[3] * s * g2 + b[4] * r * r + b[5] * s * s;
    let m = eta.iter().fold(1.0f64, |acc, x| acc.max(x.abs()));
    (value, b.iter().map(|x| x.abs()).sum::<f64>() * m.powi(4))
}

/// Number of interior λ points scanned by [`r0_membership`].
pub const R0_LAMBDA_POINTS: usize = 1999;

/// Membership in the zeroth-order region for `d >= 2`.
pub fn r0_membership(q: &RegionQuery) -> Result<(bool, Option<Witness>)> {
    r0_membership_with(q, R0_LAMBDA_POINTS)
}

/// [`r0_membership`] with a custom λ resolution (`points` interior points
/// of `(0, 1)`).
pub fn r0_membership_with(q: &RegionQuery, points: usize) -> Result<(bool, Option<Witness>)> {
    q.validate()?;
    if q.d < 2 {
        return Err(Error::InvalidArgument(
            "r0_membership needs d >= 2; use r0_1d in one dimension".into(),
        ));
    }
    let k = 1.0 - 1.0 / q.d as f64;
    for j in 1..=points {
        let lambda = j as f64 / (points + 1) as f64;
        let c1 = -lambda * (q.c_rk + 1.0) / k;
        // With b_1, b_6 > 0, Q >= 0 iff the Schur complement
        // R = 4 b_1 b_6 b_3 - b_6 b_2² - b_1 b_4² is nonnegative.
        let r = |c2: f64| {
            let b = r0_coefficients(q, c1, c2);
            4.0 * b[0] * b[5] * b[2] - b[5] * b[1] * b[1] - b[0] * b[3] * b[3]
        };
        let (rm, r0, rp) = (r(-1.0), r(0.0), r(1.0));
        if let Some(c2) = nonneg_point(0.5 * (rp + rm) - r0, 0.5 * (rp - rm), r0) {
            return Ok((
                true,
                Some(Witness {
                    c1,
                    c2,
                    c3: None,
                    lambda: Some(lambda),
                }),
            ));
        }
    }
    Ok((false, None))
}

/// A point where `a x² + b x + c >= 0` (up to `-1e-12` relative), if any.
fn nonneg_point(a: f64, b: f64, c: f64) -> Option<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return Some(0.0);
    }
    if a == 0.0 {
        return if b != 0.0 {
            Some(-c / b + b.signum())
        } else {
            (c >= 0.0).then_some(0.0)
        };
    }
    let disc = b * b - 4.0 * a * c;
    let vertex = -b / (2.0 * a);
    if a > 0.0 {
        if disc < 0.0 {
            return Some(vertex);
        }
        let root = vertex + disc.sqrt() / (2.0 * a);
        return Some(root + root.abs().max(1.0));
    }
    (disc >= -1e-12 * scale * scale).then_some(vertex)
}

/// Nonnegativity of `A + Bx + Cy + Dx² + Exy + Fy²` on `ℝ²` for `F > 0`.
pub fn quad_form_nonneg(a: f64, b: f64, c: f64, d: f64, e: f64, f: f64) -> Result<bool> {
    if f.is_nan() || f <= 0.0 {
        return Err(Error::InvalidArgument(format!("quadratic-form lemma needs F > 0, got {f}")));
    }
    let disc = 4.0 * d * f - e * e;
    let disc_scale = (4.0 * d * f).abs().max(e * e);
    if disc.abs() <= 1e-12 * disc_scale {
        let lin = 2.0 * b * f - c * e;
        let lin_scale = (2.0 * b * f).abs().max((c * e).abs());
        let constant = 4.0 * a * f - c * c;
        let constant_scale = (4.0 * a * f).abs().max(c * c);
        return Ok(lin.abs() <= 1e-12 * lin_scale && constant >= -1e-12 * constant_scale);
    }
    if disc < 0.0 {
        return Ok(false);
    }
    let terms = [a * disc, -b * b * f, -c * c * d, b * c * e];
    let scale = terms.iter().map(|t| t.abs()).sum::<f64>();
    Ok(terms.iter().sum::<f64>() >= -1e-12 * scale)
}

/// First-order table `a_1, ..., a_7` for `f(u) = u^{α/2}` and the PME.
pub fn r1_a_coefficients(alpha: f64, beta: f64, c: f64) -> [f64; 7] {
    let (a, b) = (alpha, beta);
    [
        (b - 1.0)
            * (2.0 * c * a * a * b - 3.0 * c * a * a + 2.0 * a * b * b - 2.0 * (5.0 * c + 3.0) * a * b
                + (15.0 * c + 4.0) * a
                + 2.0 * b.powi(3)
                - 14.0 * b * b
                + 4.0 * (3.0 * c + 7.0) * b
                - 2.0 * (9.0 * c + 8.0)),
        (b - 1.0)
            * (4.0 * c * a * a + (8.0 * c + 7.0) * a * b - (32.0 * c + 9.0) * a + 12.0 * b * b
                - 2.0 * (8.0 * c + 25.0) * b
                + 6.0 * (8.0 * c + 7.0)),
        c * a * a + 2.0 * a * b - (5.0 * c + 2.0) * a + 4.0 * (c + 1.0) * b * b - 2.0 * (5.0 * c + 8.0) * b
            + 12.0 * (c + 1.0),
        2.0 * (b - 1.0) * (2.0 * (4.0 * c + 1.0) * a + 9.0 * b - (16.0 * c + 13.0)),
        2.0 * (2.0 * c + 1.0) * a + 4.0 * (2.0 * c + 3.0) * b - 16.0 * (c + 1.0),
        2.0 - a,
        2.0 * (c + 1.0),
    ]
}

/// `(b_1, ..., b_7)` of the first-order polynomial with `c_1 = -a_6`.
pub fn r1_coefficients(alpha: f64, beta: f64, c: f64, c2: f64, c3: f64) -> [f64; 7] {
    let a = r1_a_coefficients(alpha, beta, c);
    let c1 = -a[5];
    let s = alpha + 2.0 * beta;
    [
        a[0] + (s - 7.0) * c3,
        a[1] + (s - 6.0) * c2 + 5.0 * c3,
        a[2] + c2,
        a[3] + (s - 5.0) * c1 + 3.0 * c2,
        a[4] + 2.0 * c1,
        a[5] + c1,
        a[6],
    ]
}

/// Lower bound `c_2^*` from `4 b_4 b_7 - b_5² > 0`.
pub fn r1_c2_star(alpha: f64, beta: f64, c: f64) -> f64 {
    let (a, b) = (alpha, beta);
    ((c + 1.0) * (2.0 * c + 1.0) * a * a - (2.0 * c + 2.0) * (4.0 * c - 3.0) * a * b - (9.0 * c + 9.0) * a
        + 2.0 * c * (4.0 * c + 3.0) * b * b
        - (8.0 * c + 12.0) * b
        + (12.0 * c + 14.0))
        / (3.0 * (c + 1.0))
}

/// `P(ξ)` at a first-order witness, with the scale
/// `Σ|b_i| max(1, |ξ|_∞)⁶`.
pub fn r1_polynomial(alpha: f64, beta: f64, w: &Witness, xi: [f64; 3]) -> (f64, f64) {
    let b = r1_coefficients(alpha, beta, 1.0, w.c2, w.c3.unwrap_or(0.0));
    let [x1, x2, x3] = xi;
    let value = b[0] * x1.powi(6)
        + b[1] * x1.powi(4) * x2
        + b[2] * x1.powi(3) * x3
        + b[3] * x1 * x1 * x2 * x2
        + b[4] * x1 * x2 * x3
        + b[5] * x2.powi(3)
        + b[6] * x3 * x3;
    let m = xi.iter().fold(1.0f64, |acc, x| acc.max(x.abs()));
    (value, b.iter().map(|x| x.abs()).sum::<f64>() * m.powi(6))
}

/// Width and resolution of the `c_2` scan in [`r1_membership`].
pub const R1_C2_RANGE: f64 = 100.0;
pub const R1_C2_POINTS: usize = 4001;

/// Membership in the first-order region (`C_RK = 1`).
pub fn r1_membership(alpha: f64, beta: f64) -> Result<(bool, Option<Witness>)> {
    RegionQuery::new(alpha, beta, 1, 1.0)?;
    let c = 1.0;
    // G'(0) <= 0 requires -2 <= α - 2β <= 1.
    let z = alpha - 2.0 * beta;
    if !(-2.0..=1.0).contains(&z) {
        return Ok((false, None));
    }
    let c1 = -r1_a_coefficients(alpha, beta, c)[5];
    let c2_star = r1_c2_star(alpha, beta, c);
    for k in 1..=R1_C2_POINTS {
        let c2 = c2_star + R1_C2_RANGE * k as f64 / R1_C2_POINTS as f64;
        let lemma = |c3: f64| {
            let b = r1_coefficients(alpha, beta, c, c2, c3);
            let disc = 4.0 * b[3] * b[6] - b[4] * b[4];
            let e = b[0] * disc - b[1] * b[1] * b[6] - b[2] * b[2] * b[3] + b[1] * b[2] * b[4];
            (e, disc, b)
        };
        let (e0, disc, b) = lemma(0.0);
        let witness = |c3| Witness {
            c1,
            c2,
            c3: Some(c3),
            lambda: None,
        };
        if disc.abs() <= 1e-12 * (4.0 * b[3] * b[6]).abs().max(b[4] * b[4]) {
            // Case (ii): only B = b_2 depends on c_3; choose c_3 with 2BF = CE.
            let c3 = (b[2] * b[4] / (2.0 * b[6]) - b[1]) / 5.0;
            let bb = r1_coefficients(alpha, beta, c, c2, c3);
            if quad_form_nonneg(bb[0], bb[1], bb[2], bb[3], bb[4], bb[6])? {
                return Ok((true, Some(witness(c3))));
            }
            continue;
        }
        if disc < 0.0 {
            continue;
        }
        let (ep, _, _) = lemma(1.0);
        let (em, _, _) = lemma(-1.0);
        let qa = 0.5 * (ep + em) - e0;
        let qb = 0.5 * (ep - em);
        if qa >= 0.0 {
            continue;
        }
        let c3 = -qb / (2.0 * qa);
        let value = e0 - qb * qb / (4.0 * qa);
        let scale = e0.abs().max(ep.abs()).max(em.abs());
        if value >= -1e-12 * scale {
            return Ok((true, Some(witness(c3))));
        }
    }
    Ok((false, None))
}
