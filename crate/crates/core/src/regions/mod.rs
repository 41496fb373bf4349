//! Admissible parameter regions: porous-medium regions `R₀(d)` and `R₁`,
//! pointwise conditions for scalar diffusion and the exact DLSS chain.

mod dlss;
mod pme;
mod scalar;

use std::fmt::Write as _;

use rayon::prelude::*;

pub use dlss::{
    b12_polynomial, c1_quoted_cubic, c8_star, dlss_chain, dlss_chain_f64, in_open_interval, parse_rational,
    DlssReport, RatPoly, RationalDisplay,
};
pub use pme::{
    quad_form_nonneg, r0_1d, r0_coefficients, r0_membership, r0_membership_with, r0_polynomial,
    r1_a_coefficients, r1_c2_star, r1_coefficients, r1_membership, r1_polynomial, RegionQuery, Witness,
    R0_LAMBDA_POINTS, R1_C2_POINTS, R1_C2_RANGE,
};
pub use scalar::{adaptive_simpson, scalar_conditions, ConditionRow, Mobility, QUADRATURE_TOL};

use crate::error::{Error, Result};

/// Which region a mask describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionFamily {
    /// Zeroth-order entropies `u^α` for the porous-medium equation.
    Pme0,
    /// First-order entropies `|∂_x u^{α/2}|²` (one dimension, `C_RK = 1`).
    Pme1,
}

impl std::str::FromStr for RegionFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pme0" => Ok(Self::Pme0),
            "pme1" => Ok(Self::Pme1),
            _ => Err(Error::InvalidArgument(format!("unknown region family `{s}` (pme0, pme1)"))),
        }
    }
}

/// Inclusive grid `lo, lo + step, ..., <= hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisRange {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl AxisRange {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && step.is_finite() && step > 0.0 && hi >= lo) {
            return Err(Error::InvalidArgument(format!("invalid range [{lo}, {hi}] step {step}")));
        }
        Ok(Self { lo, hi, step })
    }

    pub fn points(&self) -> Vec<f64> {
        let count = ((self.hi - self.lo) / self.step * (1.0 + 1e-12)).floor() as usize + 1;
        (0..count).map(|k| self.lo + k as f64 * self.step).collect()
    }
}

/// Membership of every `(α, β)` grid cell, indexed `[i_alpha][i_beta]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMask {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub member: Vec<Vec<bool>>,
    pub witnesses: Vec<Vec<Option<Witness>>>,
}

impl RegionMask {
    pub fn count(&self) -> usize {
        self.member.iter().flatten().filter(|&&m| m).count()
    }

    /// CSV rows in α-major order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,beta,member,witness_c1,witness_c2,witness_c3\n");
        for (i, &a) in self.alphas.iter().enumerate() {
            for (j, &b) in self.betas.iter().enumerate() {
                let (c1, c2, c3) = match self.witnesses[i][j] {
                    Some(w) => (
                        format!("{:e}", w.c1),
                        format!("{:e}", w.c2),
                        w.c3.map(|c| format!("{c:e}")).unwrap_or_default(),
                    ),
                    None => Default::default(),
                };
                let _ = writeln!(out, "{a:e},{b:e},{},{c1},{c2},{c3}", u8::from(self.member[i][j]));
            }
        }
        out
    }
}

/// Evaluates a region over the grid, in parallel over cells.
pub fn emit_mask(family: RegionFamily, alpha: AxisRange, beta: AxisRange, d: usize, c_rk: f64) -> Result<RegionMask> {
    let alphas = alpha.points();
    let betas = beta.points();
    if family == RegionFamily::Pme0 {
        RegionQuery::new(alphas[0], betas[0], d, c_rk)?;
    }
    let cells: Vec<(usize, usize)> = (0..alphas.len())
        .flat_map(|i| (0..betas.len()).map(move |j| (i, j)))
        .collect();
    let results = cells
        .par_iter()
        .map(|&(i, j)| {
            let (a, b) = (alphas[i], betas[j]);
            match family {
                RegionFamily::Pme0 => {
                    let q = RegionQuery::new(a, b, d, c_rk)?;
                    if d == 1 {
                        Ok((r0_1d(&q), None))
                    } else {
                        r0_membership(&q)
                    }
                }
                RegionFamily::Pme1 => r1_membership(a, b),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut member = vec![vec![false; betas.len()]; alphas.len()];
    let mut witnesses = vec![vec![None; betas.len()]; alphas.len()];
    for (&(i, j), (m, w)) in cells.iter().zip(results) {
        member[i][j] = m;
        witnesses[i][j] = w;
    }
    Ok(RegionMask {
        alphas,
        betas,
        member,
        witnesses,
    })
}
