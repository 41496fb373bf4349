//! Exact coefficient chain for the logarithmic DLSS entropy.

use std::fmt;

use num::{BigInt, BigRational, One, ToPrimitive, Zero};

use crate::error::{Error, Result};

fn r(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn ri(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Dense univariate polynomial with rational coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq)]
pub struct RatPoly(pub Vec<BigRational>);

impl RatPoly {
    pub fn constant(c: BigRational) -> Self {
        Self(vec![c])
    }

    /// The variable `x`.
    pub fn x() -> Self {
        Self(vec![BigRational::zero(), BigRational::one()])
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        self.0
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        Self(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * ri(k as i64))
                .collect(),
        )
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        Self(self.0.iter().map(|c| c * s).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.0.len().max(other.0.len());
        Self(
            (0..n)
                .map(|k| {
                    let a = self.0.get(k).cloned().unwrap_or_else(BigRational::zero);
                    let b = other.0.get(k).cloned().unwrap_or_else(BigRational::zero);
                    a + b
                })
                .collect(),
        )
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.0.is_empty() || other.0.is_empty() {
            return Self(Vec::new());
        }
        let mut out = vec![BigRational::zero(); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self(out)
    }

    /// Drops trailing zero coefficients.
    pub fn trimmed(mut self) -> Self {
        while self.0.last().is_some_and(|c| c.is_zero()) {
            self.0.pop();
        }
        self
    }
}

/// `c_5, c_6, c_7` as polynomials in `c_8` from the `ξ_3` eliminations.
fn c567(c8: &RatPoly) -> (RatPoly, RatPoly, RatPoly) {
    let c8sq = c8.mul(c8);
    let c5 = c8sq.scale(&ri(8)).add(&c8.scale(&ri(-6)));
    let c6 = c8.scale(&ri(-2));
    let c7 = c8sq.scale(&r(-20, 3)).add(&c8.scale(&r(8, 3)));
    (c5, c6, c7)
}

/// `b_12 = a_12 - a_13² / (4 a_15)` as a polynomial in `c_8`, assembled from
/// the coefficient table (not from a closed form).
pub fn b12_polynomial() -> RatPoly {
    let c8 = RatPoly::x();
    let (_, _, c7) = c567(&c8);
    let a12 = RatPoly::constant(ri(3)).add(&c7.scale(&ri(4)));
    let a13 = RatPoly::constant(ri(5)).add(&c8.scale(&ri(4)));
    let a15 = ri(2);
    let inv = BigRational::one() / (ri(4) * a15);
    a12.add(&a13.mul(&a13).scale(&-inv)).trimmed()
}

/// Displayed cubic for `c_1(c_3)` at `c_8 = 17/172`.
pub fn c1_quoted_cubic() -> RatPoly {
    RatPoly(vec![
        BigRational::new(
            "34135130165539".parse::<BigInt>().expect("literal"),
            "163091166664200".parse::<BigInt>().expect("literal"),
        ),
        BigRational::new(
            "35780649411".parse::<BigInt>().expect("literal"),
            "2393160700".parse::<BigInt>().expect("literal"),
        ),
        r(741681, 2150),
        r(449307, 175),
    ])
}

/// The stationary point `c_8^* = 17/172` of `b_12`.
pub fn c8_star() -> BigRational {
    r(17, 172)
}

/// Every coefficient of the chain at one `(c_3, c_8)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DlssReport {
    /// `c_1, ..., c_8`.
    pub c: [BigRational; 8],
    /// `a_1, ..., a_15`.
    pub a: [BigRational; 15],
    pub b1: BigRational,
    pub b2: BigRational,
    pub b4: BigRational,
    pub b7: BigRational,
    pub b12: BigRational,
    /// Displayed cubic evaluated at `c_3` (meaningful at `c_8 = 17/172`).
    pub c1_quoted: BigRational,
    /// `p(c_3) = b_1 - b_2² b_12 / b_7²`.
    pub p: BigRational,
}

impl DlssReport {
    pub fn p_f64(&self) -> f64 {
        self.p.to_f64().unwrap_or(f64::NAN)
    }
}

fn a_table(c: &[BigRational; 8]) -> [BigRational; 15] {
    let [c1, c2, c3, c4, c5, c6, c7, c8] = c;
    [
        ri(4) * c1,
        ri(28) * c1 + ri(4) * c2,
        ri(4) * c2 + ri(4) * c3,
        ri(2) + ri(20) * c2 + ri(4) * c4,
        ri(4) * c3,
        ri(8) + ri(16) * c3 + ri(8) * c4 + ri(4) * c5,
        ri(5) + ri(12) * c4 + ri(4) * c7,
        ri(4) + ri(4) * c5,
        ri(8) + ri(4) * c5 + ri(4) * c6,
        ri(10) + ri(8) * c5 + ri(12) * c7 + ri(4) * c8,
        ri(8) + ri(8) * c6,
        ri(3) + ri(4) * c7,
        ri(5) + ri(4) * c8,
        ri(4) * c6 + ri(8) * c8,
        ri(2),
    ]
}

/// `(b_1, b_2, b_4, b_7, b_12)` after completing the square in `ξ_4`.
fn b_values(a: &[BigRational; 15]) -> [BigRational; 5] {
    let a15 = &a[14];
    let two = ri(2);
    let four = ri(4);
    [
        &a[0] - &a[4] * &a[4] / (&four * a15),
        &a[1] - &a[4] * &a[7] / (&two * a15),
        &a[3] - &a[7] * &a[7] / (&four * a15) - &a[4] * &a[12] / (&two * a15),
        &a[6] - &a[7] * &a[12] / (&two * a15),
        &a[11] - &a[12] * &a[12] / (&four * a15),
    ]
}

/// Evaluates the chain at rational `(c_3, c_8)`. `c_1` solves
/// `b_4 b_7 - 2 b_2 b_12 - b_7³ / (4 b_12) = 0`, which is linear in `c_1`.
pub fn dlss_chain(c3: &BigRational, c8: &BigRational) -> Result<DlssReport> {
    let c8p = RatPoly::constant(c8.clone());
    let (c5, c6, c7) = c567(&c8p);
    let (c5, c6, c7) = (c5.eval(&ri(0)), c6.eval(&ri(0)), c7.eval(&ri(0)));
    let c4 = -ri(2) * c3 - ri(16) * c8 * c8 * c8 + ri(16) * c8 * c8 - ri(5) * c8;
    let c2 = c3 - ri(4) * c3 * c8;
    let with_c1 = |c1: BigRational| {
        let c = [
            c1,
            c2.clone(),
            c3.clone(),
            c4.clone(),
            c5.clone(),
            c6.clone(),
            c7.clone(),
            c8.clone(),
        ];
        let a = a_table(&c);
        let b = b_values(&a);
        (c, a, b)
    };
    let residual = |b: &[BigRational; 5]| -> Result<BigRational> {
        let [_, b2, b4, b7, b12] = b;
        if b12.is_zero() {
            return Err(Error::DivisionByZero("b12 = 0"));
        }
        Ok(b4 * b7 - ri(2) * b2 * b12 - b7 * b7 * b7 / (ri(4) * b12))
    };
    let f0 = residual(&with_c1(ri(0)).2)?;
    let f1 = residual(&with_c1(ri(1)).2)?;
    let slope = &f1 - &f0;
    if slope.is_zero() {
        return Err(Error::DivisionByZero("c1 does not enter the stationarity condition"));
    }
    let c1 = -f0 / slope;
    let (c, a, b) = with_c1(c1);
    let [b1, b2, b4, b7, b12] = b;
    if b7.is_zero() {
        return Err(Error::DivisionByZero("b7 = 0"));
    }
    let p = &b1 - &b2 * &b2 * &b12 / (&b7 * &b7);
    Ok(DlssReport {
        c1_quoted: c1_quoted_cubic().eval(c3),
        c,
        a,
        b1,
        b2,
        b4,
        b7,
        b12,
        p,
    })
}

/// Floating-point convenience wrapper; inputs are converted exactly.
pub fn dlss_chain_f64(c3: f64, c8: f64) -> Result<DlssReport> {
    let conv = |x: f64, name: &str| {
        BigRational::from_float(x).ok_or_else(|| Error::InvalidArgument(format!("{name} must be finite")))
    };
    dlss_chain(&conv(c3, "c3")?, &conv(c8, "c8")?)
}

/// Parses `"p/q"`, an integer or a decimal like `"-0.029"` exactly.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || Error::InvalidArgument(format!("not a rational number: `{s}`"));
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::DivisionByZero("rational with zero denominator"));
        }
        return Ok(BigRational::new(n, d));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if (int.is_empty() && frac.is_empty()) || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigInt = format!("0{int}{frac}").parse().map_err(|_| bad())?;
    let value = BigRational::new(digits, num::pow(BigInt::from(10), frac.len()));
    Ok(if neg { -value } else { value })
}

/// Formats a rational as `p/q` (or `p` when integral).
pub struct RationalDisplay<'a>(pub &'a BigRational);

impl fmt::Display for RationalDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

/// `true` when `x` lies strictly between `lo` and `hi`.
pub fn in_open_interval(x: &BigRational, lo: f64, hi: f64) -> bool {
    match (BigRational::from_float(lo), BigRational::from_float(hi)) {
        (Some(l), Some(h)) => x > &l && x < &h,
        _ => false,
    }
}
