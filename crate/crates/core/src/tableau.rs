//! Runge-Kutta schemes: Butcher tableaux, the composite Simpson rule, and
//! the structural constant `C_RK = 2 Σ b_i (1 - c_i)`.
//!
//! For a consistent tableau `C_RK` only takes the values 0 (implicit
//! Euler), 1 (any scheme of order two or higher) and 2 (explicit Euler).
//! It is the coefficient of `DA[u](A[u])` in the second derivative of the
//! backward solution and therefore decides the sign of the dissipation
//! integrals in [`crate::entropy`].

use std::fmt;

use crate::error::{Error, Result};

/// Absolute tolerance for the row-sum and weight-sum consistency checks.
pub const CONSISTENCY_TOL: f64 = 1e-14;

/// A consistency condition a tableau fails to satisfy.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// `Σ_j a_ij != c_i`; `row` is 1-based.
    RowSum { row: usize, sum: f64, c: f64 },
    /// `Σ_i b_i != 1`.
    WeightSum { sum: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RowSum { row, sum, c } => write!(f, "row {row}: Σa={sum}≠c={c}"),
            Violation::WeightSum { sum } => write!(f, "Σb={sum}"),
        }
    }
}

/// Coefficients `(a_ij, b_i, c_i)` of an `s`-stage Runge-Kutta method.
#[derive(Debug, Clone, PartialEq)]
pub struct ButcherTableau {
    stages: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl ButcherTableau {
    /// Builds a tableau from its rows. Only the shapes are checked here;
    /// use [`ButcherTableau::validate`] (or [`ButcherTableau::new`]) for
    /// the consistency sums.
    pub fn from_parts(a: Vec<Vec<f64>>, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let s = b.len();
        if s == 0 {
            return Err(Error::InvalidArgument("tableau needs at least one stage".into()));
        }
        if c.len() != s || a.len() != s || a.iter().any(|row| row.len() != s) {
            return Err(Error::Shape {
                expected: format!("{s}x{s} matrix and two {s}-vectors"),
                found: format!(
                    "{}-row matrix, b of length {s}, c of length {}",
                    a.len(),
                    c.len()
                ),
            });
        }
        let all = a.iter().flatten().chain(&b).chain(&c);
        if all.clone().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("tableau entries must be finite".into()));
        }
        Ok(Self {
            stages: s,
            a: a.into_iter().flatten().collect(),
            b,
            c,
        })
    }

    /// Builds a tableau and rejects it unless it is consistent.
    pub fn new(a: Vec<Vec<f64>>, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let t = Self::from_parts(a, b, c)?;
        t.validate().map_err(Error::InvalidTableau)?;
        Ok(t)
    }

    pub fn explicit_euler() -> Self {
        Self::new(vec![vec![0.0]], vec![1.0], vec![0.0]).expect("explicit Euler is consistent")
    }

    pub fn implicit_euler() -> Self {
        Self::new(vec![vec![1.0]], vec![1.0], vec![1.0]).expect("implicit Euler is consistent")
    }

    /// Implicit trapezoidal rule (Lobatto IIIA, two stages).
    pub fn trapezoidal() -> Self {
        Self::new(
            vec![vec![0.0, 0.0], vec![0.5, 0.5]],
            vec![0.5, 0.5],
            vec![0.0, 1.0],
        )
        .expect("trapezoidal rule is consistent")
    }

    /// Three-stage Lobatto IIIA (order four, Simpson weights). Not part of
    /// the default registry; register it explicitly if wanted.
    pub fn lobatto_iiia3() -> Self {
        Self::new(
            vec![
                vec![0.0, 0.0, 0.0],
                vec![5.0 / 24.0, 1.0 / 3.0, -1.0 / 24.0],
                vec![1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
            ],
            vec![1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
            vec![0.0, 0.5, 1.0],
        )
        .expect("Lobatto IIIA is consistent")
    }

    pub fn stages(&self) -> usize {
        self.stages
    }

    #[inline]
    pub fn a(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.stages + j]
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    /// True when `a_ij = 0` for all `j >= i`, so stages can be evaluated in order.
    pub fn is_explicit(&self) -> bool {
        (0..self.stages).all(|i| (i..self.stages).all(|j| self.a(i, j) == 0.0))
    }

    /// Checks `Σ_j a_ij = c_i` and `Σ_i b_i = 1` to within [`CONSISTENCY_TOL`].
    pub fn validate(&self) -> std::result::Result<(), Vec<Violation>> {
        let mut violations = Vec::new();
        for i in 0..self.stages {
            let sum: f64 = (0..self.stages).map(|j| self.a(i, j)).sum();
            if (sum - self.c[i]).abs() > CONSISTENCY_TOL {
                violations.push(Violation::RowSum {
                    row: i + 1,
                    sum,
                    c: self.c[i],
                });
            }
        }
        let sum: f64 = self.b.iter().sum();
        if (sum - 1.0).abs() > CONSISTENCY_TOL {
            violations.push(Violation::WeightSum { sum });
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(violations)
        }
    }

    /// `C_RK = 2 Σ_i b_i (1 - c_i)`, evaluated as `2 (Σ b_i - Σ b_i c_i)`.
    ///
    /// Values within [`CONSISTENCY_TOL`] of 0, 1 or 2 are returned exactly,
    /// so tableaux written with rounded decimals (1/6, 2/3, ...) still land
    /// on the table values.
    pub fn c_rk(&self) -> Result<f64> {
        self.validate().map_err(Error::InvalidTableau)?;
        let sum_b: f64 = self.b.iter().sum();
        let sum_bc: f64 = self.b.iter().zip(&self.c).map(|(b, c)| b * c).sum();
        let raw = 2.0 * (sum_b - sum_bc);
        let snapped = raw.round();
        if (0.0..=2.0).contains(&snapped) && (raw - snapped).abs() <= CONSISTENCY_TOL {
            Ok(snapped)
        } else {
            Ok(raw)
        }
    }
}

/// Free-function form of [`ButcherTableau::c_rk`].
pub fn c_rk(t: &ButcherTableau) -> Result<f64> {
    t.c_rk()
}

/// How a scheme advances `u^{k-1}` to `u^k`.
#[derive(Debug, Clone, PartialEq)]
pub enum SchemeKind {
    Tableau(ButcherTableau),
    /// `u^k - u^{k-1} = -τ/6 (A[u^k] + 4 A[(u^k + u^{k-1})/2] + A[u^{k-1}])`.
    /// Not a tableau over stage values; behaves like an order-two method
    /// in the backward expansion, so its effective `C_RK` is 1.
    CompositeSimpson,
}

/// A named time-stepping scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct Scheme {
    name: String,
    kind: SchemeKind,
    c_rk: f64,
}

impl Scheme {
    pub fn from_tableau(name: impl Into<String>, tableau: ButcherTableau) -> Result<Self> {
        let c_rk = tableau.c_rk()?;
        Ok(Self {
            name: name.into(),
            kind: SchemeKind::Tableau(tableau),
            c_rk,
        })
    }

    pub fn composite_simpson() -> Self {
        Self {
            name: "simpson".into(),
            kind: SchemeKind::CompositeSimpson,
            c_rk: 1.0,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &SchemeKind {
        &self.kind
    }

    pub fn tableau(&self) -> Option<&ButcherTableau> {
        match &self.kind {
            SchemeKind::Tableau(t) => Some(t),
            SchemeKind::CompositeSimpson => None,
        }
    }

    pub fn c_rk_effective(&self) -> f64 {
        self.c_rk
    }
}

/// Names accepted by [`SchemeRegistry::get`] out of the box.
pub const BUILTIN_SCHEMES: [&str; 4] = ["explicit_euler", "implicit_euler", "trapezoidal", "simpson"];

/// Lookup table of named schemes.
#[derive(Debug, Clone)]
pub struct SchemeRegistry {
    entries: Vec<Scheme>,
}

impl Default for SchemeRegistry {
    fn default() -> Self {
        Self::new()
    }
}

impl SchemeRegistry {
    /// The four built-in schemes.
    pub fn new() -> Self {
        let tab = |name: &str, t| Scheme::from_tableau(name, t).expect("builtin tableau");
        Self {
            entries: vec![
                tab("explicit_euler", ButcherTableau::explicit_euler()),
                tab("implicit_euler", ButcherTableau::implicit_euler()),
                tab("trapezoidal", ButcherTableau::trapezoidal()),
                Scheme::composite_simpson(),
            ],
        }
    }

    /// Adds (or replaces) a tableau-based scheme under `name`.
    pub fn register(&mut self, name: &str, tableau: ButcherTableau) -> Result<&Scheme> {
        let scheme = Scheme::from_tableau(name, tableau)?;
        self.entries.retain(|s| s.name != name);
        self.entries.push(scheme);
        Ok(self.entries.last().expect("just pushed"))
    }

    pub fn get(&self, name: &str) -> Result<&Scheme> {
        self.entries
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::UnknownScheme {
                name: name.to_string(),
                known: self.names().map(str::to_string).collect(),
            })
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|s| s.name.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = &Scheme> {
        self.entries.iter()
    }
}

/// The built-in registry.
pub fn registry() -> SchemeRegistry {
    SchemeRegistry::new()
}
