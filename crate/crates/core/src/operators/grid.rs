use crate::error::{Error, Result};

/// Periodic cell grid on `[0, L)` with `n` cells and spacing `dx = L / n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    n: usize,
    length: f64,
    dx: f64,
}

impl Grid1D {
    pub const MIN_CELLS: usize = 4;

    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < Self::MIN_CELLS {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least {} cells, got {n}",
                Self::MIN_CELLS
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "grid length must be positive and finite, got {length}"
            )));
        }
        Ok(Self {
            n,
            length,
            dx: length / n as f64,
        })
    }

    /// Unit-length grid.
    pub fn unit(n: usize) -> Result<Self> {
        Self::new(n, 1.0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Left cell point `x_i = i dx`.
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.x(i))
    }

    /// Index `i + offset` modulo `n`.
    #[inline]
    pub fn wrap(&self, i: usize, offset: isize) -> usize {
        (i as isize + offset).rem_euclid(self.n as isize) as usize
    }
}

/// Cell values of one or more species, stored species-major.
#[derive(Debug, Clone, PartialEq)]
pub struct StateField {
    species: usize,
    n: usize,
    values: Vec<f64>,
}

impl StateField {
    pub fn new(species: usize, n: usize, values: Vec<f64>) -> Result<Self> {
        if species == 0 || n == 0 || values.len() != species * n {
            return Err(Error::Shape {
                expected: format!("{species} x {n} values"),
                found: format!("{} values", values.len()),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain {
                species: pos / n,
                cell: pos % n,
                value: values[pos],
                reason: "non-finite value",
            });
        }
        Ok(Self { species, n, values })
    }

    pub fn scalar(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::new(1, n, values)
    }

    pub fn pair(first: Vec<f64>, second: Vec<f64>) -> Result<Self> {
        if first.len() != second.len() {
            return Err(Error::Shape {
                expected: format!("two species of length {}", first.len()),
                found: format!("second species of length {}", second.len()),
            });
        }
        let n = first.len();
        let mut values = first;
        values.extend(second);
        Self::new(2, n, values)
    }

    pub fn constant(species: usize, n: usize, value: f64) -> Result<Self> {
        Self::new(species, n, vec![value; species * n])
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            species: self.species,
            n: self.n,
            values: vec![0.0; self.values.len()],
        }
    }

    /// Wraps an already-validated buffer. Used internally where values are
    /// known to come from finite arithmetic on finite fields.
    pub(crate) fn from_raw(species: usize, n: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), species * n);
        Self { species, n, values }
    }

    pub fn species(&self) -> usize {
        self.species
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn component(&self, s: usize) -> &[f64] {
        &self.values[s * self.n..(s + 1) * self.n]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `Σ_i u_i dx` summed over species.
    pub fn mass(&self, grid: &Grid1D) -> f64 {
        self.values.iter().sum::<f64>() * grid.dx()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Cyclic shift of every species by `k` cells: `out_i = u_{i-k}`.
    pub fn shifted(&self, k: usize) -> Self {
        let mut values = vec![0.0; self.values.len()];
        for s in 0..self.species {
            let src = self.component(s);
            for i in 0..self.n {
                values[s * self.n + (i + k) % self.n] = src[i];
            }
        }
        Self::from_raw(self.species, self.n, values)
    }

    /// Returns `Err(Domain)` at the first entry that is not strictly positive.
    pub fn require_positive(&self, reason: &'static str) -> Result<()> {
        match self.values.iter().position(|&v| v <= 0.0) {
            None => Ok(()),
            Some(pos) => Err(Error::Domain {
                species: pos / self.n,
                cell: pos % self.n,
                value: self.values[pos],
                reason,
            }),
        }
    }

    pub(crate) fn check_finite(&self, reason: &'static str) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(pos) => Err(Error::Domain {
                species: pos / self.n,
                cell: pos % self.n,
                value: self.values[pos],
                reason,
            }),
        }
    }
}
