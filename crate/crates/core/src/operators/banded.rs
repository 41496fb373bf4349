use nalgebra::DMatrix;

/// Cyclic banded matrix with a `species x species` block structure.
///
/// Block `(a, b)` couples species `b` into the equations of species `a`;
/// each block stores, for every row `i`, the entries at columns
/// `i - w, ..., i + w` taken modulo `n`. On grids with `n <= 2w` several
/// offsets hit the same column; their entries add up.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclicBanded {
    n: usize,
    species: usize,
    bandwidth: usize,
    data: Vec<f64>,
}

impl CyclicBanded {
    pub fn zeros(n: usize, species: usize, bandwidth: usize) -> Self {
        let width = 2 * bandwidth + 1;
        Self {
            n,
            species,
            bandwidth,
            data: vec![0.0; species * species * n * width],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn species(&self) -> usize {
        self.species
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// Total dimension `species * n`.
    pub fn dim(&self) -> usize {
        self.species * self.n
    }

    #[inline]
    fn slot(&self, row_species: usize, col_species: usize, i: usize, offset: isize) -> usize {
        let width = 2 * self.bandwidth + 1;
        debug_assert!(offset.unsigned_abs() <= self.bandwidth);
        let block = row_species * self.species + col_species;
        (block * self.n + i) * width + (offset + self.bandwidth as isize) as usize
    }

    /// Adds `value` at row `i` and column `i + offset` (cyclic) of a block.
    #[inline]
    pub fn add(&mut self, row_species: usize, col_species: usize, i: usize, offset: isize, value: f64) {
        let k = self.slot(row_species, col_species, i, offset);
        self.data[k] += value;
    }

    pub fn get(&self, row_species: usize, col_species: usize, i: usize, offset: isize) -> f64 {
        self.data[self.slot(row_species, col_species, i, offset)]
    }

    fn col(&self, i: usize, offset: isize) -> usize {
        (i as isize + offset).rem_euclid(self.n as isize) as usize
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim(), "matvec dimension mismatch");
        let w = self.bandwidth as isize;
        let mut y = vec![0.0; self.dim()];
        for a in 0..self.species {
            for b in 0..self.species {
                let xb = &x[b * self.n..(b + 1) * self.n];
                for i in 0..self.n {
                    let mut acc = 0.0;
                    for k in -w..=w {
                        acc += self.get(a, b, i, k) * xb[self.col(i, k)];
                    }
                    y[a * self.n + i] += acc;
                }
            }
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let w = self.bandwidth as isize;
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for a in 0..self.species {
            for b in 0..self.species {
                for i in 0..self.n {
                    for k in -w..=w {
                        m[(a * self.n + i, b * self.n + self.col(i, k))] += self.get(a, b, i, k);
                    }
                }
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrapped_entries_accumulate() {
        let mut m = CyclicBanded::zeros(4, 1, 2);
        m.add(0, 0, 0, 2, 1.0);
        m.add(0, 0, 0, -2, 2.0);
        let d = m.to_dense();
        assert_eq!(d[(0, 2)], 3.0);
        assert_eq!(m.matvec(&[0.0, 0.0, 1.0, 0.0])[0], 3.0);
    }

    #[test]
    fn matvec_matches_dense() {
        let mut m = CyclicBanded::zeros(5, 2, 1);
        let mut v = 1.0;
        for a in 0..2 {
            for b in 0..2 {
                for i in 0..5 {
                    for k in -1..=1 {
                        m.add(a, b, i, k, v);
                        v += 0.5;
                    }
                }
            }
        }
        let x: Vec<f64> = (0..10).map(|i| (i as f64).sin()).collect();
        let y = m.matvec(&x);
        let yd = m.to_dense() * nalgebra::DVector::from_column_slice(&x);
        for (a, b) in y.iter().zip(yd.iter()) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }
}
