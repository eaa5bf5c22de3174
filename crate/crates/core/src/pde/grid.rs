use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hermite::Quadrature;

/// Uniform tensor grid on [−L, L]ⁿ with an odd node count per axis, so the
/// origin is a node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n: usize,
    /// Nodes per axis.
    pub m: usize,
    pub dy: f64,
}

impl Grid {
    /// Grid with half-width `half_width` rounded to a whole number of cells.
    pub fn new(n: usize, half_width: f64, dy: f64) -> Result<Grid> {
        if !(1..=2).contains(&n) {
            return Err(invalid("n", "grids exist in dimensions 1 and 2 only"));
        }
        if !(dy > 0.0 && dy.is_finite()) {
            return Err(invalid("dy", "need a positive spacing"));
        }
        if !(half_width >= 2.0 * dy) {
            return Err(invalid("half_width", "need at least two cells per side"));
        }
        let half = (half_width / dy).round() as usize;
        Ok(Grid { n, m: 2 * half + 1, dy })
    }

    pub fn half_width(&self) -> f64 {
        ((self.m - 1) / 2) as f64 * self.dy
    }

    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 - ((self.m - 1) / 2) as f64) * self.dy
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.m).map(|i| self.coord(i)).collect()
    }

    pub fn len(&self) -> usize {
        self.m.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    /// Coordinates of node `idx` (row-major, idx = i·m + j in 2-D).
    pub fn point(&self, idx: usize) -> [f64; 2] {
        if self.n == 1 {
            [self.coord(idx), 0.0]
        } else {
            [self.coord(idx / self.m), self.coord(idx % self.m)]
        }
    }

    /// Samples f at every node.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        (0..self.len())
            .map(|k| {
                let y = self.point(k);
                f(&y[..self.n])
            })
            .collect()
    }

    /// Node value of ρ(y) = (4π)^{−n/2} e^{−|y|²/4}.
    pub fn rho(&self) -> Vec<f64> {
        let c = (4.0 * std::f64::consts::PI).powf(-(self.n as f64) / 2.0);
        self.sample(|y| c * (-y.iter().map(|v| v * v).sum::<f64>() / 4.0).exp())
    }

    /// Quadrature weights ρ_i Δyⁿ.
    pub fn weights(&self) -> Vec<f64> {
        let vol = self.dy.powi(self.n as i32);
        self.rho().into_iter().map(|r| r * vol).collect()
    }

    /// The grid as a point rule for ρ-weighted integrals. The trapezoid rule on
    /// a Gaussian is spectrally accurate, so the nominal exact degree is
    /// bounded by the truncation rather than the spacing.
    pub fn quadrature(&self) -> Quadrature {
        let mut nodes = Vec::with_capacity(self.len() * self.n);
        for k in 0..self.len() {
            nodes.extend_from_slice(&self.point(k)[..self.n]);
        }
        Quadrature::from_points(self.n, nodes, self.weights(), 60)
    }

    pub(crate) fn check_len(&self, got: usize) -> Result<()> {
        if got != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Frame {
    Physical,
    Similarity,
}

/// Grid values at a time t (physical) or s (similarity).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub time: f64,
    pub frame: Frame,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>, time: f64, frame: Frame) -> Result<Field> {
        grid.check_len(values.len())?;
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite initial value at node {k}")));
        }
        Ok(Field {
            grid,
            values,
            time,
            frame,
        })
    }

    pub fn from_fn(grid: Grid, time: f64, frame: Frame, f: impl Fn(&[f64]) -> f64) -> Result<Field> {
        let values = grid.sample(f);
        Field::new(grid, values, time, frame)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Value at the origin node.
    pub fn center(&self) -> f64 {
        let c = (self.grid.m - 1) / 2;
        let idx = if self.grid.n == 1 { c } else { c * self.grid.m + c };
        self.values[idx]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_and_centered() {
        let g = Grid::new(1, 4.0, 0.1).unwrap();
        assert_eq!(g.m, 81);
        assert_eq!(g.coord(40), 0.0);
        assert!((g.coord(0) + 4.0).abs() < 1e-12);
        assert!((g.half_width() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn weights_integrate_rho_to_one() {
        for n in [1, 2] {
            let g = Grid::new(n, 14.0, 0.1).unwrap();
            let total: f64 = g.weights().iter().sum();
            assert!((total - 1.0).abs() < 1e-12, "n={n} total={total}");
        }
    }

    #[test]
    fn two_d_layout() {
        let g = Grid::new(2, 1.0, 0.5).unwrap();
        assert_eq!(g.len(), 25);
        assert_eq!(g.point(1), [-1.0, -0.5]);
        assert_eq!(g.point(5), [-0.5, -1.0]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Grid::new(3, 4.0, 0.1).is_err());
        assert!(Grid::new(1, 0.1, 0.1).is_err());
        let g = Grid::new(1, 1.0, 0.5).unwrap();
        assert!(Field::new(g.clone(), vec![0.0; 4], 0.0, Frame::Physical).is_err());
        assert!(Field::new(g, vec![0.0, 1.0, f64::NAN, 0.0, 0.0], 0.0, Frame::Physical).is_err());
    }
}
